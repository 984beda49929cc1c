//! Finite groups, their unitary representations, and irreducible decompositions.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{
    hermitian_eigen, isometry_residual, kron, solution_basis_with_scale, ComplexMatrix, NumError,
    OrthonormalBasis, C64, DEFAULT_TOL, ONE, ZERO,
};

/// Groups above this order are checked for associativity on a sample of triples.
const EXHAUSTIVE_ASSOCIATIVITY_LIMIT: usize = 256;
const EXTRACTION_ATTEMPTS: u64 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("group must have at least one element")]
    Empty,
    #[error("multiplication table row {row} has {len} entries, expected {order}")]
    RaggedTable { row: usize, len: usize, order: usize },
    #[error("cell ({row}, {col}) holds {value}, which is not an element index")]
    OutOfRange { row: usize, col: usize, value: usize },
    #[error("not a Latin square: element {value} repeats in row {row} (cell ({row}, {col}))")]
    RowRepeat { row: usize, col: usize, value: usize },
    #[error("not a Latin square: element {value} repeats in column {col} (cell ({row}, {col}))")]
    ColumnRepeat { row: usize, col: usize, value: usize },
    #[error("identity law fails at element {element}")]
    Identity { element: usize },
    #[error("associativity fails on ({a}, {b}, {c})")]
    Associativity { a: usize, b: usize, c: usize },
    #[error("subset is not closed: {a} * {b} = {product} lies outside")]
    NotClosed { a: usize, b: usize, product: usize },
    #[error("element {element} is not in the group of order {order}")]
    InvalidElement { element: usize, order: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("expected {expected} matrices (one per group element), got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("matrix for element {element} has shape {rows}x{cols}, expected {dim}x{dim}")]
    Shape { element: usize, rows: usize, cols: usize, dim: usize },
    #[error("matrix for element {element} is not unitary (residual {residual:e})")]
    NotUnitary { element: usize, residual: f64 },
    #[error("u({g}) u({h}) differs from u({g}{h}) by {residual:e}", g = .g, h = .h)]
    NotMultiplicative { g: usize, h: usize, residual: f64 },
    #[error("representations live on groups of different orders ({left} and {right})")]
    GroupMismatch { left: usize, right: usize },
    #[error("irrep {label} is reducible (self-intertwiner space has dimension {dim})")]
    NotIrreducible { label: usize, dim: usize },
    #[error("irreps {a} and {b} are isomorphic")]
    Isomorphic { a: usize, b: usize },
    #[error("sum of squared dimensions is {sum}, group order is {order}")]
    DimensionSum { sum: usize, order: usize },
    #[error("label {label} is not the one-dimensional trivial representation")]
    TrivialLabel { label: usize },
    #[error("dual map is inconsistent at label {label}")]
    DualMap { label: usize },
    #[error("irreducible decomposition failed after {attempts} seeds starting at {seed}")]
    ExtractionFailed { seed: u64, attempts: u64 },
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGroup")]
pub struct FiniteGroup {
    order: usize,
    mult_table: Vec<Vec<usize>>,
    identity: usize,
    #[serde(skip)]
    inverses: Vec<usize>,
}

#[derive(Deserialize)]
struct RawGroup {
    mult_table: Vec<Vec<usize>>,
    identity: usize,
}

impl TryFrom<RawGroup> for FiniteGroup {
    type Error = GroupError;
    fn try_from(raw: RawGroup) -> Result<Self, GroupError> {
        FiniteGroup::new(raw.mult_table, raw.identity)
    }
}

impl FiniteGroup {
    /// Validates the table (Latin square, identity, associativity) and builds the group.
    pub fn new(mult_table: Vec<Vec<usize>>, identity: usize) -> Result<Self, GroupError> {
        let order = mult_table.len();
        if order == 0 {
            return Err(GroupError::Empty);
        }
        for (row, entries) in mult_table.iter().enumerate() {
            if entries.len() != order {
                return Err(GroupError::RaggedTable {
                    row,
                    len: entries.len(),
                    order,
                });
            }
            for (col, &value) in entries.iter().enumerate() {
                if value >= order {
                    return Err(GroupError::OutOfRange { row, col, value });
                }
            }
        }
        for row in 0..order {
            let mut seen = vec![false; order];
            for col in 0..order {
                let value = mult_table[row][col];
                if std::mem::replace(&mut seen[value], true) {
                    return Err(GroupError::RowRepeat { row, col, value });
                }
            }
        }
        for col in 0..order {
            let mut seen = vec![false; order];
            for row in 0..order {
                let value = mult_table[row][col];
                if std::mem::replace(&mut seen[value], true) {
                    return Err(GroupError::ColumnRepeat { row, col, value });
                }
            }
        }
        if identity >= order {
            return Err(GroupError::InvalidElement {
                element: identity,
                order,
            });
        }
        for g in 0..order {
            if mult_table[identity][g] != g || mult_table[g][identity] != g {
                return Err(GroupError::Identity { element: g });
            }
        }
        let assoc = |a: usize, b: usize, c: usize| {
            mult_table[mult_table[a][b]][c] == mult_table[a][mult_table[b][c]]
        };
        if order <= EXHAUSTIVE_ASSOCIATIVITY_LIMIT {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if !assoc(a, b, c) {
                            return Err(GroupError::Associativity { a, b, c });
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(order as u64);
            for _ in 0..EXHAUSTIVE_ASSOCIATIVITY_LIMIT.pow(2) {
                let (a, b, c) = (
                    rng.gen_range(0..order),
                    rng.gen_range(0..order),
                    rng.gen_range(0..order),
                );
                if !assoc(a, b, c) {
                    return Err(GroupError::Associativity { a, b, c });
                }
            }
        }
        let inverses = (0..order)
            .map(|g| {
                (0..order)
                    .find(|&h| mult_table[g][h] == identity)
                    .expect("Latin square rows contain the identity")
            })
            .collect();
        Ok(Self {
            order,
            mult_table,
            identity,
            inverses,
        })
    }

    /// Cyclic group Z_n with element k standing for k mod n.
    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::new(table, 0).expect("cyclic table is a group")
    }

    /// Symmetric group on `n` points. Elements are permutations listed in
    /// lexicographic order (identity first) and `p * q` is `p ∘ q`.
    pub fn symmetric(n: usize) -> Self {
        let perms = permutations(n);
        let index = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed");
        let table = perms
            .iter()
            .map(|p| {
                perms
                    .iter()
                    .map(|q| index(&q.iter().map(|&i| p[i]).collect()))
                    .collect()
            })
            .collect();
        Self::new(table, 0).expect("symmetric table is a group")
    }

    /// Dihedral group of order `2n`; element `k + n f` is `r^k s^f`.
    pub fn dihedral(n: usize) -> Self {
        let table = (0..2 * n)
            .map(|x| {
                let (k1, f1) = (x % n, x / n);
                (0..2 * n)
                    .map(|y| {
                        let (k2, f2) = (y % n, y / n);
                        let k = if f1 == 0 { k1 + k2 } else { k1 + n - k2 };
                        k % n + n * (f1 ^ f2)
                    })
                    .collect()
            })
            .collect();
        Self::new(table, 0).expect("dihedral table is a group")
    }

    /// Direct product; element `(g, h)` has index `g * |H| + h`.
    pub fn product(&self, other: &FiniteGroup) -> Self {
        let n = other.order;
        let table = (0..self.order * n)
            .map(|x| {
                (0..self.order * n)
                    .map(|y| self.mul(x / n, y / n) * n + other.mul(x % n, y % n))
                    .collect()
            })
            .collect();
        Self::new(table, self.identity * n + other.identity).expect("product of groups")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mult_table(&self) -> &[Vec<usize>] {
        &self.mult_table
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult_table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }

    /// Conjugacy classes, each sorted, ordered by smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.order];
        let mut classes = Vec::new();
        for x in 0..self.order {
            if assigned[x] {
                continue;
            }
            let class: BTreeSet<usize> = (0..self.order)
                .map(|g| self.mul(self.mul(g, x), self.inverse(g)))
                .collect();
            for &y in &class {
                assigned[y] = true;
            }
            classes.push(class.into_iter().collect());
        }
        classes
    }

    /// Subgroup generated by `generators`.
    pub fn closure(&self, generators: &[usize]) -> Result<Subgroup, GroupError> {
        for &g in generators {
            self.check_element(g)?;
        }
        let mut members: BTreeSet<usize> = BTreeSet::from([self.identity]);
        let mut frontier: Vec<usize> = vec![self.identity];
        while let Some(x) = frontier.pop() {
            for &g in generators {
                let y = self.mul(x, g);
                if members.insert(y) {
                    frontier.push(y);
                }
            }
            if members.len() == self.order {
                break;
            }
        }
        self.subgroup(&members.into_iter().collect::<Vec<_>>())
    }

    /// Checks that `elements` is closed under multiplication and builds the subgroup.
    pub fn subgroup(&self, elements: &[usize]) -> Result<Subgroup, GroupError> {
        for &g in elements {
            self.check_element(g)?;
        }
        let set: BTreeSet<usize> = elements.iter().copied().collect();
        if set.is_empty() {
            return Err(GroupError::Empty);
        }
        for &a in &set {
            for &b in &set {
                let product = self.mul(a, b);
                if !set.contains(&product) {
                    return Err(GroupError::NotClosed { a, b, product });
                }
            }
        }
        let elements: Vec<usize> = set.into_iter().collect();
        let pos = |g: usize| elements.binary_search(&g).expect("closed");
        let table = elements
            .iter()
            .map(|&a| elements.iter().map(|&b| pos(self.mul(a, b))).collect())
            .collect();
        let group = FiniteGroup::new(table, pos(self.identity))?;
        Ok(Subgroup {
            parent_order: self.order,
            elements,
            group,
        })
    }

    /// All subgroups that are generated by at most two elements, sorted by
    /// order and then by element list.
    pub fn two_generated_subgroups(&self) -> Vec<Subgroup> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for a in 0..self.order {
            for b in a..self.order {
                let h = self.closure(&[a, b]).expect("valid elements");
                if seen.insert(h.elements.clone()) {
                    out.push(h);
                }
            }
        }
        out.sort_by(|x, y| {
            x.elements
                .len()
                .cmp(&y.elements.len())
                .then_with(|| x.elements.cmp(&y.elements))
        });
        out
    }

    /// One representative per conjugacy class of two-generated subgroups.
    pub fn subgroup_class_representatives(&self) -> Vec<Subgroup> {
        let all = self.two_generated_subgroups();
        let mut classes: Vec<BTreeSet<Vec<usize>>> = Vec::new();
        let mut reps = Vec::new();
        for h in all {
            if classes.iter().any(|c| c.contains(&h.elements)) {
                continue;
            }
            let class = (0..self.order)
                .map(|g| {
                    let mut conj: Vec<usize> = h
                        .elements
                        .iter()
                        .map(|&x| self.mul(self.mul(g, x), self.inverse(g)))
                        .collect();
                    conj.sort_unstable();
                    conj
                })
                .collect();
            classes.push(class);
            reps.push(h);
        }
        reps
    }

    fn check_element(&self, g: usize) -> Result<(), GroupError> {
        if g >= self.order {
            Err(GroupError::InvalidElement {
                element: g,
                order: self.order,
            })
        } else {
            Ok(())
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

/// A subgroup together with its own multiplication table, indexed by the
/// position of each element in the sorted `elements` list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub parent_order: usize,
    pub elements: Vec<usize>,
    pub group: FiniteGroup,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn index(&self) -> usize {
        self.parent_order / self.elements.len()
    }

    /// Position of a parent-group element inside the subgroup, if present.
    pub fn position(&self, g: usize) -> Option<usize> {
        self.elements.binary_search(&g).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryRep {
    pub group_order: usize,
    pub dim: usize,
    pub matrices: Vec<ComplexMatrix>,
}

impl UnitaryRep {
    /// Validates unitarity and multiplicativity against the group table.
    pub fn new(group: &FiniteGroup, matrices: Vec<ComplexMatrix>, tol: f64) -> Result<Self, RepError> {
        if matrices.len() != group.order() {
            return Err(RepError::WrongCount {
                expected: group.order(),
                got: matrices.len(),
            });
        }
        let dim = matrices[0].rows();
        let rep = Self {
            group_order: group.order(),
            dim,
            matrices,
        };
        rep.validate(group, tol)?;
        Ok(rep)
    }

    pub fn validate(&self, group: &FiniteGroup, tol: f64) -> Result<(), RepError> {
        if self.matrices.len() != group.order() {
            return Err(RepError::WrongCount {
                expected: group.order(),
                got: self.matrices.len(),
            });
        }
        for (element, m) in self.matrices.iter().enumerate() {
            if m.shape() != (self.dim, self.dim) {
                return Err(RepError::Shape {
                    element,
                    rows: m.rows(),
                    cols: m.cols(),
                    dim: self.dim,
                });
            }
            m.check_finite()?;
            let residual = isometry_residual(m);
            if residual > tol {
                return Err(RepError::NotUnitary { element, residual });
            }
        }
        for g in group.elements() {
            for h in group.elements() {
                let residual = self.matrices[g]
                    .matmul(&self.matrices[h])
                    .max_abs_diff(&self.matrices[group.mul(g, h)]);
                if residual > tol {
                    return Err(RepError::NotMultiplicative { g, h, residual });
                }
            }
        }
        Ok(())
    }

    pub fn trivial(group: &FiniteGroup) -> Self {
        Self {
            group_order: group.order(),
            dim: 1,
            matrices: vec![ComplexMatrix::identity(1); group.order()],
        }
    }

    /// Left regular representation: `u(g) e_h = e_{gh}`.
    pub fn regular(group: &FiniteGroup) -> Self {
        let n = group.order();
        let matrices = group
            .elements()
            .map(|g| {
                let mut m = ComplexMatrix::zeros(n, n);
                for h in 0..n {
                    m[(group.mul(g, h), h)] = ONE;
                }
                m
            })
            .collect();
        Self {
            group_order: n,
            dim: n,
            matrices,
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        assert_eq!(self.group_order, other.group_order);
        Self {
            group_order: self.group_order,
            dim: self.dim * other.dim,
            matrices: self
                .matrices
                .iter()
                .zip(&other.matrices)
                .map(|(a, b)| kron(a, b))
                .collect(),
        }
    }

    /// Complex conjugate representation `g ↦ conj(u(g))`.
    pub fn conjugate(&self) -> Self {
        Self {
            group_order: self.group_order,
            dim: self.dim,
            matrices: self.matrices.iter().map(ComplexMatrix::conj).collect(),
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        assert_eq!(self.group_order, other.group_order);
        let n = self.dim + other.dim;
        let matrices = self
            .matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| {
                ComplexMatrix::from_fn(n, n, |r, c| match (r < self.dim, c < self.dim) {
                    (true, true) => a[(r, c)],
                    (false, false) => b[(r - self.dim, c - self.dim)],
                    _ => ZERO,
                })
            })
            .collect();
        Self {
            group_order: self.group_order,
            dim: n,
            matrices,
        }
    }

    /// `dim` copies of the representation, i.e. `1_dim ⊗ u`.
    pub fn amplify(&self, copies: usize) -> Self {
        Self {
            group_order: self.group_order,
            dim: self.dim * copies,
            matrices: self
                .matrices
                .iter()
                .map(|m| kron(&ComplexMatrix::identity(copies), m))
                .collect(),
        }
    }

    pub fn character(&self) -> Vec<C64> {
        self.matrices.iter().map(ComplexMatrix::trace).collect()
    }
}

/// Orthonormal basis (Hilbert–Schmidt) of the intertwiners `T` with
/// `T u(g) = v(g) T`, each returned as a `dim v × dim u` column-vectorised matrix.
pub fn intertwiner_basis(u: &UnitaryRep, v: &UnitaryRep, tol: f64) -> Result<OrthonormalBasis, RepError> {
    if u.group_order != v.group_order {
        return Err(RepError::GroupMismatch {
            left: u.group_order,
            right: v.group_order,
        });
    }
    let n = v.dim * u.dim;
    let mut projector = ComplexMatrix::zeros(n, n);
    let weight = C64::new(1.0 / u.group_order as f64, 0.0);
    for (ug, vg) in u.matrices.iter().zip(&v.matrices) {
        projector.add_assign_scaled(&kron(vg, &ug.conj()), weight);
    }
    let constraint = projector.sub(&ComplexMatrix::identity(n));
    Ok(solution_basis_with_scale(n, &[constraint], tol, 1.0)?)
}

/// Intertwiners as `dim v × dim u` matrices.
pub fn intertwiner_matrices(u: &UnitaryRep, v: &UnitaryRep, tol: f64) -> Result<Vec<ComplexMatrix>, RepError> {
    Ok(intertwiner_basis(u, v, tol)?.as_matrices(v.dim, u.dim))
}

/// Restriction of `u` to the subgroup `h`, indexed by subgroup positions.
pub fn restrict(u: &UnitaryRep, h: &Subgroup) -> UnitaryRep {
    assert_eq!(u.group_order, h.parent_order);
    UnitaryRep {
        group_order: h.order(),
        dim: u.dim,
        matrices: h.elements.iter().map(|&g| u.matrices[g].clone()).collect(),
    }
}

/// `(1/|G|) Σ conj(χ(g)) ψ(g)`.
pub fn character_inner(chi: &[C64], psi: &[C64]) -> C64 {
    let n = chi.len() as f64;
    chi.iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>() / n
}

/// Complete set of irreducible unitary representations, labelled `0..n` with
/// the trivial representation at label 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrepTable {
    pub irreps: Vec<UnitaryRep>,
    pub trivial_label: usize,
    pub dual_map: Vec<usize>,
}

impl IrrepTable {
    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.irreps.iter().map(|u| u.dim).collect()
    }

    /// Character values on conjugacy classes (ordered by smallest element).
    pub fn character_table(&self, group: &FiniteGroup) -> Vec<Vec<C64>> {
        let classes = group.conjugacy_classes();
        self.irreps
            .iter()
            .map(|u| classes.iter().map(|c| u.matrices[c[0]].trace()).collect())
            .collect()
    }

    /// Checks every table invariant. Used for tables supplied in input files.
    pub fn verify(&self, group: &FiniteGroup, tol: f64) -> Result<(), RepError> {
        for u in &self.irreps {
            u.validate(group, tol)?;
        }
        for (a, u) in self.irreps.iter().enumerate() {
            let dim = intertwiner_basis(u, u, tol)?.len();
            if dim != 1 {
                return Err(RepError::NotIrreducible { label: a, dim });
            }
            for (b, v) in self.irreps.iter().enumerate().skip(a + 1) {
                if !intertwiner_basis(u, v, tol)?.is_empty() {
                    return Err(RepError::Isomorphic { a, b });
                }
            }
        }
        let sum: usize = self.irreps.iter().map(|u| u.dim * u.dim).sum();
        if sum != group.order() {
            return Err(RepError::DimensionSum {
                sum,
                order: group.order(),
            });
        }
        let o = self.trivial_label;
        let is_trivial = self
            .irreps
            .get(o)
            .is_some_and(|u| u.dim == 1 && u.matrices.iter().all(|m| (m[(0, 0)] - ONE).norm() <= tol));
        if !is_trivial {
            return Err(RepError::TrivialLabel { label: o });
        }
        if self.dual_map.len() != self.irreps.len() || self.dual_map[o] != o {
            return Err(RepError::DualMap { label: o });
        }
        let chars: Vec<Vec<C64>> = self.irreps.iter().map(UnitaryRep::character).collect();
        for (a, &b) in self.dual_map.iter().enumerate() {
            let ok = b < self.irreps.len()
                && self.dual_map[b] == a
                && chars[a]
                    .iter()
                    .zip(&chars[b])
                    .all(|(x, y)| (x.conj() - y).norm() <= 1e3 * tol);
            if !ok {
                return Err(RepError::DualMap { label: a });
            }
        }
        Ok(())
    }
}

/// Decomposes the regular representation into irreducibles.
///
/// A seeded random Hermitian matrix is averaged over the group to obtain an
/// element of the commutant; its eigenspaces are irreducible subspaces, which
/// are then grouped into isomorphism classes. If the seed does not separate
/// the blocks cleanly, the next seed is tried.
pub fn extract_irreps(group: &FiniteGroup, seed: u64) -> Result<IrrepTable, RepError> {
    for attempt in 0..EXTRACTION_ATTEMPTS {
        if let Some(table) = try_extract(group, seed.wrapping_add(attempt))? {
            return Ok(table);
        }
    }
    Err(RepError::ExtractionFailed {
        seed,
        attempts: EXTRACTION_ATTEMPTS,
    })
}

fn try_extract(group: &FiniteGroup, seed: u64) -> Result<Option<IrrepTable>, RepError> {
    let n = group.order();
    let tol = DEFAULT_TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let z = if r == c {
                C64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            };
            x[(r, c)] = z;
            x[(c, r)] = z.conj();
        }
    }
    // Average over the left regular action: C[a,b] = mean_g X[g⁻¹a, g⁻¹b].
    let mut commutant = ComplexMatrix::zeros(n, n);
    for g in group.elements() {
        let gi = group.inverse(g);
        for a in 0..n {
            for b in 0..n {
                commutant[(a, b)] += x[(group.mul(gi, a), group.mul(gi, b))];
            }
        }
    }
    let commutant = commutant.scale(C64::new(1.0 / n as f64, 0.0));
    let (values, vectors) = hermitian_eigen(&commutant, tol)?;
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..n {
        let gap = (values[i] - values[i - 1]) / scale;
        if gap <= 1e-7 {
            clusters.last_mut().expect("nonempty").push(i);
        } else if gap < 1e-4 {
            return Ok(None);
        } else {
            clusters.push(vec![i]);
        }
    }

    let regular = UnitaryRep::regular(group);
    let mut classes: Vec<(UnitaryRep, Vec<C64>, usize)> = Vec::new();
    for cluster in &clusters {
        let basis = ComplexMatrix::from_fn(n, cluster.len(), |r, c| vectors[(r, cluster[c])]);
        let adj = basis.adjoint();
        let block = UnitaryRep {
            group_order: n,
            dim: cluster.len(),
            matrices: regular.matrices.iter().map(|m| adj.matmul(&m.matmul(&basis))).collect(),
        };
        if intertwiner_basis(&block, &block, tol)?.len() != 1 {
            return Ok(None);
        }
        let chi = block.character();
        let mut matched = false;
        for (rep, rep_chi, count) in classes.iter_mut() {
            let close = rep_chi.iter().zip(&chi).all(|(a, b)| (a - b).norm() < 1e-6);
            if close && rep.dim == block.dim && !intertwiner_basis(&block, rep, tol)?.is_empty() {
                *count += 1;
                matched = true;
                break;
            }
        }
        if !matched {
            classes.push((block, chi, 1));
        }
    }
    if classes.iter().any(|(rep, _, count)| rep.dim != *count)
        || classes.iter().map(|(rep, _, _)| rep.dim * rep.dim).sum::<usize>() != n
    {
        return Ok(None);
    }

    let conj_classes = group.conjugacy_classes();
    let key = |chi: &[C64]| -> Vec<(i64, i64)> {
        conj_classes
            .iter()
            .map(|c| {
                let z = chi[c[0]];
                ((z.re / 1e-8).round() as i64, (z.im / 1e-8).round() as i64)
            })
            .collect()
    };
    let mut irreps: Vec<(UnitaryRep, Vec<C64>)> =
        classes.into_iter().map(|(rep, chi, _)| (rep, chi)).collect();
    irreps.sort_by(|(a, ca), (b, cb)| match a.dim.cmp(&b.dim) {
        Ordering::Equal => key(cb).cmp(&key(ca)),
        other => other,
    });

    let (trivial, _) = &mut irreps[0];
    if trivial.dim != 1 || trivial.matrices.iter().any(|m| (m[(0, 0)] - ONE).norm() > 1e-6) {
        return Ok(None);
    }
    *trivial = UnitaryRep::trivial(group);

    let dual_map = irreps
        .iter()
        .enumerate()
        .map(|(a, (_, chi))| {
            irreps
                .iter()
                .position(|(_, other)| chi.iter().zip(other).all(|(x, y)| (x.conj() - y).norm() < 1e-6))
                .ok_or(RepError::DualMap { label: a })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Some(IrrepTable {
        irreps: irreps.into_iter().map(|(rep, _)| rep).collect(),
        trivial_label: 0,
        dual_map,
    }))
}
