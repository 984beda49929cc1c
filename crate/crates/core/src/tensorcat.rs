//! Concrete presentations of semisimple rigid tensor C*-categories with
//! irreducible unit.
//!
//! Every irreducible label `a` comes with a Hilbert space `H_a`, and the
//! tensor structure is encoded by fusion isometries `ι^c_{ab,k}: H_c → H_a ⊗ H_b`.
//! Two backends are provided: representations of a finite group (strict
//! associator) and pointed categories over a finite group twisted by a
//! normalized 3-cocycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouprep::{intertwiner_matrices, FiniteGroup, IrrepTable, RepError, UnitaryRep};
use crate::numkit::{
    isometry_residual, kron, polar_unitary, ComplexMatrix, ContentHasher, NumError, C64, ONE,
};
use crate::verify::Certificate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CategoryError {
    #[error("cocycle table has {got} entries, expected {expected}")]
    CocycleShape { expected: usize, got: usize },
    #[error("cocycle value at ({a}, {b}, {c}) is not a unit complex number")]
    CocycleNotUnit { a: usize, b: usize, c: usize },
    #[error("cocycle is not normalized at ({a}, {b}, {c})")]
    CocycleNormalization { a: usize, b: usize, c: usize },
    #[error("3-cocycle identity fails on ({g}, {h}, {k}, {l}) with residual {residual:e}")]
    CocycleIdentity { g: usize, h: usize, k: usize, l: usize, residual: f64 },
    #[error("label {label} is out of range ({count} labels)")]
    Label { label: usize, count: usize },
    #[error("no unitary conjugate intertwiner for label {label}")]
    Conjugate { label: usize },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A normalized 3-cocycle on a finite group, stored as a flat table
/// `ω(a, b, c) = values[(a n + b) n + c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointedFusionData {
    pub group: FiniteGroup,
    pub cocycle: Vec<C64>,
}

impl PointedFusionData {
    pub fn new(group: FiniteGroup, cocycle: Vec<C64>, tol: f64) -> Result<Self, CategoryError> {
        let data = Self { group, cocycle };
        data.validate(tol)?;
        Ok(data)
    }

    /// Trivial cocycle.
    pub fn untwisted(group: FiniteGroup) -> Self {
        let n = group.order();
        Self {
            group,
            cocycle: vec![ONE; n * n * n],
        }
    }

    /// The standard representative `exp(2πi p a (b + c - [b + c]) / n²)` on
    /// the cyclic group `Z_n`, where `[x]` is `x mod n`.
    pub fn cyclic(n: usize, p: usize) -> Self {
        let group = FiniteGroup::cyclic(n);
        let mut cocycle = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let carry = b + c - (b + c) % n;
                    let phase = 2.0 * std::f64::consts::PI * (p * a * carry) as f64 / (n * n) as f64;
                    cocycle.push(C64::from_polar(1.0, phase));
                }
            }
        }
        Self { group, cocycle }
    }

    pub fn omega(&self, a: usize, b: usize, c: usize) -> C64 {
        let n = self.group.order();
        self.cocycle[(a * n + b) * n + c]
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.cocycle.iter().all(|z| (z - ONE).norm() <= tol)
    }

    /// Largest violation of `ω(h,k,l) ω(g,hk,l) ω(g,h,k) = ω(gh,k,l) ω(g,h,kl)`.
    pub fn cocycle_residual(&self) -> (f64, [usize; 4]) {
        let g = &self.group;
        let mut worst = (0.0, [0; 4]);
        for a in g.elements() {
            for b in g.elements() {
                for c in g.elements() {
                    for d in g.elements() {
                        let lhs = self.omega(b, c, d) * self.omega(a, g.mul(b, c), d) * self.omega(a, b, c);
                        let rhs = self.omega(g.mul(a, b), c, d) * self.omega(a, b, g.mul(c, d));
                        let r = (lhs - rhs).norm();
                        if r > worst.0 {
                            worst = (r, [a, b, c, d]);
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<(), CategoryError> {
        let n = self.group.order();
        if self.cocycle.len() != n * n * n {
            return Err(CategoryError::CocycleShape {
                expected: n * n * n,
                got: self.cocycle.len(),
            });
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let w = self.omega(a, b, c);
                    if !w.re.is_finite() || !w.im.is_finite() || (w.norm() - 1.0).abs() > tol {
                        return Err(CategoryError::CocycleNotUnit { a, b, c });
                    }
                }
            }
        }
        let e = self.group.identity();
        for x in 0..n {
            for y in 0..n {
                for (a, b, c) in [(e, x, y), (x, e, y), (x, y, e)] {
                    if (self.omega(a, b, c) - ONE).norm() > tol {
                        return Err(CategoryError::CocycleNormalization { a, b, c });
                    }
                }
            }
        }
        let (residual, [g, h, k, l]) = self.cocycle_residual();
        if residual > tol {
            return Err(CategoryError::CocycleIdentity { g, h, k, l, residual });
        }
        Ok(())
    }
}

/// Where a presentation came from; the concrete data is needed to build
/// module categories from subgroups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CategorySource {
    Group { group: FiniteGroup, table: IrrepTable },
    Pointed { data: PointedFusionData },
}

/// Solution `(R_a, R̄_a)` of the conjugate equations, as column vectors in
/// `H_ā ⊗ H_a` and `H_a ⊗ H_ā`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateSolution {
    pub r: ComplexMatrix,
    pub r_bar: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryPresentation {
    pub obj_dim: Vec<usize>,
    pub trivial: usize,
    pub dual_map: Vec<usize>,
    /// `fusion[(a n + b) n + c]` lists the isometries `ι^c_{ab,k}`.
    pub fusion: Vec<Vec<ComplexMatrix>>,
    pub conj_solutions: Vec<ConjugateSolution>,
    pub qdim: Vec<f64>,
    pub source: CategorySource,
}

/// A fusion channel `(c, k)` of a product `a ⊗ b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Channel {
    pub c: usize,
    pub k: usize,
}

impl CategoryPresentation {
    /// Builds `Rep(G)` from a table of irreducible representations.
    pub fn from_group(group: &FiniteGroup, table: &IrrepTable, tol: f64) -> Result<Self, CategoryError> {
        let n = table.len();
        let o = table.trivial_label;
        let dims = table.dims();
        let mut fusion = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                let ab = table.irreps[a].tensor(&table.irreps[b]);
                for c in 0..n {
                    let isometries = if a == o || b == o {
                        let other = if a == o { b } else { a };
                        if c == other {
                            vec![ComplexMatrix::identity(dims[c])]
                        } else {
                            vec![]
                        }
                    } else {
                        let scale = C64::new((dims[c] as f64).sqrt(), 0.0);
                        intertwiner_matrices(&table.irreps[c], &ab, tol)?
                            .into_iter()
                            .map(|t| t.scale(scale))
                            .collect()
                    };
                    fusion.push(isometries);
                }
            }
        }
        let mut conj_solutions = Vec::with_capacity(n);
        for a in 0..n {
            let abar = table.dual_map[a];
            let (da, dabar) = (dims[a], dims[abar]);
            let j = if a == o {
                ComplexMatrix::identity(1)
            } else {
                let basis = intertwiner_matrices(&table.irreps[a].conjugate(), &table.irreps[abar], tol)?;
                let t = basis.into_iter().next().ok_or(CategoryError::Conjugate { label: a })?;
                polar_unitary(&t.scale(C64::new((da as f64).sqrt(), 0.0)))?
            };
            let r = ComplexMatrix::from_fn(dabar * da, 1, |row, _| j[(row / da, row % da)]);
            let r_bar = ComplexMatrix::from_fn(da * dabar, 1, |row, _| j[(row % dabar, row / dabar)]);
            conj_solutions.push(ConjugateSolution { r, r_bar });
        }
        Ok(Self {
            qdim: dims.iter().map(|&d| d as f64).collect(),
            obj_dim: dims,
            trivial: o,
            dual_map: table.dual_map.clone(),
            fusion,
            conj_solutions,
            source: CategorySource::Group {
                group: group.clone(),
                table: table.clone(),
            },
        })
    }

    /// Builds the pointed category `Vec_G^ω`: labels are group elements,
    /// `g ⊗ h = gh`, all objects one-dimensional.
    pub fn from_pointed(data: &PointedFusionData, tol: f64) -> Result<Self, CategoryError> {
        data.validate(tol)?;
        let g = &data.group;
        let n = g.order();
        let mut fusion = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    fusion.push(if g.mul(a, b) == c {
                        vec![ComplexMatrix::identity(1)]
                    } else {
                        vec![]
                    });
                }
            }
        }
        let conj_solutions = (0..n)
            .map(|a| ConjugateSolution {
                r: ComplexMatrix::identity(1),
                r_bar: ComplexMatrix::scalar(data.omega(a, g.inverse(a), a).conj()),
            })
            .collect();
        Ok(Self {
            obj_dim: vec![1; n],
            trivial: g.identity(),
            dual_map: (0..n).map(|a| g.inverse(a)).collect(),
            fusion,
            conj_solutions,
            qdim: vec![1.0; n],
            source: CategorySource::Pointed { data: data.clone() },
        })
    }

    pub fn len(&self) -> usize {
        self.obj_dim.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obj_dim.is_empty()
    }

    pub fn labels(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub fn dim(&self, a: usize) -> usize {
        self.obj_dim[a]
    }

    pub fn dual(&self, a: usize) -> usize {
        self.dual_map[a]
    }

    pub fn isometries(&self, a: usize, b: usize, c: usize) -> &[ComplexMatrix] {
        let n = self.len();
        &self.fusion[(a * n + b) * n + c]
    }

    pub fn isometries_mut(&mut self, a: usize, b: usize, c: usize) -> &mut Vec<ComplexMatrix> {
        let n = self.len();
        &mut self.fusion[(a * n + b) * n + c]
    }

    /// Fusion multiplicity `N_{ab}^c`.
    pub fn multiplicity(&self, a: usize, b: usize, c: usize) -> usize {
        self.isometries(a, b, c).len()
    }

    /// Channels of `a ⊗ b`, ordered by `c` and then `k`.
    pub fn channels(&self, a: usize, b: usize) -> Vec<Channel> {
        let mut out = Vec::new();
        for c in self.labels() {
            for k in 0..self.multiplicity(a, b, c) {
                out.push(Channel { c, k });
            }
        }
        out
    }

    /// Scalar of the associator `(a ⊗ b) ⊗ c → a ⊗ (b ⊗ c)` on irreducibles.
    pub fn associator(&self, a: usize, b: usize, c: usize) -> C64 {
        match &self.source {
            CategorySource::Group { .. } => ONE,
            CategorySource::Pointed { data } => data.omega(a, b, c),
        }
    }

    /// True when every associator scalar equals one.
    pub fn has_trivial_associator(&self, tol: f64) -> bool {
        match &self.source {
            CategorySource::Group { .. } => true,
            CategorySource::Pointed { data } => data.is_trivial(tol),
        }
    }

    /// The scalar `σ_a` with `(ι^{o*}_{aā} ⊗ 1) α⁻¹ (1 ⊗ ι^o_{āa}) = σ_a 1_a`.
    /// It depends only on the fusion isometries, not on the conjugate solutions.
    pub fn sigma(&self, a: usize) -> C64 {
        let o = self.trivial;
        let abar = self.dual(a);
        let da = self.dim(a);
        let left = &self.isometries(a, abar, o)[0];
        let right = &self.isometries(abar, a, o)[0];
        let m = kron(&left.adjoint(), &ComplexMatrix::identity(da))
            .matmul(&kron(&ComplexMatrix::identity(da), right));
        m.trace() / da as f64 * self.associator(a, abar, a).conj()
    }

    /// `κ_a = ι^{o*}_{āa} R_a`.
    pub fn kappa(&self, a: usize) -> C64 {
        let iota = &self.isometries(self.dual(a), a, self.trivial)[0];
        iota.adjoint().matmul(&self.conj_solutions[a].r)[(0, 0)]
    }

    /// `κ'_a = ι^{o*}_{aā} R̄_a`.
    pub fn kappa_bar(&self, a: usize) -> C64 {
        let iota = &self.isometries(a, self.dual(a), self.trivial)[0];
        iota.adjoint().matmul(&self.conj_solutions[a].r_bar)[(0, 0)]
    }

    /// Residuals of the two conjugate equations for label `a`.
    pub fn snake_residuals(&self, a: usize) -> (f64, f64) {
        let abar = self.dual(a);
        let (da, dabar) = (self.dim(a), self.dim(abar));
        let ConjugateSolution { r, r_bar } = &self.conj_solutions[a];
        let first = kron(&r_bar.adjoint(), &ComplexMatrix::identity(da))
            .matmul(&kron(&ComplexMatrix::identity(da), r))
            .scale(self.associator(a, abar, a).conj());
        let second = kron(&r.adjoint(), &ComplexMatrix::identity(dabar))
            .matmul(&kron(&ComplexMatrix::identity(dabar), r_bar))
            .scale(self.associator(abar, a, abar).conj());
        (
            first.max_abs_diff(&ComplexMatrix::identity(da)),
            second.max_abs_diff(&ComplexMatrix::identity(dabar)),
        )
    }

    /// Matrix of the associativity move between the two bases of
    /// `Mor(e, a ⊗ b ⊗ d)`. Rows are channels `(c, k, k2)` through
    /// `(a ⊗ b) ⊗ d`, columns `(c', k', k3)` through `a ⊗ (b ⊗ d)`.
    pub fn f_move(&self, a: usize, b: usize, d: usize, e: usize) -> ComplexMatrix {
        let left = self.left_trees(a, b, d, e);
        let right = self.right_trees(a, b, d, e);
        let de = self.dim(e) as f64;
        let w = self.associator(a, b, d).conj();
        ComplexMatrix::from_fn(left.len(), right.len(), |i, j| {
            left[i].hs_inner(&right[j]) / de * w
        })
    }

    /// Trees `(ι^c_{ab,k} ⊗ 1_d) ι^e_{cd,k2}` in channel order.
    pub fn left_trees(&self, a: usize, b: usize, d: usize, e: usize) -> Vec<ComplexMatrix> {
        let mut out = Vec::new();
        let id = ComplexMatrix::identity(self.dim(d));
        for ch in self.channels(a, b) {
            let top = kron(&self.isometries(a, b, ch.c)[ch.k], &id);
            for iota in self.isometries(ch.c, d, e) {
                out.push(top.matmul(iota));
            }
        }
        out
    }

    /// Trees `(1_a ⊗ ι^{c'}_{bd,k'}) ι^e_{ac',k3}` in channel order.
    pub fn right_trees(&self, a: usize, b: usize, d: usize, e: usize) -> Vec<ComplexMatrix> {
        let mut out = Vec::new();
        let id = ComplexMatrix::identity(self.dim(a));
        for ch in self.channels(b, d) {
            let top = kron(&id, &self.isometries(b, d, ch.c)[ch.k]);
            for iota in self.isometries(a, ch.c, e) {
                out.push(top.matmul(iota));
            }
        }
        out
    }

    /// Copy with conjugate solutions replaced by `(λ R_a, λ̄⁻¹ R̄_a)`.
    pub fn with_rescaled_duality(&self, lambda: C64) -> Self {
        let mut out = self.clone();
        let inv = ONE / lambda.conj();
        for s in &mut out.conj_solutions {
            s.r = s.r.scale(lambda);
            s.r_bar = s.r_bar.scale(inv);
        }
        out
    }

    /// Content hash of the presentation data that module categories depend on.
    pub fn fingerprint(&self) -> String {
        let mut h = ContentHasher::new();
        h.tag("category").count(self.len()).count(self.trivial);
        for (&d, &db) in self.obj_dim.iter().zip(&self.dual_map) {
            h.count(d).count(db);
        }
        for family in &self.fusion {
            h.count(family.len());
            for m in family {
                h.matrix(m);
            }
        }
        for s in &self.conj_solutions {
            h.matrix(&s.r).matrix(&s.r_bar);
        }
        for &q in &self.qdim {
            h.real(q);
        }
        for a in self.labels() {
            for b in self.labels() {
                for c in self.labels() {
                    h.complex(self.associator(a, b, c));
                }
            }
        }
        h.finish()
    }

    /// The Frobenius bijection `Mor(a ⊗ b, c) ≅ Mor(b, ā ⊗ c)`.
    pub fn frobenius(&self, a: usize, b: usize, c: usize) -> CategoryFrobenius<'_> {
        CategoryFrobenius { cat: self, a, b, c }
    }

    fn irrep(&self, a: usize) -> Option<&UnitaryRep> {
        match &self.source {
            CategorySource::Group { table, .. } => table.irreps.get(a),
            CategorySource::Pointed { .. } => None,
        }
    }
}

pub fn frobenius_on_category(cat: &CategoryPresentation, a: usize, b: usize, c: usize) -> CategoryFrobenius<'_> {
    cat.frobenius(a, b, c)
}

/// `f ↦ (1_ā ⊗ f)(R_a ⊗ 1_b)` and its inverse `g ↦ (R̄_a* ⊗ 1_c)(1_a ⊗ g)`,
/// with the associator inserted where the bracketing changes.
pub struct CategoryFrobenius<'a> {
    cat: &'a CategoryPresentation,
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl CategoryFrobenius<'_> {
    /// Maps `f: H_a ⊗ H_b → H_c` (a `d_c × d_a d_b` matrix) into `Mor(b, ā ⊗ c)`.
    pub fn forward(&self, f: &ComplexMatrix) -> ComplexMatrix {
        let cat = self.cat;
        let abar = cat.dual(self.a);
        kron(&ComplexMatrix::identity(cat.dim(abar)), f)
            .matmul(&kron(&cat.conj_solutions[self.a].r, &ComplexMatrix::identity(cat.dim(self.b))))
            .scale(cat.associator(abar, self.a, self.b))
    }

    /// Maps `g: H_b → H_ā ⊗ H_c` back into `Mor(a ⊗ b, c)`.
    pub fn inverse(&self, g: &ComplexMatrix) -> ComplexMatrix {
        let cat = self.cat;
        let abar = cat.dual(self.a);
        kron(&cat.conj_solutions[self.a].r_bar.adjoint(), &ComplexMatrix::identity(cat.dim(self.c)))
            .matmul(&kron(&ComplexMatrix::identity(cat.dim(self.a)), g))
            .scale(cat.associator(self.a, abar, self.c).conj())
    }

    pub fn round_trip_residual(&self, f: &ComplexMatrix) -> f64 {
        self.inverse(&self.forward(f)).max_abs_diff(f)
    }
}

/// Checks every invariant of a presentation and records max-norm residuals.
pub fn verify_presentation(cat: &CategoryPresentation, tol: f64) -> Certificate {
    let mut cert = Certificate::new("category", cat.fingerprint(), tol);
    let n = cat.len();
    let o = cat.trivial;

    let mut iso: f64 = 0.0;
    let mut orth: f64 = 0.0;
    let mut complete: f64 = 0.0;
    let mut intertwining: f64 = 0.0;
    let mut count_ok = true;
    let mut count_detail = String::new();
    for a in 0..n {
        for b in 0..n {
            let channels = cat.channels(a, b);
            let dab = cat.dim(a) * cat.dim(b);
            let mut sum = ComplexMatrix::zeros(dab, dab);
            for (i, x) in channels.iter().enumerate() {
                let vx = &cat.isometries(a, b, x.c)[x.k];
                if vx.shape() != (dab, cat.dim(x.c)) {
                    iso = f64::INFINITY;
                    continue;
                }
                iso = iso.max(isometry_residual(vx));
                sum = sum.add(&vx.matmul(&vx.adjoint()));
                for y in &channels[i + 1..] {
                    let vy = &cat.isometries(a, b, y.c)[y.k];
                    if vy.rows() == dab {
                        orth = orth.max(vx.adjoint().matmul(vy).max_abs());
                    }
                }
                if let (Some(ua), Some(ub), Some(uc)) = (cat.irrep(a), cat.irrep(b), cat.irrep(x.c)) {
                    for g in 0..ua.group_order {
                        let lhs = vx.matmul(&uc.matrices[g]);
                        let rhs = kron(&ua.matrices[g], &ub.matrices[g]).matmul(vx);
                        intertwining = intertwining.max(lhs.max_abs_diff(&rhs));
                    }
                }
            }
            complete = complete.max(sum.max_abs_diff(&ComplexMatrix::identity(dab)));
            let total: usize = channels.iter().map(|x| cat.dim(x.c)).sum();
            if total != dab && count_ok {
                count_ok = false;
                count_detail = format!("labels ({a}, {b}): Σ N d_c = {total}, d_a d_b = {dab}");
            }
        }
    }
    cert.residual("fusion isometry", "fusion morphisms are isometries", iso, tol);
    cert.residual(
        "fusion orthogonality",
        "maximal family of mutually orthogonal isometric morphisms",
        orth,
        tol,
    );
    cert.residual(
        "fusion completeness",
        "fusion isometries resolve the identity of a tensor product",
        complete,
        tol,
    );
    if matches!(cat.source, CategorySource::Group { .. }) {
        cert.residual("fusion intertwining", "fusion isometries are intertwiners", intertwining, tol);
    }
    cert.flag("fusion dimension count", "Σ_c N_ab^c dim c = dim a · dim b", count_ok, count_detail);

    let mut unit_ok = true;
    let mut unit_detail = String::new();
    for a in 0..n {
        for b in 0..n {
            let expected = usize::from(b == cat.dual(a));
            if cat.multiplicity(a, b, o) != expected && unit_ok {
                unit_ok = false;
                unit_detail = format!("N_({a},{b})^o = {}", cat.multiplicity(a, b, o));
            }
        }
        if cat.dual(cat.dual(a)) != a && unit_ok {
            unit_ok = false;
            unit_detail = format!("duality is not an involution at {a}");
        }
    }
    cert.flag("irreducible unit", "N_ab^o = δ(b, ā) and the dual map is an involution", unit_ok, unit_detail);

    let mut unit_iso: f64 = 0.0;
    for a in 0..n {
        for (x, y) in [(o, a), (a, o)] {
            let fam = cat.isometries(x, y, a);
            unit_iso = match fam {
                [m] if m.shape() == (cat.dim(a), cat.dim(a)) => {
                    unit_iso.max(m.max_abs_diff(&ComplexMatrix::identity(cat.dim(a))))
                }
                _ => f64::INFINITY,
            };
        }
    }
    cert.residual("unit isometries", "the unit acts as the identity on every object", unit_iso, tol);

    let mut snake: f64 = 0.0;
    let mut norm: f64 = 0.0;
    let mut invariance: f64 = 0.0;
    for a in 0..n {
        let (s1, s2) = cat.snake_residuals(a);
        snake = snake.max(s1).max(s2);
        let s = &cat.conj_solutions[a];
        let rr = s.r.hs_inner(&s.r).re;
        let rbrb = s.r_bar.hs_inner(&s.r_bar).re;
        norm = norm.max((rr - cat.qdim[a]).abs()).max((rbrb - cat.qdim[a]).abs());
        if let (Some(ua), Some(uabar)) = (cat.irrep(a), cat.irrep(cat.dual(a))) {
            for g in 0..ua.group_order {
                let moved = kron(&uabar.matrices[g], &ua.matrices[g]).matmul(&s.r);
                invariance = invariance.max(moved.max_abs_diff(&s.r));
                let moved = kron(&ua.matrices[g], &uabar.matrices[g]).matmul(&s.r_bar);
                invariance = invariance.max(moved.max_abs_diff(&s.r_bar));
            }
        }
    }
    cert.residual("conjugate equations", "both snake identities for every irreducible", snake, tol);
    cert.residual("duality normalization", "R*R = R̄*R̄ = quantum dimension", norm, tol);
    if matches!(cat.source, CategorySource::Group { .. }) {
        cert.residual("duality invariance", "R and R̄ are invariant vectors", invariance, tol);
    }

    let qdim_ok = cat.labels().all(|a| {
        cat.qdim[a] >= 1.0 - tol
            && match cat.source {
                CategorySource::Group { .. } => cat.qdim[a] == cat.dim(a) as f64,
                CategorySource::Pointed { .. } => true,
            }
    });
    cert.flag("quantum dimension", "quantum dimensions are at least one", qdim_ok, "");

    let mut f_unitary: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                for e in 0..n {
                    let f = cat.f_move(a, b, d, e);
                    if f.rows() != f.cols() {
                        f_unitary = f64::INFINITY;
                        continue;
                    }
                    if f.rows() > 0 {
                        f_unitary = f_unitary.max(crate::numkit::unitarity_residual(&f));
                    }
                }
            }
        }
    }
    cert.residual(
        "associativity moves",
        "the two decompositions of a triple product are related by unitaries",
        f_unitary,
        tol,
    );
    if let CategorySource::Pointed { data } = &cat.source {
        let (res, quad) = data.cocycle_residual();
        cert.residual("cocycle identity", "pentagon equation for the associator", res, tol);
        if res > tol {
            cert.detail(format!("worst quadruple {quad:?}"));
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouprep::extract_irreps;
    use crate::numkit::DEFAULT_TOL;

    fn s3() -> CategoryPresentation {
        let g = FiniteGroup::symmetric(3);
        let t = extract_irreps(&g, 11).unwrap();
        CategoryPresentation::from_group(&g, &t, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn z2_fusion_and_dimensions() {
        let g = FiniteGroup::cyclic(2);
        let t = extract_irreps(&g, 0).unwrap();
        let cat = CategoryPresentation::from_group(&g, &t, DEFAULT_TOL).unwrap();
        assert_eq!(cat.multiplicity(1, 1, 0), 1);
        assert_eq!(cat.multiplicity(1, 1, 1), 0);
        assert_eq!(cat.qdim, vec![1.0, 1.0]);
    }

    #[test]
    fn s3_standard_squared() {
        let cat = s3();
        // Character oracle: χ_std = (2, 0, -1) on classes of sizes (1, 3, 2),
        // and χ_std² = (4, 0, 1) decomposes with multiplicity one per irrep.
        let chi_std = [2.0, 0.0, -1.0];
        let sizes = [1.0, 3.0, 2.0];
        let chars = [[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], chi_std];
        for (c, chi) in chars.iter().enumerate() {
            let m: f64 = (0..3).map(|k| sizes[k] * chi[k] * chi_std[k] * chi_std[k]).sum::<f64>() / 6.0;
            assert_eq!(cat.multiplicity(2, 2, c), m.round() as usize);
        }
        assert!(verify_presentation(&cat, DEFAULT_TOL).passed());
    }

    #[test]
    fn pointed_z4_twisted_is_valid() {
        let data = PointedFusionData::cyclic(4, 1);
        let cat = CategoryPresentation::from_pointed(&data, DEFAULT_TOL).unwrap();
        assert!(!cat.has_trivial_associator(DEFAULT_TOL));
        for a in cat.labels() {
            assert_eq!(cat.dual(a), (4 - a) % 4);
            let (s1, s2) = cat.snake_residuals(a);
            assert!(s1 < 1e-9 && s2 < 1e-9);
        }
        let cert = verify_presentation(&cat, DEFAULT_TOL);
        assert!(cert.passed(), "{cert:?}");
    }

    #[test]
    fn broken_cocycle_reports_quadruple() {
        let mut data = PointedFusionData::cyclic(4, 1);
        data.cocycle[(4 + 2) * 4 + 3] = C64::new(-1.0, 0.0);
        assert!(matches!(
            CategoryPresentation::from_pointed(&data, DEFAULT_TOL),
            Err(CategoryError::CocycleIdentity { .. })
        ));
    }

    #[test]
    fn corrupted_fusion_isometry_is_flagged() {
        let mut cat = s3();
        let m = &mut cat.isometries_mut(2, 2, 2)[0];
        let (mut best, mut at) = (0.0, (0, 0));
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if m[(r, c)].norm() > best {
                    best = m[(r, c)].norm();
                    at = (r, c);
                }
            }
        }
        let z = m[at];
        m[at] = z + z / z.norm() * 1e-3;
        let cert = verify_presentation(&cat, DEFAULT_TOL);
        let check = cert.find("fusion completeness").unwrap();
        assert!(!check.pass);
        assert!(check.value.unwrap() >= 1e-3);
    }

    #[test]
    fn frobenius_round_trip_and_unit() {
        let cat = s3();
        for a in cat.labels() {
            for b in cat.labels() {
                for c in cat.labels() {
                    let f = ComplexMatrix::from_fn(cat.dim(c), cat.dim(a) * cat.dim(b), |r, k| {
                        C64::new(r as f64 + 0.5, k as f64 - 0.25)
                    });
                    let fr = cat.frobenius(a, b, c);
                    assert!(fr.round_trip_residual(&f) < 1e-12);
                    if a == cat.trivial {
                        assert!(fr.forward(&f).max_abs_diff(&f) < 1e-15);
                    }
                    assert_eq!(cat.multiplicity(a, b, c), cat.multiplicity(cat.dual(a), c, b));
                }
            }
        }
        let twisted = CategoryPresentation::from_pointed(&PointedFusionData::cyclic(4, 1), DEFAULT_TOL).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let c = (a + b) % 4;
                let f = ComplexMatrix::scalar(C64::new(0.3, -0.7));
                assert!(twisted.frobenius(a, b, c).round_trip_residual(&f) < 1e-12);
            }
        }
    }

    #[test]
    fn rescaling_keeps_snakes_and_changes_fingerprint() {
        let cat = s3();
        let scaled = cat.with_rescaled_duality(C64::new(0.5, 0.5));
        for a in cat.labels() {
            let (s1, s2) = scaled.snake_residuals(a);
            assert!(s1 < 1e-12 && s2 < 1e-12);
        }
        assert_ne!(cat.fingerprint(), scaled.fingerprint());
        assert_eq!(cat.fingerprint(), cat.clone().fingerprint());
    }
}
