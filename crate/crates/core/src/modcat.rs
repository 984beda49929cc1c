//! Module C*-categories presented as tensor functors into bigraded Hilbert
//! spaces.
//!
//! A module category with simple objects `X_r` (`r ∈ J`) over a category with
//! irreducibles `u_a` is stored through the spaces `F_rs(a) = Mor(X_r, u_a ⊗ X_s)`
//! and the coherence unitaries
//!
//! ```text
//! Φ^{ab}_{rt}: ⊕_s F_rs(a) ⊗ F_st(b) → ⊕_{c,k} F_rt(c)
//! ```
//!
//! whose columns are ordered by `(s, i, j)` and rows by `(c, k, l)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouprep::{
    extract_irreps, intertwiner_basis, intertwiner_matrices, restrict, GroupError, IrrepTable, RepError, Subgroup,
    UnitaryRep,
};
use crate::numkit::{isometry_residual, kron, unitarity_residual, ComplexMatrix, ContentHasher, NumError, C64, ONE, ZERO};
use crate::tensorcat::{CategoryPresentation, CategorySource, Channel};
use crate::verify::Certificate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuleError {
    #[error("this construction needs a category built from a group representation table")]
    NotGroupBackend,
    #[error("this construction needs a pointed category")]
    NotPointedBackend,
    #[error("subgroup lives in a group of order {got}, expected {expected}")]
    SubgroupMismatch { expected: usize, got: usize },
    #[error("2-cochain has {got} entries, expected {expected}")]
    CochainShape { expected: usize, got: usize },
    #[error("2-cochain is not normalized or not unimodular at ({a}, {b})")]
    CochainNormalization { a: usize, b: usize },
    #[error("coboundary of the 2-cochain differs from the associator on ({a}, {b}, {c}) by {residual:e}")]
    CochainCondition { a: usize, b: usize, c: usize, residual: f64 },
    #[error("subgroup {inner:?} is not contained in {outer:?}")]
    NotNested { inner: Vec<usize>, outer: Vec<usize> },
    #[error("object {object} does not decompose: multiplicities account for dimension {found} of {expected}")]
    NotSemisimple { object: usize, found: usize, expected: usize },
    #[error("label {label} is out of range ({count} available)")]
    Label { label: usize, count: usize },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A J-graded Hilbert space, given by its component dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedHilbertSpace {
    pub grading: Vec<usize>,
}

impl GradedHilbertSpace {
    pub fn total_dim(&self) -> usize {
        self.grading.iter().sum()
    }
}

/// Row and column bookkeeping of one coherence matrix `Φ^{ab}_{rt}`.
#[derive(Clone, Debug)]
pub struct CoherenceLayout {
    /// Column offset of each `s` block; the final entry is the column count.
    pub col_offsets: Vec<usize>,
    /// `(channel, row offset, block size)` in channel order.
    pub rows: Vec<(Channel, usize, usize)>,
    pub n_rows: usize,
}

impl CoherenceLayout {
    pub fn n_cols(&self) -> usize {
        *self.col_offsets.last().expect("offsets are nonempty")
    }

    pub fn row_offset(&self, c: usize, k: usize) -> Option<usize> {
        self.rows.iter().find(|(ch, _, _)| ch.c == c && ch.k == k).map(|&(_, off, _)| off)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigradedFunctor {
    pub n_labels: usize,
    pub base_size: usize,
    pub base_names: Vec<String>,
    /// `dims[(a J + r) J + s] = dim F_rs(a)`.
    pub dims: Vec<usize>,
    /// `coherence[((a n + b) J + r) J + t] = Φ^{ab}_{rt}`.
    pub coherence: Vec<ComplexMatrix>,
    pub category_fingerprint: String,
}

impl BigradedFunctor {
    pub fn dim(&self, a: usize, r: usize, s: usize) -> usize {
        self.dims[(a * self.base_size + r) * self.base_size + s]
    }

    fn coherence_index(&self, a: usize, b: usize, r: usize, t: usize) -> usize {
        ((a * self.n_labels + b) * self.base_size + r) * self.base_size + t
    }

    pub fn coherence(&self, a: usize, b: usize, r: usize, t: usize) -> &ComplexMatrix {
        &self.coherence[self.coherence_index(a, b, r, t)]
    }

    pub fn coherence_mut(&mut self, a: usize, b: usize, r: usize, t: usize) -> &mut ComplexMatrix {
        let i = self.coherence_index(a, b, r, t);
        &mut self.coherence[i]
    }

    pub fn base(&self) -> std::ops::Range<usize> {
        0..self.base_size
    }

    /// The multiplicity matrix `(dim F_rs(a))_{r,s}`.
    pub fn dimension_matrix(&self, a: usize) -> Vec<Vec<usize>> {
        self.base()
            .map(|r| self.base().map(|s| self.dim(a, r, s)).collect())
            .collect()
    }

    pub fn layout(&self, cat: &CategoryPresentation, a: usize, b: usize, r: usize, t: usize) -> CoherenceLayout {
        let mut col_offsets = Vec::with_capacity(self.base_size + 1);
        let mut acc = 0;
        for s in self.base() {
            col_offsets.push(acc);
            acc += self.dim(a, r, s) * self.dim(b, s, t);
        }
        col_offsets.push(acc);
        let mut rows = Vec::new();
        let mut n_rows = 0;
        for ch in cat.channels(a, b) {
            let size = self.dim(ch.c, r, t);
            rows.push((ch, n_rows, size));
            n_rows += size;
        }
        CoherenceLayout {
            col_offsets,
            rows,
            n_rows,
        }
    }

    /// Image of the basis element `f_i ⊗ g_j ∈ F_rs(a) ⊗ F_st(b)` under
    /// `Φ^{ab}_{rt}`, as nonzero `(c, k, l, coefficient)` entries.
    pub fn apply_coherence(
        &self,
        cat: &CategoryPresentation,
        (a, b, r, t): (usize, usize, usize, usize),
        (s, i, j): (usize, usize, usize),
    ) -> Vec<(usize, usize, usize, C64)> {
        let layout = self.layout(cat, a, b, r, t);
        let col = layout.col_offsets[s] + i * self.dim(b, s, t) + j;
        let phi = self.coherence(a, b, r, t);
        let mut out = Vec::new();
        for &(ch, off, size) in &layout.rows {
            for l in 0..size {
                let z = phi[(off + l, col)];
                if z != ZERO {
                    out.push((ch.c, ch.k, l, z));
                }
            }
        }
        out
    }

    /// Strong connectivity of the graph on `J` with an edge `r → s` whenever
    /// some `F_rs(a)` is nonzero.
    pub fn is_connected(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.base_size];
            let mut queue = VecDeque::from([0]);
            seen[0] = true;
            while let Some(r) = queue.pop_front() {
                for s in self.base() {
                    let linked = (0..self.n_labels).any(|a| {
                        if forward {
                            self.dim(a, r, s) > 0
                        } else {
                            self.dim(a, s, r) > 0
                        }
                    });
                    if linked && !seen[s] {
                        seen[s] = true;
                        queue.push_back(s);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        self.base_size > 0 && reach(true) && reach(false)
    }

    pub fn fingerprint(&self) -> String {
        let mut h = ContentHasher::new();
        h.tag("module").count(self.n_labels).count(self.base_size);
        h.tag(&self.category_fingerprint);
        for &d in &self.dims {
            h.count(d);
        }
        for m in &self.coherence {
            h.matrix(m);
        }
        h.finish()
    }

    /// Assembles a functor from dimensions and a coherence callback that is
    /// invoked for every `(a, b, r, t)` with the corresponding layout.
    fn assemble(
        cat: &CategoryPresentation,
        base_names: Vec<String>,
        dims: Vec<usize>,
        mut phi: impl FnMut(&CoherenceLayout, (usize, usize, usize, usize)) -> ComplexMatrix,
    ) -> Self {
        let n = cat.len();
        let j = base_names.len();
        let mut f = Self {
            n_labels: n,
            base_size: j,
            base_names,
            dims,
            coherence: Vec::new(),
            category_fingerprint: cat.fingerprint(),
        };
        let mut coherence = Vec::with_capacity(n * n * j * j);
        for a in 0..n {
            for b in 0..n {
                for r in 0..j {
                    for t in 0..j {
                        let layout = f.layout(cat, a, b, r, t);
                        let m = if a == cat.trivial || b == cat.trivial {
                            ComplexMatrix::identity(layout.n_rows)
                        } else {
                            phi(&layout, (a, b, r, t))
                        };
                        coherence.push(m);
                    }
                }
            }
        }
        f.coherence = coherence;
        f
    }
}

/// The module category `Rep(H)` over `Rep(G)` together with its concrete
/// intertwiner bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupModule {
    pub functor: BigradedFunctor,
    pub subgroup: Subgroup,
    pub irreps: IrrepTable,
    /// `bases[(a J + r) J + s]`: isometries `X_r → u_a|_H ⊗ X_s`.
    pub bases: Vec<Vec<ComplexMatrix>>,
}

impl SubgroupModule {
    pub fn basis(&self, a: usize, r: usize, s: usize) -> &[ComplexMatrix] {
        let j = self.functor.base_size;
        &self.bases[(a * j + r) * j + s]
    }
}

/// `Rep(H)` as a module category over `Rep(G)`, with `J` the irreducible
/// representations of `H` extracted with the given seed.
pub fn module_from_subgroup(
    cat: &CategoryPresentation,
    h: &Subgroup,
    seed: u64,
    tol: f64,
) -> Result<SubgroupModule, ModuleError> {
    let irreps = extract_irreps(&h.group, seed)?;
    module_from_subgroup_with_irreps(cat, h, irreps, tol)
}

/// As [`module_from_subgroup`], with a supplied irrep table for `H`.
pub fn module_from_subgroup_with_irreps(
    cat: &CategoryPresentation,
    h: &Subgroup,
    irreps: IrrepTable,
    tol: f64,
) -> Result<SubgroupModule, ModuleError> {
    let CategorySource::Group { group, table } = &cat.source else {
        return Err(ModuleError::NotGroupBackend);
    };
    if h.parent_order != group.order() {
        return Err(ModuleError::SubgroupMismatch {
            expected: group.order(),
            got: h.parent_order,
        });
    }
    let n = cat.len();
    let j = irreps.len();
    let w = &irreps.irreps;
    let restricted: Vec<UnitaryRep> = table.irreps.iter().map(|u| restrict(u, h)).collect();
    let mut bases = Vec::with_capacity(n * j * j);
    for a in 0..n {
        for r in 0..j {
            for s in 0..j {
                let family = if a == cat.trivial {
                    if r == s {
                        vec![ComplexMatrix::identity(w[r].dim)]
                    } else {
                        vec![]
                    }
                } else {
                    let target = restricted[a].tensor(&w[s]);
                    let scale = C64::new((w[r].dim as f64).sqrt(), 0.0);
                    intertwiner_matrices(&w[r], &target, tol)?
                        .into_iter()
                        .map(|m| m.scale(scale))
                        .collect()
                };
                bases.push(family);
            }
        }
    }
    let basis = |a: usize, r: usize, s: usize| &bases[(a * j + r) * j + s];
    let dims = bases.iter().map(Vec::len).collect();
    let names = (0..j).map(|r| format!("w{r}")).collect();
    let functor = BigradedFunctor::assemble(cat, names, dims, |layout, (a, b, r, t)| {
        let mut phi = ComplexMatrix::zeros(layout.n_rows, layout.n_cols());
        let da = cat.dim(a);
        let dr = w[r].dim as f64;
        let id_t = ComplexMatrix::identity(w[t].dim);
        for s in 0..j {
            let fs = basis(a, r, s);
            let gs = basis(b, s, t);
            for (i, f) in fs.iter().enumerate() {
                for (jj, g) in gs.iter().enumerate() {
                    let col = layout.col_offsets[s] + i * gs.len() + jj;
                    let composite = kron(&ComplexMatrix::identity(da), g).matmul(f);
                    for &(ch, off, size) in &layout.rows {
                        let iota = &cat.isometries(a, b, ch.c)[ch.k];
                        let projected = kron(&iota.adjoint(), &id_t).matmul(&composite);
                        let targets = basis(ch.c, r, t);
                        for (l, u) in targets.iter().enumerate().take(size) {
                            phi[(off + l, col)] = u.hs_inner(&projected) / dr;
                        }
                    }
                }
            }
        }
        phi
    });
    Ok(SubgroupModule {
        functor,
        subgroup: h.clone(),
        irreps,
        bases,
    })
}

/// A module category over a pointed category `Vec_G^ω`, determined by a
/// subgroup `k` and a 2-cochain `μ` on `k` with `dμ = ω|_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointedModule {
    pub functor: BigradedFunctor,
    pub subgroup: Subgroup,
    /// `μ(a, b)` indexed by subgroup positions, flat `a |k| + b`.
    pub mu: Vec<C64>,
    /// Left cosets `g k`, identity coset first, then by smallest element.
    pub cosets: Vec<Vec<usize>>,
}

pub fn module_from_pointed(
    cat: &CategoryPresentation,
    k: &Subgroup,
    mu: Vec<C64>,
    tol: f64,
) -> Result<PointedModule, ModuleError> {
    let CategorySource::Pointed { data } = &cat.source else {
        return Err(ModuleError::NotPointedBackend);
    };
    let g = &data.group;
    if k.parent_order != g.order() {
        return Err(ModuleError::SubgroupMismatch {
            expected: g.order(),
            got: k.parent_order,
        });
    }
    let nk = k.order();
    if mu.len() != nk * nk {
        return Err(ModuleError::CochainShape {
            expected: nk * nk,
            got: mu.len(),
        });
    }
    let pos = |x: usize| k.position(x).expect("element of k");
    let mu_at = |a: usize, b: usize| mu[pos(a) * nk + pos(b)];
    let e = g.identity();
    for &a in &k.elements {
        for &b in &k.elements {
            let z = mu_at(a, b);
            let normalized = a != e && b != e || (z - ONE).norm() <= tol;
            if (z.norm() - 1.0).abs() > tol || !normalized {
                return Err(ModuleError::CochainNormalization { a, b });
            }
        }
    }
    for &a in &k.elements {
        for &b in &k.elements {
            for &c in &k.elements {
                let lhs = mu_at(b, c) * mu_at(a, g.mul(b, c));
                let rhs = data.omega(a, b, c) * mu_at(g.mul(a, b), c) * mu_at(a, b);
                let residual = (lhs - rhs).norm();
                if residual > tol {
                    return Err(ModuleError::CochainCondition { a, b, c, residual });
                }
            }
        }
    }

    let mut coset_of = vec![usize::MAX; g.order()];
    let mut cosets: Vec<Vec<usize>> = Vec::new();
    let mut order: Vec<usize> = vec![e];
    order.extend(g.elements().filter(|&x| x != e));
    for x in order {
        if coset_of[x] != usize::MAX {
            continue;
        }
        let mut coset: Vec<usize> = k.elements.iter().map(|&y| g.mul(x, y)).collect();
        coset.sort_unstable();
        for &y in &coset {
            coset_of[y] = cosets.len();
        }
        cosets.push(coset);
    }
    let reps: Vec<usize> = cosets
        .iter()
        .map(|c| if c.contains(&e) { e } else { c[0] })
        .collect();
    let j = cosets.len();
    let act = |x: usize, s: usize| coset_of[g.mul(x, reps[s])];
    // g x_s = x_{g s} κ(g, s)
    let kappa = |x: usize, s: usize| g.mul(g.inverse(reps[act(x, s)]), g.mul(x, reps[s]));
    let w = |a: usize, b: usize, c: usize| data.omega(a, b, c);
    let m = |x: usize, y: usize, s: usize| {
        let ys = act(y, s);
        let xys = act(x, ys);
        w(x, y, reps[s]) / w(x, reps[ys], kappa(y, s)) * w(reps[xys], kappa(x, ys), kappa(y, s))
            / mu_at(kappa(x, ys), kappa(y, s))
    };

    let n = cat.len();
    let mut dims = vec![0; n * j * j];
    for x in 0..n {
        for s in 0..j {
            dims[(x * j + act(x, s)) * j + s] = 1;
        }
    }
    let names = reps.iter().map(|r| format!("g{r}k")).collect();
    let functor = BigradedFunctor::assemble(cat, names, dims, |layout, (x, y, _, t)| {
        let mut phi = ComplexMatrix::zeros(layout.n_rows, layout.n_cols());
        if layout.n_rows > 0 {
            let s = act(y, t);
            phi[(0, layout.col_offsets[s])] = m(x, y, t).conj();
        }
        phi
    });
    Ok(PointedModule {
        functor,
        subgroup: k.clone(),
        mu,
        cosets,
    })
}

/// Triple-product coherence residual for labels `(a, b, d)` and base labels
/// `(r, u)`: the composite of coherence maps along the two bracketings must
/// differ exactly by the associativity move of the category.
pub fn triple_coherence_residual(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    (a, b, d): (usize, usize, usize),
    (r, u): (usize, usize),
) -> f64 {
    let jn = f.base_size;
    let mut sources = Vec::new();
    for s in 0..jn {
        for t in 0..jn {
            for i in 0..f.dim(a, r, s) {
                for j in 0..f.dim(b, s, t) {
                    for l in 0..f.dim(d, t, u) {
                        sources.push((s, t, i, j, l));
                    }
                }
            }
        }
    }
    if sources.is_empty() {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for e in cat.labels() {
        let ne = f.dim(e, r, u);
        if ne == 0 {
            continue;
        }
        let left_index = tree_index(cat, cat.channels(a, b), d, e, true);
        let right_index = tree_index(cat, cat.channels(b, d), a, e, false);
        let nl = left_index.iter().map(|x| x.len()).sum::<usize>();
        let nr = right_index.iter().map(|x| x.len()).sum::<usize>();
        let fm = cat.f_move(a, b, d, e);
        let mut left = ComplexMatrix::zeros(nl * ne, sources.len());
        let mut right = ComplexMatrix::zeros(nr * ne, sources.len());
        let left_channels = cat.channels(a, b);
        let right_channels = cat.channels(b, d);
        for (col, &(s, t, i, j, l)) in sources.iter().enumerate() {
            for (c, k, m, z) in f.apply_coherence(cat, (a, b, r, t), (s, i, j)) {
                let slot = left_channels.iter().position(|ch| ch.c == c && ch.k == k).expect("channel");
                for (e2, k2, n, w) in f.apply_coherence(cat, (c, d, r, u), (t, m, l)) {
                    if e2 == e {
                        left[(left_index[slot][k2] * ne + n, col)] += z * w;
                    }
                }
            }
            for (c, k, m, z) in f.apply_coherence(cat, (b, d, s, u), (t, j, l)) {
                let slot = right_channels.iter().position(|ch| ch.c == c && ch.k == k).expect("channel");
                for (e2, k3, n, w) in f.apply_coherence(cat, (a, c, r, u), (s, i, m)) {
                    if e2 == e {
                        right[(right_index[slot][k3] * ne + n, col)] += z * w;
                    }
                }
            }
        }
        let moved = kron(&fm, &ComplexMatrix::identity(ne)).matmul(&right);
        worst = worst.max(left.max_abs_diff(&moved));
    }
    worst
}

/// For each outer channel, the positions of its trees ending in `e`. Left
/// trees pair a channel `c` of `a ⊗ b` with `c ⊗ d → e`; right trees pair a
/// channel `c'` of `b ⊗ d` with `a ⊗ c' → e`.
fn tree_index(cat: &CategoryPresentation, channels: Vec<Channel>, other: usize, e: usize, left: bool) -> Vec<Vec<usize>> {
    let mut next = 0;
    channels
        .iter()
        .map(|ch| {
            let count = if left {
                cat.multiplicity(ch.c, other, e)
            } else {
                cat.multiplicity(other, ch.c, e)
            };
            let idx = (next..next + count).collect();
            next += count;
            idx
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Require the module category to be connected (indecomposable).
    pub require_connected: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            require_connected: true,
        }
    }
}

/// Validates a bigraded functor against its category.
pub fn validate_module(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    tol: f64,
    options: ValidationOptions,
) -> Certificate {
    let mut cert = Certificate::new("module", f.fingerprint(), tol);
    let n = cat.len();
    let o = cat.trivial;
    let jn = f.base_size;

    cert.flag(
        "category fingerprint",
        "module data refers to the category it was built against",
        f.category_fingerprint == cat.fingerprint() && f.n_labels == n,
        "",
    );

    let unit_ok = f.base().all(|r| f.base().all(|s| f.dim(o, r, s) == usize::from(r == s)));
    cert.flag("unit grading", "the unit object acts as the identity grading", unit_ok, "");

    let mut shape_ok = true;
    let mut shape_detail = String::new();
    let mut unitary: f64 = 0.0;
    let mut unit_coherence: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for r in 0..jn {
                for t in 0..jn {
                    let layout = f.layout(cat, a, b, r, t);
                    let phi = f.coherence(a, b, r, t);
                    if phi.shape() != (layout.n_rows, layout.n_cols()) || layout.n_rows != layout.n_cols() {
                        if shape_ok {
                            shape_detail = format!(
                                "Φ for labels ({a}, {b}) at ({r}, {t}) is {}x{}, expected {}x{}",
                                phi.rows(),
                                phi.cols(),
                                layout.n_rows,
                                layout.n_cols()
                            );
                        }
                        shape_ok = false;
                        continue;
                    }
                    if layout.n_rows == 0 {
                        continue;
                    }
                    unitary = unitary.max(unitarity_residual(phi));
                    if a == o || b == o {
                        unit_coherence = unit_coherence.max(phi.max_abs_diff(&ComplexMatrix::identity(layout.n_rows)));
                    }
                }
            }
        }
    }
    cert.flag(
        "coherence shape",
        "Σ_s dim F_rs(a) dim F_st(b) = Σ_c N_ab^c dim F_rt(c)",
        shape_ok,
        shape_detail,
    );
    cert.residual("coherence unitarity", "coherence maps for tensoriality are unitary", unitary, tol);
    cert.residual("unit coherence", "unit constraint of the module action", unit_coherence, tol);

    let mut triple: f64 = 0.0;
    let mut worst_at = None;
    if shape_ok {
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    for r in 0..jn {
                        for u in 0..jn {
                            let res = triple_coherence_residual(cat, f, (a, b, d), (r, u));
                            if res > triple {
                                triple = res;
                                worst_at = Some((a, b, d, r, u));
                            }
                        }
                    }
                }
            }
        }
    } else {
        triple = f64::INFINITY;
    }
    cert.residual(
        "triple coherence",
        "the two bracketings of a triple product agree",
        triple,
        tol,
    );
    if triple > tol {
        if let Some(at) = worst_at {
            cert.detail(format!("worst (a, b, d, r, u) = {at:?}"));
        }
    }

    let symmetric = (0..n).all(|a| {
        f.base()
            .all(|r| f.base().all(|s| f.dim(a, r, s) == f.dim(cat.dual(a), s, r)))
    });
    cert.flag(
        "frobenius dimension symmetry",
        "dim F_rs(a) = dim F_sr(ā)",
        symmetric,
        "",
    );

    let connected = f.is_connected();
    if options.require_connected {
        cert.flag("connectedness", "every simple object reaches every other", connected, "");
    } else {
        cert.flag(
            "connectedness",
            "every simple object reaches every other",
            true,
            if connected { "connected" } else { "waived: module is decomposable" },
        );
    }
    cert
}

/// Extra checks available for modules built from a subgroup.
pub fn validate_subgroup_module(cat: &CategoryPresentation, m: &SubgroupModule, tol: f64) -> Certificate {
    let mut cert = validate_module(cat, &m.functor, tol, ValidationOptions::default());
    let CategorySource::Group { table, .. } = &cat.source else {
        cert.flag("group backend", "subgroup modules need a group category", false, "");
        return cert;
    };
    let jn = m.functor.base_size;
    let w = &m.irreps.irreps;
    let mut isometry: f64 = 0.0;
    let mut intertwining: f64 = 0.0;
    let mut decomposition = true;
    for a in cat.labels() {
        let ua = restrict(&table.irreps[a], &m.subgroup);
        for r in 0..jn {
            let mut total = 0;
            for s in 0..jn {
                let family = m.basis(a, r, s);
                total += family.len() * w[s].dim;
                for (i, x) in family.iter().enumerate() {
                    isometry = isometry.max(isometry_residual(x));
                    for y in &family[i + 1..] {
                        isometry = isometry.max(x.adjoint().matmul(y).max_abs());
                    }
                    for h in 0..m.subgroup.order() {
                        let lhs = x.matmul(&w[r].matrices[h]);
                        let rhs = kron(&ua.matrices[h], &w[s].matrices[h]).matmul(x);
                        intertwining = intertwining.max(lhs.max_abs_diff(&rhs));
                    }
                }
            }
            if total != cat.dim(a) * w[r].dim {
                decomposition = false;
            }
        }
    }
    cert.residual("module basis isometry", "chosen morphisms are orthogonal isometries", isometry, tol);
    cert.residual("module basis intertwining", "chosen morphisms are H-equivariant", intertwining, tol);
    cert.flag(
        "decomposition identity",
        "Σ_s dim F_rs(a) dim X_s = dim u_a dim X_r",
        decomposition,
        "",
    );
    cert
}

/// Direct sum of two module categories over the same category. The result
/// is decomposable, so it fails the default connectedness check.
pub fn direct_sum(cat: &CategoryPresentation, x: &BigradedFunctor, y: &BigradedFunctor) -> BigradedFunctor {
    let (jx, jy) = (x.base_size, y.base_size);
    let j = jx + jy;
    let part = |r: usize| if r < jx { (0, r) } else { (1, r - jx) };
    let mut dims = vec![0; cat.len() * j * j];
    for a in cat.labels() {
        for r in 0..j {
            for s in 0..j {
                dims[(a * j + r) * j + s] = match (part(r), part(s)) {
                    ((0, r), (0, s)) => x.dim(a, r, s),
                    ((1, r), (1, s)) => y.dim(a, r, s),
                    _ => 0,
                };
            }
        }
    }
    let mut names: Vec<String> = x.base_names.iter().map(|s| format!("x.{s}")).collect();
    names.extend(y.base_names.iter().map(|s| format!("y.{s}")));
    BigradedFunctor::assemble(cat, names, dims, |layout, (a, b, r, t)| match (part(r), part(t)) {
        ((0, r), (0, t)) => x.coherence(a, b, r, t).clone(),
        ((1, r), (1, t)) => y.coherence(a, b, r, t).clone(),
        _ => ComplexMatrix::zeros(layout.n_rows, layout.n_cols()),
    })
}

/// The Frobenius identification of `F_xy(a)` with the conjugate space of
/// `F_yx(ā)`. Both matrices act linearly on coordinates: `forward` takes
/// coordinates in `F_xy(a)` to coordinates in the conjugate space, and
/// `backward` goes the other way.
#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusModuleMap {
    pub forward: ComplexMatrix,
    pub backward: ComplexMatrix,
}

impl FrobeniusModuleMap {
    pub fn round_trip_residual(&self) -> f64 {
        let n = self.forward.cols();
        let m = self.forward.rows();
        self.backward
            .matmul(&self.forward)
            .max_abs_diff(&ComplexMatrix::identity(n))
            .max(self.forward.matmul(&self.backward).max_abs_diff(&ComplexMatrix::identity(m)))
    }
}

pub fn frobenius_module(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    a: usize,
    x: usize,
    y: usize,
) -> FrobeniusModuleMap {
    let o = cat.trivial;
    let abar = cat.dual(a);
    let (nm, nn) = (f.dim(a, x, y), f.dim(abar, y, x));
    let kappa = cat.kappa(a);
    let kappa_bar = cat.kappa_bar(a);
    let to_unit = |pair: (usize, usize, usize, usize), col: (usize, usize, usize)| -> C64 {
        f.apply_coherence(cat, pair, col)
            .into_iter()
            .find(|&(c, _, _, _)| c == o)
            .map_or(ZERO, |(_, _, _, z)| z)
    };
    let forward = ComplexMatrix::from_fn(nn, nm, |n, m| {
        kappa * to_unit((abar, a, y, y), (x, n, m)).conj()
    });
    let backward = ComplexMatrix::from_fn(nm, nn, |m, n| {
        kappa_bar.conj() * to_unit((a, abar, x, x), (y, m, n))
    });
    FrobeniusModuleMap { forward, backward }
}

/// Multiplicity matrix `H^F[p][r] = dim Mor(Y_p, F(X_r))` of a functor given
/// by the images of the source irreducibles as representations of the
/// target group.
pub fn functor_dimension_matrix(
    images: &[UnitaryRep],
    target: &IrrepTable,
    tol: f64,
) -> Result<Vec<Vec<usize>>, ModuleError> {
    let mut h = vec![vec![0; images.len()]; target.len()];
    for (r, image) in images.iter().enumerate() {
        let mut found = 0;
        for (p, z) in target.irreps.iter().enumerate() {
            let mult = intertwiner_basis(z, image, tol)?.len();
            h[p][r] = mult;
            found += mult * z.dim;
        }
        if found != image.dim {
            return Err(ModuleError::NotSemisimple {
                object: r,
                found,
                expected: image.dim,
            });
        }
    }
    Ok(h)
}

/// Composition of functors on multiplicity matrices: the balanced tensor
/// product over the middle index set is the matrix product.
pub fn balanced_product(outer: &[Vec<usize>], inner: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let cols = inner.first().map_or(0, Vec::len);
    outer
        .iter()
        .map(|row| {
            (0..cols)
                .map(|c| row.iter().zip(inner).map(|(x, irow)| x * irow[c]).sum())
                .collect()
        })
        .collect()
}

/// True iff the multiplicity matrix is a permutation matrix.
pub fn equivalence_check(m: &[Vec<usize>]) -> bool {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return false;
    }
    let rows_ok = m.iter().all(|row| row.iter().sum::<usize>() == 1 && row.iter().all(|&x| x <= 1));
    let cols_ok = (0..n).all(|c| m.iter().map(|row| row[c]).sum::<usize>() == 1);
    rows_ok && cols_ok
}

/// Duality data of a bigraded Hilbert space `H` with component dimensions `h[r][s]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BigradedDual {
    /// `d(H)_rs = dim H_sr`.
    pub dual_dims: Vec<Vec<usize>>,
    /// `R[r][s] ∈ conj(H_sr) ⊗ H_sr`, the `(r, r)` component of `R_H`.
    pub r: Vec<Vec<ComplexMatrix>>,
    /// `R̄[r][s] ∈ H_rs ⊗ conj(H_rs)`.
    pub r_bar: Vec<Vec<ComplexMatrix>>,
    pub residual: f64,
}

pub fn bigraded_dual(h: &[Vec<usize>]) -> BigradedDual {
    let j = h.len();
    let dual_dims: Vec<Vec<usize>> = (0..j).map(|r| (0..j).map(|s| h[s][r]).collect()).collect();
    let canonical = |d: usize| {
        ComplexMatrix::from_fn(d * d, 1, |row, _| if row / d == row % d { ONE } else { ZERO })
    };
    let r: Vec<Vec<ComplexMatrix>> = (0..j).map(|r| (0..j).map(|s| canonical(h[s][r])).collect()).collect();
    let r_bar: Vec<Vec<ComplexMatrix>> = (0..j).map(|r| (0..j).map(|s| canonical(h[r][s])).collect()).collect();
    let mut residual: f64 = 0.0;
    for rr in 0..j {
        for s in 0..j {
            let d = h[rr][s];
            if d == 0 {
                continue;
            }
            let id = ComplexMatrix::identity(d);
            // (R̄* ⊗ 1_H)(1_H ⊗ R) on H_rs, using the t = r component of R at s.
            let first = kron(&r_bar[rr][s].adjoint(), &id).matmul(&kron(&id, &r[s][rr]));
            // (R* ⊗ 1_dH)(1_dH ⊗ R̄) on d(H)_sr = conj(H_rs).
            let second = kron(&r[s][rr].adjoint(), &id).matmul(&kron(&id, &r_bar[rr][s]));
            residual = residual
                .max(first.max_abs_diff(&id))
                .max(second.max_abs_diff(&id));
        }
    }
    BigradedDual {
        dual_dims,
        r,
        r_bar,
        residual,
    }
}

/// The `h_dim`-fold amplification `X^{⊕h}` with its canonical isometries.
#[derive(Clone, Debug, PartialEq)]
pub struct Amplification {
    pub object: UnitaryRep,
    pub isometries: Vec<ComplexMatrix>,
    /// Max of `|θ(ξ_i)* θ(ξ_j) - δ_ij|` and `|Σ θθ* - 1|`.
    pub residual: f64,
}

pub fn amplification(h_dim: usize, x: &UnitaryRep) -> Amplification {
    let object = x.amplify(h_dim);
    let d = x.dim;
    let isometries: Vec<ComplexMatrix> = (0..h_dim)
        .map(|i| ComplexMatrix::from_fn(h_dim * d, d, |r, c| if r == i * d + c { ONE } else { ZERO }))
        .collect();
    let mut residual: f64 = 0.0;
    let mut sum = ComplexMatrix::zeros(h_dim * d, h_dim * d);
    for (i, a) in isometries.iter().enumerate() {
        for (j, b) in isometries.iter().enumerate() {
            let target = if i == j { ComplexMatrix::identity(d) } else { ComplexMatrix::zeros(d, d) };
            residual = residual.max(a.adjoint().matmul(b).max_abs_diff(&target));
        }
        sum = sum.add(&a.matmul(&a.adjoint()));
    }
    residual = residual.max(sum.max_abs_diff(&ComplexMatrix::identity(h_dim * d)));
    Amplification {
        object,
        isometries,
        residual,
    }
}

/// Data `(F_pr, ψ^a_pr)` of a module functor from `X` to `Y`.
///
/// `ψ^a_pr: ⊕_s F_ps ⊗ F^X_sr(a) → ⊕_q F^Y_pq(a) ⊗ F_qr` has columns ordered
/// by `(s, i, j)` and rows by `(q, h, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleMorphismData {
    pub source_size: usize,
    pub target_size: usize,
    pub n_labels: usize,
    /// Base point `x_*` of the source module.
    pub source_base: usize,
    /// Base point of the target module, with `F(x_*)` containing it once.
    pub target_base: usize,
    /// `dims[p * |J_X| + r] = dim F_pr` for `p ∈ J_Y`, `r ∈ J_X`.
    pub dims: Vec<usize>,
    /// `psi[(a |J_Y| + p) |J_X| + r]`.
    pub psi: Vec<ComplexMatrix>,
}

impl ModuleMorphismData {
    pub fn dim(&self, p: usize, r: usize) -> usize {
        self.dims[p * self.source_size + r]
    }

    pub fn psi(&self, a: usize, p: usize, r: usize) -> &ComplexMatrix {
        &self.psi[(a * self.target_size + p) * self.source_size + r]
    }

    pub fn psi_mut(&mut self, a: usize, p: usize, r: usize) -> &mut ComplexMatrix {
        let i = (a * self.target_size + p) * self.source_size + r;
        &mut self.psi[i]
    }

    /// Column offsets over `s` for `ψ^a_pr`.
    pub fn col_offsets(&self, x: &BigradedFunctor, a: usize, p: usize, r: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.source_size + 1);
        let mut acc = 0;
        for s in 0..self.source_size {
            out.push(acc);
            acc += self.dim(p, s) * x.dim(a, s, r);
        }
        out.push(acc);
        out
    }

    /// Row offsets over `q` for `ψ^a_pr`.
    pub fn row_offsets(&self, y: &BigradedFunctor, a: usize, p: usize, r: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.target_size + 1);
        let mut acc = 0;
        for q in 0..self.target_size {
            out.push(acc);
            acc += y.dim(a, p, q) * self.dim(q, r);
        }
        out.push(acc);
        out
    }

    /// Image of `f_i ⊗ g_j ∈ F_ps ⊗ F^X_sr(a)` as `(q, h, k, coefficient)` entries.
    pub fn apply(
        &self,
        x: &BigradedFunctor,
        y: &BigradedFunctor,
        (a, p, r): (usize, usize, usize),
        (s, i, j): (usize, usize, usize),
    ) -> Vec<(usize, usize, usize, C64)> {
        let cols = self.col_offsets(x, a, p, r);
        let rows = self.row_offsets(y, a, p, r);
        let col = cols[s] + i * x.dim(a, s, r) + j;
        let psi = self.psi(a, p, r);
        let mut out = Vec::new();
        for q in 0..self.target_size {
            let nk = self.dim(q, r);
            for row in rows[q]..rows[q + 1] {
                let z = psi[(row, col)];
                if z != ZERO {
                    let local = row - rows[q];
                    out.push((q, local / nk, local % nk, z));
                }
            }
        }
        out
    }

    /// Conjugates the data by unitaries `U_pr` acting on the spaces `F_pr`:
    /// `ψ' = (⊕_q 1 ⊗ U_qr) ψ (⊕_s U_ps* ⊗ 1)`.
    pub fn gauge_transform(
        &self,
        x: &BigradedFunctor,
        y: &BigradedFunctor,
        unitaries: &[ComplexMatrix],
    ) -> ModuleMorphismData {
        let mut out = self.clone();
        let u = |p: usize, r: usize| &unitaries[p * self.source_size + r];
        for a in 0..self.n_labels {
            for p in 0..self.target_size {
                for r in 0..self.source_size {
                    let cols = self.col_offsets(x, a, p, r);
                    let rows = self.row_offsets(y, a, p, r);
                    let mut source = ComplexMatrix::zeros(cols[self.source_size], cols[self.source_size]);
                    for s in 0..self.source_size {
                        let block = kron(&u(p, s).adjoint(), &ComplexMatrix::identity(x.dim(a, s, r)));
                        for i in 0..block.rows() {
                            for j in 0..block.cols() {
                                source[(cols[s] + i, cols[s] + j)] = block[(i, j)];
                            }
                        }
                    }
                    let mut target = ComplexMatrix::zeros(rows[self.target_size], rows[self.target_size]);
                    for q in 0..self.target_size {
                        let block = kron(&ComplexMatrix::identity(y.dim(a, p, q)), u(q, r));
                        for i in 0..block.rows() {
                            for j in 0..block.cols() {
                                target[(rows[q] + i, rows[q] + j)] = block[(i, j)];
                            }
                        }
                    }
                    *out.psi_mut(a, p, r) = target.matmul(self.psi(a, p, r)).matmul(&source);
                }
            }
        }
        out
    }
}

/// Module functor induced by restricting representations from `H` to a
/// subgroup `K ⊂ H`, both viewed as module categories over `Rep(G)`.
pub fn morphism_from_restriction(
    cat: &CategoryPresentation,
    x: &SubgroupModule,
    y: &SubgroupModule,
    tol: f64,
) -> Result<ModuleMorphismData, ModuleError> {
    let hk: Vec<usize> = y
        .subgroup
        .elements
        .iter()
        .map(|&g| {
            x.subgroup.position(g).ok_or_else(|| ModuleError::NotNested {
                inner: y.subgroup.elements.clone(),
                outer: x.subgroup.elements.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    let k_in_h = x.subgroup.group.subgroup(&hk)?;
    let (jx, jy) = (x.functor.base_size, y.functor.base_size);
    let w: Vec<UnitaryRep> = x.irreps.irreps.iter().map(|w| restrict(w, &k_in_h)).collect();
    let z = &y.irreps.irreps;
    let mut spaces = Vec::with_capacity(jy * jx);
    for p in 0..jy {
        for r in 0..jx {
            let scale = C64::new((z[p].dim as f64).sqrt(), 0.0);
            let family: Vec<ComplexMatrix> = if p == y.irreps.trivial_label && r == x.irreps.trivial_label {
                vec![ComplexMatrix::identity(1)]
            } else {
                intertwiner_matrices(&z[p], &w[r], tol)?
                    .into_iter()
                    .map(|m| m.scale(scale))
                    .collect()
            };
            spaces.push(family);
        }
    }
    let space = |p: usize, r: usize| &spaces[p * jx + r];
    let mut data = ModuleMorphismData {
        source_size: jx,
        target_size: jy,
        n_labels: cat.len(),
        source_base: x.irreps.trivial_label,
        target_base: y.irreps.trivial_label,
        dims: spaces.iter().map(Vec::len).collect(),
        psi: Vec::new(),
    };
    let mut psi = Vec::with_capacity(cat.len() * jy * jx);
    for a in cat.labels() {
        let da = cat.dim(a);
        for p in 0..jy {
            for r in 0..jx {
                let cols = data.col_offsets(&x.functor, a, p, r);
                let rows = data.row_offsets(&y.functor, a, p, r);
                let (nr, nc) = (rows[jy], cols[jx]);
                if a == cat.trivial {
                    psi.push(ComplexMatrix::identity(nr));
                    continue;
                }
                let mut m = ComplexMatrix::zeros(nr, nc);
                let dp = z[p].dim as f64;
                for s in 0..jx {
                    for (i, f) in space(p, s).iter().enumerate() {
                        for (j, g) in x.basis(a, s, r).iter().enumerate() {
                            let col = cols[s] + i * x.basis(a, s, r).len() + j;
                            let source = g.matmul(f);
                            for q in 0..jy {
                                let ks = space(q, r);
                                for (hh, h) in y.basis(a, p, q).iter().enumerate() {
                                    for (kk, k) in ks.iter().enumerate() {
                                        let target = kron(&ComplexMatrix::identity(da), k).matmul(h);
                                        let row = rows[q] + hh * ks.len() + kk;
                                        m[(row, col)] = target.hs_inner(&source) / dp;
                                    }
                                }
                            }
                        }
                    }
                }
                psi.push(m);
            }
        }
    }
    data.psi = psi;
    Ok(data)
}

/// Checks the unit constraint, unitarity and the compatibility of `ψ` with
/// the coherence maps of both modules.
pub fn validate_morphism(
    cat: &CategoryPresentation,
    x: &BigradedFunctor,
    y: &BigradedFunctor,
    data: &ModuleMorphismData,
    tol: f64,
) -> Certificate {
    let mut h = ContentHasher::new();
    h.tag("morphism").tag(&x.fingerprint()).tag(&y.fingerprint());
    for &d in &data.dims {
        h.count(d);
    }
    for m in &data.psi {
        h.matrix(m);
    }
    let mut cert = Certificate::new("morphism", h.finish(), tol);
    let (jx, jy) = (data.source_size, data.target_size);
    let o = cat.trivial;

    let base_ok = (0..jy).all(|p| data.dim(p, data.source_base) == usize::from(p == data.target_base));
    cert.flag(
        "base point",
        "the functor sends the source base object to the target base object",
        base_ok,
        "",
    );

    let mut shape_ok = true;
    let mut unit: f64 = 0.0;
    let mut unitary: f64 = 0.0;
    for a in cat.labels() {
        for p in 0..jy {
            for r in 0..jx {
                let cols = data.col_offsets(x, a, p, r);
                let rows = data.row_offsets(y, a, p, r);
                let psi = data.psi(a, p, r);
                if psi.shape() != (rows[jy], cols[jx]) || rows[jy] != cols[jx] {
                    shape_ok = false;
                    continue;
                }
                if psi.rows() == 0 {
                    continue;
                }
                unitary = unitary.max(unitarity_residual(psi));
                if a == o {
                    unit = unit.max(psi.max_abs_diff(&ComplexMatrix::identity(psi.rows())));
                }
            }
        }
    }
    cert.flag(
        "morphism shape",
        "Σ_s dim F_ps dim F^X_sr(a) = Σ_q dim F^Y_pq(a) dim F_qr",
        shape_ok,
        "",
    );
    cert.residual("morphism unit", "ψ at the trivial label is the identity", unit, tol);
    cert.residual("morphism unitarity", "ψ maps are unitary", unitary, tol);

    let mut coherence: f64 = if shape_ok { 0.0 } else { f64::INFINITY };
    let mut worst_at = None;
    if shape_ok {
        for a in cat.labels() {
            for b in cat.labels() {
                for p in 0..jy {
                    for r in 0..jx {
                        let res = morphism_coherence_residual(cat, x, y, data, (a, b), (p, r));
                        if res > coherence {
                            coherence = res;
                            worst_at = Some((a, b, p, r));
                        }
                    }
                }
            }
        }
    }
    cert.residual(
        "morphism coherence",
        "ψ intertwines the coherence maps of source and target modules",
        coherence,
        tol,
    );
    if coherence > tol {
        if let Some(at) = worst_at {
            cert.detail(format!("diagram fails for (a, b, p, r) = {at:?}"));
        }
    }
    cert
}

/// Compares the two ways of mapping `F_ps ⊗ F^X_st(a) ⊗ F^X_tr(b)` into
/// `⊕_{c,k,q} F^Y_pq(c) ⊗ F_qr`.
pub fn morphism_coherence_residual(
    cat: &CategoryPresentation,
    x: &BigradedFunctor,
    y: &BigradedFunctor,
    data: &ModuleMorphismData,
    (a, b): (usize, usize),
    (p, r): (usize, usize),
) -> f64 {
    use std::collections::BTreeMap;
    let jx = data.source_size;
    let mut worst: f64 = 0.0;
    for s in 0..jx {
        for t in 0..jx {
            for i in 0..data.dim(p, s) {
                for j in 0..x.dim(a, s, t) {
                    for l in 0..x.dim(b, t, r) {
                        // key: (c, k, q, h, kk)
                        let mut one: BTreeMap<(usize, usize, usize, usize, usize), C64> = BTreeMap::new();
                        for (c, k, m, z) in x.apply_coherence(cat, (a, b, s, r), (t, j, l)) {
                            for (q, h, kk, w) in data.apply(x, y, (c, p, r), (s, i, m)) {
                                *one.entry((c, k, q, h, kk)).or_insert(ZERO) += z * w;
                            }
                        }
                        let mut two: BTreeMap<(usize, usize, usize, usize, usize), C64> = BTreeMap::new();
                        for (q1, h1, k1, z1) in data.apply(x, y, (a, p, t), (s, i, j)) {
                            for (q, h2, kk, z2) in data.apply(x, y, (b, q1, r), (t, k1, l)) {
                                for (c, k, h, z3) in y.apply_coherence(cat, (a, b, p, q), (q1, h1, h2)) {
                                    *two.entry((c, k, q, h, kk)).or_insert(ZERO) += z1 * z2 * z3;
                                }
                            }
                        }
                        for (key, v) in &one {
                            worst = worst.max((v - two.get(key).copied().unwrap_or(ZERO)).norm());
                        }
                        for (key, v) in &two {
                            if !one.contains_key(key) {
                                worst = worst.max(v.norm());
                            }
                        }
                    }
                }
            }
        }
    }
    worst
}
