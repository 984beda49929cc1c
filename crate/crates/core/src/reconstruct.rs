//! Spectral *-algebras reconstructed from module categories.
//!
//! For simple objects `x, y` of a module category the space
//! `A_x^y = ⊕_a F_xy(a) ⊗ H_a` has basis `e_(a,m,i)` with `m` running over the
//! chosen basis of `F_xy(a)` and `i` over the standard basis of `H_a`. The
//! product `A_x^y × A_y^z → A_x^z` composes through the coherence maps of the
//! module and the fusion isometries of the category:
//!
//! ```text
//! e_(a,m,i) e_(b,n,j) = Σ conj(Φ^{ab}_{xz}[(y,m,n) → (c,k,l)]) conj(ι^c_{ab,k}[(i,j), p]) e_(c,l,p)
//! ```

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modcat::{BigradedFunctor, ModuleMorphismData};
use crate::numkit::{hermitian_eigen, psd_check, rank, ComplexMatrix, ContentHasher, NumError, C64, ONE, ZERO};
use crate::tensorcat::CategoryPresentation;
use crate::verify::Certificate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("reconstruction needs a trivial associator, but ω({a}, {b}, {c}) = {value}")]
    NontrivialAssociator { a: usize, b: usize, c: usize, value: C64 },
    #[error("base label {label} is out of range ({count} simple objects)")]
    BaseLabel { label: usize, count: usize },
    #[error("module has {module} labels but the category has {category}")]
    LabelCount { module: usize, category: usize },
    #[error("algebra is not commutative (residual {0:e})")]
    NotCommutative(f64),
    #[error("probe element has a degenerate spectrum (gap {0:e}); try another seed")]
    DegenerateSpectrum(f64),
    #[error("expectation is not faithful: Gram matrix has eigenvalue {0:e}")]
    NotFaithful(f64),
    #[error("θ fails the {check} check at basis pair ({p}, {q}) with residual {residual:e}")]
    MorphismCheck {
        check: String,
        p: usize,
        q: usize,
        residual: f64,
    },
    #[error("target module must have a single simple object, found {0}")]
    NotSingleton(usize),
    #[error("eigenvector test expects {expected} morphism dimensions, got {got}")]
    MorphismDims { expected: usize, got: usize },
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub a: usize,
    pub m: usize,
    pub i: usize,
}

/// Position lookup for the basis of one `A_x^y`.
#[derive(Clone, Debug, PartialEq)]
struct BasisIndex {
    offsets: Vec<usize>,
    obj_dims: Vec<usize>,
    len: usize,
}

impl BasisIndex {
    fn new(cat: &CategoryPresentation, f: &BigradedFunctor, x: usize, y: usize) -> Self {
        let mut offsets = Vec::with_capacity(cat.len());
        let mut len = 0;
        for a in cat.labels() {
            offsets.push(len);
            len += f.dim(a, x, y) * cat.dim(a);
        }
        Self {
            offsets,
            obj_dims: (0..cat.len()).map(|a| cat.dim(a)).collect(),
            len,
        }
    }

    fn index(&self, a: usize, m: usize, i: usize) -> usize {
        self.offsets[a] + m * self.obj_dims[a] + i
    }
}

/// Basis of `A_x^y`: labels ascending, then `m`, then `i`.
pub fn spectral_basis(cat: &CategoryPresentation, f: &BigradedFunctor, x: usize, y: usize) -> Vec<BasisLabel> {
    let mut out = Vec::new();
    for a in cat.labels() {
        for m in 0..f.dim(a, x, y) {
            for i in 0..cat.dim(a) {
                out.push(BasisLabel { a, m, i });
            }
        }
    }
    out
}

fn check_inputs(cat: &CategoryPresentation, f: &BigradedFunctor, objects: &[usize]) -> Result<(), ReconstructError> {
    if f.n_labels != cat.len() {
        return Err(ReconstructError::LabelCount {
            module: f.n_labels,
            category: cat.len(),
        });
    }
    for &x in objects {
        if x >= f.base_size {
            return Err(ReconstructError::BaseLabel {
                label: x,
                count: f.base_size,
            });
        }
    }
    for a in cat.labels() {
        for b in cat.labels() {
            for c in cat.labels() {
                let value = cat.associator(a, b, c);
                if value != ONE {
                    return Err(ReconstructError::NontrivialAssociator { a, b, c, value });
                }
            }
        }
    }
    Ok(())
}

/// Product `e_p e_q` for `e_p ∈ A_x^y`, `e_q ∈ A_y^z`, as dense coordinates in `A_x^z`.
fn product_coordinates(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    (x, y, z): (usize, usize, usize),
    target: &BasisIndex,
    p: BasisLabel,
    q: BasisLabel,
) -> Vec<C64> {
    let mut out = vec![ZERO; target.len];
    let db = cat.dim(q.a);
    let row = p.i * db + q.i;
    for (c, k, l, phi) in f.apply_coherence(cat, (p.a, q.a, x, z), (y, p.m, q.m)) {
        let iota = &cat.isometries(p.a, q.a, c)[k];
        let phi = phi.conj();
        for pp in 0..cat.dim(c) {
            let w = iota[(row, pp)];
            if w != ZERO {
                out[target.index(c, l, pp)] += phi * w.conj();
            }
        }
    }
    out
}

fn coherence_to_unit(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    (a, b, r, t): (usize, usize, usize, usize),
    col: (usize, usize, usize),
) -> C64 {
    f.apply_coherence(cat, (a, b, r, t), col)
        .into_iter()
        .find(|&(c, _, _, _)| c == cat.trivial)
        .map_or(ZERO, |(_, _, _, z)| z)
}

/// Star of `e_p ∈ A_x^y` as coordinates in `A_y^x`. With `via_duality` the
/// coefficients come from the conjugate solution `R̄_a` instead of `σ_a`;
/// both routes agree for a consistent presentation.
fn star_coordinates(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    (x, y): (usize, usize),
    target: &BasisIndex,
    p: BasisLabel,
    via_duality: bool,
) -> Vec<C64> {
    let a = p.a;
    let abar = cat.dual(a);
    let dabar = cat.dim(abar);
    let mut out = vec![ZERO; target.len];
    let weights: Vec<C64> = if via_duality {
        let kappa = cat.kappa(a).conj();
        let r_bar = &cat.conj_solutions[a].r_bar;
        (0..dabar).map(|j| kappa * r_bar[(p.i * dabar + j, 0)]).collect()
    } else {
        let sigma = cat.sigma(a).conj();
        let iota = &cat.isometries(a, abar, cat.trivial)[0];
        (0..dabar).map(|j| iota[(p.i * dabar + j, 0)] / sigma).collect()
    };
    for n in 0..f.dim(abar, y, x) {
        let phi = coherence_to_unit(cat, f, (abar, a, y, y), (x, n, p.m));
        if phi == ZERO {
            continue;
        }
        for (j, &w) in weights.iter().enumerate() {
            out[target.index(abar, n, j)] = phi * w;
        }
    }
    out
}

fn sparse(v: Vec<C64>) -> Vec<(usize, C64)> {
    v.into_iter().enumerate().filter(|&(_, z)| z != ZERO).collect()
}

/// Structure constants, unit and involution of a finite-dimensional *-algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraTable {
    pub dim: usize,
    /// `products[p * dim + q]` lists the nonzero `(r, c)` with `e_p e_q = Σ c e_r`.
    pub products: Vec<Vec<(usize, C64)>>,
    pub unit_vector: Vec<C64>,
    /// `(Σ v_p e_p)* = Σ conj(v_p) S[p][r] e_r`.
    pub star_matrix: ComplexMatrix,
}

impl AlgebraTable {
    pub fn product_of_basis(&self, p: usize, q: usize) -> &[(usize, C64)] {
        &self.products[p * self.dim + q]
    }

    pub fn mul(&self, u: &[C64], v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for (p, &up) in u.iter().enumerate() {
            if up == ZERO {
                continue;
            }
            for (q, &vq) in v.iter().enumerate() {
                if vq == ZERO {
                    continue;
                }
                let w = up * vq;
                for &(r, c) in self.product_of_basis(p, q) {
                    out[r] += w * c;
                }
            }
        }
        out
    }

    pub fn star(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for (p, &vp) in v.iter().enumerate() {
            if vp == ZERO {
                continue;
            }
            let w = vp.conj();
            for (r, slot) in out.iter_mut().enumerate() {
                *slot += w * self.star_matrix[(p, r)];
            }
        }
        out
    }

    pub fn basis_vector(&self, p: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim];
        v[p] = ONE;
        v
    }

    /// Matrix of left multiplication by `h`; column `q` holds `h e_q`.
    pub fn left_multiplication(&self, h: &[C64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for q in 0..self.dim {
            let col = self.mul(h, &self.basis_vector(q));
            for (r, z) in col.into_iter().enumerate() {
                m[(r, q)] = z;
            }
        }
        m
    }

    /// Residuals of the *-algebra axioms over all basis elements.
    pub fn axiom_residuals(&self) -> AxiomResiduals {
        let n = self.dim;
        let mut res = AxiomResiduals::default();
        let diff = |u: &[C64], v: &[C64]| u.iter().zip(v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let stars: Vec<Vec<C64>> = (0..n).map(|p| self.star(&self.basis_vector(p))).collect();
        let mut left = vec![ZERO; n];
        let mut right = vec![ZERO; n];
        for p in 0..n {
            let ep = self.basis_vector(p);
            res.left_unit = res.left_unit.max(diff(&self.mul(&self.unit_vector, &ep), &ep));
            res.right_unit = res.right_unit.max(diff(&self.mul(&ep, &self.unit_vector), &ep));
            res.involution = res.involution.max(diff(&self.star(&stars[p]), &ep));
            for q in 0..n {
                let mut pq = vec![ZERO; n];
                for &(r, c) in self.product_of_basis(p, q) {
                    pq[r] = c;
                }
                let lhs_star = self.star(&pq);
                let rhs_star = self.mul(&stars[q], &stars[p]);
                res.anti_multiplicative = res.anti_multiplicative.max(diff(&lhs_star, &rhs_star));
                for r in 0..n {
                    left.iter_mut().for_each(|z| *z = ZERO);
                    right.iter_mut().for_each(|z| *z = ZERO);
                    for &(s, c) in self.product_of_basis(p, q) {
                        for &(t, d) in self.product_of_basis(s, r) {
                            left[t] += c * d;
                        }
                    }
                    for &(s, c) in self.product_of_basis(q, r) {
                        for &(t, d) in self.product_of_basis(p, s) {
                            right[t] += c * d;
                        }
                    }
                    res.associativity = res.associativity.max(diff(&left, &right));
                }
            }
        }
        res.unit_star = diff(&self.star(&self.unit_vector), &self.unit_vector);
        res
    }

    pub fn commutativity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..self.dim {
            for q in 0..p {
                let a = self.mul(&self.basis_vector(p), &self.basis_vector(q));
                let b = self.mul(&self.basis_vector(q), &self.basis_vector(p));
                for (x, y) in a.iter().zip(&b) {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        worst
    }

    fn hash_into(&self, h: &mut ContentHasher) {
        h.count(self.dim);
        for row in &self.products {
            h.count(row.len());
            for &(r, c) in row {
                h.count(r).complex(c);
            }
        }
        for &z in &self.unit_vector {
            h.complex(z);
        }
        h.matrix(&self.star_matrix);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxiomResiduals {
    pub associativity: f64,
    pub left_unit: f64,
    pub right_unit: f64,
    pub involution: f64,
    pub anti_multiplicative: f64,
    pub unit_star: f64,
}

/// The algebra `A_y = A_y^y` at a simple base object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralAlgebra {
    pub base_object: usize,
    pub basis: Vec<BasisLabel>,
    /// Label `a` of each basis element.
    pub grading: Vec<usize>,
    /// Position of `e_(o,0,0)`; the conditional expectation reads this coordinate.
    pub unit_index: usize,
    pub table: AlgebraTable,
}

impl SpectralAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn mul(&self, u: &[C64], v: &[C64]) -> Vec<C64> {
        self.table.mul(u, v)
    }

    pub fn star(&self, v: &[C64]) -> Vec<C64> {
        self.table.star(v)
    }

    pub fn unit(&self) -> &[C64] {
        &self.table.unit_vector
    }

    /// Dense structure constant `c[p][q][r]`.
    pub fn structure_constant(&self, p: usize, q: usize, r: usize) -> C64 {
        self.table
            .product_of_basis(p, q)
            .iter()
            .find(|&&(rr, _)| rr == r)
            .map_or(ZERO, |&(_, c)| c)
    }

    /// Nonzero structure constants as `(p, q, r, c)`.
    pub fn triplets(&self) -> Vec<(usize, usize, usize, C64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for p in 0..n {
            for q in 0..n {
                for &(r, c) in self.table.product_of_basis(p, q) {
                    out.push((p, q, r, c));
                }
            }
        }
        out
    }

    /// Number of basis elements carrying each label.
    pub fn label_dims(&self, n_labels: usize) -> Vec<usize> {
        let mut out = vec![0; n_labels];
        for &a in &self.grading {
            out[a] += 1;
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        let mut h = ContentHasher::new();
        h.tag("algebra").count(self.base_object);
        for b in &self.basis {
            h.count(b.a).count(b.m).count(b.i);
        }
        self.table.hash_into(&mut h);
        h.finish()
    }
}

/// Builds `A_y^y`. Categories with a nontrivial associator are rejected.
pub fn build_algebra(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    y: usize,
) -> Result<SpectralAlgebra, ReconstructError> {
    check_inputs(cat, f, &[y])?;
    let basis = spectral_basis(cat, f, y, y);
    let index = BasisIndex::new(cat, f, y, y);
    let n = basis.len();
    let mut products = Vec::with_capacity(n * n);
    for &p in &basis {
        for &q in &basis {
            products.push(sparse(product_coordinates(cat, f, (y, y, y), &index, p, q)));
        }
    }
    let mut star_matrix = ComplexMatrix::zeros(n, n);
    for (row, &p) in basis.iter().enumerate() {
        for (r, z) in star_coordinates(cat, f, (y, y), &index, p, false).into_iter().enumerate() {
            star_matrix[(row, r)] = z;
        }
    }
    let unit_index = index.index(cat.trivial, 0, 0);
    let mut unit_vector = vec![ZERO; n];
    unit_vector[unit_index] = ONE;
    Ok(SpectralAlgebra {
        base_object: y,
        grading: basis.iter().map(|b| b.a).collect(),
        basis,
        unit_index,
        table: AlgebraTable {
            dim: n,
            products,
            unit_vector,
            star_matrix,
        },
    })
}

/// Largest difference between the star computed from `σ_a` and the star
/// computed from the conjugate solutions, over all basis elements of `A_x^y`.
pub fn star_route_residual(cat: &CategoryPresentation, f: &BigradedFunctor, x: usize, y: usize) -> f64 {
    let target = BasisIndex::new(cat, f, y, x);
    let mut worst: f64 = 0.0;
    for p in spectral_basis(cat, f, x, y) {
        let a = star_coordinates(cat, f, (x, y), &target, p, false);
        let b = star_coordinates(cat, f, (x, y), &target, p, true);
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).norm());
        }
    }
    worst
}

/// Conditional expectation onto the invariant part: the `e_(o,0,0)` coordinate.
pub fn conditional_expectation(alg: &SpectralAlgebra, v: &[C64]) -> C64 {
    v[alg.unit_index]
}

/// `G[p][q] = E(e_p* e_q)` from the structure constants.
pub fn gram_matrix(alg: &SpectralAlgebra) -> ComplexMatrix {
    let n = alg.dim();
    let stars: Vec<Vec<C64>> = (0..n).map(|p| alg.star(&alg.table.basis_vector(p))).collect();
    ComplexMatrix::from_fn(n, n, |p, q| {
        let mut z = ZERO;
        for (r, &s) in stars[p].iter().enumerate() {
            if s == ZERO {
                continue;
            }
            for &(t, c) in alg.table.product_of_basis(r, q) {
                if t == alg.unit_index {
                    z += s * c;
                }
            }
        }
        z
    })
}

/// Closed form of the Gram matrix: it is diagonal in `(a, i)` and on each
/// label block equals the pairing of the coherence maps into the unit,
/// weighted by `|κ_a| |κ'_a| / dim_q(a)`.
pub fn gram_matrix_closed_form(cat: &CategoryPresentation, f: &BigradedFunctor, alg: &SpectralAlgebra) -> ComplexMatrix {
    let y = alg.base_object;
    let n = alg.dim();
    ComplexMatrix::from_fn(n, n, |p, q| {
        let (bp, bq) = (alg.basis[p], alg.basis[q]);
        if bp.a != bq.a || bp.i != bq.i {
            return ZERO;
        }
        let a = bp.a;
        let abar = cat.dual(a);
        let weight = cat.kappa(a).norm() * cat.kappa_bar(a).norm() / cat.qdim[a];
        let mut z = ZERO;
        for nn in 0..f.dim(abar, y, y) {
            let u = coherence_to_unit(cat, f, (abar, a, y, y), (y, nn, bp.m));
            let v = coherence_to_unit(cat, f, (abar, a, y, y), (y, nn, bq.m));
            z += u * v.conj();
        }
        z * weight
    })
}

/// Positivity certificate: Gram matrix by two routes, its PSD check, and
/// `(E ⊗ id)(X* X) ≥ 0` for seeded random `X ∈ M_k(A)` for each requested `k`.
pub fn cp_certificate(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    alg: &SpectralAlgebra,
    amplification_sizes: &[usize],
    seed: u64,
    tol: f64,
) -> Certificate {
    let mut cert = Certificate::new("positivity", alg.fingerprint(), tol).with_seed(seed);
    let gram = gram_matrix(alg);
    let closed = gram_matrix_closed_form(cat, f, alg);
    cert.residual(
        "gram closed form",
        "E(f* g) equals the inner product of spectral components divided by the quantum dimension",
        gram.max_abs_diff(&closed),
        tol,
    );
    match psd_check(&gram, tol) {
        Ok(r) => {
            cert.lower_bound("gram positivity", "the expectation is positive on f* f", r.min_eigenvalue, -tol);
        }
        Err(e) => {
            cert.flag("gram positivity", "the expectation is positive on f* f", false, e.to_string());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = alg.dim();
    for &k in amplification_sizes {
        let mut worst = f64::INFINITY;
        let mut failure = String::new();
        for _ in 0..4 {
            let x: Vec<Vec<C64>> = (0..k * k)
                .map(|_| (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
                .collect();
            let stars: Vec<Vec<C64>> = x.iter().map(|v| alg.star(v)).collect();
            let m = ComplexMatrix::from_fn(k, k, |r, c| {
                (0..k)
                    .map(|j| conditional_expectation(alg, &alg.mul(&stars[j * k + r], &x[j * k + c])))
                    .sum()
            });
            match psd_check(&m, tol.max(1e-9) * (n * k) as f64) {
                Ok(r) => worst = worst.min(r.min_eigenvalue),
                Err(e) => {
                    failure = e.to_string();
                    worst = f64::NEG_INFINITY;
                }
            }
        }
        let ok = cert.lower_bound(
            &format!("complete positivity k={k}"),
            "E ⊗ id is positive on X* X for X in M_k(A)",
            worst,
            -tol,
        );
        if !ok && !failure.is_empty() {
            cert.detail(failure);
        }
    }
    cert
}

/// The space `A_x^y` for possibly different simple objects, with its
/// `A_y`-valued inner product evaluated through the expectation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBimodule {
    pub source: usize,
    pub target: usize,
    pub basis: Vec<BasisLabel>,
    pub grading: Vec<usize>,
    /// `⟨e_p, e_q⟩ = E_y(e_p* e_q)`.
    pub inner_product: ComplexMatrix,
}

impl SpectralBimodule {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Dimension of the component with label `o`.
    pub fn invariant_dim(&self, trivial: usize) -> usize {
        self.grading.iter().filter(|&&a| a == trivial).count()
    }
}

pub fn build_bimodule(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    x: usize,
    y: usize,
) -> Result<SpectralBimodule, ReconstructError> {
    check_inputs(cat, f, &[x, y])?;
    let basis = spectral_basis(cat, f, x, y);
    let star_index = BasisIndex::new(cat, f, y, x);
    let algebra_index = BasisIndex::new(cat, f, y, y);
    let star_basis = spectral_basis(cat, f, y, x);
    let unit = algebra_index.index(cat.trivial, 0, 0);
    let n = basis.len();
    let stars: Vec<Vec<C64>> = basis
        .iter()
        .map(|&p| star_coordinates(cat, f, (x, y), &star_index, p, false))
        .collect();
    let inner_product = ComplexMatrix::from_fn(n, n, |p, q| {
        let mut z = ZERO;
        for (r, &s) in stars[p].iter().enumerate() {
            if s != ZERO {
                z += s * product_coordinates(cat, f, (y, x, y), &algebra_index, star_basis[r], basis[q])[unit];
            }
        }
        z
    });
    Ok(SpectralBimodule {
        source: x,
        target: y,
        grading: basis.iter().map(|b| b.a).collect(),
        basis,
        inner_product,
    })
}

/// The algebra of the direct sum of several simple objects: the block matrix
/// of all `A_u^v`, with blockwise multiplication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkingAlgebra {
    pub objects: Vec<usize>,
    /// `(u, v)` block of each basis element, as positions in `objects`.
    pub blocks: Vec<(usize, usize)>,
    pub basis: Vec<BasisLabel>,
    pub table: AlgebraTable,
}

impl LinkingAlgebra {
    /// Basis positions belonging to block `(u, v)`.
    pub fn block_positions(&self, u: usize, v: usize) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b == (u, v))
            .map(|(p, _)| p)
            .collect()
    }
}

pub fn build_linking_algebra(
    cat: &CategoryPresentation,
    f: &BigradedFunctor,
    objects: &[usize],
) -> Result<LinkingAlgebra, ReconstructError> {
    check_inputs(cat, f, objects)?;
    let k = objects.len();
    let mut blocks = Vec::new();
    let mut basis = Vec::new();
    let mut offsets = vec![0; k * k];
    for u in 0..k {
        for v in 0..k {
            offsets[u * k + v] = basis.len();
            for b in spectral_basis(cat, f, objects[u], objects[v]) {
                basis.push(b);
                blocks.push((u, v));
            }
        }
    }
    let n = basis.len();
    let index: Vec<BasisIndex> = (0..k * k)
        .map(|uv| BasisIndex::new(cat, f, objects[uv / k], objects[uv % k]))
        .collect();
    let mut products = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            let (u, v) = blocks[p];
            let (v2, w) = blocks[q];
            if v != v2 {
                products.push(Vec::new());
                continue;
            }
            let local = product_coordinates(
                cat,
                f,
                (objects[u], objects[v], objects[w]),
                &index[u * k + w],
                basis[p],
                basis[q],
            );
            let off = offsets[u * k + w];
            products.push(sparse(local).into_iter().map(|(r, c)| (r + off, c)).collect());
        }
    }
    let mut star_matrix = ComplexMatrix::zeros(n, n);
    for p in 0..n {
        let (u, v) = blocks[p];
        let local = star_coordinates(cat, f, (objects[u], objects[v]), &index[v * k + u], basis[p], false);
        let off = offsets[v * k + u];
        for (r, z) in local.into_iter().enumerate() {
            star_matrix[(p, r + off)] = z;
        }
    }
    let mut unit_vector = vec![ZERO; n];
    for u in 0..k {
        unit_vector[offsets[u * k + u] + index[u * k + u].index(cat.trivial, 0, 0)] = ONE;
    }
    Ok(LinkingAlgebra {
        objects: objects.to_vec(),
        blocks,
        basis,
        table: AlgebraTable {
            dim: n,
            products,
            unit_vector,
            star_matrix,
        },
    })
}

/// Minimal idempotents of a commutative algebra with faithful expectation.
///
/// A random self-adjoint element is diagonalized in the inner product
/// `⟨u, v⟩ = E(u* v)`; its eigenvectors are multiples of the minimal
/// idempotents.
pub fn minimal_idempotents(alg: &SpectralAlgebra, seed: u64, tol: f64) -> Result<Vec<Vec<C64>>, ReconstructError> {
    let comm = alg.table.commutativity_residual();
    if comm > tol {
        return Err(ReconstructError::NotCommutative(comm));
    }
    let n = alg.dim();
    let gram = gram_matrix(alg);
    let gram = gram.add(&gram.adjoint()).scale(C64::new(0.5, 0.0));
    let (values, vectors) = hermitian_eigen(&gram, tol)?;
    if values[0] <= tol {
        return Err(ReconstructError::NotFaithful(values[0]));
    }
    let root = |power: f64| {
        let d = ComplexMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i].powf(power), 0.0) } else { ZERO });
        vectors.matmul(&d).matmul(&vectors.adjoint())
    };
    let (half, inv_half) = (root(0.5), root(-0.5));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let hs = alg.star(&h);
    let h: Vec<C64> = h.iter().zip(&hs).map(|(x, y)| x + y).collect();
    let k = half.matmul(&alg.table.left_multiplication(&h)).matmul(&inv_half);
    let k = k.add(&k.adjoint()).scale(C64::new(0.5, 0.0));
    let (spectrum, eigvecs) = hermitian_eigen(&k, tol)?;
    let gap = spectrum.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if gap < 1e-6 {
        return Err(ReconstructError::DegenerateSpectrum(gap));
    }
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let w = inv_half.apply(&eigvecs.column(c));
        let ww = alg.mul(&w, &w);
        let pivot = (0..n)
            .max_by(|&i, &j| w[i].norm().total_cmp(&w[j].norm()))
            .expect("nonempty");
        let scale = ww[pivot] / w[pivot];
        out.push(w.iter().map(|z| z / scale).collect());
    }
    Ok(out)
}

/// Max residual of the relations `e_i e_j = δ_ij e_i`, `e_i* = e_i`, `Σ e_i = 1`.
pub fn idempotent_residual(alg: &SpectralAlgebra, idempotents: &[Vec<C64>]) -> f64 {
    let diff = |u: &[C64], v: &[C64]| u.iter().zip(v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let zero = vec![ZERO; alg.dim()];
    let mut worst: f64 = 0.0;
    let mut sum = zero.clone();
    for (i, e) in idempotents.iter().enumerate() {
        worst = worst.max(diff(&alg.star(e), e));
        for (s, z) in sum.iter_mut().zip(e) {
            *s += z;
        }
        for (j, g) in idempotents.iter().enumerate() {
            let prod = alg.mul(e, g);
            worst = worst.max(diff(&prod, if i == j { e } else { &zero }));
        }
    }
    worst.max(diff(&sum, alg.unit()))
}

/// The equivariant map `θ: A^X → A^Y` induced by a module functor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraMorphism {
    pub source: SpectralAlgebra,
    pub target: SpectralAlgebra,
    /// Column `p` holds the coordinates of `θ(e_p)`.
    pub matrix: ComplexMatrix,
}

impl AlgebraMorphism {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.apply(v)
    }

    pub fn image_rank(&self, tol: f64) -> usize {
        rank(&self.matrix, tol)
    }
}

/// The matrix of `θ(e_(a,m,i)) = Σ_l conj(ψ^a[(*, 0, m) → (•, l, 0)]) e_(a,l,i)`.
pub fn morphism_matrix(
    cat: &CategoryPresentation,
    x: &BigradedFunctor,
    y: &BigradedFunctor,
    data: &ModuleMorphismData,
    source: &SpectralAlgebra,
    target: &SpectralAlgebra,
) -> ComplexMatrix {
    let (star, bullet) = (data.source_base, data.target_base);
    let index = BasisIndex::new(cat, y, bullet, bullet);
    let mut m = ComplexMatrix::zeros(target.dim(), source.dim());
    for (col, b) in source.basis.iter().enumerate() {
        for (q, l, k, z) in data.apply(x, y, (b.a, bullet, star), (star, 0, b.m)) {
            if q == bullet && k == 0 {
                m[(index.index(b.a, l, b.i), col)] = z.conj();
            }
        }
    }
    m
}

/// Builds both algebras and `θ`, and checks that `θ` is a unital,
/// multiplicative, star-preserving and grading-preserving map.
pub fn build_morphism(
    cat: &CategoryPresentation,
    x: &BigradedFunctor,
    y: &BigradedFunctor,
    data: &ModuleMorphismData,
    tol: f64,
) -> Result<AlgebraMorphism, ReconstructError> {
    let source = build_algebra(cat, x, data.source_base)?;
    let target = build_algebra(cat, y, data.target_base)?;
    let matrix = morphism_matrix(cat, x, y, data, &source, &target);
    let theta = AlgebraMorphism { source, target, matrix };
    let cert = morphism_certificate(&theta, tol);
    if let Some(fail) = cert.failures().next() {
        let (p, q) = parse_pair(&fail.detail);
        return Err(ReconstructError::MorphismCheck {
            check: fail.name.clone(),
            p,
            q,
            residual: fail.value.unwrap_or(f64::NAN),
        });
    }
    Ok(theta)
}

fn parse_pair(detail: &str) -> (usize, usize) {
    let nums: Vec<usize> = detail
        .split(|c: char| !c.is_ascii_digit())
        .filter_map(|s| s.parse().ok())
        .collect();
    (nums.first().copied().unwrap_or(0), nums.get(1).copied().unwrap_or(0))
}

pub fn morphism_certificate(theta: &AlgebraMorphism, tol: f64) -> Certificate {
    let mut h = ContentHasher::new();
    h.tag("theta").tag(&theta.source.fingerprint()).tag(&theta.target.fingerprint());
    h.matrix(&theta.matrix);
    let mut cert = Certificate::new("algebra morphism", h.finish(), tol);
    let (src, dst) = (&theta.source, &theta.target);
    let diff = |u: &[C64], v: &[C64]| u.iter().zip(v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);

    cert.residual(
        "theta unital",
        "θ(1) = 1",
        diff(&theta.apply(src.unit()), dst.unit()),
        tol,
    );
    let n = src.dim();
    let images: Vec<Vec<C64>> = (0..n).map(|p| theta.apply(&src.table.basis_vector(p))).collect();
    let mut mult = (0.0f64, (0, 0));
    let mut star = (0.0f64, (0, 0));
    for p in 0..n {
        let s = diff(&theta.apply(&src.star(&src.table.basis_vector(p))), &dst.star(&images[p]));
        if s > star.0 {
            star = (s, (p, p));
        }
        for q in 0..n {
            let lhs = theta.apply(&src.mul(&src.table.basis_vector(p), &src.table.basis_vector(q)));
            let rhs = dst.mul(&images[p], &images[q]);
            let r = diff(&lhs, &rhs);
            if r > mult.0 {
                mult = (r, (p, q));
            }
        }
    }
    if !cert.residual("theta multiplicative", "θ(fg) = θ(f) θ(g)", mult.0, tol) {
        cert.detail(format!("worst pair ({}, {})", mult.1 .0, mult.1 .1));
    }
    if !cert.residual("theta star", "θ(f*) = θ(f)*", star.0, tol) {
        cert.detail(format!("worst pair ({}, {})", star.1 .0, star.1 .1));
    }
    let mut graded = true;
    for (p, img) in images.iter().enumerate() {
        for (r, z) in img.iter().enumerate() {
            if z.norm() > tol && dst.grading[r] != src.grading[p] {
                graded = false;
            }
        }
    }
    cert.flag("theta grading", "θ is equivariant: it preserves spectral labels", graded, "");
    cert
}

/// Checks `Σ_r dim F_r dim F^X_rs(a) = dim F^Y(a) dim F_s` for every `s`,
/// where `Y` has a single simple object and `F_r = dim Mor(y, F(x_r))`.
pub fn eigenvector_test(
    x: &BigradedFunctor,
    y: &BigradedFunctor,
    morphism_dims: &[usize],
    a: usize,
) -> Result<Certificate, ReconstructError> {
    if y.base_size != 1 {
        return Err(ReconstructError::NotSingleton(y.base_size));
    }
    if morphism_dims.len() != x.base_size {
        return Err(ReconstructError::MorphismDims {
            expected: x.base_size,
            got: morphism_dims.len(),
        });
    }
    let mut h = ContentHasher::new();
    h.tag("eigenvector").tag(&x.fingerprint()).tag(&y.fingerprint()).count(a);
    for &d in morphism_dims {
        h.count(d);
    }
    let mut cert = Certificate::new("eigenvector", h.finish(), 0.0);
    let eigenvalue = y.dim(a, 0, 0) as i64;
    let residuals: Vec<i64> = x
        .base()
        .map(|s| {
            let lhs: i64 = x.base().map(|r| (morphism_dims[r] * x.dim(a, r, s)) as i64).sum();
            lhs - eigenvalue * morphism_dims[s] as i64
        })
        .collect();
    let worst = residuals.iter().map(|r| r.unsigned_abs()).max().unwrap_or(0);
    cert.residual(
        "integer eigenvector",
        "the morphism dimensions form an eigenvector of the multiplicity matrix with eigenvalue dim F^Y(a)",
        worst as f64,
        0.0,
    );
    cert.detail(format!("eigenvalue {eigenvalue}, residual vector {residuals:?}"));
    Ok(cert)
}

/// Labels `c` that occur in some product of basis elements with labels `a, b`
/// but have `N_ab^c = 0`.
pub fn grading_violations(cat: &CategoryPresentation, alg: &SpectralAlgebra, tol: f64) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    let n = alg.dim();
    for p in 0..n {
        for q in 0..n {
            for &(r, c) in alg.table.product_of_basis(p, q) {
                let (a, b, cc) = (alg.grading[p], alg.grading[q], alg.grading[r]);
                if c.norm() > tol && cat.multiplicity(a, b, cc) == 0 {
                    out.insert((a, b, cc));
                }
            }
        }
    }
    out
}

/// Whether the star sends every label `a` component into label `ā`.
pub fn star_respects_grading(cat: &CategoryPresentation, alg: &SpectralAlgebra, tol: f64) -> bool {
    let n = alg.dim();
    (0..n).all(|p| (0..n).all(|r| alg.table.star_matrix[(p, r)].norm() <= tol || alg.grading[r] == cat.dual(alg.grading[p])))
}
