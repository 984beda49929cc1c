//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Every tolerance is pinned in the constants below. Expected values come from
//! oracles computed here (character averages, evaluation on group elements,
//! coset counts) rather than from the code under test.

use std::path::PathBuf;
use std::process::ExitCode;

use qhs_core::grouprep::{extract_irreps, FiniteGroup, IrrepTable, Subgroup};
use qhs_core::modcat::{
    module_from_pointed, module_from_subgroup, morphism_from_restriction, validate_module, validate_morphism,
    BigradedFunctor, SubgroupModule, ValidationOptions,
};
use qhs_core::numkit::{hermitian_eigenvalues, polar_unitary, rank};
use qhs_core::reconstruct::{
    build_algebra, build_bimodule, build_morphism, conditional_expectation, cp_certificate, eigenvector_test,
    gram_matrix, gram_matrix_closed_form, minimal_idempotents, morphism_certificate, SpectralAlgebra,
};
use qhs_core::tensorcat::{verify_presentation, CategoryPresentation, CategorySource, PointedFusionData};
use qhs_core::{Certificate, ComplexMatrix, C64};
use qhs_io::{load_project, samples::shipped_projects, LoadOptions, ModuleKind, Project};

const SNAKE_TOL: f64 = 1e-9;
const AXIOM_TOL: f64 = 1e-8;
const AXIOM_MAX_DIM: usize = 40;
const CLASSICAL_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-9;
const EXPECTATION_TOL: f64 = 1e-9;
const THETA_TOL: f64 = 1e-9;
const GAUGE_TOL: f64 = 1e-12;
const CERT_TOL: f64 = 1e-9;
const PERTURBATION: f64 = 1e-3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("snake identities for every irreducible", c1_snakes),
        ("subgroup algebras have dimension |G|/|H|", c2_subgroup_dimensions),
        ("classical round trip gives C(G)", c3_classical),
        ("*-algebra axioms on every basis element", c4_axioms),
        ("complete positivity of the expectation", c5_positivity),
        ("invariant components match morphism spaces", c6_fixed_points),
        ("restriction gives a unital equivariant *-homomorphism", c7_restriction),
        ("integer eigenvector for the standard representation", c8_eigenvector),
        ("rescaled duality leaves the algebra bit-identical", c9_rescaling),
        ("injected perturbations are detected", c10_fault_injection),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rep_category(g: &FiniteGroup) -> (IrrepTable, CategoryPresentation) {
    let table = extract_irreps(g, 0).expect("irreps");
    let cat = CategoryPresentation::from_group(g, &table, CERT_TOL).expect("category");
    (table, cat)
}

fn pointed_z4(p: usize) -> CategoryPresentation {
    CategoryPresentation::from_pointed(&PointedFusionData::cyclic(4, p), CERT_TOL).expect("pointed category")
}

fn subgroup_module(cat: &CategoryPresentation, h: &Subgroup) -> SubgroupModule {
    module_from_subgroup(cat, h, 0, CERT_TOL).expect("subgroup module")
}

fn projects_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../projects")
}

fn shipped() -> Vec<Project> {
    shipped_projects()
        .expect("shipped projects")
        .into_iter()
        .map(|(name, _)| load_project(projects_dir().join(name), LoadOptions::default()).expect(name))
        .collect()
}

fn character(table: &IrrepTable, a: usize, g: usize) -> C64 {
    table.irreps[a].matrices[g].trace()
}

/// `(1/|H|) Σ_h χ(h)`, the dimension of the `H`-fixed vectors.
fn fixed_dim(table: &IrrepTable, a: usize, h: &Subgroup) -> usize {
    let avg: C64 = h.elements.iter().map(|&g| character(table, a, g)).sum::<C64>() / h.order() as f64;
    avg.re.round() as usize
}

fn max_diff(u: &[C64], v: &[C64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Evaluates a spectral element as a function on the group:
/// `e_(a,m,i) ↦ (g ↦ Σ_r conj(f_m[r]) u_a(g)[r, i])`, where `f_m` is the
/// module basis vector of `F_yy(a)` and `y` is one-dimensional.
fn evaluate(cat: &CategoryPresentation, m: &SubgroupModule, alg: &SpectralAlgebra, v: &[C64]) -> Vec<C64> {
    let CategorySource::Group { group, table } = &cat.source else {
        panic!("evaluation needs a group category");
    };
    let y = alg.base_object;
    group
        .elements()
        .map(|g| {
            let mut z = ZERO;
            for (p, b) in alg.basis.iter().enumerate() {
                if v[p] == ZERO {
                    continue;
                }
                let f = &m.basis(b.a, y, y)[b.m];
                let u = &table.irreps[b.a].matrices[g];
                let val: C64 = (0..cat.dim(b.a)).map(|r| f[(r, 0)].conj() * u[(r, b.i)]).sum();
                z += v[p] * val;
            }
            z
        })
        .collect()
}

/// Deterministic pseudo-random complex numbers in the unit square.
fn sample(seed: usize, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let t = (seed * 7919 + k * 104729) as f64;
            C64::new((t * 0.618_034).sin(), (t * 0.414_214 + 1.0).cos())
        })
        .collect()
}

fn label_of_dim(cat: &CategoryPresentation, d: usize) -> usize {
    cat.labels().find(|&a| cat.dim(a) == d).expect("label of requested dimension")
}

fn c1_snakes() -> Outcome {
    let (_, s3) = rep_category(&FiniteGroup::symmetric(3));
    let (_, z4) = rep_category(&FiniteGroup::cyclic(4));
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, cat) in [("Rep(S3)", s3), ("Rep(Z4)", z4), ("Vec(Z4)", pointed_z4(0)), ("Vec(Z4, p=1)", pointed_z4(1))] {
        for a in cat.labels() {
            let (l, r) = cat.snake_residuals(a);
            count += 1;
            ensure(l < SNAKE_TOL && r < SNAKE_TOL, || format!("{name} label {a}: residuals {l:e}, {r:e}"))?;
            worst = worst.max(l).max(r);
        }
    }
    Ok(format!("{count} irreducibles, max residual {worst:e} < {SNAKE_TOL:e}"))
}

fn c2_subgroup_dimensions() -> Outcome {
    let mut report = Vec::new();
    for (name, g) in [("S3", FiniteGroup::symmetric(3)), ("D4", FiniteGroup::dihedral(4))] {
        let (table, cat) = rep_category(&g);
        let classes = g.subgroup_class_representatives();
        if name == "S3" {
            ensure(classes.len() == 4, || format!("S3 has {} subgroup classes, expected 4", classes.len()))?;
        }
        for h in &classes {
            let m = subgroup_module(&cat, h);
            let y = m.irreps.trivial_label;
            let alg = build_algebra(&cat, &m.functor, y).map_err(|e| e.to_string())?;
            let oracle: usize = cat.labels().map(|a| fixed_dim(&table, a, h) * cat.dim(a)).sum();
            let index = g.order() / h.order();
            ensure(alg.dim() == index && oracle == index, || {
                format!("{name} ⊇ {:?}: dim {} oracle {oracle} index {index}", h.elements, alg.dim())
            })?;
        }
        report.push(format!("{name}: {} classes", classes.len()));
    }
    Ok(format!("{} match the character average", report.join(", ")))
}

fn c3_classical() -> Outcome {
    let mut sizes = Vec::new();
    for g in [FiniteGroup::cyclic(2), FiniteGroup::cyclic(4), FiniteGroup::symmetric(3)] {
        let n = g.order();
        let (_, cat) = rep_category(&g);
        let m = subgroup_module(&cat, &g.subgroup(&[g.identity()]).unwrap());
        let alg = build_algebra(&cat, &m.functor, 0).map_err(|e| e.to_string())?;
        ensure(alg.dim() == n, || format!("|G| = {n}: dim {}", alg.dim()))?;
        let comm = alg.table.commutativity_residual();
        ensure(comm < CLASSICAL_TOL, || format!("|G| = {n}: commutativity residual {comm:e}"))?;

        let images: Vec<Vec<C64>> = (0..n).map(|p| evaluate(&cat, &m, &alg, &alg.table.basis_vector(p))).collect();
        ensure(rank(&ComplexMatrix::from_columns(n, &images), CLASSICAL_TOL) == n, || {
            format!("|G| = {n}: evaluation is not bijective")
        })?;
        for p in 0..n {
            let ep = alg.table.basis_vector(p);
            for q in 0..n {
                let prod = evaluate(&cat, &m, &alg, &alg.mul(&ep, &alg.table.basis_vector(q)));
                let pointwise: Vec<C64> = images[p].iter().zip(&images[q]).map(|(a, b)| a * b).collect();
                let d = max_diff(&prod, &pointwise);
                ensure(d < CLASSICAL_TOL, || format!("|G| = {n}: product ({p},{q}) off by {d:e}"))?;
            }
            let star = evaluate(&cat, &m, &alg, &alg.star(&ep));
            let conj: Vec<C64> = images[p].iter().map(|z| z.conj()).collect();
            let d = max_diff(&star, &conj);
            ensure(d < CLASSICAL_TOL, || format!("|G| = {n}: star of {p} off by {d:e}"))?;
        }

        let idem = minimal_idempotents(&alg, 0, CLASSICAL_TOL).map_err(|e| e.to_string())?;
        ensure(idem.len() == n, || format!("|G| = {n}: {} minimal idempotents", idem.len()))?;
        let mut sum = vec![ZERO; n];
        let mut hit = vec![false; n];
        for e in &idem {
            let sq = alg.mul(e, e);
            ensure(max_diff(&sq, e) < CLASSICAL_TOL, || format!("|G| = {n}: e² ≠ e"))?;
            let f = evaluate(&cat, &m, &alg, e);
            let ones: Vec<usize> = (0..n).filter(|&g| (f[g] - ONE).norm() < CLASSICAL_TOL).collect();
            let zeros = f.iter().filter(|z| z.norm() < CLASSICAL_TOL).count();
            ensure(ones.len() == 1 && zeros == n - 1, || format!("|G| = {n}: idempotent is not a point mass"))?;
            hit[ones[0]] = true;
            for (s, x) in sum.iter_mut().zip(e) {
                *s += x;
            }
        }
        ensure(hit.iter().all(|&h| h), || format!("|G| = {n}: idempotents miss a point"))?;
        let d = max_diff(&sum, alg.unit());
        ensure(d < CLASSICAL_TOL, || format!("|G| = {n}: idempotents sum to 1 only within {d:e}"))?;
        sizes.push(n.to_string());
    }
    Ok(format!("|G| ∈ {{{}}}: commutative, point-mass idempotents, pointwise product", sizes.join(", ")))
}

/// Every algebra the gate builds whose dimension is at most `AXIOM_MAX_DIM`.
fn all_algebras() -> Vec<(String, SpectralAlgebra)> {
    let mut out = Vec::new();
    let mut push_all = |label: String, cat: &CategoryPresentation, f: &BigradedFunctor| {
        for y in f.base() {
            if let Ok(alg) = build_algebra(cat, f, y) {
                if alg.dim() <= AXIOM_MAX_DIM {
                    out.push((format!("{label} y={y}"), alg));
                }
            }
        }
    };
    for (name, g) in [
        ("Z2", FiniteGroup::cyclic(2)),
        ("Z4", FiniteGroup::cyclic(4)),
        ("S3", FiniteGroup::symmetric(3)),
        ("D4", FiniteGroup::dihedral(4)),
    ] {
        let (_, cat) = rep_category(&g);
        for h in g.subgroup_class_representatives() {
            push_all(format!("{name} ⊇ {:?}", h.elements), &cat, &subgroup_module(&cat, &h).functor);
        }
    }
    let z4 = pointed_z4(0);
    let g4 = FiniteGroup::cyclic(4);
    for k in [vec![0], vec![0, 2], vec![0, 1, 2, 3]] {
        let sub = g4.subgroup(&k).unwrap();
        let m = module_from_pointed(&z4, &sub, vec![ONE; k.len() * k.len()], CERT_TOL).unwrap();
        push_all(format!("Vec(Z4) k={k:?}"), &z4, &m.functor);
    }
    let d4 = FiniteGroup::dihedral(4);
    let vd4 = CategoryPresentation::from_pointed(&PointedFusionData::untwisted(d4.clone()), CERT_TOL).unwrap();
    let klein = d4.subgroup(&[0, 2, 4, 6]).unwrap();
    let bits = |e: usize| match e {
        0 => (0, 0),
        2 => (1, 0),
        4 => (0, 1),
        _ => (1, 1),
    };
    let mu = (0..16)
        .map(|i| {
            let (a1, _) = bits(klein.elements[i / 4]);
            let (_, b2) = bits(klein.elements[i % 4]);
            if a1 * b2 == 1 {
                -ONE
            } else {
                ONE
            }
        })
        .collect();
    let m = module_from_pointed(&vd4, &klein, mu, CERT_TOL).unwrap();
    push_all("Vec(D4) Klein four with bicharacter".into(), &vd4, &m.functor);
    for p in shipped() {
        for m in &p.modules {
            push_all(format!("{}/{}", p.file.name, m.name), &p.category, m.functor());
        }
    }
    out
}

fn c4_axioms() -> Outcome {
    let algebras = all_algebras();
    let mut worst: f64 = 0.0;
    for (name, alg) in &algebras {
        let r = alg.table.axiom_residuals();
        let values = [
            ("associativity", r.associativity),
            ("left unit", r.left_unit),
            ("right unit", r.right_unit),
            ("involution", r.involution),
            ("anti-multiplicativity", r.anti_multiplicative),
            ("unit star", r.unit_star),
        ];
        for (law, v) in values {
            ensure(v < AXIOM_TOL, || format!("{name}: {law} residual {v:e}"))?;
            worst = worst.max(v);
        }
    }
    Ok(format!("{} algebras, max residual {worst:e} < {AXIOM_TOL:e}", algebras.len()))
}

/// `(E ⊗ id)(X* X)` for `X ∈ M_k(A)`, computed entrywise from the product and star.
fn amplified_expectation(alg: &SpectralAlgebra, x: &[Vec<C64>], k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(k, k, |i, j| {
        (0..k)
            .map(|l| conditional_expectation(alg, &alg.mul(&alg.star(&x[l * k + i]), &x[l * k + j])))
            .sum()
    })
}

fn c5_positivity() -> Outcome {
    let mut min_eig = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    let mut count = 0;
    for p in shipped() {
        if !p.category.has_trivial_associator(0.0) {
            continue;
        }
        for m in &p.modules {
            let f = m.functor();
            for y in f.base() {
                let name = format!("{}/{} y={y}", p.file.name, m.name);
                let alg = build_algebra(&p.category, f, y).map_err(|e| format!("{name}: {e}"))?;
                let n = alg.dim();
                let gram = gram_matrix(&alg);
                let closed = gram_matrix_closed_form(&p.category, f, &alg);
                worst_gap = worst_gap.max(gram.max_abs_diff(&closed));
                for s in 0..4 {
                    let (u, v) = (sample(2 * s, n), sample(2 * s + 1, n));
                    let direct = conditional_expectation(&alg, &alg.mul(&alg.star(&u), &v));
                    let bilinear: C64 = (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .map(|(i, j)| u[i].conj() * closed[(i, j)] * v[j])
                        .sum();
                    worst_gap = worst_gap.max((direct - bilinear).norm());
                }
                ensure(worst_gap < EXPECTATION_TOL, || format!("{name}: E(f*g) routes differ by {worst_gap:e}"))?;

                let eig = hermitian_eigenvalues(&gram, POSITIVITY_TOL).map_err(|e| e.to_string())?;
                let mut lowest = eig.iter().copied().fold(f64::INFINITY, f64::min);
                for k in [2, 3] {
                    for s in 0..3 {
                        let x: Vec<Vec<C64>> = (0..k * k).map(|e| sample(100 * k + 10 * s + e, n)).collect();
                        let amp = amplified_expectation(&alg, &x, k);
                        let e = hermitian_eigenvalues(&amp, POSITIVITY_TOL).map_err(|e| e.to_string())?;
                        lowest = e.iter().copied().fold(lowest, f64::min);
                    }
                }
                ensure(lowest >= -POSITIVITY_TOL, || format!("{name}: eigenvalue {lowest:e}"))?;
                min_eig = min_eig.min(lowest);

                let cert = cp_certificate(&p.category, f, &alg, &[1, 2, 3], 0, POSITIVITY_TOL);
                ensure(cert.passed(), || format!("{name}: positivity certificate fails {:?}", failing(&cert)))?;
                count += 1;
            }
        }
    }
    Ok(format!(
        "{count} algebras, min eigenvalue {min_eig:e} ≥ -{POSITIVITY_TOL:e}, E(f*g) routes agree within {worst_gap:e}"
    ))
}

fn c6_fixed_points() -> Outcome {
    let mut pairs = 0;
    let (_, s3) = rep_category(&FiniteGroup::symmetric(3));
    let g = FiniteGroup::symmetric(3);
    for h in g.subgroup_class_representatives() {
        let m = subgroup_module(&s3, &h);
        for x in m.functor.base() {
            for y in m.functor.base() {
                let b = build_bimodule(&s3, &m.functor, x, y).map_err(|e| e.to_string())?;
                let oracle = schur_dim(&m.irreps, x, y);
                ensure(b.invariant_dim(s3.trivial) == oracle, || format!("S3 ⊇ {:?} ({x},{y})", h.elements))?;
                pairs += 1;
            }
        }
    }
    for p in &shipped() {
        if !p.category.has_trivial_associator(0.0) {
            continue;
        }
        for m in &p.modules {
            let f = m.functor();
            for x in f.base() {
                for y in f.base() {
                    let b = build_bimodule(&p.category, f, x, y).map_err(|e| e.to_string())?;
                    let oracle = match &m.kind {
                        ModuleKind::Subgroup(s) => schur_dim(&s.irreps, x, y),
                        ModuleKind::Pointed(pm) => usize::from(pm.cosets[x] == pm.cosets[y]),
                        ModuleKind::Explicit(_) => usize::from(x == y),
                    };
                    ensure(b.invariant_dim(p.category.trivial) == oracle, || {
                        format!("{}/{} ({x},{y}): {} vs {oracle}", p.file.name, m.name, b.invariant_dim(p.category.trivial))
                    })?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} pairs (x, y) agree with dim Mor(y, x)"))
}

/// `⟨χ_x, χ_y⟩_H`, the dimension of `Mor(w_y, w_x)` by Schur orthogonality.
fn schur_dim(table: &IrrepTable, x: usize, y: usize) -> usize {
    let n = table.irreps[x].matrices.len();
    let s: C64 = (0..n).map(|h| character(table, x, h) * character(table, y, h).conj()).sum::<C64>() / n as f64;
    s.re.round() as usize
}

fn c7_restriction() -> Outcome {
    let p = load_project(projects_dir().join("s3_inclusion.qhs"), LoadOptions::default()).map_err(|e| e.to_string())?;
    let mor = &p.morphisms[0];
    let (ModuleKind::Subgroup(x), ModuleKind::Subgroup(y)) = (&p.modules[mor.source].kind, &p.modules[mor.target].kind)
    else {
        return Err("the inclusion example must use subgroup modules".into());
    };
    let cat = &p.category;
    let theta = build_morphism(cat, &x.functor, &y.functor, &mor.data, THETA_TOL).map_err(|e| e.to_string())?;
    let cert = morphism_certificate(&theta, THETA_TOL);
    ensure(cert.passed(), || format!("θ certificate fails {:?}", failing(&cert)))?;

    let (src, tgt) = (&theta.source, &theta.target);
    let mut worst = max_diff(&theta.apply(src.unit()), tgt.unit());
    for i in 0..src.dim() {
        let ei = src.table.basis_vector(i);
        let ti = theta.apply(&ei);
        worst = worst.max(max_diff(&theta.apply(&src.star(&ei)), &tgt.star(&ti)));
        for j in 0..src.dim() {
            let ej = src.table.basis_vector(j);
            worst = worst.max(max_diff(&theta.apply(&src.mul(&ei, &ej)), &tgt.mul(&ti, &theta.apply(&ej))));
        }
        for (q, z) in ti.iter().enumerate() {
            ensure(z.norm() < THETA_TOL || tgt.grading[q] == src.grading[i], || format!("θ moves label of {i}"))?;
        }
    }
    ensure(worst < THETA_TOL, || format!("θ is a unital *-homomorphism only within {worst:e}"))?;

    let h = &x.subgroup;
    let index = h.parent_order / h.order();
    let image = theta.image_rank(THETA_TOL);
    ensure(image == index && tgt.dim() == h.parent_order, || {
        format!("image dim {image} in dim {} (expected {index} in {})", tgt.dim(), h.parent_order)
    })?;
    let CategorySource::Group { group, .. } = &cat.source else {
        return Err("group category expected".into());
    };
    for i in 0..src.dim() {
        let f = evaluate(cat, y, tgt, &theta.apply(&src.table.basis_vector(i)));
        for &hh in &h.elements {
            for k in group.elements() {
                ensure((f[group.mul(hh, k)] - f[k]).norm() < THETA_TOL, || {
                    format!("image of basis element {i} is not invariant under {hh}")
                })?;
            }
        }
    }

    let unitaries: Vec<ComplexMatrix> = (0..mor.data.target_size)
        .flat_map(|q| (0..mor.data.source_size).map(move |r| (q, r)))
        .enumerate()
        .map(|(s, (q, r))| {
            let d = mor.data.dim(q, r);
            let entries = sample(31 + s, d * d);
            polar_unitary(&ComplexMatrix::from_row_major(d, d, entries).unwrap()).unwrap()
        })
        .collect();
    let gauged = mor.data.gauge_transform(&x.functor, &y.functor, &unitaries);
    ensure(validate_morphism(cat, &x.functor, &y.functor, &gauged, CERT_TOL).passed(), || {
        "gauged ψ is not a valid morphism".into()
    })?;
    let theta2 = build_morphism(cat, &x.functor, &y.functor, &gauged, THETA_TOL).map_err(|e| e.to_string())?;
    let gauge_gap = theta2.matrix.max_abs_diff(&theta.matrix);
    ensure(gauge_gap < GAUGE_TOL, || format!("gauged θ differs by {gauge_gap:e}"))?;
    Ok(format!(
        "residual {worst:e}, image dim {image} of {}, H-invariant image, gauge difference {gauge_gap:e}",
        tgt.dim()
    ))
}

fn c8_eigenvector() -> Outcome {
    let g = FiniteGroup::symmetric(3);
    let (_, cat) = rep_category(&g);
    let x = subgroup_module(&cat, &g.subgroup(&[0, 2]).unwrap());
    let y = subgroup_module(&cat, &g.subgroup(&[0]).unwrap());
    let std = label_of_dim(&cat, 2);
    let matrix = x.functor.dimension_matrix(std);
    ensure(matrix == vec![vec![1, 1], vec![1, 1]], || format!("F(std) = {matrix:?}"))?;
    let cert = eigenvector_test(&x.functor, &y.functor, &[1, 1], std).map_err(|e| e.to_string())?;
    let value = cert.checks.first().and_then(|c| c.value);
    ensure(cert.passed() && value == Some(0.0), || format!("residual {value:?}"))?;
    Ok("F(std) = [[1,1],[1,1]], vector (1,1), eigenvalue 2, residual exactly 0".into())
}

fn c9_rescaling() -> Outcome {
    let g = FiniteGroup::symmetric(3);
    let (_, cat) = rep_category(&g);
    let z4 = pointed_z4(0);
    let k = FiniteGroup::cyclic(4).subgroup(&[0, 2]).unwrap();
    let mut compared = 0;
    for lambda in [C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.5, 0.5)] {
        let scaled = cat.with_rescaled_duality(lambda);
        for h in g.subgroup_class_representatives() {
            let (m0, m1) = (subgroup_module(&cat, &h), subgroup_module(&scaled, &h));
            for y in m0.functor.base() {
                let a0 = build_algebra(&cat, &m0.functor, y).map_err(|e| e.to_string())?;
                let a1 = build_algebra(&scaled, &m1.functor, y).map_err(|e| e.to_string())?;
                ensure(
                    a0.table.products == a1.table.products && a0.table.star_matrix == a1.table.star_matrix,
                    || format!("λ = {lambda}: S3 ⊇ {:?} y={y} changed", h.elements),
                )?;
                compared += 1;
            }
        }
        let scaled = z4.with_rescaled_duality(lambda);
        let m0 = module_from_pointed(&z4, &k, vec![ONE; 4], CERT_TOL).unwrap();
        let m1 = module_from_pointed(&scaled, &k, vec![ONE; 4], CERT_TOL).unwrap();
        for y in m0.functor.base() {
            let a0 = build_algebra(&z4, &m0.functor, y).map_err(|e| e.to_string())?;
            let a1 = build_algebra(&scaled, &m1.functor, y).map_err(|e| e.to_string())?;
            ensure(
                a0.table.products == a1.table.products && a0.table.star_matrix == a1.table.star_matrix,
                || format!("λ = {lambda}: Vec(Z4) y={y} changed"),
            )?;
            compared += 1;
        }
    }
    Ok(format!("λ ∈ {{2, i, 0.5+0.5i}}: {compared} algebras bit-identical"))
}

fn failing(cert: &Certificate) -> Vec<String> {
    cert.failures().map(|c| c.name.clone()).collect()
}

/// First coherence block with both labels nontrivial and a nonempty matrix.
fn nontrivial_coherence(cat: &CategoryPresentation, f: &BigradedFunctor) -> (usize, usize, usize, usize) {
    let o = cat.trivial;
    for a in cat.labels().filter(|&a| a != o) {
        for b in cat.labels().filter(|&b| b != o) {
            for r in f.base() {
                for t in f.base() {
                    let m = f.coherence(a, b, r, t);
                    if m.rows() > 0 && m.cols() > 0 {
                        return (a, b, r, t);
                    }
                }
            }
        }
    }
    panic!("module has no nontrivial coherence block");
}

fn c10_fault_injection() -> Outcome {
    let eps = C64::new(PERTURBATION, 0.0);
    let g = FiniteGroup::symmetric(3);
    let (_, cat) = rep_category(&g);
    let std = label_of_dim(&cat, 2);
    let o = cat.trivial;
    let opts = ValidationOptions::default();
    let mut results = Vec::new();

    ensure(verify_presentation(&cat, CERT_TOL).passed(), || "unperturbed Rep(S3) fails".into())?;
    for (c, entry) in [(o, (0, 0)), (std, (1, 1))] {
        let mut broken = cat.clone();
        broken.isometries_mut(std, std, c)[0][entry] += eps;
        let cert = verify_presentation(&broken, CERT_TOL);
        results.push((format!("fusion isometry std⊗std→{c}"), failing(&cert)));
    }

    let m = subgroup_module(&cat, &g.subgroup(&[0, 2]).unwrap());
    ensure(validate_module(&cat, &m.functor, CERT_TOL, opts).passed(), || "unperturbed module fails".into())?;
    let mut f = m.functor.clone();
    let key = nontrivial_coherence(&cat, &f);
    f.coherence_mut(key.0, key.1, key.2, key.3)[(0, 0)] += eps;
    results.push((format!("S3/Z2 coherence {key:?}"), failing(&validate_module(&cat, &f, CERT_TOL, opts))));

    let z4 = pointed_z4(0);
    let k = FiniteGroup::cyclic(4).subgroup(&[0, 2]).unwrap();
    let pm = module_from_pointed(&z4, &k, vec![ONE; 4], CERT_TOL).unwrap();
    ensure(validate_module(&z4, &pm.functor, CERT_TOL, opts).passed(), || "unperturbed Z4 module fails".into())?;
    let mut f = pm.functor.clone();
    let key = nontrivial_coherence(&z4, &f);
    f.coherence_mut(key.0, key.1, key.2, key.3)[(0, 0)] += eps;
    results.push((format!("Vec(Z4)/Z2 coherence {key:?}"), failing(&validate_module(&z4, &f, CERT_TOL, opts))));

    let y = subgroup_module(&cat, &g.subgroup(&[0]).unwrap());
    let mut data = morphism_from_restriction(&cat, &m, &y, CERT_TOL).map_err(|e| e.to_string())?;
    ensure(validate_morphism(&cat, &m.functor, &y.functor, &data, CERT_TOL).passed(), || {
        "unperturbed ψ fails".into()
    })?;
    data.psi_mut(std, 0, 0)[(0, 0)] += eps;
    let cert = validate_morphism(&cat, &m.functor, &y.functor, &data, CERT_TOL);
    results.push(("ψ^std entry".into(), failing(&cert)));

    let mut summary = Vec::new();
    for (name, fails) in &results {
        ensure(!fails.is_empty(), || format!("perturbing {name} went undetected"))?;
        summary.push(format!("{name} → {}", fails.join("+")));
    }
    Ok(format!("{} of {} detected: {}", results.len(), results.len(), summary.join("; ")))
}
