//! Verification certificates and the suite that assembles them.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modcat::{frobenius_module, validate_module, BigradedFunctor, ValidationOptions};
use crate::reconstruct::{
    build_algebra, build_bimodule, build_linking_algebra, cp_certificate, grading_violations, star_respects_grading,
    star_route_residual, ReconstructError,
};
use crate::tensorcat::{verify_presentation, CategoryPresentation};

pub const CERTIFICATE_VERSION: &str = "1.0";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("unknown report format '{0}' (expected text or json)")]
    UnknownFormat(String),
    #[error("unknown suite '{name}' (available: {available})")]
    UnknownSuite { name: String, available: String },
    #[error("certificate serialization failed: {0}")]
    Serialization(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// The measured value must not exceed the threshold (residuals).
    AtMost,
    /// The measured value must be at least the threshold (eigenvalue bounds).
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The mathematical statement the check tests, in words.
    pub anchor: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub content_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tolerance: f64,
    pub seed: Option<u64>,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub subject: Subject,
    pub checks: Vec<Check>,
    pub environment: Environment,
}

impl Certificate {
    pub fn new(id: impl Into<String>, content_hash: impl Into<String>, tolerance: f64) -> Self {
        Self {
            subject: Subject {
                id: id.into(),
                content_hash: content_hash.into(),
            },
            checks: Vec::new(),
            environment: Environment {
                tolerance,
                seed: None,
                version: CERTIFICATE_VERSION.to_string(),
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.environment.seed = Some(seed);
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.environment.tolerance
    }

    /// Records a residual that must be at most `threshold`. NaN never passes.
    pub fn residual(&mut self, name: &str, anchor: &str, value: f64, threshold: f64) -> bool {
        let pass = value <= threshold;
        self.checks.push(Check {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: Some(value),
            threshold,
            relation: Relation::AtMost,
            pass,
            detail: String::new(),
        });
        pass
    }

    /// Records a lower bound check: `value >= threshold`.
    pub fn lower_bound(&mut self, name: &str, anchor: &str, value: f64, threshold: f64) -> bool {
        let pass = value >= threshold;
        self.checks.push(Check {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: Some(value),
            threshold,
            relation: Relation::AtLeast,
            pass,
            detail: String::new(),
        });
        pass
    }

    /// Records a yes/no check.
    pub fn flag(&mut self, name: &str, anchor: &str, pass: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: None,
            threshold: 0.0,
            relation: Relation::AtMost,
            pass,
            detail: detail.into(),
        });
        pass
    }

    /// Attaches a detail string to the most recent check.
    pub fn detail(&mut self, detail: impl Into<String>) {
        if let Some(last) = self.checks.last_mut() {
            last.detail = detail.into();
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Appends the checks of `other`, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: Certificate) {
        for mut c in other.checks {
            if !prefix.is_empty() {
                c.name = format!("{prefix}/{}", c.name);
            }
            self.checks.push(c);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Json,
}

impl FromStr for ReportFormat {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            other => Err(VerifyError::UnknownFormat(other.to_string())),
        }
    }
}

/// Renders a certificate. A passing certificate corresponds to exit code 0,
/// a failing one to exit code 1 in the command-line tool.
pub fn report(cert: &Certificate, format: ReportFormat) -> Result<String, VerifyError> {
    match format {
        ReportFormat::Json => serde_json_string(cert),
        ReportFormat::Text => Ok(render_text(cert)),
    }
}

fn serde_json_string(cert: &Certificate) -> Result<String, VerifyError> {
    serde_json::to_string_pretty(cert).map_err(|e| VerifyError::Serialization(e.to_string()))
}

fn render_text(cert: &Certificate) -> String {
    let mut s = String::new();
    let status = if cert.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "certificate {} [{}]", cert.subject.id, status);
    let _ = writeln!(s, "content hash {}", cert.subject.content_hash);
    let _ = writeln!(
        s,
        "tolerance {:e}, seed {}, version {}",
        cert.environment.tolerance,
        cert.environment.seed.map_or_else(|| "-".to_string(), |x| x.to_string()),
        cert.environment.version
    );
    for c in &cert.checks {
        let mark = if c.pass { "ok  " } else { "FAIL" };
        let measured = match c.value {
            Some(v) => {
                let rel = match c.relation {
                    Relation::AtMost => "<=",
                    Relation::AtLeast => ">=",
                };
                format!("{v:e} {rel} {:e}", c.threshold)
            }
            None => String::from("-"),
        };
        let _ = write!(s, "{mark} {} | {} | {}", c.name, c.anchor, measured);
        if !c.detail.is_empty() {
            let _ = write!(s, " | {}", c.detail);
        }
        s.push('\n');
    }
    let failed = cert.failures().count();
    let _ = writeln!(s, "{} checks, {} failed", cert.checks.len(), failed);
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Presentation,
    Module,
    Algebra,
    Positivity,
    FixedPoints,
    Frobenius,
    Multiplicity,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Presentation,
        Suite::Module,
        Suite::Algebra,
        Suite::Positivity,
        Suite::FixedPoints,
        Suite::Frobenius,
        Suite::Multiplicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Presentation => "presentation",
            Suite::Module => "module",
            Suite::Algebra => "algebra",
            Suite::Positivity => "positivity",
            Suite::FixedPoints => "fixed-points",
            Suite::Frobenius => "frobenius",
            Suite::Multiplicity => "multiplicity",
        }
    }
}

impl FromStr for Suite {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| VerifyError::UnknownSuite {
                name: s.to_string(),
                available: Suite::ALL.map(Suite::name).join(", "),
            })
    }
}

/// Parses a comma-separated suite list; `all` selects every suite.
pub fn parse_suites(list: &str) -> Result<Vec<Suite>, VerifyError> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            out.extend(Suite::ALL);
        } else {
            out.push(part.parse()?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub tolerance: f64,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub amplification_sizes: Vec<usize>,
    /// Exhaustive associativity checks are run up to this algebra dimension.
    pub max_exhaustive_dim: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            tolerance: crate::numkit::DEFAULT_TOL,
            seed: 0,
            suites: Suite::ALL.to_vec(),
            amplification_sizes: vec![1, 2, 3],
            max_exhaustive_dim: 40,
        }
    }
}

/// Runs the selected suites on a category and one of its module categories.
/// Failures are recorded in the certificate, never raised.
pub fn run_suite(cat: &CategoryPresentation, module: &BigradedFunctor, options: &SuiteOptions) -> Certificate {
    let tol = options.tolerance;
    let mut subject = crate::numkit::ContentHasher::new();
    subject.tag(&cat.fingerprint()).tag(&module.fingerprint());
    let mut cert = Certificate::new("suite", subject.finish(), tol).with_seed(options.seed);
    let wants = |s: Suite| options.suites.contains(&s);
    let o = cat.trivial;

    if wants(Suite::Presentation) {
        cert.absorb("presentation", verify_presentation(cat, tol));
    }
    if wants(Suite::Module) {
        cert.absorb("module", validate_module(cat, module, tol, ValidationOptions::default()));
    }

    let twisted = !cat.has_trivial_associator(0.0);
    let needs_algebra = wants(Suite::Algebra) || wants(Suite::Positivity) || wants(Suite::FixedPoints) || wants(Suite::Multiplicity);
    if needs_algebra && twisted {
        cert.flag(
            "reconstruction",
            "spectral algebras are associative only over a trivial associator",
            true,
            "skipped: the category has a nontrivial associator",
        );
        return cert;
    }

    for y in module.base() {
        if !(wants(Suite::Algebra) || wants(Suite::Positivity)) {
            break;
        }
        let alg = match build_algebra(cat, module, y) {
            Ok(a) => a,
            Err(e) => {
                cert.flag(&format!("algebra y={y}/build"), "the spectral algebra can be assembled", false, e.to_string());
                continue;
            }
        };
        if wants(Suite::Algebra) {
            let prefix = format!("algebra y={y}");
            if alg.dim() <= options.max_exhaustive_dim {
                let r = alg.table.axiom_residuals();
                cert.residual(&format!("{prefix}/associativity"), "(fg)h = f(gh) on basis triples", r.associativity, tol);
                cert.residual(
                    &format!("{prefix}/unit"),
                    "1_y is a two-sided unit",
                    r.left_unit.max(r.right_unit).max(r.unit_star),
                    tol,
                );
                cert.residual(&format!("{prefix}/star involutive"), "f** = f", r.involution, tol);
                cert.residual(
                    &format!("{prefix}/star anti-multiplicative"),
                    "(fg)* = g* f*",
                    r.anti_multiplicative,
                    tol,
                );
            } else {
                cert.flag(
                    &format!("{prefix}/associativity"),
                    "(fg)h = f(gh) on basis triples",
                    true,
                    format!("skipped: dimension {} exceeds {}", alg.dim(), options.max_exhaustive_dim),
                );
            }
            let violations = grading_violations(cat, &alg, tol);
            cert.flag(
                &format!("{prefix}/grading"),
                "products of labels a and b lie in labels c with N_ab^c > 0",
                violations.is_empty(),
                if violations.is_empty() { String::new() } else { format!("{violations:?}") },
            );
            cert.flag(
                &format!("{prefix}/star grading"),
                "the star maps label a to label ā",
                star_respects_grading(cat, &alg, tol),
                "",
            );
            cert.residual(
                &format!("{prefix}/star routes"),
                "the star does not depend on the choice of conjugate solutions",
                star_route_residual(cat, module, y, y),
                tol,
            );
        }
        if wants(Suite::Positivity) {
            let cp = cp_certificate(cat, module, &alg, &options.amplification_sizes, options.seed, tol);
            cert.absorb(&format!("positivity y={y}"), cp);
        }
    }

    if wants(Suite::Algebra) && module.base_size > 1 {
        for y in 1..module.base_size {
            let link = build_linking_algebra(cat, module, &[0, y]);
            let name = format!("linking 0+{y}");
            match link {
                Ok(link) if link.table.dim <= options.max_exhaustive_dim * 2 => {
                    let r = link.table.axiom_residuals();
                    let worst = r
                        .associativity
                        .max(r.left_unit)
                        .max(r.right_unit)
                        .max(r.involution)
                        .max(r.anti_multiplicative);
                    cert.residual(
                        &name,
                        "the bimodules assemble into a *-algebra on the sum of two objects",
                        worst,
                        tol,
                    );
                }
                Ok(link) => {
                    cert.flag(
                        &name,
                        "the bimodules assemble into a *-algebra on the sum of two objects",
                        true,
                        format!("skipped: dimension {}", link.table.dim),
                    );
                }
                Err(e) => {
                    cert.flag(&name, "the bimodules assemble into a *-algebra on the sum of two objects", false, e.to_string());
                }
            }
        }
    }

    if wants(Suite::FixedPoints) || wants(Suite::Multiplicity) {
        let mut fixed_ok = true;
        let mut mult_ok = true;
        let mut detail = String::new();
        for x in module.base() {
            for y in module.base() {
                let b = match build_bimodule(cat, module, x, y) {
                    Ok(b) => b,
                    Err(ReconstructError::NontrivialAssociator { .. }) => continue,
                    Err(e) => {
                        fixed_ok = false;
                        detail = e.to_string();
                        continue;
                    }
                };
                // Morphisms between simple objects: one dimension iff x = y.
                if b.invariant_dim(o) != module.dim(o, x, y) || b.invariant_dim(o) != usize::from(x == y) {
                    fixed_ok = false;
                    detail = format!("invariant part of A_{x}^{y} has dimension {}", b.invariant_dim(o));
                }
                for a in cat.labels() {
                    let count = b.grading.iter().filter(|&&g| g == a).count();
                    if count != module.dim(a, x, y) * cat.dim(a) {
                        mult_ok = false;
                    }
                }
            }
        }
        if wants(Suite::FixedPoints) {
            cert.flag(
                "fixed points",
                "the invariant part of A_x^y is Mor(y, x)",
                fixed_ok,
                detail,
            );
        }
        if wants(Suite::Multiplicity) {
            cert.flag(
                "multiplicity round trip",
                "the spectral components of A_x^y recover the multiplicities dim F_xy(a)",
                mult_ok,
                "",
            );
        }
    }

    if wants(Suite::Frobenius) {
        let mut worst: f64 = 0.0;
        let mut dims_ok = true;
        for a in cat.labels() {
            for x in module.base() {
                for y in module.base() {
                    if module.dim(a, x, y) != module.dim(cat.dual(a), y, x) {
                        dims_ok = false;
                        continue;
                    }
                    if module.dim(a, x, y) > 0 {
                        worst = worst.max(frobenius_module(cat, module, a, x, y).round_trip_residual());
                    }
                }
            }
        }
        if dims_ok {
            cert.residual(
                "frobenius",
                "F_xy(a) is identified with the conjugate of F_yx(ā)",
                worst,
                tol,
            );
        } else {
            cert.flag("frobenius", "F_xy(a) is identified with the conjugate of F_yx(ā)", false, "dimension mismatch");
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouprep::{extract_irreps, FiniteGroup};
    use crate::modcat::{module_from_pointed, module_from_subgroup};
    use crate::numkit::{C64, DEFAULT_TOL, ONE};
    use crate::tensorcat::PointedFusionData;

    fn s3() -> (FiniteGroup, CategoryPresentation) {
        let g = FiniteGroup::symmetric(3);
        let t = extract_irreps(&g, 11).unwrap();
        let cat = CategoryPresentation::from_group(&g, &t, DEFAULT_TOL).unwrap();
        (g, cat)
    }

    #[test]
    fn full_suite_passes_for_every_s3_subgroup() {
        let (g, cat) = s3();
        for h in g.subgroup_class_representatives() {
            let m = module_from_subgroup(&cat, &h, 1, DEFAULT_TOL).unwrap();
            let cert = run_suite(&cat, &m.functor, &SuiteOptions::default());
            assert!(cert.passed(), "{:?}: {:?}", h.elements, cert.failures().collect::<Vec<_>>());
            assert!(cert.find("fixed points").is_some());
        }
    }

    #[test]
    fn injected_fault_is_reported() {
        let (g, cat) = s3();
        let mut m = module_from_subgroup(&cat, &g.subgroup(&[0, 2]).unwrap(), 1, DEFAULT_TOL).unwrap();
        m.functor.coherence_mut(2, 2, 1, 1)[(0, 1)] += C64::new(1e-3, 0.0);
        let cert = run_suite(&cat, &m.functor, &SuiteOptions::default());
        assert!(!cert.passed());
    }

    #[test]
    fn twisted_category_skips_reconstruction() {
        let g = FiniteGroup::cyclic(4);
        let cat = CategoryPresentation::from_pointed(&PointedFusionData::cyclic(4, 1), DEFAULT_TOL).unwrap();
        let m = module_from_pointed(&cat, &g.subgroup(&[0]).unwrap(), vec![ONE], DEFAULT_TOL).unwrap();
        let cert = run_suite(&cat, &m.functor, &SuiteOptions::default());
        assert!(cert.passed());
        assert!(cert.find("reconstruction").unwrap().detail.starts_with("skipped"));
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!(parse_suites("module,algebra").unwrap(), vec![Suite::Module, Suite::Algebra]);
        assert_eq!(parse_suites("all").unwrap().len(), 7);
        assert!(matches!(parse_suites("bogus"), Err(VerifyError::UnknownSuite { .. })));
    }

    #[test]
    fn reports_round_trip() {
        let mut cert = Certificate::new("x", "abc", 1e-9).with_seed(4);
        cert.residual("r", "a statement", 1e-12, 1e-9);
        cert.flag("f", "another statement", false, "why not");
        let json = report(&cert, ReportFormat::Json).unwrap();
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        let text = report(&cert, ReportFormat::Text).unwrap();
        assert!(text.contains("FAIL f | another statement"));
        assert!(text.ends_with("2 checks, 1 failed\n"));
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
