//! `qhs`: batch front end for building and checking quantum homogeneous spaces.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for input
//! errors (unreadable or invalid files, unknown labels, bad flags).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use qhs_core::modcat::{validate_module, validate_morphism, validate_subgroup_module, ValidationOptions};
use qhs_core::reconstruct::{build_algebra, eigenvector_test, morphism_certificate, AlgebraMorphism, BasisLabel};
use qhs_core::tensorcat::verify_presentation;
use qhs_core::verify::{parse_suites, report, run_suite, ReportFormat, SuiteOptions};
use qhs_core::{Certificate, ComplexMatrix, DEFAULT_TOL};
use qhs_io::{load_certificate, load_project, save_document, LoadOptions, ModuleKind, Project};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "qhs", version, about = "Reconstruct spectral *-algebras from module categories and certify them")]
struct Cli {
    /// Numerical tolerance for every residual check.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for irreducible-representation extraction.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report format on standard output.
    #[arg(long, global = true, default_value = "text")]
    format: String,
    /// Write the main artifact (certificate, algebra or morphism) to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the category, every module and every morphism of the given projects.
    Validate {
        #[arg(required = true)]
        projects: Vec<PathBuf>,
    },
    /// Build the spectral algebra of a module at a base label.
    Reconstruct {
        project: PathBuf,
        /// Module name; defaults to the first module.
        #[arg(long)]
        module: Option<String>,
        /// Base label in the module category.
        #[arg(long, default_value_t = 0)]
        base: usize,
    },
    /// Run the verification suites on the modules of a project.
    Verify {
        project: PathBuf,
        #[arg(long)]
        module: Option<String>,
        /// Comma-separated suite names, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Build and check the algebra map induced by a module functor.
    Morphism {
        project: PathBuf,
        /// Morphism name; defaults to the first morphism.
        #[arg(long)]
        name: Option<String>,
        /// Also run the integer eigenvector test for this label.
        #[arg(long)]
        eigenvector: Option<usize>,
    },
    /// Render a saved certificate.
    Report { certificate: PathBuf },
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        bail!("--tol must be a positive number, got {}", cli.tol);
    }
    let format: ReportFormat = cli.format.parse()?;
    let load = |path: &Path| -> Result<Project> {
        info!("loading {}", path.display());
        Ok(load_project(
            path,
            LoadOptions {
                tolerance: cli.tol,
                seed: cli.seed,
            },
        )?)
    };
    match &cli.command {
        Command::Validate { projects } => {
            let loaded = projects.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            let mut cert = Certificate::new("validate", combined_hash(&loaded), cli.tol).with_seed(cli.seed);
            for p in &loaded {
                cert.absorb(&p.file.name, validate_project(p, cli.tol));
            }
            emit_certificate(cli, format, &cert)
        }
        Command::Reconstruct { project, module, base } => {
            let p = load(project)?;
            let m = pick_module(&p, module.as_deref())?;
            let f = m.functor();
            if *base >= f.base_size {
                bail!(
                    "base label {base} is not a simple object of module '{}'; valid labels: {}",
                    m.name,
                    label_list(&f.base_names)
                );
            }
            let alg = build_algebra(&p.category, f, *base).with_context(|| format!("module '{}'", m.name))?;
            info!("algebra of dimension {} at base {base}", alg.dim());
            let text = qhs_io::algebra_json(&alg)?;
            match &cli.out {
                Some(path) => std::fs::write(path, text).with_context(|| path.display().to_string())?,
                None => print!("{text}"),
            }
            Ok(Outcome::Pass)
        }
        Command::Verify { project, module, suite } => {
            let p = load(project)?;
            let suites = parse_suites(suite)?;
            let options = SuiteOptions {
                tolerance: cli.tol,
                suites,
                ..SuiteOptions::default()
            };
            let mut cert = Certificate::new("verify", combined_hash(std::slice::from_ref(&p)), cli.tol).with_seed(cli.seed);
            let targets: Vec<_> = match module {
                Some(name) => vec![pick_module(&p, Some(name))?],
                None => p.modules.iter().collect(),
            };
            if targets.is_empty() {
                cert.absorb("category", verify_presentation(&p.category, cli.tol));
            }
            for m in targets {
                cert.absorb(&m.name, run_suite(&p.category, m.functor(), &options));
            }
            emit_certificate(cli, format, &cert)
        }
        Command::Morphism {
            project,
            name,
            eigenvector,
        } => {
            let p = load(project)?;
            let mor = match name {
                Some(n) => p.morphism(n).ok_or_else(|| {
                    anyhow!(
                        "no morphism named '{n}'; available: {}",
                        label_list(&p.morphisms.iter().map(|m| m.name.clone()).collect::<Vec<_>>())
                    )
                })?,
                None => p.morphisms.first().ok_or_else(|| anyhow!("project has no morphisms"))?,
            };
            let (x, y) = (p.modules[mor.source].functor(), p.modules[mor.target].functor());
            let mut cert = validate_morphism(&p.category, x, y, &mor.data, cli.tol);
            cert.subject.id = format!("morphism {}", mor.name);
            let theta = build_theta(&p, mor)?;
            if let Some(theta) = &theta {
                cert.absorb("theta", morphism_certificate(theta, cli.tol));
                cert.flag(
                    "theta image",
                    "θ is injective on the source algebra",
                    theta.image_rank(cli.tol.max(1e-9)) == theta.source.dim(),
                    format!("rank {} of {}", theta.image_rank(cli.tol.max(1e-9)), theta.source.dim()),
                );
            }
            if let Some(a) = eigenvector {
                if *a >= p.category.len() {
                    bail!("label {a} out of range; the category has {} labels", p.category.len());
                }
                let dims: Vec<usize> = (0..x.base_size).map(|r| mor.data.dim(mor.data.target_base, r)).collect();
                cert.absorb("eigenvector", eigenvector_test(x, y, &dims, *a)?);
            }
            print!("{}", report(&cert, format)?);
            if let Some(path) = &cli.out {
                let doc = MorphismOutput {
                    certificate: &cert,
                    theta: theta.as_ref().map(|t| ThetaOutput {
                        source_basis: &t.source.basis,
                        target_basis: &t.target.basis,
                        matrix: &t.matrix,
                    }),
                };
                save_document("morphism", &doc, path)?;
            }
            Ok(outcome(&cert))
        }
        Command::Report { certificate } => {
            let cert = load_certificate(certificate)?;
            print!("{}", report(&cert, format)?);
            Ok(outcome(&cert))
        }
    }
}

#[derive(Serialize)]
struct ThetaOutput<'a> {
    source_basis: &'a [BasisLabel],
    target_basis: &'a [BasisLabel],
    matrix: &'a ComplexMatrix,
}

#[derive(Serialize)]
struct MorphismOutput<'a> {
    certificate: &'a Certificate,
    theta: Option<ThetaOutput<'a>>,
}

/// θ is only defined over categories with a trivial associator; other
/// projects get the coherence certificate alone.
fn build_theta(p: &Project, mor: &qhs_io::LoadedMorphism) -> Result<Option<AlgebraMorphism>> {
    if !p.category.has_trivial_associator(0.0) {
        return Ok(None);
    }
    let (x, y) = (p.modules[mor.source].functor(), p.modules[mor.target].functor());
    let source = build_algebra(&p.category, x, mor.data.source_base)?;
    let target = build_algebra(&p.category, y, mor.data.target_base)?;
    let matrix = qhs_core::reconstruct::morphism_matrix(&p.category, x, y, &mor.data, &source, &target);
    Ok(Some(AlgebraMorphism { source, target, matrix }))
}

fn validate_project(p: &Project, tol: f64) -> Certificate {
    let mut cert = verify_presentation(&p.category, tol);
    for m in &p.modules {
        let sub = match &m.kind {
            ModuleKind::Subgroup(s) => validate_subgroup_module(&p.category, s, tol),
            _ => validate_module(&p.category, m.functor(), tol, ValidationOptions::default()),
        };
        cert.absorb(&format!("module {}", m.name), sub);
    }
    for mor in &p.morphisms {
        let (x, y) = (p.modules[mor.source].functor(), p.modules[mor.target].functor());
        cert.absorb(&format!("morphism {}", mor.name), validate_morphism(&p.category, x, y, &mor.data, tol));
    }
    cert
}

fn pick_module<'a>(p: &'a Project, name: Option<&str>) -> Result<&'a qhs_io::LoadedModule> {
    match name {
        Some(n) => p.module(n).ok_or_else(|| {
            anyhow!(
                "no module named '{n}'; available: {}",
                label_list(&p.modules.iter().map(|m| m.name.clone()).collect::<Vec<_>>())
            )
        }),
        None => p.modules.first().ok_or_else(|| anyhow!("project has no modules")),
    }
}

fn label_list(names: &[String]) -> String {
    if names.is_empty() {
        return "(none)".to_string();
    }
    names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{i} ({n})"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn combined_hash(projects: &[Project]) -> String {
    let mut h = qhs_core::numkit::ContentHasher::new();
    for p in projects {
        h.tag(&p.category.fingerprint());
        for m in &p.modules {
            h.tag(&m.functor().fingerprint());
        }
    }
    h.finish()
}

fn emit_certificate(cli: &Cli, format: ReportFormat, cert: &Certificate) -> Result<Outcome> {
    print!("{}", report(cert, format)?);
    if let Some(path) = &cli.out {
        qhs_io::save_certificate(cert, path)?;
    }
    Ok(outcome(cert))
}

fn outcome(cert: &Certificate) -> Outcome {
    if cert.passed() {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}
