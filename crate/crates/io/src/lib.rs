//! Project files for qhs.
//!
//! A project is one JSON document holding a finite group, optionally its
//! irreducible representations or a 3-cocycle, any number of module
//! categories and morphisms between them, and content fingerprints. Loading
//! rebuilds every object and checks its structural invariants; errors carry
//! the location of the offending section.
//!
//! Complex numbers are written as `[re, im]`. Floats use the shortest
//! decimal representation that parses back to the same double.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use qhs_core::grouprep::{extract_irreps, FiniteGroup, IrrepTable};
use qhs_core::modcat::{
    module_from_pointed, module_from_subgroup, module_from_subgroup_with_irreps, morphism_from_restriction,
    validate_module, BigradedFunctor, ModuleMorphismData, PointedModule, SubgroupModule, ValidationOptions,
};
use qhs_core::numkit::{ComplexMatrix, DEFAULT_TOL};
use qhs_core::reconstruct::{AlgebraTable, BasisLabel, SpectralAlgebra};
use qhs_core::tensorcat::{CategoryPresentation, PointedFusionData};
use qhs_core::Certificate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1.0";

pub mod samples;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version '{found}' (this build reads up to {supported})")]
    SchemaVersion { found: String, supported: String },
    #[error("{location}: expected a '{expected}' document, found '{found}'")]
    Kind {
        location: String,
        expected: String,
        found: String,
    },
    #[error("{location}: fingerprint mismatch (recorded {recorded}, computed {computed})")]
    Fingerprint {
        location: String,
        recorded: String,
        computed: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("{location}: no module named '{name}'")]
    Reference { location: String, name: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn invalid(location: impl Into<String>, err: impl std::fmt::Display) -> IoError {
    IoError::Invalid {
        location: location.into(),
        message: err.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSection {
    pub order: usize,
    pub identity: usize,
    pub mult_table: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleSection {
    /// `ω(a, b, c)` at flat index `(a n + b) n + c`.
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModuleSpec {
    /// `Rep(H)` for a subgroup `H`, given by its elements.
    Subgroup {
        elements: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        irreps: Option<IrrepTable>,
    },
    /// Module over a pointed category from a subgroup `k` and 2-cochain `μ`.
    Pointed { subgroup: Vec<usize>, mu: Vec<Complex64> },
    /// Module data written out in full.
    Explicit { functor: BigradedFunctor },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleSection {
    pub name: String,
    #[serde(flatten)]
    pub spec: ModuleSpec,
    pub category_fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MorphismSpec {
    /// Restriction of representations from the source subgroup to a smaller target subgroup.
    Restriction,
    Explicit { data: ModuleMorphismData },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphismSection {
    pub name: String,
    pub source: String,
    pub target: String,
    #[serde(flatten)]
    pub spec: MorphismSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub modules: BTreeMap<String, String>,
}

/// The on-disk form of a project.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectFile {
    pub schema_version: String,
    pub name: String,
    pub group: GroupSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irreps: Option<IrrepTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modules: Vec<ModuleSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub morphisms: Vec<MorphismSection>,
    #[serde(default)]
    pub fingerprints: Fingerprints,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModuleKind {
    Subgroup(SubgroupModule),
    Pointed(PointedModule),
    Explicit(BigradedFunctor),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedModule {
    pub name: String,
    pub kind: ModuleKind,
}

impl LoadedModule {
    pub fn functor(&self) -> &BigradedFunctor {
        match &self.kind {
            ModuleKind::Subgroup(m) => &m.functor,
            ModuleKind::Pointed(m) => &m.functor,
            ModuleKind::Explicit(f) => f,
        }
    }

    pub fn functor_mut(&mut self) -> &mut BigradedFunctor {
        match &mut self.kind {
            ModuleKind::Subgroup(m) => &mut m.functor,
            ModuleKind::Pointed(m) => &mut m.functor,
            ModuleKind::Explicit(f) => f,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedMorphism {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub data: ModuleMorphismData,
}

/// A project with every section rebuilt into core types.
#[derive(Clone, Debug, PartialEq)]
pub struct Project {
    pub file: ProjectFile,
    pub group: FiniteGroup,
    pub category: CategoryPresentation,
    pub modules: Vec<LoadedModule>,
    pub morphisms: Vec<LoadedMorphism>,
}

impl Project {
    pub fn module(&self, name: &str) -> Option<&LoadedModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn morphism(&self, name: &str) -> Option<&LoadedMorphism> {
        self.morphisms.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadOptions {
    pub tolerance: f64,
    /// Seed for irrep extraction when a project does not list irreps.
    pub seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOL,
            seed: 0,
        }
    }
}

fn check_version(found: &str) -> Result<(), IoError> {
    let parse = |s: &str| -> Option<(u64, u64)> {
        let (a, b) = s.split_once('.')?;
        Some((a.parse().ok()?, b.parse().ok()?))
    };
    let supported = parse(SCHEMA_VERSION).expect("valid constant");
    match parse(found) {
        Some(v) if v <= supported => Ok(()),
        _ => Err(IoError::SchemaVersion {
            found: found.to_string(),
            supported: SCHEMA_VERSION.to_string(),
        }),
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: DeserializeOwned>(origin: &str, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| IoError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Version probe run before full deserialization so that future files are
/// refused with a clear message rather than a field error.
#[derive(Deserialize)]
struct VersionProbe {
    schema_version: String,
    #[serde(default)]
    kind: Option<String>,
}

pub fn parse_project(origin: &str, text: &str, options: LoadOptions) -> Result<Project, IoError> {
    let probe: VersionProbe = parse_json(origin, text)?;
    check_version(&probe.schema_version)?;
    let file: ProjectFile = parse_json(origin, text)?;
    build_project(file, options)
}

pub fn load_project(path: impl AsRef<Path>, options: LoadOptions) -> Result<Project, IoError> {
    let path = path.as_ref();
    parse_project(&path.display().to_string(), &read(path)?, options)
}

/// Rebuilds a project from its file form and verifies structural invariants
/// and recorded fingerprints.
pub fn build_project(file: ProjectFile, options: LoadOptions) -> Result<Project, IoError> {
    check_version(&file.schema_version)?;
    let tol = options.tolerance;
    let g = &file.group;
    if g.mult_table.len() != g.order {
        return Err(invalid(
            "group.mult_table",
            format!("table has {} rows but order is {}", g.mult_table.len(), g.order),
        ));
    }
    let group = FiniteGroup::new(g.mult_table.clone(), g.identity).map_err(|e| invalid("group.mult_table", e))?;
    check_fingerprint("fingerprints.group", file.fingerprints.group.as_deref(), &group_fingerprint(&group))?;

    let category = match (&file.cocycle, &file.irreps) {
        (Some(_), Some(_)) => {
            return Err(invalid("cocycle", "a project has either irreps or a cocycle, not both"));
        }
        (Some(c), None) => {
            let data = PointedFusionData::new(group.clone(), c.values.clone(), tol).map_err(|e| invalid("cocycle", e))?;
            CategoryPresentation::from_pointed(&data, tol).map_err(|e| invalid("cocycle", e))?
        }
        (None, irreps) => {
            let table = match irreps {
                Some(t) => {
                    t.verify(&group, tol).map_err(|e| invalid("irreps", e))?;
                    t.clone()
                }
                None => extract_irreps(&group, options.seed).map_err(|e| invalid("group", e))?,
            };
            CategoryPresentation::from_group(&group, &table, tol).map_err(|e| invalid("irreps", e))?
        }
    };
    let cat_fp = category.fingerprint();
    check_fingerprint("fingerprints.category", file.fingerprints.category.as_deref(), &cat_fp)?;

    let mut modules: Vec<LoadedModule> = Vec::with_capacity(file.modules.len());
    for (i, section) in file.modules.iter().enumerate() {
        let location = format!("modules[{i}] ({})", section.name);
        if modules.iter().any(|m| m.name == section.name) {
            return Err(invalid(location, "duplicate module name"));
        }
        check_fingerprint(
            &format!("{location}.category_fingerprint"),
            Some(&section.category_fingerprint),
            &cat_fp,
        )?;
        let kind = match &section.spec {
            ModuleSpec::Subgroup { elements, irreps } => {
                let h = group.subgroup(elements).map_err(|e| invalid(&location, e))?;
                let m = match irreps {
                    Some(t) => {
                        t.verify(&h.group, tol).map_err(|e| invalid(format!("{location}.irreps"), e))?;
                        module_from_subgroup_with_irreps(&category, &h, t.clone(), tol)
                    }
                    None => module_from_subgroup(&category, &h, options.seed, tol),
                }
                .map_err(|e| invalid(&location, e))?;
                ModuleKind::Subgroup(m)
            }
            ModuleSpec::Pointed { subgroup, mu } => {
                let k = group.subgroup(subgroup).map_err(|e| invalid(&location, e))?;
                let m = module_from_pointed(&category, &k, mu.clone(), tol).map_err(|e| invalid(&location, e))?;
                ModuleKind::Pointed(m)
            }
            ModuleSpec::Explicit { functor } => {
                check_structure(&category, functor, tol).map_err(|msg| invalid(format!("{location}.functor"), msg))?;
                ModuleKind::Explicit(functor.clone())
            }
        };
        let module = LoadedModule {
            name: section.name.clone(),
            kind,
        };
        if let Some(recorded) = file.fingerprints.modules.get(&section.name) {
            check_fingerprint(
                &format!("fingerprints.modules.{}", section.name),
                Some(recorded),
                &module.functor().fingerprint(),
            )?;
        }
        modules.push(module);
    }

    let mut morphisms = Vec::with_capacity(file.morphisms.len());
    for (i, section) in file.morphisms.iter().enumerate() {
        let location = format!("morphisms[{i}] ({})", section.name);
        let find = |name: &str| {
            modules
                .iter()
                .position(|m| m.name == name)
                .ok_or_else(|| IoError::Reference {
                    location: location.clone(),
                    name: name.to_string(),
                })
        };
        let (source, target) = (find(&section.source)?, find(&section.target)?);
        let data = match &section.spec {
            MorphismSpec::Restriction => match (&modules[source].kind, &modules[target].kind) {
                (ModuleKind::Subgroup(x), ModuleKind::Subgroup(y)) => {
                    morphism_from_restriction(&category, x, y, tol).map_err(|e| invalid(&location, e))?
                }
                _ => return Err(invalid(&location, "restriction needs two subgroup modules")),
            },
            MorphismSpec::Explicit { data } => data.clone(),
        };
        let (x, y) = (modules[source].functor(), modules[target].functor());
        if data.source_size != x.base_size || data.target_size != y.base_size || data.n_labels != category.len() {
            return Err(invalid(&location, "morphism data does not match the sizes of its modules"));
        }
        morphisms.push(LoadedMorphism {
            name: section.name.clone(),
            source,
            target,
            data,
        });
    }

    Ok(Project {
        file,
        group,
        category,
        modules,
        morphisms,
    })
}

/// Cheap structural checks: label counts, unit grading and coherence shapes.
fn check_structure(cat: &CategoryPresentation, f: &BigradedFunctor, tol: f64) -> Result<(), String> {
    let j = f.base_size;
    let n = cat.len();
    if f.n_labels != n {
        return Err(format!("module has {} labels, category has {n}", f.n_labels));
    }
    if f.dims.len() != n * j * j || f.coherence.len() != n * n * j * j || f.base_names.len() != j {
        return Err("array lengths do not match the label and base counts".to_string());
    }
    let cert = validate_module(cat, f, tol, ValidationOptions { require_connected: false });
    for name in ["unit grading", "coherence shape"] {
        if let Some(c) = cert.find(name) {
            if !c.pass {
                return Err(format!("{name} fails: {}", c.detail));
            }
        }
    }
    Ok(())
}

fn check_fingerprint(location: &str, recorded: Option<&str>, computed: &str) -> Result<(), IoError> {
    match recorded {
        Some(r) if r != computed => Err(IoError::Fingerprint {
            location: location.to_string(),
            recorded: r.to_string(),
            computed: computed.to_string(),
        }),
        _ => Ok(()),
    }
}

pub fn group_fingerprint(group: &FiniteGroup) -> String {
    let mut h = qhs_core::numkit::ContentHasher::new();
    h.tag("group").count(group.order()).count(group.identity());
    for row in group.mult_table() {
        for &x in row {
            h.count(x);
        }
    }
    h.finish()
}

impl Project {
    /// File form with all fingerprints recomputed from the loaded objects.
    pub fn to_file(&self) -> ProjectFile {
        let mut file = self.file.clone();
        let cat_fp = self.category.fingerprint();
        for m in &mut file.modules {
            m.category_fingerprint = cat_fp.clone();
        }
        file.fingerprints = Fingerprints {
            group: Some(group_fingerprint(&self.group)),
            category: Some(cat_fp),
            modules: self
                .modules
                .iter()
                .map(|m| (m.name.clone(), m.functor().fingerprint()))
                .collect(),
        };
        file
    }
}

pub fn save_project(file: &ProjectFile, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &to_json(file)?)
}

/// Generic envelope for single objects: algebras, certificates, irrep tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: String,
    pub kind: String,
    pub payload: T,
}

pub fn save_document<T: Serialize>(kind: &str, payload: &T, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &document_json(kind, payload)?)
}

pub fn document_json<T: Serialize>(kind: &str, payload: &T) -> Result<String, IoError> {
    to_json(&Document {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: kind.to_string(),
        payload,
    })
}

pub fn load_document<T: DeserializeOwned>(kind: &str, path: impl AsRef<Path>) -> Result<T, IoError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = read(path)?;
    let probe: VersionProbe = parse_json(&origin, &text)?;
    check_version(&probe.schema_version)?;
    let found = probe.kind.unwrap_or_default();
    if found != kind {
        return Err(IoError::Kind {
            location: origin,
            expected: kind.to_string(),
            found,
        });
    }
    let doc: Document<T> = parse_json(&origin, &text)?;
    Ok(doc.payload)
}

pub fn save_certificate(cert: &Certificate, path: impl AsRef<Path>) -> Result<(), IoError> {
    save_document("certificate", cert, path)
}

pub fn load_certificate(path: impl AsRef<Path>) -> Result<Certificate, IoError> {
    load_document("certificate", path)
}

pub fn save_irreps(table: &IrrepTable, path: impl AsRef<Path>) -> Result<(), IoError> {
    save_document("irreps", table, path)
}

pub fn load_irreps(path: impl AsRef<Path>) -> Result<IrrepTable, IoError> {
    load_document("irreps", path)
}

/// Algebra schema: structure constants as `(p, q, r, [re, im])` triplets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub base_object: usize,
    pub basis: Vec<BasisLabel>,
    pub grading: Vec<usize>,
    pub unit_index: usize,
    pub unit_vector: Vec<Complex64>,
    pub star_matrix: ComplexMatrix,
    pub structure_constants: Vec<(usize, usize, usize, Complex64)>,
    pub fingerprint: String,
}

impl AlgebraFile {
    pub fn from_algebra(alg: &SpectralAlgebra) -> Self {
        Self {
            base_object: alg.base_object,
            basis: alg.basis.clone(),
            grading: alg.grading.clone(),
            unit_index: alg.unit_index,
            unit_vector: alg.table.unit_vector.clone(),
            star_matrix: alg.table.star_matrix.clone(),
            structure_constants: alg.triplets(),
            fingerprint: alg.fingerprint(),
        }
    }

    pub fn into_algebra(self, location: &str) -> Result<SpectralAlgebra, IoError> {
        let n = self.basis.len();
        if self.grading.len() != n || self.unit_vector.len() != n || self.star_matrix.shape() != (n, n) || self.unit_index >= n.max(1)
        {
            return Err(invalid(location, "array sizes disagree with the basis"));
        }
        let mut products = vec![Vec::new(); n * n];
        for &(p, q, r, c) in &self.structure_constants {
            if p >= n || q >= n || r >= n {
                return Err(invalid(location, format!("structure constant ({p}, {q}, {r}) out of range")));
            }
            products[p * n + q].push((r, c));
        }
        for row in &mut products {
            row.sort_by_key(|&(r, _)| r);
        }
        let alg = SpectralAlgebra {
            base_object: self.base_object,
            basis: self.basis,
            grading: self.grading,
            unit_index: self.unit_index,
            table: AlgebraTable {
                dim: n,
                products,
                unit_vector: self.unit_vector,
                star_matrix: self.star_matrix,
            },
        };
        check_fingerprint(&format!("{location}.fingerprint"), Some(&self.fingerprint), &alg.fingerprint())?;
        Ok(alg)
    }
}

pub fn algebra_json(alg: &SpectralAlgebra) -> Result<String, IoError> {
    document_json("algebra", &AlgebraFile::from_algebra(alg))
}

pub fn save_algebra(alg: &SpectralAlgebra, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &algebra_json(alg)?)
}

pub fn load_algebra(path: impl AsRef<Path>) -> Result<SpectralAlgebra, IoError> {
    let path = path.as_ref();
    let file: AlgebraFile = load_document("algebra", path)?;
    file.into_algebra(&path.display().to_string())
}
