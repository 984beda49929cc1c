//! The example projects shipped in `projects/`, built in code so that their
//! recorded fingerprints always match what the loader computes.

use num_complex::Complex64;
use qhs_core::grouprep::{extract_irreps, FiniteGroup};
use qhs_core::tensorcat::PointedFusionData;

use crate::{
    build_project, CocycleSection, Fingerprints, GroupSection, IoError, LoadOptions, ModuleSection, ModuleSpec,
    MorphismSection, MorphismSpec, ProjectFile, SCHEMA_VERSION,
};

/// File names and contents of every shipped project.
pub fn shipped_projects() -> Result<Vec<(&'static str, ProjectFile)>, IoError> {
    Ok(vec![
        ("s3.qhs", s3_family()?),
        ("s3_inclusion.qhs", s3_inclusion()?),
        ("z4_pointed.qhs", z4_pointed(0)?),
        ("z4_twisted.qhs", z4_pointed(2)?),
    ])
}

/// `Rep(S3)` with one module per conjugacy class of subgroups.
pub fn s3_family() -> Result<ProjectFile, IoError> {
    let g = FiniteGroup::symmetric(3);
    let a3 = g.closure(&[3]).map_err(|e| IoError::Invalid {
        location: "s3".into(),
        message: e.to_string(),
    })?;
    let subgroups = [
        ("trivial", vec![0]),
        ("z2", vec![0, 2]),
        ("a3", a3.elements),
        ("s3", (0..6).collect()),
    ];
    let modules = subgroups
        .into_iter()
        .map(|(name, elements)| subgroup_section(&g, name, elements))
        .collect::<Result<Vec<_>, _>>()?;
    finish(rep_file("s3", &g, modules, Vec::new())?)
}

/// The inclusion `C(Z2\S3) → C(S3)` induced by restricting from `Rep(Z2)` to `Rep({e})`.
pub fn s3_inclusion() -> Result<ProjectFile, IoError> {
    let g = FiniteGroup::symmetric(3);
    let modules = vec![
        subgroup_section(&g, "z2", vec![0, 2])?,
        subgroup_section(&g, "trivial", vec![0])?,
    ];
    let morphisms = vec![MorphismSection {
        name: "restrict-z2-e".into(),
        source: "z2".into(),
        target: "trivial".into(),
        spec: MorphismSpec::Restriction,
    }];
    finish(rep_file("s3-inclusion", &g, modules, morphisms)?)
}

/// `Vec_{Z4}^ω` for the cocycle class `p`, with modules from `{e}` and `Z2`.
/// The cocycle restricts trivially to `Z2` for `p ∈ {0, 2}`, so `μ = 1` there.
pub fn z4_pointed(p: usize) -> Result<ProjectFile, IoError> {
    let data = PointedFusionData::cyclic(4, p);
    let one = Complex64::new(1.0, 0.0);
    let modules = vec![
        ModuleSection {
            name: "k=z2".into(),
            spec: ModuleSpec::Pointed {
                subgroup: vec![0, 2],
                mu: vec![one; 4],
            },
            category_fingerprint: String::new(),
        },
        ModuleSection {
            name: "k=e".into(),
            spec: ModuleSpec::Pointed {
                subgroup: vec![0],
                mu: vec![one],
            },
            category_fingerprint: String::new(),
        },
    ];
    let file = ProjectFile {
        schema_version: SCHEMA_VERSION.into(),
        name: if p == 0 { "z4-pointed".into() } else { format!("z4-twisted-p{p}") },
        group: group_section(&data.group),
        irreps: None,
        cocycle: Some(CocycleSection { values: data.cocycle }),
        modules,
        morphisms: Vec::new(),
        fingerprints: Fingerprints::default(),
    };
    finish(file)
}

fn group_section(g: &FiniteGroup) -> GroupSection {
    GroupSection {
        order: g.order(),
        identity: g.identity(),
        mult_table: g.mult_table().to_vec(),
    }
}

fn subgroup_section(g: &FiniteGroup, name: &str, elements: Vec<usize>) -> Result<ModuleSection, IoError> {
    let h = g.subgroup(&elements).map_err(|e| IoError::Invalid {
        location: name.into(),
        message: e.to_string(),
    })?;
    let irreps = extract_irreps(&h.group, 0).map_err(|e| IoError::Invalid {
        location: name.into(),
        message: e.to_string(),
    })?;
    Ok(ModuleSection {
        name: name.into(),
        spec: ModuleSpec::Subgroup {
            elements,
            irreps: Some(irreps),
        },
        category_fingerprint: String::new(),
    })
}

fn rep_file(
    name: &str,
    g: &FiniteGroup,
    modules: Vec<ModuleSection>,
    morphisms: Vec<MorphismSection>,
) -> Result<ProjectFile, IoError> {
    let irreps = extract_irreps(g, 0).map_err(|e| IoError::Invalid {
        location: name.into(),
        message: e.to_string(),
    })?;
    Ok(ProjectFile {
        schema_version: SCHEMA_VERSION.into(),
        name: name.into(),
        group: group_section(g),
        irreps: Some(irreps),
        cocycle: None,
        modules,
        morphisms,
        fingerprints: Fingerprints::default(),
    })
}

/// Loads the file once and records the computed fingerprints.
fn finish(mut file: ProjectFile) -> Result<ProjectFile, IoError> {
    let probe = {
        let mut f = file.clone();
        f.modules.clear();
        f.morphisms.clear();
        build_project(f, LoadOptions::default())?
    };
    let cat_fp = probe.category.fingerprint();
    for m in &mut file.modules {
        m.category_fingerprint = cat_fp.clone();
    }
    Ok(build_project(file, LoadOptions::default())?.to_file())
}
