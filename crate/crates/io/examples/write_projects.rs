//! Regenerates the shipped example projects.
//!
//! `cargo run -p qhs-io --example write_projects -- projects`

use std::path::PathBuf;

fn main() -> Result<(), qhs_io::IoError> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "projects".into()));
    for (name, file) in qhs_io::samples::shipped_projects()? {
        let path = dir.join(name);
        qhs_io::save_project(&file, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
