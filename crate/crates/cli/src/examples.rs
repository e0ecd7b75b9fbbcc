//! The bundled example systems.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// `(file name, contents)` of every bundled system.
pub const BUNDLED: &[(&str, &str)] = &[
    ("pendulum.sys", include_str!("../data/pendulum.sys")),
    ("aniso_oscillator.sys", include_str!("../data/aniso_oscillator.sys")),
    ("iso_oscillator.sys", include_str!("../data/iso_oscillator.sys")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Writes every bundled file into `dir`, overwriting existing copies.
pub fn install(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(path)
        })
        .collect()
}
