//! Step densities on residue classes.
//!
//! ```json
//! {"level": 1, "classes": [{"residues": [0, 1], "weight": 2.0}, {"residues": [2, 3], "weight": 1.0}]}
//! ```
//!
//! Residues are taken of the rescaled point `p^r x`, where `r` is the support
//! radius; classes not listed have density 0.

use std::path::Path;

use anyhow::{bail, Context, Result};
use padicslice::DensitySpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassWeight {
    pub residues: Vec<u64>,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub level: u32,
    pub classes: Vec<ClassWeight>,
}

/// `uniform`, or the path of a density file.
pub fn resolve(arg: &str, support_radius: u32, p: u64, precision: u32, n_vars: usize) -> Result<DensitySpec> {
    if arg == "uniform" {
        return Ok(DensitySpec::uniform_with_radius(support_radius));
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read density file {}", path.display()))?;
    let file: DensityFile =
        serde_json::from_str(&text).with_context(|| format!("{} is not a density file", path.display()))?;
    if file.level == 0 || file.level > precision {
        bail!("density level {} must lie in 1..={precision}", file.level);
    }
    let modulus = p.checked_pow(file.level).context("density modulus does not fit in 64 bits")?;
    for class in &file.classes {
        if class.residues.len() != n_vars {
            bail!("residue class {:?} has {} entries, expected {n_vars}", class.residues, class.residues.len());
        }
        if let Some(r) = class.residues.iter().find(|&&r| r >= modulus) {
            bail!("residue {r} is not reduced modulo {modulus}");
        }
    }
    let entries = file.classes.into_iter().map(|c| (c.residues, c.weight));
    Ok(DensitySpec::residue_step(file.level, entries, support_radius)?)
}
