//! JSON variety files.
//!
//! ```json
//! {
//!   "name": "elliptic",
//!   "ambient": {"type": "affine", "n_vars": 2},
//!   "variables": ["x", "y"],
//!   "polynomials": ["y^2 - x^3 - 1"],
//!   "dimension": 1,
//!   "degree": 3
//! }
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use padicslice::{Ambient, VarietySpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientRecord {
    #[serde(rename = "type")]
    pub kind: Ambient,
    pub n_vars: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarietyFile {
    pub name: String,
    pub ambient: AmbientRecord,
    pub variables: Vec<String>,
    pub polynomials: Vec<String>,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u64>,
}

impl VarietyFile {
    pub fn to_spec(&self) -> Result<VarietySpec> {
        if self.ambient.n_vars != self.variables.len() {
            bail!(
                "ambient declares {} variables but {} are listed",
                self.ambient.n_vars,
                self.variables.len()
            );
        }
        let vars: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        let polys: Vec<&str> = self.polynomials.iter().map(String::as_str).collect();
        let spec = VarietySpec::from_strings(&self.name, self.ambient.kind, &vars, &polys, self.dimension, self.degree)?;
        Ok(spec)
    }
}

pub fn load(path: &Path) -> Result<VarietySpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: VarietyFile =
        serde_json::from_str(&text).with_context(|| format!("{} is not a variety file", path.display()))?;
    file.to_spec().with_context(|| format!("invalid variety in {}", path.display()))
}
