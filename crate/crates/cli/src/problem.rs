//! The JSON problem file shared by all commands.

use std::collections::BTreeMap;
use std::path::Path;

use phaseint::cplane::{Expr, PathSpec, RationalIntegrand, RationalSpec};
use phaseint::symmetry::SymmetryTransform;
use phaseint::C64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Printed alongside input errors.
pub const SCHEMA: &str = r#"problem file (JSON, unknown keys rejected):
{
  "integrand":  {"num": [coef, ...], "den": [coef, ...]},   coef = [re, im] | number | "expr"
  "params":     {"delta": [re, im], ...},
  "basepoint":  "expr in params",                          optional
  "paths":      {"name": {"waypoints": [[re, im], ...], "closed": false, "clearance": 0.0}},
  "transforms": {"name": {"f": "1", "g": {"a": [re, im], "b": [re, im], "conj": false},
                          "h": {"map": "delta->i*delta", "conj": false}, "mu_steps": 64}},
  "tolerances": {"ode": 1e-10, "match_threshold": 1e-8, "relation": 1e-5},
  "output":     {"svg": "out.svg", "radius": 10.0}
}"#;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_threshold: Option<f64>,
    /// Residual above which a symmetry relation counts as failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub integrand: RationalSpec,
    #[serde(default, with = "param_map")]
    pub params: BTreeMap<String, C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<String>,
    #[serde(default)]
    pub paths: BTreeMap<String, PathSpec>,
    #[serde(default)]
    pub transforms: BTreeMap<String, SymmetryTransform>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputOptions,
}

mod param_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, C64>, s: S) -> Result<S::Ok, S::Error> {
        let pairs: BTreeMap<&String, [f64; 2]> = m.iter().map(|(k, z)| (k, [z.re, z.im])).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, C64>, D::Error> {
        let pairs = BTreeMap::<String, [f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|(k, [re, im])| (k, C64::new(re, im))).collect())
    }
}

impl ProblemFile {
    pub fn parse(src: &str) -> Result<Self, CliError> {
        serde_json::from_str(src).map_err(|e| CliError::Input(format!("problem file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn integrand(&self) -> Result<RationalIntegrand, CliError> {
        Ok(RationalIntegrand::new(self.integrand.clone(), self.params.clone())?)
    }

    /// The basepoint expression evaluated at the problem parameters.
    pub fn basepoint_value(&self) -> Result<Option<C64>, CliError> {
        self.basepoint.as_deref().map(|src| Ok(Expr::parse(src)?.eval(&self.params)?)).transpose()
    }

    /// A named path from the file, or a path JSON file on disk.
    pub fn resolve_path(&self, key: &str) -> Result<PathSpec, CliError> {
        if let Some(p) = self.paths.get(key) {
            return Ok(p.clone());
        }
        let src = read(Path::new(key))?;
        serde_json::from_str(&src).map_err(|e| CliError::Input(format!("path {key}: {e}")))
    }

    pub fn resolve_transform(&self, key: &str) -> Result<SymmetryTransform, CliError> {
        if let Some(t) = self.transforms.get(key) {
            t.validate()?;
            return Ok(t.clone());
        }
        Ok(SymmetryTransform::from_json(&read(Path::new(key))?)?)
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
