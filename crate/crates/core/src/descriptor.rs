//! JSON problem descriptors.
//!
//! ```json
//! {
//!   "sigma": {"preset": "triangular", "params": {"min": 1.5, "max": 2.5}},
//!   "m": {"preset": "tanh"},
//!   "dim": 1
//! }
//! ```
//!
//! `sigma` is either a preset (`constant`, `triangular`, `power-bump`,
//! `compact-bump`) with its parameters, or `{"samples": [...]}` on a uniform grid
//! (row-major `k × k` in 2D). `m` is a preset (`rational`, `tanh`) or
//! `{"samples": {"r": [...], "m": [...]}}`. Unknown keys are rejected everywhere.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{Hamiltonian, KineticModel, SupplyField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDescriptor {
    pub sigma: SigmaSpec,
    pub m: KineticSpec,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<KineticSamples>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSamples {
    pub r: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    value: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangularParams {
    #[serde(default = "default_tri_min")]
    min: f64,
    #[serde(default = "default_tri_max")]
    max: f64,
}

fn default_tri_min() -> f64 {
    1.5
}

fn default_tri_max() -> f64 {
    2.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerBumpParams {
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompactBumpParams {
    center: f64,
    half_width: f64,
    amplitude: f64,
    base: f64,
}

fn params<T: DeserializeOwned>(preset: &str, p: &Option<Map<String, Value>>) -> Result<T> {
    let v = Value::Object(p.clone().unwrap_or_default());
    serde_json::from_value(v).map_err(|e| Error::InvalidSupply(format!("{preset} params: {e}")))
}

impl SigmaSpec {
    pub fn build(&self, dim: usize) -> Result<SupplyField> {
        match (&self.preset, &self.samples) {
            (Some(_), Some(_)) => Err(Error::InvalidSupply("give either \"preset\" or \"samples\", not both".into())),
            (None, None) => Err(Error::InvalidSupply("need \"preset\" or \"samples\"".into())),
            (None, Some(values)) => {
                if self.params.is_some() {
                    return Err(Error::InvalidSupply("\"params\" only applies to presets".into()));
                }
                SupplyField::from_samples(values.clone(), dim)
            }
            (Some(name), None) => match name.as_str() {
                "constant" => {
                    let p: ConstantParams = params(name, &self.params)?;
                    SupplyField::constant(p.value, dim)
                }
                "triangular" => {
                    let p: TriangularParams = params(name, &self.params)?;
                    SupplyField::triangular(p.min, p.max, dim)
                }
                "power-bump" => {
                    let p: PowerBumpParams = params(name, &self.params)?;
                    SupplyField::power_bump(p.alpha, p.beta, dim)
                }
                "compact-bump" => {
                    let p: CompactBumpParams = params(name, &self.params)?;
                    SupplyField::compact_bump(p.center, p.half_width, p.amplitude, p.base, dim)
                }
                other => Err(Error::InvalidSupply(format!(
                    "unknown preset \"{other}\" (constant, triangular, power-bump, compact-bump)"
                ))),
            },
        }
    }
}

impl KineticSpec {
    pub fn build(&self) -> Result<KineticModel> {
        match (&self.preset, &self.samples) {
            (Some(name), None) => KineticModel::from_preset(name),
            (None, Some(s)) => KineticModel::from_samples(s.r.clone(), s.m.clone()),
            (Some(_), Some(_)) => Err(Error::InvalidKinetic("give either \"preset\" or \"samples\", not both".into())),
            (None, None) => Err(Error::InvalidKinetic("need \"preset\" or \"samples\"".into())),
        }
    }
}

impl ProblemDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("problem descriptor: {e}")))
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidArgument(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        Ok(Hamiltonian::new(self.sigma.build(self.dim)?, self.m.build()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_descriptor() {
        let d = ProblemDescriptor::from_json(
            r#"{"sigma": {"preset": "triangular", "params": {"min": 1.5, "max": 2.5}}, "m": {"preset": "tanh"}, "dim": 1}"#,
        )
        .unwrap();
        let h = d.build().unwrap();
        assert_eq!(h.sigma.sigma_max(), 2.5);
        assert_eq!(h.kinetic.name(), "tanh");
        // Defaults for the tent.
        let d = ProblemDescriptor::from_json(r#"{"sigma": {"preset": "triangular"}, "m": {"preset": "rational"}, "dim": 2}"#)
            .unwrap();
        assert_eq!(d.build().unwrap().sigma.sigma_min(), 1.5);
    }

    #[test]
    fn samples_both_ways() {
        let d = ProblemDescriptor::from_json(
            r#"{"sigma": {"samples": [1.0, 2.0, 1.5, 1.2]}, "m": {"samples": {"r": [0, 1, 2], "m": [0.5, 0.7, 0.8]}}, "dim": 1}"#,
        )
        .unwrap();
        let h = d.build().unwrap();
        assert_eq!(h.sigma.sigma_max(), 2.0);
        assert!((h.kinetic.eval(0.5) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn unknown_and_missing_keys_rejected() {
        let missing = ProblemDescriptor::from_json(r#"{"sigma": {"preset": "constant", "params": {"value": 2}}, "dim": 1}"#);
        assert!(missing.unwrap_err().to_string().contains("missing field `m`"));
        assert!(ProblemDescriptor::from_json(
            r#"{"sigma": {"preset": "constant", "params": {"value": 2}}, "m": {"preset": "tanh"}, "dim": 1, "x": 0}"#
        )
        .is_err());
        let d = ProblemDescriptor::from_json(
            r#"{"sigma": {"preset": "constant", "params": {"value": 2, "extra": 1}}, "m": {"preset": "tanh"}, "dim": 1}"#,
        )
        .unwrap();
        assert!(d.build().is_err());
        let both = ProblemDescriptor::from_json(
            r#"{"sigma": {"preset": "constant", "samples": [1, 2]}, "m": {"preset": "tanh"}, "dim": 1}"#,
        )
        .unwrap();
        assert!(both.build().is_err());
    }

    #[test]
    fn bad_values_rejected() {
        let d = ProblemDescriptor::from_json(r#"{"sigma": {"preset": "constant", "params": {"value": -1}}, "m": {"preset": "tanh"}, "dim": 1}"#)
            .unwrap();
        assert!(d.build().is_err());
        let d = ProblemDescriptor::from_json(r#"{"sigma": {"preset": "constant", "params": {"value": 1}}, "m": {"preset": "cubic"}, "dim": 1}"#)
            .unwrap();
        assert!(d.build().is_err());
        let d = ProblemDescriptor::from_json(r#"{"sigma": {"preset": "constant", "params": {"value": 1}}, "m": {"preset": "tanh"}, "dim": 3}"#)
            .unwrap();
        assert!(d.build().is_err());
    }
}
