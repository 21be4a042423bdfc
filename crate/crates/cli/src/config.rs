//! Run configuration. The layout is published in `schema/run-config.v1.schema.json`.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use effham::descriptor::ProblemDescriptor;
use effham::homog::{InitialDatum, Viscosity};
use effham::Hamiltonian;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: ProblemDescriptor,
    /// Output directory, relative to the working directory. `--out` wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub effham: EffhamParams,
    #[serde(default)]
    pub onedim: OnedimParams,
    #[serde(default)]
    pub homogenize: HomogenizeParams,
    #[serde(default)]
    pub nonhomog: NonhomogParams,
    #[serde(default)]
    pub verify: VerifyParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffhamParams {
    pub radius: f64,
    pub spacing: f64,
    /// Cell grid points per axis; the library default when absent.
    pub grid: Option<usize>,
    /// Iteration tolerance of the discounted solver.
    pub tol: Option<f64>,
    pub n_max: u32,
}

impl Default for EffhamParams {
    fn default() -> Self {
        Self { radius: 1.5, spacing: 0.1, grid: None, tol: None, n_max: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnedimParams {
    pub p: Vec<f64>,
    /// Bisection tolerance in `a`.
    pub tol: f64,
    /// Corrector samples per period; zero disables the corrector dump.
    pub corrector_samples: usize,
}

impl Default for OnedimParams {
    fn default() -> Self {
        Self { p: vec![0.0, 0.25, 0.5, 1.0, 1.5], tol: 1e-10, corrector_samples: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogenizeParams {
    pub u0: InitialDatum,
    pub t_final: f64,
    pub eps_inverse: Vec<u32>,
    pub cells_per_period: usize,
    pub cfl: f64,
    pub table_spacing: f64,
    pub viscosity: Viscosity,
}

impl Default for HomogenizeParams {
    fn default() -> Self {
        Self {
            u0: InitialDatum::Sine(0.03),
            t_final: 0.5,
            eps_inverse: vec![4, 8, 16, 32],
            cells_per_period: 32,
            cfl: 0.9,
            table_spacing: 0.05,
            viscosity: Viscosity::Global,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonhomogParams {
    pub u0: InitialDatum,
    pub x_probe: Vec<f64>,
    pub t_probe: f64,
    pub eps_inverse: Vec<u32>,
    pub cells_per_period: usize,
    pub cfl: f64,
    pub deltas: Vec<f64>,
    pub viscosity: Viscosity,
}

impl Default for NonhomogParams {
    fn default() -> Self {
        Self {
            u0: InitialDatum::Constant(0.0),
            x_probe: vec![0.5],
            t_probe: 1.0,
            eps_inverse: vec![4, 8, 16, 24, 32, 41],
            cells_per_period: 1024,
            cfl: 0.9,
            deltas: vec![0.1, 0.05, 0.025],
            viscosity: Viscosity::Local,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyParams {
    pub radius: f64,
    pub spacing: f64,
    pub grid: usize,
    /// Allowed `|H̄ − c(P)| / σ_min` against the exact 1D critical value.
    pub oracle_tol: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self { radius: 1.5, spacing: 0.1, grid: 256, oracle_tol: 2e-2 }
    }
}

/// A parsed config together with the problem it describes.
pub struct Loaded {
    pub config: RunConfig,
    pub ham: Hamiltonian,
}

pub fn parse(text: &str) -> Result<Loaded> {
    let config: RunConfig = serde_json::from_str(text).context("config does not match the schema")?;
    if config.schema_version != SCHEMA_VERSION {
        bail!("unsupported schema_version {} (this build reads {SCHEMA_VERSION})", config.schema_version);
    }
    let ham = config.problem.build().context("in \"problem\"")?;
    Ok(Loaded { config, ham })
}

pub fn load(path: &std::path::Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "problem": {"sigma": {"preset": "triangular"}, "m": {"preset": "tanh"}, "dim": 1}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let l = parse(MINIMAL).unwrap();
        assert_eq!(l.config.homogenize.eps_inverse, vec![4, 8, 16, 32]);
        assert_eq!(l.config.homogenize.u0, InitialDatum::Sine(0.03));
        assert_eq!(l.config.nonhomog.viscosity, Viscosity::Local);
        assert_eq!(l.ham.sigma.sigma_min(), 1.5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "{\n  \"schema_version\": 1,\n  \"problem\": {\"sigma\": {\"preset\": \"triangular\"}, \"dim\": 1}\n}";
        let err = format!("{:#}", parse(text).err().unwrap());
        assert!(err.contains("missing field `m`"), "{err}");
        assert!(err.contains("line 3"), "{err}");

        let text = "{\n  \"schema_version\": 1,\n  \"problem\": {\"sigma\": {\"preset\": \"triangular\"}, \"m\": {\"preset\": \"tanh\"}, \"dim\": 1},\n  \"onedim\": {\"q\": [1]}\n}";
        let err = format!("{:#}", parse(text).err().unwrap());
        assert!(err.contains("unknown field `q`") && err.contains("line 4"), "{err}");
    }

    #[test]
    fn version_is_checked() {
        let text = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn shipped_schema_matches() {
        let schema: serde_json::Value =
            serde_json::from_str(include_str!("../../../schema/run-config.v1.schema.json")).unwrap();
        assert_eq!(schema["properties"]["schema_version"]["const"], SCHEMA_VERSION);
        // Every top-level key the parser accepts is documented.
        let documented: Vec<&str> = schema["properties"].as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let full = serde_json::to_value(parse(MINIMAL).unwrap().config).unwrap();
        for key in full.as_object().unwrap().keys() {
            assert!(documented.contains(&key.as_str()), "{key} missing from the schema");
        }
    }
}
