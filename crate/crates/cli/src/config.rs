//! Experiment configuration: a single TOML file with a schema version,
//! hashed into every output file for provenance.

use curvedio_core::funcspace::{CurveSystem, InhomFunction, PlanarFn};
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Form-count budget shared by all commands.
    #[serde(default = "default_budget")]
    pub budget: u128,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub curve: CurveSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub psi: PsiSpec,
    #[serde(default)]
    pub ubiquity: UbiquityCfg,
    #[serde(default)]
    pub dimension: DimensionCfg,
    #[serde(default)]
    pub count: CountCfg,
    #[serde(default)]
    pub construct: ConstructCfg,
    #[serde(default)]
    pub covers: CoversCfg,
    #[serde(default)]
    pub divergence: DivergenceCfg,
}

fn default_budget() -> u128 {
    1_000_000_000
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub name: String,
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    /// Veronese dimension (name = "veronese" only).
    pub n: Option<usize>,
}

fn default_domain() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    pub name: String,
    /// Constant value (name = "constant").
    pub value: Option<f64>,
    /// Monomial exponent (name = "power").
    pub exponent: Option<u32>,
    /// Polynomial coefficients, low order first (name = "poly").
    pub coeffs: Option<Vec<f64>>,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        Self { name: "zero".into(), value: None, exponent: None, coeffs: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    /// Power-law exponent `psi(q) = q^{-v}`.
    pub v: f64,
}

impl Default for PsiSpec {
    fn default() -> Self {
        Self { v: 3.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UbiquityCfg {
    pub calibration_t: u32,
    pub calibration_target: f64,
    pub t_min: u32,
    pub t_max: u32,
    pub subintervals: usize,
    pub k_min: f64,
}

impl Default for UbiquityCfg {
    fn default() -> Self {
        Self {
            calibration_t: 4,
            calibration_target: 0.5,
            t_min: 5,
            t_max: 9,
            subintervals: 8,
            k_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionCfg {
    pub v_list: Vec<f64>,
    pub scale_min: u32,
    pub scale_max: u32,
    pub tolerance: f64,
    pub svolume_t_min: u32,
    pub svolume_t_max: u32,
}

impl Default for DimensionCfg {
    fn default() -> Self {
        Self {
            v_list: vec![2.5, 3.0, 4.0],
            scale_min: 6,
            scale_max: 14,
            tolerance: 0.10,
            svolume_t_min: 4,
            svolume_t_max: 7,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountCfg {
    pub h_min: i64,
    pub h_max: i64,
    pub deltas: Vec<f64>,
    pub v: f64,
    pub growth_factor: f64,
    pub phi_q_min: i64,
    pub phi_q_max: i64,
    pub phi_delta: f64,
    pub phi_j_list: Vec<[f64; 2]>,
}

impl Default for CountCfg {
    fn default() -> Self {
        Self {
            h_min: 16,
            h_max: 256,
            deltas: vec![0.0, 0.5, 1.0],
            v: 3.0,
            growth_factor: 4.0,
            phi_q_min: 32,
            phi_q_max: 256,
            phi_delta: 1e-2,
            phi_j_list: vec![[0.0, 1.0], [0.3, 0.5]],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstructCfg {
    pub q_list: Vec<i64>,
    pub xi_count: usize,
    pub delta: f64,
    pub min_success: f64,
    pub growth_factor: f64,
}

impl Default for ConstructCfg {
    fn default() -> Self {
        Self {
            q_list: vec![16, 32, 64, 128],
            xi_count: 100,
            delta: 1e-2,
            min_success: 0.9,
            growth_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoversCfg {
    pub t_list: Vec<u32>,
    pub eps: f64,
    pub eps1: f64,
    pub threshold_constants: Vec<f64>,
}

impl Default for CoversCfg {
    fn default() -> Self {
        Self {
            t_list: vec![6, 7, 8],
            eps: 0.1,
            eps1: 0.05,
            threshold_constants: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergenceCfg {
    pub s_list: Vec<f64>,
    pub v_list: Vec<f64>,
    pub q_max: u64,
}

impl Default for DivergenceCfg {
    fn default() -> Self {
        Self {
            s_list: vec![0.25, 0.5, 0.6, 0.75, 1.0],
            v_list: vec![2.0, 2.5, 3.0, 4.0],
            q_max: 1 << 14,
        }
    }
}

/// Parsed config plus the provenance hash of its raw bytes.
pub struct LoadedConfig {
    pub cfg: ExperimentConfig,
    pub hash: String,
}

pub fn load(path: &std::path::Path) -> Result<LoadedConfig, ConfigError> {
    let raw = std::fs::read(path)?;
    let cfg: ExperimentConfig = toml::from_str(std::str::from_utf8(&raw).map_err(|e| invalid(e.to_string()))?)?;
    validate(&cfg)?;
    let hash = hex(&Sha256::digest(&raw));
    Ok(LoadedConfig { cfg, hash })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!(
            "schema_version {} unsupported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    if cfg.budget == 0 {
        return Err(invalid("budget must be positive"));
    }
    if cfg.workers == 0 {
        return Err(invalid("workers must be positive"));
    }
    if !(cfg.psi.v > 0.0) {
        return Err(invalid(format!("psi.v must be positive, got {}", cfg.psi.v)));
    }
    for &v in &cfg.dimension.v_list {
        if !(v > 2.0) {
            return Err(invalid(format!(
                "dimension.v_list entry {v} invalid: the dimension formula runs need v > 2"
            )));
        }
    }
    if cfg.construct.xi_count == 0 || cfg.construct.q_list.is_empty() {
        return Err(invalid("construct needs a nonempty xi/Q batch"));
    }
    if cfg.divergence.s_list.is_empty() || cfg.divergence.v_list.is_empty() {
        return Err(invalid("divergence needs nonempty s and v grids"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn build_curve(&self) -> Result<CurveSystem, ConfigError> {
        let d = (self.curve.domain[0], self.curve.domain[1]);
        let c = match self.curve.name.as_str() {
            "parabola" => CurveSystem::parabola(d),
            "cubic" => CurveSystem::planar(PlanarFn::Cubic, d),
            "veronese" => CurveSystem::veronese(self.curve.n.unwrap_or(2), d),
            other => return Err(invalid(format!("unknown curve {other:?}"))),
        };
        c.map_err(|e| invalid(e.to_string()))
    }

    pub fn build_lambda(&self) -> Result<InhomFunction, ConfigError> {
        let d = (self.curve.domain[0], self.curve.domain[1]);
        match self.lambda.name.as_str() {
            "zero" => Ok(InhomFunction::zero()),
            "constant" => {
                let v = self.lambda.value.ok_or_else(|| invalid("lambda.value required"))?;
                Ok(InhomFunction::constant(v))
            }
            "power" => {
                let k = self.lambda.exponent.ok_or_else(|| invalid("lambda.exponent required"))?;
                Ok(InhomFunction::power(k, d))
            }
            "poly" => {
                let coeffs = self
                    .lambda
                    .coeffs
                    .clone()
                    .ok_or_else(|| invalid("lambda.coeffs required"))?;
                Ok(InhomFunction::poly(coeffs, d))
            }
            other => Err(invalid(format!("unknown lambda {other:?}"))),
        }
    }
}
