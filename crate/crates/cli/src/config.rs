use std::path::PathBuf;

use latorbit_core::geometry::{DirectionSet, Sign, WeightPair};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub weights: WeightsConfig,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(rename = "T_grid", default)]
    pub t_grid: Vec<f64>,
    #[serde(default = "one")]
    pub r: f64,
    pub samples: usize,
    pub seed: u64,
    /// 0 picks the number of available cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(rename = "A", default)]
    pub a_dirs: DirectionConfig,
    #[serde(rename = "B", default)]
    pub b_dirs: DirectionConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub count: CountOptions,
    #[serde(default)]
    pub volume: VolumeOptions,
    #[serde(default)]
    pub siegel: SiegelOptions,
    #[serde(default)]
    pub alpha: AlphaOptions,
    #[serde(default)]
    pub dyadic: DyadicOptions,
    #[serde(default)]
    pub rate: RateOptions,
    #[serde(default)]
    pub double_equi: DoubleEquiOptions,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// A direction set on `S^{k-1}`. Orthant patterns are strings over `+`/`-`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionConfig {
    #[default]
    Full,
    Orthants { patterns: Vec<String> },
    Boxes { boxes: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CountKind {
    #[default]
    E,
    #[serde(rename = "E_positive")]
    EPositive,
    F,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountOptions {
    #[serde(default)]
    pub kind: CountKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RegionChoice {
    /// `E_{T,c}(A, B)` for every `T` in the grid.
    #[default]
    E,
    /// `F_{r,c}`.
    F,
    /// Annulus `d < ‖v‖ < r`.
    #[serde(rename = "annulus")]
    Annulus,
    /// Ball of radius `r`.
    #[serde(rename = "ball")]
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeOptions {
    #[serde(default)]
    pub region: RegionChoice,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodChoice>,
}

fn default_methods() -> Vec<MethodChoice> {
    vec![MethodChoice::ClosedForm]
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { region: RegionChoice::E, methods: default_methods() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiegelOptions {
    #[serde(default)]
    pub region: RegionChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeSource {
    /// `Z^d` alone.
    #[default]
    Identity,
    /// `samples` random unimodular lattices.
    Random,
    /// `g_T Z^d` for every `T` in the grid.
    Flow,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaOptions {
    #[serde(default)]
    pub source: LatticeSource,
}

/// Largest scale for which every `k` is listed.
pub const DYADIC_EXHAUSTIVE_MAX: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicOptions {
    #[serde(default = "default_scale")]
    pub s: u32,
    /// Endpoints to cover; every `1 ≤ k < 2^s` when absent.
    #[serde(default)]
    pub k: Option<Vec<u64>>,
}

fn default_scale() -> u32 {
    8
}

impl Default for DyadicOptions {
    fn default() -> Self {
        Self { s: default_scale(), k: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessChoice {
    Zero,
    #[default]
    IidBlock,
    Markov,
    Dynamical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOptions {
    #[serde(default)]
    pub process: ProcessChoice,
    /// Flip probability of the Markov chain.
    #[serde(default = "default_flip")]
    pub p: f64,
    /// Ball radius of the dynamical observable.
    #[serde(default = "one")]
    pub radius: f64,
    /// Quadrature step for unit integrals; must divide 1.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_flip() -> f64 {
    0.25
}

fn default_step() -> f64 {
    1.0 / 64.0
}

fn default_epsilon() -> f64 {
    0.25
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            process: ProcessChoice::default(),
            p: default_flip(),
            radius: 1.0,
            step: default_step(),
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleEquiOptions {
    /// Second time grid; the `T` grid is reused when absent.
    #[serde(default)]
    pub w_grid: Option<Vec<f64>>,
    /// Support box of the normalized `θ` density inside `[0,1]^{mn}`.
    #[serde(default)]
    pub support: Option<Vec<[f64; 2]>>,
    /// Ball radius in `φ = ψ = exp(−1̂_B)`.
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_t_ref")]
    pub t_ref: f64,
    #[serde(default = "default_mean_samples")]
    pub mean_samples: usize,
}

fn default_t_ref() -> f64 {
    10.0
}

fn default_mean_samples() -> usize {
    20_000
}

impl Default for DoubleEquiOptions {
    fn default() -> Self {
        Self {
            w_grid: None,
            support: None,
            radius: 1.0,
            t_ref: default_t_ref(),
            mean_samples: default_mean_samples(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks shared by every subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let wp = self.weight_pair()?;
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        for (name, v) in [("c", self.c), ("r", self.r)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CliError::Config(format!("{name} must be positive and finite")));
            }
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("T_grid must be finite and strictly increasing".into()));
        }
        self.directions(&wp)?;
        Ok(())
    }

    pub fn weight_pair(&self) -> Result<WeightPair, CliError> {
        Ok(WeightPair::new(self.weights.a.clone(), self.weights.b.clone())?)
    }

    pub fn directions(&self, wp: &WeightPair) -> Result<(DirectionSet, DirectionSet), CliError> {
        Ok((self.a_dirs.build(wp.m())?, self.b_dirs.build(wp.n())?))
    }

    pub fn require_t_grid(&self) -> Result<&[f64], CliError> {
        if self.t_grid.is_empty() {
            return Err(CliError::Config("T_grid is empty".into()));
        }
        Ok(&self.t_grid)
    }

    /// Hex SHA-256 of the canonical JSON form: object keys sorted, no
    /// whitespace, floats in shortest round-trip form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        canonical(&value)
    }
}

fn canonical(v: &serde_json::Value) -> String {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let fields: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical(&map[k])))
                .collect();
            format!("{{{}}}", fields.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

impl DirectionConfig {
    pub fn build(&self, dim: usize) -> Result<DirectionSet, CliError> {
        match self {
            DirectionConfig::Full => Ok(DirectionSet::full(dim)),
            DirectionConfig::Orthants { patterns } => {
                let parsed = patterns
                    .iter()
                    .map(|p| {
                        p.chars()
                            .map(|ch| match ch {
                                '+' => Ok(Sign::Plus),
                                '-' => Ok(Sign::Minus),
                                other => Err(CliError::Config(format!("sign pattern has character {other:?}"))),
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DirectionSet::orthants(dim, parsed)?)
            }
            DirectionConfig::Boxes { boxes } => {
                let parsed = boxes.iter().map(|b| b.iter().map(|&[lo, hi]| (lo, hi)).collect()).collect();
                Ok(DirectionSet::boxes(dim, parsed)?)
            }
        }
    }
}
