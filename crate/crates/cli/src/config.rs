//! Experiment configuration: one TOML file with sections for dimensions,
//! clusters, constraints, channel model, strategies, sweep, and seeds.
//! Keys ending in `_db` are in decibels; everything else is linear.

use multicell_core::model::{ClusterConfig, Dimensions, PowerConstraintSet};
use multicell_core::{Constellation, QualityFunction};
use serde::Deserialize;
use std::collections::BTreeSet;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}
impl std::error::Error for ConfigError {}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dimensions: DimensionsCfg,
    #[serde(default)]
    pub clusters: ClustersCfg,
    pub constraints: ConstraintsCfg,
    pub channel_model: ChannelCfg,
    pub strategies: StrategiesCfg,
    #[serde(default)]
    pub sweep: SweepCfg,
    pub seeds: SeedsCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionsCfg {
    pub antennas: Vec<usize>,
    pub num_rx: usize,
    pub num_sc: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ClustersCfg {
    /// "network_mimo" (default), "interference", or "custom".
    #[serde(default)]
    pub mode: Option<String>,
    pub data_sets: Option<Vec<Vec<usize>>>,
    pub coord_sets: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsCfg {
    /// "per_transmitter", "per_antenna", or "total".
    pub kind: String,
    pub limits: Option<Vec<f64>>,
    pub limits_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelCfg {
    pub path_loss: Option<Vec<Vec<f64>>>,
    pub path_loss_db: Option<Vec<Vec<f64>>>,
    pub noise: Option<f64>,
    pub noise_db: Option<f64>,
    #[serde(default)]
    pub correlation: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategiesCfg {
    pub list: Vec<String>,
    /// "rate" (default), "mse", or "ser_<M><family>" like "ser_4qam".
    #[serde(default)]
    pub quality: Option<String>,
    pub weights: Option<Vec<f64>>,
    /// Evaluate rates with per-transmitter (incoherent) interference summing.
    #[serde(default)]
    pub incoherent: bool,
    /// Power threshold for dropping weak streams (distributed strategy).
    pub tau: Option<f64>,
    /// Grid resolution for the oracle strategy.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_grid_points() -> usize {
    7
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    /// "none" (default), "power_db", or "phase_sigma_deg".
    #[serde(default)]
    pub variable: Option<String>,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for SweepCfg {
    fn default() -> Self {
        Self { variable: None, values: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsCfg {
    pub base: u64,
    pub realizations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    None,
    PowerDb,
    PhaseSigmaDeg,
}

/// The config after validation, with units resolved to linear scale.
#[derive(Debug, Clone)]
pub struct Validated {
    pub dims: Dimensions,
    pub clusters: ClusterConfig,
    pub constraint_kind: String,
    pub limits: Vec<f64>,
    pub path_loss: Vec<Vec<f64>>,
    pub noise: f64,
    pub correlation: f64,
    pub strategies: Vec<String>,
    pub quality: QualityFunction,
    pub weights: Vec<f64>,
    pub incoherent: bool,
    pub tau: Option<f64>,
    pub grid_points: usize,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub seed_base: u64,
    pub realizations: usize,
}

pub fn parse(text: &str) -> Result<Validated, ConfigError> {
    let cfg: Config =
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    validate(&cfg)
}

fn parse_quality(s: &str) -> Result<QualityFunction, ConfigError> {
    match s {
        "rate" => Ok(QualityFunction::Rate),
        "mse" => Ok(QualityFunction::Mse),
        other => {
            let rest = other.strip_prefix("ser_").ok_or_else(|| {
                ConfigError(format!("unknown quality '{other}'"))
            })?;
            let family = if rest.ends_with("qam") {
                Constellation::Qam
            } else if rest.ends_with("psk") {
                Constellation::Psk
            } else if rest.ends_with("pam") {
                Constellation::Pam
            } else {
                return Err(ConfigError(format!("unknown constellation in '{other}'")));
            };
            let digits = &rest[..rest.len() - 3];
            let m: u32 = digits
                .parse()
                .map_err(|_| ConfigError(format!("bad modulation order in '{other}'")))?;
            QualityFunction::chernoff_ser(m, family)
                .map_err(|e| ConfigError(e.to_string()))
        }
    }
}

pub fn validate(cfg: &Config) -> Result<Validated, ConfigError> {
    let d = &cfg.dimensions;
    let dims = Dimensions::new(d.antennas.clone(), d.num_rx, d.num_sc)
        .map_err(|e| ConfigError(format!("[dimensions] {e}")))?;

    let mode = cfg.clusters.mode.as_deref().unwrap_or("network_mimo");
    let clusters = match mode {
        "network_mimo" => ClusterConfig::ideal_network_mimo(&dims),
        "interference" => ClusterConfig::interference_channel(&dims)
            .map_err(|e| ConfigError(format!("[clusters] {e}")))?,
        "custom" => {
            let to_sets = |v: &Option<Vec<Vec<usize>>>, name: &str| -> Result<Vec<BTreeSet<usize>>, ConfigError> {
                v.as_ref()
                    .ok_or_else(|| {
                        ConfigError(format!("[clusters] custom mode requires {name}"))
                    })
                    .map(|sets| sets.iter().map(|s| s.iter().cloned().collect()).collect())
            };
            ClusterConfig::new(
                to_sets(&cfg.clusters.data_sets, "data_sets")?,
                to_sets(&cfg.clusters.coord_sets, "coord_sets")?,
            )
        }
        other => return Err(ConfigError(format!("[clusters] unknown mode '{other}'"))),
    };
    clusters
        .validate(&dims)
        .map_err(|e| ConfigError(format!("[clusters] {e}")))?;

    let limits = match (&cfg.constraints.limits, &cfg.constraints.limits_db) {
        (Some(v), None) => v.clone(),
        (None, Some(v)) => v.iter().map(|&x| db_to_linear(x)).collect(),
        _ => {
            return Err(ConfigError(
                "[constraints] exactly one of limits / limits_db is required".into(),
            ))
        }
    };
    match cfg.constraints.kind.as_str() {
        "per_transmitter" | "per_antenna" | "total" => {}
        other => {
            return Err(ConfigError(format!("[constraints] unknown kind '{other}'")))
        }
    }
    // Construct once to surface dimension errors early.
    build_constraints(&dims, &cfg.constraints.kind, &limits)
        .map_err(|e| ConfigError(format!("[constraints] {e}")))?;

    let path_loss = match (&cfg.channel_model.path_loss, &cfg.channel_model.path_loss_db) {
        (Some(v), None) => v.clone(),
        (None, Some(v)) => v
            .iter()
            .map(|row| row.iter().map(|&x| db_to_linear(x)).collect())
            .collect(),
        _ => {
            return Err(ConfigError(
                "[channel_model] exactly one of path_loss / path_loss_db is required".into(),
            ))
        }
    };
    if path_loss.len() != dims.num_tx || path_loss.iter().any(|r| r.len() != dims.num_rx) {
        return Err(ConfigError(
            "[channel_model] path loss must have one row per transmitter and one column per terminal"
                .into(),
        ));
    }
    let noise = match (cfg.channel_model.noise, cfg.channel_model.noise_db) {
        (Some(v), None) => v,
        (None, Some(v)) => db_to_linear(v),
        _ => {
            return Err(ConfigError(
                "[channel_model] exactly one of noise / noise_db is required".into(),
            ))
        }
    };
    if noise <= 0.0 {
        return Err(ConfigError("[channel_model] noise must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.channel_model.correlation) {
        return Err(ConfigError("[channel_model] correlation must lie in [0, 1]".into()));
    }

    if cfg.strategies.list.is_empty() {
        return Err(ConfigError("[strategies] list must not be empty".into()));
    }
    for s in &cfg.strategies.list {
        match s.as_str() {
            "cvsinr" | "dvsinr" | "coordinated_zf" | "single_cell" | "grid_oracle" => {}
            other => {
                return Err(ConfigError(format!("[strategies] unknown strategy '{other}'")))
            }
        }
    }
    let quality = parse_quality(cfg.strategies.quality.as_deref().unwrap_or("rate"))?;
    let weights = match &cfg.strategies.weights {
        Some(w) => {
            if w.len() != dims.num_rx {
                return Err(ConfigError(
                    "[strategies] weights length must equal the number of terminals".into(),
                ));
            }
            w.clone()
        }
        None => vec![1.0; dims.num_rx],
    };

    let sweep_variable = match cfg.sweep.variable.as_deref().unwrap_or("none") {
        "none" => SweepVariable::None,
        "power_db" => SweepVariable::PowerDb,
        "phase_sigma_deg" => SweepVariable::PhaseSigmaDeg,
        other => return Err(ConfigError(format!("[sweep] unknown variable '{other}'"))),
    };
    let sweep_values = if cfg.sweep.values.is_empty() {
        if sweep_variable != SweepVariable::None {
            return Err(ConfigError("[sweep] values must not be empty".into()));
        }
        vec![0.0]
    } else {
        cfg.sweep.values.clone()
    };

    if cfg.seeds.realizations == 0 {
        return Err(ConfigError("[seeds] realizations must be positive".into()));
    }

    Ok(Validated {
        dims,
        clusters,
        constraint_kind: cfg.constraints.kind.clone(),
        limits,
        path_loss,
        noise,
        correlation: cfg.channel_model.correlation,
        strategies: cfg.strategies.list.clone(),
        quality,
        weights,
        incoherent: cfg.strategies.incoherent,
        tau: cfg.strategies.tau,
        grid_points: cfg.strategies.grid_points,
        sweep_variable,
        sweep_values,
        seed_base: cfg.seeds.base,
        realizations: cfg.seeds.realizations,
    })
}

pub fn build_constraints(
    dims: &Dimensions,
    kind: &str,
    limits: &[f64],
) -> multicell_core::Result<PowerConstraintSet> {
    match kind {
        "per_transmitter" => PowerConstraintSet::per_transmitter(dims, limits.to_vec()),
        "per_antenna" => PowerConstraintSet::per_antenna(dims, limits.to_vec()),
        "total" => {
            if limits.len() != 1 {
                return Err(multicell_core::CoreError::InvalidParameter(
                    "total-power constraint takes exactly one limit".into(),
                ));
            }
            PowerConstraintSet::total_power(dims, limits[0])
        }
        _ => Err(multicell_core::CoreError::InvalidParameter(format!(
            "unknown constraint kind '{kind}'"
        ))),
    }
}
