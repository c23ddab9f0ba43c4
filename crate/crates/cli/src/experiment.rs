//! Experiment orchestration: sweeps, Monte-Carlo realizations, strategy
//! dispatch, and rate evaluation.

use crate::config::{build_constraints, SweepVariable, Validated};
use multicell_core::channels::{phase_perturb, rayleigh_correlated};
use multicell_core::model::Scenario;
use multicell_core::oracle::grid_search_p1;
use multicell_core::sinr::{downlink_sinr, incoherent_sinr, quality_value};
use multicell_core::strategies::{
    coordinated_zf, cvsinr, dvsinr, single_cell, StrategyOutput,
};
use multicell_core::{Allocation, UtilityConfig};
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Row {
    pub strategy: String,
    pub sweep: f64,
    pub realization: usize,
    pub terminal: usize,
    pub subcarrier: usize,
    pub rate: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepPointSummary {
    pub mean_utility: f64,
    pub realizations: usize,
    pub failures: usize,
    /// One message per failed realization, in task order.
    pub failure_messages: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
    /// strategy -> sweep value (display form) -> summary.
    pub summary: BTreeMap<String, BTreeMap<String, SweepPointSummary>>,
    /// strategy -> (sweep value, per-terminal rate samples).
    pub samples: BTreeMap<String, Vec<(f64, Vec<f64>)>>,
}

pub fn format_sweep_value(v: f64) -> String {
    format!("{v}")
}

/// Run one strategy on a scenario, evaluating rates and powers against the
/// (possibly different) evaluation scenario.
fn run_one(
    name: &str,
    scenario: &Scenario,
    eval: &Scenario,
    cfg: &Validated,
) -> multicell_core::Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
    let out: StrategyOutput = match name {
        "cvsinr" => cvsinr(scenario, &cfg.weights, cfg.quality, None)?,
        "dvsinr" => dvsinr(scenario, &cfg.weights, cfg.quality, None, cfg.tau)?,
        "coordinated_zf" => coordinated_zf(scenario, &cfg.weights, cfg.quality, None)?,
        "single_cell" => single_cell(scenario, &cfg.weights, cfg.quality, None)?,
        "grid_oracle" => {
            let ucfg = UtilityConfig::weighted_sum(cfg.weights.clone())?;
            grid_search_p1(scenario, &ucfg, cfg.quality, cfg.grid_points)?
        }
        other => {
            return Err(multicell_core::CoreError::InvalidParameter(format!(
                "unknown strategy '{other}'"
            )))
        }
    };
    let (rates, utility) = evaluate(&out.allocation, eval, cfg)?;
    Ok((rates, out.allocation.powers.clone(), utility))
}

/// Re-evaluate the stored allocation on the evaluation scenario: per-pair
/// quality values and the weighted sum utility.
pub fn evaluate(
    alloc: &Allocation,
    eval: &Scenario,
    cfg: &Validated,
) -> multicell_core::Result<(Vec<Vec<f64>>, f64)> {
    let dims = &eval.dims;
    let mut rates = vec![vec![0.0; dims.num_sc]; dims.num_rx];
    let mut utility = 0.0;
    for k in 0..dims.num_rx {
        for c in 0..dims.num_sc {
            let s = if cfg.incoherent {
                incoherent_sinr(alloc, &eval.chans, &eval.masks, dims, k, c)?
            } else {
                downlink_sinr(alloc, &eval.chans, &eval.masks, k, c)?
            };
            if s > 0.0 {
                rates[k][c] = quality_value(cfg.quality, s);
            }
            utility += cfg.weights[k] * rates[k][c];
        }
    }
    Ok((rates, utility))
}

struct TaskResult {
    sweep: f64,
    realization: usize,
    per_strategy: Vec<StrategyResult>,
}

enum StrategyResult {
    Ok {
        rates: Vec<Vec<f64>>,
        powers: Vec<Vec<f64>>,
        utility: f64,
    },
    Failed(String),
}

/// Run the full experiment. Deterministic for a fixed config and seed at any
/// worker count: tasks are indexed and results assembled in index order.
pub fn run_experiment(cfg: &Validated, workers: Option<usize>) -> multicell_core::Result<ExperimentResult> {
    let mut tasks = Vec::new();
    for (vi, &v) in cfg.sweep_values.iter().enumerate() {
        for r in 0..cfg.realizations {
            tasks.push((vi, v, r));
        }
    }
    let body = || -> multicell_core::Result<Vec<TaskResult>> {
        tasks
            .par_iter()
            .map(|&(_, v, r)| run_task(cfg, v, r))
            .collect()
    };
    let results = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| multicell_core::CoreError::InvalidParameter(e.to_string()))?;
            pool.install(body)?
        }
        None => body()?,
    };

    let mut rows = Vec::new();
    let mut summary: BTreeMap<String, BTreeMap<String, SweepPointSummary>> = BTreeMap::new();
    let mut samples: BTreeMap<String, Vec<(f64, Vec<f64>)>> = BTreeMap::new();
    for task in &results {
        for (si, sres) in task.per_strategy.iter().enumerate() {
            let name = &cfg.strategies[si];
            let entry = summary
                .entry(name.clone())
                .or_default()
                .entry(format_sweep_value(task.sweep))
                .or_default();
            entry.realizations += 1;
            match sres {
                StrategyResult::Ok { rates, powers, utility } => {
                    entry.mean_utility += utility;
                    let sample_bucket = samples.entry(name.clone()).or_default();
                    let mut per_terminal = vec![0.0; cfg.dims.num_rx];
                    for k in 0..cfg.dims.num_rx {
                        for c in 0..cfg.dims.num_sc {
                            rows.push(Row {
                                strategy: name.clone(),
                                sweep: task.sweep,
                                realization: task.realization,
                                terminal: k,
                                subcarrier: c,
                                rate: rates[k][c],
                                power: powers[k][c],
                            });
                            per_terminal[k] += rates[k][c];
                        }
                    }
                    sample_bucket.push((task.sweep, per_terminal));
                }
                StrategyResult::Failed(msg) => {
                    entry.failures += 1;
                    entry.failure_messages.push(msg.clone());
                }
            }
        }
    }
    for per_sweep in summary.values_mut() {
        for entry in per_sweep.values_mut() {
            let ok = entry.realizations - entry.failures;
            if ok > 0 {
                entry.mean_utility /= ok as f64;
            }
        }
    }
    Ok(ExperimentResult { rows, summary, samples })
}

fn run_task(cfg: &Validated, sweep_value: f64, realization: usize) -> multicell_core::Result<TaskResult> {
    let seed = cfg.seed_base.wrapping_add(realization as u64);
    let chans = rayleigh_correlated(&cfg.dims, &cfg.path_loss, cfg.noise, cfg.correlation, seed)?;
    let limits: Vec<f64> = match cfg.sweep_variable {
        SweepVariable::PowerDb => {
            let p = crate::config::db_to_linear(sweep_value);
            cfg.limits.iter().map(|_| p).collect()
        }
        _ => cfg.limits.clone(),
    };
    let pcs = build_constraints(&cfg.dims, &cfg.constraint_kind, &limits)?;
    let scenario = Scenario::new(
        cfg.dims.clone(),
        cfg.clusters.clone(),
        chans.clone(),
        pcs.clone(),
    )?;
    // Phase sweep: decide on nominal channels, evaluate on phase-perturbed
    // ones (imperfect inter-transmitter synchronization).
    let eval = match cfg.sweep_variable {
        SweepVariable::PhaseSigmaDeg => {
            let sigma = sweep_value.to_radians();
            let perturbed = phase_perturb(&chans, &cfg.dims, sigma, seed ^ 0x9e37_79b9)?;
            Scenario::new(cfg.dims.clone(), cfg.clusters.clone(), perturbed, pcs)?
        }
        _ => scenario.clone(),
    };
    let per_strategy = cfg
        .strategies
        .iter()
        .map(|name| match run_one(name, &scenario, &eval, cfg) {
            Ok((rates, powers, utility)) => StrategyResult::Ok { rates, powers, utility },
            Err(e) => StrategyResult::Failed(e.to_string()),
        })
        .collect();
    Ok(TaskResult {
        sweep: sweep_value,
        realization,
        per_strategy,
    })
}
