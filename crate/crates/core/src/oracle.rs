//! Brute-force reference solvers for desk-scale instances: a grid search over
//! the dual-parameter space of the optimal-structure precoding map, and an
//! exhaustive enumeration of schedule assignments around any inner strategy.

use crate::model::{ClusterConfig, Scenario};
use crate::param::{realize_allocation, rescale_full_power, DualParams};
use crate::sinr::{
    downlink_sinr, quality_value, system_utility, Allocation, QualityFunction, UtilityConfig,
};
use crate::strategies::{ScheduleState, StrategyOutput};
use crate::{CoreError, Result};
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Hard cap on the parameter-space dimension `K_r K_c + L`.
const GRID_DIM_CAP: usize = 8;

/// Caps for exhaustive schedule enumeration.
const EXHAUSTIVE_TERMINAL_CAP: usize = 6;
const EXHAUSTIVE_SUBCARRIER_CAP: usize = 2;

fn decode_point(
    pinned: usize,
    mut idx: usize,
    dim: usize,
    points: usize,
) -> Vec<f64> {
    let mut vals = vec![0.0; dim];
    for (axis, v) in vals.iter_mut().enumerate() {
        if axis == pinned {
            *v = 1.0;
        } else {
            let digit = idx % points;
            idx /= points;
            *v = digit as f64 / (points - 1) as f64;
        }
    }
    vals
}

fn duals_from_point(scenario: &Scenario, vals: &[f64]) -> Option<DualParams> {
    let (num_rx, num_sc) = (scenario.dims.num_rx, scenario.dims.num_sc);
    let num_con = scenario.pcs.num_constraints();
    let mut lambda = vec![vec![0.0; num_sc]; num_rx];
    for k in 0..num_rx {
        for c in 0..num_sc {
            lambda[k][c] = vals[k * num_sc + c];
        }
    }
    let omega = vals[num_rx * num_sc..num_rx * num_sc + num_con].to_vec();
    DualParams::new(omega, lambda).ok()
}

fn evaluate_duals(
    scenario: &Scenario,
    cfg: &UtilityConfig,
    qf: QualityFunction,
    duals: &DualParams,
) -> Result<Option<(f64, Allocation, Vec<f64>)>> {
    let ra = match realize_allocation(duals, scenario) {
        Ok(ra) => ra,
        Err(CoreError::UnservableTerminal { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !ra.powers_valid {
        return Ok(None);
    }
    let (scaled, _) = rescale_full_power(&ra, &scenario.pcs);
    if !scaled.feasible {
        return Ok(None);
    }
    let mut per_terminal = vec![0.0; scenario.dims.num_rx];
    for k in 0..scenario.dims.num_rx {
        for c in 0..scenario.dims.num_sc {
            let s = downlink_sinr(&scaled.alloc, &scenario.chans, &scenario.masks, k, c)?;
            if s > 0.0 {
                per_terminal[k] += quality_value(qf, s);
            }
        }
    }
    let u = system_utility(cfg, &per_terminal)?;
    Ok(Some((u, scaled.alloc, per_terminal)))
}

fn schedule_from_duals(scenario: &Scenario, duals: &DualParams) -> ScheduleState {
    let dims = &scenario.dims;
    let mut s = ScheduleState::empty(dims.num_tx, dims.num_sc);
    for k in 0..dims.num_rx {
        for c in 0..dims.num_sc {
            if duals.lambda[k][c] > 0.0 {
                for (j, d) in scenario.clusters.data_sets.iter().enumerate() {
                    if d.contains(&k) {
                        s.serve[j][c].insert(k);
                    }
                }
            }
        }
    }
    s.recompute_coord(scenario);
    s
}

/// Grid search over the dual-parameter hypercube `[0, 1]^{K_r K_c + L}` with
/// one parameter pinned to 1 at a time (the map is invariant to common
/// scaling). Every feasible grid point is realized, rescaled to full power,
/// and scored; the best point is returned. The result is a lower bound on
/// the optimal utility that tightens as the grid is refined.
pub fn grid_search_p1(
    scenario: &Scenario,
    cfg: &UtilityConfig,
    qf: QualityFunction,
    points: usize,
) -> Result<StrategyOutput> {
    let dim = scenario.dims.num_rx * scenario.dims.num_sc + scenario.pcs.num_constraints();
    if dim > GRID_DIM_CAP {
        return Err(CoreError::OracleCapExceeded(format!(
            "parameter dimension {dim} exceeds the cap of {GRID_DIM_CAP}"
        )));
    }
    if points < 2 {
        return Err(CoreError::InvalidParameter("grid needs at least 2 points per axis".into()));
    }
    let per_pin = points.pow((dim - 1) as u32);
    let total = dim * per_pin;
    let best = (0..total)
        .into_par_iter()
        .map(|flat| {
            let (pinned, idx) = (flat / per_pin, flat % per_pin);
            let vals = decode_point(pinned, idx, dim, points);
            let Some(duals) = duals_from_point(scenario, &vals) else {
                return Ok(None);
            };
            match evaluate_duals(scenario, cfg, qf, &duals)? {
                Some((u, _, _)) => Ok(Some((u, flat))),
                None => Ok(None),
            }
        })
        .try_reduce(
            || None,
            |a: Option<(f64, usize)>, b| {
                Ok(match (a, b) {
                    (Some(x), Some(y)) => {
                        // Deterministic: strictly better utility wins, ties go
                        // to the lower flat index.
                        if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                            Some(y)
                        } else {
                            Some(x)
                        }
                    }
                    (x, None) => x,
                    (None, y) => y,
                })
            },
        )?;
    let Some((_, flat)) = best else {
        return Err(CoreError::EmptyAllocation(
            "no feasible grid point found".into(),
        ));
    };
    let (pinned, idx) = (flat / per_pin, flat % per_pin);
    let vals = decode_point(pinned, idx, dim, points);
    let duals = duals_from_point(scenario, &vals)
        .expect("winning grid point must decode to valid duals");
    let (utility, alloc, per_terminal) = evaluate_duals(scenario, cfg, qf, &duals)?
        .expect("winning grid point must stay feasible");
    Ok(StrategyOutput {
        schedule: schedule_from_duals(scenario, &duals),
        allocation: alloc,
        per_terminal,
        utility,
        name: "grid_oracle",
    })
}

/// The same grid search on a restricted scenario in which every terminal is
/// served only by its strongest transmitter. With single-transmitter streams
/// the incoherent and coherent SINRs coincide, so this is the incoherent
/// reference.
pub fn grid_search_p1_single_tx(
    scenario: &Scenario,
    cfg: &UtilityConfig,
    qf: QualityFunction,
    points: usize,
) -> Result<StrategyOutput> {
    let dims = &scenario.dims;
    let mut data_sets = vec![BTreeSet::new(); dims.num_tx];
    for k in 0..dims.num_rx {
        let mut best: Option<(usize, f64)> = None;
        for (j, d) in scenario.clusters.data_sets.iter().enumerate() {
            if !d.contains(&k) {
                continue;
            }
            let e: f64 = (0..dims.num_sc)
                .map(|c| scenario.chans.block(dims, j, k, c).norm_squared())
                .sum();
            if best.map_or(true, |(_, be)| e > be) {
                best = Some((j, e));
            }
        }
        if let Some((j, _)) = best {
            data_sets[j].insert(k);
        }
    }
    let clusters = ClusterConfig::new(data_sets, scenario.clusters.coord_sets.clone());
    let restricted = Scenario::new(
        dims.clone(),
        clusters,
        scenario.chans.clone(),
        scenario.pcs.clone(),
    )?;
    let mut out = grid_search_p1(&restricted, cfg, qf, points)?;
    out.name = "grid_oracle_single_tx";
    Ok(out)
}

/// Evaluate an inner strategy under every admissible schedule assignment and
/// return the best. Admissible means every serve set respects the data
/// clusters and no transmitter exceeds its antenna count with scheduled plus
/// coordinated terminals.
pub fn exhaustive_schedule<F>(
    scenario: &Scenario,
    cfg: &UtilityConfig,
    inner: F,
) -> Result<StrategyOutput>
where
    F: Fn(&ScheduleState) -> Result<StrategyOutput>,
{
    let dims = &scenario.dims;
    let total_served: usize = scenario.clusters.data_sets.iter().map(|d| d.len()).sum();
    if total_served > EXHAUSTIVE_TERMINAL_CAP || dims.num_sc > EXHAUSTIVE_SUBCARRIER_CAP {
        return Err(CoreError::OracleCapExceeded(format!(
            "{total_served} served terminals / {} subcarriers exceed the exhaustive caps",
            dims.num_sc
        )));
    }
    // One subset choice per (transmitter, subcarrier), enumerated together.
    let slots: Vec<(usize, usize, Vec<usize>)> = (0..dims.num_tx)
        .flat_map(|j| {
            (0..dims.num_sc).map(move |c| (j, c))
        })
        .map(|(j, c)| {
            (
                j,
                c,
                scenario.clusters.data_sets[j].iter().cloned().collect::<Vec<usize>>(),
            )
        })
        .collect();
    let bits: usize = slots.iter().map(|(_, _, cand)| cand.len()).sum();
    let mut best: Option<StrategyOutput> = None;
    for combo in 0..(1usize << bits) {
        let mut sched = ScheduleState::empty(dims.num_tx, dims.num_sc);
        let mut offset = 0;
        for (j, c, cand) in &slots {
            for (i, &k) in cand.iter().enumerate() {
                if combo >> (offset + i) & 1 == 1 {
                    sched.serve[*j][*c].insert(k);
                }
            }
            offset += cand.len();
        }
        sched.recompute_coord(scenario);
        let admissible = (0..dims.num_tx).all(|j| {
            (0..dims.num_sc)
                .all(|c| sched.serve[j][c].union(&sched.coord[j][c]).count() <= dims.antennas[j])
        });
        if !admissible {
            continue;
        }
        let out = match inner(&sched) {
            Ok(out) => out,
            Err(CoreError::EmptyAllocation(_)) | Err(CoreError::UnservableTerminal { .. }) => {
                continue
            }
            Err(e) => return Err(e),
        };
        let u = system_utility(cfg, &out.per_terminal)?;
        if best
            .as_ref()
            .map_or(true, |b| {
                system_utility(cfg, &b.per_terminal).map(|bu| u > bu).unwrap_or(false)
            })
        {
            best = Some(out);
        }
    }
    best.ok_or_else(|| CoreError::EmptyAllocation("no admissible schedule found".into()))
}
