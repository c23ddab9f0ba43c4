//! End-to-end acceptance suite. Each test prints one `criterion N: PASS/FAIL`
//! line summarizing the check (run with `--nocapture` to see them on success).

use multicell_core::channels::{phase_perturb, rayleigh};
use multicell_core::dual::{solve_p2, verify_qos, P2Options, P2Status, QosTargets};
use multicell_core::model::{ChannelSet, ClusterConfig, Dimensions, PowerConstraintSet, Scenario};
use multicell_core::oracle::{grid_search_p1, grid_search_p1_single_tx};
use multicell_core::param::{
    gamma_from_params, realize_allocation, rescale_full_power, DualParams,
};
use multicell_core::scenarios;
use multicell_core::sinr::{downlink_sinr, incoherent_sinr, quality_derivative};
use multicell_core::strategies::{
    coordinated_zf, cvsinr, dvsinr, dvsinr_beamformer, heuristic_params, single_cell, waterfill,
    ScheduleState, WaterfillEntry,
};
use multicell_core::{Allocation, Constellation, QualityFunction, UtilityConfig, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

fn report(criterion: usize, result: Result<String, String>) {
    match result {
        Ok(detail) => println!("criterion {criterion}: PASS — {detail}"),
        Err(msg) => {
            println!("criterion {criterion}: FAIL — {msg}");
            panic!("criterion {criterion} failed: {msg}");
        }
    }
}

/// Random small network-MIMO scenario: up to 2 transmitters with up to 4
/// antennas each, up to 4 terminals, up to 2 subcarriers, unit noise.
fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let num_tx = rng.gen_range(1..=2usize);
    let antennas: Vec<usize> = (0..num_tx).map(|_| rng.gen_range(1..=4usize)).collect();
    let num_rx = rng.gen_range(1..=4usize);
    let num_sc = rng.gen_range(1..=2usize);
    let dims = Dimensions::new(antennas, num_rx, num_sc).unwrap();
    let clusters = ClusterConfig::ideal_network_mimo(&dims);
    let path_loss = vec![vec![1.0; num_rx]; num_tx];
    let chans = rayleigh(&dims, &path_loss, 1.0, rng.gen()).unwrap();
    let limits: Vec<f64> = (0..num_tx).map(|_| rng.gen_range(5.0..50.0)).collect();
    let pcs = PowerConstraintSet::per_transmitter(&dims, limits).unwrap();
    Scenario::new(dims, clusters, chans, pcs).unwrap()
}

fn random_duals(rng: &mut ChaCha8Rng, scenario: &Scenario) -> DualParams {
    let omega: Vec<f64> = (0..scenario.pcs.num_constraints())
        .map(|_| rng.gen_range(0.2..1.0))
        .collect();
    let lambda: Vec<Vec<f64>> = (0..scenario.dims.num_rx)
        .map(|_| {
            (0..scenario.dims.num_sc)
                .map(|_| rng.gen_range(0.05..0.5))
                .collect()
        })
        .collect();
    DualParams::new(omega, lambda).unwrap()
}

fn sum_rate(alloc: &Allocation, scenario: &Scenario) -> f64 {
    let mut total = 0.0;
    for k in 0..scenario.dims.num_rx {
        for c in 0..scenario.dims.num_sc {
            let s = downlink_sinr(alloc, &scenario.chans, &scenario.masks, k, c).unwrap();
            total += (1.0 + s).log2();
        }
    }
    total
}

/// A single stream on one antenna and a full-power stream on both antennas
/// achieve the same SINR, and the grid oracle lands on the single-antenna
/// (rank-one) optimum.
#[test]
fn criterion_1_rank_one_optimality() {
    let start = Instant::now();
    let check = (|| -> Result<String, String> {
        let sc = scenarios::rank_degenerate_example();
        let h = sc.chans.stacked(0, 0);
        // Signal correlation matrices diag(1, 0) and diag(1, 1) under unit
        // per-antenna constraints: received power h^H S h over unit noise.
        let s1 = DMatrix::<C64>::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let s2 = DMatrix::<C64>::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let sinr1 = (h.adjoint() * &s1 * h)[(0, 0)].re / sc.chans.noise(0, 0);
        let sinr2 = (h.adjoint() * &s2 * h)[(0, 0)].re / sc.chans.noise(0, 0);
        if (sinr1 - sinr2).abs() > 1e-12 {
            return Err(format!("rank-1 vs rank-2 SINR differ: {sinr1} vs {sinr2}"));
        }

        let ucfg = UtilityConfig::weighted_sum(vec![1.0]).map_err(|e| e.to_string())?;
        let out = grid_search_p1(&sc, &ucfg, QualityFunction::Rate, 5).map_err(|e| e.to_string())?;
        let v = &out.allocation.directions[0][0];
        if v[1].norm() > 1e-12 {
            return Err(format!("optimum uses the dead antenna: |v_2| = {}", v[1].norm()));
        }
        if (out.utility - 1.0).abs() > 1e-12 {
            return Err(format!("optimal rate {} != 1", out.utility));
        }
        Ok(format!(
            "rank-1/rank-2 SINR equal ({sinr1}); grid optimum is rank one with rate {}",
            out.utility
        ))
    })();
    let elapsed = start.elapsed();
    let timed = check.and_then(|d| {
        if elapsed.as_secs_f64() < 1.0 {
            Ok(format!("{d}; {:.3}s", elapsed.as_secs_f64()))
        } else {
            Err(format!("took {:.3}s (limit 1s)", elapsed.as_secs_f64()))
        }
    });
    report(1, timed);
}

/// Two-cell worked example: QoS targets 10/3 are met with powers (10, 20) and
/// only the second transmitter at full power; the max-min grid oracle
/// approaches the same operating point and improves under grid refinement.
#[test]
fn criterion_2_two_cell_worked_example() {
    let start = Instant::now();
    let check = (|| -> Result<String, String> {
        let sc = scenarios::two_user_ic_example();
        let targets = QosTargets::uniform(10.0 / 3.0, 2, 1).map_err(|e| e.to_string())?;
        let res = solve_p2(&targets, &sc, &P2Options::default()).map_err(|e| e.to_string())?;
        if res.status != P2Status::Feasible {
            return Err(format!("solver status {:?}", res.status));
        }
        let p1 = res.allocation.alloc.powers[0][0];
        let p2 = res.allocation.alloc.powers[1][0];
        if (p1 - 10.0).abs() / 10.0 > 1e-4 || (p2 - 20.0).abs() / 20.0 > 1e-4 {
            return Err(format!("powers ({p1}, {p2}) != (10, 20) within 1e-4"));
        }
        let margins = verify_qos(&res.allocation.alloc, &targets, &sc).map_err(|e| e.to_string())?;
        // Only the second transmitter's constraint is active.
        if margins.power_slack[0] < 1.0 {
            return Err(format!("first constraint unexpectedly active, slack {}", margins.power_slack[0]));
        }
        if margins.power_slack[1].abs() > 1e-3 * 20.0 {
            return Err(format!("second constraint not active, slack {}", margins.power_slack[1]));
        }

        let ucfg = UtilityConfig::weighted_max_min(vec![1.0, 1.0]).map_err(|e| e.to_string())?;
        let mut min_sinrs = Vec::new();
        for points in [11usize, 21, 41] {
            let out =
                grid_search_p1(&sc, &ucfg, QualityFunction::Rate, points).map_err(|e| e.to_string())?;
            min_sinrs.push(2f64.powf(out.utility) - 1.0);
        }
        if min_sinrs[1] < (10.0 / 3.0) * 0.95 {
            return Err(format!("min SINR {} at 21 points below 95% of 10/3", min_sinrs[1]));
        }
        if !(min_sinrs[0] <= min_sinrs[1] + 1e-12 && min_sinrs[1] <= min_sinrs[2] + 1e-12) {
            return Err(format!("refinement not monotone: {min_sinrs:?}"));
        }
        Ok(format!(
            "powers ({p1:.4}, {p2:.4}), min SINR by grid 11/21/41 pts: {:.4}/{:.4}/{:.4}",
            min_sinrs[0], min_sinrs[1], min_sinrs[2]
        ))
    })();
    let elapsed = start.elapsed();
    let timed = check.and_then(|d| {
        if elapsed.as_secs_f64() < 30.0 {
            Ok(format!("{d}; {:.2}s", elapsed.as_secs_f64()))
        } else {
            Err(format!("took {:.2}s (limit 30s)", elapsed.as_secs_f64()))
        }
    });
    report(2, timed);
}

/// Feasibility solver on 100 random instances whose targets are constructed
/// to be achievable: every SINR target met within 1e-6 relative, every power
/// constraint within 1e-9 relative, dual gap closed to 1e-5 of the weighted
/// budget.
#[test]
fn criterion_3_duality_suite() {
    let start = Instant::now();
    let check = (|| -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5);
        let mut done = 0usize;
        let mut attempts = 0usize;
        while done < 100 {
            attempts += 1;
            if attempts > 2000 {
                return Err(format!("only {done} feasible instances in {attempts} attempts"));
            }
            let base = random_scenario(&mut rng);
            let duals = random_duals(&mut rng, &base);
            let ra = match realize_allocation(&duals, &base) {
                Ok(ra) if ra.powers_valid => ra,
                _ => continue,
            };
            // Saddle-point construction: with budgets equal to the realized
            // consumption, the generating duals satisfy complementary
            // slackness, so the achieved SINRs sit exactly on the full-power
            // feasibility boundary and the optimal dual gap is zero.
            if ra.consumed.iter().any(|&u| u < 1e-6) {
                continue;
            }
            let pcs = PowerConstraintSet::per_transmitter(&base.dims, ra.consumed.clone())
                .map_err(|e| e.to_string())?;
            let sc = Scenario::new(
                base.dims.clone(),
                base.clusters.clone(),
                base.chans.clone(),
                pcs,
            )
            .map_err(|e| e.to_string())?;
            let mut gamma = vec![vec![0.0; sc.dims.num_sc]; sc.dims.num_rx];
            let mut any = false;
            for k in 0..sc.dims.num_rx {
                for c in 0..sc.dims.num_sc {
                    if ra.alloc.powers[k][c] > 0.0 {
                        gamma[k][c] = downlink_sinr(&ra.alloc, &sc.chans, &sc.masks, k, c)
                            .map_err(|e| e.to_string())?;
                        any = true;
                    }
                }
            }
            if !any {
                continue;
            }
            let targets = QosTargets::new(gamma).map_err(|e| e.to_string())?;
            let opts = P2Options {
                outer_iters: 2000,
                ..P2Options::default()
            };
            let res = solve_p2(&targets, &sc, &opts).map_err(|e| e.to_string())?;
            if res.status != P2Status::Feasible {
                let over: Vec<f64> = res
                    .allocation
                    .consumed
                    .iter()
                    .zip(&sc.pcs.limits)
                    .map(|(&u, &q)| u / q - 1.0)
                    .collect();
                return Err(format!(
                    "instance {done}: status {:?} (gap {:.3e}, {} iterations, powers_valid {}, overshoot {:?})",
                    res.status, res.dual_gap, res.iterations, res.allocation.powers_valid, over
                ));
            }
            let margins =
                verify_qos(&res.allocation.alloc, &targets, &sc).map_err(|e| e.to_string())?;
            for (k, c, m) in &margins.sinr {
                let g = targets.gamma[*k][*c];
                if *m < -1e-6 * g {
                    return Err(format!(
                        "instance {done}: target ({k},{c}) missed by {:.3e} relative",
                        -m / g
                    ));
                }
            }
            for (l, slack) in margins.power_slack.iter().enumerate() {
                if *slack < -1e-9 * sc.pcs.limits[l] {
                    return Err(format!("instance {done}: constraint {l} violated by {slack:.3e}"));
                }
            }
            let budget: f64 = res
                .duals
                .omega
                .iter()
                .zip(&sc.pcs.limits)
                .map(|(&w, &q)| w * q)
                .sum();
            if res.dual_gap.abs() > 1e-5 * budget {
                return Err(format!(
                    "instance {done}: |dual gap| {:.3e} > 1e-5 * budget {:.3e}",
                    res.dual_gap.abs(),
                    budget
                ));
            }
            done += 1;
        }
        Ok(format!("100 instances feasible, targets met, gap closed ({attempts} attempts)"))
    })();
    let elapsed = start.elapsed();
    let timed = check.and_then(|d| {
        if elapsed.as_secs_f64() < 300.0 {
            Ok(format!("{d}; {:.1}s", elapsed.as_secs_f64()))
        } else {
            Err(format!("took {:.1}s (limit 300s)", elapsed.as_secs_f64()))
        }
    });
    report(3, timed);
}

/// The dual-parameter map on 1000 random points: achieved SINRs equal the
/// attainable levels, common scaling of all multipliers leaves the allocation
/// untouched, and the levels move in the right direction under single
/// multiplier perturbations.
#[test]
fn criterion_4_realization_suite() {
    let check = (|| -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4ea1);
        let mut sinr_checked = 0usize;
        for instance in 0..1000usize {
            let sc = random_scenario(&mut rng);
            let duals = random_duals(&mut rng, &sc);
            let ra = realize_allocation(&duals, &sc).map_err(|e| e.to_string())?;

            if ra.powers_valid {
                for k in 0..sc.dims.num_rx {
                    for c in 0..sc.dims.num_sc {
                        if ra.alloc.powers[k][c] <= 0.0 {
                            continue;
                        }
                        let s = downlink_sinr(&ra.alloc, &sc.chans, &sc.masks, k, c)
                            .map_err(|e| e.to_string())?;
                        let g = ra.gamma[k][c];
                        if (s - g).abs() > 1e-8 * g.max(1e-300) {
                            return Err(format!(
                                "instance {instance}: SINR {s} != level {g} at ({k},{c})"
                            ));
                        }
                        sinr_checked += 1;
                    }
                }
            }

            // Common scaling invariance (binary factor keeps the scaled
            // inputs exactly proportional in floating point).
            let t = 2.0;
            let scaled = DualParams::new(
                duals.omega.iter().map(|&w| w * t).collect(),
                duals
                    .lambda
                    .iter()
                    .map(|row| row.iter().map(|&l| l * t).collect())
                    .collect(),
            )
            .unwrap();
            let rb = realize_allocation(&scaled, &sc).map_err(|e| e.to_string())?;
            for k in 0..sc.dims.num_rx {
                for c in 0..sc.dims.num_sc {
                    if ra.powers_valid {
                        let dp = (ra.alloc.powers[k][c] - rb.alloc.powers[k][c]).abs();
                        if dp > 1e-10 * ra.alloc.powers[k][c].abs().max(1.0) {
                            return Err(format!(
                                "instance {instance}: power changed {dp:.3e} under scaling"
                            ));
                        }
                    }
                    let dv = (&ra.alloc.directions[k][c] - &rb.alloc.directions[k][c]).norm();
                    if dv > 1e-10 {
                        return Err(format!(
                            "instance {instance}: direction changed {dv:.3e} under scaling"
                        ));
                    }
                }
            }

            // Monotonicity of the attainable level in single multipliers.
            let k = rng.gen_range(0..sc.dims.num_rx);
            let c = rng.gen_range(0..sc.dims.num_sc);
            let base = gamma_from_params(&duals, &sc.chans, &sc.masks, &sc.pcs, k, c)
                .map_err(|e| e.to_string())?;
            let delta = 0.1;

            let mut up = duals.clone();
            up.lambda[k][c] += delta;
            let g_up = gamma_from_params(&up, &sc.chans, &sc.masks, &sc.pcs, k, c)
                .map_err(|e| e.to_string())?;
            if g_up <= base {
                return Err(format!(
                    "instance {instance}: own multiplier increase lowered the level ({base} -> {g_up})"
                ));
            }

            let mut wider = duals.clone();
            wider.omega[0] += delta;
            let g_w = gamma_from_params(&wider, &sc.chans, &sc.masks, &sc.pcs, k, c)
                .map_err(|e| e.to_string())?;
            if g_w > base * (1.0 + 1e-12) {
                return Err(format!(
                    "instance {instance}: constraint multiplier increase raised the level ({base} -> {g_w})"
                ));
            }

            if sc.dims.num_rx > 1 {
                let other = (k + 1) % sc.dims.num_rx;
                let mut cross = duals.clone();
                cross.lambda[other][c] += delta;
                let g_x = gamma_from_params(&cross, &sc.chans, &sc.masks, &sc.pcs, k, c)
                    .map_err(|e| e.to_string())?;
                if g_x > base * (1.0 + 1e-12) {
                    return Err(format!(
                        "instance {instance}: interferer multiplier increase raised the level ({base} -> {g_x})"
                    ));
                }
            }
        }
        Ok(format!("1000 dual points checked; {sinr_checked} positive-power SINRs matched"))
    })();
    report(4, check);
}

/// Waterfilling: budget equality to 1e-10, common marginal-utility level on
/// active streams to 1e-8, sub-level marginals on inactive streams, and the
/// two-stream closed form matched to 1e-9.
#[test]
fn criterion_5_waterfilling_suite() {
    let check = (|| -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3a7e);
        let qualities = [
            QualityFunction::Rate,
            QualityFunction::Mse,
            QualityFunction::chernoff_ser(4, Constellation::Qam).unwrap(),
        ];
        for (qi, &qf) in qualities.iter().enumerate() {
            for trial in 0..50usize {
                let n = rng.gen_range(2..=6usize);
                let entries: Vec<WaterfillEntry> = (0..n)
                    .map(|_| WaterfillEntry {
                        weight: rng.gen_range(0.5..2.0),
                        gain: rng.gen_range(0.1..5.0),
                    })
                    .collect();
                let budget = rng.gen_range(1.0..20.0);
                let p = waterfill(&entries, qf, budget).map_err(|e| e.to_string())?;
                let used: f64 = p.iter().sum();
                if (used - budget).abs() > 1e-10 * budget {
                    return Err(format!(
                        "quality {qi} trial {trial}: budget off by {:.3e}",
                        used - budget
                    ));
                }
                let marginals: Vec<f64> = entries
                    .iter()
                    .zip(&p)
                    .map(|(e, &pi)| e.weight * e.gain * quality_derivative(qf, pi * e.gain))
                    .collect();
                let active: Vec<f64> = marginals
                    .iter()
                    .zip(&p)
                    .filter(|(_, &pi)| pi > 0.0)
                    .map(|(&m, _)| m)
                    .collect();
                if active.is_empty() {
                    return Err(format!("quality {qi} trial {trial}: no active streams"));
                }
                let nu = active[0];
                for &m in &active {
                    if (m - nu).abs() > 1e-8 * nu {
                        return Err(format!(
                            "quality {qi} trial {trial}: marginals not level ({m} vs {nu})"
                        ));
                    }
                }
                for (m, &pi) in marginals.iter().zip(&p) {
                    if pi == 0.0 && *m > nu * (1.0 + 1e-8) {
                        return Err(format!(
                            "quality {qi} trial {trial}: inactive stream above the level"
                        ));
                    }
                }
            }
        }

        // Two equal-weight rate streams with both powers positive:
        // p_i = (B + 1/rho_1 + 1/rho_2)/2 - 1/rho_i.
        let (r1, r2, budget) = (2.0, 0.8, 10.0);
        let entries = [
            WaterfillEntry { weight: 1.0, gain: r1 },
            WaterfillEntry { weight: 1.0, gain: r2 },
        ];
        let p = waterfill(&entries, QualityFunction::Rate, budget).map_err(|e| e.to_string())?;
        let common = (budget + 1.0 / r1 + 1.0 / r2) / 2.0;
        let expect = [common - 1.0 / r1, common - 1.0 / r2];
        for i in 0..2 {
            if (p[i] - expect[i]).abs() > 1e-9 {
                return Err(format!("closed form mismatch: {} vs {}", p[i], expect[i]));
            }
        }
        Ok("150 random instances level and on budget; closed form matched".to_string())
    })();
    report(5, check);
}

/// The allocation for one transmitter's stream embedded at its antenna block.
fn embed(dims: &Dimensions, j: usize, local: &DVector<C64>) -> DVector<C64> {
    let mut v = DVector::zeros(dims.total_antennas());
    for (i, idx) in dims.block_range(j).enumerate() {
        v[idx] = local[i];
    }
    v
}

/// High-power sum-rate slope with the schedule held fixed equals the number
/// of scheduled streams, for both the centralized and the distributed
/// strategy.
#[test]
fn criterion_6_multiplexing_gain() {
    let start = Instant::now();
    let check = (|| -> Result<String, String> {
        let dims = Dimensions::new(vec![4, 4], 4, 1).unwrap();
        let clusters = ClusterConfig::ideal_network_mimo(&dims);
        let path_loss = vec![vec![1.0; 4]; 2];
        let weights = vec![1.0; 4];
        let (q30, q50) = (1e3, 1e5);
        // Delta log2(P) between 30 dB and 50 dB.
        let dlog2p = 2.0 * 10f64.log2();

        let scenario_at = |chans: &ChannelSet, q: f64| -> Scenario {
            let pcs = PowerConstraintSet::per_transmitter(&dims, vec![q, q]).unwrap();
            Scenario::new(dims.clone(), clusters.clone(), chans.clone(), pcs).unwrap()
        };

        // Centralized strategy with a fixed schedule: rebuild its heuristic
        // multipliers at each power and realize through the dual map.
        let central_rate = |schedule: &ScheduleState, sc: &Scenario| -> Result<f64, String> {
            let limits = sc.per_transmitter_limits().unwrap();
            let omega: Vec<f64> = limits.iter().map(|&q| dims.num_sc as f64 / q).collect();
            let mut lambda = vec![vec![0.0; dims.num_sc]; dims.num_rx];
            for c in 0..dims.num_sc {
                let sched = schedule.scheduled_on(c);
                let wsum: f64 = sched.iter().map(|&k| weights[k]).sum();
                let size = sched.len() as f64;
                for &k in &sched {
                    lambda[k][c] = weights[k] * size / (sc.chans.noise(k, c) * wsum);
                }
            }
            let duals = DualParams::new(omega, lambda).map_err(|e| e.to_string())?;
            let ra = realize_allocation(&duals, sc).map_err(|e| e.to_string())?;
            if !ra.powers_valid {
                return Err("negative powers in fixed-schedule realization".into());
            }
            let (full, _) = rescale_full_power(&ra, &sc.pcs);
            Ok(sum_rate(&full.alloc, sc))
        };

        // Distributed strategy with a fixed schedule: local beamformers and
        // an equal split of each transmitter's budget over its streams.
        let distributed_rate = |schedule: &ScheduleState, sc: &Scenario| -> Result<f64, String> {
            let heur = heuristic_params(schedule, sc, &weights).map_err(|e| e.to_string())?;
            let limits = sc.per_transmitter_limits().unwrap();
            let mut alloc = Allocation::empty(dims.total_antennas(), dims.num_rx, dims.num_sc);
            for j in 0..dims.num_tx {
                let streams: usize = (0..dims.num_sc).map(|c| schedule.serve[j][c].len()).sum();
                if streams == 0 {
                    continue;
                }
                let p = limits[j] / streams as f64;
                for c in 0..dims.num_sc {
                    for &k in &schedule.serve[j][c] {
                        let local = dvsinr_beamformer(sc, schedule, &heur, j, k, c)
                            .map_err(|e| e.to_string())?;
                        alloc.directions[k][c] = embed(&dims, j, &local);
                        alloc.powers[k][c] = p;
                    }
                }
            }
            Ok(sum_rate(&alloc, sc))
        };

        let mut cv_slope = 0.0;
        let mut cv_streams = 0.0;
        let mut dv_slope = 0.0;
        let mut dv_streams = 0.0;
        let realizations = 100usize;
        for r in 0..realizations {
            let chans = rayleigh(&dims, &path_loss, 1.0, 0x6a10 + r as u64).unwrap();
            let sc30 = scenario_at(&chans, q30);
            let sc50 = scenario_at(&chans, q50);

            let cv = cvsinr(&sc30, &weights, QualityFunction::Rate, None).map_err(|e| e.to_string())?;
            let streams: usize = (0..dims.num_sc).map(|c| cv.schedule.scheduled_on(c).len()).sum();
            let r30 = central_rate(&cv.schedule, &sc30)?;
            let r50 = central_rate(&cv.schedule, &sc50)?;
            cv_slope += (r50 - r30) / dlog2p;
            cv_streams += streams as f64;

            let dv = dvsinr(&sc30, &weights, QualityFunction::Rate, None, None)
                .map_err(|e| e.to_string())?;
            let streams: usize = (0..dims.num_sc).map(|c| dv.schedule.scheduled_on(c).len()).sum();
            let r30 = distributed_rate(&dv.schedule, &sc30)?;
            let r50 = distributed_rate(&dv.schedule, &sc50)?;
            dv_slope += (r50 - r30) / dlog2p;
            dv_streams += streams as f64;
        }
        let cv_ratio = cv_slope / cv_streams;
        let dv_ratio = dv_slope / dv_streams;
        if (cv_ratio - 1.0).abs() > 0.1 {
            return Err(format!("centralized slope/streams ratio {cv_ratio:.4} outside 10%"));
        }
        if (dv_ratio - 1.0).abs() > 0.1 {
            return Err(format!("distributed slope/streams ratio {dv_ratio:.4} outside 10%"));
        }
        Ok(format!(
            "slope/streams: centralized {:.4}, distributed {:.4} over {realizations} realizations",
            cv_ratio, dv_ratio
        ))
    })();
    let elapsed = start.elapsed();
    let timed = check.and_then(|d| {
        if elapsed.as_secs_f64() < 120.0 {
            Ok(format!("{d}; {:.1}s", elapsed.as_secs_f64()))
        } else {
            Err(format!("took {:.1}s (limit 120s)", elapsed.as_secs_f64()))
        }
    });
    report(6, timed);
}

/// Mean weighted sum rate over a synthetic ensemble orders the strategies:
/// grid oracle >= centralized >= single-transmitter-restricted oracle >=
/// distributed >= coordinated ZF, and distributed >= single-cell.
#[test]
fn criterion_7_strategy_ordering() {
    let check = (|| -> Result<String, String> {
        let dims = Dimensions::new(vec![2, 2], 2, 1).unwrap();
        let clusters = ClusterConfig::ideal_network_mimo(&dims);
        let path_loss = vec![vec![1.0, 0.3], vec![0.3, 1.0]];
        let weights = vec![1.0, 1.0];
        let ucfg = UtilityConfig::weighted_sum(weights.clone()).map_err(|e| e.to_string())?;
        let qf = QualityFunction::Rate;
        let realizations = 200usize;

        let mut means = [0.0f64; 6];
        for r in 0..realizations {
            // 20 dBm budgets over a 10 dB noise floor: the optimal multiplier
            // ratio then sits within the uniform grid's resolution.
            let chans = rayleigh(&dims, &path_loss, 10.0, 0x07de + r as u64).unwrap();
            let pcs = PowerConstraintSet::per_transmitter(&dims, vec![100.0, 100.0]).unwrap();
            let sc = Scenario::new(dims.clone(), clusters.clone(), chans, pcs).unwrap();

            let outs = [
                grid_search_p1(&sc, &ucfg, qf, 21).map_err(|e| e.to_string())?,
                cvsinr(&sc, &weights, qf, None).map_err(|e| e.to_string())?,
                grid_search_p1_single_tx(&sc, &ucfg, qf, 21).map_err(|e| e.to_string())?,
                dvsinr(&sc, &weights, qf, None, None).map_err(|e| e.to_string())?,
                coordinated_zf(&sc, &weights, qf, None).map_err(|e| e.to_string())?,
                single_cell(&sc, &weights, qf, None).map_err(|e| e.to_string())?,
            ];
            for (m, o) in means.iter_mut().zip(&outs) {
                *m += o.utility;
            }
        }
        for m in &mut means {
            *m /= realizations as f64;
        }
        let [grid, central, grid_single, distributed, czf, single] = means;
        let chain = [
            ("grid >= centralized", grid, central),
            ("centralized >= restricted grid", central, grid_single),
            ("restricted grid >= distributed", grid_single, distributed),
            ("distributed >= coordinated ZF", distributed, czf),
            ("distributed >= single-cell", distributed, single),
        ];
        for (name, a, b) in chain {
            if a < b {
                return Err(format!("{name} violated: {a:.4} < {b:.4}"));
            }
        }
        Ok(format!(
            "means: grid {grid:.3} >= central {central:.3} >= restricted {grid_single:.3} >= \
             distributed {distributed:.3} >= ZF {czf:.3}; distributed >= single-cell {single:.3}"
        ))
    })();
    report(7, check);
}

/// Under growing inter-transmitter phase errors the coherent centralized
/// strategy degrades monotonically while the single-transmitter distributed
/// strategy is unaffected.
#[test]
fn criterion_8_phase_robustness() {
    let check = (|| -> Result<String, String> {
        let dims = Dimensions::new(vec![2, 2], 3, 1).unwrap();
        let clusters = ClusterConfig::ideal_network_mimo(&dims);
        let path_loss = vec![vec![1.0; 3]; 2];
        let weights = vec![1.0; 3];
        let qf = QualityFunction::Rate;
        let sigmas_deg = [0.0f64, 10.0, 20.0, 40.0];
        let realizations = 100usize;

        let mut cv_mean = [0.0f64; 4];
        let mut dv_mean = [0.0f64; 4];
        for r in 0..realizations {
            let chans = rayleigh(&dims, &path_loss, 1.0, 0x9a5e + r as u64).unwrap();
            let pcs = PowerConstraintSet::per_transmitter(&dims, vec![100.0, 100.0]).unwrap();
            let sc = Scenario::new(dims.clone(), clusters.clone(), chans.clone(), pcs.clone()).unwrap();
            let cv = cvsinr(&sc, &weights, qf, None).map_err(|e| e.to_string())?;
            let dv = dvsinr(&sc, &weights, qf, None, None).map_err(|e| e.to_string())?;
            for (i, &deg) in sigmas_deg.iter().enumerate() {
                let perturbed =
                    phase_perturb(&chans, &dims, deg.to_radians(), 0xfeed + r as u64).unwrap();
                let eval = Scenario::new(
                    dims.clone(),
                    clusters.clone(),
                    perturbed,
                    pcs.clone(),
                )
                .unwrap();
                cv_mean[i] += sum_rate(&cv.allocation, &eval);
                dv_mean[i] += sum_rate(&dv.allocation, &eval);
            }
        }
        for m in cv_mean.iter_mut().chain(dv_mean.iter_mut()) {
            *m /= realizations as f64;
        }
        for i in 1..4 {
            if cv_mean[i] > cv_mean[i - 1] + 1e-9 {
                return Err(format!(
                    "centralized mean rate not nonincreasing: {:?}",
                    cv_mean
                ));
            }
        }
        let dv_max = dv_mean.iter().cloned().fold(f64::MIN, f64::max);
        let dv_min = dv_mean.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (dv_max - dv_min) / dv_mean[0];
        if spread >= 0.005 {
            return Err(format!("distributed mean rate varies by {spread:.4} >= 0.5%"));
        }
        Ok(format!(
            "centralized means {:?} nonincreasing; distributed spread {:.2e}",
            cv_mean.map(|x| (x * 1e3).round() / 1e3),
            spread
        ))
    })();
    report(8, check);
}

/// Per-transmitter phase rotations leave the distributed strategy's
/// incoherent SINR terms exactly invariant.
#[test]
fn incoherent_sinr_phase_invariance() {
    let dims = Dimensions::new(vec![2, 2], 3, 1).unwrap();
    let clusters = ClusterConfig::ideal_network_mimo(&dims);
    let path_loss = vec![vec![1.0; 3]; 2];
    let chans = rayleigh(&dims, &path_loss, 1.0, 0xaced).unwrap();
    let pcs = PowerConstraintSet::per_transmitter(&dims, vec![100.0, 100.0]).unwrap();
    let sc = Scenario::new(dims.clone(), clusters.clone(), chans.clone(), pcs.clone()).unwrap();
    let dv = dvsinr(&sc, &[1.0, 1.0, 1.0], QualityFunction::Rate, None, None).unwrap();
    let perturbed = phase_perturb(&chans, &dims, 40f64.to_radians(), 0xbead).unwrap();
    let eval = Scenario::new(dims.clone(), clusters, perturbed, pcs).unwrap();
    for k in 0..3 {
        let a = incoherent_sinr(&dv.allocation, &sc.chans, &sc.masks, &dims, k, 0).unwrap();
        let b = incoherent_sinr(&dv.allocation, &eval.chans, &eval.masks, &dims, k, 0).unwrap();
        assert!(
            (a - b).abs() <= 1e-12 * a.max(1.0),
            "terminal {k}: {a} vs {b}"
        );
    }
}

/// Perturbing channels outside a transmitter's coordination cluster leaves
/// the distributed strategy's powers and beamformers bit-identical.
#[test]
fn criterion_9_decision_locality() {
    let check = (|| -> Result<String, String> {
        let dims = Dimensions::new(vec![2, 2], 3, 1).unwrap();
        // Terminal 2 lies outside the first transmitter's clusters.
        let clusters = ClusterConfig::new(
            vec![BTreeSet::from([0]), BTreeSet::from([1, 2])],
            vec![BTreeSet::from([0, 1]), BTreeSet::from([1, 2])],
        );
        let path_loss = vec![vec![1.0; 3]; 2];
        let chans = rayleigh(&dims, &path_loss, 1.0, 0x10ca1).unwrap();
        let pcs = PowerConstraintSet::per_transmitter(&dims, vec![50.0, 50.0]).unwrap();
        let sc_a =
            Scenario::new(dims.clone(), clusters.clone(), chans.clone(), pcs.clone()).unwrap();

        // Replace the out-of-cluster link: transmitter 0's block of terminal
        // 2's channel.
        let mut chans_b = chans.clone();
        let mut h2 = chans.stacked(2, 0).clone();
        h2[0] = C64::new(1.3, -0.4);
        h2[1] = C64::new(-0.7, 2.1);
        chans_b.set_stacked(2, 0, h2);
        let sc_b = Scenario::new(dims.clone(), clusters, chans_b, pcs).unwrap();

        let out_a = dvsinr(&sc_a, &[1.0; 3], QualityFunction::Rate, None, None)
            .map_err(|e| e.to_string())?;
        let out_b = dvsinr(&sc_b, &[1.0; 3], QualityFunction::Rate, None, None)
            .map_err(|e| e.to_string())?;
        for k in 0..3 {
            let (pa, pb) = (out_a.allocation.powers[k][0], out_b.allocation.powers[k][0]);
            if pa.to_bits() != pb.to_bits() {
                return Err(format!("terminal {k} power changed: {pa} vs {pb}"));
            }
            let (va, vb) = (&out_a.allocation.directions[k][0], &out_b.allocation.directions[k][0]);
            for i in 0..va.len() {
                if va[i].re.to_bits() != vb[i].re.to_bits()
                    || va[i].im.to_bits() != vb[i].im.to_bits()
                {
                    return Err(format!("terminal {k} beamformer entry {i} changed"));
                }
            }
        }
        Ok("powers and beamformers bit-identical under an out-of-cluster perturbation".into())
    })();
    report(9, check);
}
