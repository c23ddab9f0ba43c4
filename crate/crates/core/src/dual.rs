//! QoS feasibility solver: given SINR targets per (terminal, subcarrier),
//! decide feasibility under the power constraints and recover an allocation
//! that meets the targets. Works in the Lagrange dual: a fixed point on the
//! terminal multipliers `lambda` nested inside subgradient ascent on the
//! constraint multipliers `omega`.

use crate::linalg::{pinv, PINV_REL_CUTOFF};
use crate::model::{Scenario, SelectionMasks};
use crate::param::{
    dual_coupling_matrix, realize_allocation, DualParams, RealizedAllocation,
};
use crate::sinr::{downlink_sinr, Allocation};
use crate::{CoreError, Result};

/// SINR targets `gamma_kc >= 0`; zero entries mean the pair is not scheduled.
#[derive(Debug, Clone)]
pub struct QosTargets {
    pub gamma: Vec<Vec<f64>>,
}

impl QosTargets {
    pub fn new(gamma: Vec<Vec<f64>>) -> Result<Self> {
        if gamma.iter().flatten().any(|&g| g < 0.0 || !g.is_finite()) {
            return Err(CoreError::InvalidParameter(
                "SINR targets must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { gamma })
    }

    pub fn uniform(gamma: f64, num_rx: usize, num_sc: usize) -> Result<Self> {
        Self::new(vec![vec![gamma; num_sc]; num_rx])
    }

    fn any_positive(&self) -> bool {
        self.gamma.iter().flatten().any(|&g| g > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P2Status {
    Feasible,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct P2Result {
    pub status: P2Status,
    pub allocation: RealizedAllocation,
    /// Normalized duals (all entries in `[0, 1]`).
    pub duals: DualParams,
    /// `sum lambda sigma^2 - sum omega q` evaluated at the returned
    /// (normalized) duals.
    pub dual_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct P2Options {
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Relative change in `lambda` that stops the inner fixed point.
    pub inner_tol: f64,
    /// Relative dual-gap tolerance for declaring optimality.
    pub gap_tol: f64,
    /// Relative slack allowed on power constraints.
    pub constraint_tol: f64,
    /// Exponent of the multiplicative multiplier update (damping: 1 is the
    /// raw consumed/budget ratio, smaller is gentler).
    pub step: f64,
}

impl Default for P2Options {
    fn default() -> Self {
        Self {
            inner_iters: 500,
            outer_iters: 200,
            inner_tol: 1e-11,
            gap_tol: 1e-5,
            constraint_tol: 1e-9,
            step: 0.5,
        }
    }
}

/// Multiplier floor keeping the weighted noise matrix positive definite.
const OMEGA_FLOOR: f64 = 1e-12;

/// Relative dual-gap excess that certifies infeasibility: if the converged
/// uplink power exceeds the weighted budget at any tried `omega`, no downlink
/// allocation can meet the targets.
const CERTIFICATE_TOL: f64 = 1e-4;

/// Solve the QoS feasibility problem for the given targets.
pub fn solve_p2(targets: &QosTargets, scenario: &Scenario, opts: &P2Options) -> Result<P2Result> {
    let (num_rx, num_sc) = (scenario.dims.num_rx, scenario.dims.num_sc);
    if targets.gamma.len() != num_rx || targets.gamma.iter().any(|g| g.len() != num_sc) {
        return Err(CoreError::DimensionMismatch(
            "target shape does not match the scenario".into(),
        ));
    }
    let limits = &scenario.pcs.limits;
    let num_con = scenario.pcs.num_constraints();

    if !targets.any_positive() {
        let duals = DualParams::new(
            vec![1.0; num_con],
            vec![vec![0.0; num_sc]; num_rx],
        )?;
        let allocation = realize_allocation(&duals, scenario)?;
        return Ok(P2Result {
            status: P2Status::Feasible,
            allocation,
            duals: duals.into_normalized(),
            dual_gap: 0.0,
            iterations: 0,
        });
    }

    let lambda_cap = {
        let mut inv_noise: f64 = 0.0;
        for k in 0..num_rx {
            for c in 0..num_sc {
                inv_noise = inv_noise.max(1.0 / scenario.chans.noise(k, c));
            }
        }
        let gmax = targets.gamma.iter().flatten().cloned().fold(1.0f64, f64::max);
        1e8 * inv_noise * gmax
    };

    // Normalize omega so the weighted budget sum omega_l q_l equals one; the
    // dual objective then compares the uplink power directly against 1.
    let mut omega: Vec<f64> = limits.iter().map(|&q| 1.0 / (num_con as f64 * q)).collect();
    let mut lambda = vec![vec![0.0; num_sc]; num_rx];

    let mut last: Option<(DualParams, RealizedAllocation, f64)> = None;
    let mut best: Option<(DualParams, RealizedAllocation, f64)> = None;
    let mut prev_gap = f64::NEG_INFINITY;

    for outer in 0..opts.outer_iters {
        // Inner fixed point: lambda_kc <- gamma_kc / (h^H D A(omega,lambda)+ D h).
        let mut diverged = false;
        let mut inner_residual = f64::INFINITY;
        for _ in 0..opts.inner_iters {
            let duals = DualParams {
                omega: omega.clone(),
                lambda: lambda.clone(),
            };
            let mut max_rel = 0.0f64;
            for k in 0..num_rx {
                for c in 0..num_sc {
                    let g = targets.gamma[k][c];
                    if g == 0.0 {
                        continue;
                    }
                    let dh =
                        SelectionMasks::apply(&scenario.masks.data[k], scenario.chans.stacked(k, c));
                    if dh.norm() == 0.0 {
                        return Err(CoreError::UnservableTerminal {
                            terminal: k,
                            subcarrier: c,
                        });
                    }
                    let a = dual_coupling_matrix(
                        &duals,
                        &scenario.chans,
                        &scenario.masks,
                        &scenario.pcs,
                        k,
                        c,
                    );
                    let quad = (dh.adjoint() * pinv(&a, PINV_REL_CUTOFF) * &dh)[(0, 0)].re;
                    if quad <= 0.0 {
                        return Err(CoreError::SingularDenominator {
                            terminal: k,
                            subcarrier: c,
                        });
                    }
                    let new = g / quad;
                    let rel = (new - lambda[k][c]).abs() / new.max(f64::MIN_POSITIVE);
                    max_rel = max_rel.max(rel);
                    lambda[k][c] = new;
                    if new > lambda_cap {
                        diverged = true;
                    }
                }
            }
            inner_residual = max_rel;
            if diverged || max_rel < opts.inner_tol {
                break;
            }
        }
        let duals = DualParams {
            omega: omega.clone(),
            lambda: lambda.clone(),
        };
        if diverged {
            let allocation = empty_realization(scenario)?;
            return Ok(P2Result {
                status: P2Status::Infeasible,
                allocation,
                duals: duals.into_normalized(),
                dual_gap: f64::INFINITY,
                iterations: outer + 1,
            });
        }

        // Dual gap at this omega; a converged uplink power above the weighted
        // budget certifies infeasibility for every omega.
        let uplink_power: f64 = (0..num_rx)
            .flat_map(|k| (0..num_sc).map(move |c| (k, c)))
            .map(|(k, c)| lambda[k][c] * scenario.chans.noise(k, c))
            .sum();
        let budget: f64 = omega.iter().zip(limits).map(|(&w, &q)| w * q).sum();
        let gap = uplink_power - budget;
        // The certificate is only valid at a converged fixed point: a partially
        // converged lambda approaching from above can overstate the uplink
        // power near the feasibility boundary.
        if gap > CERTIFICATE_TOL * budget && inner_residual < opts.inner_tol {
            let allocation = empty_realization(scenario)?;
            return Ok(P2Result {
                status: P2Status::Infeasible,
                allocation,
                duals: duals.into_normalized(),
                dual_gap: gap,
                iterations: outer + 1,
            });
        }

        let realized = realize_allocation(&duals, scenario)?;
        // Accept with a slack wide enough to absorb the inner fixed point's
        // residual; the returned powers are clamped onto the constraints, at a
        // relative SINR cost no larger than the slack.
        let within = realized
            .consumed
            .iter()
            .zip(limits)
            .all(|(&used, &q)| used <= q * (1.0 + opts.constraint_tol.max(ACCEPT_SLACK)));
        // Primal certificate: the realized allocation achieves every target
        // exactly, so satisfying the power constraints proves feasibility.
        // Keep ascending on omega to also close the dual gap (it reaches zero
        // when the targets sit on the full-power boundary); stop once the gap
        // is closed or stops moving.
        if realized.powers_valid && within {
            let better = best
                .as_ref()
                .map_or(true, |(_, _, g): &(DualParams, RealizedAllocation, f64)| gap > *g);
            if better {
                best = Some((duals.clone(), realized.clone(), gap));
            }
            let stalled = (gap - prev_gap).abs() <= 1e-9 * budget;
            if gap >= -opts.gap_tol * budget || (stalled && outer > 0) {
                let (d, mut r, _) = best.expect("a feasible point was recorded");
                clamp_to_constraints(&mut r, limits);
                let d = d.into_normalized();
                let dual_gap = gap_at(&d, scenario);
                return Ok(P2Result {
                    status: P2Status::Feasible,
                    allocation: r,
                    duals: d,
                    dual_gap,
                    iterations: outer + 1,
                });
            }
        }
        prev_gap = gap;
        last = Some((duals, realized.clone(), gap));

        // Multiplier update in the style of power control: grow omega on
        // over-consumed constraints, shrink it on slack ones, renormalize the
        // weighted budget to one. Converges geometrically where a decaying
        // subgradient step would crawl.
        if realized.powers_valid {
            for (l, w) in omega.iter_mut().enumerate() {
                let ratio = (realized.consumed[l] / limits[l]).max(0.0);
                *w = (*w * ratio.powf(opts.step)).max(OMEGA_FLOOR);
            }
        } else {
            // No meaningful consumption to react to; nudge toward uniform.
            for (w, &q) in omega.iter_mut().zip(limits) {
                *w = 0.5 * *w + 0.5 / (num_con as f64 * q);
            }
        }
        let scale: f64 = omega.iter().zip(limits).map(|(&w, &q)| w * q).sum();
        for w in &mut omega {
            *w /= scale;
        }
    }

    if let Some((d, mut r, _)) = best {
        clamp_to_constraints(&mut r, limits);
        let d = d.into_normalized();
        let dual_gap = gap_at(&d, scenario);
        return Ok(P2Result {
            status: P2Status::Feasible,
            allocation: r,
            duals: d,
            dual_gap,
            iterations: opts.outer_iters,
        });
    }

    let (duals, allocation, _) = last.expect("at least one outer iteration ran");
    let duals = duals.into_normalized();
    let dual_gap = gap_at(&duals, scenario);
    Ok(P2Result {
        status: P2Status::MaxIterations,
        allocation,
        duals,
        dual_gap,
        iterations: opts.outer_iters,
    })
}

/// Slack on the power constraints when accepting a realized candidate; the
/// final common power clamp costs at most this much relative SINR.
const ACCEPT_SLACK: f64 = 1e-7;

/// Scale all powers down by a common factor so that no constraint is
/// exceeded. A no-op for allocations already inside the constraints.
fn clamp_to_constraints(ra: &mut RealizedAllocation, limits: &[f64]) {
    let eps = ra
        .consumed
        .iter()
        .zip(limits)
        .filter(|(&used, _)| used > 0.0)
        .map(|(&used, &q)| q / used)
        .fold(1.0f64, f64::min);
    if eps >= 1.0 {
        return;
    }
    for row in ra.alloc.powers.iter_mut() {
        for p in row.iter_mut() {
            *p *= eps;
        }
    }
    for used in ra.consumed.iter_mut() {
        *used *= eps;
    }
    ra.feasible = ra.powers_valid;
}

/// Dual gap `sum lambda sigma^2 - sum omega q` of a dual point.
fn gap_at(duals: &DualParams, scenario: &Scenario) -> f64 {
    let mut uplink = 0.0;
    for (k, row) in duals.lambda.iter().enumerate() {
        for (c, &lam) in row.iter().enumerate() {
            uplink += lam * scenario.chans.noise(k, c);
        }
    }
    let budget: f64 = duals
        .omega
        .iter()
        .zip(&scenario.pcs.limits)
        .map(|(&w, &q)| w * q)
        .sum();
    uplink - budget
}

fn empty_realization(scenario: &Scenario) -> Result<RealizedAllocation> {
    let duals = DualParams::new(
        vec![1.0; scenario.pcs.num_constraints()],
        vec![vec![0.0; scenario.dims.num_sc]; scenario.dims.num_rx],
    )?;
    realize_allocation(&duals, scenario)
}

/// Per-pair SINR margins and per-constraint power slacks of an allocation
/// against a set of targets.
#[derive(Debug, Clone)]
pub struct QosMargins {
    /// `(terminal, subcarrier, achieved - target)` for every targeted pair.
    pub sinr: Vec<(usize, usize, f64)>,
    /// `q_l - consumed_l` per power constraint.
    pub power_slack: Vec<f64>,
}

pub fn verify_qos(
    alloc: &Allocation,
    targets: &QosTargets,
    scenario: &Scenario,
) -> Result<QosMargins> {
    let mut sinr = Vec::new();
    for (k, row) in targets.gamma.iter().enumerate() {
        for (c, &g) in row.iter().enumerate() {
            if g > 0.0 {
                let s = downlink_sinr(alloc, &scenario.chans, &scenario.masks, k, c)?;
                sinr.push((k, c, s - g));
            }
        }
    }
    let power_slack = scenario
        .pcs
        .matrices
        .iter()
        .zip(&scenario.pcs.limits)
        .map(|(q, &limit)| limit - alloc.consumed_power(q))
        .collect();
    Ok(QosMargins { sinr, power_slack })
}
