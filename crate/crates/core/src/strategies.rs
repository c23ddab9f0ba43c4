//! Resource-allocation strategies: the centralized virtual-SINR scheme with
//! coherent joint transmission, its distributed counterpart with greedy
//! scheduling and local beamforming, plus coordinated zero-forcing and
//! single-cell baselines.

use crate::linalg::null_space_projector;
use crate::model::{Dimensions, Scenario};
use crate::param::{realize_allocation, rescale_full_power, DualParams};
use crate::sinr::{
    downlink_sinr, quality_derivative, quality_inv_derivative, quality_value, Allocation,
    QualityFunction,
};
use crate::{C64, CoreError, Result};
use nalgebra::DVector;
use std::collections::BTreeSet;

/// Relative gain a greedy scheduling move must exceed to be accepted.
const SCHED_GAIN_TOL: f64 = 1e-12;

/// Scheduling state: per (transmitter, subcarrier) the served set `S` and the
/// coordinated set `A` of terminals served elsewhere but inside this
/// transmitter's coordination cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleState {
    /// `serve[j][c]`: terminals transmitter `j` sends data to on subcarrier `c`.
    pub serve: Vec<Vec<BTreeSet<usize>>>,
    /// `coord[j][c]`: terminals served by other transmitters whose
    /// interference `j` must steer away from.
    pub coord: Vec<Vec<BTreeSet<usize>>>,
    pub slot: usize,
}

impl ScheduleState {
    pub fn empty(num_tx: usize, num_sc: usize) -> Self {
        Self {
            serve: vec![vec![BTreeSet::new(); num_sc]; num_tx],
            coord: vec![vec![BTreeSet::new(); num_sc]; num_tx],
            slot: 0,
        }
    }

    /// Terminals scheduled anywhere on subcarrier `c`.
    pub fn scheduled_on(&self, c: usize) -> BTreeSet<usize> {
        self.serve.iter().flat_map(|row| row[c].iter().cloned()).collect()
    }

    /// The serving transmitter of `(k, c)`, if any.
    pub fn serving(&self, k: usize, c: usize) -> Option<usize> {
        self.serve.iter().position(|row| row[c].contains(&k))
    }

    /// Recompute every coordination set from the serve sets:
    /// `A(j,c) = union over i != j of (S(i,c) intersect C_j)`.
    pub fn recompute_coord(&mut self, scenario: &Scenario) {
        let num_sc = self.serve[0].len();
        for j in 0..self.serve.len() {
            for c in 0..num_sc {
                let mut a = BTreeSet::new();
                for (i, row) in self.serve.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    for &k in &row[c] {
                        if scenario.clusters.coord_sets[j].contains(&k) {
                            a.insert(k);
                        }
                    }
                }
                self.coord[j][c] = a;
            }
        }
    }

    /// Enforce `|S union A| <= N_j` by dropping coordinated-only terminals in
    /// increasing order of local channel energy.
    pub fn repair(&mut self, scenario: &Scenario) {
        let dims = &scenario.dims;
        for j in 0..dims.num_tx {
            for c in 0..dims.num_sc {
                while self.serve[j][c].union(&self.coord[j][c]).count() > dims.antennas[j] {
                    let weakest = self.coord[j][c]
                        .iter()
                        .filter(|k| !self.serve[j][c].contains(k))
                        .min_by(|&&a, &&b| {
                            let ea = scenario.chans.block(dims, j, a, c).norm_squared();
                            let eb = scenario.chans.block(dims, j, b, c).norm_squared();
                            ea.partial_cmp(&eb).unwrap().then(a.cmp(&b))
                        })
                        .cloned();
                    match weakest {
                        Some(k) => {
                            self.coord[j][c].remove(&k);
                        }
                        None => break,
                    }
                }
            }
        }
    }
}

/// Result of running a strategy on one scenario.
#[derive(Debug, Clone)]
pub struct StrategyOutput {
    pub allocation: Allocation,
    pub schedule: ScheduleState,
    /// Per-terminal quality `sum over c of g(SINR_kc)` (unweighted).
    pub per_terminal: Vec<f64>,
    /// Weighted sum utility `sum_k mu_k per_terminal_k`.
    pub utility: f64,
    pub name: &'static str,
}

/// Local zero-forcing signal gain: `||h_jkc^H P||^2` with `P` the projector
/// onto the null space of the other local channels.
fn zf_signal_gain(
    scenario: &Scenario,
    j: usize,
    k: usize,
    c: usize,
    others: &BTreeSet<usize>,
) -> f64 {
    let dims = &scenario.dims;
    let nj = dims.antennas[j];
    let cols: Vec<DVector<C64>> = others
        .iter()
        .filter(|&&o| o != k)
        .map(|&o| scenario.chans.block(dims, j, o, c))
        .collect();
    let p = null_space_projector(&cols, nj);
    let h = scenario.chans.block(dims, j, k, c);
    (&p * &h).dot_self()
}

trait DotSelf {
    fn dot_self(&self) -> f64;
}
impl DotSelf for DVector<C64> {
    fn dot_self(&self) -> f64 {
        self.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// Scheduling sum metric for serve set `s` at `(j, c)` given coordinated set
/// `a`: each member's weighted quality at its zero-forcing SINR estimate under
/// equal power splitting.
fn schedule_metric(
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    j: usize,
    c: usize,
    s: &BTreeSet<usize>,
    a: &BTreeSet<usize>,
    q_j: f64,
) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let kc = scenario.dims.num_sc as f64;
    let size = s.len() as f64;
    let mut total = 0.0;
    for &k in s {
        let mut others: BTreeSet<usize> = s.union(a).cloned().collect();
        others.remove(&k);
        let gain = zf_signal_gain(scenario, j, k, c, &others);
        let sinr = q_j * gain / (scenario.chans.noise(k, c) * kc * size);
        total += weights[k] * quality_value(qf, sinr);
    }
    total
}

/// One slot of greedy scheduling at every (transmitter, subcarrier):
/// starting from the previous serve set, repeatedly apply the single
/// add-or-remove change with the largest sum-metric gain. Ties break toward
/// the lowest terminal index; coordination sets are recomputed from the new
/// serve sets and over-full antennas repaired afterwards.
pub fn prosched_schedule(
    prev: &ScheduleState,
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
) -> Result<ScheduleState> {
    let candidates = data_set_candidates(scenario, weights);
    prosched_with_candidates(prev, scenario, weights, qf, &candidates)
}

/// Candidate terminals per (j, c): the data set of `j`, minus zero-weight
/// terminals (their metric contribution is never positive).
fn data_set_candidates(scenario: &Scenario, weights: &[f64]) -> Vec<Vec<Vec<usize>>> {
    let dims = &scenario.dims;
    (0..dims.num_tx)
        .map(|j| {
            let base: Vec<usize> = scenario.clusters.data_sets[j]
                .iter()
                .cloned()
                .filter(|&k| weights[k] > 0.0)
                .collect();
            vec![base; dims.num_sc]
        })
        .collect()
}

fn prosched_with_candidates(
    prev: &ScheduleState,
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    candidates: &[Vec<Vec<usize>>],
) -> Result<ScheduleState> {
    let dims = &scenario.dims;
    let limits = scenario.per_transmitter_limits().ok_or_else(|| {
        CoreError::InvalidParameter(
            "scheduling requires per-transmitter power constraints".into(),
        )
    })?;
    let mut next = ScheduleState::empty(dims.num_tx, dims.num_sc);
    for j in 0..dims.num_tx {
        for c in 0..dims.num_sc {
            let cand = &candidates[j][c];
            let a = &prev.coord[j][c];
            let mut s: BTreeSet<usize> = prev.serve[j][c]
                .iter()
                .filter(|k| cand.contains(k))
                .cloned()
                .collect();
            if s.is_empty() {
                // Fresh slot: start from the strongest candidate.
                if let Some(&k0) = cand.iter().max_by(|&&x, &&y| {
                    let ex = scenario.chans.block(dims, j, x, c).norm_squared();
                    let ey = scenario.chans.block(dims, j, y, c).norm_squared();
                    ex.partial_cmp(&ey).unwrap().then(y.cmp(&x))
                }) {
                    if s.union(a).count() < dims.antennas[j] || a.contains(&k0) {
                        s.insert(k0);
                    }
                }
            }
            let metric =
                |set: &BTreeSet<usize>| schedule_metric(scenario, weights, qf, j, c, set, a, limits[j]);
            let mut base = metric(&s);
            loop {
                let mut best: Option<(BTreeSet<usize>, f64)> = None;
                for &k in s.iter() {
                    let mut trial = s.clone();
                    trial.remove(&k);
                    let m = metric(&trial);
                    if m - base > best.as_ref().map_or(SCHED_GAIN_TOL * (1.0 + base.abs()), |b| b.1)
                    {
                        best = Some((trial, m - base));
                    }
                }
                for &k in cand {
                    if s.contains(&k) {
                        continue;
                    }
                    let mut trial = s.clone();
                    trial.insert(k);
                    if trial.union(a).count() > dims.antennas[j] {
                        continue;
                    }
                    let m = metric(&trial);
                    if m - base > best.as_ref().map_or(SCHED_GAIN_TOL * (1.0 + base.abs()), |b| b.1)
                    {
                        best = Some((trial, m - base));
                    }
                }
                match best {
                    Some((trial, gain)) => {
                        base += gain;
                        s = trial;
                    }
                    None => break,
                }
            }
            next.serve[j][c] = s;
        }
    }
    next.slot = prev.slot + 1;
    next.recompute_coord(scenario);
    next.repair(scenario);
    Ok(next)
}

/// One waterfilling stream: fairness weight and effective channel gain
/// (SINR per unit power).
#[derive(Debug, Clone, Copy)]
pub struct WaterfillEntry {
    pub weight: f64,
    pub gain: f64,
}

/// Weighted-quality waterfilling over parallel streams under a sum-power
/// budget: `p_i = max(g'^{-1}(nu/(w_i rho_i))/rho_i, 0)` with the level `nu`
/// found by bisection, then scaled so active powers consume the full budget.
pub fn waterfill(entries: &[WaterfillEntry], qf: QualityFunction, budget: f64) -> Result<Vec<f64>> {
    if budget <= 0.0 {
        return Err(CoreError::InvalidParameter("power budget must be positive".into()));
    }
    let usable: Vec<usize> = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.weight > 0.0 && e.gain > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut powers = vec![0.0; entries.len()];
    if usable.is_empty() {
        if entries.is_empty() {
            return Ok(powers);
        }
        return Err(CoreError::EmptyAllocation(
            "no stream with positive weight and gain to waterfill".into(),
        ));
    }
    let gp0 = quality_derivative(qf, 0.0);
    let mut hi = usable
        .iter()
        .map(|&i| entries[i].weight * entries[i].gain * gp0)
        .fold(0.0f64, f64::max);
    let total_at = |nu: f64| -> f64 {
        usable
            .iter()
            .map(|&i| {
                let e = entries[i];
                let y = nu / (e.weight * e.gain);
                match quality_inv_derivative(qf, y) {
                    Ok(x) => (x / e.gain).max(0.0),
                    Err(_) => 0.0,
                }
            })
            .sum()
    };
    let mut lo = hi;
    for _ in 0..2000 {
        lo /= 2.0;
        if total_at(lo) >= budget {
            break;
        }
    }
    if total_at(lo) < budget {
        return Err(CoreError::EmptyAllocation(
            "waterfilling cannot consume the budget".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = lo;
    let mut sum = 0.0;
    for &i in &usable {
        let e = entries[i];
        let y = nu / (e.weight * e.gain);
        let p = quality_inv_derivative(qf, y).map(|x| (x / e.gain).max(0.0)).unwrap_or(0.0);
        powers[i] = p;
        sum += p;
    }
    if sum <= 0.0 {
        return Err(CoreError::EmptyAllocation(
            "all candidate powers are zero at every water level".into(),
        ));
    }
    // Exact budget consumption: scale the active streams.
    let scale = budget / sum;
    for p in &mut powers {
        *p *= scale;
    }
    Ok(powers)
}

/// Local virtual-SINR beamforming direction of transmitter `j` toward
/// terminal `k` on subcarrier `c`:
/// `(omega_j I + sum over coordinated kb of lambda_kbc h_jkbc h_jkbc^H)^+ h_jkc`,
/// normalized to unit length. Reads only transmitter `j`'s own channels to
/// terminals inside its coordination cluster.
pub fn dvsinr_beamformer(
    scenario: &Scenario,
    schedule: &ScheduleState,
    heur: &DualParams,
    j: usize,
    k: usize,
    c: usize,
) -> Result<DVector<C64>> {
    let dims = &scenario.dims;
    let nj = dims.antennas[j];
    let omega_j = heur.omega[j];
    let mut a = nalgebra::DMatrix::<C64>::identity(nj, nj) * C64::new(omega_j, 0.0);
    for &kb in scenario.clusters.coord_sets[j].iter() {
        if kb == k {
            continue;
        }
        let lam = heur.lambda[kb][c];
        if lam == 0.0 {
            continue;
        }
        let h = scenario.chans.block(dims, j, kb, c);
        a += crate::linalg::scaled_outer(&h, lam);
    }
    let h = scenario.chans.block(dims, j, k, c);
    let raw = crate::linalg::pinv(&a, crate::linalg::PINV_REL_CUTOFF) * &h;
    let norm = raw.norm();
    if norm <= 1e-300 {
        return Err(CoreError::UnservableTerminal { terminal: k, subcarrier: c });
    }
    let mut v = raw / C64::new(norm, 0.0);
    let d = h.dotc(&v);
    if d.norm() > 0.0 {
        v *= d.conj() / C64::new(d.norm(), 0.0);
    }
    let _ = schedule;
    Ok(v)
}

/// Heuristic dual parameters from a schedule: `omega_j = K_c/q_j` and, for a
/// terminal served by `j` on `c`,
/// `lambda_kc = mu_k / (sigma_kc^2 * mean weight over S(j,c) union A(j,c))`.
pub fn heuristic_params(
    schedule: &ScheduleState,
    scenario: &Scenario,
    weights: &[f64],
) -> Result<DualParams> {
    let dims = &scenario.dims;
    let limits = scenario.per_transmitter_limits().ok_or_else(|| {
        CoreError::InvalidParameter(
            "heuristic parameters require per-transmitter power constraints".into(),
        )
    })?;
    let kc = dims.num_sc as f64;
    let omega: Vec<f64> = limits.iter().map(|&q| kc / q).collect();
    let mut lambda = vec![vec![0.0; dims.num_sc]; dims.num_rx];
    for j in 0..dims.num_tx {
        for c in 0..dims.num_sc {
            let sa: Vec<usize> = schedule.serve[j][c]
                .union(&schedule.coord[j][c])
                .cloned()
                .collect();
            if sa.is_empty() {
                continue;
            }
            let mean_w: f64 = sa.iter().map(|&k| weights[k]).sum::<f64>() / sa.len() as f64;
            if mean_w <= 0.0 {
                continue;
            }
            for &k in &schedule.serve[j][c] {
                lambda[k][c] = weights[k] / (scenario.chans.noise(k, c) * mean_w);
            }
        }
    }
    DualParams::new(omega, lambda)
}

fn embed_block(dims: &Dimensions, j: usize, local: &DVector<C64>) -> DVector<C64> {
    let mut v = DVector::zeros(dims.total_antennas());
    for (i, idx) in dims.block_range(j).enumerate() {
        v[idx] = local[i];
    }
    v
}

fn finish_output(
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    allocation: Allocation,
    schedule: ScheduleState,
    name: &'static str,
) -> Result<StrategyOutput> {
    let dims = &scenario.dims;
    let mut per_terminal = vec![0.0; dims.num_rx];
    for k in 0..dims.num_rx {
        for c in 0..dims.num_sc {
            let s = downlink_sinr(&allocation, &scenario.chans, &scenario.masks, k, c)?;
            if s > 0.0 {
                per_terminal[k] += quality_value(qf, s);
            }
        }
    }
    let utility = weights
        .iter()
        .zip(&per_terminal)
        .map(|(&w, &g)| w * g)
        .sum();
    Ok(StrategyOutput {
        allocation,
        schedule,
        per_terminal,
        utility,
        name,
    })
}

/// Centralized virtual-SINR allocation with coherent joint transmission:
/// greedy scheduling on global CSI, heuristic multipliers
/// `lambda_kc = mu_k |S_c| / (sigma_kc^2 sum of scheduled weights)` and
/// `omega_l = K_c/q_l`, realization through the dual-parameter map, and a
/// final common power rescaling to hit a constraint with equality.
pub fn cvsinr(
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    prev: Option<&ScheduleState>,
) -> Result<StrategyOutput> {
    let dims = &scenario.dims;
    let limits = scenario.per_transmitter_limits().ok_or_else(|| {
        CoreError::InvalidParameter("cvsinr requires per-transmitter power constraints".into())
    })?;
    let empty = ScheduleState::empty(dims.num_tx, dims.num_sc);
    let mut schedule = prosched_schedule(prev.unwrap_or(&empty), scenario, weights, qf)?;
    let kc = dims.num_sc as f64;
    let omega: Vec<f64> = limits.iter().map(|&q| kc / q).collect();

    loop {
        let mut lambda = vec![vec![0.0; dims.num_sc]; dims.num_rx];
        let mut any = false;
        for c in 0..dims.num_sc {
            let sched = schedule.scheduled_on(c);
            if sched.is_empty() {
                continue;
            }
            let wsum: f64 = sched.iter().map(|&k| weights[k]).sum();
            if wsum <= 0.0 {
                continue;
            }
            let size = sched.len() as f64;
            for &k in &sched {
                lambda[k][c] = weights[k] * size / (scenario.chans.noise(k, c) * wsum);
                any = true;
            }
        }
        if !any {
            let alloc = Allocation::empty(dims.total_antennas(), dims.num_rx, dims.num_sc);
            return finish_output(scenario, weights, qf, alloc, schedule, "cvsinr");
        }
        let duals = DualParams::new(omega.clone(), lambda)?;
        match realize_allocation(&duals, scenario) {
            Ok(ra) if ra.powers_valid => {
                let (scaled, _) = rescale_full_power(&ra, &scenario.pcs);
                return finish_output(scenario, weights, qf, scaled.alloc, schedule, "cvsinr");
            }
            Ok(_) => {
                // Negative power in the coupling system: shed the weakest
                // scheduled pair and retry.
                if !drop_weakest_scheduled(&mut schedule, scenario, weights) {
                    let alloc =
                        Allocation::empty(dims.total_antennas(), dims.num_rx, dims.num_sc);
                    return finish_output(scenario, weights, qf, alloc, schedule, "cvsinr");
                }
                schedule.recompute_coord(scenario);
            }
            Err(CoreError::UnservableTerminal { terminal, subcarrier }) => {
                for row in schedule.serve.iter_mut() {
                    row[subcarrier].remove(&terminal);
                }
                schedule.recompute_coord(scenario);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Remove the scheduled (terminal, subcarrier) pair with the smallest
/// weighted masked-channel energy. Returns false when nothing is scheduled.
fn drop_weakest_scheduled(
    schedule: &mut ScheduleState,
    scenario: &Scenario,
    weights: &[f64],
) -> bool {
    let mut weakest: Option<(usize, usize, f64)> = None;
    for c in 0..scenario.dims.num_sc {
        for k in schedule.scheduled_on(c) {
            let dh = crate::model::SelectionMasks::apply(
                &scenario.masks.data[k],
                scenario.chans.stacked(k, c),
            );
            let score = weights[k] * dh.norm_squared();
            if weakest.map_or(true, |(_, _, s)| score < s) {
                weakest = Some((k, c, score));
            }
        }
    }
    match weakest {
        Some((k, c, _)) => {
            for row in schedule.serve.iter_mut() {
                row[c].remove(&k);
            }
            true
        }
        None => false,
    }
}

/// Assign each (terminal, subcarrier) to the serving transmitter with the
/// strongest local channel among the transmitters holding it in their data
/// set.
fn single_serving_assignment(scenario: &Scenario) -> Vec<Vec<Option<usize>>> {
    let dims = &scenario.dims;
    let mut assign = vec![vec![None; dims.num_sc]; dims.num_rx];
    for k in 0..dims.num_rx {
        for c in 0..dims.num_sc {
            let mut best: Option<(usize, f64)> = None;
            for (j, d) in scenario.clusters.data_sets.iter().enumerate() {
                if !d.contains(&k) {
                    continue;
                }
                let e = scenario.chans.block(dims, j, k, c).norm_squared();
                if best.map_or(true, |(_, be)| e > be) {
                    best = Some((j, e));
                }
            }
            assign[k][c] = best.map(|(j, _)| j);
        }
    }
    assign
}

/// Distributed virtual-SINR allocation following the per-transmitter
/// pipeline: greedy scheduling on local CSI, per-transmitter waterfilling on
/// zero-forcing gains, dropping of streams below the power threshold `tau`,
/// heuristic multipliers, and local virtual-SINR beamformers. Each terminal
/// is served by at most one transmitter per subcarrier.
pub fn dvsinr(
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    prev: Option<&ScheduleState>,
    tau: Option<f64>,
) -> Result<StrategyOutput> {
    let dims = &scenario.dims;
    let limits = scenario.per_transmitter_limits().ok_or_else(|| {
        CoreError::InvalidParameter("dvsinr requires per-transmitter power constraints".into())
    })?;
    let assign = single_serving_assignment(scenario);
    let candidates: Vec<Vec<Vec<usize>>> = (0..dims.num_tx)
        .map(|j| {
            (0..dims.num_sc)
                .map(|c| {
                    (0..dims.num_rx)
                        .filter(|&k| assign[k][c] == Some(j) && weights[k] > 0.0)
                        .collect()
                })
                .collect()
        })
        .collect();
    let empty = ScheduleState::empty(dims.num_tx, dims.num_sc);
    let mut schedule =
        prosched_with_candidates(prev.unwrap_or(&empty), scenario, weights, qf, &candidates)?;

    // Per-transmitter waterfilling over its scheduled streams.
    let mut powers = vec![vec![0.0; dims.num_sc]; dims.num_rx];
    for j in 0..dims.num_tx {
        let streams: Vec<(usize, usize)> = (0..dims.num_sc)
            .flat_map(|c| schedule.serve[j][c].iter().map(move |&k| (k, c)))
            .collect();
        if streams.is_empty() {
            continue;
        }
        let entries: Vec<WaterfillEntry> = streams
            .iter()
            .map(|&(k, c)| {
                let mut others: BTreeSet<usize> = schedule.serve[j][c]
                    .union(&schedule.coord[j][c])
                    .cloned()
                    .collect();
                others.remove(&k);
                let rho = zf_signal_gain(scenario, j, k, c, &others) / scenario.chans.noise(k, c);
                WaterfillEntry { weight: weights[k], gain: rho }
            })
            .collect();
        match waterfill(&entries, qf, limits[j]) {
            Ok(p) => {
                for (i, &(k, c)) in streams.iter().enumerate() {
                    powers[k][c] = p[i];
                }
            }
            Err(CoreError::EmptyAllocation(_)) => {}
            Err(e) => return Err(e),
        }
        let threshold = tau.unwrap_or(1e-4 * limits[j] / dims.num_sc as f64);
        for &(k, c) in &streams {
            if powers[k][c] < threshold {
                powers[k][c] = 0.0;
                schedule.serve[j][c].remove(&k);
            }
        }
    }
    // Second exchange round after the drops.
    schedule.recompute_coord(scenario);

    let heur = heuristic_params(&schedule, scenario, weights)?;
    let mut alloc = Allocation::empty(dims.total_antennas(), dims.num_rx, dims.num_sc);
    for j in 0..dims.num_tx {
        for c in 0..dims.num_sc {
            for &k in &schedule.serve[j][c] {
                let v = dvsinr_beamformer(scenario, &schedule, &heur, j, k, c)?;
                alloc.directions[k][c] = embed_block(dims, j, &v);
                alloc.powers[k][c] = powers[k][c];
            }
        }
    }
    finish_output(scenario, weights, qf, alloc, schedule, "dvsinr")
}

/// Coordinated zero-forcing: exact unit-norm zero-forcing directions over the
/// other scheduled-plus-coordinated local channels, powers by waterfilling on
/// the resulting gains. Scheduling defaults to the single-serving greedy one.
pub fn coordinated_zf(
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    schedule: Option<&ScheduleState>,
) -> Result<StrategyOutput> {
    let dims = &scenario.dims;
    let limits = scenario.per_transmitter_limits().ok_or_else(|| {
        CoreError::InvalidParameter(
            "coordinated zero-forcing requires per-transmitter power constraints".into(),
        )
    })?;
    let mut schedule = match schedule {
        Some(s) => s.clone(),
        None => {
            let assign = single_serving_assignment(scenario);
            let candidates: Vec<Vec<Vec<usize>>> = (0..dims.num_tx)
                .map(|j| {
                    (0..dims.num_sc)
                        .map(|c| {
                            (0..dims.num_rx)
                                .filter(|&k| assign[k][c] == Some(j) && weights[k] > 0.0)
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let empty = ScheduleState::empty(dims.num_tx, dims.num_sc);
            prosched_with_candidates(&empty, scenario, weights, qf, &candidates)?
        }
    };

    let mut alloc = Allocation::empty(dims.total_antennas(), dims.num_rx, dims.num_sc);
    for j in 0..dims.num_tx {
        // Zero-forcing directions with rank-deficiency repair: drop the
        // weakest member until every scheduled stream keeps a usable gain.
        let mut entries: Vec<(usize, usize, DVector<C64>, f64)>;
        loop {
            entries = Vec::new();
            let mut deficient: Option<(usize, usize)> = None;
            for c in 0..dims.num_sc {
                for &k in &schedule.serve[j][c] {
                    let mut others: BTreeSet<usize> = schedule.serve[j][c]
                        .union(&schedule.coord[j][c])
                        .cloned()
                        .collect();
                    others.remove(&k);
                    let cols: Vec<DVector<C64>> = others
                        .iter()
                        .map(|&o| scenario.chans.block(dims, j, o, c))
                        .collect();
                    let p = null_space_projector(&cols, dims.antennas[j]);
                    let h = scenario.chans.block(dims, j, k, c);
                    let proj = &p * &h;
                    let gain = proj.dot_self();
                    if gain <= 1e-24 * h.norm_squared().max(f64::MIN_POSITIVE) {
                        deficient = Some((k, c));
                        break;
                    }
                    let mut v = proj.clone() / C64::new(proj.norm(), 0.0);
                    let d = h.dotc(&v);
                    if d.norm() > 0.0 {
                        v *= d.conj() / C64::new(d.norm(), 0.0);
                    }
                    entries.push((k, c, v, gain / scenario.chans.noise(k, c)));
                }
                if deficient.is_some() {
                    break;
                }
            }
            match deficient {
                Some((_, c)) => {
                    // Drop the weakest served terminal on the deficient carrier.
                    let weakest = schedule.serve[j][c]
                        .iter()
                        .min_by(|&&a, &&b| {
                            let ea = scenario.chans.block(dims, j, a, c).norm_squared();
                            let eb = scenario.chans.block(dims, j, b, c).norm_squared();
                            ea.partial_cmp(&eb).unwrap().then(a.cmp(&b))
                        })
                        .cloned();
                    if let Some(k) = weakest {
                        schedule.serve[j][c].remove(&k);
                    }
                }
                None => break,
            }
        }
        if entries.is_empty() {
            continue;
        }
        let wf: Vec<WaterfillEntry> = entries
            .iter()
            .map(|&(k, _, _, rho)| WaterfillEntry { weight: weights[k], gain: rho })
            .collect();
        match waterfill(&wf, qf, limits[j]) {
            Ok(p) => {
                for (i, (k, c, v, _)) in entries.iter().enumerate() {
                    alloc.directions[*k][*c] = embed_block(dims, j, v);
                    alloc.powers[*k][*c] = p[i];
                }
            }
            Err(CoreError::EmptyAllocation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    schedule.recompute_coord(scenario);
    finish_output(scenario, weights, qf, alloc, schedule, "coordinated_zf")
}

/// Single-cell processing: each terminal is statically attached to its
/// strongest transmitter, every cell runs the distributed pipeline in
/// isolation with the estimated out-of-cell interference folded into the
/// noise, and the result is evaluated under the true cross-channel
/// interference.
pub fn single_cell(
    scenario: &Scenario,
    weights: &[f64],
    qf: QualityFunction,
    intercell_noise: Option<&[Vec<f64>]>,
) -> Result<StrategyOutput> {
    let dims = &scenario.dims;
    let limits = scenario.per_transmitter_limits().ok_or_else(|| {
        CoreError::InvalidParameter("single-cell requires per-transmitter power constraints".into())
    })?;
    // Static attachment by total channel energy from each transmitter.
    let mut attach = vec![0usize; dims.num_rx];
    for (k, a) in attach.iter_mut().enumerate() {
        let mut best = -1.0;
        for j in 0..dims.num_tx {
            let e: f64 = (0..dims.num_sc)
                .map(|c| scenario.chans.block(dims, j, k, c).norm_squared())
                .sum();
            if e > best {
                best = e;
                *a = j;
            }
        }
    }
    // Isolated-cell scenario: disjoint clusters and inflated noise.
    let data_sets: Vec<BTreeSet<usize>> = (0..dims.num_tx)
        .map(|j| attach.iter().enumerate().filter(|&(_, &a)| a == j).map(|(k, _)| k).collect())
        .collect();
    let clusters = crate::model::ClusterConfig::new(data_sets.clone(), data_sets.clone());
    let mut chans = scenario.chans.clone();
    for k in 0..dims.num_rx {
        for c in 0..dims.num_sc {
            let extra = match intercell_noise {
                Some(table) => table[k][c],
                None => (0..dims.num_tx)
                    .filter(|&j| j != attach[k])
                    .map(|j| {
                        limits[j] * scenario.chans.block(dims, j, k, c).norm_squared()
                            / (dims.antennas[j] as f64 * dims.num_sc as f64)
                    })
                    .sum(),
            };
            chans.set_noise(k, c, scenario.chans.noise(k, c) + extra);
        }
    }
    let isolated = Scenario::new(dims.clone(), clusters, chans, scenario.pcs.clone())?;
    let out = dvsinr(&isolated, weights, qf, None, None)?;

    // Evaluate under the true channels and full cross-interference: data sets
    // from the attachment, coordination sets spanning every terminal.
    let all: BTreeSet<usize> = (0..dims.num_rx).collect();
    let eval_clusters =
        crate::model::ClusterConfig::new(data_sets, vec![all; dims.num_tx]);
    let eval = Scenario::new(
        dims.clone(),
        eval_clusters,
        scenario.chans.clone(),
        scenario.pcs.clone(),
    )?;
    let mut result = finish_output(
        &eval,
        weights,
        qf,
        out.allocation,
        out.schedule,
        "single_cell",
    )?;
    result.name = "single_cell";
    Ok(result)
}
