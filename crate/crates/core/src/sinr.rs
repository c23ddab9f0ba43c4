//! SINR computation (coherent downlink, incoherent downlink, virtual uplink),
//! terminal quality functions, and system utility functions.

use crate::model::{ChannelSet, SelectionMasks};
use crate::param::{dual_coupling_matrix, DualParams};
use crate::{C64, CoreError, Result};
use nalgebra::DVector;

/// A rank-one transmit allocation: per (terminal, subcarrier) a unit-norm
/// stacked beamforming direction and a transmit power. The implied signal
/// correlation matrix is `p_kc (D_k v_kc)(D_k v_kc)^H`.
#[derive(Debug, Clone)]
pub struct Allocation {
    /// `v[k][c]`: stacked direction of length `N`; zero outside the `D_k` mask.
    pub directions: Vec<Vec<DVector<C64>>>,
    /// `p[k][c] >= 0`.
    pub powers: Vec<Vec<f64>>,
}

impl Allocation {
    /// All-zero allocation for `num_rx` terminals and `num_sc` subcarriers.
    pub fn empty(n: usize, num_rx: usize, num_sc: usize) -> Self {
        Self {
            directions: vec![vec![DVector::zeros(n); num_sc]; num_rx],
            powers: vec![vec![0.0; num_sc]; num_rx],
        }
    }

    pub fn num_rx(&self) -> usize {
        self.powers.len()
    }

    pub fn num_sc(&self) -> usize {
        self.powers[0].len()
    }

    /// Power consumed against constraint matrix `Q_l`:
    /// `sum_kc p_kc (D_k v_kc)^H Q_l (D_k v_kc)`.
    pub fn consumed_power(&self, q: &nalgebra::DMatrix<C64>) -> f64 {
        let mut total = 0.0;
        for k in 0..self.num_rx() {
            for c in 0..self.num_sc() {
                let p = self.powers[k][c];
                if p > 0.0 {
                    total += p * crate::linalg::quad_form(q, &self.directions[k][c]);
                }
            }
        }
        total
    }
}

/// Coherent downlink SINR of terminal `k` on subcarrier `c` under joint
/// transmission from all serving transmitters.
pub fn downlink_sinr(
    alloc: &Allocation,
    chans: &ChannelSet,
    masks: &SelectionMasks,
    k: usize,
    c: usize,
) -> Result<f64> {
    check_dims(alloc, chans, k, c)?;
    let h = chans.stacked(k, c);
    let p = alloc.powers[k][c];
    if p == 0.0 {
        return Ok(0.0);
    }
    let dv = SelectionMasks::apply(&masks.data[k], &alloc.directions[k][c]);
    let signal = p * h.dotc(&dv).norm_sqr();
    let mut interference = 0.0;
    for kb in 0..alloc.num_rx() {
        if kb == k {
            continue;
        }
        let pb = alloc.powers[kb][c];
        if pb == 0.0 {
            continue;
        }
        // C_k D_kb masks the interfering stream; zero for non-interferers.
        let mask = SelectionMasks::and(&masks.coord[k], &masks.data[kb]);
        let dvb = SelectionMasks::apply(&mask, &alloc.directions[kb][c]);
        interference += pb * h.dotc(&dvb).norm_sqr();
    }
    Ok(signal / (chans.noise(k, c) + interference))
}

/// Downlink SINR under incoherent interference reception: the interference of
/// each co-scheduled stream is summed per transmitter instead of coherently.
pub fn incoherent_sinr(
    alloc: &Allocation,
    chans: &ChannelSet,
    masks: &SelectionMasks,
    dims: &crate::model::Dimensions,
    k: usize,
    c: usize,
) -> Result<f64> {
    check_dims(alloc, chans, k, c)?;
    let h = chans.stacked(k, c);
    let p = alloc.powers[k][c];
    if p == 0.0 {
        return Ok(0.0);
    }
    let dv = SelectionMasks::apply(&masks.data[k], &alloc.directions[k][c]);
    let signal = p * h.dotc(&dv).norm_sqr();
    let mut interference = 0.0;
    for kb in 0..alloc.num_rx() {
        if kb == k {
            continue;
        }
        let pb = alloc.powers[kb][c];
        if pb == 0.0 {
            continue;
        }
        let mask = SelectionMasks::and(&masks.coord[k], &masks.data[kb]);
        let dvb = SelectionMasks::apply(&mask, &alloc.directions[kb][c]);
        for j in 0..dims.num_tx {
            let range = dims.block_range(j);
            let mut dot = C64::new(0.0, 0.0);
            for i in range {
                dot += h[i].conj() * dvb[i];
            }
            interference += pb * dot.norm_sqr();
        }
    }
    Ok(signal / (chans.noise(k, c) + interference))
}

/// Virtual-uplink SINR of terminal `k` on subcarrier `c` for a given receive
/// vector `wbar` and dual parameters.
pub fn virtual_uplink_sinr(
    wbar: &DVector<C64>,
    duals: &DualParams,
    chans: &ChannelSet,
    masks: &SelectionMasks,
    pcs: &crate::model::PowerConstraintSet,
    k: usize,
    c: usize,
) -> Result<f64> {
    let h = chans.stacked(k, c);
    if wbar.len() != h.len() {
        return Err(CoreError::DimensionMismatch(
            "receive vector length must equal total antennas".into(),
        ));
    }
    let dh = SelectionMasks::apply(&masks.data[k], h);
    let numerator = duals.lambda[k][c] * wbar.dotc(&dh).norm_sqr();
    if numerator == 0.0 {
        return Ok(0.0);
    }
    let b = dual_coupling_matrix(duals, chans, masks, pcs, k, c);
    let denominator = crate::linalg::quad_form(&b, wbar);
    if denominator <= f64::EPSILON * numerator {
        return Err(CoreError::SingularDenominator {
            terminal: k,
            subcarrier: c,
        });
    }
    Ok(numerator / denominator)
}

fn check_dims(alloc: &Allocation, chans: &ChannelSet, k: usize, c: usize) -> Result<()> {
    if k >= alloc.num_rx() || c >= alloc.num_sc() || k >= chans.num_rx() || c >= chans.num_sc() {
        return Err(CoreError::DimensionMismatch(format!(
            "index ({k},{c}) out of range"
        )));
    }
    if alloc.directions[k][c].len() != chans.stacked(k, c).len() {
        return Err(CoreError::DimensionMismatch(
            "direction and channel lengths differ".into(),
        ));
    }
    Ok(())
}

/// Constellation family for the Chernoff SER bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Pam,
    Psk,
    Qam,
}

/// Strictly increasing, concave terminal quality function of the SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualityFunction {
    /// `log2(1 + x)` bits.
    Rate,
    /// Negated mean square error, `-1/(1 + x)`.
    Mse,
    /// Negated Chernoff bound on the symbol error rate of an uncoded M-ary
    /// constellation, `-((M-1)/M) exp(-x z)`.
    ChernoffSer { m: u32, family: Constellation },
}

impl QualityFunction {
    pub fn chernoff_ser(m: u32, family: Constellation) -> Result<Self> {
        if m < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "modulation order {m} must be at least 2"
            )));
        }
        Ok(Self::ChernoffSer { m, family })
    }

    /// Constellation-dependent exponent factor `z`.
    pub fn exponent_factor(m: u32, family: Constellation) -> f64 {
        let mf = m as f64;
        match family {
            Constellation::Pam => 3.0 / (mf * mf - 1.0),
            Constellation::Psk => (std::f64::consts::PI / mf).sin().powi(2),
            Constellation::Qam => 3.0 / (2.0 * mf - 2.0),
        }
    }
}

/// Quality value `g(x)` at SINR `x >= 0`.
pub fn quality_value(qf: QualityFunction, sinr: f64) -> f64 {
    match qf {
        QualityFunction::Rate => (1.0 + sinr).log2(),
        QualityFunction::Mse => -1.0 / (1.0 + sinr),
        QualityFunction::ChernoffSer { m, family } => {
            let z = QualityFunction::exponent_factor(m, family);
            let mf = m as f64;
            -((mf - 1.0) / mf) * (-sinr * z).exp()
        }
    }
}

/// Derivative `g'(x)` in the natural-log convention (rate derivative is
/// `1/(1+x)`); the `ln 2` factor is absorbed into the waterfilling level.
pub fn quality_derivative(qf: QualityFunction, sinr: f64) -> f64 {
    match qf {
        QualityFunction::Rate => 1.0 / (1.0 + sinr),
        QualityFunction::Mse => 1.0 / (1.0 + sinr).powi(2),
        QualityFunction::ChernoffSer { m, family } => {
            let z = QualityFunction::exponent_factor(m, family);
            let mf = m as f64;
            z * ((mf - 1.0) / mf) * (-sinr * z).exp()
        }
    }
}

/// Inverse of the derivative, `g'^{-1}(y)` for `y > 0`. The result may be
/// negative; waterfilling clamps at zero afterwards.
pub fn quality_inv_derivative(qf: QualityFunction, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "derivative value {y} must be positive"
        )));
    }
    Ok(match qf {
        QualityFunction::Rate => 1.0 / y - 1.0,
        QualityFunction::Mse => 1.0 / y.sqrt() - 1.0,
        QualityFunction::ChernoffSer { m, family } => {
            let z = QualityFunction::exponent_factor(m, family);
            let mf = m as f64;
            (1.0 / z) * (((mf - 1.0) * z) / (mf * y)).ln()
        }
    })
}

/// How per-terminal qualities combine into a system utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityKind {
    WeightedSum,
    WeightedMaxMin,
}

/// System utility: weighted sum or weighted max-min of terminal qualities.
#[derive(Debug, Clone)]
pub struct UtilityConfig {
    pub kind: UtilityKind,
    pub weights: Vec<f64>,
}

impl UtilityConfig {
    pub fn new(kind: UtilityKind, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().all(|&w| w == 0.0) {
            return Err(CoreError::InvalidParameter(
                "at least one weight must be positive".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(CoreError::InvalidParameter(
                "weights must be nonnegative".into(),
            ));
        }
        Ok(Self { kind, weights })
    }

    pub fn weighted_sum(weights: Vec<f64>) -> Result<Self> {
        Self::new(UtilityKind::WeightedSum, weights)
    }

    pub fn weighted_max_min(weights: Vec<f64>) -> Result<Self> {
        Self::new(UtilityKind::WeightedMaxMin, weights)
    }
}

/// Evaluate the system utility over per-terminal quality values.
pub fn system_utility(cfg: &UtilityConfig, per_terminal: &[f64]) -> Result<f64> {
    if per_terminal.len() != cfg.weights.len() {
        return Err(CoreError::DimensionMismatch(
            "weights and quality vector lengths differ".into(),
        ));
    }
    Ok(match cfg.kind {
        UtilityKind::WeightedSum => cfg
            .weights
            .iter()
            .zip(per_terminal)
            .map(|(&w, &g)| w * g)
            .sum(),
        UtilityKind::WeightedMaxMin => cfg
            .weights
            .iter()
            .zip(per_terminal)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &g)| g / w)
            .fold(f64::INFINITY, f64::min),
    })
}
