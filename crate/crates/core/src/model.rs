//! System model: channels, cooperation clusters, selection masks, and power
//! constraints.
//!
//! Transmitter `j` has `N_j` antennas; the stacked channel of a terminal
//! concatenates the per-transmitter blocks in transmitter order. The dynamic
//! cooperation clusters are described per transmitter by a data set `D_j`
//! (terminals served with data) and a coordination set `C_j >= D_j`
//! (terminals whose interference is coordinated). All indices are 0-based.

use crate::linalg::hermitian_eig_range;
use crate::{C64, CoreError, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeSet;
use std::ops::Range;

/// Relative eigenvalue tolerance for positive-semidefiniteness checks.
const PSD_REL_TOL: f64 = 1e-9;

/// Antenna/terminal/subcarrier counts of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Dimensions {
    pub num_tx: usize,
    /// Antennas per transmitter, `N_j`.
    pub antennas: Vec<usize>,
    pub num_rx: usize,
    pub num_sc: usize,
}

impl Dimensions {
    pub fn new(antennas: Vec<usize>, num_rx: usize, num_sc: usize) -> Result<Self> {
        if antennas.is_empty() || num_rx == 0 || num_sc == 0 {
            return Err(CoreError::InvalidParameter(
                "all counts must be at least 1".into(),
            ));
        }
        if antennas.iter().any(|&n| n == 0) {
            return Err(CoreError::InvalidParameter(
                "every transmitter needs at least one antenna".into(),
            ));
        }
        Ok(Self {
            num_tx: antennas.len(),
            antennas,
            num_rx,
            num_sc,
        })
    }

    /// Total number of transmit antennas `N`.
    pub fn total_antennas(&self) -> usize {
        self.antennas.iter().sum()
    }

    /// Index range of transmitter `j`'s block in a stacked length-`N` vector.
    pub fn block_range(&self, j: usize) -> Range<usize> {
        let start: usize = self.antennas[..j].iter().sum();
        start..start + self.antennas[j]
    }
}

/// Dynamic cooperation clusters: per-transmitter serve and coordination sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    /// `D_j`: terminals served with data by transmitter `j`.
    pub data_sets: Vec<BTreeSet<usize>>,
    /// `C_j`: terminals whose interference transmitter `j` coordinates.
    pub coord_sets: Vec<BTreeSet<usize>>,
}

impl ClusterConfig {
    pub fn new(data_sets: Vec<BTreeSet<usize>>, coord_sets: Vec<BTreeSet<usize>>) -> Self {
        Self {
            data_sets,
            coord_sets,
        }
    }

    /// All transmitters serve and coordinate all terminals.
    pub fn ideal_network_mimo(dims: &Dimensions) -> Self {
        let all: BTreeSet<usize> = (0..dims.num_rx).collect();
        Self {
            data_sets: vec![all.clone(); dims.num_tx],
            coord_sets: vec![all; dims.num_tx],
        }
    }

    /// Transmitter `j` serves terminal `j` and coordinates interference to all
    /// terminals. Requires `num_tx == num_rx`.
    pub fn interference_channel(dims: &Dimensions) -> Result<Self> {
        if dims.num_tx != dims.num_rx {
            return Err(CoreError::InvalidCluster(
                "interference channel needs one terminal per transmitter".into(),
            ));
        }
        let all: BTreeSet<usize> = (0..dims.num_rx).collect();
        Ok(Self {
            data_sets: (0..dims.num_tx).map(|j| BTreeSet::from([j])).collect(),
            coord_sets: vec![all; dims.num_tx],
        })
    }

    pub fn validate(&self, dims: &Dimensions) -> Result<()> {
        if self.data_sets.len() != dims.num_tx || self.coord_sets.len() != dims.num_tx {
            return Err(CoreError::InvalidCluster(format!(
                "expected {} cluster sets, got {}/{}",
                dims.num_tx,
                self.data_sets.len(),
                self.coord_sets.len()
            )));
        }
        for j in 0..dims.num_tx {
            for &k in self.data_sets[j].iter().chain(self.coord_sets[j].iter()) {
                if k >= dims.num_rx {
                    return Err(CoreError::InvalidCluster(format!(
                        "terminal index {k} out of range for transmitter {j}"
                    )));
                }
            }
            if !self.data_sets[j].is_subset(&self.coord_sets[j]) {
                return Err(CoreError::InvalidCluster(format!(
                    "D_{j} is not a subset of C_{j}"
                )));
            }
        }
        for k in 0..dims.num_rx {
            if !self.data_sets.iter().any(|d| d.contains(&k)) {
                return Err(CoreError::InvalidCluster(format!(
                    "terminal {k} is not served by any transmitter"
                )));
            }
        }
        Ok(())
    }

    /// Transmitters that serve terminal `k` with data.
    pub fn serving_transmitters(&self, k: usize) -> Vec<usize> {
        (0..self.data_sets.len())
            .filter(|&j| self.data_sets[j].contains(&k))
            .collect()
    }
}

/// Per-terminal 0/1 diagonal selection masks, stored as boolean vectors over
/// the stacked antenna index.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMasks {
    /// `D_k` diagonal: true where transmitter block `j` has `k` in `D_j`.
    pub data: Vec<Vec<bool>>,
    /// `C_k` diagonal: true where transmitter block `j` has `k` in `C_j`.
    pub coord: Vec<Vec<bool>>,
}

impl SelectionMasks {
    /// Zero out entries of `v` where the mask is false.
    pub fn apply(mask: &[bool], v: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            v.len(),
            v.iter()
                .zip(mask)
                .map(|(x, &m)| if m { *x } else { C64::new(0.0, 0.0) }),
        )
    }

    /// Elementwise AND of two masks.
    pub fn and(a: &[bool], b: &[bool]) -> Vec<bool> {
        a.iter().zip(b).map(|(&x, &y)| x && y).collect()
    }
}

/// Build the per-terminal diagonal selection masks from the cluster sets.
pub fn build_selection_masks(clusters: &ClusterConfig, dims: &Dimensions) -> Result<SelectionMasks> {
    clusters.validate(dims)?;
    let n = dims.total_antennas();
    let mut data = vec![vec![false; n]; dims.num_rx];
    let mut coord = vec![vec![false; n]; dims.num_rx];
    for j in 0..dims.num_tx {
        let range = dims.block_range(j);
        for k in 0..dims.num_rx {
            if clusters.data_sets[j].contains(&k) {
                data[k][range.clone()].fill(true);
            }
            if clusters.coord_sets[j].contains(&k) {
                coord[k][range.clone()].fill(true);
            }
        }
    }
    Ok(SelectionMasks { data, coord })
}

/// Interferer set `I_k`: co-terminals served by the transmitters that cause
/// non-negligible interference at terminal `k`.
pub fn interferer_set(k: usize, clusters: &ClusterConfig) -> Result<BTreeSet<usize>> {
    if !clusters.data_sets.iter().any(|d| d.contains(&k)) {
        return Err(CoreError::InvalidParameter(format!(
            "terminal index {k} is not served by any transmitter"
        )));
    }
    let mut set = BTreeSet::new();
    for j in 0..clusters.coord_sets.len() {
        if clusters.coord_sets[j].contains(&k) {
            set.extend(clusters.data_sets[j].iter().copied());
        }
    }
    set.remove(&k);
    Ok(set)
}

/// Coordinated set: terminals that the transmitters serving `k` are
/// coordinating interference towards.
pub fn coordinated_set(k: usize, clusters: &ClusterConfig) -> Result<BTreeSet<usize>> {
    if !clusters.data_sets.iter().any(|d| d.contains(&k)) {
        return Err(CoreError::InvalidParameter(format!(
            "terminal index {k} is not served by any transmitter"
        )));
    }
    let mut set = BTreeSet::new();
    for j in 0..clusters.data_sets.len() {
        if clusters.data_sets[j].contains(&k) {
            set.extend(clusters.coord_sets[j].iter().copied());
        }
    }
    set.remove(&k);
    Ok(set)
}

/// `L` linear power constraints `sum_kc tr(Q_l S_kc) <= q_l`.
#[derive(Debug, Clone)]
pub struct PowerConstraintSet {
    /// Hermitian PSD weighting matrices `Q_l`, each `N x N`.
    pub matrices: Vec<DMatrix<C64>>,
    /// Limits `q_l` in linear power units.
    pub limits: Vec<f64>,
}

impl PowerConstraintSet {
    pub fn custom(matrices: Vec<DMatrix<C64>>, limits: Vec<f64>) -> Result<Self> {
        if matrices.len() != limits.len() || matrices.is_empty() {
            return Err(CoreError::InvalidParameter(
                "need one limit per constraint matrix".into(),
            ));
        }
        if limits.iter().any(|&q| q <= 0.0) {
            return Err(CoreError::InvalidParameter(
                "power limits must be positive".into(),
            ));
        }
        Ok(Self { matrices, limits })
    }

    /// Single total-power constraint `Q_1 = I_N`.
    pub fn total_power(dims: &Dimensions, q: f64) -> Result<Self> {
        let n = dims.total_antennas();
        Self::custom(vec![DMatrix::identity(n, n)], vec![q])
    }

    /// One constraint per transmitter: `Q_j` is identity on block `j`.
    pub fn per_transmitter(dims: &Dimensions, q: Vec<f64>) -> Result<Self> {
        if q.len() != dims.num_tx {
            return Err(CoreError::InvalidParameter(
                "need one limit per transmitter".into(),
            ));
        }
        let n = dims.total_antennas();
        let matrices = (0..dims.num_tx)
            .map(|j| {
                let mut m = DMatrix::zeros(n, n);
                for i in dims.block_range(j) {
                    m[(i, i)] = C64::new(1.0, 0.0);
                }
                m
            })
            .collect();
        Self::custom(matrices, q)
    }

    /// One constraint per antenna.
    pub fn per_antenna(dims: &Dimensions, q: Vec<f64>) -> Result<Self> {
        let n = dims.total_antennas();
        if q.len() != n {
            return Err(CoreError::InvalidParameter(
                "need one limit per antenna".into(),
            ));
        }
        let matrices = (0..n)
            .map(|i| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, i)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        Self::custom(matrices, q)
    }

    pub fn num_constraints(&self) -> usize {
        self.limits.len()
    }

    /// `sum_l omega_l Q_l`.
    pub fn weighted_sum(&self, omega: &[f64]) -> DMatrix<C64> {
        let n = self.matrices[0].nrows();
        let mut acc = DMatrix::zeros(n, n);
        for (m, &w) in self.matrices.iter().zip(omega) {
            if w != 0.0 {
                acc += m.map(|x| x * w);
            }
        }
        acc
    }
}

/// A single violated condition found by [`validate_power_constraints`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    /// `Q_l - D_k Q_l D_k` is not diagonal for this (constraint, terminal).
    NotDiagonalOutsideMask { constraint: usize, terminal: usize },
    /// `Q_l` has an eigenvalue below the PSD tolerance.
    NotPsd { constraint: usize, min_eigenvalue: f64 },
    /// `sum_l Q_l` is not positive definite.
    SumNotPositiveDefinite { min_eigenvalue: f64 },
}

/// Check the two admissibility conditions on the constraint matrices:
/// (a) `Q_l - D_k Q_l D_k` diagonal for all `l, k`, and (b) `sum_l Q_l`
/// positive definite. Returns the list of violations (empty when valid).
pub fn validate_power_constraints(
    pcs: &PowerConstraintSet,
    masks: &SelectionMasks,
) -> Vec<ConstraintViolation> {
    let mut violations = Vec::new();
    let n = pcs.matrices[0].nrows();
    for (l, q) in pcs.matrices.iter().enumerate() {
        let (min_eig, max_eig) = hermitian_eig_range(q);
        if min_eig < -PSD_REL_TOL * max_eig.max(1.0) {
            violations.push(ConstraintViolation::NotPsd {
                constraint: l,
                min_eigenvalue: min_eig,
            });
        }
        for (k, mask) in masks.data.iter().enumerate() {
            // Off-diagonal entries outside the D_k-masked block must vanish.
            let mut diagonal = true;
            'outer: for r in 0..n {
                for col in 0..n {
                    if r == col {
                        continue;
                    }
                    let masked = if mask[r] && mask[col] {
                        q[(r, col)]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    if (q[(r, col)] - masked).norm() > 1e-12 {
                        diagonal = false;
                        break 'outer;
                    }
                }
            }
            if !diagonal {
                violations.push(ConstraintViolation::NotDiagonalOutsideMask {
                    constraint: l,
                    terminal: k,
                });
            }
        }
    }
    let mut sum = DMatrix::zeros(n, n);
    for q in &pcs.matrices {
        sum += q;
    }
    let (min_eig, max_eig) = hermitian_eig_range(&sum);
    if min_eig <= PSD_REL_TOL * max_eig.max(1.0) {
        violations.push(ConstraintViolation::SumNotPositiveDefinite {
            min_eigenvalue: min_eig,
        });
    }
    violations
}

/// Complex channel vectors for all (transmitter, terminal, subcarrier) links,
/// stored in stacked form, plus per-(terminal, subcarrier) noise powers.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// `h[k][c]`: stacked channel of terminal `k` on subcarrier `c`, length `N`.
    stacked: Vec<Vec<DVector<C64>>>,
    /// `sigma^2` per (terminal, subcarrier), linear scale.
    noise: Vec<Vec<f64>>,
}

impl ChannelSet {
    pub fn new(
        dims: &Dimensions,
        stacked: Vec<Vec<DVector<C64>>>,
        noise: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = dims.total_antennas();
        if stacked.len() != dims.num_rx || noise.len() != dims.num_rx {
            return Err(CoreError::DimensionMismatch(format!(
                "expected {} terminals",
                dims.num_rx
            )));
        }
        for k in 0..dims.num_rx {
            if stacked[k].len() != dims.num_sc || noise[k].len() != dims.num_sc {
                return Err(CoreError::DimensionMismatch(format!(
                    "terminal {k}: expected {} subcarriers",
                    dims.num_sc
                )));
            }
            for c in 0..dims.num_sc {
                if stacked[k][c].len() != n {
                    return Err(CoreError::DimensionMismatch(format!(
                        "channel ({k},{c}) has length {}, expected {n}",
                        stacked[k][c].len()
                    )));
                }
                if noise[k][c] <= 0.0 {
                    return Err(CoreError::InvalidParameter(format!(
                        "noise power for ({k},{c}) must be strictly positive"
                    )));
                }
            }
        }
        Ok(Self { stacked, noise })
    }

    /// Stacked channel `h_kc` of length `N`.
    pub fn stacked(&self, k: usize, c: usize) -> &DVector<C64> {
        &self.stacked[k][c]
    }

    /// Per-transmitter block `h_jkc` of length `N_j`.
    pub fn block(&self, dims: &Dimensions, j: usize, k: usize, c: usize) -> DVector<C64> {
        let r = dims.block_range(j);
        DVector::from_iterator(r.len(), self.stacked[k][c].iter().skip(r.start).take(r.len()).cloned())
    }

    pub fn noise(&self, k: usize, c: usize) -> f64 {
        self.noise[k][c]
    }

    pub fn num_rx(&self) -> usize {
        self.stacked.len()
    }

    pub fn num_sc(&self) -> usize {
        self.stacked[0].len()
    }

    pub fn set_noise(&mut self, k: usize, c: usize, sigma2: f64) {
        self.noise[k][c] = sigma2;
    }

    pub fn set_stacked(&mut self, k: usize, c: usize, h: DVector<C64>) {
        self.stacked[k][c] = h;
    }
}

/// A complete scenario: dimensions, clusters plus derived masks, channels, and
/// power constraints. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dims: Dimensions,
    pub clusters: ClusterConfig,
    pub masks: SelectionMasks,
    pub chans: ChannelSet,
    pub pcs: PowerConstraintSet,
}

impl Scenario {
    pub fn new(
        dims: Dimensions,
        clusters: ClusterConfig,
        chans: ChannelSet,
        pcs: PowerConstraintSet,
    ) -> Result<Self> {
        let masks = build_selection_masks(&clusters, &dims)?;
        if pcs.matrices[0].nrows() != dims.total_antennas() {
            return Err(CoreError::DimensionMismatch(
                "power constraint matrices must be N x N".into(),
            ));
        }
        Ok(Self {
            dims,
            clusters,
            masks,
            chans,
            pcs,
        })
    }

    /// Per-transmitter power budget `q_j`, available when the constraints are
    /// exactly the per-transmitter ones (one block-identity matrix each).
    pub fn per_transmitter_limits(&self) -> Option<Vec<f64>> {
        if self.pcs.num_constraints() != self.dims.num_tx {
            return None;
        }
        let n = self.dims.total_antennas();
        for j in 0..self.dims.num_tx {
            let range = self.dims.block_range(j);
            let q = &self.pcs.matrices[j];
            for r in 0..n {
                for c in 0..n {
                    let expect = if r == c && range.contains(&r) { 1.0 } else { 0.0 };
                    if (q[(r, c)] - C64::new(expect, 0.0)).norm() > 1e-12 {
                        return None;
                    }
                }
            }
        }
        Some(self.pcs.limits.clone())
    }
}
