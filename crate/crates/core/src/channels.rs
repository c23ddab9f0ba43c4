//! Synthetic channel generation: i.i.d. Rayleigh fading with per-link path
//! loss, optional inter-transmitter correlation, the phase-error perturbation
//! model, and proportional-fairness weights.
//!
//! Every generator derives one RNG stream per link from `(seed, j, k, c)`, so
//! outputs are identical regardless of evaluation order or thread count.

use crate::model::{ChannelSet, Dimensions};
use crate::{C64, CoreError, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for one link, keyed by the seed, a purpose tag, and the
/// link indices.
fn link_rng(seed: u64, tag: u64, j: usize, k: usize, c: usize) -> ChaCha8Rng {
    let mut s = splitmix64(seed ^ tag);
    s = splitmix64(s ^ (j as u64));
    s = splitmix64(s ^ (k as u64));
    s = splitmix64(s ^ (c as u64));
    ChaCha8Rng::seed_from_u64(s)
}

/// Standard normal via Box-Muller.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Circularly-symmetric complex Gaussian with the given variance.
fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    C64::new(s * standard_normal(rng), s * standard_normal(rng))
}

/// Rayleigh-fading channels: each antenna entry of the `(j, k)` block is
/// complex Gaussian with variance `path_loss[j][k]`, independent across
/// subcarriers. `noise` is the receiver noise power for every (k, c).
pub fn rayleigh(
    dims: &Dimensions,
    path_loss: &[Vec<f64>],
    noise: f64,
    seed: u64,
) -> Result<ChannelSet> {
    rayleigh_correlated(dims, path_loss, noise, 0.0, seed)
}

/// Rayleigh fading with a common correlation coefficient `corr` between the
/// per-transmitter blocks of each terminal (0 = independent, 1 = fully
/// correlated small-scale fading across transmitters).
pub fn rayleigh_correlated(
    dims: &Dimensions,
    path_loss: &[Vec<f64>],
    noise: f64,
    corr: f64,
    seed: u64,
) -> Result<ChannelSet> {
    if path_loss.len() != dims.num_tx || path_loss.iter().any(|r| r.len() != dims.num_rx) {
        return Err(CoreError::DimensionMismatch(
            "path loss must be num_tx x num_rx".into(),
        ));
    }
    if path_loss.iter().flatten().any(|&g| g < 0.0 || !g.is_finite()) {
        return Err(CoreError::InvalidParameter("path loss gains must be nonnegative".into()));
    }
    if !(0.0..=1.0).contains(&corr) {
        return Err(CoreError::InvalidParameter(
            "correlation coefficient must lie in [0, 1]".into(),
        ));
    }
    let n = dims.total_antennas();
    let mut stacked = vec![vec![DVector::<C64>::zeros(n); dims.num_sc]; dims.num_rx];
    for k in 0..dims.num_rx {
        for c in 0..dims.num_sc {
            // Shared component per terminal, reused by every transmitter.
            let mut shared_rng = link_rng(seed, 0x5ead, usize::MAX, k, c);
            let max_block = dims.antennas.iter().cloned().max().unwrap_or(0);
            let shared: Vec<C64> = (0..max_block)
                .map(|_| complex_normal(&mut shared_rng, 1.0))
                .collect();
            let h = &mut stacked[k][c];
            for j in 0..dims.num_tx {
                let gain = path_loss[j][k];
                let mut rng = link_rng(seed, 0xfade, j, k, c);
                for (i, idx) in dims.block_range(j).enumerate() {
                    let own = complex_normal(&mut rng, 1.0);
                    let mixed = own * (1.0 - corr).sqrt() + shared[i] * corr.sqrt();
                    h[idx] = mixed * gain.sqrt();
                }
            }
        }
    }
    let noises = vec![vec![noise; dims.num_sc]; dims.num_rx];
    ChannelSet::new(dims, stacked, noises)
}

/// Multiply each per-(j, k, c) channel block by a common random phase
/// `e^{i phi}` with `phi ~ N(0, sigma_phi^2)`. Block norms are preserved
/// exactly; `sigma_phi = 0` is the identity.
pub fn phase_perturb(
    chans: &ChannelSet,
    dims: &Dimensions,
    sigma_phi: f64,
    seed: u64,
) -> Result<ChannelSet> {
    if sigma_phi < 0.0 || !sigma_phi.is_finite() {
        return Err(CoreError::InvalidParameter(
            "phase deviation must be finite and nonnegative".into(),
        ));
    }
    let mut out = chans.clone();
    if sigma_phi == 0.0 {
        return Ok(out);
    }
    for k in 0..chans.num_rx() {
        for c in 0..chans.num_sc() {
            let mut h = chans.stacked(k, c).clone();
            for j in 0..dims.num_tx {
                let mut rng = link_rng(seed, 0x9123, j, k, c);
                let phi = sigma_phi * standard_normal(&mut rng);
                let rot = C64::new(phi.cos(), phi.sin());
                for idx in dims.block_range(j) {
                    h[idx] *= rot;
                }
            }
            out.set_stacked(k, c, h);
        }
    }
    Ok(out)
}

/// Proportional-fairness weights: `mu_k` inversely proportional to the mean
/// single-terminal rate `E{log2(1 + (K_t/(K_r sigma^2)) max_j q_j ||h_jk||^2)}`
/// over the given channel ensemble, normalized so the weights sum to `K_r`.
pub fn proportional_fair_weights(
    ensemble: &[ChannelSet],
    dims: &Dimensions,
    tx_limits: &[f64],
) -> Result<Vec<f64>> {
    if ensemble.is_empty() {
        return Err(CoreError::InvalidParameter("channel ensemble is empty".into()));
    }
    if tx_limits.len() != dims.num_tx {
        return Err(CoreError::DimensionMismatch(
            "one power limit per transmitter expected".into(),
        ));
    }
    let kt = dims.num_tx as f64;
    let kr = dims.num_rx as f64;
    let mut mean_rate = vec![0.0; dims.num_rx];
    let mut samples = 0usize;
    for chans in ensemble {
        for c in 0..chans.num_sc() {
            for (k, acc) in mean_rate.iter_mut().enumerate() {
                let h = chans.stacked(k, c);
                let best = (0..dims.num_tx)
                    .map(|j| {
                        let block_energy: f64 =
                            dims.block_range(j).map(|i| h[i].norm_sqr()).sum();
                        tx_limits[j] * block_energy
                    })
                    .fold(0.0f64, f64::max);
                let snr = kt / (kr * chans.noise(k, c)) * best;
                *acc += (1.0 + snr).log2();
            }
            samples += 1;
        }
    }
    let mut inv = Vec::with_capacity(dims.num_rx);
    for (k, &total) in mean_rate.iter().enumerate() {
        let mean = total / samples as f64;
        if mean <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "terminal {k} has zero mean rate; cannot form fairness weight"
            )));
        }
        inv.push(1.0 / mean);
    }
    let sum: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|x| x * kr / sum).collect())
}

/// Parse channels from CSV text: each line is `k,c,re_0,im_0,...,re_{N-1},im_{N-1}`
/// giving the stacked vector of terminal `k` on subcarrier `c`. Every (k, c)
/// pair must appear exactly once.
pub fn channels_from_csv(dims: &Dimensions, noise: f64, text: &str) -> Result<ChannelSet> {
    let n = dims.total_antennas();
    let mut stacked = vec![vec![None; dims.num_sc]; dims.num_rx];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 + 2 * n {
            return Err(CoreError::InvalidParameter(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                2 + 2 * n,
                fields.len()
            )));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| CoreError::InvalidParameter(format!("line {}: bad index '{s}'", lineno + 1)))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| CoreError::InvalidParameter(format!("line {}: bad number '{s}'", lineno + 1)))
        };
        let k = parse_idx(fields[0])?;
        let c = parse_idx(fields[1])?;
        if k >= dims.num_rx || c >= dims.num_sc {
            return Err(CoreError::InvalidParameter(format!(
                "line {}: link ({k},{c}) out of range",
                lineno + 1
            )));
        }
        let mut h = DVector::<C64>::zeros(n);
        for i in 0..n {
            h[i] = C64::new(parse_f(fields[2 + 2 * i])?, parse_f(fields[3 + 2 * i])?);
        }
        if stacked[k][c].replace(h).is_some() {
            return Err(CoreError::InvalidParameter(format!(
                "line {}: duplicate link ({k},{c})",
                lineno + 1
            )));
        }
    }
    let mut vecs = Vec::with_capacity(dims.num_rx);
    for (k, row) in stacked.into_iter().enumerate() {
        let mut out = Vec::with_capacity(dims.num_sc);
        for (c, h) in row.into_iter().enumerate() {
            out.push(h.ok_or_else(|| {
                CoreError::InvalidParameter(format!("missing channel for link ({k},{c})"))
            })?);
        }
        vecs.push(out);
    }
    let noises = vec![vec![noise; dims.num_sc]; dims.num_rx];
    ChannelSet::new(dims, vecs, noises)
}
