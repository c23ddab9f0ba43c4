//! Shared scenario builders for the benchmarks in `benches/`.

use multicell_core::channels::rayleigh;
use multicell_core::model::{ClusterConfig, Dimensions, PowerConstraintSet, Scenario};
use multicell_core::Result;

/// A network-MIMO scenario with `num_tx` four-antenna transmitters, `num_rx`
/// terminals, and `num_sc` subcarriers, unit noise, and 10 dB per-transmitter
/// budgets.
pub fn network_mimo_scenario(
    num_tx: usize,
    num_rx: usize,
    num_sc: usize,
    seed: u64,
) -> Result<Scenario> {
    let dims = Dimensions::new(vec![4; num_tx], num_rx, num_sc)?;
    let clusters = ClusterConfig::ideal_network_mimo(&dims);
    let path_loss = vec![vec![1.0; num_rx]; num_tx];
    let chans = rayleigh(&dims, &path_loss, 1.0, seed)?;
    let pcs = PowerConstraintSet::per_transmitter(&dims, vec![10.0; num_tx])?;
    Scenario::new(dims, clusters, chans, pcs)
}
