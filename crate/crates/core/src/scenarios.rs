//! Canonical toy scenarios used in tests, benchmarks, and the oracle suite.

use crate::model::{ChannelSet, ClusterConfig, Dimensions, PowerConstraintSet, Scenario};
use crate::C64;
use nalgebra::DVector;
use std::collections::BTreeSet;

/// Single-transmitter point-to-point link with the given stacked channel and
/// noise power, under a unit total-power constraint.
pub fn point_to_point(antennas: Vec<usize>, h: &[C64], noise: f64) -> Scenario {
    let dims = Dimensions::new(antennas, 1, 1).unwrap();
    assert_eq!(h.len(), dims.total_antennas());
    let clusters = ClusterConfig::ideal_network_mimo(&dims);
    let chans = ChannelSet::new(
        &dims,
        vec![vec![DVector::from_column_slice(h)]],
        vec![vec![noise]],
    )
    .unwrap();
    let pcs = PowerConstraintSet::total_power(&dims, 1.0).unwrap();
    Scenario::new(dims, clusters, chans, pcs).unwrap()
}

/// Point-to-point system with two transmit antennas, channel `[1, 0]`, and
/// unit per-antenna power constraints. The rank-one matrix `diag(1, 0)` and
/// the rank-two matrix `diag(1, 1)` both attain the optimum here.
pub fn rank_degenerate_example() -> Scenario {
    let dims = Dimensions::new(vec![2], 1, 1).unwrap();
    let clusters = ClusterConfig::ideal_network_mimo(&dims);
    let chans = ChannelSet::new(
        &dims,
        vec![vec![DVector::from_column_slice(&[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ])]],
        vec![vec![1.0]],
    )
    .unwrap();
    let pcs = PowerConstraintSet::per_antenna(&dims, vec![1.0, 1.0]).unwrap();
    Scenario::new(dims, clusters, chans, pcs).unwrap()
}

/// Two-user single-antenna interference channel with channels
/// `h_1 = [1, sqrt(1/10)]` and `h_2 = [sqrt(1/2), 1]`, unit noise, and
/// per-transmitter power limits of 20. The max-min rate optimum serves both
/// terminals with powers (10, 20) and SINR 10/3 each.
pub fn two_user_ic_example() -> Scenario {
    let dims = Dimensions::new(vec![1, 1], 2, 1).unwrap();
    let clusters = ClusterConfig::interference_channel(&dims).unwrap();
    let h1 = DVector::from_column_slice(&[C64::new(1.0, 0.0), C64::new((0.1f64).sqrt(), 0.0)]);
    let h2 = DVector::from_column_slice(&[C64::new((0.5f64).sqrt(), 0.0), C64::new(1.0, 0.0)]);
    let chans = ChannelSet::new(&dims, vec![vec![h1], vec![h2]], vec![vec![1.0], vec![1.0]]).unwrap();
    let pcs = PowerConstraintSet::per_transmitter(&dims, vec![20.0, 20.0]).unwrap();
    Scenario::new(dims, clusters, chans, pcs).unwrap()
}

/// Two transmitters (two and one antennas) where terminal 1 is jointly served
/// and its per-link interference amplitudes at terminal 0 are `+a` and `-a`:
/// coherent interference cancels while incoherent reception sums both paths.
pub fn joint_cancellation_pair(a: f64) -> Scenario {
    let dims = Dimensions::new(vec![2, 1], 2, 1).unwrap();
    let clusters = ClusterConfig::new(
        vec![BTreeSet::from([0, 1]), BTreeSet::from([1])],
        vec![BTreeSet::from([0, 1]), BTreeSet::from([0, 1])],
    );
    let h0 = DVector::from_column_slice(&[
        C64::new(1.0, 0.0),
        C64::new(a, 0.0),
        C64::new(-a, 0.0),
    ]);
    let h1 = DVector::from_column_slice(&[
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
    ]);
    let chans = ChannelSet::new(&dims, vec![vec![h0], vec![h1]], vec![vec![1.0], vec![1.0]]).unwrap();
    let pcs = PowerConstraintSet::per_transmitter(&dims, vec![10.0, 10.0]).unwrap();
    Scenario::new(dims, clusters, chans, pcs).unwrap()
}
