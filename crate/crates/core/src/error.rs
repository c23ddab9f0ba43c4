use thiserror::Error;

/// Errors produced by the model, parametrization, and solver layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid cluster configuration: {0}")]
    InvalidCluster(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("terminal {terminal} on subcarrier {subcarrier} is unservable (masked channel in null space)")]
    UnservableTerminal { terminal: usize, subcarrier: usize },

    #[error("infeasible SINR target: recovered power for terminal {terminal} on subcarrier {subcarrier} is negative ({power:.3e})")]
    InfeasibleTarget {
        terminal: usize,
        subcarrier: usize,
        power: f64,
    },

    #[error("singular virtual-uplink denominator for terminal {terminal} on subcarrier {subcarrier}")]
    SingularDenominator { terminal: usize, subcarrier: usize },

    #[error("problem size exceeds oracle cap: {0}")]
    OracleCapExceeded(String),

    #[error("empty allocation: {0}")]
    EmptyAllocation(String),
}
