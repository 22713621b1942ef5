use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("discretization lost {missing:.3e} of probability mass (tolerance 1e-6)")]
    Discretization { missing: f64 },

    #[error("sequence step mismatch: {left} kW vs {right} kW")]
    StepMismatch { left: f64, right: f64 },

    #[error("charging time {hours:.4} h exceeds the maximum of {max_hours:.4} h")]
    ChargingTooLong { hours: f64, max_hours: f64 },

    #[error("infeasible EV sessions: {}", format_ids(.0))]
    InfeasibleSessions(Vec<usize>),

    #[error("interior-point solver stopped after {iterations} iterations (primal {primal_residual:.3e}, dual {dual_residual:.3e}, gap {gap:.3e})")]
    MaxIterations {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no feasible upper-level schedule found: {0}")]
    UpperInfeasible(String),

    #[error("pricing iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_ids(ids: &[usize]) -> String {
    ids.iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
