use thiserror::Error;

#[derive(Debug, Error)]
pub enum RingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature order {order} is below the minimum {min}")]
    QuadratureOrder { order: usize, min: usize },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("state is not an equilibrium (residual {residual:e})")]
    NotEquilibrium { residual: f64 },

    #[error("rho = 0: polar phase dynamics are undefined, use the Cartesian system")]
    DegeneratePolar,

    #[error("Chebyshev degree cap {cap} reached with sup error {error:e}")]
    DegreeCap { cap: usize, error: f64 },

    #[error("monomial {0:?} does not factor equivariantly")]
    Factorization([u32; 5]),

    #[error("orbit point lies on the orbit-space boundary, gauge reconstruction undefined")]
    BoundaryOrbit,

    #[error("pi1 = 0: there is no tuned curve to reconstruct")]
    Untuned,

    #[error("model is not bistable: {0}")]
    NotBistable(String),

    #[error("branch switching failed at lambda = {0}")]
    BranchSwitch(f64),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RingError>;
