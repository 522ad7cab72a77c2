use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain misses every grid node")]
    EmptyDomain,

    #[error("direction {0:?} is not a unit vector")]
    NotUnitVector(Vec<f64>),

    #[error("diffusion matrix at node {node} is not symmetric positive definite")]
    NotSpd { node: usize },

    #[error("vector length {got} does not match operator size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("every node is pinned; the Dirichlet problem has no unknowns")]
    NoActiveNodes,

    #[error("eigen iteration did not converge after {iterations} iterations (best residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("no positive eigenvector found: {0}")]
    NotPositive(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("operator is not symmetric; the Rayleigh quotient is undefined")]
    NotSymmetric,

    #[error("principal eigenvalue {value:.6e} is nonnegative: the zero state is stable")]
    StableZeroState { value: f64 },

    #[error("no admissible epsilon0: {0}")]
    Epsilon0(String),

    #[error("state left [0, M] at node {node} (u = {value:.3e}, t = {time:.4})")]
    RangeViolation { node: usize, value: f64, time: f64 },

    #[error("monotone run decreased at node {node} by {drop:.3e} (t = {time:.4})")]
    MonotonicityViolation { node: usize, drop: f64, time: f64 },

    #[error("time integration did not reach a steady state by t = {time:.2} (increment rate {rate:.3e})")]
    SteadyStateNotReached { time: f64, rate: f64 },

    #[error("slab normal is parallel to the propagation direction")]
    ParallelSlab,

    #[error("certificate requires a constant diffusion matrix")]
    NonConstantDiffusion,

    #[error("config error: {0}")]
    Config(String),

    #[error("rung {rung}: {source}")]
    AtRung {
        rung: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("lambda = {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("experiment {name}: {source}")]
    InExperiment {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_rung(self, rung: usize) -> Self {
        Error::AtRung { rung, source: Box::new(self) }
    }

    pub fn at_lambda(self, lambda: f64) -> Self {
        Error::AtLambda { lambda, source: Box::new(self) }
    }
}
