use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("site {site} has an empty alphabet")]
    EmptyAlphabet { site: usize },

    #[error("product space has no sites")]
    NoSites,

    #[error("state space size {size} exceeds the cap of {cap} states")]
    CapExceeded { size: u128, cap: usize },

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid site subset: {0}")]
    InvalidSubset(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measures live on different product spaces")]
    SpaceMismatch,

    #[error("KL divergence undefined: p({index}) = {p} > 0 where q vanishes")]
    DivergenceUndefined { index: usize, p: f64 },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid similarity matrix for frame {frame}: {reason}")]
    InvalidSimilarity { frame: String, reason: String },

    #[error("legend does not match frame system: {0}")]
    LegendMismatch(String),

    #[error("frame system is not T0: sites {0} and {1} are never separated")]
    NotT0(usize, usize),

    #[error("blocks do not partition the site set: {0}")]
    NotAPartition(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("step {step} too large: step * max outflow rate = {product} exceeds 0.5")]
    StepTooLarge { step: f64, product: f64 },

    #[error(
        "positivity violated at t = {time}: entry {index} = {value} is below the clamp tolerance"
    )]
    PositivityViolated { time: f64, index: usize, value: f64 },

    #[error("particle ensemble must hold at least one particle")]
    EmptyEnsemble,
}
