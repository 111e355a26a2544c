use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0} lies outside [0,1]")]
    OutOfDomain(String),
    #[error("no branch adjacent to {point} on the {side} side")]
    NoAdjacentBranch { point: String, side: String },
    #[error("comparison undecidable at current precision: {0}")]
    Undecidable(String),
    #[error("root isolation failed: {0}")]
    RootIsolationFailure(String),
    #[error("refinement needs more than {budget} cells")]
    DepthTooLarge { budget: usize },
    #[error("map is not uniformly expanding: |(T^{n})'| < 1 persists on cell {cell}")]
    NotExpanding { n: usize, cell: String },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("orbit of {0} neither closed nor certified distinct at this precision")]
    UndecidableAtDepth(String),
    #[error("property fails at truncation depth {depth}; increase the depth")]
    TruncationTooShallow { depth: usize },
    #[error("orbit point {0} lies on a partition boundary")]
    PointOnBoundary(String),
    #[error("weight vanishes along the orbit at index {0}")]
    ZeroWeight(usize),
    #[error("jump of size {value} at untagged point {point}")]
    UntaggedJump { point: String, value: String },
    #[error("degree {degree} exceeds the budget {budget}")]
    DegreeOverflow { degree: usize, budget: usize },
    #[error("approximation error {0} exceeds tolerance")]
    ApproximationError(String),
    #[error("k = {k} is below k0 = {k0}")]
    PreconditionK0 { k: usize, k0: usize },
    #[error("weight has a root on a branch closure")]
    WeightVanishes,
    #[error("no Gamma point among the preimages of the pivot")]
    NoGammaPreimage,
    #[error("normalizing jump vanished after {0} retries")]
    NormalizationZero(usize),
    #[error("|lambda| must be below the Lambda^inf estimate {0}")]
    LambdaTooLarge(String),
    #[error("operation needs exact rational data")]
    InexactData,
    #[error("itinerary is eventually periodic")]
    PeriodicItinerary,
    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),
    #[error("Lambda_tilde {tilde} must exceed Lambda^sup {sup}")]
    LambdaTildeTooSmall { tilde: String, sup: String },
    #[error("degenerate bin {0}")]
    DegenerateBin(usize),
    #[error("eigen solver failed: {0}")]
    SolverFailure(String),
    #[error("operation requires {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
