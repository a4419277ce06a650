use thiserror::Error;

/// Every failure mode of the library. `kind()` gives a stable machine name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-length operand")]
    ZeroLength,
    #[error("empty range: from={from}, len={len}")]
    EmptyRange { from: usize, len: usize },
    #[error("odd length {0}")]
    OddLength(usize),
    #[error("non-monotone order function at n={0}")]
    NonMonotone(usize),
    #[error("range exceeded: {0}")]
    RangeExceeded(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("bound violation at n={n}: {detail}")]
    BoundViolation { n: usize, detail: String },
    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),
    #[error("horizon too short: threshold not reached within N={0}")]
    HorizonTooShort(usize),
    #[error("profile inequality fails at n={0}")]
    ProfileInequality(usize),
    #[error("block length {r} exceeds brute-force cap {cap}")]
    BlockLengthTooLarge { r: usize, cap: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("uncertified code: {0}")]
    UncertifiedCode(String),
    #[error("index out of range at n={n}: {index} >= {size}")]
    IndexOutOfRange {
        n: usize,
        index: String,
        size: usize,
    },
    #[error("incompatible configuration: {0}")]
    ConfigIncompatible(String),
    #[error("empty family")]
    EmptyFamily,
    #[error("universe too large: {size} > cap {cap}")]
    UniverseTooLarge { size: String, cap: usize },
    #[error("node absent: {0:?}")]
    NodeAbsent(Vec<u32>),
    #[error("tree is not full-branching: {0}")]
    NotFullBranching(String),
    #[error("not a partition: {0}")]
    NotAPartition(String),
    #[error("tree not fat at leaf {leaf:?}, t={t}")]
    NotFat { leaf: Vec<u32>, t: usize },
    #[error("fuel exhausted after {0} nodes")]
    FuelExhausted(usize),
    #[error("depth exhausted: need depth {required}, have {available}")]
    DepthExhausted { required: String, available: usize },
    #[error("induction hypothesis violated: 2^{leaves} >= G({n})")]
    InductionViolated { leaves: usize, n: u64 },
    #[error("no full-branching node")]
    NoFullBranchingNode,
    #[error("functional not monotone: {0}")]
    FunctionalNotMonotone(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::ZeroLength => "ZeroLength",
            Error::EmptyRange { .. } => "EmptyRange",
            Error::OddLength(_) => "OddLength",
            Error::NonMonotone(_) => "NonMonotone",
            Error::RangeExceeded(_) => "RangeExceeded",
            Error::TypeMismatch(_) => "TypeMismatch",
            Error::BoundViolation { .. } => "BoundViolation",
            Error::InvalidHorizon(_) => "InvalidHorizon",
            Error::HorizonTooShort(_) => "HorizonTooShort",
            Error::ProfileInequality(_) => "ProfileInequality",
            Error::BlockLengthTooLarge { .. } => "BlockLengthTooLarge",
            Error::Infeasible(_) => "Infeasible",
            Error::UncertifiedCode(_) => "UncertifiedCode",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::ConfigIncompatible(_) => "ConfigIncompatible",
            Error::EmptyFamily => "EmptyFamily",
            Error::UniverseTooLarge { .. } => "UniverseTooLarge",
            Error::NodeAbsent(_) => "NodeAbsent",
            Error::NotFullBranching(_) => "NotFullBranching",
            Error::NotAPartition(_) => "NotAPartition",
            Error::NotFat { .. } => "NotFat",
            Error::FuelExhausted(_) => "FuelExhausted",
            Error::DepthExhausted { .. } => "DepthExhausted",
            Error::InductionViolated { .. } => "InductionViolated",
            Error::NoFullBranchingNode => "NoFullBranchingNode",
            Error::FunctionalNotMonotone(_) => "FunctionalNotMonotone",
            Error::MissingArtifact(_) => "MissingArtifact",
            Error::Invalid(_) => "Invalid",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
