use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands use different primes ({0} and {1})")]
    PrimeMismatch(u64, u64),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("element is not invertible: {0}")]
    NotInvertible(String),
    #[error("cyclotomic level mismatch ({0} vs {1})")]
    LevelMismatch(u32, u32),
    #[error("element does not descend to the base field")]
    NonDescendable,
    #[error("zero input")]
    ZeroInput,
    #[error("not a unit on the box")]
    NotUnit,
    #[error("window overflow: {0}")]
    WindowOverflow(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cardinality mismatch ({0} vs {1})")]
    CardinalityMismatch(usize, usize),
    #[error("denominator divisible by p")]
    DenominatorDivisibleByP,
    #[error("blocks do not partition the multiset")]
    NotAPartition,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("not bidistinguished: {0}")]
    NotBidistinguished(String),
    #[error("no admissible shear exponent for radius {0}")]
    NoShearExponent(String),
    #[error("iteration budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("module is not certified")]
    Uncertified,
    #[error("action table is truncated; certification refused")]
    TruncatedAction,
    #[error("invalid standard form: {0}")]
    InvalidStandardForm(String),
    #[error("no digit keeps the determinant bound at level {0}")]
    DescentFailed(u32),
    #[error("decay not observed: {0}")]
    DecayNotObserved(String),
    #[error("pivot failure: {0}")]
    PivotFailure(String),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
}

impl Error {
    /// Stable machine-readable code for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::PrimeMismatch(..) => "prime_mismatch",
            Error::PrecisionExhausted(_) => "precision_exhausted",
            Error::InsufficientPrecision(_) => "precision_shortfall",
            Error::NotInvertible(_) => "not_invertible",
            Error::LevelMismatch(..) => "level_mismatch",
            Error::NonDescendable => "non_descendable",
            Error::ZeroInput => "zero_input",
            Error::NotUnit => "not_unit",
            Error::WindowOverflow(_) => "window_overflow",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::CardinalityMismatch(..) => "cardinality_mismatch",
            Error::DenominatorDivisibleByP => "denominator_divisible_by_p",
            Error::NotAPartition => "not_a_partition",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::Inconclusive(_) => "inconclusive",
            Error::NotBidistinguished(_) => "not_bidistinguished",
            Error::NoShearExponent(_) => "no_shear_exponent",
            Error::BudgetExhausted(_) => "budget_exhausted",
            Error::Uncertified => "uncertified",
            Error::TruncatedAction => "truncated_action",
            Error::InvalidStandardForm(_) => "invalid_standard_form",
            Error::DescentFailed(_) => "descent_failed",
            Error::DecayNotObserved(_) => "decay_not_observed",
            Error::PivotFailure(_) => "pivot_failure",
            Error::CertificationFailed(_) => "certification_failed",
            Error::Malformed(_) => "malformed_json",
            Error::Schema(_) => "schema_mismatch",
        }
    }
}
