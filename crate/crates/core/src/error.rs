use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("failed to read {path}: {message}")]
    Io { path: String, message: String },

    #[error("no data rows")]
    NoData,

    #[error("n_periods >= 2 required (got {0})")]
    TooFewPeriods(usize),

    #[error("n_assets >= 2 required (got {0})")]
    TooFewAssets(usize),

    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell at row {row}, column {column}: {value:?}")]
    NonNumericCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("covariance matrix is not symmetric")]
    NotSymmetric,

    #[error("singular covariance; need n > k and non-degenerate returns")]
    SingularCovariance,

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("degenerate frontier: s = {s:e} is not above 1e-12")]
    DegenerateFrontier { s: f64 },

    #[error("Sharpe portfolio undefined: 1'inv(Sigma)mu = 0")]
    SharpeUndefined,

    #[error("weights do not sum to one (sum = {0})")]
    WeightSum(f64),

    #[error("weights contain a non-finite entry")]
    NonFiniteWeight,

    #[error("gross-return mean must be positive")]
    NonPositiveMean,

    #[error("variance must be positive")]
    NonPositiveVariance,

    #[error("log-normal moment overflow: exponent {0} exceeds 700")]
    MomentOverflow(f64),

    #[error("R_GMV = 0: gamma_min undefined")]
    ZeroGmvReturn,

    #[error("no solution exists below gamma_min (gamma = {gamma}, gamma_min = {gamma_min})")]
    BelowGammaMin { gamma: f64, gamma_min: f64 },

    #[error("optimal mean non-positive; log-utility objective undefined")]
    NonPositiveOptimalMean,

    #[error("internal inconsistency: second moment Y = {0} is not positive")]
    NonPositiveSecondMoment(f64),

    #[error("log-utility solution does not exist for this market (gamma_min = {0} > 1)")]
    LogSolutionMissing(f64),

    #[error("outside objective domain: w'mu <= 0")]
    OutsideDomain,

    #[error("objective domain empty along search")]
    EmptyDomain,

    #[error("every search start diverged to the leverage cap")]
    NoInteriorMaximum,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample size {0} outside [3, 5000]")]
    SampleSize(usize),

    #[error("zero sample variance")]
    ZeroVariance,

    #[error("empty input")]
    Empty,

    #[error("quantile level {0} outside [0, 1]")]
    QuantileLevel(f64),
}

impl Error {
    /// Stable machine-readable code, used in study reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::NoData => "no_data",
            Error::TooFewPeriods(_) => "too_few_periods",
            Error::TooFewAssets(_) => "too_few_assets",
            Error::RaggedRow { .. } => "ragged_row",
            Error::NonNumericCell { .. } => "non_numeric_cell",
            Error::NonFinite { .. } => "non_finite",
            Error::Dimension(_) => "dimension",
            Error::NotSymmetric => "not_symmetric",
            Error::SingularCovariance => "singular_covariance",
            Error::InvalidSubset(_) => "invalid_subset",
            Error::DegenerateFrontier { .. } => "degenerate_frontier",
            Error::SharpeUndefined => "sharpe_undefined",
            Error::WeightSum(_) => "weight_sum",
            Error::NonFiniteWeight => "non_finite_weight",
            Error::NonPositiveMean => "non_positive_mean",
            Error::NonPositiveVariance => "non_positive_variance",
            Error::MomentOverflow(_) => "moment_overflow",
            Error::ZeroGmvReturn => "zero_gmv_return",
            Error::BelowGammaMin { .. } => "below_gamma_min",
            Error::NonPositiveOptimalMean => "non_positive_optimal_mean",
            Error::NonPositiveSecondMoment(_) => "non_positive_second_moment",
            Error::LogSolutionMissing(_) => "log_solution_missing",
            Error::OutsideDomain => "outside_domain",
            Error::EmptyDomain => "empty_domain",
            Error::NoInteriorMaximum => "no_interior_maximum",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SampleSize(_) => "sample_size",
            Error::ZeroVariance => "zero_variance",
            Error::Empty => "empty",
            Error::QuantileLevel(_) => "quantile_level",
        }
    }
}
