use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },
    #[error("subsystem index {index} out of range for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("empty input")]
    Empty,
    #[error("not a density operator: {0}")]
    NotDensity(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloningError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("input qubit is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error("symmetric projection has zero success probability")]
    ZeroProjection,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("total photon number {found} exceeds cutoff {cutoff}")]
    CutoffExceeded { cutoff: u32, found: u32 },
    #[error("post-selected branch has zero probability")]
    EmptyBranch,
    #[error("state carries no photons")]
    NoPhotons,
    #[error("state occupies more than one spatial mode")]
    NotSingleMode,
    #[error("mode {0} is not part of this state")]
    UnknownMode(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("qubit/Fock cross-check failed: Fock {fock:?} vs qubit {qubit:?}")]
    CrosscheckMismatch { fock: Vec<f64>, qubit: Vec<f64> },
    #[error(transparent)]
    Cloning(#[from] CloningError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid scan configuration: {0}")]
    Config(String),
    #[error("fit needs at least {needed} distinct positions, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("fit did not converge after {iterations} iterations (chi² = {chi2}, last relative change {last_change})")]
    NonConvergence { iterations: usize, chi2: f64, last_change: f64 },
    #[error("fidelity estimator denominator is zero")]
    ZeroDenominator,
    #[error("estimator inputs must be non-negative")]
    NegativeInput,
    #[error("{failed} of {total} bootstrap refits failed")]
    BootstrapFailures { failed: usize, total: usize },
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("Fock-derived ratios disagree with the ideal values: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Fock(#[from] FockError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown state `{0}` (expected H, V, plus, minus or `theta=..,phi=..`)")]
    UnknownState(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
}
