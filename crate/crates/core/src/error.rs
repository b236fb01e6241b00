//! Error type shared by every module of the crate.

use crate::measure::MomentReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A measure, density grid, or weight failed a structural check.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Densities can only be combined when they live on compatible grids.
    /// Resampling is never performed silently.
    #[error("incompatible density grids: {0}")]
    GridIncompatible(String),

    /// A convolution result would exceed the configured size caps.
    #[error("convolution result too large: {what} would need {needed}, cap is {cap}")]
    ResultTooLarge {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("invalid window radii: {0}")]
    InvalidRadii(String),

    /// A windowed moment needed by a binomial-formula evaluation did not
    /// reach a `converged` verdict. The report carries the evidence.
    #[error("moment of order {order} did not converge (verdict: {verdict})", verdict = .report.verdict)]
    NonConvergedMoment { order: u32, report: MomentReport },

    #[error("integrand returned a non-finite value at x = {at}")]
    NonFiniteFunctionValue { at: f64 },

    /// The paired-weight construction needs strictly positive sequence terms.
    #[error("sequence term a[{index}] = {value} is not strictly positive")]
    NonPositiveSequenceTerm { index: usize, value: f64 },

    /// Diagonal slices of the paired construction are indexed by even integers.
    #[error("slice index {0} is odd; only even slices carry the reference weight")]
    OddSliceIndex(i64),

    #[error("slice index {0} holds no product atoms at this cutoff")]
    EmptySlice(i64),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("operator dimension {0} exceeds the cap of {max}", max = crate::operator::MAX_OPERATOR_DIM)]
    DimensionCap(usize),

    #[error("matrix is not Hermitian: max |M - M^*| entry is {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("not a density operator: {0}")]
    InvalidDensity(String),

    #[error("eigensolver did not converge for dimension {dim}")]
    EigensolverFailed { dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid bin edges: {0}")]
    InvalidEdges(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("Fock truncation needs dimension >= 2, got {0}")]
    FockDimensionTooSmall(usize),

    #[error("invalid phase-space grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported quadrature order {0}; supported orders are 1..=5")]
    UnsupportedQuadratureOrder(usize),

    #[error("sample is empty")]
    EmptySample,

    /// Outcome probabilities computed from a POVM and a state failed the
    /// sanity checks (a clearly negative probability or a total far from 1).
    #[error("invalid outcome probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}
