//! Numerics for convolutions of scalar measures and for moment operators of
//! finite-dimensional semispectral measures (POVMs).
//!
//! The crate covers, at desk scale:
//!
//! * complex scalar measures on the line (atoms plus a gridded density),
//!   their convolution, and windowed moment diagnostics ([`measure`]);
//! * a paired-weight construction of two discrete measures whose convolution
//!   vanishes on even integers while every even diagonal slice of the product
//!   carries unit absolute mass ([`example1`]);
//! * dense Hermitian operator routines: spectral decompositions with
//!   degeneracy merging, operator functions, traces ([`operator`]);
//! * discretized POVMs, smearing of spectral measures by probability
//!   measures, and moment operators computed both by direct integration and
//!   by a binomial closed form ([`semispectral`]);
//! * covariant phase-space observables on a truncated Fock space, their
//!   Cartesian marginals, and the check that each marginal is a smeared
//!   quadrature spectral measure ([`phasespace`]);
//! * seeded sampling of outcome distributions with empirical-vs-predicted
//!   moment comparisons ([`sampling`]);
//! * JSON/CSV schemas for all of the above ([`io`]).

pub mod error;
pub mod example1;
pub mod io;
pub mod measure;
pub mod operator;
pub mod phasespace;
pub mod random;
pub mod sampling;
pub mod semispectral;
mod util;

pub use error::{Error, Result};
pub use measure::{GriddedDensity, MomentOptions, MomentReport, ProbabilityMeasure, ScalarMeasure, Verdict};
pub use operator::{DensityOperator, HermitianOperator, Operator, SpectralDecomposition};
pub use semispectral::{DiscretizedPOVM, SpectralMeasureFD};
