//! Learning the weights and means of a univariate Gaussian mixture with known
//! shared variance from censored samples.
//!
//! Observations outside a window `[a, b]` are reported only as failures. The
//! estimator builds test functions `f_i` as combinations of probabilist's
//! Hermite polynomials whose censored expectations isolate the mixing moments
//! `m_i = Σ w μ^i`, averages them over the sample, and recovers the mixture
//! from the noisy moments by projecting onto the moment cone and reading the
//! atoms off as polynomial roots.
//!
//! Module map:
//! - [`hermite`]: Hermite coefficients, Gaussian window moments, `J` functionals.
//! - [`basis`]: the `V` matrix, the coefficient solve and tail diagnostics.
//! - [`model`]: mixtures, censored sampling, exact censored expectations.
//! - [`estimator`]: moment estimates from a sample batch.
//! - [`denoise`]: moment-cone projection, root finding and weights.
//! - [`experiment`]: configuration, end-to-end pipeline, matching, verification.

pub mod basis;
pub mod compensated;
pub mod denoise;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod hermite;
pub mod model;
pub mod mpfloat;
pub mod oracle;
pub mod report;
pub mod sample_file;

pub use basis::{build_v, solve_basis, tail_bias, BasisMatrix, EstimatorBasis, TailReport};
pub use denoise::{denoise, DenoiseResult, HankelPair};
pub use error::{Error, Result};
pub use estimator::{estimate_moments, standardize, Frame, MomentVector};
pub use hermite::{compute_j, hermite_coefficients, hermite_eval, window_moment, CensorWindow, HermitePoly};
pub use model::{MixtureModel, SampleBatch};
pub use mpfloat::MpFloat;
