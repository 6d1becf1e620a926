//! Moment estimates `m̂_i = (1/n) Σ_s f_i(x_s)` from a censored batch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::EstimatorBasis;
use crate::compensated::{compensated_horner_dd, shard_sum, DoubleDouble, SHARD_SIZE};
use crate::error::{Error, Result};
use crate::hermite::CensorWindow;
use crate::model::{censored_expectation_mp, MixtureModel, SampleBatch};

/// Tolerance when matching a batch window against a basis window.
pub const WINDOW_MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Raw,
    Standardized,
}

/// Moments `m_1 … m_order` of a mixing distribution (`m_0 = 1` is implicit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    values: Vec<f64>,
    frame: Frame,
}

impl MomentVector {
    pub fn new(values: Vec<f64>, frame: Frame) -> Self {
        Self { values, frame }
    }

    pub fn standardized(values: Vec<f64>) -> Self {
        Self::new(values, Frame::Standardized)
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `m_j`, with `m_0 = 1`.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.values[j - 1]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn truncated(&self, order: usize) -> MomentVector {
        Self::new(self.values[..order.min(self.values.len())].to_vec(), self.frame)
    }

    pub fn distance(&self, other: &MomentVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Divides values and window by `σ`; the total count is unchanged.
pub fn standardize(batch: &SampleBatch, sigma: f64) -> Result<(SampleBatch, CensorWindow)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let window = batch.window.scaled(sigma);
    let values = if sigma == 1.0 { batch.values.clone() } else { batch.values.iter().map(|x| x / sigma).collect() };
    let std = SampleBatch { n_total: batch.n_total, values, seed: batch.seed, window, sigma: batch.sigma / sigma };
    Ok((std, window))
}

fn check_compatible(batch: &SampleBatch, basis: &EstimatorBasis) -> Result<()> {
    if batch.n_total == 0 {
        return Err(Error::EmptyInput("batch has no draws".into()));
    }
    if batch.sigma != 1.0 {
        return Err(Error::InvalidArgument(format!("batch is in a sigma = {} frame; standardize first", batch.sigma)));
    }
    if !batch.window.approx_eq(basis.window(), WINDOW_MATCH_TOL) {
        return Err(Error::InvalidArgument(format!(
            "batch window {} does not match basis window {}",
            batch.window,
            basis.window()
        )));
    }
    Ok(())
}

/// Sum of `f_i` over the observed values. Shards of [`SHARD_SIZE`] are summed
/// in double-double and reduced in shard order, so the result does not
/// depend on the thread count.
fn f_sum(values: &[f64], basis: &EstimatorBasis, i: usize) -> DoubleDouble {
    let coeffs = basis.f_coeffs_dd(i);
    let partials: Vec<DoubleDouble> = values
        .par_chunks(SHARD_SIZE)
        .map(|chunk| shard_sum(chunk.iter().map(|&x| compensated_horner_dd(coeffs, x))))
        .collect();
    partials.into_iter().fold(DoubleDouble::ZERO, DoubleDouble::add)
}

/// `m̂_i` for a single index, `0 <= i < 2k`.
pub fn estimate_moment(batch: &SampleBatch, basis: &EstimatorBasis, i: usize) -> Result<f64> {
    check_compatible(batch, basis)?;
    if i >= basis.len() {
        return Err(Error::InvalidArgument(format!("moment index {i} is beyond the basis ({})", basis.len())));
    }
    let s = f_sum(&batch.values, basis, i);
    let n = batch.n_total as f64;
    // (hi + lo) / n with the division's rounding error folded back in
    let q = s.hi / n;
    let r = (-q).mul_add(n, s.hi) + s.lo;
    Ok(q + r / n)
}

/// `m̂_1 … m̂_{2k-1}`; failures count in `n_total` and contribute zero.
pub fn estimate_moments(batch: &SampleBatch, basis: &EstimatorBasis) -> Result<MomentVector> {
    check_compatible(batch, basis)?;
    let values = (1..2 * basis.k()).map(|i| estimate_moment(batch, basis, i)).collect::<Result<Vec<_>>>()?;
    Ok(MomentVector::standardized(values))
}

/// `α · E f_i(X)` computed exactly for a known model: what `m̂_i` converges
/// to with infinite data. Differs from `m_i` only by the tail bias.
pub fn oracle_moment(model: &MixtureModel, basis: &EstimatorBasis, i: usize) -> Result<f64> {
    let std = model.standardized();
    let prec = basis.precision_bits().max(64) + 32;
    Ok(censored_expectation_mp(&std, basis.window(), basis.f_coeffs_mp(i), prec)?.to_f64())
}

/// Oracle counterpart of [`estimate_moments`].
pub fn oracle_moments(model: &MixtureModel, basis: &EstimatorBasis) -> Result<MomentVector> {
    let values = (1..2 * basis.k()).map(|i| oracle_moment(model, basis, i)).collect::<Result<Vec<_>>>()?;
    Ok(MomentVector::standardized(values))
}
