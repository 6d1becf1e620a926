//! Mixture models, censored sampling and exact censored expectations.

use num_bigint::BigInt;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::compensated::SHARD_SIZE;
use crate::error::{Error, Result};
use crate::estimator::{Frame, MomentVector};
use crate::hermite::{endpoint, gaussian_mass, moment_table, CensorWindow, HermitePoly, MAX_GUARD_BITS};
use crate::mpfloat::{MpFloat, DOUBLE_BITS};

/// Tolerance on `Σ w = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Surviving mass below this makes estimation hopeless.
pub const MIN_ALPHA: f64 = 1e-12;

/// `Σ w_i N(μ_i, σ²)` with `|μ_i| < M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureModel {
    weights: Vec<f64>,
    means: Vec<f64>,
    sigma: f64,
    mean_bound: f64,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sigma: f64, mean_bound: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidModel("at least one component is required".into()));
        }
        if weights.len() != means.len() {
            return Err(Error::InvalidModel(format!(
                "{} weights but {} means",
                weights.len(),
                means.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma must be positive, got {sigma}")));
        }
        if !(mean_bound > 0.0 && mean_bound.is_finite()) {
            return Err(Error::InvalidModel(format!("mean bound must be positive, got {mean_bound}")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidModel(format!("weights must be positive, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        if let Some(mu) = means.iter().find(|mu| !(mu.abs() < mean_bound)) {
            return Err(Error::InvalidModel(format!("mean {mu} is outside (-{mean_bound}, {mean_bound})")));
        }
        Ok(Self { weights, means, sigma, mean_bound })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean_bound(&self) -> f64 {
        self.mean_bound
    }

    pub fn w_min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Smallest gap between two means; infinite for a single component.
    pub fn delta_min(&self) -> f64 {
        let mut sorted = self.means.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
    }

    /// The same mixture in units of `σ`.
    pub fn standardized(&self) -> MixtureModel {
        MixtureModel {
            weights: self.weights.clone(),
            means: self.means.iter().map(|m| m / self.sigma).collect(),
            sigma: 1.0,
            mean_bound: self.mean_bound / self.sigma,
        }
    }
}

/// Draws from a censored mixture: observed values plus the total draw count.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub n_total: u64,
    pub values: Vec<f64>,
    pub seed: u64,
    pub window: CensorWindow,
    pub sigma: f64,
}

impl SampleBatch {
    pub fn n_observed(&self) -> usize {
        self.values.len()
    }

    pub fn n_failed(&self) -> u64 {
        self.n_total - self.values.len() as u64
    }

    /// `n' / n`.
    pub fn alpha_hat(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.values.len() as f64 / self.n_total as f64
        }
    }

    /// Concatenates two batches on the same window and scale.
    pub fn concat(&self, other: &SampleBatch) -> Result<SampleBatch> {
        if !self.window.approx_eq(&other.window, 0.0) || self.sigma != other.sigma {
            return Err(Error::InvalidArgument("batches differ in window or sigma".into()));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(SampleBatch { n_total: self.n_total + other.n_total, values, seed: self.seed, window: self.window, sigma: self.sigma })
    }
}

/// `m_j = Σ w_i (μ_i/σ)^j` for `j = 1..=j_max`.
pub fn mixing_moments(m: &MixtureModel, j_max: usize) -> MomentVector {
    let std = m.standardized();
    let values = (1..=j_max)
        .map(|j| std.weights.iter().zip(&std.means).map(|(w, mu)| w * mu.powi(j as i32)).sum())
        .collect();
    MomentVector::new(values, Frame::Standardized)
}

/// Probability that a draw lands inside `w`.
pub fn alpha_mass(m: &MixtureModel, w: &CensorWindow) -> Result<f64> {
    let prec = 96;
    let wp = prec + 64;
    let sigma = MpFloat::from_f64(m.sigma, wp);
    let inv_sqrt_2pi = MpFloat::one(wp) / MpFloat::pi(wp).mul_pow2(1).sqrt();
    let mut total = MpFloat::zero(wp);
    for (wt, mu) in m.weights.iter().zip(&m.means) {
        let mu = MpFloat::from_f64(*mu, wp);
        let shift = |x: f64| endpoint(x, wp).map(|v| (&v - &mu) / &sigma);
        let mass = gaussian_mass(&shift(w.lower()), &shift(w.upper()), prec);
        total = &total + &(&MpFloat::from_f64(*wt, wp) * &(&mass * &inv_sqrt_2pi));
    }
    let alpha = total.to_f64().min(1.0);
    if alpha < MIN_ALPHA {
        return Err(Error::DegenerateWindow { window: *w, alpha });
    }
    Ok(alpha)
}

fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn unit_half_open(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws `n` values from `m` and censors them to `w`.
///
/// Draw `s` reads two 64-bit words from the ChaCha8 stream at word offset
/// `4s`: the first picks the component, the second feeds the inverse normal
/// CDF. Shards are generated in parallel and concatenated in draw order.
pub fn sample(m: &MixtureModel, w: &CensorWindow, n: u64, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::standard();
    let mut cumulative: Vec<f64> = m
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().unwrap() = f64::INFINITY;
    let shards = n.div_ceil(SHARD_SIZE as u64);
    let pieces: Vec<Vec<f64>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let start = shard * SHARD_SIZE as u64;
            let end = (start + SHARD_SIZE as u64).min(n);
            let mut rng = base.clone();
            rng.set_word_pos(4 * start as u128);
            let mut out = Vec::with_capacity((end - start) as usize);
            for _ in start..end {
                let u = unit_half_open(rng.next_u64());
                let z = normal.inverse_cdf(unit_open(rng.next_u64()));
                let comp = cumulative.iter().position(|c| u < *c).unwrap();
                let x = m.means[comp] + m.sigma * z;
                if w.contains(x) {
                    out.push(x);
                }
            }
            out
        })
        .collect();
    Ok(SampleBatch { n_total: n, values: pieces.concat(), seed, window: *w, sigma: m.sigma })
}

fn binomial_row(p: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::from(1)];
    for i in 0..p {
        let next = &row[i] * BigInt::from(p - i) / BigInt::from(i + 1);
        row.push(next);
    }
    row
}

/// `Σ_i w_i ∫_S p(x) φ(x - μ_i) dx` for a polynomial given by (possibly
/// non-integer) monomial coefficients, in the σ = 1 frame, to about `target`
/// bits. Each component is shifted so the integral becomes a contraction
/// of `p(y + μ)` against Gaussian window moments on `[a - μ, b - μ]`.
pub fn censored_expectation_mp(m: &MixtureModel, w: &CensorWindow, coeffs: &[MpFloat], target: u32) -> Result<MpFloat> {
    if m.sigma != 1.0 {
        return Err(Error::InvalidArgument("censored expectations are defined in the sigma = 1 frame".into()));
    }
    let deg = coeffs.len().saturating_sub(1);
    let binomials: Vec<Vec<BigInt>> = (0..=deg).map(binomial_row).collect();
    let mut guard = 64u32;
    loop {
        let wp = target + guard;
        let inv_sqrt_2pi = MpFloat::one(wp) / MpFloat::pi(wp).mul_pow2(1).sqrt();
        let mut total = MpFloat::zero(wp);
        let mut worst_loss = 0i64;
        for (wt, mu) in m.weights.iter().zip(&m.means) {
            let mu_mp = MpFloat::from_f64(*mu, wp);
            // endpoints are doubles, so 2200 bits make the shift exact
            let shift = |x: f64| endpoint(x, 2200).map(|v| (&v - &mu_mp.with_prec(2200)).with_prec(wp + 64));
            let (a, b) = (shift(w.lower()), shift(w.upper()));
            let g = moment_table(&a, &b, deg, wp);
            let mu_pows: Vec<MpFloat> = (0..=deg as u32).map(|e| mu_mp.powi(e)).collect();
            let mut sum = MpFloat::zero(wp);
            let mut abs_sum = MpFloat::zero(wp);
            for (n, gn) in g.iter().enumerate() {
                if gn.is_zero() {
                    continue;
                }
                // coefficient of y^n in p(y + μ)
                let mut q = MpFloat::zero(wp);
                for p in n..=deg {
                    if coeffs[p].is_zero() {
                        continue;
                    }
                    let t = &(&coeffs[p] * &MpFloat::from_int(&binomials[p][n], wp)) * &mu_pows[p - n];
                    abs_sum = &abs_sum + &(&t.abs() * &gn.abs());
                    q = &q + &t;
                }
                sum = &sum + &(&q * gn);
            }
            if !abs_sum.is_zero() {
                let loss = if sum.is_zero() { i64::MAX / 2 } else { abs_sum.top() - sum.top() };
                worst_loss = worst_loss.max(loss);
            }
            total = &total + &(&MpFloat::from_f64(*wt, wp) * &(&sum * &inv_sqrt_2pi));
        }
        if worst_loss + 16 < guard as i64 || guard >= MAX_GUARD_BITS {
            return Ok(total.with_prec(target));
        }
        guard = (worst_loss.min(MAX_GUARD_BITS as i64) as u32 + 64).max(2 * guard);
    }
}

/// `α · E p(X) = ∫_S p(x) Σ_i w_i φ(x - μ_i) dx` for a σ = 1 model.
pub fn exact_censored_expectation(m: &MixtureModel, w: &CensorWindow, p: &HermitePoly) -> Result<f64> {
    let prec = DOUBLE_BITS + 11;
    let coeffs: Vec<MpFloat> = p.coeffs().iter().map(|c| MpFloat::from_int(c, prec)).collect();
    Ok(censored_expectation_mp(m, w, &coeffs, prec)?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_coefficients;

    fn model(w: &[f64], mu: &[f64]) -> MixtureModel {
        MixtureModel::new(w.to_vec(), mu.to_vec(), 1.0, 3.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(MixtureModel::new(vec![0.5, 0.4], vec![0.0, 1.0], 1.0, 3.0).is_err());
        assert!(MixtureModel::new(vec![1.0], vec![3.0], 1.0, 3.0).is_err());
        assert!(MixtureModel::new(vec![1.0], vec![0.0], 0.0, 3.0).is_err());
        assert!(MixtureModel::new(vec![0.5, 0.5], vec![0.0], 1.0, 3.0).is_err());
        assert!(MixtureModel::new(vec![1.2, -0.2], vec![0.0, 1.0], 1.0, 3.0).is_err());
        let m = model(&[0.3, 0.7], &[-2.0, 1.0]);
        assert_eq!(m.w_min(), 0.3);
        assert_eq!(m.delta_min(), 3.0);
        assert_eq!(model(&[1.0], &[0.0]).delta_min(), f64::INFINITY);
    }

    #[test]
    fn mixing_moment_examples() {
        let m = mixing_moments(&model(&[0.5, 0.5], &[-1.0, 1.0]), 3);
        assert_eq!(m.values(), &[0.0, 1.0, 0.0]);
        let m = mixing_moments(&model(&[1.0], &[0.7]), 4);
        for j in 1..=4 {
            assert!((m.get(j) - 0.7f64.powi(j as i32)).abs() < 1e-15);
        }
        let m = mixing_moments(&model(&[0.3, 0.7], &[-2.0, 1.0]), 1);
        assert!((m.get(1) - 0.1).abs() < 1e-15);
        let scaled = MixtureModel::new(vec![1.0], vec![1.0], 2.0, 3.0).unwrap();
        assert_eq!(mixing_moments(&scaled, 2).values(), &[0.5, 0.25]);
    }

    #[test]
    fn alpha_examples() {
        let single = model(&[1.0], &[0.0]);
        assert_eq!(alpha_mass(&single, &CensorWindow::real_line()).unwrap(), 1.0);
        let a = alpha_mass(&single, &CensorWindow::symmetric(1.0).unwrap()).unwrap();
        assert!((a - 0.682_689_492_137_085_9).abs() < 1e-15);
        let two = model(&[0.5, 0.5], &[-1.0, 1.0]);
        let a = alpha_mass(&two, &CensorWindow::symmetric(1.0).unwrap()).unwrap();
        assert!((a - 0.477_249_868_051_820_8).abs() < 1e-15);
    }

    #[test]
    fn alpha_degenerate_window() {
        let far = MixtureModel::new(vec![1.0], vec![0.0], 1.0, 1.0).unwrap();
        let w = CensorWindow::new(40.0, 41.0).unwrap();
        assert!(matches!(alpha_mass(&far, &w), Err(Error::DegenerateWindow { .. })));
    }

    #[test]
    fn sampling_is_deterministic_and_censored() {
        let m = model(&[0.3, 0.7], &[-2.0, 1.0]);
        let w = CensorWindow::symmetric(1.5).unwrap();
        let a = sample(&m, &w, 10_000, 42).unwrap();
        let b = sample(&m, &w, 10_000, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|x| x.abs() <= 1.5));
        assert_ne!(a, sample(&m, &w, 10_000, 43).unwrap());
    }

    #[test]
    fn sampling_prefix_is_stable() {
        // the stream for draw s does not depend on n
        let m = model(&[1.0], &[0.0]);
        let w = CensorWindow::real_line();
        let short = sample(&m, &w, 5000, 9).unwrap();
        let long = sample(&m, &w, 9000, 9).unwrap();
        assert_eq!(short.values[..], long.values[..5000]);
    }

    #[test]
    fn wide_window_keeps_everything() {
        let m = model(&[1.0], &[0.0]);
        let b = sample(&m, &CensorWindow::symmetric(100.0).unwrap(), 1000, 1).unwrap();
        assert_eq!(b.values.len(), 1000);
        assert_eq!(b.n_failed(), 0);
    }

    #[test]
    fn censored_fraction_matches_alpha() {
        let m = model(&[1.0], &[0.0]);
        let w = CensorWindow::symmetric(1.0).unwrap();
        let n = 1_000_000u64;
        let b = sample(&m, &w, n, 7).unwrap();
        let p = 0.682_689_492_137_085_9;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((b.alpha_hat() - p).abs() <= 3.0 * sd);
    }

    #[test]
    fn expectation_examples() {
        let single = model(&[1.0], &[0.0]);
        let w1 = CensorWindow::symmetric(1.0).unwrap();
        let h0 = hermite_coefficients(0).unwrap();
        let e = exact_censored_expectation(&single, &w1, &h0).unwrap();
        assert!((e - 0.682_689_492_137_085_9).abs() < 1e-15);
        let h2 = hermite_coefficients(2).unwrap();
        let e = exact_censored_expectation(&single, &CensorWindow::real_line(), &h2).unwrap();
        assert!(e.abs() < 1e-15);
        let two = model(&[0.3, 0.7], &[-2.0, 1.0]);
        let e = exact_censored_expectation(&two, &w1, &h0).unwrap();
        assert!((e - alpha_mass(&two, &w1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn full_line_expectation_of_hermite_is_mean_power() {
        // E h_j(μ + Z) = μ^j
        let m = model(&[1.0], &[0.8]);
        for j in 0..8 {
            let e = exact_censored_expectation(&m, &CensorWindow::real_line(), &hermite_coefficients(j).unwrap()).unwrap();
            assert!((e - 0.8f64.powi(j as i32)).abs() < 1e-13, "j={j}: {e}");
        }
    }
}
