//! End-to-end runs: configuration, the estimation pipeline, evaluation against
//! a known mixture, parameter sweeps and the verification suite.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_v, default_ell, solve_basis, tail_bias, BasisMatrix};
use crate::denoise::{denoise, DenoiseDiagnostics};
use crate::error::{Error, Result};
use crate::estimator::{estimate_moment, estimate_moments, oracle_moments, standardize};
use crate::hermite::{compute_j, CensorWindow};
use crate::model::{alpha_mass, censored_expectation_mp, mixing_moments, sample, MixtureModel, SampleBatch};
use crate::mpfloat::MpFloat;
use crate::oracle::{integrate, integrate_ordered_pair, QuadOptions};

/// Extra tail terms reported beyond `ℓ`.
pub const TAIL_TERMS: usize = 20;

/// Ground-truth mixture as written in a config file; `σ` and `M` come from
/// the enclosing config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub k: usize,
    /// Basis size; `None` picks `default_ell(k, epsilon)`.
    pub ell: Option<usize>,
    /// Half-width of the observation window `[-R, R]`.
    #[serde(rename = "R", alias = "r")]
    pub r: f64,
    /// Bound on `|μ_i|`.
    #[serde(rename = "M", alias = "m")]
    pub m: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Target moment accuracy; defaults to `epsilon^(2k)`.
    pub delta: Option<f64>,
    pub n: u64,
    pub seed: u64,
    pub model: Option<ModelSpec>,
    pub quadrature_tolerance: f64,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 1,
            ell: None,
            r: 3.0,
            m: 3.0,
            sigma: 1.0,
            epsilon: 0.1,
            delta: None,
            n: 100_000,
            seed: 0,
            model: None,
            quadrature_tolerance: 1e-11,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Checks the invariants and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.r > 0.0) {
            return bad(format!("R must be positive, got {}", self.r));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("M must be positive, got {}", self.m));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad(format!("delta must be positive, got {d}"));
            }
        }
        if let Some(ell) = self.ell {
            if ell < 2 * (2 * self.k - 1) {
                return bad(format!("ell={ell} is below 2(2k-1)={}", 2 * (2 * self.k - 1)));
            }
        }
        let mut warnings = Vec::new();
        if let Some(truth) = self.truth()? {
            if truth.k() != self.k {
                return bad(format!("model has {} components but k={}", truth.k(), self.k));
            }
            let std = truth.standardized();
            let separation = std.w_min() * std.delta_min();
            if separation < self.epsilon {
                warnings.push(format!(
                    "w_min * delta_min = {separation:.3e} is below epsilon = {}; recovery to epsilon is not expected",
                    self.epsilon
                ));
            }
        }
        Ok(warnings)
    }

    pub fn window(&self) -> Result<CensorWindow> {
        CensorWindow::symmetric(self.r)
    }

    pub fn resolved_ell(&self) -> usize {
        self.ell.unwrap_or_else(|| default_ell(self.k, self.epsilon))
    }

    pub fn resolved_delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| self.epsilon.powi(2 * self.k as i32))
    }

    pub fn truth(&self) -> Result<Option<MixtureModel>> {
        self.model
            .as_ref()
            .map(|s| MixtureModel::new(s.weights.clone(), s.means.clone(), self.sigma, self.m))
            .transpose()
    }

    fn require_truth(&self) -> Result<MixtureModel> {
        self.truth()?.ok_or_else(|| Error::InvalidArgument("this command needs a ground-truth model".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub ell: usize,
    pub oracle: bool,
    pub n_total: u64,
    pub n_observed: u64,
    pub delta: f64,
    /// Bits the basis solve settled on.
    pub precision_bits: Option<u32>,
    pub condition_estimate: Option<f64>,
    pub max_abs_beta: Option<f64>,
    /// `‖V β_i - e_i‖_∞` for `i = 0..2k-1`.
    pub residual_norms: Vec<f64>,
    /// Truncated majorants of the tail bias for `i = 1..2k-1`.
    pub bias_bounds: Vec<f64>,
    pub tail_j_max: usize,
    /// `m̂_0`, which should be near 1.
    pub m0_estimate: Option<f64>,
    pub denoise: DenoiseDiagnostics,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sigma: f64,
    pub k: usize,
    pub ell: usize,
    pub alpha_hat: f64,
    pub moment_estimates: Vec<f64>,
    pub denoised_moments: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub seed: u64,
}

/// Draws the configured sample from the ground-truth model.
pub fn generate(config: &ExperimentConfig) -> Result<SampleBatch> {
    config.validate()?;
    let truth = config.require_truth()?;
    sample(&truth, &config.window()?, config.n, config.seed).map_err(|e| e.at("sample"))
}

/// Standardize, solve the basis, estimate moments, denoise, rescale.
pub fn run_pipeline(config: &ExperimentConfig, batch: &SampleBatch) -> Result<EstimateResult> {
    let mut warnings = config.validate()?;
    let window = config.window()?;
    if !batch.window.approx_eq(&window, 1e-12) {
        return Err(Error::InvalidArgument(format!("batch window {} does not match R={}", batch.window, config.r)));
    }
    if batch.sigma != config.sigma {
        return Err(Error::InvalidArgument(format!("batch sigma {} does not match config sigma {}", batch.sigma, config.sigma)));
    }
    let (k, sigma, ell) = (config.k, config.sigma, config.resolved_ell());
    let (std_batch, std_window) = standardize(batch, sigma).map_err(|e| e.at("standardize"))?;
    let bound = config.m / sigma;
    let v = build_v(ell, &std_window).map_err(|e| e.at("build_v"))?;
    let basis = solve_basis(v, k).map_err(|e| e.at("solve_basis"))?;
    let m_hat = estimate_moments(&std_batch, &basis).map_err(|e| e.at("estimate_moments"))?;
    let m0 = estimate_moment(&std_batch, &basis, 0).map_err(|e| e.at("estimate_moments"))?;
    let tail_j_max = ell + TAIL_TERMS;
    let tails = tail_bias(&basis, bound, tail_j_max).map_err(|e| e.at("tail_bias"))?;
    let result = denoise(&m_hat, k, bound).map_err(|e| e.at("denoise"))?;
    if result.diagnostics.effective_k < k {
        warnings.push(format!("recovered only {} distinct means", result.diagnostics.effective_k));
    }
    if result.diagnostics.negative_weight_warning {
        warnings.push("solved weights had significantly negative entries".into());
    }
    if result.diagnostics.complex_roots > 0 {
        warnings.push(format!("{} complex roots collapsed to their real parts", result.diagnostics.complex_roots));
    }
    Ok(EstimateResult {
        weights: result.weights,
        means: result.means.iter().map(|m| m * sigma).collect(),
        sigma,
        k,
        ell,
        alpha_hat: std_batch.alpha_hat(),
        moment_estimates: m_hat.values().to_vec(),
        denoised_moments: result.projected.values().to_vec(),
        diagnostics: Diagnostics {
            ell,
            oracle: false,
            n_total: batch.n_total,
            n_observed: batch.values.len() as u64,
            delta: config.resolved_delta(),
            precision_bits: Some(basis.precision_bits()),
            condition_estimate: Some(basis.condition_estimate()),
            max_abs_beta: Some(basis.max_abs_beta()),
            residual_norms: basis.residual_norms().to_vec(),
            bias_bounds: tails[1..].iter().map(|t| t.bias_bound).collect(),
            tail_j_max,
            m0_estimate: Some(m0),
            denoise: result.diagnostics,
            warnings,
        },
        seed: batch.seed,
    })
}

/// The pipeline with the exact mixing moments substituted for `m̂`.
pub fn run_oracle(config: &ExperimentConfig) -> Result<EstimateResult> {
    let warnings = config.validate()?;
    let truth = config.require_truth()?;
    let (k, sigma) = (config.k, config.sigma);
    let moments = mixing_moments(&truth, 2 * k - 1);
    let result = denoise(&moments, k, config.m / sigma).map_err(|e| e.at("denoise"))?;
    let alpha = alpha_mass(&truth, &config.window()?).map_err(|e| e.at("alpha_mass"))?;
    Ok(EstimateResult {
        weights: result.weights,
        means: result.means.iter().map(|m| m * sigma).collect(),
        sigma,
        k,
        ell: config.resolved_ell(),
        alpha_hat: alpha,
        moment_estimates: moments.values().to_vec(),
        denoised_moments: result.projected.values().to_vec(),
        diagnostics: Diagnostics {
            ell: config.resolved_ell(),
            oracle: true,
            n_total: 0,
            n_observed: 0,
            delta: config.resolved_delta(),
            precision_bits: None,
            condition_estimate: None,
            max_abs_beta: None,
            residual_norms: Vec::new(),
            bias_bounds: Vec::new(),
            tail_j_max: 0,
            m0_estimate: None,
            denoise: result.diagnostics,
            warnings,
        },
        seed: config.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchReport {
    /// `permutation[i]` is the estimated component paired with true component `i`.
    pub permutation: Vec<usize>,
    pub max_weight_err: f64,
    pub max_mean_err: f64,
}

impl MatchReport {
    pub fn max_error(&self) -> f64 {
        self.max_weight_err.max(self.max_mean_err)
    }
}

fn pair_cost(ew: &[f64], em: &[f64], tw: &[f64], tm: &[f64], i: usize, j: usize) -> f64 {
    (ew[j] - tw[i]).abs().max((em[j] - tm[i]).abs())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Perfect matching using only pairs with cost `<= limit` (Kuhn's algorithm).
fn matching_under(cost: &[Vec<f64>], limit: f64) -> Option<Vec<usize>> {
    let n = cost.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, cost: &[Vec<f64>], limit: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..cost.len() {
            if cost[i][j] <= limit && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|o| augment(o, cost, limit, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, cost, limit, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        perm[o.expect("perfect matching")] = j;
    }
    Some(perm)
}

/// Pairs estimated and true components to minimize the largest per-component
/// error `max(|ŵ - w|, |μ̂ - μ|)`. Exhaustive for `k <= 8`, bottleneck
/// assignment above.
pub fn match_parameters(est_weights: &[f64], est_means: &[f64], true_weights: &[f64], true_means: &[f64]) -> Result<MatchReport> {
    let k = true_weights.len();
    if est_weights.len() != k || est_means.len() != k || true_means.len() != k {
        return Err(Error::Arity { needed: k, got: est_weights.len().min(est_means.len()) });
    }
    let cost: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| pair_cost(est_weights, est_means, true_weights, true_means, i, j)).collect()).collect();
    let permutation = if k <= 8 {
        let mut p: Vec<usize> = (0..k).collect();
        let mut best = (f64::INFINITY, p.clone());
        loop {
            let c = (0..k).map(|i| cost[i][p[i]]).fold(0.0, f64::max);
            if c < best.0 {
                best = (c, p.clone());
            }
            if !next_permutation(&mut p) {
                break;
            }
        }
        best.1
    } else {
        let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let (mut lo, mut hi) = (0, levels.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if matching_under(&cost, levels[mid]).is_some() {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        matching_under(&cost, levels[lo]).expect("the largest level admits every pairing")
    };
    let max_weight_err = (0..k).map(|i| (est_weights[permutation[i]] - true_weights[i]).abs()).fold(0.0, f64::max);
    let max_mean_err = (0..k).map(|i| (est_means[permutation[i]] - true_means[i]).abs()).fold(0.0, f64::max);
    Ok(MatchReport { permutation, max_weight_err, max_mean_err })
}

/// `oracle_i - m_i` for `i = 1..2k-1`: the bias left with infinite data.
pub fn oracle_bias(model: &MixtureModel, window: &CensorWindow, ell: usize) -> Result<Vec<f64>> {
    let std = model.standardized();
    let k = model.k();
    let basis = solve_basis(build_v(ell, &window.scaled(model.sigma()))?, k)?;
    let oracle = oracle_moments(&std, &basis)?;
    let truth = mixing_moments(&std, 2 * k - 1);
    Ok((1..2 * k).map(|i| oracle.get(i) - truth.get(i)).collect())
}

/// Sample variance of `m̂_i` across seeds.
pub fn moment_variance(model: &MixtureModel, window: &CensorWindow, ell: usize, i: usize, n: u64, seeds: &[u64]) -> Result<f64> {
    let std_window = window.scaled(model.sigma());
    let basis = solve_basis(build_v(ell, &std_window)?, model.k())?;
    let estimates = seeds
        .iter()
        .map(|&s| {
            let batch = sample(model, window, n, s)?;
            let (std, _) = standardize(&batch, model.sigma())?;
            estimate_moment(&std, &basis, i)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    Ok(estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (estimates.len() as f64 - 1.0))
}

/// Exact `Var m̂_i` for a sample of size `n`: `(∫_S f_i² p - (∫_S f_i p)²) / n`.
pub fn exact_estimator_variance(model: &MixtureModel, window: &CensorWindow, ell: usize, i: usize, n: u64) -> Result<f64> {
    let std = model.standardized();
    let basis = solve_basis(build_v(ell, &window.scaled(model.sigma()))?, model.k())?;
    let f = basis.f_coeffs_mp(i);
    let prec = basis.precision_bits().max(64) + 32;
    let mut square = vec![MpFloat::zero(prec); 2 * f.len() - 1];
    for (a, fa) in f.iter().enumerate() {
        for (b, fb) in f.iter().enumerate() {
            square[a + b] = &square[a + b] + &(fa * fb);
        }
    }
    let second = censored_expectation_mp(&std, basis.window(), &square, prec)?;
    let first = censored_expectation_mp(&std, basis.window(), f, prec)?;
    Ok((&second - &first.square()).to_f64() / n as f64)
}

/// Mixtures with up to three components: weights drawn from {0.2, 0.3, 0.5}
/// (renormalized) and means on the grid `-2, -1.5, …, 2` (spacing 0.5).
pub fn recovery_grid(mean_bound: f64) -> Vec<MixtureModel> {
    let grid: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
    let levels = [0.2, 0.3, 0.5];
    let mut out = Vec::new();
    for k in 1..=3usize {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let means: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
            let combos = levels.len().pow(k as u32);
            for code in 0..combos {
                let raw: Vec<f64> = (0..k).map(|d| levels[(code / levels.len().pow(d as u32)) % levels.len()]).collect();
                let total: f64 = raw.iter().sum();
                let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
                if let Ok(m) = MixtureModel::new(weights, means.clone(), 1.0, mean_bound) {
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                if k == 1 {
                    break;
                }
            }
            // next k-subset of the grid in lexicographic order
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == grid.len() - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for q in pos..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out
}

/// Worst matched error of denoising the exact moments of every grid model.
pub fn exact_recovery_error(models: &[MixtureModel], mean_bound: f64) -> Result<f64> {
    let errs = models
        .par_iter()
        .map(|m| {
            let r = denoise(&mixing_moments(m, 2 * m.k() - 1), m.k(), mean_bound)?;
            Ok(match_parameters(&r.weights, &r.means, m.weights(), m.means()).map_or(f64::INFINITY, |x| x.max_error()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Probabilist's Hermite values by the three-term recurrence, in plain f64.
fn hermite_f64(j: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if j == 0 {
        return prev;
    }
    for n in 1..j {
        let next = x * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `J_{h_c, r}` by adaptive quadrature of its defining integrand.
pub fn quadrature_j(c: usize, r: usize, w: &CensorWindow, rel_tol: f64) -> f64 {
    let scale = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * factorial_f64(r));
    let opts = QuadOptions { rel_tol, ..Default::default() };
    integrate(|x| hermite_f64(c, x) * hermite_f64(r, x) * (-0.5 * x * x).exp(), w.lower(), w.upper(), &opts).value * scale
}

/// `(1/2π) ∬_{x0 > x1 ∈ S} e^{-(x0² + x1²)/2} (x0 - x1)² dx1 dx0`, the
/// two-point Vandermonde integral equal to `det V` at `ℓ = 2`.
pub fn det_identity_quadrature(w: &CensorWindow, rel_tol: f64) -> f64 {
    let opts = QuadOptions { rel_tol, ..Default::default() };
    let f = |x0: f64, x1: f64| (-0.5 * (x0 * x0 + x1 * x1)).exp() * (x0 - x1).powi(2);
    integrate_ordered_pair(f, w.lower(), w.upper(), &opts).value / (2.0 * std::f64::consts::PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl FromStr for VerifyLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            other => Err(Error::InvalidArgument(format!("unknown level {other:?}; expected fast or full"))),
        }
    }
}

impl fmt::Display for VerifyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fast => "fast",
            Self::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// The measured quantity the threshold applies to.
    pub metric: f64,
    pub detail: String,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// How the suite obtains `V`; replaced in mutation tests.
pub type MatrixBuilder = dyn Fn(usize, &CensorWindow) -> Result<BasisMatrix> + Sync;

fn timed(name: &str, body: impl FnOnce() -> Result<(bool, f64, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, metric, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, f64::NAN, format!("error: {e}")),
    };
    CheckResult { name: name.to_string(), passed, metric, detail, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 }
}

fn sym(r: f64) -> CensorWindow {
    CensorWindow::symmetric(r).expect("positive half-width")
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// `V(ℓ = 10, [-10, 10])` against the identity.
pub fn check_orthogonality(builder: &MatrixBuilder) -> CheckResult {
    timed("orthogonality_limit", || {
        let v = builder(10, &sym(10.0))?;
        let mut worst: f64 = 0.0;
        for r in 0..10 {
            for c in 0..10 {
                worst = worst.max((v.entry(r, c) - if r == c { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok((worst <= 1e-8, worst, format!("max |V - I| = {worst:.3e} (limit 1e-8)")))
    })
}

/// Closed-form `J` against quadrature for `c, r <= 12`, `R ∈ {0.5, 1, 2, 4}`.
pub fn check_quadrature_agreement() -> CheckResult {
    timed("quadrature_agreement", || {
        let mut worst: f64 = 0.0;
        let mut worst_at = String::new();
        for r_half in [0.5, 1.0, 2.0, 4.0] {
            let w = sym(r_half);
            for c in 0..=12 {
                for r in 0..=12 {
                    let closed = compute_j(c, r, &w)?;
                    if (c + r) % 2 == 1 {
                        if closed != 0.0 {
                            return Ok((false, f64::INFINITY, format!("J({c},{r}) on {w} is {closed}, not an exact zero")));
                        }
                        continue;
                    }
                    let gap = relative_gap(closed, quadrature_j(c, r, &w, 1e-13));
                    if gap > worst {
                        worst = gap;
                        worst_at = format!("c={c} r={r} R={r_half}");
                    }
                }
            }
        }
        Ok((worst <= 1e-9, worst, format!("max relative gap {worst:.3e} at {worst_at} (limit 1e-9)")))
    })
}

/// `det V` at `ℓ = 2` against the two-point integral, plus the orientation
/// of `V` on an asymmetric window at `ℓ = 3`, where `V` is not symmetric.
pub fn check_det_identity(builder: &MatrixBuilder) -> CheckResult {
    timed("det_identity", || {
        let mut worst: f64 = 0.0;
        let mut notes = Vec::new();
        for w in [sym(1.0), sym(2.0), CensorWindow::new(-1.0, 2.0)?] {
            let det = builder(2, &w)?.determinant().to_f64();
            let quad = det_identity_quadrature(&w, 1e-12);
            let gap = relative_gap(det, quad);
            worst = worst.max(gap);
            notes.push(format!("{w}: det {det:.12e} vs {quad:.12e}"));
        }
        let w = CensorWindow::new(-1.0, 2.0)?;
        let v = builder(3, &w)?;
        let mut orient: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                orient = orient.max(relative_gap(v.entry(r, c), quadrature_j(c, r, &w, 1e-13)));
            }
        }
        notes.push(format!("entry orientation gap {orient:.3e} on {w}"));
        let metric = worst.max(orient);
        Ok((metric <= 1e-8, metric, notes.join("; ")))
    })
}

/// Reference model for the bias and variance checks.
pub fn reference_model() -> MixtureModel {
    MixtureModel::new(vec![0.5, 0.5], vec![-0.5, 0.5], 1.0, 1.0).expect("valid reference model")
}

/// Oracle bias strictly decreasing over `ℓ = 6..14` and below 1e-6 at 16.
pub fn check_bias_decay() -> CheckResult {
    timed("bias_decay", || {
        let model = reference_model();
        let w = sym(1.0);
        let biases = [6usize, 8, 10, 12, 14, 16]
            .iter()
            .map(|&ell| Ok(oracle_bias(&model, &w, ell)?.iter().map(|b| b.abs()).fold(0.0, f64::max)))
            .collect::<Result<Vec<f64>>>()?;
        let decreasing = biases[..5].windows(2).all(|p| p[1] < p[0]);
        let last = biases[5];
        let detail = format!("max |bias| for ell=6..16: {:?}", biases.iter().map(|b| format!("{b:.3e}")).collect::<Vec<_>>());
        Ok((decreasing && last < 1e-6, last, detail))
    })
}

/// Denoising exact moments recovers every model on the grid.
pub fn check_exact_recovery() -> CheckResult {
    timed("exact_recovery", || {
        let models = recovery_grid(3.0);
        let worst = exact_recovery_error(&models, 3.0)?;
        Ok((worst <= 1e-6, worst, format!("{} models, worst matched error {worst:.3e} (limit 1e-6)", models.len())))
    })
}

/// `Var m̂_1` at `n = 10⁴` over `Var m̂_1` at `2·10⁴`, 100 seeds each.
pub fn check_variance_scaling() -> CheckResult {
    timed("variance_scaling", || {
        let model = reference_model();
        let w = sym(1.0);
        let seeds_a: Vec<u64> = (0..100).collect();
        let seeds_b: Vec<u64> = (100..200).collect();
        let va = moment_variance(&model, &w, 6, 1, 10_000, &seeds_a)?;
        let vb = moment_variance(&model, &w, 6, 1, 20_000, &seeds_b)?;
        let ratio = va / vb;
        let expected = exact_estimator_variance(&model, &w, 6, 1, 10_000)?;
        Ok((
            (1.6..=2.5).contains(&ratio),
            ratio,
            format!("variance ratio {ratio:.4} (accepted 1.6 to 2.5); Var at n=1e4 {va:.4e}, exact {expected:.4e}"),
        ))
    })
}

pub fn verify_suite(level: VerifyLevel) -> VerifyReport {
    verify_suite_with(level, &|ell, w| build_v(ell, w))
}

pub fn verify_suite_with(level: VerifyLevel, builder: &MatrixBuilder) -> VerifyReport {
    let mut checks = vec![
        check_orthogonality(builder),
        check_quadrature_agreement(),
        check_det_identity(builder),
        check_bias_decay(),
        check_exact_recovery(),
    ];
    if level == VerifyLevel::Full {
        checks.push(check_variance_scaling());
    }
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { level, passed, checks }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    N(Vec<u64>),
    Ell(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub ell: usize,
    pub seed: u64,
    pub max_weight_err: f64,
    pub max_mean_err: f64,
    pub runtime_ms: f64,
}

/// Runs one generate-and-estimate cell per (axis value, seed); failed cells
/// report NaN errors.
pub fn sweep(config: &ExperimentConfig, axis: &SweepAxis, seeds: &[u64]) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let truth = config.require_truth()?;
    let cells: Vec<ExperimentConfig> = match axis {
        SweepAxis::N(ns) => ns.iter().map(|&n| ExperimentConfig { n, ..config.clone() }).collect(),
        SweepAxis::Ell(ells) => ells.iter().map(|&ell| ExperimentConfig { ell: Some(ell), ..config.clone() }).collect(),
    };
    for c in &cells {
        c.validate()?;
    }
    let jobs: Vec<ExperimentConfig> =
        cells.iter().flat_map(|c| seeds.iter().map(move |&seed| ExperimentConfig { seed, ..c.clone() })).collect();
    Ok(jobs
        .par_iter()
        .map(|cfg| {
            let start = Instant::now();
            let errs = generate(cfg)
                .and_then(|b| run_pipeline(cfg, &b))
                .and_then(|r| match_parameters(&r.weights, &r.means, truth.weights(), truth.means()));
            let (we, me) = errs.map_or((f64::NAN, f64::NAN), |m| (m.max_weight_err, m.max_mean_err));
            SweepRow {
                n: cfg.n,
                ell: cfg.resolved_ell(),
                seed: cfg.seed,
                max_weight_err: we,
                max_mean_err: me,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect())
}
