//! Probabilist's Hermite polynomials and Gaussian-weighted window integrals.
//!
//! `J_{h_c, r} = ∫_S h_c(x) h_r(x) e^{-x²/2} / (√(2π) r!) dx` is evaluated in
//! closed form: the product `h_c h_r` is expanded exactly in integer monomial
//! coefficients and contracted against the window moments
//! `G_n = ∫_a^b x^n e^{-x²/2} dx`, which follow the recurrence
//! `G_n = (n-1) G_{n-2} + a^{n-1} e^{-a²/2} - b^{n-1} e^{-b²/2}`.
//!
//! The upward recurrence multiplies any error in `G_0` by `(n-1)!!` while
//! `G_n` itself shrinks like `R^n` on narrow windows, and the contraction
//! cancels large integer coefficients. Both are handled by carrying guard
//! bits in [`MpFloat`] and re-running with more bits when the observed
//! cancellation exceeds the guard.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::compensated::{compensated_horner, DoubleDouble};
use crate::error::{Error, Result};
use crate::mpfloat::{MpFloat, DOUBLE_BITS};

/// Largest Hermite degree served by default.
pub const DEFAULT_MAX_DEGREE: usize = 200;

/// Upper limit on guard bits before a cancellation is accepted as is.
pub(crate) const MAX_GUARD_BITS: u32 = 16384;

/// Integer-coefficient polynomial in the monomial basis; `coeffs[p]` multiplies `x^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermitePoly {
    coeffs: Vec<BigInt>,
}

impl HermitePoly {
    pub fn from_coeffs(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigInt::zero());
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficients as `i64`, when they all fit.
    pub fn coeffs_i64(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| i64::try_from(c).ok()).collect()
    }

    pub fn mul(&self, other: &HermitePoly) -> HermitePoly {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        HermitePoly::from_coeffs(out)
    }

    /// Coefficients split into double-double pairs (exact below 2^106).
    pub fn dd_coeffs(&self) -> Vec<DoubleDouble> {
        self.coeffs
            .iter()
            .map(|c| {
                let exact = MpFloat::from_int(c, c.bits().max(1) as u32);
                let hi = exact.to_f64();
                let lo = (&exact - MpFloat::from_f64(hi, 2 * DOUBLE_BITS)).to_f64();
                DoubleDouble::new(hi, lo)
            })
            .collect()
    }
}

fn explicit_hermite(j: usize) -> HermitePoly {
    // power j-2i carries (-1)^i j! / (2^i i! (j-2i)!)
    let mut coeffs = vec![BigInt::zero(); j + 1];
    let mut c = BigInt::one();
    let mut i = 0usize;
    loop {
        coeffs[j - 2 * i] = c.clone();
        if 2 * i + 2 > j {
            break;
        }
        let m = (j - 2 * i) * (j - 2 * i - 1);
        c = -(c * BigInt::from(m)) / BigInt::from(2 * (i + 1));
        i += 1;
    }
    HermitePoly::from_coeffs(coeffs)
}

fn hermite_table() -> &'static [HermitePoly] {
    static TABLE: OnceLock<Vec<HermitePoly>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=DEFAULT_MAX_DEGREE).map(explicit_hermite).collect())
}

/// Exact monomial coefficients of `h_j`, for `j <= 200`.
pub fn hermite_coefficients(j: usize) -> Result<HermitePoly> {
    hermite_coefficients_with_max(j, DEFAULT_MAX_DEGREE)
}

pub fn hermite_coefficients_with_max(j: usize, max: usize) -> Result<HermitePoly> {
    if j > max {
        return Err(Error::Capacity { degree: j, max });
    }
    if j <= DEFAULT_MAX_DEGREE {
        Ok(hermite_table()[j].clone())
    } else {
        Ok(explicit_hermite(j))
    }
}

pub(crate) fn hermite_ref(j: usize) -> Result<&'static HermitePoly> {
    hermite_table().get(j).ok_or(Error::Capacity { degree: j, max: DEFAULT_MAX_DEGREE })
}

/// Evaluates `p(x)` by compensated Horner on double-double coefficients.
pub fn hermite_eval(p: &HermitePoly, x: f64) -> f64 {
    compensated_horner(&p.dd_coeffs(), x)
}

/// Observation window `[lower, upper]`; infinite endpoints are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensorWindow {
    lower: f64,
    upper: f64,
}

impl CensorWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidWindow { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// `[-r, r]`.
    pub fn symmetric(r: f64) -> Result<Self> {
        Self::new(-r, r)
    }

    pub fn real_line() -> Self {
        Self { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == -self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// The window seen after dividing every coordinate by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self { lower: self.lower / scale, upper: self.upper / scale }
    }

    pub fn approx_eq(&self, other: &CensorWindow, tol: f64) -> bool {
        let close = |a: f64, b: f64| a == b || (a - b).abs() <= tol;
        close(self.lower, other.lower) && close(self.upper, other.upper)
    }
}

impl fmt::Display for CensorWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

/// Window endpoint in exact arithmetic; `None` is infinite.
pub(crate) type Endpoint = Option<MpFloat>;

pub(crate) fn endpoint(x: f64, prec: u32) -> Endpoint {
    x.is_finite().then(|| MpFloat::from_f64(x, prec))
}

/// `∫_0^x e^{-t²/2} dt`, with `±∞` mapped to `±√(π/2)`.
fn half_integral(x: &Endpoint, sign_if_infinite: i32, prec: u32) -> MpFloat {
    match x {
        Some(v) => v.with_prec(prec).gaussian_integral(),
        None => {
            let s = MpFloat::pi(prec).mul_pow2(-1).sqrt();
            if sign_if_infinite < 0 {
                -s
            } else {
                s
            }
        }
    }
}

/// `∫_a^b e^{-x²/2} dx` to `prec` bits, widening the working precision until
/// the difference of the two half-line integrals no longer cancels below it.
pub(crate) fn gaussian_mass(a: &Endpoint, b: &Endpoint, prec: u32) -> MpFloat {
    let mut guard = 32u32;
    loop {
        let wp = prec + guard;
        let fa = half_integral(a, -1, wp);
        let fb = half_integral(b, 1, wp);
        let g = &fb - &fa;
        let scale = fa.top().max(fb.top());
        let loss = if g.is_zero() { i64::MAX } else { scale - g.top() };
        if loss.saturating_add(8) < guard as i64 || guard >= MAX_GUARD_BITS {
            return g.with_prec(prec);
        }
        guard = (loss.min(MAX_GUARD_BITS as i64) as u32 + 48).max(guard * 2);
    }
}

fn log2_double_factorial(n: usize) -> f64 {
    let mut s = 0.0;
    let mut k = n;
    while k > 1 {
        s += (k as f64).log2();
        k -= 2;
    }
    s
}

/// Guard bits covering the upward recurrence's error growth up to `n_max`.
fn recurrence_guard(a: &Endpoint, b: &Endpoint, n_max: usize) -> u32 {
    let reach = [a, b]
        .iter()
        .map(|e| e.as_ref().map_or(f64::INFINITY, |v| v.to_f64().abs()))
        .fold(0.0f64, f64::max);
    let shrink = if reach.is_finite() && reach < 1.0 {
        (n_max as f64 + 1.0) * -reach.max(1e-300).log2()
    } else {
        0.0
    };
    (log2_double_factorial(n_max) + shrink).ceil() as u32 + 32
}

/// `G_0 … G_{n_max}` on `[a, b]` with roughly `prec` correct bits each.
pub(crate) fn moment_table(a: &Endpoint, b: &Endpoint, n_max: usize, prec: u32) -> Vec<MpFloat> {
    let wp = prec + recurrence_guard(a, b, n_max);
    let symmetric = match (a, b) {
        (Some(x), Some(y)) => (x + y).is_zero(),
        (None, None) => true,
        _ => false,
    };
    // boundary densities e^{-x²/2}; zero at infinite endpoints
    let density = |e: &Endpoint| e.as_ref().map(|v| (-v.with_prec(wp).square().mul_pow2(-1)).exp());
    let (ea, eb) = (density(a), density(b));
    let boundary = |e: &Endpoint, d: &Option<MpFloat>, power: u32| -> MpFloat {
        match (e, d) {
            (Some(v), Some(d)) => &v.with_prec(wp).powi(power) * d,
            _ => MpFloat::zero(wp),
        }
    };
    let mut g = Vec::with_capacity(n_max + 1);
    g.push(gaussian_mass(a, b, wp));
    if n_max >= 1 {
        let g1 = if symmetric {
            MpFloat::zero(wp)
        } else {
            boundary(a, &ea, 0) - boundary(b, &eb, 0)
        };
        g.push(g1);
    }
    for n in 2..=n_max {
        if symmetric && n % 2 == 1 {
            g.push(MpFloat::zero(wp));
            continue;
        }
        let power = (n - 1) as u32;
        let v = g[n - 2].mul_u64((n - 1) as u64) + boundary(a, &ea, power) - boundary(b, &eb, power);
        g.push(v);
    }
    g
}

/// `G_n(a, b) = ∫_a^b x^n e^{-x²/2} dx`.
pub fn window_moment(n: usize, w: &CensorWindow) -> f64 {
    window_moment_mp(n, w, DOUBLE_BITS + 11).to_f64()
}

pub fn window_moment_mp(n: usize, w: &CensorWindow, prec: u32) -> MpFloat {
    let a = endpoint(w.lower, prec);
    let b = endpoint(w.upper, prec);
    moment_table(&a, &b, n, prec)[n].with_prec(prec)
}

/// Contracts integer coefficients against a moment table and reports how
/// many leading bits cancelled.
pub(crate) fn contract(coeffs: &[BigInt], moments: &[MpFloat], prec: u32) -> (MpFloat, i64) {
    let mut sum = MpFloat::zero(prec);
    let mut abs_sum = MpFloat::zero(prec);
    for (c, g) in coeffs.iter().zip(moments) {
        if c.is_zero() || g.is_zero() {
            continue;
        }
        let term = &MpFloat::from_int(c, prec) * g;
        abs_sum = &abs_sum + &term.abs();
        sum = &sum + &term;
    }
    let loss = if abs_sum.is_zero() {
        0
    } else if sum.is_zero() {
        i64::MAX
    } else {
        abs_sum.top() - sum.top()
    };
    (sum, loss)
}

/// Evaluates `J_{h_c, r}` on one window at a fixed target precision, sharing
/// the moment table across calls and widening it when a contraction cancels
/// more bits than the guard holds.
pub struct JEvaluator {
    window: CensorWindow,
    lower: Endpoint,
    upper: Endpoint,
    target: u32,
    guard: u32,
    n_max: usize,
    moments: Vec<MpFloat>,
    inv_sqrt_2pi: MpFloat,
}

impl JEvaluator {
    /// Serves indices `c, r <= max_index`.
    pub fn new(window: CensorWindow, max_index: usize, target: u32) -> Result<Self> {
        if max_index > DEFAULT_MAX_DEGREE {
            return Err(Error::Capacity { degree: max_index, max: DEFAULT_MAX_DEGREE });
        }
        let mut ev = Self {
            window,
            lower: None,
            upper: None,
            target,
            guard: 64,
            n_max: 2 * max_index,
            moments: Vec::new(),
            inv_sqrt_2pi: MpFloat::one(target),
        };
        ev.rebuild();
        Ok(ev)
    }

    fn rebuild(&mut self) {
        let wp = self.target + self.guard;
        self.lower = endpoint(self.window.lower, wp);
        self.upper = endpoint(self.window.upper, wp);
        self.moments = moment_table(&self.lower, &self.upper, self.n_max, wp);
        self.inv_sqrt_2pi = MpFloat::one(wp) / MpFloat::pi(wp).mul_pow2(1).sqrt();
    }

    pub fn window(&self) -> &CensorWindow {
        &self.window
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    /// `∫_S p(x) e^{-x²/2} dx` for an integer polynomial of degree `<= 2 max_index`.
    pub fn integrate(&mut self, p: &HermitePoly) -> Result<MpFloat> {
        if p.degree() > self.n_max {
            return Err(Error::Capacity { degree: p.degree(), max: self.n_max });
        }
        loop {
            let wp = self.target + self.guard;
            let (sum, loss) = contract(p.coeffs(), &self.moments, wp);
            if loss + 16 < self.guard as i64 || self.guard >= MAX_GUARD_BITS {
                return Ok(sum);
            }
            self.guard = (loss.min(MAX_GUARD_BITS as i64) as u32 + 64).max(2 * self.guard);
            self.rebuild();
        }
    }

    pub fn j(&mut self, c: usize, r: usize) -> Result<MpFloat> {
        if self.window.is_symmetric() && (c + r) % 2 == 1 {
            return Ok(MpFloat::zero(self.target));
        }
        let product = hermite_ref(c)?.mul(hermite_ref(r)?);
        let integral = self.integrate(&product)?;
        let scaled = (&integral * &self.inv_sqrt_2pi) / MpFloat::from_int(&factorial(r), self.target + self.guard);
        Ok(scaled.with_prec(self.target))
    }
}

pub(crate) fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `J_{h_c, r}` on window `w`, rounded to double precision.
pub fn compute_j(c: usize, r: usize, w: &CensorWindow) -> Result<f64> {
    Ok(compute_j_mp(c, r, w, DOUBLE_BITS + 11)?.to_f64())
}

pub fn compute_j_mp(c: usize, r: usize, w: &CensorWindow, prec: u32) -> Result<MpFloat> {
    JEvaluator::new(*w, c.max(r), prec)?.j(c, r)
}
