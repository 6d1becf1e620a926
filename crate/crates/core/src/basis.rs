//! The `V` matrix of `J` functionals and the estimator coefficients.
//!
//! Row `r`, column `c` of `V` holds `J_{h_c, r}`. Solving `V β_i = e_i` gives
//! the coefficients of `f_i = Σ_a β_{i,a} h_a`, whose censored expectation
//! reproduces the mixing moment `m_i` up to the tail `Σ_{j >= ℓ} J_{f_i,j} m_j`.
//!
//! `V` becomes badly conditioned quickly as the window narrows or `ℓ` grows
//! (condition numbers near 1e33 at `ℓ = 16` on `[-1, 1]`), so the matrix and
//! its factorization live in [`MpFloat`] and the solve escalates precision
//! until the forward-error budget and the residual contract both hold.

use crate::compensated::{compensated_horner, DoubleDouble};
use crate::error::{Error, Result};
use crate::hermite::{hermite_ref, CensorWindow, JEvaluator};
use crate::mpfloat::{MpFloat, DOUBLE_BITS};

/// Starting precision for `ℓ > 12`.
pub const EXTENDED_START_BITS: u32 = 128;
/// Escalation stops here and the solve reports ill-conditioning.
pub const DEFAULT_MAX_PRECISION_BITS: u32 = 8192;
/// `cond(V) · 2^(1-p)` must stay below this for a solve to be accepted.
pub const FORWARD_ERROR_BUDGET: f64 = 1e-10;
/// Residual contract `‖V β_i - e_i‖_∞ <= RESIDUAL_TOL · ‖β_i‖_∞`.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Constant in the default `ℓ ≈ c · k · ln(1/ε)` policy.
pub const ELL_LOG_FACTOR: f64 = 3.0;

/// `max(2(2k-1) + 2, ceil(3 k ln(1/ε)))`.
pub fn default_ell(k: usize, epsilon: f64) -> usize {
    let floor = 2 * (2 * k - 1) + 2;
    let by_eps = if epsilon > 0.0 && epsilon < 1.0 {
        (ELL_LOG_FACTOR * k as f64 * (1.0 / epsilon).ln()).ceil() as usize
    } else {
        0
    };
    floor.max(by_eps)
}

/// Precision `V` is first built at.
pub fn starting_precision(ell: usize) -> u32 {
    if ell <= 12 {
        DOUBLE_BITS
    } else {
        EXTENDED_START_BITS
    }
}

#[derive(Clone, Debug)]
struct LuFactors {
    lu: Vec<MpFloat>,
    perm: Vec<usize>,
    sign: i32,
}

fn lu_decompose(a: &[MpFloat], n: usize) -> Option<LuFactors> {
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1;
    let scale_top = a.iter().map(MpFloat::top).max().unwrap_or(i64::MIN);
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&x, &y| lu[x * n + col].cmp_abs(&lu[y * n + col]))?;
        let pivot = &lu[pivot_row * n + col];
        // a pivot 1e-300 below the largest entry counts as zero
        if pivot.is_zero() || pivot.top() < scale_top - 997 {
            return None;
        }
        if pivot_row != col {
            for c in 0..n {
                lu.swap(pivot_row * n + c, col * n + c);
            }
            perm.swap(pivot_row, col);
            sign = -sign;
        }
        let pivot = lu[col * n + col].clone();
        for r in col + 1..n {
            if lu[r * n + col].is_zero() {
                continue;
            }
            let factor = &lu[r * n + col] / &pivot;
            for c in col + 1..n {
                if lu[col * n + c].is_zero() {
                    continue;
                }
                let update = &factor * &lu[col * n + c];
                lu[r * n + c] = &lu[r * n + c] - &update;
            }
            lu[r * n + col] = factor;
        }
    }
    Some(LuFactors { lu, perm, sign })
}

fn lu_solve(f: &LuFactors, n: usize, rhs: &[MpFloat]) -> Vec<MpFloat> {
    let mut y: Vec<MpFloat> = f.perm.iter().map(|&p| rhs[p].clone()).collect();
    for r in 0..n {
        for c in 0..r {
            if !f.lu[r * n + c].is_zero() && !y[c].is_zero() {
                let t = &f.lu[r * n + c] * &y[c];
                y[r] = &y[r] - &t;
            }
        }
    }
    for r in (0..n).rev() {
        for c in r + 1..n {
            if !f.lu[r * n + c].is_zero() && !y[c].is_zero() {
                let t = &f.lu[r * n + c] * &y[c];
                y[r] = &y[r] - &t;
            }
        }
        y[r] = &y[r] / &f.lu[r * n + r];
    }
    y
}

fn one_norm(a: &[MpFloat], n: usize) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| a[r * n + c].to_f64().abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `ℓ × ℓ` matrix with `(r, c)` entry `J_{h_c, r}`, plus its LU factors.
#[derive(Clone, Debug)]
pub struct BasisMatrix {
    ell: usize,
    window: CensorWindow,
    prec: u32,
    entries: Vec<MpFloat>,
    lu: Option<LuFactors>,
    condition_estimate: f64,
    // false for explicit entries, which cannot be recomputed at higher precision
    rebuildable: bool,
}

impl BasisMatrix {
    /// Wraps explicit entries (row-major). Used for mutation checks.
    pub fn from_entries(window: CensorWindow, ell: usize, entries: Vec<MpFloat>) -> Result<Self> {
        if ell == 0 || entries.len() != ell * ell {
            return Err(Error::InvalidArgument(format!(
                "basis matrix needs {} entries for ell={ell}, got {}",
                ell * ell,
                entries.len()
            )));
        }
        let prec = entries.iter().map(MpFloat::prec).max().unwrap_or(DOUBLE_BITS);
        let lu = lu_decompose(&entries, ell);
        let condition_estimate = match &lu {
            Some(f) => {
                let cols: Vec<Vec<MpFloat>> = (0..ell)
                    .map(|c| {
                        let mut e = vec![MpFloat::zero(prec); ell];
                        e[c] = MpFloat::one(prec);
                        lu_solve(f, ell, &e)
                    })
                    .collect();
                let inv: Vec<MpFloat> = (0..ell * ell).map(|k| cols[k % ell][k / ell].clone()).collect();
                one_norm(&entries, ell) * one_norm(&inv, ell)
            }
            None => f64::INFINITY,
        };
        Ok(Self { ell, window, prec, entries, lu, condition_estimate, rebuildable: false })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn window(&self) -> &CensorWindow {
        &self.window
    }

    pub fn precision_bits(&self) -> u32 {
        self.prec
    }

    /// `‖V‖₁ ‖V⁻¹‖₁`; infinite when factorization failed.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.ell + c].to_f64()
    }

    pub fn entry_mp(&self, r: usize, c: usize) -> &MpFloat {
        &self.entries[r * self.ell + c]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.ell).map(|r| (0..self.ell).map(|c| self.entry(r, c)).collect()).collect()
    }

    pub fn transposed(&self) -> Result<Self> {
        let n = self.ell;
        let t = (0..n * n).map(|k| self.entries[(k % n) * n + k / n].clone()).collect();
        Self::from_entries(self.window, n, t)
    }

    pub fn is_singular(&self) -> bool {
        self.lu.is_none()
    }

    /// Determinant from the LU pivots.
    pub fn determinant(&self) -> MpFloat {
        let n = self.ell;
        match &self.lu {
            None => MpFloat::zero(self.prec),
            Some(f) => {
                let mut d = MpFloat::from_i64(f.sign as i64, self.prec);
                for k in 0..n {
                    d = &d * &f.lu[k * n + k];
                }
                d
            }
        }
    }

    /// Solves `V x = rhs`; `None` when `V` is singular.
    pub fn solve(&self, rhs: &[MpFloat]) -> Option<Vec<MpFloat>> {
        self.lu.as_ref().map(|f| lu_solve(f, self.ell, rhs))
    }

    fn residual_inf(&self, x: &[MpFloat], unit: usize) -> f64 {
        let n = self.ell;
        (0..n)
            .map(|r| {
                let mut acc = if r == unit { -MpFloat::one(self.prec) } else { MpFloat::zero(self.prec) };
                for c in 0..n {
                    if !x[c].is_zero() && !self.entries[r * n + c].is_zero() {
                        acc = &acc + &(&self.entries[r * n + c] * &x[c]);
                    }
                }
                acc.to_f64().abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds `V` for `ℓ` basis functions on window `w` at the default starting precision.
pub fn build_v(ell: usize, w: &CensorWindow) -> Result<BasisMatrix> {
    build_v_with_precision(ell, w, starting_precision(ell))
}

pub fn build_v_with_precision(ell: usize, w: &CensorWindow, prec: u32) -> Result<BasisMatrix> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be at least 1".into()));
    }
    let mut ev = JEvaluator::new(*w, ell - 1, prec)?;
    let mut entries = Vec::with_capacity(ell * ell);
    for r in 0..ell {
        for c in 0..ell {
            entries.push(ev.j(c, r)?);
        }
    }
    let mut v = BasisMatrix::from_entries(*w, ell, entries)?;
    v.rebuildable = true;
    Ok(v)
}

/// Coefficients `β_i` for `i = 0..2k-1` and the derived test functions `f_i`.
#[derive(Clone, Debug)]
pub struct EstimatorBasis {
    ell: usize,
    k: usize,
    matrix: BasisMatrix,
    betas: Vec<Vec<MpFloat>>,
    residual_norms: Vec<f64>,
    f_coeffs: Vec<Vec<MpFloat>>,
    f_dd: Vec<Vec<DoubleDouble>>,
    max_precision: u32,
}

impl EstimatorBasis {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> &CensorWindow {
        self.matrix.window()
    }

    pub fn matrix(&self) -> &BasisMatrix {
        &self.matrix
    }

    pub fn precision_bits(&self) -> u32 {
        self.matrix.precision_bits()
    }

    pub fn condition_estimate(&self) -> f64 {
        self.matrix.condition_estimate()
    }

    /// Number of solved systems (`2k`, index 0 included).
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn beta(&self, i: usize) -> Vec<f64> {
        self.betas[i].iter().map(MpFloat::to_f64).collect()
    }

    pub fn beta_mp(&self, i: usize) -> &[MpFloat] {
        &self.betas[i]
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    pub fn max_abs_beta(&self) -> f64 {
        self.betas.iter().flatten().map(|b| b.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Monomial coefficients of `f_i = Σ_a β_{i,a} h_a`.
    pub fn f_coeffs_mp(&self, i: usize) -> &[MpFloat] {
        &self.f_coeffs[i]
    }

    pub fn f_coeffs_dd(&self, i: usize) -> &[DoubleDouble] {
        &self.f_dd[i]
    }

    /// `f_i(x)` by compensated Horner.
    pub fn eval_f(&self, i: usize, x: f64) -> f64 {
        compensated_horner(&self.f_dd[i], x)
    }

    /// The same basis solved again at (at least) `prec` bits.
    pub fn refine(&self, prec: u32) -> Result<EstimatorBasis> {
        let v = build_v_with_precision(self.ell, self.window(), prec.max(self.precision_bits()))?;
        solve_basis_with_limit(v, self.k, self.max_precision.max(prec))
    }
}

fn next_precision(p: u32) -> u32 {
    if p < EXTENDED_START_BITS {
        EXTENDED_START_BITS
    } else {
        2 * p
    }
}

/// Solves `V β_i = e_i` for `i = 0..2k-1`, escalating precision as needed.
pub fn solve_basis(v: BasisMatrix, k: usize) -> Result<EstimatorBasis> {
    solve_basis_with_limit(v, k, DEFAULT_MAX_PRECISION_BITS)
}

pub fn solve_basis_with_limit(v: BasisMatrix, k: usize, max_bits: u32) -> Result<EstimatorBasis> {
    let ell = v.ell();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if ell < 2 * (2 * k - 1) {
        return Err(Error::InvalidArgument(format!("ell={ell} is below 2(2k-1)={} for k={k}", 2 * (2 * k - 1))));
    }
    let mut v = v;
    loop {
        let p = v.precision_bits();
        let within_budget = v.condition_estimate() * 2f64.powi(1 - p as i32) <= FORWARD_ERROR_BUDGET;
        let attempt = if v.is_singular() || !within_budget { None } else { try_solve(&v, k) };
        if let Some((betas, residual_norms)) = attempt {
            let (f_coeffs, f_dd) = materialize(&betas, ell, p)?;
            return Ok(EstimatorBasis {
                ell,
                k,
                matrix: v,
                betas,
                residual_norms,
                f_coeffs,
                f_dd,
                max_precision: max_bits,
            });
        }
        if p >= max_bits || !v.rebuildable {
            let reason = if v.is_singular() {
                format!("zero pivot at {p} bits")
            } else {
                format!("condition estimate {:.3e} exceeds the {p}-bit budget", v.condition_estimate())
            };
            return Err(Error::IllConditioned { ell, window: *v.window(), reason });
        }
        v = build_v_with_precision(ell, v.window(), next_precision(p).min(max_bits))?;
    }
}

fn try_solve(v: &BasisMatrix, k: usize) -> Option<(Vec<Vec<MpFloat>>, Vec<f64>)> {
    let (ell, p) = (v.ell(), v.precision_bits());
    let mut betas = Vec::with_capacity(2 * k);
    let mut residuals = Vec::with_capacity(2 * k);
    for i in 0..2 * k {
        let mut e = vec![MpFloat::zero(p); ell];
        e[i] = MpFloat::one(p);
        let beta = v.solve(&e)?;
        let res = v.residual_inf(&beta, i);
        let scale = beta.iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max);
        if !(res <= RESIDUAL_TOL * scale) {
            return None;
        }
        betas.push(beta);
        residuals.push(res);
    }
    Some((betas, residuals))
}

type Materialized = (Vec<Vec<MpFloat>>, Vec<Vec<DoubleDouble>>);

fn materialize(betas: &[Vec<MpFloat>], ell: usize, p: u32) -> Result<Materialized> {
    let mut all_mp = Vec::with_capacity(betas.len());
    let mut all_dd = Vec::with_capacity(betas.len());
    for beta in betas {
        let mut coeffs = vec![MpFloat::zero(p); ell];
        for (a, b) in beta.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for (pow, c) in hermite_ref(a)?.coeffs().iter().enumerate() {
                if !num_traits::Zero::is_zero(c) {
                    coeffs[pow] = &coeffs[pow] + &(b * &MpFloat::from_int(c, p));
                }
            }
        }
        let dd = coeffs
            .iter()
            .map(|c| {
                let hi = c.to_f64();
                let lo = (c - &MpFloat::from_f64(hi, p.max(DOUBLE_BITS))).to_f64();
                DoubleDouble::new(hi, lo)
            })
            .collect();
        all_mp.push(coeffs);
        all_dd.push(dd);
    }
    Ok((all_mp, all_dd))
}

/// Tail coefficients `J_{f_i, j}` for `j = ℓ..=j_max` and the truncated
/// majorant `Σ_j |J_{f_i,j}| M^j` of the bias term.
#[derive(Clone, Debug)]
pub struct TailReport {
    pub i: usize,
    pub ell: usize,
    pub tail_coeffs: Vec<f64>,
    pub bias_bound: f64,
    /// Precision the coefficients were resolved at.
    pub precision_bits: u32,
}

impl TailReport {
    pub fn coeff(&self, j: usize) -> f64 {
        self.tail_coeffs[j - self.ell]
    }
}

/// Per-`i` tail coefficients, re-solving the basis at higher precision when
/// the contraction `Σ_a β_{i,a} J_{h_a, j}` cancels beyond the available bits.
pub fn tail_bias(basis: &EstimatorBasis, mean_bound: f64, j_max: usize) -> Result<Vec<TailReport>> {
    let ell = basis.ell();
    if j_max < ell {
        return Err(Error::InvalidArgument(format!("j_max={j_max} must be at least ell={ell}")));
    }
    if !(mean_bound > 0.0) {
        return Err(Error::InvalidArgument("mean bound M must be positive".into()));
    }
    let mut current = basis.clone();
    loop {
        match tail_attempt(&current, mean_bound, j_max)? {
            Some(reports) => return Ok(reports),
            None => {
                let p = current.precision_bits();
                if p >= current.max_precision {
                    return Err(Error::IllConditioned {
                        ell,
                        window: *basis.window(),
                        reason: format!("tail coefficients cancel beyond {p} bits"),
                    });
                }
                current = current.refine(next_precision(p).min(current.max_precision))?;
            }
        }
    }
}

fn tail_attempt(basis: &EstimatorBasis, mean_bound: f64, j_max: usize) -> Result<Option<Vec<TailReport>>> {
    let ell = basis.ell();
    let p = basis.precision_bits();
    let cond_bits = basis.condition_estimate().max(1.0).log2().ceil() as i64;
    let mut ev = JEvaluator::new(*basis.window(), j_max.max(ell), p + 32)?;
    let mut j_cols: Vec<Vec<MpFloat>> = Vec::with_capacity(j_max + 1 - ell);
    for j in ell..=j_max {
        j_cols.push((0..ell).map(|a| ev.j(a, j)).collect::<Result<_>>()?);
    }
    let mut reports = Vec::with_capacity(basis.len());
    for i in 0..basis.len() {
        let beta = basis.beta_mp(i);
        let mut coeffs = Vec::with_capacity(j_cols.len());
        let mut bound = 0.0;
        for (offset, col) in j_cols.iter().enumerate() {
            let mut sum = MpFloat::zero(p + 32);
            let mut abs_sum = MpFloat::zero(p + 32);
            for (b, jv) in beta.iter().zip(col) {
                if b.is_zero() || jv.is_zero() {
                    continue;
                }
                let t = b * jv;
                abs_sum = &abs_sum + &t.abs();
                sum = &sum + &t;
            }
            if !abs_sum.is_zero() {
                let loss = if sum.is_zero() { i64::MAX / 2 } else { abs_sum.top() - sum.top() };
                // keep at least 20 trustworthy bits after cancellation and conditioning
                if loss.saturating_add(cond_bits) > p as i64 - 20 {
                    return Ok(None);
                }
            }
            let value = sum.to_f64();
            bound += value.abs() * mean_bound.powi((ell + offset) as i32);
            coeffs.push(value);
        }
        reports.push(TailReport { i, ell, tail_coeffs: coeffs, bias_bound: bound, precision_bits: p });
    }
    Ok(Some(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(r: f64) -> CensorWindow {
        CensorWindow::symmetric(r).unwrap()
    }

    #[test]
    fn default_ell_policy() {
        assert_eq!(default_ell(2, 0.5), 8);
        assert_eq!(default_ell(2, 0.1), 14);
        assert_eq!(default_ell(1, 0.1), 7);
        assert_eq!(default_ell(3, 1.0), 12);
    }

    #[test]
    fn one_by_one_matrix() {
        let v = build_v(1, &sym(1.0)).unwrap();
        assert!((v.entry(0, 0) - 0.682_689_492_137_085_9).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_matrix() {
        let v = build_v(2, &sym(1.0)).unwrap();
        let rows = v.to_rows();
        assert!((rows[0][0] - 0.682_689_492_137_085_9).abs() < 1e-15);
        assert_eq!(rows[0][1], 0.0);
        assert_eq!(rows[1][0], 0.0);
        assert!((rows[1][1] - 0.198_748_043_098_799_2).abs() < 1e-15);
    }

    #[test]
    fn wide_window_is_identity() {
        let v = build_v(4, &sym(10.0)).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((v.entry(r, c) - target).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn parity_zeros_are_exact() {
        let v = build_v(7, &sym(1.5)).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                if (r + c) % 2 == 1 {
                    assert!(v.entry_mp(r, c).is_zero());
                }
            }
        }
    }

    #[test]
    fn solve_on_wide_window_gives_unit_vectors() {
        let basis = solve_basis(build_v(8, &sym(10.0)).unwrap(), 2).unwrap();
        for i in 0..4 {
            for (a, b) in basis.beta(i).iter().enumerate() {
                let target = if a == i { 1.0 } else { 0.0 };
                assert!((b - target).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn solve_inverts_diagonal() {
        let basis = solve_basis(build_v(2, &sym(1.0)).unwrap(), 1).unwrap();
        let b1 = basis.beta(1);
        assert_eq!(b1[0], 0.0);
        assert!((b1[1] - 5.031_496_081_211_185_7).abs() < 1e-13);
    }

    #[test]
    fn residual_contract_holds() {
        for (ell, r) in [(6, 1.0), (10, 2.0), (14, 1.0), (8, 0.5)] {
            let basis = solve_basis(build_v(ell, &sym(r)).unwrap(), 2).unwrap();
            for i in 0..4 {
                let scale = basis.beta(i).iter().fold(0.0f64, |m, b| m.max(b.abs()));
                assert!(basis.residual_norms()[i] <= RESIDUAL_TOL * scale);
            }
        }
    }

    #[test]
    fn precision_escalates_for_narrow_windows() {
        let basis = solve_basis(build_v(12, &sym(1.0)).unwrap(), 2).unwrap();
        assert!(basis.precision_bits() > DOUBLE_BITS);
        let cheap = solve_basis(build_v(8, &sym(3.0)).unwrap(), 2).unwrap();
        assert_eq!(cheap.precision_bits(), DOUBLE_BITS);
    }

    #[test]
    fn ell_too_small_is_rejected() {
        assert!(solve_basis(build_v(5, &sym(2.0)).unwrap(), 2).is_err());
    }

    #[test]
    fn precision_cap_reports_ill_conditioning() {
        let v = build_v(16, &sym(1.0)).unwrap();
        match solve_basis_with_limit(v, 2, EXTENDED_START_BITS) {
            Err(Error::IllConditioned { ell: 16, .. }) => {}
            other => panic!("expected ill-conditioning, got {other:?}"),
        }
    }

    #[test]
    fn singular_matrix_is_detected() {
        let w = sym(1.0);
        let entries = vec![MpFloat::from_f64(1.0, 53); 4];
        let v = BasisMatrix::from_entries(w, 2, entries).unwrap();
        assert!(v.is_singular());
        assert!(matches!(solve_basis(v, 1), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn tail_on_wide_window_vanishes() {
        let basis = solve_basis(build_v(6, &sym(10.0)).unwrap(), 2).unwrap();
        for report in tail_bias(&basis, 1.0, 12).unwrap() {
            for c in &report.tail_coeffs {
                assert!(c.abs() < 1e-7, "{c}");
            }
        }
    }

    #[test]
    fn single_term_bias_bound() {
        let basis = solve_basis(build_v(6, &sym(1.0)).unwrap(), 2).unwrap();
        for report in tail_bias(&basis, 0.9, 6).unwrap() {
            assert_eq!(report.tail_coeffs.len(), 1);
            let single = report.coeff(6).abs() * 0.9f64.powi(6);
            assert!((report.bias_bound - single).abs() <= 1e-15 * single);
        }
    }

    #[test]
    fn bias_bound_shrinks_with_ell() {
        let w = sym(1.0);
        let small = solve_basis(build_v(6, &w).unwrap(), 2).unwrap();
        let large = solve_basis(build_v(10, &w).unwrap(), 2).unwrap();
        let b6 = tail_bias(&small, 0.9, 40).unwrap();
        let b10 = tail_bias(&large, 0.9, 40).unwrap();
        for i in 1..4 {
            assert!(b10[i].bias_bound < b6[i].bias_bound, "i={i}: {} vs {}", b10[i].bias_bound, b6[i].bias_bound);
        }
    }

    #[test]
    fn tail_bias_argument_checks() {
        let basis = solve_basis(build_v(6, &sym(2.0)).unwrap(), 2).unwrap();
        assert!(tail_bias(&basis, 1.0, 5).is_err());
        assert!(tail_bias(&basis, 0.0, 8).is_err());
    }
}
