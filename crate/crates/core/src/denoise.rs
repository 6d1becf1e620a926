//! Denoised method of moments: project noisy moments onto the moment cone of
//! distributions supported on `[-M, M]`, read the atoms off as roots of the
//! Hankel determinant polynomial, and solve a Vandermonde system for weights.
//!
//! A vector `m_1 … m_{2k-1}` is feasible when, with `A = (m_{r+c})` and
//! `B = (m_{r+c+1})` (`k × k`, `m_0 = 1`), both `M·A - B` and `M·A + B` are
//! positive semidefinite.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{Frame, MomentVector};

/// Imaginary parts at or above this are reported as complex roots.
pub const IMAG_TOL: f64 = 1e-7;
/// Roots closer than this are merged.
pub const MERGE_TOL: f64 = 1e-7;
/// Determinant polynomials with a smaller leading coefficient are degenerate.
pub const LEADING_TOL: f64 = 1e-12;
/// Negative weights down to this are treated as rounding noise.
pub const NEGATIVE_WEIGHT_TOL: f64 = 1e-8;
/// Feasibility tolerance guaranteed for projected moments.
pub const PROJECTION_FEASIBILITY_TOL: f64 = 1e-9;

/// The two Hankel matrices of a moment vector.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl HankelPair {
    pub fn k(&self) -> usize {
        self.a.nrows()
    }
}

fn hankel(k: usize, entry: impl Fn(usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |r, c| entry(r + c))
}

/// `A[r][c] = m_{r+c}`, `B[r][c] = m_{r+c+1}`.
pub fn build_hankel(m: &MomentVector, k: usize) -> Result<HankelPair> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if m.order() < 2 * k - 1 {
        return Err(Error::Arity { needed: 2 * k - 1, got: m.order() });
    }
    Ok(HankelPair { a: hankel(k, |d| m.get(d)), b: hankel(k, |d| m.get(d + 1)) })
}

fn min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(s.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalues of `M·A - B` and `M·A + B`.
pub fn sandwich_margins(h: &HankelPair, mean_bound: f64) -> (f64, f64) {
    let ma = &h.a * mean_bound;
    (min_eigenvalue(&(&ma - &h.b)), min_eigenvalue(&(&ma + &h.b)))
}

/// `M·A ⪰ B ⪰ -M·A` up to `tol` on the smallest eigenvalue.
pub fn check_feasible(h: &HankelPair, mean_bound: f64, tol: f64) -> bool {
    let (lo, hi) = sandwich_margins(h, mean_bound);
    lo >= -tol && hi >= -tol
}

fn feasible_vector(m: &[f64], k: usize, mean_bound: f64, tol: f64) -> bool {
    let mv = MomentVector::standardized(m.to_vec());
    check_feasible(&build_hankel(&mv, k).expect("order checked by caller"), mean_bound, tol)
}

/// Settings for the projection solver.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub rho: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { max_iterations: 100_000, tolerance: 1e-11, rho: 1.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ProjectionReport {
    /// False when the input was already feasible and returned untouched.
    pub moved: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Fraction of the step toward an interior point needed to restore exact feasibility.
    pub interior_blend: f64,
    pub distance: f64,
}

/// Linear part of `m ↦ M·A(m) + sign·B(m)`, without the `m_0` constant.
struct SandwichMap {
    k: usize,
    mean_bound: f64,
}

impl SandwichMap {
    fn apply(&self, m: &DVector<f64>, sign: f64) -> DMatrix<f64> {
        let k = self.k;
        DMatrix::from_fn(k, k, |r, c| {
            let d = r + c;
            let a = if d >= 1 { self.mean_bound * m[d - 1] } else { 0.0 };
            a + sign * m[d]
        })
    }

    fn constant(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.k, self.k);
        c[(0, 0)] = self.mean_bound;
        c
    }

    fn adjoint(&self, z: &DMatrix<f64>, sign: f64) -> DVector<f64> {
        let k = self.k;
        let mut anti = vec![0.0; 2 * k - 1];
        for r in 0..k {
            for c in 0..k {
                anti[r + c] += z[(r, c)];
            }
        }
        DVector::from_fn(2 * k - 1, |j, _| {
            // coordinate j holds m_{j+1}
            let a = if j < 2 * k - 2 { self.mean_bound * anti[j + 1] } else { 0.0 };
            a + sign * anti[j]
        })
    }

    fn gram(&self) -> DMatrix<f64> {
        let n = 2 * self.k - 1;
        let mut g = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            let col = self.adjoint(&self.apply(&e, -1.0), -1.0) + self.adjoint(&self.apply(&e, 1.0), 1.0);
            g.set_column(j, &col);
        }
        g
    }
}

fn psd_part(s: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Moments of the uniform distribution on `[-M/2, M/2]`: strictly inside the cone.
fn interior_point(order: usize, mean_bound: f64) -> Vec<f64> {
    let h = mean_bound / 2.0;
    (1..=order).map(|j| if j % 2 == 0 { h.powi(j as i32) / (j as f64 + 1.0) } else { 0.0 }).collect()
}

/// Nearest feasible moment vector to `m̂` in Euclidean distance.
pub fn project_moments(m_hat: &MomentVector, k: usize, mean_bound: f64) -> Result<MomentVector> {
    project_moments_with(m_hat, k, mean_bound, &ProjectionOptions::default()).map(|(m, _)| m)
}

/// ADMM on the splitting `S_± = M·A(m) ± B(m)`, `S_± ⪰ 0`, followed by a
/// short blend toward an interior point so the result is feasible exactly.
pub fn project_moments_with(
    m_hat: &MomentVector,
    k: usize,
    mean_bound: f64,
    opts: &ProjectionOptions,
) -> Result<(MomentVector, ProjectionReport)> {
    if !(mean_bound > 0.0) {
        return Err(Error::InvalidArgument("mean bound M must be positive".into()));
    }
    build_hankel(m_hat, k)?;
    let order = 2 * k - 1;
    let target: Vec<f64> = m_hat.values()[..order].to_vec();
    if !target.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("moment estimates must be finite".into()));
    }
    if feasible_vector(&target, k, mean_bound, 0.0) {
        return Ok((MomentVector::new(target, m_hat.frame()), ProjectionReport::default()));
    }

    let map = SandwichMap { k, mean_bound };
    let gram = map.gram();
    let c0 = map.constant();
    let signs = [-1.0, 1.0];
    let m_hat_v = DVector::from_vec(target.clone());
    let scale = 1.0f64.max(m_hat_v.amax());
    let mut rho = opts.rho;
    let factor = |rho: f64| (DMatrix::identity(order, order) + &gram * rho).cholesky().expect("I + ρG is positive definite");
    let mut chol = factor(rho);
    let mut m = m_hat_v.clone();
    let mut s: Vec<DMatrix<f64>> = signs.iter().map(|&sg| psd_part(&(map.apply(&m, sg) + &c0))).collect();
    let mut u: Vec<DMatrix<f64>> = vec![DMatrix::zeros(k, k); 2];
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut rhs = m_hat_v.clone();
        for (i, &sg) in signs.iter().enumerate() {
            rhs += map.adjoint(&(&s[i] - &u[i] - &c0), sg) * rho;
        }
        m = chol.solve(&rhs);
        primal = 0.0;
        let mut dual_vec = DVector::zeros(order);
        for (i, &sg) in signs.iter().enumerate() {
            let lm = map.apply(&m, sg) + &c0;
            let s_new = psd_part(&(&lm + &u[i]));
            dual_vec += map.adjoint(&(&s_new - &s[i]), sg);
            let r = &lm - &s_new;
            primal += r.norm_squared();
            u[i] += r;
            s[i] = s_new;
        }
        primal = primal.sqrt();
        dual = rho * dual_vec.norm();
        if primal <= opts.tolerance * scale && dual <= opts.tolerance * scale {
            break;
        }
        if iterations % 20 == 0 {
            let new_rho = if primal > 10.0 * dual {
                rho * 2.0
            } else if dual > 10.0 * primal {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho {
                for ui in u.iter_mut() {
                    *ui *= rho / new_rho;
                }
                rho = new_rho;
                chol = factor(rho);
            }
        }
    }
    let converged = primal <= opts.tolerance * scale && dual <= opts.tolerance * scale;
    let candidate: Vec<f64> = m.iter().copied().collect();
    if !converged {
        let h = build_hankel(&MomentVector::standardized(candidate.clone()), k)?;
        let (lo, hi) = sandwich_margins(&h, mean_bound);
        return Err(Error::NonConvergence { iterations, last_iterate: candidate, infeasibility: (-lo.min(hi)).max(0.0) });
    }

    // blend toward the interior until the sandwich holds with no slack
    let interior = interior_point(order, mean_bound);
    let blend = |t: f64| -> Vec<f64> { candidate.iter().zip(&interior).map(|(c, i)| (1.0 - t) * c + t * i).collect() };
    let mut t_hi = 0.0;
    if !feasible_vector(&candidate, k, mean_bound, 0.0) {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible_vector(&blend(mid), k, mean_bound, 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        t_hi = hi;
    }
    let out = if t_hi > 0.0 { blend(t_hi) } else { candidate };
    let distance = out.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let report = ProjectionReport { moved: true, iterations, primal_residual: primal, dual_residual: dual, interior_blend: t_hi, distance };
    Ok((MomentVector::new(out, m_hat.frame()), report))
}

/// Roots of the determinant polynomial and what post-processing did to them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootReport {
    /// Sorted, clipped and merged roots; fewer than `k` after merging.
    pub means: Vec<f64>,
    /// Monomial coefficients of `P`, lowest power first.
    pub coefficients: Vec<f64>,
    pub complex_roots: usize,
    pub merged_roots: usize,
    pub clipped_roots: usize,
}

/// Monomial coefficients of `P(x) = det[[m_{r+c}]_{r<k, c<=k}; (1, x, …, x^k)]`
/// by cofactor expansion along the last row.
pub fn determinant_polynomial(m: &MomentVector, k: usize) -> Result<Vec<f64>> {
    if m.order() < 2 * k - 1 {
        return Err(Error::Arity { needed: 2 * k - 1, got: m.order() });
    }
    Ok((0..=k)
        .map(|col| {
            let minor = DMatrix::from_fn(k, k, |r, c| {
                let cc = if c < col { c } else { c + 1 };
                m.get(r + cc)
            });
            let sign = if (k + col).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect())
}

fn poly_roots(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let k = coeffs.len() - 1;
    let lead = coeffs[k];
    if k == 1 {
        return vec![(-coeffs[0] / lead, 0.0)];
    }
    let mut companion = DMatrix::zeros(k, k);
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..k {
        companion[(i, k - 1)] = -coeffs[i] / lead;
    }
    companion.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

/// Newton polish of a real root against the original polynomial.
fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..3 {
        let (mut p, mut dp) = (0.0, 0.0);
        for &c in coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        if !(step.abs() < 1e-3 * (1.0 + x.abs())) {
            break;
        }
        x -= step;
    }
    x
}

/// Atoms of the mixing distribution as roots of `P`.
pub fn find_means(m_star: &MomentVector, k: usize, mean_bound: f64) -> Result<RootReport> {
    let coefficients = determinant_polynomial(m_star, k)?;
    let leading = coefficients[k];
    if !(leading.abs() >= LEADING_TOL) {
        return Err(Error::DegenerateDeterminant { leading });
    }
    let raw = poly_roots(&coefficients);
    let complex_roots = raw.iter().filter(|(_, im)| im.abs() >= IMAG_TOL).count();
    let mut clipped_roots = 0;
    let mut roots: Vec<f64> = raw
        .iter()
        .map(|&(re, im)| {
            let x = if im.abs() < IMAG_TOL { polish(&coefficients, re) } else { re };
            if x.abs() > mean_bound {
                clipped_roots += 1;
            }
            x.clamp(-mean_bound, mean_bound)
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<(f64, usize)> = Vec::with_capacity(k);
    for x in roots {
        match merged.last_mut() {
            Some((mean, count)) if x - *mean / *count as f64 <= MERGE_TOL => {
                *mean += x;
                *count += 1;
            }
            _ => merged.push((x, 1)),
        }
    }
    let means: Vec<f64> = merged.iter().map(|(s, c)| s / *c as f64).collect();
    Ok(RootReport { merged_roots: k - means.len(), means, coefficients, complex_roots, clipped_roots })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightReport {
    pub weights: Vec<f64>,
    /// Vandermonde solution before clipping and renormalization.
    pub raw_weights: Vec<f64>,
    pub clipped: bool,
    /// Some raw weight was below `-NEGATIVE_WEIGHT_TOL`.
    pub negative_weight_warning: bool,
}

/// Solves `Σ_i w_i μ_i^j = m_j` for `j = 0..k'-1`, then clips and renormalizes.
pub fn solve_weights(means: &[f64], m_star: &MomentVector) -> Result<WeightReport> {
    let k = means.len();
    if k == 0 {
        return Err(Error::DegenerateSupport("no means to weight".into()));
    }
    if m_star.order() + 1 < k {
        return Err(Error::Arity { needed: k - 1, got: m_star.order() });
    }
    for pair in means.windows(2) {
        if (pair[1] - pair[0]).abs() < MERGE_TOL {
            return Err(Error::DegenerateSupport(format!("means {} and {} coincide", pair[0], pair[1])));
        }
    }
    let vander = DMatrix::from_fn(k, k, |j, i| means[i].powi(j as i32));
    let rhs = DVector::from_fn(k, |j, _| m_star.get(j));
    let raw = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateSupport("Vandermonde system is singular".into()))?;
    let raw_weights: Vec<f64> = raw.iter().copied().collect();
    let negative_weight_warning = raw_weights.iter().any(|w| *w < -NEGATIVE_WEIGHT_TOL);
    let clipped = raw_weights.iter().any(|w| *w < 0.0);
    let positive: Vec<f64> = raw_weights.iter().map(|w| w.max(0.0)).collect();
    let total: f64 = positive.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateSupport("all solved weights are nonpositive".into()));
    }
    let weights = positive.iter().map(|w| w / total).collect();
    Ok(WeightReport { weights, raw_weights, clipped, negative_weight_warning })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenoiseDiagnostics {
    pub projection: ProjectionReport,
    pub effective_k: usize,
    pub complex_roots: usize,
    pub merged_roots: usize,
    pub clipped_roots: usize,
    pub weights_clipped: bool,
    pub negative_weight_warning: bool,
    pub raw_weights: Vec<f64>,
    /// Smallest eigenvalue of the projected `A`; the sandwich implies it is `>= 0`.
    pub min_eigenvalue_a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenoiseResult {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub projected: MomentVector,
    pub diagnostics: DenoiseDiagnostics,
}

/// Projection, root finding and weight solve in sequence.
pub fn denoise(m_hat: &MomentVector, k: usize, mean_bound: f64) -> Result<DenoiseResult> {
    denoise_with(m_hat, k, mean_bound, &ProjectionOptions::default())
}

pub fn denoise_with(m_hat: &MomentVector, k: usize, mean_bound: f64, opts: &ProjectionOptions) -> Result<DenoiseResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if m_hat.order() < 2 * k - 1 {
        return Err(Error::Arity { needed: 2 * k - 1, got: m_hat.order() });
    }
    let (projected, projection) = project_moments_with(&m_hat.truncated(2 * k - 1), k, mean_bound, opts)?;
    let roots = find_means(&projected, k, mean_bound)?;
    let weights = solve_weights(&roots.means, &projected)?;
    let min_eigenvalue_a = min_eigenvalue(&build_hankel(&projected, k)?.a);
    Ok(DenoiseResult {
        weights: weights.weights,
        means: roots.means.clone(),
        projected: MomentVector::new(projected.values().to_vec(), Frame::Standardized),
        diagnostics: DenoiseDiagnostics {
            projection,
            effective_k: roots.means.len(),
            complex_roots: roots.complex_roots,
            merged_roots: roots.merged_roots,
            clipped_roots: roots.clipped_roots,
            weights_clipped: weights.clipped,
            negative_weight_warning: weights.negative_weight_warning,
            raw_weights: weights.raw_weights,
            min_eigenvalue_a,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(v: &[f64]) -> MomentVector {
        MomentVector::standardized(v.to_vec())
    }

    fn moments(w: &[f64], mu: &[f64], order: usize) -> MomentVector {
        mv(&(1..=order).map(|j| w.iter().zip(mu).map(|(w, m)| w * m.powi(j as i32)).sum()).collect::<Vec<_>>())
    }

    #[test]
    fn hankel_examples() {
        let h = build_hankel(&mv(&[0.0, 1.0, 0.0]), 2).unwrap();
        assert_eq!(h.a, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(h.b, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let h = build_hankel(&mv(&[0.4]), 1).unwrap();
        assert_eq!((h.a[(0, 0)], h.b[(0, 0)]), (1.0, 0.4));
        let h = build_hankel(&mv(&[1.0, 2.0, 3.0, 4.0, 5.0]), 3).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(h.a[(r, c)], if r + c == 0 { 1.0 } else { (r + c) as f64 });
                assert_eq!(h.b[(r, c)], (r + c + 1) as f64);
            }
        }
        assert!(matches!(build_hankel(&mv(&[1.0, 2.0]), 2), Err(Error::Arity { needed: 3, got: 2 })));
    }

    #[test]
    fn feasibility_examples() {
        let h = build_hankel(&mv(&[0.0, 1.0, 0.0]), 2).unwrap();
        assert!(check_feasible(&h, 2.0, 0.0));
        assert!(!check_feasible(&h, 0.5, 0.0));
        for c in [-1.0, 0.3, 1.0] {
            assert!(check_feasible(&build_hankel(&mv(&[c]), 1).unwrap(), 1.0, 0.0));
        }
        assert!(!check_feasible(&build_hankel(&mv(&[1.2]), 1).unwrap(), 1.0, 0.0));
    }

    #[test]
    fn projection_keeps_feasible_points() {
        let m = mv(&[0.0, 1.0, 0.0]);
        assert_eq!(project_moments(&m, 2, 2.0).unwrap(), m);
    }

    #[test]
    fn projection_repairs_negative_variance() {
        let p = project_moments(&mv(&[0.0, -1.0, 0.0]), 2, 2.0).unwrap();
        assert!(p.get(2) >= -1e-9);
        assert!(check_feasible(&build_hankel(&p, 2).unwrap(), 2.0, PROJECTION_FEASIBILITY_TOL));
    }

    #[test]
    fn scalar_projection_is_a_clamp() {
        for m in [1.0, 2.5] {
            let p = project_moments(&mv(&[m + 0.5]), 1, m).unwrap();
            assert!((p.get(1) - m).abs() < 1e-9, "{}", p.get(1));
            let p = project_moments(&mv(&[-m - 3.0]), 1, m).unwrap();
            assert!((p.get(1) + m).abs() < 1e-9);
        }
    }

    #[test]
    fn determinant_polynomial_examples() {
        let c = determinant_polynomial(&mv(&[0.0, 1.0, 0.0]), 2).unwrap();
        assert_eq!(c, vec![-1.0, 0.0, 1.0]);
        let c = determinant_polynomial(&mv(&[0.3]), 1).unwrap();
        assert!((c[0] + 0.3).abs() < 1e-15 && c[1] == 1.0);
    }

    #[test]
    fn root_examples() {
        assert_eq!(find_means(&mv(&[0.0, 1.0, 0.0]), 2, 2.0).unwrap().means, vec![-1.0, 1.0]);
        assert!((find_means(&mv(&[0.3]), 1, 1.0).unwrap().means[0] - 0.3).abs() < 1e-15);
        let r = find_means(&moments(&[0.3, 0.7], &[-2.0, 1.0], 3), 2, 3.0).unwrap();
        assert!((r.means[0] + 2.0).abs() < 1e-8 && (r.means[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_determinant() {
        // a single atom at 0.5 seen with k = 2: A is singular
        let m = moments(&[1.0], &[0.5], 3);
        assert!(matches!(find_means(&m, 2, 1.0), Err(Error::DegenerateDeterminant { .. })));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(solve_weights(&[0.4], &mv(&[0.4])).unwrap().weights, vec![1.0]);
        let w = solve_weights(&[-1.0, 1.0], &mv(&[0.0, 1.0, 0.0])).unwrap().weights;
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        let w = solve_weights(&[-2.0, 1.0], &mv(&[0.1, 1.0, 1.0])).unwrap().weights;
        assert!((w[0] - 0.3).abs() < 1e-14 && (w[1] - 0.7).abs() < 1e-14);
        assert!(matches!(solve_weights(&[0.5, 0.5], &mv(&[0.5, 0.25, 0.1])), Err(Error::DegenerateSupport(_))));
    }

    #[test]
    fn negative_weights_are_clipped() {
        let r = solve_weights(&[-1.0, 1.0], &mv(&[1.2])).unwrap();
        assert!(r.clipped && r.negative_weight_warning);
        assert_eq!(r.weights, vec![0.0, 1.0]);
    }

    #[test]
    fn denoise_examples() {
        let r = denoise(&moments(&[0.5, 0.5], &[-1.0, 1.0], 3), 2, 2.0).unwrap();
        for (got, want) in r.weights.iter().zip([0.5, 0.5]) {
            assert!((got - want).abs() < 1e-8);
        }
        for (got, want) in r.means.iter().zip([-1.0, 1.0]) {
            assert!((got - want).abs() < 1e-8);
        }
        let r = denoise(&mv(&[0.3]), 1, 1.0).unwrap();
        assert_eq!(r.weights, vec![1.0]);
        assert!((r.means[0] - 0.3).abs() < 1e-15);
        let r = denoise(&moments(&[0.3, 0.7], &[-2.0, 1.0], 3), 2, 3.0).unwrap();
        assert!((r.weights[0] - 0.3).abs() < 1e-8 && (r.means[0] + 2.0).abs() < 1e-8);
        assert!(r.diagnostics.min_eigenvalue_a >= 0.0);
    }

    #[test]
    fn denoise_recovers_three_components() {
        let r = denoise(&moments(&[0.2, 0.3, 0.5], &[-1.5, 0.0, 1.2], 5), 3, 3.0).unwrap();
        for (got, want) in r.means.iter().zip([-1.5, 0.0, 1.2]) {
            assert!((got - want).abs() < 1e-6);
        }
        for (got, want) in r.weights.iter().zip([0.2, 0.3, 0.5]) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn noisy_moments_project_then_recover() {
        let mut m = moments(&[0.5, 0.5], &[-1.0, 1.0], 3).values().to_vec();
        m[1] += 0.3;
        let r = denoise(&mv(&m), 2, 1.0).unwrap();
        assert!(r.diagnostics.projection.moved);
        assert!(check_feasible(&build_hankel(&r.projected, 2).unwrap(), 1.0, PROJECTION_FEASIBILITY_TOL));
        assert_eq!(r.means.len(), r.weights.len());
    }

    #[test]
    fn iteration_budget_is_reported() {
        let opts = ProjectionOptions { max_iterations: 1, ..Default::default() };
        match project_moments_with(&mv(&[0.0, -1.0, 0.5]), 2, 2.0, &opts) {
            Err(Error::NonConvergence { iterations: 1, last_iterate, .. }) => assert_eq!(last_iterate.len(), 3),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
