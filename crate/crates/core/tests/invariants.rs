//! Cross-checks between independent routes to the same quantity.

use censored_gmm::basis::{build_v, solve_basis};
use censored_gmm::denoise::{build_hankel, check_feasible, denoise, project_moments};
use censored_gmm::estimator::{estimate_moment, estimate_moments, oracle_moment, oracle_moments, MomentVector};
use censored_gmm::experiment::{exact_estimator_variance, match_parameters, quadrature_j, reference_model};
use censored_gmm::hermite::{compute_j, hermite_coefficients, CensorWindow};
use censored_gmm::model::{alpha_mass, exact_censored_expectation, mixing_moments, sample, MixtureModel};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sym(r: f64) -> CensorWindow {
    CensorWindow::symmetric(r).unwrap()
}

/// Laplace expansion along the first row.
fn laplace_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<f64>> = m[1..].iter().map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect()).collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][c] * laplace_det(&minor)
        })
        .sum()
}

#[test]
fn cramer_rule_matches_factorized_solve() {
    for (ell, window) in [(2, sym(1.0)), (4, sym(2.0)), (6, sym(1.5)), (6, CensorWindow::new(-1.0, 2.0).unwrap())] {
        let v = build_v(ell, &window).unwrap();
        let rows = v.to_rows();
        let det = laplace_det(&rows);
        let det_lu = v.determinant().to_f64();
        assert!((det - det_lu).abs() <= 1e-8 * det.abs(), "ell={ell}: {det} vs {det_lu}");
        let basis = solve_basis(v, (ell / 2).div_ceil(2)).unwrap();
        for i in 0..basis.len() {
            let beta = basis.beta(i);
            for a in 0..ell {
                let mut replaced = rows.clone();
                for (r, row) in replaced.iter_mut().enumerate() {
                    row[a] = if r == i { 1.0 } else { 0.0 };
                }
                let cramer = laplace_det(&replaced) / det;
                let scale = beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
                assert!((cramer - beta[a]).abs() <= 1e-8 * scale, "ell={ell} i={i} a={a}: {cramer} vs {}", beta[a]);
            }
        }
    }
}

#[test]
fn j_agrees_with_quadrature_on_asymmetric_windows() {
    for w in [CensorWindow::new(-1.0, 2.0).unwrap(), CensorWindow::new(0.25, 3.0).unwrap(), CensorWindow::new(-4.0, -0.5).unwrap()] {
        for c in 0..=8 {
            for r in 0..=8 {
                let closed = compute_j(c, r, &w).unwrap();
                let quad = quadrature_j(c, r, &w, 1e-13);
                assert!((closed - quad).abs() <= 1e-9 * quad.abs().max(1e-3), "{w} c={c} r={r}: {closed} vs {quad}");
            }
        }
    }
}

#[test]
fn j_vanishes_for_odd_index_sum_on_symmetric_windows() {
    for r_half in [0.3, 1.0, 2.5] {
        for c in 0..=15 {
            for r in (0..=15).filter(|r| (r + c) % 2 == 1) {
                assert_eq!(compute_j(c, r, &sym(r_half)).unwrap(), 0.0);
            }
        }
    }
}

#[test]
fn hermite_three_term_recurrence() {
    for n in 1..40 {
        let next = hermite_coefficients(n + 1).unwrap();
        let cur = hermite_coefficients(n).unwrap();
        let prev = hermite_coefficients(n - 1).unwrap();
        for p in 0..=n + 1 {
            let shifted = if p == 0 { BigInt::from(0) } else { cur.coeffs().get(p - 1).cloned().unwrap_or_default() };
            let back = prev.coeffs().get(p).cloned().unwrap_or_default() * BigInt::from(n);
            assert_eq!(next.coeffs()[p], shifted - back, "n={n} power {p}");
        }
    }
}

#[test]
fn censored_expectation_matches_moment_expansion() {
    let model = MixtureModel::new(vec![0.25, 0.35, 0.4], vec![-0.8, 0.1, 0.9], 1.0, 1.0).unwrap();
    let w = sym(1.0);
    let m = mixing_moments(&model, 60);
    for c in 0..=8 {
        let p = hermite_coefficients(c).unwrap();
        let exact = exact_censored_expectation(&model, &w, &p).unwrap();
        let series: f64 = (0..=60).map(|j| compute_j(c, j, &w).unwrap() * m.get(j)).sum();
        assert!((exact - series).abs() <= 1e-10, "c={c}: {exact} vs {series}");
    }
}

#[test]
fn estimator_is_unbiased_for_its_oracle() {
    let model = reference_model();
    let w = sym(1.0);
    let basis = solve_basis(build_v(6, &w).unwrap(), model.k()).unwrap();
    let n = 100_000;
    let seeds = 200;
    for i in 1..2 * model.k() {
        let target = oracle_moment(&model, &basis, i).unwrap();
        let mean = (0..seeds).map(|s| estimate_moment(&sample(&model, &w, n, 1000 + s).unwrap(), &basis, i).unwrap()).sum::<f64>()
            / seeds as f64;
        let se = (exact_estimator_variance(&model, &w, 6, i, n).unwrap() / seeds as f64).sqrt();
        assert!((mean - target).abs() <= 4.0 * se, "i={i}: mean {mean} oracle {target} se {se}");
    }
}

#[test]
fn estimator_is_linear_in_the_sample() {
    let model = reference_model();
    let w = sym(1.0);
    let basis = solve_basis(build_v(6, &w).unwrap(), model.k()).unwrap();
    let a = sample(&model, &w, 3000, 1).unwrap();
    let b = sample(&model, &w, 7000, 2).unwrap();
    let joined = estimate_moments(&a.concat(&b).unwrap(), &basis).unwrap();
    let (ea, eb) = (estimate_moments(&a, &basis).unwrap(), estimate_moments(&b, &basis).unwrap());
    for i in 1..2 * model.k() {
        let mixed = 0.3 * ea.get(i) + 0.7 * eb.get(i);
        assert!((joined.get(i) - mixed).abs() <= 1e-12 * mixed.abs().max(1.0), "i={i}");
    }
}

#[test]
fn observed_mass_grows_with_the_window() {
    let model = reference_model();
    let mut last = 0.0;
    for r in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let alpha = alpha_mass(&model, &sym(r)).unwrap();
        assert!(alpha > last && alpha <= 1.0, "R={r}: {alpha}");
        last = alpha;
    }
}

#[test]
fn basis_coefficients_stay_finite() {
    for ell in 2..=14 {
        let basis = solve_basis(build_v(ell, &sym(1.0)).unwrap(), 1).unwrap();
        let size = basis.max_abs_beta();
        println!("ell={ell}: max |beta| = {size:.3e} at {} bits", basis.precision_bits());
        assert!(size.is_finite() && size > 0.0);
    }
}

fn random_mixture(rng: &mut ChaCha8Rng, k: usize, mean_bound: f64) -> MixtureModel {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let means = (0..k).map(|_| rng.random_range(-mean_bound..mean_bound)).collect();
    MixtureModel::new(raw.iter().map(|w| w / total).collect(), means, 1.0, mean_bound).unwrap()
}

#[test]
fn true_moments_are_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 1..=4 {
        for _ in 0..25 {
            let model = random_mixture(&mut rng, k, 2.0);
            let h = build_hankel(&mixing_moments(&model, 2 * k - 1), k).unwrap();
            assert!(check_feasible(&h, 2.0, 1e-10), "{model:?}");
        }
    }
}

#[test]
fn projection_is_nearest_and_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 1..=3 {
        let order = 2 * k - 1;
        let candidates: Vec<MomentVector> = (0..60).map(|_| mixing_moments(&random_mixture(&mut rng, k, 1.5), order)).collect();
        for trial in 0..10 {
            let base = mixing_moments(&random_mixture(&mut rng, k, 1.5), order);
            let noisy = MomentVector::standardized(base.values().iter().map(|v| v + rng.random_range(-0.5..0.5)).collect());
            let projected = project_moments(&noisy, k, 1.5).unwrap();
            let h = build_hankel(&projected, k).unwrap();
            assert!(check_feasible(&h, 1.5, 1e-9), "k={k} trial={trial}");
            let d = noisy.distance(&projected);
            for c in &candidates {
                assert!(d <= noisy.distance(c) + 1e-6, "k={k} trial={trial}: {d} > {}", noisy.distance(c));
            }
            let again = project_moments(&projected, k, 1.5).unwrap();
            assert!(again.distance(&projected) <= 1e-9, "k={k} trial={trial}");
        }
    }
}

#[test]
fn small_moment_noise_moves_means_a_little() {
    let model = MixtureModel::new(vec![0.3, 0.7], vec![-2.0, 1.0], 1.0, 3.0).unwrap();
    let truth = mixing_moments(&model, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let noisy = MomentVector::standardized(truth.values().iter().map(|v| v + rng.random_range(-1e-4..1e-4)).collect());
        let r = denoise(&noisy, 2, 3.0).unwrap();
        let m = match_parameters(&r.weights, &r.means, model.weights(), model.means()).unwrap();
        assert!(m.max_mean_err <= 1e-2 && m.max_weight_err <= 1e-2, "{m:?}");
    }
}

#[test]
fn oracle_moments_approach_truth_on_wide_windows() {
    let model = reference_model();
    let basis = solve_basis(build_v(12, &sym(6.0)).unwrap(), model.k()).unwrap();
    let oracle = oracle_moments(&model, &basis).unwrap();
    let truth = mixing_moments(&model, 2 * model.k() - 1);
    for i in 1..2 * model.k() {
        assert!((oracle.get(i) - truth.get(i)).abs() <= 1e-6, "i={i}: {} vs {}", oracle.get(i), truth.get(i));
    }
}
