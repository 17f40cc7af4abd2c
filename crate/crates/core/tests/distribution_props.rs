//! Statistical properties of the perturbation distribution: sample moments
//! against closed-form targets, density normalization against quadrature,
//! exact-law agreement in the special cases with a classical counterpart,
//! and support geometry of the samplers.

mod common;

use qgsf_core::qgaussian::QGaussianSpec;
use qgsf_core::stats::RunningMoments;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_within_5_se(label: &str, moments: &RunningMoments, target: f64) {
    let se = moments.standard_error();
    let gap = (moments.mean() - target).abs();
    assert!(
        gap <= 5.0 * se,
        "{label}: mean {} vs target {target} is {:.1} standard errors away",
        moments.mean(),
        gap / se
    );
}

/// All five closed-form moment identities plus the odd-moment annihilation,
/// for one (N, q) pair, from `samples` Monte Carlo draws.
fn check_moment_identities(dim: usize, q: f64, samples: usize, seed: u64) {
    let spec = QGaussianSpec::new(dim, q, 0.1).unwrap();
    let targets = spec.moment_identity_targets().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut inv_rho = RunningMoments::new();
    let mut sq_over_rho = RunningMoments::new();
    let mut sq_over_rho_sq = RunningMoments::new();
    let mut quart_over_rho_sq = RunningMoments::new();
    let mut cross_over_rho_sq = RunningMoments::new();
    let mut odd_single = RunningMoments::new();
    let mut odd_pair = RunningMoments::new();

    for _ in 0..samples {
        let p = spec.sample(&mut rng);
        let rho = p.rho;
        let e0 = p.eta[0];
        inv_rho.push(1.0 / rho);
        sq_over_rho.push(e0 * e0 / rho);
        sq_over_rho_sq.push(e0 * e0 / (rho * rho));
        quart_over_rho_sq.push(e0 * e0 * e0 * e0 / (rho * rho));
        odd_single.push(e0 / rho);
        if dim >= 2 {
            let e1 = p.eta[1];
            cross_over_rho_sq.push(e0 * e0 * e1 * e1 / (rho * rho));
            odd_pair.push(e0 * e1 / rho);
        }
    }

    let label = format!("N={dim} q={q}");
    assert_within_5_se(&format!("{label} E[1/rho]"), &inv_rho, targets.inv_rho);
    assert_within_5_se(
        &format!("{label} E[eta^2/rho]"),
        &sq_over_rho,
        targets.inv_rho,
    );
    assert_within_5_se(
        &format!("{label} E[eta^2/rho^2]"),
        &sq_over_rho_sq,
        targets.coord_sq_over_rho_sq,
    );
    assert_within_5_se(
        &format!("{label} E[eta^4/rho^2]"),
        &quart_over_rho_sq,
        targets.coord_quartic_over_rho_sq,
    );
    assert_within_5_se(&format!("{label} E[eta/rho]"), &odd_single, 0.0);
    if dim >= 2 {
        assert_within_5_se(
            &format!("{label} E[eta_i^2 eta_j^2/rho^2]"),
            &cross_over_rho_sq,
            targets.cross_sq_over_rho_sq,
        );
        assert_within_5_se(&format!("{label} E[eta_i eta_j/rho]"), &odd_pair, 0.0);
    }
}

#[test]
fn moment_identities_hold_across_the_admissible_grid() {
    // The rho^-2 statistics have heavy tails for small q (their variance is
    // infinite below q = 2/3), so the sample size matters: at 10^6 draws the
    // empirical standard error widens along with any captured outliers and
    // the 5 SE criterion is comfortably stable across seeds.
    let mut seed = 1000;
    for dim in [1usize, 3, 5, 20] {
        for q in [0.3, 0.6, 1.0, 1.05, 1.2] {
            let limit = 1.0 + 2.0 / dim as f64;
            if q >= limit {
                continue;
            }
            seed += 1;
            check_moment_identities(dim, q, 1_000_000, seed);
        }
    }
}

#[test]
fn moment_targets_agree_with_independent_quadrature() {
    // The closed forms behind `moment_identity_targets`, re-derived by
    // numerical integration of the density rather than sampling.
    for (dim, q) in [(1usize, 0.5), (2, 0.5), (1, 1.5), (3, 1.05)] {
        let spec = QGaussianSpec::new(dim, q, 0.1).unwrap();
        let targets = spec.moment_identity_targets().unwrap();
        let law = common::RadialLaw { dim, q };
        assert!((law.coordinate_moment(0, 0, 1) - targets.inv_rho).abs() < 1e-6);
        assert!((law.coordinate_moment(1, 0, 1) - targets.inv_rho).abs() < 1e-6);
        assert!((law.coordinate_moment(1, 0, 2) - targets.coord_sq_over_rho_sq).abs() < 1e-6);
        assert!((law.coordinate_moment(2, 0, 2) - targets.coord_quartic_over_rho_sq).abs() < 1e-6);
        if dim >= 2 {
            assert!((law.coordinate_moment(1, 1, 2) - targets.cross_sq_over_rho_sq).abs() < 1e-6);
        }
    }
}

#[test]
fn density_integrates_to_one() {
    for dim in [1usize, 2] {
        for q in [0.25, 0.5, 1.0, 1.5] {
            let spec = QGaussianSpec::new(dim, q, 0.1).unwrap();
            let shell = common::surface_area(dim);
            let radial = |r: f64| {
                let mut x = vec![0.0; dim];
                x[0] = r;
                spec.density(&x) * shell * r.powi(dim as i32 - 1)
            };
            let total = match spec.support_radius() {
                Some(radius) => common::integrate(radial, 0.0, radius),
                None => common::integrate_half_line(radial),
            };
            assert!(
                (total - 1.0).abs() < 1e-6,
                "N={dim} q={q}: density integrates to {total}"
            );
        }
    }
}

#[test]
fn density_matches_quadrature_normalizer_off_axis() {
    // Cross-check the full density (not just its integral): compare against
    // the oracle's unnormalized shape divided by the oracle's quadrature
    // normalizer at a few points.
    for (dim, q) in [(1usize, 0.5), (2, 1.5), (2, 0.25), (3, 1.0)] {
        let spec = QGaussianSpec::new(dim, q, 0.1).unwrap();
        let law = common::RadialLaw { dim, q };
        let k = law.norm_quadrature();
        for r in [0.0, 0.3, 0.9, 1.4] {
            let mut x = vec![0.0; dim];
            x[0] = r;
            let expected = law.unnorm(r) / k;
            let got = spec.density(&x);
            assert!(
                (got - expected).abs() <= 1e-9 * (1.0 + expected),
                "N={dim} q={q} r={r}: density {got} vs quadrature {expected}"
            );
        }
    }
}

#[test]
fn cauchy_special_case_matches_exactly_in_distribution() {
    // N = 1, q = 2 is the standard Cauchy law.
    let spec = QGaussianSpec::new(1, 2.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut draws: Vec<f64> = Vec::with_capacity(1_000_000);
    for _ in 0..1_000_000 {
        draws.push(spec.sample(&mut rng).eta[0]);
    }
    let ks = common::ks_statistic(&mut draws, common::cauchy_cdf);
    assert!(ks < 0.002, "KS distance to Cauchy: {ks}");
}

#[test]
fn gaussian_special_case_matches_exactly_in_distribution() {
    let spec = QGaussianSpec::new(1, 1.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut draws: Vec<f64> = Vec::with_capacity(1_000_000);
    for _ in 0..1_000_000 {
        draws.push(spec.sample(&mut rng).eta[0]);
    }
    let ks = common::ks_statistic(&mut draws, common::normal_cdf);
    assert!(ks < 0.002, "KS distance to standard normal: {ks}");
}

#[test]
fn compact_support_samples_never_escape() {
    let spec = QGaussianSpec::new(3, 0.5, 0.1).unwrap();
    let radius_sq = spec.scale_factor() / (1.0 - spec.q());
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1_000_000 {
        let p = spec.sample(&mut rng);
        let norm_sq: f64 = p.eta.iter().map(|e| e * e).sum();
        assert!(norm_sq < radius_sq);
        assert!(p.rho > 0.0);
    }
}

#[test]
fn cached_rho_matches_recomputation_in_both_regimes() {
    for q in [0.3, 0.9, 1.05, 1.8] {
        let spec = QGaussianSpec::new(2, q, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let p = spec.sample(&mut rng);
            let recomputed = spec.rho(&p.eta);
            assert!(
                (recomputed - p.rho).abs() <= 1e-15 * (1.0 + p.rho.abs()),
                "q={q}: cached {} vs recomputed {recomputed}",
                p.rho
            );
        }
    }
}

#[test]
fn extreme_admissible_q_still_samples_cleanly() {
    // Near the admissibility boundary the Student degrees of freedom get
    // small and the tails very heavy; draws must still be finite with
    // consistent rho.
    let spec = QGaussianSpec::new(4, 1.49, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..50_000 {
        let p = spec.sample(&mut rng);
        assert!(p.eta.iter().all(|e| e.is_finite()));
        assert!(p.rho.is_finite() && p.rho >= 1.0);
    }
    // Strongly negative q (flat, compactly supported) is admissible too.
    let flat = QGaussianSpec::new(2, -3.0, 0.1).unwrap();
    for _ in 0..50_000 {
        let p = flat.sample(&mut rng);
        assert!(flat.support_contains(&p.eta));
        assert!(p.rho > 0.0);
    }
}
