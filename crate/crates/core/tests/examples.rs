//! Worked examples for the estimators and the canary simulators, checked
//! against closed-form oracles.

use histaudit::canary::{
    one_shot_audit, one_shot_release, one_shot_score_samples, one_shot_scores, sample_sphere,
    whitebox_runs, whitebox_stream, OneShotConfig, Simulation, WhiteBoxConfig,
};
use histaudit::estimators::{
    exposure, f_alpha_sensitivity, fit_mu_gdp, invert_monotone, threshold_epsilon, AuditConfig,
    Method,
};
use histaudit::histogram::{auto_spec, build_histograms, BinningMode};
use histaudit::mechanisms::{
    gaussian_delta, subsampled_gaussian_composed_profile, subsampled_gaussian_profile,
    GaussianMech, SubsampledGaussianMech,
};
use histaudit::pld::{compose_profile, PldGridSpec};
use histaudit::profile::{EpsEstimate, PrivacyProfile};
use histaudit::sampling::{rng_from_seed, sample_pair};
use histaudit::tradeoff::{profile_to_tradeoff, sup_distance};
use histaudit::{histogram_audit, AuditError, ErrorKind};

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

fn finite(e: EpsEstimate) -> f64 {
    e.value().expect("finite epsilon")
}

#[test]
fn gaussian_audit_matches_analytic_inverse() {
    let mech = GaussianMech::new(1.0, 1.0).unwrap();
    let analytic = invert_monotone(|e| gaussian_delta(&mech, e), 0.05, (0.0, 10.0)).unwrap();
    let (p, q) = sample_pair(&mech.pair(), 100_000, 21).unwrap();
    let cfg = AuditConfig {
        delta_targets: vec![0.05],
        ..AuditConfig::default()
    };
    let r = histogram_audit(&p, &q, &cfg).unwrap();
    let e = r.eps_lookup(0.05).unwrap();
    assert!(
        (finite(e.point) - analytic).abs() <= 0.15,
        "{:?} vs {analytic}",
        e.point
    );
    assert!(finite(e.lower) <= finite(e.point));
    assert_eq!(r.method, Method::Histogram);
}

#[test]
fn mixture_tradeoff_is_recovered() {
    let mech = SubsampledGaussianMech::new(0.25, 0.3).unwrap();
    let eps = linspace(0.0, 12.0, 1201);
    let reference = profile_to_tradeoff(
        &subsampled_gaussian_profile(&mech, &eps).unwrap(),
        1e-3,
        200,
    )
    .unwrap();
    let (p, q) = sample_pair(&mech.pair(), 100_000, 22).unwrap();
    let r = histogram_audit(&p, &q, &AuditConfig::default()).unwrap();
    let d = sup_distance(&r.tradeoff_estimate, &reference, (0.01, 0.99));
    assert!(d <= 0.05, "sup distance {d}");
}

#[test]
fn threshold_formula_examples() {
    let p: Vec<f64> = (0..10).map(|i| i as f64).collect();
    assert_eq!(
        threshold_epsilon(&p, &p, 4.5, 0.0).unwrap(),
        EpsEstimate::Finite(0.0)
    );
    // Scores below the threshold are flagged: TPR 0.6, FPR 0.2.
    let p = [0.0, 0.0, 0.0, 1.0, 1.0];
    let q = [0.0, 1.0, 1.0, 1.0, 1.0];
    let e = finite(threshold_epsilon(&p, &q, 0.5, 0.0).unwrap());
    assert!((e - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn exposure_examples() {
    let refs: Vec<f64> = (0..16).map(|i| i as f64).collect();
    assert_eq!(exposure(&[100.0], &refs).unwrap(), vec![0.0]);
    let refs8: Vec<f64> = (1..=8).map(|i| i as f64).collect();
    assert!((exposure(&[0.0], &refs8).unwrap()[0] - 3.0).abs() < 1e-12);
    let e = exposure(&[3.5, 3.5], &refs8).unwrap();
    assert_eq!(e[0], e[1]);
}

#[test]
fn invert_monotone_examples() {
    let target = 0.38292;
    let sigma = invert_monotone(
        |s| gaussian_delta(&GaussianMech::new(s, 1.0).unwrap(), 0.0),
        target,
        (0.1, 10.0),
    )
    .unwrap();
    assert!((sigma - 1.0).abs() < 1e-4, "{sigma}");
    assert!((invert_monotone(|x| x, 0.5, (0.0, 1.0)).unwrap() - 0.5).abs() < 1e-10);
    let s = invert_monotone(
        |s| {
            SubsampledGaussianMech::new(0.25, s)
                .unwrap()
                .tv_quadrature()
        },
        0.2256,
        (0.05, 5.0),
    )
    .unwrap();
    assert!((s - 0.302).abs() < 0.003, "{s}");
}

#[test]
fn gdp_fit_is_scale_consistent() {
    let eps = linspace(0.0, 8.0, 801);
    for sigma in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let profile = PrivacyProfile::Gaussian(GaussianMech::new(sigma, 1.0).unwrap());
        let mu = fit_mu_gdp(&profile, (0.0, 8.0)).unwrap();
        assert!((mu * sigma - 1.0).abs() < 1e-3, "sigma={sigma} mu={mu}");
        let tab = profile.tabulate(&eps).unwrap();
        let mu_tab = fit_mu_gdp(&PrivacyProfile::Tabulated(tab), (0.0, 8.0)).unwrap();
        assert!(
            (mu_tab * sigma - 1.0).abs() < 2e-3,
            "sigma={sigma} mu={mu_tab}"
        );
    }
    let wide = PrivacyProfile::Gaussian(GaussianMech::new(2.0, 1.0).unwrap());
    assert!((fit_mu_gdp(&wide, (0.0, 1.0)).unwrap() - 0.5).abs() < 1e-2);
}

#[test]
fn increasing_profiles_are_rejected_as_fit_errors() {
    use histaudit::profile::TabulatedProfile;
    let err = TabulatedProfile::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.2, 0.3]).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Fit);
}

#[test]
fn sensitivity_matches_finite_difference() {
    let h = 1e-5;
    for sigma in [0.5, 1.0, 3.0] {
        for alpha in [0.5f64, 1.0, 1.5, 4.0] {
            let f = |s: f64| gaussian_delta(&GaussianMech::new(s, 1.0).unwrap(), alpha.ln());
            let fd = (f(sigma + h) - f(sigma - h)) / (2.0 * h);
            assert!((f_alpha_sensitivity(sigma, alpha) - fd).abs() < 1e-6);
        }
    }
    assert!(f_alpha_sensitivity(2.0, 1.0) < 0.0);
}

#[test]
fn sphere_samples_are_unit_and_nearly_orthogonal() {
    let mut rng = rng_from_seed(3);
    let d1 = sample_sphere(1, 50, &mut rng).unwrap();
    assert!(d1.iter().all(|v| v[0].abs() == 1.0));
    let bound = 6.0 * ((100f64).ln() / 1e5).sqrt();
    for seed in 0..5 {
        let v = sample_sphere(100_000, 100, &mut rng_from_seed(seed)).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..v.len() {
            let n: f64 = v[i].iter().map(|x| x * x).sum();
            assert!((n.sqrt() - 1.0).abs() < 1e-12);
            for j in 0..i {
                let c: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
                worst = worst.max(c.abs());
            }
        }
        assert!(worst <= bound, "seed {seed}: {worst} > {bound}");
    }
    assert!(sample_sphere(0, 1, &mut rng).is_err());
}

#[test]
fn release_noise_has_chi_square_mean() {
    let d = 4096;
    let mut total = 0.0;
    let runs = 20;
    for seed in 0..runs {
        let cfg = OneShotConfig::new(d, 3, 0.5, 0.0, seed).unwrap();
        let rel = one_shot_release(&cfg).unwrap();
        let mut z = rel.theta.clone();
        for c in &rel.train {
            z.iter_mut().zip(c).for_each(|(t, v)| *t -= v);
        }
        total += z.iter().map(|x| x * x).sum::<f64>();
    }
    let m = total / runs as f64;
    let expect = d as f64 * 0.25;
    // Var of ‖Z‖² is 2dσ⁴.
    let sd = (2.0 * d as f64).sqrt() * 0.25 / (runs as f64).sqrt();
    assert!((m - expect).abs() < 3.0 * sd, "{m} vs {expect}");
    assert_eq!(
        OneShotConfig::new(8, 0, 1.0, 0.0, 1).unwrap_err().kind(),
        ErrorKind::Config
    );
}

#[test]
fn scores_of_exact_and_orthogonal_canaries() {
    let x = vec![vec![0.6, 0.8, 0.0]];
    let orth = vec![vec![0.0, 0.0, 1.0]];
    let (p, q) = one_shot_scores(&x[0], &x, &orth).unwrap();
    assert!((p[0] - 1.0).abs() < 1e-15);
    assert_eq!(q[0], 0.0);
    assert!(matches!(
        one_shot_scores(&[1.0, 0.0], &x, &orth),
        Err(AuditError::DimensionMismatch { .. })
    ));
}

#[test]
fn high_dimensional_scores_center_on_zero_and_one() {
    let cfg = OneShotConfig::new(1 << 20, 50, 1.0, 0.0, 4).unwrap();
    let (p, q) = one_shot_score_samples(&cfg).unwrap();
    assert!((mean(&p) - 1.0).abs() < 0.1 * 3.0, "{}", mean(&p));
    assert!(mean(&q).abs() < 0.1 * 3.0, "{}", mean(&q));
    let cfg = OneShotConfig::new(1 << 20, 2000, 1.0, 0.0, 4).unwrap();
    let (p, q) = one_shot_score_samples(&cfg).unwrap();
    assert!((mean(&p) - 1.0).abs() < 0.1);
    assert!(mean(&q).abs() < 0.1);
}

#[test]
fn one_shot_audit_examples() {
    let oracle = gaussian_delta(&GaussianMech::new(1.0, 1.0).unwrap(), 1.0);
    let cfg = OneShotConfig::new(1 << 20, 2000, 1.0, 0.0, 9).unwrap();
    let a = one_shot_audit(&cfg, &AuditConfig::default()).unwrap();
    assert!((a.profile.delta_at(1.0) - oracle).abs() <= 0.05);
    assert_eq!(a.method, Method::OneShot);
    let b = one_shot_audit(&cfg, &AuditConfig::default()).unwrap();
    assert_eq!(a.to_json(), b.to_json());

    let noisy = OneShotConfig::new(1 << 16, 2000, 100.0, 0.0, 9).unwrap();
    let r = one_shot_audit(&noisy, &AuditConfig::default()).unwrap();
    let e = r.eps_lookup(0.05).unwrap().point;
    assert!(finite(e) <= 0.05, "{e:?}");
}

#[test]
fn projected_and_materialized_agree_in_distribution() {
    // Same law, different draws: compare pooled moments.
    let mut mp = Vec::new();
    let mut pp = Vec::new();
    for seed in 0..10 {
        let mut cfg = OneShotConfig::new(2048, 200, 1.0, 2.0, seed).unwrap();
        cfg.simulation = Simulation::Materialized;
        mp.extend(one_shot_score_samples(&cfg).unwrap().0);
        cfg.simulation = Simulation::Projected;
        pp.extend(one_shot_score_samples(&cfg).unwrap().0);
    }
    assert!((mean(&mp) - mean(&pp)).abs() < 0.05);
    assert!((var(&mp) / var(&pp) - 1.0).abs() < 0.08);
}

#[test]
fn whitebox_canary_shift() {
    let cfg = WhiteBoxConfig::new(20_000, 1.0, 1.0, 1.0, 1.0, 1 << 16, 5).unwrap();
    let (o, o_prime) = whitebox_stream(&cfg).unwrap();
    assert_eq!(o.len(), 20_000);
    assert!((mean(&o_prime) - mean(&o) - 1.0).abs() < 0.05);
    assert!((var(&o) - 1.0).abs() < 0.05);
    assert!((var(&o_prime) - 1.0).abs() < 0.05);
}

#[test]
fn whitebox_without_canary_audits_to_zero() {
    let cfg = WhiteBoxConfig::new(50_000, 0.0, 1.0, 1.0, 1.0, 1 << 12, 6).unwrap();
    let (o, o_prime) = whitebox_stream(&cfg).unwrap();
    let r = histogram_audit(&o_prime, &o, &AuditConfig::default()).unwrap();
    let e = finite(r.eps_lookup(0.1).unwrap().point);
    assert!(e <= 0.1, "{e}");
}

#[test]
fn whitebox_composed_matches_mixture_accountant() {
    let mut cfg = WhiteBoxConfig::new(1000, 0.5, 1.0, 2.0, 1.0, 1 << 18, 7).unwrap();
    cfg.validate().unwrap();
    let (o, o_prime) = whitebox_runs(&cfg, 200).unwrap();
    assert_eq!(o_prime.len(), 200_000);
    let eps = linspace(0.0, 3.0, 31);
    let spec = auto_spec(&o_prime, &o, BinningMode::ScottGaussian).unwrap();
    let h = build_histograms(&o_prime, &o, &spec).unwrap();
    let grid = PldGridSpec::covering(&h.p_hat, &h.q_hat);
    let est = compose_profile(&h.p_hat, &h.q_hat, 10, &eps, &grid).unwrap();
    let mech = SubsampledGaussianMech::new(0.5, 2.0).unwrap();
    let reference = subsampled_gaussian_composed_profile(&mech, 10, &eps).unwrap();
    for &e in &eps {
        let diff = (est.delta(e) - reference.delta(e)).abs();
        assert!(diff <= 0.02, "eps={e} diff={diff}");
    }
    cfg.q_c = 1.5;
    assert!(cfg.validate().is_err());
}
