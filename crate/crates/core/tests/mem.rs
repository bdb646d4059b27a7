use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use volflow_core::mem::{
    fit_design, fit_logmem, robust_se, univariate_design, FitOptions, MemData, MemSpec,
    PPlusPolicy, ParamSet,
};
use volflow_core::sim::simulate_logmem;

fn lognormal(n: usize, mean_log: f64, s: f64, seed: u64) -> MemData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(mean_log, s).unwrap();
    let x = (0..n).map(|_| d.sample(&mut rng).exp()).collect();
    MemData::new(x, vec![false; n])
}

/// Fits only omega and s on a LogMEM(1,1) design with alpha, gamma and beta fixed at zero.
fn fit_location_scale(data: &MemData) -> (Vec<f64>, Vec<bool>, volflow_core::mem::Design) {
    let design = univariate_design(data, 1, 1, 1.0).unwrap();
    let start = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.5];
    let free = vec![true, false, false, false, false, true];
    let fit = fit_design(&design, &start, &free, &FitOptions::default());
    assert!(fit.converged, "{}", fit.message);
    (fit.theta, free, design)
}

#[test]
fn iid_lognormal_scale_is_the_sample_sd_of_logs() {
    let data = lognormal(5_000, -0.045, 0.3, 11);
    let (theta, _, _) = fit_location_scale(&data);
    // closed-form MLE over the observations that enter the likelihood
    let logs: Vec<f64> = data.x[1..].iter().map(|v| v.ln()).collect();
    let m = logs.iter().sum::<f64>() / logs.len() as f64;
    let sd = (logs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    assert!((theta[5] - sd).abs() < 1e-3, "s {} vs {}", theta[5], sd);
    // omega = mean log + s^2 / 2
    assert!((theta[0] - (m + 0.5 * sd * sd)).abs() < 1e-3);
}

#[test]
fn iid_lognormal_location_se_is_s_over_root_t() {
    let (n, s) = (10_000, 0.3);
    let data = lognormal(n, -0.5 * s * s, s, 5);
    let (theta, free, design) = fit_location_scale(&data);
    let se = robust_se(&design, &theta, &free).unwrap();
    let oracle = s / ((n - 1) as f64).sqrt();
    assert!(
        (se[0] / oracle - 1.0).abs() < 0.10,
        "se {} vs {}",
        se[0],
        oracle
    );
}

#[test]
fn recovers_a_logmem11_from_one_long_path() {
    let truth = ParamSet::logmem11(0.0, 0.35, 0.0, 0.03, 0.55, 0.28, 1.0);
    let data = simulate_logmem(&truth, 50_000, 42);
    let spec = MemSpec::new(1, 1);
    let fit = fit_logmem(&data, &spec, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let p = &fit.params;
    assert!(p.omega.abs() < 0.02, "omega {}", p.omega);
    assert!((p.alpha[0] - 0.35).abs() < 0.02);
    assert!((p.gamma - 0.03).abs() < 0.02);
    assert!((p.beta[0] - 0.55).abs() < 0.02);
    assert!((p.s - 0.28).abs() < 0.01);
    // no zeros: alpha0 stays out of the model
    assert!(!fit.estimate("alpha0_1").unwrap().free);
    assert!(fit.estimate("alpha_1").unwrap().se.unwrap() < 0.02);
}

#[test]
fn zero_augmented_fit_uses_the_empirical_positive_share() {
    let truth = ParamSet::logmem11(0.0, 0.3, -0.2, 0.0, 0.5, 0.3, 0.9);
    let data = simulate_logmem(&truth, 20_000, 9);
    let share = data.x.iter().filter(|v| **v > 0.0).count() as f64 / data.len() as f64;
    let fit = fit_logmem(&data, &MemSpec::new(1, 1), &FitOptions::default()).unwrap();
    assert_eq!(fit.params.p_plus, share);
    assert!(
        (fit.params.alpha0[0] + 0.2).abs() < 0.06,
        "alpha0 {}",
        fit.params.alpha0[0]
    );
    let fixed = MemSpec {
        p_plus_policy: PPlusPolicy::Fixed(0.9),
        ..MemSpec::new(1, 1)
    };
    assert_eq!(
        fit_logmem(&data, &fixed, &FitOptions::default())
            .unwrap()
            .params
            .p_plus,
        0.9
    );
}

#[test]
fn fits_are_deterministic() {
    let truth = ParamSet::logmem11(0.0, 0.3, 0.0, 0.05, 0.5, 0.3, 1.0);
    let data = simulate_logmem(&truth, 3_000, 1);
    let opts = FitOptions::default();
    let a = fit_logmem(&data, &MemSpec::new(1, 1), &opts).unwrap();
    let b = fit_logmem(&data, &MemSpec::new(1, 1), &opts).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Scaling the data by c and shifting omega by (1 - alpha - beta) log c
    /// scales every conditional mean by c, apart from the start-up transient
    /// of the log mu = 0 initialisation, which is exactly -log c * beta^(t-1).
    #[test]
    fn scale_equivariance_of_the_filter(
        seed in 0u64..1000,
        log_c in -3.0f64..3.0,
        alpha in -0.5f64..0.9,
        beta in -0.9f64..0.9,
    ) {
        let data = simulate_logmem(&ParamSet::logmem11(0.0, 0.3, 0.0, 0.0, 0.5, 0.3, 1.0), 200, seed);
        let scaled = MemData::new(data.x.iter().map(|v| v * log_c.exp()).collect(), data.neg_return.clone());
        let spec = MemSpec { asymmetry: false, ..MemSpec::new(1, 1) };
        let base = ParamSet::logmem11(0.1, alpha, 0.0, 0.0, beta, 0.3, 1.0);
        let shifted = ParamSet { omega: 0.1 + (1.0 - alpha - beta) * log_c, ..base.clone() };
        let mu = volflow_core::mem::logmem_filter(&base, &data, &spec).unwrap();
        let mu_c = volflow_core::mem::logmem_filter(&shifted, &scaled, &spec).unwrap();
        for t in 1..mu.len() {
            let d = mu_c[t].ln() - mu[t].ln() - log_c;
            let expected = -log_c * beta.powi(t as i32);
            prop_assert!((d - expected).abs() < 1e-9, "t={} d={} expected={}", t, d, expected);
        }
    }

    /// The conditional mean stays positive and finite for any parameters.
    #[test]
    fn filter_positivity(alpha in -1.0f64..1.0, beta in -0.99f64..0.99, gamma in -0.5f64..0.5, seed in 0u64..100) {
        let data = simulate_logmem(&ParamSet::logmem11(0.0, 0.3, 0.0, 0.0, 0.5, 0.5, 0.95), 600, seed);
        let params = ParamSet::logmem11(0.1, alpha, -0.3, gamma, beta, 0.5, 0.95);
        let mu = volflow_core::mem::logmem_filter(&params, &data, &MemSpec::new(1, 1)).unwrap();
        prop_assert!(mu.iter().all(|m| *m > 0.0 && m.is_finite()));
        let again = volflow_core::mem::logmem_filter(&params, &data, &MemSpec::new(1, 1)).unwrap();
        prop_assert_eq!(mu, again);
    }
}

/// Fitted (alpha, beta, s) ignore the scale of the data and omega moves by
/// (1 - alpha - beta) log c. The start-up transient makes this approximate;
/// at T = 20,000 and |log c| <= 2 it moves the estimates by under 0.01.
#[test]
fn scale_reparameterisation_of_the_fit() {
    let truth = ParamSet::logmem11(0.0, 0.3, 0.0, 0.0, 0.5, 0.3, 1.0);
    let data = simulate_logmem(&truth, 20_000, 0);
    let spec = MemSpec {
        asymmetry: false,
        ..MemSpec::new(1, 1)
    };
    let opts = FitOptions::default();
    let a = fit_logmem(&data, &spec, &opts).unwrap().params;
    for log_c in [-2.0, 0.5, 1.8] {
        let scaled = MemData::new(
            data.x.iter().map(|v| v * f64::exp(log_c)).collect(),
            data.neg_return.clone(),
        );
        let b = fit_logmem(&scaled, &spec, &opts).unwrap().params;
        assert!(
            (a.alpha[0] - b.alpha[0]).abs() < 0.01,
            "alpha {} {}",
            a.alpha[0],
            b.alpha[0]
        );
        assert!(
            (a.beta[0] - b.beta[0]).abs() < 0.01,
            "beta {} {}",
            a.beta[0],
            b.beta[0]
        );
        assert!((a.s - b.s).abs() < 0.01);
        let shift = (1.0 - a.alpha[0] - a.beta[0]) * log_c;
        assert!(
            (b.omega - a.omega - shift).abs() < 0.01,
            "{} vs {}",
            b.omega - a.omega,
            shift
        );
    }
}
