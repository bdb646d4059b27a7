use volflow_core::mem::{fit_logmem, FitOptions, MemData, MemSpec};
use volflow_core::prep::{build_panel, Panel};
use volflow_core::sim::simulate_vlogmem;
use volflow_core::vmem::{fit_vlogmem, VParamSet, VSpec};

const START: i64 = 1_609_459_200;

fn bivariate(a12: f64, a21: f64, n: usize, seed: u64) -> Panel {
    let mut p = VParamSet::zeros(vec!["X1".into(), "X2".into()], 1, 1);
    p.a[0] = vec![vec![0.3, a12], vec![a21, 0.25]];
    p.gamma = vec![vec![0.03, 0.0], vec![0.0, 0.02]];
    p.b[0] = vec![0.5, 0.55];
    p.s = vec![0.3, 0.35];
    p.p_plus = vec![1.0, 0.97];
    p.a0[0] = vec![vec![0.0, 0.0], vec![0.0, -0.1]];
    build_panel(&simulate_vlogmem(&p, n, START, seed).unwrap()).unwrap()
}

#[test]
fn zeroed_cross_terms_nest_the_univariate_fits() {
    let panel = bivariate(0.15, 0.0, 5_000, 3);
    let spec = VSpec {
        cross_terms: false,
        ..VSpec::new(1, 1)
    };
    let opts = FitOptions::default();
    let v = fit_vlogmem(&panel, &spec, &opts).unwrap();
    for k in 0..2 {
        let data = MemData::new(panel.values[k].clone(), panel.neg_return[k].clone());
        let u = fit_logmem(&data, &MemSpec::new(1, 1), &opts).unwrap();
        let diff = (v.equations[k].loglik - u.loglik).abs();
        assert!(diff < 1e-6, "equation {k}: {diff}");
    }
}

#[test]
fn recovers_a_one_way_spillover() {
    let panel = bivariate(0.15, 0.0, 20_000, 8);
    let fit = fit_vlogmem(&panel, &VSpec::new(1, 1), &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let a = &fit.params.a[0];
    assert!((a[0][1] - 0.15).abs() < 0.03, "A12 {}", a[0][1]);
    assert!(a[1][0].abs() < 0.03, "A21 {}", a[1][0]);
    assert!((a[0][0] - 0.3).abs() < 0.03 && (a[1][1] - 0.25).abs() < 0.03);
    let sig = fit.significance_at(0.01);
    assert!(sig[0][1]);
    let summary = fit.spillover_summary(0.01);
    assert!((summary.from_sums[1] - a[0][1] - a[1][1]).abs() < 1e-12);
}

#[test]
fn instrument_order_only_permutes_the_estimates() {
    let panel = bivariate(0.1, 0.05, 3_000, 4);
    let swapped = panel.select(&["X2".into(), "X1".into()]).unwrap();
    let opts = FitOptions::default();
    let f = fit_vlogmem(&panel, &VSpec::new(1, 1), &opts).unwrap();
    let g = fit_vlogmem(&swapped, &VSpec::new(1, 1), &opts).unwrap();
    let (a, b) = (&f.params.a[0], &g.params.a[0]);
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                (a[i][j] - b[1 - i][1 - j]).abs() < 1e-5,
                "({i},{j}) {} {}",
                a[i][j],
                b[1 - i][1 - j]
            );
        }
        assert!((f.equations[i].loglik - g.equations[1 - i].loglik).abs() < 1e-6);
    }
}

#[test]
fn zone_fit_reports_three_matrices_that_sum_to_zero_deviation() {
    let panel = bivariate(0.1, 0.0, 6_000, 5);
    let spec = VSpec {
        zones: true,
        ..VSpec::new(1, 1)
    };
    let fit = fit_vlogmem(&panel, &spec, &FitOptions::default()).unwrap();
    let z = fit.params.zones.as_ref().unwrap();
    // no zone effects in the simulation, so the deviations stay small
    for i in 0..2 {
        for j in 0..2 {
            let sum = z.asia[i][j] + z.europe[i][j] + z.us[i][j];
            assert!(sum.abs() < 1e-12);
            assert!(z.asia[i][j].abs() < 0.1 && z.europe[i][j].abs() < 0.1);
        }
    }
}
