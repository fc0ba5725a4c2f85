use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use scatden::bench::{
    decay_experiment_on, fit_line, fit_slope, minimax_slope, read_sweep_csv, run_noise_sweep, select_j_max,
    t_quantile_975, write_decay_csv, Estimator, SweepConfig, SweepRow, SCHEMA_VERSION,
};
use scatden::grid::GridImage;
use scatden::Error;

#[test]
fn slope_interval_covers_the_true_slope() {
    // ordinary least squares with Gaussian residuals: the 95% interval should
    // contain the true slope about 95 times in 100
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.4).collect();
    let covered = (0..100)
        .filter(|_| {
            let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.5 + 1.3 * x + 0.2 * rng.sample::<f64, _>(StandardNormal))).collect();
            fit_line(&pts).unwrap().ci_contains(1.3)
        })
        .count();
    assert!(covered >= 93, "{covered}/100");
}

#[test]
fn exact_line_fit() {
    let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 - 0.75 * i as f64)).collect();
    let f = fit_line(&pts).unwrap();
    assert!((f.slope + 0.75).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
    assert!(f.ci_half_width < 1e-12 && f.residual_rms < 1e-14);
    assert!(fit_line(&pts[..2]).is_err());
    assert!(matches!(fit_line(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]), Err(Error::Degenerate(_))));
    assert!(fit_line(&[(0.0, 0.0), (1.0, f64::NAN), (2.0, 2.0)]).is_err());
}

#[test]
fn t_quantiles() {
    assert!((t_quantile_975(1) - 12.706_204_736).abs() < 1e-6);
    assert!((t_quantile_975(3) - 3.182_446_305).abs() < 1e-6);
    assert!((t_quantile_975(1000) - 1.962_339).abs() < 1e-5);
    assert_eq!(t_quantile_975(0), f64::INFINITY);
}

#[test]
fn minimax_slopes() {
    assert_eq!(minimax_slope(1.0), 1.0);
    assert!((minimax_slope(2.0) - 4.0 / 3.0).abs() < 1e-15);
    assert!((minimax_slope(1.5) - 1.2).abs() < 1e-15);
}

fn row(alpha: f64, sigma2: f64, mse: f64) -> SweepRow {
    SweepRow {
        schema_version: SCHEMA_VERSION,
        estimator: Estimator::Ortho,
        alpha,
        sigma2,
        sigma: sigma2.sqrt(),
        j_max: -5,
        realizations: 2,
        mse_mean: mse,
        mse_std: 0.0,
        psnr_mean: 0.0,
        failures: 0,
        wallclock: 0.0,
    }
}

#[test]
fn fit_slope_groups_rows_by_alpha() {
    let mut rows = Vec::new();
    for s2 in [0.4, 0.2, 0.1, 0.05] {
        rows.push(row(1.0, s2, 0.3 * s2f(s2, 1.0)));
        rows.push(row(2.0, s2, 0.7 * s2f(s2, 4.0 / 3.0)));
    }
    let fits = fit_slope(&rows).unwrap();
    assert_eq!(fits.len(), 2);
    assert!((fits["1"].slope - 1.0).abs() < 1e-12);
    assert!((fits["2"].slope - 4.0 / 3.0).abs() < 1e-12);
}

/// `sigma^p` for a variance.
fn s2f(sigma2: f64, p: f64) -> f64 {
    sigma2.sqrt().powf(p)
}

fn small_sweep(estimator: Estimator) -> SweepConfig {
    SweepConfig {
        estimator,
        alphas: vec![1.5],
        sigma2_grid: vec![0.2, 0.05],
        realizations: 2,
        n: 32,
        seed: 3,
        validation_size: 1,
        ..SweepConfig::default()
    }
}

#[test]
fn sweep_rows_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let mut cfg = small_sweep(Estimator::Ortho);
    cfg.sigma2_grid = vec![0.2];
    let first = run_noise_sweep(&cfg, Some(&out)).unwrap();
    assert_eq!(first.len(), 1);
    // extending the grid only computes the new point
    cfg.sigma2_grid = vec![0.2, 0.05];
    let second = run_noise_sweep(&cfg, Some(&out)).unwrap();
    assert_eq!(second.len(), 1);
    assert_eq!(second[0].sigma2, 0.05);
    let all = read_sweep_csv(&out).unwrap();
    assert_eq!(all.len(), 2);
    assert_eq!(all[0], first[0]);
    let r = &all[1];
    assert_eq!(r.realizations, 2);
    assert_eq!(r.j_max, -5);
    assert!(r.mse_mean > 0.0 && r.mse_std >= 0.0 && r.failures == 0);
    assert!(all[1].mse_mean < all[0].mse_mean);
    // a rerun has nothing left to do
    assert!(run_noise_sweep(&cfg, Some(&out)).unwrap().is_empty());
}

#[test]
fn sweeps_are_deterministic() {
    let cfg = small_sweep(Estimator::Ti);
    let a = run_noise_sweep(&cfg, None).unwrap();
    let b = run_noise_sweep(&cfg, None).unwrap();
    let key = |r: &SweepRow| (r.mse_mean, r.mse_std, r.j_max);
    assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
}

#[test]
fn sweep_configuration_is_validated() {
    let base = small_sweep(Estimator::Dyadic);
    let bad = [
        SweepConfig { schema_version: 9, ..base.clone() },
        SweepConfig { realizations: 1, ..base.clone() },
        SweepConfig { sigma2_grid: vec![0.1, -0.1], ..base.clone() },
        SweepConfig { alphas: vec![], ..base.clone() },
        SweepConfig { n: 24, ..base.clone() },
        SweepConfig { fixed_j_max: Some(vec![-5]), ..base.clone() },
        SweepConfig { j_max_offsets: vec![5], ..base.clone() },
        SweepConfig { j_max_offsets: vec![], ..base.clone() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
    assert!(base.validate().is_ok());
}

#[test]
fn scale_selection_picks_a_candidate() {
    let mut cfg = small_sweep(Estimator::Dyadic);
    cfg.j_max_offsets = vec![0, 2];
    let j = select_j_max(&cfg, 1.5, 0.2).unwrap();
    assert!(j == -5 || j == -3, "{j}");
    cfg.j_max_offsets = vec![1];
    assert_eq!(select_j_max(&cfg, 1.5, 0.2).unwrap(), -4);
}

#[test]
fn fixed_scales_skip_the_validation() {
    let mut cfg = small_sweep(Estimator::Dyadic);
    cfg.sigma2_grid = vec![0.2];
    cfg.fixed_j_max = Some(vec![-4]);
    let rows = run_noise_sweep(&cfg, None).unwrap();
    assert_eq!(rows[0].j_max, -4);
}

#[test]
fn decay_of_a_flat_batch_is_degenerate() {
    let images = vec![GridImage::zeros(256); 2];
    let r = decay_experiment_on(&images).unwrap();
    assert!(r.degenerate);
    assert!(r.fit.is_none());
    assert_eq!(r.profile.len(), 8);
    let mut buf = Vec::new();
    write_decay_csv(&r, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("j,mean_log2_norm\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn decay_needs_large_power_of_two_images() {
    assert!(decay_experiment_on(&[]).is_err());
    assert!(decay_experiment_on(&[GridImage::zeros(64)]).is_err());
}

#[test]
fn straight_edges_have_no_perpendicular_response() {
    // the modulus of an axis-aligned edge response is constant along the
    // edge, so the perpendicular filters see nothing
    let n = 256;
    let edge = GridImage::from_fn(n, |r, _| if r < n / 2 { 0.5 } else { -0.5 });
    let r = decay_experiment_on(&[edge]).unwrap();
    assert!(r.degenerate);
}

#[test]
fn a_disc_decays_between_the_bounds() {
    let n = 256;
    let disc = GridImage::from_fn(n, |r, c| {
        let (x, y) = (c as f64 - 127.5, r as f64 - 127.5);
        if x.hypot(y) < 60.0 { 0.5 } else { -0.5 }
    });
    let r = decay_experiment_on(&[disc]).unwrap();
    assert!(!r.degenerate);
    let slope = r.fit.unwrap().slope;
    assert!(slope > 0.5 && slope < 3.0, "{slope}");
}
