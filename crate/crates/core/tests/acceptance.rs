//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured values. The process always exits 0; read the lines.
//!
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5.

mod common;

use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use scatden::bank::{
    bin_mask, check_littlewood_paley, mask_partition_sum, check_vanishing_moments, MotherWaveletParams, WaveletBank, ORIENTATIONS,
};
use scatden::bench::{
    denoise_with, fit_slope, minimax_slope, psnr, run_decay_experiment, run_noise_sweep, select_j_max, Estimator,
    SlopeFit, SweepConfig, DESK_SIGMA2_GRID, IMAGE_RANGE,
};
use scatden::datagen::{sample_geometric_image, GeoImageParams};
use scatden::denoise::{add_noise, ortho_threshold_at, ortho_threshold_denoise, NoiseModel};
use scatden::energy::{energy_gradient, scattering_energy, EnergyParams};
use scatden::grid::{FreqGrid, GridImage};
use scatden::ortho::{fwt_forward, fwt_inverse, OrthoFilterSpec};
use scatden::transforms::{dwt_forward, norms, scattering_forward, PathKey, Rho};
use scatden::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = fn() -> Result<Outcome>;

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, Criterion); 9] = [
        ("filter bank properties", filter_bank),
        ("oracle equivalence", oracle_equivalence),
        ("energy gradient", energy_gradient_fd),
        ("orthogonal thresholding", orthobasis),
        ("second-order decay", decay_law),
        ("dyadic estimator slopes", dyadic_slopes),
        ("scattering estimator slopes", scattering_slopes),
        ("PSNR spot checks", psnr_spot_checks),
        ("sample statistics", sample_statistics),
    ];
    let mut passed = 0;
    let mut run = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        passed += outcome.pass as usize;
        println!(
            "criterion {id} ({name}): {} [{:.1} s] {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {passed}/{run} criteria passed");
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed()))
}

fn default_bank(n: usize) -> Result<WaveletBank> {
    let j_pix = -(n.ilog2() as i32);
    WaveletBank::build(n, j_pix, j_pix + 2, MotherWaveletParams::default())
}

fn filter_bank() -> Result<Outcome> {
    let n = 128;
    let ((partition_err, nyquist_bins, dc, grad, lp_lower), elapsed) = timed(|| {
        let bank = default_bank(n)?;
        let grid = FreqGrid::new(n)?;
        // the rotated mask covering directions modulo pi, at every nonzero bin
        let mut partition_err = 0.0f64;
        let mut nyquist_bins = 0;
        for r in 0..n {
            for c in 0..n {
                let (m1, m2) = grid.index(r, c);
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                partition_err = partition_err.max((mask_partition_sum((m2 as f64).atan2(m1 as f64)) - 1.0).abs());
                // the grid masks, on the bin and its mirror
                let mirror = grid.bin(-m1, -m2);
                let (mr, mc) = (mirror / n, mirror % n);
                let s: f64 = (0..ORIENTATIONS)
                    .map(|k| bin_mask(&grid, r, c, k).powi(2) + bin_mask(&grid, mr, mc, k).powi(2))
                    .sum();
                if (s - 1.0).abs() > 1e-10 {
                    nyquist_bins += 1;
                    assert!(m1 == -(n as i64) / 2 || m2 == -(n as i64) / 2, "grid mask off at ({m1}, {m2})");
                }
            }
        }
        let moments = check_vanishing_moments(&bank, 1e-6);
        let dc = moments.iter().map(|m| m.dc_abs.max(m.morlet_dc_abs)).fold(0.0, f64::max);
        let grad = moments.iter().map(|m| m.morlet_dc_gradient).fold(0.0, f64::max);
        let (lower, _) = check_littlewood_paley(&bank);
        Ok((partition_err, nyquist_bins, dc, grad, lower))
    })?;
    let pass = partition_err < 1e-10 && dc < 1e-12 && grad < 1e-12 && lp_lower > 0.0 && elapsed.as_secs_f64() < 1.0;
    Ok(Outcome::new(
        pass,
        format!(
            "partition err {partition_err:.1e} (< 1e-10; grid masks differ on {nyquist_bins} Nyquist bins); |psi(0)| {dc:.1e}, DC gradient {grad:.1e} (< 1e-12); \
             LP lower bound {lp_lower:.3} (> 0); {:.2} s at N={n} (< 1 s)",
            elapsed.as_secs_f64()
        ),
    ))
}

fn oracle_equivalence() -> Result<Outcome> {
    let (worst, elapsed) = timed(|| {
        let mut worst = 0.0f64;
        for (n, seed) in [(8usize, 100u64), (16, 101)] {
            let bank = default_bank(n).or_else(|_| WaveletBank::build(n, -(n.ilog2() as i32), -1, MotherWaveletParams::default()))?;
            let f = random_image(n, seed);
            let x = to_complex(&f);
            let kernels: Vec<Vec<Complex64>> = bank.filters().iter().map(|filt| naive_kernel(&filt.values, n)).collect();
            let kernel = |j: i32, k: usize| &kernels[(j - bank.j_min()) as usize * ORIENTATIONS + k];
            let coeffs = dwt_forward(&f, &bank)?;
            let eps = 1e-3;
            let scat = scattering_forward(&f, &bank, Rho::Modulus, eps)?;
            let table = norms(&scat);
            for (j, k) in coeffs.keys() {
                let first = circular_convolve(&x, kernel(j, k), n);
                worst = worst.max(max_abs_diff(coeffs.detail(j, k), &first));
                let u: Vec<Complex64> =
                    first.iter().map(|z| Complex64::new((z.norm_sqr() + eps * eps).sqrt() - eps, 0.0)).collect();
                for j2 in (j + 1)..=bank.j_max() {
                    for k2 in 0..ORIENTATIONS {
                        let key = PathKey { j, k, j2, k2 };
                        let second = circular_convolve(&u, kernel(j2, k2), n);
                        let field = scat.second(key).expect("path in range");
                        worst = worst.max(max_abs_diff(field, &second));
                        worst = worst.max((table.second(key).expect("path in range") - l1_mean(&second)).abs());
                    }
                }
            }
        }
        Ok(worst)
    })?;
    let pass = worst < 1e-10 && elapsed.as_secs_f64() < 10.0;
    Ok(Outcome::new(
        pass,
        format!("max abs err {worst:.1e} on 8x8 and 16x16 (< 1e-10); {:.2} s (< 10 s)", elapsed.as_secs_f64()),
    ))
}

/// Relative errors below this denominator are measured against it.
const GRADIENT_FLOOR: f64 = 1e-8;

fn energy_gradient_fd() -> Result<Outcome> {
    let n = 12;
    let images = 20;
    let step = 1e-5;
    let ((worst, coords), elapsed) = timed(|| {
        let bank = WaveletBank::build(n, -3, -1, MotherWaveletParams::default())?;
        let params = EnergyParams { epsilon: 1e-3, ..EnergyParams::scattering() };
        let mut worst = 0.0f64;
        let mut coords = 0;
        for s in 0..images {
            let h = random_image(n, 200 + s);
            let g = energy_gradient(&h, &bank, &params)?;
            for i in 0..h.dim() {
                let mut plus = h.clone();
                plus.values_mut()[i] += step;
                let mut minus = h.clone();
                minus.values_mut()[i] -= step;
                let fd = (scattering_energy(&plus, &bank, &params)? - scattering_energy(&minus, &bank, &params)?)
                    / (2.0 * step);
                let a = g.values()[i];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(GRADIENT_FLOOR);
                worst = worst.max(rel);
                coords += 1;
            }
        }
        Ok((worst, coords))
    })?;
    let pass = worst < 1e-4 && elapsed.as_secs_f64() < 120.0;
    Ok(Outcome::new(
        pass,
        format!(
            "max relative err {worst:.2e} over {coords} coordinates of {images} images (< 1e-4); {:.1} s (< 120 s)",
            elapsed.as_secs_f64()
        ),
    ))
}

fn orthobasis() -> Result<Outcome> {
    let spec = OrthoFilterSpec::sym4();
    let mut oracle_err = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut parseval = 0.0f64;
    for (i, t) in [0.0, 0.1, 1.0].into_iter().enumerate() {
        for levels in 1..=2 {
            let g = random_image(8, 300 + 10 * i as u64 + levels as u64);
            let got = ortho_threshold_at(&g, t, &spec, levels)?;
            let mut pyr = fwt_forward(&g, &spec, levels)?;
            pyr.map_details(|b| scalar_prox_by_bisection(b, t));
            let want = fwt_inverse(&pyr, &spec)?;
            oracle_err = oracle_err.max(max_real_diff(&got, &want));
        }
    }
    for seed in 0..10 {
        let f = random_image(8, 400 + seed);
        let pyr = fwt_forward(&f, &spec, 1 + seed as usize % 3)?;
        round_trip = round_trip.max(max_real_diff(&fwt_inverse(&pyr, &spec)?, &f));
        let e_img: f64 = f.values().iter().map(|v| v * v).sum();
        let e_coef: f64 = pyr.coefficients().map(|v| v * v).sum();
        parseval = parseval.max((e_img - e_coef).abs());
    }
    let pass = oracle_err < 1e-8 && round_trip < 1e-10 && parseval < 1e-10;
    Ok(Outcome::new(
        pass,
        format!(
            "oracle err {oracle_err:.1e} for T in {{0, 0.1, 1}} (< 1e-8); round trip {round_trip:.1e}, \
             Parseval {parseval:.1e} (< 1e-10)"
        ),
    ))
}

fn max_real_diff(a: &GridImage, b: &GridImage) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn decay_law() -> Result<Outcome> {
    let seeds: Vec<u64> = (0..20).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for (alpha, target) in [(2.0, 2.0), (1.0, 1.0)] {
        let r = run_decay_experiment(alpha, 256, &seeds)?;
        match r.fit {
            Some(fit) => {
                pass &= within(fit.slope, target, 0.3);
                parts.push(format!(
                    "alpha {alpha}: slope {:.3} over j in [{}, {}] (target {target} +- 0.3)",
                    fit.slope, r.fit_scales.0, r.fit_scales.1
                ));
            }
            None => {
                pass = false;
                parts.push(format!("alpha {alpha}: degenerate batch"));
            }
        }
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn desk_sweep(estimator: Estimator, alphas: &[f64]) -> SweepConfig {
    SweepConfig {
        alphas: alphas.to_vec(),
        estimator,
        sigma2_grid: DESK_SIGMA2_GRID.to_vec(),
        realizations: 20,
        n: 64,
        ..SweepConfig::default()
    }
}

fn describe(alpha: &str, f: &SlopeFit) -> String {
    let (lo, hi) = f.ci();
    format!("alpha {alpha}: slope {:.3} (95% CI [{lo:.3}, {hi:.3}])", f.slope)
}

fn dyadic_slopes() -> Result<Outcome> {
    let rows = run_noise_sweep(&desk_sweep(Estimator::Dyadic, &[1.0, 2.0]), None)?;
    let fits = fit_slope(&rows)?;
    let failures: usize = rows.iter().map(|r| r.failures).sum();
    let mut pass = fits.len() == 2;
    let mut parts = Vec::new();
    for (alpha, f) in &fits {
        pass &= within(f.slope, 1.0, 0.15);
        parts.push(describe(alpha, f));
    }
    parts.push(format!("target 1 +- 0.15; {failures} solver failures"));
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn scattering_slopes() -> Result<Outcome> {
    let rows = run_noise_sweep(&desk_sweep(Estimator::Scattering, &[1.0, 1.5, 2.0]), None)?;
    let fits = fit_slope(&rows)?;
    let failures: usize = rows.iter().map(|r| r.failures).sum();
    let fit_of = |a: f64| fits.iter().find(|(k, _)| k.parse::<f64>().ok() == Some(a)).map(|(_, f)| *f);
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 1.5, 2.0] {
        let Some(f) = fit_of(alpha) else {
            pass = false;
            continue;
        };
        let target = minimax_slope(alpha);
        let tol = if alpha == 2.0 { 0.15 } else { 0.2 };
        pass &= within(f.slope, target, tol);
        parts.push(format!("{} (target {target:.3} +- {tol})", describe(&alpha.to_string(), &f)));
    }
    let disjoint = match (fit_of(2.0), fit_of(1.0)) {
        (Some(a), Some(b)) => a.ci_disjoint(&b),
        _ => false,
    };
    pass &= disjoint;
    parts.push(format!("CIs of alpha 2 and 1 disjoint: {disjoint}; {failures} solver failures"));
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn psnr_spot_checks() -> Result<Outcome> {
    let n = 64;
    let sigma2: f64 = 0.1;
    let sigma = sigma2.sqrt();
    let seeds = 20u64;
    let j_max = |estimator| {
        let config = SweepConfig { estimator, ..desk_sweep(estimator, &[2.0]) };
        select_j_max(&config, 2.0, sigma2)
    };
    let (j_scat, j_dyad) = (j_max(Estimator::Scattering)?, j_max(Estimator::Dyadic)?);
    let solver = Default::default();
    let mut wins = 0;
    let mut gains = Vec::new();
    for s in 0..seeds {
        let f = sample_geometric_image(&GeoImageParams::for_alpha(2.0, n, 500 + s))?.image;
        let g = add_noise(&f, NoiseModel { sigma, seed: 600 + s })?;
        let run = |est: Estimator, j| denoise_with(est, &g, sigma, &est.default_energy(), &solver, j, 2);
        let (hs, _) = run(Estimator::Scattering, j_scat)?;
        let (hd, _) = run(Estimator::Dyadic, j_dyad)?;
        let gain = psnr(&hs, &f, IMAGE_RANGE)? - psnr(&hd, &f, IMAGE_RANGE)?;
        wins += (gain >= 1.0) as usize;
        gains.push(gain);
    }
    let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    let share = wins as f64 / seeds as f64;

    let ortho_n = 128;
    let ortho_sigma = 0.005f64.sqrt();
    let spec = OrthoFilterSpec::sym4();
    let mut ortho = Vec::new();
    for s in 0..seeds {
        let f = sample_geometric_image(&GeoImageParams::for_alpha(2.0, ortho_n, 700 + s))?.image;
        let g = add_noise(&f, NoiseModel { sigma: ortho_sigma, seed: 800 + s })?;
        let h = ortho_threshold_denoise(&g, ortho_sigma, &spec, scatden::bench::default_ortho_levels(ortho_n))?;
        ortho.push(psnr(&h, &f, IMAGE_RANGE)?);
    }
    let ortho_mean = ortho.iter().sum::<f64>() / ortho.len() as f64;
    let pass = share >= 0.8 && within(ortho_mean, 33.0, 1.0);
    Ok(Outcome::new(
        pass,
        format!(
            "scattering beats dyadic by >= 1 dB on {wins}/{seeds} seeds (mean gain {mean_gain:+.2} dB, need >= 80%) \
             at sigma2 {sigma2}, N={n}; ortho PSNR {ortho_mean:.2} dB at sigma2 0.005, N={ortho_n} (33 +- 1)"
        ),
    ))
}

fn sample_statistics() -> Result<Outcome> {
    let n = 64;
    let count = 200u64;
    let mut lengths = Vec::new();
    let mut gap_ok = true;
    let mut gap_range = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..count {
        let sample = sample_geometric_image(&GeoImageParams::for_alpha(2.0, n, s))?;
        lengths.push(sample.stats.contour_length);
        gap_ok &= (0.4..=0.6).contains(&sample.gap.abs());
        gap_range = (gap_range.0.min(sample.gap.abs()), gap_range.1.max(sample.gap.abs()));
    }
    let k = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / k;
    let std = (lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let rel = std / mean;
    let mut deterministic = true;
    for s in [0u64, 7, 199] {
        let p = GeoImageParams::for_alpha(2.0, n, s);
        deterministic &= sample_geometric_image(&p)?.image == sample_geometric_image(&p)?.image;
    }
    let pass = within(mean, 1.79, 0.15) && rel < 0.25 && gap_ok && deterministic;
    Ok(Outcome::new(
        pass,
        format!(
            "mean contour length {mean:.3} (1.79 +- 0.15), relative std {rel:.3} (< 0.25) over {count} samples; \
             |gap| in [{:.3}, {:.3}] (within [0.4, 0.6]: {gap_ok}); deterministic: {deterministic}",
            gap_range.0, gap_range.1
        ),
    ))
}
