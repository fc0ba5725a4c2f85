mod common;

use common::*;
use num_complex::Complex64;
use scatden::bank::{MotherWaveletParams, WaveletBank, ORIENTATIONS};
use scatden::bench::{mse, psnr};
use scatden::denoise::ortho_threshold_at;
use scatden::energy::{scattering_energy, wavelet_l1_energy, EnergyParams, DEFAULT_WEIGHT_UNIT};
use scatden::ortho::{fwt_forward, fwt_inverse, OrthoFilterSpec};
use scatden::transforms::{dwt_forward, norms, perpendicular, scattering_forward, PathKey, Rho};

const TOL: f64 = 1e-10;

fn bank(n: usize, j_max: i32) -> WaveletBank {
    let j_pix = -(n.ilog2() as i32);
    WaveletBank::build(n, j_pix, j_max, MotherWaveletParams::default()).unwrap()
}

fn check_dwt_against_direct_convolution(n: usize, j_max: i32, seed: u64) {
    let b = bank(n, j_max);
    let f = random_image(n, seed);
    let coeffs = dwt_forward(&f, &b).unwrap();
    let x = to_complex(&f);
    for (j, k) in coeffs.keys() {
        let direct = circular_convolve(&x, &naive_kernel(&b.filter(j, k).values, n), n);
        let err = max_abs_diff(coeffs.detail(j, k), &direct);
        assert!(err < TOL, "n={n} j={j} k={k}: {err:e}");
    }
    let direct = circular_convolve(&x, &naive_kernel(&b.lowpass().values, n), n);
    assert!(max_abs_diff(&coeffs.low, &direct) < TOL);
}

#[test]
fn spectral_convolution_matches_direct_sum_8() {
    check_dwt_against_direct_convolution(8, -2, 1);
}

#[test]
fn spectral_convolution_matches_direct_sum_16() {
    check_dwt_against_direct_convolution(16, -2, 2);
}

#[test]
fn scattering_matches_compositional_oracle() {
    let n = 16;
    let b = bank(n, -2);
    let f = random_image(n, 3);
    let eps = 1e-3;
    let s = scattering_forward(&f, &b, Rho::Modulus, eps).unwrap();
    let table = norms(&s);
    let x = to_complex(&f);
    let kernels: Vec<((i32, usize), Vec<Complex64>)> = b
        .scales()
        .flat_map(|j| (0..ORIENTATIONS).map(move |k| (j, k)))
        .map(|(j, k)| ((j, k), naive_kernel(&b.filter(j, k).values, n)))
        .collect();
    let kernel = |j: i32, k: usize| &kernels.iter().find(|(key, _)| *key == (j, k)).unwrap().1;
    let mut paths = 0;
    for j in b.scales() {
        for k in 0..ORIENTATIONS {
            let first = circular_convolve(&x, kernel(j, k), n);
            assert!(max_abs_diff(s.first(j, k).unwrap(), &first) < TOL);
            assert!((table.first(j, k).unwrap() - l1_mean(&first)).abs() < TOL);
            let u: Vec<Complex64> =
                first.iter().map(|z| Complex64::new((z.norm_sqr() + eps * eps).sqrt() - eps, 0.0)).collect();
            for j2 in (j + 1)..=b.j_max() {
                for k2 in 0..ORIENTATIONS {
                    let key = PathKey { j, k, j2, k2 };
                    let second = circular_convolve(&u, kernel(j2, k2), n);
                    let err = max_abs_diff(s.second(key).unwrap(), &second);
                    assert!(err < TOL, "{key:?}: {err:e}");
                    assert!((table.second(key).unwrap() - l1_mean(&second)).abs() < TOL);
                    paths += 1;
                }
            }
        }
    }
    assert_eq!(paths, s.second.len());
}

#[test]
fn rectifier_path_matches_oracle() {
    let n = 8;
    let b = bank(n, -2);
    let f = random_image(n, 4);
    let s = scattering_forward(&f, &b, Rho::Rectifier, 0.0).unwrap();
    let x = to_complex(&f);
    let first = circular_convolve(&x, &naive_kernel(&b.filter(-3, 1).values, n), n);
    let u: Vec<Complex64> = first.iter().map(|z| Complex64::new(z.re.max(0.0), z.im.max(0.0))).collect();
    let second = circular_convolve(&u, &naive_kernel(&b.filter(-2, 3).values, n), n);
    let key = PathKey { j: -3, k: 1, j2: -2, k2: 3 };
    assert!(max_abs_diff(s.second(key).unwrap(), &second) < TOL);
}

/// Energy value assembled from direct convolutions and the scale weights
/// `unit 2^(j_pix - j)`.
fn oracle_energy(f: &scatden::grid::GridImage, b: &WaveletBank, p: &EnergyParams, scattering: bool) -> f64 {
    let n = b.side();
    let j_pix = b.pixel_scale();
    let w = |j: i32| p.weight_unit * 2f64.powi(j_pix - j);
    let x = to_complex(f);
    let mut total = 0.0;
    for j in b.scales() {
        let fine = if j == b.j_min() { p.fine_scale_factor } else { 1.0 };
        for k in 0..ORIENTATIONS {
            let first = circular_convolve(&x, &naive_kernel(&b.filter(j, k).values, n), n);
            total += p.lambda * w(j) * l1_mean(&first);
            if !scattering {
                continue;
            }
            let u: Vec<Complex64> = first.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
            for j2 in (j + 1)..=b.j_max() {
                for k2 in 0..ORIENTATIONS {
                    let m = l1_mean(&circular_convolve(&u, &naive_kernel(&b.filter(j2, k2).values, n), n));
                    total += if k2 == perpendicular(k) {
                        p.gamma * fine * w(j2) * m
                    } else if k2 == k {
                        -p.eta0 * fine * w(j) * m
                    } else {
                        -p.eta1 * fine * w(j) * m
                    };
                }
            }
        }
    }
    total
}

#[test]
fn energies_match_direct_assembly() {
    let n = 8;
    let b = bank(n, -2);
    let f = random_image(n, 5);
    let p = EnergyParams { epsilon: 0.0, ..EnergyParams::scattering() };
    assert_eq!(p.weight_unit, DEFAULT_WEIGHT_UNIT);
    let got = scattering_energy(&f, &b, &p).unwrap();
    assert!((got - oracle_energy(&f, &b, &p, true)).abs() < TOL);
    let pw = EnergyParams { epsilon: 0.0, ..EnergyParams::wavelet() };
    let got = wavelet_l1_energy(&f, &b, &pw).unwrap();
    assert!((got - oracle_energy(&f, &b, &pw, false)).abs() < TOL);
}

#[test]
fn ortho_thresholding_is_the_coefficientwise_minimizer() {
    for spec in [OrthoFilterSpec::haar(), OrthoFilterSpec::sym4()] {
        for levels in 1..=2 {
            for (i, t) in [0.0, 0.1, 1.0].into_iter().enumerate() {
                let g = random_image(8, 10 + i as u64);
                let got = ortho_threshold_at(&g, t, &spec, levels).unwrap();
                let mut pyr = fwt_forward(&g, &spec, levels).unwrap();
                pyr.map_details(|v| scalar_prox_by_bisection(v, t));
                let want = fwt_inverse(&pyr, &spec).unwrap();
                let err = got.values().iter().zip(want.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8, "{} levels={levels} t={t}: {err:e}", spec.name);
            }
        }
    }
}

#[test]
fn error_metrics_match_two_pass_formula() {
    let a = random_image(16, 20);
    let b = random_image(16, 21);
    let m = two_pass_mse(a.values(), b.values());
    assert!((mse(&a, &b).unwrap() - m).abs() < 1e-14);
    let p = psnr(&a, &b, 2.0).unwrap();
    assert!((p - 10.0 * (4.0 / m).log10()).abs() < 1e-10);
    assert_eq!(psnr(&a, &a, 2.0).unwrap(), f64::INFINITY);
}
