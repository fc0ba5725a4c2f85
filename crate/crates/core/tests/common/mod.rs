//! Reference computations shared by the integration tests. Nothing here goes
//! through the library's FFT or filtering code.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatden::grid::GridImage;

pub fn random_image(n: usize, seed: u64) -> GridImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridImage::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Spatial kernel of a spectral filter by the defining inverse DFT sum,
/// `k[y, x] = (1/d) sum_{r, c} F[r, c] exp(2 pi i (r y + c x) / n)`.
pub fn naive_kernel(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    let w = 2.0 * PI / n as f64;
    for y in 0..n {
        for x in 0..n {
            let mut acc = Complex64::default();
            for r in 0..n {
                for c in 0..n {
                    let v = values[r * n + c];
                    if v != 0.0 {
                        let ph = w * ((r * y + c * x) % n) as f64;
                        acc += v * Complex64::from_polar(1.0, ph);
                    }
                }
            }
            out[y * n + x] = acc / (n * n) as f64;
        }
    }
    out
}

/// Direct circular convolution `(a * k)[p] = sum_q a[q] k[p - q]`.
pub fn circular_convolve(a: &[Complex64], kernel: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    for py in 0..n {
        for px in 0..n {
            let mut acc = Complex64::default();
            for qy in 0..n {
                for qx in 0..n {
                    let ky = (py + n - qy) % n;
                    let kx = (px + n - qx) % n;
                    acc += a[qy * n + qx] * kernel[ky * n + kx];
                }
            }
            out[py * n + px] = acc;
        }
    }
    out
}

pub fn to_complex(image: &GridImage) -> Vec<Complex64> {
    image.values().iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn l1_mean(field: &[Complex64]) -> f64 {
    field.iter().map(|z| z.norm()).sum::<f64>() / field.len() as f64
}

/// Mean squared error by the two-pass formula: mean of the difference first,
/// then the centered second moment plus the squared mean.
pub fn two_pass_mse(a: &[f64], b: &[f64]) -> f64 {
    let d = a.len() as f64;
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diff.iter().sum::<f64>() / d;
    let centered = diff.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
    centered + mean * mean
}

/// Minimizer of `(1/2)(a - b)^2 + t |a|` by bisection on its subdifferential
/// `a - b + t sign(a)`, which is monotone in `a`.
pub fn scalar_prox_by_bisection(b: f64, t: f64) -> f64 {
    let span = b.abs() + t + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let slope = if mid > 0.0 {
            mid - b + t
        } else if mid < 0.0 {
            mid - b - t
        } else if b.abs() <= t {
            return 0.0;
        } else {
            -b
        };
        if slope > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
