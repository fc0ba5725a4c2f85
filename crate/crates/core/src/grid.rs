//! Periodic square grids, their frequency lattice, and a cached 2-D FFT.
//!
//! Images are stored row-major: `values[row * n + col]`, where the column index
//! is the horizontal coordinate `u1` and the row index is the vertical `u2`.
//! Frequency bins follow the same layout.
//!
//! The DFT convention is: forward transform unnormalized, inverse transform
//! scaled by `1/d` with `d = n * n`. With it, pointwise multiplication of
//! spectra is exactly circular convolution, and `(1/d) sum |h * psi|^2 =
//! (1/d^2) sum |h_hat psi_hat|^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued `n x n` field sampling a `[0,1]^2`-periodic function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridImage {
    n: usize,
    values: Vec<f64>,
}

impl GridImage {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { n, values: vec![c; n * n] }
    }

    pub fn from_vec(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Format(format!(
                "expected {} values for side {n}, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at index {i}")));
        }
        Ok(Self { n, values })
    }

    /// Builds an image by evaluating `f(row, col)` on every pixel.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                values.push(f(r, c));
            }
        }
        Self { n, values }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Number of samples `d = n^2`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.dim() as f64
    }

    /// Circular shift: `out[r][c] = self[(r - dr) mod n][(c - dc) mod n]`.
    pub fn shifted(&self, dr: isize, dc: isize) -> Self {
        let n = self.n as isize;
        Self::from_fn(self.n, |r, c| {
            let rr = (r as isize - dr).rem_euclid(n) as usize;
            let cc = (c as isize - dc).rem_euclid(n) as usize;
            self.values[rr * self.n + cc]
        })
    }

    pub fn ensure_side(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::SizeMismatch { expected: n, found: self.n });
        }
        Ok(())
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }
}

/// Signed frequency index of DFT bin `m` on a grid of side `n`: `[-n/2, n/2)`.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// The DFT frequency lattice of an `n x n` periodic grid on `[0,1]^2`, `n` even.
///
/// Bin `(m2, m1)` carries the angular frequency `omega = 2 pi (m1, m2)` with
/// signed indices. `digital` returns the same frequency in radians per pixel,
/// `omega / n`, which lies in `[-pi, pi)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqGrid {
    n: usize,
}

impl FreqGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidParam(format!("grid side must be even and >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Finest dyadic scale not below one pixel: `2^pixel_scale() >= 1/n`,
    /// with equality when `n` is a power of two.
    pub fn pixel_scale(&self) -> i32 {
        -(self.n.ilog2() as i32)
    }

    /// Factor `2^j n` mapping digital frequencies to mother-wavelet
    /// frequencies at scale `j`. It is 1 at the pixel scale of a power-of-two
    /// grid.
    pub fn dilation(&self, j: i32) -> f64 {
        2f64.powi(j) * self.n as f64
    }

    /// Signed integer index pair `(m1, m2)` of the bin at `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> (i64, i64) {
        (signed_index(col, self.n), signed_index(row, self.n))
    }

    /// Angular frequency in radians per unit length.
    pub fn omega(&self, row: usize, col: usize) -> (f64, f64) {
        let (m1, m2) = self.index(row, col);
        (2.0 * PI * m1 as f64, 2.0 * PI * m2 as f64)
    }

    /// Frequency in radians per pixel.
    pub fn digital(&self, row: usize, col: usize) -> (f64, f64) {
        let (m1, m2) = self.index(row, col);
        let s = 2.0 * PI / self.n as f64;
        (s * m1 as f64, s * m2 as f64)
    }

    /// Flat bin offset of the signed index pair (wrapped modulo `n`).
    pub fn bin(&self, m1: i64, m2: i64) -> usize {
        let n = self.n as i64;
        (m2.rem_euclid(n) * n + m1.rem_euclid(n)) as usize
    }
}

/// Cached forward/inverse 2-D FFT plans for one grid side.
#[derive(Clone)]
pub struct Fft2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("n", &self.n).finish()
    }
}

impl Fft2d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
    }

    /// In-place inverse transform, scaled by `1/d`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer does not match grid side");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_in_place(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_in_place(data, n);
    }
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}
