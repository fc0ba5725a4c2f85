//! Directional complex wavelet filter bank built in the frequency domain.
//!
//! The mother wavelet is a Morlet wavelet with two vanishing moments multiplied
//! by an angular mask supported in the cone `|phi| < pi/4`. Rotations by
//! `k pi / 4` (`k < 4`) and dyadic dilations `2^j` give the bank filters
//! `psi_hat_j^k`; an isotropic Gaussian gives the low-pass `phi_hat_J`.
//!
//! Frequencies are expressed in radians per pixel ("digital" units). The
//! mother wavelet parameters live at the scale of one pixel; a filter at
//! scale `j` samples the mother at `2^j n omega`. The Gaussian bumps are
//! periodized over `2 pi` aliases before masking, so the finest filter keeps
//! the part of its pass-band that wraps across the Nyquist seam.
//!
//! Every filter is real-valued in frequency: the Morlet transform is a real
//! shifted Gaussian with real corrections and the mask is real.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fft2d, FreqGrid};

/// Number of orientations of the bank.
pub const ORIENTATIONS: usize = 4;

/// Default width of the low-pass Gaussian, in units of the coarsest scale.
///
/// Calibrated on the default bank so that the Littlewood-Paley lower bound
/// stays above 0.2 while the upper bound stays below 1.8.
pub const DEFAULT_LOWPASS_WIDTH: f64 = 0.55;

/// Scale offset above the pixel scale of the filter whose spatial l1 norm is
/// set to 1. The finest filter is aliased across the Nyquist seam and the
/// coarsest ones wrap around the torus, so neither is a faithful reference.
pub const REFERENCE_SCALE_OFFSET: i32 = 2;

/// Parameters of the mother Morlet wavelet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotherWaveletParams {
    /// Gaussian envelope width, in pixels at the finest scale.
    pub sigma_env: f64,
    /// Plane-wave center frequency, in radians per pixel at the finest scale.
    pub xi: [f64; 2],
    /// Number of vanishing moments. Only 2 is supported.
    pub moments: u32,
}

impl Default for MotherWaveletParams {
    fn default() -> Self {
        Self { sigma_env: 0.7, xi: [1.05 * PI, 0.0], moments: 2 }
    }
}

impl MotherWaveletParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_env > 0.0 && self.sigma_env.is_finite()) {
            return Err(Error::InvalidParam("sigma_env must be positive".into()));
        }
        if self.xi == [0.0, 0.0] || !self.xi.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParam("xi must be a nonzero finite pair".into()));
        }
        if self.moments != 2 {
            return Err(Error::InvalidParam("only two vanishing moments are supported".into()));
        }
        Ok(())
    }
}

/// Orientation tag of a filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Dir(usize),
    Low,
}

/// A real frequency-domain filter on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFilter {
    pub j: i32,
    pub orientation: Orientation,
    pub values: Vec<f64>,
    /// Moment-correction constants `(k, k1, k2)` before normalization.
    /// Zero for the low-pass.
    pub correction: [f64; 3],
}

impl SpectralFilter {
    /// Spatial kernel, `IDFT(values) / d`, so that convolution with the kernel
    /// equals multiplication by `values`.
    pub fn spatial_kernel(&self, fft: &Fft2d) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.inverse(&mut buf);
        buf
    }

    /// Discrete l1 norm of the spatial kernel, `sum |k[n]|`, which equals
    /// `(1/d) sum |psi(n/N)|`, the Riemann sum of the continuous l1 norm.
    pub fn spatial_l1(&self, fft: &Fft2d) -> f64 {
        self.spatial_kernel(fft).iter().map(|z| z.norm()).sum()
    }
}

/// Angular profile of the mask, `sin(pi (1 + sin(4 phi + pi/2)) / 4)` inside
/// the open cone `|phi| < pi/4`, zero outside. `phi` is wrapped to `[-pi, pi)`.
pub fn mask_angle(phi: f64) -> f64 {
    let phi = wrap_angle(phi);
    if phi.abs() < FRAC_PI_4 {
        (PI * (1.0 + (4.0 * phi + FRAC_PI_2).sin()) / 4.0).sin()
    } else {
        0.0
    }
}

/// `sum_k mask(phi - k pi/4)^2` with the angle reduced modulo `pi`, which is
/// how the four half-cones tile the directions of a real image spectrum.
pub fn mask_partition_sum(phi: f64) -> f64 {
    (0..ORIENTATIONS)
        .map(|k| {
            let a = phi - k as f64 * FRAC_PI_4;
            // reduce to [-pi/2, pi/2)
            let a = (a + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
            mask_angle(a).powi(2)
        })
        .sum()
}

fn wrap_angle(phi: f64) -> f64 {
    (phi + PI).rem_euclid(2.0 * PI) - PI
}

/// Mask of orientation `k` at grid bin `(row, col)`.
///
/// A bin on a Nyquist line stands for both `-pi` and `+pi`; the mask takes the
/// larger of its values over those representatives. Zero at DC.
pub fn bin_mask(grid: &FreqGrid, row: usize, col: usize, k: usize) -> f64 {
    let n = grid.side() as i64;
    let (m1, m2) = grid.index(row, col);
    if m1 == 0 && m2 == 0 {
        return 0.0;
    }
    let reps = |m: i64| if m == -n / 2 { vec![m, -m] } else { vec![m] };
    let mut best = 0.0f64;
    for a in reps(m1) {
        for b in reps(m2) {
            let phi = (b as f64).atan2(a as f64) - k as f64 * FRAC_PI_4;
            best = best.max(mask_angle(phi));
        }
    }
    best
}

/// Mask values on every bin of the grid (orientation 0). Zero at DC.
pub fn build_mask(grid: &FreqGrid) -> Vec<f64> {
    let n = grid.side();
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = bin_mask(grid, r, c, 0);
        }
    }
    out
}

/// Components of the Morlet transform at a (dilated, rotated) frequency `w`:
/// the shifted bump `P`, the envelope `Q0`, and the two first-moment terms.
#[derive(Clone, Copy, Debug, Default)]
struct MorletParts {
    p: f64,
    q: [f64; 3],
}

impl MorletParts {
    fn at(params: &MotherWaveletParams, w: (f64, f64)) -> Self {
        let s2 = params.sigma_env * params.sigma_env;
        let dx = w.0 - params.xi[0];
        let dy = w.1 - params.xi[1];
        let p = (-0.5 * s2 * (dx * dx + dy * dy)).exp();
        let g = (-0.5 * s2 * (w.0 * w.0 + w.1 * w.1)).exp();
        Self { p, q: [g, s2 * w.0 * g, s2 * w.1 * g] }
    }

    fn add(&mut self, o: &Self) {
        self.p += o.p;
        for i in 0..3 {
            self.q[i] += o.q[i];
        }
    }

    fn combine(&self, c: &[f64; 3]) -> f64 {
        self.p - c[0] * self.q[0] - c[1] * self.q[1] - c[2] * self.q[2]
    }
}

/// Continuous closed-form moment corrections of the two-moment Morlet.
pub fn closed_form_corrections(params: &MotherWaveletParams) -> [f64; 3] {
    let s2 = params.sigma_env * params.sigma_env;
    let xi2 = params.xi[0].powi(2) + params.xi[1].powi(2);
    let k = (-0.5 * s2 * xi2).exp();
    [k, params.xi[0] * k, params.xi[1] * k]
}

/// Unperiodized Morlet core with closed-form corrections, at a frequency in
/// mother units. Used to check dilation structure.
pub fn morlet_core(params: &MotherWaveletParams, w: (f64, f64)) -> f64 {
    MorletParts::at(params, w).combine(&closed_form_corrections(params))
}

/// Rotation `r_k`: by angle `-k pi / 4`.
fn rotate(k: usize, w: (f64, f64)) -> (f64, f64) {
    let a = k as f64 * FRAC_PI_4;
    let (s, c) = a.sin_cos();
    (c * w.0 + s * w.1, -s * w.0 + c * w.1)
}

/// Periodized Morlet parts at digital frequency `omega` for dilation `dil`
/// (see [`FreqGrid::dilation`]) and orientation `k`.
fn periodized_parts(
    params: &MotherWaveletParams,
    dil: f64,
    k: usize,
    omega: (f64, f64),
) -> MorletParts {
    // Aliases farther than ~12 envelope widths from the band contribute < 1e-30.
    let reach = ((12.0 / params.sigma_env + params.xi[0].abs().max(params.xi[1].abs())) / (dil * 2.0 * PI))
        .ceil() as i64;
    let reach = reach.clamp(0, 3);
    let mut acc = MorletParts::default();
    for a in -reach..=reach {
        for b in -reach..=reach {
            let wa = (omega.0 + 2.0 * PI * a as f64, omega.1 + 2.0 * PI * b as f64);
            let r = rotate(k, wa);
            acc.add(&MorletParts::at(params, (dil * r.0, dil * r.1)));
        }
    }
    acc
}

/// Solves the discrete moment conditions: the Morlet value at DC vanishes and
/// both central differences across DC vanish.
fn solve_corrections(parts: &[MorletParts; 5], j: i32, k: usize) -> Result<[f64; 3]> {
    // parts: DC, (+1,0), (-1,0), (0,+1), (0,-1)
    let mut a = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for i in 0..3 {
        a[0][i] = parts[0].q[i];
        a[1][i] = parts[1].q[i] - parts[2].q[i];
        a[2][i] = parts[3].q[i] - parts[4].q[i];
    }
    rhs[0] = parts[0].p;
    rhs[1] = parts[1].p - parts[2].p;
    rhs[2] = parts[3].p - parts[4].p;
    solve3(a, rhs).ok_or(Error::SingularCorrection { j, k })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        let scale = a[piv].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || a[piv][col].abs() <= 1e-12 * scale || a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in (row + 1)..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn corrections_on_grid(
    grid: &FreqGrid,
    params: &MotherWaveletParams,
    j: i32,
    k: usize,
) -> Result<[f64; 3]> {
    let dil = grid.dilation(j);
    let step = 2.0 * PI / grid.side() as f64;
    let pts = [(0.0, 0.0), (step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)];
    let parts = pts.map(|w| periodized_parts(params, dil, k, w));
    solve_corrections(&parts, j, k)
}

/// Frequency-domain two-moment Morlet at scale `j` (orientation 0, no mask),
/// periodized, with corrections solved so that the value at DC and both
/// central finite differences across DC vanish on the grid.
pub fn build_morlet_hat(grid: &FreqGrid, params: &MotherWaveletParams, j: i32) -> Result<Vec<f64>> {
    params.validate()?;
    ensure_resolvable(grid)?;
    let (values, _) = morlet_oriented(grid, params, j, 0)?;
    Ok(values)
}

fn ensure_resolvable(grid: &FreqGrid) -> Result<()> {
    if grid.side() < 8 {
        return Err(Error::InvalidParam(format!(
            "grid side {} too small to resolve the moment conditions (need >= 8)",
            grid.side()
        )));
    }
    Ok(())
}

fn morlet_oriented(
    grid: &FreqGrid,
    params: &MotherWaveletParams,
    j: i32,
    k: usize,
) -> Result<(Vec<f64>, [f64; 3])> {
    let corr = corrections_on_grid(grid, params, j, k)?;
    let dil = grid.dilation(j);
    let n = grid.side();
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let w = grid.digital(r, c);
            out[r * n + c] = periodized_parts(params, dil, k, w).combine(&corr);
        }
    }
    Ok((out, corr))
}

/// Directional wavelet bank with low-pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveletBank {
    n: usize,
    j_min: i32,
    j_max: i32,
    mother: MotherWaveletParams,
    lowpass_width: f64,
    /// Global amplitude making the spatial l1 norm of the reference filter 1.
    normalization: f64,
    filters: Vec<SpectralFilter>,
    lowpass: SpectralFilter,
    #[serde(skip, default = "none_fft")]
    fft: Option<Fft2d>,
}

fn none_fft() -> Option<Fft2d> {
    None
}

impl WaveletBank {
    /// Builds the bank for scales `j_min ..= j_max` with the default low-pass.
    pub fn build(n: usize, j_min: i32, j_max: i32, mother: MotherWaveletParams) -> Result<Self> {
        Self::build_with_lowpass(n, j_min, j_max, mother, DEFAULT_LOWPASS_WIDTH)
    }

    pub fn build_with_lowpass(
        n: usize,
        j_min: i32,
        j_max: i32,
        mother: MotherWaveletParams,
        lowpass_width: f64,
    ) -> Result<Self> {
        let grid = FreqGrid::new(n)?;
        mother.validate()?;
        ensure_resolvable(&grid)?;
        if j_min > j_max || j_max > 0 {
            return Err(Error::InvalidScales(format!(
                "need j_min <= j_max <= 0, got [{j_min}, {j_max}]"
            )));
        }
        if j_min < grid.pixel_scale() {
            return Err(Error::InvalidScales(format!(
                "finest scale 2^{j_min} is below the pixel size 2^{}",
                grid.pixel_scale()
            )));
        }
        if !(lowpass_width > 0.0) {
            return Err(Error::InvalidParam("lowpass width must be positive".into()));
        }
        let fft = Fft2d::new(n);

        let mask_cache: Vec<Vec<f64>> = (0..ORIENTATIONS)
            .map(|k| {
                let mut m = vec![0.0; n * n];
                for r in 0..n {
                    for c in 0..n {
                        m[r * n + c] = bin_mask(&grid, r, c, k);
                    }
                }
                m
            })
            .collect();

        let masked = |j: i32, k: usize| -> Result<SpectralFilter> {
            let (mut values, corr) = morlet_oriented(&grid, &mother, j, k)?;
            values.iter_mut().zip(&mask_cache[k]).for_each(|(v, m)| *v *= m);
            Ok(SpectralFilter { j, orientation: Orientation::Dir(k), values, correction: corr })
        };

        let reference = masked(grid.pixel_scale() + REFERENCE_SCALE_OFFSET, 0)?;
        let normalization = 1.0 / reference.spatial_l1(&fft);

        let mut filters = Vec::with_capacity(ORIENTATIONS * (j_max - j_min + 1) as usize);
        for j in j_min..=j_max {
            for k in 0..ORIENTATIONS {
                let mut f = masked(j, k)?;
                f.values.iter_mut().for_each(|v| *v *= normalization);
                filters.push(f);
            }
        }

        let dil = grid.dilation(j_max);
        let mut low = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                let (w1, w2) = grid.digital(r, c);
                let rho2 = (dil * lowpass_width).powi(2) * (w1 * w1 + w2 * w2);
                low[r * n + c] = (-0.5 * rho2).exp();
            }
        }
        let lowpass = SpectralFilter {
            j: j_max,
            orientation: Orientation::Low,
            values: low,
            correction: [0.0; 3],
        };

        Ok(Self {
            n,
            j_min,
            j_max,
            mother,
            lowpass_width,
            normalization,
            filters,
            lowpass,
            fft: Some(fft),
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> FreqGrid {
        FreqGrid::new(self.n).expect("bank side validated at construction")
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Finest admissible scale, `-floor(log2 n)`.
    pub fn pixel_scale(&self) -> i32 {
        self.grid().pixel_scale()
    }

    pub fn mother(&self) -> &MotherWaveletParams {
        &self.mother
    }

    pub fn lowpass_width(&self) -> f64 {
        self.lowpass_width
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn filters(&self) -> &[SpectralFilter] {
        &self.filters
    }

    pub fn filters_mut(&mut self) -> &mut [SpectralFilter] {
        &mut self.filters
    }

    pub fn lowpass(&self) -> &SpectralFilter {
        &self.lowpass
    }

    pub fn lowpass_mut(&mut self) -> &mut SpectralFilter {
        &mut self.lowpass
    }

    /// Number of filters including the low-pass.
    pub fn len(&self) -> usize {
        self.filters.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn contains_scale(&self, j: i32) -> bool {
        (self.j_min..=self.j_max).contains(&j)
    }

    /// Filter at scale `j` and orientation `k`.
    pub fn filter(&self, j: i32, k: usize) -> &SpectralFilter {
        assert!(self.contains_scale(j) && k < ORIENTATIONS, "filter ({j},{k}) outside bank");
        &self.filters[(j - self.j_min) as usize * ORIENTATIONS + k]
    }

    pub fn fft(&self) -> Fft2d {
        match &self.fft {
            Some(f) => f.clone(),
            None => Fft2d::new(self.n),
        }
    }

    /// Evaluates filter `(j, k)` off-grid at digital frequency `omega`, using
    /// the correction constants solved on the grid.
    pub fn evaluate(&self, j: i32, k: usize, omega: (f64, f64)) -> f64 {
        let f = self.filter(j, k);
        let parts = periodized_parts(&self.mother, self.grid().dilation(j), k, omega);
        let mask = if omega == (0.0, 0.0) {
            0.0
        } else {
            mask_angle(omega.1.atan2(omega.0) - k as f64 * FRAC_PI_4)
        };
        self.normalization * parts.combine(&f.correction) * mask
    }

    /// Unmasked Morlet factor of filter `(j, k)` on the grid, normalized.
    pub fn morlet_factor(&self, j: i32, k: usize) -> Vec<f64> {
        let grid = self.grid();
        let f = self.filter(j, k);
        let dil = grid.dilation(j);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = self.normalization
                    * periodized_parts(&self.mother, dil, k, grid.digital(r, c)).combine(&f.correction);
            }
        }
        out
    }

    /// Writes the bank as JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut bank: WaveletBank = serde_json::from_str(s)?;
        FreqGrid::new(bank.n)?;
        let d = bank.n * bank.n;
        let expected = ORIENTATIONS * (bank.j_max - bank.j_min + 1).max(0) as usize;
        if bank.filters.len() != expected
            || bank.filters.iter().chain(std::iter::once(&bank.lowpass)).any(|f| f.values.len() != d)
        {
            return Err(Error::Format("bank filter layout does not match its header".into()));
        }
        bank.fft = Some(Fft2d::new(bank.n));
        Ok(bank)
    }
}

/// Littlewood-Paley frame sum at every bin:
/// `|phi_hat|^2 + sum_{j,k} (|psi_hat(w)|^2 + |psi_hat(-w)|^2) / 2`.
///
/// The directional filters cover a half-plane of directions, so for real
/// images the sum is taken over each frequency and its mirror.
pub fn frame_sum(bank: &WaveletBank) -> Vec<f64> {
    let grid = bank.grid();
    let n = bank.side();
    let mut sum: Vec<f64> = bank.lowpass().values.iter().map(|v| v * v).collect();
    for f in bank.filters() {
        for r in 0..n {
            for c in 0..n {
                let (m1, m2) = grid.index(r, c);
                let mirror = grid.bin(-m1, -m2);
                let a = f.values[r * n + c];
                let b = f.values[mirror];
                sum[r * n + c] += 0.5 * (a * a + b * b);
            }
        }
    }
    sum
}

/// Minimum and maximum of the frame sum over nonzero bins.
pub fn check_littlewood_paley(bank: &WaveletBank) -> (f64, f64) {
    let sum = frame_sum(bank);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, s) in sum.iter().enumerate().skip(1) {
        debug_assert!(i != 0);
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    (lo, hi)
}

/// Per-filter vanishing-moment diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentReport {
    pub j: i32,
    pub k: usize,
    /// `|psi_hat(0)|` of the masked filter.
    pub dc_abs: f64,
    /// `|psi_hat_Morlet(0)|` of the unmasked factor.
    pub morlet_dc_abs: f64,
    /// Central finite-difference gradient magnitude of the Morlet factor at DC,
    /// per radian of digital frequency.
    pub morlet_dc_gradient: f64,
    /// Same on the masked filter; only `O(step)` because the mask is one-sided.
    pub masked_dc_gradient: f64,
    /// Max `|psi_hat|` on the lines `r_{-theta} {w1 = 0}`, theta in the cone.
    pub cone_max: f64,
    pub pass: bool,
}

/// Tolerance on the DC value and DC gradient of every filter.
pub const DC_TOLERANCE: f64 = 1e-6;

/// Vanishing-moment report for every directional filter of the bank.
pub fn check_vanishing_moments(bank: &WaveletBank, cone_tolerance: f64) -> Vec<MomentReport> {
    let grid = bank.grid();
    let n = bank.side();
    let step = 2.0 * PI / n as f64;
    let fd = |v: &[f64]| {
        let gx = (v[grid.bin(1, 0)] - v[grid.bin(-1, 0)]) / (2.0 * step);
        let gy = (v[grid.bin(0, 1)] - v[grid.bin(0, -1)]) / (2.0 * step);
        gx.hypot(gy)
    };
    let mut reports = Vec::new();
    for f in bank.filters() {
        let Orientation::Dir(k) = f.orientation else { continue };
        let morlet = bank.morlet_factor(f.j, k);
        let mut cone_max = 0.0f64;
        let thetas = 33;
        let radii = 64;
        for ti in 0..thetas {
            let theta = -FRAC_PI_4 + FRAC_PI_2 * ti as f64 / (thetas - 1) as f64;
            for ri in 0..radii {
                let t = -PI + 2.0 * PI * (ri as f64 + 0.5) / radii as f64;
                // the line {w1 = 0} rotated by r_{-theta}, then into filter k's frame
                let a = theta + k as f64 * FRAC_PI_4;
                let (s, c) = a.sin_cos();
                let w = (-s * t, c * t);
                cone_max = cone_max.max(bank.evaluate(f.j, k, w).abs());
            }
        }
        let dc_abs = f.values[0].abs();
        let morlet_dc_abs = morlet[0].abs();
        let morlet_dc_gradient = fd(&morlet);
        let masked_dc_gradient = fd(&f.values);
        let pass = dc_abs < DC_TOLERANCE
            && morlet_dc_abs < DC_TOLERANCE
            && morlet_dc_gradient < DC_TOLERANCE
            && cone_max <= cone_tolerance;
        reports.push(MomentReport {
            j: f.j,
            k,
            dc_abs,
            morlet_dc_abs,
            morlet_dc_gradient,
            masked_dc_gradient,
            cone_max,
            pass,
        });
    }
    reports
}
