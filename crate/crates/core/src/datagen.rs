//! Sampler of piecewise-regular images: a background field plus a foreground
//! field restricted to a shape bounded by three regular curves.
//!
//! Every field is white noise filtered by a power-law spectrum, so its
//! regularity is set by `alpha` and its smoothness scale by `c`. The image is
//! composed at `4 n` pixels per side, reduced to `n` by keeping the low-pass
//! band of a two-level Symlet-4 transform, and normalized to `[-1, 1]`. The
//! contrast between the foreground and background means (the "gap") is drawn
//! uniformly from `gap_range` and enforced exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{signed_index, Fft2d, GridImage};
use crate::ortho::{fwt_forward, OrthoFilterSpec};

/// Levels of the Symlet-4 reduction from the supersampled grid.
pub const REDUCTION_LEVELS: usize = 2;

/// Parameters of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoImageParams {
    /// Output side.
    pub n: usize,
    pub alpha: f64,
    /// Spectral constant of the background and foreground fields.
    pub c_bg: f64,
    /// Spectral constant of the contour curves.
    pub c_contour: f64,
    pub gap_range: [f64; 2],
    /// Range `[lo, hi]` into which each contour curve is mapped, as a
    /// fraction of the side.
    pub contour_band: [f64; 2],
    /// Replace both fields by constants, leaving only the contour.
    pub constant_regions: bool,
    pub seed: u64,
}

impl Default for GeoImageParams {
    fn default() -> Self {
        Self::for_alpha(2.0, 64, 0)
    }
}

impl GeoImageParams {
    /// Calibrated defaults for an exponent in `[1, 2]`.
    pub fn for_alpha(alpha: f64, n: usize, seed: u64) -> Self {
        Self {
            n,
            alpha,
            c_bg: DEFAULT_C_BG,
            c_contour: default_c_contour(alpha),
            gap_range: [0.4, 0.6],
            contour_band: DEFAULT_CONTOUR_BAND,
            constant_regions: false,
            seed,
        }
    }

    pub fn supersampled_side(&self) -> usize {
        self.n << REDUCTION_LEVELS
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n));
        }
        if !(1.0..=2.0).contains(&self.alpha) {
            return Err(Error::InvalidParam(format!("alpha must lie in [1, 2], got {}", self.alpha)));
        }
        if !(self.c_bg > 0.0 && self.c_contour > 0.0) {
            return Err(Error::InvalidParam("spectral constants must be positive".into()));
        }
        let [g0, g1] = self.gap_range;
        if !(0.0 <= g0 && g0 <= g1 && g1 < 2.0) {
            return Err(Error::InvalidParam(format!("gap range {:?} must lie in [0, 2)", self.gap_range)));
        }
        let [b0, b1] = self.contour_band;
        if !(b0 < b1 && b0.is_finite() && b1.is_finite()) {
            return Err(Error::InvalidParam(format!("contour band {:?} is empty", self.contour_band)));
        }
        Ok(())
    }
}

/// Calibrated spectral constant of the region fields.
pub const DEFAULT_C_BG: f64 = 20.0;
/// Spectral constants of the contour curves at `alpha = 1` and `alpha = 2`,
/// calibrated on the largest divided difference of the curves (1.81 and
/// 11.4 respectively).
pub const C_CONTOUR_ENDPOINTS: [f64; 2] = [3.5, 0.2];

/// Contour constant for `alpha` in `[1, 2]`, geometric interpolation between
/// the calibrated endpoints.
pub fn default_c_contour(alpha: f64) -> f64 {
    let t = (alpha - 1.0).clamp(0.0, 1.0);
    let [a, b] = C_CONTOUR_ENDPOINTS;
    (a.ln() * (1.0 - t) + b.ln() * t).exp()
}
/// Calibrated placement band of the contour curves.
pub const DEFAULT_CONTOUR_BAND: [f64; 2] = [0.58, 0.73];

/// Power-law spectral filter of a regular random field. `omega` is the
/// angular frequency `2 pi m`.
pub fn spectral_filter(alpha: f64, c: f64, omega: &[f64]) -> f64 {
    match omega {
        [w] => (c + w.abs()).powf(-(alpha + 1.0)),
        [w1, w2] => (c + w1 * w1 + w2 * w2).powf(-(alpha + 1.0) / 2.0),
        _ => panic!("fields have one or two dimensions"),
    }
}

/// White noise filtered in Fourier, before taking the real part.
fn filtered_noise(n: usize, alpha: f64, c: f64, dims: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let len = n.pow(dims as u32);
    let mut buf: Vec<Complex64> = (0..len).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
    let w = |m: usize| 2.0 * PI * signed_index(m, n) as f64;
    if dims == 1 {
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (m, v) in buf.iter_mut().enumerate() {
            *v *= spectral_filter(alpha, c, &[w(m)]);
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        buf.iter_mut().for_each(|v| *v /= n as f64);
    } else {
        let fft = Fft2d::new(n);
        fft.forward(&mut buf);
        for r in 0..n {
            for col in 0..n {
                buf[r * n + col] *= spectral_filter(alpha, c, &[w(col), w(r)]);
            }
        }
        fft.inverse(&mut buf);
    }
    buf
}

/// Uniformly regular random field on a grid of side `n` with `dims`
/// dimensions (1 or 2). The filter is even, so the result is real.
pub fn sample_uniform_field(n: usize, alpha: f64, c: f64, dims: usize, seed: u64) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParam(format!("spectral constant must be positive, got {c}")));
    }
    if !(dims == 1 || dims == 2) || n < 2 || n % 2 != 0 {
        return Err(Error::InvalidParam(format!("need dims in {{1, 2}} and even n, got dims {dims}, n {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(filtered_noise(n, alpha, c, dims, &mut rng).into_iter().map(|z| z.re).collect())
}

/// The contour curves of a sample and the rotations of their half-planes.
///
/// Curve `i` is a periodic function on `[0, 1)` sampled at `curves[i].len()`
/// points. Its half-plane is `{ y <= curve(x) }`, rotated by `thetas[i]`
/// about the center of the square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub curves: Vec<Vec<f64>>,
    pub thetas: Vec<f64>,
}

/// Angular interval `[(1 + 3i) 2pi/9, (2 + 3i) 2pi/9]` of contour `i`.
pub fn theta_interval(i: usize) -> (f64, f64) {
    let u = 2.0 * PI / 9.0;
    ((1 + 3 * i) as f64 * u, (2 + 3 * i) as f64 * u)
}

impl ContourSet {
    /// Curve `i` at abscissa `x`, linearly interpolated and extended
    /// periodically.
    pub fn curve_at(&self, i: usize, x: f64) -> f64 {
        let c = &self.curves[i];
        let m = c.len();
        let t = x.rem_euclid(1.0) * m as f64;
        let i0 = (t.floor() as usize) % m;
        let frac = t - t.floor();
        c[i0] * (1.0 - frac) + c[(i0 + 1) % m] * frac
    }

    /// Coordinates of image point `p` in the frame of curve `i`.
    fn to_curve_frame(&self, i: usize, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.thetas[i].sin_cos();
        let (dx, dy) = (p.0 - 0.5, p.1 - 0.5);
        (0.5 + c * dx + s * dy, 0.5 - s * dx + c * dy)
    }

    fn from_curve_frame(&self, i: usize, q: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.thetas[i].sin_cos();
        let (dx, dy) = (q.0 - 0.5, q.1 - 0.5);
        (0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy)
    }

    fn inside(&self, i: usize, p: (f64, f64)) -> bool {
        let q = self.to_curve_frame(i, p);
        q.1 <= self.curve_at(i, q.0)
    }

    /// Whether `p = (x, y)` lies in every half-plane.
    pub fn contains(&self, p: (f64, f64)) -> bool {
        (0..self.curves.len()).all(|i| self.inside(i, p))
    }
}

/// Indicator of the foreground on a grid of side `n`, sampled at pixel
/// centers `((col + 1/2)/n, (row + 1/2)/n)`. Values are 0 or 1.
pub fn build_foreground_mask(contours: &ContourSet, n: usize) -> GridImage {
    let s = 1.0 / n as f64;
    GridImage::from_fn(n, |r, c| {
        let p = ((c as f64 + 0.5) * s, (r as f64 + 0.5) * s);
        if contours.contains(p) {
            1.0
        } else {
            0.0
        }
    })
}

/// Fraction of each pixel covered by the foreground, estimated with
/// `sub x sub` samples in pixels that straddle a contour.
pub fn build_foreground_coverage(contours: &ContourSet, n: usize, sub: usize) -> GridImage {
    let centers = build_foreground_mask(contours, n);
    let s = 1.0 / n as f64;
    let t = s / sub as f64;
    GridImage::from_fn(n, |r, c| {
        let v = centers.get(r, c);
        let uniform = (0..3).all(|a| (0..3).all(|b| centers.get((r + n + a - 1) % n, (c + n + b - 1) % n) == v));
        if uniform || sub <= 1 {
            return v;
        }
        let mut hits = 0usize;
        for a in 0..sub {
            for b in 0..sub {
                let p = (c as f64 * s + (b as f64 + 0.5) * t, r as f64 * s + (a as f64 + 0.5) * t);
                hits += contours.contains(p) as usize;
            }
        }
        hits as f64 / (sub * sub) as f64
    })
}

/// Statistics of a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeoStats {
    /// Length of the foreground boundary inside the square, excluding the
    /// square's own sides.
    pub contour_length: f64,
    /// Largest Hölder-`alpha` divided difference of the contour curves.
    pub contour_lipschitz: f64,
    /// Largest Hölder-`alpha` divided difference of the image along rows and
    /// columns, away from the contours.
    pub region_lipschitz: f64,
}

/// Number of arc-length samples per unit abscissa when measuring contours.
const ARC_SAMPLES: usize = 4096;

/// Length of the part of each curve that bounds the foreground.
pub fn contour_length(contours: &ContourSet) -> f64 {
    let lo = 0.5 - std::f64::consts::FRAC_1_SQRT_2;
    let hi = 0.5 + std::f64::consts::FRAC_1_SQRT_2;
    let steps = ((hi - lo) * ARC_SAMPLES as f64).ceil() as usize;
    let h = (hi - lo) / steps as f64;
    let in_square = |p: (f64, f64)| (0.0..=1.0).contains(&p.0) && (0.0..=1.0).contains(&p.1);
    let mut total = 0.0;
    for i in 0..contours.curves.len() {
        let point = |x: f64| contours.from_curve_frame(i, (x, contours.curve_at(i, x)));
        let mut prev = point(lo);
        for s in 1..=steps {
            let next = point(lo + s as f64 * h);
            let mid = ((prev.0 + next.0) / 2.0, (prev.1 + next.1) / 2.0);
            let bounding = in_square(mid) && (0..contours.curves.len()).all(|k| k == i || contours.inside(k, mid));
            if bounding {
                total += (next.0 - prev.0).hypot(next.1 - prev.1);
            }
            prev = next;
        }
    }
    total
}

/// Hölder-`alpha` seminorm of a periodic 1-D sequence with sample step `h`,
/// estimated by divided differences up to lag `max_lag`. For `alpha = 1` it
/// is the largest slope; for `alpha > 1` the largest change of slope over a
/// lag `t`, divided by `t^(alpha - 1)`.
pub fn holder_seminorm(values: &[f64], h: f64, alpha: f64, max_lag: usize, periodic: bool) -> f64 {
    let m = values.len();
    if m < 3 {
        return 0.0;
    }
    let slopes: Vec<f64> = if periodic {
        (0..m).map(|i| (values[(i + 1) % m] - values[i]) / h).collect()
    } else {
        values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    };
    let beta = alpha - 1.0;
    if beta <= 0.0 {
        return slopes.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    }
    let ms = slopes.len();
    let mut best = 0.0f64;
    for lag in 1..=max_lag.min(ms - 1) {
        let t = (lag as f64 * h).powf(beta);
        let count = if periodic { ms } else { ms - lag };
        for i in 0..count {
            let d = slopes[(i + lag) % ms] - slopes[i];
            best = best.max(d.abs() / t);
        }
    }
    best
}

/// Largest lag of the divided differences.
const HOLDER_MAX_LAG: usize = 8;

/// Distance in pixels kept from the contours by the region estimate, wide
/// enough to clear the support of the reduction filter.
const REGION_MARGIN: usize = 6;

/// Statistics of a generated image.
///
/// The region estimate scans rows and columns of `image` and only uses runs
/// of pixels at least `REGION_MARGIN` pixels away from the contours.
pub fn estimate_stats(image: &GridImage, contours: &ContourSet, alpha: f64) -> GeoStats {
    let contour_lipschitz = contours
        .curves
        .iter()
        .map(|c| holder_seminorm(c, 1.0 / c.len() as f64, alpha, HOLDER_MAX_LAG, true))
        .fold(0.0, f64::max);

    let n = image.side();
    let mask = build_foreground_mask(contours, n);
    let m = REGION_MARGIN;
    let interior = |r: usize, c: usize| {
        let v = mask.get(r, c);
        (0..=2 * m).all(|a| (0..=2 * m).all(|b| mask.get((r + n + a - m) % n, (c + n + b - m) % n) == v))
    };
    let h = 1.0 / n as f64;
    let mut region_lipschitz = 0.0f64;
    for axis in 0..2 {
        for line in 0..n {
            let mut run: Vec<f64> = Vec::new();
            for t in 0..=n {
                let ok = t < n && {
                    let (r, c) = if axis == 0 { (line, t) } else { (t, line) };
                    interior(r, c)
                };
                if ok {
                    let (r, c) = if axis == 0 { (line, t) } else { (t, line) };
                    run.push(image.get(r, c));
                } else {
                    if run.len() >= 3 {
                        region_lipschitz = region_lipschitz.max(holder_seminorm(&run, h, alpha, HOLDER_MAX_LAG, false));
                    }
                    run.clear();
                }
            }
        }
    }
    GeoStats { contour_length: contour_length(contours), contour_lipschitz, region_lipschitz }
}

/// A generated image with its geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoSample {
    pub image: GridImage,
    pub contours: ContourSet,
    /// Signed difference between foreground and background means.
    pub gap: f64,
    pub stats: GeoStats,
}

/// Samples per contour curve, fixed so that the geometry does not depend on
/// the output side.
pub const CURVE_SAMPLES: usize = 4096;

/// Subsamples per axis when measuring pixel coverage along the contours.
pub const COVERAGE_SUBSAMPLES: usize = 8;

/// Attempts at drawing contours before giving up on a degenerate shape.
const MAX_SHAPE_ATTEMPTS: usize = 64;

fn block_fraction(mask: &GridImage, n: usize) -> Vec<f64> {
    let f = mask.side() / n;
    let mut out = vec![0.0; n * n];
    for r in 0..mask.side() {
        for c in 0..mask.side() {
            out[(r / f) * n + c / f] += mask.get(r, c);
        }
    }
    let s = 1.0 / (f * f) as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

/// Two-level Symlet-4 low-pass band, divided by 4 to keep amplitudes.
fn reduce(values: Vec<f64>, side: usize) -> Result<Vec<f64>> {
    let img = GridImage::from_vec(side, values)?;
    let pyr = fwt_forward(&img, &OrthoFilterSpec::sym4(), REDUCTION_LEVELS)?;
    let s = 1.0 / (1 << REDUCTION_LEVELS) as f64;
    Ok(pyr.approx.into_iter().map(|v| v * s).collect())
}

/// Affine map of `values` onto `[-1, 1]`.
fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| 2.0 * (v - lo) / span - 1.0).collect()
}

/// Mean over full foreground blocks minus mean over full background blocks.
fn signed_gap(values: &[f64], fraction: &[f64]) -> f64 {
    let (mut sf, mut nf, mut sb, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for (v, f) in values.iter().zip(fraction) {
        if *f == 1.0 {
            sf += v;
            nf += 1;
        } else if *f == 0.0 {
            sb += v;
            nb += 1;
        }
    }
    sf / nf as f64 - sb / nb as f64
}

fn draw_contours(params: &GeoImageParams, m: usize, rng: &mut ChaCha8Rng) -> ContourSet {
    let [b0, b1] = params.contour_band;
    let mut curves = Vec::with_capacity(3);
    let mut thetas = Vec::with_capacity(3);
    for i in 0..3 {
        let (t0, t1) = theta_interval(i);
        thetas.push(rng.gen_range(t0..t1));
        let raw: Vec<f64> = filtered_noise(m, params.alpha, params.c_contour, 1, rng).into_iter().map(|z| z.re).collect();
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        curves.push(raw.iter().map(|v| b0 + (b1 - b0) * (v - lo) / span).collect());
    }
    ContourSet { curves, thetas }
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let s = if sd > 0.0 { 1.0 / sd } else { 0.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) * s);
}

/// Draws one image. Deterministic in `params`.
pub fn sample_geometric_image(params: &GeoImageParams) -> Result<GeoSample> {
    params.validate()?;
    let n = params.n;
    let big = params.supersampled_side();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let (contours, mask, fraction) = {
        let mut attempt = 0;
        loop {
            let contours = draw_contours(params, CURVE_SAMPLES, &mut rng);
            let mask = build_foreground_coverage(&contours, big, COVERAGE_SUBSAMPLES);
            let fraction = block_fraction(&mask, n);
            let has_fg = fraction.iter().any(|&f| f == 1.0);
            let has_bg = fraction.iter().any(|&f| f == 0.0);
            if has_fg && has_bg {
                break (contours, mask, fraction);
            }
            attempt += 1;
            if attempt == MAX_SHAPE_ATTEMPTS {
                return Err(Error::Degenerate("could not draw a shape with both regions".into()));
            }
        }
    };

    let target = rng.gen_range(params.gap_range[0]..=params.gap_range[1]);
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let reduced_mask = reduce(mask.values().to_vec(), big)?;

    let values = if params.constant_regions {
        // the reduction blurs past block edges, so scale by the realized gap
        let centered: Vec<f64> = reduced_mask.iter().map(|m| m - 0.5).collect();
        let unit = signed_gap(&centered, &fraction);
        if !(unit > 0.0) {
            return Err(Error::Degenerate("foreground and background are not separated".into()));
        }
        centered.iter().map(|v| sign * target * v / unit).collect::<Vec<_>>()
    } else {
        let mut bg: Vec<f64> = filtered_noise(big, params.alpha, params.c_bg, 2, &mut rng).into_iter().map(|z| z.re).collect();
        let mut fg: Vec<f64> = filtered_noise(big, params.alpha, params.c_bg, 2, &mut rng).into_iter().map(|z| z.re).collect();
        standardize(&mut bg);
        standardize(&mut fg);
        let composed: Vec<f64> = bg.iter().zip(&fg).zip(mask.values()).map(|((b, f), m)| b + m * f).collect();
        let base = reduce(composed, big)?;
        let at = |shift: f64| -> Vec<f64> {
            normalize(&base.iter().zip(&reduced_mask).map(|(b, m)| b + shift * m).collect::<Vec<_>>())
        };
        let goal = sign * target;
        let g = |shift: f64| signed_gap(&at(shift), &fraction) - goal;
        // bracket the root, then bisect
        let (mut lo, mut hi) = (-1.0, 1.0);
        while g(lo) > 0.0 {
            lo *= 2.0;
            if lo < -1e12 {
                return Err(Error::Degenerate("gap bracket diverged".into()));
            }
        }
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Degenerate("gap bracket diverged".into()));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        at(0.5 * (lo + hi))
    };

    let image = GridImage::from_vec(n, values)?;
    let gap = signed_gap(image.values(), &fraction);
    let tol = 1e-9;
    if !(gap.abs() >= params.gap_range[0] - tol && gap.abs() <= params.gap_range[1] + tol) {
        return Err(Error::Degenerate(format!("realized gap {gap} is outside {:?}", params.gap_range)));
    }
    let stats = estimate_stats(&image, &contours, params.alpha);
    Ok(GeoSample { image, contours, gap, stats })
}
