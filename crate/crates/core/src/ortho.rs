//! Separable 2-D orthogonal fast wavelet transform with periodic extension.
//!
//! One analysis step filters and downsamples every row, then every column:
//! `a[k] = sum_n h[n] x[(2k + n) mod m]` and the same with the high-pass
//! `g[n] = (-1)^n h[L - 1 - n]`. Synthesis is the adjoint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridImage;

const REGISTRY_JSON: &str = include_str!("filters.json");

/// Tolerance of the unit-norm and unit-DC-gain checks on a low-pass filter.
const FILTER_TOLERANCE: f64 = 1e-10;

/// An orthogonal quadrature-mirror filter pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoFilterSpec {
    pub name: String,
    pub lowpass: Vec<f64>,
    pub vanishing_moments: u32,
}

#[derive(Deserialize)]
struct RegistryEntry {
    lowpass: Vec<f64>,
    vanishing_moments: u32,
}

impl OrthoFilterSpec {
    /// Looks up a filter in the bundled registry ("haar", "sym4").
    pub fn named(name: &str) -> Result<Self> {
        let mut reg = registry()?;
        reg.remove(name)
            .ok_or_else(|| Error::InvalidParam(format!("unknown orthogonal filter {name:?}")))
    }

    pub fn haar() -> Self {
        Self::named("haar").expect("bundled registry holds haar")
    }

    pub fn sym4() -> Self {
        Self::named("sym4").expect("bundled registry holds sym4")
    }

    /// Checks `||h||_2 = 1` and `sum h = sqrt 2`.
    pub fn validate(&self) -> Result<()> {
        if self.lowpass.len() < 2 || self.lowpass.len() % 2 != 0 {
            return Err(Error::InvalidParam(format!("filter {} must have even length >= 2", self.name)));
        }
        let norm2: f64 = self.lowpass.iter().map(|v| v * v).sum();
        let sum: f64 = self.lowpass.iter().sum();
        if (norm2 - 1.0).abs() > FILTER_TOLERANCE || (sum - 2f64.sqrt()).abs() > FILTER_TOLERANCE {
            return Err(Error::InvalidParam(format!(
                "filter {} is not an orthonormal low-pass (||h||^2 = {norm2}, sum = {sum})",
                self.name
            )));
        }
        Ok(())
    }

    pub fn highpass(&self) -> Vec<f64> {
        let l = self.lowpass.len();
        (0..l)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * self.lowpass[l - 1 - n])
            .collect()
    }
}

/// All bundled filters, validated.
pub fn registry() -> Result<BTreeMap<String, OrthoFilterSpec>> {
    let raw: BTreeMap<String, RegistryEntry> = serde_json::from_str(REGISTRY_JSON)?;
    raw.into_iter()
        .map(|(name, e)| {
            let spec = OrthoFilterSpec { name: name.clone(), lowpass: e.lowpass, vanishing_moments: e.vanishing_moments };
            spec.validate()?;
            Ok((name, spec))
        })
        .collect()
}

/// Detail bands of one level. The first letter names the filter applied
/// along rows (horizontal axis), the second the filter along columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetailBands {
    pub side: usize,
    pub lh: Vec<f64>,
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

impl DetailBands {
    pub fn bands(&self) -> [&Vec<f64>; 3] {
        [&self.lh, &self.hl, &self.hh]
    }

    pub fn bands_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.lh, &mut self.hl, &mut self.hh]
    }
}

/// Subband pyramid. `details[0]` is the finest level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pyramid {
    pub n: usize,
    pub approx_side: usize,
    pub approx: Vec<f64>,
    pub details: Vec<DetailBands>,
}

impl Pyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Iterates over every coefficient, approximation first.
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.approx
            .iter()
            .chain(self.details.iter().flat_map(|d| d.lh.iter().chain(&d.hl).chain(&d.hh)))
            .copied()
    }

    /// Applies `f` to every detail coefficient.
    pub fn map_details(&mut self, mut f: impl FnMut(f64) -> f64) {
        for d in &mut self.details {
            for band in d.bands_mut() {
                band.iter_mut().for_each(|v| *v = f(*v));
            }
        }
    }
}

fn analyze_1d(x: &[f64], h: &[f64], g: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let m = x.len();
    for k in 0..m / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for (n, (hn, gn)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + n) % m];
            a += hn * v;
            d += gn * v;
        }
        lo[k] = a;
        hi[k] = d;
    }
}

fn synthesize_1d(lo: &[f64], hi: &[f64], h: &[f64], g: &[f64], out: &mut [f64]) {
    let m = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..m / 2 {
        for (n, (hn, gn)) in h.iter().zip(g).enumerate() {
            out[(2 * k + n) % m] += hn * lo[k] + gn * hi[k];
        }
    }
}

/// Splits a `side x side` block into four `side/2` quadrants `(ll, lh, hl, hh)`.
fn analyze_2d(x: &[f64], side: usize, h: &[f64], g: &[f64]) -> [Vec<f64>; 4] {
    let half = side / 2;
    // rows: low/high along the horizontal axis
    let mut row_lo = vec![0.0; side * half];
    let mut row_hi = vec![0.0; side * half];
    for r in 0..side {
        analyze_1d(
            &x[r * side..(r + 1) * side],
            h,
            g,
            &mut row_lo[r * half..(r + 1) * half],
            &mut row_hi[r * half..(r + 1) * half],
        );
    }
    let mut col = vec![0.0; side];
    let (mut lo, mut hi) = (vec![0.0; half], vec![0.0; half]);
    let mut split_cols = |src: &[f64]| {
        let mut low = vec![0.0; half * half];
        let mut high = vec![0.0; half * half];
        for c in 0..half {
            for r in 0..side {
                col[r] = src[r * half + c];
            }
            analyze_1d(&col, h, g, &mut lo, &mut hi);
            for r in 0..half {
                low[r * half + c] = lo[r];
                high[r * half + c] = hi[r];
            }
        }
        (low, high)
    };
    let (ll, lh) = split_cols(&row_lo);
    let (hl, hh) = split_cols(&row_hi);
    [ll, lh, hl, hh]
}

fn synthesize_2d(q: [&[f64]; 4], half: usize, h: &[f64], g: &[f64]) -> Vec<f64> {
    let side = 2 * half;
    let merge_cols = |low: &[f64], high: &[f64]| {
        let mut dst = vec![0.0; side * half];
        let (mut lo, mut hi) = (vec![0.0; half], vec![0.0; half]);
        let mut col = vec![0.0; side];
        for c in 0..half {
            for r in 0..half {
                lo[r] = low[r * half + c];
                hi[r] = high[r * half + c];
            }
            synthesize_1d(&lo, &hi, h, g, &mut col);
            for r in 0..side {
                dst[r * half + c] = col[r];
            }
        }
        dst
    };
    let row_lo = merge_cols(q[0], q[1]);
    let row_hi = merge_cols(q[2], q[3]);
    let mut out = vec![0.0; side * side];
    for r in 0..side {
        synthesize_1d(
            &row_lo[r * half..(r + 1) * half],
            &row_hi[r * half..(r + 1) * half],
            h,
            g,
            &mut out[r * side..(r + 1) * side],
        );
    }
    out
}

fn check_levels(n: usize, levels: usize) -> Result<()> {
    if levels == 0 || n % (1 << levels) != 0 {
        return Err(Error::InvalidParam(format!(
            "side {n} is not divisible by 2^{levels} (levels must be >= 1)"
        )));
    }
    Ok(())
}

/// Forward transform over `levels` levels.
pub fn fwt_forward(image: &GridImage, spec: &OrthoFilterSpec, levels: usize) -> Result<Pyramid> {
    let n = image.side();
    check_levels(n, levels)?;
    spec.validate()?;
    let (h, g) = (&spec.lowpass, spec.highpass());
    let mut current = image.values().to_vec();
    let mut side = n;
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let [ll, lh, hl, hh] = analyze_2d(&current, side, h, &g);
        side /= 2;
        details.push(DetailBands { side, lh, hl, hh });
        current = ll;
    }
    Ok(Pyramid { n, approx_side: side, approx: current, details })
}

/// Inverse transform.
pub fn fwt_inverse(pyr: &Pyramid, spec: &OrthoFilterSpec) -> Result<GridImage> {
    check_levels(pyr.n, pyr.levels())?;
    spec.validate()?;
    let mut side = pyr.n >> pyr.levels();
    if pyr.approx_side != side || pyr.approx.len() != side * side {
        return Err(Error::Format("approximation band does not match the pyramid depth".into()));
    }
    let (h, g) = (&spec.lowpass, spec.highpass());
    let mut current = pyr.approx.clone();
    for d in pyr.details.iter().rev() {
        if d.side != side || d.bands().iter().any(|b| b.len() != side * side) {
            return Err(Error::Format(format!("detail bands at side {} are inconsistent", d.side)));
        }
        current = synthesize_2d([&current, &d.lh, &d.hl, &d.hh], side, h, &g);
        side *= 2;
    }
    GridImage::from_vec(pyr.n, current)
}
