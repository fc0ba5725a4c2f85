//! Non-subsampled dyadic wavelet transform, second-order scattering, and the
//! l1 norms of their coefficient fields.
//!
//! Every convolution is circular and computed spectrally: the image spectrum is
//! multiplied by the filter values and transformed back. The discrete l1 norm
//! of a field is `(1/d) sum |z|`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::{WaveletBank, ORIENTATIONS};
use crate::error::{Error, Result};
use crate::grid::{Fft2d, GridImage};

/// Pointwise nonlinearity applied between the two wavelet transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho {
    /// Smoothed modulus `sqrt(|z|^2 + eps^2) - eps`; exact modulus at `eps = 0`.
    #[default]
    Modulus,
    /// `max(Re z, 0) + i max(Im z, 0)`.
    Rectifier,
}

/// Orientation perpendicular to `k`.
pub fn perpendicular(k: usize) -> usize {
    (k + 2) % ORIENTATIONS
}

/// Smoothed modulus of one value.
pub fn smooth_modulus(z: Complex64, eps: f64) -> f64 {
    if eps == 0.0 {
        z.norm()
    } else {
        (z.norm_sqr() + eps * eps).sqrt() - eps
    }
}

/// Applies `rho` pointwise.
pub fn apply_rho(field: &[Complex64], rho: Rho, eps: f64) -> Vec<Complex64> {
    match rho {
        Rho::Modulus => field.iter().map(|&z| Complex64::new(smooth_modulus(z, eps), 0.0)).collect(),
        Rho::Rectifier => field
            .iter()
            .map(|z| Complex64::new(z.re.max(0.0), z.im.max(0.0)))
            .collect(),
    }
}

/// Discrete l1 norm, `(1/d) sum |z|`.
pub fn l1_mean(field: &[Complex64]) -> f64 {
    field.iter().map(|z| z.norm()).sum::<f64>() / field.len() as f64
}

/// Multiplies a spectrum by a real filter and transforms back.
pub(crate) fn filter_spectrum(fft: &Fft2d, spectrum: &[Complex64], filter: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = spectrum.iter().zip(filter).map(|(s, f)| s * f).collect();
    fft.inverse(&mut buf);
    buf
}

/// First-order coefficients `h * psi_j^k` and `h * phi_J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoeffs {
    pub n: usize,
    pub j_min: i32,
    pub j_max: i32,
    pub low: Vec<Complex64>,
    /// Indexed by `(j - j_min) * 4 + k`.
    pub detail: Vec<Vec<Complex64>>,
}

impl WaveletCoeffs {
    pub fn detail(&self, j: i32, k: usize) -> &[Complex64] {
        &self.detail[(j - self.j_min) as usize * ORIENTATIONS + k]
    }

    pub fn keys(&self) -> impl Iterator<Item = (i32, usize)> {
        let (a, b) = (self.j_min, self.j_max);
        (a..=b).flat_map(|j| (0..ORIENTATIONS).map(move |k| (j, k)))
    }
}

/// Dyadic wavelet transform of `image` with every filter of the bank.
pub fn dwt_forward(image: &GridImage, bank: &WaveletBank) -> Result<WaveletCoeffs> {
    image.ensure_side(bank.side())?;
    let fft = bank.fft();
    let spectrum = fft.forward_real(image.values());
    let detail = bank
        .filters()
        .par_iter()
        .map(|f| filter_spectrum(&fft, &spectrum, &f.values))
        .collect();
    let low = filter_spectrum(&fft, &spectrum, &bank.lowpass().values);
    Ok(WaveletCoeffs { n: bank.side(), j_min: bank.j_min(), j_max: bank.j_max(), low, detail })
}

/// Index of a second-order path `(j, k) -> (j2, k2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathKey {
    pub j: i32,
    pub k: usize,
    pub j2: i32,
    pub k2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrder {
    pub key: PathKey,
    pub field: Vec<Complex64>,
}

/// First- and second-order scattering coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCoeffs {
    pub n: usize,
    pub rho: Rho,
    pub epsilon: f64,
    /// `(j, k, h * psi_j^k)` for every first scale.
    pub first: Vec<((i32, usize), Vec<Complex64>)>,
    /// `rho(h * psi_j^k) * psi_j2^k2` for `j < j2`, sorted by key.
    pub second: Vec<SecondOrder>,
}

impl ScatteringCoeffs {
    pub fn first(&self, j: i32, k: usize) -> Option<&[Complex64]> {
        self.first.iter().find(|(key, _)| *key == (j, k)).map(|(_, f)| f.as_slice())
    }

    pub fn second(&self, key: PathKey) -> Option<&[Complex64]> {
        self.second
            .binary_search_by(|s| s.key.cmp(&key))
            .ok()
            .map(|i| self.second[i].field.as_slice())
    }
}

/// Scattering transform over all bank scales: first order for every filter and
/// second order for every `j < j2 <= j_max`.
pub fn scattering_forward(image: &GridImage, bank: &WaveletBank, rho: Rho, eps: f64) -> Result<ScatteringCoeffs> {
    scattering_forward_range(image, bank, rho, eps, bank.j_max(), bank.j_max())
}

/// Scattering transform with first scales `j_min ..= first_max` and second
/// scales up to `jprime_max`.
pub fn scattering_forward_range(
    image: &GridImage,
    bank: &WaveletBank,
    rho: Rho,
    eps: f64,
    first_max: i32,
    jprime_max: i32,
) -> Result<ScatteringCoeffs> {
    image.ensure_side(bank.side())?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidParam("epsilon must be >= 0".into()));
    }
    if !bank.contains_scale(first_max) || !bank.contains_scale(jprime_max) {
        return Err(Error::InvalidScales(format!(
            "scales up to {} are not all in the bank [{}, {}]",
            first_max.max(jprime_max),
            bank.j_min(),
            bank.j_max()
        )));
    }
    let fft = bank.fft();
    let spectrum = fft.forward_real(image.values());
    let keys: Vec<(i32, usize)> = (bank.j_min()..=first_max)
        .flat_map(|j| (0..ORIENTATIONS).map(move |k| (j, k)))
        .collect();
    let per_channel: Vec<(((i32, usize), Vec<Complex64>), Vec<SecondOrder>)> = keys
        .par_iter()
        .map(|&(j, k)| {
            let first = filter_spectrum(&fft, &spectrum, &bank.filter(j, k).values);
            let mut u = apply_rho(&first, rho, eps);
            fft.forward(&mut u);
            let mut second = Vec::new();
            for j2 in (j + 1)..=jprime_max {
                for k2 in 0..ORIENTATIONS {
                    let field = filter_spectrum(&fft, &u, &bank.filter(j2, k2).values);
                    second.push(SecondOrder { key: PathKey { j, k, j2, k2 }, field });
                }
            }
            (((j, k), first), second)
        })
        .collect();
    let mut first = Vec::with_capacity(per_channel.len());
    let mut second = Vec::new();
    for (f, s) in per_channel {
        first.push(f);
        second.extend(s);
    }
    second.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(ScatteringCoeffs { n: bank.side(), rho, epsilon: eps, first, second })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstNorm {
    pub j: i32,
    pub k: usize,
    pub l1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondNorm {
    pub key: PathKey,
    pub l1: f64,
}

/// Discrete l1 norms of every scattering field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub first_l1: Vec<FirstNorm>,
    pub second_l1: Vec<SecondNorm>,
}

impl NormTable {
    pub fn first(&self, j: i32, k: usize) -> Option<f64> {
        self.first_l1.iter().find(|e| e.j == j && e.k == k).map(|e| e.l1)
    }

    pub fn second(&self, key: PathKey) -> Option<f64> {
        self.second_l1
            .binary_search_by(|e| e.key.cmp(&key))
            .ok()
            .map(|i| self.second_l1[i].l1)
    }
}

pub fn norms(coeffs: &ScatteringCoeffs) -> NormTable {
    NormTable {
        first_l1: coeffs
            .first
            .iter()
            .map(|((j, k), f)| FirstNorm { j: *j, k: *k, l1: l1_mean(f) })
            .collect(),
        second_l1: coeffs
            .second
            .iter()
            .map(|s| SecondNorm { key: s.key, l1: l1_mean(&s.field) })
            .collect(),
    }
}

/// Diagonal decay profile `j -> mean_k || |f * psi_j^k| * psi_j^{k_perp} ||_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub points: Vec<(i32, f64)>,
    /// True when every norm is negligible (flat image).
    pub degenerate: bool,
}

/// Minimum number of bank scales for a decay profile.
pub const DECAY_MIN_SCALES: i32 = 5;

/// Norms below this are treated as zero when flagging a flat image.
const DEGENERATE_NORM: f64 = 1e-12;

pub fn decay_profile(image: &GridImage, bank: &WaveletBank, rho: Rho) -> Result<DecayProfile> {
    image.ensure_side(bank.side())?;
    let count = bank.j_max() - bank.j_min() + 1;
    if count < DECAY_MIN_SCALES {
        return Err(Error::InvalidScales(format!(
            "decay profile needs at least {DECAY_MIN_SCALES} scales, bank has {count}"
        )));
    }
    let fft = bank.fft();
    let spectrum = fft.forward_real(image.values());
    let points: Vec<(i32, f64)> = bank
        .scales()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| {
            let mut total = 0.0;
            for k in 0..ORIENTATIONS {
                let first = filter_spectrum(&fft, &spectrum, &bank.filter(j, k).values);
                let mut u = apply_rho(&first, rho, 0.0);
                fft.forward(&mut u);
                let second = filter_spectrum(&fft, &u, &bank.filter(j, perpendicular(k)).values);
                total += l1_mean(&second);
            }
            (j, total / ORIENTATIONS as f64)
        })
        .collect();
    let degenerate = points.iter().all(|&(_, v)| v < DEGENERATE_NORM);
    Ok(DecayProfile { points, degenerate })
}
