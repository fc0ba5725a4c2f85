//! Experiment harness: error metrics, noise sweeps with log-log slope fits,
//! and the decay experiment on constant-region images.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bank::{MotherWaveletParams, WaveletBank};
use crate::datagen::{sample_geometric_image, GeoImageParams};
use crate::denoise::{add_noise, ortho_threshold_denoise, translation_invariant_denoise, variational_denoise};
use crate::denoise::{NoiseModel, SolverParams, DEFAULT_SHIFTS};
use crate::energy::{BankEnergy, EnergyMode, EnergyParams};
use crate::error::{Error, Result};
use crate::grid::GridImage;
use crate::ortho::OrthoFilterSpec;
use crate::transforms::{decay_profile, Rho};

/// Version of the CSV columns and JSON configs written by this module.
pub const SCHEMA_VERSION: u32 = 1;

/// Mean squared difference.
pub fn mse(a: &GridImage, b: &GridImage) -> Result<f64> {
    if a.side() != b.side() {
        return Err(Error::SizeMismatch { expected: a.side(), found: b.side() });
    }
    let s: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(s / a.dim() as f64)
}

/// `10 log10(peak_range^2 / mse)`; identical images give `+inf`.
pub fn psnr(a: &GridImage, b: &GridImage, peak_range: f64) -> Result<f64> {
    if !(peak_range > 0.0) {
        return Err(Error::InvalidParam(format!("peak range must be > 0, got {peak_range}")));
    }
    let m = mse(a, b)?;
    Ok(if m == 0.0 { f64::INFINITY } else { 10.0 * (peak_range * peak_range / m).log10() })
}

/// Amplitude range of generated images, `[-1, 1]`.
pub const IMAGE_RANGE: f64 = 2.0;

/// The denoisers compared by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Variational estimator with the scattering energy.
    Scattering,
    /// Variational estimator with the dyadic wavelet l1 energy.
    Dyadic,
    /// Orthogonal Symlet-4 soft thresholding.
    Ortho,
    /// Translation-invariant Symlet-4 soft thresholding.
    Ti,
}

impl Estimator {
    pub fn is_variational(self) -> bool {
        matches!(self, Self::Scattering | Self::Dyadic)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Scattering => "scattering",
            Self::Dyadic => "dyadic",
            Self::Ortho => "ortho",
            Self::Ti => "ti",
        }
    }

    pub fn default_energy(self) -> EnergyParams {
        match self {
            Self::Scattering => EnergyParams::scattering(),
            _ => EnergyParams::wavelet(),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scattering" => Ok(Self::Scattering),
            "dyadic" => Ok(Self::Dyadic),
            "ortho" => Ok(Self::Ortho),
            "ti" => Ok(Self::Ti),
            other => Err(Error::InvalidParam(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Default noise variances of a sweep.
pub const DEFAULT_SIGMA2_GRID: [f64; 8] = [1.05, 0.67, 0.43, 0.27, 0.18, 0.11, 0.07, 0.05];

/// Five-point grid of the desk-scale protocol: the default grid without its
/// two largest and its smallest variance.
pub const DESK_SIGMA2_GRID: [f64; 5] = [0.43, 0.27, 0.18, 0.11, 0.07];

/// Levels of the orthogonal transform for a side `n`: down to 4 x 4.
pub fn default_ortho_levels(n: usize) -> usize {
    (n.trailing_zeros() as usize).saturating_sub(2).max(1)
}

/// Denoises `g` with one estimator. `j_max` bounds the first-order scales of
/// the variational estimators; `jprime_extra` extends the second-order scales
/// of the scattering estimator past it.
pub fn denoise_with(
    estimator: Estimator,
    g: &GridImage,
    sigma: f64,
    energy: &EnergyParams,
    solver: &SolverParams,
    j_max: i32,
    jprime_extra: i32,
) -> Result<(GridImage, bool)> {
    let n = g.side();
    match estimator {
        Estimator::Ortho => Ok((ortho_threshold_denoise(g, sigma, &OrthoFilterSpec::sym4(), default_ortho_levels(n))?, false)),
        Estimator::Ti => Ok((
            translation_invariant_denoise(g, sigma, &OrthoFilterSpec::sym4(), default_ortho_levels(n), DEFAULT_SHIFTS)?,
            false,
        )),
        Estimator::Scattering | Estimator::Dyadic => {
            let j_pix = -(n.trailing_zeros() as i32);
            let scattering = estimator == Estimator::Scattering;
            let jp = if scattering { (j_max + jprime_extra).min(-1).max(j_max) } else { j_max };
            let bank = WaveletBank::build(n, j_pix, jp, MotherWaveletParams::default())?;
            let params = EnergyParams {
                mode: if scattering { EnergyMode::Scattering } else { EnergyMode::WaveletOnly },
                j_min: Some(j_pix),
                j_max: Some(j_max),
                jprime_max: Some(jp),
                ..*energy
            };
            let e = BankEnergy::new(&bank, params)?;
            let (h, report) = variational_denoise(g, sigma, &e, solver)?;
            Ok((h, report.failed()))
        }
    }
}

/// Configuration of a noise sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub alphas: Vec<f64>,
    pub estimator: Estimator,
    pub sigma2_grid: Vec<f64>,
    pub realizations: usize,
    /// Image side.
    pub n: usize,
    pub seed: u64,
    /// Energy constants; the estimator's defaults when unset.
    pub energy: Option<EnergyParams>,
    pub solver: SolverParams,
    /// Candidate coarsest first-order scales, as offsets from the pixel scale.
    pub j_max_offsets: Vec<i32>,
    /// Images in the validation batch that selects the coarsest scale.
    pub validation_size: usize,
    /// Fixed coarsest scale per grid point, skipping the validation.
    pub fixed_j_max: Option<Vec<i32>>,
    /// Second-order scales of the scattering estimator reach this many
    /// octaves past the coarsest first-order scale.
    pub jprime_extra: i32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            alphas: vec![2.0],
            estimator: Estimator::Dyadic,
            sigma2_grid: DEFAULT_SIGMA2_GRID.to_vec(),
            realizations: 20,
            n: 64,
            seed: 0,
            energy: None,
            solver: SolverParams::default(),
            j_max_offsets: vec![0, 1, 2],
            validation_size: 5,
            fixed_j_max: None,
            jprime_extra: 2,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParam(format!(
                "sweep schema_version {} is not {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.sigma2_grid.is_empty() || self.sigma2_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParam("every noise variance must be > 0".into()));
        }
        if self.realizations < 2 {
            return Err(Error::InvalidParam("a sweep needs at least 2 realizations".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidParam("a sweep needs at least one alpha".into()));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n));
        }
        if let Some(f) = &self.fixed_j_max {
            if f.len() != self.sigma2_grid.len() {
                return Err(Error::InvalidParam("fixed_j_max must have one entry per noise variance".into()));
            }
        }
        if self.estimator.is_variational() && self.fixed_j_max.is_none() && (self.j_max_offsets.is_empty() || self.validation_size == 0) {
            return Err(Error::InvalidParam("scale selection needs candidates and a validation batch".into()));
        }
        let j_pix = -(self.n.trailing_zeros() as i32);
        let candidates = self.fixed_j_max.clone().unwrap_or_else(|| self.j_max_offsets.iter().map(|o| j_pix + o).collect());
        if candidates.iter().any(|&j| j < j_pix || j > -1) {
            return Err(Error::InvalidScales(format!("coarsest scales {candidates:?} must lie in [{j_pix}, -1]")));
        }
        Ok(())
    }

    pub fn energy_params(&self) -> EnergyParams {
        self.energy.unwrap_or_else(|| self.estimator.default_energy())
    }
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub estimator: Estimator,
    pub alpha: f64,
    pub sigma2: f64,
    pub sigma: f64,
    pub j_max: i32,
    pub realizations: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub psnr_mean: f64,
    /// Solves that stopped on a solver failure; their best iterate is kept.
    pub failures: usize,
    pub wallclock: f64,
}

/// Independent stream seeds from a base seed and a path of tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut x = base;
    for &t in tags {
        x = splitmix(x ^ splitmix(t.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const STREAM_TEST: u64 = 1;
const STREAM_VALIDATION: u64 = 2;

struct Trial {
    mse: f64,
    failed: bool,
}

fn trial(config: &SweepConfig, alpha: f64, sigma2: f64, j_max: i32, stream: u64, index: usize) -> Result<Trial> {
    let tags = [stream, alpha.to_bits(), sigma2.to_bits(), index as u64];
    let image_seed = derive_seed(config.seed, &tags);
    let f = sample_geometric_image(&GeoImageParams::for_alpha(alpha, config.n, image_seed))?.image;
    let sigma = sigma2.sqrt();
    let g = add_noise(&f, NoiseModel { sigma, seed: derive_seed(image_seed, &[0]) })?;
    let (h, failed) = denoise_with(config.estimator, &g, sigma, &config.energy_params(), &config.solver, j_max, config.jprime_extra)?;
    Ok(Trial { mse: mse(&h, &f)?, failed })
}

fn trials(config: &SweepConfig, alpha: f64, sigma2: f64, j_max: i32, stream: u64, count: usize) -> Result<Vec<Trial>> {
    (0..count).into_par_iter().map(|i| trial(config, alpha, sigma2, j_max, stream, i)).collect()
}

/// Coarsest first-order scale minimizing the mean error on the validation
/// batch. Ties keep the finer scale.
pub fn select_j_max(config: &SweepConfig, alpha: f64, sigma2: f64) -> Result<i32> {
    let j_pix = -(config.n.trailing_zeros() as i32);
    let mut best: Option<(f64, i32)> = None;
    for &o in &config.j_max_offsets {
        let j = j_pix + o;
        let t = trials(config, alpha, sigma2, j, STREAM_VALIDATION, config.validation_size)?;
        let m = t.iter().map(|t| t.mse).sum::<f64>() / t.len() as f64;
        if best.map_or(true, |(b, _)| m < b) {
            best = Some((m, j));
        }
    }
    Ok(best.expect("validated candidates are non-empty").1)
}

/// Keys `(alpha, sigma2)` of rows already present in a sweep CSV.
fn done_keys(path: &Path) -> Result<Vec<(u64, u64)>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let rows = read_sweep_csv(path)?;
    Ok(rows.iter().map(|r| (r.alpha.to_bits(), r.sigma2.to_bits())).collect())
}

/// Runs a sweep. With `out`, rows are appended to the CSV as they finish and
/// grid points already in the file are skipped, so an interrupted sweep can
/// be resumed. Returns the rows computed by this call.
pub fn run_noise_sweep(config: &SweepConfig, out: Option<&Path>) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let done = match out {
        Some(p) => done_keys(p)?,
        None => Vec::new(),
    };
    let mut writer = match out {
        Some(p) => {
            let fresh = !p.exists() || std::fs::metadata(p)?.len() == 0;
            let file = OpenOptions::new().create(true).append(true).open(p)?;
            Some(csv::WriterBuilder::new().has_headers(fresh).from_writer(file))
        }
        None => None,
    };
    let j_pix = -(config.n.trailing_zeros() as i32);
    let mut rows = Vec::new();
    for &alpha in &config.alphas {
        for (si, &sigma2) in config.sigma2_grid.iter().enumerate() {
            if done.contains(&(alpha.to_bits(), sigma2.to_bits())) {
                info!("skipping alpha {alpha}, sigma2 {sigma2}: already in the output");
                continue;
            }
            let start = Instant::now();
            let j_max = match (&config.fixed_j_max, config.estimator.is_variational()) {
                (Some(f), _) => f[si],
                (None, true) => select_j_max(config, alpha, sigma2)?,
                (None, false) => j_pix,
            };
            let t = trials(config, alpha, sigma2, j_max, STREAM_TEST, config.realizations)?;
            let row = summarize(config, alpha, sigma2, j_max, &t, start.elapsed().as_secs_f64());
            if row.failures > 0 {
                warn!("alpha {alpha}, sigma2 {sigma2}: {} solver failures", row.failures);
            }
            info!("alpha {alpha} sigma2 {sigma2} j_max {j_max}: mse {:.3e}", row.mse_mean);
            if let Some(w) = writer.as_mut() {
                w.serialize(&row)?;
                w.flush()?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn summarize(config: &SweepConfig, alpha: f64, sigma2: f64, j_max: i32, t: &[Trial], wallclock: f64) -> SweepRow {
    let k = t.len() as f64;
    let mean = t.iter().map(|t| t.mse).sum::<f64>() / k;
    let var = t.iter().map(|t| (t.mse - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let psnr_mean = t.iter().map(|t| 10.0 * (IMAGE_RANGE * IMAGE_RANGE / t.mse).log10()).sum::<f64>() / k;
    SweepRow {
        schema_version: SCHEMA_VERSION,
        estimator: config.estimator,
        alpha,
        sigma2,
        sigma: sigma2.sqrt(),
        j_max,
        realizations: t.len(),
        mse_mean: mean,
        mse_std: var.sqrt(),
        psnr_mean,
        failures: t.iter().filter(|t| t.failed).count(),
        wallclock,
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    if let Some(row) = rows.iter().find(|r| r.schema_version != SCHEMA_VERSION) {
        return Err(Error::Format(format!("sweep CSV has schema_version {}", row.schema_version)));
    }
    Ok(rows)
}

/// Ordinary least-squares line fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub ci_half_width: f64,
    pub points: usize,
}

impl SlopeFit {
    pub fn ci(&self) -> (f64, f64) {
        (self.slope - self.ci_half_width, self.slope + self.ci_half_width)
    }

    pub fn ci_contains(&self, v: f64) -> bool {
        let (lo, hi) = self.ci();
        lo <= v && v <= hi
    }

    pub fn ci_disjoint(&self, other: &SlopeFit) -> bool {
        let (a0, a1) = self.ci();
        let (b0, b1) = other.ci();
        a1 < b0 || b1 < a0
    }
}

/// Two-sided 95% quantile of Student's t with `dof` degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    if dof == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof as f64).expect("positive degrees of freedom").inverse_cdf(0.975)
}

/// OLS fit of `y` on `x` with a 95% interval for the slope.
pub fn fit_line(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidParam(format!("a slope fit needs at least 3 points, got {n}")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParam("slope fit points must be finite".into()));
    }
    let k = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual_rms: (ssr / k).sqrt(),
        ci_half_width: t_quantile_975(n - 2) * se,
        points: n,
    })
}

/// Slope of `log mse_mean` against `log sigma`, per alpha.
pub fn fit_slope(rows: &[SweepRow]) -> Result<BTreeMap<String, SlopeFit>> {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry(format!("{}", r.alpha)).or_default().push((r.sigma.ln(), r.mse_mean.ln()));
    }
    groups.into_iter().map(|(a, pts)| Ok((a, fit_line(&pts)?))).collect()
}

/// The minimax exponent `2 alpha / (alpha + 1)`.
pub fn minimax_slope(alpha: f64) -> f64 {
    2.0 * alpha / (alpha + 1.0)
}

/// Scales of the decay experiment: eight octaves from the pixel scale.
pub const DECAY_SCALES: i32 = 8;
/// Finest scales left out of the decay fit.
pub const DECAY_SKIPPED_FINE_SCALES: i32 = 2;
/// Coarsest scale of the decay fit. Coarser wavelets are not small against
/// the shape, whose inner radius is about 1/6.
pub const DECAY_COARSEST_FIT_SCALE: i32 = -4;

/// Mean decay profile over a batch and its fitted slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayResult {
    /// `(j, mean log2 norm)` over all scales.
    pub profile: Vec<(i32, f64)>,
    /// Fit over the mid scales; `None` for a degenerate batch.
    pub fit: Option<SlopeFit>,
    pub fit_scales: (i32, i32),
    pub degenerate: bool,
}

/// Decay profile averaged over `images` (in log2), with a slope fit over the
/// scales `[j_pix + 2, DECAY_COARSEST_FIT_SCALE]`.
pub fn decay_experiment_on(images: &[GridImage]) -> Result<DecayResult> {
    let n = images.first().ok_or_else(|| Error::InvalidParam("decay experiment needs images".into()))?.side();
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::InvalidParam(format!("decay experiment needs a power-of-two side >= 256, got {n}")));
    }
    let j_pix = -(n.trailing_zeros() as i32);
    let j_top = (j_pix + DECAY_SCALES - 1).min(-1);
    let bank = WaveletBank::build(n, j_pix, j_top, MotherWaveletParams::default())?;
    let profiles = images.iter().map(|f| decay_profile(f, &bank, Rho::Modulus)).collect::<Result<Vec<_>>>()?;
    let degenerate = profiles.iter().any(|p| p.degenerate);
    let k = images.len() as f64;
    let profile: Vec<(i32, f64)> = bank
        .scales()
        .enumerate()
        .map(|(i, j)| (j, profiles.iter().map(|p| p.points[i].1.log2()).sum::<f64>() / k))
        .collect();
    let fit_scales = (j_pix + DECAY_SKIPPED_FINE_SCALES, DECAY_COARSEST_FIT_SCALE.min(j_top));
    let fit = if degenerate {
        None
    } else {
        let pts: Vec<(f64, f64)> = profile
            .iter()
            .filter(|(j, _)| (fit_scales.0..=fit_scales.1).contains(j))
            .map(|&(j, v)| (j as f64, v))
            .collect();
        Some(fit_line(&pts)?)
    };
    Ok(DecayResult { profile, fit, fit_scales, degenerate })
}

/// Decay experiment on constant-region samples of exponent `alpha`.
pub fn run_decay_experiment(alpha: f64, n: usize, seeds: &[u64]) -> Result<DecayResult> {
    let images = seeds
        .par_iter()
        .map(|&s| {
            let mut p = GeoImageParams::for_alpha(alpha, n, s);
            p.constant_regions = true;
            Ok(sample_geometric_image(&p)?.image)
        })
        .collect::<Result<Vec<_>>>()?;
    decay_experiment_on(&images)
}

/// Writes a decay profile as CSV rows `(j, mean_log2_norm)`.
pub fn write_decay_csv(result: &DecayResult, mut out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["j", "mean_log2_norm"])?;
    for (j, v) in &result.profile {
        w.write_record([j.to_string(), format!("{v:.12e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_formula() {
        let a = GridImage::zeros(4);
        let b = GridImage::constant(4, 0.1);
        assert!((psnr(&a, &b, 2.0).unwrap() - 26.0206).abs() < 1e-3);
        assert_eq!(psnr(&a, &a, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let f = fit_line(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && f.residual_rms < 1e-12);
    }

    #[test]
    fn t_quantiles_join_smoothly() {
        assert!((t_quantile_975(3) - 3.182).abs() < 1e-3);
        assert!((t_quantile_975(1000) - 1.962).abs() < 1e-3);
    }

    #[test]
    fn seeds_differ_by_tag() {
        assert_ne!(derive_seed(0, &[1, 2]), derive_seed(0, &[2, 1]));
        assert_eq!(derive_seed(5, &[3]), derive_seed(5, &[3]));
    }
}
