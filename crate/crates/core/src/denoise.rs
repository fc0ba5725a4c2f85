//! Denoisers: the variational estimator `argmin_h (1/2) mean((h - g)^2) +
//! sigma^2 U(h)` and the orthogonal and translation-invariant soft-thresholding
//! baselines.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::grid::GridImage;
use crate::lbfgs::{minimize, LbfgsParams, SolveReport, StopReason};
use crate::ortho::{fwt_forward, fwt_inverse, OrthoFilterSpec};

/// Additive white Gaussian noise of standard deviation `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

pub fn add_noise(f: &GridImage, noise: NoiseModel) -> Result<GridImage> {
    if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(Error::InvalidParam(format!("noise sigma must be >= 0, got {}", noise.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = f.clone();
    if noise.sigma > 0.0 {
        for v in out.values_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise.sigma * z;
        }
    }
    Ok(out)
}

/// `sign(a) max(|a| - t, 0)`.
pub fn soft_threshold(a: f64, t: f64) -> f64 {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        0.0
    }
}

/// Universal threshold `sigma sqrt(2 ln d)`.
pub fn universal_threshold(sigma: f64, d: usize) -> f64 {
    sigma * (2.0 * (d as f64).ln()).sqrt()
}

/// Soft-thresholds every detail coefficient of an orthogonal transform at the
/// universal threshold and keeps the approximation band.
pub fn ortho_threshold_denoise(g: &GridImage, sigma: f64, spec: &OrthoFilterSpec, levels: usize) -> Result<GridImage> {
    ortho_threshold_at(g, universal_threshold(sigma, g.dim()), spec, levels)
}

/// Same with an explicit threshold.
pub fn ortho_threshold_at(g: &GridImage, t: f64, spec: &OrthoFilterSpec, levels: usize) -> Result<GridImage> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParam(format!("threshold must be >= 0, got {t}")));
    }
    let mut pyr = fwt_forward(g, spec, levels)?;
    pyr.map_details(|v| soft_threshold(v, t));
    fwt_inverse(&pyr, spec)
}

/// Number of circular shifts per axis averaged by the translation-invariant
/// estimator.
pub const DEFAULT_SHIFTS: usize = 10;

/// Averages `shifts x shifts` shift-threshold-unshift estimates.
pub fn translation_invariant_denoise(
    g: &GridImage,
    sigma: f64,
    spec: &OrthoFilterSpec,
    levels: usize,
    shifts: usize,
) -> Result<GridImage> {
    if shifts == 0 {
        return Err(Error::InvalidParam("shifts must be >= 1".into()));
    }
    let t = universal_threshold(sigma, g.dim());
    let mut acc = vec![0.0; g.dim()];
    for dr in 0..shifts as isize {
        for dc in 0..shifts as isize {
            let est = ortho_threshold_at(&g.shifted(dr, dc), t, spec, levels)?.shifted(-dr, -dc);
            acc.iter_mut().zip(est.values()).for_each(|(a, v)| *a += v);
        }
    }
    let s = 1.0 / (shifts * shifts) as f64;
    acc.iter_mut().for_each(|a| *a *= s);
    GridImage::from_vec(g.side(), acc)
}

/// Starting point of the variational solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    FromNoisy,
    /// Translation-invariant Symlet-4 thresholding estimate.
    FromWaveletDenoised,
    /// Uniform noise over the range of the observation.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub init: Init,
    pub seed: u64,
    #[serde(flatten)]
    pub lbfgs: LbfgsParams,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { init: Init::FromNoisy, seed: 0, lbfgs: LbfgsParams::default() }
    }
}

/// Levels of the orthogonal transform used for the wavelet initialization.
const INIT_LEVELS: usize = 3;

fn initial_point(g: &GridImage, sigma: f64, solver: &SolverParams) -> Result<GridImage> {
    match solver.init {
        Init::FromNoisy => Ok(g.clone()),
        Init::FromWaveletDenoised => {
            let levels = INIT_LEVELS.min(g.side().trailing_zeros() as usize).max(1);
            translation_invariant_denoise(g, sigma, &OrthoFilterSpec::sym4(), levels, DEFAULT_SHIFTS)
        }
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(solver.seed);
            let (lo, hi) = (g.min(), g.max());
            let span = if hi > lo { hi - lo } else { 1.0 };
            Ok(GridImage::from_fn(g.side(), |_, _| lo + span * rng.gen::<f64>()))
        }
    }
}

/// Variational estimate. Solver failures are reported, not raised: the best
/// iterate is returned with the report flagging the failure.
pub fn variational_denoise(
    g: &GridImage,
    sigma: f64,
    energy: &dyn Energy,
    solver: &SolverParams,
) -> Result<(GridImage, SolveReport)> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParam(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        let report = SolveReport {
            iterations: 0,
            evaluations: 0,
            initial_objective: 0.0,
            final_objective: 0.0,
            stop: StopReason::GradientTolerance,
            history: vec![0.0],
        };
        return Ok((g.clone(), report));
    }
    let n = g.side();
    let d = g.dim() as f64;
    let s2 = sigma * sigma;
    let x0 = initial_point(g, sigma, solver)?.into_values();
    let objective = |x: &[f64], grad: &mut [f64]| -> Result<f64> {
        let h = GridImage::from_vec(n, x.to_vec()).map_err(|_| Error::Degenerate("non-finite iterate".into()))?;
        let u = energy.evaluate(&h, Some(grad))?;
        let mut data = 0.0;
        for ((gr, hv), gv) in grad.iter_mut().zip(x).zip(g.values()) {
            let r = hv - gv;
            data += r * r;
            *gr = s2 * *gr + r / d;
        }
        Ok(0.5 * data / d + s2 * u)
    };
    let (x, report) = minimize(objective, x0, &solver.lbfgs)?;
    if report.failed() {
        warn!("variational solver stopped early: {:?} after {} iterations", report.stop, report.iterations);
    }
    Ok((GridImage::from_vec(n, x)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-2.5, 0.0), -2.5);
    }

    #[test]
    fn universal_threshold_value() {
        assert!((universal_threshold(0.5, 4096) - 0.5 * (2.0 * 4096f64.ln()).sqrt()).abs() < 1e-15);
    }
}
