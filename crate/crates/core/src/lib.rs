//! Image denoising with sparse scattering energies.
//!
//! The crate builds banks of directional complex wavelets on a periodic grid,
//! computes wavelet and scattering coefficients, and minimizes
//! `(1/2) mean((h - g)^2) + sigma^2 U(h)` for a wavelet l1 energy `U` or a
//! scattering energy that also rewards and penalizes second-order
//! coefficients. Orthogonal and translation-invariant soft thresholding serve
//! as baselines, and a sampler of piecewise-regular images drives the
//! experiments in [`bench`].

pub mod bank;
pub mod bench;
pub mod config;
pub mod datagen;
pub mod denoise;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod lbfgs;
pub mod ortho;
pub mod transforms;

pub use error::{Error, Result};
