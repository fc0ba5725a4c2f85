//! JSON run configuration and worker-pool setup.
//!
//! Every section is optional; command-line flags override what the file sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{SweepConfig, SCHEMA_VERSION};
use crate::datagen::GeoImageParams;
use crate::denoise::SolverParams;
use crate::energy::EnergyParams;
use crate::error::{Error, Result};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "SCATDEN_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub energy: Option<EnergyParams>,
    #[serde(default)]
    pub solver: Option<SolverParams>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub datagen: Option<GeoImageParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { schema_version: SCHEMA_VERSION, energy: None, solver: None, sweep: None, datagen: None }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(s)?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParam(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        if let Some(e) = &c.energy {
            e.validate()?;
        }
        if let Some(s) = &c.sweep {
            s.validate()?;
        }
        if let Some(d) = &c.datagen {
            d.validate()?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Worker count from the environment; `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidParam(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Sizes the global thread pool from the environment. Call once, before any
/// parallel work.
pub fn init_workers() -> Result<usize> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers_from_env()? {
        builder = builder.num_threads(n);
    }
    // a pool that already exists keeps its size
    let _ = builder.build_global();
    Ok(rayon::current_num_threads())
}
