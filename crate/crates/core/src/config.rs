//! Run configuration and small file helpers shared by the CLI and the FFI.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::DatasetSpec;
use crate::error::{Error, Result};
use crate::moea::{MoeaConfig, PsoConfig, DEFAULT_ALPHAS};
use crate::pls::PrivacyConfig;
use crate::sim::SimConfig;

pub const SEED_ENV: &str = "GEOMOEA_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub dpive: bool,
    pub pso: bool,
    /// Strict randomized constructions tried per cell by the DPIVE-style baseline.
    pub dpive_restarts: usize,
    pub alphas: Vec<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            dpive: true,
            pso: false,
            dpive_restarts: 10,
            alphas: DEFAULT_ALPHAS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub privacy: PrivacyConfig,
    pub moea: MoeaConfig,
    pub pso: PsoConfig,
    pub baselines: BaselineConfig,
    pub sim: SimConfig,
    pub output_dir: PathBuf,
    /// Overrides `moea.seed` when set.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSpec::benchmark_400(1),
            privacy: PrivacyConfig::default(),
            moea: MoeaConfig::default(),
            pso: PsoConfig::default(),
            baselines: BaselineConfig::default(),
            sim: SimConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.privacy.validate()?;
        self.moea.validate()?;
        self.sim.validate()?;
        if self.baselines.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig("baseline alphas must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Seed precedence: explicit flag, then the config file, then
    /// `GEOMOEA_SEED`, then `moea.seed`.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let env = match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
            ),
            Err(_) => None,
        };
        let seed = flag.or(self.seed).or(env).unwrap_or(self.moea.seed);
        self.seed = Some(seed);
        self.moea.seed = seed;
        Ok(seed)
    }
}

/// Parses a JSON file; a missing file and malformed content map to
/// `MissingFile` and `Schema` respectively.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `rows` as CSV, header taken from the row type's field names.
pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
