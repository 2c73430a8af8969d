//! Run configuration (input) and run manifest (output record).
//!
//! A written `manifest.json` is itself a valid `--config`, so a run can be
//! replayed from its own record.

use std::path::{Path, PathBuf};

use ddgr::{Grid64, Parent64, Tolerances};
use serde::{Deserialize, Serialize};

use crate::catalog::{resolve_potential, PotentialSpec};
use crate::error::CliError;
use crate::table::Format;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { x_min: -10.0, x_max: 10.0, n: 2001 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid64, CliError> {
        Grid64::new(self.x_min, self.x_max, self.n).map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn default_levels() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(alias = "spec")]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Wavenumbers for scattering checks.
    #[serde(default)]
    pub ks: Vec<f64>,
    /// Cross ratio used by `superpose` instead of the measured one.
    #[serde(default)]
    pub k_override: Option<f64>,
    /// Factorization energy for `solve`.
    #[serde(default)]
    pub energy: Option<f64>,
    #[serde(default)]
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: None,
            grid: GridSpec::default(),
            lambdas: Vec::new(),
            levels: default_levels(),
            tolerances: Tolerances::default(),
            ks: Vec::new(),
            k_override: None,
            energy: None,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
    }

    pub fn spec(&self) -> Result<&PotentialSpec, CliError> {
        self.potential
            .as_ref()
            .ok_or_else(|| CliError::Usage("no potential given (use --potential or a config file)".into()))
    }

    /// Builds the parent on `grid`, from the closed-form ground state when
    /// available and requested, otherwise from the numerical zero mode.
    pub fn parent_on(&self, grid: Grid64) -> Result<Parent64, CliError> {
        let resolved = resolve_potential(self.spec()?, grid)?;
        let parent = match (resolved.ground_state, resolved.ground_energy) {
            (Some(u), Some(e0)) => Parent64::with_ground_state(&resolved.potential, u, e0)?,
            _ => Parent64::from_potential(&resolved.potential)?,
        };
        Ok(parent)
    }
}

/// Record of one run, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub spec: PotentialSpec,
    pub grid: GridSpec,
    /// Ground energy subtracted from the parent potential.
    pub shift: f64,
    pub lambdas: Vec<f64>,
    pub levels: usize,
    pub tolerances: Tolerances,
    pub ks: Vec<f64>,
    pub k_override: Option<f64>,
    pub energy: Option<f64>,
    pub format: Format,
    /// File names relative to the output directory, sorted.
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(
        command: &'static str,
        config: &RunConfig,
        shift: f64,
        mut outputs: Vec<PathBuf>,
    ) -> Result<Self, CliError> {
        outputs.sort();
        Ok(Self {
            version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            spec: config.spec()?.clone(),
            grid: config.grid,
            shift,
            lambdas: config.lambdas.clone(),
            levels: config.levels,
            tolerances: config.tolerances,
            ks: config.ks.clone(),
            k_override: config.k_override,
            energy: config.energy,
            format: config.format,
            outputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Family;

    #[test]
    fn manifest_replays_as_config() {
        let config = RunConfig {
            potential: Some(PotentialSpec::new(Family::Harmonic)),
            lambdas: vec![1.0, -2.0],
            ks: vec![0.5],
            ..RunConfig::default()
        };
        let manifest = RunManifest::new("family", &config, 1.0, vec!["b.csv".into(), "a.csv".into()]).unwrap();
        assert_eq!(manifest.outputs, vec![PathBuf::from("a.csv"), PathBuf::from("b.csv")]);
        let json = serde_json::to_string(&manifest).unwrap();
        let replay: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(replay, config);
    }

    #[test]
    fn config_defaults() {
        let config: RunConfig =
            serde_json::from_str(r#"{"potential": {"name": "pt", "family": "poschl_teller"}}"#).unwrap();
        assert_eq!(config.grid, GridSpec::default());
        assert_eq!(config.levels, 5);
        assert_eq!(config.tolerances, Tolerances::default());
        assert!(config.spec().unwrap().analytic_ground_state);
    }
}
