use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::catalog::{Family, PotentialSpec};
use crate::error::CliError;
use crate::manifest::{GridSpec, RunConfig};
use crate::table::Format;

#[derive(Debug, Parser)]
#[command(name = "ddgr", version, about = "Strictly isospectral potential families from the general Riccati solution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parent spectrum; with --energy, the solution at a factorization energy.
    Solve,
    /// Deformed potentials, ground states and superpotentials for each --lambda.
    Family,
    /// Fermionic partner of the parent and of every general superpotential.
    Partner,
    /// Cross ratio of the quadruple (λ, λ1, λ2, λ3) and the rebuilt w(λ).
    Superpose,
    /// Multi-parameter hierarchy through the given --lambda values.
    Iterate,
    /// Isospectrality report with a grid-refinement study.
    Verify,
    /// Reflection and transmission at each --k for parent and deformations.
    Scatter,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Family => "family",
            Command::Partner => "partner",
            Command::Superpose => "superpose",
            Command::Iterate => "iterate",
            Command::Verify => "verify",
            Command::Scatter => "scatter",
        }
    }
}

/// Flags override the corresponding fields of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// JSON run configuration; a previously written manifest.json is accepted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Catalog name: harmonic, poschl_teller, square_well, morse, box, tabulated.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    /// Potential parameter as name=value (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE", global = true)]
    pub params: Vec<String>,
    /// `x,value` CSV for the tabulated potential.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    /// Compute the zero mode numerically even when a closed form exists.
    #[arg(long, global = true)]
    pub numeric_ground_state: bool,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub xmin: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub xmax: Option<f64>,
    /// Number of grid nodes.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Deformation parameter (repeatable).
    #[arg(long = "lambda", global = true, allow_negative_numbers = true)]
    pub lambdas: Vec<f64>,
    /// Number of bound levels compared.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Tolerance as name=value, name in spectrum, partner, residual, scattering, unitarity (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    pub tols: Vec<String>,
    /// Wavenumber for scattering (repeatable).
    #[arg(long = "k", global = true)]
    pub ks: Vec<f64>,
    /// Cross ratio used by `superpose` in place of the measured one.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k_override: Option<f64>,
    /// Factorization energy for `solve`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    #[arg(long, global = true, default_value = "ddgr-out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

fn split_pair(s: &str) -> Result<(&str, f64), CliError> {
    let (name, value) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("expected NAME=VALUE, got '{s}'")))?;
    let value =
        value.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("'{value}' is not a number in '{s}'")))?;
    Ok((name.trim(), value))
}

impl Options {
    /// Merges the config file (if any) with the flags.
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(name) = &self.potential {
            let mut spec = PotentialSpec::new(Family::lookup(name)?);
            spec.name = name.clone();
            config.potential = Some(spec);
        }
        if !self.params.is_empty() || self.table.is_some() || self.numeric_ground_state {
            let spec = config.potential.as_mut().ok_or_else(|| {
                CliError::Usage("--param, --table and --numeric-ground-state need a potential".into())
            })?;
            for p in &self.params {
                let (name, value) = split_pair(p)?;
                spec.params.insert(name.to_string(), value);
            }
            if let Some(table) = &self.table {
                spec.source_path = Some(table.clone());
            }
            if self.numeric_ground_state {
                spec.analytic_ground_state = false;
            }
        }
        let GridSpec { x_min, x_max, n } = config.grid;
        config.grid =
            GridSpec { x_min: self.xmin.unwrap_or(x_min), x_max: self.xmax.unwrap_or(x_max), n: self.n.unwrap_or(n) };
        if !self.lambdas.is_empty() {
            config.lambdas = self.lambdas.clone();
        }
        if let Some(levels) = self.levels {
            config.levels = levels;
        }
        for t in &self.tols {
            let (name, value) = split_pair(t)?;
            if !(value > 0.0) {
                return Err(CliError::Usage(format!("tolerance {name} must be positive")));
            }
            let tol = &mut config.tolerances;
            let slot = match name {
                "spectrum" => &mut tol.spectrum,
                "partner" => &mut tol.partner,
                "residual" => &mut tol.residual,
                "scattering" => &mut tol.scattering,
                "unitarity" => &mut tol.unitarity,
                other => return Err(CliError::Usage(format!("unknown tolerance '{other}'"))),
            };
            *slot = value;
        }
        if !self.ks.is_empty() {
            config.ks = self.ks.clone();
        }
        if self.k_override.is_some() {
            config.k_override = self.k_override;
        }
        if self.energy.is_some() {
            config.energy = self.energy;
        }
        if let Some(format) = self.format {
            config.format = format;
        }
        config.spec()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("ddgr").chain(args.iter().copied())).unwrap();
        cli.options.to_config()
    }

    #[test]
    fn flags_build_config() {
        let c = parse(&[
            "family",
            "--potential",
            "poschl_teller",
            "--param",
            "depth=6",
            "--lambda",
            "-2",
            "--lambda",
            "0.5",
            "--xmin",
            "-8",
            "--tol",
            "partner=1e-3",
        ])
        .unwrap();
        assert_eq!(c.lambdas, vec![-2.0, 0.5]);
        assert_eq!(c.grid.x_min, -8.0);
        assert_eq!(c.spec().unwrap().params["depth"], 6.0);
        assert_eq!(c.tolerances.partner, 1e-3);
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(parse(&["family", "--potential", "nope"]), Err(CliError::Usage(_))));
        assert!(matches!(parse(&["family"]), Err(CliError::Usage(_))));
        assert!(matches!(parse(&["family", "--potential", "harmonic", "--tol", "bogus=1"]), Err(CliError::Usage(_))));
        assert!(matches!(parse(&["family", "--potential", "harmonic", "--param", "omega"]), Err(CliError::Usage(_))));
    }
}
