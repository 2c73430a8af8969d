//! Named analytic potentials and tabulated input.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use ddgr::{Grid64, SampledFunction64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    /// `V = ω² x²`, ground state `e^{-ωx²/2}` at `E₀ = ω`.
    Harmonic,
    /// `V = -depth · sech²(αx)`.
    PoschlTeller,
    /// `V = -depth` on `|x| < width/2`, half depth on a node sitting on an edge.
    SquareWell,
    /// `V = depth (e^{-2x/width} - 2 e^{-x/width})`.
    Morse,
    /// `V = 0` between hard walls at the grid ends.
    Box,
    /// Linear interpolation of an `x,value` table.
    Tabulated,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Harmonic => "harmonic",
            Family::PoschlTeller => "poschl_teller",
            Family::SquareWell => "square_well",
            Family::Morse => "morse",
            Family::Box => "box",
            Family::Tabulated => "tabulated",
        }
    }

    pub fn lookup(name: &str) -> Result<Self, CliError> {
        let all =
            [Family::Harmonic, Family::PoschlTeller, Family::SquareWell, Family::Morse, Family::Box, Family::Tabulated];
        all.into_iter().find(|f| f.name() == name).ok_or_else(|| {
            let known: Vec<_> = all.iter().map(|f| f.name()).collect();
            CliError::Usage(format!("unknown potential '{name}' (known: {})", known.join(", ")))
        })
    }

    /// `(name, default)`; a `None` default marks a required parameter.
    fn parameters(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Family::Harmonic => &[("omega", Some(1.0))],
            Family::PoschlTeller => &[("depth", Some(2.0)), ("alpha", Some(1.0))],
            Family::SquareWell => &[("depth", Some(2.0)), ("width", Some(2.0))],
            Family::Morse => &[("depth", None), ("width", None)],
            Family::Box | Family::Tabulated => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub name: String,
    pub family: Family,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Use the closed-form ground state when the family has one.
    #[serde(default = "default_true")]
    pub analytic_ground_state: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}

impl PotentialSpec {
    pub fn new(family: Family) -> Self {
        Self {
            name: family.name().to_string(),
            family,
            params: BTreeMap::new(),
            analytic_ground_state: true,
            source_path: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Parameters with defaults filled in; unknown and missing names are errors.
    pub fn resolved_params(&self) -> Result<BTreeMap<String, f64>, CliError> {
        let allowed = self.family.parameters();
        for (key, value) in &self.params {
            if !allowed.iter().any(|(name, _)| name == key) {
                return Err(CliError::Usage(format!(
                    "{} takes no parameter '{key}' (accepted: {})",
                    self.family.name(),
                    allowed.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                )));
            }
            if !value.is_finite() {
                return Err(CliError::Usage(format!("parameter {key} must be finite")));
            }
        }
        let mut out = BTreeMap::new();
        for &(name, default) in allowed {
            let value = self
                .params
                .get(name)
                .copied()
                .or(default)
                .ok_or_else(|| CliError::Usage(format!("{} requires parameter '{name}'", self.family.name())))?;
            out.insert(name.to_string(), value);
        }
        if self.family == Family::Tabulated && self.source_path.is_none() {
            return Err(CliError::Usage("tabulated potential needs a table path".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedPotential {
    pub potential: SampledFunction64,
    /// Unnormalized closed-form ground state, when known and requested.
    pub ground_state: Option<SampledFunction64>,
    pub ground_energy: Option<f64>,
}

fn positive(params: &BTreeMap<String, f64>, key: &str) -> Result<f64, CliError> {
    let v = params[key];
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("parameter {key} must be positive, got {v}")))
    }
}

/// Samples the potential (and closed-form ground state, if any) on `grid`.
pub fn resolve_potential(spec: &PotentialSpec, grid: Grid64) -> Result<ResolvedPotential, CliError> {
    let p = spec.resolved_params()?;
    let sample = |f: &dyn Fn(f64) -> f64| SampledFunction64::from_fn(grid, f).map_err(CliError::from);
    let (potential, analytic) = match spec.family {
        Family::Harmonic => {
            let w = positive(&p, "omega")?;
            let u = sample(&|x| (-w * x * x / 2.0).exp())?;
            (sample(&|x| w * w * x * x)?, Some((u, w)))
        }
        Family::PoschlTeller => {
            let (depth, alpha) = (positive(&p, "depth")?, positive(&p, "alpha")?);
            // ν(ν+1)α² = depth
            let nu = (-1.0 + (1.0 + 4.0 * depth / (alpha * alpha)).sqrt()) / 2.0;
            let u = sample(&|x| (alpha * x).cosh().powf(-nu))?;
            (sample(&|x| -depth / (alpha * x).cosh().powi(2))?, Some((u, -nu * nu * alpha * alpha)))
        }
        Family::SquareWell => {
            let (depth, width) = (positive(&p, "depth")?, positive(&p, "width")?);
            let half = width / 2.0;
            let edge_tol = 1e-9 * grid.spacing();
            let v = sample(&|x| {
                let d = x.abs() - half;
                if d.abs() <= edge_tol {
                    -depth / 2.0
                } else if d < 0.0 {
                    -depth
                } else {
                    0.0
                }
            })?;
            (v, None)
        }
        Family::Morse => {
            let (depth, width) = (positive(&p, "depth")?, positive(&p, "width")?);
            let a = 1.0 / width;
            let v = sample(&|x| depth * ((-2.0 * a * x).exp() - 2.0 * (-a * x).exp()))?;
            let big = depth.sqrt() / a;
            let s = big - 0.5;
            let analytic = if s > 0.0 {
                // ξ^s e^{-ξ/2} with ξ = 2 (√D/a) e^{-ax}, evaluated in log form
                let u = sample(&|x| {
                    let xi = 2.0 * big * (-a * x).exp();
                    (s * xi.ln() - xi / 2.0).exp()
                })?;
                Some((u, -a * a * s * s))
            } else {
                None
            };
            (v, analytic)
        }
        Family::Box => {
            let len = grid.x_max() - grid.x_min();
            let x0 = grid.x_min();
            let u = sample(&|x| (PI * (x - x0) / len).sin().max(0.0))?;
            (sample(&|_| 0.0)?, Some((u, (PI / len).powi(2))))
        }
        Family::Tabulated => {
            let path = spec.source_path.as_ref().expect("checked in resolved_params");
            let (xs, ys) = table::read_table(path)?;
            (interpolate(&xs, &ys, grid)?, None)
        }
    };
    let (ground_state, ground_energy) = match analytic {
        Some((u, e)) if spec.analytic_ground_state => (Some(u), Some(e)),
        _ => (None, None),
    };
    Ok(ResolvedPotential { potential, ground_state, ground_energy })
}

/// Linear interpolation of a strictly increasing table onto `grid`.
pub fn interpolate(xs: &[f64], ys: &[f64], grid: Grid64) -> Result<SampledFunction64, CliError> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(CliError::Table("table needs at least two rows".into()));
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(CliError::Table(format!("x column is not strictly increasing at row {}", i + 2)));
    }
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return Err(CliError::Table(format!("non-finite value at row {}", i + 1)));
    }
    let slack = 1e-9 * grid.spacing();
    if grid.x_min() < xs[0] - slack || grid.x_max() > xs[xs.len() - 1] + slack {
        return Err(CliError::Table(format!(
            "grid [{}, {}] extends beyond the table range [{}, {}]",
            grid.x_min(),
            grid.x_max(),
            xs[0],
            xs[xs.len() - 1]
        )));
    }
    let values = grid
        .nodes()
        .map(|x| {
            let j = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
            let (x0, x1, y0, y1) = (xs[j - 1], xs[j], ys[j - 1], ys[j]);
            // table nodes are reproduced bitwise
            if x == x1 {
                y1
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        })
        .collect();
    Ok(SampledFunction64::from_values(grid, values)?)
}
