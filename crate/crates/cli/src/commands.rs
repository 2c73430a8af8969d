//! Subcommand drivers. Each writes its files through one [`Emitter`] in a
//! fixed order, then `manifest.json`.

use std::path::{Path, PathBuf};

use ddgr::multiparam::{hierarchy, partner_spread, PARTNER_TOL};
use ddgr::riccati::{superpose, DEFAULT_REL_TOL};
use ddgr::susy::{bosonic_from_superpotential, fermionic_partner, NORM_TOL};
use ddgr::verify::{refinement_study, scattering_wave};
use ddgr::{
    cross_ratio, isospectrality_report, lambda_cross_ratio, solve_at_energy, spectrum_of, Error, Parent64,
    RiccatiTriple, SampledFunction64,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::Command;
use crate::error::CliError;
use crate::manifest::{RunConfig, RunManifest};
use crate::table::{write_complex, write_json, write_sampled, Format};

/// Cross-ratio agreement required by `superpose`, relative to `max(1, |k|)`.
pub const CROSS_RATIO_TOL: f64 = 1e-6;

/// What a command decided; `passed = false` maps to exit code 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

struct Emitter {
    dir: PathBuf,
    format: Format,
    outputs: Vec<PathBuf>,
}

impl Emitter {
    fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format, outputs: Vec::new() })
    }

    fn path(&mut self, name: String) -> PathBuf {
        let path = self.dir.join(&name);
        self.outputs.push(PathBuf::from(name));
        path
    }

    fn sampled(&mut self, stem: &str, f: &SampledFunction64) -> Result<(), CliError> {
        let path = self.path(format!("{stem}.{}", self.format.extension()));
        write_sampled(&path, f, self.format)
    }

    fn complex(&mut self, stem: &str, xs: &[f64], values: &[ddgr::num_complex::Complex64]) -> Result<(), CliError> {
        let path = self.path(format!("{stem}.{}", self.format.extension()));
        write_complex(&path, xs, values, self.format)
    }

    fn json(&mut self, stem: &str, value: Value) -> Result<(), CliError> {
        let path = self.path(format!("{stem}.json"));
        write_json(&path, &with_version(value))
    }

    fn finish(self, command: Command, config: &RunConfig, shift: f64) -> Result<(), CliError> {
        let manifest = RunManifest::new(command.name(), config, shift, self.outputs)?;
        write_json(&self.dir.join("manifest.json"), &manifest)
    }
}

fn with_version(mut value: Value) -> Value {
    if let Value::Object(map) = &mut value {
        map.insert("version".into(), json!(crate::manifest::MANIFEST_VERSION));
    }
    value
}

/// File-name form of a parameter: `1`, `0.5`, `-2`.
pub fn label(x: f64) -> String {
    format!("{x}")
}

fn at(lambda: f64) -> impl Fn(Error) -> CliError {
    move |e| CliError::Numerical(e.at_lambda(lambda))
}

pub fn run(command: Command, config: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let grid = config.grid.build()?;
    let parent = config.parent_on(grid)?;
    let mut out = Emitter::new(out_dir, config.format)?;
    let outcome = match command {
        Command::Solve => solve(config, &parent, &mut out)?,
        Command::Family => family(config, &parent, &mut out)?,
        Command::Partner => partner(config, &parent, &mut out)?,
        Command::Superpose => superposition(config, &parent, &mut out)?,
        Command::Iterate => iterate(config, &parent, &mut out)?,
        Command::Verify => verify(config, &parent, &mut out)?,
        Command::Scatter => scatter(config, &parent, &mut out)?,
    };
    out.finish(command, config, parent.shift)?;
    Ok(outcome)
}

fn emit_parent(parent: &Parent64, out: &mut Emitter) -> Result<(), CliError> {
    out.sampled("parent_potential", &parent.physical_potential())?;
    out.sampled("parent_ground_state", &parent.ground_state.samples)?;
    out.sampled("parent_superpotential", &parent.witten()?.samples)
}

fn solve(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    emit_parent(parent, out)?;
    let spectrum = spectrum_of(&parent.potential, config.levels)?;
    let energies: Vec<f64> = spectrum.energies().iter().map(|e| e + parent.shift).collect();
    let mut report = json!({ "energies": energies, "shift": parent.shift });
    let mut passed = true;
    if let Some(energy) = config.energy {
        let solution = solve_at_energy(&parent.physical_potential(), energy, Some(parent.shift))?;
        out.sampled(&format!("solution_energy_{}", label(energy)), &solution.samples)?;
        passed = solution.nodeless();
        report["factorization"] = json!({
            "energy": energy,
            "sign_changes": solution.sign_changes,
            "nodeless": passed,
        });
    }
    out.json("spectrum", report)?;
    let summary = match config.energy {
        Some(e) if !passed => format!("solution at energy {e} has nodes"),
        _ => format!("E0 = {}", energies[0]),
    };
    Ok(Outcome { passed, summary })
}

fn family(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    let tol = config.tolerances;
    // validate every λ before writing anything
    for &l in &config.lambdas {
        parent.check_lambda(l).map_err(at(l))?;
    }
    emit_parent(parent, out)?;
    let mut members = Vec::new();
    let mut failures = Vec::new();
    for &l in &config.lambdas {
        let member = parent.member(l).map_err(at(l))?;
        let name = label(l);
        out.sampled(&format!("family_lambda_{name}"), &parent.physical_member_potential(l).map_err(at(l))?)?;
        out.sampled(&format!("ground_state_lambda_{name}"), &member.ground_state.samples)?;
        out.sampled(&format!("superpotential_lambda_{name}"), &parent.general(l).map_err(at(l))?.samples)?;
        let d = member.diagnostics;
        let ok = d.partner_deviation < tol.partner && d.gs_residual < tol.residual && d.norm_error <= NORM_TOL;
        if !ok {
            failures.push(name);
        }
        members.push(json!({
            "lambda": l,
            "partner_deviation": d.partner_deviation,
            "gs_residual": d.gs_residual,
            "norm_error": d.norm_error,
            "passed": ok,
        }));
    }
    let passed = failures.is_empty();
    out.json("diagnostics", json!({ "members": members, "passed": passed, "shift": parent.shift, "tolerances": tol }))?;
    let summary = if passed {
        format!("{} family members within tolerance", config.lambdas.len())
    } else {
        format!("diagnostics out of tolerance for lambda = {}", failures.join(", "))
    };
    Ok(Outcome { passed, summary })
}

fn partner(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    let shift = parent.shift;
    let reference = parent.fermionic_partner()?;
    out.sampled("parent_superpotential", &parent.witten()?.samples)?;
    out.sampled("partner_potential", &reference.map(|v| v + shift))?;
    let mut deviations = Vec::new();
    for &l in &config.lambdas {
        let v_plus = fermionic_partner(&parent.general(l).map_err(at(l))?.samples)?;
        deviations.push(json!({ "lambda": l, "deviation": v_plus.max_abs_diff_interior(&reference, 2)? }));
        out.sampled(&format!("partner_lambda_{}", label(l)), &v_plus.map(|v| v + shift))?;
    }
    let worst = deviations.iter().filter_map(|d| d["deviation"].as_f64()).fold(0.0, f64::max);
    let passed = worst < config.tolerances.partner;
    out.json("partner", json!({ "deviations": deviations, "max_deviation": worst, "passed": passed, "shift": shift }))?;
    Ok(Outcome { passed, summary: format!("max partner deviation {worst:e}") })
}

fn superposition(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    let &[l, l1, l2, l3] = config.lambdas.as_slice() else {
        return Err(CliError::Usage(format!(
            "superpose needs exactly four --lambda values (lambda, lambda1, lambda2, lambda3), got {}",
            config.lambdas.len()
        )));
    };
    let closed_form = lambda_cross_ratio(l, l1, l2, l3)?;
    let ws = [l, l1, l2, l3].map(|x| parent.general(x).map_err(at(x)));
    let [w, w1, w2, w3] = ws;
    let (w, w1, w2, w3) = (w?, w1?, w2?, w3?);
    let triple = RiccatiTriple::new(w1, w2, w3)?;
    let measured = cross_ratio(&w, &triple, DEFAULT_REL_TOL)?;
    let k = config.k_override.unwrap_or(measured.k_estimate);
    let rebuilt = superpose(&triple, k)?;

    let reconstruction_error = (0..w.samples.grid().len())
        .filter_map(|i| Some((w.samples.get(i)? - rebuilt.samples.get(i)?).abs()))
        .fold(0.0, f64::max);
    for (x, wx) in [(l, &w), (l1, &triple.w1), (l2, &triple.w2), (l3, &triple.w3)] {
        out.sampled(&format!("superpotential_lambda_{}", label(x)), &wx.samples)?;
    }
    out.sampled("superposed", &rebuilt.samples)?;
    out.sampled("cross_ratio", &measured.pointwise)?;

    let scale = closed_form.abs().max(1.0);
    let passed = config.k_override.is_some()
        || ((measured.k_estimate - closed_form).abs() <= CROSS_RATIO_TOL * scale
            && measured.constancy <= CROSS_RATIO_TOL * scale);
    out.json(
        "superpose",
        json!({
            "lambdas": [l, l1, l2, l3],
            "k_estimate": measured.k_estimate,
            "k_mean": measured.k_mean,
            "constancy": measured.constancy,
            "valid_fraction": measured.valid_fraction,
            "lambda_cross_ratio": closed_form,
            "k_used": k,
            "reconstruction_error": reconstruction_error,
            "passed": passed,
        }),
    )?;
    Ok(Outcome {
        passed,
        summary: format!(
            "k = {:.12} (closed form {closed_form:.12}), constancy {:e}",
            measured.k_estimate, measured.constancy
        ),
    })
}

fn iterate(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    let shift = parent.shift;
    let mut orders = Vec::new();
    let mut worst = 0.0f64;
    let base = parent.witten()?;
    let mut states = vec![hierarchy(&parent.ground_state, &[])?];
    for (j, &l) in config.lambdas.iter().enumerate() {
        let next = ddgr::extend(&states[j], l).map_err(at(l))?;
        states.push(next);
    }
    for state in &states {
        let w = &state.w_particular;
        let spread = partner_spread(&[&base, w])?;
        worst = worst.max(spread);
        out.sampled(&format!("iterate_order_{}_superpotential", state.order), &w.samples)?;
        out.sampled(
            &format!("iterate_order_{}_potential", state.order),
            &bosonic_from_superpotential(&w.samples)?.map(|v| v + shift),
        )?;
        orders.push(json!({ "order": state.order, "lambdas": state.fixed_lambdas, "partner_spread": spread }));
    }
    let passed = worst <= PARTNER_TOL;
    out.json(
        "iterate",
        json!({
            "orders": orders,
            "max_partner_spread": worst,
            "partner_tolerance": PARTNER_TOL,
            "quadrature_defect": states[0].quadrature_defect,
            "passed": passed,
        }),
    )?;
    Ok(Outcome { passed, summary: format!("{} orders, max partner spread {worst:e}", states.len() - 1) })
}

fn verify(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let mut report =
        isospectrality_report(&spec.name, parent, &config.lambdas, config.levels, &config.ks, config.tolerances)?;
    let grid = config.grid.build()?;
    let build = |g| match config.parent_on(g) {
        Ok(p) => Ok(p),
        Err(CliError::Numerical(e)) => Err(e),
        Err(other) => Err(Error::InvalidArgument(other.to_string())),
    };
    let (_, _, convergence) =
        refinement_study(&spec.name, build, grid, &config.lambdas, config.levels, config.tolerances)?;
    report.warnings.extend(convergence.warnings());
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Failed(e.to_string()))?;
    value["convergence"] = serde_json::to_value(convergence).map_err(|e| CliError::Failed(e.to_string()))?;
    value["refined_n"] = json!(grid.refined().len());
    out.json("report", value)?;
    let passed = report.passed;
    let summary = if passed {
        format!("passed ({} warnings)", report.warnings.len())
    } else {
        format!(
            "spectrum {:e}, partner {:e}, residual {:e}, scattering {:e}",
            report.max_spectrum_delta(),
            report.max_partner_deviation(),
            report.max_gs_residual(),
            report.max_scattering_delta()
        )
    };
    Ok(Outcome { passed, summary })
}

#[derive(Serialize)]
struct ScatterRow {
    lambda: Option<f64>,
    k: f64,
    r_re: f64,
    r_im: f64,
    t_re: f64,
    t_im: f64,
    abs_r: f64,
    abs_t: f64,
    unitarity_defect: f64,
}

fn scatter(config: &RunConfig, parent: &Parent64, out: &mut Emitter) -> Result<Outcome, CliError> {
    if config.ks.is_empty() {
        return Err(CliError::Usage("scatter needs at least one --k".into()));
    }
    let tol = config.tolerances;
    let xs: Vec<f64> = parent.potential.grid().nodes().collect();
    let mut potentials = vec![(None, parent.physical_potential())];
    for &l in &config.lambdas {
        potentials.push((Some(l), parent.physical_member_potential(l).map_err(at(l))?));
    }
    let mut rows = Vec::new();
    for (lambda, v) in &potentials {
        for &k in &config.ks {
            let wave = scattering_wave(v, k, tol.unitarity).map_err(|e| match lambda {
                Some(l) => CliError::Numerical(e.at_lambda(*l)),
                None => CliError::Numerical(e),
            })?;
            let stem = match lambda {
                Some(l) => format!("scatter_lambda_{}_k_{}", label(*l), label(k)),
                None => format!("scatter_parent_k_{}", label(k)),
            };
            out.complex(&stem, &xs, &wave.psi)?;
            let d = wave.data;
            rows.push(ScatterRow {
                lambda: *lambda,
                k,
                r_re: d.r.re,
                r_im: d.r.im,
                t_re: d.t.re,
                t_im: d.t.im,
                abs_r: d.r.norm(),
                abs_t: d.t.norm(),
                unitarity_defect: d.unitarity_defect,
            });
        }
    }
    let nk = config.ks.len();
    let mut worst = 0.0f64;
    for row in &rows[nk..] {
        let base = &rows[row_index(&config.ks, row.k)];
        worst = worst.max((row.abs_r - base.abs_r).abs()).max((row.abs_t - base.abs_t).abs());
    }
    let unitarity = rows.iter().fold(0.0f64, |m, r| m.max(r.unitarity_defect));
    let passed = worst < tol.scattering && unitarity < tol.unitarity;
    out.json(
        "scatter",
        json!({ "rows": rows, "max_modulus_delta": worst, "max_unitarity_defect": unitarity, "passed": passed, "tolerances": tol }),
    )?;
    Ok(Outcome { passed, summary: format!("max modulus delta {worst:e}, unitarity defect {unitarity:e}") })
}

fn row_index(ks: &[f64], k: f64) -> usize {
    ks.iter().position(|&x| x == k).expect("k taken from the same list")
}
