//! Experiment dispatch and report files.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use bogolab::discrete::GridField;
use bogolab::lab::{self, CandidateSet};
use bogolab::report::{Check, ConstantsReport};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, Experiment, Plan, ResolvedConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compute(#[from] bogolab::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

pub struct Outcome {
    pub report: ConstantsReport,
    pub csv: PathBuf,
    pub json: PathBuf,
    pub field: Option<PathBuf>,
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    config_hash: &'a str,
    seed: u64,
    resolutions: &'a [String],
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a ResolvedConfig,
    provenance: Provenance<'a>,
    passed: bool,
    report: &'a ConstantsReport,
}

/// First 16 hex digits of the SHA-256 of the canonical config.
pub fn config_hash(c: &ResolvedConfig) -> String {
    let digest = Sha256::digest(c.to_toml().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn output_paths(plan: &Plan) -> (PathBuf, PathBuf) {
    let stem = format!("{}-{}", plan.config.experiment, config_hash(&plan.config));
    (plan.out.join(format!("{stem}.csv")), plan.out.join(format!("{stem}.json")))
}

fn compute(c: &ResolvedConfig) -> Result<(ConstantsReport, Option<GridField>), RunError> {
    let domains = c.domains();
    let res = c.resolution;
    let h = |cells: usize| 1.0 / cells as f64;
    let report = match c.experiment {
        Experiment::Solve => {
            let d = &domains[0];
            let report = lab::solve_report(d, res)?;
            let field = if d.is_tensor() { Some(lab::solve_field(d, h(c.grid[0]))?) } else { None };
            return Ok((report, field));
        }
        Experiment::BaScan => {
            let set: CandidateSet = c.candidates.as_deref().unwrap_or("plain").parse()?;
            lab::ba_scan(c.order.unwrap_or(0), &domains, set, res)?.report
        }
        Experiment::Counterexample => {
            let half = domains[0].half_widths();
            lab::counterexample_report(half[0], half[1], res)?
        }
        Experiment::Relations => {
            let d = &domains[0];
            let m = lab::measured_constants(d, h(c.grid[0]), res)?;
            lab::relations_check(&m, d, c.samples.unwrap_or(20), c.seed)?
        }
        Experiment::NlSymmetric => {
            let d = &domains[0];
            let finest = *c.grid.iter().max().expect("grid resolved");
            let m = lab::measured_constants(d, h(finest), res)?;
            let samples = c.samples.unwrap_or(20);
            let mut report = ConstantsReport::new("nl-symmetric", d.descriptor());
            let mut values = Vec::new();
            for &g in &c.grid {
                let r = lab::nl_symmetric_check(d, h(g), samples, c.seed, &m)?;
                values.push(r.find_constant("C*_NL0").unwrap_or(f64::NAN));
                report.resolutions.extend(r.resolutions.iter().cloned());
                report.merge(&format!("h=1/{g}"), r);
            }
            if values.len() >= 2 {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(0.0, f64::max);
                report.check(Check::at_most("C*_NL0 relative spread across grids", (hi - lo) / hi, 0.05));
            }
            report
        }
        Experiment::Fourier => lab::fourier_report(c.directions.unwrap_or(32), &c.radii)?,
        Experiment::Identities => lab::identity_checks(c.seed)?,
        Experiment::Infsup => {
            let hs: Vec<f64> = c.grid.iter().map(|&g| h(g)).collect();
            lab::infsup_report(&domains[0], &hs)?
        }
        Experiment::Poincare => lab::poincare_report(&domains[0], h(c.grid[0]))?,
    };
    Ok((report, None))
}

/// Replace check bounds named in `[tolerances]`. A plain name sets the upper
/// bound when the check has one and the lower bound otherwise; `.lower` and
/// `.upper` suffixes pick explicitly.
pub fn apply_tolerances(report: &mut ConstantsReport, tol: &std::collections::BTreeMap<String, f64>) -> Result<(), ConfigError> {
    for (key, &value) in tol {
        let (name, side) = match key.rsplit_once('.') {
            Some((n, "lower")) => (n, Some(false)),
            Some((n, "upper")) => (n, Some(true)),
            _ => (key.as_str(), None),
        };
        let matching: Vec<&mut Check> = report.checks.iter_mut().filter(|c| c.name == name).collect();
        if matching.is_empty() {
            let known: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
            return Err(ConfigError::Invalid(format!(
                "tolerances: no check named '{name}' in this report (checks: {})",
                known.join("; ")
            )));
        }
        for c in matching {
            let upper = side.unwrap_or(c.upper.is_some());
            let (lower, upper_bound) = if upper { (c.lower, Some(value)) } else { (Some(value), c.upper) };
            *c = Check::new(c.name.clone(), c.value, lower, upper_bound);
        }
    }
    Ok(())
}

fn write_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Write { path: path.display().to_string(), source }
}

pub fn execute(plan: &Plan) -> Result<Outcome, RunError> {
    let (mut report, field) = compute(&plan.config)?;
    apply_tolerances(&mut report, &plan.config.tolerances)?;
    fs::create_dir_all(&plan.out).map_err(write_err(&plan.out))?;
    let (csv, json) = output_paths(plan);
    fs::write(&csv, report.csv_string()).map_err(write_err(&csv))?;
    let hash = config_hash(&plan.config);
    let doc = JsonReport {
        config: &plan.config,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: &hash,
            seed: plan.config.seed,
            resolutions: &report.resolutions,
        },
        passed: report.passed(),
        report: &report,
    };
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    fs::write(&json, text + "\n").map_err(write_err(&json))?;
    let field = match field {
        Some(f) => {
            let path = plan.out.join(format!("{}-{hash}-u.bin", plan.config.experiment));
            let file = fs::File::create(&path).map_err(write_err(&path))?;
            f.write_binary(BufWriter::new(file))?;
            Some(path)
        }
        None => None,
    };
    Ok(Outcome { report, csv, json, field })
}
