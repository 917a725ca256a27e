//! Mode dispatch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::compare::compare;
use super::config::{Mode, RunConfig};
use super::output::{self, CSV_SCHEMA_VERSION, DIAGNOSTICS_HEADER};
use crate::analysis::{dynkin_residual, record_dynkin};
use crate::engine::{rebuild_schedule, replica_rng, sample_initial, simulate_replica, Observable, ObserverSpec, SimState};
use crate::error::{Error, Result};
use crate::pde::solve;

/// Files (name, contents) plus the JSON report body of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynkinRow {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Test function `G(u) = u(1−u)`.
    pub dynkin: Vec<DynkinRow>,
    /// Particle count changes equal net boundary flips at every sample, for every replica.
    pub mass_balance: bool,
    /// Largest gap between the incremental schedule and a rebuild at `T` (replica 0).
    pub schedule_drift: f64,
}

/// Exit status for an error: `2` for usage errors, `1` otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage { .. } => 2,
        _ => 1,
    }
}

fn dynkin_rows(cfg: &RunConfig) -> Result<Vec<DynkinRow>> {
    let g = |u: f64| u * (1.0 - u);
    let profile = cfg.initial_profile();
    let records = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| record_dynkin(&cfg.params, profile, g, &cfg.sample_times, cfg.seed, r))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &t in &cfg.sample_times {
        let m: Vec<f64> = records.iter().map(|rec| dynkin_residual(rec, t)).collect::<Result<_>>()?;
        let k = m.len() as f64;
        let mean = m.iter().sum::<f64>() / k;
        let stderr = if m.len() > 1 {
            (m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            f64::NAN
        };
        let z = if stderr > 0.0 { mean / stderr } else { 0.0 };
        rows.push(DynkinRow { t, mean, stderr, z });
    }
    Ok(rows)
}

/// Runs the consistency diagnostics for a configuration.
pub fn diagnose(cfg: &RunConfig) -> Result<Diagnostics> {
    let dynkin = dynkin_rows(cfg)?;

    let spec = ObserverSpec::new(cfg.sample_times.clone(), vec![])?;
    let mut mass_balance = true;
    for r in 0..cfg.replicas as u64 {
        let rec = simulate_replica(&cfg.params, cfg.initial_profile(), &spec, cfg.seed, r)?;
        let p0 = rec.samples.first().map_or(0, |s| s.particles) as i64;
        let f0 = rec.samples.first().map_or(0, |s| s.net_flips_left + s.net_flips_right);
        mass_balance &= rec
            .samples
            .iter()
            .all(|s| s.particles as i64 - p0 == s.net_flips_left + s.net_flips_right - f0);
    }

    let mut rng = replica_rng(cfg.seed, 0);
    let config = sample_initial(cfg.initial_profile(), &cfg.params, &mut rng)?;
    let mut state = SimState::new(cfg.params, config, rng)?;
    state.advance_to(cfg.horizon, ());
    let fresh = rebuild_schedule(state.config(), &cfg.params)?;
    let schedule_drift = state
        .schedule()
        .entries()
        .iter()
        .zip(fresh.entries())
        .map(|(a, b)| (a - b).abs())
        .fold((state.schedule().total() - fresh.total()).abs(), f64::max);

    Ok(Diagnostics {
        dynkin,
        mass_balance,
        schedule_drift,
    })
}

fn diagnostics_csv(d: &Diagnostics) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for r in &d.dynkin {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.mean, r.stderr, r.z);
    }
    out
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Io(e.to_string()))
}

/// Performs the configured mode without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    let (files, result) = match cfg.mode {
        Mode::Simulate => {
            let mut observables = vec![
                Observable::Profile,
                Observable::BoxAverages { ell: cfg.width },
                Observable::BoundaryOccupations,
            ];
            if let Some((from, to)) = cfg.average_window {
                observables.push(Observable::TimeAveragedProfile { from, to });
            }
            let spec = ObserverSpec::new(cfg.sample_times.clone(), observables)?;
            let records = (0..cfg.replicas as u64)
                .into_par_iter()
                .map(|r| simulate_replica(&cfg.params, cfg.initial_profile(), &spec, cfg.seed, r))
                .collect::<Result<Vec<_>>>()?;
            let summary: Vec<Value> = records
                .iter()
                .map(|r| json!({ "replica": r.replica, "events": r.events, "absorbed_at": r.absorbed_at }))
                .collect();
            (
                vec![("observations.csv".to_owned(), output::observations_csv(&records))],
                json!({ "replicas": summary }),
            )
        }
        Mode::Solve => {
            let field = solve(cfg.initial_profile(), &cfg.bc, cfg.horizon, cfg.j, &cfg.sample_times)?;
            let masses: Vec<f64> = (0..field.times.len())
                .map(|k| {
                    let v = &field.values[k];
                    let du = field.du();
                    du * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
                })
                .collect();
            (
                vec![("field.csv".to_owned(), field.to_csv())],
                json!({ "steps": field.steps, "times": field.times, "mass": masses }),
            )
        }
        Mode::Stationary => (
            vec![("stationary.csv".to_owned(), output::stationary_csv(&cfg.bc, cfg.j)?)],
            json!({ "bc": to_value(&cfg.bc)? }),
        ),
        Mode::Compare => {
            let report = compare(cfg)?;
            (
                vec![("comparison.csv".to_owned(), output::comparison_csv(&report))],
                to_value(&report)?,
            )
        }
        Mode::Diagnose => {
            let d = diagnose(cfg)?;
            (vec![("diagnostics.csv".to_owned(), diagnostics_csv(&d))], to_value(&d)?)
        }
    };
    Ok(RunOutput { files, result })
}

/// Full JSON report: provenance block plus the mode's result.
pub fn report(cfg: &RunConfig, out: &RunOutput, runtime_seconds: f64) -> Result<Value> {
    Ok(json!({
        "provenance": {
            "tool": "pmm",
            "version": env!("CARGO_PKG_VERSION"),
            "csv_schema": CSV_SCHEMA_VERSION,
            "mode": cfg.mode.as_str(),
            "seed": cfg.seed,
            "replicas": cfg.replicas,
            "config": to_value(cfg)?,
            "config_text": cfg.emit(),
            "files": out.files.iter().map(|(name, _)| name.clone()).collect::<Vec<_>>(),
            "runtime_seconds": runtime_seconds,
        },
        "result": out.result,
    }))
}

/// Executes the run and writes its CSV files and `report.json` into `dir`.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let start = std::time::Instant::now();
    let out = execute(cfg)?;
    let doc = report(cfg, &out, start.elapsed().as_secs_f64())?;
    let mut written = Vec::new();
    for (name, contents) in &out.files {
        written.push(output::write_file(dir, name, contents)?);
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    written.push(output::write_file(dir, "report.json", &text)?);
    Ok(written)
}
