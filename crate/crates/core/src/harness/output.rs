//! CSV and JSON artifacts.
//!
//! Headers (schema version [`CSV_SCHEMA_VERSION`]):
//! - `field.csv`: `t,u,rho`
//! - `stationary.csv`: `u,rho`
//! - `observations.csv`: `replica,t,observable,index,value`
//! - `comparison.csv`: `n,t,l1,linf,mc_stderr`
//! - `diagnostics.csv`: `t,mean,stderr,z`

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::compare::ComparisonReport;
use crate::engine::ObservationRecord;
use crate::error::{Error, Result};
use crate::pde::{stationary_profile, BoundaryCondition};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const FIELD_HEADER: &str = "t,u,rho";
pub const STATIONARY_HEADER: &str = "u,rho";
pub const OBSERVATIONS_HEADER: &str = "replica,t,observable,index,value";
pub const COMPARISON_HEADER: &str = "n,t,l1,linf,mc_stderr";
pub const DIAGNOSTICS_HEADER: &str = "t,mean,stderr,z";

/// Closed-form stationary profile at the `J+1` grid nodes.
pub fn stationary_csv(bc: &BoundaryCondition, j: usize) -> Result<String> {
    let mut out = format!("{STATIONARY_HEADER}\n");
    for i in 0..=j {
        let u = i as f64 / j as f64;
        let _ = writeln!(out, "{u},{}", stationary_profile(bc, u)?);
    }
    Ok(out)
}

/// One row per recorded number. `index` is the site, box or boundary slot (`0` left, `1` right);
/// time averages are stamped with the end of their window.
pub fn observations_csv(records: &[ObservationRecord]) -> String {
    let mut out = format!("{OBSERVATIONS_HEADER}\n");
    for rec in records {
        let r = rec.replica;
        for s in &rec.samples {
            let t = s.t;
            let _ = writeln!(out, "{r},{t},particles,0,{}", s.particles);
            let _ = writeln!(out, "{r},{t},net_flips_left,0,{}", s.net_flips_left);
            let _ = writeln!(out, "{r},{t},net_flips_right,0,{}", s.net_flips_right);
            if let Some(b) = s.boundary {
                let _ = writeln!(out, "{r},{t},boundary,0,{}", b[0]);
                let _ = writeln!(out, "{r},{t},boundary,1,{}", b[1]);
            }
            for (k, v) in s.boxes.iter().flatten().enumerate() {
                let _ = writeln!(out, "{r},{t},box,{k},{v}");
            }
            for (i, v) in s.profile.iter().flatten().enumerate() {
                let _ = writeln!(out, "{r},{t},site,{},{v}", i + 1);
            }
        }
        if let Some(avg) = &rec.time_average {
            for (i, v) in avg.profile.iter().enumerate() {
                let _ = writeln!(out, "{r},{},time_average,{},{v}", avg.to, i + 1);
            }
        }
    }
    out
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for d in &report.times {
        let _ = writeln!(out, "{},{},{},{},{}", report.n, d.t, d.l1, d.linf, d.mc_stderr);
    }
    out
}

/// Splits a CSV produced by this module into its header and numeric-or-text cells.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::input("empty table"))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(str::to_owned).collect();
        if row.len() != header.len() {
            return Err(Error::input(format!("row {} has {} cells, expected {}", k + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Machine-readable error document.
pub fn error_document(e: &Error, exit_code: i32) -> Value {
    let mut err = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Usage { key, .. } = e {
        err["key"] = json!(key);
    }
    json!({ "error": err, "exit_code": exit_code })
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}
