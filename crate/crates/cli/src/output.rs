//! File contracts: CSV for flat tables, JSON for nested records, and a
//! `meta.json` describing the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use conetip_core::interval::CriticalInterval;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::run::{BundleData, ResultBundle};
use crate::CliError;

pub const SPECTRUM_HEADER: &str = "mode,re_Lambda,im_Lambda,re_lambda,im_lambda,classification,residual";
pub const TRAJECTORY_HEADER: &str = "delta,re_lambda,im_lambda,overlap";

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct IntervalOut<'a> {
    #[serde(flatten)]
    interval: &'a CriticalInterval,
    relative_error: Option<f64>,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'a str,
    subcommand: &'a str,
    format: Format,
    config_sha256: String,
    config: &'a RunConfig,
    files: Vec<String>,
}

/// SHA-256 of the canonical configuration text.
pub fn config_hash(config: &RunConfig) -> String {
    hex::encode(Sha256::digest(config.to_json().as_bytes()))
}

/// Writes the bundle's files into `dir` (created if missing) and returns
/// their paths, `meta.json` last.
pub fn write_results(bundle: &ResultBundle, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let w = &mut written;
    match (&bundle.data, format) {
        (BundleData::Spectrum(s), Format::Csv) => {
            let mut out = String::from(SPECTRUM_HEADER);
            out.push('\n');
            for r in &s.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.mode,
                    num(r.re_Lambda),
                    num(r.im_Lambda),
                    num(r.re_lambda),
                    num(r.im_lambda),
                    r.classification,
                    num(r.residual)
                );
            }
            write_file(dir, "spectrum.csv", &out, w)?;
        }
        (BundleData::Spectrum(s), Format::Json) => write_file(dir, "spectrum.json", &json(s)?, w)?,
        (BundleData::Interval(i), format) => {
            let out = IntervalOut {
                interval: i,
                relative_error: i.relative_error(),
            };
            write_file(dir, "interval.json", &json(&out)?, w)?;
            if format == Format::Csv {
                let mut grid = String::from("kappa,blackhole,mode\n");
                for g in &i.grid {
                    let mode = g.mode.map(|m| m.to_string()).unwrap_or_default();
                    let _ = writeln!(grid, "{},{},{}", num(g.kappa), g.blackhole, mode);
                }
                write_file(dir, "interval_grid.csv", &grid, w)?;
            }
        }
        (BundleData::Aleph(rows), Format::Csv) => {
            let mut out = String::from("alpha,aleph,endpoint,reciprocal\n");
            for r in rows {
                let _ = writeln!(out, "{},{},{},{}", num(r.alpha), num(r.aleph), num(r.endpoint), num(r.reciprocal));
            }
            write_file(dir, "aleph.csv", &out, w)?;
        }
        (BundleData::Aleph(rows), Format::Json) => write_file(dir, "aleph.json", &json(rows)?, w)?,
        (BundleData::Basis(b), _) => write_file(dir, "basis.json", &json(b)?, w)?,
        (BundleData::Trajectory(t), format) => {
            write_file(dir, "absorption.json", &json(t)?, w)?;
            if format == Format::Csv {
                for (i, tr) in t.tracked.iter().enumerate() {
                    let mut out = String::from(TRAJECTORY_HEADER);
                    out.push('\n');
                    for p in &tr.points {
                        let _ = writeln!(out, "{},{},{},{}", num(p.delta), num(p.lambda.re), num(p.lambda.im), num(p.overlap));
                    }
                    if i == 0 {
                        write_file(dir, "trajectory.csv", &out, w)?;
                    }
                    let name = format!("trajectory_m{}_j{}_k{}.csv", tr.mode, tr.line_index, tr.component);
                    write_file(dir, &name, &out, w)?;
                }
            }
        }
        (BundleData::Blowup(b), Format::Csv) => {
            let mut out = String::from("n,norm_squared\n");
            for (n, v) in b.fit.n.iter().zip(&b.fit.norms) {
                let _ = writeln!(out, "{n},{}", num(*v));
            }
            write_file(dir, "blowup.csv", &out, w)?;
        }
        (BundleData::Blowup(b), Format::Json) => write_file(dir, "blowup.json", &json(b)?, w)?,
        (BundleData::Weights(x), Format::Csv) => {
            let mut out = String::from("bc_kind,beta,attained_mode,attained_re_lambda\n");
            for (name, sw) in [("dirichlet", &x.dirichlet), ("neumann", &x.neumann)] {
                let _ = writeln!(out, "{name},{},{},{}", num(sw.beta), sw.attained_mode, num(sw.attained_re_lambda));
            }
            let _ = writeln!(out, "star,{},,", num(x.beta_star));
            write_file(dir, "weights.csv", &out, w)?;
        }
        (BundleData::Weights(x), Format::Json) => write_file(dir, "weights.json", &json(x)?, w)?,
    }

    let files = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        subcommand: bundle.subcommand.name(),
        format,
        config_sha256: config_hash(&bundle.config),
        config: &bundle.config,
        files,
    };
    write_file(dir, "meta.json", &json(&meta)?, &mut written)?;
    Ok(written)
}
