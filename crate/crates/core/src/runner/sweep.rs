// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::export::fmt_f64;

use super::config::ScenarioConfig;
use super::scenario::{create, create_dir, io_at, run_scenario, write_json, Diagnostics};

pub const SWEEP_FORMAT: &str = "qtrap-sweep/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Q,
    Tau,
    Epsilon,
    Alpha,
    DeltaBar,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        Self::Q,
        Self::Tau,
        Self::Epsilon,
        Self::Alpha,
        Self::DeltaBar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Q => "q",
            Self::Tau => "tau",
            Self::Epsilon => "epsilon",
            Self::Alpha => "alpha",
            Self::DeltaBar => "delta_bar",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config {
                key: "axis".into(),
                message: format!(
                    "unknown sweep axis {s:?}; expected one of q, tau, epsilon, alpha, delta_bar"
                ),
            })
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRun {
    pub index: usize,
    pub value: f64,
    pub dir: PathBuf,
    #[serde(skip)]
    pub diagnostics: Option<Diagnostics>,
    /// `ok`, or the error category and message.
    pub status: String,
    /// Exit code the run would have had on its own.
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub runs: Vec<SweepRun>,
    pub summary: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRun> {
        self.runs.iter().filter(|r| r.exit_code != 0)
    }
}

fn run_one(
    base: &ScenarioConfig,
    axis: SweepAxis,
    index: usize,
    value: f64,
    out: &Path,
) -> SweepRun {
    let dir = out.join(format!("run_{index:03}"));
    let outcome = base.with_value(axis.name(), value).and_then(|mut cfg| {
        cfg.out_dir = dir.clone();
        run_scenario(&cfg)
    });
    match outcome {
        Ok(report) => SweepRun {
            index,
            value,
            dir,
            diagnostics: Some(report.diagnostics),
            status: "ok".into(),
            exit_code: 0,
        },
        Err(e) => {
            log::warn!("sweep point {index} ({axis} = {value}) failed: {e}");
            SweepRun {
                index,
                value,
                dir,
                diagnostics: None,
                status: format!("{:?}: {e}", e.category()).to_lowercase(),
                exit_code: e.category().exit_code(),
            }
        }
    }
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Run `base` once per value of `axis`, each in `out/run_NNN`, then write
/// `summary.csv` and `sweep.json` into `out`. Failed points are recorded
/// in the summary and do not stop the others.
pub fn sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Config {
            key: "values".into(),
            message: "sweep needs at least one value".into(),
        });
    }
    create_dir(out)?;
    let runs: Vec<SweepRun> = values
        .par_iter()
        .enumerate()
        .map(|(k, &v)| run_one(base, axis, k, v, out))
        .collect();

    let summary = out.join("summary.csv");
    let mut w = BufWriter::new(create(&summary)?);
    let write = |w: &mut BufWriter<_>| -> std::io::Result<()> {
        writeln!(w, "# {SWEEP_FORMAT} axis={axis}")?;
        writeln!(w, "index,value,eff_f2,eps_q,final_w,status")?;
        for r in &runs {
            let (f2, eq, fw) = match &r.diagnostics {
                Some(d) => (fmt_f64(d.eff_f2), fmt_f64(d.eps_q), fmt_f64(d.final_w)),
                None => (String::new(), String::new(), String::new()),
            };
            writeln!(
                w,
                "{},{},{f2},{eq},{fw},{}",
                r.index,
                fmt_f64(r.value),
                csv_quote(&r.status)
            )?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_at(&summary))?;

    let manifest = json!({
        "format": SWEEP_FORMAT,
        "qtrap_version": env!("CARGO_PKG_VERSION"),
        "axis": axis,
        "values": values,
        "base_config": base.to_json(),
        "runs": runs,
    });
    write_json(&out.join("sweep.json"), &manifest)?;
    Ok(SweepReport {
        axis,
        runs,
        summary,
    })
}
