// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! `qtrap`: run, sweep, verify and export q-deformed trapped-ion scenarios.
//!
//! Exit codes: 0 success, 2 configuration or usage, 3 numerical check,
//! 4 I/O.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtrap_core::runner::{
    export_matrices, parse_config, run_scenario, sweep, verify, ParseMode, ScenarioConfig,
    SweepAxis,
};
use qtrap_core::{CouplingRoute, Error};

#[derive(Parser)]
#[command(
    name = "qtrap",
    version,
    about = "Two-level ion in a q-deformed harmonic trap"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one scenario and write its artifacts.
    Run(Common),
    /// Run one scenario per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of q, tau, epsilon, alpha, delta_bar.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Execute the invariant suite and print a pass/fail table.
    Verify(Common),
    /// Dump F, F_q and H for a configuration.
    ExportMatrix(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration document; canonical defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Coupling route, overriding `coupling.route`.
    #[arg(long, value_name = "NAME")]
    route: Option<String>,
    /// Reject unknown config keys (default).
    #[arg(long, overrides_with = "lenient")]
    strict: bool,
    /// Warn about unknown config keys instead of rejecting them.
    #[arg(long, overrides_with = "strict")]
    lenient: bool,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mode = if self.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        };
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", path.display()),
                ))
            })?,
            None => String::new(),
        };
        let mut cfg = parse_config(&text, mode)?;
        log::info!("configuration: {}", cfg.to_json());
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(route) = &self.route {
            cfg.route = route.parse::<CouplingRoute>().map_err(|e| Error::Config {
                key: "--route".into(),
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }
}

fn execute(verb: Verb) -> Result<ExitCode, Error> {
    match verb {
        Verb::Run(common) => {
            let cfg = common.load()?;
            let report = run_scenario(&cfg)?;
            let d = &report.diagnostics;
            println!("eff_f2  {:.12}", d.eff_f2);
            println!("eps_q   {:.12}", d.eps_q);
            println!("final_w {:.12}", d.final_w);
            println!(
                "wrote {} files to {}",
                report.files.len(),
                report.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Verb::Sweep {
            common,
            axis,
            values,
        } => {
            let cfg = common.load()?;
            let axis: SweepAxis = axis.parse()?;
            let out = cfg.out_dir.clone();
            let report = sweep(&cfg, axis, &values, &out)?;
            for r in &report.runs {
                println!("{:>4}  {axis} = {:<12}  {}", r.index, r.value, r.status);
            }
            println!("summary: {}", report.summary.display());
            let code = match report.failures().next() {
                Some(r) => ExitCode::from(r.exit_code as u8),
                None => ExitCode::SUCCESS,
            };
            Ok(code)
        }
        Verb::Verify(common) => {
            let cfg = common.load()?;
            let report = verify(&cfg)?;
            print!("{}", report.table());
            if common.out.is_some() {
                report.write(&cfg.out_dir)?;
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Verb::ExportMatrix(common) => {
            let cfg = common.load()?;
            for f in export_matrices(&cfg, &cfg.out_dir)? {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
