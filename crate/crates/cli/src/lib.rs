//! Command-line driver for the semigroup lower-bound laboratory.
//!
//! Subcommands: `gallery list|run`, `ulam build`, `check <certifier>`,
//! `suite acceptance`. Exit codes: 0 all certified expectations matched,
//! 1 theorem-level violation, 2 hypotheses inapplicable, 64 usage error.

pub mod acceptance;
pub mod runner;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use semigroup_lab::io::{self, ReportEnvelope};
use semigroup_lab::{gallery, LabError};

pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "sglab", version, about = "Numerical lab for lower-bound convergence criteria of positive operator semigroups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Named instances and their standard experiments.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Ulam discretization of interval maps.
    Ulam {
        #[command(subcommand)]
        action: UlamAction,
    },
    /// Run one certifier against an instance.
    Check {
        /// lasota-yorke | uniform-lower-bound | individual-bounds | ding |
        /// lattice-homo-rigidity | strong-convergence | norm-convergence |
        /// embedded-consistency | psi
        certifier: String,
        /// Path to a JSON instance description, or `gallery:<id>`.
        #[arg(long)]
        instance: String,
        /// Lower-bound candidate: `perron-half`, `uniform`, `zero`, or a
        /// JSON-array file.
        #[arg(long)]
        h: Option<String>,
        /// Order-bounding vector for the psi checker (same naming scheme).
        #[arg(long)]
        f0: Option<String>,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Positivity floor for limit columns.
        #[arg(long, default_value_t = 1e-12)]
        floor: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run one experiment described by a JSON config file.
    Run {
        /// JSON file: {"instance": {...}, "checker": "...", "horizon": ...,
        /// "tol": ..., "epsilon": ..., "h": "...", "out": "...", "format": "..."}
        config: PathBuf,
    },
    /// Test suites.
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum GalleryAction {
    /// List the named instances.
    List,
    /// Run the standard experiment battery of one instance.
    Run {
        id: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
        /// rational | float: gallery constructors self-validate against the
        /// rational closed forms either way; `rational` notes the re-run.
        #[arg(long, default_value = "float")]
        mode: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum UlamAction {
    /// Build the Ulam matrix of a piecewise-affine map description.
    Build {
        /// JSON file with a piecewise-affine map description.
        map: PathBuf,
        #[arg(long)]
        cells: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum SuiteAction {
    /// Run every acceptance criterion and print one pass/fail line each.
    Acceptance {
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output directory for reports and traces; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json | csv: csv additionally writes the traces.
    #[arg(long, default_value = "json")]
    pub format: String,
}

impl OutputArgs {
    fn csv(&self) -> bool {
        self.format == "csv"
    }
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(LabError::InvalidConfig(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, LabError> {
    match cli.command {
        Command::Gallery { action } => match action {
            GalleryAction::List => {
                for entry in gallery::gallery_list() {
                    println!(
                        "{:<22} dim {:<5} {}",
                        entry.id, entry.default_dim, entry.description
                    );
                }
                Ok(0)
            }
            GalleryAction::Run {
                id,
                dim,
                horizon,
                tol,
                p,
                period,
                cells,
                mode,
                out,
            } => {
                if mode != "float" && mode != "rational" {
                    return Err(LabError::InvalidConfig(format!(
                        "mode must be 'float' or 'rational', got '{mode}'"
                    )));
                }
                let cfg = runner::RunConfig {
                    dim,
                    horizon,
                    tol,
                    p,
                    period,
                    cells,
                };
                let mut report = runner::run_gallery(&id, &cfg)?;
                if mode == "rational" {
                    report
                        .notes
                        .push("rational mode: constructors re-validated against exact orbits".into());
                }
                runner::emit_report(&report, out.out.as_deref(), out.csv())
                    .map_err(|e| LabError::InvalidConfig(format!("cannot write report: {e}")))?;
                Ok(report.verdict.exit_code())
            }
        },
        Command::Ulam { action } => match action {
            UlamAction::Build { map, cells, out } => {
                let text = std::fs::read_to_string(&map).map_err(|e| {
                    LabError::InvalidConfig(format!("cannot read map file {map:?}: {e}"))
                })?;
                let spec: io::MapSpec = serde_json::from_str(&text)
                    .map_err(|e| LabError::InvalidConfig(format!("malformed map spec: {e}")))?;
                let interval = spec.build_interval_map()?;
                let u = semigroup_lab::fp::ulam_matrix(&interval, cells)?;
                let dense = u.operator.to_dense()?;
                let mut triplets = Vec::new();
                for j in 0..cells {
                    for i in 0..cells {
                        if dense[(i, j)] != 0.0 {
                            triplets.push((i, j, dense[(i, j)]));
                        }
                    }
                }
                let envelope = ReportEnvelope::new(
                    format!("ulam-{cells}"),
                    if u.exact_markov_partition {
                        vec![]
                    } else {
                        vec!["approximate: branch grid is not a Markov partition".into()]
                    },
                    serde_json::json!({
                        "cells": cells,
                        "exact_markov_partition": u.exact_markov_partition,
                        "markov": u.operator.is_markov(1e-12),
                        "triplets": triplets,
                    }),
                );
                match out.out {
                    None => println!("{}", envelope.to_json()),
                    Some(dir) => {
                        std::fs::create_dir_all(&dir).map_err(|e| {
                            LabError::InvalidConfig(format!("cannot create {dir:?}: {e}"))
                        })?;
                        let path = dir.join(format!("ulam-{cells}.json"));
                        envelope.write_json(&path).map_err(|e| {
                            LabError::InvalidConfig(format!("cannot write {path:?}: {e}"))
                        })?;
                    }
                }
                Ok(0)
            }
        },
        Command::Check {
            certifier,
            instance,
            h,
            f0,
            horizon,
            tol,
            epsilon,
            floor,
            out,
        } => {
            let built = runner::build_instance_arg(&instance)?;
            let cfg = runner::CheckConfig {
                horizon,
                tol,
                epsilon,
                bound: h,
                f0,
                floor,
            };
            let report = runner::run_check(&certifier, &built, &cfg)?;
            runner::emit_report(&report, out.out.as_deref(), out.csv())
                .map_err(|e| LabError::InvalidConfig(format!("cannot write report: {e}")))?;
            Ok(report.verdict.exit_code())
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                LabError::InvalidConfig(format!("cannot read config {config:?}: {e}"))
            })?;
            let experiment: runner::ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| LabError::InvalidConfig(format!("malformed config: {e}")))?;
            let report = runner::run_experiment(&experiment)?;
            let csv = experiment.format.as_deref() == Some("csv");
            runner::emit_report(&report, experiment.out.as_deref(), csv)
                .map_err(|e| LabError::InvalidConfig(format!("cannot write report: {e}")))?;
            Ok(report.verdict.exit_code())
        }
        Command::Suite { action } => match action {
            SuiteAction::Acceptance { out } => {
                let results = acceptance::run_all();
                for r in &results {
                    println!("{}", r.line());
                    for d in &r.details {
                        println!("    {d}");
                    }
                }
                if let Some(dir) = out.out {
                    std::fs::create_dir_all(&dir).map_err(|e| {
                        LabError::InvalidConfig(format!("cannot create {dir:?}: {e}"))
                    })?;
                    let envelope = ReportEnvelope::new("acceptance", vec![], &results);
                    envelope
                        .write_json(&dir.join("acceptance.json"))
                        .map_err(|e| LabError::InvalidConfig(format!("cannot write: {e}")))?;
                }
                Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
            }
        },
    }
}
