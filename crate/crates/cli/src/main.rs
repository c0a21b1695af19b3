// Copyright 2026 The spectral-casimir authors
//
// Licensed under the Apache license, version 2.0 (the "license");
// you may not use this file except in compliance with the license.
// You may obtain a copy of the license at
//
//     http://www.apache.org/licenses/license-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the license is distributed on an "as is" basis,
// without warranties or conditions of any kind, either express or implied.
// See the license for the specific language governing permissions and
// limitations under the license.

use std::path::PathBuf;
use std::process::ExitCode;

use casimir_cli::config::Overrides;
use casimir_cli::sweep::version_line;
use casimir_cli::table::format_float;
use casimir_cli::{run_convergence_report, run_sweep, CliError, RunConfig};
use casimir_core::oracle::run_oracle_suite;
use casimir_core::spectral::convergence_ladder;
use casimir_core::{build_block, Geometry, SolveMode};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casimir", version, about = "Non-retarded sphere-substrate Casimir energy and force")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy, force and beta over a range of z/a for each requested curve.
    Sweep(Common),
    /// Doubling ladder in l_max at one separation.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Separation z/a (defaults to the sweep's z_min).
        #[arg(long)]
        z: Option<f64>,
    },
    /// Converged mode spectrum at one separation as CSV on stdout.
    Modes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        z: Option<f64>,
        /// Print the coupling block of this azimuthal order instead.
        #[arg(long, value_name = "M", allow_hyphen_values = true)]
        dump_block: Option<i64>,
    },
    /// Cross-check the solver against the independent reference implementations.
    Oracle {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    z_min: Option<f64>,
    #[arg(long)]
    z_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// log or linear.
    #[arg(long)]
    spacing: Option<String>,
    /// Substrate contrast factor in [-1, 1).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "substrate")]
    fc: Option<f64>,
    /// perfect_conductor or sapphire.
    #[arg(long)]
    substrate: Option<String>,
    /// Multipole cap.
    #[arg(long, value_name = "N")]
    lmax: Option<usize>,
    /// Relative energy tolerance of the l_max ladder.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Comma list of full, dipole, quadrupole, proximity.
    #[arg(long, value_name = "LIST")]
    curves: Option<String>,
    /// Comma list of energy, force, beta, modes.
    #[arg(long, value_name = "LIST")]
    outputs: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma list of csv, svg.
    #[arg(long)]
    formats: Option<String>,
    /// hf, fd or both.
    #[arg(long)]
    force_method: Option<String>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            z_min: self.z_min,
            z_max: self.z_max,
            points: self.points,
            spacing: self.spacing.clone(),
            fc: self.fc,
            substrate: self.substrate.clone(),
            l_max: self.lmax,
            tol: self.tol,
            curves: self.curves.clone(),
            outputs: self.outputs.clone(),
            out: self.out.clone(),
            formats: self.formats.clone(),
            force_method: self.force_method.clone(),
            threads: self.threads,
        })?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = common.resolve()?;
            let outcome = run_sweep(&cfg)?;
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.all_converged {
                return Err(CliError::NonConvergence(format!(
                    "some points did not converge below l_max={}; rows marked converged=false",
                    cfg.solver.l_max
                )));
            }
            Ok(())
        }
        Command::Converge { common, z } => {
            let cfg = common.resolve()?;
            let z = z.unwrap_or(cfg.sweep.z_min);
            let report = run_convergence_report(&cfg, z)?;
            print!("{}", report.csv);
            if !report.converged {
                return Err(CliError::NonConvergence(format!(
                    "z/a={z}: ladder reached l_max={} without meeting tol={}",
                    cfg.solver.l_max, cfg.solver.energy_rel_tol
                )));
            }
            Ok(())
        }
        Command::Modes { common, z, dump_block } => {
            let cfg = common.resolve()?;
            cfg.solver.validate()?;
            let geom = Geometry::new(z.unwrap_or(cfg.sweep.z_min))?;
            if let Some(m) = dump_block {
                let block = build_block(&geom, &cfg.contrast, m, cfg.solver.l_max)?;
                print!("{}", block.to_csv());
                return Ok(());
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let ladder = pool.install(|| {
                convergence_ladder(&geom, &cfg.contrast, &cfg.solver, SolveMode::Refined, |_| {})
            })?;
            println!("# {}", version_line());
            println!(
                "# z_over_a={} l_max={} m_max={} converged={}",
                format_float(geom.gap_over_radius()),
                ladder.spectrum.l_max_used,
                ladder.spectrum.m_max_used,
                ladder.converged
            );
            println!("m,degeneracy,rank,l_reference,n_s,shift");
            for block in &ladder.spectrum.per_m {
                for s in 0..block.len() {
                    println!(
                        "{},{},{},{},{},{}",
                        block.m,
                        block.degeneracy,
                        s,
                        block.l_min + s,
                        format_float(block.mode(s)),
                        format_float(block.shifts[s])
                    );
                }
            }
            if !ladder.converged {
                return Err(CliError::NonConvergence("mode spectrum not converged".into()));
            }
            Ok(())
        }
        Command::Oracle { seed } => {
            let reports = run_oracle_suite(seed)?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            for r in &reports {
                println!("{r}");
            }
            println!("ORACLE summary cases={} failed={failed}", reports.len());
            if failed > 0 {
                return Err(CliError::Numerical(format!("{failed} oracle cases failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
