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

//! Separation sweeps and convergence reports.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use casimir_core::reference::proximity_energy;
use casimir_core::spectral::{convergence_ladder, solve_spectrum_truncated, LadderStep};
use casimir_core::{
    dipole_energy_force, evaluate, local_exponent, proximity_force, quadrupole_energy_force,
    Geometry, ModeSpectrum, PlateEnergyModel, SolveMode,
};
use rayon::prelude::*;

use crate::config::{Curve, Format, Output, ProximityModel, RunConfig};
use crate::error::CliError;
use crate::svg::{log_log_chart, Series};
use crate::table::{format_float, SweepRow, SweepTable};

pub fn version_line() -> String {
    format!("casimir {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone)]
pub struct CurveTable {
    pub curve: Curve,
    pub table: SweepTable,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub curves: Vec<CurveTable>,
    pub files: Vec<PathBuf>,
    pub all_converged: bool,
}

impl SweepOutcome {
    pub fn curve(&self, c: Curve) -> Option<&SweepTable> {
        self.curves.iter().find(|t| t.curve == c).map(|t| &t.table)
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn evaluate_point(cfg: &RunConfig, curve: Curve, z: f64) -> Result<SweepRow, CliError> {
    let geom = Geometry::new(z)?;
    let (energy_reduced, force_reduced, l_max_used, converged) = match curve {
        Curve::Full => {
            let start = Instant::now();
            let ev = evaluate(&geom, &cfg.contrast, &cfg.solver)?;
            log::info!(
                "z/a={z}: E={} F={} l_max={} m_max={} converged={} ({:.2}s)",
                ev.energy.energy_reduced,
                ev.force.force_reduced,
                ev.truncation.l_max,
                ev.truncation.m_max,
                ev.converged,
                start.elapsed().as_secs_f64()
            );
            if !ev.converged {
                log::warn!("z/a={z}: energy not converged at l_max cap {}", cfg.solver.l_max);
            }
            (ev.energy.energy_reduced, ev.force.force_reduced, ev.truncation.l_max, ev.converged)
        }
        Curve::Dipole => {
            let (e, f) = dipole_energy_force(&geom, &cfg.contrast);
            (e, f, 1, true)
        }
        Curve::Quadrupole => {
            let (e, f) = quadrupole_energy_force(&geom, &cfg.contrast)?;
            (e, f, 2, true)
        }
        Curve::Proximity => {
            let model = match cfg.proximity.model {
                ProximityModel::Vdw => PlateEnergyModel::VdwNonretarded,
                ProximityModel::Ideal => PlateEnergyModel::IdealRetarded,
            };
            let c = cfg.proximity.coefficient;
            (proximity_energy(1.0, z, model, c)?, proximity_force(1.0, z, model, c)?, 0, true)
        }
    };
    Ok(SweepRow {
        z_over_a: z,
        energy_reduced,
        force_reduced,
        beta: None,
        l_max_used,
        converged,
    })
}

/// Fill β at interior points. Returns whether the column is emitted.
fn attach_beta(rows: &mut [SweepRow], curve: Curve, wanted: bool) -> bool {
    if !wanted {
        return false;
    }
    if rows.len() < 3 {
        log::warn!("beta needs at least 3 sweep points; column omitted for {curve}");
        return false;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.z_over_a, r.force_reduced)).collect();
    match local_exponent(&pts) {
        Ok(betas) => {
            let n = rows.len();
            for (row, (_, b)) in rows[1..n - 1].iter_mut().zip(betas) {
                row.beta = Some(b);
            }
        }
        Err(e) => log::warn!("beta left empty for {curve}: {e}"),
    }
    true
}

fn comments(cfg: &RunConfig, curve: Curve) -> Vec<String> {
    let mut c = vec![version_line(), format!("curve {curve}")];
    c.extend(cfg.echo());
    c
}

/// Mode listing of a converged full spectrum at each sweep point.
fn modes_csv(cfg: &RunConfig, full: &SweepTable) -> Result<String, CliError> {
    let spectra: Vec<Result<ModeSpectrum, CliError>> = full
        .rows
        .par_iter()
        .map(|r| {
            let geom = Geometry::new(r.z_over_a)?;
            Ok(solve_spectrum_truncated(
                &geom,
                &cfg.contrast,
                r.l_max_used,
                cfg.solver.m_max,
                cfg.solver.energy_rel_tol / 10.0,
                SolveMode::Refined,
            )?)
        })
        .collect();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["z_over_a", "m", "degeneracy", "rank", "l_reference", "n_s"])?;
    for (row, spectrum) in full.rows.iter().zip(spectra) {
        for block in &spectrum?.per_m {
            for s in 0..block.len() {
                w.write_record([
                    format_float(row.z_over_a),
                    block.m.to_string(),
                    block.degeneracy.to_string(),
                    s.to_string(),
                    (block.l_min + s).to_string(),
                    format_float(block.mode(s)),
                ])?;
            }
        }
    }
    let mut out = format!("# {}\n", version_line());
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?).unwrap());
    Ok(out)
}

/// Compute every requested curve over the grid; write CSVs and SVGs.
///
/// Points are solved on a pool of `cfg.threads` workers and assembled in
/// grid order. Non-converged points are kept with `converged = false`.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    let grid = cfg.sweep.grid();
    let pool = pool(cfg.threads)?;
    let mut curves = Vec::new();
    for &curve in &cfg.curves {
        let rows: Result<Vec<SweepRow>, CliError> =
            pool.install(|| grid.par_iter().map(|&z| evaluate_point(cfg, curve, z)).collect());
        let mut rows = rows?;
        let has_beta = attach_beta(&mut rows, curve, cfg.outputs.contains(&Output::Beta));
        curves.push(CurveTable {
            curve,
            table: SweepTable {
                comments: comments(cfg, curve),
                has_beta,
                rows,
            },
        });
    }
    let all_converged = curves.iter().all(|c| c.table.rows.iter().all(|r| r.converged));

    let mut files = Vec::new();
    fs::create_dir_all(&cfg.output_dir)?;
    if cfg.formats.contains(&Format::Csv) {
        for c in &curves {
            let path = cfg.output_dir.join(format!("{}.csv", c.curve));
            fs::write(&path, c.table.to_csv_string()?)?;
            files.push(path);
        }
        if cfg.outputs.contains(&Output::Modes) {
            if let Some(full) = curves.iter().find(|c| c.curve == Curve::Full) {
                let path = cfg.output_dir.join("modes.csv");
                let text = pool.install(|| modes_csv(cfg, &full.table))?;
                fs::write(&path, text)?;
                files.push(path);
            } else {
                log::warn!("modes output needs the full curve; skipped");
            }
        }
    }
    if cfg.formats.contains(&Format::Svg) {
        for quantity in [Output::Energy, Output::Force, Output::Beta] {
            if !cfg.outputs.contains(&quantity) {
                continue;
            }
            if quantity == Output::Beta && !curves.iter().any(|c| c.table.has_beta) {
                continue;
            }
            let series: Vec<Series> = curves
                .iter()
                .map(|c| Series {
                    label: c.curve.to_string(),
                    points: c
                        .table
                        .rows
                        .iter()
                        .filter_map(|r| {
                            let y = match quantity {
                                Output::Energy => Some(r.energy_reduced),
                                Output::Force => Some(r.force_reduced),
                                _ => r.beta,
                            };
                            y.map(|y| (r.z_over_a, y))
                        })
                        .collect(),
                })
                .collect();
            let (title, y_label) = match quantity {
                Output::Energy => ("Interaction energy", "|E| / (hbar w_p)"),
                Output::Force => ("Force", "|F a| / (hbar w_p)"),
                _ => ("Local force exponent", "beta"),
            };
            let path = cfg.output_dir.join(format!("{quantity}.svg"));
            fs::write(&path, log_log_chart(title, "z/a", y_label, &series))?;
            files.push(path);
        }
    }
    Ok(SweepOutcome {
        curves,
        files,
        all_converged,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub z_over_a: f64,
    pub steps: Vec<LadderStep>,
    pub converged: bool,
    pub csv: String,
}

/// Doubling ladder in l_max at one separation, written as CSV.
pub fn run_convergence_report(cfg: &RunConfig, z: f64) -> Result<ConvergenceReport, CliError> {
    cfg.solver.validate()?;
    let geom = Geometry::new(z)?;
    let pool = pool(cfg.threads)?;
    let ladder = pool.install(|| {
        convergence_ladder(&geom, &cfg.contrast, &cfg.solver, SolveMode::ValuesOnly, |s| {
            log::info!(
                "l_max={} m_max={} E={} rel_change={:?} t={:.2}s",
                s.l_max,
                s.m_max_used,
                s.energy_reduced,
                s.rel_change,
                s.elapsed
            )
        })
    })?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["l_max", "m_max_used", "energy_reduced", "rel_change", "wall_time_s"])?;
    for s in &ladder.steps {
        w.write_record([
            s.l_max.to_string(),
            s.m_max_used.to_string(),
            format_float(s.energy_reduced),
            s.rel_change.map(format_float).unwrap_or_default(),
            format!("{:.6}", s.elapsed),
        ])?;
    }
    let mut csv_text = format!("# {}\n# z_over_a={}\n", version_line(), format_float(z));
    for line in cfg.echo() {
        csv_text.push_str(&format!("# {line}\n"));
    }
    csv_text.push_str(&String::from_utf8(w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?).unwrap());
    if cfg.formats.contains(&Format::Csv) {
        fs::create_dir_all(&cfg.output_dir)?;
        fs::write(cfg.output_dir.join(format!("convergence_z{}.csv", format_float(z))), &csv_text)?;
    }
    Ok(ConvergenceReport {
        z_over_a: z,
        steps: ladder.steps,
        converged: ladder.converged,
        csv: csv_text,
    })
}
