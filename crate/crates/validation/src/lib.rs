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

//! Acceptance criteria for the solver and its command-line front end.
//!
//! Each check returns whether it passed and a one-line summary of what was
//! measured; [`CRITERIA`] lists them with their runtime bounds.


use casimir_cli::config::{Curve, Format, Output, Spacing};
use casimir_cli::{run_sweep, RunConfig};
use casimir_core::oracle::{brute_force_block, production_block, random_draws};
use casimir_core::spectral::{
    solve_block, solve_spectrum_truncated, solve_spectrum_with, zero_point_energy, BlockSpectrum,
};
use casimir_core::{
    build_block, dipole_energy_force, evaluate, local_exponent, quadrupole_energy_force, ForceMethod,
    Geometry, SolveMode, SolverConfig, SubstrateContrast, Truncation,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub type Outcome = Result<(bool, String), String>;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn pc() -> SubstrateContrast {
    SubstrateContrast::perfect_conductor()
}

fn full(z: f64, tol: f64, cap: usize) -> Result<(f64, f64, usize, bool), String> {
    let cfg = SolverConfig::adaptive(cap, tol);
    let ev = evaluate(&Geometry::new(z).unwrap(), &pc(), &cfg).map_err(|e| e.to_string())?;
    Ok((ev.energy.energy_reduced, ev.force.force_reduced, ev.truncation.l_max, ev.converged))
}

pub fn c1() -> Outcome {
    let mut worst = 0.0f64;
    for fc in [-1.0, -0.5] {
        let c = SubstrateContrast::new(fc).unwrap();
        for z in log_grid(0.1, 100.0, 50) {
            let g = Geometry::new(z).unwrap();
            let spectrum = solve_spectrum_with(&g, &c, Truncation { l_max: 1, m_max: 1 }, SolveMode::Refined)
                .map_err(|e| e.to_string())?;
            let e = zero_point_energy(&spectrum, &SolverConfig::fixed(1)).map_err(|e| e.to_string())?;
            let f = spectrum.hellmann_feynman_force().unwrap();
            let (e_ref, f_ref) = dipole_energy_force(&g, &c);
            worst = worst.max(rel(e.energy_reduced, e_ref)).max(rel(f, f_ref));
        }
    }
    Ok((worst < 1e-12, format!("max rel error {worst:.2e} (< 1e-12)")))
}

pub fn c2() -> Outcome {
    let mut worst = 0.0f64;
    for (g, c) in random_draws(20_240_601, 20) {
        for m in 0..=4i64 {
            let a = brute_force_block(&g, &c, m, 4).map_err(|e| e.to_string())?;
            let b = production_block(&g, &c, m, 4).map_err(|e| e.to_string())?;
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    worst = worst.max(rel(*y, *x));
                }
            }
        }
    }
    Ok((worst < 1e-10, format!("max entrywise rel error {worst:.2e} (< 1e-10)")))
}

pub fn c3() -> Outcome {
    let zs = log_grid(50.0, 500.0, 12);
    let mut le = Vec::new();
    let mut lf = Vec::new();
    for &z in &zs {
        let (e, f, _, _) = full(z, 1e-10, 64)?;
        le.push(e.abs().ln());
        lf.push(f.abs().ln());
    }
    let lz: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
    let (se, sf) = (slope(&lz, &le), slope(&lz, &lf));
    let ok = (se + 3.0).abs() <= 0.02 && (sf + 4.0).abs() <= 0.02;
    Ok((ok, format!("slope |E| {se:.4} (target -3.00 +- 0.02), slope |F| {sf:.4} (target -4.00 +- 0.02)")))
}

pub fn c4() -> Outcome {
    let mut worst = (0.0f64, 0.0);
    for z in log_grid(7.0, 100.0, 15).into_iter().filter(|&z| z > 7.0) {
        let (_, f, _, _) = full(z, 1e-10, 256)?;
        let (_, fd) = dipole_energy_force(&Geometry::new(z).unwrap(), &pc());
        let r = rel(fd, f);
        if r > worst.0 {
            worst = (r, z);
        }
    }
    Ok((worst.0 < 0.01, format!("max |F_full - F_dip|/|F_full| = {:.4} at z/a = {:.3} (< 0.01)", worst.0, worst.1)))
}

pub fn c5() -> Outcome {
    let mut worst = (0.0f64, 0.0);
    for z in log_grid(2.0, 7.0, 12) {
        let (_, f, _, _) = full(z, 1e-10, 256)?;
        let (_, fq) = quadrupole_energy_force(&Geometry::new(z).unwrap(), &pc()).map_err(|e| e.to_string())?;
        let r = rel(fq, f);
        if r > worst.0 {
            worst = (r, z);
        }
    }
    Ok((worst.0 < 0.01, format!("max |F_full - F_quad|/|F_full| = {:.4} at z/a = {:.3} (< 0.01)", worst.0, worst.1)))
}

pub fn c6() -> Outcome {
    let zs = log_grid(0.05, 20.0, 16);
    let mut forces = Vec::new();
    let mut ratios = Vec::new();
    let mut all_converged = true;
    for &z in &zs {
        let (_, f, _, conv) = full(z, 1e-6, 1500)?;
        all_converged &= conv;
        let (_, fd) = dipole_energy_force(&Geometry::new(z).unwrap(), &pc());
        forces.push((z, f));
        ratios.push(f / fd);
    }
    let ratio_monotone = ratios.windows(2).all(|w| w[0] > w[1]);
    let smallest = ratios[0];
    let betas = local_exponent(&forces).map_err(|e| e.to_string())?;
    let beta_increasing = betas.windows(2).all(|w| w[0].1 > w[1].1);
    let ok = all_converged && ratio_monotone && smallest > 100.0 && beta_increasing;
    Ok((
        ok,
        format!(
            "converged={all_converged}, ratio monotone={ratio_monotone}, F_full/F_dip at z/a=0.05 = {smallest:.2} (> 100), \
             beta increasing toward small z={beta_increasing} (beta {:.3} at z/a={:.3}, {:.3} at z/a={:.3})",
            betas[0].1,
            betas[0].0,
            betas[betas.len() - 1].1,
            betas[betas.len() - 1].0
        ),
    ))
}

pub fn c7() -> Outcome {
    let mut worst = (0.0f64, 0.0);
    for z in log_grid(0.1, 100.0, 12) {
        let cfg = SolverConfig::adaptive(2000, 1e-8).with_force_method(ForceMethod::Both);
        let ev = evaluate(&Geometry::new(z).unwrap(), &pc(), &cfg).map_err(|e| e.to_string())?;
        let d = ev.force.hf_fd_discrepancy.unwrap();
        if d > worst.0 {
            worst = (d, z);
        }
    }
    Ok((worst.0 < 1e-6, format!("max |F_HF - F_FD|/|F_HF| = {:.2e} at z/a = {:.3} (< 1e-6)", worst.0, worst.1)))
}

fn trace_pole_count(s: &BlockSpectrum) -> usize {
    let trace = |u: f64| -> f64 { (0..s.len()).map(|i| s.green_function_element(u, i, i, 0.0).unwrap()).sum() };
    let steps = 200_000;
    let mut prev = trace(0.0);
    let mut count = 0;
    for k in 1..=steps {
        let g = trace(k as f64 / steps as f64 * 0.999);
        if prev < 0.0 && g > 0.0 {
            count += 1;
        }
        prev = g;
    }
    count
}

pub fn c8() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..20 {
        let z = (rng.gen_range(0.05f64.ln()..50f64.ln())).exp();
        let fc = rng.gen_range(-1.0..0.99);
        let g = Geometry::new(z).unwrap();
        let c = SubstrateContrast::new(fc).unwrap();
        for m in [0i64, 1, 5, 17] {
            let b = build_block(&g, &c, m, 40).unwrap();
            let e = b.entries();
            let n = b.dim();
            if (0..n).any(|i| (0..n).any(|j| e[(i, j)].to_bits() != e[(j, i)].to_bits())) {
                failures.push(format!("asymmetric block z={z} m={m}"));
            }
            let neg = build_block(&g, &c, -m, 40).unwrap();
            if (0..n).any(|i| (0..n).any(|j| neg.entries()[(i, j)].to_bits() != e[(i, j)].to_bits())) {
                failures.push(format!("m/-m blocks differ z={z} m={m}"));
            }
            if let Err(err) = solve_block(&b, SolveMode::Refined).and_then(|s| s.check_physical()) {
                failures.push(format!("eigenvalues z={z} fc={fc} m={m}: {err}"));
            }
        }
    }
    for fc in [-1.0, -0.5, -0.1] {
        let c = SubstrateContrast::new(fc).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for z in log_grid(0.1, 10.0, 10).into_iter().rev() {
            let ev = evaluate(&Geometry::new(z).unwrap(), &c, &SolverConfig::adaptive(2000, 1e-8)).unwrap();
            let e = ev.energy.energy_reduced;
            if !(e < 0.0) {
                failures.push(format!("energy not negative at z={z} fc={fc}"));
            }
            if !(e < prev) && prev.is_finite() {
                failures.push(format!("energy not monotone at z={z} fc={fc}"));
            }
            prev = e;
        }
    }
    for (z, m, l) in [(0.5, 1i64, 7usize), (0.2, 0, 10), (2.0, 3, 9)] {
        let b = build_block(&Geometry::new(z).unwrap(), &pc(), m, l).unwrap();
        let s = solve_block(&b, SolveMode::WithVectors).unwrap();
        let count = trace_pole_count(&s);
        if count != s.len() {
            failures.push(format!("pole count {count} != {} at z={z} m={m}", s.len()));
        }
    }
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let mut a = RunConfig::default();
    a.sweep.z_min = 0.2;
    a.sweep.z_max = 20.0;
    a.sweep.points = 7;
    a.sweep.spacing = Spacing::Log;
    a.solver = SolverConfig::adaptive(512, 1e-7);
    a.curves = [Curve::Full, Curve::Dipole, Curve::Quadrupole].into();
    a.outputs = [Output::Energy, Output::Force, Output::Beta].into();
    a.formats = [Format::Csv].into();
    a.output_dir = d1.path().to_path_buf();
    let mut b = a.clone();
    b.output_dir = d2.path().to_path_buf();
    b.threads = 4;
    run_sweep(&a).map_err(|e| e.to_string())?;
    run_sweep(&b).map_err(|e| e.to_string())?;
    for name in ["full.csv", "dipole.csv", "quadrupole.csv"] {
        if std::fs::read(d1.path().join(name)).unwrap() != std::fs::read(d2.path().join(name)).unwrap() {
            failures.push(format!("{name} bytes depend on thread count"));
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        "symmetry, m/-m degeneracy, eigenvalues in (0,1), negative monotone energy, pole counts, CSV determinism".to_string()
    } else {
        failures.join("; ")
    };
    Ok((ok, detail))
}

pub fn c9() -> Outcome {
    let g = Geometry::new(0.05).unwrap();
    let spectrum = solve_spectrum_truncated(&g, &pc(), 2000, 2000, 1e-9, SolveMode::ValuesOnly)
        .map_err(|e| e.to_string())?;
    spectrum.check_physical().map_err(|e| e.to_string())?;
    let e = zero_point_energy(&spectrum, &SolverConfig::fixed(2000)).map_err(|e| e.to_string())?;
    let ok = e.energy_reduced.is_finite() && e.energy_reduced < 0.0;
    Ok((
        ok,
        format!(
            "E = {:.10} at l_max = 2000 with m blocks 0..={}",
            e.energy_reduced, spectrum.m_max_used
        ),
    ))
}

pub struct Criterion {
    pub id: &'static str,
    pub name: &'static str,
    pub run: fn() -> Outcome,
    /// Runtime bound in seconds, if any.
    pub bound: Option<f64>,
}

pub const CRITERIA: [Criterion; 9] = [
    Criterion { id: "C1", name: "dipole anchor", run: c1, bound: Some(1.0) },
    Criterion { id: "C2", name: "oracle equivalence", run: c2, bound: Some(10.0) },
    Criterion { id: "C3", name: "asymptotic exponents", run: c3, bound: Some(10.0) },
    Criterion { id: "C4", name: "dipole-sufficiency window", run: c4, bound: Some(30.0) },
    Criterion { id: "C5", name: "quadrupole window", run: c5, bound: Some(30.0) },
    Criterion { id: "C6", name: "small-gap enhancement", run: c6, bound: Some(600.0) },
    Criterion { id: "C7", name: "force self-consistency", run: c7, bound: Some(60.0) },
    Criterion { id: "C8", name: "invariant suite", run: c8, bound: Some(120.0) },
    Criterion { id: "C9", name: "scale check", run: c9, bound: None },
];
