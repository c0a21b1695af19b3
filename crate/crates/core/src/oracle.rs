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

//! Independent reference implementations for cross-checking the solver.
//!
//! Coupling blocks are rebuilt here in exact rational arithmetic from the raw
//! (unsymmetrized) image/translation coefficients, and eigenvalues come from
//! power iteration or cyclic Jacobi rotations instead of the production
//! eigensolver.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::coupling::build_block;
use crate::error::{Error, Result};
use crate::model::{Geometry, SubstrateContrast};
use crate::spectral::{solve_block, SolveMode};

/// Largest l_max the exact-arithmetic oracle accepts.
pub const ORACLE_MAX_L: usize = 6;

pub type DenseMatrix = Vec<Vec<f64>>;

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn pow(base: &BigRational, exp: usize) -> BigRational {
    (0..exp).fold(BigRational::one(), |acc, _| acc * base)
}

/// Raw coupling n_l·f_c·(-1)^{l'+m}·(-1)^{l+m}·(l+l')!/[(l+m)!(l'-m)!]·x^{l+l'+1}.
///
/// The first sign is the parity of the reflected multipole, the second comes
/// from expanding a harmonic centred below the sphere about its centre.
fn raw_coupling(l: usize, lp: usize, m: usize, f_c: &BigRational, x: &BigRational) -> BigRational {
    let n_l = BigRational::new(BigInt::from(l), BigInt::from(2 * l + 1));
    let parity = if (l + lp + 2 * m) % 2 == 0 { 1 } else { -1 };
    let translation = BigRational::new(factorial(l + lp), factorial(l + m) * factorial(lp - m));
    n_l * f_c * BigRational::from_integer(BigInt::from(parity)) * translation * pow(x, l + lp + 1)
}

/// Exact-arithmetic H^{(m)} for l_max ≤ [`ORACLE_MAX_L`].
///
/// The raw matrix is similar to a symmetric one; its symmetric form has
/// off-diagonal entries sign·sqrt(N_{ll'}·N_{l'l}), the only inexact step.
pub fn brute_force_block(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    m: i64,
    l_max: usize,
) -> Result<DenseMatrix> {
    let m = m.unsigned_abs() as usize;
    if l_max > ORACLE_MAX_L {
        return Err(Error::Oracle(format!(
            "oracle is limited to l_max <= {ORACLE_MAX_L}, got {l_max}"
        )));
    }
    if l_max < 1 || m > l_max {
        return Err(Error::InvalidIndex(format!("m={m} outside [0, l_max={l_max}]")));
    }
    let zeta = rational(geom.gap_over_radius());
    let x = (BigRational::from_integer(BigInt::from(2)) * (BigRational::one() + zeta)).recip();
    let f_c = rational(contrast.value());
    let l_min = m.max(1);
    let dim = l_max - l_min + 1;
    let mut out = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        let l = l_min + i;
        let n_l = BigRational::new(BigInt::from(l), BigInt::from(2 * l + 1));
        out[i][i] = (n_l + raw_coupling(l, l, m, &f_c, &x)).to_f64().unwrap();
        for j in (i + 1)..dim {
            let lp = l_min + j;
            let forward = raw_coupling(l, lp, m, &f_c, &x);
            let backward = raw_coupling(lp, l, m, &f_c, &x);
            let product = &forward * &backward;
            debug_assert!(!product.is_negative());
            let magnitude = product.to_f64().unwrap().sqrt();
            let value = if forward.is_negative() { -magnitude } else { magnitude };
            out[i][j] = value;
            out[j][i] = value;
        }
    }
    Ok(out)
}

/// Exact (1/3)(1 + b f_c x³) for b = 1, 1, 2.
pub fn exact_dipole_modes(geom: &Geometry, contrast: &SubstrateContrast) -> [f64; 3] {
    let zeta = rational(geom.gap_over_radius());
    let x = (BigRational::from_integer(BigInt::from(2)) * (BigRational::one() + zeta)).recip();
    let f_c = rational(contrast.value());
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    [1, 1, 2].map(|b| {
        let v = &third
            * (BigRational::one() + BigRational::from_integer(BigInt::from(b)) * &f_c * pow(&x, 3));
        v.to_f64().unwrap()
    })
}

/// Shifted power iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iter: usize,
    /// Stop once ‖Av - θv‖ ≤ tol; some eigenvalue then lies within tol of θ.
    pub tol: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 2_000_000,
            tol: 1e-11,
        }
    }
}

fn mat_vec(a: &DenseMatrix, v: &[f64], out: &mut [f64]) {
    for (row, o) in a.iter().zip(out.iter_mut()) {
        *o = row.iter().zip(v).map(|(x, y)| x * y).sum();
    }
}

/// Largest eigenvalue of a symmetric matrix by power iteration on A - σI,
/// σ being the Gershgorin lower bound.
pub fn power_iteration_extreme_eigenvalue(block: &DenseMatrix) -> Result<f64> {
    power_iteration_with(block, PowerIteration::default())
}

pub fn power_iteration_with(block: &DenseMatrix, settings: PowerIteration) -> Result<f64> {
    let n = block.len();
    if n == 0 || block.iter().any(|r| r.len() != n) {
        return Err(Error::Oracle("power iteration needs a non-empty square matrix".into()));
    }
    let shift = block
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let radius: f64 = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.abs()).sum();
            row[i] - radius
        })
        .fold(f64::INFINITY, f64::min);
    let mut shifted = block.clone();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7 + 3) % 11) as f64).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..settings.max_iter {
        mat_vec(&shifted, &v, &mut w);
        let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= settings.tol {
            return Ok(theta + shift);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(shift);
        }
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / norm;
        }
    }
    Err(Error::PowerIteration {
        iterations: settings.max_iter,
        residual,
    })
}

/// All eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues_small(matrix: &DenseMatrix) -> Vec<f64> {
    let n = matrix.len();
    let mut a = matrix.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Associated Legendre function P_l^m(t) without the Condon-Shortley phase.
pub fn associated_legendre(l: usize, m: usize, t: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = t * (2 * m + 1) as f64 * pmm;
    for n in (m + 2)..=l {
        let next = ((2 * n - 1) as f64 * t * cur - (n + m - 1) as f64 * prev) / (n - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

fn spherical(p: [f64; 3]) -> (f64, f64) {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    (r, p[2] / r)
}

/// Direct value of r'^{-(l'+1)} P_{l'}^m(cos θ') at r' = p + d ẑ, against the
/// translated series Σ_l (-1)^{l+m} (l+l')!/[(l+m)!(l'-m)!] r^l P_l^m(cos θ)/d^{l+l'+1}.
/// Evaluated in the xz-plane, so the common e^{imφ} factor is 1.
/// Returns (direct, series).
pub fn axial_translation_pair(lp: usize, m: usize, d: f64, p: [f64; 3], terms: usize) -> (f64, f64) {
    let q = [p[0], p[1], p[2] + d];
    let (rq, tq) = spherical(q);
    let direct = associated_legendre(lp, m, tq) / rq.powi(lp as i32 + 1);
    let (r, t) = spherical(p);
    let mut series = 0.0;
    for l in m..(m + terms) {
        let sign = if (l + m) % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = factorial(l + lp).to_f64().unwrap()
            / (factorial(l + m).to_f64().unwrap() * factorial(lp - m).to_f64().unwrap());
        series += sign * coeff * r.powi(l as i32) * associated_legendre(l, m, t) / d.powi((l + lp + 1) as i32);
    }
    (direct, series)
}

/// One oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub case_id: String,
    pub expected: f64,
    pub got: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(case_id: impl Into<String>, expected: f64, got: f64, tolerance: f64) -> Self {
        let diff = (got - expected).abs();
        let rel_error = if expected == 0.0 { diff } else { diff / expected.abs() };
        Self {
            case_id: case_id.into(),
            expected,
            got,
            rel_error,
            tolerance,
            passed: rel_error <= tolerance,
        }
    }

    /// Worst entrywise relative mismatch of two matrices, reported against the worst entry.
    pub fn from_matrices(case_id: impl Into<String>, expected: &DenseMatrix, got: &DenseMatrix, tolerance: f64) -> Self {
        let mut worst = (0.0, 0.0, 0.0);
        for (re, rg) in expected.iter().zip(got) {
            for (&e, &g) in re.iter().zip(rg) {
                let rel = if e == 0.0 { (g - e).abs() } else { (g - e).abs() / e.abs() };
                if rel >= worst.0 {
                    worst = (rel, e, g);
                }
            }
        }
        let mut report = Self::new(case_id, worst.1, worst.2, tolerance);
        report.rel_error = worst.0;
        report.passed = worst.0 <= tolerance;
        report
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ORACLE case={} expected={:e} got={:e} rel_error={:e} tol={:e} {}",
            self.case_id,
            self.expected,
            self.got,
            self.rel_error,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Production block as a dense row-major matrix.
pub fn production_block(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    m: i64,
    l_max: usize,
) -> Result<DenseMatrix> {
    let block = build_block(geom, contrast, m, l_max)?;
    let n = block.dim();
    Ok((0..n)
        .map(|i| (0..n).map(|j| block.entries()[(i, j)]).collect())
        .collect())
}

/// Random (z/a, f_c) draws: z/a log-uniform in [0.05, 50], f_c uniform in [-1, 0.9).
pub fn random_draws(seed: u64, count: usize) -> Vec<(Geometry, SubstrateContrast)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z = (rng.gen_range(0.05f64.ln()..50f64.ln())).exp();
            let f = rng.gen_range(-1.0..0.9);
            (Geometry::new(z).unwrap(), SubstrateContrast::new(f).unwrap())
        })
        .collect()
}

/// Dipole anchor, block equivalence, translation theorem and eigenvalue
/// cross-checks.
pub fn run_oracle_suite(seed: u64) -> Result<Vec<OracleReport>> {
    let mut reports = Vec::new();

    for (z, f) in [(1.0, -1.0), (0.1, -0.5), (30.0, -0.8)] {
        let g = Geometry::new(z)?;
        let c = SubstrateContrast::new(f)?;
        let exact = exact_dipole_modes(&g, &c);
        let m0 = brute_force_block(&g, &c, 0, 1)?;
        let m1 = brute_force_block(&g, &c, 1, 1)?;
        reports.push(OracleReport::new(format!("dipole_anchor_b2_z{z}_fc{f}"), exact[2], m0[0][0], 0.0));
        reports.push(OracleReport::new(format!("dipole_anchor_b1_z{z}_fc{f}"), exact[0], m1[0][0], 0.0));
    }

    for (k, (g, c)) in random_draws(seed, 20).into_iter().enumerate() {
        for m in 0..=4i64 {
            let want = brute_force_block(&g, &c, m, 4)?;
            let got = production_block(&g, &c, m, 4)?;
            reports.push(OracleReport::from_matrices(
                format!("block_draw{k}_m{m}_z{:.4}_fc{:.3}", g.gap_over_radius(), c.value()),
                &want,
                &got,
                1e-10,
            ));
        }
    }

    for (lp, m) in [(1usize, 0usize), (2, 1), (3, 2), (4, 0)] {
        let (direct, series) = axial_translation_pair(lp, m, 2.5, [0.3, 0.0, 0.4], 80);
        reports.push(OracleReport::new(format!("translation_l{lp}_m{m}"), direct, series, 1e-10));
    }

    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    for k in 0..5 {
        let z = rng.gen_range(0.05..1.0);
        let f = rng.gen_range(-1.0..-0.3);
        let g = Geometry::new(z)?;
        let c = SubstrateContrast::new(f)?;
        let dense = production_block(&g, &c, 0, 32)?;
        let want = power_iteration_extreme_eigenvalue(&dense)?;
        let block = build_block(&g, &c, 0, 32)?;
        let got = *solve_block(&block, SolveMode::ValuesOnly)?.eigenvalues.last().unwrap();
        reports.push(OracleReport::new(format!("power_iteration_{k}_z{z:.3}"), want, got, 1e-9));
    }
    Ok(reports)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn geom(z: f64) -> Geometry {
        Geometry::new(z).unwrap()
    }

    #[test]
    fn dipole_blocks_are_the_exact_closed_form() {
        for (z, f) in [(1.0, -1.0), (0.25, -0.5), (7.0, 0.3)] {
            let g = geom(z);
            let c = SubstrateContrast::new(f).unwrap();
            let exact = exact_dipole_modes(&g, &c);
            assert_eq!(brute_force_block(&g, &c, 0, 1).unwrap()[0][0], exact[2]);
            assert_eq!(brute_force_block(&g, &c, 1, 1).unwrap()[0][0], exact[0]);
            assert_eq!(brute_force_block(&g, &c, -1, 1).unwrap()[0][0], exact[1]);
        }
        let pc = SubstrateContrast::perfect_conductor();
        assert_eq!(exact_dipole_modes(&geom(1.0), &pc), [0.328125, 0.328125, 31.0 / 96.0]);
    }

    #[test]
    fn oracle_rejects_out_of_range() {
        let pc = SubstrateContrast::perfect_conductor();
        assert!(brute_force_block(&geom(1.0), &pc, 3, 2).is_err());
        assert!(brute_force_block(&geom(1.0), &pc, 0, 7).is_err());
    }

    #[test]
    fn oracle_matches_production_blocks() {
        for (g, c) in random_draws(7, 20) {
            for m in 0..=4i64 {
                let want = brute_force_block(&g, &c, m, 4).unwrap();
                let got = production_block(&g, &c, m, 4).unwrap();
                let r = OracleReport::from_matrices("draw", &want, &got, 1e-10);
                assert!(r.passed, "{r}");
            }
        }
    }

    #[test]
    fn translation_series_matches_direct_harmonic() {
        for lp in 0..5usize {
            for m in 0..=lp {
                for p in [[0.3, 0.0, 0.4], [-0.5, 0.0, -0.2], [0.0, 0.0, 0.6]] {
                    let (direct, series) = axial_translation_pair(lp, m, 2.0, p, 120);
                    let scale = direct.abs().max(1e-3);
                    assert!((direct - series).abs() < 1e-10 * scale, "l'={lp} m={m}: {direct} vs {series}");
                }
            }
        }
    }

    #[test]
    fn legendre_low_orders() {
        let t = 0.3f64;
        let s = (1.0 - t * t).sqrt();
        assert!((associated_legendre(2, 0, t) - 0.5 * (3.0 * t * t - 1.0)).abs() < 1e-15);
        assert!((associated_legendre(1, 1, t) - s).abs() < 1e-15);
        assert!((associated_legendre(2, 2, t) - 3.0 * s * s).abs() < 1e-15);
        assert!((associated_legendre(3, 1, t) - 1.5 * s * (5.0 * t * t - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_on_diagonal_returns_max() {
        let d = vec![vec![0.2, 0.0, 0.0], vec![0.0, 0.45, 0.0], vec![0.0, 0.0, 0.3]];
        let v = power_iteration_extreme_eigenvalue(&d).unwrap();
        assert!((v - 0.45).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_two_by_two() {
        let (a, b, c) = (0.3f64, 0.05f64, 0.4f64);
        let m = vec![vec![a, b], vec![b, c]];
        let want = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert!((power_iteration_extreme_eigenvalue(&m).unwrap() - want).abs() < 1e-10);
        let jac = symmetric_eigenvalues_small(&m);
        assert!((jac[1] - want).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let m = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]];
        let settings = PowerIteration { max_iter: 3, tol: 1e-16 };
        assert!(matches!(
            power_iteration_with(&m, settings),
            Err(Error::PowerIteration { iterations: 3, .. })
        ));
    }

    #[test]
    fn power_iteration_agrees_with_production_on_random_blocks() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let z = rng.gen_range(0.05..1.0);
            let f = rng.gen_range(-1.0..-0.3);
            let m = rng.gen_range(0..=3i64);
            let g = geom(z);
            let c = SubstrateContrast::new(f).unwrap();
            let dense = production_block(&g, &c, m, 32).unwrap();
            let want = power_iteration_extreme_eigenvalue(&dense).unwrap();
            let block = build_block(&g, &c, m, 32).unwrap();
            let got = *solve_block(&block, SolveMode::ValuesOnly).unwrap().eigenvalues.last().unwrap();
            assert!((want - got).abs() < 1e-10, "z={z} f={f} m={m}: {want} vs {got}");
        }
    }

    #[test]
    fn jacobi_matches_production_eigensolver() {
        let pc = SubstrateContrast::perfect_conductor();
        let dense = production_block(&geom(0.2), &pc, 1, 12).unwrap();
        let want = symmetric_eigenvalues_small(&dense);
        let block = build_block(&geom(0.2), &pc, 1, 12).unwrap();
        let got = solve_block(&block, SolveMode::ValuesOnly).unwrap().eigenvalues;
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn suite_passes_and_reports_format() {
        let reports = run_oracle_suite(1).unwrap();
        assert!(reports.len() > 100);
        for r in &reports {
            assert!(r.passed, "{r}");
            assert_eq!(r.passed, r.rel_error <= r.tolerance);
        }
        let line = reports[0].to_string();
        assert!(line.starts_with("ORACLE case=dipole_anchor"));
        assert!(line.ends_with("PASS"));
    }
}
