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

//! Per-azimuthal-order blocks of the dimensionless multipolar matrix H.
//!
//! The image of a sphere multipole Q_{l'm} in the substrate sits at distance
//! r = 2(z + a) below the sphere centre with strength (-1)^{l'+m} f_c. Its
//! potential re-expanded about the sphere centre (axial translation of a
//! solid harmonic) couples back into order l with the factor
//! (l + l')!/[(l + m)!(l' - m)!]·r^{-(l+l'+1)}. After scaling by the sphere
//! polarizabilities and symmetrizing, the block entries are
//!
//! ```text
//! H_{ll'} = n_l δ_{ll'}
//!         + f_c (-1)^{l+l'} sqrt(n_l n_l') (l+l')! / sqrt((l+m)!(l-m)!(l'+m)!(l'-m)!) · x^{l+l'+1}
//! ```
//!
//! with n_l = l/(2l+1) and x = a/r. At l = l' = 1 this reduces to the three
//! image-dipole modes (1/3)(1 + b f_c x³), b ∈ {2, 1, 1}.

use std::sync::OnceLock;

use faer::Mat;

use crate::error::{Error, Result};
use crate::model::{Geometry, SubstrateContrast};

const LN_FACTORIAL_TABLE_LEN: usize = 8193;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Neumaier-compensated running sum of ln k.
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE_LEN);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        table.push(0.0);
        for k in 1..LN_FACTORIAL_TABLE_LEN {
            let term = (k as f64).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        table
    })
}

/// ln(n!). Tabulated up to 8192, Stirling series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    if n < table.len() {
        return table[n];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Depolarization eigenvalue n_{l0} = l/(2l+1) of an isolated sphere.
pub fn isolated_sphere_eigenvalue(l: usize) -> Result<f64> {
    if l < 1 {
        return Err(Error::InvalidIndex("multipole order l must be at least 1".into()));
    }
    Ok(l as f64 / (2 * l + 1) as f64)
}

/// n_{l0} - n_{k0}, evaluated without cancellation.
pub(crate) fn isolated_eigenvalue_gap(l: usize, k: usize) -> f64 {
    (l as f64 - k as f64) / ((2 * l + 1) as f64 * (2 * k + 1) as f64)
}

/// Geometry-independent part of a coupling entry, kept as a logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCoefficient {
    pub log_magnitude: f64,
    /// ±1.
    pub sign: f64,
}

impl LogCoefficient {
    /// The H entry contribution f_c·sign·exp(log_magnitude + (l+l'+1) ln x).
    pub fn entry(&self, f_c: f64, power: usize, ln_x: f64) -> f64 {
        f_c * self.sign * (self.log_magnitude + power as f64 * ln_x).exp()
    }
}

fn check_indices(l: usize, lp: usize, m: usize) -> Result<()> {
    let l_min = m.max(1);
    if l < l_min || lp < l_min {
        return Err(Error::InvalidIndex(format!(
            "need l, l' >= max(1, |m|) = {l_min}, got l={l}, l'={lp}"
        )));
    }
    Ok(())
}

fn coefficient_unchecked(l: usize, lp: usize, m: usize) -> LogCoefficient {
    let (l, lp) = (l.min(lp), l.max(lp));
    let n_l = l as f64 / (2 * l + 1) as f64;
    let n_lp = lp as f64 / (2 * lp + 1) as f64;
    let log_magnitude = 0.5 * (n_l.ln() + n_lp.ln()) + ln_factorial(l + lp)
        - 0.5
            * (ln_factorial(l + m) + ln_factorial(l - m) + ln_factorial(lp + m) + ln_factorial(lp - m));
    let sign = if (l + lp) % 2 == 0 { 1.0 } else { -1.0 };
    LogCoefficient { log_magnitude, sign }
}

/// Coupling coefficient between orders `l` and `lp` at azimuthal order `m`.
///
/// Symmetric under l ↔ l' and m ↔ -m by construction.
pub fn log_coupling_coefficient(l: usize, lp: usize, m: i64) -> Result<LogCoefficient> {
    let m = m.unsigned_abs() as usize;
    check_indices(l, lp, m)?;
    Ok(coefficient_unchecked(l, lp, m))
}

/// Symmetric block H^{(m)} for l, l' in [max(1, m), l_max].
#[derive(Debug, Clone)]
pub struct CouplingBlock {
    m: usize,
    l_min: usize,
    l_max: usize,
    x: f64,
    gap_over_radius: f64,
    entries: Mat<f64>,
    coupling: Mat<f64>,
}

impl CouplingBlock {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l_min(&self) -> usize {
        self.l_min
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn dim(&self) -> usize {
        self.l_max - self.l_min + 1
    }

    pub fn image_ratio(&self) -> f64 {
        self.x
    }

    pub fn gap_over_radius(&self) -> f64 {
        self.gap_over_radius
    }

    /// Full matrix H^{(m)}.
    pub fn entries(&self) -> &Mat<f64> {
        &self.entries
    }

    /// H^{(m)} - diag(n_{l0}), i.e. the substrate coupling alone.
    pub fn coupling(&self) -> &Mat<f64> {
        &self.coupling
    }

    pub fn entry(&self, l: usize, lp: usize) -> f64 {
        self.entries[(l - self.l_min, lp - self.l_min)]
    }

    /// Multipole order of row `i`.
    pub fn order_of_row(&self, i: usize) -> usize {
        self.l_min + i
    }

    /// dH/d(z/a). Every coupling entry carries x^{l+l'+1} and
    /// dx/d(z/a) = -x/(1 + z/a).
    pub fn derivative(&self) -> Mat<f64> {
        let scale = -1.0 / (1.0 + self.gap_over_radius);
        let l_min = self.l_min;
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            let power = (2 * l_min + i + j + 1) as f64;
            scale * power * self.coupling[(i, j)]
        })
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                best = best.max(self.entries[(i, j)].abs());
            }
        }
        best
    }

    /// Largest |H - diag(n_{l0})| over all entries.
    pub fn max_coupling(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                best = best.max(self.coupling[(i, j)].abs());
            }
        }
        best
    }

    /// Rows of `l,l_prime,value`, upper triangle included, for regression snapshots.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,l_prime,value\n");
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out.push_str(&format!(
                    "{},{},{:e}\n",
                    self.l_min + i,
                    self.l_min + j,
                    self.entries[(i, j)]
                ));
            }
        }
        out
    }
}

/// Assemble H^{(m)} at the given separation. Negative `m` gives the same block as `|m|`.
pub fn build_block(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    m: i64,
    l_max: usize,
) -> Result<CouplingBlock> {
    let m = m.unsigned_abs() as usize;
    if l_max < 1 || m > l_max {
        return Err(Error::InvalidIndex(format!(
            "need 0 <= |m| <= l_max and l_max >= 1, got m={m}, l_max={l_max}"
        )));
    }
    let x = geom.image_ratio();
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidGeometry(format!("non-finite image ratio {x}")));
    }
    let ln_x = x.ln();
    let f_c = contrast.value();
    let l_min = m.max(1);
    let dim = l_max - l_min + 1;

    let mut coupling = Mat::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let lp = l_min + j;
        for i in 0..=j {
            let l = l_min + i;
            let value = coefficient_unchecked(l, lp, m).entry(f_c, l + lp + 1, ln_x);
            coupling[(i, j)] = value;
            coupling[(j, i)] = value;
        }
    }
    let mut entries = coupling.clone();
    for i in 0..dim {
        let l = l_min + i;
        entries[(i, i)] += l as f64 / (2 * l + 1) as f64;
    }
    Ok(CouplingBlock {
        m,
        l_min,
        l_max,
        x,
        gap_over_radius: geom.gap_over_radius(),
        entries,
        coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(z: f64) -> Geometry {
        Geometry::new(z).unwrap()
    }

    #[test]
    fn isolated_eigenvalues() {
        assert_eq!(isolated_sphere_eigenvalue(1).unwrap(), 1.0 / 3.0);
        assert_eq!(isolated_sphere_eigenvalue(2).unwrap(), 2.0 / 5.0);
        assert!(isolated_sphere_eigenvalue(0).is_err());
        let mut prev = 0.0;
        for l in [1, 10, 100, 1000, 100_000] {
            let n = isolated_sphere_eigenvalue(l).unwrap();
            assert!(n < 0.5 && n > prev);
            prev = n;
        }
        assert!(0.5 - isolated_sphere_eigenvalue(100_000).unwrap() < 1e-5);
    }

    #[test]
    fn ln_factorial_matches_direct_products() {
        let mut direct = 0.0f64;
        for n in 1..=170usize {
            direct += (n as f64).ln();
            assert!((ln_factorial(n) - direct).abs() <= 1e-12 * direct.max(1.0));
        }
        // Table and Stirling branch meet smoothly.
        let n = LN_FACTORIAL_TABLE_LEN;
        let across = ln_factorial(n) - ln_factorial(n - 1);
        assert!((across - (n as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn dipole_coefficients_reproduce_image_dipole_modes() {
        // (1,1) entries are f_c·b·x³/3 with b = 2 for m = 0 and b = 1 for |m| = 1.
        let c0 = log_coupling_coefficient(1, 1, 0).unwrap();
        assert_eq!(c0.sign, 1.0);
        assert!((c0.log_magnitude.exp() - 2.0 / 3.0).abs() < 1e-15);
        for m in [-1, 1] {
            let c1 = log_coupling_coefficient(1, 1, m).unwrap();
            assert!((c1.log_magnitude.exp() - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coefficient_symmetry_and_index_contract() {
        for m in -4i64..=4 {
            let lo = m.unsigned_abs().max(1) as usize;
            for l in lo..12 {
                for lp in lo..12 {
                    assert_eq!(
                        log_coupling_coefficient(l, lp, m).unwrap(),
                        log_coupling_coefficient(lp, l, m).unwrap()
                    );
                }
            }
        }
        assert!(log_coupling_coefficient(1, 2, 2).is_err());
        assert!(log_coupling_coefficient(0, 1, 0).is_err());
    }

    #[test]
    fn single_entry_blocks_at_unit_gap() {
        let pc = SubstrateContrast::perfect_conductor();
        let b0 = build_block(&geom(1.0), &pc, 0, 1).unwrap();
        assert!((b0.entry(1, 1) - 0.322_916_666_666_666_7).abs() < 1e-15);
        let b1 = build_block(&geom(1.0), &pc, 1, 1).unwrap();
        assert!((b1.entry(1, 1) - 0.328_125).abs() < 1e-15);
    }

    #[test]
    fn block_rejects_bad_indices() {
        let pc = SubstrateContrast::perfect_conductor();
        assert!(build_block(&geom(1.0), &pc, 3, 2).is_err());
        assert!(build_block(&geom(1.0), &pc, 0, 0).is_err());
    }

    #[test]
    fn block_is_exactly_symmetric_and_m_parity_invariant() {
        let fc = SubstrateContrast::new(-0.7).unwrap();
        for m in 0..5i64 {
            let b = build_block(&geom(0.3), &fc, m, 20).unwrap();
            let bm = build_block(&geom(0.3), &fc, -m, 20).unwrap();
            let n = b.dim();
            assert_eq!(n, 20 - (m.max(1) as usize) + 1);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(b.entries()[(i, j)].to_bits(), b.entries()[(j, i)].to_bits());
                    assert_eq!(b.entries()[(i, j)].to_bits(), bm.entries()[(i, j)].to_bits());
                }
            }
        }
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let pc = SubstrateContrast::perfect_conductor();
        let b = build_block(&geom(1e12), &pc, 0, 8).unwrap();
        for i in 0..b.dim() {
            let l = b.order_of_row(i);
            assert!((b.entry(l, l) - l as f64 / (2 * l + 1) as f64).abs() < 1e-30);
        }
        assert!(b.max_off_diagonal() < 1e-40);
    }

    #[test]
    fn decoupling_is_monotone_in_separation() {
        let pc = SubstrateContrast::perfect_conductor();
        let mut prev = f64::INFINITY;
        for z in [0.1, 0.5, 1.0, 3.0, 10.0, 30.0, 100.0] {
            let mut worst = 0.0f64;
            for m in 0..=10 {
                worst = worst.max(build_block(&geom(z), &pc, m, 10).unwrap().max_coupling());
            }
            assert!(worst < prev, "coupling not decreasing at z/a={z}");
            prev = worst;
        }
        let off = (0..=10)
            .map(|m| build_block(&geom(100.0), &pc, m, 10).unwrap().max_off_diagonal())
            .fold(0.0, f64::max);
        assert!(off < 1e-6, "largest off-diagonal {off}");
    }

    #[test]
    fn no_overflow_at_large_orders() {
        let pc = SubstrateContrast::perfect_conductor();
        for m in [0i64, 1, 40, 1000, 2000] {
            let b = build_block(&geom(0.01), &pc, m, 2000).unwrap();
            let n = b.dim();
            for j in 0..n {
                for i in 0..n {
                    assert!(b.entries()[(i, j)].is_finite());
                }
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let fc = SubstrateContrast::new(-0.6).unwrap();
        let z = 0.8;
        let h = 1e-6;
        let b = build_block(&geom(z), &fc, 1, 6).unwrap();
        let bp = build_block(&geom(z + h), &fc, 1, 6).unwrap();
        let bm = build_block(&geom(z - h), &fc, 1, 6).unwrap();
        let d = b.derivative();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let fd = (bp.coupling()[(i, j)] - bm.coupling()[(i, j)]) / (2.0 * h);
                assert!((fd - d[(i, j)]).abs() <= 1e-7 * d[(i, j)].abs().max(1e-12));
            }
        }
    }

    #[test]
    fn csv_dump_lists_every_entry() {
        let pc = SubstrateContrast::perfect_conductor();
        let b = build_block(&geom(1.0), &pc, 1, 3).unwrap();
        let csv = b.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "l,l_prime,value");
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines[1].starts_with("1,1,"));
    }
}
