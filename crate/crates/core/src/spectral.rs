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

//! Mode spectrum, zero-point energy, force and convergence control.
//!
//! Each azimuthal block H^{(m)} is eigendecomposed independently; blocks with
//! m > 0 stand for both ±m and carry weight 2. The reduced energy is
//!
//! ```text
//! Ẽ = ½ Σ_m g_m Σ_s [sqrt(n_s) - sqrt(n_{l(s)0})]
//! ```
//!
//! where eigenvalues are paired with isolated-sphere references by rank.
//! When eigenvectors are available the shift n_s - n_{l(s)0} is taken from a
//! Rayleigh quotient of H - n_{l(s)0}·I, which keeps full relative precision
//! when the coupling is weak (large z/a).

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use rayon::prelude::*;

use crate::coupling::{build_block, isolated_eigenvalue_gap, CouplingBlock};
use crate::error::{Error, Result};
use crate::model::{ForceMethod, Geometry, SolverConfig, SubstrateContrast};

/// How much of the eigendecomposition a block solve keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Eigenvalues only; shifts are plain differences n_s - n_{l0}.
    ValuesOnly,
    /// Eigenvectors are used for refined shifts and Hellmann-Feynman slopes, then dropped.
    Refined,
    /// Like `Refined`, and the eigenvectors are kept for Green's-function queries.
    WithVectors,
}

impl SolveMode {
    fn uses_vectors(self) -> bool {
        !matches!(self, SolveMode::ValuesOnly)
    }
}

/// Eigenvalues below this gap trigger a near-degeneracy warning for HF forces.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Solved block H^{(m)}.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub m: usize,
    pub degeneracy: usize,
    pub l_min: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// n_s - n_{l0} for the rank-paired reference l = l_min + s.
    pub shifts: Vec<f64>,
    /// dn_s/d(z/a), present unless solved in `ValuesOnly` mode.
    pub slopes: Option<Vec<f64>>,
    eigenvectors: Option<Mat<f64>>,
}

fn solver_error(block: &CouplingBlock, err: impl std::fmt::Debug) -> Error {
    Error::Eigensolver {
        m: block.m(),
        l_max: block.l_max(),
        message: format!("{err:?}"),
    }
}

fn column_dot(a: &Mat<f64>, b: &Mat<f64>, j: usize) -> f64 {
    let (ca, cb) = (a.col(j), b.col(j));
    (0..a.nrows()).map(|i| ca[i] * cb[i]).sum()
}

/// Eigendecompose one coupling block.
pub fn solve_block(block: &CouplingBlock, mode: SolveMode) -> Result<BlockSpectrum> {
    let n = block.dim();
    let l_min = block.l_min();
    let degeneracy = if block.m() == 0 { 1 } else { 2 };

    if !mode.uses_vectors() {
        let mut eigenvalues = block
            .entries()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| solver_error(block, e))?;
        eigenvalues.sort_by(f64::total_cmp);
        let shifts = eigenvalues
            .iter()
            .enumerate()
            .map(|(s, &v)| {
                let l = l_min + s;
                v - l as f64 / (2 * l + 1) as f64
            })
            .collect();
        return Ok(BlockSpectrum {
            m: block.m(),
            degeneracy,
            l_min,
            eigenvalues,
            shifts,
            slopes: None,
            eigenvectors: None,
        });
    }

    let evd = block
        .entries()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| solver_error(block, e))?;
    let raw = evd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let u = evd.U();
    let vectors = Mat::from_fn(n, n, |i, s| u[(i, order[s])]);
    let eigenvalues: Vec<f64> = order.iter().map(|&k| raw[k]).collect();

    let mut coupled = Mat::<f64>::zeros(n, n);
    matmul(coupled.as_mut(), Accum::Replace, block.coupling(), &vectors, 1.0, Par::Seq);
    let mut moved = Mat::<f64>::zeros(n, n);
    matmul(moved.as_mut(), Accum::Replace, block.derivative(), &vectors, 1.0, Par::Seq);

    let mut shifts = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for s in 0..n {
        let v = vectors.col(s);
        let l_s = l_min + s;
        let mut norm = 0.0;
        let mut diagonal = 0.0;
        for i in 0..n {
            let w = v[i] * v[i];
            norm += w;
            diagonal += isolated_eigenvalue_gap(l_min + i, l_s) * w;
        }
        shifts.push((diagonal + column_dot(&vectors, &coupled, s)) / norm);
        slopes.push(column_dot(&vectors, &moved, s) / norm);
    }

    Ok(BlockSpectrum {
        m: block.m(),
        degeneracy,
        l_min,
        eigenvalues,
        shifts,
        slopes: Some(slopes),
        eigenvectors: matches!(mode, SolveMode::WithVectors).then_some(vectors),
    })
}

impl BlockSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Isolated-sphere reference n_{l0} paired with rank `s`.
    pub fn reference(&self, s: usize) -> f64 {
        let l = self.l_min + s;
        l as f64 / (2 * l + 1) as f64
    }

    /// Eigenvalue of rank `s` rebuilt from the reference and the refined shift.
    pub fn mode(&self, s: usize) -> f64 {
        self.reference(s) + self.shifts[s]
    }

    pub fn eigenvectors(&self) -> Option<&Mat<f64>> {
        self.eigenvectors.as_ref()
    }

    /// sqrt(n_s) - sqrt(n_{l0}) for rank `s`, without cancellation.
    pub fn mode_energy(&self, s: usize) -> f64 {
        let reference = self.reference(s);
        let shift = self.shifts[s];
        shift / ((reference + shift).sqrt() + reference.sqrt())
    }

    /// This block's share of Ẽ, degeneracy included.
    pub fn energy_contribution(&self) -> f64 {
        let sum: f64 = (0..self.len()).map(|s| self.mode_energy(s)).sum();
        0.5 * self.degeneracy as f64 * sum
    }

    /// This block's share of F̃a = -dẼ/d(z/a), degeneracy included.
    pub fn force_contribution(&self) -> Option<f64> {
        let slopes = self.slopes.as_ref()?;
        let sum: f64 = slopes
            .iter()
            .enumerate()
            .map(|(s, slope)| slope / (4.0 * self.mode(s).sqrt()))
            .sum();
        Some(-(self.degeneracy as f64) * sum)
    }

    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_physical(&self) -> Result<()> {
        for s in 0..self.len() {
            let n = self.mode(s);
            if !(n > 0.0 && n < 1.0) {
                return Err(Error::UnphysicalEigenvalue { m: self.m, value: n });
            }
        }
        Ok(())
    }

    /// G_ij(u) = Σ_s U_is U_js / (u - n_s), with i, j row positions (l = l_min + i).
    ///
    /// Needs a block solved in `WithVectors` mode.
    pub fn green_function_element(&self, u: f64, i: usize, j: usize, pole_eps: f64) -> Result<f64> {
        let vectors = self.eigenvectors.as_ref().ok_or_else(|| {
            Error::InvalidConfig("Green's function needs eigenvectors (SolveMode::WithVectors)".into())
        })?;
        if i >= self.len() || j >= self.len() {
            return Err(Error::InvalidIndex(format!(
                "row ({i}, {j}) outside block of dimension {}",
                self.len()
            )));
        }
        let mut sum = 0.0;
        for (s, &pole) in self.eigenvalues.iter().enumerate() {
            let distance = u - pole;
            if distance.abs() < pole_eps {
                return Err(Error::PoleProximity {
                    u,
                    pole,
                    distance: distance.abs(),
                });
            }
            sum += vectors[(i, s)] * vectors[(j, s)] / distance;
        }
        Ok(sum)
    }
}

/// Eigenvalues of every solved block at one separation.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    /// Ordered by m.
    pub per_m: Vec<BlockSpectrum>,
    pub gap_over_radius: f64,
    pub l_max_used: usize,
    pub m_max_used: usize,
}

impl ModeSpectrum {
    pub fn check_physical(&self) -> Result<()> {
        self.per_m.iter().try_for_each(BlockSpectrum::check_physical)
    }

    /// Every mode with its multiplicity, n_s repeated g_m times, sorted.
    pub fn all_modes(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for block in &self.per_m {
            for s in 0..block.len() {
                for _ in 0..block.degeneracy {
                    out.push(block.mode(s));
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn total_modes(&self) -> usize {
        self.per_m.iter().map(|b| b.degeneracy * b.len()).sum()
    }

    /// F̃a by Hellmann-Feynman, if slopes were computed.
    pub fn hellmann_feynman_force(&self) -> Option<f64> {
        let mut total = 0.0;
        for block in &self.per_m {
            total += block.force_contribution()?;
        }
        Some(total)
    }
}

/// Truncation of the multipole expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub l_max: usize,
    pub m_max: usize,
}

fn solve_blocks(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    l_max: usize,
    ms: std::ops::RangeInclusive<usize>,
    mode: SolveMode,
) -> Result<Vec<BlockSpectrum>> {
    ms.into_par_iter()
        .map(|m| {
            let block = build_block(geom, contrast, m as i64, l_max)?;
            solve_block(&block, mode)
        })
        .collect()
}

/// Solve every block m = 0..=m_max at fixed l_max.
pub fn solve_spectrum_with(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    truncation: Truncation,
    mode: SolveMode,
) -> Result<ModeSpectrum> {
    if truncation.l_max < 1 || truncation.m_max > truncation.l_max {
        return Err(Error::InvalidConfig(format!(
            "invalid truncation l_max={}, m_max={}",
            truncation.l_max, truncation.m_max
        )));
    }
    let per_m = solve_blocks(geom, contrast, truncation.l_max, 0..=truncation.m_max, mode)?;
    Ok(ModeSpectrum {
        per_m,
        gap_over_radius: geom.gap_over_radius(),
        l_max_used: truncation.l_max,
        m_max_used: truncation.m_max,
    })
}

/// Mode spectrum at the configuration's fixed truncation, eigenvectors kept.
pub fn solve_spectrum(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    cfg: &SolverConfig,
) -> Result<ModeSpectrum> {
    cfg.validate()?;
    solve_spectrum_with(
        geom,
        contrast,
        Truncation {
            l_max: cfg.l_max,
            m_max: cfg.m_max,
        },
        SolveMode::WithVectors,
    )
}

/// Solve blocks in increasing m, stopping at the first m ≥ 1 whose energy
/// contribution is below `drop_tol`·|Ẽ| so far. That block is not kept.
///
/// Blocks are solved in batches of the pool width; the kept set depends only
/// on the inputs, never on the number of workers.
pub fn solve_spectrum_truncated(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    l_max: usize,
    m_cap: usize,
    drop_tol: f64,
    mode: SolveMode,
) -> Result<ModeSpectrum> {
    if l_max < 1 {
        return Err(Error::InvalidConfig("l_max must be at least 1".into()));
    }
    let m_cap = m_cap.min(l_max);
    let batch = rayon::current_num_threads().max(1);
    let mut kept: Vec<BlockSpectrum> = Vec::new();
    let mut energy: f64 = 0.0;
    let mut next = 0usize;
    'outer: while next <= m_cap {
        let last = (next + batch - 1).min(m_cap);
        let solved = solve_blocks(geom, contrast, l_max, next..=last, mode)?;
        for block in solved {
            let contribution = block.energy_contribution();
            if block.m >= 1 && contribution.abs() < drop_tol * energy.abs() {
                break 'outer;
            }
            energy += contribution;
            kept.push(block);
        }
        next = last + 1;
    }
    let m_max_used = kept.last().map_or(0, |b| b.m);
    Ok(ModeSpectrum {
        per_m: kept,
        gap_over_radius: geom.gap_over_radius(),
        l_max_used: l_max,
        m_max_used,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyResult {
    /// Ẽ = ℰ/ħω_p.
    pub energy_reduced: f64,
    /// Partial sums over modes whose reference order is ≤ l, for l = 1..=l_max.
    pub per_l_partials: Vec<f64>,
    pub converged: bool,
    pub est_truncation_error: f64,
}

/// Tail estimate from the last per-l increments: geometric extrapolation when
/// they shrink steadily, otherwise the last increment itself.
fn tail_estimate(partials: &[f64]) -> f64 {
    let k = partials.len();
    if k < 2 {
        return partials.last().map_or(0.0, |v| v.abs());
    }
    let last = (partials[k - 1] - partials[k - 2]).abs();
    if k < 3 {
        return last;
    }
    let before = (partials[k - 2] - partials[k - 3]).abs();
    if before > 0.0 && last < before {
        let ratio = last / before;
        last * ratio / (1.0 - ratio)
    } else {
        last
    }
}

/// Zero-point energy shift of a solved spectrum.
pub fn zero_point_energy(spectrum: &ModeSpectrum, cfg: &SolverConfig) -> Result<EnergyResult> {
    spectrum.check_physical()?;
    let l_max = spectrum.l_max_used;
    let mut per_l = vec![0.0; l_max + 1];
    for block in &spectrum.per_m {
        let weight = 0.5 * block.degeneracy as f64;
        for s in 0..block.len() {
            per_l[block.l_min + s] += weight * block.mode_energy(s);
        }
    }
    let mut partials = Vec::with_capacity(l_max);
    let mut running = 0.0;
    for value in per_l.iter().skip(1) {
        running += value;
        partials.push(running);
    }
    // Block-ordered sum; bitwise identical to what the truncation logic saw.
    let energy: f64 = spectrum.per_m.iter().map(BlockSpectrum::energy_contribution).sum();
    if let Some(last) = partials.last_mut() {
        *last = energy;
    }
    let est = tail_estimate(&partials);
    Ok(EnergyResult {
        energy_reduced: energy,
        converged: est <= cfg.energy_rel_tol * energy.abs() || energy == 0.0,
        est_truncation_error: est,
        per_l_partials: partials,
    })
}

/// One rung of the l_max doubling ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderStep {
    pub l_max: usize,
    pub m_max_used: usize,
    pub energy_reduced: f64,
    /// |Ẽ(l_max) - Ẽ(previous rung)| / |Ẽ(l_max)|; absent on the first rung.
    pub rel_change: Option<f64>,
    /// Seconds since the ladder started.
    pub elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct Ladder {
    pub steps: Vec<LadderStep>,
    pub converged: bool,
    pub spectrum: ModeSpectrum,
    pub energy: EnergyResult,
}

/// l_max values visited by the doubling ladder: 4, 8, 16, … up to `cap`.
pub fn ladder_orders(cap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut l = 4usize.min(cap / 2).max(1);
    while l < cap {
        out.push(l);
        l *= 2;
    }
    out.push(cap);
    out
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    let diff = (cur - prev).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / cur.abs()
    }
}

/// Run the doubling ladder, calling `on_step` after every rung.
pub fn convergence_ladder(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    cfg: &SolverConfig,
    mode: SolveMode,
    mut on_step: impl FnMut(&LadderStep),
) -> Result<Ladder> {
    cfg.validate()?;
    if cfg.l_max < 2 {
        return Err(Error::InvalidConfig(
            "adaptive truncation needs an l_max cap of at least 2".into(),
        ));
    }
    let drop_tol = cfg.energy_rel_tol / 10.0;
    let start = std::time::Instant::now();
    let mut steps: Vec<LadderStep> = Vec::new();
    let mut last: Option<(ModeSpectrum, EnergyResult)> = None;
    let mut converged = false;
    for l_max in ladder_orders(cfg.l_max) {
        let spectrum =
            solve_spectrum_truncated(geom, contrast, l_max, cfg.m_max, drop_tol, mode)?;
        let energy = zero_point_energy(&spectrum, cfg)?;
        let rel_change = steps
            .last()
            .map(|prev| relative_change(prev.energy_reduced, energy.energy_reduced));
        let step = LadderStep {
            l_max,
            m_max_used: spectrum.m_max_used,
            energy_reduced: energy.energy_reduced,
            rel_change,
            elapsed: start.elapsed().as_secs_f64(),
        };
        on_step(&step);
        steps.push(step);
        last = Some((spectrum, energy));
        if rel_change.is_some_and(|r| r < cfg.energy_rel_tol) {
            converged = true;
            break;
        }
    }
    let (spectrum, mut energy) = last.expect("ladder has at least one rung");
    energy.converged = converged;
    if let Some(r) = steps.last().and_then(|s| s.rel_change) {
        energy.est_truncation_error = r * energy.energy_reduced.abs();
    }
    Ok(Ladder {
        steps,
        converged,
        spectrum,
        energy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    pub energy: EnergyResult,
    pub l_max_used: usize,
    pub m_max_used: usize,
}

/// Double l_max until the energy settles to `energy_rel_tol`, capped at `cfg.l_max`.
pub fn converge(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    cfg: &SolverConfig,
) -> Result<Converged> {
    let ladder = convergence_ladder(geom, contrast, cfg, SolveMode::Refined, |_| {})?;
    if !ladder.converged {
        let k = ladder.steps.len();
        let previous = if k >= 2 {
            ladder.steps[k - 2].energy_reduced
        } else {
            f64::NAN
        };
        return Err(Error::NonConvergence {
            l_max: cfg.l_max,
            previous,
            last: ladder.steps[k - 1].energy_reduced,
        });
    }
    Ok(Converged {
        energy: ladder.energy,
        l_max_used: ladder.spectrum.l_max_used,
        m_max_used: ladder.spectrum.m_max_used,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceResult {
    /// F̃a = F·a/ħω_p.
    pub force_reduced: f64,
    pub method: ForceMethod,
    /// |F_HF - F_FD| / max(|F_HF|, tiny), when both were computed.
    pub hf_fd_discrepancy: Option<f64>,
    /// Blocks whose smallest eigenvalue gap is below [`DEGENERACY_GAP`].
    pub near_degenerate_blocks: Vec<usize>,
}

/// Energy and force at one separation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: EnergyResult,
    pub force: ForceResult,
    pub truncation: Truncation,
    pub converged: bool,
}

/// Central difference -dẼ/d(z/a) at a fixed truncation.
pub fn finite_difference_force(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    truncation: Truncation,
    step_rel: f64,
) -> Result<f64> {
    let z = geom.gap_over_radius();
    let h = step_rel * z;
    let energy_at = |g: Geometry| -> Result<f64> {
        let spectrum = solve_spectrum_with(&g, contrast, truncation, SolveMode::Refined)?;
        spectrum.check_physical()?;
        Ok(spectrum.per_m.iter().map(BlockSpectrum::energy_contribution).sum())
    };
    let plus = energy_at(Geometry::new(z + h)?)?;
    let minus = energy_at(Geometry::new(z - h)?)?;
    Ok(-(plus - minus) / (2.0 * h))
}

fn force_from_spectrum(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    spectrum: &ModeSpectrum,
    cfg: &SolverConfig,
) -> Result<ForceResult> {
    let truncation = Truncation {
        l_max: spectrum.l_max_used,
        m_max: spectrum.m_max_used,
    };
    let near_degenerate_blocks: Vec<usize> = spectrum
        .per_m
        .iter()
        .filter(|b| b.min_gap() < DEGENERACY_GAP)
        .map(|b| b.m)
        .collect();
    let hf = if cfg.force_method.needs_hellmann_feynman() {
        if !near_degenerate_blocks.is_empty() {
            log::warn!(
                "near-degenerate eigenvalues in blocks {near_degenerate_blocks:?} at z/a={}",
                geom.gap_over_radius()
            );
        }
        Some(spectrum.hellmann_feynman_force().ok_or_else(|| {
            Error::InvalidConfig("Hellmann-Feynman force needs eigenvector slopes".into())
        })?)
    } else {
        None
    };
    let fd = if cfg.force_method.needs_finite_difference() {
        Some(finite_difference_force(geom, contrast, truncation, cfg.fd_step_rel)?)
    } else {
        None
    };
    let (force_reduced, hf_fd_discrepancy) = match (hf, fd) {
        (Some(h), Some(f)) => (h, Some((h - f).abs() / h.abs().max(f64::MIN_POSITIVE))),
        (Some(h), None) => (h, None),
        (None, Some(f)) => (f, None),
        (None, None) => unreachable!("every force method computes at least one route"),
    };
    Ok(ForceResult {
        force_reduced,
        method: cfg.force_method,
        hf_fd_discrepancy,
        near_degenerate_blocks,
    })
}

/// Energy and force, adaptively truncated when the configuration asks for it.
///
/// A ladder that hits the cap without converging is not an error here; the
/// result carries `converged = false`.
pub fn evaluate(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    cfg: &SolverConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    let (spectrum, energy, converged) = if cfg.adaptive_truncation {
        let ladder = convergence_ladder(geom, contrast, cfg, SolveMode::Refined, |_| {})?;
        (ladder.spectrum, ladder.energy, ladder.converged)
    } else {
        let spectrum = solve_spectrum_with(
            geom,
            contrast,
            Truncation {
                l_max: cfg.l_max,
                m_max: cfg.m_max,
            },
            SolveMode::Refined,
        )?;
        let energy = zero_point_energy(&spectrum, cfg)?;
        let converged = energy.converged;
        (spectrum, energy, converged)
    };
    let force = force_from_spectrum(geom, contrast, &spectrum, cfg)?;
    Ok(Evaluation {
        energy,
        force,
        truncation: Truncation {
            l_max: spectrum.l_max_used,
            m_max: spectrum.m_max_used,
        },
        converged,
    })
}

/// F̃a by the configured method.
pub fn casimir_force(
    geom: &Geometry,
    contrast: &SubstrateContrast,
    cfg: &SolverConfig,
) -> Result<ForceResult> {
    Ok(evaluate(geom, contrast, cfg)?.force)
}

/// Local power-law exponent β = -d ln|F| / d ln(z/a) at interior sweep points.
pub fn local_exponent(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if points.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "local exponent needs at least 3 points, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a.0 > 0.0 && b.0 > a.0) {
            return Err(Error::InvalidConfig(
                "sweep abscissae must be positive and strictly increasing".into(),
            ));
        }
        if a.1 == 0.0 || b.1 == 0.0 || a.1.signum() != b.1.signum() {
            return Err(Error::SignChange {
                left: a.0,
                right: b.0,
            });
        }
    }
    Ok(points
        .windows(3)
        .map(|w| {
            let (lo, mid, hi) = (w[0], w[1], w[2]);
            let beta = -((hi.1.abs()).ln() - (lo.1.abs()).ln()) / (hi.0.ln() - lo.0.ln());
            (mid.0, beta)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn geom(z: f64) -> Geometry {
        Geometry::new(z).unwrap()
    }

    fn pc() -> SubstrateContrast {
        SubstrateContrast::perfect_conductor()
    }

    fn fixed(l_max: usize, mode: SolveMode, z: f64) -> ModeSpectrum {
        solve_spectrum_with(
            &geom(z),
            &pc(),
            Truncation {
                l_max,
                m_max: l_max,
            },
            mode,
        )
        .unwrap()
    }

    #[test]
    fn dipole_spectrum_at_unit_gap() {
        let sp = fixed(1, SolveMode::Refined, 1.0);
        assert_eq!(sp.per_m.len(), 2);
        let modes = sp.all_modes();
        assert_eq!(modes.len(), 3);
        assert!((modes[0] - 0.322_916_666_666_666_7).abs() < 1e-15);
        assert!((modes[1] - 0.328_125).abs() < 1e-15);
        assert!((modes[2] - 0.328_125).abs() < 1e-15);
    }

    #[test]
    fn block_sizes_match_truncation() {
        let sp = fixed(6, SolveMode::ValuesOnly, 0.5);
        for b in &sp.per_m {
            assert_eq!(b.len(), 6 - b.m.max(1) + 1);
            assert!(b.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(sp.total_modes(), (1..=6).map(|l| 2 * l + 1).sum::<usize>());
    }

    #[test]
    fn decoupled_limit_reassembles_isolated_multiplicities() {
        let sp = fixed(5, SolveMode::Refined, 1e9);
        let modes = sp.all_modes();
        let mut k = 0;
        for l in 1..=5usize {
            let n = l as f64 / (2 * l + 1) as f64;
            for _ in 0..(2 * l + 1) {
                assert!((modes[k] - n).abs() < 1e-20);
                k += 1;
            }
        }
    }

    #[test]
    fn quadrupole_blocks_match_oracle_eigenvalues() {
        // l_max = 2 at z/a = 1: 2x2 (m=0), 2x2 (m=1), 1x1 (m=2) blocks.
        let sp = fixed(2, SolveMode::Refined, 1.0);
        for b in &sp.per_m {
            let dense = oracle::brute_force_block(&geom(1.0), &pc(), b.m as i64, 2).unwrap();
            let expected = oracle::symmetric_eigenvalues_small(&dense);
            for (got, want) in b.eigenvalues.iter().zip(&expected) {
                assert!((got - want).abs() < 1e-14, "m={} got {got} want {want}", b.m);
            }
            for s in 0..b.len() {
                assert!((b.mode(s) - expected[s]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn refined_and_plain_shifts_agree() {
        let z = 0.4;
        let plain = fixed(12, SolveMode::ValuesOnly, z);
        let refined = fixed(12, SolveMode::Refined, z);
        for (a, b) in plain.per_m.iter().zip(&refined.per_m) {
            for s in 0..a.len() {
                assert!((a.shifts[s] - b.shifts[s]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dipole_energy_at_unit_gap() {
        // ½[(sqrt(31/96) - sqrt(1/3)) + 2(sqrt(21/64) - sqrt(1/3))], worked by hand.
        let sp = fixed(1, SolveMode::Refined, 1.0);
        let e = zero_point_energy(&sp, &SolverConfig::fixed(1)).unwrap();
        let third = (1.0f64 / 3.0).sqrt();
        let expected =
            0.5 * (((31.0f64 / 96.0).sqrt() - third) + 2.0 * ((21.0f64 / 64.0).sqrt() - third));
        assert!((e.energy_reduced - expected).abs() < 1e-15);
        assert!((e.energy_reduced - (-0.009_074_656_561_086)).abs() < 1e-14);
        assert_eq!(e.per_l_partials.len(), 1);
        assert_eq!(*e.per_l_partials.last().unwrap(), e.energy_reduced);
    }

    #[test]
    fn energy_vanishes_at_infinite_separation() {
        let sp = fixed(6, SolveMode::Refined, 1e12);
        let e = zero_point_energy(&sp, &SolverConfig::fixed(6)).unwrap();
        assert!(e.energy_reduced.abs() < 1e-35);
        assert!(e.est_truncation_error >= 0.0);
    }

    #[test]
    fn transparent_substrate_gives_zero_energy() {
        let sp = solve_spectrum_with(
            &geom(0.2),
            &SubstrateContrast::new(0.0).unwrap(),
            Truncation { l_max: 6, m_max: 6 },
            SolveMode::Refined,
        )
        .unwrap();
        let e = zero_point_energy(&sp, &SolverConfig::fixed(6)).unwrap();
        assert_eq!(e.energy_reduced, 0.0);
        assert!(e.converged);
    }

    #[test]
    fn energy_partials_end_at_total() {
        let sp = fixed(10, SolveMode::Refined, 0.5);
        let e = zero_point_energy(&sp, &SolverConfig::fixed(10)).unwrap();
        assert_eq!(e.per_l_partials.len(), 10);
        assert_eq!(*e.per_l_partials.last().unwrap(), e.energy_reduced);
        assert!(e.est_truncation_error >= 0.0);
    }

    #[test]
    fn mode_continuity_at_large_separation() {
        // Largest shift is the m = 0 dipole, (2/3)|f_c|x³ to leading order.
        let z = 100.0;
        let sp = fixed(10, SolveMode::Refined, z);
        let x = geom(z).image_ratio();
        let worst = sp
            .per_m
            .iter()
            .flat_map(|b| b.shifts.iter().copied())
            .fold(0.0f64, |a, s| a.max(s.abs()));
        let leading = 2.0 / 3.0 * x.powi(3);
        assert!((worst - leading).abs() < 1e-3 * leading, "worst {worst} vs {leading}");
        let higher = sp
            .per_m
            .iter()
            .flat_map(|b| b.shifts.iter().skip(1).copied())
            .fold(0.0f64, |a, s| a.max(s.abs()));
        assert!(higher < 1e-8);
    }

    #[test]
    fn large_gap_energy_follows_cube_of_center_distance() {
        let fit = |zs: &[f64], e: &dyn Fn(f64) -> f64| -> f64 {
            let pts: Vec<(f64, f64)> = zs.iter().map(|&z| (z.ln(), e(z).abs().ln())).collect();
            least_squares_slope(&pts)
        };
        let energy = |z: f64| {
            let sp = fixed(6, SolveMode::Refined, z);
            zero_point_energy(&sp, &SolverConfig::fixed(6)).unwrap().energy_reduced
        };
        let far: Vec<f64> = log_grid(500.0, 5000.0, 12);
        let slope = fit(&far, &energy);
        assert!((slope + 3.0).abs() < 0.02, "slope {slope}");
        // Against the centre-to-image distance the exponent is 3 already at z/a ~ 50.
        let pts: Vec<(f64, f64)> = log_grid(50.0, 500.0, 12)
            .into_iter()
            .map(|z| ((1.0 + z).ln(), energy(z).abs().ln()))
            .collect();
        let slope = least_squares_slope(&pts);
        assert!((slope + 3.0).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn hellmann_feynman_matches_analytic_dipole_derivative() {
        for &z in &[0.1, 1.0, 5.0, 80.0] {
            for &f in &[-1.0, -0.5] {
                let fc = SubstrateContrast::new(f).unwrap();
                let sp = solve_spectrum_with(
                    &geom(z),
                    &fc,
                    Truncation { l_max: 1, m_max: 1 },
                    SolveMode::Refined,
                )
                .unwrap();
                let hf = sp.hellmann_feynman_force().unwrap();
                // Hand derivative of ½Σ_b sqrt((1 + b f x³)/3) with dx/dz = -2x².
                let x = geom(z).image_ratio();
                let expected: f64 = [1.0, 1.0, 2.0]
                    .iter()
                    .map(|b| {
                        let n = (1.0 + b * f * x.powi(3)) / 3.0;
                        let dn = b * f * x.powi(2) * (-2.0 * x * x) * 3.0 / 3.0;
                        -0.5 * dn / (2.0 * n.sqrt())
                    })
                    .sum();
                assert!((hf - expected).abs() < 1e-10 * expected.abs(), "z={z} hf={hf} {expected}");
            }
        }
    }

    #[test]
    fn force_vanishes_from_below_far_away() {
        let cfg = SolverConfig::fixed(4);
        let mut prev = f64::NEG_INFINITY;
        for z in [10.0, 100.0, 1000.0, 1e4] {
            let f = casimir_force(&geom(z), &pc(), &cfg).unwrap().force_reduced;
            assert!(f < 0.0 && f > prev);
            prev = f;
        }
        assert!(prev > -1e-12);
    }

    #[test]
    fn both_methods_report_discrepancy() {
        let cfg = SolverConfig::fixed(8).with_force_method(ForceMethod::Both);
        let r = casimir_force(&geom(0.7), &pc(), &cfg).unwrap();
        let d = r.hf_fd_discrepancy.unwrap();
        assert!(d < 1e-6, "discrepancy {d}");
        let fd_only = SolverConfig::fixed(8).with_force_method(ForceMethod::FiniteDifference);
        let f = casimir_force(&geom(0.7), &pc(), &fd_only).unwrap();
        assert!(f.hf_fd_discrepancy.is_none());
        assert!((f.force_reduced - r.force_reduced).abs() < 1e-6 * r.force_reduced.abs());
    }

    #[test]
    fn green_function_scalar_block() {
        let b = build_block(&geom(1.0), &pc(), 1, 1).unwrap();
        let s = solve_block(&b, SolveMode::WithVectors).unwrap();
        let n = s.eigenvalues[0];
        for u in [0.0, 0.2, 0.5, 2.0] {
            let g = s.green_function_element(u, 0, 0, 1e-12).unwrap();
            assert!((g - 1.0 / (u - n)).abs() < 1e-14 * g.abs());
        }
    }

    #[test]
    fn green_function_far_from_poles_and_near_them() {
        let b = build_block(&geom(0.5), &pc(), 0, 6).unwrap();
        let s = solve_block(&b, SolveMode::WithVectors).unwrap();
        let u = 1e6;
        for i in 0..s.len() {
            for j in 0..s.len() {
                let g = s.green_function_element(u, i, j, 1e-12).unwrap();
                let want = if i == j { 1.0 / u } else { 0.0 };
                assert!((g - want).abs() < 1e-6 / u);
            }
        }
        let pole = s.eigenvalues[2];
        assert!(matches!(
            s.green_function_element(pole, 0, 0, 1e-9),
            Err(Error::PoleProximity { .. })
        ));
        let below = s.green_function_element(pole - 1e-7, 1, 1, 1e-12).unwrap();
        let above = s.green_function_element(pole + 1e-7, 1, 1, 1e-12).unwrap();
        assert!(below < 0.0 && above > 0.0);
        let values_only = solve_block(&b, SolveMode::Refined).unwrap();
        assert!(values_only.green_function_element(0.1, 0, 0, 1e-12).is_err());
    }

    #[test]
    fn pole_count_equals_block_dimension() {
        let b = build_block(&geom(0.5), &pc(), 1, 7).unwrap();
        let s = solve_block(&b, SolveMode::WithVectors).unwrap();
        assert_eq!(count_poles(&s), s.len());
    }

    pub(crate) fn count_poles(s: &BlockSpectrum) -> usize {
        // Tr G has unit residues, so each pole gives one negative-to-positive flip.
        let steps = 200_000;
        let (lo, hi) = (0.0, 0.6);
        let mut count = 0;
        let trace = |u: f64| -> f64 {
            (0..s.len()).map(|i| s.green_function_element(u, i, i, 0.0).unwrap()).sum()
        };
        let mut prev = trace(lo);
        for k in 1..=steps {
            let u = lo + (hi - lo) * k as f64 / steps as f64;
            let g = trace(u);
            if prev < 0.0 && g > 0.0 {
                count += 1;
            }
            prev = g;
        }
        count
    }

    #[test]
    fn local_exponent_of_manufactured_power_law() {
        let pts: Vec<(f64, f64)> = log_grid(0.1, 10.0, 15)
            .into_iter()
            .map(|z| (z, -3.5 * z.powi(-7)))
            .collect();
        let betas = local_exponent(&pts).unwrap();
        assert_eq!(betas.len(), 13);
        for (_, b) in betas {
            assert!((b - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn local_exponent_errors() {
        assert!(local_exponent(&[(1.0, -1.0), (2.0, -0.5)]).is_err());
        assert!(matches!(
            local_exponent(&[(1.0, -1.0), (2.0, 0.5), (3.0, -0.1)]),
            Err(Error::SignChange { .. })
        ));
    }

    #[test]
    fn ladder_orders_double_up_to_cap() {
        assert_eq!(ladder_orders(1500), vec![4, 8, 16, 32, 64, 128, 256, 512, 1024, 1500]);
        assert_eq!(ladder_orders(8), vec![4, 8]);
        assert_eq!(ladder_orders(2), vec![1, 2]);
    }

    #[test]
    fn converge_at_moderate_gap_stops_early() {
        let cfg = SolverConfig::adaptive(1500, 1e-6);
        let c = converge(&geom(10.0), &pc(), &cfg).unwrap();
        assert!(c.l_max_used <= 8, "l_max_used {}", c.l_max_used);
        assert!(c.energy.converged);
    }

    #[test]
    fn converge_at_small_gap_needs_hundreds() {
        let cfg = SolverConfig::adaptive(1500, 1e-8);
        let c = converge(&geom(0.1), &pc(), &cfg).unwrap();
        assert!(c.l_max_used >= 100, "l_max_used {}", c.l_max_used);
        // Regression snapshot of the machine-determined truncation.
        assert_eq!(c.l_max_used, 256);
    }

    #[test]
    fn tolerance_changes_do_not_move_leading_digits() {
        let loose = converge(&geom(0.3), &pc(), &SolverConfig::adaptive(1500, 1e-3)).unwrap();
        let tight = converge(&geom(0.3), &pc(), &SolverConfig::adaptive(1500, 1e-8)).unwrap();
        let sig3 = |v: f64| {
            let scale = 10f64.powi(2 - v.abs().log10().floor() as i32);
            (v * scale).round()
        };
        assert_eq!(sig3(loose.energy.energy_reduced), sig3(tight.energy.energy_reduced));
    }

    #[test]
    fn converge_reports_failure_at_cap() {
        let cfg = SolverConfig::adaptive(16, 1e-10);
        match converge(&geom(0.05), &pc(), &cfg) {
            Err(Error::NonConvergence { l_max, previous, last }) => {
                assert_eq!(l_max, 16);
                assert!(previous.is_finite() && last < previous);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn truncated_solve_drops_high_m_blocks() {
        let sp =
            solve_spectrum_truncated(&geom(5.0), &pc(), 12, 12, 1e-10, SolveMode::Refined).unwrap();
        assert!(sp.m_max_used < 12);
        assert_eq!(sp.per_m.len(), sp.m_max_used + 1);
    }

    pub(crate) fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
            .collect()
    }

    pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn attractive_energy_is_negative_and_monotone(z in 0.05f64..50.0, f in -1.0f64..-0.05) {
                let fc = SubstrateContrast::new(f).unwrap();
                let t = Truncation { l_max: 24, m_max: 24 };
                let cfg = SolverConfig::fixed(24);
                let near = zero_point_energy(&solve_spectrum_with(&geom(z), &fc, t, SolveMode::Refined).unwrap(), &cfg).unwrap();
                let far = zero_point_energy(&solve_spectrum_with(&geom(z * 1.05), &fc, t, SolveMode::Refined).unwrap(), &cfg).unwrap();
                prop_assert!(near.energy_reduced < 0.0);
                prop_assert!(far.energy_reduced < 0.0);
                prop_assert!(near.energy_reduced.abs() > far.energy_reduced.abs());
            }

            #[test]
            fn eigenvalues_stay_physical(z in 0.01f64..10.0, f in -1.0f64..0.99, m in 0i64..6) {
                let fc = SubstrateContrast::new(f).unwrap();
                let b = build_block(&geom(z), &fc, m, 40).unwrap();
                let s = solve_block(&b, SolveMode::ValuesOnly).unwrap();
                prop_assert!(s.check_physical().is_ok());
            }
        }
    }
}
