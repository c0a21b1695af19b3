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

//! Geometry, materials and solver settings.
//!
//! Everything downstream works in reduced units: energies in ħω_p, forces in
//! ħω_p/a, and the geometry enters only through the gap-to-radius ratio z/a.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sphere of radius `a` whose closest point sits a gap `z` above the substrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    gap_over_radius: f64,
}

impl Geometry {
    pub fn new(gap_over_radius: f64) -> Result<Self> {
        if !(gap_over_radius.is_finite() && gap_over_radius > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "z/a must be positive and finite, got {gap_over_radius}"
            )));
        }
        Ok(Self { gap_over_radius })
    }

    pub fn gap_over_radius(&self) -> f64 {
        self.gap_over_radius
    }

    /// a / r with r = 2(z + a) the distance from the sphere centre to its image.
    /// Always in (0, 1/2).
    pub fn image_ratio(&self) -> f64 {
        0.5 / (1.0 + self.gap_over_radius)
    }

    /// Same geometry with z/a scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.gap_over_radius * factor)
    }
}

/// Image strength f_c = (1 - ε_p)/(1 + ε_p) of the substrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstrateContrast(f64);

impl SubstrateContrast {
    pub fn new(f_c: f64) -> Result<Self> {
        if !(f_c.is_finite() && (-1.0..1.0).contains(&f_c)) {
            return Err(Error::InvalidContrast(f_c));
        }
        Ok(Self(f_c))
    }

    pub fn perfect_conductor() -> Self {
        Self(-1.0)
    }

    /// Contrast of a non-dispersive substrate with relative permittivity `eps`.
    pub fn from_permittivity(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidContrast(f64::NAN));
        }
        Self::new((1.0 - eps) / (1.0 + eps))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Drude sphere, ε_s(ω) = 1 - ω_p²/[ω(ω + i/τ)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeSphere {
    plasma_frequency: f64,
    damping_ratio: f64,
}

impl DrudeSphere {
    /// Damping above which the lossless energy sum is no longer trustworthy.
    pub const LOSSLESS_DAMPING_LIMIT: f64 = 0.01;

    /// `damping_ratio` is 1/(τ ω_p).
    pub fn new(plasma_frequency: f64, damping_ratio: f64) -> Result<Self> {
        if !(plasma_frequency.is_finite() && plasma_frequency > 0.0) {
            return Err(Error::InvalidSphere(format!(
                "plasma frequency must be positive, got {plasma_frequency}"
            )));
        }
        if !(damping_ratio.is_finite() && damping_ratio >= 0.0) {
            return Err(Error::InvalidSphere(format!(
                "damping ratio must be nonnegative, got {damping_ratio}"
            )));
        }
        if damping_ratio > Self::LOSSLESS_DAMPING_LIMIT {
            log::warn!(
                "damping ratio {damping_ratio} exceeds {}; the lossless energy sum is only approximate",
                Self::LOSSLESS_DAMPING_LIMIT
            );
        }
        Ok(Self {
            plasma_frequency,
            damping_ratio,
        })
    }

    pub fn lossless() -> Self {
        Self {
            plasma_frequency: 1.0,
            damping_ratio: 0.0,
        }
    }

    pub fn plasma_frequency(&self) -> f64 {
        self.plasma_frequency
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping_ratio
    }

    /// 1/τ in the same units as ω_p.
    pub fn relaxation_rate(&self) -> f64 {
        self.damping_ratio * self.plasma_frequency
    }

    pub fn is_effectively_lossless(&self) -> bool {
        self.damping_ratio <= Self::LOSSLESS_DAMPING_LIMIT
    }
}

/// u(ω) = [1 - ε_s(ω)]⁻¹ = ω(ω + i/τ)/ω_p².
pub fn spectral_variable_of_frequency(sphere: &DrudeSphere, omega: Complex64) -> Complex64 {
    let gamma = sphere.relaxation_rate();
    omega * (omega + Complex64::new(0.0, gamma)) / (sphere.plasma_frequency * sphere.plasma_frequency)
}

/// Proper frequency ω_s = -i/2τ + sqrt((i/2τ)² + ω_p² n_s) of a mode with
/// eigenvalue `n_s`.
pub fn mode_frequency_of_eigenvalue(sphere: &DrudeSphere, n_s: f64) -> Result<Complex64> {
    if !(n_s > 0.0 && n_s < 1.0) {
        return Err(Error::UnphysicalEigenvalue { m: 0, value: n_s });
    }
    let wp = sphere.plasma_frequency;
    if sphere.damping_ratio == 0.0 {
        return Ok(Complex64::new(wp * n_s.sqrt(), 0.0));
    }
    let half_gamma = Complex64::new(0.0, 0.5 * sphere.relaxation_rate());
    Ok(-half_gamma + (half_gamma * half_gamma + wp * wp * n_s).sqrt())
}

/// How the force is obtained from the mode spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForceMethod {
    HellmannFeynman,
    FiniteDifference,
    Both,
}

impl ForceMethod {
    pub fn needs_hellmann_feynman(self) -> bool {
        matches!(self, ForceMethod::HellmannFeynman | ForceMethod::Both)
    }

    pub fn needs_finite_difference(self) -> bool {
        matches!(self, ForceMethod::FiniteDifference | ForceMethod::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub l_max: usize,
    pub m_max: usize,
    pub energy_rel_tol: f64,
    pub adaptive_truncation: bool,
    pub force_method: ForceMethod,
    pub fd_step_rel: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            l_max: 2000,
            m_max: 2000,
            energy_rel_tol: 1e-8,
            adaptive_truncation: true,
            force_method: ForceMethod::HellmannFeynman,
            fd_step_rel: 1e-4,
        }
    }
}

impl SolverConfig {
    /// Fixed truncation at `l_max` with every azimuthal block kept.
    pub fn fixed(l_max: usize) -> Self {
        Self {
            l_max,
            m_max: l_max,
            adaptive_truncation: false,
            ..Self::default()
        }
    }

    /// Adaptive truncation capped at `l_max`.
    pub fn adaptive(l_max: usize, energy_rel_tol: f64) -> Self {
        Self {
            l_max,
            m_max: l_max,
            energy_rel_tol,
            adaptive_truncation: true,
            ..Self::default()
        }
    }

    pub fn with_force_method(mut self, method: ForceMethod) -> Self {
        self.force_method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::InvalidConfig("l_max must be at least 1".into()));
        }
        if self.m_max < 1 || self.m_max > self.l_max {
            return Err(Error::InvalidConfig(format!(
                "m_max must lie in [1, l_max={}], got {}",
                self.l_max, self.m_max
            )));
        }
        if !(self.energy_rel_tol.is_finite() && self.energy_rel_tol > 0.0) {
            return Err(Error::InvalidConfig("energy_rel_tol must be positive".into()));
        }
        if !(self.fd_step_rel.is_finite() && self.fd_step_rel > 0.0 && self.fd_step_rel < 0.5) {
            return Err(Error::InvalidConfig("fd_step_rel must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}
