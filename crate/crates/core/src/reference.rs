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

//! Comparison models: image dipoles in closed form, the quadrupolar
//! truncation, and the proximity-theorem force.

use crate::error::{Error, Result};
use crate::model::{Geometry, SolverConfig, SubstrateContrast};
use crate::spectral::{solve_spectrum_with, zero_point_energy, SolveMode, Truncation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveLabel {
    Dipole,
    Quadrupole,
    Full,
    ProximityVdw,
    ProximityIdeal,
}

impl CurveLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveLabel::Dipole => "dipole",
            CurveLabel::Quadrupole => "quadrupole",
            CurveLabel::Full => "full",
            CurveLabel::ProximityVdw => "proximity_vdw",
            CurveLabel::ProximityIdeal => "proximity_ideal",
        }
    }
}

/// One labelled curve, rows sorted by z/a.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCurve {
    pub label: CurveLabel,
    rows: Vec<(f64, f64)>,
}

impl ComparisonCurve {
    pub fn new(label: CurveLabel, rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidConfig(format!(
                "curve {} rows must be strictly increasing in z/a",
                label.as_str()
            )));
        }
        Ok(Self { label, rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }
}

/// Image-dipole modes (1/3)(1 + b f_c x³) for b = 1, 1, 2.
pub fn dipole_modes(geom: &Geometry, contrast: &SubstrateContrast) -> [f64; 3] {
    let shifts = dipole_shifts(geom, contrast);
    shifts.map(|d| 1.0 / 3.0 + d)
}

fn dipole_shifts(geom: &Geometry, contrast: &SubstrateContrast) -> [f64; 3] {
    let x3 = geom.image_ratio().powi(3);
    let f = contrast.value();
    [1.0, 1.0, 2.0].map(|b| b * f * x3 / 3.0)
}

/// (Ẽ, F̃a) of the three image-dipole modes.
pub fn dipole_energy_force(geom: &Geometry, contrast: &SubstrateContrast) -> (f64, f64) {
    let one_third = 1.0f64 / 3.0;
    let reference = one_third.sqrt();
    let shifts = dipole_shifts(geom, contrast);
    let mut energy = 0.0;
    let mut force = 0.0;
    // d(shift)/d(z/a) = -3·shift/(1 + z/a).
    let decay = 3.0 / (1.0 + geom.gap_over_radius());
    for d in shifts {
        let root = (one_third + d).sqrt();
        energy += 0.5 * d / (root + reference);
        force += 0.5 * decay * d / (2.0 * root);
    }
    (energy, force)
}

/// (Ẽ, F̃a) with couplings up to l = l' = 2, every m block.
pub fn quadrupole_energy_force(
    geom: &Geometry,
    contrast: &SubstrateContrast,
) -> Result<(f64, f64)> {
    let truncation = Truncation { l_max: 2, m_max: 2 };
    let spectrum = solve_spectrum_with(geom, contrast, truncation, SolveMode::Refined)?;
    let energy = zero_point_energy(&spectrum, &SolverConfig::fixed(2))?;
    let force = spectrum
        .hellmann_feynman_force()
        .expect("refined solve carries slopes");
    Ok((energy.energy_reduced, force))
}

/// Plate-plate energy law fed into the proximity theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateEnergyModel {
    /// 𝒱(z) = -C/z³.
    IdealRetarded,
    /// 𝒱(z) = -C/z².
    VdwNonretarded,
}

/// F_PT = 2πR·𝒱(z) in whatever units `coefficient` carries.
///
/// A scaling comparator only; its normalization is not tied to ħω_p.
pub fn proximity_force(
    radius: f64,
    gap: f64,
    model: PlateEnergyModel,
    coefficient: f64,
) -> Result<f64> {
    if !(coefficient.is_finite() && coefficient > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "proximity coefficient must be positive, got {coefficient}"
        )));
    }
    if !(radius > 0.0 && gap > 0.0) {
        return Err(Error::InvalidGeometry("radius and gap must be positive".into()));
    }
    let plate = match model {
        PlateEnergyModel::IdealRetarded => -coefficient / gap.powi(3),
        PlateEnergyModel::VdwNonretarded => -coefficient / gap.powi(2),
    };
    Ok(2.0 * std::f64::consts::PI * radius * plate)
}

/// Energy whose negative gap derivative is [`proximity_force`].
pub fn proximity_energy(
    radius: f64,
    gap: f64,
    model: PlateEnergyModel,
    coefficient: f64,
) -> Result<f64> {
    let force = proximity_force(radius, gap, model, coefficient)?;
    Ok(match model {
        PlateEnergyModel::IdealRetarded => force * gap / 2.0,
        PlateEnergyModel::VdwNonretarded => force * gap,
    })
}
