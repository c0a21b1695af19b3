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

//! Non-retarded Casimir interaction between a sphere and a planar substrate,
//! computed from the spectral representation of the coupled multipole modes.
//!
//! The geometry enters only through a dimensionless symmetric matrix H whose
//! eigenvalues n_s fix the proper modes ω_s = ω_p sqrt(n_s) of a Drude sphere.
//! The interaction energy is the shift of the zero-point energy relative to
//! the isolated sphere, and the force follows from its derivative in z/a.

pub mod coupling;
pub mod error;
pub mod model;
pub mod oracle;
pub mod reference;
pub mod spectral;

pub use coupling::{build_block, isolated_sphere_eigenvalue, log_coupling_coefficient, CouplingBlock};
pub use error::{Error, Result};
pub use model::{
    mode_frequency_of_eigenvalue, spectral_variable_of_frequency, DrudeSphere, ForceMethod, Geometry,
    SolverConfig, SubstrateContrast,
};
pub use reference::{
    dipole_energy_force, dipole_modes, proximity_force, quadrupole_energy_force, ComparisonCurve,
    CurveLabel, PlateEnergyModel,
};
pub use spectral::{
    casimir_force, converge, evaluate, local_exponent, solve_spectrum, zero_point_energy,
    EnergyResult, Evaluation, ForceResult, ModeSpectrum, SolveMode, Truncation,
};
