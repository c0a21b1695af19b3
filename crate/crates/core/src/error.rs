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

use thiserror::Error;

/// Errors raised by the solver and its comparison models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid substrate contrast {0}: must lie in [-1, 1)")]
    InvalidContrast(f64),
    #[error("invalid sphere parameters: {0}")]
    InvalidSphere(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("multipole index out of range: {0}")]
    InvalidIndex(String),
    #[error("unphysical eigenvalue {value} in block m={m} (expected 0 < n < 1)")]
    UnphysicalEigenvalue { m: usize, value: f64 },
    #[error("eigensolver failed on block m={m}, l_max={l_max}: {message}")]
    Eigensolver {
        m: usize,
        l_max: usize,
        message: String,
    },
    #[error("spectral variable u={u} lies within {distance:e} of the pole n={pole}")]
    PoleProximity { u: f64, pole: f64, distance: f64 },
    #[error("force changes sign between z/a={left} and z/a={right}")]
    SignChange { left: f64, right: f64 },
    #[error("energy not converged at l_max={l_max}: last partials {previous} and {last}")]
    NonConvergence {
        l_max: usize,
        previous: f64,
        last: f64,
    },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PowerIteration { iterations: usize, residual: f64 },
    #[error("{0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
