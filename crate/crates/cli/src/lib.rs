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

//! Command-line front end: configuration, sweeps, convergence reports and
//! CSV/SVG output for the sphere-substrate Casimir solver.

pub mod config;
pub mod error;
pub mod svg;
pub mod sweep;
pub mod table;

pub use config::{Curve, Format, Output, Overrides, RunConfig, Spacing};
pub use error::CliError;
pub use sweep::{run_convergence_report, run_sweep, ConvergenceReport, SweepOutcome};
pub use table::{SweepRow, SweepTable};
