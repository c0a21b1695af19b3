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

use casimir_core::Error as CoreError;

/// Failures surfaced by the command-line front end, each with an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Numerical(_) | CliError::Io(_) | CliError::Csv(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGeometry(_)
            | CoreError::InvalidContrast(_)
            | CoreError::InvalidSphere(_)
            | CoreError::InvalidConfig(_)
            | CoreError::InvalidIndex(_) => CliError::Config(e.to_string()),
            CoreError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}
