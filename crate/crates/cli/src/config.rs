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

//! Run configuration: TOML file, named presets and command-line overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use casimir_core::{ForceMethod, SolverConfig, SubstrateContrast};
use serde::Deserialize;

use crate::error::CliError;
use crate::table::format_float;

/// Placeholder sapphire permittivity in the non-retarded window.
pub const SAPPHIRE_PERMITTIVITY: f64 = 3.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Curve {
    Full,
    Dipole,
    Quadrupole,
    Proximity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Output {
    Energy,
    Force,
    Beta,
    Modes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityModel {
    Vdw,
    Ideal,
}

macro_rules! keyword_enum {
    ($ty:ident, $what:literal, { $($name:literal => $variant:ident),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = CliError;
            fn from_str(s: &str) -> Result<Self, CliError> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)+
                    other => Err(CliError::Config(format!(concat!("unknown ", $what, " '{}'"), other))),
                }
            }
        }
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name,)+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Spacing, "spacing", { "log" => Log, "linear" => Linear });
keyword_enum!(Curve, "curve", {
    "full" => Full, "dipole" => Dipole, "quadrupole" => Quadrupole, "proximity" => Proximity,
});
keyword_enum!(Output, "output", { "energy" => Energy, "force" => Force, "beta" => Beta, "modes" => Modes });
keyword_enum!(Format, "format", { "csv" => Csv, "svg" => Svg });
keyword_enum!(ProximityModel, "proximity model", { "vdw" => Vdw, "ideal" => Ideal });

pub fn parse_force_method(s: &str) -> Result<ForceMethod, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "hf" => Ok(ForceMethod::HellmannFeynman),
        "fd" => Ok(ForceMethod::FiniteDifference),
        "both" => Ok(ForceMethod::Both),
        other => Err(CliError::Config(format!("unknown force method '{other}'"))),
    }
}

pub fn force_method_name(m: ForceMethod) -> &'static str {
    match m {
        ForceMethod::HellmannFeynman => "hf",
        ForceMethod::FiniteDifference => "fd",
        ForceMethod::Both => "both",
    }
}

pub fn parse_list<T: FromStr<Err = CliError> + Ord>(s: &str) -> Result<BTreeSet<T>, CliError> {
    let set: BTreeSet<T> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(T::from_str)
        .collect::<Result<_, _>>()?;
    if set.is_empty() {
        return Err(CliError::Config(format!("empty list '{s}'")));
    }
    Ok(set)
}

/// Substrate by preset name.
pub fn substrate_preset(name: &str) -> Result<SubstrateContrast, CliError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "perfect_conductor" => Ok(SubstrateContrast::perfect_conductor()),
        "sapphire" => Ok(SubstrateContrast::from_permittivity(SAPPHIRE_PERMITTIVITY)?),
        other => Err(CliError::Config(format!("unknown substrate preset '{other}'"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.z_min.is_finite() && self.z_min > 0.0) {
            return Err(CliError::Config(format!("z_min must be positive, got {}", self.z_min)));
        }
        if !(self.z_max.is_finite() && self.z_min < self.z_max) {
            return Err(CliError::Config(format!(
                "need z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config(format!("points must be at least 2, got {}", self.points)));
        }
        Ok(())
    }

    /// Sweep abscissae, endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.z_min;
                }
                if i == n - 1 {
                    return self.z_max;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Log => (self.z_min.ln() + t * (self.z_max / self.z_min).ln()).exp(),
                    Spacing::Linear => self.z_min + t * (self.z_max - self.z_min),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximitySpec {
    pub model: ProximityModel,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sweep: SweepSpec,
    pub contrast: SubstrateContrast,
    /// Preset name when the contrast came from one.
    pub substrate_name: Option<String>,
    pub solver: SolverConfig,
    pub outputs: BTreeSet<Output>,
    pub curves: BTreeSet<Curve>,
    pub output_dir: PathBuf,
    pub formats: BTreeSet<Format>,
    pub proximity: ProximitySpec,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sweep: SweepSpec {
                z_min: 0.1,
                z_max: 100.0,
                points: 31,
                spacing: Spacing::Log,
            },
            contrast: SubstrateContrast::perfect_conductor(),
            substrate_name: Some("perfect_conductor".into()),
            solver: SolverConfig {
                energy_rel_tol: 1e-8,
                ..SolverConfig::default()
            },
            outputs: [Output::Energy, Output::Force, Output::Beta].into(),
            curves: [Curve::Full, Curve::Dipole].into(),
            output_dir: PathBuf::from("out"),
            formats: [Format::Csv, Format::Svg].into(),
            proximity: ProximitySpec {
                model: ProximityModel::Vdw,
                coefficient: 1.0,
            },
            threads: 1,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    sweep: FileSweep,
    #[serde(default)]
    substrate: FileSubstrate,
    #[serde(default)]
    solver: FileSolver,
    #[serde(default)]
    output: FileOutput,
    #[serde(default)]
    proximity: FileProximity,
    #[serde(default)]
    run: FileRun,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    z_min: Option<f64>,
    z_max: Option<f64>,
    points: Option<usize>,
    spacing: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSubstrate {
    fc: Option<f64>,
    preset: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSolver {
    l_max: Option<usize>,
    m_max: Option<usize>,
    tol: Option<f64>,
    adaptive: Option<bool>,
    force_method: Option<String>,
    fd_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOutput {
    dir: Option<PathBuf>,
    formats: Option<Vec<String>>,
    curves: Option<Vec<String>>,
    outputs: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileProximity {
    model: Option<String>,
    coefficient: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRun {
    threads: Option<usize>,
}

/// Command-line values; `None` leaves the file or default value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub points: Option<usize>,
    pub spacing: Option<String>,
    pub fc: Option<f64>,
    pub substrate: Option<String>,
    pub l_max: Option<usize>,
    pub tol: Option<f64>,
    pub curves: Option<String>,
    pub outputs: Option<String>,
    pub out: Option<PathBuf>,
    pub formats: Option<String>,
    pub force_method: Option<String>,
    pub threads: Option<usize>,
}

fn set_list<T: FromStr<Err = CliError> + Ord>(
    target: &mut BTreeSet<T>,
    items: &[String],
) -> Result<(), CliError> {
    *target = parse_list(&items.join(","))?;
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))?;
        let mut cfg = Self::default();
        let s = &mut cfg.sweep;
        s.z_min = file.sweep.z_min.unwrap_or(s.z_min);
        s.z_max = file.sweep.z_max.unwrap_or(s.z_max);
        s.points = file.sweep.points.unwrap_or(s.points);
        if let Some(sp) = &file.sweep.spacing {
            s.spacing = sp.parse()?;
        }
        match (file.substrate.fc, &file.substrate.preset) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("substrate: give either fc or preset, not both".into()))
            }
            (Some(fc), None) => cfg.set_contrast(fc)?,
            (None, Some(p)) => cfg.set_preset(p)?,
            (None, None) => {}
        }
        let sv = &mut cfg.solver;
        if let Some(l) = file.solver.l_max {
            sv.l_max = l;
            sv.m_max = file.solver.m_max.unwrap_or(l);
        } else if let Some(m) = file.solver.m_max {
            sv.m_max = m;
        }
        sv.energy_rel_tol = file.solver.tol.unwrap_or(sv.energy_rel_tol);
        sv.adaptive_truncation = file.solver.adaptive.unwrap_or(sv.adaptive_truncation);
        sv.fd_step_rel = file.solver.fd_step.unwrap_or(sv.fd_step_rel);
        if let Some(fm) = &file.solver.force_method {
            sv.force_method = parse_force_method(fm)?;
        }
        if let Some(dir) = file.output.dir {
            cfg.output_dir = dir;
        }
        if let Some(v) = &file.output.formats {
            set_list(&mut cfg.formats, v)?;
        }
        if let Some(v) = &file.output.curves {
            set_list(&mut cfg.curves, v)?;
        }
        if let Some(v) = &file.output.outputs {
            set_list(&mut cfg.outputs, v)?;
        }
        if let Some(m) = &file.proximity.model {
            cfg.proximity.model = m.parse()?;
        }
        cfg.proximity.coefficient = file.proximity.coefficient.unwrap_or(cfg.proximity.coefficient);
        cfg.threads = file.run.threads.unwrap_or(cfg.threads);
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn set_contrast(&mut self, fc: f64) -> Result<(), CliError> {
        self.contrast = SubstrateContrast::new(fc)?;
        self.substrate_name = None;
        Ok(())
    }

    fn set_preset(&mut self, name: &str) -> Result<(), CliError> {
        self.contrast = substrate_preset(name)?;
        self.substrate_name = Some(name.trim().to_ascii_lowercase());
        Ok(())
    }

    /// Apply flags on top of the file; flags win.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(v) = o.z_min {
            self.sweep.z_min = v;
        }
        if let Some(v) = o.z_max {
            self.sweep.z_max = v;
        }
        if let Some(v) = o.points {
            self.sweep.points = v;
        }
        if let Some(v) = &o.spacing {
            self.sweep.spacing = v.parse()?;
        }
        match (o.fc, &o.substrate) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("--fc and --substrate are mutually exclusive".into()))
            }
            (Some(fc), None) => self.set_contrast(fc)?,
            (None, Some(name)) => self.set_preset(name)?,
            (None, None) => {}
        }
        if let Some(l) = o.l_max {
            self.solver.l_max = l;
            self.solver.m_max = l;
        }
        if let Some(t) = o.tol {
            self.solver.energy_rel_tol = t;
        }
        if let Some(v) = &o.curves {
            self.curves = parse_list(v)?;
        }
        if let Some(v) = &o.outputs {
            self.outputs = parse_list(v)?;
        }
        if let Some(v) = &o.out {
            self.output_dir = v.clone();
        }
        if let Some(v) = &o.formats {
            self.formats = parse_list(v)?;
        }
        if let Some(v) = &o.force_method {
            self.solver.force_method = parse_force_method(v)?;
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sweep.validate()?;
        self.solver.validate()?;
        if self.threads == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if !(self.proximity.coefficient.is_finite() && self.proximity.coefficient > 0.0) {
            return Err(CliError::Config("proximity coefficient must be positive".into()));
        }
        Ok(())
    }

    /// Lines echoed as '#' comments in every CSV. Thread count is left out
    /// so output bytes do not depend on it.
    pub fn echo(&self) -> Vec<String> {
        let f = format_float;
        let join = |it: Vec<&str>| it.join(",");
        vec![
            format!(
                "sweep z_min={} z_max={} points={} spacing={}",
                f(self.sweep.z_min),
                f(self.sweep.z_max),
                self.sweep.points,
                self.sweep.spacing
            ),
            format!(
                "substrate fc={}{}",
                f(self.contrast.value()),
                self.substrate_name.as_deref().map(|n| format!(" preset={n}")).unwrap_or_default()
            ),
            format!(
                "solver l_max={} m_max={} tol={} adaptive={} force_method={} fd_step={}",
                self.solver.l_max,
                self.solver.m_max,
                f(self.solver.energy_rel_tol),
                self.solver.adaptive_truncation,
                force_method_name(self.solver.force_method),
                f(self.solver.fd_step_rel)
            ),
            format!(
                "output curves={} outputs={}",
                join(self.curves.iter().map(|c| c.as_str()).collect()),
                join(self.outputs.iter().map(|c| c.as_str()).collect())
            ),
            format!(
                "proximity model={} coefficient={}",
                self.proximity.model,
                f(self.proximity.coefficient)
            ),
        ]
    }
}
