//! Run configuration: one TOML file, every key optional, unknown keys
//! rejected, values checked before any computation starts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use mhd_regularity::solver::SolverParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub init: InitConfig,
    pub output: OutputConfig,
    pub diagnostics: DiagnosticsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 32, length: 2.0 * PI }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub nu: f64,
    pub xi: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub dealias_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolverParams::default();
        Self {
            nu: p.nu,
            xi: p.xi,
            dt: p.dt,
            t_end: p.t_end,
            cfl: p.cfl,
            dealias_fraction: p.dealias_fraction,
        }
    }
}

impl SolverConfig {
    pub fn params(&self) -> SolverParams {
        SolverParams {
            nu: self.nu,
            xi: self.xi,
            dt: self.dt,
            t_end: self.t_end,
            cfl: self.cfl,
            dealias_fraction: self.dealias_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    TaylorGreen,
    Random,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub kind: InitKind,
    pub seed: u64,
    pub spectrum_slope: f64,
    /// Snapshot with the six fields `ux uy uz bx by bz`, for `kind = "file"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kind: InitKind::TaylorGreen,
            seed: 1,
            spectrum_slope: -5.0 / 3.0,
            path: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Time series and reports.
    Csv,
    /// Run metadata.
    Json,
    /// Field snapshots.
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub record_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            record_every: 10,
            snapshot_every: None,
            dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Binary],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

/// Per-record diagnostics of `simulate`. Radii are absolute lengths; an
/// empty `r_set` skips the local energy scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub enabled: bool,
    pub gamma: f64,
    pub r_set: Vec<f64>,
    pub center_stride: usize,
    /// Radius about the box center outside which the tail energy is taken.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_radius: Option<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            enabled: true,
            gamma: 1.0,
            r_set: Vec::new(),
            center_stride: 8,
            tail_radius: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let value: toml::Value = text
            .parse::<toml::Table>()
            .map(toml::Value::Table)
            .map_err(|e| CliError::validation(format!("config syntax: {}", e.message())))?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            if path == "." {
                CliError::validation(format!("config: {inner}"))
            } else {
                CliError::validation(format!("config key `{path}`: {inner}"))
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks every value, naming the first offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: String| Err(CliError::validation(format!("config key `{key}`: {why}")));
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                bad(key, format!("must be positive and finite, got {v}"))
            }
        };
        let g = &self.grid;
        if g.n < 4 {
            return bad("grid.n", format!("must be at least 4, got {}", g.n));
        }
        positive("grid.L", g.length)?;
        let s = &self.solver;
        positive("solver.nu", s.nu)?;
        positive("solver.xi", s.xi)?;
        positive("solver.dt", s.dt)?;
        positive("solver.cfl", s.cfl)?;
        if !(s.t_end.is_finite() && s.t_end >= 0.0) {
            return bad("solver.t_end", format!("must be non-negative, got {}", s.t_end));
        }
        if !(s.dealias_fraction > 0.0 && s.dealias_fraction <= 1.0) {
            return bad(
                "solver.dealias_fraction",
                format!("must lie in (0, 1], got {}", s.dealias_fraction),
            );
        }
        if !self.init.spectrum_slope.is_finite() {
            return bad(
                "init.spectrum_slope",
                format!("must be finite, got {}", self.init.spectrum_slope),
            );
        }
        if self.init.kind == InitKind::File && self.init.path.is_none() {
            return bad("init.path", "required when init.kind = \"file\"".into());
        }
        let o = &self.output;
        if o.record_every == 0 {
            return bad("output.record_every", "must be at least 1".into());
        }
        if o.snapshot_every == Some(0) {
            return bad("output.snapshot_every", "must be at least 1".into());
        }
        if o.dir.as_os_str().is_empty() {
            return bad("output.dir", "must not be empty".into());
        }
        if o.formats.is_empty() {
            return bad("output.formats", "must list at least one of csv, json, binary".into());
        }
        let d = &self.diagnostics;
        positive("diagnostics.gamma", d.gamma)?;
        if d.center_stride == 0 {
            return bad("diagnostics.center_stride", "must be at least 1".into());
        }
        let half = 0.5 * g.length;
        if let Some(r) = d.r_set.iter().find(|r| !(r.is_finite() && **r > 0.0 && **r <= half)) {
            return bad("diagnostics.r_set", format!("radius {r} outside (0, L/2]"));
        }
        if let Some(r) = d.tail_radius {
            if !(r.is_finite() && r >= 0.0) {
                return bad("diagnostics.tail_radius", format!("must be non-negative, got {r}"));
            }
        }
        Ok(())
    }
}
