//! Sweep configuration, readable from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::CutoffPolicy;
use crate::model::{build_mode_grid, Kelvin, MaterialParams, QubitParams};

/// A grid of (mode count, temperature) points and everything needed to
/// evaluate them. Every field has a default, so a JSON config only lists
/// what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub mode_counts: Vec<usize>,
    pub temperatures: Vec<Kelvin>,
    pub qubit: QubitParams,
    pub k_min: f64,
    pub k_max: f64,
    pub material: MaterialParams,
    /// [start, end] in ps; one refocusing cycle 2π/(cΔk) per mode count
    /// when absent.
    pub time_window: Option<[f64; 2]>,
    /// Points of the coarse time scan.
    pub time_points: usize,
    /// Width of the final bracket around the maximum, ps.
    pub refine_tolerance: f64,
    pub policy: CutoffPolicy,
    /// Also evaluate each maximum on a basis with every mode one level
    /// deeper and record the result.
    pub convergence_probe: bool,
    pub threads: usize,
    /// Upper bound on memory held by concurrently evaluated points.
    pub memory_budget_mb: usize,
    pub output: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            mode_counts: (3..=8).collect(),
            temperatures: vec![Kelvin(6.0), Kelvin(9.0), Kelvin(12.0)],
            qubit: QubitParams::equal_superposition(),
            k_min: 0.001,
            k_max: 0.9,
            material: MaterialParams::default(),
            time_window: None,
            time_points: 400,
            refine_tolerance: 2e-3,
            policy: CutoffPolicy::default(),
            convergence_probe: false,
            threads: 1,
            memory_budget_mb: 3072,
            output: None,
        }
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_counts.is_empty() || self.temperatures.is_empty() {
            return Err(Error::Config("mode_counts and temperatures must be non-empty".into()));
        }
        if let Some(&n) = self.mode_counts.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("mode counts must be at least 2, got {n}")));
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(t.0 >= 0.0 && t.0.is_finite())) {
            return Err(Error::Config(format!("temperatures must be finite and >= 0, got {}", t.0)));
        }
        if self.time_points < 16 {
            return Err(Error::Config(format!("time_points must be at least 16, got {}", self.time_points)));
        }
        if !(self.refine_tolerance > 0.0) {
            return Err(Error::Config("refine_tolerance must be positive".into()));
        }
        if let Some([a, b]) = self.time_window {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::Config(format!("time_window must satisfy 0 <= start < end, got [{a}, {b}]")));
            }
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.policy.validate().map_err(config_error)?;
        self.qubit.validate().map_err(config_error)?;
        self.material.validate().map_err(config_error)?;
        build_mode_grid(self.k_min, self.k_max, 2, &self.material).map_err(config_error)?;
        Ok(())
    }

    /// Time window used for `n` modes.
    pub fn window(&self, n: usize) -> Result<(f64, f64)> {
        match self.time_window {
            Some([a, b]) => Ok((a, b)),
            None => {
                let grid = build_mode_grid(self.k_min, self.k_max, n, &self.material)?;
                Ok((0.0, grid.cycle_time(&self.material)))
            }
        }
    }
}
