//! Material constants, the discretized phonon environment and its couplings.
//!
//! Internal units: nm, ps, meV and K.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Reduced Planck constant in meV·ps.
pub const HBAR: f64 = 0.658_211_95;
/// Boltzmann constant in meV/K.
pub const K_B: f64 = 0.086_173_33;

const MEV_PER_EV: f64 = 1.0e3;
/// kg/m³ expressed in meV·ps²/nm⁵.
const KG_PER_M3: f64 = 6.241_509_074;
/// m/s expressed in nm/ps.
const M_PER_S: f64 = 1.0e-3;

/// Temperature in kelvin.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Kelvin(pub f64);

impl Kelvin {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// ħω / k_B T for a mode of angular frequency `omega`; infinite at T = 0.
    pub fn energy_ratio(self, omega: f64) -> f64 {
        if self.0 == 0.0 {
            f64::INFINITY
        } else {
            HBAR * omega / (K_B * self.0)
        }
    }
}

impl std::fmt::Display for Kelvin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} K", self.0)
    }
}

/// Bulk and dot parameters. Units follow the usual laboratory conventions
/// (eV, kg/m³, m/s, nm) and are converted internally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    /// σ_e − σ_h in eV.
    pub deformation_potential_difference: f64,
    /// kg/m³.
    pub crystal_density: f64,
    /// m/s.
    pub sound_speed: f64,
    /// nm³. Carried for completeness; it cancels from every observable.
    pub unit_cell_volume: f64,
    /// Width l of the Gaussian single-particle wave function, nm.
    pub dot_width: f64,
    /// Multiplies every effective coupling. 1 reproduces the standard model.
    pub coupling_scale: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            deformation_potential_difference: 9.5,
            crystal_density: 5300.0,
            sound_speed: 5150.0,
            unit_cell_volume: 0.18,
            dot_width: 3.0,
            coupling_scale: 1.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("deformation_potential_difference", self.deformation_potential_difference),
            ("crystal_density", self.crystal_density),
            ("sound_speed", self.sound_speed),
            ("unit_cell_volume", self.unit_cell_volume),
            ("dot_width", self.dot_width),
            ("coupling_scale", self.coupling_scale),
        ];
        for (name, value) in fields {
            ensure_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Sound speed in nm/ps.
    pub fn sound_speed_nm_ps(&self) -> f64 {
        self.sound_speed * M_PER_S
    }

    /// (σ_e − σ_h)² ħ / (2ϱc) in meV²·nm⁴.
    pub fn coupling_prefactor(&self) -> f64 {
        let sigma = self.deformation_potential_difference * MEV_PER_EV;
        let rho = self.crystal_density * KG_PER_M3;
        sigma * sigma * HBAR / (2.0 * rho * self.sound_speed_nm_ps())
    }
}

/// Qubit splitting and initial amplitudes α|0⟩ + β|1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// ε in meV.
    pub energy_splitting: f64,
    pub amplitude_0: Complex64,
    pub amplitude_1: Complex64,
}

impl QubitParams {
    pub fn new(energy_splitting: f64, amplitude_0: Complex64, amplitude_1: Complex64) -> Result<Self> {
        let q = Self { energy_splitting, amplitude_0, amplitude_1 };
        q.validate()?;
        Ok(q)
    }

    /// Equal superposition (|0⟩ + |1⟩)/√2 with zero splitting.
    pub fn equal_superposition() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { energy_splitting: 0.0, amplitude_0: a, amplitude_1: a }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("energy_splitting", self.energy_splitting)?;
        let norm = self.amplitude_0.norm_sqr() + self.amplitude_1.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("|α|² + |β|² = {norm}, expected 1")));
        }
        Ok(())
    }

    /// |α|².
    pub fn weight_0(&self) -> f64 {
        self.amplitude_0.norm_sqr()
    }

    /// |β|².
    pub fn weight_1(&self) -> f64 {
        self.amplitude_1.norm_sqr()
    }

    /// |αβ|.
    pub fn overlap_magnitude(&self) -> f64 {
        self.amplitude_0.norm() * self.amplitude_1.norm()
    }
}

/// One discretized phonon mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononMode {
    /// Wave-vector length, nm⁻¹.
    pub k: f64,
    /// ω = c·k, ps⁻¹.
    pub omega: f64,
    /// Effective coupling g, meV.
    pub coupling: f64,
    /// g / ħω; zero for a zero-frequency mode.
    pub dimensionless_displacement: f64,
}

impl PhononMode {
    pub fn is_decoupled(&self) -> bool {
        self.omega == 0.0 || self.coupling == 0.0
    }

    /// Largest |λ(t)| reached for t in [0, t_max].
    pub fn max_displacement(&self, t_max: f64) -> f64 {
        if self.is_decoupled() {
            return 0.0;
        }
        let half_phase = (0.5 * self.omega * t_max).min(0.5 * PI);
        2.0 * self.dimensionless_displacement * half_phase.sin()
    }
}

/// Evenly spaced grid of wave-vector lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub mode_count: usize,
    pub delta_k: f64,
    pub modes: Vec<PhononMode>,
}

impl ModeGrid {
    /// Period after which all modes rephase when k_min = 0: 2π/(cΔk).
    pub fn cycle_time(&self, material: &MaterialParams) -> f64 {
        2.0 * PI / (material.sound_speed_nm_ps() * self.delta_k)
    }
}

/// Builds `n` modes at k_i = k_min + iΔk (i = 0..n) with Δk = k_max/(n − 1).
pub fn build_mode_grid(k_min: f64, k_max: f64, n: usize, material: &MaterialParams) -> Result<ModeGrid> {
    ensure_finite("k_min", k_min)?;
    ensure_finite("k_max", k_max)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("mode count must be at least 2, got {n}")));
    }
    if k_min < 0.0 || k_min >= k_max {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= k_min < k_max, got k_min = {k_min}, k_max = {k_max}"
        )));
    }
    material.validate()?;
    let delta_k = k_max / (n - 1) as f64;
    let c = material.sound_speed_nm_ps();
    let modes = (0..n)
        .map(|i| {
            let k = i as f64 * delta_k + k_min;
            let omega = c * k;
            let coupling = if omega == 0.0 { 0.0 } else { effective_coupling(k, delta_k, material)? };
            let dimensionless_displacement = if omega == 0.0 { 0.0 } else { coupling / (HBAR * omega) };
            Ok(PhononMode { k, omega, coupling, dimensionless_displacement })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeGrid { k_min, k_max, mode_count: n, delta_k, modes })
}

/// Gaussian form factor exp(−k²l²/4).
pub fn form_factor(k: f64, l: f64) -> Result<f64> {
    ensure_finite("k", k)?;
    ensure_finite("l", l)?;
    if k < 0.0 || l <= 0.0 {
        return Err(Error::InvalidParameter(format!("form factor needs k >= 0 and l > 0, got k = {k}, l = {l}")));
    }
    Ok((-0.25 * k * k * l * l).exp())
}

/// Per-mode coupling g in meV carrying the spherical shell weight k²Δk/(2π²).
pub fn effective_coupling(k: f64, delta_k: f64, material: &MaterialParams) -> Result<f64> {
    ensure_finite("delta_k", delta_k)?;
    if delta_k <= 0.0 {
        return Err(Error::InvalidParameter(format!("delta_k must be positive, got {delta_k}")));
    }
    let f = form_factor(k, material.dot_width)?;
    let g2 = k * k * delta_k / (2.0 * PI * PI) * material.coupling_prefactor() * k * f * f;
    Ok(material.coupling_scale * g2.sqrt())
}

/// Bose–Einstein occupation 1/(e^{ħω/k_BT} − 1).
pub fn bose_occupation(omega: f64, temperature: Kelvin) -> Result<f64> {
    ensure_finite("omega", omega)?;
    ensure_finite("temperature", temperature.0)?;
    if temperature.0 < 0.0 || omega < 0.0 {
        return Err(Error::InvalidParameter("occupation needs omega >= 0 and T >= 0".into()));
    }
    if temperature.is_zero() {
        return Ok(0.0);
    }
    if omega == 0.0 {
        return Err(Error::InvalidParameter("zero-frequency mode has divergent occupation at T > 0".into()));
    }
    Ok(1.0 / temperature.energy_ratio(omega).exp_m1())
}

/// A mode grid at a temperature together with per-mode Fock cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub grid: ModeGrid,
    pub temperature: Kelvin,
    pub cutoffs: Vec<usize>,
}

impl Environment {
    pub fn new(grid: ModeGrid, temperature: Kelvin, cutoffs: Vec<usize>, dim_cap: usize) -> Result<Self> {
        ensure_finite("temperature", temperature.0)?;
        if temperature.0 < 0.0 {
            return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
        }
        if cutoffs.len() != grid.modes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cutoffs given for {} modes",
                cutoffs.len(),
                grid.modes.len()
            )));
        }
        if cutoffs.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter("cutoffs must be at least 1".into()));
        }
        let env = Self { grid, temperature, cutoffs };
        let dim = env.dimension();
        if dim > dim_cap {
            return Err(Error::InfeasibleDimension { required: dim, cap: dim_cap });
        }
        Ok(env)
    }

    /// Product of the per-mode cutoffs, saturating on overflow.
    pub fn dimension(&self) -> usize {
        self.cutoffs.iter().fold(1usize, |acc, &d| acc.saturating_mul(d))
    }

    pub fn modes(&self) -> &[PhononMode] {
        &self.grid.modes
    }
}
