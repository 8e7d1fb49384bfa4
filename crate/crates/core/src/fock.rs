//! Single-mode Fock-space numerics: Laguerre polynomials, truncated
//! displacement and evolution operators, thermal weights, cutoff choice.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{Kelvin, ModeGrid, PhononMode};

/// Hard ceiling on a single-mode cutoff.
pub const MAX_MODE_CUTOFF: usize = 4096;

/// Generalized Laguerre polynomial L_m^(p)(x) by the three-term recurrence in m.
pub fn laguerre(m: usize, p: i64, x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    if m as i64 + p < 0 {
        return Err(Error::InvalidParameter(format!("laguerre needs m + p >= 0, got m = {m}, p = {p}")));
    }
    let a = p as f64;
    let mut prev = 1.0;
    if m == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + a - x;
    for j in 1..m {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + a - x) * cur - (j + a) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// ⟨i|D(r)|j⟩ for a real amplitude r, i < rows, j < cols, row-major.
///
/// Along each diagonal p = i − j the entries
/// E_j = e^{−r²/2} r^p √(j!/(j+p)!) L_j^{(p)}(r²) obey the Laguerre
/// recurrence rescaled so that no intermediate value exceeds the entries
/// themselves; the upper triangle follows from ⟨j|D|j+p⟩ = (−1)^p E_j.
/// Every kept entry is exact.
pub fn real_displacement(r: f64, rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    if r == 0.0 {
        for i in 0..rows.min(cols) {
            out[i * cols + i] = 1.0;
        }
        return out;
    }
    let x = r * r;
    let ln_r = r.abs().ln();
    let sign_r = r.signum();
    let mut ln_fact = 0.0;
    for p in 0..rows.max(cols) {
        if p > 0 {
            ln_fact += (p as f64).ln();
        }
        let lower = cols.min(rows.saturating_sub(p));
        let upper = rows.min(cols.saturating_sub(p));
        let count = lower.max(upper);
        if count == 0 {
            continue;
        }
        let pf = p as f64;
        let odd = p % 2 == 1;
        let lead = (-0.5 * x + pf * ln_r - 0.5 * ln_fact).exp() * if odd { sign_r } else { 1.0 };
        let (mut prev, mut cur) = (0.0, lead);
        for j in 0..count {
            if j < lower {
                out[(j + p) * cols + j] = cur;
            }
            if p > 0 && j < upper {
                out[j * cols + j + p] = if odd { -cur } else { cur };
            }
            let jf = j as f64;
            let next = ((2.0 * jf + 1.0 + pf - x) * cur - (jf * (jf + pf)).sqrt() * prev)
                / ((jf + 1.0) * (jf + 1.0 + pf)).sqrt();
            prev = cur;
            cur = next;
        }
    }
    out
}

/// λ(t) = (g/ħω)(1 − e^{−iωt}) and φ(t) = (g/ħω)² sin ωt for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementAmplitude {
    pub value: Complex64,
    pub global_phase: f64,
}

impl DisplacementAmplitude {
    pub fn at(mode: &PhononMode, t: f64) -> Self {
        if mode.is_decoupled() {
            return Self { value: Complex64::new(0.0, 0.0), global_phase: 0.0 };
        }
        let s = mode.dimensionless_displacement;
        let wt = mode.omega * t;
        let value = Complex64::new(s * (1.0 - wt.cos()), s * wt.sin());
        Self { value, global_phase: s * s * wt.sin() }
    }
}

/// A d×d operator in the Fock basis |0⟩..|d−1⟩ of one mode.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub dimension: usize,
    pub entries: Mat<Complex64>,
}

impl ModeOperator {
    /// Largest entry of |u†u − I| restricted to the first `columns` columns.
    /// The outermost columns always leak, so only a fixed leading block
    /// converges as the dimension grows.
    pub fn unitarity_deviation(&self, columns: usize) -> f64 {
        let cols = columns.min(self.dimension);
        let mut worst: f64 = 0.0;
        for a in 0..cols {
            for b in 0..cols {
                let dot: Complex64 = (0..self.dimension).map(|i| self.entries[(i, a)].conj() * self.entries[(i, b)]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Truncated D(λ): ⟨m+p|D|m⟩ = e^{−|λ|²/2} λ^p √(m!/(m+p)!) L_m^(p)(|λ|²),
/// with the p < 0 entries from ⟨m|D|m+q⟩ = (−1)^q conj⟨m+q|D|m⟩.
pub fn displacement_matrix(lambda: Complex64, d: usize) -> Result<ModeOperator> {
    if d == 0 {
        return Err(Error::InvalidParameter("mode dimension must be at least 1".into()));
    }
    ensure_finite("lambda", lambda.re + lambda.im)?;
    let (r, theta) = lambda.to_polar();
    let real = real_displacement(r, d, d);
    // D(λ) = U D(|λ|) U† with U = diag(e^{imθ}).
    let phases: Vec<Complex64> = (0..d).map(|m| Complex64::from_polar(1.0, m as f64 * theta)).collect();
    let entries = Mat::from_fn(d, d, |i, j| phases[i] * phases[j].conj() * real[i * d + j]);
    Ok(ModeOperator { dimension: d, entries })
}

/// u(t) = e^{iφ(t)} D(λ(t)) truncated to d levels.
pub fn mode_evolution_operator(mode: &PhononMode, t: f64, d: usize) -> Result<ModeOperator> {
    ensure_finite("t", t)?;
    let amp = DisplacementAmplitude::at(mode, t);
    let mut op = displacement_matrix(amp.value, d)?;
    let phase = Complex64::from_polar(1.0, amp.global_phase);
    for j in 0..d {
        for i in 0..d {
            op.entries[(i, j)] *= phase;
        }
    }
    Ok(op)
}

/// Renormalized geometric occupation weights of a truncated thermal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalWeights {
    pub weights: Vec<f64>,
    /// Probability beyond the cutoff before renormalization.
    pub tail_mass: f64,
}

impl ThermalWeights {
    pub fn dimension(&self) -> usize {
        self.weights.len()
    }
}

/// Untruncated weights c_m = e^{−xm}(1 − e^{−x}) for m < count.
pub(crate) fn raw_thermal_weights(ratio: f64, count: usize) -> Vec<f64> {
    if ratio.is_infinite() {
        let mut w = vec![0.0; count];
        if count > 0 {
            w[0] = 1.0;
        }
        return w;
    }
    let base = -(-ratio).exp_m1();
    (0..count).map(|m| (-ratio * m as f64).exp() * base).collect()
}

pub fn thermal_weights(omega: f64, temperature: Kelvin, d: usize) -> Result<ThermalWeights> {
    if d == 0 {
        return Err(Error::InvalidParameter("mode dimension must be at least 1".into()));
    }
    ensure_finite("omega", omega)?;
    if temperature.0 < 0.0 || omega < 0.0 {
        return Err(Error::InvalidParameter("thermal weights need omega >= 0 and T >= 0".into()));
    }
    if omega == 0.0 && !temperature.is_zero() {
        return Err(Error::InvalidParameter("zero-frequency mode has no thermal state at T > 0".into()));
    }
    let ratio = temperature.energy_ratio(omega);
    let mut weights = raw_thermal_weights(ratio, d);
    let tail_mass = if ratio.is_infinite() { 0.0 } else { (-ratio * d as f64).exp() };
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(ThermalWeights { weights, tail_mass })
}

/// How aggressively each mode is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffPolicy {
    /// Probability allowed beyond the kept levels.
    pub tail_epsilon: f64,
    /// Extra levels per unit of max |λ|².
    pub displacement_margin: f64,
    /// Cap on the total truncated dimension.
    pub dim_cap: usize,
    /// Modes whose largest dephasing exponent |λ|²(2n̄ + 1) over the run
    /// stays below this are treated as decoupled.
    pub decoupling_tolerance: f64,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self { tail_epsilon: 1e-6, displacement_margin: 4.0, dim_cap: 4096, decoupling_tolerance: 1e-3 }
    }
}

impl CutoffPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1.0) {
            return Err(Error::Config(format!("tail_epsilon must lie in (0, 1), got {}", self.tail_epsilon)));
        }
        if !(self.displacement_margin >= 0.0 && self.displacement_margin.is_finite()) {
            return Err(Error::Config("displacement_margin must be finite and >= 0".into()));
        }
        if self.dim_cap < 2 {
            return Err(Error::Config(format!("dim_cap must be at least 2, got {}", self.dim_cap)));
        }
        if !(self.decoupling_tolerance >= 0.0 && self.decoupling_tolerance.is_finite()) {
            return Err(Error::Config("decoupling_tolerance must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Populations ⟨m|D(r) R D(r)†|m⟩ of a displaced thermal state for m < levels.
pub fn displaced_thermal_populations(ratio: f64, r: f64, levels: usize) -> Vec<f64> {
    let inner = thermal_support(ratio, 1e-18).max(levels);
    let c = raw_thermal_weights(ratio, inner);
    let d = real_displacement(r, levels, inner);
    (0..levels)
        .map(|m| d[m * inner..(m + 1) * inner].iter().zip(&c).map(|(a, w)| a * a * w).sum())
        .collect()
}

/// Number of thermal levels holding all but `mass` of the weight.
pub(crate) fn thermal_support(ratio: f64, mass: f64) -> usize {
    if ratio.is_infinite() {
        1
    } else {
        ((1.0 / mass).ln() / ratio).floor().max(0.0) as usize + 1
    }
}

/// Largest dephasing exponent |λ|²(2n̄ + 1) reached for t in [0, t_max].
pub fn dephasing_strength(mode: &PhononMode, temperature: Kelvin, t_max: f64) -> f64 {
    if mode.is_decoupled() {
        return 0.0;
    }
    let lam = mode.max_displacement(t_max);
    let ratio = temperature.energy_ratio(mode.omega);
    let factor = if ratio.is_infinite() { 1.0 } else { 1.0 / (0.5 * ratio).tanh() };
    lam * lam * factor
}

/// Smallest d such that the thermal tail beyond d and the tail of the
/// displaced thermal populations beyond d are both below `tail_epsilon`,
/// and d ≥ 1 + ⌈margin·Λ² + 3Λ⌉ with Λ = max |λ(t)| on [0, t_max].
pub fn select_cutoff(mode: &PhononMode, temperature: Kelvin, t_max: f64, policy: &CutoffPolicy) -> Result<usize> {
    ensure_finite("t_max", t_max)?;
    if t_max <= 0.0 {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    policy.validate()?;
    if mode.is_decoupled() {
        return Ok(1);
    }
    let eps = policy.tail_epsilon;
    let ratio = temperature.energy_ratio(mode.omega);
    let lam = mode.max_displacement(t_max);

    let thermal = if ratio.is_infinite() { 1 } else { ((1.0 / eps).ln() / ratio).floor() as usize + 1 };
    let displacement = 1 + (policy.displacement_margin * lam * lam + 3.0 * lam).ceil() as usize;

    let mut levels = thermal.max(displacement) + 8;
    let displaced = loop {
        if levels > MAX_MODE_CUTOFF {
            return Err(Error::InfeasibleDimension { required: levels, cap: MAX_MODE_CUTOFF });
        }
        let pops = displaced_thermal_populations(ratio, lam, levels);
        let mut kept = 0.0;
        let found = pops.iter().enumerate().find_map(|(m, p)| {
            if 1.0 - kept < eps {
                return Some(m);
            }
            kept += p;
            None
        });
        match found {
            Some(d) => break d.max(1),
            None => levels *= 2,
        }
    };
    Ok(thermal.max(displacement).max(displaced))
}

/// Cutoffs for a whole grid after pruning and clamping to `dim_cap`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSelection {
    pub cutoffs: Vec<usize>,
    /// Probability beyond each cutoff: the larger of the thermal tail and
    /// the tail of the maximally displaced thermal state. Zero for modes
    /// kept at one level, which are factored out.
    pub tail_masses: Vec<f64>,
    /// Modes treated as decoupled, with their dephasing strength.
    pub pruned: Vec<(usize, f64)>,
    /// Whether the product had to be reduced to fit `dim_cap`.
    pub clamped: bool,
}

impl CutoffSelection {
    pub fn dimension(&self) -> usize {
        self.cutoffs.iter().fold(1usize, |a, &d| a.saturating_mul(d))
    }

    pub fn total_tail_mass(&self) -> f64 {
        self.tail_masses.iter().sum()
    }
}

/// Per-mode cutoffs for a grid. Nearly decoupled modes are pruned to one
/// level; if the product still exceeds `dim_cap`, the modes with the
/// weakest (g/ħω)(2n̄ + 1) are reduced first, never below two levels.
pub fn select_cutoffs(
    grid: &ModeGrid,
    temperature: Kelvin,
    t_max: f64,
    policy: &CutoffPolicy,
) -> Result<CutoffSelection> {
    let mut cutoffs = Vec::with_capacity(grid.modes.len());
    let mut pruned = Vec::new();
    for (i, mode) in grid.modes.iter().enumerate() {
        let strength = dephasing_strength(mode, temperature, t_max);
        if !mode.is_decoupled() && strength <= policy.decoupling_tolerance {
            pruned.push((i, strength));
            cutoffs.push(1);
        } else {
            cutoffs.push(select_cutoff(mode, temperature, t_max, policy)?);
        }
    }

    let mut clamped = false;
    let product = |c: &[usize]| c.iter().fold(1usize, |a, &d| a.saturating_mul(d));
    if product(&cutoffs) > policy.dim_cap {
        clamped = true;
        let minimal: Vec<usize> = cutoffs.iter().map(|&d| d.min(2)).collect();
        if product(&minimal) > policy.dim_cap {
            return Err(Error::InfeasibleDimension { required: product(&minimal), cap: policy.dim_cap });
        }
        let mut order: Vec<usize> = (0..cutoffs.len()).filter(|&i| cutoffs[i] > 2).collect();
        let score = |i: usize| {
            let m = &grid.modes[i];
            let ratio = temperature.energy_ratio(m.omega);
            let occ = if ratio.is_infinite() { 0.0 } else { 1.0 / ratio.exp_m1() };
            m.dimensionless_displacement * (2.0 * occ + 1.0)
        };
        order.sort_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)));
        'outer: for i in order {
            while cutoffs[i] > 2 {
                cutoffs[i] -= 1;
                if product(&cutoffs) <= policy.dim_cap {
                    break 'outer;
                }
            }
        }
    }

    let tail_masses = grid
        .modes
        .iter()
        .zip(&cutoffs)
        .map(|(m, &d)| {
            if m.is_decoupled() || d == 1 {
                return 0.0;
            }
            let ratio = temperature.energy_ratio(m.omega);
            let thermal = if ratio.is_infinite() { 0.0 } else { (-ratio * d as f64).exp() };
            let kept: f64 = displaced_thermal_populations(ratio, m.max_displacement(t_max), d).iter().sum();
            thermal.max(1.0 - kept).max(0.0)
        })
        .collect();
    Ok(CutoffSelection { cutoffs, tail_masses, pruned, clamped })
}
