//! Continuum limit of the dephasing exponent, used as an oracle for the
//! discrete mode grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{bose_occupation, effective_coupling, Kelvin, MaterialParams, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    AdaptiveSimpson,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Upper integration limit, nm⁻¹. The form factor makes the integrand
    /// negligible beyond 2 nm⁻¹ for a 3 nm dot.
    pub k_upper: f64,
    pub panels: usize,
    pub rule: QuadratureRule,
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { k_upper: 2.0, panels: 64, rule: QuadratureRule::AdaptiveSimpson, abs_tol: 1e-12 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_upper > 0.0 && self.k_upper.is_finite()) {
            return Err(Error::InvalidParameter(format!("k_upper must be positive, got {}", self.k_upper)));
        }
        if self.panels < 8 {
            return Err(Error::InvalidParameter(format!("need at least 8 panels, got {}", self.panels)));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        Ok(())
    }
}

/// Exponent density per unit k: g(k)²/(ħck)² (1 − cos ckt)(2n̄ + 1), with
/// g(k)² the per-mode coupling at unit Δk. Vanishes at k = 0.
fn exponent_density(material: &MaterialParams, temperature: Kelvin, t: Option<f64>, k: f64) -> Result<f64> {
    if k == 0.0 {
        return Ok(0.0);
    }
    let omega = material.sound_speed_nm_ps() * k;
    let g = effective_coupling(k, 1.0, material)?;
    let ratio = g / (HBAR * omega);
    let phase = match t {
        Some(t) => 2.0 * (0.5 * omega * t).sin().powi(2),
        None => 1.0,
    };
    Ok(ratio * ratio * phase * (2.0 * bose_occupation(omega, temperature)? + 1.0))
}

/// ∫₀^{k_upper} of the exponent density; `t = None` drops the oscillating
/// factor (long-time average).
fn integrate(material: &MaterialParams, temperature: Kelvin, t: Option<f64>, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    material.validate()?;
    if temperature.0 < 0.0 || !temperature.0.is_finite() {
        return Err(Error::InvalidParameter(format!("bad temperature {}", temperature.0)));
    }
    let f = |k: f64| exponent_density(material, temperature, t, k);
    let width = spec.k_upper / spec.panels as f64;
    let mut total = 0.0;
    let mut error = 0.0;
    match spec.rule {
        QuadratureRule::AdaptiveSimpson => {
            let tol = spec.abs_tol / spec.panels as f64;
            for p in 0..spec.panels {
                let a = p as f64 * width;
                let (v, e) = adaptive_simpson(&f, a, a + width, tol)?;
                total += v;
                error += e;
            }
        }
        QuadratureRule::GaussLegendre => {
            let (nodes, weights) = gauss_legendre(20);
            let panel_sum = |panels: usize| -> Result<f64> {
                let w = spec.k_upper / panels as f64;
                let mut s = 0.0;
                for p in 0..panels {
                    let mid = (p as f64 + 0.5) * w;
                    for (x, wt) in nodes.iter().zip(&weights) {
                        s += 0.5 * w * wt * f(mid + 0.5 * w * x)?;
                    }
                }
                Ok(s)
            };
            total = panel_sum(2 * spec.panels)?;
            error = (total - panel_sum(spec.panels)?).abs();
        }
    }
    if !(error <= spec.abs_tol) {
        return Err(Error::Numerical(format!(
            "quadrature did not converge: error estimate {error:e} > {:e}",
            spec.abs_tol
        )));
    }
    Ok(total)
}

/// Continuum dephasing exponent at time `t`.
pub fn continuum_exponent(material: &MaterialParams, temperature: Kelvin, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    integrate(material, temperature, Some(t), spec)
}

/// Degree of coherence in the continuum limit.
pub fn continuum_coherence(material: &MaterialParams, temperature: Kelvin, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok((-continuum_exponent(material, temperature, t, spec)?).exp())
}

/// Long-time limit of [`continuum_coherence`].
pub fn continuum_plateau(material: &MaterialParams, temperature: Kelvin, spec: &QuadratureSpec) -> Result<f64> {
    Ok((-integrate(material, temperature, None, spec)?).exp())
}

fn simpson(fa: f64, fm: f64, fb: f64, width: f64) -> f64 {
    width / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson with Richardson correction; returns (value, error estimate).
fn adaptive_simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> Result<f64>>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<(f64, f64)> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
        }
        let (lv, le) = step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let (rv, re) = step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok((lv + rv, le + re))
    }
    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    step(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 40)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
