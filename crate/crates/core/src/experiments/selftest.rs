//! Fast consistency checks run by the `selftest` subcommand.

use num_complex::Complex64;
use serde::Serialize;

use super::fit::{fit_points, FitPoint, REFERENCE_PARAMS};
use crate::assembly::{assemble_joint_state, evolve_blocks, read_state_dump, write_state_dump};
use crate::continuum::{continuum_coherence, QuadratureSpec};
use crate::error::Result;
use crate::fock::CutoffPolicy;
use crate::frame::FrameSolver;
use crate::measures::{coherence_of_state, dephasing_exponent, negativity_of_state};
use crate::model::{build_mode_grid, Environment, Kelvin, MaterialParams, QubitParams};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, bound: f64) -> Check {
    Check { name, passed: value <= bound, detail: format!("{value:.3e} <= {bound:.0e}") }
}

fn cold_negativity() -> Result<Check> {
    let m = MaterialParams::default();
    let grid = build_mode_grid(0.001, 0.9, 2, &m)?;
    let env = Environment::new(grid, Kelvin(0.0), vec![1, 16], 4096)?;
    let q = QubitParams::new(0.4, Complex64::new(0.6, 0.0), Complex64::from_polar(0.8, 0.3))?;
    let t = 0.5;
    let blocks = evolve_blocks(&env, t)?;
    let state = assemble_joint_state(&blocks, &q, t)?;
    let u = coherence_of_state(&blocks);
    let gap = (negativity_of_state(&state)?.value - 0.48 * (1.0 - u * u).sqrt()).abs();
    Ok(check("cold Negativity equals |αβ|√(1−|u|²)", gap, 1e-10))
}

fn routes_agree() -> Result<Check> {
    let m = MaterialParams::default();
    let grid = build_mode_grid(0.001, 0.9, 3, &m)?;
    let solver = FrameSolver::new(&grid, Kelvin(6.0), 2.0, &CutoffPolicy::default())?;
    let basis = solver.basis(1e-12, 4096)?;
    let env = Environment::new(grid, Kelvin(6.0), vec![1, 30, 22], 4096)?;
    let q = QubitParams::equal_superposition();
    let t = 1.0;
    let dense = negativity_of_state(&assemble_joint_state(&evolve_blocks(&env, t)?, &q, t)?)?.value;
    let fast = solver.negativity(&basis, &q, t)?.value;
    Ok(check("dense and branch-frame Negativity agree", (dense - fast).abs(), 1e-7))
}

fn continuum_matches() -> Result<Check> {
    let m = MaterialParams::default();
    let grid = build_mode_grid(0.001, 0.9, 100, &m)?;
    let t = 1.0;
    let discrete = (-dephasing_exponent(&grid.modes, Kelvin(6.0), t)?).exp();
    let continuum = continuum_coherence(&m, Kelvin(6.0), t, &QuadratureSpec::default())?;
    Ok(check("100 modes track the continuum coherence", (discrete - continuum).abs(), 1e-2))
}

fn fit_round_trip() -> Result<Check> {
    let mut points = Vec::new();
    for n in 3..=8 {
        for t in [4.0, 6.0, 8.0, 10.0, 12.0, 14.0] {
            let value = super::fit::FitParams::from_vector(REFERENCE_PARAMS).predict(n, t);
            points.push(FitPoint { n, temperature: t, value });
        }
    }
    let fit = fit_points(&points)?;
    let worst = fit.vector().iter().zip(REFERENCE_PARAMS).map(|(g, w)| (g / w - 1.0).abs()).fold(0.0, f64::max);
    Ok(check("surface fit recovers its generating parameters", worst, 1e-2))
}

fn dump_round_trip() -> Result<Check> {
    let m = MaterialParams::default();
    let grid = build_mode_grid(0.001, 0.9, 3, &m)?;
    let env = Environment::new(grid, Kelvin(6.0), vec![1, 3, 3], 4096)?;
    let state = assemble_joint_state(&evolve_blocks(&env, 0.7)?, &QubitParams::equal_superposition(), 0.7)?;
    let mut bytes = Vec::new();
    write_state_dump(&state, &mut bytes)?;
    let (_, matrix) = read_state_dump(bytes.as_slice())?;
    let gap = (0..matrix.nrows())
        .flat_map(|i| (0..matrix.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (matrix[(i, j)] - state.matrix[(i, j)]).norm())
        .fold(0.0, f64::max);
    Ok(check("binary state dump round trip", gap, 0.0))
}

/// Runs every check; a check that errors counts as failed.
pub fn run_selftest() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Result<Check>); 5] = [
        ("cold Negativity", cold_negativity),
        ("route agreement", routes_agree),
        ("continuum", continuum_matches),
        ("fit", fit_round_trip),
        ("state dump", dump_round_trip),
    ];
    checks
        .into_iter()
        .map(|(name, f)| f().unwrap_or_else(|e| Check { name, passed: false, detail: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for c in super::run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
