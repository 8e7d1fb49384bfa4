//! Scalar observables: coherence, Negativity, purity and the pure-state
//! entanglement entropy, plus the first-maximum search over time.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{
    assemble_joint_state, evolve_blocks, hermiticity_deviation, partial_transpose_qubit, EvolvedBlocks, JointState,
};
use crate::error::{Error, Result};
use crate::model::{bose_occupation, Environment, Kelvin, PhononMode, QubitParams};

/// Eigenvalues closer to zero than this are treated as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-12;
/// Largest accepted |A − A†| entry for a Negativity input.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSeries {
    pub times: Vec<f64>,
    pub coherence: Vec<f64>,
    pub negativity: Vec<f64>,
    pub purity: Vec<f64>,
    /// Only filled at T = 0.
    pub entropy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityResult {
    pub value: f64,
    pub negative_eigenvalue_count: usize,
    pub min_eigenvalue: f64,
}

impl NegativityResult {
    pub(crate) fn from_spectra<'a>(spectra: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut value = 0.0;
        let mut count = 0;
        let mut min = f64::INFINITY;
        for spectrum in spectra {
            for &ev in spectrum {
                min = min.min(ev);
                if ev < -ZERO_EIGENVALUE {
                    value -= ev;
                    count += 1;
                }
            }
        }
        Self { value, negative_eigenvalue_count: count, min_eigenvalue: min }
    }
}

/// Σ_k (g/ħω)²(1 − cos ωt)(2n̄ + 1) over the coupled modes.
pub fn dephasing_exponent(modes: &[PhononMode], temperature: Kelvin, t: f64) -> Result<f64> {
    modes
        .iter()
        .filter(|m| !m.is_decoupled())
        .map(|m| {
            let s = m.dimensionless_displacement;
            let occ = bose_occupation(m.omega, temperature)?;
            Ok(s * s * (1.0 - (m.omega * t).cos()) * (2.0 * occ + 1.0))
        })
        .sum()
}

/// |⟨u(t)⟩| from the closed form for every mode of the grid.
pub fn coherence_closed_form(env: &Environment, t: f64) -> Result<f64> {
    Ok((-dephasing_exponent(env.modes(), env.temperature, t)?).exp())
}

/// |Tr R_10|.
pub fn coherence_of_state(blocks: &EvolvedBlocks) -> f64 {
    (0..blocks.dimension).map(|i| blocks.r10[(i, i)]).sum::<Complex64>().norm()
}

/// Σ(|λ| − λ)/2 over the spectrum of a Hermitian matrix.
pub fn negativity(pt_matrix: &Mat<Complex64>) -> Result<NegativityResult> {
    let deviation = hermiticity_deviation(pt_matrix);
    if deviation > HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let eigenvalues = pt_matrix
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    Ok(NegativityResult::from_spectra([eigenvalues.as_slice()]))
}

pub fn negativity_of_state(state: &JointState) -> Result<NegativityResult> {
    negativity(&partial_transpose_qubit(state))
}

/// ∏_k tanh(ħω_k / 2k_BT) over the modes the environment keeps (cutoff
/// above one level); 1 at T = 0.
pub fn purity_closed_form(env: &Environment) -> f64 {
    let kept: Vec<PhononMode> = env.modes().iter().zip(&env.cutoffs).filter(|(_, &d)| d > 1).map(|(m, _)| *m).collect();
    purity_of_modes(&kept, env.temperature)
}

pub(crate) fn purity_of_modes(modes: &[PhononMode], temperature: Kelvin) -> f64 {
    if temperature.is_zero() {
        return 1.0;
    }
    modes
        .iter()
        .filter(|m| m.omega > 0.0)
        .map(|m| (0.5 * temperature.energy_ratio(m.omega)).tanh())
        .product()
}

/// Tr σ².
pub fn purity_of_state(state: &JointState) -> f64 {
    let n = state.matrix.nrows();
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            total += state.matrix[(i, j)].norm_sqr();
        }
    }
    total
}

fn binary_entropy(p_plus: f64, p_minus: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { p * p.ln() };
    -(term(p_plus) + term(p_minus)) / std::f64::consts::LN_2
}

/// Entanglement entropy (in bits) of the pure joint state at T = 0 from
/// the degree of coherence, with Δ = 1 − 4|α|²|β|²(1 − |u|²).
pub fn pure_state_entropy(coherence: f64, alpha: Complex64, beta: Complex64) -> f64 {
    let ab = alpha.norm_sqr() * beta.norm_sqr();
    let delta = (1.0 - 4.0 * ab * (1.0 - coherence * coherence)).clamp(0.0, 1.0);
    let root = delta.sqrt();
    binary_entropy(0.5 * (1.0 + root), 0.5 * (1.0 - root))
}

/// −Tr ρ log₂ ρ of a 2×2 density matrix (normalized by its trace).
pub fn qubit_entropy(rho: &[[Complex64; 2]; 2]) -> f64 {
    let tr = rho[0][0].re + rho[1][1].re;
    let a = rho[0][0].re / tr;
    let d = rho[1][1].re / tr;
    let b = rho[0][1].norm() / tr;
    let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let mid = 0.5 * (a + d);
    binary_entropy(mid + half_gap, mid - half_gap)
}

/// Entropy of the qubit reduced state of σ.
pub fn reduced_state_entropy(state: &JointState) -> f64 {
    qubit_entropy(&state.qubit_reduced())
}

/// Coherence, Negativity and purity from the assembled state at each time;
/// entropy as well when T = 0.
pub fn measure_series(env: &Environment, qubit: &QubitParams, times: &[f64]) -> Result<MeasureSeries> {
    let mut series = MeasureSeries {
        times: times.to_vec(),
        coherence: Vec::with_capacity(times.len()),
        negativity: Vec::with_capacity(times.len()),
        purity: Vec::with_capacity(times.len()),
        entropy: env.temperature.is_zero().then(Vec::new),
    };
    for &t in times {
        let blocks = evolve_blocks(env, t)?;
        let state = assemble_joint_state(&blocks, qubit, t)?;
        series.coherence.push(coherence_of_state(&blocks));
        series.negativity.push(negativity_of_state(&state)?.value);
        series.purity.push(purity_of_state(&state));
        if let Some(entropy) = series.entropy.as_mut() {
            entropy.push(reduced_state_entropy(&state));
        }
    }
    Ok(series)
}

/// Location and value of the first Negativity maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxNegativity {
    pub t_at_max: f64,
    pub value: f64,
    /// No superposition (α or β zero): Negativity vanishes identically.
    pub degenerate: bool,
    pub fine_evaluations: usize,
}

/// Options for [`find_first_maximum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxSearch {
    pub start: f64,
    pub end: f64,
    pub grid_points: usize,
    /// Width of the final golden-section bracket, ps.
    pub tolerance: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Scans `coarse` on an even grid until the first interior local maximum,
/// then refines with `fine` by golden-section search inside the bracket.
/// If `fine` does not peak inside the coarse bracket, the bracket walks
/// toward the larger side until it does.
pub fn find_first_maximum<C, F>(search: MaxSearch, mut coarse: C, mut fine: F) -> Result<MaxNegativity>
where
    C: FnMut(f64) -> Result<f64>,
    F: FnMut(f64) -> Result<f64>,
{
    let MaxSearch { start, end, grid_points, tolerance } = search;
    if grid_points < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 grid points, got {grid_points}")));
    }
    if !(end > start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidParameter(format!("bad time window [{start}, {end}]")));
    }
    let h = (end - start) / (grid_points - 1) as f64;
    let time = |i: usize| start + h * i as f64;

    let mut values: Vec<f64> = Vec::with_capacity(grid_points);
    let mut peak = None;
    for i in 0..grid_points {
        values.push(coarse(time(i))?);
        if i >= 2 {
            let (a, b, c) = (values[i - 2], values[i - 1], values[i]);
            if b > a && b >= c && b > ZERO_EIGENVALUE {
                peak = Some(i - 1);
                break;
            }
        }
    }
    let mut centre = peak.ok_or(Error::NoInteriorMaximum { start, end })?;

    let mut evaluations = 0usize;
    let mut eval = |t: f64, evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        fine(t)
    };
    let mut left = eval(time(centre - 1), &mut evaluations)?;
    let mut mid = eval(time(centre), &mut evaluations)?;
    let mut right = eval(time(centre + 1), &mut evaluations)?;
    while mid < left.max(right) {
        if left > right && centre >= 2 {
            centre -= 1;
            right = mid;
            mid = left;
            left = eval(time(centre - 1), &mut evaluations)?;
        } else if right >= left && centre + 2 < grid_points {
            centre += 1;
            left = mid;
            mid = right;
            right = eval(time(centre + 1), &mut evaluations)?;
        } else {
            return Err(Error::NoInteriorMaximum { start, end });
        }
    }

    let mut best = (time(centre), mid);
    let (mut a, mut b) = (time(centre - 1), time(centre + 1));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, &mut evaluations)?;
    let mut fd = eval(d, &mut evaluations)?;
    for (t, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (t, v);
        }
    }
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, &mut evaluations)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, &mut evaluations)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(MaxNegativity { t_at_max: best.0, value: best.1, degenerate: false, fine_evaluations: evaluations })
}

/// First Negativity maximum of the dense state on `t_window`, refined to
/// 1e-3 ps.
pub fn max_negativity(
    env: &Environment,
    qubit: &QubitParams,
    t_window: (f64, f64),
    grid_points: usize,
) -> Result<MaxNegativity> {
    if qubit.overlap_magnitude() == 0.0 {
        return Ok(MaxNegativity { t_at_max: t_window.0, value: 0.0, degenerate: true, fine_evaluations: 0 });
    }
    let value_at = |t: f64| -> Result<f64> {
        let state = assemble_joint_state(&evolve_blocks(env, t)?, qubit, t)?;
        Ok(negativity_of_state(&state)?.value)
    };
    let search = MaxSearch { start: t_window.0, end: t_window.1, grid_points, tolerance: 1e-3 };
    find_first_maximum(search, value_at, value_at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_mode_grid, MaterialParams};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn env(n: usize, t: f64, cutoffs: Vec<usize>) -> Environment {
        let grid = build_mode_grid(0.001, 0.9, n, &MaterialParams::default()).unwrap();
        Environment::new(grid, Kelvin(t), cutoffs, 4096).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn coherence_closed_form_basics() {
        let e = env(4, 6.0, vec![1, 2, 2, 2]);
        assert_eq!(coherence_closed_form(&e, 0.0).unwrap(), 1.0);
        let decoupled = build_mode_grid(0.0, 1.0, 2, &MaterialParams::default()).unwrap();
        let only_zero = PhononMode { ..decoupled.modes[0] };
        assert_eq!(dephasing_exponent(&[only_zero], Kelvin(6.0), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn cold_single_mode_coherence_is_coherent_overlap() {
        let e = env(2, 0.0, vec![1, 14]);
        let t = 0.45;
        let b = evolve_blocks(&e, t).unwrap();
        let amp = crate::fock::DisplacementAmplitude::at(&e.grid.modes[1], t);
        assert!((coherence_of_state(&b) - (-0.5 * amp.value.norm_sqr()).exp()).abs() < 1e-15);
    }

    #[test]
    fn negativity_of_textbook_matrices() {
        // Bell state |Φ+⟩: PT spectrum {½, ½, ½, −½}.
        let mut bell = Mat::<Complex64>::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = c(0.5);
        }
        let state = JointState { matrix: bell, time: 0.0, tail_mass_total: 0.0 };
        let r = negativity_of_state(&state).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        assert_eq!(r.negative_eigenvalue_count, 1);

        let psd = Mat::from_fn(3, 3, |i, j| c(if i == j { 0.2 + i as f64 } else { 0.1 }));
        assert_eq!(negativity(&psd).unwrap().value, 0.0);

        let bad = Mat::from_fn(2, 2, |i, j| c(if i < j { 1.0 } else { 0.0 }));
        assert!(matches!(negativity(&bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn purity_closed_form_values() {
        let cold = env(3, 0.0, vec![1, 1, 1]);
        assert_eq!(purity_closed_form(&cold), 1.0);
        let warm = env(3, 6.0, vec![1, 1, 1]);
        assert_eq!(purity_closed_form(&warm), 1.0);
        let t = Kelvin(6.0);
        let omega = crate::model::K_B * t.0 / crate::model::HBAR;
        let mode = PhononMode { k: 0.1, omega, coupling: 0.1, dimensionless_displacement: 0.1 };
        assert!((purity_of_modes(&[mode], t) - 0.5f64.tanh()).abs() < 1e-15);
        // Product form (1 − e^{−x})²/(1 − e^{−2x}) agrees with tanh(x/2).
        for x in [0.1, 0.7, 2.0, 5.0] {
            let product = (1.0 - (-x as f64).exp()).powi(2) / (1.0 - (-2.0 * x as f64).exp());
            assert!((product - (0.5 * x as f64).tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn purity_decreases_with_mode_count() {
        let m = MaterialParams::default();
        let mut prev = 1.0;
        for n in 2..9 {
            let g = build_mode_grid(0.001, 0.9, n, &m).unwrap();
            let p = purity_of_modes(&g.modes, Kelvin(6.0));
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn pure_state_product_has_unit_purity() {
        let e = env(2, 0.0, vec![1, 10]);
        let s = assemble_joint_state(&evolve_blocks(&e, 0.0).unwrap(), &QubitParams::equal_superposition(), 0.0).unwrap();
        assert!((purity_of_state(&s) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entropy_limits() {
        let h = c(FRAC_1_SQRT_2);
        assert_eq!(pure_state_entropy(1.0, h, h), 0.0);
        assert!((pure_state_entropy(0.0, h, h) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_matches_reduced_matrix() {
        let alpha = Complex64::new(0.6, 0.0);
        let beta = Complex64::new(0.0, 0.8);
        let e = env(3, 0.0, vec![1, 12, 8]);
        let q = QubitParams::new(0.3, alpha, beta).unwrap();
        for t in [0.2, 0.7, 1.5] {
            let b = evolve_blocks(&e, t).unwrap();
            let s = assemble_joint_state(&b, &q, t).unwrap();
            let from_state = reduced_state_entropy(&s);
            let closed = pure_state_entropy(coherence_of_state(&b), alpha, beta);
            assert!((from_state - closed).abs() < 1e-8, "{from_state} vs {closed}");
        }
    }

    #[test]
    fn cold_negativity_matches_schmidt_oracle() {
        let e = env(3, 0.0, vec![1, 12, 8]);
        let q = QubitParams::equal_superposition();
        for t in [0.3, 0.9] {
            let b = evolve_blocks(&e, t).unwrap();
            let s = assemble_joint_state(&b, &q, t).unwrap();
            let u = coherence_closed_form(&e, t).unwrap();
            let r = negativity_of_state(&s).unwrap();
            assert!((r.value - 0.5 * (1.0 - u * u).sqrt()).abs() < 1e-8);
            assert!((r.min_eigenvalue + 0.5 * (1.0 - u * u).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn first_maximum_of_smooth_curve() {
        let f = |t: f64| Ok((t * 2.0).sin() * (-0.1 * t).exp());
        let search = MaxSearch { start: 0.0, end: 10.0, grid_points: 50, tolerance: 1e-6 };
        let m = find_first_maximum(search, f, f).unwrap();
        // d/dt [sin 2t e^{−t/10}] = 0 → tan 2t = 20.
        let want = 0.5 * 20f64.atan();
        assert!((m.t_at_max - want).abs() < 1e-5);
        let flat = |_: f64| Ok(0.0);
        assert!(find_first_maximum(search, flat, flat).is_err());
    }

    #[test]
    fn first_maximum_walks_when_fine_curve_shifts() {
        let coarse = |t: f64| Ok(1.0 - (t - 3.0) * (t - 3.0));
        let fine = |t: f64| Ok(1.0 - (t - 3.9) * (t - 3.9));
        let search = MaxSearch { start: 0.0, end: 10.0, grid_points: 41, tolerance: 1e-6 };
        let m = find_first_maximum(search, coarse, fine).unwrap();
        assert!((m.t_at_max - 3.9).abs() < 1e-5);
    }

    #[test]
    fn no_superposition_is_degenerate() {
        let e = env(2, 6.0, vec![1, 3]);
        let q = QubitParams::new(0.0, c(1.0), c(0.0)).unwrap();
        let m = max_negativity(&e, &q, (0.0, 2.0), 20).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.value, 0.0);
    }
}
