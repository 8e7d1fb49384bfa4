//! Property tests over randomized small systems.

use num_complex::Complex64;
use proptest::prelude::*;

use phonon_entanglement::assembly::{assemble_joint_state, evolve_blocks, partial_transpose_qubit, JointState};
use phonon_entanglement::experiments::output::format_number;
use phonon_entanglement::fock::{displacement_matrix, select_cutoffs, CutoffPolicy};
use phonon_entanglement::frame::FrameSolver;
use phonon_entanglement::measures::{negativity, negativity_of_state, purity_of_state};
use phonon_entanglement::model::{build_mode_grid, Environment, Kelvin, MaterialParams, QubitParams};

const TAIL_EPSILON: f64 = 1e-8;

/// Three modes with cutoffs chosen for times up to 3 ps.
fn small_env(temperature: f64) -> Environment {
    let grid = build_mode_grid(0.001, 0.9, 3, &MaterialParams::default()).unwrap();
    let policy = CutoffPolicy { tail_epsilon: TAIL_EPSILON, ..CutoffPolicy::default() };
    let cutoffs = select_cutoffs(&grid, Kelvin(temperature), 3.0, &policy).unwrap();
    Environment::new(grid, Kelvin(temperature), cutoffs.cutoffs, policy.dim_cap).unwrap()
}

fn qubit(theta: f64, phase_0: f64, phase_1: f64, splitting: f64) -> QubitParams {
    QubitParams::new(
        splitting,
        Complex64::from_polar(theta.cos(), phase_0),
        Complex64::from_polar(theta.sin(), phase_1),
    )
    .unwrap()
}

fn state(temperature: f64, q: &QubitParams, t: f64) -> JointState {
    assemble_joint_state(&evolve_blocks(&small_env(temperature), t).unwrap(), q, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_transpose_is_an_involution(t in 0.0..3.0f64, temperature in 0.0..12.0f64, theta in 0.1..1.4f64) {
        let s = state(temperature, &qubit(theta, 0.3, -0.7, 0.2), t);
        let once = JointState { matrix: partial_transpose_qubit(&s), ..s.clone() };
        let twice = partial_transpose_qubit(&once);
        for j in 0..twice.ncols() {
            for i in 0..twice.nrows() {
                prop_assert_eq!(twice[(i, j)], s.matrix[(i, j)]);
            }
        }
    }

    #[test]
    fn assembled_state_is_hermitian_with_unit_trace(t in 0.0..3.0f64, temperature in 0.0..12.0f64) {
        let s = state(temperature, &QubitParams::equal_superposition(), t);
        prop_assert!(s.hermiticity_deviation() < 1e-14);
        // Each kept mode may lose up to TAIL_EPSILON of displaced population.
        prop_assert!((s.trace().re - 1.0).abs() <= 10.0 * (s.tail_mass_total + 2.0 * TAIL_EPSILON));
        prop_assert!(s.trace().im.abs() < 1e-14);
    }

    #[test]
    fn purity_stays_in_unit_interval(t in 0.0..3.0f64, temperature in 0.0..12.0f64) {
        let p = purity_of_state(&state(temperature, &QubitParams::equal_superposition(), t));
        prop_assert!(p > 0.0 && p <= 1.0 + 1e-12);
    }

    #[test]
    fn negativity_ignores_local_phases(
        t in 0.05..3.0f64,
        temperature in 0.0..12.0f64,
        theta in 0.1..1.4f64,
        phases in (-3.0..3.0f64, -3.0..3.0f64),
        splitting in -2.0..2.0f64,
    ) {
        let reference = negativity_of_state(&state(temperature, &qubit(theta, 0.0, 0.0, 0.0), t)).unwrap().value;
        let moved = negativity_of_state(&state(temperature, &qubit(theta, phases.0, phases.1, splitting), t)).unwrap().value;
        prop_assert!((reference - moved).abs() < 1e-10, "{reference} vs {moved}");
    }

    #[test]
    fn negativity_is_bounded(t in 0.0..3.0f64, temperature in 0.0..12.0f64, theta in 0.0..1.5707f64) {
        let q = qubit(theta, 0.0, 0.0, 0.0);
        let n = negativity_of_state(&state(temperature, &q, t)).unwrap().value;
        prop_assert!(n >= 0.0);
        prop_assert!(n <= q.overlap_magnitude() + 1e-12);
    }

    #[test]
    fn frame_route_matches_dense_route(t in 0.1..2.5f64, temperature in 0.0..10.0f64) {
        let grid = build_mode_grid(0.001, 0.9, 2, &MaterialParams::default()).unwrap();
        let env = Environment::new(grid.clone(), Kelvin(temperature), vec![1, 40], 4096).unwrap();
        let q = QubitParams::equal_superposition();
        let dense = negativity_of_state(&assemble_joint_state(&evolve_blocks(&env, t).unwrap(), &q, t).unwrap()).unwrap().value;
        let solver = FrameSolver::new(&grid, Kelvin(temperature), 2.5, &CutoffPolicy::default()).unwrap();
        let basis = solver.basis(1e-14, 4096).unwrap();
        let fast = solver.negativity(&basis, &q, t).unwrap().value;
        prop_assert!((dense - fast).abs() < 1e-8, "{dense} vs {fast}");
    }

    #[test]
    fn displacement_keeps_leading_columns_unitary(re in -1.5..1.5f64, im in -1.5..1.5f64) {
        let op = displacement_matrix(Complex64::new(re, im), 60).unwrap();
        prop_assert!(op.unitarity_deviation(4) < 1e-10);
    }

    #[test]
    fn numbers_round_trip_through_csv_text(v in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
    }
}

#[test]
fn negativity_rejects_non_hermitian_input() {
    let mut m = faer::Mat::<Complex64>::zeros(2, 2);
    m[(0, 1)] = Complex64::new(1.0, 0.0);
    assert!(negativity(&m).is_err());
}
