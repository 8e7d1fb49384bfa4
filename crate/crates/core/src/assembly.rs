//! Dense qubit⊗environment density matrix in qubit-major block form.
//!
//! A cutoff of one level on a coupled mode means the mode is factored out
//! (treated as decoupled), so its block factor is exactly 1.

use std::io::{Read, Write};

use faer::linalg::kron::kron;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{mode_evolution_operator, thermal_weights};
use crate::model::{Environment, QubitParams, HBAR};

/// Magic bytes opening a binary state dump.
pub const DUMP_MAGIC: [u8; 8] = *b"QESIG1\0\0";

/// R_00 = R(0), R_10 = uR(0), R_11 = uR(0)u† on the truncated environment.
#[derive(Debug, Clone)]
pub struct EvolvedBlocks {
    pub r00: Mat<Complex64>,
    pub r11: Mat<Complex64>,
    pub r10: Mat<Complex64>,
    pub dimension: usize,
    pub mode_dims: Vec<usize>,
    pub tail_mass_total: f64,
}

struct ModeFactors {
    r00: Mat<Complex64>,
    r10: Mat<Complex64>,
    r11: Mat<Complex64>,
}

fn mode_factors(env: &Environment, index: usize, t: f64) -> Result<(ModeFactors, f64)> {
    let mode = &env.grid.modes[index];
    let d = env.cutoffs[index];
    if d == 1 {
        let one = Mat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0));
        return Ok((ModeFactors { r00: one.clone(), r10: one.clone(), r11: one }, 0.0));
    }
    let weights = thermal_weights(mode.omega, env.temperature, d)?;
    let u = mode_evolution_operator(mode, t, d)?.entries;
    let c = &weights.weights;
    let r00 = Mat::from_fn(d, d, |i, j| Complex64::new(if i == j { c[i] } else { 0.0 }, 0.0));
    let r10 = Mat::from_fn(d, d, |i, j| u[(i, j)] * c[j]);
    let r11 = &r10 * u.adjoint();
    Ok((ModeFactors { r00, r10, r11 }, weights.tail_mass))
}

fn kron_into(acc: Mat<Complex64>, next: &Mat<Complex64>) -> Mat<Complex64> {
    let mut out = Mat::zeros(acc.nrows() * next.nrows(), acc.ncols() * next.ncols());
    kron(out.as_mut(), acc.as_ref(), next.as_ref());
    out
}

/// Per-mode blocks combined by Kronecker products in grid order.
pub fn evolve_blocks(env: &Environment, t: f64) -> Result<EvolvedBlocks> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    let one = Mat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0));
    let (mut r00, mut r10, mut r11) = (one.clone(), one.clone(), one);
    let mut tail_mass_total = 0.0;
    for index in 0..env.grid.modes.len() {
        let (f, tail) = mode_factors(env, index, t)?;
        tail_mass_total += tail;
        r00 = kron_into(r00, &f.r00);
        r10 = kron_into(r10, &f.r10);
        r11 = kron_into(r11, &f.r11);
    }
    Ok(EvolvedBlocks {
        dimension: r00.nrows(),
        r00,
        r11,
        r10,
        mode_dims: env.cutoffs.clone(),
        tail_mass_total,
    })
}

/// σ(t) as a 2D×2D matrix in qubit-major order.
#[derive(Debug, Clone)]
pub struct JointState {
    pub matrix: Mat<Complex64>,
    pub time: f64,
    pub tail_mass_total: f64,
}

impl JointState {
    /// Environment dimension D.
    pub fn env_dimension(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// Tr_E σ as a 2×2 matrix.
    pub fn qubit_reduced(&self) -> [[Complex64; 2]; 2] {
        let d = self.env_dimension();
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = (0..d).map(|i| self.matrix[(a * d + i, b * d + i)]).sum();
            }
        }
        out
    }

    /// Largest |σ − σ†| entry.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }
}

pub(crate) fn hermiticity_deviation(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// [[|α|²R_00, αβ*e^{−iεt/ħ}R_01], [α*βe^{iεt/ħ}R_10, |β|²R_11]] with R_01 = R_10†.
pub fn assemble_joint_state(blocks: &EvolvedBlocks, qubit: &QubitParams, t: f64) -> Result<JointState> {
    qubit.validate()?;
    let d = blocks.dimension;
    let a = qubit.weight_0();
    let c = qubit.weight_1();
    let phase = Complex64::from_polar(1.0, qubit.energy_splitting * t / HBAR);
    let lower = qubit.amplitude_0.conj() * qubit.amplitude_1 * phase;
    let matrix = Mat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, true) => blocks.r00[(i, j)] * a,
        (false, false) => blocks.r11[(i - d, j - d)] * c,
        (false, true) => blocks.r10[(i - d, j)] * lower,
        // Upper block as the adjoint of the lower one keeps σ exactly Hermitian.
        (true, false) => (blocks.r10[(j - d, i)] * lower).conj(),
    });
    Ok(JointState { matrix, time: t, tail_mass_total: blocks.tail_mass_total })
}

/// The T = 0 joint state α|0⟩|E_0⟩ + βe^{iεt/ħ}|1⟩|E_1⟩ as a vector, with
/// |E_0⟩ the environment vacuum and |E_1⟩ = ⊗_k u_k|0⟩ truncated. Holds 2D
/// amplitudes where the density matrix would hold 4D².
#[derive(Debug, Clone)]
pub struct PureJointState {
    /// Qubit-major: the first D entries belong to |0⟩.
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl PureJointState {
    pub fn env_dimension(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Tr_E |ψ⟩⟨ψ|.
    pub fn qubit_reduced(&self) -> [[Complex64; 2]; 2] {
        let (zero, one) = self.amplitudes.split_at(self.env_dimension());
        let inner = |x: &[Complex64], y: &[Complex64]| -> Complex64 { x.iter().zip(y).map(|(a, b)| a * b.conj()).sum() };
        let off = inner(zero, one);
        [[inner(zero, zero), off], [off.conj(), inner(one, one)]]
    }

    /// |ψ⟩⟨ψ| as a dense state.
    pub fn to_joint_state(&self) -> JointState {
        let v = &self.amplitudes;
        let matrix = Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj());
        JointState { matrix, time: self.time, tail_mass_total: 0.0 }
    }
}

/// Builds the joint pure state at T = 0 on the environment's cutoffs.
pub fn assemble_pure_state(env: &Environment, qubit: &QubitParams, t: f64) -> Result<PureJointState> {
    if !env.temperature.is_zero() {
        return Err(Error::InvalidParameter(format!("pure joint state needs T = 0, got {} K", env.temperature.0)));
    }
    qubit.validate()?;
    let mut displaced = vec![Complex64::new(1.0, 0.0)];
    for (mode, &d) in env.grid.modes.iter().zip(&env.cutoffs) {
        if d == 1 {
            continue;
        }
        let u = mode_evolution_operator(mode, t, d)?.entries;
        let column: Vec<Complex64> = (0..d).map(|i| u[(i, 0)]).collect();
        displaced = displaced.iter().flat_map(|&a| column.iter().map(move |&c| a * c)).collect();
    }
    let dimension = displaced.len();
    let phase = Complex64::from_polar(1.0, qubit.energy_splitting * t / HBAR);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * dimension];
    amplitudes[0] = qubit.amplitude_0;
    for (slot, a) in amplitudes[dimension..].iter_mut().zip(&displaced) {
        *slot = qubit.amplitude_1 * phase * a;
    }
    Ok(PureJointState { amplitudes, time: t })
}

/// Partial transpose on the qubit: the two off-diagonal blocks trade places.
pub fn partial_transpose_qubit(state: &JointState) -> Mat<Complex64> {
    let d = state.env_dimension();
    let m = &state.matrix;
    Mat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, false) => m[(i + d, j - d)],
        (false, true) => m[(i - d, j + d)],
        _ => m[(i, j)],
    })
}

/// Writes the 16-byte header (magic, D as u64 LE) and then σ row by row as
/// little-endian (re, im) pairs.
pub fn write_state_dump<W: Write>(state: &JointState, mut out: W) -> Result<()> {
    let d = state.env_dimension() as u64;
    out.write_all(&DUMP_MAGIC)?;
    out.write_all(&d.to_le_bytes())?;
    let n = state.matrix.nrows();
    let mut row = Vec::with_capacity(n * 16);
    for i in 0..n {
        row.clear();
        for j in 0..n {
            let z = state.matrix[(i, j)];
            row.extend_from_slice(&z.re.to_le_bytes());
            row.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_state_dump`]; returns (D, matrix).
pub fn read_state_dump<R: Read>(mut input: R) -> Result<(usize, Mat<Complex64>)> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[..8] != DUMP_MAGIC {
        return Err(Error::Config("not a state dump (bad magic)".into()));
    }
    let d = u64::from_le_bytes(header[8..].try_into().expect("8-byte slice")) as usize;
    let n = 2 * d;
    let mut bytes = vec![0u8; n * n * 16];
    input.read_exact(&mut bytes)?;
    let f = |k: usize| f64::from_le_bytes(bytes[k * 8..k * 8 + 8].try_into().expect("8-byte slice"));
    let matrix = Mat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    });
    Ok((d, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_mode_grid, Kelvin, MaterialParams};

    fn env(n: usize, t: f64, cutoffs: Vec<usize>) -> Environment {
        let grid = build_mode_grid(0.001, 0.9, n, &MaterialParams::default()).unwrap();
        Environment::new(grid, Kelvin(t), cutoffs, 4096).unwrap()
    }

    #[test]
    fn pure_state_matches_density_matrix_at_zero_temperature() {
        let e = env(3, 0.0, vec![2, 5, 4]);
        let q = QubitParams::new(0.4, Complex64::new(0.6, 0.0), Complex64::from_polar(0.8, -0.9)).unwrap();
        let t = 0.8;
        let dense = assemble_joint_state(&evolve_blocks(&e, t).unwrap(), &q, t).unwrap();
        let pure = assemble_pure_state(&e, &q, t).unwrap();
        assert_eq!(pure.env_dimension(), 40);
        let outer = pure.to_joint_state();
        for j in 0..80 {
            for i in 0..80 {
                assert!((outer.matrix[(i, j)] - dense.matrix[(i, j)]).norm() < 1e-14);
            }
        }
        let (a, b) = (pure.qubit_reduced(), dense.qubit_reduced());
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((x - y).norm() < 1e-14);
        }
        assert!(assemble_pure_state(&env(2, 1.0, vec![1, 3]), &q, t).is_err());
    }

    #[test]
    fn blocks_at_time_zero_coincide() {
        let e = env(3, 6.0, vec![1, 4, 3]);
        let b = evolve_blocks(&e, 0.0).unwrap();
        assert_eq!(b.dimension, 12);
        for i in 0..12 {
            for j in 0..12 {
                assert!((b.r10[(i, j)] - b.r00[(i, j)]).norm() < 1e-15);
                assert!((b.r11[(i, j)] - b.r00[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn cold_single_mode_branch_is_coherent_projector() {
        let e = env(2, 0.0, vec![1, 12]);
        let t = 0.4;
        let b = evolve_blocks(&e, t).unwrap();
        let u = mode_evolution_operator(&e.grid.modes[1], t, 12).unwrap().entries;
        for i in 0..12 {
            for j in 0..12 {
                let want = u[(i, 0)] * u[(j, 0)].conj();
                assert!((b.r11[(i, j)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn trace_of_r10_is_product_of_mode_traces() {
        let e = env(3, 9.0, vec![1, 5, 4]);
        let t = 1.3;
        let b = evolve_blocks(&e, t).unwrap();
        let tr: Complex64 = (0..b.dimension).map(|i| b.r10[(i, i)]).sum();
        let mut want = Complex64::new(1.0, 0.0);
        for k in 1..3 {
            let d = e.cutoffs[k];
            let w = thermal_weights(e.grid.modes[k].omega, e.temperature, d).unwrap();
            let u = mode_evolution_operator(&e.grid.modes[k], t, d).unwrap().entries;
            want *= (0..d).map(|m| u[(m, m)] * w.weights[m]).sum::<Complex64>();
        }
        assert!((tr - want).norm() < 1e-14);
    }

    #[test]
    fn no_superposition_no_dynamics() {
        let e = env(3, 6.0, vec![1, 4, 3]);
        let q = QubitParams::new(1.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let b0 = evolve_blocks(&e, 0.0).unwrap();
        let s0 = assemble_joint_state(&b0, &q, 0.0).unwrap();
        let b = evolve_blocks(&e, 2.1).unwrap();
        let s = assemble_joint_state(&b, &q, 2.1).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                assert!((s.matrix[(i, j)] - s0.matrix[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let e = env(3, 6.0, vec![1, 3, 3]);
        let q = QubitParams::new(0.5, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        let s = assemble_joint_state(&evolve_blocks(&e, 0.9).unwrap(), &q, 0.9).unwrap();
        let once = JointState { matrix: partial_transpose_qubit(&s), ..s.clone() };
        let twice = partial_transpose_qubit(&once);
        assert_eq!(twice, s.matrix);
        assert!(hermiticity_deviation(&once.matrix) < 1e-15);
    }

    #[test]
    fn dump_round_trip() {
        let e = env(2, 6.0, vec![1, 3]);
        let q = QubitParams::equal_superposition();
        let s = assemble_joint_state(&evolve_blocks(&e, 0.7).unwrap(), &q, 0.7).unwrap();
        let mut buf = Vec::new();
        write_state_dump(&s, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"QESIG1\0\0");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 3);
        assert_eq!(buf.len(), 16 + 36 * 16);
        let first_re = f64::from_le_bytes(buf[16..24].try_into().unwrap());
        assert_eq!(first_re, s.matrix[(0, 0)].re);
        let (d, m) = read_state_dump(buf.as_slice()).unwrap();
        assert_eq!(d, 3);
        assert_eq!(m, s.matrix);
    }
}
