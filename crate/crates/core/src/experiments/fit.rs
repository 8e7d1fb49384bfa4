//! Least-squares fit of N_max(n, T) ≈ e^{−αT} A / (T (n − BT + CT² + D))
//! and the power-law exponent of N_max in n.

use std::collections::BTreeSet;

use serde::Serialize;

use super::sweep::SweepRecord;
use crate::error::{Error, Result};

/// Records below this temperature are left out of the surface fit.
pub const FIT_MIN_TEMPERATURE: f64 = 4.0;

/// Published surface parameters (α, A, B, C, D), used to seed the fit.
pub const REFERENCE_PARAMS: [f64; 5] = [0.0857, 3.51, 0.4674, 0.01865, 2.57];

/// One (n, T, N_max) sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitPoint {
    pub n: usize,
    pub temperature: f64,
    pub value: f64,
}

impl From<&SweepRecord> for FitPoint {
    fn from(r: &SweepRecord) -> Self {
        Self { n: r.n, temperature: r.temperature.0, value: r.n_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitParams {
    pub alpha_exp: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub sse: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl FitParams {
    pub fn from_vector(p: [f64; 5]) -> Self {
        Self { alpha_exp: p[0], a: p[1], b: p[2], c: p[3], d: p[4], sse: 0.0, r_squared: 1.0, points: 0 }
    }

    pub fn vector(&self) -> [f64; 5] {
        [self.alpha_exp, self.a, self.b, self.c, self.d]
    }

    pub fn predict(&self, n: usize, temperature: f64) -> f64 {
        surface(&self.vector(), n as f64, temperature)
    }

    /// D − BT + CT²: the shift of n in the denominator at temperature T.
    pub fn size_offset(&self, temperature: f64) -> f64 {
        self.d - self.b * temperature + self.c * temperature * temperature
    }
}

fn surface(p: &[f64; 5], n: f64, t: f64) -> f64 {
    let [alpha, a, b, c, d] = *p;
    (-alpha * t).exp() * a / (t * (n - b * t + c * t * t + d))
}

fn sse(p: &[f64; 5], points: &[FitPoint]) -> f64 {
    let mut total = 0.0;
    for q in points {
        let denominator = q.n as f64 - p[2] * q.temperature + p[3] * q.temperature * q.temperature + p[4];
        if !(denominator > 0.0) {
            return f64::INFINITY;
        }
        let r = surface(p, q.n as f64, q.temperature) - q.value;
        total += r * r;
    }
    if total.is_finite() { total } else { f64::INFINITY }
}

/// Derivative-free simplex minimization from `start`.
fn nelder_mead<F: Fn(&[f64; 5]) -> f64>(f: &F, start: [f64; 5], max_evals: usize) -> ([f64; 5], f64) {
    const N: usize = 5;
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, f(&start)));
    for i in 0..N {
        let mut x = start;
        x[i] += if x[i] == 0.0 { 0.01 } else { 0.1 * x[i] };
        simplex.push((x, f(&x)));
    }
    let mut evals = N + 1;
    let combine = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + t * (b[i] - a[i])) };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[N].1);
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs() / b.abs().max(1e-8)))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= 1e-30 + 1e-15 * best.abs() && size < 1e-12 {
            break;
        }
        let centroid: [f64; N] = std::array::from_fn(|i| simplex[..N].iter().map(|(x, _)| x[i]).sum::<f64>() / N as f64);
        let reflected = combine(&centroid, &simplex[N].0, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &simplex[N].0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
        } else {
            let (toward, ft) = if fr < simplex[N].1 { (reflected, fr) } else { (simplex[N].0, simplex[N].1) };
            let contracted = combine(&centroid, &toward, 0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < ft {
                simplex[N] = (contracted, fc);
            } else {
                let anchor = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    vertex.0 = combine(&anchor, &vertex.0, 0.5);
                    vertex.1 = f(&vertex.0);
                }
                evals += N;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

fn starts() -> [[f64; 5]; 5] {
    let scaled = |s: [f64; 5]| -> [f64; 5] { std::array::from_fn(|i| REFERENCE_PARAMS[i] * s[i]) };
    [
        scaled([1.1, 0.9, 1.1, 0.9, 1.1]),
        scaled([0.9, 1.1, 0.9, 1.1, 0.9]),
        scaled([1.25, 1.25, 0.75, 0.75, 1.0]),
        [0.05, 1.0, 0.1, 0.01, 1.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
    ]
}

/// Fits the five surface parameters to `points` (all of them; no
/// temperature filter).
pub fn fit_points(points: &[FitPoint]) -> Result<FitParams> {
    let temps: BTreeSet<u64> = points.iter().map(|p| p.temperature.to_bits()).collect();
    let sizes: BTreeSet<usize> = points.iter().map(|p| p.n).collect();
    if points.len() < 8 || temps.len() < 2 || sizes.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "need >= 8 points over >= 2 temperatures and >= 3 mode counts, got {} points, {} temperatures, {} mode counts",
            points.len(),
            temps.len(),
            sizes.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.value.is_finite() && p.value > 0.0 && p.temperature > 0.0)) {
        return Err(Error::DegenerateData(format!("unusable point {p:?}")));
    }
    let mean = points.iter().map(|p| p.value).sum::<f64>() / points.len() as f64;
    let total: f64 = points.iter().map(|p| (p.value - mean).powi(2)).sum();
    if total <= 1e-30 * mean * mean * points.len() as f64 {
        return Err(Error::DegenerateData("all values are equal".into()));
    }

    let objective = |p: &[f64; 5]| sse(p, points);
    let mut best = ([0.0; 5], f64::INFINITY);
    for start in starts() {
        let mut current = (start, objective(&start));
        if !current.1.is_finite() {
            continue;
        }
        // Restarting from the best vertex undoes simplex collapse.
        for _ in 0..6 {
            let next = nelder_mead(&objective, current.0, 20_000);
            let improved = next.1 < current.1 * (1.0 - 1e-12);
            current = next;
            if !improved {
                break;
            }
        }
        if current.1 < best.1 {
            best = current;
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Numerical("no start gave a finite residual".into()));
    }
    let [alpha_exp, a, b, c, d] = best.0;
    Ok(FitParams { alpha_exp, a, b, c, d, sse: best.1, r_squared: 1.0 - best.1 / total, points: points.len() })
}

/// Fits the surface to sweep records at T ≥ 4 K that carry a maximum.
pub fn fit_negativity_surface(records: &[SweepRecord]) -> Result<FitParams> {
    let points: Vec<FitPoint> = records
        .iter()
        .filter(|r| r.temperature.0 >= FIT_MIN_TEMPERATURE && !r.degenerate)
        .map(FitPoint::from)
        .collect();
    fit_points(&points)
}

/// Least-squares slope of ln N_max against ln(n + offset) at one temperature.
pub fn power_law_exponent(points: &[FitPoint], offset: f64) -> Result<f64> {
    let sizes: BTreeSet<usize> = points.iter().map(|p| p.n).collect();
    if sizes.len() < 4 {
        return Err(Error::DegenerateData(format!("need >= 4 mode counts, got {}", sizes.len())));
    }
    if points.iter().any(|p| p.temperature != points[0].temperature) {
        return Err(Error::DegenerateData("points span more than one temperature".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.value > 0.0) || !(p.n as f64 + offset > 0.0)) {
        return Err(Error::DegenerateData(format!("cannot take logarithms of {p:?} with offset {offset}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64 + offset).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let len = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / len, ys.iter().sum::<f64>() / len);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
