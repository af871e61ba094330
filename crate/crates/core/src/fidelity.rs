//! Fidelities of the conditional deleter and their Bloch-sphere averages.
//!
//! Mode `a` is the first qubit, which should keep its state; mode `b` is the
//! second, which should end in the blank `|Σ> = |0>`. Every density matrix on
//! the default path comes from applying [`conditional_deleter`] and tracing
//! out; the `*_closed_form` functions are the reference expressions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_state, Result};
use crate::hilbert::{
    density_of, partial_trace, state_fidelity, tensor, DensityMatrix, Ket, SpaceShape,
    ALGEBRAIC_TOL, C64, ONE,
};
use crate::machines::conditional_deleter;

/// Closed-form Bloch average of `F_b`.
pub const AVG_F_B: f64 = 5.0 / 6.0;
/// Closed-form Bloch average of `F_a`.
pub const AVG_F_A: f64 = 2.0 / 3.0;

/// Smallest grid accepted by the averaging routines along either axis.
pub const MIN_GRID: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FidelityMode {
    A,
    B,
}

fn check_qubit(alpha: C64, beta: C64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(invalid_state!("|alpha|² + |beta|² = {norm}"));
    }
    Ok(())
}

fn basis(dim: usize, i: usize) -> Ket {
    Ket::basis(SpaceShape::new(vec![dim]).expect("dim >= 2"), i).expect("index in range")
}

fn blank() -> Ket {
    basis(2, 0)
}

/// Conditional deleter applied to `|Ψ>|Ψ>|A>`.
pub fn conditional_output(alpha: C64, beta: C64) -> Result<Ket> {
    check_qubit(alpha, beta)?;
    let psi = Ket::qubit(alpha, beta);
    let input = tensor(&[psi.clone(), psi, basis(3, 0)])?;
    conditional_deleter().apply(&input)
}

/// `α²|0>|Σ>|A_0> + β²|1>|Σ>|A_1> + αβ(|01> + |10>)|A>`, assembled term by term.
pub fn conditional_output_closed_form(alpha: C64, beta: C64) -> Result<Ket> {
    check_qubit(alpha, beta)?;
    let (q0, q1, s) = (basis(2, 0), basis(2, 1), blank());
    let t0 = tensor(&[q0.clone(), s.clone(), basis(3, 1)])?;
    let t1 = tensor(&[q1.clone(), s, basis(3, 2)])?;
    let t01 = tensor(&[q0.clone(), q1.clone(), basis(3, 0)])?;
    let t10 = tensor(&[q1, q0, basis(3, 0)])?;
    t0.combine(alpha * alpha, &t1, beta * beta)?
        .combine(ONE, &t01, alpha * beta)?
        .combine(ONE, &t10, alpha * beta)
}

/// Reduced state of the two qubits, ancilla traced out.
pub fn rho_ab(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    partial_trace(&density_of(&conditional_output(alpha, beta)?)?, &[0, 1])
}

/// Reduced state of mode `b`, traced down from [`rho_ab`].
pub fn rho_b(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    partial_trace(&rho_ab(alpha, beta)?, &[1])
}

/// Reduced state of mode `a`, traced down from [`rho_ab`].
pub fn rho_a(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    partial_trace(&rho_ab(alpha, beta)?, &[0])
}

/// `|α|⁴|0Σ><0Σ| + |β|⁴|1Σ><1Σ| + 2|α|²|β|²|ψ⁺><ψ⁺|`.
pub fn rho_ab_closed_form(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    check_qubit(alpha, beta)?;
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let (q0, q1, s) = (basis(2, 0), basis(2, 1), blank());
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi_plus =
        tensor(&[q0.clone(), q1.clone()])?.combine(h, &tensor(&[q1.clone(), q0.clone()])?, h)?;
    let parts = [
        (a2 * a2, density_of(&q0.tensor(&s)?)?),
        (b2 * b2, density_of(&q1.tensor(&s)?)?),
        (2.0 * a2 * b2, density_of(&psi_plus)?),
    ];
    DensityMatrix::mixture(&parts)
}

/// `(1 − 2|α|²|β|²)|Σ><Σ| + |α|²|β|² I`.
pub fn rho_b_closed_form(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    check_qubit(alpha, beta)?;
    let p = alpha.norm_sqr() * beta.norm_sqr();
    let identity = DensityMatrix::maximally_mixed(SpaceShape::qubits(1)?);
    DensityMatrix::mixture(&[(1.0 - 2.0 * p, density_of(&blank())?), (2.0 * p, identity)])
}

/// `|α|⁴|0><0| + |β|⁴|1><1| + |α|²|β|² I`.
pub fn rho_a_closed_form(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    check_qubit(alpha, beta)?;
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let identity = DensityMatrix::maximally_mixed(SpaceShape::qubits(1)?);
    DensityMatrix::mixture(&[
        (a2 * a2, density_of(&basis(2, 0))?),
        (b2 * b2, density_of(&basis(2, 1))?),
        (2.0 * a2 * b2, identity),
    ])
}

/// `<Σ|ρ_b|Σ>` through the full pipeline.
pub fn f_b(alpha: C64, beta: C64) -> Result<f64> {
    state_fidelity(&rho_b(alpha, beta)?, &blank())
}

/// `<Ψ|ρ_a|Ψ>` through the full pipeline.
pub fn f_a(alpha: C64, beta: C64) -> Result<f64> {
    state_fidelity(&rho_a(alpha, beta)?, &Ket::qubit(alpha, beta))
}

pub fn fidelity(mode: FidelityMode, alpha: C64, beta: C64) -> Result<f64> {
    match mode {
        FidelityMode::A => f_a(alpha, beta),
        FidelityMode::B => f_b(alpha, beta),
    }
}

/// `1 − |α|²|β|²` as a function of `|α|²`.
pub fn f_b_closed_form(alpha_sq: f64) -> f64 {
    1.0 - alpha_sq * (1.0 - alpha_sq)
}

/// `1 − 2|α|²|β|²` as a function of `|α|²`.
pub fn f_a_closed_form(alpha_sq: f64) -> f64 {
    1.0 - 2.0 * alpha_sq * (1.0 - alpha_sq)
}

/// Sum with a balanced binary tree so the result does not depend on how the
/// terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(invalid_arg!("Gauss-Legendre rule needs at least one node"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok((nodes, weights))
}

fn check_grid(n: usize, axis: &str) -> Result<()> {
    if n < MIN_GRID {
        return Err(invalid_arg!(
            "{axis} grid {n} is below the minimum of {MIN_GRID}"
        ));
    }
    Ok(())
}

fn state_at(u: f64, phi: f64) -> (C64, C64) {
    // u = cosθ, so cos(θ/2) = sqrt((1+u)/2)
    let a = ((1.0 + u) / 2.0).max(0.0).sqrt();
    let b = ((1.0 - u) / 2.0).max(0.0).sqrt();
    (C64::new(a, 0.0), C64::from_polar(b, phi))
}

/// Average of the mode fidelity over the Bloch sphere with measure
/// `sinθ dθ dφ / 4π`: Gauss–Legendre in `cosθ`, midpoint rule in `φ`.
pub fn average_fidelity(mode: FidelityMode, n_theta: usize, n_phi: usize) -> Result<f64> {
    check_grid(n_theta, "theta")?;
    check_grid(n_phi, "phi")?;
    let (nodes, weights) = gauss_legendre(n_theta)?;
    let mut terms = Vec::with_capacity(n_theta * n_phi);
    for (u, w) in nodes.iter().zip(&weights) {
        for j in 0..n_phi {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
            let (alpha, beta) = state_at(*u, phi);
            terms.push(w / (2.0 * n_phi as f64) * fidelity(mode, alpha, beta)?);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Same average using only the `θ` integral, valid because both fidelities
/// depend on `|α|²` alone.
pub fn average_fidelity_1d(mode: FidelityMode, n_theta: usize) -> Result<f64> {
    check_grid(n_theta, "theta")?;
    let (nodes, weights) = gauss_legendre(n_theta)?;
    let terms = nodes
        .iter()
        .zip(&weights)
        .map(|(u, w)| {
            let (alpha, beta) = state_at(*u, 0.0);
            Ok(w / 2.0 * fidelity(mode, alpha, beta)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub alpha_sq: f64,
    pub f_b: f64,
    pub f_a: f64,
    pub avg_f_b: f64,
    pub avg_f_a: f64,
    /// Largest deviation of the two quadrature averages from 5/6 and 2/3.
    pub quadrature_error: f64,
}

fn real_state(alpha_sq: f64) -> Result<(C64, C64)> {
    if !(0.0..=1.0).contains(&alpha_sq) {
        return Err(invalid_arg!("alpha_sq {alpha_sq} outside [0, 1]"));
    }
    Ok((
        C64::new(alpha_sq.sqrt(), 0.0),
        C64::new((1.0 - alpha_sq).sqrt(), 0.0),
    ))
}

/// Point fidelities at real amplitudes `α = sqrt(alpha_sq)` together with the
/// Bloch averages on an `n_theta × n_phi` grid.
pub fn fidelity_report(alpha_sq: f64, n_theta: usize, n_phi: usize) -> Result<FidelityReport> {
    let (alpha, beta) = real_state(alpha_sq)?;
    let avg_f_b = average_fidelity(FidelityMode::B, n_theta, n_phi)?;
    let avg_f_a = average_fidelity(FidelityMode::A, n_theta, n_phi)?;
    Ok(FidelityReport {
        alpha_sq,
        f_b: f_b(alpha, beta)?,
        f_a: f_a(alpha, beta)?,
        avg_f_b,
        avg_f_a,
        quadrature_error: (avg_f_b - AVG_F_B).abs().max((avg_f_a - AVG_F_A).abs()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub alpha_sq: f64,
    pub f_a: f64,
    pub f_b: f64,
}

/// `(|α|², F_a, F_b)` at `points` evenly spaced values of `|α|²`.
pub fn fidelity_sweep(points: usize) -> Result<Vec<FidelityPoint>> {
    if points < 2 {
        return Err(invalid_arg!("a sweep needs at least two points"));
    }
    (0..points)
        .map(|i| {
            let alpha_sq = i as f64 / (points - 1) as f64;
            let (alpha, beta) = real_state(alpha_sq)?;
            Ok(FidelityPoint {
                alpha_sq,
                f_a: f_a(alpha, beta)?,
                f_b: f_b(alpha, beta)?,
            })
        })
        .collect()
}

/// Lowest `F_b` over all input states, reached on the equator.
pub fn worst_case_f_b() -> f64 {
    f_b_closed_form(0.5)
}
