//! N-to-M deletion of identical qubits: symmetric-subspace expansion, ideal
//! and actual machine outputs, the quality bound and its optimum.
//!
//! Ideal and actual outputs share one representation, a `[N+1, 3]` space. The
//! first factor is a register: index `j ≤ M` stands for the M-copy Dicke
//! state `|j>` followed by `N−M` blanks, and indices `M+1..=N` hold the
//! leftover symmetric states `|k'>` with `k ≥ M`. The second factor is the
//! ancilla. `|A_Ψ> = |0>`, and the deleted-branch ancillas are
//! `|A_0> = c|0> + s|1>`, `|A_1> = c|0> + s|2>` with `c` the ancilla overlap.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_state, Result};
use crate::hilbert::{inner, Ket, SpaceShape, ALGEBRAIC_TOL, C64, ZERO};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_qubit(alpha: C64, beta: C64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(invalid_state!("|alpha|² + |beta|² = {norm}"));
    }
    Ok(())
}

fn check_copies(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid_arg!("need 1 <= M <= N, got N = {n}, M = {m}"));
    }
    Ok(())
}

/// `N` copies of `α|0> + β|1>` in the Dicke basis of the symmetric subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricState {
    pub n_copies: usize,
    pub alpha: C64,
    pub beta: C64,
    /// Entry `k` multiplies the normalized Dicke state with `k` ones.
    pub coefficients: Vec<C64>,
}

/// Coefficients `sqrt(C(N,k)) α^{N−k} β^k`, `k = 0..=N`.
pub fn symmetric_expand(alpha: C64, beta: C64, n: usize) -> Result<SymmetricState> {
    check_qubit(alpha, beta)?;
    if n == 0 {
        return Err(invalid_arg!("need at least one copy"));
    }
    let coefficients = (0..=n)
        .map(|k| alpha.powu((n - k) as u32) * beta.powu(k as u32) * binomial(n, k).sqrt())
        .collect();
    Ok(SymmetricState {
        n_copies: n,
        alpha,
        beta,
        coefficients,
    })
}

impl SymmetricState {
    /// Embedding into the full `2^N` product space.
    pub fn to_product_ket(&self) -> Result<Ket> {
        let n = self.n_copies;
        let shape = SpaceShape::qubits(n)?;
        let amps = (0..shape.total())
            .map(|idx| {
                let k = idx.count_ones() as usize;
                self.coefficients[k] / binomial(n, k).sqrt()
            })
            .collect();
        Ket::new(shape, amps)
    }
}

/// Normalized Dicke state of `n` qubits with `k` ones.
pub fn dicke_ket(n: usize, k: usize) -> Result<Ket> {
    if k > n {
        return Err(invalid_arg!("Dicke state with {k} ones on {n} qubits"));
    }
    let shape = SpaceShape::qubits(n)?;
    let amp = C64::new(1.0 / binomial(n, k).sqrt(), 0.0);
    let amps = (0..shape.total())
        .map(|i| {
            if i.count_ones() as usize == k {
                amp
            } else {
                ZERO
            }
        })
        .collect();
    Ket::new(shape, amps)
}

fn register_shape(n: usize) -> Result<SpaceShape> {
    SpaceShape::new(vec![n + 1, 3])
}

/// `|Ψ>^{⊗M} |Σ>^{⊗(N−M)} |A_Ψ>` in the register representation.
pub fn ideal_delete_output(alpha: C64, beta: C64, n: usize, m: usize) -> Result<Ket> {
    check_copies(n, m)?;
    let g = symmetric_expand(alpha, beta, m)?;
    let shape = register_shape(n)?;
    let mut amps = vec![ZERO; shape.total()];
    for (j, gj) in g.coefficients.iter().enumerate() {
        amps[shape.index_of(&[j, 0])?] = *gj;
    }
    Ket::new(shape, amps)
}

/// Output of the N-to-M deleter that maps `|0>^N` and `|1>^N` to the deleted
/// basis states (ancillas `|A_0>`, `|A_1>`) and the other Dicke states `|k>`
/// to fixed orthonormal `|k'>`. `ancilla_overlap = <A_0|A_Ψ> = <A_1|A_Ψ>`.
pub fn actual_delete_output(
    alpha: C64,
    beta: C64,
    n: usize,
    m: usize,
    ancilla_overlap: f64,
) -> Result<Ket> {
    check_copies(n, m)?;
    if !(0.0..=1.0).contains(&ancilla_overlap) {
        return Err(invalid_arg!(
            "ancilla overlap {ancilla_overlap} outside [0, 1]"
        ));
    }
    let f = symmetric_expand(alpha, beta, n)?;
    let shape = register_shape(n)?;
    let (c, s) = (
        ancilla_overlap,
        (1.0 - ancilla_overlap * ancilla_overlap).sqrt(),
    );
    let mut amps = vec![ZERO; shape.total()];
    let mut put = |reg: usize, anc: usize, v: C64| -> Result<()> {
        amps[shape.index_of(&[reg, anc])?] += v;
        Ok(())
    };
    put(0, 0, f.coefficients[0] * c)?;
    put(0, 1, f.coefficients[0] * s)?;
    put(m, 0, f.coefficients[n] * c)?;
    put(m, 2, f.coefficients[n] * s)?;
    for k in 1..n {
        let reg = if k < m { k } else { k + 1 };
        put(reg, 0, f.coefficients[k])?;
    }
    Ket::new(register_shape(n)?, amps)
}

/// `|<Ψ_actual|Ψ_ideal>|`.
pub fn deletion_quality(
    alpha: C64,
    beta: C64,
    n: usize,
    m: usize,
    ancilla_overlap: f64,
) -> Result<f64> {
    let actual = actual_delete_output(alpha, beta, n, m, ancilla_overlap)?;
    let ideal = ideal_delete_output(alpha, beta, n, m)?;
    Ok(inner(&actual, &ideal)?.norm())
}

/// Upper bound on the deletion quality as a function of `|α|²`:
/// `|α|^{N+M} + |β|^{N+M} + sqrt(1 − |α|^{2N} − |β|^{2N}) sqrt(1 − |α|^{2M} − |β|^{2M})`.
pub fn quality_bound(alpha_sq: f64, n: usize, m: usize) -> Result<f64> {
    check_copies(n, m)?;
    if !(0.0..=1.0).contains(&alpha_sq) {
        return Err(invalid_arg!("alpha_sq {alpha_sq} outside [0, 1]"));
    }
    Ok(bound_unchecked(alpha_sq, n, m))
}

fn bound_unchecked(alpha_sq: f64, n: usize, m: usize) -> f64 {
    let beta_sq = 1.0 - alpha_sq;
    let half = (n + m) as f64 / 2.0;
    let spread = |p: usize| {
        (1.0 - (alpha_sq.powi(p as i32) + beta_sq.powi(p as i32)))
            .max(0.0)
            .sqrt()
    };
    alpha_sq.powf(half) + beta_sq.powf(half) + spread(n) * spread(m)
}

/// Closed-form optimum `2 / 2^{(N+M)/2} + sqrt((1 − 2/2^N)(1 − 2/2^M))`.
pub fn optimal_quality_formula(n: usize, m: usize) -> Result<f64> {
    check_copies(n, m)?;
    let (nf, mf) = (n as f64, m as f64);
    let spread = ((1.0 - 2.0 / 2f64.powf(nf)) * (1.0 - 2.0 / 2f64.powf(mf))).max(0.0);
    Ok(2.0 / 2f64.powf((nf + mf) / 2.0) + spread.sqrt())
}

/// `E = 1 − Q`.
pub fn deletion_error(quality: f64) -> f64 {
    1.0 - quality
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n: usize,
    pub m: usize,
    /// `(|α|², bound)` at 101 evenly spaced points.
    pub bound_curve: Vec<(f64, f64)>,
    pub min_bound: f64,
    pub argmin_alpha_sq: f64,
    pub formula_value: f64,
    pub agreement: f64,
}

pub const DEFAULT_GRID_STEP: f64 = 1e-4;
const REFINE_TOL: f64 = 1e-10;

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimum of [`quality_bound`] over `|α|²` on a grid with the given step,
/// refined by golden section around the best grid point.
pub fn minimize_bound(n: usize, m: usize, grid_step: f64) -> Result<(f64, f64)> {
    check_copies(n, m)?;
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(invalid_arg!("grid step {grid_step} outside (0, 1)"));
    }
    let points = (1.0 / grid_step).round() as usize;
    let (best_i, best_v) = (0..=points)
        .map(|i| (i, bound_unchecked(i as f64 / points as f64, n, m)))
        .fold(
            (0, f64::INFINITY),
            |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
        );
    let lo = best_i.saturating_sub(1) as f64 / points as f64;
    let hi = (best_i + 1).min(points) as f64 / points as f64;
    let (x, v) = golden_section(|x| bound_unchecked(x, n, m), lo, hi, REFINE_TOL);
    Ok(if v < best_v {
        (x, v)
    } else {
        (best_i as f64 / points as f64, best_v)
    })
}

/// Closed-form optimum together with the numerically minimized bound.
pub fn optimal_quality(n: usize, m: usize) -> Result<QualityReport> {
    optimal_quality_with_step(n, m, DEFAULT_GRID_STEP)
}

pub fn optimal_quality_with_step(n: usize, m: usize, grid_step: f64) -> Result<QualityReport> {
    let formula_value = optimal_quality_formula(n, m)?;
    let (argmin_alpha_sq, min_bound) = minimize_bound(n, m, grid_step)?;
    let bound_curve = bound_curve(n, m, 101)?;
    Ok(QualityReport {
        n,
        m,
        bound_curve,
        min_bound,
        argmin_alpha_sq,
        formula_value,
        agreement: (min_bound - formula_value).abs(),
    })
}

/// `points` evenly spaced samples of the bound over `|α|² ∈ [0, 1]`.
pub fn bound_curve(n: usize, m: usize, points: usize) -> Result<Vec<(f64, f64)>> {
    check_copies(n, m)?;
    if points < 2 {
        return Err(invalid_arg!("a curve needs at least two points"));
    }
    Ok((0..points)
        .map(|i| {
            let x = i as f64 / (points - 1) as f64;
            (x, bound_unchecked(x, n, m))
        })
        .collect())
}
