//! Two shared singlets, Alice's measurement in a rotated basis and what Bob's
//! qubits look like with and without a hypothetical perfect deleter.
//!
//! Particles are stored in the order 1, 2, 3, 4. Alice holds 1 and 3 (indices
//! 0 and 2), Bob holds 2 and 4 (indices 1 and 3). The rotated basis is
//! `ψ = cosθ|0> + sinθ|1>`, `ψ̄ = sinθ|0> − cosθ|1>`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_state, shape_err, Error, Result};
use crate::hilbert::{
    density_of, inner, partial_trace, tensor, trace_distance, DensityMatrix, Ket, SpaceShape, C64,
    ZERO,
};
use crate::machines::BasisActionMachine;

/// Outcomes with probability below this are reported as impossible.
pub const ZERO_PROBABILITY_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotated {
    Psi,
    PsiBar,
}

impl Rotated {
    pub const BOTH: [Rotated; 2] = [Rotated::Psi, Rotated::PsiBar];

    pub fn ket(self, theta: f64) -> Ket {
        let (s, c) = theta.sin_cos();
        match self {
            Rotated::Psi => Ket::qubit(C64::new(c, 0.0), C64::new(s, 0.0)),
            Rotated::PsiBar => Ket::qubit(C64::new(s, 0.0), C64::new(-c, 0.0)),
        }
    }
}

pub fn psi(theta: f64) -> Ket {
    Rotated::Psi.ket(theta)
}

pub fn psi_bar(theta: f64) -> Ket {
    Rotated::PsiBar.ket(theta)
}

/// `(|01> − |10>) / sqrt(2)`.
pub fn singlet() -> Ket {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Ket::new(
        SpaceShape::qubits(2).expect("two qubits"),
        vec![ZERO, h, -h, ZERO],
    )
    .expect("four amplitudes")
}

/// `|Ψ⁻>_12 |Ψ⁻>_34`.
pub fn two_singlets() -> Ket {
    tensor(&[singlet(), singlet()]).expect("valid shapes")
}

/// Coefficient of `|b1 b2 b3 b4>` in the rotated-basis expansion of the two
/// singlets: `±1/2` on the four terms where each pair is anti-aligned.
pub fn singlet_pattern(labels: [Rotated; 4]) -> f64 {
    use Rotated::*;
    match labels {
        [PsiBar, Psi, PsiBar, Psi] | [Psi, PsiBar, Psi, PsiBar] => 0.5,
        [PsiBar, Psi, Psi, PsiBar] | [Psi, PsiBar, PsiBar, Psi] => -0.5,
        _ => 0.0,
    }
}

fn all_labels() -> impl Iterator<Item = [Rotated; 4]> {
    (0..16).map(|i| {
        let pick = |bit: usize| {
            if i >> (3 - bit) & 1 == 0 {
                Rotated::Psi
            } else {
                Rotated::PsiBar
            }
        };
        [pick(0), pick(1), pick(2), pick(3)]
    })
}

/// Largest deviation of the rotated-basis coefficients of the two singlets
/// from [`singlet_pattern`].
pub fn basis_invariance_check(theta: f64) -> f64 {
    let state = two_singlets();
    all_labels()
        .map(|labels| {
            let product = tensor(&labels.map(|l| l.ket(theta))).expect("four qubits");
            let coeff = inner(&product, &state).expect("same shape");
            (coeff - C64::new(singlet_pattern(labels), 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Bob's normalized state on particles 2 and 4.
    pub post_state: Ket,
    pub probability: f64,
}

fn project_alice(state: &Ket, theta: f64, outcome: (Rotated, Rotated)) -> Result<Ket> {
    if state.shape().dims() != [2, 2, 2, 2] {
        return Err(shape_err!(
            "expected a four-qubit state, got {}",
            state.shape()
        ));
    }
    let (o1, o3) = (outcome.0.ket(theta), outcome.1.ket(theta));
    let shape = state.shape().clone();
    let mut amps = vec![ZERO; 4];
    for (idx, a) in state.amplitudes().iter().enumerate() {
        let d = shape.digits_of(idx);
        amps[d[1] * 2 + d[3]] += o1.amp(d[0]).conj() * o3.amp(d[2]).conj() * a;
    }
    Ket::new(SpaceShape::qubits(2)?, amps)
}

/// Probability that Alice finds particles 1 and 3 in `outcome`.
pub fn outcome_probability(state: &Ket, theta: f64, outcome: (Rotated, Rotated)) -> Result<f64> {
    Ok(project_alice(state, theta, outcome)?.norm_sqr())
}

/// Alice projects particles 1 and 3 onto `outcome`; returns Bob's conditional state.
pub fn alice_measure(state: &Ket, theta: f64, outcome: (Rotated, Rotated)) -> Result<Measurement> {
    let unnormalized = project_alice(state, theta, outcome)?;
    let probability = unnormalized.norm_sqr();
    if probability < ZERO_PROBABILITY_TOL {
        return Err(Error::ZeroProbability);
    }
    Ok(Measurement {
        post_state: unnormalized.normalized()?,
        probability,
    })
}

/// All outcomes with nonzero probability, in a fixed order.
fn branches(theta: f64) -> Result<Vec<((Rotated, Rotated), Measurement)>> {
    let state = two_singlets();
    let mut out = Vec::new();
    for a in Rotated::BOTH {
        for b in Rotated::BOTH {
            match alice_measure(&state, theta, (a, b)) {
                Ok(m) => out.push(((a, b), m)),
                Err(Error::ZeroProbability) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Ancilla states left by the perfect deleter: `A_ψ = |1>`, `A_ψ̄ = |2>`, start `|0>`.
fn deleter_ancilla(label: Option<Rotated>) -> Ket {
    let index = match label {
        None => 0,
        Some(Rotated::Psi) => 1,
        Some(Rotated::PsiBar) => 2,
    };
    Ket::basis(SpaceShape::new(vec![3]).expect("qutrit"), index).expect("in range")
}

/// The hypothetical deleter acting on one collapsed branch: if Bob holds the
/// same rotated state twice, the second copy becomes the blank `|0>`;
/// otherwise nothing changes. Bob's state must be a product of rotated basis
/// states. Output on `[2, 2, 3]` with the ancilla last.
pub fn perfect_delete_branch(bob: &Ket, theta: f64) -> Result<Ket> {
    for a in Rotated::BOTH {
        for b in Rotated::BOTH {
            let (ka, kb) = (a.ket(theta), b.ket(theta));
            let overlap = inner(&ka.tensor(&kb)?, bob)?;
            if (overlap.norm() - 1.0).abs() < 1e-10 {
                let blank = Ket::basis(SpaceShape::qubits(1)?, 0)?;
                return if a == b {
                    tensor(&[ka.scaled(overlap), blank, deleter_ancilla(Some(a))])
                } else {
                    bob.tensor(&deleter_ancilla(None))
                };
            }
        }
    }
    Err(invalid_state!(
        "Bob's state is not a product of rotated basis states"
    ))
}

/// Bob's qubits after Alice measures in basis `θ` and Bob applies the perfect
/// deleter to each branch, ancilla traced out.
pub fn bob_delete_and_reduce(theta: f64) -> Result<DensityMatrix> {
    let parts = branches(theta)?
        .into_iter()
        .map(|(_, m)| {
            let out = perfect_delete_branch(&m.post_state, theta)?;
            Ok((m.probability, partial_trace(&density_of(&out)?, &[0, 1])?))
        })
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture(&parts)
}

/// Bob's qubits after Alice measures in basis `θ`, with no operation by Bob.
pub fn bob_reduce_without_deletion(theta: f64) -> Result<DensityMatrix> {
    let parts = branches(theta)?
        .into_iter()
        .map(|(_, m)| Ok((m.probability, density_of(&m.post_state)?)))
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture(&parts)
}

/// Bob's qubits after Alice measures in basis `θ` and Bob applies a linear
/// machine on his two qubits plus an ancilla starting in basis state 0.
pub fn bob_apply_machine_and_reduce(
    theta: f64,
    machine: &BasisActionMachine,
) -> Result<DensityMatrix> {
    let dims = machine.input_shape().dims();
    if dims.len() != 3 || dims[0] != 2 || dims[1] != 2 {
        return Err(shape_err!(
            "machine input {} is not two qubits plus an ancilla",
            machine.input_shape()
        ));
    }
    let ancilla = Ket::basis(SpaceShape::new(vec![dims[2]])?, 0)?;
    let parts = branches(theta)?
        .into_iter()
        .map(|(_, m)| {
            let out = machine.apply(&m.post_state.tensor(&ancilla)?)?;
            Ok((m.probability, partial_trace(&density_of(&out)?, &[0, 1])?))
        })
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture(&parts)
}

/// `¼(ψψ†⊗ΣΣ† + ψ̄ψ̄†⊗ΣΣ† + ψψ†⊗ψ̄ψ̄† + ψ̄ψ̄†⊗ψψ†)` with `Σ = |0>`.
pub fn deleted_mixture_closed_form(theta: f64) -> Result<DensityMatrix> {
    let (p, pb) = (density_of(&psi(theta))?, density_of(&psi_bar(theta))?);
    let blank = density_of(&Ket::basis(SpaceShape::qubits(1)?, 0)?)?;
    DensityMatrix::mixture(&[
        (0.25, p.tensor(&blank)?),
        (0.25, pb.tensor(&blank)?),
        (0.25, p.tensor(&pb)?),
        (0.25, pb.tensor(&p)?),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignallingReport {
    pub theta_1: f64,
    pub theta_2: f64,
    pub rho_with_deletion: (DensityMatrix, DensityMatrix),
    pub rho_without_deletion: (DensityMatrix, DensityMatrix),
    pub distance_with: f64,
    pub distance_without: f64,
}

pub fn signalling_report(theta_1: f64, theta_2: f64) -> Result<SignallingReport> {
    let with = (
        bob_delete_and_reduce(theta_1)?,
        bob_delete_and_reduce(theta_2)?,
    );
    let without = (
        bob_reduce_without_deletion(theta_1)?,
        bob_reduce_without_deletion(theta_2)?,
    );
    Ok(SignallingReport {
        theta_1,
        theta_2,
        distance_with: trace_distance(&with.0, &with.1)?,
        distance_without: trace_distance(&without.0, &without.1)?,
        rho_with_deletion: with,
        rho_without_deletion: without,
    })
}

/// Trace distance between Bob's states for Alice's two basis choices.
pub fn signalling_distance(theta_1: f64, theta_2: f64, with_deletion: bool) -> Result<f64> {
    let reduce = if with_deletion {
        bob_delete_and_reduce
    } else {
        bob_reduce_without_deletion
    };
    trace_distance(&reduce(theta_1)?, &reduce(theta_2)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalPoint {
    pub theta: f64,
    pub trace_distance_vs_theta0: f64,
}

/// Distance of Bob's post-deletion state at `θ` from the one at `θ = 0`, for
/// `n_points` evenly spaced `θ ∈ [0, π]`.
pub fn signal_sweep(n_points: usize) -> Result<Vec<SignalPoint>> {
    if n_points < 2 {
        return Err(invalid_arg!("a sweep needs at least two points"));
    }
    let reference = bob_delete_and_reduce(0.0)?;
    (0..n_points)
        .map(|i| {
            let theta = PI * i as f64 / (n_points - 1) as f64;
            let rho = bob_delete_and_reduce(theta)?;
            Ok(SignalPoint {
                theta,
                trace_distance_vs_theta0: trace_distance(&reference, &rho)?,
            })
        })
        .collect()
}

/// Outcome probabilities keyed by Alice's result.
pub fn outcome_distribution(theta: f64) -> Result<BTreeMap<(Rotated, Rotated), f64>> {
    let state = two_singlets();
    let mut out = BTreeMap::new();
    for a in Rotated::BOTH {
        for b in Rotated::BOTH {
            out.insert((a, b), outcome_probability(&state, theta, (a, b))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::rng_for;
    use crate::hilbert::EIGEN_TOL;
    use crate::machines::{conditional_deleter, swap_deleter};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;
    use Rotated::*;

    fn diag4(d: [f64; 4]) -> DensityMatrix {
        let mat = nalgebra::DMatrix::from_fn(
            4,
            4,
            |i, j| if i == j { C64::new(d[i], 0.0) } else { ZERO },
        );
        DensityMatrix::new(SpaceShape::qubits(2).unwrap(), mat).unwrap()
    }

    #[test]
    fn singlets_layout() {
        let s = two_singlets();
        assert!(s.is_normalized(1e-15));
        // |0101> = |01>|01>: (1/√2)(1/√2)
        assert_abs_diff_eq!(s.amp(0b0101).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amp(0b0110).re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amp(0b1010).re, 0.5, epsilon = 1e-15);
        let rho24 = partial_trace(&density_of(&s).unwrap(), &[1, 3]).unwrap();
        assert!(rho24.max_deviation(&diag4([0.25; 4])).unwrap() < 1e-15);
    }

    #[test]
    fn rotated_expansion() {
        assert!(basis_invariance_check(0.0) < 1e-15);
        assert!(basis_invariance_check(FRAC_PI_4) < 1e-15);
        let mut rng = rng_for(0, "t", "inv");
        for _ in 0..50 {
            assert!(basis_invariance_check(rng.random_range(0.0..2.0 * PI)) < 1e-12);
        }
        assert_eq!(
            all_labels().filter(|l| singlet_pattern(*l) != 0.0).count(),
            4
        );
    }

    #[test]
    fn measurement_examples() {
        let s = two_singlets();
        for theta in [0.0, 0.3, 1.7] {
            let m = alice_measure(&s, theta, (Psi, Psi)).unwrap();
            assert_abs_diff_eq!(m.probability, 0.25, epsilon = 1e-15);
            let expected = psi_bar(theta).tensor(&psi_bar(theta)).unwrap();
            assert_abs_diff_eq!(
                inner(&expected, &m.post_state).unwrap().norm(),
                1.0,
                epsilon = 1e-14
            );
            let total: f64 = outcome_distribution(theta).unwrap().values().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
        let m = alice_measure(&s, 0.0, (PsiBar, Psi)).unwrap();
        let expected = Ket::basis(SpaceShape::qubits(2).unwrap(), 0b01).unwrap();
        assert_abs_diff_eq!(
            inner(&expected, &m.post_state).unwrap().norm(),
            1.0,
            epsilon = 1e-15
        );

        // a product state has impossible outcomes
        let zeros = Ket::basis(SpaceShape::qubits(4).unwrap(), 0).unwrap();
        assert_eq!(
            alice_measure(&zeros, 0.0, (PsiBar, Psi)),
            Err(Error::ZeroProbability)
        );
        assert_eq!(
            outcome_probability(&zeros, 0.0, (PsiBar, Psi)).unwrap(),
            0.0
        );
        assert!(alice_measure(&singlet(), 0.0, (Psi, Psi)).is_err());
    }

    #[test]
    fn deletion_at_theta_zero() {
        // ψ = |0>, ψ̄ = −|1>, Σ = |0>: ¼(|00> + |10> + |01> + |10>) with qubit 2 leftmost
        let rho = bob_delete_and_reduce(0.0).unwrap();
        assert!(rho.max_deviation(&diag4([0.25, 0.25, 0.5, 0.0])).unwrap() < 1e-15);
    }

    #[test]
    fn pipeline_matches_closed_form() {
        let rho = bob_delete_and_reduce(PI / 3.0).unwrap();
        assert!(
            rho.max_deviation(&deleted_mixture_closed_form(PI / 3.0).unwrap())
                .unwrap()
                < 1e-12
        );
        let mut rng = rng_for(1, "t", "closed_form");
        for _ in 0..50 {
            let theta = rng.random_range(0.0..2.0 * PI);
            let rho = bob_delete_and_reduce(theta).unwrap();
            assert!(
                rho.max_deviation(&deleted_mixture_closed_form(theta).unwrap())
                    .unwrap()
                    < 1e-12
            );
            assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
            assert!(rho.hermiticity_deviation() < 1e-12);
            assert!(rho.eigenvalues()[0] > -EIGEN_TOL);
        }
    }

    #[test]
    fn distances() {
        assert!(signalling_distance(0.7, 0.7, true).unwrap() < 1e-15);
        assert!(signalling_distance(0.0, FRAC_PI_4, false).unwrap() < 1e-12);
        assert!(signalling_distance(0.0, FRAC_PI_4, true).unwrap() > 0.05);
        let mut rng = rng_for(2, "t", "nosig");
        for _ in 0..50 {
            let (a, b) = (
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            );
            assert!(signalling_distance(a, b, false).unwrap() < 1e-12);
        }
        let r = signalling_report(0.0, FRAC_PI_4).unwrap();
        assert!(r.distance_without < 1e-10);
        assert_abs_diff_eq!(
            r.distance_with,
            signalling_distance(0.0, FRAC_PI_4, true).unwrap(),
            epsilon = 0.0
        );
    }

    #[test]
    fn legal_machines_cannot_signal() {
        let machines = [swap_deleter(2).unwrap(), conditional_deleter()];
        let mut rng = rng_for(3, "t", "legal");
        for m in &machines {
            let reference = bob_apply_machine_and_reduce(0.0, m).unwrap();
            for _ in 0..10 {
                let rho = bob_apply_machine_and_reduce(rng.random_range(0.0..2.0 * PI), m).unwrap();
                assert!(trace_distance(&reference, &rho).unwrap() < 1e-12);
            }
        }
        assert!(bob_apply_machine_and_reduce(0.0, &swap_deleter(3).unwrap()).is_err());
    }

    #[test]
    fn periodic_and_continuous() {
        let a = bob_delete_and_reduce(0.4).unwrap();
        let b = bob_delete_and_reduce(0.4 + 2.0 * PI).unwrap();
        assert!(trace_distance(&a, &b).unwrap() < 1e-12);
        let step = PI / 100.0;
        let mut prev = bob_delete_and_reduce(0.0).unwrap();
        for i in 1..=200 {
            let rho = bob_delete_and_reduce(i as f64 * step).unwrap();
            assert!(trace_distance(&prev, &rho).unwrap() < 0.1);
            prev = rho;
        }
    }

    #[test]
    fn sweep() {
        let s = signal_sweep(5).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0].trace_distance_vs_theta0, 0.0);
        assert!(s[4].trace_distance_vs_theta0 < 1e-12);
        assert!(s[1].trace_distance_vs_theta0 > 0.05);
        assert!(signal_sweep(1).is_err());
    }
}
