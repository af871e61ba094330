//! Inner-product obstruction to deleting copies of non-orthogonal states.
//!
//! A 2-to-1 deleter on the alphabet `{Ψ1, Ψ2}` without ancilla is asked to
//! follow four rules:
//!
//! 1. `Ψ1Ψ1 → Ψ1Σ`
//! 2. `Ψ2Ψ2 → Ψ2Σ`
//! 3. `Ψ1Ψ2 → Ψ1Ψ2`
//! 4. `Ψ2Ψ1 → Ψ2Ψ1`
//!
//! Unitarity forces every pair of rules to preserve the inner product. Five of
//! the pairs give the constraints below, each stated after cancelling common
//! factors.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, shape_err, Result};
use crate::hilbert::{inner, tensor, Ket, SpaceShape, C64};
use crate::machines::{BasisActionMachine, IsometryReport};

/// Residual threshold below which a constraint counts as satisfied.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    /// The two rules (numbered 1 to 4) whose inner products give this constraint.
    pub rules: (usize, usize),
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `<Ψ1|Ψ2>`.
    pub overlap_s: C64,
    pub constraints: Vec<Constraint>,
    pub max_residual: f64,
    pub satisfiable: bool,
    /// No non-trivial alphabet satisfies the constraints: either they fail, or
    /// `Ψ1`, `Ψ2` and `Σ` coincide up to phase.
    pub trivial_only: bool,
}

impl ConstraintReport {
    pub fn constraint(&self, label: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.label == label)
    }
}

fn require_qubit(k: &Ket, what: &str) -> Result<()> {
    if k.shape().dims() != [2] {
        return Err(shape_err!(
            "{what} must be a single qubit, got shape {}",
            k.shape()
        ));
    }
    k.require_normalized(what)
}

fn same_ray(a: &Ket, b: &Ket) -> Result<bool> {
    Ok((1.0 - inner(a, b)?.norm()).abs() < CONSTRAINT_TOL)
}

/// Evaluates the five constraints for the alphabet `{psi1, psi2}` and blank `sigma`.
pub fn nonorthogonal_constraints(psi1: &Ket, psi2: &Ket, sigma: &Ket) -> Result<ConstraintReport> {
    require_qubit(psi1, "psi1")?;
    require_qubit(psi2, "psi2")?;
    require_qubit(sigma, "sigma")?;
    let s = inner(psi1, psi2)?;
    let sigma_psi1 = inner(sigma, psi1)?;
    let sigma_psi2 = inner(sigma, psi2)?;
    let one = C64::new(1.0, 0.0);
    let entries = [
        ("<Psi1|Psi2>^2 = <Psi1|Psi2>", (1, 2), s * s, s),
        ("<Psi1|Psi2> = <Sigma|Psi2>", (1, 3), s, sigma_psi2),
        ("<Sigma|Psi2> = 1", (2, 3), sigma_psi2, one),
        ("<Sigma|Psi1> = 1", (1, 4), sigma_psi1, one),
        ("<Psi2|Psi1> = <Sigma|Psi1>", (2, 4), s.conj(), sigma_psi1),
    ];
    let constraints: Vec<Constraint> = entries
        .into_iter()
        .map(|(label, rules, lhs, rhs)| Constraint {
            label: label.to_string(),
            rules,
            lhs,
            rhs,
            residual: (lhs - rhs).norm(),
        })
        .collect();
    let max_residual = constraints.iter().map(|c| c.residual).fold(0.0, f64::max);
    let satisfiable = constraints.iter().all(|c| c.residual < CONSTRAINT_TOL);
    let trivial = same_ray(psi1, psi2)? && same_ray(psi1, sigma)?;
    Ok(ConstraintReport {
        overlap_s: s,
        constraints,
        max_residual,
        satisfiable,
        trivial_only: !satisfiable || trivial,
    })
}

/// Constraint reports for `Ψ1 = |0>`, `Ψ2 = s e^{iχ}|0> + sqrt(1 − s²)|1>`,
/// `Σ = |0>` with `s` on `n_points` evenly spaced values in `[0, 1]`.
pub fn sweep_overlap(n_points: usize, phase: f64) -> Result<Vec<ConstraintReport>> {
    if n_points < 2 {
        return Err(invalid_arg!("an overlap sweep needs at least two points"));
    }
    let zero = Ket::qubit(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    (0..n_points)
        .map(|i| {
            let s = i as f64 / (n_points - 1) as f64;
            let psi2 = Ket::qubit(
                C64::from_polar(s, phase),
                C64::new((1.0 - s * s).max(0.0).sqrt(), 0.0),
            );
            nonorthogonal_constraints(&zero, &psi2, &zero)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub max_gram_residual: f64,
    /// `(i, j, |<in_i|in_j> − <out_i|out_j>|)` for every pair `i ≤ j`.
    pub pairs: Vec<(usize, usize, f64)>,
}

fn gram_report(inputs: &[Ket], outputs: &[Ket]) -> Result<GramReport> {
    let mut pairs = Vec::new();
    for i in 0..inputs.len() {
        for j in i..inputs.len() {
            let d = (inner(&inputs[i], &inputs[j])? - inner(&outputs[i], &outputs[j])?).norm();
            pairs.push((i, j, d));
        }
    }
    let max_gram_residual = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(GramReport {
        max_gram_residual,
        pairs,
    })
}

/// Compares the Gram matrix of the inputs `Ψ_i Ψ_i` (followed by ancilla
/// basis state 0 on any further subsystems of the machine) with that of the
/// machine outputs.
pub fn gram_preservation_check(
    machine: &BasisActionMachine,
    alphabet: &[Ket],
) -> Result<GramReport> {
    let dims = machine.input_shape().dims();
    if dims.len() < 2 || dims[0] != dims[1] {
        return Err(shape_err!(
            "machine input {} does not start with two equal systems",
            machine.input_shape()
        ));
    }
    let mut padding = Vec::new();
    for &d in &dims[2..] {
        padding.push(Ket::basis(SpaceShape::new(vec![d])?, 0)?);
    }
    let mut inputs = Vec::with_capacity(alphabet.len());
    for psi in alphabet {
        if psi.shape().dims() != [dims[0]] {
            return Err(shape_err!(
                "alphabet state of shape {} for a machine on {}",
                psi.shape(),
                machine.input_shape()
            ));
        }
        let mut factors = vec![psi.clone(), psi.clone()];
        factors.extend(padding.iter().cloned());
        inputs.push(tensor(&factors)?);
    }
    let outputs = inputs
        .iter()
        .map(|k| machine.apply(k))
        .collect::<Result<Vec<_>>>()?;
    gram_report(&inputs, &outputs)
}

/// Gram residual of the four declared deletion rules themselves.
pub fn ideal_rule_gram_check(psi1: &Ket, psi2: &Ket, sigma: &Ket) -> Result<GramReport> {
    require_qubit(psi1, "psi1")?;
    require_qubit(psi2, "psi2")?;
    require_qubit(sigma, "sigma")?;
    let inputs = vec![
        psi1.tensor(psi1)?,
        psi2.tensor(psi2)?,
        psi1.tensor(psi2)?,
        psi2.tensor(psi1)?,
    ];
    let outputs = vec![
        psi1.tensor(sigma)?,
        psi2.tensor(sigma)?,
        inputs[2].clone(),
        inputs[3].clone(),
    ];
    gram_report(&inputs, &outputs)
}

/// Isometry and Gram checks for a user-supplied machine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub isometry: IsometryReport,
    pub gram: GramReport,
}

pub fn verify_machine(
    machine: &BasisActionMachine,
    alphabet: &[Ket],
    tol: f64,
) -> Result<VerifyReport> {
    Ok(VerifyReport {
        isometry: machine.check_isometry(tol),
        gram: gram_preservation_check(machine, alphabet)?,
    })
}
