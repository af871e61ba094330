//! Machines declared by their action on basis product states.
//!
//! A [`BasisActionMachine`] stores one output ket per input basis state and
//! extends to superpositions by linearity. Every "actual output" computed in
//! this crate goes through [`BasisActionMachine::apply`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::rng_for;
use crate::error::{invalid_arg, shape_err, Error, Result};
use crate::hilbert::{
    density_of, partial_trace, same_shape, tensor, trace_distance, DensityMatrix, Ket, SpaceShape,
    ALGEBRAIC_TOL, C64, EIGEN_TOL, ONE, ZERO,
};
use crate::sampling::haar_qudit;

/// Linear map given by its action on each input basis state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MachineRepr", into = "MachineRepr")]
pub struct BasisActionMachine {
    input_shape: SpaceShape,
    output_shape: SpaceShape,
    /// Column `i` is the image of input basis state `i`.
    columns: DMatrix<C64>,
}

/// JSON layout: `{input_dims, output_dims, rules: [{in_index, out_amplitudes}]}`.
#[derive(Serialize, Deserialize)]
struct MachineRepr {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    rules: Vec<RuleRepr>,
}

#[derive(Serialize, Deserialize)]
struct RuleRepr {
    in_index: usize,
    out_amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<MachineRepr> for BasisActionMachine {
    type Error = Error;

    fn try_from(repr: MachineRepr) -> Result<Self> {
        let input_shape = SpaceShape::new(repr.input_dims)?;
        let output_shape = SpaceShape::new(repr.output_dims)?;
        let mut map = BTreeMap::new();
        for rule in repr.rules {
            let amps = rule
                .out_amplitudes
                .iter()
                .map(|&[re, im]| C64::new(re, im))
                .collect();
            let ket = Ket::new(output_shape.clone(), amps)?;
            if map.insert(rule.in_index, ket).is_some() {
                return Err(invalid_arg!(
                    "input basis index {} has more than one rule",
                    rule.in_index
                ));
            }
        }
        BasisActionMachine::from_rule_map(input_shape, output_shape, map)
    }
}

impl From<BasisActionMachine> for MachineRepr {
    fn from(m: BasisActionMachine) -> Self {
        MachineRepr {
            input_dims: m.input_shape.dims().to_vec(),
            output_dims: m.output_shape.dims().to_vec(),
            rules: (0..m.columns.ncols())
                .map(|i| RuleRepr {
                    in_index: i,
                    out_amplitudes: m.columns.column(i).iter().map(|c| [c.re, c.im]).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub is_isometry: bool,
    pub max_gram_deviation: f64,
}

impl BasisActionMachine {
    /// `rules[i]` is the output for input basis index `i`; every rule must be
    /// normalized over `output_shape`.
    pub fn new(input_shape: SpaceShape, output_shape: SpaceShape, rules: Vec<Ket>) -> Result<Self> {
        if rules.len() != input_shape.total() {
            return Err(invalid_arg!(
                "{} rules for an input space of dimension {}",
                rules.len(),
                input_shape.total()
            ));
        }
        let mut columns = DMatrix::zeros(output_shape.total(), input_shape.total());
        for (i, rule) in rules.iter().enumerate() {
            same_shape(rule.shape(), &output_shape)
                .map_err(|e| shape_err!("rule for input {i}: {e}"))?;
            if !rule.is_normalized(ALGEBRAIC_TOL) {
                return Err(invalid_arg!(
                    "rule for input {i} has squared norm {}",
                    rule.norm_sqr()
                ));
            }
            columns.set_column(i, rule.as_vector());
        }
        Ok(Self {
            input_shape,
            output_shape,
            columns,
        })
    }

    /// Builds a machine from an explicit map; every input basis index needs
    /// exactly one entry.
    pub fn from_rule_map(
        input_shape: SpaceShape,
        output_shape: SpaceShape,
        mut map: BTreeMap<usize, Ket>,
    ) -> Result<Self> {
        let total = input_shape.total();
        if let Some((&extra, _)) = map.range(total..).next() {
            return Err(invalid_arg!(
                "rule for input {extra} outside input dimension {total}"
            ));
        }
        let rules = (0..total)
            .map(|i| {
                map.remove(&i)
                    .ok_or_else(|| invalid_arg!("no rule for input basis index {i}"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(input_shape, output_shape, rules)
    }

    pub fn identity(shape: SpaceShape) -> Self {
        let n = shape.total();
        Self {
            input_shape: shape.clone(),
            output_shape: shape,
            columns: DMatrix::identity(n, n),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serialization is infallible")
    }

    pub fn input_shape(&self) -> &SpaceShape {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &SpaceShape {
        &self.output_shape
    }

    /// Declared output for input basis index `index`.
    pub fn rule(&self, index: usize) -> Ket {
        Ket::from_vector(
            self.output_shape.clone(),
            self.columns.column(index).into_owned(),
        )
    }

    pub fn rules(&self) -> Vec<Ket> {
        (0..self.columns.ncols()).map(|i| self.rule(i)).collect()
    }

    /// `Σ_i <basis_i|input> · rule_i`.
    pub fn apply(&self, input: &Ket) -> Result<Ket> {
        same_shape(input.shape(), &self.input_shape)?;
        Ok(Ket::from_vector(
            self.output_shape.clone(),
            &self.columns * input.as_vector(),
        ))
    }

    /// Compares the Gram matrix of all rule outputs with the identity.
    pub fn check_isometry(&self, tol: f64) -> IsometryReport {
        let gram = self.columns.adjoint() * &self.columns;
        let n = gram.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        IsometryReport {
            is_isometry: worst <= tol,
            max_gram_deviation: worst,
        }
    }

    /// Fills every `None` rule with an orthonormal completion: computational
    /// basis vectors, in index order, Gram–Schmidt orthogonalized against the
    /// declared outputs and each other.
    pub fn complete_isometry(
        input_shape: SpaceShape,
        output_shape: SpaceShape,
        declared: Vec<Option<Ket>>,
    ) -> Result<Self> {
        if declared.len() != input_shape.total() {
            return Err(invalid_arg!(
                "{} rule slots for input dimension {}",
                declared.len(),
                input_shape.total()
            ));
        }
        let out_dim = output_shape.total();
        let mut basis: Vec<DVector<C64>> = Vec::new();
        let push_orthogonal =
            |v: &DVector<C64>, basis: &mut Vec<DVector<C64>>| -> Option<DVector<C64>> {
                let mut w = v.clone();
                // two passes keep the completion orthogonal to ~1e-16
                for _ in 0..2 {
                    for b in basis.iter() {
                        let proj = b.dotc(&w);
                        w -= b * proj;
                    }
                }
                let n = w.norm();
                (n > 1e-8).then(|| {
                    let w = w / C64::new(n, 0.0);
                    basis.push(w.clone());
                    w
                })
            };
        for rule in declared.iter().flatten() {
            push_orthogonal(rule.as_vector(), &mut basis);
        }
        let mut candidates = (0..out_dim).filter_map(|k| {
            let mut e = DVector::zeros(out_dim);
            e[k] = ONE;
            push_orthogonal(&e, &mut basis)
        });
        let mut rules = Vec::with_capacity(declared.len());
        for (i, slot) in declared.into_iter().enumerate() {
            let ket = match slot {
                Some(k) => k,
                None => {
                    let v = candidates.next().ok_or_else(|| {
                        invalid_arg!("output space too small to complete rule {i}")
                    })?;
                    Ket::from_vector(output_shape.clone(), v)
                }
            };
            rules.push(ket);
        }
        Self::new(input_shape, output_shape, rules)
    }
}

/// Initial and final ancilla states of a deleting machine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaConfig {
    pub dim: usize,
    pub initial_index: usize,
    /// Final ancilla state keyed by the label of the input basis state.
    pub finals: BTreeMap<String, Ket>,
}

impl AncillaConfig {
    pub fn new(dim: usize, initial_index: usize, finals: BTreeMap<String, Ket>) -> Result<Self> {
        if dim < 2 {
            return Err(invalid_arg!("ancilla dimension {dim} is below 2"));
        }
        if initial_index >= dim {
            return Err(invalid_arg!(
                "initial ancilla index {initial_index} not below {dim}"
            ));
        }
        for (label, k) in &finals {
            if k.shape().dims() != [dim] {
                return Err(shape_err!(
                    "final ancilla `{label}` has shape {}",
                    k.shape()
                ));
            }
            if !k.is_normalized(ALGEBRAIC_TOL) {
                return Err(invalid_arg!("final ancilla `{label}` is not normalized"));
            }
        }
        Ok(Self {
            dim,
            initial_index,
            finals,
        })
    }

    /// Three-level ancilla with `|A> = |0>`, `|A_0> = |1>`, `|A_1> = |2>`.
    pub fn conditional() -> Self {
        let shape = SpaceShape::new(vec![3]).expect("valid shape");
        let finals = BTreeMap::from([
            (
                "0".to_string(),
                Ket::basis(shape.clone(), 1).expect("in range"),
            ),
            ("1".to_string(), Ket::basis(shape, 2).expect("in range")),
        ]);
        Self {
            dim: 3,
            initial_index: 0,
            finals,
        }
    }

    pub fn initial(&self) -> Ket {
        Ket::basis(
            SpaceShape::new(vec![self.dim]).expect("dim >= 2"),
            self.initial_index,
        )
        .expect("index checked")
    }

    pub fn final_state(&self, label: &str) -> Result<&Ket> {
        self.finals
            .get(label)
            .ok_or_else(|| invalid_arg!("no final ancilla state for `{label}`"))
    }
}

fn qudit_basis(d: usize, i: usize) -> Ket {
    Ket::basis(SpaceShape::new(vec![d]).expect("d >= 2"), i).expect("index in range")
}

/// Two-qudit deleter without ancilla: `|i>|i> → |i>|Σ>` and `|i>|j> → Φ_ij`
/// for `i ≠ j`. Without a garbage map `Φ_ij = |i>|j>`. The blank `|Σ>` is
/// basis state 0.
pub fn qudit_pair_deleter(
    d: usize,
    garbage: Option<&BTreeMap<(usize, usize), Ket>>,
) -> Result<BasisActionMachine> {
    let shape = SpaceShape::new(vec![d, d])?;
    let blank = qudit_basis(d, 0);
    let mut rules = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let out = if i == j {
                qudit_basis(d, i).tensor(&blank)?
            } else if let Some(g) = garbage {
                let phi = g
                    .get(&(i, j))
                    .ok_or_else(|| invalid_arg!("garbage state for ({i},{j}) missing"))?;
                same_shape(phi.shape(), &shape)?;
                phi.clone()
            } else {
                Ket::basis(shape.clone(), i * d + j)?
            };
            rules.push(out);
        }
    }
    BasisActionMachine::new(shape.clone(), shape, rules)
}

/// Conditional deleter on two qubits and a three-level ancilla, using
/// [`AncillaConfig::conditional`].
pub fn conditional_deleter() -> BasisActionMachine {
    conditional_deleter_with(&AncillaConfig::conditional()).expect("default ancilla is orthonormal")
}

/// Conditional deleter with caller-chosen ancilla states: identical inputs are
/// deleted and tagged with `finals["0"]` / `finals["1"]`, different inputs
/// pass through. Inputs whose ancilla is not the initial state are completed
/// by [`BasisActionMachine::complete_isometry`].
pub fn conditional_deleter_with(ancilla: &AncillaConfig) -> Result<BasisActionMachine> {
    let shape = SpaceShape::new(vec![2, 2, ancilla.dim])?;
    let a = ancilla.initial();
    let a0 = ancilla.final_state("0")?;
    let a1 = ancilla.final_state("1")?;
    let (q0, q1, blank) = (qudit_basis(2, 0), qudit_basis(2, 1), qudit_basis(2, 0));
    let mut declared: Vec<Option<Ket>> = vec![None; shape.total()];
    let slot = |x: usize, y: usize| shape.index_of(&[x, y, ancilla.initial_index]);
    declared[slot(0, 0)?] = Some(tensor(&[q0.clone(), blank.clone(), a0.clone()])?);
    declared[slot(1, 1)?] = Some(tensor(&[q1.clone(), blank, a1.clone()])?);
    declared[slot(0, 1)?] = Some(tensor(&[q0.clone(), q1.clone(), a.clone()])?);
    declared[slot(1, 0)?] = Some(tensor(&[q1, q0, a])?);
    BasisActionMachine::complete_isometry(shape.clone(), shape, declared)
}

/// `|i>|j>|k> → |i>|k>|j>`: the second copy is swapped into the ancilla.
pub fn swap_deleter(d: usize) -> Result<BasisActionMachine> {
    let shape = SpaceShape::new(vec![d, d, d])?;
    let rules = (0..shape.total())
        .map(|idx| {
            let g = shape.digits_of(idx);
            Ket::basis(shape.clone(), shape.index_of(&[g[0], g[2], g[1]])?)
        })
        .collect::<Result<Vec<_>>>()?;
    BasisActionMachine::new(shape.clone(), shape, rules)
}

/// `||apply(m, ψψ) − ψ⊗Σ||` for an ancilla-free two-qudit machine.
pub fn pair_deletion_residual(machine: &BasisActionMachine, psi: &Ket) -> Result<f64> {
    let d = psi.dim();
    let shape = SpaceShape::new(vec![d, d])?;
    same_shape(machine.input_shape(), &shape)?;
    same_shape(machine.output_shape(), &shape)?;
    let actual = machine.apply(&psi.tensor(psi)?)?;
    let ideal = psi.tensor(&qudit_basis(d, 0))?;
    actual.distance(&ideal)
}

/// Residual report for the two-qudit deleter on `sqrt(x)|0> + sqrt(1-x)|1>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeleteDemoReport {
    pub dim: usize,
    pub alpha_sq: f64,
    pub actual: Ket,
    pub ideal: Ket,
    pub residual: f64,
    /// Deviation of the linear output from `Σ c_i²|i>|Σ> + Σ_{i≠j} c_i c_j Φ_ij`.
    pub expansion_deviation: f64,
}

pub fn delete_demo(dim: usize, alpha_sq: f64) -> Result<DeleteDemoReport> {
    if !(0.0..=1.0).contains(&alpha_sq) {
        return Err(invalid_arg!("alpha_sq {alpha_sq} outside [0, 1]"));
    }
    let machine = qudit_pair_deleter(dim, None)?;
    let mut amps = vec![ZERO; dim];
    amps[0] = C64::new(alpha_sq.sqrt(), 0.0);
    amps[1] = C64::new((1.0 - alpha_sq).sqrt(), 0.0);
    let psi = Ket::qudit(amps)?;
    let actual = machine.apply(&psi.tensor(&psi)?)?;
    let ideal = psi.tensor(&qudit_basis(dim, 0))?;

    let pair = SpaceShape::new(vec![dim, dim])?;
    let mut expansion = vec![ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let c = psi.amp(i) * psi.amp(j);
            let term = machine.rule(i * dim + j);
            for (slot, a) in expansion.iter_mut().zip(term.amplitudes()) {
                *slot += c * a;
            }
        }
    }
    let expansion = Ket::new(pair, expansion)?;
    Ok(DeleteDemoReport {
        dim,
        alpha_sq,
        residual: actual.distance(&ideal)?,
        expansion_deviation: actual.max_deviation(&expansion)?,
        actual,
        ideal,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeleterKind {
    SwapLike,
    ApproximateDeleter,
    NotLinearConsistent,
}

/// Outcome of pushing one `|Ψ>|Ψ>|A>` through an ancilla machine.
#[derive(Clone, Debug, PartialEq)]
pub struct DeletionSample {
    /// `1 − ||(<Ψ|⊗<Σ|⊗I) output||`.
    pub residual: f64,
    pub norm_deviation: f64,
    /// Trace distance between the reduced ancilla and `V|Ψ><Ψ|V†`, where
    /// column `j` of `V` is the ancilla left behind by `|j>|j>|A>`.
    pub reconstruction_error: f64,
    pub ancilla: DensityMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeleterVerdict {
    pub kind: DeleterKind,
    pub residual_stats: Vec<f64>,
    pub reconstruction_errors: Vec<f64>,
    /// Largest trace distance between reduced ancilla states of two samples.
    pub ancilla_dependence: f64,
    pub max_norm_deviation: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DeleterVerdict {
    pub fn max_residual(&self) -> f64 {
        self.residual_stats.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_reconstruction_error(&self) -> f64 {
        self.reconstruction_errors
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Per-sample residual at which a machine counts as deleting exactly.
pub const EXACT_DELETION_TOL: f64 = 1e-10;
/// Ancilla reconstruction error below which the copy counts as swapped away.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

fn ancilla_dims(machine: &BasisActionMachine) -> Result<(usize, usize)> {
    let dims = machine.input_shape().dims();
    if dims.len() != 3 || dims[0] != dims[1] || dims[2] < dims[0] {
        return Err(shape_err!(
            "expected an ancilla machine of shape [d, d, m ≥ d], got {}",
            machine.input_shape()
        ));
    }
    same_shape(machine.input_shape(), machine.output_shape())?;
    Ok((dims[0], dims[2]))
}

/// Ancilla vectors left behind by `|j>|j>|A>` after projecting onto `<j|⊗<Σ|`.
fn basis_ancilla_states(machine: &BasisActionMachine) -> Result<Vec<DVector<C64>>> {
    let (d, m) = ancilla_dims(machine)?;
    let shape = machine.input_shape();
    (0..d)
        .map(|j| {
            let out = machine.rule(shape.index_of(&[j, j, 0])?);
            Ok(DVector::from_fn(m, |k, _| {
                out.amp(shape.index_of(&[j, 0, k]).expect("in range"))
            }))
        })
        .collect()
}

fn sample_with(
    machine: &BasisActionMachine,
    psi: &Ket,
    basis_ancillas: &[DVector<C64>],
) -> Result<DeletionSample> {
    let (d, m) = ancilla_dims(machine)?;
    if psi.shape().dims() != [d] {
        return Err(shape_err!(
            "state of shape {} for a machine on qudits of dimension {d}",
            psi.shape()
        ));
    }
    let shape = machine.input_shape();
    let ancilla0 = Ket::basis(SpaceShape::new(vec![m])?, 0)?;
    let out = machine.apply(&tensor(&[psi.clone(), psi.clone(), ancilla0])?)?;

    let projected = DVector::from_fn(m, |k, _| {
        (0..d)
            .map(|i| psi.amp(i).conj() * out.amp(shape.index_of(&[i, 0, k]).expect("in range")))
            .sum::<C64>()
    });
    let residual = 1.0 - projected.norm();
    let norm_deviation = (out.norm() - 1.0).abs();

    let ancilla = partial_trace(&density_of(&out.normalized()?)?, &[2])?;
    let target = basis_ancillas
        .iter()
        .enumerate()
        .fold(DVector::zeros(m), |acc: DVector<C64>, (j, a)| {
            acc + a * psi.amp(j)
        });
    let reconstruction_error = match Ket::qudit(target.iter().copied().collect())?.normalized() {
        Ok(t) => trace_distance(&ancilla, &density_of(&t)?)?,
        Err(_) => 1.0,
    };
    Ok(DeletionSample {
        residual,
        norm_deviation,
        reconstruction_error,
        ancilla,
    })
}

/// Pushes `|Ψ>|Ψ>|A>` (with `|A>` the ancilla basis state 0) through a
/// `[d, d, m]` machine and measures how far the result is from deletion.
pub fn deletion_sample(machine: &BasisActionMachine, psi: &Ket) -> Result<DeletionSample> {
    let basis = basis_ancilla_states(machine)?;
    sample_with(machine, psi, &basis)
}

/// Classifies an ancilla machine from `samples` Haar-random inputs.
///
/// A machine whose outputs lose normalization is `NotLinearConsistent`. One
/// that deletes every sample exactly is `SwapLike` when the ancilla carries
/// the input; exact deletion without that is also reported as
/// `NotLinearConsistent`, since no normalized linear machine achieves it.
/// Anything else is an `ApproximateDeleter`.
pub fn classify_deleter(
    machine: &BasisActionMachine,
    samples: usize,
    seed: u64,
) -> Result<DeleterVerdict> {
    if samples == 0 {
        return Err(invalid_arg!("classification needs at least one sample"));
    }
    let (d, _) = ancilla_dims(machine)?;
    let basis = basis_ancilla_states(machine)?;
    let mut rng = rng_for(seed, "machines", "classify_deleter");
    let runs = (0..samples)
        .map(|_| {
            let psi = haar_qudit(d, &mut rng)?;
            sample_with(machine, &psi, &basis)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ancilla_dependence = 0.0f64;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            ancilla_dependence = ancilla_dependence.max(trace_distance(&a.ancilla, &b.ancilla)?);
        }
    }
    let residual_stats: Vec<f64> = runs.iter().map(|r| r.residual).collect();
    let reconstruction_errors: Vec<f64> = runs.iter().map(|r| r.reconstruction_error).collect();
    let max_norm_deviation = runs.iter().map(|r| r.norm_deviation).fold(0.0, f64::max);
    let max_residual = residual_stats.iter().copied().fold(0.0, f64::max);
    let max_recon = reconstruction_errors.iter().copied().fold(0.0, f64::max);

    let kind = if max_norm_deviation > EIGEN_TOL {
        DeleterKind::NotLinearConsistent
    } else if max_residual <= EXACT_DELETION_TOL {
        if max_recon <= RECONSTRUCTION_TOL {
            DeleterKind::SwapLike
        } else {
            DeleterKind::NotLinearConsistent
        }
    } else {
        DeleterKind::ApproximateDeleter
    };
    Ok(DeleterVerdict {
        kind,
        residual_stats,
        reconstruction_errors,
        ancilla_dependence,
        max_norm_deviation,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::rng_for;
    use crate::hilbert::inner;
    use crate::sampling::{haar_qubit, random_ket};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn q(i: usize) -> Ket {
        qudit_basis(2, i)
    }

    #[test]
    fn identity_machine() {
        let shape = SpaceShape::new(vec![2, 3]).unwrap();
        let m = BasisActionMachine::identity(shape.clone());
        let psi = random_ket(&shape, &mut rng_for(0, "t", "id"));
        assert_eq!(m.apply(&psi).unwrap(), psi);
        let rep = m.check_isometry(1e-12);
        assert!(rep.is_isometry);
        assert_eq!(rep.max_gram_deviation, 0.0);
    }

    #[test]
    fn colliding_rules_are_not_isometric() {
        let shape = SpaceShape::new(vec![2]).unwrap();
        let m = BasisActionMachine::new(shape.clone(), shape, vec![q(0), q(0)]).unwrap();
        let rep = m.check_isometry(1e-12);
        assert!(!rep.is_isometry);
        assert_abs_diff_eq!(rep.max_gram_deviation, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn construction_errors() {
        let shape = SpaceShape::new(vec![2]).unwrap();
        assert!(BasisActionMachine::new(shape.clone(), shape.clone(), vec![q(0)]).is_err());
        let unnormalized = Ket::qubit(c(1.0), c(1.0));
        assert!(
            BasisActionMachine::new(shape.clone(), shape.clone(), vec![q(0), unnormalized])
                .is_err()
        );
        let map = BTreeMap::from([(0, q(0))]);
        assert!(BasisActionMachine::from_rule_map(shape.clone(), shape.clone(), map).is_err());
        let m = BasisActionMachine::identity(shape);
        let two = tensor(&[q(0), q(0)]).unwrap();
        assert!(matches!(m.apply(&two), Err(Error::Shape(_))));
    }

    #[test]
    fn pair_deleter_on_identical_basis_inputs() {
        let m = qudit_pair_deleter(2, None).unwrap();
        let out = m.apply(&tensor(&[q(0), q(0)]).unwrap()).unwrap();
        assert_eq!(out, tensor(&[q(0), q(0)]).unwrap());
        let out = m.apply(&tensor(&[q(1), q(1)]).unwrap()).unwrap();
        assert_eq!(out, tensor(&[q(1), q(0)]).unwrap());

        let m3 = qudit_pair_deleter(3, None).unwrap();
        let input = tensor(&[qudit_basis(3, 1), qudit_basis(3, 2)]).unwrap();
        assert_eq!(m3.apply(&input).unwrap(), input);
    }

    #[test]
    fn pair_deleter_follows_linear_expansion() {
        // α²|0>|Σ> + β²|1>|Σ> + αβ(Φ01 + Φ10) with random garbage
        let mut rng = rng_for(11, "t", "expansion");
        let pair = SpaceShape::new(vec![2, 2]).unwrap();
        let g01 = random_ket(&pair, &mut rng);
        let g10 = random_ket(&pair, &mut rng);
        let garbage = BTreeMap::from([((0, 1), g01.clone()), ((1, 0), g10.clone())]);
        let m = qudit_pair_deleter(2, Some(&garbage)).unwrap();
        let psi = haar_qubit(&mut rng);
        let (a, b) = (psi.amp(0), psi.amp(1));
        let expect: Vec<C64> = (0..4)
            .map(|k| {
                let basis_part = match k {
                    0 => a * a,
                    2 => b * b,
                    _ => c(0.0),
                };
                basis_part + a * b * (g01.amp(k) + g10.amp(k))
            })
            .collect();
        let out = m.apply(&psi.tensor(&psi).unwrap()).unwrap();
        assert!(out.max_deviation(&Ket::new(pair, expect).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn pair_deleter_missing_garbage() {
        let pair = SpaceShape::new(vec![2, 2]).unwrap();
        let garbage = BTreeMap::from([((0, 1), Ket::basis(pair, 1).unwrap())]);
        assert!(matches!(
            qudit_pair_deleter(2, Some(&garbage)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pair_deleter_residual_at_equal_superposition() {
        // actual = ½|00> + ½|10> + ½(|01>+|10>), ideal = (|00>+|10>)/√2
        let m = qudit_pair_deleter(2, None).unwrap();
        let psi = Ket::qubit(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2));
        let r = pair_deletion_residual(&m, &psi).unwrap();
        let diffs = [0.5 - FRAC_1_SQRT_2, 0.5, 1.0 - FRAC_1_SQRT_2, 0.0];
        let oracle = diffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(r, oracle, epsilon = 1e-14);
        assert!(r > 0.0);
    }

    #[test]
    fn delete_demo_report() {
        let rep = delete_demo(3, 0.5).unwrap();
        assert!(rep.residual > 0.1);
        assert!(rep.expansion_deviation < 1e-15);
        let rep = delete_demo(2, 1.0).unwrap();
        assert_abs_diff_eq!(rep.residual, 0.0, epsilon = 1e-15);
        assert!(delete_demo(2, 1.5).is_err());
    }

    #[test]
    fn conditional_deleter_declared_action() {
        let m = conditional_deleter();
        let a_shape = SpaceShape::new(vec![3]).unwrap();
        let (a, a0, a1) = (
            Ket::basis(a_shape.clone(), 0).unwrap(),
            Ket::basis(a_shape.clone(), 1).unwrap(),
            Ket::basis(a_shape, 2).unwrap(),
        );
        let run = |x: usize, y: usize| m.apply(&tensor(&[q(x), q(y), a.clone()]).unwrap()).unwrap();
        assert_eq!(run(0, 0), tensor(&[q(0), q(0), a0.clone()]).unwrap());
        assert_eq!(run(1, 1), tensor(&[q(1), q(0), a1.clone()]).unwrap());
        assert_eq!(run(0, 1), tensor(&[q(0), q(1), a.clone()]).unwrap());
        assert_eq!(run(1, 0), tensor(&[q(1), q(0), a.clone()]).unwrap());

        let psi = haar_qubit(&mut rng_for(5, "t", "cond"));
        let (al, be) = (psi.amp(0), psi.amp(1));
        let out = m
            .apply(&tensor(&[psi.clone(), psi, a.clone()]).unwrap())
            .unwrap();
        let expect = tensor(&[q(0), q(0), a0])
            .unwrap()
            .combine(al * al, &tensor(&[q(1), q(0), a1]).unwrap(), be * be)
            .unwrap()
            .combine(ONE, &tensor(&[q(0), q(1), a.clone()]).unwrap(), al * be)
            .unwrap()
            .combine(ONE, &tensor(&[q(1), q(0), a]).unwrap(), al * be)
            .unwrap();
        assert!(out.max_deviation(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn conditional_deleter_completes_to_isometry() {
        let m = conditional_deleter();
        // Gram oracle: all twelve columns are distinct basis vectors
        let cols = m.rules();
        for (i, x) in cols.iter().enumerate() {
            for (j, y) in cols.iter().enumerate() {
                let g = inner(x, y).unwrap();
                assert_abs_diff_eq!(g.norm(), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        assert!(m.check_isometry(1e-12).is_isometry);
    }

    #[test]
    fn non_orthogonal_ancilla_breaks_isometry() {
        let shape = SpaceShape::new(vec![3]).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        // |A_1> overlaps |A>, and |1>|Σ>|A_1> shares its qubit part with |1>|0>|A>
        let tilted = Ket::new(shape.clone(), vec![c(s), c(0.0), c(s)]).unwrap();
        let finals = BTreeMap::from([
            ("0".to_string(), Ket::basis(shape, 1).unwrap()),
            ("1".to_string(), tilted),
        ]);
        let cfg = AncillaConfig::new(3, 0, finals).unwrap();
        let m = conditional_deleter_with(&cfg).unwrap();
        assert!(!m.check_isometry(1e-12).is_isometry);
        let v = classify_deleter(&m, 20, 1).unwrap();
        assert_eq!(v.kind, DeleterKind::NotLinearConsistent);
    }

    #[test]
    fn ancilla_config_validation() {
        assert!(AncillaConfig::new(3, 3, BTreeMap::new()).is_err());
        let bad = BTreeMap::from([(
            "0".to_string(),
            Ket::qudit(vec![c(1.0), c(1.0), c(0.0)]).unwrap(),
        )]);
        assert!(AncillaConfig::new(3, 0, bad).is_err());
        assert!(AncillaConfig::conditional().final_state("2").is_err());
    }

    #[test]
    fn swap_deleter_moves_second_copy() {
        let m = swap_deleter(2).unwrap();
        let mut rng = rng_for(2, "t", "swap");
        let (psi, phi) = (haar_qubit(&mut rng), haar_qubit(&mut rng));
        let out = m
            .apply(&tensor(&[psi.clone(), phi.clone(), q(0)]).unwrap())
            .unwrap();
        assert!(
            out.max_deviation(&tensor(&[psi.clone(), q(0), phi]).unwrap())
                .unwrap()
                < 1e-15
        );

        let out = m
            .apply(&tensor(&[psi.clone(), psi.clone(), q(0)]).unwrap())
            .unwrap();
        let rho01 = partial_trace(&density_of(&out).unwrap(), &[0, 1]).unwrap();
        let expect = density_of(&psi)
            .unwrap()
            .tensor(&density_of(&q(0)).unwrap())
            .unwrap();
        assert!(rho01.max_deviation(&expect).unwrap() < 1e-15);
        let anc = partial_trace(&density_of(&out).unwrap(), &[2]).unwrap();
        assert!(anc.max_deviation(&density_of(&psi).unwrap()).unwrap() < 1e-15);

        let rep = m.check_isometry(1e-12);
        assert!(rep.is_isometry);
        assert_eq!(rep.max_gram_deviation, 0.0);
    }

    #[test]
    fn classify_swap_and_conditional() {
        let v = classify_deleter(&swap_deleter(2).unwrap(), 100, 9).unwrap();
        assert_eq!(v.kind, DeleterKind::SwapLike);
        assert!(v.max_reconstruction_error() < 1e-10);
        assert!(v.ancilla_dependence > 0.5);

        let v = classify_deleter(&conditional_deleter(), 100, 9).unwrap();
        assert_eq!(v.kind, DeleterKind::ApproximateDeleter);
        assert!(v.residual_stats.iter().all(|&r| r > 0.0));
        assert!(classify_deleter(&conditional_deleter(), 0, 9).is_err());
    }

    #[test]
    fn conditional_residual_oracle() {
        // (<Ψ|⊗<Σ|) out = |α|²α|A0> + |β|²β|A1> + α|β|²|A>, so
        // residual = 1 − sqrt(|α|⁶ + |β|⁶ + |α|²|β|⁴)
        let m = conditional_deleter();
        let psi = Ket::qubit(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2));
        let s = deletion_sample(&m, &psi).unwrap();
        assert_abs_diff_eq!(s.residual, 1.0 - (3.0f64 / 8.0).sqrt(), epsilon = 1e-14);

        for pole in [q(0), q(1)] {
            let s = deletion_sample(&m, &pole).unwrap();
            assert_abs_diff_eq!(s.residual, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn classify_rejects_machines_without_ancilla() {
        let m = qudit_pair_deleter(2, None).unwrap();
        assert!(matches!(classify_deleter(&m, 10, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn swap_deleter_on_qutrits() {
        let v = classify_deleter(&swap_deleter(3).unwrap(), 30, 4).unwrap();
        assert_eq!(v.kind, DeleterKind::SwapLike);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let m = conditional_deleter();
        let back = BasisActionMachine::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);

        let dup = r#"{"input_dims":[2],"output_dims":[2],"rules":[
            {"in_index":0,"out_amplitudes":[[1,0],[0,0]]},
            {"in_index":0,"out_amplitudes":[[0,0],[1,0]]}]}"#;
        assert!(matches!(
            BasisActionMachine::from_json(dup),
            Err(Error::Parse(_))
        ));
        let missing = r#"{"input_dims":[2],"output_dims":[2],"rules":[
            {"in_index":0,"out_amplitudes":[[1,0],[0,0]]}]}"#;
        assert!(BasisActionMachine::from_json(missing).is_err());
    }

    fn random_machine(shape: &SpaceShape, seed: u64) -> BasisActionMachine {
        let mut rng = rng_for(seed, "t", "machine");
        let rules = (0..shape.total())
            .map(|_| random_ket(shape, &mut rng))
            .collect();
        BasisActionMachine::new(shape.clone(), shape.clone(), rules).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn apply_is_linear(seed in any::<u64>(), ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
            let shape = SpaceShape::new(vec![2, 3]).unwrap();
            let m = random_machine(&shape, seed);
            let mut rng = rng_for(seed, "t", "lin");
            let (psi, phi) = (random_ket(&shape, &mut rng), random_ket(&shape, &mut rng));
            let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
            let lhs = m.apply(&psi.combine(a, &phi, b).unwrap()).unwrap();
            let rhs = m.apply(&psi).unwrap().combine(a, &m.apply(&phi).unwrap(), b).unwrap();
            prop_assert!(lhs.max_deviation(&rhs).unwrap() < 1e-12);
        }

        #[test]
        fn isometries_preserve_norm(seed in any::<u64>()) {
            let m = conditional_deleter();
            let mut rng = rng_for(seed, "t", "iso");
            prop_assert!(m.check_isometry(1e-12).is_isometry);
            for _ in 0..100 {
                let psi = random_ket(m.input_shape(), &mut rng);
                prop_assert!((m.apply(&psi).unwrap().norm() - 1.0).abs() < 1e-10);
            }
        }
    }
}
