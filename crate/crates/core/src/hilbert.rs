//! Finite-dimensional Hilbert-space primitives.
//!
//! States live on a product of subsystems described by a [`SpaceShape`]. The
//! leftmost factor is subsystem 0 and flattening is row-major: the basis
//! product state with digits `(i_0, ..., i_{n-1})` sits at index
//! `sum_k i_k * prod_{j>k} d_j`. Every routine in the crate relies on this
//! single convention, so partial traces and machine rules agree on layout.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_state, shape_err, Error, Result};

pub type C64 = Complex64;

/// Tolerance for algebraic identities (normalization, hermiticity, trace).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for eigenvalue-based checks.
pub const EIGEN_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Ordered list of subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SpaceShape {
    dims: Vec<usize>,
}

impl SpaceShape {
    /// Largest total dimension the dense representation accepts.
    pub const MAX_TOTAL: usize = 4096;

    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(invalid_arg!("a space needs at least one subsystem"));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(invalid_arg!("subsystem dimension {d} is below 2"));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= Self::MAX_TOTAL)
            .ok_or_else(|| {
                invalid_arg!("total dimension of {dims:?} exceeds {}", Self::MAX_TOTAL)
            })?;
        debug_assert!(total >= 2);
        Ok(Self { dims })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of subsystems.
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &SpaceShape) -> Result<SpaceShape> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SpaceShape::new(dims)
    }

    /// Shape of the listed subsystems, in the order given.
    pub fn select(&self, indices: &[usize]) -> Result<SpaceShape> {
        let dims = indices
            .iter()
            .map(|&i| {
                self.dims
                    .get(i)
                    .copied()
                    .ok_or_else(|| invalid_arg!("subsystem {i} out of range for {self}"))
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceShape::new(dims)
    }

    /// Flat index of a basis product state.
    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(shape_err!("{} digits given for {self}", digits.len()));
        }
        digits
            .iter()
            .zip(&self.dims)
            .try_fold(0usize, |acc, (&i, &d)| {
                if i < d {
                    Ok(acc * d + i)
                } else {
                    Err(invalid_arg!("digit {i} out of range for dimension {d}"))
                }
            })
    }

    /// Per-subsystem digits of a flat index.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (slot, &d) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        digits
    }
}

impl TryFrom<Vec<usize>> for SpaceShape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        SpaceShape::new(dims)
    }
}

impl From<SpaceShape> for Vec<usize> {
    fn from(shape: SpaceShape) -> Self {
        shape.dims
    }
}

impl fmt::Display for SpaceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.dims)
    }
}

/// Complex amplitude vector over a product space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KetRepr", into = "KetRepr")]
pub struct Ket {
    shape: SpaceShape,
    amps: DVector<C64>,
}

#[derive(Serialize, Deserialize)]
struct KetRepr {
    dims: Vec<usize>,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<KetRepr> for Ket {
    type Error = Error;

    fn try_from(repr: KetRepr) -> Result<Self> {
        let shape = SpaceShape::new(repr.dims)?;
        Ket::new(
            shape,
            repr.amplitudes
                .iter()
                .map(|&[re, im]| C64::new(re, im))
                .collect(),
        )
    }
}

impl From<Ket> for KetRepr {
    fn from(ket: Ket) -> Self {
        KetRepr {
            dims: ket.shape.dims.clone(),
            amplitudes: ket.amps.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl Ket {
    pub fn new(shape: SpaceShape, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(shape_err!(
                "{} amplitudes for shape {shape} of dimension {}",
                amplitudes.len(),
                shape.total()
            ));
        }
        Ok(Self {
            shape,
            amps: DVector::from_vec(amplitudes),
        })
    }

    pub(crate) fn from_vector(shape: SpaceShape, amps: DVector<C64>) -> Self {
        debug_assert_eq!(amps.len(), shape.total());
        Self { shape, amps }
    }

    /// Computational basis state `index` of `shape`.
    pub fn basis(shape: SpaceShape, index: usize) -> Result<Self> {
        let total = shape.total();
        if index >= total {
            return Err(invalid_arg!("basis index {index} out of range for {shape}"));
        }
        let mut amps = DVector::zeros(total);
        amps[index] = ONE;
        Ok(Self { shape, amps })
    }

    /// Single-qudit state from its amplitudes.
    pub fn qudit(amplitudes: Vec<C64>) -> Result<Self> {
        let shape = SpaceShape::new(vec![amplitudes.len()])?;
        Self::new(shape, amplitudes)
    }

    /// `alpha|0> + beta|1>`, not renormalized.
    pub fn qubit(alpha: C64, beta: C64) -> Self {
        Self {
            shape: SpaceShape { dims: vec![2] },
            amps: DVector::from_vec(vec![alpha, beta]),
        }
    }

    pub fn shape(&self) -> &SpaceShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        if self.is_normalized(ALGEBRAIC_TOL) {
            Ok(())
        } else {
            Err(invalid_state!(
                "{what} has squared norm {} (expected 1)",
                self.norm_sqr()
            ))
        }
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n <= f64::EPSILON {
            return Err(invalid_state!("cannot normalize a zero vector"));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Ket {
        Ket {
            shape: self.shape.clone(),
            amps: &self.amps * factor,
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: C64, other: &Ket, b: C64) -> Result<Ket> {
        same_shape(&self.shape, &other.shape)?;
        Ok(Ket {
            shape: self.shape.clone(),
            amps: &self.amps * a + &other.amps * b,
        })
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &Ket) -> Result<f64> {
        same_shape(&self.shape, &other.shape)?;
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Largest element-wise amplitude difference.
    pub fn max_deviation(&self, other: &Ket) -> Result<f64> {
        same_shape(&self.shape, &other.shape)?;
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let shape = self.shape.concat(&other.shape)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(Ket { shape, amps })
    }
}

pub(crate) fn same_shape(a: &SpaceShape, b: &SpaceShape) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(shape_err!("{a} vs {b}"))
    }
}

/// Kronecker product of the factors in order; the result shape concatenates
/// the factor shapes.
pub fn tensor(factors: &[Ket]) -> Result<Ket> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| invalid_arg!("tensor product of an empty factor list"))?;
    rest.iter().try_fold(first.clone(), |acc, k| acc.tensor(k))
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &Ket, b: &Ket) -> Result<C64> {
    same_shape(&a.shape, &b.shape)?;
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
pub fn bloch_ket(theta: f64, phi: f64) -> Ket {
    let (s, c) = (theta / 2.0).sin_cos();
    Ket::qubit(C64::new(c, 0.0), C64::from_polar(s, phi))
}

/// Hermitian, positive semidefinite, unit-trace matrix over a product space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct DensityMatrix {
    shape: SpaceShape,
    mat: DMatrix<C64>,
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    dims: Vec<usize>,
    entries: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<DensityRepr> for DensityMatrix {
    type Error = Error;

    fn try_from(repr: DensityRepr) -> Result<Self> {
        let shape = SpaceShape::new(repr.dims)?;
        let n = shape.total();
        if repr.entries.len() != n || repr.entries.iter().any(|row| row.len() != n) {
            return Err(shape_err!("density matrix entries are not {n}x{n}"));
        }
        let mat = DMatrix::from_fn(n, n, |i, j| {
            let [re, im] = repr.entries[i][j];
            C64::new(re, im)
        });
        DensityMatrix::new(shape, mat)
    }
}

impl From<DensityMatrix> for DensityRepr {
    fn from(rho: DensityMatrix) -> Self {
        let n = rho.mat.nrows();
        DensityRepr {
            dims: rho.shape.dims.clone(),
            entries: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| [rho.mat[(i, j)].re, rho.mat[(i, j)].im])
                        .collect()
                })
                .collect(),
        }
    }
}

impl DensityMatrix {
    /// Validating constructor: hermiticity and unit trace to 1e-12, eigenvalues
    /// no lower than -1e-10.
    pub fn new(shape: SpaceShape, mat: DMatrix<C64>) -> Result<Self> {
        let n = shape.total();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(shape_err!(
                "{}x{} matrix for shape {shape}",
                mat.nrows(),
                mat.ncols()
            ));
        }
        let rho = Self { shape, mat };
        let herm = rho.hermiticity_deviation();
        if herm > ALGEBRAIC_TOL {
            return Err(invalid_state!("matrix deviates from hermitian by {herm:e}"));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > ALGEBRAIC_TOL {
            return Err(invalid_state!("trace {tr} differs from 1"));
        }
        let min_eig = rho.eigenvalues()[0];
        if min_eig < -EIGEN_TOL {
            return Err(invalid_state!("negative eigenvalue {min_eig:e}"));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(shape: SpaceShape, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), shape.total());
        Self { shape, mat }
    }

    /// `I / dim`.
    pub fn maximally_mixed(shape: SpaceShape) -> Self {
        let n = shape.total();
        let mat = DMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
        Self { shape, mat }
    }

    /// Convex combination of density matrices with the given weights.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let ((_, first), _) = parts
            .split_first()
            .ok_or_else(|| invalid_arg!("mixture of an empty ensemble"))?;
        let mut acc = DMatrix::zeros(first.mat.nrows(), first.mat.ncols());
        let mut total = 0.0;
        for (w, rho) in parts {
            same_shape(&first.shape, &rho.shape)?;
            if *w < 0.0 {
                return Err(invalid_arg!("negative mixture weight {w}"));
            }
            acc += &rho.mat * C64::new(*w, 0.0);
            total += w;
        }
        if (total - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(invalid_arg!("mixture weights sum to {total}"));
        }
        Ok(Self {
            shape: first.shape.clone(),
            mat: acc,
        })
    }

    pub fn shape(&self) -> &SpaceShape {
        &self.shape
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.mat.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest element-wise deviation from another matrix of the same shape.
    pub fn max_deviation(&self, other: &DensityMatrix) -> Result<f64> {
        same_shape(&self.shape, &other.shape)?;
        Ok(self
            .mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let shape = self.shape.concat(&other.shape)?;
        Ok(Self {
            shape,
            mat: self.mat.kronecker(&other.mat),
        })
    }
}

/// `|ψ><ψ|` for a normalized ket.
pub fn density_of(psi: &Ket) -> Result<DensityMatrix> {
    psi.require_normalized("ket")?;
    let mat = &psi.amps * psi.amps.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(psi.shape.clone(), mat))
}

/// Traces out every subsystem not listed in `keep`. Kept subsystems stay in
/// their original order regardless of the order of `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(invalid_arg!(
            "partial trace must keep at least one subsystem"
        ));
    }
    let shape = &rho.shape;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&i| i >= shape.len()) {
        return Err(invalid_arg!("subsystem {bad} out of range for {shape}"));
    }
    if kept.len() == shape.len() {
        return Ok(rho.clone());
    }
    let traced: Vec<usize> = (0..shape.len()).filter(|i| !kept.contains(i)).collect();
    let kept_shape = shape.select(&kept)?;
    let traced_dims: Vec<usize> = traced.iter().map(|&i| shape.dims[i]).collect();
    let traced_total: usize = traced_dims.iter().product();
    let traced_shape = SpaceShape { dims: traced_dims };

    // full_index[r * traced_total + t] for kept index r and traced index t
    let kept_total = kept_shape.total();
    let mut full_index = vec![0usize; kept_total * traced_total];
    let mut digits = vec![0usize; shape.len()];
    for r in 0..kept_total {
        let rd = kept_shape.digits_of(r);
        for (slot, &pos) in kept.iter().enumerate() {
            digits[pos] = rd[slot];
        }
        for t in 0..traced_total {
            let td = traced_shape.digits_of(t);
            for (slot, &pos) in traced.iter().enumerate() {
                digits[pos] = td[slot];
            }
            full_index[r * traced_total + t] = shape.index_of(&digits)?;
        }
    }

    let mat = DMatrix::from_fn(kept_total, kept_total, |r, c| {
        (0..traced_total)
            .map(|t| {
                rho.mat[(
                    full_index[r * traced_total + t],
                    full_index[c * traced_total + t],
                )]
            })
            .sum()
    });
    Ok(DensityMatrix::from_matrix_unchecked(kept_shape, mat))
}

/// `½ Σ |λ_i(ρ − σ)|` from a Hermitian eigendecomposition of the difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_shape(&rho.shape, &sigma.shape)?;
    let diff = &rho.mat - &sigma.mat;
    Ok(0.5
        * diff
            .symmetric_eigenvalues()
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

/// `<ψ|ρ|ψ>`.
pub fn state_fidelity(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    same_shape(&rho.shape, &psi.shape)?;
    let rho_psi = &rho.mat * &psi.amps;
    Ok(psi
        .amps
        .iter()
        .zip(rho_psi.iter())
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .re)
}
