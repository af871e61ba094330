//! Haar-random pure states.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_arg, Result};
use crate::hilbert::{bloch_ket, Ket, C64};

/// Uniform qubit on the Bloch sphere: θ = arccos(1 − 2u), φ = 2πv.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> Ket {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    bloch_ket((1.0 - 2.0 * u).acos(), 2.0 * PI * v)
}

/// Haar-random qudit from a normalized complex Gaussian vector. Qubits go
/// through [`haar_qubit`].
pub fn haar_qudit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Ket> {
    if dim < 2 {
        return Err(invalid_arg!("qudit dimension {dim} is below 2"));
    }
    if dim == 2 {
        return Ok(haar_qubit(rng));
    }
    loop {
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(k) = Ket::qudit(amps)?.normalized() {
            return Ok(k);
        }
    }
}

/// Random normalized vector over an arbitrary shape.
pub fn random_ket<R: Rng + ?Sized>(shape: &crate::hilbert::SpaceShape, rng: &mut R) -> Ket {
    loop {
        let amps: Vec<C64> = (0..shape.total())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let k = Ket::new(shape.clone(), amps).expect("amplitude count matches shape");
        if let Ok(k) = k.normalized() {
            return k;
        }
    }
}
