//! Tolerances, run manifests and deterministic seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid_arg, Result};

/// Environment variable that overrides the default run seed.
pub const SEED_ENV: &str = "QDEL_SEED";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub algebraic_tol: f64,
    pub eigen_tol: f64,
    pub grid_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            algebraic_tol: 1e-12,
            eigen_tol: 1e-10,
            grid_step: 1e-4,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.algebraic_tol, self.eigen_tol, self.grid_step];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid_arg!(
                "tolerances must be finite and positive: {self:?}"
            ));
        }
        if self.algebraic_tol > self.eigen_tol {
            return Err(invalid_arg!(
                "algebraic tolerance {} exceeds eigenvalue tolerance {}",
                self.algebraic_tol,
                self.eigen_tol
            ));
        }
        if self.grid_step >= 1.0 {
            return Err(invalid_arg!("grid step {} must be below 1", self.grid_step));
        }
        Ok(())
    }

    /// Replaces the algebraic tolerance, raising the eigenvalue tolerance
    /// along with it if needed.
    pub fn with_algebraic_tol(mut self, tol: f64) -> Result<Self> {
        self.algebraic_tol = tol;
        self.eigen_tol = self.eigen_tol.max(tol);
        self.validate()?;
        Ok(self)
    }
}

/// Everything needed to reproduce a run bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config: ToleranceConfig,
    pub command: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(seed: u64, config: ToleranceConfig, command: impl Into<String>) -> Self {
        Self {
            seed,
            config,
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Seed from `QDEL_SEED`, or [`DEFAULT_SEED`] when unset.
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid_arg!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Sub-seed for one operation: first eight bytes of
/// SHA-256(seed_le ‖ module ‖ 0x00 ‖ operation).
pub fn derive_seed(seed: u64, module: &str, operation: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(module.as_bytes());
    h.update([0u8]);
    h.update(operation.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_for(seed: u64, module: &str, operation: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, module, operation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn default_config_is_valid() {
        ToleranceConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_tolerances() {
        for algebraic_tol in [0.0, 1e-8] {
            let c = ToleranceConfig {
                algebraic_tol,
                ..Default::default()
            };
            assert!(c.validate().is_err());
        }
        assert!(
            ToleranceConfig::default()
                .with_algebraic_tol(1e-8)
                .unwrap()
                .eigen_tol
                >= 1e-8
        );
        assert!(ToleranceConfig::default()
            .with_algebraic_tol(f64::NAN)
            .is_err());
    }

    #[test]
    fn sub_seeds_are_stable_and_distinct() {
        assert_eq!(
            derive_seed(7, "machines", "classify"),
            derive_seed(7, "machines", "classify")
        );
        assert_ne!(
            derive_seed(7, "machines", "classify"),
            derive_seed(8, "machines", "classify")
        );
        assert_ne!(
            derive_seed(7, "machines", "classify"),
            derive_seed(7, "machine", "sclassify")
        );
        let a: Vec<u32> = rng_for(1, "m", "o").random_iter().take(4).collect();
        let b: Vec<u32> = rng_for(1, "m", "o").random_iter().take(4).collect();
        assert_eq!(a, b);
    }
}
