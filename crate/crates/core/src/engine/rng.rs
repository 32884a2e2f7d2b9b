use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Triangular};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EngineError;

const DOMAIN: &[u8] = b"retail-sim/stream/v1";

/// Derives a 32-byte generator seed from a master seed and a label.
///
/// The derivation is `SHA-256(DOMAIN || master_seed as u64 LE || label)`.
/// It is part of the reproducibility contract and must not change.
pub fn derive_seed(master_seed: u64, label: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label);
    hasher.finalize().into()
}

/// Sampling distributions, parameterised in minutes where they model time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dist {
    Exponential { mean: f64 },
    Uniform { low: f64, high: f64 },
    Triangular { low: f64, mode: f64, high: f64 },
    Bernoulli { p: f64 },
    /// Always the same value. May be `+inf`, e.g. for unlimited patience.
    Fixed { value: f64 },
}

impl Dist {
    pub fn validate(&self) -> Result<(), EngineError> {
        let ok = match *self {
            Dist::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            Dist::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Dist::Triangular { low, mode, high } => {
                low.is_finite() && high.is_finite() && low <= mode && mode <= high
            }
            Dist::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Dist::Fixed { value } => !value.is_nan(),
        };
        if ok {
            Ok(())
        } else {
            Err(EngineError::BadDistributionParams(format!("{self:?}")))
        }
    }

    /// Analytic mean, used by tests and calibration notes.
    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Exponential { mean } => mean,
            Dist::Uniform { low, high } => 0.5 * (low + high),
            Dist::Triangular { low, mode, high } => (low + mode + high) / 3.0,
            Dist::Bernoulli { p } => p,
            Dist::Fixed { value } => value,
        }
    }

    /// True when every sample is non-negative (time-valued use).
    pub fn is_non_negative(&self) -> bool {
        match *self {
            Dist::Exponential { .. } | Dist::Bernoulli { .. } => true,
            Dist::Uniform { low, .. } | Dist::Triangular { low, .. } => low >= 0.0,
            Dist::Fixed { value } => value >= 0.0,
        }
    }
}

/// A named, independently seeded random-number stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    name: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, name: &str) -> Self {
        RngStream {
            name: name.to_owned(),
            rng: ChaCha8Rng::from_seed(derive_seed(master_seed, name.as_bytes())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sample(&mut self, dist: &Dist) -> Result<f64, EngineError> {
        dist.validate()?;
        let v = match *dist {
            Dist::Exponential { mean } => {
                let exp = Exp::new(1.0 / mean)
                    .map_err(|e| EngineError::BadDistributionParams(e.to_string()))?;
                exp.sample(&mut self.rng)
            }
            Dist::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    self.rng.random_range(low..high)
                }
            }
            Dist::Triangular { low, mode, high } => {
                if low == high {
                    low
                } else {
                    Triangular::new(low, high, mode)
                        .map_err(|e| EngineError::BadDistributionParams(e.to_string()))?
                        .sample(&mut self.rng)
                }
            }
            Dist::Bernoulli { p } => {
                if self.chance(p) {
                    1.0
                } else {
                    0.0
                }
            }
            Dist::Fixed { value } => value,
        };
        Ok(v)
    }

    /// Bernoulli draw. `p` outside `[0, 1]` is clamped.
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.rng.random::<f64>() < p
        }
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}
