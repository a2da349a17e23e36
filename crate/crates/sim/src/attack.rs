//! Byzantine worker behaviors for robustness experiments. Each attack maps
//! the honest update a worker would have sent to the vector it actually
//! submits.

use aegis_core::SeedRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    #[default]
    None,
    /// Send `-factor * x`.
    SignFlip { factor: f64 },
    /// Send a constant vector.
    LargeValue { value: f64 },
    /// Send pure Gaussian noise.
    RandomGaussian { sigma: f64 },
    /// Colluders add an agreed constant shift, staying close to each other.
    ColludeShift { shift: f64 },
}

impl AttackSpec {
    pub fn apply(&self, honest: &[f64], rng: &mut SeedRng) -> Vec<f64> {
        match *self {
            AttackSpec::None => honest.to_vec(),
            AttackSpec::SignFlip { factor } => honest.iter().map(|v| -factor * v).collect(),
            AttackSpec::LargeValue { value } => vec![value; honest.len()],
            AttackSpec::RandomGaussian { sigma } => {
                let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
                honest.iter().map(|_| normal.sample(rng)).collect()
            }
            AttackSpec::ColludeShift { shift } => honest.iter().map(|v| v + shift).collect(),
        }
    }
}
