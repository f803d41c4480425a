//! Seeded generators for the synthetic benchmarks.
//!
//! Every generator is a pure function of its config: group `i` draws from its
//! own ChaCha stream derived from `(seed, i)`, so output does not depend on
//! how groups are scheduled across threads.

mod circuit;
mod fbm;
mod gas;
mod rough_vol;

pub use circuit::{circuit_device, gen_circuit, CircuitConfig};
pub use fbm::{fgn_autocovariance, gen_fbm, FbmSampler};
pub use gas::{gen_ideal_gas, simulate_gas, GasConfig, GasRun};
pub use rough_vol::{gen_rough_vol, simulate_fou, RoughVolConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG stream for group `index` under `seed`.
pub fn group_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub(crate) fn check_range(name: &str, range: [f64; 2], lo: f64, hi: f64) -> crate::Result<()> {
    let [a, b] = range;
    if !(a.is_finite() && b.is_finite() && a <= b && a >= lo && b <= hi) {
        return Err(crate::Error::config(format!(
            "{name} [{a}, {b}] must be an ordered range within [{lo}, {hi}]"
        )));
    }
    Ok(())
}

pub(crate) fn uniform<R: rand::Rng>(rng: &mut R, range: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    range[0] + u * (range[1] - range[0])
}

/// Generator name plus config, as stored in manifests and experiment configs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Circuit(CircuitConfig),
    IdealGas(GasConfig),
    RoughVol(RoughVolConfig),
}

impl GeneratorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorConfig::Circuit(_) => "circuit",
            GeneratorConfig::IdealGas(_) => "ideal_gas",
            GeneratorConfig::RoughVol(_) => "rough_vol",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            GeneratorConfig::Circuit(c) => c.seed,
            GeneratorConfig::IdealGas(c) => c.seed,
            GeneratorConfig::RoughVol(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            GeneratorConfig::Circuit(c) => c.seed = seed,
            GeneratorConfig::IdealGas(c) => c.seed = seed,
            GeneratorConfig::RoughVol(c) => c.seed = seed,
        }
    }

    pub fn generate(&self) -> crate::Result<sigdr_core::Dataset> {
        match self {
            GeneratorConfig::Circuit(c) => gen_circuit(c),
            GeneratorConfig::IdealGas(c) => gen_ideal_gas(c),
            GeneratorConfig::RoughVol(c) => gen_rough_vol(c),
        }
    }
}
