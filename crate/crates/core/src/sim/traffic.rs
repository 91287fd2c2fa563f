//! Seeded traffic generation: uniform random (origin, destination, subject,
//! class) tuples over the configured registry with random payload bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::config::ScenarioConfig;
use crate::policy::SensitivityClass;

/// One proposed transfer, before any policy decision.
#[derive(Debug, Clone)]
pub struct TransferSpec {
    pub id: u64,
    pub origin: String,
    pub destination: String,
    pub subject: String,
    pub class: SensitivityClass,
    pub payload: Vec<u8>,
}

pub fn generate_traffic(config: &ScenarioConfig, count: usize, seed: u64) -> Vec<TransferSpec> {
    let codes: Vec<String> = config
        .registry
        .jurisdiction_codes()
        .map(String::from)
        .collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let origin = codes[rng.random_range(0..codes.len())].clone();
            let destination = codes[rng.random_range(0..codes.len())].clone();
            let subject = codes[rng.random_range(0..codes.len())].clone();
            let class = SensitivityClass::ALL[rng.random_range(0..SensitivityClass::ALL.len())];
            let mut payload = vec![0u8; config.payload_bytes];
            rng.fill(payload.as_mut_slice());
            TransferSpec {
                id: i as u64,
                origin,
                destination,
                subject,
                class,
                payload,
            }
        })
        .collect()
}
