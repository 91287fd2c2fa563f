//! Deterministic scenario engine: wires policy, routing, crypto, audit,
//! privacy and adversaries into three experiments across four architecture
//! variants and computes every reported metric. The same config and seed
//! always produce identical results; wall-clock measurements are kept in a
//! separate timing bundle.

mod pipeline;
mod scenario_a;
mod scenario_b;
mod scenario_c;
mod traffic;

pub use pipeline::{CryptoSetup, EnforcementMode, TransferOutcome};
pub use traffic::{generate_traffic, TransferSpec};

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::audit::{AuditManifest, MerkleLog};
use crate::config::{ScenarioConfig, VariantTuning};
use crate::report::{MeasuredTimings, MetricsRow, ReferenceModelRow, ResultsBundle, RunMeta, TimingsBundle};

/// The four evaluated system architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchitectureVariant {
    StandardEncryption,
    FederatedLearning,
    LocalizationDp,
    Proposed,
}

impl ArchitectureVariant {
    pub const ALL: [ArchitectureVariant; 4] = [
        ArchitectureVariant::StandardEncryption,
        ArchitectureVariant::FederatedLearning,
        ArchitectureVariant::LocalizationDp,
        ArchitectureVariant::Proposed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ArchitectureVariant::StandardEncryption => "standard-encryption",
            ArchitectureVariant::FederatedLearning => "federated-learning",
            ArchitectureVariant::LocalizationDp => "localization-dp",
            ArchitectureVariant::Proposed => "proposed",
        }
    }

    /// Human-facing label used in rendered tables.
    pub fn label(&self) -> &'static str {
        match self {
            ArchitectureVariant::StandardEncryption => "Standard Encryption",
            ArchitectureVariant::FederatedLearning => "Federated Learning",
            ArchitectureVariant::LocalizationDp => "Data Localization + DP",
            ArchitectureVariant::Proposed => "Proposed Arch.",
        }
    }

    /// Pre-transfer policy blocking.
    pub fn enforces_policy(&self) -> bool {
        matches!(self, ArchitectureVariant::Proposed)
    }

    /// Policy-filtered route planning instead of static shortest paths.
    pub fn policy_routing(&self) -> bool {
        matches!(self, ArchitectureVariant::Proposed)
    }

    /// Control-driven encryption (classify, then apply mandated controls).
    pub fn applies_controls(&self) -> bool {
        matches!(self, ArchitectureVariant::Proposed)
    }

    /// Single payload key replicated into every jurisdiction's escrow.
    pub fn replicated_keys(&self) -> bool {
        matches!(
            self,
            ArchitectureVariant::StandardEncryption | ArchitectureVariant::LocalizationDp
        )
    }

    /// Raw transfers replaced by model-update flows to an aggregator.
    pub fn federated_transport(&self) -> bool {
        matches!(self, ArchitectureVariant::FederatedLearning)
    }

    pub fn tuning<'c>(&self, config: &'c ScenarioConfig) -> &'c VariantTuning {
        match self {
            ArchitectureVariant::StandardEncryption => &config.standard_encryption,
            ArchitectureVariant::FederatedLearning => &config.federated_learning,
            ArchitectureVariant::LocalizationDp => &config.localization_dp,
            ArchitectureVariant::Proposed => &config.proposed,
        }
    }
}

impl fmt::Display for ArchitectureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Derive a child seed from the master seed and a purpose label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is long enough"))
}

/// Deterministic coin in [0, 1) keyed on a seed, a label and arbitrary
/// parts. Used for per-transfer events (monitoring, misclassification,
/// leak draws) so every variant sees the same world.
pub fn unit_hash(seed: u64, label: &str, parts: &[&[u8]]) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    for part in parts {
        hasher.update([0x1f]);
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let raw = u64::from_le_bytes(digest[..8].try_into().expect("sha256 is long enough"));
    raw as f64 / (u64::MAX as f64 + 1.0)
}

/// Everything one full run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub results: ResultsBundle,
    pub timings: TimingsBundle,
    /// Line-delimited canonical audit records from the proposed variant's
    /// strict compliance run.
    pub audit_export: String,
    pub audit_manifest: AuditManifest,
}

/// Which scenarios to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioFilter {
    pub scenario_a: bool,
    pub scenario_b: bool,
    pub scenario_c: bool,
    pub variants: [bool; 4],
}

impl Default for ScenarioFilter {
    fn default() -> Self {
        Self {
            scenario_a: true,
            scenario_b: true,
            scenario_c: true,
            variants: [true; 4],
        }
    }
}

impl ScenarioFilter {
    pub fn variant_enabled(&self, variant: ArchitectureVariant) -> bool {
        let idx = ArchitectureVariant::ALL
            .iter()
            .position(|v| *v == variant)
            .expect("variant listed");
        self.variants[idx]
    }
}

/// Run every selected scenario for every selected variant.
pub fn run_all(config: &ScenarioConfig, filter: &ScenarioFilter) -> RunOutput {
    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut reference: Vec<ReferenceModelRow> = Vec::new();
    let mut measured: Vec<MeasuredTimings> = Vec::new();
    let mut audit_export = String::new();
    let mut audit_manifest = AuditManifest::from_log(&MerkleLog::new());

    if filter.scenario_a {
        let traffic = generate_traffic(
            config,
            config.traffic.scenario_a_transfers,
            derive_seed(config.seed, "traffic-a"),
        );
        for variant in ArchitectureVariant::ALL {
            if filter.variant_enabled(variant) {
                rows.push(scenario_a::run(config, variant, &traffic));
            }
        }
    }
    if filter.scenario_b {
        for variant in ArchitectureVariant::ALL {
            if filter.variant_enabled(variant) {
                rows.push(scenario_b::run(config, variant));
            }
        }
        reference.push(scenario_b::run_reference_model(
            config,
            "train-time-dp",
            "Standard Training-Time DP",
            &config.reference_train_time_dp,
        ));
    }
    if filter.scenario_c {
        let traffic = generate_traffic(
            config,
            config.traffic.scenario_c_transfers,
            derive_seed(config.seed, "traffic-c"),
        );
        let prob_traffic = generate_traffic(
            config,
            config.traffic.scenario_c_probabilistic_transfers,
            derive_seed(config.seed, "traffic-c-prob"),
        );
        for variant in ArchitectureVariant::ALL {
            if !filter.variant_enabled(variant) {
                continue;
            }
            let outcome = scenario_c::run(config, variant, &traffic, &prob_traffic);
            rows.push(outcome.metrics);
            measured.push(outcome.measured);
            if variant == ArchitectureVariant::Proposed {
                audit_export = outcome.audit_export;
                audit_manifest = outcome
                    .audit_manifest
                    .with_provenance(&config.config_hash, config.seed);
            }
        }
    }

    let results = ResultsBundle {
        meta: RunMeta {
            config_hash: config.config_hash.clone(),
            fixture_hash: config.fixture_hash.clone(),
            seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        },
        rows,
        scenario_b_reference: reference,
    };
    let timings = TimingsBundle {
        config_hash: config.config_hash.clone(),
        seed: config.seed,
        measured,
    };
    RunOutput {
        results,
        timings,
        audit_export,
        audit_manifest,
    }
}
