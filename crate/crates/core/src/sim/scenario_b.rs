//! Model extraction experiment: build the variant's model, run repeated
//! seeded extraction and membership-inference rounds against it, and
//! average leakage, utility retention and inference advantage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::adversary::{extraction_attack, membership_inference, ExtractionConfig, MiCandidate};
use crate::config::{ScenarioConfig, VariantTuning};
use crate::privacy::{utility_retention, CanaryModel, ModelProfile};
use crate::report::{MetricsRow, ReferenceModelRow, Scenario};
use crate::sim::{derive_seed, ArchitectureVariant};

struct ModelStats {
    pii_per_1000: f64,
    utility: f64,
    mi_advantage: f64,
    extraction_success_rate: f64,
}

fn evaluate_model(config: &ScenarioConfig, name: &str, tuning: &VariantTuning) -> ModelStats {
    let rounds = config.privacy.extraction_rounds.max(1);
    let profile = ModelProfile {
        mode: tuning.dp_mode,
        memorization_strength: config.privacy.base_memorization_strength,
        train_damping: tuning.train_damping,
        degradation_factor: config.privacy.degradation_factor,
    };
    let extraction_cfg = ExtractionConfig {
        query_budget: config.privacy.query_budget,
        user_jurisdictions: config.privacy.user_jurisdictions.clone(),
        session_epsilon_total: config.privacy.session_epsilon_total,
    };
    let mut pii_sum = 0.0;
    let mut utility_sum = 0.0;
    let mut advantage_sum = 0.0;
    let mut rate_sum = 0.0;
    for round in 0..rounds {
        let seed = derive_seed(config.seed, &format!("scenario-b:{name}:round:{round}"));
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let model = CanaryModel::build(&config.prompts, profile, &mut rng);
        let extraction = extraction_attack(&model, &config.registry, &extraction_cfg, &mut rng)
            .expect("validated extraction config");
        pii_sum += extraction.pii_per_1000;
        rate_sum += extraction.report.success_rate();
        utility_sum += utility_retention(&model, &config.prompts.background)
            .expect("config requires background prompts");
        let candidates = mi_candidates(config, &mut rng);
        let mi = membership_inference(
            &model,
            &config.registry,
            &candidates,
            &config.privacy.mi_user_jurisdiction,
            config.privacy.session_epsilon_total,
            &mut rng,
        )
        .expect("validated membership config");
        advantage_sum += mi.advantage;
    }
    let n = rounds as f64;
    ModelStats {
        pii_per_1000: pii_sum / n,
        utility: utility_sum / n,
        mi_advantage: advantage_sum / n,
        extraction_success_rate: rate_sum / n,
    }
}

/// Half planted canaries, half never-trained decoys with plausible secrets.
fn mi_candidates<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> Vec<MiCandidate> {
    let per_class = config.privacy.mi_candidates_per_class;
    let canaries = &config.prompts.canaries;
    let mut indices: Vec<usize> = (0..canaries.len()).collect();
    for i in (1..indices.len()).rev() {
        indices.swap(i, rng.random_range(0..=i));
    }
    let mut candidates: Vec<MiCandidate> = indices
        .into_iter()
        .take(per_class)
        .map(|i| MiCandidate {
            prompt: canaries[i].0.clone(),
            expected_secret: canaries[i].1.clone(),
            is_member: true,
        })
        .collect();
    candidates.extend((0..per_class).map(|i| MiCandidate {
        prompt: format!("decoy-record-{i:04}"),
        expected_secret: format!("decoy-secret-{i:04}"),
        is_member: false,
    }));
    candidates
}

pub fn run(config: &ScenarioConfig, variant: ArchitectureVariant) -> MetricsRow {
    let stats = evaluate_model(config, variant.name(), variant.tuning(config));
    let mut row = MetricsRow::new(Scenario::ModelExtraction, variant.name(), variant.label());
    row.transfers_total = config.privacy.query_budget * config.privacy.extraction_rounds;
    row.transfers_executed = row.transfers_total;
    row.pii_per_1000 = Some(stats.pii_per_1000);
    row.utility_retention = Some(stats.utility);
    row.mi_advantage = Some(stats.mi_advantage);
    row.asr = Some(stats.extraction_success_rate);
    row
}

pub fn run_reference_model(
    config: &ScenarioConfig,
    name: &str,
    label: &str,
    tuning: &VariantTuning,
) -> ReferenceModelRow {
    let stats = evaluate_model(config, name, tuning);
    ReferenceModelRow {
        model: name.to_owned(),
        label: label.to_owned(),
        pii_per_1000: stats.pii_per_1000,
        utility_retention: stats.utility,
        mi_advantage: stats.mi_advantage,
    }
}
