//! Executable attackers: border interception with compelled key access,
//! man-in-the-middle tampering, prompt-based canary extraction and
//! membership inference. Attackers consume simulation state, never mutate
//! it, and report per-attempt outcomes so every rate is recomputable.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::{
    self, decrypt_payload, strip_transit_layer, EscrowKey, EscrowRegistry, KeyPurpose,
    LayeredCiphertext,
};
use crate::policy::Registry;
use crate::privacy::{self, private_complete, CanaryModel, PrivacyBudget, PrivacyError};
use sha2::{Digest as _, Sha256};
use std::collections::{BTreeMap, BTreeSet};

/// Outcome of one adversarial attempt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptOutcome {
    pub id: u64,
    pub success: bool,
    pub note: String,
}

/// Aggregated attack outcome; `success_rate` is recomputable from `detail`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AttackReport {
    pub attempts: usize,
    pub successes: usize,
    pub detail: Vec<AttemptOutcome>,
}

impl AttackReport {
    pub fn record(&mut self, id: u64, success: bool, note: impl Into<String>) {
        self.attempts += 1;
        if success {
            self.successes += 1;
        }
        self.detail.push(AttemptOutcome {
            id,
            success,
            note: note.into(),
        });
    }

    pub fn success_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.successes as f64 / self.attempts as f64
        }
    }
}

/// What actually travels on a wire segment.
#[derive(Debug, Clone)]
pub enum Transmission {
    /// No protection at all.
    Plaintext(Vec<u8>),
    /// Authenticated layered envelope.
    Layered(LayeredCiphertext),
    /// Confidentiality without integrity: an XOR keystream seal that any
    /// receiver will accept bit-for-bit. Deliberately weak baseline mode.
    Unauthenticated {
        key_id: String,
        nonce: [u8; 12],
        body: Vec<u8>,
    },
    /// Federated-learning model update; carries training content with a
    /// configured probability of being invertible by an observer.
    FlUpdate { content: Vec<u8>, leaks: bool },
}

/// XOR keystream derived from SHA-256 blocks; encryption and decryption are
/// the same operation, and nothing authenticates the result.
pub fn xor_stream(material: &[u8; 32], nonce: &[u8; 12], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    let mut counter: u64 = 0;
    while out.len() < data.len() {
        let mut hasher = Sha256::new();
        hasher.update(material);
        hasher.update(nonce);
        hasher.update(counter.to_le_bytes());
        let block = hasher.finalize();
        for byte in block.iter() {
            if out.len() == data.len() {
                break;
            }
            out.push(data[out.len()] ^ byte);
        }
        counter += 1;
    }
    out
}

/// One monitored unit crossing a border, with ground truth for scoring.
#[derive(Debug, Clone)]
pub struct Capture {
    pub transfer_id: u64,
    pub truth: Vec<u8>,
    pub transmission: Transmission,
}

fn try_full_recovery(
    transmission: &Transmission,
    compelled: &[EscrowKey],
) -> Option<Vec<u8>> {
    match transmission {
        Transmission::Plaintext(bytes) => Some(bytes.clone()),
        Transmission::Unauthenticated { key_id: _, nonce, body } => {
            // Any compelled key material is worth trying; the stream cipher
            // gives no feedback, so the evaluator's truth comparison decides.
            compelled
                .iter()
                .map(|k| xor_stream(k.material(), nonce, body))
                .next()
        }
        Transmission::FlUpdate { content, leaks } => leaks.then(|| content.clone()),
        Transmission::Layered(ct) => {
            let mut ct = ct.clone();
            'strip: while ct.transit_depth() > 0 {
                for key in compelled.iter().filter(|k| k.purpose == KeyPurpose::Transit) {
                    if let Ok(stripped) = strip_transit_layer(ct.clone(), key) {
                        ct = stripped;
                        continue 'strip;
                    }
                }
                return None;
            }
            compelled
                .iter()
                .filter(|k| k.purpose == KeyPurpose::Payload)
                .find_map(|k| decrypt_payload(&ct, k).ok())
        }
    }
}

/// Packet sniffing at a border gateway: the attacker compels the crossing
/// jurisdiction's escrow (when it is compellable) and attempts full
/// plaintext recovery of every capture.
pub fn border_intercept(
    captures: &[Capture],
    crossing_jurisdiction: &str,
    escrow: &EscrowRegistry,
    registry: &Registry,
) -> AttackReport {
    let compelled =
        crypto::compel_escrow(crossing_jurisdiction, escrow, registry).unwrap_or_default();
    let mut report = AttackReport::default();
    for capture in captures {
        let recovered = try_full_recovery(&capture.transmission, &compelled)
            .map(|bytes| bytes == capture.truth)
            .unwrap_or(false);
        report.record(
            capture.transfer_id,
            recovered,
            if recovered { "plaintext recovered" } else { "sealed" },
        );
    }
    report
}

/// Flip one random bit somewhere in a layered ciphertext: the outer seal,
/// a nonce, or a key id.
pub(crate) fn tamper_one_bit<R: Rng>(ct: &mut LayeredCiphertext, rng: &mut R) {
    enum Target {
        Sealed,
        PayloadNonce,
        PayloadKeyId,
        TransitNonce(usize),
        TransitKeyId(usize),
    }
    let mut targets = vec![Target::Sealed, Target::PayloadNonce, Target::PayloadKeyId];
    for i in 0..ct.transit_headers.len() {
        targets.push(Target::TransitNonce(i));
        targets.push(Target::TransitKeyId(i));
    }
    let (bytes, max_bit): (&mut [u8], u32) = match &targets[rng.random_range(0..targets.len())] {
        Target::Sealed => (&mut ct.sealed, 8),
        Target::PayloadNonce => (&mut ct.payload_header.nonce, 8),
        // Key ids are ASCII; flipping bits 0..=6 keeps them valid UTF-8.
        Target::PayloadKeyId => unsafe { (ct.payload_header.key_id.as_bytes_mut(), 7) },
        Target::TransitNonce(i) => (&mut ct.transit_headers[*i].nonce, 8),
        Target::TransitKeyId(i) => unsafe { (ct.transit_headers[*i].key_id.as_bytes_mut(), 7) },
    };
    let byte = rng.random_range(0..bytes.len());
    bytes[byte] ^= 1 << rng.random_range(0..max_bit);
}

/// Honest receiver-side acceptance check: strip every transit layer and
/// decrypt the payload with the legitimate keys. Accepting means every
/// authentication step passed.
fn receiver_accepts(transmission: &Transmission, escrow: &EscrowRegistry) -> bool {
    match transmission {
        Transmission::Plaintext(_) => true,
        Transmission::Unauthenticated { key_id, nonce, body } => {
            // Nothing to verify: XOR decryption cannot fail.
            escrow
                .all_keys()
                .find(|k| k.key_id == *key_id)
                .map(|k| {
                    let _ = xor_stream(k.material(), nonce, body);
                })
                .is_some()
        }
        Transmission::FlUpdate { .. } => true,
        Transmission::Layered(ct) => {
            let mut ct = ct.clone();
            while ct.transit_depth() > 0 {
                let key_id = ct.transit_headers.last().unwrap().key_id.clone();
                let key = match escrow.all_keys().find(|k| k.key_id == key_id) {
                    Some(k) => k.clone(),
                    None => return false,
                };
                ct = match strip_transit_layer(ct, &key) {
                    Ok(inner) => inner,
                    Err(_) => return false,
                };
            }
            let key = match escrow
                .all_keys()
                .find(|k| k.key_id == ct.payload_header.key_id)
            {
                Some(k) => k.clone(),
                None => return false,
            };
            decrypt_payload(&ct, &key).is_ok()
        }
    }
}

/// Man-in-the-middle tampering on a crossing edge: flip random bits and see
/// whether the receiver accepts the altered data. With authenticated layers
/// the acceptance count must be zero.
pub fn mitm_tamper<R: Rng>(
    captures: &[Capture],
    escrow: &EscrowRegistry,
    rng: &mut R,
) -> AttackReport {
    let mut report = AttackReport::default();
    for capture in captures {
        let mut transmission = capture.transmission.clone();
        match &mut transmission {
            Transmission::Layered(ct) => tamper_one_bit(ct, rng),
            Transmission::Unauthenticated { body, .. } | Transmission::Plaintext(body) => {
                if body.is_empty() {
                    continue;
                }
                let byte = rng.random_range(0..body.len());
                body[byte] ^= 1 << rng.random_range(0..8);
            }
            Transmission::FlUpdate { content, .. } => {
                if content.is_empty() {
                    continue;
                }
                let byte = rng.random_range(0..content.len());
                content[byte] ^= 1 << rng.random_range(0..8);
            }
        }
        let accepted = receiver_accepts(&transmission, escrow);
        report.record(
            capture.transfer_id,
            accepted,
            if accepted { "alteration accepted" } else { "alteration rejected" },
        );
    }
    report
}

/// Extraction attack parameters.
#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    /// Total number of probe queries (the per-1,000 denominator).
    pub query_budget: usize,
    /// Jurisdictions the querying users rotate through.
    pub user_jurisdictions: Vec<String>,
    /// Per-jurisdiction session budget for inference-time DP.
    pub session_epsilon_total: f64,
}

/// Extraction outcome: distinct planted secrets obtained, normalized per
/// 1,000 queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub report: AttackReport,
    pub distinct_secrets: usize,
    pub pii_per_1000: f64,
    pub blocked_by_budget: usize,
}

/// Probe canary prefixes (shuffled, cycling if the budget exceeds the
/// canary count) as users from rotating jurisdictions. A success is a
/// completion equal to a planted secret not seen before.
pub fn extraction_attack<R: Rng>(
    model: &CanaryModel,
    registry: &Registry,
    cfg: &ExtractionConfig,
    rng: &mut R,
) -> Result<ExtractionReport, PrivacyError> {
    let mut prompts: Vec<String> = model.canary_prompts().map(str::to_owned).collect();
    // Deterministic shuffle driven by the attack rng.
    for i in (1..prompts.len()).rev() {
        prompts.swap(i, rng.random_range(0..=i));
    }
    let mut budgets: BTreeMap<String, PrivacyBudget<f64>> = BTreeMap::new();
    for jur in &cfg.user_jurisdictions {
        budgets.insert(
            jur.clone(),
            PrivacyBudget::new(jur.clone(), cfg.session_epsilon_total, 0.0)?,
        );
    }
    let mut report = AttackReport::default();
    let mut secrets: BTreeSet<String> = BTreeSet::new();
    let mut blocked = 0usize;
    for attempt in 0..cfg.query_budget {
        if prompts.is_empty() {
            break;
        }
        let prompt = &prompts[attempt % prompts.len()];
        let jurisdiction = &cfg.user_jurisdictions[attempt % cfg.user_jurisdictions.len()];
        let epsilon: f64 = privacy::jurisdiction_epsilon(jurisdiction, registry)?;
        let budget = budgets.get_mut(jurisdiction).expect("session budget exists");
        let result = private_complete(model, prompt, budget, epsilon, model.profile.mode, rng);
        let success = match result {
            Ok(answer) => {
                let is_secret = model.secret_for(prompt) == Some(answer.completion.as_str());
                is_secret && secrets.insert(answer.completion)
            }
            Err(PrivacyError::BudgetExhausted { .. }) => {
                blocked += 1;
                false
            }
            Err(e) => return Err(e),
        };
        report.record(attempt as u64, success, if success { "secret extracted" } else { "no leak" });
    }
    let attempts = report.attempts.max(1);
    Ok(ExtractionReport {
        distinct_secrets: secrets.len(),
        pii_per_1000: secrets.len() as f64 * 1000.0 / attempts as f64,
        blocked_by_budget: blocked,
        report,
    })
}

/// Candidate record for membership inference.
#[derive(Debug, Clone)]
pub struct MiCandidate {
    pub prompt: String,
    pub expected_secret: String,
    pub is_member: bool,
}

/// Membership-inference outcome: advantage = TPR - FPR.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiReport {
    pub report: AttackReport,
    pub true_positive_rate: f64,
    pub false_positive_rate: f64,
    pub advantage: f64,
}

/// Query each candidate once and guess "member" iff the completion equals
/// the candidate's expected secret.
pub fn membership_inference<R: Rng>(
    model: &CanaryModel,
    registry: &Registry,
    candidates: &[MiCandidate],
    user_jurisdiction: &str,
    session_epsilon_total: f64,
    rng: &mut R,
) -> Result<MiReport, PrivacyError> {
    let epsilon: f64 = privacy::jurisdiction_epsilon(user_jurisdiction, registry)?;
    let mut budget = PrivacyBudget::new(user_jurisdiction, session_epsilon_total, 0.0)?;
    let mut report = AttackReport::default();
    let (mut tp, mut fp, mut members, mut nonmembers) = (0usize, 0usize, 0usize, 0usize);
    for (i, candidate) in candidates.iter().enumerate() {
        let answer = match private_complete(
            model,
            &candidate.prompt,
            &mut budget,
            epsilon,
            model.profile.mode,
            rng,
        ) {
            Ok(a) => a.completion,
            Err(PrivacyError::BudgetExhausted { .. }) => String::new(),
            Err(e) => return Err(e),
        };
        let guessed_member = answer == candidate.expected_secret;
        if candidate.is_member {
            members += 1;
            if guessed_member {
                tp += 1;
            }
        } else {
            nonmembers += 1;
            if guessed_member {
                fp += 1;
            }
        }
        let correct = guessed_member == candidate.is_member;
        report.record(i as u64, correct, if guessed_member { "guessed member" } else { "guessed non-member" });
    }
    let tpr = if members == 0 { 0.0 } else { tp as f64 / members as f64 };
    let fpr = if nonmembers == 0 { 0.0 } else { fp as f64 / nonmembers as f64 };
    Ok(MiReport {
        report,
        true_positive_rate: tpr,
        false_positive_rate: fpr,
        advantage: tpr - fpr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{add_transit_layer, encrypt_payload};
    use crate::policy::tests::test_registry;
    use crate::privacy::{DpMode, ModelProfile, PromptSet};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn prompts(canaries: usize) -> PromptSet {
        PromptSet {
            canaries: (0..canaries)
                .map(|i| (format!("pii-record-{i:04}"), format!("ssn={i:09}")))
                .collect(),
            background: (0..8)
                .map(|i| (format!("fact-prompt-{i:04}"), format!("fact-answer-{i:04}")))
                .collect(),
        }
    }

    fn model(mode: DpMode, strength: f64, damping: f64, canaries: usize, seed: u64) -> CanaryModel {
        let mut rng = StdRng::seed_from_u64(seed);
        CanaryModel::build(
            &prompts(canaries),
            ModelProfile {
                mode,
                memorization_strength: strength,
                train_damping: damping,
                degradation_factor: 0.10,
            },
            &mut rng,
        )
    }

    fn extraction_cfg(budget: usize) -> ExtractionConfig {
        ExtractionConfig {
            query_budget: budget,
            user_jurisdictions: vec!["BB".into(), "AA".into(), "CC".into()],
            session_epsilon_total: 10_000.0,
        }
    }

    #[test]
    fn proposed_layout_resists_border_compulsion() {
        let reg = test_registry();
        let mut escrow = EscrowRegistry::new();
        let mut rng = StdRng::seed_from_u64(0xB0);
        let payload_key = escrow.generate_key("BB", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let transit_key = escrow.generate_key("BB", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        // Attacker compels AA at the crossing; the payload key lives in BB.
        let captures: Vec<Capture> = (0..50)
            .map(|i| {
                let truth = vec![i as u8; 16];
                let ct = encrypt_payload(&truth, &payload_key, &mut rng).unwrap();
                let ct = add_transit_layer(ct, &transit_key, &mut rng).unwrap();
                Capture {
                    transfer_id: i,
                    truth,
                    transmission: Transmission::Layered(ct),
                }
            })
            .collect();
        let report = border_intercept(&captures, "AA", &escrow, &reg);
        assert_eq!(report.attempts, 50);
        assert_eq!(report.successes, 0);
    }

    #[test]
    fn replicated_key_layout_falls_to_compulsion() {
        let reg = test_registry();
        let mut escrow = EscrowRegistry::new();
        let mut rng = StdRng::seed_from_u64(0xB1);
        let shared = escrow.generate_key("BB", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        escrow.register_replica(&shared, "AA");
        escrow.register_replica(&shared, "CC");
        let captures: Vec<Capture> = (0..50)
            .map(|i| {
                let truth = vec![i as u8; 16];
                let ct = encrypt_payload(&truth, &shared, &mut rng).unwrap();
                Capture {
                    transfer_id: i,
                    truth,
                    transmission: Transmission::Layered(ct),
                }
            })
            .collect();
        let report = border_intercept(&captures, "CC", &escrow, &reg);
        assert_eq!(report.successes, 50);
    }

    #[test]
    fn compelled_recovery_matches_membership_oracle_on_random_layouts() {
        let reg = test_registry();
        let mut rng = StdRng::seed_from_u64(0xB2);
        for _ in 0..200 {
            let mut escrow = EscrowRegistry::new();
            let jurisdictions = ["AA", "BB", "CC"];
            let key_home = jurisdictions[rng.random_range(0..3)];
            let payload_key = escrow
                .generate_key(key_home, KeyPurpose::Payload, &reg, &mut rng)
                .unwrap();
            if rng.random::<bool>() {
                escrow.register_replica(&payload_key, jurisdictions[rng.random_range(0..3)]);
            }
            let truth = vec![7u8; 24];
            let ct = encrypt_payload(&truth, &payload_key, &mut rng).unwrap();
            let captures = [Capture {
                transfer_id: 0,
                truth: truth.clone(),
                transmission: Transmission::Layered(ct),
            }];
            let crossing = jurisdictions[rng.random_range(0..3)];
            let report = border_intercept(&captures, crossing, &escrow, &reg);
            let oracle = crypto::compel_escrow(crossing, &escrow, &reg)
                .map(|keys| {
                    keys.iter().any(|k| k.material() == payload_key.material())
                })
                .unwrap_or(false);
            assert_eq!(report.successes == 1, oracle, "crossing {crossing}");
        }
    }

    #[test]
    fn aead_tampering_never_accepted() {
        let reg = test_registry();
        let mut escrow = EscrowRegistry::new();
        let mut rng = StdRng::seed_from_u64(0xB3);
        let kp = escrow.generate_key("BB", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let kt = escrow.generate_key("AA", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let captures: Vec<Capture> = (0..500)
            .map(|i| {
                let truth = vec![i as u8; 32];
                let ct = encrypt_payload(&truth, &kp, &mut rng).unwrap();
                let ct = add_transit_layer(ct, &kt, &mut rng).unwrap();
                Capture {
                    transfer_id: i,
                    truth,
                    transmission: Transmission::Layered(ct),
                }
            })
            .collect();
        let report = mitm_tamper(&captures, &escrow, &mut rng);
        assert_eq!(report.attempts, 500);
        assert_eq!(report.successes, 0);
    }

    #[test]
    fn unauthenticated_mode_accepts_alterations() {
        let reg = test_registry();
        let mut escrow = EscrowRegistry::new();
        let mut rng = StdRng::seed_from_u64(0xB4);
        let key = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let captures: Vec<Capture> = (0..100)
            .map(|i| {
                let truth = vec![i as u8; 32];
                let mut nonce = [0u8; 12];
                rng.fill(&mut nonce);
                let body = xor_stream(key.material(), &nonce, &truth);
                Capture {
                    transfer_id: i,
                    truth,
                    transmission: Transmission::Unauthenticated {
                        key_id: key.key_id.clone(),
                        nonce,
                        body,
                    },
                }
            })
            .collect();
        let report = mitm_tamper(&captures, &escrow, &mut rng);
        assert_eq!(report.successes, report.attempts);
        assert!(report.successes > 0);
    }

    #[test]
    fn xor_stream_roundtrips() {
        let material = [3u8; 32];
        let nonce = [9u8; 12];
        let data = b"hello across the border".to_vec();
        let sealed = xor_stream(&material, &nonce, &data);
        assert_ne!(sealed, data);
        assert_eq!(xor_stream(&material, &nonce, &sealed), data);
    }

    #[test]
    fn nodp_full_strength_extraction_finds_every_canary() {
        let reg = test_registry();
        let m = model(DpMode::NoDp, 1.0, 0.0, 10, 42);
        let mut rng = StdRng::seed_from_u64(1);
        let report = extraction_attack(&m, &reg, &extraction_cfg(1000), &mut rng).unwrap();
        assert_eq!(report.distinct_secrets, 10);
    }

    #[test]
    fn extraction_on_empty_canary_set_is_zero() {
        let reg = test_registry();
        let m = model(DpMode::NoDp, 1.0, 0.0, 0, 42);
        let mut rng = StdRng::seed_from_u64(1);
        let report = extraction_attack(&m, &reg, &extraction_cfg(1000), &mut rng).unwrap();
        assert_eq!(report.distinct_secrets, 0);
        assert_eq!(report.pii_per_1000, 0.0);
    }

    #[test]
    fn near_zero_epsilon_releases_about_half() {
        // eps -> 0 turns the release gate into a fair coin; with strength 1
        // and one probe per canary the expectation is |canaries|/2.
        let registry_eps0 = {
            use crate::policy::*;
            let regime = RegulationRegime::new(
                "r0",
                false,
                SensitivityClass::Public,
                vec![],
                SensitivityClass::ALL
                    .into_iter()
                    .map(|c| (c, ControlSet::new()))
                    .collect(),
            )
            .unwrap();
            Registry::new(
                vec![Jurisdiction {
                    code: "J0".into(),
                    regime_id: "r0".into(),
                    epsilon_default: 1e-9,
                    compelled_access: false,
                }],
                vec![regime],
            )
            .unwrap()
        };
        let m = model(DpMode::InferenceDp, 1.0, 0.0, 400, 7);
        let mut rng = StdRng::seed_from_u64(12);
        let cfg = ExtractionConfig {
            query_budget: 400,
            user_jurisdictions: vec!["J0".into()],
            session_epsilon_total: 1.0,
        };
        let report = extraction_attack(&m, &registry_eps0, &cfg, &mut rng).unwrap();
        let got = report.distinct_secrets as f64;
        assert!(
            (got - 200.0).abs() < 40.0,
            "expected about half of 400, got {got}"
        );
    }

    #[test]
    fn budget_exhaustion_blocks_probes() {
        let reg = test_registry();
        let m = model(DpMode::InferenceDp, 1.0, 0.0, 100, 3);
        let mut rng = StdRng::seed_from_u64(5);
        let cfg = ExtractionConfig {
            query_budget: 100,
            user_jurisdictions: vec!["BB".into()],
            // Ten queries at 0.8 fit; the rest are refused.
            session_epsilon_total: 8.0,
        };
        let report = extraction_attack(&m, &reg, &cfg, &mut rng).unwrap();
        assert_eq!(report.blocked_by_budget, 90);
        assert!(report.distinct_secrets <= 10);
    }

    #[test]
    fn mi_perfect_recall_gives_full_advantage() {
        let reg = test_registry();
        let m = model(DpMode::NoDp, 1.0, 0.0, 50, 21);
        let mut rng = StdRng::seed_from_u64(2);
        let mut candidates: Vec<MiCandidate> = (0..50)
            .map(|i| MiCandidate {
                prompt: format!("pii-record-{i:04}"),
                expected_secret: format!("ssn={i:09}"),
                is_member: true,
            })
            .collect();
        candidates.extend((0..50).map(|i| MiCandidate {
            prompt: format!("decoy-record-{i:04}"),
            expected_secret: format!("ssn=9{i:08}"),
            is_member: false,
        }));
        let report =
            membership_inference(&m, &reg, &candidates, "AA", 1000.0, &mut rng).unwrap();
        assert_eq!(report.advantage, 1.0);
        assert_eq!(report.false_positive_rate, 0.0);
    }

    #[test]
    fn mi_decoys_only_has_zero_advantage() {
        let reg = test_registry();
        let m = model(DpMode::NoDp, 1.0, 0.0, 10, 21);
        let mut rng = StdRng::seed_from_u64(2);
        let candidates: Vec<MiCandidate> = (0..40)
            .map(|i| MiCandidate {
                prompt: format!("decoy-record-{i:04}"),
                expected_secret: format!("ssn=9{i:08}"),
                is_member: false,
            })
            .collect();
        let report =
            membership_inference(&m, &reg, &candidates, "AA", 1000.0, &mut rng).unwrap();
        assert_eq!(report.advantage, 0.0);
    }

    #[test]
    fn mi_advantage_under_inference_dp_respects_rr_bound() {
        let reg = test_registry();
        // Strength 0.5 keeps s*p below tanh(eps/2) while staying non-trivial.
        let m = model(DpMode::InferenceDp, 0.5, 0.0, 2000, 77);
        let mut rng = StdRng::seed_from_u64(6);
        let mut candidates: Vec<MiCandidate> = (0..2000)
            .map(|i| MiCandidate {
                prompt: format!("pii-record-{i:04}"),
                expected_secret: format!("ssn={i:09}"),
                is_member: true,
            })
            .collect();
        candidates.extend((0..2000).map(|i| MiCandidate {
            prompt: format!("decoy-record-{i:04}"),
            expected_secret: format!("ssn=9{i:08}"),
            is_member: false,
        }));
        let report =
            membership_inference(&m, &reg, &candidates, "BB", 100_000.0, &mut rng).unwrap();
        let eps = 0.8f64;
        let p = eps.exp() / (1.0 + eps.exp());
        let expected = 0.5 * p;
        let bound = (eps.exp() - 1.0) / (eps.exp() + 1.0);
        // 3 sigma Monte Carlo tolerance on 2000 members.
        let sigma = (expected * (1.0 - expected) / 2000.0).sqrt();
        assert!((report.advantage - expected).abs() < 3.0 * sigma + 0.01);
        assert!(report.advantage <= bound + 3.0 * sigma + 0.01);
    }

    #[test]
    fn reports_recompute_and_serialize_deterministically() {
        let reg = test_registry();
        let m = model(DpMode::InferenceDp, 0.5, 0.2, 64, 4);
        let run = |seed: u64| {
            let mut rng = StdRng::seed_from_u64(seed);
            extraction_attack(&m, &reg, &extraction_cfg(64), &mut rng).unwrap()
        };
        let (a, b) = (run(9), run(9));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let recomputed = a.report.detail.iter().filter(|d| d.success).count();
        assert_eq!(recomputed, a.report.successes);
    }
}
