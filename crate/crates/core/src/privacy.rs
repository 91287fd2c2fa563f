//! Jurisdiction-aware inference-time differential privacy over a synthetic
//! memorizing model.
//!
//! The model is a canary-recall table, not a neural network: each planted
//! canary is memorized with a configurable probability at build time, and a
//! training-time DP variant damps that probability instead of training with
//! noise. Inference-time DP gates the release of a memorized secret through
//! randomized response with truthful probability e^eps/(1+e^eps) and charges
//! eps against a per-jurisdiction budget under sequential composition. The
//! model never fabricates a secret it did not memorize: the gate randomizes
//! release, and its epsilon guarantee is checked empirically on the
//! symmetric randomized-response primitive.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::Registry;
use crate::scalar::{real, Real};

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("unknown jurisdiction '{code}'")]
    UnknownJurisdiction { code: String },
    #[error("privacy budget exhausted: spent {spent} of {total}")]
    BudgetExhausted { spent: f64, total: f64 },
    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },
    #[error("at least {required} trials required, got {got}")]
    InsufficientTrials { required: usize, got: usize },
    #[error("evaluation prompt set is empty")]
    EmptyEvalSet,
    #[error("prompt fixture line {line}: {reason}")]
    Fixture { line: usize, reason: String },
}

/// Per-jurisdiction epsilon/delta allocation with a spend ledger.
/// Charges compose additively and can never exceed the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget<F> {
    pub jurisdiction: String,
    pub epsilon_total: F,
    pub delta: F,
    pub epsilon_spent: F,
}

impl<F: Real> PrivacyBudget<F> {
    pub fn new(jurisdiction: impl Into<String>, epsilon_total: F, delta: F) -> Result<Self, PrivacyError> {
        if epsilon_total <= F::zero() || !epsilon_total.is_finite() {
            return Err(PrivacyError::InvalidParameter {
                reason: "epsilon_total must be positive and finite".to_owned(),
            });
        }
        if delta < F::zero() || delta >= F::one() || delta.is_nan() {
            return Err(PrivacyError::InvalidParameter {
                reason: "delta must lie in [0, 1)".to_owned(),
            });
        }
        Ok(Self {
            jurisdiction: jurisdiction.into(),
            epsilon_total,
            delta,
            epsilon_spent: F::zero(),
        })
    }

    pub fn remaining(&self) -> F {
        self.epsilon_total - self.epsilon_spent
    }

    /// Charge `epsilon` under sequential composition; refuses any charge
    /// that would overdraw the ledger.
    pub fn charge(&mut self, epsilon: F) -> Result<(), PrivacyError> {
        if epsilon <= F::zero() || !epsilon.is_finite() {
            return Err(PrivacyError::InvalidParameter {
                reason: "charge must be positive and finite".to_owned(),
            });
        }
        let next = self.epsilon_spent + epsilon;
        if next > self.epsilon_total {
            return Err(PrivacyError::BudgetExhausted {
                spent: self.epsilon_spent.to_f64().unwrap_or(f64::NAN),
                total: self.epsilon_total.to_f64().unwrap_or(f64::NAN),
            });
        }
        self.epsilon_spent = next;
        Ok(())
    }
}

/// The regime-configured epsilon for a user's jurisdiction.
pub fn jurisdiction_epsilon<F: Real>(
    user_jurisdiction: &str,
    registry: &Registry,
) -> Result<F, PrivacyError> {
    let jur = registry
        .jurisdiction(user_jurisdiction)
        .map_err(|_| PrivacyError::UnknownJurisdiction {
            code: user_jurisdiction.to_owned(),
        })?;
    Ok(real(jur.epsilon_default))
}

/// Sample Laplace(0, sensitivity/epsilon) by inverse CDF. Deterministic
/// under a fixed rng stream regardless of the scalar type.
pub fn laplace_noise<F: Real, R: Rng>(
    sensitivity: F,
    epsilon: F,
    rng: &mut R,
) -> Result<F, PrivacyError> {
    if sensitivity <= F::zero() || !sensitivity.is_finite() {
        return Err(PrivacyError::InvalidParameter {
            reason: "sensitivity must be positive and finite".to_owned(),
        });
    }
    if epsilon <= F::zero() || !epsilon.is_finite() {
        return Err(PrivacyError::InvalidParameter {
            reason: "epsilon must be positive and finite".to_owned(),
        });
    }
    let scale = sensitivity / epsilon;
    let mut u: f64 = rng.random();
    while u == 0.0 {
        u = rng.random();
    }
    let centered: F = real(u - 0.5);
    let magnitude = (F::one() - (centered.abs() + centered.abs())).ln();
    Ok(-scale * centered.signum() * magnitude)
}

/// Truthful-release probability of randomized response at `epsilon`.
pub fn truthful_probability<F: Real>(epsilon: F) -> F {
    let e = epsilon.exp();
    e / (F::one() + e)
}

/// Symmetric randomized response over a boolean: answer truthfully with
/// probability e^eps/(1+e^eps), otherwise flip.
pub fn randomized_response<F: Real, R: Rng>(truth: bool, epsilon: F, rng: &mut R) -> bool {
    let p = truthful_probability(epsilon)
        .to_f64()
        .expect("probability fits in f64");
    if rng.random::<f64>() < p {
        truth
    } else {
        !truth
    }
}

/// Empirical privacy loss of a mechanism over a small discrete output
/// domain: run the mechanism `trials` times on each neighboring input and
/// take the max log-ratio over observed outputs.
pub fn estimate_epsilon<F, O, M, R>(
    mut mechanism: M,
    neighbors: (bool, bool),
    trials: usize,
    rng: &mut R,
) -> Result<F, PrivacyError>
where
    F: Real,
    O: Ord,
    M: FnMut(bool, &mut R) -> O,
    R: Rng,
{
    const MIN_TRIALS: usize = 1000;
    if trials < MIN_TRIALS {
        return Err(PrivacyError::InsufficientTrials {
            required: MIN_TRIALS,
            got: trials,
        });
    }
    let mut counts: BTreeMap<O, (u64, u64)> = BTreeMap::new();
    for _ in 0..trials {
        counts.entry(mechanism(neighbors.0, rng)).or_default().0 += 1;
    }
    for _ in 0..trials {
        counts.entry(mechanism(neighbors.1, rng)).or_default().1 += 1;
    }
    let n = trials as f64;
    let mut worst = 0.0f64;
    for (c1, c2) in counts.values() {
        if *c1 == 0 || *c2 == 0 {
            // An output seen on one side only admits no finite ratio
            // estimate; at the required trial counts this means the
            // mechanism is effectively one-sided.
            return Ok(real(f64::INFINITY));
        }
        let ratio = ((*c1 as f64 / n) / (*c2 as f64 / n)).ln().abs();
        worst = worst.max(ratio);
    }
    Ok(real(worst))
}

/// Inference behavior of a model variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DpMode {
    NoDp,
    TrainTimeDp,
    InferenceDp,
}

/// Canary and background prompt fixture.
#[derive(Debug, Clone, Default)]
pub struct PromptSet {
    pub canaries: Vec<(String, String)>,
    pub background: Vec<(String, String)>,
}

impl PromptSet {
    /// Parse the plain-text fixture: one `kind<TAB>prompt<TAB>completion`
    /// entry per line, kind `canary` or `background`. Blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str) -> Result<Self, PrivacyError> {
        let mut set = PromptSet::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let kind = parts.next().unwrap_or_default();
            let prompt = parts.next().ok_or_else(|| PrivacyError::Fixture {
                line: i + 1,
                reason: "missing prompt field".to_owned(),
            })?;
            let completion = parts.next().ok_or_else(|| PrivacyError::Fixture {
                line: i + 1,
                reason: "missing completion field".to_owned(),
            })?;
            match kind {
                "canary" => set.canaries.push((prompt.to_owned(), completion.to_owned())),
                "background" => set.background.push((prompt.to_owned(), completion.to_owned())),
                other => {
                    return Err(PrivacyError::Fixture {
                        line: i + 1,
                        reason: format!("unknown kind '{other}'"),
                    })
                }
            }
        }
        let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
        for (prompt, _) in set.canaries.iter().chain(set.background.iter()) {
            if seen.insert(prompt.as_str(), ()).is_some() {
                return Err(PrivacyError::Fixture {
                    line: 0,
                    reason: format!("duplicate prompt '{prompt}'"),
                });
            }
        }
        Ok(set)
    }
}

/// Build parameters for one model variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub mode: DpMode,
    /// Base probability that a planted canary is recallable.
    pub memorization_strength: f64,
    /// Fraction of memorization removed at build time (training-stage DP,
    /// federated averaging, etc).
    pub train_damping: f64,
    /// Background-accuracy loss per unit of damping.
    pub degradation_factor: f64,
}

/// Synthetic memorizing model over a fixed canary table.
#[derive(Debug, Clone)]
pub struct CanaryModel {
    canaries: Vec<(String, String)>,
    canary_index: BTreeMap<String, usize>,
    recallable: Vec<bool>,
    background: BTreeMap<String, String>,
    corrupted: Vec<bool>,
    background_order: BTreeMap<String, usize>,
    pub profile: ModelProfile,
}

/// Fixed fallback for prompts the model cannot or will not answer with a
/// memorized completion.
pub const BENIGN_SUBSTITUTE: &str = "[no memorized completion]";

impl CanaryModel {
    /// Instantiate the model: each canary becomes recallable with the
    /// damped memorization probability, and each background entry is
    /// corrupted with probability damping * degradation_factor.
    pub fn build<R: Rng>(prompts: &PromptSet, profile: ModelProfile, rng: &mut R) -> Self {
        let effective = (profile.memorization_strength * (1.0 - profile.train_damping))
            .clamp(0.0, 1.0);
        let corruption = (profile.train_damping * profile.degradation_factor).clamp(0.0, 1.0);
        let recallable = prompts
            .canaries
            .iter()
            .map(|_| rng.random::<f64>() < effective)
            .collect();
        let corrupted = prompts
            .background
            .iter()
            .map(|_| rng.random::<f64>() < corruption)
            .collect();
        let canary_index = prompts
            .canaries
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.clone(), i))
            .collect();
        let background_order = prompts
            .background
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.clone(), i))
            .collect();
        Self {
            canaries: prompts.canaries.clone(),
            canary_index,
            recallable,
            background: prompts.background.iter().cloned().collect(),
            corrupted,
            background_order,
            profile,
        }
    }

    pub fn canary_count(&self) -> usize {
        self.canaries.len()
    }

    pub fn canary_prompts(&self) -> impl Iterator<Item = &str> {
        self.canaries.iter().map(|(p, _)| p.as_str())
    }

    pub fn secret_for(&self, prompt: &str) -> Option<&str> {
        self.canary_index
            .get(prompt)
            .map(|&i| self.canaries[i].1.as_str())
    }

    pub fn is_canary(&self, prompt: &str) -> bool {
        self.canary_index.contains_key(prompt)
    }

    fn recall(&self, prompt: &str) -> Option<(&str, bool)> {
        self.canary_index
            .get(prompt)
            .map(|&i| (self.canaries[i].1.as_str(), self.recallable[i]))
    }
}

/// Result of a single completion query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult<F> {
    pub completion: String,
    pub was_canary: bool,
    pub epsilon_charged: F,
}

/// Answer a prompt under the given DP mode.
///
/// Background prompts are always answered and never charged. Canary prompts
/// under `InferenceDp` charge `epsilon` and pass the release decision
/// through the randomized-response gate; under the other modes they reflect
/// straight recallability.
pub fn private_complete<F: Real, R: Rng>(
    model: &CanaryModel,
    prompt: &str,
    budget: &mut PrivacyBudget<F>,
    epsilon: F,
    mode: DpMode,
    rng: &mut R,
) -> Result<QueryResult<F>, PrivacyError> {
    if let Some(completion) = model.background.get(prompt) {
        let idx = model.background_order[prompt];
        let answer = if model.corrupted[idx] {
            format!("{BENIGN_SUBSTITUTE} (degraded)")
        } else {
            completion.clone()
        };
        return Ok(QueryResult {
            completion: answer,
            was_canary: false,
            epsilon_charged: F::zero(),
        });
    }
    match model.recall(prompt) {
        None => Ok(QueryResult {
            completion: BENIGN_SUBSTITUTE.to_owned(),
            was_canary: false,
            epsilon_charged: F::zero(),
        }),
        Some((secret, recallable)) => match mode {
            DpMode::NoDp | DpMode::TrainTimeDp => Ok(QueryResult {
                completion: if recallable {
                    secret.to_owned()
                } else {
                    BENIGN_SUBSTITUTE.to_owned()
                },
                was_canary: true,
                epsilon_charged: F::zero(),
            }),
            DpMode::InferenceDp => {
                budget.charge(epsilon)?;
                // One-sided release gate: a memorized secret passes the
                // randomized-response coin; an unmemorized one cannot be
                // fabricated, so the substitute is returned outright.
                let release = recallable && randomized_response(true, epsilon, rng);
                Ok(QueryResult {
                    completion: if release {
                        secret.to_owned()
                    } else {
                        BENIGN_SUBSTITUTE.to_owned()
                    },
                    was_canary: true,
                    epsilon_charged: epsilon,
                })
            }
        },
    }
}

/// Fraction of background prompts answered with their correct completion.
pub fn utility_retention(model: &CanaryModel, eval_prompts: &[(String, String)]) -> Result<f64, PrivacyError> {
    if eval_prompts.is_empty() {
        return Err(PrivacyError::EmptyEvalSet);
    }
    let correct = eval_prompts
        .iter()
        .filter(|(prompt, expected)| {
            let idx = match model.background_order.get(prompt) {
                Some(&i) => i,
                None => return false,
            };
            !model.corrupted[idx] && model.background.get(prompt) == Some(expected)
        })
        .count();
    Ok(correct as f64 / eval_prompts.len() as f64)
}
