//! Scenario configuration: one declarative TOML file holding the regime
//! registry, the region graph, traffic volumes, attacker parameters, DP
//! settings, per-variant calibration knobs and the overhead cost model.
//! Loading validates everything into domain objects; the same config plus
//! the same seed fully determines a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::policy::{
    Control, ControlSet, Jurisdiction, PolicyError, RegulationRegime, Registry, SensitivityClass,
    TransferRule, Verdict,
};
use crate::privacy::{DpMode, PrivacyError, PromptSet};
use crate::routing::{Region, RegionGraph, RouteError};
use crate::Scalar;

/// Embedded copy of the shipped default configuration.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../../configs/default.toml");
/// Embedded copy of the shipped prompt fixture.
pub const DEFAULT_PROMPTS: &str = include_str!("../../../configs/prompts.txt");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config invalid: {reason}")]
    Invalid { reason: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: u64,
    payload_bytes: usize,
    jurisdictions: Vec<JurisdictionSpec>,
    regimes: Vec<RegimeSpec>,
    graph: GraphSpec,
    traffic: TrafficSpec,
    attacker: AttackerSpec,
    privacy: PrivacySpec,
    cost_model: CostModelSpec,
    variants: VariantsSpec,
    reference_models: ReferenceModelsSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct JurisdictionSpec {
    code: String,
    regime: String,
    epsilon_default: f64,
    compelled_access: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeSpec {
    id: String,
    residency_required: bool,
    min_class: SensitivityClass,
    min_controls: BTreeMap<SensitivityClass, Vec<Control>>,
    #[serde(default)]
    rules: Vec<RuleSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    id: String,
    source: String,
    destination: String,
    class: SensitivityClass,
    verdict: VerdictSpec,
    #[serde(default)]
    controls: Vec<Control>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum VerdictSpec {
    Allow,
    AllowWithControls,
    Deny,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSpec {
    regions: Vec<RegionSpec>,
    edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSpec {
    id: String,
    jurisdiction: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeSpec {
    a: String,
    b: String,
    latency_ms: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub scenario_a_transfers: usize,
    pub scenario_c_transfers: usize,
    pub scenario_c_probabilistic_transfers: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSpec {
    pub border_coverage: f64,
    pub fl_leak_probability: f64,
    pub misclassification_rate: f64,
    pub mitm_trials: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySpec {
    pub fixture: String,
    pub query_budget: usize,
    pub extraction_rounds: usize,
    pub base_memorization_strength: f64,
    pub degradation_factor: f64,
    pub session_epsilon_total: f64,
    pub user_jurisdictions: Vec<String>,
    pub mi_candidates_per_class: usize,
    pub mi_user_jurisdiction: String,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModelSpec {
    pub routing_pct: f64,
    pub encryption_pct: f64,
    pub escrow_pct: f64,
    pub dp_pct: f64,
    pub proof_validation_pct: f64,
}

impl CostModelSpec {
    pub fn total_pct(&self) -> f64 {
        self.routing_pct
            + self.encryption_pct
            + self.escrow_pct
            + self.dp_pct
            + self.proof_validation_pct
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantsSpec {
    standard_encryption: VariantTuning,
    federated_learning: VariantTuning,
    localization_dp: VariantTuning,
    proposed: VariantTuning,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceModelsSpec {
    train_time_dp: VariantTuning,
}

/// Numeric calibration knobs for one architecture variant.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantTuning {
    pub dp_mode: DpMode,
    pub train_damping: f64,
    #[serde(default)]
    pub aggregator_region: Option<String>,
    #[serde(default)]
    pub localization_block_rate: Option<f64>,
}

/// Fully validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub payload_bytes: usize,
    pub registry: Registry,
    pub graph: RegionGraph<Scalar>,
    pub traffic: TrafficSpec,
    pub attacker: AttackerSpec,
    pub privacy: PrivacySpec,
    pub prompts: PromptSet,
    pub cost_model: CostModelSpec,
    pub standard_encryption: VariantTuning,
    pub federated_learning: VariantTuning,
    pub localization_dp: VariantTuning,
    pub proposed: VariantTuning,
    pub reference_train_time_dp: VariantTuning,
    /// SHA-256 of the raw config text, embedded in every output.
    pub config_hash: String,
    /// SHA-256 of the prompt fixture text.
    pub fixture_hash: String,
}

impl ScenarioConfig {
    /// Parse and validate a config document. `fixture_dir` resolves the
    /// prompt fixture path; `None` restricts the fixture to the built-in.
    pub fn from_toml(text: &str, fixture_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text)?;
        let fixture_text = if file.privacy.fixture == "builtin" {
            DEFAULT_PROMPTS.to_owned()
        } else {
            let dir = fixture_dir.ok_or_else(|| ConfigError::Invalid {
                reason: "config references a fixture file but no directory was given".to_owned(),
            })?;
            let path = dir.join(&file.privacy.fixture);
            fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?
        };
        Self::build(text, file, &fixture_text)
    }

    /// Load from a config file on disk; the fixture resolves relative to
    /// the config's directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, Some(dir))
    }

    /// The shipped default configuration with the embedded fixture.
    pub fn builtin_default() -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(DEFAULT_CONFIG_TOML)?;
        Self::build(DEFAULT_CONFIG_TOML, file, DEFAULT_PROMPTS)
    }

    fn build(raw: &str, file: ConfigFile, fixture_text: &str) -> Result<Self, ConfigError> {
        let regimes = file
            .regimes
            .iter()
            .map(|spec| {
                let rules = spec
                    .rules
                    .iter()
                    .map(|rule| {
                        let verdict = match rule.verdict {
                            VerdictSpec::Allow => Verdict::Allow,
                            VerdictSpec::Deny => Verdict::Deny,
                            VerdictSpec::AllowWithControls => Verdict::AllowWithControls(
                                rule.controls.iter().copied().collect::<ControlSet>(),
                            ),
                        };
                        TransferRule {
                            id: rule.id.clone(),
                            source: rule.source.clone(),
                            destination: rule.destination.clone(),
                            class: rule.class,
                            verdict,
                        }
                    })
                    .collect();
                let min_controls = spec
                    .min_controls
                    .iter()
                    .map(|(class, list)| (*class, list.iter().copied().collect()))
                    .collect();
                RegulationRegime::new(
                    spec.id.clone(),
                    spec.residency_required,
                    spec.min_class,
                    rules,
                    min_controls,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let jurisdictions = file
            .jurisdictions
            .iter()
            .map(|spec| Jurisdiction {
                code: spec.code.clone(),
                regime_id: spec.regime.clone(),
                epsilon_default: spec.epsilon_default,
                compelled_access: spec.compelled_access,
            })
            .collect();
        let registry = Registry::new(jurisdictions, regimes)?;

        let regions = file
            .graph
            .regions
            .iter()
            .map(|spec| Region {
                id: spec.id.clone(),
                jurisdiction: spec.jurisdiction.clone(),
            })
            .collect::<Vec<_>>();
        for region in &regions {
            registry.jurisdiction(&region.jurisdiction)?;
        }
        let edges = file
            .graph
            .edges
            .iter()
            .map(|e| (e.a.clone(), e.b.clone(), e.latency_ms))
            .collect();
        let graph = RegionGraph::new(regions, edges)?;
        if !graph.is_connected() {
            return Err(ConfigError::Invalid {
                reason: "region graph must be connected".to_owned(),
            });
        }

        for (name, value) in [
            ("attacker.border_coverage", file.attacker.border_coverage),
            ("attacker.fl_leak_probability", file.attacker.fl_leak_probability),
            ("attacker.misclassification_rate", file.attacker.misclassification_rate),
            (
                "privacy.base_memorization_strength",
                file.privacy.base_memorization_strength,
            ),
            ("privacy.degradation_factor", file.privacy.degradation_factor),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Invalid {
                    reason: format!("{name} must lie in [0, 1], got {value}"),
                });
            }
        }
        for (name, tuning) in [
            ("standard_encryption", &file.variants.standard_encryption),
            ("federated_learning", &file.variants.federated_learning),
            ("localization_dp", &file.variants.localization_dp),
            ("proposed", &file.variants.proposed),
            ("reference_models.train_time_dp", &file.reference_models.train_time_dp),
        ] {
            if !(0.0..=1.0).contains(&tuning.train_damping) {
                return Err(ConfigError::Invalid {
                    reason: format!("variants.{name}.train_damping must lie in [0, 1]"),
                });
            }
            if let Some(rate) = tuning.localization_block_rate {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(ConfigError::Invalid {
                        reason: format!("variants.{name}.localization_block_rate must lie in [0, 1]"),
                    });
                }
            }
            if let Some(region) = &tuning.aggregator_region {
                if graph.region(region).is_none() {
                    return Err(ConfigError::Invalid {
                        reason: format!("variants.{name}.aggregator_region '{region}' not in graph"),
                    });
                }
            }
        }
        for jur in &file.privacy.user_jurisdictions {
            registry.jurisdiction(jur)?;
        }
        registry.jurisdiction(&file.privacy.mi_user_jurisdiction)?;
        if file.privacy.user_jurisdictions.is_empty() {
            return Err(ConfigError::Invalid {
                reason: "privacy.user_jurisdictions must not be empty".to_owned(),
            });
        }
        if file.payload_bytes == 0 {
            return Err(ConfigError::Invalid {
                reason: "payload_bytes must be positive".to_owned(),
            });
        }

        let prompts = PromptSet::parse(fixture_text)?;
        if prompts.background.is_empty() {
            return Err(ConfigError::Invalid {
                reason: "prompt fixture needs background entries".to_owned(),
            });
        }

        Ok(Self {
            seed: file.seed,
            payload_bytes: file.payload_bytes,
            registry,
            graph,
            traffic: file.traffic,
            attacker: file.attacker,
            privacy: file.privacy,
            prompts,
            cost_model: file.cost_model,
            standard_encryption: file.variants.standard_encryption,
            federated_learning: file.variants.federated_learning,
            localization_dp: file.variants.localization_dp,
            proposed: file.variants.proposed,
            reference_train_time_dp: file.reference_models.train_time_dp,
            config_hash: hex::encode(Sha256::digest(raw.as_bytes())),
            fixture_hash: hex::encode(Sha256::digest(fixture_text.as_bytes())),
        })
    }
}
