//! Jurisdictions, regulation regimes and transfer legality.
//!
//! Regimes are declarative rule tables loaded from config, not hard-coded
//! law. Evaluation is a pure function over an immutable [`Registry`]:
//! unmatched transfers are denied by default, and the data subject's regime
//! is consulted in addition to the origin's, so data about a protected
//! subject keeps its protections when hosted elsewhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Policy evaluation and registry construction errors.
#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("unknown jurisdiction '{code}'")]
    UnknownJurisdiction { code: String },
    #[error("unknown regime '{id}'")]
    UnknownRegime { id: String },
    #[error("transfer is denied; no controls apply")]
    DeniedTransfer,
    #[error("packet payload must be non-empty")]
    EmptyPayload,
    #[error("invalid registry: {reason}")]
    InvalidRegistry { reason: String },
}

/// Data sensitivity, totally ordered from least to most restricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityClass {
    Public,
    Personal,
    SensitivePersonal,
    Confidential,
}

impl SensitivityClass {
    pub const ALL: [SensitivityClass; 4] = [
        SensitivityClass::Public,
        SensitivityClass::Personal,
        SensitivityClass::SensitivePersonal,
        SensitivityClass::Confidential,
    ];
}

impl fmt::Display for SensitivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SensitivityClass::Public => "public",
            SensitivityClass::Personal => "personal",
            SensitivityClass::SensitivePersonal => "sensitive-personal",
            SensitivityClass::Confidential => "confidential",
        };
        f.write_str(s)
    }
}

/// Technical controls a transfer can be required to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    PayloadEncryption,
    TransitEncryption,
    AuditLog,
    LocalizedEscrow,
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Control::PayloadEncryption => "payload-encryption",
            Control::TransitEncryption => "transit-encryption",
            Control::AuditLog => "audit-log",
            Control::LocalizedEscrow => "localized-escrow",
        };
        f.write_str(s)
    }
}

pub type ControlSet = BTreeSet<Control>;

/// Transfer verdict, optionally carrying mandated controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Allow,
    AllowWithControls(ControlSet),
    Deny,
}

impl Verdict {
    pub fn is_deny(&self) -> bool {
        matches!(self, Verdict::Deny)
    }

    pub fn controls(&self) -> ControlSet {
        match self {
            Verdict::AllowWithControls(c) => c.clone(),
            _ => ControlSet::new(),
        }
    }
}

/// A legal territory participating in the simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Jurisdiction {
    /// Short identifier, e.g. "EU".
    pub code: String,
    /// Regime governing data of this jurisdiction.
    pub regime_id: String,
    /// Per-jurisdiction differential-privacy budget for inference queries.
    pub epsilon_default: f64,
    /// Whether authorities can compel disclosure of escrowed keys.
    pub compelled_access: bool,
}

/// One row of a regime's transfer rule table.
///
/// At most one rule may exist per (source, destination, class) triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferRule {
    pub id: String,
    pub source: String,
    pub destination: String,
    pub class: SensitivityClass,
    pub verdict: Verdict,
}

/// A regulation regime: residency posture, classification floor,
/// rule table and minimum controls per class.
#[derive(Debug, Clone)]
pub struct RegulationRegime {
    pub id: String,
    /// Data of class >= Personal may not leave the regime's jurisdiction.
    pub residency_required: bool,
    /// Classification floor applied to subjects of this regime.
    pub min_class: SensitivityClass,
    pub transfer_rules: Vec<TransferRule>,
    pub min_controls: BTreeMap<SensitivityClass, ControlSet>,
    rule_index: BTreeMap<(String, String, SensitivityClass), usize>,
}

impl RegulationRegime {
    pub fn new(
        id: impl Into<String>,
        residency_required: bool,
        min_class: SensitivityClass,
        transfer_rules: Vec<TransferRule>,
        min_controls: BTreeMap<SensitivityClass, ControlSet>,
    ) -> Result<Self, PolicyError> {
        let id = id.into();
        for class in SensitivityClass::ALL {
            if !min_controls.contains_key(&class) {
                return Err(PolicyError::InvalidRegistry {
                    reason: format!("regime '{id}' lacks min_controls for class '{class}'"),
                });
            }
        }
        let mut rule_index = BTreeMap::new();
        for (i, rule) in transfer_rules.iter().enumerate() {
            if let Verdict::AllowWithControls(controls) = &rule.verdict {
                if controls.is_empty() {
                    return Err(PolicyError::InvalidRegistry {
                        reason: format!("rule '{}' allows-with-controls but lists none", rule.id),
                    });
                }
            }
            let key = (rule.source.clone(), rule.destination.clone(), rule.class);
            if rule_index.insert(key, i).is_some() {
                return Err(PolicyError::InvalidRegistry {
                    reason: format!(
                        "regime '{id}' has duplicate rule for ({}, {}, {})",
                        rule.source, rule.destination, rule.class
                    ),
                });
            }
        }
        Ok(Self {
            id,
            residency_required,
            min_class,
            transfer_rules,
            min_controls,
            rule_index,
        })
    }

    pub fn rule(
        &self,
        source: &str,
        destination: &str,
        class: SensitivityClass,
    ) -> Option<&TransferRule> {
        self.rule_index
            .get(&(source.to_owned(), destination.to_owned(), class))
            .map(|&i| &self.transfer_rules[i])
    }

    pub fn min_controls_for(&self, class: SensitivityClass) -> &ControlSet {
        // new() guarantees every class has an entry
        &self.min_controls[&class]
    }
}

/// Immutable lookup of jurisdictions and regimes. Built once at load time,
/// safe for concurrent readers afterwards.
#[derive(Debug, Clone)]
pub struct Registry {
    jurisdictions: BTreeMap<String, Jurisdiction>,
    regimes: BTreeMap<String, RegulationRegime>,
}

impl Registry {
    pub fn new(
        jurisdictions: Vec<Jurisdiction>,
        regimes: Vec<RegulationRegime>,
    ) -> Result<Self, PolicyError> {
        let mut regime_map = BTreeMap::new();
        for regime in regimes {
            if regime_map.insert(regime.id.clone(), regime).is_some() {
                return Err(PolicyError::InvalidRegistry {
                    reason: "duplicate regime id".to_owned(),
                });
            }
        }
        let mut jur_map: BTreeMap<String, Jurisdiction> = BTreeMap::new();
        for jur in jurisdictions {
            if jur.epsilon_default <= 0.0 || !jur.epsilon_default.is_finite() {
                return Err(PolicyError::InvalidRegistry {
                    reason: format!("jurisdiction '{}' needs epsilon_default > 0", jur.code),
                });
            }
            if !regime_map.contains_key(&jur.regime_id) {
                return Err(PolicyError::UnknownRegime {
                    id: jur.regime_id.clone(),
                });
            }
            if jur_map.insert(jur.code.clone(), jur).is_some() {
                return Err(PolicyError::InvalidRegistry {
                    reason: "duplicate jurisdiction code".to_owned(),
                });
            }
        }
        for regime in regime_map.values() {
            for rule in &regime.transfer_rules {
                for code in [&rule.source, &rule.destination] {
                    if !jur_map.contains_key(code.as_str()) {
                        return Err(PolicyError::InvalidRegistry {
                            reason: format!(
                                "rule '{}' references unknown jurisdiction '{code}'",
                                rule.id
                            ),
                        });
                    }
                }
            }
        }
        Ok(Self {
            jurisdictions: jur_map,
            regimes: regime_map,
        })
    }

    pub fn jurisdiction(&self, code: &str) -> Result<&Jurisdiction, PolicyError> {
        self.jurisdictions
            .get(code)
            .ok_or_else(|| PolicyError::UnknownJurisdiction {
                code: code.to_owned(),
            })
    }

    /// Regime governing the given jurisdiction.
    pub fn regime_of(&self, code: &str) -> Result<&RegulationRegime, PolicyError> {
        let jur = self.jurisdiction(code)?;
        self.regimes
            .get(&jur.regime_id)
            .ok_or_else(|| PolicyError::UnknownRegime {
                id: jur.regime_id.clone(),
            })
    }

    pub fn regime(&self, id: &str) -> Result<&RegulationRegime, PolicyError> {
        self.regimes
            .get(id)
            .ok_or_else(|| PolicyError::UnknownRegime { id: id.to_owned() })
    }

    pub fn jurisdiction_codes(&self) -> impl Iterator<Item = &str> {
        self.jurisdictions.keys().map(|s| s.as_str())
    }
}

/// A unit of cross-border transfer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataPacket {
    pub id: u64,
    pub origin: String,
    pub destination: String,
    /// Jurisdiction whose law protects the data subject; may differ from origin.
    pub subject_jurisdiction: String,
    pub class: SensitivityClass,
    pub payload: Vec<u8>,
}

impl DataPacket {
    pub fn new(
        id: u64,
        origin: impl Into<String>,
        destination: impl Into<String>,
        subject_jurisdiction: impl Into<String>,
        class: SensitivityClass,
        payload: Vec<u8>,
    ) -> Result<Self, PolicyError> {
        if payload.is_empty() {
            return Err(PolicyError::EmptyPayload);
        }
        Ok(Self {
            id,
            origin: origin.into(),
            destination: destination.into(),
            subject_jurisdiction: subject_jurisdiction.into(),
            class,
            payload,
        })
    }
}

/// Verdict for a proposed transfer, with the rule ids that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferDecision {
    pub verdict: Verdict,
    pub rule_ids: Vec<String>,
    pub rationale: String,
}

impl TransferDecision {
    pub fn is_deny(&self) -> bool {
        self.verdict.is_deny()
    }
}

/// Effective sensitivity of a packet: its declared class raised to the
/// classification floor of the subject's regime. Idempotent.
pub fn classify_packet(
    packet: &DataPacket,
    registry: &Registry,
) -> Result<SensitivityClass, PolicyError> {
    registry.jurisdiction(&packet.origin)?;
    registry.jurisdiction(&packet.destination)?;
    let subject_regime = registry.regime_of(&packet.subject_jurisdiction)?;
    Ok(packet.class.max(subject_regime.min_class))
}

/// Decide the legality of a transfer.
///
/// Order of checks: intra-jurisdiction transfers are always allowed; then
/// residency requirements of the origin and subject regimes veto any
/// class >= Personal movement away from their territory; then the origin
/// regime's rule table decides, with missing rules denied by default.
pub fn evaluate_transfer(
    packet: &DataPacket,
    registry: &Registry,
) -> Result<TransferDecision, PolicyError> {
    let class = classify_packet(packet, registry)?;
    evaluate_transfer_classified(packet, class, registry)
}

/// [`evaluate_transfer`] with the effective class supplied by the caller.
/// This is the post-classification entry point: a (possibly wrong)
/// classifier label is taken at face value and not re-uplifted.
pub fn evaluate_transfer_classified(
    packet: &DataPacket,
    class: SensitivityClass,
    registry: &Registry,
) -> Result<TransferDecision, PolicyError> {
    registry.jurisdiction(&packet.destination)?;
    if packet.origin == packet.destination {
        return Ok(TransferDecision {
            verdict: Verdict::Allow,
            rule_ids: vec![],
            rationale: format!("intra-jurisdiction transfer within {}", packet.origin),
        });
    }
    if class >= SensitivityClass::Personal {
        let origin_regime = registry.regime_of(&packet.origin)?;
        if origin_regime.residency_required {
            return Ok(TransferDecision {
                verdict: Verdict::Deny,
                rule_ids: vec![format!("residency:{}", origin_regime.id)],
                rationale: format!(
                    "regime {} requires residency for class {class} originating in {}",
                    origin_regime.id, packet.origin
                ),
            });
        }
        let subject_regime = registry.regime_of(&packet.subject_jurisdiction)?;
        if subject_regime.residency_required && packet.destination != packet.subject_jurisdiction {
            return Ok(TransferDecision {
                verdict: Verdict::Deny,
                rule_ids: vec![format!("residency:{}", subject_regime.id)],
                rationale: format!(
                    "regime {} requires residency for class {class} data about {} subjects",
                    subject_regime.id, packet.subject_jurisdiction
                ),
            });
        }
    }
    let origin_regime = registry.regime_of(&packet.origin)?;
    match origin_regime.rule(&packet.origin, &packet.destination, class) {
        Some(rule) => Ok(TransferDecision {
            verdict: rule.verdict.clone(),
            rule_ids: vec![rule.id.clone()],
            rationale: format!(
                "rule {} matched ({} -> {}, {class})",
                rule.id, packet.origin, packet.destination
            ),
        }),
        None => Ok(TransferDecision {
            verdict: Verdict::Deny,
            rule_ids: vec!["default-deny".to_owned()],
            rationale: format!(
                "no rule for ({} -> {}, {class}); denied by default",
                packet.origin, packet.destination
            ),
        }),
    }
}

/// Controls a permitted transfer must carry: the union of the decision's
/// controls and the regime's minimum controls for the class.
pub fn required_controls(
    decision: &TransferDecision,
    regime: &RegulationRegime,
    class: SensitivityClass,
) -> Result<ControlSet, PolicyError> {
    if decision.is_deny() {
        return Err(PolicyError::DeniedTransfer);
    }
    let mut controls = decision.verdict.controls();
    controls.extend(regime.min_controls_for(class).iter().copied());
    Ok(controls)
}
