//! Shared per-transfer pipeline: classify, decide, route, apply controls
//! and produce the on-wire transmissions for every border crossing.
//!
//! Chance events that must look identical across variants (misclassifier
//! draws, localization blocks, federated leak draws, attacker monitoring)
//! are keyed on deterministic per-transfer hashes instead of an rng stream,
//! so every variant faces the same world.

use std::collections::BTreeMap;

use rand::Rng;

use crate::adversary::Transmission;
use crate::config::ScenarioConfig;
use crate::crypto::{
    add_transit_layer, encrypt_payload, EscrowKey, EscrowRegistry, KeyPurpose,
};
use crate::policy::{
    self, Control, ControlSet, DataPacket, SensitivityClass, TransferDecision,
};
use crate::routing::{self, Route};
use crate::sim::{unit_hash, ArchitectureVariant, TransferSpec};
use crate::Scalar;

/// Strict enforcement classifies perfectly; probabilistic enforcement lets
/// the classifier mislabel sensitive packets as public at the configured
/// rate, defeating every downstream control for those packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnforcementMode {
    Strict,
    Probabilistic,
}

/// Escrowed key material for one variant run.
#[derive(Debug, Clone)]
pub struct CryptoSetup {
    pub escrow: EscrowRegistry,
    payload_keys: BTreeMap<String, EscrowKey>,
    transit_keys: BTreeMap<String, EscrowKey>,
    shared_payload: Option<EscrowKey>,
}

impl CryptoSetup {
    /// Sovereign layout: one payload and one transit key escrowed per
    /// jurisdiction. Replicated layout: a single payload key copied into
    /// every jurisdiction's escrow.
    pub fn build<R: Rng>(
        variant: ArchitectureVariant,
        config: &ScenarioConfig,
        rng: &mut R,
    ) -> Self {
        let registry = &config.registry;
        let mut escrow = EscrowRegistry::new();
        let codes: Vec<String> = registry.jurisdiction_codes().map(String::from).collect();
        let mut payload_keys = BTreeMap::new();
        let mut transit_keys = BTreeMap::new();
        let mut shared_payload = None;
        if variant.replicated_keys() {
            let home = codes.first().expect("registry has jurisdictions");
            let key = escrow
                .generate_key(home, KeyPurpose::Payload, registry, rng)
                .expect("validated jurisdiction");
            for code in codes.iter().filter(|c| *c != home) {
                escrow.register_replica(&key, code);
            }
            shared_payload = Some(key);
        } else {
            for code in &codes {
                let pk = escrow
                    .generate_key(code, KeyPurpose::Payload, registry, rng)
                    .expect("validated jurisdiction");
                let tk = escrow
                    .generate_key(code, KeyPurpose::Transit, registry, rng)
                    .expect("validated jurisdiction");
                payload_keys.insert(code.clone(), pk);
                transit_keys.insert(code.clone(), tk);
            }
        }
        Self {
            escrow,
            payload_keys,
            transit_keys,
            shared_payload,
        }
    }

    fn payload_key_for(&self, jurisdiction: &str) -> &EscrowKey {
        match &self.shared_payload {
            Some(key) => key,
            None => self
                .payload_keys
                .get(jurisdiction)
                .expect("sovereign layout has a payload key per jurisdiction"),
        }
    }

    fn transit_key_for(&self, jurisdiction: &str) -> Option<&EscrowKey> {
        self.transit_keys.get(jurisdiction)
    }
}

/// One on-wire appearance at a border crossing.
#[derive(Debug, Clone)]
pub struct CrossingWire {
    pub from_region: String,
    pub to_region: String,
    /// Jurisdiction on the receiving side of the crossing; the border
    /// interceptor compels this escrow.
    pub ingress_jurisdiction: String,
    pub transmission: Transmission,
}

/// Everything the pipeline decided and produced for one transfer.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub id: u64,
    pub true_class: SensitivityClass,
    pub observed_class: SensitivityClass,
    pub decision_true: TransferDecision,
    pub decision_observed: TransferDecision,
    pub executed: bool,
    pub blocked_by_localization: bool,
    pub route: Option<Route<Scalar>>,
    pub controls: ControlSet,
    pub crossings: Vec<CrossingWire>,
    /// Member of this variant's exposure denominator: a sensitive transfer
    /// whose data (or model update) would cross a border.
    pub exposed_sensitive: bool,
}

pub fn run_transfer<R: Rng>(
    spec: &TransferSpec,
    variant: ArchitectureVariant,
    mode: EnforcementMode,
    config: &ScenarioConfig,
    setup: &CryptoSetup,
    rng: &mut R,
) -> TransferOutcome {
    let registry = &config.registry;
    let graph = &config.graph;
    let packet = DataPacket::new(
        spec.id,
        spec.origin.clone(),
        spec.destination.clone(),
        spec.subject.clone(),
        spec.class,
        spec.payload.clone(),
    )
    .expect("traffic payloads are non-empty");
    let true_class = policy::classify_packet(&packet, registry).expect("validated codes");

    let misclassify_seed = crate::sim::derive_seed(config.seed, "misclassify");
    let observed_class = if variant.applies_controls()
        && mode == EnforcementMode::Probabilistic
        && true_class >= SensitivityClass::Personal
        && unit_hash(misclassify_seed, "packet", &[&spec.id.to_le_bytes()])
            < config.attacker.misclassification_rate
    {
        SensitivityClass::Public
    } else {
        true_class
    };

    let decision_true =
        policy::evaluate_transfer_classified(&packet, true_class, registry).expect("validated");
    let decision_observed = policy::evaluate_transfer_classified(&packet, observed_class, registry)
        .expect("validated");

    let mut executed = if variant.enforces_policy() {
        !decision_observed.is_deny()
    } else {
        true
    };
    let mut blocked_by_localization = false;
    let crosses = spec.origin != spec.destination;
    let sensitive = true_class >= SensitivityClass::Personal;
    if let Some(block_rate) = variant.tuning(config).localization_block_rate {
        let loc_seed = crate::sim::derive_seed(config.seed, "localization");
        if executed
            && sensitive
            && crosses
            && unit_hash(loc_seed, "packet", &[&spec.id.to_le_bytes()]) < block_rate
        {
            executed = false;
            blocked_by_localization = true;
        }
    }

    let tuning = variant.tuning(config);
    let aggregator = tuning.aggregator_region.as_deref();
    let exposed_sensitive = if variant.federated_transport() {
        let aggregator_jur = aggregator
            .and_then(|id| graph.region(id))
            .map(|r| r.jurisdiction.as_str())
            .unwrap_or("");
        sensitive && spec.origin != aggregator_jur
    } else {
        sensitive && crosses
    };

    let route = if !executed {
        None
    } else {
        let origin_region = graph
            .regions_in(&spec.origin)
            .first()
            .map(|r| r.id.clone())
            .expect("every jurisdiction has a region in validated configs");
        let goal_region = if variant.federated_transport() {
            aggregator
                .expect("federated variant configures an aggregator")
                .to_owned()
        } else {
            graph
                .regions_in(&spec.destination)
                .first()
                .map(|r| r.id.clone())
                .expect("every jurisdiction has a region in validated configs")
        };
        if variant.policy_routing() {
            match routing::plan_route_between_classified(
                &packet,
                observed_class,
                &origin_region,
                &goal_region,
                graph,
                registry,
            ) {
                Ok(route) => Some(route),
                Err(_) => {
                    // No lawful path: the transfer is refused rather than
                    // misrouted.
                    executed = false;
                    None
                }
            }
        } else {
            routing::static_shortest_route(&origin_region, &goal_region, graph).ok()
        }
    };

    let controls = if variant.applies_controls() {
        if executed && !decision_observed.is_deny() {
            let origin_regime = registry.regime_of(&spec.origin).expect("validated");
            let subject_regime = registry.regime_of(&spec.subject).expect("validated");
            let mut controls =
                policy::required_controls(&decision_observed, origin_regime, observed_class)
                    .expect("decision is not a deny");
            controls.extend(
                policy::required_controls(&decision_observed, subject_regime, observed_class)
                    .expect("decision is not a deny"),
            );
            controls
        } else {
            ControlSet::new()
        }
    } else if variant.federated_transport() {
        ControlSet::new()
    } else if sensitive {
        // Baselines encrypt sensitive payloads with the shared key but
        // apply no policy-derived controls.
        [Control::PayloadEncryption].into_iter().collect()
    } else {
        ControlSet::new()
    };

    let mut crossings = Vec::new();
    if executed {
        if let Some(route) = &route {
            let crossing_pairs = route.crossings(graph);
            let payload_ct = if controls.contains(&Control::PayloadEncryption) {
                Some(
                    encrypt_payload(
                        &spec.payload,
                        setup.payload_key_for(&spec.origin),
                        rng,
                    )
                    .expect("payload keys have payload purpose"),
                )
            } else {
                None
            };
            let leak_seed = crate::sim::derive_seed(config.seed, "fl-leak");
            for (from, to) in crossing_pairs {
                let transmission = if variant.federated_transport() {
                    Transmission::FlUpdate {
                        content: spec.payload.clone(),
                        leaks: unit_hash(leak_seed, "update", &[&spec.id.to_le_bytes()])
                            < config.attacker.fl_leak_probability,
                    }
                } else {
                    match (&payload_ct, controls.contains(&Control::TransitEncryption)) {
                        (Some(ct), true) => {
                            match setup.transit_key_for(&from.jurisdiction) {
                                Some(key) => Transmission::Layered(
                                    add_transit_layer(ct.clone(), key, rng)
                                        .expect("transit keys have transit purpose"),
                                ),
                                None => Transmission::Layered(ct.clone()),
                            }
                        }
                        (Some(ct), false) => Transmission::Layered(ct.clone()),
                        (None, true) => {
                            // Transit-only controls: seal the segment with
                            // the egress jurisdiction's payload key.
                            Transmission::Layered(
                                encrypt_payload(
                                    &spec.payload,
                                    setup.payload_key_for(&from.jurisdiction),
                                    rng,
                                )
                                .expect("payload keys have payload purpose"),
                            )
                        }
                        (None, false) => Transmission::Plaintext(spec.payload.clone()),
                    }
                };
                crossings.push(CrossingWire {
                    from_region: from.id.clone(),
                    to_region: to.id.clone(),
                    ingress_jurisdiction: to.jurisdiction.clone(),
                    transmission,
                });
            }
        }
    }

    TransferOutcome {
        id: spec.id,
        true_class,
        observed_class,
        decision_true,
        decision_observed,
        executed,
        blocked_by_localization,
        route,
        controls,
        crossings,
        exposed_sensitive,
    }
}
