//! Layered envelope encryption with jurisdiction-bound key escrow.
//!
//! Every key lives in exactly one jurisdiction's escrow. A payload is sealed
//! once with a payload-purpose key, then wrapped by one transit layer per
//! border-crossing segment. Each transit seal covers the ciphertext beneath
//! it and authenticates the headers of all inner layers as associated data,
//! so layers must be stripped in reverse order of application and any
//! bit-flip anywhere fails authenticated decryption.
//!
//! Compelled access models a government order as total disclosure of one
//! jurisdiction's escrow: exactly the keys tagged with that jurisdiction,
//! never anything escrowed elsewhere.

use std::collections::BTreeMap;
use std::fmt;

use aes_gcm::aead::{Aead, Payload};
use aes_gcm::{Aes256Gcm, Key, KeyInit};
use rand::Rng;
use thiserror::Error;

use crate::policy::Registry;

pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("unknown jurisdiction '{code}'")]
    UnknownJurisdiction { code: String },
    #[error("key has purpose {got:?}, operation requires {expected:?}")]
    WrongKeyPurpose { expected: KeyPurpose, got: KeyPurpose },
    #[error("authenticated decryption failed")]
    AuthFailure,
    #[error("ciphertext has no transit layer to strip")]
    NoTransitLayer,
    #[error("transit layers must be stripped before payload decryption")]
    LayersRemaining,
    #[error("jurisdiction '{code}' has no compelled-access authority")]
    NotCompellable { code: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyPurpose {
    Payload,
    Transit,
}

impl fmt::Display for KeyPurpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyPurpose::Payload => f.write_str("payload"),
            KeyPurpose::Transit => f.write_str("transit"),
        }
    }
}

/// Symmetric key escrowed under a single jurisdiction.
#[derive(Clone)]
pub struct EscrowKey {
    pub key_id: String,
    pub jurisdiction: String,
    pub purpose: KeyPurpose,
    material: [u8; KEY_LEN],
}

impl EscrowKey {
    pub fn material(&self) -> &[u8; KEY_LEN] {
        &self.material
    }
}

impl fmt::Debug for EscrowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EscrowKey")
            .field("key_id", &self.key_id)
            .field("jurisdiction", &self.jurisdiction)
            .field("purpose", &self.purpose)
            .field("material", &"<redacted>")
            .finish()
    }
}

/// Per-jurisdiction key store. Single writer during generation, concurrent
/// readers afterwards.
#[derive(Debug, Default, Clone)]
pub struct EscrowRegistry {
    stores: BTreeMap<String, Vec<EscrowKey>>,
    next_seq: u64,
}

impl EscrowRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Generate a fresh uniformly random key and escrow it under its
    /// jurisdiction. Key ids are unique within the registry.
    pub fn generate_key<R: Rng>(
        &mut self,
        jurisdiction: &str,
        purpose: KeyPurpose,
        registry: &Registry,
        rng: &mut R,
    ) -> Result<EscrowKey, CryptoError> {
        registry
            .jurisdiction(jurisdiction)
            .map_err(|_| CryptoError::UnknownJurisdiction {
                code: jurisdiction.to_owned(),
            })?;
        let mut material = [0u8; KEY_LEN];
        rng.fill(&mut material);
        let key = EscrowKey {
            key_id: format!("{jurisdiction}-{purpose}-{:06}", self.next_seq),
            jurisdiction: jurisdiction.to_owned(),
            purpose,
            material,
        };
        self.next_seq += 1;
        self.stores
            .entry(jurisdiction.to_owned())
            .or_default()
            .push(key.clone());
        Ok(key)
    }

    /// Escrow a copy of an existing key under another jurisdiction. Models
    /// the replicated "uniform key management" baseline; the copy is tagged
    /// with the jurisdiction it is stored in.
    pub fn register_replica(&mut self, key: &EscrowKey, jurisdiction: &str) -> EscrowKey {
        let replica = EscrowKey {
            key_id: format!("{}@{jurisdiction}", key.key_id),
            jurisdiction: jurisdiction.to_owned(),
            purpose: key.purpose,
            material: key.material,
        };
        self.stores
            .entry(jurisdiction.to_owned())
            .or_default()
            .push(replica.clone());
        replica
    }

    pub fn keys_in(&self, jurisdiction: &str) -> &[EscrowKey] {
        self.stores
            .get(jurisdiction)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn all_keys(&self) -> impl Iterator<Item = &EscrowKey> {
        self.stores.values().flatten()
    }
}

/// All keys obtainable by compelling one jurisdiction: exactly its escrow.
pub fn compel_escrow(
    jurisdiction: &str,
    escrow: &EscrowRegistry,
    registry: &Registry,
) -> Result<Vec<EscrowKey>, CryptoError> {
    let jur = registry
        .jurisdiction(jurisdiction)
        .map_err(|_| CryptoError::UnknownJurisdiction {
            code: jurisdiction.to_owned(),
        })?;
    if !jur.compelled_access {
        return Err(CryptoError::NotCompellable {
            code: jurisdiction.to_owned(),
        });
    }
    Ok(escrow.keys_in(jurisdiction).to_vec())
}

/// Header of one seal: which key and nonce produced it. The ciphertext of
/// inner layers lives inside the outer seal, so only the outermost
/// ciphertext is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerHeader {
    pub key_id: String,
    pub nonce: [u8; NONCE_LEN],
}

/// Payload seal plus a stack of transit seals (inner to outer).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredCiphertext {
    pub payload_header: LayerHeader,
    pub transit_headers: Vec<LayerHeader>,
    pub(crate) sealed: Vec<u8>,
}

impl LayeredCiphertext {
    pub fn transit_depth(&self) -> usize {
        self.transit_headers.len()
    }

    pub fn sealed_bytes(&self) -> &[u8] {
        &self.sealed
    }
}

/// Associated data for a seal: the payload header plus every transit header
/// up to and including the seal's own, so no header byte escapes
/// authentication.
fn header_aad(payload: &LayerHeader, transit: &[LayerHeader]) -> Vec<u8> {
    let mut aad = b"layer-aad-v1".to_vec();
    for header in std::iter::once(payload).chain(transit.iter()) {
        aad.extend_from_slice(&(header.key_id.len() as u32).to_le_bytes());
        aad.extend_from_slice(header.key_id.as_bytes());
        aad.extend_from_slice(&header.nonce);
    }
    aad
}

fn cipher_for(material: &[u8; KEY_LEN]) -> Aes256Gcm {
    let key: Key<Aes256Gcm> = (*material).into();
    Aes256Gcm::new(&key)
}

fn seal(material: &[u8; KEY_LEN], nonce: &[u8; NONCE_LEN], plaintext: &[u8], aad: &[u8]) -> Vec<u8> {
    cipher_for(material)
        .encrypt(&(*nonce).into(), Payload { msg: plaintext, aad })
        .expect("AES-GCM encryption is infallible for in-memory buffers")
}

fn open(
    material: &[u8; KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    ciphertext: &[u8],
    aad: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    cipher_for(material)
        .decrypt(&(*nonce).into(), Payload { msg: ciphertext, aad })
        .map_err(|_| CryptoError::AuthFailure)
}

fn require_purpose(key: &EscrowKey, expected: KeyPurpose) -> Result<(), CryptoError> {
    if key.purpose != expected {
        return Err(CryptoError::WrongKeyPurpose {
            expected,
            got: key.purpose,
        });
    }
    Ok(())
}

/// Seal raw payload bytes with a payload-purpose key.
pub fn encrypt_payload<R: Rng>(
    payload: &[u8],
    key: &EscrowKey,
    rng: &mut R,
) -> Result<LayeredCiphertext, CryptoError> {
    require_purpose(key, KeyPurpose::Payload)?;
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill(&mut nonce);
    let header = LayerHeader {
        key_id: key.key_id.clone(),
        nonce,
    };
    let aad = header_aad(&header, &[]);
    let sealed = seal(&key.material, &nonce, payload, &aad);
    Ok(LayeredCiphertext {
        payload_header: header,
        transit_headers: Vec::new(),
        sealed,
    })
}

/// Recover the payload. All transit layers must have been stripped. The
/// AEAD tag, not the header key id, decides whether a key is right.
pub fn decrypt_payload(ct: &LayeredCiphertext, key: &EscrowKey) -> Result<Vec<u8>, CryptoError> {
    require_purpose(key, KeyPurpose::Payload)?;
    if !ct.transit_headers.is_empty() {
        return Err(CryptoError::LayersRemaining);
    }
    let aad = header_aad(&ct.payload_header, &[]);
    open(&key.material, &ct.payload_header.nonce, &ct.sealed, &aad)
}

/// Wrap the current outermost seal in one more transit layer.
pub fn add_transit_layer<R: Rng>(
    mut ct: LayeredCiphertext,
    key: &EscrowKey,
    rng: &mut R,
) -> Result<LayeredCiphertext, CryptoError> {
    require_purpose(key, KeyPurpose::Transit)?;
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill(&mut nonce);
    ct.transit_headers.push(LayerHeader {
        key_id: key.key_id.clone(),
        nonce,
    });
    let aad = header_aad(&ct.payload_header, &ct.transit_headers);
    ct.sealed = seal(&key.material, &nonce, &ct.sealed, &aad);
    Ok(ct)
}

/// Strip the outermost transit layer. Fails authentication if the key is
/// wrong, layers are stripped out of order, or anything was tampered with.
pub fn strip_transit_layer(
    mut ct: LayeredCiphertext,
    key: &EscrowKey,
) -> Result<LayeredCiphertext, CryptoError> {
    require_purpose(key, KeyPurpose::Transit)?;
    let top = ct.transit_headers.last().ok_or(CryptoError::NoTransitLayer)?.clone();
    let aad = header_aad(&ct.payload_header, &ct.transit_headers);
    let inner = open(&key.material, &top.nonce, &ct.sealed, &aad)?;
    ct.transit_headers.pop();
    ct.sealed = inner;
    Ok(ct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::tests::test_registry;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::collections::BTreeSet;

    fn setup() -> (Registry, EscrowRegistry, StdRng) {
        (test_registry(), EscrowRegistry::new(), StdRng::seed_from_u64(0xC0FFEE))
    }

    #[test]
    fn generated_keys_have_distinct_ids_and_full_length() {
        let (reg, mut escrow, mut rng) = setup();
        let mut ids = BTreeSet::new();
        for i in 0..1000 {
            let jur = ["AA", "BB", "CC"][i % 3];
            let purpose = if i % 2 == 0 { KeyPurpose::Payload } else { KeyPurpose::Transit };
            let key = escrow.generate_key(jur, purpose, &reg, &mut rng).unwrap();
            assert_eq!(key.material().len(), KEY_LEN);
            assert!(ids.insert(key.key_id.clone()), "duplicate id {}", key.key_id);
            assert_eq!(key.jurisdiction, jur);
        }
    }

    #[test]
    fn key_is_escrowed_only_in_its_own_jurisdiction() {
        let (reg, mut escrow, mut rng) = setup();
        let key = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        assert!(escrow.keys_in("AA").iter().any(|k| k.key_id == key.key_id));
        assert!(!escrow.keys_in("BB").iter().any(|k| k.key_id == key.key_id));
        assert!(!escrow.keys_in("CC").iter().any(|k| k.key_id == key.key_id));
    }

    #[test]
    fn unknown_jurisdiction_rejected() {
        let (reg, mut escrow, mut rng) = setup();
        assert!(matches!(
            escrow.generate_key("ZZ", KeyPurpose::Payload, &reg, &mut rng),
            Err(CryptoError::UnknownJurisdiction { .. })
        ));
    }

    #[test]
    fn payload_roundtrip() {
        let (reg, mut escrow, mut rng) = setup();
        let key = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let ct = encrypt_payload(b"sensor reading 42", &key, &mut rng).unwrap();
        assert_eq!(ct.transit_depth(), 0);
        assert_eq!(decrypt_payload(&ct, &key).unwrap(), b"sensor reading 42");
    }

    #[test]
    fn decrypt_with_different_key_fails_authentication() {
        let (reg, mut escrow, mut rng) = setup();
        let k1 = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let k2 = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let ct = encrypt_payload(b"secret", &k1, &mut rng).unwrap();
        assert!(matches!(decrypt_payload(&ct, &k2), Err(CryptoError::AuthFailure)));
    }

    #[test]
    fn wrong_purpose_rejected() {
        let (reg, mut escrow, mut rng) = setup();
        let transit = escrow.generate_key("AA", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        assert!(matches!(
            encrypt_payload(b"x", &transit, &mut rng),
            Err(CryptoError::WrongKeyPurpose { .. })
        ));
        let payload = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let ct = encrypt_payload(b"x", &payload, &mut rng).unwrap();
        assert!(matches!(
            add_transit_layer(ct, &payload, &mut rng),
            Err(CryptoError::WrongKeyPurpose { .. })
        ));
    }

    #[test]
    fn transit_stack_strips_in_reverse_order() {
        let (reg, mut escrow, mut rng) = setup();
        let kp = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let k1 = escrow.generate_key("AA", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let k2 = escrow.generate_key("BB", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let ct = encrypt_payload(b"payload", &kp, &mut rng).unwrap();
        let ct = add_transit_layer(ct, &k1, &mut rng).unwrap();
        let ct = add_transit_layer(ct, &k2, &mut rng).unwrap();
        assert_eq!(ct.transit_depth(), 2);
        // Wrong order: k1 cannot open the k2 seal.
        assert!(matches!(
            strip_transit_layer(ct.clone(), &k1),
            Err(CryptoError::AuthFailure)
        ));
        let ct = strip_transit_layer(ct, &k2).unwrap();
        let ct = strip_transit_layer(ct, &k1).unwrap();
        assert_eq!(decrypt_payload(&ct, &kp).unwrap(), b"payload");
    }

    #[test]
    fn strip_on_bare_payload_errors() {
        let (reg, mut escrow, mut rng) = setup();
        let kp = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let kt = escrow.generate_key("AA", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let ct = encrypt_payload(b"p", &kp, &mut rng).unwrap();
        assert!(matches!(
            strip_transit_layer(ct, &kt),
            Err(CryptoError::NoTransitLayer)
        ));
    }

    #[test]
    fn payload_decrypt_requires_bare_ciphertext() {
        let (reg, mut escrow, mut rng) = setup();
        let kp = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let kt = escrow.generate_key("AA", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let ct = encrypt_payload(b"p", &kp, &mut rng).unwrap();
        let ct = add_transit_layer(ct, &kt, &mut rng).unwrap();
        assert!(matches!(
            decrypt_payload(&ct, &kp),
            Err(CryptoError::LayersRemaining)
        ));
    }

    #[test]
    fn compelled_set_is_exactly_the_jurisdiction_escrow() {
        let (reg, mut escrow, mut rng) = setup();
        let payload_key = escrow.generate_key("BB", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let transit_key = escrow.generate_key("CC", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let compelled = compel_escrow("CC", &escrow, &reg).unwrap();
        assert_eq!(compelled.len(), 1);
        assert_eq!(compelled[0].key_id, transit_key.key_id);
        assert!(compelled.iter().all(|k| k.key_id != payload_key.key_id));
    }

    #[test]
    fn non_compellable_jurisdiction_refuses() {
        let (reg, escrow, _) = setup();
        assert!(matches!(
            compel_escrow("BB", &escrow, &reg),
            Err(CryptoError::NotCompellable { .. })
        ));
    }

    #[test]
    fn replicated_key_is_obtainable_everywhere_compellable() {
        let (reg, mut escrow, mut rng) = setup();
        let shared = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        escrow.register_replica(&shared, "BB");
        escrow.register_replica(&shared, "CC");
        let compelled = compel_escrow("CC", &escrow, &reg).unwrap();
        assert!(compelled.iter().any(|k| k.material() == shared.material()));
    }

    #[test]
    fn compelled_set_matches_filter_oracle_on_random_layouts() {
        let (reg, _, mut rng) = setup();
        for _ in 0..1000 {
            let mut escrow = EscrowRegistry::new();
            let n = rng.random_range(1..12);
            for _ in 0..n {
                let jur = ["AA", "BB", "CC"][rng.random_range(0..3)];
                let purpose = if rng.random::<bool>() { KeyPurpose::Payload } else { KeyPurpose::Transit };
                escrow.generate_key(jur, purpose, &reg, &mut rng).unwrap();
            }
            for jur in ["AA", "CC"] {
                let compelled: BTreeSet<String> = compel_escrow(jur, &escrow, &reg)
                    .unwrap()
                    .into_iter()
                    .map(|k| k.key_id)
                    .collect();
                let oracle: BTreeSet<String> = escrow
                    .all_keys()
                    .filter(|k| k.jurisdiction == jur)
                    .map(|k| k.key_id.clone())
                    .collect();
                assert_eq!(compelled, oracle);
            }
        }
    }

    use crate::adversary::tamper_one_bit;

    #[test]
    fn single_bit_tampers_always_rejected() {
        let (reg, mut escrow, mut rng) = setup();
        let kp = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
        let k1 = escrow.generate_key("AA", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let k2 = escrow.generate_key("BB", KeyPurpose::Transit, &reg, &mut rng).unwrap();
        let payload = b"tamper target payload";
        let clean = {
            let ct = encrypt_payload(payload, &kp, &mut rng).unwrap();
            let ct = add_transit_layer(ct, &k1, &mut rng).unwrap();
            add_transit_layer(ct, &k2, &mut rng).unwrap()
        };
        for _ in 0..2000 {
            let mut ct = clean.clone();
            tamper_one_bit(&mut ct, &mut rng);
            let accepted = strip_transit_layer(ct, &k2)
                .and_then(|ct| strip_transit_layer(ct, &k1))
                .and_then(|ct| decrypt_payload(&ct, &kp))
                .map(|pt| pt == payload)
                .unwrap_or(false);
            assert!(!accepted, "tampered ciphertext was accepted");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Random payloads and random transit stacks up to depth 5
        /// round-trip bit-exactly when stripped in reverse order.
        #[test]
        fn fuzzed_stacks_roundtrip(
            payload in prop::collection::vec(any::<u8>(), 1..256),
            depth in 0usize..=5,
            seed in any::<u64>(),
        ) {
            let reg = test_registry();
            let mut escrow = EscrowRegistry::new();
            let mut rng = StdRng::seed_from_u64(seed);
            let kp = escrow.generate_key("AA", KeyPurpose::Payload, &reg, &mut rng).unwrap();
            let transit_keys: Vec<EscrowKey> = (0..depth)
                .map(|i| {
                    let jur = ["AA", "BB", "CC"][i % 3];
                    escrow.generate_key(jur, KeyPurpose::Transit, &reg, &mut rng).unwrap()
                })
                .collect();
            let mut ct = encrypt_payload(&payload, &kp, &mut rng).unwrap();
            for key in &transit_keys {
                ct = add_transit_layer(ct, key, &mut rng).unwrap();
            }
            prop_assert_eq!(ct.transit_depth(), depth);
            for key in transit_keys.iter().rev() {
                ct = strip_transit_layer(ct, key).unwrap();
            }
            prop_assert_eq!(decrypt_payload(&ct, &kp).unwrap(), payload);
        }
    }
}
