//! Append-only Merkle-committed audit log of transfer decisions.
//!
//! Leaves are SHA-256 hashes of canonical record bytes, interior nodes hash
//! the concatenation of their children, and an odd node is promoted to the
//! next level unchanged. Leaf and interior hashes are domain-separated so a
//! leaf can never be confused with an interior node. Appending keeps a stack
//! of perfect-subtree peaks, which folds to the same root as a full pairwise
//! recomputation.
//!
//! Records carry only transfer metadata, never payload bytes, so an
//! inclusion proof asserts a verdict without exposing the data it covered.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::policy::Control;

pub type Digest = [u8; 32];

const LEAF_TAG: u8 = 0x00;
const NODE_TAG: u8 = 0x01;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("record index {index} out of range (log has {len} leaves)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("record {index} does not match the committed log")]
    Tampered { index: usize },
    #[error("export line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("manifest root does not match the exported records")]
    RootMismatch,
}

/// Verdict kind recorded in the audit trail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordedVerdict {
    Allow,
    AllowWithControls,
    Deny,
}

/// One audit entry. Field order is the canonical serialization order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub transfer_id: u64,
    pub origin: String,
    pub destination: String,
    pub verdict: RecordedVerdict,
    pub controls_applied: BTreeSet<Control>,
    /// Simulation tick, not wall clock, for deterministic replay.
    pub timestamp_tick: u64,
}

impl AuditRecord {
    /// Canonical byte-stable encoding: compact JSON with fixed field order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("audit records always serialize")
    }

    /// Human-readable claim carried by a compliance assertion.
    pub fn statement(&self) -> String {
        format!(
            "transfer {} from {} to {} recorded with verdict {:?} at tick {}",
            self.transfer_id, self.origin, self.destination, self.verdict, self.timestamp_tick
        )
    }
}

pub fn leaf_hash(record_bytes: &[u8]) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update([LEAF_TAG]);
    hasher.update(record_bytes);
    hasher.finalize().into()
}

pub fn node_hash(left: &Digest, right: &Digest) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update([NODE_TAG]);
    hasher.update(left);
    hasher.update(right);
    hasher.finalize().into()
}

/// Append-only Merkle log over audit records.
#[derive(Debug, Default, Clone)]
pub struct MerkleLog {
    records: Vec<AuditRecord>,
    leaves: Vec<Digest>,
    /// Roots of perfect subtrees, left to right, as (height, digest).
    peaks: Vec<(u32, Digest)>,
}

impl MerkleLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn leaves(&self) -> &[Digest] {
        &self.leaves
    }

    /// Append a record and return the new root.
    pub fn append_record(&mut self, record: AuditRecord) -> Digest {
        let leaf = leaf_hash(&record.canonical_bytes());
        self.records.push(record);
        self.leaves.push(leaf);
        self.peaks.push((0, leaf));
        while self.peaks.len() >= 2 {
            let (h2, d2) = self.peaks[self.peaks.len() - 1];
            let (h1, d1) = self.peaks[self.peaks.len() - 2];
            if h1 != h2 {
                break;
            }
            self.peaks.truncate(self.peaks.len() - 2);
            self.peaks.push((h1 + 1, node_hash(&d1, &d2)));
        }
        self.root().expect("non-empty log has a root")
    }

    /// Current root: peaks folded right to left, matching pairwise
    /// recomputation with odd-node promotion.
    pub fn root(&self) -> Option<Digest> {
        let mut iter = self.peaks.iter().rev();
        let (_, first) = iter.next()?;
        let mut acc = *first;
        for (_, digest) in iter {
            acc = node_hash(digest, &acc);
        }
        Some(acc)
    }

    /// Inclusion proof for the record at `index` against the current root.
    pub fn prove_inclusion(&self, index: usize) -> Result<ComplianceAssertion, AuditError> {
        if index >= self.leaves.len() {
            return Err(AuditError::IndexOutOfRange {
                index,
                len: self.leaves.len(),
            });
        }
        let mut path = Vec::new();
        let mut level: Vec<Digest> = self.leaves.clone();
        let mut pos = index;
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len() / 2 + 1);
            for pair in level.chunks(2) {
                if pair.len() == 2 {
                    next.push(node_hash(&pair[0], &pair[1]));
                } else {
                    next.push(pair[0]);
                }
            }
            let sibling = if pos % 2 == 0 { pos + 1 } else { pos - 1 };
            if sibling < level.len() {
                path.push(ProofStep {
                    sibling_on_left: sibling < pos,
                    digest: level[sibling],
                });
            }
            pos /= 2;
            level = next;
        }
        Ok(ComplianceAssertion {
            root: level[0],
            record_index: index,
            record: self.records[index].clone(),
            inclusion_proof: path,
            statement: self.records[index].statement(),
        })
    }
}

/// One sibling digest along an inclusion path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub sibling_on_left: bool,
    #[serde(with = "hex_digest")]
    pub digest: Digest,
}

/// Verifiable claim that a record is committed under a root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceAssertion {
    #[serde(with = "hex_digest")]
    pub root: Digest,
    pub record_index: usize,
    pub record: AuditRecord,
    pub inclusion_proof: Vec<ProofStep>,
    pub statement: String,
}

/// Recompute the root from the assertion's record and path and compare it
/// to `expected_root`. Any tampering with the record, the index's path, the
/// statement or the digests yields `false`.
pub fn verify_assertion(assertion: &ComplianceAssertion, expected_root: &Digest) -> bool {
    if assertion.statement != assertion.record.statement() {
        return false;
    }
    let mut acc = leaf_hash(&assertion.record.canonical_bytes());
    for step in &assertion.inclusion_proof {
        acc = if step.sibling_on_left {
            node_hash(&step.digest, &acc)
        } else {
            node_hash(&acc, &step.digest)
        };
    }
    acc == *expected_root && assertion.root == *expected_root
}

/// Root manifest accompanying a line-delimited record export. Carries the
/// producing run's config hash and seed so the export is reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditManifest {
    #[serde(default)]
    pub config_hash: String,
    #[serde(default)]
    pub seed: u64,
    pub leaf_count: usize,
    pub root_hex: String,
    pub leaf_hashes_hex: Vec<String>,
}

impl AuditManifest {
    pub fn from_log(log: &MerkleLog) -> Self {
        Self {
            config_hash: String::new(),
            seed: 0,
            leaf_count: log.len(),
            root_hex: log.root().map(hex::encode).unwrap_or_default(),
            leaf_hashes_hex: log.leaves().iter().map(hex::encode).collect(),
        }
    }

    pub fn with_provenance(mut self, config_hash: &str, seed: u64) -> Self {
        self.config_hash = config_hash.to_owned();
        self.seed = seed;
        self
    }
}

/// Serialize the log as line-delimited canonical records.
pub fn export_records(log: &MerkleLog) -> String {
    let mut out = String::new();
    for record in log.records() {
        out.push_str(&String::from_utf8(record.canonical_bytes()).expect("canonical json is utf-8"));
        out.push('\n');
    }
    out
}

/// Re-verify an export against its manifest. Returns the number of records
/// verified; the error names the first failing line or index.
pub fn verify_export(lines: &str, manifest: &AuditManifest) -> Result<usize, AuditError> {
    let mut log = MerkleLog::new();
    for (i, line) in lines.lines().enumerate() {
        let record: AuditRecord =
            serde_json::from_str(line).map_err(|e| AuditError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?;
        // Canonical form must survive the round trip byte-for-byte.
        if record.canonical_bytes() != line.as_bytes() {
            return Err(AuditError::Parse {
                line: i + 1,
                reason: "record is not in canonical form".to_owned(),
            });
        }
        log.append_record(record);
    }
    if log.len() != manifest.leaf_count {
        return Err(AuditError::Parse {
            line: lines.lines().count(),
            reason: format!(
                "export has {} records, manifest expects {}",
                log.len(),
                manifest.leaf_count
            ),
        });
    }
    for (i, leaf) in log.leaves().iter().enumerate() {
        let expected = manifest
            .leaf_hashes_hex
            .get(i)
            .ok_or(AuditError::Tampered { index: i })?;
        if hex::encode(leaf) != *expected {
            return Err(AuditError::Tampered { index: i });
        }
    }
    let root = log.root().map(hex::encode).unwrap_or_default();
    if root != manifest.root_hex {
        return Err(AuditError::RootMismatch);
    }
    // Exercise the proof path as well: every assertion must verify.
    let root_digest = log.root();
    for i in 0..log.len() {
        let assertion = log.prove_inclusion(i)?;
        if !verify_assertion(&assertion, &root_digest.expect("non-empty")) {
            return Err(AuditError::Tampered { index: i });
        }
    }
    Ok(log.len())
}

mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(digest: &[u8; 32], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(digest))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(de)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}
