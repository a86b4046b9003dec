//! Parameter file format: magic, JSON header, raw little-endian f64 weights.
//!
//! Layout: 8-byte magic `GNMPOL01`, u32 little-endian header length, the
//! header JSON (shape, provenance, fingerprint), then `param_count` f64
//! values. The fingerprint is a hash of the raw parameter bytes; loading
//! recomputes and compares it, so corrupted or spliced files are refused.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{fnv1a64, hash_hex};
use crate::policy::net::{Policy, PolicyMeta};

/// Leading bytes of every parameter file.
pub const MAGIC: &[u8; 8] = b"GNMPOL01";

/// Provenance and shape stored ahead of the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamHeader {
    pub schema: String,
    pub meta: PolicyMeta,
    pub param_count: usize,
    /// Hex hash of the parameter byte stream.
    pub fingerprint: String,
    /// Hash of the config the policy was trained under.
    pub config_hash: String,
    /// Roster subset label the policy was trained on.
    pub subset: String,
}

/// Header fields a caller usually wants after loading.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProvenance {
    pub fingerprint: String,
    pub config_hash: String,
    pub subset: String,
}

fn param_bytes(flat: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(flat.len() * 8);
    for v in flat {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Write a policy with provenance to `path`.
pub fn save_policy(path: &Path, policy: &Policy, config_hash: &str, subset: &str) -> Result<()> {
    let flat = policy.flatten_params();
    let bytes = param_bytes(&flat);
    let header = ParamHeader {
        schema: crate::config::SCHEMA.into(),
        meta: policy.meta.clone(),
        param_count: flat.len(),
        fingerprint: hash_hex(fnv1a64(&bytes)),
        config_hash: config_hash.into(),
        subset: subset.into(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + header_json.len() + bytes.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    out.extend_from_slice(&bytes);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a policy back, verifying magic, schema, shape, and fingerprint.
pub fn load_policy(path: &Path) -> Result<(Policy, PolicyProvenance)> {
    let data = std::fs::read(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let fail = |reason: &str| Error::Parse {
        path: path.display().to_string(),
        reason: reason.into(),
    };
    if data.len() < 12 || &data[..8] != MAGIC {
        return Err(fail("not a parameter file (bad magic)"));
    }
    let header_len = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
    if data.len() < 12 + header_len {
        return Err(fail("truncated header"));
    }
    let header: ParamHeader = serde_json::from_slice(&data[12..12 + header_len])?;
    if header.schema != crate::config::SCHEMA {
        return Err(Error::SchemaVersion {
            expected: crate::config::SCHEMA.into(),
            found: header.schema,
        });
    }
    let body = &data[12 + header_len..];
    if body.len() != header.param_count * 8 {
        return Err(fail(&format!(
            "expected {} parameter bytes, found {}",
            header.param_count * 8,
            body.len()
        )));
    }
    let actual = fnv1a64(body);
    let recorded = u64::from_str_radix(&header.fingerprint, 16)
        .map_err(|_| fail("fingerprint field is not hex"))?;
    if actual != recorded {
        return Err(Error::FingerprintMismatch {
            graph: recorded,
            params: actual,
        });
    }
    let fingerprint = hash_hex(actual);
    let flat: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut policy = Policy::init(header.meta.clone(), 0);
    policy.assign_params(&flat)?;
    Ok((
        policy,
        PolicyProvenance {
            fingerprint,
            config_hash: header.config_hash,
            subset: header.subset,
        },
    ))
}

/// Fingerprint of a policy's current parameters, as stored in saved files.
pub fn policy_fingerprint(policy: &Policy) -> String {
    hash_hex(fnv1a64(&param_bytes(&policy.flatten_params())))
}
