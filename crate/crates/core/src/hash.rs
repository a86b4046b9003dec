//! FNV-1a hashing for config hashes and parameter fingerprints.

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of a JSON document in canonical form (sorted keys, no whitespace).
///
/// `serde_json::Value` maps are BTree-backed, so re-serializing a parsed
/// document yields a canonical byte sequence independent of the source
/// file's key order and formatting.
pub fn canonical_json_hash(value: &serde_json::Value) -> u64 {
    let canonical = serde_json::to_string(value).expect("JSON value serializes");
    fnv1a64(canonical.as_bytes())
}

/// Hash of raw config text: parse, canonicalize, hash.
pub fn config_text_hash(text: &str) -> Result<u64, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok(canonical_json_hash(&value))
}

/// Render a hash the way artifacts store it.
pub fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // Standard FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn canonicalization_ignores_formatting_and_key_order() {
        let a = config_text_hash(r#"{"b": 1, "a": [1, 2]}"#).unwrap();
        let b = config_text_hash("{\n  \"a\": [1,2],\n  \"b\": 1\n}").unwrap();
        assert_eq!(a, b);
    }
}
