//! Content digests for blobs and revision records.

use sha2::{Digest, Sha256};

/// Name of the digest algorithm, recorded in every revision record so the
/// on-disk format stays self-describing.
pub const ALGORITHM: &str = "sha256";

/// Hex-encoded SHA-256 of the given bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        // sha256 of the empty string
        assert_eq!(
            digest_bytes(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn distinct_inputs_distinct_digests() {
        assert_ne!(digest_bytes(b"a"), digest_bytes(b"b"));
    }
}
