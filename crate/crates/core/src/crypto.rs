//! Digests and the pluggable signature interface.
//!
//! The ledger only ever sees a [`Verifier`]. Two schemes ship with the crate:
//! Ed25519 (the default) and a keyed-digest scheme for fast deterministic
//! fixtures. The digest scheme is forgeable by anyone who knows the public
//! key and must not be used where impersonation matters.

use std::fmt;
use std::sync::Arc;

use ed25519_dalek::{Signer as _, Verifier as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};

/// A 256-bit SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0u8; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Hash32(out))
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash32({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Hash32::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

impl Encode for Hash32 {
    fn encode(&self, enc: &mut Encoder) {
        enc.raw(&self.0);
    }
}

impl Decode for Hash32 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Hash32(dec.take(32)?.try_into().unwrap()))
    }
}

pub fn sha256(data: &[u8]) -> Hash32 {
    Hash32(Sha256::digest(data).into())
}

/// Digest with a domain-separation label, so a transaction id can never
/// collide with a block hash over the same bytes.
pub fn tagged_hash(domain: &str, data: &[u8]) -> Hash32 {
    let mut h = Sha256::new();
    h.update((domain.len() as u32).to_be_bytes());
    h.update(domain.as_bytes());
    h.update(data);
    Hash32(h.finalize().into())
}

macro_rules! byte_newtype {
    ($name:ident) => {
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub Vec<u8>);

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let hex = hex::encode(&self.0);
                write!(f, "{}({})", stringify!($name), &hex[..hex.len().min(16)])
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(&self.0))
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                hex::decode(&s).map($name).map_err(serde::de::Error::custom)
            }
        }

        impl Encode for $name {
            fn encode(&self, enc: &mut Encoder) {
                enc.bytes(&self.0);
            }
        }

        impl Decode for $name {
            fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
                dec.bytes().map($name)
            }
        }
    };
}

byte_newtype!(PublicKey);
byte_newtype!(Signature);

pub trait Signer: Send + Sync {
    fn public_key(&self) -> PublicKey;
    fn sign(&self, msg: &[u8]) -> Signature;
}

pub trait Verifier: Send + Sync {
    fn verify(&self, key: &PublicKey, msg: &[u8], sig: &Signature) -> bool;
}

/// Shared handle to a signing key.
pub type SignerRef = Arc<dyn Signer>;

/// Shared handle to a verifier.
pub type VerifierRef = Arc<dyn Verifier>;

pub struct Ed25519Signer {
    key: ed25519_dalek::SigningKey,
}

impl Ed25519Signer {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        Self {
            key: ed25519_dalek::SigningKey::from_bytes(&secret),
        }
    }

    /// Derives a key from an arbitrary seed string. Fixtures rely on this
    /// being stable across runs.
    pub fn from_seed(seed: &[u8]) -> Self {
        Self::from_secret(tagged_hash("trustchain/key-seed", seed).0)
    }
}

impl Signer for Ed25519Signer {
    fn public_key(&self) -> PublicKey {
        PublicKey(self.key.verifying_key().to_bytes().to_vec())
    }

    fn sign(&self, msg: &[u8]) -> Signature {
        Signature(self.key.sign(msg).to_bytes().to_vec())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ed25519Verifier;

impl Verifier for Ed25519Verifier {
    fn verify(&self, key: &PublicKey, msg: &[u8], sig: &Signature) -> bool {
        let Ok(key_bytes) = <[u8; 32]>::try_from(key.0.as_slice()) else {
            return false;
        };
        let Ok(sig_bytes) = <[u8; 64]>::try_from(sig.0.as_slice()) else {
            return false;
        };
        let Ok(vk) = ed25519_dalek::VerifyingKey::from_bytes(&key_bytes) else {
            return false;
        };
        vk.verify(msg, &ed25519_dalek::Signature::from_bytes(&sig_bytes))
            .is_ok()
    }
}

/// Test-mode signer: `sig = H("sig" || pk || msg)`. Deterministic and cheap,
/// but offers no unforgeability.
pub struct DigestSigner {
    public: PublicKey,
}

impl DigestSigner {
    pub fn from_seed(seed: &[u8]) -> Self {
        let secret = tagged_hash("trustchain/key-seed", seed);
        Self {
            public: PublicKey(tagged_hash("trustchain/digest-pk", &secret.0).0.to_vec()),
        }
    }
}

fn digest_signature(key: &PublicKey, msg: &[u8]) -> Signature {
    let mut enc = Encoder::new();
    enc.bytes(&key.0).raw(msg);
    Signature(tagged_hash("trustchain/digest-sig", enc.as_slice()).0.to_vec())
}

impl Signer for DigestSigner {
    fn public_key(&self) -> PublicKey {
        self.public.clone()
    }

    fn sign(&self, msg: &[u8]) -> Signature {
        digest_signature(&self.public, msg)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DigestVerifier;

impl Verifier for DigestVerifier {
    fn verify(&self, key: &PublicKey, msg: &[u8], sig: &Signature) -> bool {
        digest_signature(key, msg) == *sig
    }
}

/// Selects a signer/verifier pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureScheme {
    #[default]
    Ed25519,
    /// Keyed-digest test mode.
    Digest,
}

impl SignatureScheme {
    pub fn signer_from_seed(self, seed: &[u8]) -> SignerRef {
        match self {
            SignatureScheme::Ed25519 => Arc::new(Ed25519Signer::from_seed(seed)),
            SignatureScheme::Digest => Arc::new(DigestSigner::from_seed(seed)),
        }
    }

    pub fn verifier(self) -> VerifierRef {
        match self {
            SignatureScheme::Ed25519 => Arc::new(Ed25519Verifier),
            SignatureScheme::Digest => Arc::new(DigestVerifier),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hex_round_trip() {
        let h = sha256(b"x");
        assert_eq!(Hash32::from_hex(&h.to_hex()).unwrap(), h);
        assert!(Hash32::from_hex("zz").is_err());
    }

    #[test]
    fn both_schemes_sign_and_reject_foreign_keys() {
        for scheme in [SignatureScheme::Ed25519, SignatureScheme::Digest] {
            let a = scheme.signer_from_seed(b"alice");
            let b = scheme.signer_from_seed(b"bob");
            let v = scheme.verifier();
            let sig = a.sign(b"msg");
            assert!(v.verify(&a.public_key(), b"msg", &sig));
            assert!(!v.verify(&b.public_key(), b"msg", &sig));
            assert!(!v.verify(&a.public_key(), b"other", &sig));
            // Same seed, same key.
            assert_eq!(a.public_key(), scheme.signer_from_seed(b"alice").public_key());
        }
    }

    #[test]
    fn ed25519_rejects_malformed_material() {
        let v = Ed25519Verifier;
        assert!(!v.verify(&PublicKey(vec![1, 2]), b"m", &Signature(vec![0; 64])));
        let k = Ed25519Signer::from_seed(b"k");
        assert!(!v.verify(&k.public_key(), b"m", &Signature(vec![0; 10])));
    }
}
