// Licensed under the Apache-2.0 license

//! The shared cryptographic primitive set.
//!
//! A single HMAC-SHA256 core backs both checks performed on a frame: the
//! plain SHA-256 digest is the integrity measurement and the keyed tag over
//! that digest is the authenticity measurement. Key derivation reuses the
//! same HMAC so nothing beyond SHA-256 is required.

use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::frame::DeviceIdentity;

pub const DIGEST_LEN: usize = 32;
pub const KEY_LEN: usize = 32;

/// Purpose label for the image-global frame signing key.
pub const FRAME_SIGNING_PURPOSE: &str = "frame-signing";

macro_rules! octets32 {
    ($name:ident) => {
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; 32]);

        impl $name {
            pub const fn zero() -> Self {
                Self([0; 32])
            }

            pub fn as_bytes(&self) -> &[u8; 32] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                <[u8; 32]>::try_from(bytes).ok().map(Self)
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                let mut out = [0u8; 32];
                hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
                Ok(Self(out))
            }
        }
    };
}

octets32!(Digest256);
octets32!(Tag256);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRole {
    Master,
    FrameSigning,
}

/// A 256-bit symmetric key tagged with its role.
///
/// Deliberately not `Serialize`: keys only leave memory through the ROM
/// image writer and the raw key file loader.
#[derive(Clone, PartialEq, Eq)]
pub struct Key256 {
    bytes: [u8; KEY_LEN],
    role: KeyRole,
}

impl Key256 {
    pub fn new(bytes: [u8; KEY_LEN], role: KeyRole) -> Self {
        Self { bytes, role }
    }

    pub fn master(bytes: [u8; KEY_LEN]) -> Self {
        Self::new(bytes, KeyRole::Master)
    }

    pub fn from_slice(bytes: &[u8], role: KeyRole) -> Option<Self> {
        <[u8; KEY_LEN]>::try_from(bytes)
            .ok()
            .map(|b| Self::new(b, role))
    }

    pub fn role(&self) -> KeyRole {
        self.role
    }

    pub fn expose(&self) -> &[u8; KEY_LEN] {
        &self.bytes
    }
}

impl fmt::Debug for Key256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Key256")
            .field("role", &self.role)
            .field("bytes", &"<redacted>")
            .finish()
    }
}

pub fn sha256_digest(data: &[u8]) -> Digest256 {
    Digest256(Sha256::digest(data).into())
}

/// Plain HMAC-SHA256 with a key of any length, over the concatenation of `parts`.
pub fn hmac_sha256(key: &[u8], parts: &[&[u8]]) -> Tag256 {
    let mut mac =
        <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("HMAC accepts keys of any length");
    for part in parts {
        mac.update(part);
    }
    Tag256(mac.finalize().into_bytes().into())
}

/// HMAC-SHA256 over the concatenation of `parts`.
pub fn hmac_tag_parts(key: &Key256, parts: &[&[u8]]) -> Tag256 {
    hmac_sha256(key.expose(), parts)
}

pub fn hmac_tag(key: &Key256, message: &[u8]) -> Tag256 {
    hmac_tag_parts(key, &[message])
}

/// Derives a frame signing key: `HMAC(master, purpose || identity)`.
///
/// The identity is encoded canonically (see [`DeviceIdentity::canonical_bytes`]).
/// Panics if `purpose` is empty or `master` is not a master key; both are
/// programming errors rather than runtime conditions.
pub fn derive_key(master: &Key256, identity: &DeviceIdentity, purpose: &str) -> Key256 {
    assert_eq!(master.role(), KeyRole::Master, "derive_key needs a master key");
    assert!(!purpose.is_empty(), "derive_key needs a purpose label");
    let tag = hmac_tag_parts(master, &[purpose.as_bytes(), &identity.canonical_bytes()]);
    Key256::new(tag.0, KeyRole::FrameSigning)
}

/// Equality whose running time depends only on the lengths.
pub fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let diff = a
        .iter()
        .zip(b)
        .fold(0u8, |acc, (x, y)| acc | std::hint::black_box(x ^ y));
    std::hint::black_box(diff) == 0
}
