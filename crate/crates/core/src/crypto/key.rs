use std::fmt;
use std::ops::BitXor;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Width of every key, chain link and session key in bytes.
pub const KEY_BYTES: usize = 16;

/// Width of a serialized [`NodeId`] in bytes (big-endian).
pub const NODE_ID_BYTES: usize = 8;

/// A 128-bit symmetric secret.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Key128([u8; KEY_BYTES]);

impl Key128 {
    pub const ZERO: Key128 = Key128([0; KEY_BYTES]);

    pub const fn from_bytes(bytes: [u8; KEY_BYTES]) -> Self {
        Key128(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; KEY_BYTES] = bytes.try_into().ok()?;
        Some(Key128(arr))
    }

    pub fn as_bytes(&self) -> &[u8; KEY_BYTES] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; KEY_BYTES]
    }

    /// Returns a copy with bit `bit` (0 = MSB of byte 0) inverted.
    pub fn flip_bit(&self, bit: usize) -> Self {
        let mut out = self.0;
        out[bit / 8] ^= 0x80 >> (bit % 8);
        Key128(out)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != KEY_BYTES * 2 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; KEY_BYTES];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(Key128(out))
    }

    /// Overwrites the key with zeros.
    pub fn wipe(&mut self) {
        self.0 = [0; KEY_BYTES];
    }
}

impl BitXor for Key128 {
    type Output = Key128;

    fn bitxor(self, rhs: Key128) -> Key128 {
        let mut out = [0u8; KEY_BYTES];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(rhs.0.iter())) {
            *o = a ^ b;
        }
        Key128(out)
    }
}

impl fmt::Debug for Key128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key128({})", self.to_hex())
    }
}

impl fmt::Display for Key128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Identifier of a sensor, third party or base station. Unique per deployment.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl NodeId {
    pub fn to_bytes(self) -> [u8; NODE_ID_BYTES] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(bytes: [u8; NODE_ID_BYTES]) -> Self {
        NodeId(u64::from_be_bytes(bytes))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

/// SHA-256 truncated to its first 16 bytes.
pub fn hash128(data: &[u8]) -> Key128 {
    let digest = Sha256::digest(data);
    let mut out = [0u8; KEY_BYTES];
    out.copy_from_slice(&digest[..KEY_BYTES]);
    Key128(out)
}

/// `Hash(key, id)`: the 24-byte input is the 16 key bytes followed by the
/// big-endian 8-byte id. This layout is a frozen wire constant.
pub fn keyed_hash(key: &Key128, id: NodeId) -> Key128 {
    let mut buf = [0u8; KEY_BYTES + NODE_ID_BYTES];
    buf[..KEY_BYTES].copy_from_slice(key.as_bytes());
    buf[KEY_BYTES..].copy_from_slice(&id.to_bytes());
    hash128(&buf)
}

/// Draws 128 uniformly distributed bits from the caller's generator.
pub fn random_key<R: RngCore + ?Sized>(rng: &mut R) -> Key128 {
    let mut out = [0u8; KEY_BYTES];
    rng.fill_bytes(&mut out);
    Key128(out)
}
