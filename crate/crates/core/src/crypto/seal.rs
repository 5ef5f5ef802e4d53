use aes_gcm_siv::aead::{Aead, KeyInit, Payload};
use aes_gcm_siv::{Aes128GcmSiv, Nonce};
use serde::{Deserialize, Serialize};

use super::{CryptoError, Key128, NodeId, NODE_ID_BYTES};

pub const TAG_BYTES: usize = 16;

// AES-GCM-SIV is deterministic under a fixed nonce: equal plaintexts under
// equal keys give equal packets, nothing else leaks.
const NONCE: [u8; 12] = [0; 12];

/// Encrypted and authenticated payload. The recipient hint travels in the
/// clear and is bound as associated data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedPacket {
    pub key_hint: NodeId,
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_BYTES],
}

pub fn seal(key: &Key128, key_hint: NodeId, plaintext: &[u8]) -> SealedPacket {
    let cipher = Aes128GcmSiv::new_from_slice(key.as_bytes()).expect("16-byte key");
    let aad = key_hint.to_bytes();
    let mut out = cipher
        .encrypt(Nonce::from_slice(&NONCE), Payload { msg: plaintext, aad: &aad })
        .expect("in-memory encryption cannot fail");
    let tag_start = out.len() - TAG_BYTES;
    let mut tag = [0u8; TAG_BYTES];
    tag.copy_from_slice(&out[tag_start..]);
    out.truncate(tag_start);
    SealedPacket { key_hint, ciphertext: out, tag }
}

pub fn open(key: &Key128, packet: &SealedPacket) -> Result<Vec<u8>, CryptoError> {
    let cipher = Aes128GcmSiv::new_from_slice(key.as_bytes()).expect("16-byte key");
    let aad = packet.key_hint.to_bytes();
    let mut buf = Vec::with_capacity(packet.ciphertext.len() + TAG_BYTES);
    buf.extend_from_slice(&packet.ciphertext);
    buf.extend_from_slice(&packet.tag);
    cipher
        .decrypt(Nonce::from_slice(&NONCE), Payload { msg: &buf, aad: &aad })
        .map_err(|_| CryptoError::AuthenticationFailed)
}

impl SealedPacket {
    /// `hint(8, BE) ‖ len(2, BE) ‖ ciphertext ‖ tag(16)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(NODE_ID_BYTES + 2 + self.ciphertext.len() + TAG_BYTES);
        out.extend_from_slice(&self.key_hint.to_bytes());
        out.extend_from_slice(&(self.ciphertext.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(&self.tag);
        out
    }

    /// Parses one packet from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize), CryptoError> {
        if bytes.len() < NODE_ID_BYTES + 2 + TAG_BYTES {
            return Err(CryptoError::Malformed("truncated header"));
        }
        let hint = NodeId::from_bytes(bytes[..NODE_ID_BYTES].try_into().unwrap());
        let len = u16::from_be_bytes([bytes[NODE_ID_BYTES], bytes[NODE_ID_BYTES + 1]]) as usize;
        let body = NODE_ID_BYTES + 2;
        let end = body + len + TAG_BYTES;
        if bytes.len() < end {
            return Err(CryptoError::Malformed("truncated body"));
        }
        let mut tag = [0u8; TAG_BYTES];
        tag.copy_from_slice(&bytes[body + len..end]);
        Ok((
            SealedPacket { key_hint: hint, ciphertext: bytes[body..body + len].to_vec(), tag },
            end,
        ))
    }
}
