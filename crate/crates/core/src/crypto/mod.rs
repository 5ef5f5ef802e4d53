//! Key material, hashing, the pairwise key-derivation algebra, hash chains
//! and the authenticated cipher used for every sealed protocol payload.
//!
//! Frozen byte layouts (shared with any other implementation):
//!
//! | item            | layout                                   |
//! |-----------------|------------------------------------------|
//! | `Key128`        | 16 raw bytes                             |
//! | `NodeId`        | 8 bytes, big-endian                      |
//! | `Hash(key, id)` | SHA-256(key(16) ‖ id(8)), first 16 bytes |
//! | chain step      | SHA-256(link(16)), first 16 bytes        |

mod chain;
mod derive;
mod key;
mod seal;

pub use chain::{chain_generate, chain_verify_and_advance, verify_with_lookahead, ChainCheck, HashChain};
pub use derive::{
    derive_node_keys, make_secret_share, session_key_initiator, session_key_responder, NodeKeys,
    SecretShare,
};
pub use key::{hash128, keyed_hash, random_key, Key128, NodeId, KEY_BYTES, NODE_ID_BYTES};
pub use seal::{open, seal, SealedPacket, TAG_BYTES};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("secret share requested between node {0} and itself")]
    InvalidPeer(NodeId),
    #[error("hash chain length must be at least 1")]
    InvalidChainLength,
    #[error("hash chain exhausted")]
    ChainExhausted,
    #[error("authentication failed")]
    AuthenticationFailed,
    #[error("malformed sealed packet: {0}")]
    Malformed(&'static str),
}
