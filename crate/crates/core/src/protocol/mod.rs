//! Role state machines: sensors, third parties and the base station, plus
//! the message formats they exchange.
//!
//! Flow for one link `(i, j)` where `i` initiates:
//!
//! 1. HELLO / HELLO-ACK nonce echo confirms both directions.
//! 2. Third parties broadcast the current chain link; sensors verify it
//!    against their anchor and pick the nearest verified third party.
//! 3. `i` sends `KeyRequest` sealed under `A_i`.
//! 4. The third party answers with `Secret(i, j)` sealed under `A_i`.
//! 5. `i` derives the session key, draws `K_ij`, sends `KeyConfirm` sealed
//!    under the session key; `j` derives the same session key locally.

mod base_station;
mod event;
mod message;
mod ops;
mod relay;
mod sensor;
mod third_party;
mod trace;

#[cfg(test)]
mod tests;

pub use base_station::{BaseStation, Role};
pub use event::{is_monotone, EventKind, ProtocolEvent};
pub use message::{Message, MessageTag, PairPayload, RequestPayload, TpAdvert};
pub use ops::{Item, Op, OpCounters};
pub use relay::{forward, relay_via_intermediate, RelayEnvelope, MAX_INTERMEDIATES};
pub use sensor::{handshake, AdvertOutcome, SensorNode, TpChoice};
pub use third_party::{ProvisionPayload, ThirdParty, TpMode};
pub use trace::{read_ndjson, write_ndjson, TraceRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{CryptoError, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Hash chain length `a`.
    pub chain_length: usize,
    /// Maximum chain steps a sensor will hash to catch up on missed links.
    pub lookahead: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams { chain_length: 1024, lookahead: 16 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("unknown message tag {0}")]
    UnknownTag(u8),
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error("unexpected {0:?} message")]
    UnexpectedMessage(MessageTag),
    #[error("node {0} attempted a handshake with itself")]
    SelfHandshake(NodeId),
    #[error("node {0} has no verified third party")]
    NoThirdParty(NodeId),
    #[error("no qualifying intermediate for node {0}")]
    NoRelay(NodeId),
    #[error("relay path exceeds one intermediate")]
    HopLimit,
    #[error("third party {0} is not serving")]
    Refused(NodeId),
    #[error("authentication failed for packet from {from}")]
    AuthenticationFailed { from: NodeId },
    #[error("unsolicited or mismatched payload from {from}")]
    Unsolicited { from: NodeId },
    #[error("key confirmation from non-neighbour {from}")]
    NotNeighbor { from: NodeId },
    #[error("node {id} already provisioned as {existing:?}")]
    Provisioning { id: NodeId, existing: Role },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}
