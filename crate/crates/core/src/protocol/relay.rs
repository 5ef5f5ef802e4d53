use rand::RngCore;

use crate::crypto::NodeId;

use super::ops::{Item, Op};
use super::{Message, ProtocolError, SensorNode, ThirdParty};

/// At most one intermediate between a sensor and its third party.
pub const MAX_INTERMEDIATES: usize = 1;

/// Opaque bytes carried across intermediates. Payloads stay sealed under the
/// originator's key end to end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelayEnvelope {
    pub origin: NodeId,
    pub via: Vec<NodeId>,
    pub payload: Vec<u8>,
}

impl RelayEnvelope {
    pub fn new(origin: NodeId, msg: &Message) -> Self {
        RelayEnvelope { origin, via: Vec::new(), payload: msg.encode() }
    }

    /// Appends a hop, refusing to exceed [`MAX_INTERMEDIATES`].
    pub fn add_hop(&mut self, relay: NodeId) -> Result<(), ProtocolError> {
        if self.via.len() >= MAX_INTERMEDIATES {
            return Err(ProtocolError::HopLimit);
        }
        self.via.push(relay);
        Ok(())
    }
}

/// Intermediate side: forwards bytes unchanged, paying receive and transmit.
pub fn forward(intermediate: &mut SensorNode, envelope: &mut RelayEnvelope, item: Item) -> Result<(), ProtocolError> {
    envelope.add_hop(intermediate.id)?;
    intermediate.ops.record(Op::Receive, item, 1);
    intermediate.ops.record(Op::Transmit, item, 1);
    Ok(())
}

/// Honest two-hop request/response round for a node with no third party in
/// range. Returns the confirmations the node produced, one per peer.
pub fn relay_via_intermediate<R: RngCore + ?Sized>(
    node: &mut SensorNode,
    intermediate: &mut SensorNode,
    tp: &mut ThirdParty,
    peers: &[NodeId],
    rng: &mut R,
) -> Result<Vec<(NodeId, Message)>, ProtocolError> {
    if node.chosen_tp().is_some() {
        return Err(ProtocolError::NoRelay(node.id));
    }
    let linked = node.neighbors().contains(&intermediate.id) && intermediate.neighbors().contains(&node.id);
    let serves = intermediate.chosen_tp().map(|c| c.id) == Some(tp.id);
    if !linked || !serves {
        return Err(ProtocolError::NoRelay(node.id));
    }
    let request = node.request_keys_via(tp.id, peers);
    let mut up = RelayEnvelope::new(node.id, &request);
    forward(intermediate, &mut up, Item::KeyRequest)?;
    let responses = tp.serve_request(&Message::decode(&up.payload)?)?;
    let mut confirms = Vec::with_capacity(responses.len());
    for resp in responses {
        let mut down = RelayEnvelope::new(tp.id, &resp);
        forward(intermediate, &mut down, Item::KeyResponse)?;
        confirms.push(node.on_key_response(&Message::decode(&down.payload)?, rng)?);
    }
    Ok(confirms)
}
