use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::crypto::{
    hash128, keyed_hash, open, random_key, seal, session_key_initiator, Key128, NodeId, NodeKeys,
    SecretShare,
};

use super::message::{PairPayload, RequestPayload, TpAdvert};
use super::ops::{Item, Op, OpCounters};
use super::{Message, ProtocolError};

/// A third party that passed chain verification, with its distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpChoice {
    pub id: NodeId,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdvertOutcome {
    /// Verified with `hashes` chain steps (0 for a same-epoch repeat).
    Accepted { hashes: u32 },
    Rejected,
}

/// Sensor-side protocol state.
///
/// Persistent secrets are exactly `S_i`, `A_i` and the chain anchor.
/// Everything else is link state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensorNode {
    pub id: NodeId,
    keys: NodeKeys,
    chain_anchor: Key128,
    anchor_index: usize,
    anchor_epoch: Option<u64>,
    chain_length: usize,
    lookahead: u32,
    hello_nonce: Option<u64>,
    neighbors: BTreeSet<NodeId>,
    neighbor_has_tp: BTreeMap<NodeId, bool>,
    chosen_tp: Option<TpChoice>,
    fallback_tps: Vec<TpChoice>,
    requested: BTreeMap<NodeId, NodeId>,
    pending_sessions: BTreeMap<NodeId, Key128>,
    established: BTreeMap<NodeId, Key128>,
    rejected_adverts: u64,
    pub ops: OpCounters,
}

impl SensorNode {
    /// `anchor` is `L_anchor_index` of a chain of length `chain_length`.
    pub fn new(
        id: NodeId,
        keys: NodeKeys,
        anchor: Key128,
        anchor_index: usize,
        chain_length: usize,
        lookahead: u32,
    ) -> Self {
        SensorNode {
            id,
            keys,
            chain_anchor: anchor,
            anchor_index,
            anchor_epoch: None,
            chain_length,
            lookahead,
            hello_nonce: None,
            neighbors: BTreeSet::new(),
            neighbor_has_tp: BTreeMap::new(),
            chosen_tp: None,
            fallback_tps: Vec::new(),
            requested: BTreeMap::new(),
            pending_sessions: BTreeMap::new(),
            established: BTreeMap::new(),
            rejected_adverts: 0,
            ops: OpCounters::default(),
        }
    }

    pub fn keys(&self) -> &NodeKeys {
        &self.keys
    }

    pub fn chain_anchor(&self) -> Key128 {
        self.chain_anchor
    }

    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    pub fn neighbors(&self) -> &BTreeSet<NodeId> {
        &self.neighbors
    }

    pub fn chosen_tp(&self) -> Option<TpChoice> {
        self.chosen_tp
    }

    pub fn fallback_tps(&self) -> &[TpChoice] {
        &self.fallback_tps
    }

    pub fn established(&self) -> &BTreeMap<NodeId, Key128> {
        &self.established
    }

    pub fn pending_sessions(&self) -> &BTreeMap<NodeId, Key128> {
        &self.pending_sessions
    }

    pub fn rejected_adverts(&self) -> u64 {
        self.rejected_adverts
    }

    /// Secrets that outlive key establishment.
    pub fn persistent_secrets(&self) -> [Key128; 3] {
        [self.keys.encryption, self.keys.authentication, self.chain_anchor]
    }

    pub fn persistent_key_bits(&self) -> u32 {
        self.persistent_secrets().len() as u32 * 128
    }

    // ---- neighbour discovery -------------------------------------------

    pub fn hello<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Message {
        let nonce = rng.next_u64();
        self.hello_nonce = Some(nonce);
        self.ops.record(Op::Transmit, Item::Hello, 1);
        Message::Hello { sender: self.id, nonce }
    }

    /// Answers a neighbour's HELLO by echoing its nonce.
    pub fn on_hello(&mut self, msg: &Message) -> Result<Message, ProtocolError> {
        let Message::Hello { sender, nonce } = *msg else {
            return Err(ProtocolError::UnexpectedMessage(msg.tag()));
        };
        self.ops.record(Op::Receive, Item::Hello, 1);
        if sender == self.id {
            return Err(ProtocolError::SelfHandshake(self.id));
        }
        self.ops.record(Op::Transmit, Item::HelloAck, 1);
        Ok(Message::HelloAck { sender: self.id, nonce_echo: nonce, has_tp: self.chosen_tp.is_some() })
    }

    /// Completes the handshake when the ack echoes our own nonce. Returns
    /// whether the sender is now a confirmed neighbour.
    pub fn on_hello_ack(&mut self, msg: &Message) -> Result<bool, ProtocolError> {
        let Message::HelloAck { sender, nonce_echo, has_tp } = *msg else {
            return Err(ProtocolError::UnexpectedMessage(msg.tag()));
        };
        self.ops.record(Op::Receive, Item::HelloAck, 1);
        if sender == self.id {
            return Err(ProtocolError::SelfHandshake(self.id));
        }
        if self.hello_nonce != Some(nonce_echo) {
            return Ok(false);
        }
        self.neighbors.insert(sender);
        self.neighbor_has_tp.insert(sender, has_tp);
        Ok(true)
    }

    // ---- third-party discovery -----------------------------------------

    /// Verifies a third-party advertisement heard at `epoch` from `distance`.
    ///
    /// The link valid in epoch `e` is `L_{a-1-e}`. A link is accepted when it
    /// hashes onto the stored anchor in exactly the number of steps implied
    /// by the epoch (at most `lookahead`), or equals the anchor already
    /// accepted in this same epoch. Links from earlier epochs are rejected,
    /// which defeats replays.
    pub fn on_tp_advert(&mut self, advert: &TpAdvert, distance: f64, epoch: u64) -> AdvertOutcome {
        self.ops.record(Op::Receive, Item::TpAdvert, 1);
        let outcome = self.verify_link(&advert.disclosed_link, epoch);
        match outcome {
            AdvertOutcome::Accepted { .. } => self.note_tp(TpChoice { id: advert.tp_id, distance }),
            AdvertOutcome::Rejected => self.rejected_adverts += 1,
        }
        outcome
    }

    fn verify_link(&mut self, disclosed: &Key128, epoch: u64) -> AdvertOutcome {
        let Some(expected) = (self.chain_length as u64).checked_sub(epoch + 1) else {
            return AdvertOutcome::Rejected;
        };
        let expected = expected as usize;
        if expected == self.anchor_index {
            return if self.anchor_epoch == Some(epoch) && *disclosed == self.chain_anchor {
                AdvertOutcome::Accepted { hashes: 0 }
            } else {
                AdvertOutcome::Rejected
            };
        }
        if expected > self.anchor_index {
            return AdvertOutcome::Rejected;
        }
        let steps = self.anchor_index - expected;
        if steps > self.lookahead as usize {
            return AdvertOutcome::Rejected;
        }
        let mut cur = *disclosed;
        for _ in 0..steps {
            cur = hash128(cur.as_bytes());
        }
        self.ops.record(Op::Hash, Item::ChainHash, steps as u64);
        if cur != self.chain_anchor {
            return AdvertOutcome::Rejected;
        }
        self.chain_anchor = *disclosed;
        self.anchor_index = expected;
        self.anchor_epoch = Some(epoch);
        AdvertOutcome::Accepted { hashes: steps as u32 }
    }

    fn note_tp(&mut self, choice: TpChoice) {
        let mut all: Vec<TpChoice> = self.chosen_tp.into_iter().chain(self.fallback_tps.drain(..)).collect();
        all.retain(|c| c.id != choice.id);
        all.push(choice);
        all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        let mut it = all.into_iter();
        self.chosen_tp = it.next();
        self.fallback_tps = it.collect();
    }

    /// Whether this node initiates key establishment with `peer`: the lower
    /// id initiates when both ends reach a third party, otherwise whichever
    /// end does.
    pub fn initiates_with(&self, peer: NodeId) -> bool {
        if self.chosen_tp.is_none() || !self.neighbors.contains(&peer) {
            return false;
        }
        let peer_has = self.neighbor_has_tp.get(&peer).copied().unwrap_or(false);
        !peer_has || self.id < peer
    }

    pub fn initiated_peers(&self) -> Vec<NodeId> {
        self.neighbors.iter().copied().filter(|&p| self.initiates_with(p)).collect()
    }

    // ---- key establishment ---------------------------------------------

    /// One sealed request to the chosen third party naming every neighbour
    /// this node initiates with. `Ok(None)` when there is nothing to ask.
    pub fn request_keys(&mut self) -> Result<Option<Message>, ProtocolError> {
        let tp = self.chosen_tp.ok_or(ProtocolError::NoThirdParty(self.id))?.id;
        let peers = self.initiated_peers();
        if peers.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.request_keys_via(tp, &peers)))
    }

    /// Request for an explicit peer list addressed to `tp`, e.g. one
    /// discovered through an intermediate.
    pub fn request_keys_via(&mut self, tp: NodeId, peers: &[NodeId]) -> Message {
        for &p in peers {
            self.requested.insert(p, tp);
        }
        let payload = RequestPayload { requester: self.id, peers: peers.to_vec() }.encode();
        let sealed = seal(&self.keys.authentication, tp, &payload);
        let entries = peers.len() as u64;
        self.ops.record(Op::Encrypt, Item::KeyRequest, 1);
        self.ops.record(Op::Encrypt, Item::RequestEntry, entries);
        self.ops.record(Op::Transmit, Item::KeyRequest, 1);
        self.ops.record(Op::Transmit, Item::RequestEntry, entries);
        Message::KeyRequest { sender: self.id, sealed }
    }

    /// Opens a share from the third party, derives the session key, draws
    /// the link key `K` and returns `(peer, KeyConfirm)` sealed under the
    /// session key.
    pub fn on_key_response<R: RngCore + ?Sized>(
        &mut self,
        msg: &Message,
        rng: &mut R,
    ) -> Result<(NodeId, Message), ProtocolError> {
        let Message::KeyResponse { tp_id, sealed } = msg else {
            return Err(ProtocolError::UnexpectedMessage(msg.tag()));
        };
        self.ops.record(Op::Receive, Item::KeyResponse, 1);
        self.ops.record(Op::Decrypt, Item::KeyResponse, 1);
        let plain = open(&self.keys.authentication, sealed)
            .map_err(|_| ProtocolError::AuthenticationFailed { from: *tp_id })?;
        let body = PairPayload::decode(&plain)?;
        if body.first != self.id || self.requested.get(&body.second) != Some(tp_id) {
            return Err(ProtocolError::Unsolicited { from: *tp_id });
        }
        let peer = body.second;
        self.requested.remove(&peer);
        let share = SecretShare { initiator: self.id, peer, share: body.key };
        let session = session_key_initiator(&share, &self.keys.encryption, peer);
        self.ops.record(Op::Hash, Item::KeyedHash, 1);
        self.pending_sessions.insert(peer, session);
        let link_key = random_key(rng);
        self.ops.record(Op::Keygen, Item::LinkKey, 1);
        let confirm = PairPayload { first: self.id, second: peer, key: link_key }.encode();
        let sealed = seal(&session, peer, &confirm);
        self.ops.record(Op::Encrypt, Item::KeyConfirm, 1);
        self.ops.record(Op::Transmit, Item::KeyConfirm, 1);
        self.pending_sessions.remove(&peer);
        self.established.insert(peer, link_key);
        Ok((peer, Message::KeyConfirm { sender: self.id, sealed }))
    }

    /// Responder side: derives the session key locally and records `K`.
    pub fn on_key_confirm(&mut self, msg: &Message) -> Result<NodeId, ProtocolError> {
        let Message::KeyConfirm { sender, sealed } = msg else {
            return Err(ProtocolError::UnexpectedMessage(msg.tag()));
        };
        self.ops.record(Op::Receive, Item::KeyConfirm, 1);
        if !self.neighbors.contains(sender) {
            return Err(ProtocolError::NotNeighbor { from: *sender });
        }
        let session = keyed_hash(&self.keys.encryption, *sender);
        self.ops.record(Op::Hash, Item::KeyedHash, 1);
        self.pending_sessions.insert(*sender, session);
        self.ops.record(Op::Decrypt, Item::KeyConfirm, 1);
        let plain = open(&session, sealed).map_err(|_| ProtocolError::AuthenticationFailed { from: *sender })?;
        let body = PairPayload::decode(&plain)?;
        if body.first != *sender || body.second != self.id {
            return Err(ProtocolError::Unsolicited { from: *sender });
        }
        self.pending_sessions.remove(sender);
        self.established.insert(*sender, body.key);
        Ok(*sender)
    }
}

/// Runs the nonce-echo handshake between two sensors over a link that may
/// be asymmetric. Returns whether both ended up as mutual neighbours.
pub fn handshake<R: RngCore + ?Sized>(
    a: &mut SensorNode,
    b: &mut SensorNode,
    a_reaches_b: bool,
    b_reaches_a: bool,
    rng: &mut R,
) -> Result<bool, ProtocolError> {
    if a.id == b.id {
        return Err(ProtocolError::SelfHandshake(a.id));
    }
    let hello_a = a.hello(rng);
    let hello_b = b.hello(rng);
    if a_reaches_b {
        let ack = b.on_hello(&hello_a)?;
        if b_reaches_a {
            a.on_hello_ack(&ack)?;
        }
    }
    if b_reaches_a {
        let ack = a.on_hello(&hello_b)?;
        if a_reaches_b {
            b.on_hello_ack(&ack)?;
        }
    }
    Ok(a.neighbors.contains(&b.id) && b.neighbors.contains(&a.id))
}
