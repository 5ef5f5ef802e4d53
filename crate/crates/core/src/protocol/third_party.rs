use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::crypto::{
    chain_generate, derive_node_keys, keyed_hash, make_secret_share, open, seal, HashChain, Key128,
    NodeId, NodeKeys,
};

use super::message::{PairPayload, Reader, RequestPayload, TpAdvert};
use super::ops::{Item, Op, OpCounters};
use super::{Message, ProtocolError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TpMode {
    Active,
    /// Radio idle, secrets retained.
    Sleeping,
    /// Masters and chain destroyed; only a provisioning packet revives it.
    Wiped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Masters {
    s: Key128,
    a: Key128,
}

/// Secrets restored by the base station after redeployment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProvisionPayload {
    pub tp_id: NodeId,
    pub master_s: Key128,
    pub master_a: Key128,
    pub chain_seed: Key128,
    pub chain_length: u32,
    pub cursor: u32,
    pub wipe_deadline: u64,
}

impl ProvisionPayload {
    /// `tp(8) ‖ S(16) ‖ A(16) ‖ M(16) ‖ a(4) ‖ cursor(4) ‖ deadline(8)`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(72);
        out.extend_from_slice(&self.tp_id.to_bytes());
        out.extend_from_slice(self.master_s.as_bytes());
        out.extend_from_slice(self.master_a.as_bytes());
        out.extend_from_slice(self.chain_seed.as_bytes());
        out.extend_from_slice(&self.chain_length.to_be_bytes());
        out.extend_from_slice(&self.cursor.to_be_bytes());
        out.extend_from_slice(&self.wipe_deadline.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader { buf: bytes };
        let p = ProvisionPayload {
            tp_id: r.id()?,
            master_s: r.key()?,
            master_a: r.key()?,
            chain_seed: r.key()?,
            chain_length: r.u32()?,
            cursor: r.u32()?,
            wipe_deadline: r.u64()?,
        };
        r.finish()?;
        Ok(p)
    }
}

/// Third-party protocol state.
///
/// Persistent secrets are `S`, `A`, the chain seed `M` and the base-station
/// key. The chain is kept expanded for speed but is derivable from `M`, so
/// it is accounted as one key.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThirdParty {
    pub id: NodeId,
    masters: Option<Masters>,
    chain_seed: Option<Key128>,
    chain: Option<HashChain>,
    bs_key: Key128,
    mode: TpMode,
    wipe_deadline: u64,
    derived: BTreeMap<NodeId, NodeKeys>,
    dropped_requests: u64,
    pub ops: OpCounters,
}

impl ThirdParty {
    pub fn new(
        id: NodeId,
        master_s: Key128,
        master_a: Key128,
        chain_seed: Key128,
        chain: HashChain,
        bs_key: Key128,
        wipe_deadline: u64,
    ) -> Self {
        ThirdParty {
            id,
            masters: Some(Masters { s: master_s, a: master_a }),
            chain_seed: Some(chain_seed),
            chain: Some(chain),
            bs_key,
            mode: TpMode::Active,
            wipe_deadline,
            derived: BTreeMap::new(),
            dropped_requests: 0,
            ops: OpCounters::default(),
        }
    }

    pub fn mode(&self) -> TpMode {
        self.mode
    }

    pub fn wipe_deadline(&self) -> u64 {
        self.wipe_deadline
    }

    pub fn set_wipe_deadline(&mut self, round: u64) {
        self.wipe_deadline = round;
    }

    pub fn chain(&self) -> Option<&HashChain> {
        self.chain.as_ref()
    }

    pub fn dropped_requests(&self) -> u64 {
        self.dropped_requests
    }

    /// `(S, A)` while resident.
    pub fn masters(&self) -> Option<(Key128, Key128)> {
        self.masters.as_ref().map(|m| (m.s, m.a))
    }

    pub fn bs_key(&self) -> Key128 {
        self.bs_key
    }

    /// `S_i`, `A_i` derived for requesters since the last wipe.
    pub fn cached_node_keys(&self) -> &BTreeMap<NodeId, NodeKeys> {
        &self.derived
    }

    /// Every secret currently held, persistent and cached, for capture.
    pub fn resident_secrets(&self) -> Vec<Key128> {
        let mut out = Vec::new();
        if let Some(m) = &self.masters {
            out.extend([m.s, m.a]);
        }
        out.extend(self.chain_seed);
        out.push(self.bs_key);
        for keys in self.derived.values() {
            out.extend([keys.encryption, keys.authentication]);
        }
        out
    }

    pub fn persistent_key_bits(&self) -> u32 {
        let masters = if self.masters.is_some() { 2 } else { 0 };
        let chain = u32::from(self.chain_seed.is_some());
        (masters + chain + 1) * 128
    }

    /// Discloses the link for `epoch` (`L_{a-1-epoch}`). Inactive third
    /// parties stay silent.
    pub fn advertise(&mut self, epoch: u64) -> Result<Option<TpAdvert>, ProtocolError> {
        if self.mode != TpMode::Active {
            return Ok(None);
        }
        let chain = self.chain.as_mut().ok_or(ProtocolError::Refused(self.id))?;
        let index = (chain.length() as u64).saturating_sub(epoch + 1) as usize;
        chain.seek(index);
        self.advertise_next()
    }

    /// Discloses the link at the chain cursor and moves the cursor down.
    pub fn advertise_next(&mut self) -> Result<Option<TpAdvert>, ProtocolError> {
        if self.mode != TpMode::Active {
            return Ok(None);
        }
        let chain = self.chain.as_mut().ok_or(ProtocolError::Refused(self.id))?;
        let (_, link) = chain.disclose()?;
        self.ops.record(Op::Transmit, Item::TpAdvert, 1);
        Ok(Some(TpAdvert { tp_id: self.id, disclosed_link: link }))
    }

    fn node_keys(&mut self, id: NodeId) -> Result<NodeKeys, ProtocolError> {
        if let Some(k) = self.derived.get(&id) {
            return Ok(*k);
        }
        let m = self.masters.as_ref().ok_or(ProtocolError::Refused(self.id))?;
        let keys = derive_node_keys(&m.s, &m.a, id);
        self.ops.record(Op::Hash, Item::KeyedHash, 2);
        self.derived.insert(id, keys);
        Ok(keys)
    }

    /// Authenticates a request under the requester's `A_i` and returns one
    /// sealed share per listed neighbour.
    pub fn serve_request(&mut self, msg: &Message) -> Result<Vec<Message>, ProtocolError> {
        let Message::KeyRequest { sender, sealed } = msg else {
            return Err(ProtocolError::UnexpectedMessage(msg.tag()));
        };
        self.ops.record(Op::Receive, Item::KeyRequest, 1);
        if self.mode != TpMode::Active {
            return Err(ProtocolError::Refused(self.id));
        }
        let requester = *sender;
        let keys = self.node_keys(requester)?;
        self.ops.record(Op::Decrypt, Item::KeyRequest, 1);
        let plain = match open(&keys.authentication, sealed) {
            Ok(p) => p,
            Err(_) => {
                self.dropped_requests += 1;
                debug!("tp {}: dropped unauthenticated request claiming {}", self.id, requester);
                return Err(ProtocolError::AuthenticationFailed { from: requester });
            }
        };
        let req = RequestPayload::decode(&plain)?;
        let entries = req.peers.len() as u64;
        self.ops.record(Op::Receive, Item::RequestEntry, entries);
        self.ops.record(Op::Decrypt, Item::RequestEntry, entries);
        if req.requester != requester {
            self.dropped_requests += 1;
            return Err(ProtocolError::AuthenticationFailed { from: requester });
        }
        let s = self.masters.as_ref().ok_or(ProtocolError::Refused(self.id))?.s;
        let mut out = Vec::with_capacity(req.peers.len());
        for peer in req.peers {
            if peer == requester {
                continue;
            }
            let s_peer = keyed_hash(&s, peer);
            let share = make_secret_share(&keys.encryption, &s_peer, requester, peer)?;
            self.ops.record(Op::Hash, Item::KeyedHash, 3);
            let body = PairPayload { first: requester, second: peer, key: share.share }.encode();
            self.ops.record(Op::Encrypt, Item::KeyResponse, 1);
            self.ops.record(Op::Transmit, Item::KeyResponse, 1);
            out.push(Message::KeyResponse { tp_id: self.id, sealed: seal(&keys.authentication, requester, &body) });
        }
        Ok(out)
    }

    /// Applies the deletion deadline. Returns true if this call wiped.
    pub fn tick(&mut self, now: u64) -> bool {
        if self.mode == TpMode::Wiped || now < self.wipe_deadline {
            return false;
        }
        self.wipe();
        true
    }

    /// Destroys `S`, `A`, the chain and all derived keys. The base-station
    /// key survives so a later provisioning packet can be authenticated.
    pub fn wipe(&mut self) {
        if let Some(m) = self.masters.as_mut() {
            m.s.wipe();
            m.a.wipe();
        }
        self.masters = None;
        if let Some(seed) = self.chain_seed.as_mut() {
            seed.wipe();
        }
        self.chain_seed = None;
        self.chain = None;
        for keys in self.derived.values_mut() {
            keys.encryption.wipe();
            keys.authentication.wipe();
        }
        self.derived.clear();
        self.mode = TpMode::Wiped;
    }

    pub fn sleep(&mut self) {
        if self.mode == TpMode::Active {
            self.mode = TpMode::Sleeping;
        }
    }

    pub fn wake(&mut self) {
        if self.mode == TpMode::Sleeping {
            self.mode = TpMode::Active;
        }
    }

    /// Restores secrets from a base-station packet sealed under the
    /// third party's exclusive key.
    pub fn on_provision(&mut self, msg: &Message) -> Result<(), ProtocolError> {
        let Message::Provision { sealed } = msg else {
            return Err(ProtocolError::UnexpectedMessage(msg.tag()));
        };
        self.ops.record(Op::Receive, Item::Provision, 1);
        self.ops.record(Op::Decrypt, Item::Provision, 1);
        let plain = open(&self.bs_key, sealed).map_err(|_| ProtocolError::AuthenticationFailed { from: NodeId(0) })?;
        let p = ProvisionPayload::decode(&plain)?;
        if p.tp_id != self.id {
            return Err(ProtocolError::Unsolicited { from: p.tp_id });
        }
        let mut chain = chain_generate(&p.chain_seed, p.chain_length as usize)?;
        self.ops.record(Op::Hash, Item::ChainHash, p.chain_length as u64 + 1);
        chain.seek(p.cursor as usize);
        self.masters = Some(Masters { s: p.master_s, a: p.master_a });
        self.chain_seed = Some(p.chain_seed);
        self.chain = Some(chain);
        self.wipe_deadline = p.wipe_deadline;
        self.mode = TpMode::Active;
        Ok(())
    }
}
