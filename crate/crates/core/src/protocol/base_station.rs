use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::crypto::{chain_generate, derive_node_keys, keyed_hash, random_key, seal, HashChain, Key128, NodeId};

use super::third_party::ProvisionPayload;
use super::{Message, ProtocolError, ProtocolParams, SensorNode, ThirdParty};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Sensor,
    ThirdParty,
    BaseStation,
}

/// Trusted dealer: owns the masters `S`, `A`, the chain seed `M`, and a
/// master from which each third party's exclusive key is derived.
#[derive(Clone, Debug)]
pub struct BaseStation {
    pub id: NodeId,
    master_s: Key128,
    master_a: Key128,
    chain_seed: Key128,
    pairwise_master: Key128,
    chain: HashChain,
    params: ProtocolParams,
    registry: BTreeMap<NodeId, Role>,
    epoch: u64,
}

impl BaseStation {
    pub fn new<R: RngCore + ?Sized>(id: NodeId, params: ProtocolParams, rng: &mut R) -> Result<Self, ProtocolError> {
        let master_s = random_key(rng);
        let master_a = random_key(rng);
        let chain_seed = random_key(rng);
        let pairwise_master = random_key(rng);
        let chain = chain_generate(&chain_seed, params.chain_length)?;
        let mut registry = BTreeMap::new();
        registry.insert(id, Role::BaseStation);
        Ok(BaseStation { id, master_s, master_a, chain_seed, pairwise_master, chain, params, registry, epoch: 0 })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn chain(&self) -> &HashChain {
        &self.chain
    }

    pub fn masters(&self) -> (Key128, Key128) {
        (self.master_s, self.master_a)
    }

    pub fn role_of(&self, id: NodeId) -> Option<Role> {
        self.registry.get(&id).copied()
    }

    /// Advertisement epoch that newly provisioned nodes should expect next.
    pub fn set_epoch(&mut self, epoch: u64) {
        self.epoch = epoch;
    }

    fn register(&mut self, id: NodeId, role: Role) -> Result<(), ProtocolError> {
        match self.registry.get(&id) {
            Some(&r) if r != role => Err(ProtocolError::Provisioning { id, existing: r }),
            _ => {
                self.registry.insert(id, role);
                Ok(())
            }
        }
    }

    /// Preloads `S_i`, `A_i` and the chain anchor for the current epoch.
    pub fn provision_sensor(&mut self, id: NodeId) -> Result<SensorNode, ProtocolError> {
        self.register(id, Role::Sensor)?;
        let keys = derive_node_keys(&self.master_s, &self.master_a, id);
        let a = self.chain.length();
        let index = a.saturating_sub(self.epoch as usize);
        let anchor = self.chain.link(index).expect("index within chain");
        Ok(SensorNode::new(id, keys, anchor, index, a, self.params.lookahead))
    }

    pub fn bs_key_for(&self, tp: NodeId) -> Key128 {
        keyed_hash(&self.pairwise_master, tp)
    }

    pub fn provision_third_party(&mut self, id: NodeId, wipe_deadline: u64) -> Result<ThirdParty, ProtocolError> {
        self.register(id, Role::ThirdParty)?;
        let mut chain = self.chain.clone();
        chain.seek(self.current_cursor());
        Ok(ThirdParty::new(id, self.master_s, self.master_a, self.chain_seed, chain, self.bs_key_for(id), wipe_deadline))
    }

    fn current_cursor(&self) -> usize {
        (self.chain.length() as u64).saturating_sub(self.epoch + 1) as usize
    }

    /// Packet that revives a wiped third party, sealed under its exclusive key.
    pub fn provision_packet(&self, tp: NodeId, wipe_deadline: u64) -> Result<Message, ProtocolError> {
        if self.role_of(tp) != Some(Role::ThirdParty) {
            return Err(ProtocolError::UnknownNode(tp));
        }
        let payload = ProvisionPayload {
            tp_id: tp,
            master_s: self.master_s,
            master_a: self.master_a,
            chain_seed: self.chain_seed,
            chain_length: self.chain.length() as u32,
            cursor: self.current_cursor() as u32,
            wipe_deadline,
        };
        Ok(Message::Provision { sealed: seal(&self.bs_key_for(tp), tp, &payload.encode()) })
    }
}
