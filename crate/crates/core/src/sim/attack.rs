use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::Key128;

use super::topology::{NodeRole, Topology};
use super::SimError;

pub const ATTACK_SCHEMA: &str = "tpka.attack/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "params", rename_all = "snake_case")]
pub enum AttackAction {
    CaptureSensor { id: u64 },
    CaptureTp { id: u64 },
    /// Broadcasts an advert with a random link from `near`.
    InjectForgedAdvert { near: (f64, f64) },
    /// Rebroadcasts a chain link from `near`. Without an explicit link the
    /// adversary uses the latest one it overheard before this round.
    ReplayAdvert {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<String>,
        near: (f64, f64),
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub round: u64,
    #[serde(flatten)]
    pub action: AttackAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackScript {
    pub schema: String,
    pub events: Vec<AttackEvent>,
}

impl Default for AttackScript {
    fn default() -> Self {
        AttackScript { schema: ATTACK_SCHEMA.to_string(), events: Vec::new() }
    }
}

impl AttackScript {
    pub fn new(events: Vec<AttackEvent>) -> Self {
        AttackScript { schema: ATTACK_SCHEMA.to_string(), events }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let script: AttackScript = serde_json::from_str(text).map_err(|e| SimError::Invalid(format!("attack script: {e}")))?;
        if script.schema != ATTACK_SCHEMA {
            return Err(SimError::Invalid(format!("attack script schema '{}', expected '{ATTACK_SCHEMA}'", script.schema)));
        }
        Ok(script)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("attack script serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn has_captures(&self) -> bool {
        self.events.iter().any(|e| matches!(e.action, AttackAction::CaptureSensor { .. } | AttackAction::CaptureTp { .. }))
    }

    pub fn last_round(&self) -> u64 {
        self.events.iter().map(|e| e.round).max().unwrap_or(0)
    }

    /// Checks ordering, node ids and positions against a deployment.
    pub fn validate(&self, topo: &Topology) -> Result<(), SimError> {
        if self.events.windows(2).any(|w| w[0].round > w[1].round) {
            return Err(SimError::Invalid("attack rounds must be non-decreasing".into()));
        }
        let mut captured = std::collections::BTreeSet::new();
        for (k, ev) in self.events.iter().enumerate() {
            let want = match &ev.action {
                AttackAction::CaptureSensor { id } => Some((*id, NodeRole::Sensor)),
                AttackAction::CaptureTp { id } => Some((*id, NodeRole::ThirdParty)),
                AttackAction::InjectForgedAdvert { near } | AttackAction::ReplayAdvert { near, .. } => {
                    let inside = |v: f64| (0.0..topo.side).contains(&v);
                    if !inside(near.0) || !inside(near.1) {
                        return Err(SimError::Invalid(format!("event {k}: position {near:?} outside the field")));
                    }
                    None
                }
            };
            if let AttackAction::ReplayAdvert { link: Some(hex), .. } = &ev.action {
                if Key128::from_hex(hex).is_none() {
                    return Err(SimError::Invalid(format!("event {k}: link '{hex}' is not 32 hex digits")));
                }
            }
            if let Some((id, role)) = want {
                match topo.role_of(id) {
                    Some(r) if r == role => {}
                    Some(r) => return Err(SimError::Invalid(format!("event {k}: node {id} is a {r:?}, not a {role:?}"))),
                    None => return Err(SimError::Invalid(format!("event {k}: unknown node id {id}"))),
                }
                if !captured.insert(id) {
                    return Err(SimError::Invalid(format!("event {k}: node {id} captured twice")));
                }
            }
        }
        Ok(())
    }

    /// `count` distinct random sensors, all captured at `round`.
    pub fn random_sensor_captures(topo: &Topology, count: usize, round: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids: Vec<u64> = sample(&mut rng, topo.sensor_count(), count.min(topo.sensor_count()))
            .into_iter()
            .map(|i| i as u64)
            .collect();
        ids.sort_unstable();
        AttackScript::new(
            ids.into_iter().map(|id| AttackEvent { round, action: AttackAction::CaptureSensor { id } }).collect(),
        )
    }
}
