//! Captured key material and transcript replay.

use std::collections::{BTreeMap, BTreeSet};

use crate::crypto::{keyed_hash, open, session_key_responder, Key128, NodeId};
use crate::protocol::{Message, PairPayload, SensorNode, ThirdParty};

use super::report::TimelinePoint;

/// A KeyConfirm as overheard on the air.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub delivered: u64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub msg: Message,
}

/// Everything extracted from one captured node.
#[derive(Clone, Debug, Default)]
pub struct Capture {
    pub index: usize,
    pub round: u64,
    pub node: NodeId,
    pub masters: Option<(Key128, Key128)>,
    /// `S_x` values by owner.
    pub node_secrets: BTreeMap<NodeId, Key128>,
    /// Link keys held by the node, by peer.
    pub link_keys: BTreeMap<NodeId, Key128>,
    pub sessions: Vec<Key128>,
}

impl Capture {
    pub fn empty(index: usize, round: u64, node: NodeId) -> Self {
        Capture { index, round, node, ..Default::default() }
    }

    pub fn of_sensor(index: usize, round: u64, s: &SensorNode) -> Self {
        Capture {
            index,
            round,
            node: s.id,
            masters: None,
            node_secrets: BTreeMap::from([(s.id, s.keys().encryption)]),
            link_keys: s.established().clone(),
            sessions: s.pending_sessions().values().copied().collect(),
        }
    }

    pub fn of_third_party(index: usize, round: u64, tp: &ThirdParty) -> Self {
        Capture {
            index,
            round,
            node: tp.id,
            masters: tp.masters(),
            node_secrets: tp.cached_node_keys().iter().map(|(id, k)| (*id, k.encryption)).collect(),
            link_keys: BTreeMap::new(),
            sessions: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Adversary {
    pub captures: Vec<Capture>,
    pub transcripts: Vec<Transcript>,
}

impl Adversary {
    /// Index of the first capture after which the adversary knows link
    /// `(i, j)` with key `k`, judged by opening overheard transcripts.
    fn first_compromise(&self, i: NodeId, j: NodeId, k: Key128, transcripts: &[&Transcript]) -> Option<usize> {
        let mut best = self
            .captures
            .iter()
            .filter(|c| (c.node == i && c.link_keys.get(&j) == Some(&k)) || (c.node == j && c.link_keys.get(&i) == Some(&k)))
            .map(|c| c.index)
            .min();
        for t in transcripts {
            let Message::KeyConfirm { sealed, .. } = &t.msg else { continue };
            let mut candidates: Vec<(usize, Key128)> = Vec::new();
            for c in &self.captures {
                if best.is_some_and(|b| c.index >= b) {
                    break;
                }
                if let Some((s, _)) = c.masters {
                    candidates.push((c.index, session_key_responder(&keyed_hash(&s, t.receiver), t.sender)));
                }
                if let Some(s_r) = c.node_secrets.get(&t.receiver) {
                    candidates.push((c.index, session_key_responder(s_r, t.sender)));
                }
                candidates.extend(c.sessions.iter().map(|s| (c.index, *s)));
            }
            for (index, key) in candidates {
                let Ok(plain) = open(&key, sealed) else { continue };
                let Ok(body) = PairPayload::decode(&plain) else { continue };
                if body.key == k && body.first == t.sender && body.second == t.receiver {
                    best = Some(best.map_or(index, |b| b.min(index)));
                    break;
                }
            }
        }
        best
    }

    /// For each link `(i, j, K)`, the first capture index after which it is
    /// readable, or `None`.
    pub fn first_indices(&self, links: &[(u32, u32, Key128)], eavesdrop_from: u64) -> Vec<Option<usize>> {
        if self.captures.is_empty() {
            return vec![None; links.len()];
        }
        let mut by_pair: BTreeMap<(u64, u64), Vec<&Transcript>> = BTreeMap::new();
        for t in self.transcripts.iter().filter(|t| t.delivered >= eavesdrop_from) {
            let key = (t.sender.0.min(t.receiver.0), t.sender.0.max(t.receiver.0));
            by_pair.entry(key).or_default().push(t);
        }
        links
            .iter()
            .map(|&(i, j, k)| {
                let ts = by_pair.get(&(i as u64, j as u64)).map(Vec::as_slice).unwrap_or(&[]);
                self.first_compromise(NodeId(i as u64), NodeId(j as u64), k, ts)
            })
            .collect()
    }

    /// Compromise after each prefix of the capture sequence, starting with
    /// no captures.
    pub fn timeline(&self, links: &[(u32, u32, Key128)], first: &[Option<usize>]) -> Vec<TimelinePoint> {
        let total = links.len() as u64;
        let frac = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let mut captured: BTreeSet<u64> = BTreeSet::new();
        let mut out = Vec::with_capacity(self.captures.len() + 1);
        for k in 0..=self.captures.len() {
            if k > 0 {
                captured.insert(self.captures[k - 1].node.0);
            }
            let mut compromised = 0;
            let mut clean = 0;
            let mut clean_compromised = 0;
            for (link, f) in links.iter().zip(first) {
                let hit = f.is_some_and(|f| f < k);
                compromised += u64::from(hit);
                if !captured.contains(&(link.0 as u64)) && !captured.contains(&(link.1 as u64)) {
                    clean += 1;
                    clean_compromised += u64::from(hit);
                }
            }
            out.push(TimelinePoint {
                captured: k as u64,
                round: if k == 0 { 0 } else { self.captures[k - 1].round },
                compromised_links: compromised,
                compromised_fraction: frac(compromised, total),
                noncaptured_links: clean,
                compromised_noncaptured: clean_compromised,
                noncaptured_fraction: frac(clean_compromised, clean),
            });
        }
        out
    }
}
