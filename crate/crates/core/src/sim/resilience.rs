use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::protocol::{SensorNode, ThirdParty};

use super::attack::AttackScript;
use super::engine::{run_key_establishment, SimConfig};
use super::topology::deploy;
use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResiliencePoint {
    pub captured: u64,
    /// Captured nodes over all deployed nodes.
    pub captured_fraction: f64,
    /// Readable links among those with no captured endpoint.
    pub compromised_fraction: f64,
}

/// Deploys per `cfg`, runs `schedule` and reports the compromise of links
/// between uncaptured nodes after each capture.
pub fn resilience_experiment(cfg: &SimConfig, schedule: &AttackScript) -> Result<Vec<ResiliencePoint>, SimError> {
    let topo = deploy(&cfg.deployment, cfg.edge_mode)?;
    let run = run_key_establishment(&topo, cfg, schedule)?;
    let population = (topo.sensor_count() + topo.tp_count()) as f64;
    Ok(run
        .report
        .compromise
        .iter()
        .map(|p| ResiliencePoint {
            captured: p.captured,
            captured_fraction: p.captured as f64 / population,
            compromised_fraction: p.noncaptured_fraction,
        })
        .collect())
}

/// Distinct persistent-key footprints per role.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryAccount {
    pub sensor_bits: BTreeSet<u32>,
    pub third_party_bits: BTreeSet<u32>,
    /// Link keys held, summed over sensors.
    pub link_state_bits: u64,
}

pub fn memory_accounting(sensors: &[SensorNode], third_parties: &[ThirdParty]) -> MemoryAccount {
    MemoryAccount {
        sensor_bits: sensors.iter().map(SensorNode::persistent_key_bits).collect(),
        third_party_bits: third_parties.iter().map(ThirdParty::persistent_key_bits).collect(),
        link_state_bits: sensors.iter().map(|s| s.established().len() as u64 * 128).sum(),
    }
}
