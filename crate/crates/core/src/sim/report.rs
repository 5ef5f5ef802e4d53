use serde::{Deserialize, Serialize};

use crate::geometry::Scenario;

use super::energy::{EnergyModel, OpCounts, SizeTable};
use super::topology::EdgeMode;

pub const REPORT_SCHEMA: &str = "tpka.sim_report/1";

/// Traffic and work of one role, averaged per node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleStats {
    pub nodes: u64,
    /// Key-agreement messages, per node.
    pub sent: f64,
    pub received: f64,
    /// Hello, HelloAck and advert traffic, per node.
    pub discovery_sent: f64,
    pub discovery_received: f64,
    pub ops: OpCounts,
    pub energy_uj_mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    /// Persistent key material right after provisioning.
    pub sensor_bits: u32,
    pub third_party_bits: u32,
    /// Largest third-party footprint when the run ends.
    pub third_party_bits_final: u32,
    /// Pair-wise link keys held per sensor at the end, on average.
    pub link_state_bits_mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    pub addressed: u64,
    pub delivered: u64,
    pub dropped: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.addressed == self.delivered + self.dropped
    }
}

/// State of the adversary after its first `captured` captures.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub captured: u64,
    pub round: u64,
    pub compromised_links: u64,
    /// Over all established links.
    pub compromised_fraction: f64,
    /// Established links with neither endpoint captured.
    pub noncaptured_links: u64,
    pub compromised_noncaptured: u64,
    pub noncaptured_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub model: EnergyModel,
    pub sizes: SizeTable,
    pub sensor_uj: Vec<f64>,
    pub third_party_uj: Vec<f64>,
    pub expected_sensor_uj: f64,
    pub expected_third_party_uj: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub edge_mode: EdgeMode,
    pub sensors: u64,
    pub third_parties: u64,
    pub expected_degree: f64,
    pub radius: f64,
    pub wipe_round: u64,
    pub rounds: u64,
    pub mean_degree: f64,
    pub neighbor_pairs: u64,
    pub established_links: u64,
    pub empirical_local_connectivity: f64,
    pub sensor: RoleStats,
    pub third_party: RoleStats,
    /// Third-party work divided by distinct requesters served.
    pub third_party_per_requester: OpCounts,
    pub requesters_served: u64,
    pub expected_sensor_ops: OpCounts,
    pub expected_third_party_ops: OpCounts,
    pub energy: EnergyReport,
    pub memory: MemoryReport,
    pub compromise: Vec<TimelinePoint>,
    pub impersonation_attempts: u64,
    pub impersonation_acceptances: u64,
    pub messages: Conservation,
    pub dropped_requests: u64,
    pub failed_confirms: u64,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Compromised fraction after all captures (0 without captures).
    pub fn final_compromised_fraction(&self) -> f64 {
        self.compromise.last().map_or(0.0, |p| p.compromised_fraction)
    }
}
