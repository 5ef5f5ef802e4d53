//! Round-based simulation of deployment, discovery and key establishment.
//!
//! Messages sent in round `r` are delivered in round `r + 1`. Sensors have
//! ids `0..n` and third parties `n..n+t`. With default settings:
//!
//! | round | activity |
//! |-------|----------|
//! | 0 | HELLO broadcasts, third-party adverts |
//! | 1 | adverts verified, HELLOs acknowledged |
//! | 2 | neighbours confirmed, one key request per initiated link |
//! | 3 | third parties answer |
//! | 4 | initiators send KeyConfirm |
//! | 5 | responders store the link key |
//! | 7 | third parties wipe |

mod adversary;
mod attack;
mod energy;
mod engine;
mod report;
mod resilience;
mod topology;
mod trials;

pub use adversary::{Adversary, Capture, Transcript};
pub use attack::{AttackAction, AttackEvent, AttackScript, ATTACK_SCHEMA};
pub use energy::{
    energy_uj, expected_energy_uj, expected_sensor_counts, expected_tp_counts, radio_energy_uj, EnergyModel, OpCounts,
    SizeTable,
};
pub use engine::{run_key_establishment, AdvertPolicy, Eavesdrop, SimConfig, SimRun};
pub use report::{Conservation, EnergyReport, MemoryReport, RoleStats, SimReport, TimelinePoint, REPORT_SCHEMA};
pub use resilience::{memory_accounting, resilience_experiment, MemoryAccount, ResiliencePoint};
pub use topology::{deploy, EdgeMode, NodeRole, Topology};
pub use trials::{aggregate, run_trials, Aggregate, Stat, TrialOutcome, AGGREGATE_SCHEMA};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
