use serde::{Deserialize, Serialize};

/// What happened at a simulation round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Delivery,
    AdvertTimer,
    WipeTimer,
    Capture,
    Redeploy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProtocolEvent {
    pub round: u64,
    pub kind: EventKind,
}

/// Asserts the non-decreasing timestamp invariant over an event log.
pub fn is_monotone(events: &[ProtocolEvent]) -> bool {
    events.windows(2).all(|w| w[0].round <= w[1].round)
}
