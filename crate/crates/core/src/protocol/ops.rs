use serde::{Deserialize, Serialize};

/// Energy-relevant operation classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Encrypt,
    Decrypt,
    Hash,
    Keygen,
    Transmit,
    Receive,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Encrypt, Op::Decrypt, Op::Hash, Op::Keygen, Op::Transmit, Op::Receive];

    pub fn name(self) -> &'static str {
        match self {
            Op::Encrypt => "encrypt",
            Op::Decrypt => "decrypt",
            Op::Hash => "hash",
            Op::Keygen => "keygen",
            Op::Transmit => "transmit",
            Op::Receive => "receive",
        }
    }
}

/// What an operation was applied to. Each item has a fixed byte size in the
/// energy model's size table, so energy is an exact linear combination of
/// these counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Item {
    Hello,
    HelloAck,
    TpAdvert,
    /// A key request without its peer list.
    KeyRequest,
    /// One peer id listed in a key request.
    RequestEntry,
    KeyResponse,
    KeyConfirm,
    Provision,
    /// `Hash(key, id)` input.
    KeyedHash,
    /// One hash-chain step.
    ChainHash,
    LinkKey,
}

impl Item {
    pub const ALL: [Item; 11] = [
        Item::Hello,
        Item::HelloAck,
        Item::TpAdvert,
        Item::KeyRequest,
        Item::RequestEntry,
        Item::KeyResponse,
        Item::KeyConfirm,
        Item::Provision,
        Item::KeyedHash,
        Item::ChainHash,
        Item::LinkKey,
    ];

    /// Neighbour and third-party discovery traffic. Excluded from the
    /// key-agreement message counts.
    pub fn is_discovery(self) -> bool {
        matches!(self, Item::Hello | Item::HelloAck | Item::TpAdvert)
    }

    /// Extra bytes carried by another item rather than an operation of its own.
    pub fn is_component(self) -> bool {
        matches!(self, Item::RequestEntry)
    }
}

const OPS: usize = Op::ALL.len();
const ITEMS: usize = Item::ALL.len();

/// Per-node operation tallies.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    counts: [[u64; ITEMS]; OPS],
}

impl OpCounters {
    pub fn record(&mut self, op: Op, item: Item, n: u64) {
        self.counts[op as usize][item as usize] += n;
    }

    pub fn get(&self, op: Op, item: Item) -> u64 {
        self.counts[op as usize][item as usize]
    }

    pub fn total(&self, op: Op) -> u64 {
        self.counts[op as usize].iter().sum()
    }

    /// Operation count excluding discovery traffic and size components.
    pub fn agreement_total(&self, op: Op) -> u64 {
        Item::ALL
            .iter()
            .filter(|i| !i.is_discovery() && !i.is_component())
            .map(|&i| self.get(op, i))
            .sum()
    }

    pub fn merge(&mut self, other: &OpCounters) {
        for (row, orow) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (c, o) in row.iter_mut().zip(orow.iter()) {
                *c += o;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Op, Item, u64)> + '_ {
        Op::ALL
            .iter()
            .flat_map(move |&op| Item::ALL.iter().map(move |&it| (op, it, self.get(op, it))))
    }
}
