//! Per-byte energy model and the byte size of every counted item.

use serde::{Deserialize, Serialize};

use crate::protocol::{Item, Op, OpCounters};

use super::SimError;

/// Energy per byte in μJ for each operation class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModel {
    pub encrypt: f64,
    pub decrypt: f64,
    pub hash: f64,
    pub keygen: f64,
    pub receive: f64,
    pub transmit: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel { encrypt: 1.62, decrypt: 2.49, hash: 5.90, keygen: 11.4, receive: 28.6, transmit: 59.2 }
    }
}

impl EnergyModel {
    pub fn cost(&self, op: Op) -> f64 {
        match op {
            Op::Encrypt => self.encrypt,
            Op::Decrypt => self.decrypt,
            Op::Hash => self.hash,
            Op::Keygen => self.keygen,
            Op::Receive => self.receive,
            Op::Transmit => self.transmit,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for op in Op::ALL {
            let c = self.cost(op);
            if !(c.is_finite() && c > 0.0) {
                return Err(SimError::Invalid(format!("energy cost for {} must be positive, got {c}", op.name())));
            }
        }
        Ok(())
    }
}

/// Field widths in bytes. Every item size is a sum of these, so scaling
/// all fields scales all sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeTable {
    pub header: u32,
    pub id: u32,
    pub key: u32,
    pub tag: u32,
    pub nonce: u32,
    pub length_prefix: u32,
    pub flag: u32,
}

impl Default for SizeTable {
    fn default() -> Self {
        SizeTable { header: 4, id: 8, key: 16, tag: 16, nonce: 8, length_prefix: 2, flag: 1 }
    }
}

impl SizeTable {
    pub fn scaled(&self, factor: u32) -> Self {
        SizeTable {
            header: self.header * factor,
            id: self.id * factor,
            key: self.key * factor,
            tag: self.tag * factor,
            nonce: self.nonce * factor,
            length_prefix: self.length_prefix * factor,
            flag: self.flag * factor,
        }
    }

    /// Plaintext of a pair payload: two ids and a key.
    fn pair(&self) -> u32 {
        2 * self.id + self.key
    }

    /// Sealed packet overhead around a plaintext.
    fn sealed(&self, plain: u32) -> u32 {
        self.id + self.length_prefix + plain + self.tag
    }

    /// Bytes an operation of class `op` touches for `item`.
    pub fn size(&self, op: Op, item: Item) -> u32 {
        let radio = matches!(op, Op::Transmit | Op::Receive);
        match item {
            Item::Hello => self.header + self.id + self.nonce,
            Item::HelloAck => self.header + self.id + self.nonce + self.flag,
            Item::TpAdvert => self.header + self.id + self.key,
            // Without its peer list; each listed id is a RequestEntry.
            Item::KeyRequest => {
                let plain = self.id + self.length_prefix;
                if radio {
                    self.header + self.id + self.sealed(plain)
                } else {
                    plain
                }
            }
            Item::RequestEntry => self.id,
            Item::KeyResponse | Item::KeyConfirm => {
                if radio {
                    self.header + self.id + self.sealed(self.pair())
                } else {
                    self.pair()
                }
            }
            Item::Provision => {
                // id, three keys, two u32 fields, u64 deadline
                let plain = self.id + 3 * self.key + 4 * self.length_prefix + self.nonce;
                if radio {
                    self.header + self.sealed(plain)
                } else {
                    plain
                }
            }
            Item::KeyedHash => self.key + self.id,
            Item::ChainHash => self.key,
            Item::LinkKey => self.key,
        }
    }
}

/// Σ count × bytes × cost over every recorded (op, item).
pub fn energy_uj(ops: &OpCounters, sizes: &SizeTable, model: &EnergyModel) -> f64 {
    ops.iter().map(|(op, item, n)| n as f64 * sizes.size(op, item) as f64 * model.cost(op)).sum()
}

/// Communication part only.
pub fn radio_energy_uj(ops: &OpCounters, sizes: &SizeTable, model: &EnergyModel) -> f64 {
    ops.iter()
        .filter(|(op, _, _)| matches!(op, Op::Transmit | Op::Receive))
        .map(|(op, item, n)| n as f64 * sizes.size(op, item) as f64 * model.cost(op))
        .sum()
}

/// Operation counts per node for one round of key establishment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OpCounts {
    pub encrypt: f64,
    pub decrypt: f64,
    pub hash: f64,
    pub keygen: f64,
    pub transmit: f64,
    pub receive: f64,
}

impl OpCounts {
    /// Agreement-phase counts from counters, discovery traffic excluded.
    pub fn observed(ops: &OpCounters) -> Self {
        OpCounts {
            encrypt: ops.agreement_total(Op::Encrypt) as f64,
            decrypt: ops.agreement_total(Op::Decrypt) as f64,
            hash: ops.agreement_total(Op::Hash) as f64,
            keygen: ops.agreement_total(Op::Keygen) as f64,
            transmit: ops.agreement_total(Op::Transmit) as f64,
            receive: ops.agreement_total(Op::Receive) as f64,
        }
    }

    pub fn get(&self, op: Op) -> f64 {
        match op {
            Op::Encrypt => self.encrypt,
            Op::Decrypt => self.decrypt,
            Op::Hash => self.hash,
            Op::Keygen => self.keygen,
            Op::Transmit => self.transmit,
            Op::Receive => self.receive,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        OpCounts {
            encrypt: self.encrypt * k,
            decrypt: self.decrypt * k,
            hash: self.hash * k,
            keygen: self.keygen * k,
            transmit: self.transmit * k,
            receive: self.receive * k,
        }
    }

    /// Largest relative deviation from `expected` over ops whose expected
    /// count is nonzero.
    pub fn max_relative_gap(&self, expected: &OpCounts) -> f64 {
        Op::ALL
            .iter()
            .filter(|&&op| expected.get(op) > 0.0)
            .map(|&op| (self.get(op) - expected.get(op)).abs() / expected.get(op))
            .fold(0.0, f64::max)
    }
}

/// Sensor with `d` neighbours.
pub fn expected_sensor_counts(d: f64) -> OpCounts {
    OpCounts { encrypt: d, decrypt: d, hash: d + 1.0, keygen: d / 2.0, transmit: d, receive: d }
}

/// Third-party work for one requesting sensor with `d` neighbours.
pub fn expected_tp_counts(d: f64) -> OpCounts {
    OpCounts {
        encrypt: d / 2.0,
        decrypt: d / 2.0,
        hash: d + d / 2.0 + 3.0,
        keygen: 0.0,
        transmit: d / 2.0,
        receive: d / 2.0,
    }
}

/// Energy of a count vector, using the sizes of the agreement messages.
pub fn expected_energy_uj(role_sensor: bool, counts: &OpCounts, sizes: &SizeTable, model: &EnergyModel) -> f64 {
    let msg = |op: Op| -> f64 {
        if role_sensor {
            // Half the traffic is requests, half confirmations.
            match op {
                Op::Encrypt | Op::Transmit => {
                    0.5 * (sizes.size(op, Item::KeyRequest) + sizes.size(op, Item::RequestEntry)) as f64
                        + 0.5 * sizes.size(op, Item::KeyConfirm) as f64
                }
                _ => 0.5 * (sizes.size(op, Item::KeyResponse) + sizes.size(op, Item::KeyConfirm)) as f64,
            }
        } else {
            match op {
                Op::Decrypt | Op::Receive => (sizes.size(op, Item::KeyRequest) + sizes.size(op, Item::RequestEntry)) as f64,
                _ => sizes.size(op, Item::KeyResponse) as f64,
            }
        }
    };
    Op::ALL
        .iter()
        .map(|&op| {
            let n = counts.get(op);
            let bytes = match op {
                // A sensor's one chain step hashes a bare link.
                Op::Hash if role_sensor => {
                    let chain = n.min(1.0);
                    return ((n - chain) * sizes.size(op, Item::KeyedHash) as f64
                        + chain * sizes.size(op, Item::ChainHash) as f64)
                        * model.cost(op);
                }
                Op::Hash => sizes.size(op, Item::KeyedHash) as f64,
                Op::Keygen => sizes.size(op, Item::LinkKey) as f64,
                _ => msg(op),
            };
            n * bytes * model.cost(op)
        })
        .sum()
}
