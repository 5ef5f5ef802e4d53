use serde::{Deserialize, Serialize};

use super::{hash128, CryptoError, Key128};

/// One-way chain `L_0..L_a` with `L_0 = H(M)` and `L_k = H(L_{k-1})`.
///
/// Links are disclosed from the top down: `L_{a-1}` first, then `L_{a-2}`,
/// and so on. `L_a` is the public anchor preloaded into sensors. `L_0` is
/// never disclosed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashChain {
    links: Vec<Key128>,
    cursor: usize,
}

pub fn chain_generate(seed: &Key128, length: usize) -> Result<HashChain, CryptoError> {
    if length == 0 {
        return Err(CryptoError::InvalidChainLength);
    }
    let mut links = Vec::with_capacity(length + 1);
    let mut cur = hash128(seed.as_bytes());
    links.push(cur);
    for _ in 0..length {
        cur = hash128(cur.as_bytes());
        links.push(cur);
    }
    Ok(HashChain { links, cursor: length - 1 })
}

impl HashChain {
    /// The chain parameter `a`.
    pub fn length(&self) -> usize {
        self.links.len() - 1
    }

    pub fn anchor(&self) -> Key128 {
        self.links[self.length()]
    }

    pub fn link(&self, index: usize) -> Option<Key128> {
        self.links.get(index).copied()
    }

    pub fn links(&self) -> &[Key128] {
        &self.links
    }

    /// Index of the next link to disclose.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor == 0
    }

    /// Returns the link at the cursor and moves the cursor down by one.
    pub fn disclose(&mut self) -> Result<(usize, Key128), CryptoError> {
        if self.cursor == 0 {
            return Err(CryptoError::ChainExhausted);
        }
        let index = self.cursor;
        self.cursor -= 1;
        Ok((index, self.links[index]))
    }

    /// Moves the cursor down to `index` (never up) so the next disclosure is
    /// `L_index`.
    pub fn seek(&mut self, index: usize) {
        self.cursor = self.cursor.min(index);
    }
}

/// Outcome of checking a disclosed link against a stored anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainCheck {
    pub accepted: bool,
    pub new_stored: Key128,
}

/// Single-step check: accepts iff `H(disclosed) == stored`, and then the
/// disclosed link becomes the new anchor.
pub fn chain_verify_and_advance(stored: &Key128, disclosed: &Key128) -> ChainCheck {
    if hash128(disclosed.as_bytes()) == *stored {
        ChainCheck { accepted: true, new_stored: *disclosed }
    } else {
        ChainCheck { accepted: false, new_stored: *stored }
    }
}

/// Multi-step check for verifiers that missed advertisements: returns the
/// smallest `k` in `1..=max_steps` with `H^k(disclosed) == stored`.
pub fn verify_with_lookahead(stored: &Key128, disclosed: &Key128, max_steps: u32) -> Option<u32> {
    let mut cur = *disclosed;
    for k in 1..=max_steps {
        cur = hash128(cur.as_bytes());
        if cur == *stored {
            return Some(k);
        }
    }
    None
}
