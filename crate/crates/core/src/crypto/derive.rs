use serde::{Deserialize, Serialize};

use super::{keyed_hash, CryptoError, Key128, NodeId};

/// The per-node encryption secret `S_i` and authentication secret `A_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeKeys {
    pub encryption: Key128,
    pub authentication: Key128,
}

/// `S_i = Hash(S, ID_i)`, `A_i = Hash(A, ID_i)`.
pub fn derive_node_keys(master_s: &Key128, master_a: &Key128, id: NodeId) -> NodeKeys {
    NodeKeys {
        encryption: keyed_hash(master_s, id),
        authentication: keyed_hash(master_a, id),
    }
}

/// Temporary share handed by a third party to the initiator of a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretShare {
    pub initiator: NodeId,
    pub peer: NodeId,
    pub share: Key128,
}

/// `Hash(S_i, ID_j) XOR Hash(S_j, ID_i)`.
pub fn make_secret_share(
    s_i: &Key128,
    s_j: &Key128,
    id_i: NodeId,
    id_j: NodeId,
) -> Result<SecretShare, CryptoError> {
    if id_i == id_j {
        return Err(CryptoError::InvalidPeer(id_i));
    }
    Ok(SecretShare {
        initiator: id_i,
        peer: id_j,
        share: keyed_hash(s_i, id_j) ^ keyed_hash(s_j, id_i),
    })
}

/// Initiator side: strips its own half off the share.
pub fn session_key_initiator(share: &SecretShare, s_i: &Key128, id_j: NodeId) -> Key128 {
    share.share ^ keyed_hash(s_i, id_j)
}

/// Responder side: computed locally, no third party involved.
pub fn session_key_responder(s_j: &Key128, id_i: NodeId) -> Key128 {
    keyed_hash(s_j, id_i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{hash128, random_key};
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn key(bytes: [u8; 16]) -> Key128 {
        Key128::from_bytes(bytes)
    }

    #[test]
    fn node_keys_match_definition() {
        let s = key([1; 16]);
        let a = key([2; 16]);
        let id = NodeId(42);
        let keys = derive_node_keys(&s, &a, id);
        assert_eq!(keys, derive_node_keys(&s, &a, id));
        let mut buf = s.as_bytes().to_vec();
        buf.extend_from_slice(&42u64.to_be_bytes());
        assert_eq!(keys.encryption, hash128(&buf));
    }

    #[test]
    fn thousand_ids_give_distinct_keys() {
        let s = key([9; 16]);
        let a = key([8; 16]);
        let set: HashSet<_> = (1..=1000)
            .map(|i| derive_node_keys(&s, &a, NodeId(i)).encryption)
            .collect();
        assert_eq!(set.len(), 1000);
    }

    #[test]
    fn share_rejects_self_pair() {
        let s = key([3; 16]);
        assert_eq!(
            make_secret_share(&s, &s, NodeId(4), NodeId(4)),
            Err(CryptoError::InvalidPeer(NodeId(4)))
        );
    }

    #[test]
    fn share_xor_cancellation() {
        let (si, sj) = (key([5; 16]), key([6; 16]));
        let (i, j) = (NodeId(1), NodeId(2));
        let share = make_secret_share(&si, &sj, i, j).unwrap();
        assert_eq!(share.share ^ keyed_hash(&si, j), keyed_hash(&sj, i));
        assert_eq!(session_key_initiator(&share, &si, j), keyed_hash(&sj, i));
    }

    #[test]
    fn zero_share_yields_own_half() {
        let si = key([5; 16]);
        let share = SecretShare { initiator: NodeId(1), peer: NodeId(2), share: Key128::ZERO };
        assert_eq!(session_key_initiator(&share, &si, NodeId(2)), keyed_hash(&si, NodeId(2)));
    }

    #[test]
    fn randomized_agreement_thousand_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let (si, sj) = (random_key(&mut rng), random_key(&mut rng));
            let i = NodeId(rng.next_u64());
            let j = NodeId(rng.next_u64());
            if i == j {
                continue;
            }
            let share = make_secret_share(&si, &sj, i, j).unwrap();
            assert_eq!(session_key_initiator(&share, &si, j), session_key_responder(&sj, i));
        }
    }

    #[test]
    fn responder_keys_differ_across_initiators() {
        let sj = key([0x11; 16]);
        let set: HashSet<_> = (0..1000).map(|i| session_key_responder(&sj, NodeId(i))).collect();
        assert_eq!(set.len(), 1000);
    }

    proptest! {
        #[test]
        fn share_is_symmetric(si in any::<[u8; 16]>(), sj in any::<[u8; 16]>(), i in any::<u64>(), j in any::<u64>()) {
            prop_assume!(i != j);
            let (si, sj) = (key(si), key(sj));
            let ij = make_secret_share(&si, &sj, NodeId(i), NodeId(j)).unwrap();
            let ji = make_secret_share(&sj, &si, NodeId(j), NodeId(i)).unwrap();
            prop_assert_eq!(ij.share, ji.share);
        }

        #[test]
        fn session_keys_agree(s in any::<[u8; 16]>(), a in any::<[u8; 16]>(), i in any::<u64>(), j in any::<u64>()) {
            prop_assume!(i != j);
            let (s, a) = (key(s), key(a));
            let ki = derive_node_keys(&s, &a, NodeId(i));
            let kj = derive_node_keys(&s, &a, NodeId(j));
            let share = make_secret_share(&ki.encryption, &kj.encryption, NodeId(i), NodeId(j)).unwrap();
            prop_assert_eq!(
                session_key_initiator(&share, &ki.encryption, NodeId(j)),
                session_key_responder(&kj.encryption, NodeId(i))
            );
        }
    }
}
