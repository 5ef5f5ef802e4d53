use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::crypto::{keyed_hash, random_key, seal, Key128, NodeId};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn station(chain_length: usize) -> BaseStation {
    BaseStation::new(NodeId(u64::MAX), ProtocolParams { chain_length, lookahead: 16 }, &mut rng(1)).unwrap()
}

/// Sensors `ids` all mutually in range of each other and of one third party.
fn clique(bs: &mut BaseStation, ids: &[u64], tp_id: u64) -> (Vec<SensorNode>, ThirdParty) {
    let mut r = rng(2);
    let mut nodes: Vec<_> = ids.iter().map(|&i| bs.provision_sensor(NodeId(i)).unwrap()).collect();
    let mut tp = bs.provision_third_party(NodeId(tp_id), 10).unwrap();
    let advert = tp.advertise(0).unwrap().unwrap();
    for n in nodes.iter_mut() {
        assert!(matches!(n.on_tp_advert(&advert, 1.0, 0), AdvertOutcome::Accepted { .. }));
    }
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            let (left, right) = nodes.split_at_mut(b);
            assert!(handshake(&mut left[a], &mut right[0], true, true, &mut r).unwrap());
        }
    }
    (nodes, tp)
}

fn establish_all(nodes: &mut [SensorNode], tp: &mut ThirdParty, r: &mut ChaCha8Rng) {
    let mut confirms = Vec::new();
    for n in nodes.iter_mut() {
        if let Some(req) = n.request_keys().unwrap() {
            for resp in tp.serve_request(&req).unwrap() {
                confirms.push(n.on_key_response(&resp, r).unwrap());
            }
        }
    }
    for (peer, msg) in confirms {
        let node = nodes.iter_mut().find(|n| n.id == peer).unwrap();
        node.on_key_confirm(&msg).unwrap();
    }
}

// ---- provisioning --------------------------------------------------------

#[test]
fn provisioning_is_deterministic_and_definitional() {
    let mut bs = station(8);
    let a = bs.provision_sensor(NodeId(5)).unwrap();
    let b = bs.provision_sensor(NodeId(5)).unwrap();
    assert_eq!(a.keys(), b.keys());
    assert_eq!(a.chain_anchor(), b.chain_anchor());
    let (s, m) = bs.masters();
    assert_eq!(*a.keys(), crate::crypto::derive_node_keys(&s, &m, NodeId(5)));
    assert_eq!(a.chain_anchor(), bs.chain().anchor());
}

#[test]
fn ten_thousand_sensors_have_distinct_keys() {
    let mut bs = station(8);
    let mut seen = HashSet::new();
    for i in 0..10_000 {
        let n = bs.provision_sensor(NodeId(i)).unwrap();
        assert!(seen.insert((n.keys().encryption, n.keys().authentication)));
    }
}

#[test]
fn conflicting_role_is_a_provisioning_error() {
    let mut bs = station(8);
    bs.provision_sensor(NodeId(3)).unwrap();
    assert!(matches!(
        bs.provision_third_party(NodeId(3), 5),
        Err(ProtocolError::Provisioning { existing: Role::Sensor, .. })
    ));
}

// ---- handshake -----------------------------------------------------------

#[test]
fn handshake_in_range_and_asymmetric() {
    let mut bs = station(8);
    let mut r = rng(3);
    let mut a = bs.provision_sensor(NodeId(1)).unwrap();
    let mut b = bs.provision_sensor(NodeId(2)).unwrap();
    assert!(!handshake(&mut a, &mut b, true, false, &mut r).unwrap());
    assert!(a.neighbors().is_empty() && b.neighbors().is_empty());
    assert!(!handshake(&mut a, &mut b, false, true, &mut r).unwrap());
    assert!(a.neighbors().is_empty() && b.neighbors().is_empty());
    assert!(handshake(&mut a, &mut b, true, true, &mut r).unwrap());
    assert!(a.neighbors().contains(&NodeId(2)) && b.neighbors().contains(&NodeId(1)));
}

#[test]
fn self_handshake_rejected() {
    let mut bs = station(8);
    let mut a = bs.provision_sensor(NodeId(1)).unwrap();
    let mut b = a.clone();
    assert_eq!(handshake(&mut a, &mut b, true, true, &mut rng(0)), Err(ProtocolError::SelfHandshake(NodeId(1))));
    let hello = a.hello(&mut rng(0));
    assert!(a.on_hello(&hello).is_err());
}

#[test]
fn stale_nonce_does_not_confirm() {
    let mut bs = station(8);
    let mut a = bs.provision_sensor(NodeId(1)).unwrap();
    let _ = a.hello(&mut rng(4));
    let forged = Message::HelloAck { sender: NodeId(9), nonce_echo: 12345, has_tp: true };
    assert!(!a.on_hello_ack(&forged).unwrap());
    assert!(a.neighbors().is_empty());
}

// ---- advertisements ------------------------------------------------------

#[test]
fn advert_ordering_follows_the_chain() {
    let mut bs = station(3);
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    let chain = tp.chain().unwrap().clone();
    let first = tp.advertise_next().unwrap().unwrap();
    let second = tp.advertise_next().unwrap().unwrap();
    assert_eq!(first.disclosed_link, chain.link(2).unwrap());
    assert_eq!(second.disclosed_link, chain.link(1).unwrap());
    assert_ne!(first.disclosed_link, second.disclosed_link);
    assert!(matches!(tp.advertise_next(), Err(ProtocolError::Crypto(crate::crypto::CryptoError::ChainExhausted))));
}

#[test]
fn wiped_or_sleeping_third_party_is_silent() {
    let mut bs = station(8);
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    tp.sleep();
    assert_eq!(tp.advertise(0).unwrap(), None);
    tp.wake();
    tp.wipe();
    assert_eq!(tp.advertise(0).unwrap(), None);
}

#[test]
fn genuine_replayed_and_forged_adverts() {
    let mut bs = station(16);
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    let mut s = bs.provision_sensor(NodeId(1)).unwrap();
    let first = tp.advertise(0).unwrap().unwrap();
    assert_eq!(s.on_tp_advert(&first, 3.0, 0), AdvertOutcome::Accepted { hashes: 1 });
    assert_eq!(s.chain_anchor(), first.disclosed_link);
    assert_eq!(s.chosen_tp().unwrap().id, NodeId(100));

    // Replaying the epoch-0 link in epoch 1 fails.
    let replay = TpAdvert { tp_id: NodeId(666), disclosed_link: first.disclosed_link };
    assert_eq!(s.on_tp_advert(&replay, 0.1, 1), AdvertOutcome::Rejected);
    let forged = TpAdvert { tp_id: NodeId(667), disclosed_link: random_key(&mut rng(5)) };
    assert_eq!(s.on_tp_advert(&forged, 0.1, 1), AdvertOutcome::Rejected);
    assert_eq!(s.rejected_adverts(), 2);
    assert_eq!(s.chosen_tp().unwrap().id, NodeId(100));
}

#[test]
fn replay_to_a_sensor_that_missed_the_original_is_rejected() {
    let mut bs = station(16);
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    let mut late = bs.provision_sensor(NodeId(2)).unwrap();
    let heard_elsewhere = tp.advertise(0).unwrap().unwrap();
    let replay = TpAdvert { tp_id: NodeId(666), disclosed_link: heard_elsewhere.disclosed_link };
    assert_eq!(late.on_tp_advert(&replay, 0.1, 1), AdvertOutcome::Rejected);
    assert_eq!(late.chosen_tp(), None);
}

#[test]
fn nearest_verified_third_party_wins_ties_to_lower_id() {
    let mut bs = station(16);
    let mut far = bs.provision_third_party(NodeId(101), 10).unwrap();
    let mut near = bs.provision_third_party(NodeId(102), 10).unwrap();
    let mut tie = bs.provision_third_party(NodeId(100), 10).unwrap();
    let mut s = bs.provision_sensor(NodeId(1)).unwrap();
    assert!(matches!(s.on_tp_advert(&far.advertise(0).unwrap().unwrap(), 5.0, 0), AdvertOutcome::Accepted { hashes: 1 }));
    // Same-epoch repeats from other third parties need no hashing.
    assert_eq!(s.on_tp_advert(&near.advertise(0).unwrap().unwrap(), 2.0, 0), AdvertOutcome::Accepted { hashes: 0 });
    assert_eq!(s.on_tp_advert(&tie.advertise(0).unwrap().unwrap(), 2.0, 0), AdvertOutcome::Accepted { hashes: 0 });
    assert_eq!(s.chosen_tp().unwrap().id, NodeId(100));
    let fallback: Vec<_> = s.fallback_tps().iter().map(|c| c.id).collect();
    assert_eq!(fallback, vec![NodeId(102), NodeId(101)]);
}

#[test]
fn lookahead_catches_up_after_missed_epochs() {
    let mut bs = station(64);
    let mut tp = bs.provision_third_party(NodeId(100), 100).unwrap();
    let mut s = bs.provision_sensor(NodeId(1)).unwrap();
    let adv = tp.advertise(9).unwrap().unwrap();
    assert_eq!(s.on_tp_advert(&adv, 1.0, 9), AdvertOutcome::Accepted { hashes: 10 });
    let adv = tp.advertise(40).unwrap().unwrap();
    assert_eq!(s.on_tp_advert(&adv, 1.0, 40), AdvertOutcome::Rejected);
}

#[test]
fn impersonation_sweep_has_zero_acceptances() {
    let mut bs = station(64);
    let mut tp = bs.provision_third_party(NodeId(100), 100).unwrap();
    let mut r = rng(6);
    let mut sensors: Vec<_> = (0..20).map(|i| bs.provision_sensor(NodeId(i)).unwrap()).collect();
    let mut disclosed = Vec::new();
    let mut accepted_malicious = 0;
    for epoch in 0..50u64 {
        let adv = tp.advertise(epoch).unwrap().unwrap();
        // Half the sensors hear the genuine advert.
        for s in sensors.iter_mut().filter(|s| s.id.0 % 2 == epoch % 2) {
            s.on_tp_advert(&adv, 1.0, epoch);
        }
        for k in 0..200 {
            let link = if k % 2 == 0 || disclosed.is_empty() {
                random_key(&mut r)
            } else {
                disclosed[k % disclosed.len()]
            };
            let fake = TpAdvert { tp_id: NodeId(1_000 + k as u64), disclosed_link: link };
            let s = &mut sensors[k % 20];
            if matches!(s.on_tp_advert(&fake, 0.01, epoch + 1), AdvertOutcome::Accepted { .. }) {
                accepted_malicious += 1;
            }
        }
        disclosed.push(adv.disclosed_link);
    }
    assert_eq!(accepted_malicious, 0);
    assert!(sensors.iter().all(|s| s.chosen_tp().unwrap().id == NodeId(100)));
}

// ---- key establishment ---------------------------------------------------

#[test]
fn request_names_exactly_the_initiated_neighbours() {
    let mut bs = station(8);
    let (mut nodes, _tp) = clique(&mut bs, &[1, 2, 3], 100);
    let req = nodes[0].request_keys().unwrap().unwrap();
    let Message::KeyRequest { sealed, .. } = &req else { panic!() };
    let plain = crate::crypto::open(&nodes[0].keys().authentication, sealed).unwrap();
    let payload = RequestPayload::decode(&plain).unwrap();
    assert_eq!(payload.peers, vec![NodeId(2), NodeId(3)]);
    // Highest id initiates nothing when everyone reaches a third party.
    assert_eq!(nodes[2].request_keys().unwrap(), None);
}

#[test]
fn lonely_or_undiscovered_nodes() {
    let mut bs = station(8);
    let mut lonely = bs.provision_sensor(NodeId(1)).unwrap();
    assert_eq!(lonely.request_keys(), Err(ProtocolError::NoThirdParty(NodeId(1))));
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    lonely.on_tp_advert(&tp.advertise(0).unwrap().unwrap(), 1.0, 0);
    assert_eq!(lonely.request_keys(), Ok(None));
}

#[test]
fn one_sided_reach_makes_that_side_initiate() {
    let mut bs = station(8);
    let mut r = rng(9);
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    let mut low = bs.provision_sensor(NodeId(1)).unwrap();
    let mut high = bs.provision_sensor(NodeId(2)).unwrap();
    high.on_tp_advert(&tp.advertise(0).unwrap().unwrap(), 1.0, 0);
    handshake(&mut low, &mut high, true, true, &mut r).unwrap();
    assert!(!low.initiates_with(NodeId(2)));
    assert!(high.initiates_with(NodeId(1)));
}

#[test]
fn forged_request_is_dropped() {
    let mut bs = station(8);
    let (_nodes, mut tp) = clique(&mut bs, &[1, 2], 100);
    let payload = RequestPayload { requester: NodeId(1), peers: vec![NodeId(2)] }.encode();
    let forged = Message::KeyRequest { sender: NodeId(1), sealed: seal(&random_key(&mut rng(7)), NodeId(100), &payload) };
    assert_eq!(tp.serve_request(&forged), Err(ProtocolError::AuthenticationFailed { from: NodeId(1) }));
    assert_eq!(tp.dropped_requests(), 1);
}

#[test]
fn responses_carry_valid_shares() {
    let mut bs = station(8);
    let (mut nodes, mut tp) = clique(&mut bs, &[1, 2, 3, 4], 100);
    let req = nodes[0].request_keys().unwrap().unwrap();
    let responses = tp.serve_request(&req).unwrap();
    assert_eq!(responses.len(), 3);
    let s_i = nodes[0].keys().encryption;
    for resp in &responses {
        let Message::KeyResponse { sealed, .. } = resp else { panic!() };
        let body = PairPayload::decode(&crate::crypto::open(&nodes[0].keys().authentication, sealed).unwrap()).unwrap();
        let peer = nodes.iter().find(|n| n.id == body.second).unwrap();
        assert_eq!(body.key ^ keyed_hash(&s_i, body.second), keyed_hash(&peer.keys().encryption, NodeId(1)));
    }
}

#[test]
fn honest_run_agrees_and_keys_are_fresh() {
    let mut bs = station(8);
    let (mut nodes, mut tp) = clique(&mut bs, &[1, 2, 3, 4, 5], 100);
    establish_all(&mut nodes, &mut tp, &mut rng(8));
    let mut all_keys = HashSet::new();
    for a in &nodes {
        assert_eq!(a.established().len(), 4);
        for (peer, k) in a.established() {
            let b = nodes.iter().find(|n| n.id == *peer).unwrap();
            assert_eq!(b.established()[&a.id], *k);
            // Never equal to the session key.
            assert_ne!(*k, keyed_hash(&b.keys().encryption, a.id));
            assert_ne!(*k, keyed_hash(&a.keys().encryption, b.id));
            all_keys.insert(*k);
        }
    }
    assert_eq!(all_keys.len(), 10);
    // The third party never learned any link key.
    let secrets = tp.resident_secrets();
    assert!(all_keys.iter().all(|k| !secrets.contains(k)));
}

#[test]
fn confirm_replayed_to_another_responder_fails() {
    let mut bs = station(8);
    let (mut nodes, mut tp) = clique(&mut bs, &[1, 2, 3], 100);
    let req = nodes[0].request_keys().unwrap().unwrap();
    let responses = tp.serve_request(&req).unwrap();
    let (peer, confirm) = nodes[0].on_key_response(&responses[0], &mut rng(1)).unwrap();
    assert_eq!(peer, NodeId(2));
    assert_eq!(nodes[2].on_key_confirm(&confirm), Err(ProtocolError::AuthenticationFailed { from: NodeId(1) }));
    assert!(nodes[2].established().is_empty());
    assert_eq!(nodes[1].on_key_confirm(&confirm), Ok(NodeId(1)));
}

#[test]
fn response_to_wrong_node_fails() {
    let mut bs = station(8);
    let (mut nodes, mut tp) = clique(&mut bs, &[1, 2, 3], 100);
    let req = nodes[0].request_keys().unwrap().unwrap();
    let responses = tp.serve_request(&req).unwrap();
    assert!(matches!(nodes[1].on_key_response(&responses[0], &mut rng(1)), Err(ProtocolError::AuthenticationFailed { .. })));
}

// ---- relay ---------------------------------------------------------------

fn relay_topology() -> (BaseStation, SensorNode, SensorNode, SensorNode, ThirdParty) {
    // node(1) -- relay(2) -- tp ; node(1) -- peer(3). Only the relay hears the tp.
    let mut bs = station(8);
    let mut r = rng(10);
    let mut tp = bs.provision_third_party(NodeId(100), 10).unwrap();
    let mut node = bs.provision_sensor(NodeId(1)).unwrap();
    let mut relay = bs.provision_sensor(NodeId(2)).unwrap();
    let mut peer = bs.provision_sensor(NodeId(3)).unwrap();
    relay.on_tp_advert(&tp.advertise(0).unwrap().unwrap(), 1.0, 0);
    handshake(&mut node, &mut relay, true, true, &mut r).unwrap();
    handshake(&mut node, &mut peer, true, true, &mut r).unwrap();
    (bs, node, relay, peer, tp)
}

#[test]
fn link_established_through_one_relay() {
    let (_bs, mut node, mut relay, mut peer, mut tp) = relay_topology();
    let confirms = relay_via_intermediate(&mut node, &mut relay, &mut tp, &[NodeId(3)], &mut rng(11)).unwrap();
    assert_eq!(confirms.len(), 1);
    peer.on_key_confirm(&confirms[0].1).unwrap();
    assert_eq!(node.established()[&NodeId(3)], peer.established()[&NodeId(1)]);
    // The relay saw only sealed bytes and holds nothing about the link.
    assert!(relay.established().is_empty());
    assert_eq!(relay.ops.get(Op::Transmit, Item::KeyRequest), 1);
    assert_eq!(relay.ops.get(Op::Transmit, Item::KeyResponse), 1);
}

#[test]
fn two_intermediates_refused() {
    let msg = Message::Hello { sender: NodeId(1), nonce: 0 };
    let mut env = RelayEnvelope::new(NodeId(1), &msg);
    env.add_hop(NodeId(2)).unwrap();
    assert_eq!(env.add_hop(NodeId(3)), Err(ProtocolError::HopLimit));
}

#[test]
fn tampering_relay_is_caught_at_third_party() {
    let (_bs, mut node, mut relay, _peer, mut tp) = relay_topology();
    let request = node.request_keys_via(tp.id, &[NodeId(3)]);
    let mut env = RelayEnvelope::new(node.id, &request);
    forward(&mut relay, &mut env, Item::KeyRequest).unwrap();
    let last = env.payload.len() - 20;
    env.payload[last] ^= 0x40;
    let tampered = Message::decode(&env.payload).unwrap();
    assert!(matches!(tp.serve_request(&tampered), Err(ProtocolError::AuthenticationFailed { .. })));
}

#[test]
fn relay_requires_qualifying_intermediate() {
    let (_bs, mut node, _relay, mut peer, mut tp) = relay_topology();
    // The peer has no third party, so it cannot relay.
    assert_eq!(
        relay_via_intermediate(&mut node, &mut peer, &mut tp, &[NodeId(3)], &mut rng(0)).unwrap_err(),
        ProtocolError::NoRelay(NodeId(1))
    );
}

// ---- lifecycle and memory ------------------------------------------------

#[test]
fn memory_footprints() {
    let mut bs = station(8);
    let s = bs.provision_sensor(NodeId(1)).unwrap();
    assert_eq!(s.persistent_key_bits(), 384);
    let mut tp = bs.provision_third_party(NodeId(100), 5).unwrap();
    assert_eq!(tp.persistent_key_bits(), 512);
    tp.tick(5);
    assert_eq!(tp.persistent_key_bits(), 128);
}

#[test]
fn wipe_at_deadline_and_reprovision() {
    let mut bs = station(32);
    let (mut nodes, mut tp) = clique(&mut bs, &[1, 2], 100);
    assert!(!tp.tick(9));
    assert_eq!(tp.mode(), TpMode::Active);
    assert!(tp.tick(10));
    assert_eq!(tp.mode(), TpMode::Wiped);
    assert_eq!(tp.masters(), None);
    let (s, a) = bs.masters();
    let captured = tp.resident_secrets();
    assert!(!captured.contains(&s) && !captured.contains(&a));
    assert_eq!(captured, vec![tp.bs_key()]);

    let req = nodes[0].request_keys().unwrap().unwrap();
    assert_eq!(tp.serve_request(&req), Err(ProtocolError::Refused(NodeId(100))));

    // A packet under the wrong key is ignored.
    let mut bogus = bs.provision_packet(NodeId(100), 40).unwrap();
    if let Message::Provision { sealed } = &mut bogus {
        sealed.tag[0] ^= 1;
    }
    assert!(tp.on_provision(&bogus).is_err());
    assert_eq!(tp.mode(), TpMode::Wiped);

    bs.set_epoch(5);
    tp.on_provision(&bs.provision_packet(NodeId(100), 40).unwrap()).unwrap();
    assert_eq!(tp.mode(), TpMode::Active);
    assert_eq!(tp.wipe_deadline(), 40);
    assert_eq!(tp.persistent_key_bits(), 512);
    let adv = tp.advertise(5).unwrap().unwrap();
    let mut fresh = bs.provision_sensor(NodeId(7)).unwrap();
    assert_eq!(fresh.on_tp_advert(&adv, 1.0, 5), AdvertOutcome::Accepted { hashes: 1 });
    assert_eq!(tp.serve_request(&req).unwrap().len(), 1);
    let _ = &mut nodes;
}

#[test]
fn provision_for_unknown_third_party_fails() {
    let bs = station(8);
    assert_eq!(bs.provision_packet(NodeId(5), 1), Err(ProtocolError::UnknownNode(NodeId(5))));
}

#[test]
fn operation_counts_for_one_initiated_link() {
    let mut bs = station(8);
    let (mut nodes, mut tp) = clique(&mut bs, &[1, 2], 100);
    establish_all(&mut nodes, &mut tp, &mut rng(12));
    let i = &nodes[0].ops;
    assert_eq!(i.agreement_total(Op::Encrypt), 2);
    assert_eq!(i.agreement_total(Op::Transmit), 2);
    assert_eq!(i.get(Op::Transmit, Item::RequestEntry), 1);
    assert_eq!(i.total(Op::Hash), 2);
    assert_eq!(i.total(Op::Keygen), 1);
    let j = &nodes[1].ops;
    assert_eq!(j.total(Op::Hash), 2);
    assert_eq!(j.agreement_total(Op::Decrypt), 1);
    assert_eq!(tp.ops.total(Op::Hash), 5);
    let _ = Key128::ZERO;
}
