//! Self-checks run by `tpka verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::crypto::{
    derive_node_keys, make_secret_share, random_key, session_key_initiator, session_key_responder, NodeId,
};
use crate::geometry::{coverage_monte_carlo, expected_coverage, Scenario};
use crate::protocol::{AdvertOutcome, BaseStation, ProtocolParams, TpAdvert};

use super::config::VerifySection;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub passed: bool,
}

pub fn run_checks(v: &VerifySection) -> Vec<Check> {
    let mut out = Vec::new();
    for s in Scenario::ALL {
        let q = expected_coverage(s, 1.0).value;
        let reference = v.reference.get(&s).copied().unwrap_or(s.reference_coefficient());
        out.push(Check {
            name: format!("coefficient {s}"),
            expected: format!("{reference}"),
            computed: format!("{q:.7}"),
            passed: (q - reference).abs() <= v.tolerance,
        });
        if v.mc_samples > 1 {
            let mc = coverage_monte_carlo(s, v.mc_samples, v.mc_seed);
            out.push(Check {
                name: format!("monte carlo {s}"),
                expected: format!("{q:.7} within 3 s.e."),
                computed: format!("{:.7} ± {:.1e}", mc.mean, mc.std_error),
                passed: (mc.mean - q).abs() < 3.0 * mc.std_error,
            });
        }
    }
    let agreed = session_agreement(v.session_trials, v.mc_seed);
    out.push(Check {
        name: "session agreement".into(),
        expected: format!("{} of {}", v.session_trials, v.session_trials),
        computed: format!("{agreed} of {}", v.session_trials),
        passed: agreed == v.session_trials,
    });
    let chain = chain_replay(v.chain_trials, v.mc_seed);
    out.push(Check {
        name: "chain replay".into(),
        expected: format!("{} genuine accepted, 0 replays or forgeries", v.chain_trials),
        computed: format!("{} accepted, {} bad accepted", chain.0, chain.1),
        passed: chain == (v.chain_trials, 0),
    });
    out
}

/// Random masters and id pairs; counts pairs whose session keys match.
pub fn session_agreement(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agreed = 0;
    for _ in 0..trials {
        let (s, a) = (random_key(&mut rng), random_key(&mut rng));
        let i = NodeId(rng.gen());
        let mut j = NodeId(rng.gen());
        if j == i {
            j = NodeId(i.0.wrapping_add(1));
        }
        let (ki, kj) = (derive_node_keys(&s, &a, i), derive_node_keys(&s, &a, j));
        let share = make_secret_share(&ki.encryption, &kj.encryption, i, j).expect("distinct ids");
        if session_key_initiator(&share, &ki.encryption, j) == session_key_responder(&kj.encryption, i) {
            agreed += 1;
        }
    }
    agreed
}

/// One genuine advert per epoch, each followed by a replay of the previous
/// link and a random forgery in the next epoch. Returns
/// `(genuine accepted, replays or forgeries accepted)`.
pub fn chain_replay(epochs: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ProtocolParams { chain_length: epochs + 2, lookahead: 16 };
    let mut bs = BaseStation::new(NodeId(u64::MAX), params, &mut rng).expect("chain length >= 2");
    let mut tp = bs.provision_third_party(NodeId(1), u64::MAX).expect("fresh id");
    let mut sensor = bs.provision_sensor(NodeId(2)).expect("fresh id");
    let (mut good, mut bad) = (0, 0);
    for epoch in 0..epochs as u64 {
        let adv = tp.advertise(epoch).expect("chain long enough").expect("active");
        if matches!(sensor.on_tp_advert(&adv, 1.0, epoch), AdvertOutcome::Accepted { .. }) {
            good += 1;
        }
        let replay = TpAdvert { tp_id: NodeId(66), disclosed_link: adv.disclosed_link };
        let forged = TpAdvert { tp_id: NodeId(67), disclosed_link: random_key(&mut rng) };
        for fake in [replay, forged] {
            if matches!(sensor.on_tp_advert(&fake, 0.5, epoch + 1), AdvertOutcome::Accepted { .. }) {
                bad += 1;
            }
        }
    }
    (good, bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifySection {
        VerifySection { mc_samples: 200_000, session_trials: 500, chain_trials: 100, ..Default::default() }
    }

    #[test]
    fn defaults_pass() {
        let checks = run_checks(&quick());
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        assert_eq!(checks.len(), 8);
    }

    #[test]
    fn corrupted_reference_fails() {
        let mut v = quick();
        v.reference.insert(Scenario::B, 2.9);
        let checks = run_checks(&v);
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["coefficient B"]);
    }
}
