use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attack::AttackScript;
use super::engine::{run_key_establishment, SimConfig};
use super::report::SimReport;
use super::topology::deploy;

pub const AGGREGATE_SCHEMA: &str = "tpka.aggregate/1";

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub seed: u64,
    pub result: Result<SimReport, String>,
}

/// One isolated run per seed. Panics are caught and reported as failures.
pub fn run_trials(cfg: &SimConfig, seeds: &[u64], script: &AttackScript) -> Vec<TrialOutcome> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.deployment.seed = seed;
            let result = catch_unwind(AssertUnwindSafe(|| {
                let topo = deploy(&c.deployment, c.edge_mode).map_err(|e| e.to_string())?;
                run_key_establishment(&topo, &c, script).map(|r| r.report).map_err(|e| e.to_string())
            }))
            .unwrap_or_else(|p| {
                let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
                Err(format!("trial panicked: {}", msg.unwrap_or_default()))
            });
            TrialOutcome { seed, result }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stat::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stat {
            mean,
            stddev: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema: String,
    pub trials: u64,
    pub failed: Vec<u64>,
    /// `(metric, statistic)` in a fixed order.
    pub metrics: Vec<(String, Stat)>,
}

impl Aggregate {
    pub fn get(&self, name: &str) -> Option<Stat> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    pub fn to_csv(&self, manifest: &str) -> String {
        let mut out = String::from("metric,mean,stddev,min,max,trials,failed,manifest\n");
        for (name, s) in &self.metrics {
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{},{manifest}",
                s.mean,
                s.stddev,
                s.min,
                s.max,
                self.trials,
                self.failed.len()
            );
        }
        out
    }
}

type Metric = (&'static str, fn(&SimReport) -> f64);

const METRICS: &[Metric] = &[
    ("empirical_local_connectivity", |r| r.empirical_local_connectivity),
    ("mean_degree", |r| r.mean_degree),
    ("sensor_sent", |r| r.sensor.sent),
    ("sensor_received", |r| r.sensor.received),
    ("sensor_encrypt", |r| r.sensor.ops.encrypt),
    ("sensor_decrypt", |r| r.sensor.ops.decrypt),
    ("sensor_hash", |r| r.sensor.ops.hash),
    ("sensor_keygen", |r| r.sensor.ops.keygen),
    ("sensor_energy_uj", |r| r.sensor.energy_uj_mean),
    ("tp_sent_per_requester", |r| r.third_party_per_requester.transmit),
    ("tp_received_per_requester", |r| r.third_party_per_requester.receive),
    ("tp_encrypt_per_requester", |r| r.third_party_per_requester.encrypt),
    ("tp_decrypt_per_requester", |r| r.third_party_per_requester.decrypt),
    ("tp_hash_per_requester", |r| r.third_party_per_requester.hash),
    ("tp_energy_uj", |r| r.third_party.energy_uj_mean),
    ("compromised_fraction", |r| r.final_compromised_fraction()),
    ("impersonation_acceptances", |r| r.impersonation_acceptances as f64),
    ("messages_dropped", |r| r.messages.dropped as f64),
];

/// Statistics over successful trials, independent of their order.
pub fn aggregate(outcomes: &[TrialOutcome]) -> Aggregate {
    let mut ok: Vec<&SimReport> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    ok.sort_by_key(|r| r.seed);
    let mut failed: Vec<u64> = outcomes.iter().filter(|o| o.result.is_err()).map(|o| o.seed).collect();
    failed.sort_unstable();
    let metrics = METRICS
        .iter()
        .map(|(name, f)| {
            let values: Vec<f64> = ok.iter().map(|r| f(r)).collect();
            (name.to_string(), Stat::of(&values))
        })
        .collect();
    Aggregate { schema: AGGREGATE_SCHEMA.to_string(), trials: outcomes.len() as u64, failed, metrics }
}
