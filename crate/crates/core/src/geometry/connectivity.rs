use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{adaptive_simpson, neighbor_distance_pdf, union_area, DeploymentConfig, Scenario};

/// Expected union coverage of a neighbour pair, in units of `πR²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCoefficient {
    pub scenario: Scenario,
    pub value: f64,
}

/// Integrates `union_area(x) f(x)` over `[0, R]` and divides by `πR²`.
pub fn expected_coverage(scenario: Scenario, radius: f64) -> CoverageCoefficient {
    let disk = PI * radius * radius;
    let integrand = |x: f64| {
        let x = x.clamp(0.0, radius);
        union_area(scenario, x, radius).unwrap() * neighbor_distance_pdf(x, radius).unwrap()
    };
    let value = adaptive_simpson(&integrand, 0.0, radius, 1e-10 * disk) / disk;
    CoverageCoefficient { scenario, value }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityEstimate {
    /// Probability that one given third party falls in the coverage region.
    pub p_single: f64,
    /// Probability that at least one third party does.
    pub p_local: f64,
    /// `p_single` exceeded 1 and was clamped.
    pub saturated: bool,
}

/// `1 - (1 - c d / n)^t` with `c` the scenario's coverage coefficient.
pub fn local_connectivity(coefficient: f64, degree: f64, sensors: usize, third_parties: usize) -> ConnectivityEstimate {
    let raw = coefficient * degree / sensors as f64;
    let saturated = raw > 1.0;
    if saturated {
        warn!("coverage probability {raw:.4} exceeds 1; clamped");
    }
    let p = raw.clamp(0.0, 1.0);
    let p_local = 1.0 - binomial_pmf(third_parties, p, 0);
    ConnectivityEstimate { p_single: p, p_local, saturated }
}

/// Closed-form local connectivity for `cfg`, using the reference coefficient
/// of its scenario.
pub fn local_connectivity_analytic(cfg: &DeploymentConfig) -> ConnectivityEstimate {
    local_connectivity(
        cfg.scenario.reference_coefficient(),
        cfg.expected_degree,
        cfg.sensors,
        cfg.third_parties,
    )
}

/// `P(Z = z)` for `Z ~ Binomial(t, p)`.
pub fn binomial_pmf(t: usize, p: f64, z: usize) -> f64 {
    if z > t {
        return 0.0;
    }
    if z == 0 {
        return (1.0 - p).powi(t as i32);
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return if z == t { 1.0 } else { 0.0 };
    }
    let k = z.min(t - z);
    let ln_choose: f64 = (1..=k).map(|i| ((t - k + i) as f64 / i as f64).ln()).sum();
    (ln_choose + z as f64 * p.ln() + (t - z) as f64 * (1.0 - p).ln()).exp()
}

/// Smallest (real-valued) number of third parties reaching `target`
/// connectivity, found by bisection.
pub fn third_parties_for_connectivity(coefficient: f64, degree: f64, sensors: usize, target: f64) -> f64 {
    let p = (coefficient * degree / sensors as f64).clamp(0.0, 1.0);
    let conn = |t: f64| 1.0 - (1.0 - p).powf(t);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while conn(hi) < target {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if conn(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSweep {
    pub scenarios: Vec<Scenario>,
    pub degrees: Vec<f64>,
    pub sensors: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_step: f64,
}

impl Default for CurveSweep {
    fn default() -> Self {
        CurveSweep {
            scenarios: Scenario::ALL.to_vec(),
            degrees: vec![20.0, 40.0],
            sensors: 10_000,
            ratio_min: 0.0,
            ratio_max: 0.4,
            ratio_step: 0.01,
        }
    }
}

impl CurveSweep {
    pub fn ratios(&self) -> Vec<f64> {
        if self.ratio_step <= 0.0 {
            return vec![self.ratio_min];
        }
        let steps = ((self.ratio_max - self.ratio_min) / self.ratio_step + 1e-9).floor() as usize;
        (0..=steps).map(|k| self.ratio_min + k as f64 * self.ratio_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub scenario: Scenario,
    pub d: f64,
    pub n: usize,
    pub t: usize,
    pub ratio: f64,
    pub p_analytic: f64,
}

/// Connectivity versus third-party ratio for every scenario and degree.
pub fn connectivity_curve(sweep: &CurveSweep) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for &scenario in &sweep.scenarios {
        for &d in &sweep.degrees {
            for ratio in sweep.ratios() {
                let t = (ratio * sweep.sensors as f64).round() as usize;
                let est = local_connectivity(scenario.reference_coefficient(), d, sweep.sensors, t);
                out.push(CurvePoint { scenario, d, n: sweep.sensors, t, ratio, p_analytic: est.p_local });
            }
        }
    }
    out
}
