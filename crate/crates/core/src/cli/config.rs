use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{CurveSweep, DeploymentConfig, Scenario};
use crate::protocol::ProtocolParams;
use crate::sim::{AdvertPolicy, Eavesdrop, EdgeMode, EnergyModel, SimConfig, SizeTable};

use super::CliError;

/// The whole run configuration as read from TOML. Every section is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub deployment: DeploymentSection,
    pub protocol: ProtocolSection,
    pub energy: EnergyModel,
    pub sizes: SizeTable,
    pub sweep: SweepSection,
    pub verify: VerifySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploymentSection {
    pub sensors: usize,
    /// Either `third_parties` or `ratio` (t/n).
    pub third_parties: Option<usize>,
    pub ratio: Option<f64>,
    /// Either `expected_degree` or `radius`.
    pub expected_degree: Option<f64>,
    pub radius: Option<f64>,
    /// Field area; defaults to `sensors` (unit density).
    pub area: Option<f64>,
    pub scenario: Scenario,
    pub edge_mode: EdgeMode,
}

impl Default for DeploymentSection {
    fn default() -> Self {
        DeploymentSection {
            sensors: 10_000,
            third_parties: None,
            ratio: Some(0.1),
            expected_degree: Some(40.0),
            radius: None,
            area: None,
            scenario: Scenario::A,
            edge_mode: EdgeMode::Torus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub chain_length: usize,
    pub lookahead: u32,
    pub wipe_round: u64,
    pub adverts: AdvertPolicy,
    pub loss_probability: f64,
    pub eavesdrop: Eavesdrop,
    pub redeploy_round: Option<u64>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let p = ProtocolParams::default();
        ProtocolSection {
            chain_length: p.chain_length,
            lookahead: p.lookahead,
            wipe_round: 7,
            adverts: AdvertPolicy::Discovery,
            loss_probability: 0.0,
            eavesdrop: Eavesdrop::FromFirstCapture,
            redeploy_round: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub scenarios: Vec<Scenario>,
    pub degrees: Vec<f64>,
    pub sensors: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_step: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = CurveSweep::default();
        SweepSection {
            scenarios: s.scenarios,
            degrees: s.degrees,
            sensors: s.sensors,
            ratio_min: s.ratio_min,
            ratio_max: s.ratio_max,
            ratio_step: s.ratio_step,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub mc_samples: u64,
    pub mc_seed: u64,
    pub session_trials: usize,
    pub chain_trials: usize,
    /// Reference coverage coefficients to check against, by scenario.
    pub reference: BTreeMap<Scenario, f64>,
    pub tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            mc_samples: 10_000_000,
            mc_seed: 1,
            session_trials: 10_000,
            chain_trials: 1_000,
            reference: Scenario::ALL.iter().map(|&s| (s, s.reference_coefficient())).collect(),
            tolerance: 1e-4,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.deployment;
        let bad = |m: &str| Err(CliError::Validation(format!("config: {m}")));
        if d.third_parties.is_some() == d.ratio.is_some() {
            return bad("[deployment] needs exactly one of `third_parties` or `ratio`");
        }
        if d.expected_degree.is_some() == d.radius.is_some() {
            return bad("[deployment] needs exactly one of `expected_degree` or `radius`");
        }
        if d.ratio.is_some_and(|r| !(0.0..=1.0e3).contains(&r)) {
            return bad("[deployment] `ratio` must be non-negative");
        }
        let s = &self.sweep;
        if s.scenarios.is_empty() || s.degrees.is_empty() {
            return bad("[sweep] needs at least one scenario and one degree");
        }
        if !(s.ratio_min >= 0.0 && s.ratio_max >= s.ratio_min && s.ratio_step > 0.0) {
            return bad("[sweep] needs 0 <= ratio_min <= ratio_max and ratio_step > 0");
        }
        if s.degrees.iter().any(|&d| !(d > 0.0 && d < s.sensors as f64)) {
            return bad("[sweep] degrees must lie in (0, sensors)");
        }
        self.sim_config(0)?.validate().map_err(|e| CliError::Validation(format!("config: {e}")))?;
        Ok(())
    }

    pub fn deployment(&self, seed: u64) -> Result<DeploymentConfig, CliError> {
        let d = &self.deployment;
        let area = d.area.unwrap_or(d.sensors as f64);
        let t = match (d.third_parties, d.ratio) {
            (Some(t), _) => t,
            (None, Some(r)) => (r * d.sensors as f64).round() as usize,
            (None, None) => 0,
        };
        let cfg = match (d.expected_degree, d.radius) {
            (Some(deg), _) => DeploymentConfig::with_degree(area, d.sensors, t, deg, d.scenario, seed),
            (None, Some(r)) => DeploymentConfig::with_radius(area, d.sensors, t, r, d.scenario, seed),
            (None, None) => unreachable!("validated"),
        };
        cfg.map_err(|e| CliError::Validation(format!("config: [deployment] {e}")))
    }

    pub fn sim_config(&self, seed: u64) -> Result<SimConfig, CliError> {
        let p = &self.protocol;
        let mut c = SimConfig::new(self.deployment(seed)?);
        c.edge_mode = self.deployment.edge_mode;
        c.protocol = ProtocolParams { chain_length: p.chain_length, lookahead: p.lookahead };
        c.wipe_round = p.wipe_round;
        c.adverts = p.adverts;
        c.loss_probability = p.loss_probability;
        c.eavesdrop = p.eavesdrop;
        c.redeploy_round = p.redeploy_round;
        c.energy = self.energy.clone();
        c.sizes = self.sizes.clone();
        Ok(c)
    }

    pub fn sweep(&self) -> CurveSweep {
        let s = &self.sweep;
        CurveSweep {
            scenarios: s.scenarios.clone(),
            degrees: s.degrees.clone(),
            sensors: s.sensors,
            ratio_min: s.ratio_min,
            ratio_max: s.ratio_max,
            ratio_step: s.ratio_step,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        let d = c.deployment(3).unwrap();
        assert_eq!((d.sensors, d.third_parties, d.expected_degree), (10_000, 1000, 40.0));
    }

    #[test]
    fn sections_map_onto_configs() {
        let text = r#"
[deployment]
sensors = 500
third_parties = 25
ratio = "unused"
"#;
        assert!(RunConfig::parse(text).is_err());
        let text = r#"
[deployment]
sensors = 500
ratio = 0.05
scenario = "C"
edge_mode = "border"

[protocol]
wipe_round = 9
adverts = "every_round"

[energy]
transmit = 100.0

[sweep]
degrees = [20.0]
"#;
        let c = RunConfig::parse(text).unwrap();
        let s = c.sim_config(4).unwrap();
        assert_eq!(s.deployment.third_parties, 25);
        assert_eq!(s.deployment.scenario, Scenario::C);
        assert_eq!(s.edge_mode, EdgeMode::Border);
        assert_eq!(s.wipe_round, 9);
        assert_eq!(s.adverts, AdvertPolicy::EveryRound);
        assert_eq!(s.energy.transmit, 100.0);
        assert_eq!(s.energy.hash, 5.90);
        assert_eq!(c.sweep().degrees, vec![20.0]);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = RunConfig::parse("[deployment]\nsensorz = 3\n").unwrap_err().to_string();
        assert!(err.contains("sensorz"), "{err}");
        let err = RunConfig::parse("[deployment]\nsensors = \"many\"\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = RunConfig::parse("[sweep]\nratio_step = 0.0\n").unwrap_err().to_string();
        assert!(err.contains("ratio_step"), "{err}");
    }
}
