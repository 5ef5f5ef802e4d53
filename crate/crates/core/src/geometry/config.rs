use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Third-party discovery reach model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Direct range only.
    A,
    /// One intermediate, sparse field: reach `3R/2`.
    B,
    /// One intermediate, dense field: reach `2R`.
    C,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::A, Scenario::B, Scenario::C];

    /// Discovery reach as a multiple of the radio radius.
    pub fn reach_multiplier(self) -> f64 {
        match self {
            Scenario::A => 1.0,
            Scenario::B => 1.5,
            Scenario::C => 2.0,
        }
    }

    /// Expected union coverage in units of `πR²`, as used by the closed-form
    /// connectivity expressions.
    pub fn reference_coefficient(self) -> f64 {
        match self {
            Scenario::A => 1.413497,
            Scenario::B => 2.87947,
            Scenario::C => 4.84349,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            "C" | "c" => Ok(Scenario::C),
            other => Err(format!("unknown scenario '{other}' (expected A, B or C)")),
        }
    }
}

/// Geometry and population of one deployment on a square field of area `area`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    pub area: f64,
    pub radius: f64,
    pub sensors: usize,
    pub third_parties: usize,
    pub expected_degree: f64,
    pub scenario: Scenario,
    pub seed: u64,
}

impl DeploymentConfig {
    /// Fixes `d` and derives `R = sqrt(d G / (π n))`.
    pub fn with_degree(
        area: f64,
        sensors: usize,
        third_parties: usize,
        expected_degree: f64,
        scenario: Scenario,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        let cfg = DeploymentConfig {
            area,
            radius: (expected_degree * area / (PI * sensors as f64)).sqrt(),
            sensors,
            third_parties,
            expected_degree,
            scenario,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fixes `R` and derives `d = n π R² / G`.
    pub fn with_radius(
        area: f64,
        sensors: usize,
        third_parties: usize,
        radius: f64,
        scenario: Scenario,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        let cfg = DeploymentConfig {
            area,
            radius,
            sensors,
            third_parties,
            expected_degree: sensors as f64 * PI * radius * radius / area,
            scenario,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn side(&self) -> f64 {
        self.area.sqrt()
    }

    /// Third parties per sensor.
    pub fn ratio(&self) -> f64 {
        self.third_parties as f64 / self.sensors as f64
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidConfig(m));
        if !(self.area.is_finite() && self.area > 0.0) {
            return bad(format!("area must be positive, got {}", self.area));
        }
        if self.sensors < 2 {
            return bad(format!("need at least 2 sensors, got {}", self.sensors));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.expected_degree > 0.0 && self.expected_degree < self.sensors as f64) {
            return bad(format!(
                "expected degree must lie in (0, n={}), got {}",
                self.sensors, self.expected_degree
            ));
        }
        Ok(())
    }
}
