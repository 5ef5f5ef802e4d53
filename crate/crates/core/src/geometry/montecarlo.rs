use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Point-counting estimate of the expected union coverage (units of `πR²`).
///
/// Each sample draws a neighbour distance `x = sqrt(U)` and a point uniform
/// in the bounding box of both reach disks; the box area times the hit
/// indicator is an unbiased estimate of the union area at `x`.
pub fn coverage_monte_carlo(scenario: Scenario, samples: u64, seed: u64) -> McEstimate {
    let rho = scenario.reach_multiplier();
    let rho2 = rho * rho;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = rng.gen::<f64>().sqrt();
        let width = x + 2.0 * rho;
        let px = -rho + width * rng.gen::<f64>();
        let py = rho * (2.0 * rng.gen::<f64>() - 1.0);
        let inside = px * px + py * py <= rho2 || (px - x) * (px - x) + py * py <= rho2;
        if inside {
            let v = width * 2.0 * rho / std::f64::consts::PI;
            sum += v;
            sum_sq += v * v;
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    McEstimate { mean, std_error: (var / n).sqrt(), samples }
}
