use super::{GeometryError, Scenario};

fn check_domain(x: f64, radius: f64) -> Result<(), GeometryError> {
    if !(0.0..=radius).contains(&x) {
        return Err(GeometryError::Domain { x, radius });
    }
    Ok(())
}

/// Density of the distance to a neighbour placed uniformly in the range disk:
/// `f(x) = 2x / R²` on `[0, R]`.
pub fn neighbor_distance_pdf(x: f64, radius: f64) -> Result<f64, GeometryError> {
    check_domain(x, radius)?;
    Ok(2.0 * x / (radius * radius))
}

/// Intersection area of two disks of radius `rho` whose centers are `x`
/// apart, for `0 <= x <= 2 rho`.
pub fn lens_area(rho: f64, x: f64) -> f64 {
    if x >= 2.0 * rho {
        return 0.0;
    }
    let c = (x / (2.0 * rho)).clamp(-1.0, 1.0);
    2.0 * rho * rho * c.acos() - 0.5 * x * (4.0 * rho * rho - x * x).max(0.0).sqrt()
}

/// Area covered by the reach disks of two neighbours `x` apart.
pub fn union_area(scenario: Scenario, x: f64, radius: f64) -> Result<f64, GeometryError> {
    check_domain(x, radius)?;
    let rho = scenario.reach_multiplier() * radius;
    Ok(2.0 * std::f64::consts::PI * rho * rho - lens_area(rho, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn pdf_domain_and_origin() {
        assert_eq!(neighbor_distance_pdf(0.0, 2.0).unwrap(), 0.0);
        assert!(neighbor_distance_pdf(-0.1, 1.0).is_err());
        assert!(neighbor_distance_pdf(1.1, 1.0).is_err());
    }

    #[test]
    fn coincident_disks() {
        assert!((union_area(Scenario::A, 0.0, 1.0).unwrap() - PI).abs() < 1e-12);
        assert!((union_area(Scenario::C, 0.0, 1.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((union_area(Scenario::B, 0.0, 2.0).unwrap() - PI * 9.0).abs() < 1e-12);
    }

    #[test]
    fn lens_at_one_radius_closed_form() {
        let expected = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((lens_area(1.0, 1.0) - expected).abs() < 1e-12);
        let union = union_area(Scenario::A, 1.0, 1.0).unwrap();
        assert!((union - (2.0 * PI - expected)).abs() < 1e-12);
    }

    #[test]
    fn lens_at_one_radius_point_counting() {
        // Count points of [-1, 2] x [-1, 1] inside both unit disks.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let samples = 2_000_000;
        let mut hits = 0u32;
        for _ in 0..samples {
            let px: f64 = rng.gen_range(-1.0..2.0);
            let py: f64 = rng.gen_range(-1.0..1.0);
            if px * px + py * py <= 1.0 && (px - 1.0).powi(2) + py * py <= 1.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        let est = 6.0 * p;
        let se = 6.0 * (p * (1.0 - p) / samples as f64).sqrt();
        assert!((est - lens_area(1.0, 1.0)).abs() < 4.0 * se, "{est} vs {}", lens_area(1.0, 1.0));
    }

    #[test]
    fn union_is_increasing_and_bounded() {
        for s in Scenario::ALL {
            let rho = s.reach_multiplier();
            let mut prev = union_area(s, 0.0, 1.0).unwrap();
            for k in 1..=1000 {
                let a = union_area(s, k as f64 / 1000.0, 1.0).unwrap();
                assert!(a > prev);
                assert!(a <= 2.0 * PI * rho * rho);
                prev = a;
            }
        }
    }

    #[test]
    fn printed_scenario_expressions_match_with_pi() {
        // The closed forms with the disk-sum term written as 2πρ².
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let a = 2.0 * PI - 2.0 * (x / 2.0).acos() + x * (1.0 - x * x / 4.0).sqrt();
            let b = 4.5 * PI - 4.5 * (x / 3.0).acos() + x * (2.25 - x * x / 4.0).sqrt();
            let c = 8.0 * PI - 8.0 * (x / 4.0).acos() + x * (4.0 - x * x / 4.0).sqrt();
            assert!((union_area(Scenario::A, x, 1.0).unwrap() - a).abs() < 1e-12);
            assert!((union_area(Scenario::B, x, 1.0).unwrap() - b).abs() < 1e-12);
            assert!((union_area(Scenario::C, x, 1.0).unwrap() - c).abs() < 1e-12);
        }
    }
}
