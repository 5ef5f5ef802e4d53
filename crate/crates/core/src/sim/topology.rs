use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::DeploymentConfig;

use super::SimError;

/// How distances behave at the field edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    /// Wrap-around field, no edge effects.
    #[default]
    Torus,
    /// Hard border; nodes near the edge see fewer neighbours.
    Border,
}

impl fmt::Display for EdgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeMode::Torus => "torus",
            EdgeMode::Border => "border",
        })
    }
}

impl FromStr for EdgeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "torus" => Ok(EdgeMode::Torus),
            "border" => Ok(EdgeMode::Border),
            other => Err(format!("unknown edge mode '{other}' (expected torus or border)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Sensor,
    ThirdParty,
}

/// A deployed field. Sensors have ids `0..n`, third parties `n..n+t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub side: f64,
    pub radius: f64,
    /// Third-party discovery reach, a multiple of `radius`.
    pub reach: f64,
    pub edge_mode: EdgeMode,
    pub sensors: Vec<(f64, f64)>,
    pub third_parties: Vec<(f64, f64)>,
    /// Round each sensor comes online (0 for the initial deployment).
    pub deploy_round: Vec<u64>,
    /// Sensor adjacency, sorted, symmetric.
    pub neighbors: Vec<Vec<u32>>,
    /// Per third party: sensors within `reach`, with their distance.
    pub tp_audience: Vec<Vec<(u32, f64)>>,
}

impl Topology {
    /// Builds the graphs for explicit positions.
    pub fn from_positions(
        side: f64,
        radius: f64,
        reach: f64,
        edge_mode: EdgeMode,
        sensors: Vec<(f64, f64)>,
        third_parties: Vec<(f64, f64)>,
    ) -> Result<Self, SimError> {
        if !(side > 0.0 && radius > 0.0 && reach >= radius) {
            return Err(SimError::Invalid(format!("bad field geometry: side {side}, radius {radius}, reach {reach}")));
        }
        for &(x, y) in sensors.iter().chain(third_parties.iter()) {
            if !(0.0..side).contains(&x) || !(0.0..side).contains(&y) {
                return Err(SimError::Invalid(format!("position ({x}, {y}) outside field of side {side}")));
            }
        }
        let metric = Metric { side, mode: edge_mode };
        let grid = Grid::new(&sensors, side, radius);
        let mut neighbors = vec![Vec::new(); sensors.len()];
        for (i, &p) in sensors.iter().enumerate() {
            grid.visit(p, radius, metric, &sensors, |j, _| {
                if j != i as u32 {
                    neighbors[i].push(j);
                }
            });
            neighbors[i].sort_unstable();
        }
        let grid = if reach == radius { grid } else { Grid::new(&sensors, side, reach) };
        let tp_audience = third_parties
            .iter()
            .map(|&p| {
                let mut v = Vec::new();
                grid.visit(p, reach, metric, &sensors, |j, dist| v.push((j, dist)));
                v.sort_unstable_by_key(|e| e.0);
                v
            })
            .collect();
        let n = sensors.len();
        Ok(Topology {
            side,
            radius,
            reach,
            edge_mode,
            sensors,
            third_parties,
            deploy_round: vec![0; n],
            neighbors,
            tp_audience,
        })
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn tp_count(&self) -> usize {
        self.third_parties.len()
    }

    pub fn role_of(&self, id: u64) -> Option<NodeRole> {
        let n = self.sensors.len() as u64;
        if id < n {
            Some(NodeRole::Sensor)
        } else if id < n + self.third_parties.len() as u64 {
            Some(NodeRole::ThirdParty)
        } else {
            None
        }
    }

    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        Metric { side: self.side, mode: self.edge_mode }.dist(a, b)
    }

    /// Sensors within `range` of an arbitrary point.
    pub fn sensors_near(&self, p: (f64, f64), range: f64) -> Vec<(u32, f64)> {
        let metric = Metric { side: self.side, mode: self.edge_mode };
        let grid = Grid::new(&self.sensors, self.side, range);
        let mut out = Vec::new();
        grid.visit(p, range, metric, &self.sensors, |j, d| out.push((j, d)));
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    /// Number of undirected sensor-sensor edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.sensors.len() as f64
    }
}

/// Places `n` sensors and `t` third parties uniformly at random.
pub fn deploy(cfg: &DeploymentConfig, edge_mode: EdgeMode) -> Result<Topology, SimError> {
    cfg.validate()?;
    let side = cfg.side();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut place = |k: usize| -> Vec<(f64, f64)> {
        (0..k).map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side))).collect()
    };
    let sensors = place(cfg.sensors);
    let tps = place(cfg.third_parties);
    Topology::from_positions(side, cfg.radius, cfg.radius * cfg.scenario.reach_multiplier(), edge_mode, sensors, tps)
}

#[derive(Clone, Copy)]
struct Metric {
    side: f64,
    mode: EdgeMode,
}

impl Metric {
    fn axis(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.mode {
            EdgeMode::Torus => d.min(self.side - d),
            EdgeMode::Border => d,
        }
    }

    fn dist(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        self.axis(a.0, b.0).hypot(self.axis(a.1, b.1))
    }
}

/// Uniform bucket grid over the field with cells at least `cell` wide.
struct Grid {
    cells: usize,
    width: f64,
    buckets: Vec<Vec<u32>>,
}

impl Grid {
    fn new(points: &[(f64, f64)], side: f64, cell: f64) -> Self {
        let cells = ((side / cell).floor() as usize).max(1);
        let width = side / cells as f64;
        let mut buckets = vec![Vec::new(); cells * cells];
        for (i, &(x, y)) in points.iter().enumerate() {
            let (cx, cy) = (Self::cell_of(x, width, cells), Self::cell_of(y, width, cells));
            buckets[cy * cells + cx].push(i as u32);
        }
        Grid { cells, width, buckets }
    }

    fn cell_of(v: f64, width: f64, cells: usize) -> usize {
        ((v / width) as usize).min(cells - 1)
    }

    /// Calls `f(index, distance)` for every point within `range` of `p`.
    fn visit<F: FnMut(u32, f64)>(&self, p: (f64, f64), range: f64, metric: Metric, points: &[(f64, f64)], mut f: F) {
        let c = self.cells as i64;
        let (cx, cy) = (Self::cell_of(p.0, self.width, self.cells) as i64, Self::cell_of(p.1, self.width, self.cells) as i64);
        let span = (range / self.width).ceil() as i64;
        let wrap = metric.mode == EdgeMode::Torus;
        let axis = |center: i64| -> Vec<usize> {
            if 2 * span + 1 >= c {
                return (0..c as usize).collect();
            }
            (center - span..=center + span)
                .filter_map(|k| {
                    if wrap {
                        Some(k.rem_euclid(c) as usize)
                    } else if (0..c).contains(&k) {
                        Some(k as usize)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let (xs, ys) = (axis(cx), axis(cy));
        for &y in &ys {
            for &x in &xs {
                for &j in &self.buckets[y * self.cells + x] {
                    let d = metric.dist(p, points[j as usize]);
                    if d <= range {
                        f(j, d);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Scenario;

    fn brute(t: &Topology) -> Vec<Vec<u32>> {
        (0..t.sensors.len())
            .map(|i| {
                (0..t.sensors.len() as u32)
                    .filter(|&j| j as usize != i && t.distance(t.sensors[i], t.sensors[j as usize]) <= t.radius)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_close_nodes_share_one_edge() {
        let t = Topology::from_positions(10.0, 1.0, 1.0, EdgeMode::Border, vec![(1.0, 1.0), (1.5, 1.0)], vec![]).unwrap();
        assert_eq!(t.edge_count(), 1);
        assert_eq!(t.neighbors, vec![vec![1], vec![0]]);
    }

    #[test]
    fn torus_wraps_and_border_does_not() {
        let pts = vec![(0.1, 5.0), (9.9, 5.0)];
        let torus = Topology::from_positions(10.0, 1.0, 1.0, EdgeMode::Torus, pts.clone(), vec![]).unwrap();
        let border = Topology::from_positions(10.0, 1.0, 1.0, EdgeMode::Border, pts, vec![]).unwrap();
        assert_eq!(torus.edge_count(), 1);
        assert_eq!(border.edge_count(), 0);
    }

    #[test]
    fn grid_matches_brute_force() {
        for mode in [EdgeMode::Torus, EdgeMode::Border] {
            let cfg = DeploymentConfig::with_degree(400.0, 300, 20, 8.0, Scenario::C, 4).unwrap();
            let t = deploy(&cfg, mode).unwrap();
            assert_eq!(t.neighbors, brute(&t));
            for (k, aud) in t.tp_audience.iter().enumerate() {
                let expect: Vec<u32> = (0..t.sensors.len() as u32)
                    .filter(|&j| t.distance(t.third_parties[k], t.sensors[j as usize]) <= t.reach)
                    .collect();
                assert_eq!(aud.iter().map(|e| e.0).collect::<Vec<_>>(), expect);
            }
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        let cfg = DeploymentConfig::with_degree(1000.0, 500, 10, 12.0, Scenario::A, 9).unwrap();
        let t = deploy(&cfg, EdgeMode::Torus).unwrap();
        for (i, ns) in t.neighbors.iter().enumerate() {
            for &j in ns {
                assert!(t.neighbors[j as usize].binary_search(&(i as u32)).is_ok());
            }
        }
    }

    #[test]
    fn deployment_is_deterministic() {
        let cfg = DeploymentConfig::with_degree(1000.0, 200, 10, 10.0, Scenario::B, 77).unwrap();
        assert_eq!(deploy(&cfg, EdgeMode::Torus).unwrap(), deploy(&cfg, EdgeMode::Torus).unwrap());
    }

    #[test]
    fn mean_degree_within_three_sigma() {
        // Degree of one node is Binomial(n-1, p) with p = πR²/G on a torus.
        let (n, d) = (2000usize, 20.0);
        let p = d / n as f64;
        let seeds = 30;
        let mut total = 0.0;
        for seed in 0..seeds {
            let cfg = DeploymentConfig::with_degree(n as f64, n, 0, d, Scenario::A, seed).unwrap();
            total += deploy(&cfg, EdgeMode::Torus).unwrap().mean_degree();
        }
        let mean = total / seeds as f64;
        let expect = (n - 1) as f64 * p;
        // Sum of degrees counts every edge twice: Var(mean) = 2 (n-1) p (1-p) / (n * seeds).
        let sigma = (2.0 * (n - 1) as f64 * p * (1.0 - p) / (n as f64 * seeds as f64)).sqrt();
        assert!((mean - expect).abs() < 3.0 * sigma, "mean {mean} vs {expect} ± {sigma}");
    }
}
