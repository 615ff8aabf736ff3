//! Synthetic gravity-model interaction networks with planted communities.
//!
//! Nodes are scattered uniformly over a rectangle with log-uniform
//! populations. Pair intensity is `P_i P_j / d_ij^exponent`, optionally
//! perturbed by log-normal noise, and pairs inside a planted community are
//! multiplied by that community's boost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterLabels;
use crate::error::{Error, Result};
use crate::graph::{NodeMeta, RawInteraction, WeightedGraph};
use crate::scalar::Scalar;

const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Area {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }
}

impl Area {
    fn mid(&self) -> [f64; 2] {
        [
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Planted {
    pub size: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityConfig {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_population_range")]
    pub population_range: [f64; 2],
    #[serde(default)]
    pub area: Area,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default)]
    pub planted: Vec<Planted>,
    /// Standard deviation of the log of the multiplicative noise; 0 disables it.
    #[serde(default)]
    pub noise: f64,
}

fn default_population_range() -> [f64; 2] {
    [1e3, 1e5]
}

fn default_exponent() -> f64 {
    2.0
}

impl GravityConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            population_range: default_population_range(),
            area: Area::default(),
            exponent: default_exponent(),
            planted: Vec::new(),
            noise: 0.0,
        }
    }

    pub fn with_planted(mut self, size: usize, beta: f64) -> Self {
        self.planted.push(Planted { size, beta });
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 2 {
            return bad(format!("generator needs n >= 2, got {}", self.n));
        }
        let [lo, hi] = self.population_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!(
                "population range [{lo}, {hi}] must be positive and ordered"
            ));
        }
        let a = &self.area;
        if !(a.x_min < a.x_max && a.y_min < a.y_max)
            || ![a.x_min, a.x_max, a.y_min, a.y_max]
                .iter()
                .all(|v| v.is_finite())
        {
            return bad(format!("area {a:?} is empty or unbounded"));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return bad(format!(
                "distance exponent must be positive, got {}",
                self.exponent
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise spread must be >= 0, got {}", self.noise));
        }
        let mut total = 0;
        for p in &self.planted {
            if !(p.beta > 1.0 && p.beta.is_finite()) {
                return bad(format!("planted boost must exceed 1, got {}", p.beta));
            }
            if p.size < 2 {
                return bad(format!(
                    "planted community needs at least 2 nodes, got {}",
                    p.size
                ));
            }
            total += p.size;
        }
        if total > self.n {
            return bad(format!(
                "planted communities cover {total} of {} nodes",
                self.n
            ));
        }
        Ok(())
    }
}

/// Positions and populations of the generated nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub positions: Vec<[f64; 2]>,
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork<T> {
    pub graph: WeightedGraph<T>,
    pub meta: Vec<NodeMeta<T>>,
    pub labels: ClusterLabels,
    /// Node indices of each planted community, in config order.
    pub planted: Vec<Vec<usize>>,
}

impl<T: Scalar> SyntheticNetwork<T> {
    /// Upper-triangle edges as raw interaction records.
    pub fn records(&self) -> Vec<RawInteraction<T>> {
        self.graph
            .edges()
            .map(|(i, j, w)| RawInteraction::new(self.graph.id(i), self.graph.id(j), w))
            .collect()
    }
}

/// Label of a planted community.
pub fn planted_label(c: usize) -> String {
    format!("P{c}")
}

fn quadrant_label(p: [f64; 2], mid: [f64; 2]) -> &'static str {
    match (p[0] >= mid[0], p[1] >= mid[1]) {
        (true, true) => "NE",
        (false, true) => "NW",
        (false, false) => "SW",
        (true, false) => "SE",
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `P_i P_j / d^exponent` for every unordered pair `i < j`, boosted by
/// `beta` inside each community. `community[i]` indexes into `betas`.
pub fn gravity_pairs(
    layout: &Layout,
    exponent: f64,
    community: &[Option<usize>],
    betas: &[f64],
) -> Result<Vec<(usize, usize, f64)>> {
    let n = layout.positions.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(layout.positions[i], layout.positions[j]);
            if d == 0.0 {
                return Err(Error::CoincidentPoints(j));
            }
            let mut m = layout.populations[i] * layout.populations[j] / d.powf(exponent);
            if let (Some(a), Some(b)) = (community[i], community[j]) {
                if a == b {
                    m *= betas[a];
                }
            }
            out.push((i, j, m));
        }
    }
    Ok(out)
}

fn sample_layout(cfg: &GravityConfig, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let a = cfg.area;
    let mut positions: Vec<[f64; 2]> = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let mut tries = 0;
        let p = loop {
            let p = [
                rng.random_range(a.x_min..a.x_max),
                rng.random_range(a.y_min..a.y_max),
            ];
            if positions.iter().all(|q| distance(*q, p) > 0.0) {
                break p;
            }
            tries += 1;
            if tries >= MAX_RESAMPLES {
                return Err(Error::CoincidentPoints(i));
            }
        };
        positions.push(p);
    }
    let (lo, hi) = (cfg.population_range[0].ln(), cfg.population_range[1].ln());
    let populations = (0..cfg.n)
        .map(|_| {
            if hi > lo {
                rng.random_range(lo..hi).exp()
            } else {
                cfg.population_range[0]
            }
        })
        .collect();
    Ok(Layout {
        positions,
        populations,
    })
}

/// Assigns each community the unassigned nodes nearest a random interior
/// center; ties go to the lower index.
fn place_communities(
    cfg: &GravityConfig,
    layout: &Layout,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let a = cfg.area;
    let (w, h) = (a.x_max - a.x_min, a.y_max - a.y_min);
    let mut taken = vec![false; cfg.n];
    let mut out = Vec::with_capacity(cfg.planted.len());
    for p in &cfg.planted {
        let center = [
            a.x_min + w * rng.random_range(0.25..0.75),
            a.y_min + h * rng.random_range(0.25..0.75),
        ];
        let mut free: Vec<usize> = (0..cfg.n).filter(|&i| !taken[i]).collect();
        free.sort_by(|&i, &j| {
            distance(layout.positions[i], center)
                .total_cmp(&distance(layout.positions[j], center))
                .then(i.cmp(&j))
        });
        free.truncate(p.size);
        free.sort_unstable();
        for &i in &free {
            taken[i] = true;
        }
        out.push(free);
    }
    out
}

fn node_id(i: usize, n: usize) -> String {
    let width = (n.max(2) - 1).to_string().len();
    format!("n{i:0width$}")
}

/// Generates a network; identical configs give identical output.
pub fn generate<T: Scalar>(cfg: &GravityConfig) -> Result<SyntheticNetwork<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layout = sample_layout(cfg, &mut rng)?;
    let communities = place_communities(cfg, &layout, &mut rng);

    let mut community = vec![None; cfg.n];
    for (c, members) in communities.iter().enumerate() {
        for &i in members {
            community[i] = Some(c);
        }
    }
    let betas: Vec<f64> = cfg.planted.iter().map(|p| p.beta).collect();
    let mut pairs = gravity_pairs(&layout, cfg.exponent, &community, &betas)?;
    if cfg.noise > 0.0 {
        let dist = LogNormal::new(0.0, cfg.noise)
            .map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?;
        for p in pairs.iter_mut() {
            p.2 *= rng.sample(dist);
        }
    }

    let mid = cfg.area.mid();
    let label_of: Vec<String> = (0..cfg.n)
        .map(|i| match community[i] {
            Some(c) => planted_label(c),
            None => quadrant_label(layout.positions[i], mid).to_string(),
        })
        .collect();
    let meta: Vec<NodeMeta<T>> = (0..cfg.n)
        .map(|i| {
            NodeMeta::new(
                node_id(i, cfg.n),
                T::lit(layout.populations[i]),
                T::lit(layout.positions[i][0]),
                T::lit(layout.positions[i][1]),
            )
            .with_label(label_of[i].clone())
        })
        .collect();
    let ids = meta.iter().map(|m| m.id.clone()).collect();
    let fin = WeightedGraph::from_pairs(ids, pairs.into_iter().map(|(i, j, w)| (i, j, T::lit(w))))?;
    if let Some(id) = fin.dropped.first() {
        return Err(Error::ZeroDegree(id.clone()));
    }
    Ok(SyntheticNetwork {
        graph: fin.graph,
        meta,
        labels: ClusterLabels::new(label_of),
        planted: communities,
    })
}

/// The same generator with no planted communities; every node gets a quadrant label.
pub fn null_model<T: Scalar>(cfg: &GravityConfig) -> Result<SyntheticNetwork<T>> {
    let mut cfg = cfg.clone();
    cfg.planted.clear();
    generate(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{collapse, degrees};

    #[test]
    fn collinear_closed_form() {
        let d = 0.5;
        let layout = Layout {
            positions: vec![[0.0, 0.0], [d, 0.0], [2.0 * d, 0.0]],
            populations: vec![1.0; 3],
        };
        let pairs = gravity_pairs(&layout, 2.0, &[None; 3], &[]).unwrap();
        assert_eq!(pairs[0], (0, 1, 1.0 / (d * d)));
        assert_eq!(pairs[1], (0, 2, 1.0 / (2.0 * d * 2.0 * d)));
        assert_eq!(pairs[2], (1, 2, 1.0 / (d * d)));
    }

    #[test]
    fn coincident_points_rejected() {
        let layout = Layout {
            positions: vec![[0.0, 0.0], [0.0, 0.0]],
            populations: vec![1.0; 2],
        };
        assert!(matches!(
            gravity_pairs(&layout, 2.0, &[None; 2], &[]),
            Err(Error::CoincidentPoints(1))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GravityConfig::new(40, 9).with_planted(6, 20.0);
        let a: SyntheticNetwork<f64> = generate(&cfg).unwrap();
        let b: SyntheticNetwork<f64> = generate(&cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.meta, b.meta);
        assert_eq!(a.labels, b.labels);
        let c: SyntheticNetwork<f64> = generate(&GravityConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn complete_graph_with_planted_labels() {
        let cfg = GravityConfig::new(30, 1)
            .with_planted(5, 4.0)
            .with_planted(4, 8.0);
        let net: SyntheticNetwork<f64> = generate(&cfg).unwrap();
        assert_eq!(net.graph.n(), 30);
        assert_eq!(net.graph.edge_count(), 30 * 29 / 2);
        assert_eq!(net.planted[0].len(), 5);
        assert_eq!(net.planted[1].len(), 4);
        for (c, members) in net.planted.iter().enumerate() {
            for &i in members {
                assert_eq!(net.labels.label(i), planted_label(c));
            }
        }
        assert_eq!(net.records().len(), 30 * 29 / 2);
    }

    #[test]
    fn null_model_quadrants_partition_nodes() {
        let cfg = GravityConfig::new(50, 3).with_planted(5, 20.0);
        let net: SyntheticNetwork<f64> = null_model(&cfg).unwrap();
        let members = net.labels.members();
        assert!(members.keys().all(|l| ["NE", "NW", "SE", "SW"].contains(l)));
        assert_eq!(members.values().map(Vec::len).sum::<usize>(), 50);
        assert!(net.graph.total_mass() > 0.0);
    }

    #[test]
    fn noise_keeps_symmetry_and_positivity() {
        let cfg = GravityConfig {
            noise: 0.5,
            ..GravityConfig::new(20, 4)
        };
        let net: SyntheticNetwork<f64> = generate(&cfg).unwrap();
        for (i, j, w) in net.graph.edges() {
            assert!(w > 0.0);
            assert_eq!(net.graph.weight(j, i), w);
        }
    }

    #[test]
    fn ratio_degree_monotone_in_beta() {
        let mut last = 0.0;
        for beta in [1.5, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let cfg = GravityConfig::new(60, 11).with_planted(8, beta);
            let net: SyntheticNetwork<f64> = generate(&cfg).unwrap();
            let d = degrees(&collapse(&net.graph, &net.labels).unwrap());
            let p = d.labels.iter().position(|l| l == "P0").unwrap();
            let r = d.ratio[p].finite().unwrap();
            assert!(r >= last, "beta {beta}: {r} < {last}");
            last = r;
        }
    }

    #[test]
    fn config_validation() {
        assert!(GravityConfig::new(1, 0).validate().is_err());
        assert!(GravityConfig::new(10, 0)
            .with_planted(3, 1.0)
            .validate()
            .is_err());
        assert!(GravityConfig::new(10, 0)
            .with_planted(11, 2.0)
            .validate()
            .is_err());
        assert!(GravityConfig {
            exponent: 0.0,
            ..GravityConfig::new(10, 0)
        }
        .validate()
        .is_err());
        let cfg = GravityConfig::from_json(
            r#"{"n": 12, "seed": 5, "planted": [{"size": 3, "beta": 20}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.exponent, 2.0);
        assert!(GravityConfig::from_json(r#"{"n": 12, "colour": 1}"#).is_err());
    }
}
