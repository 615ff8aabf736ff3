//! Cluster-level aggregation of the weight matrix, inside/outside/ratio
//! degrees, and weighted cuts of given partitions.
//!
//! Everything except [`eigenvector_cut_alignment`] is generic over
//! [`Weight`], so integer and rational weights aggregate exactly.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{NodeMeta, WeightedGraph};
use crate::localization::captured_mass;
use crate::scalar::{Scalar, Weight};
use crate::spectral::EigenSystem;

/// Cluster label for every node, indexed like the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<String>,
}

impl ClusterLabels {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels }
    }

    /// Takes each graph node's `cluster_label` from `meta`.
    pub fn from_meta<T, W: Weight>(graph: &WeightedGraph<W>, meta: &[NodeMeta<T>]) -> Result<Self> {
        let by_id: HashMap<&str, Option<&String>> = meta
            .iter()
            .map(|m| (m.id.as_str(), m.cluster_label.as_ref()))
            .collect();
        let labels = graph
            .ids()
            .iter()
            .map(|id| match by_id.get(id.as_str()) {
                Some(Some(l)) => Ok((*l).clone()),
                _ => Err(Error::Unlabeled(id.clone())),
            })
            .collect::<Result<_>>()?;
        Ok(Self { labels })
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.labels
    }

    /// Distinct labels in lexicographic order.
    pub fn clusters(&self) -> Vec<String> {
        let mut c = self.labels.clone();
        c.sort();
        c.dedup();
        c
    }

    /// Nodes grouped by label.
    pub fn members(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (node, l) in self.labels.iter().enumerate() {
            m.entry(l.as_str()).or_default().push(node);
        }
        m
    }
}

/// `S_ab` is the sum of all `W_xy` with `x` in cluster `a` and `y` in cluster `b`.
///
/// The diagonal sums the full intra-cluster submatrix, so every intra-cluster
/// edge appears twice, once per orientation, exactly as in `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseMatrix<T> {
    /// Row and column labels, lexicographic.
    pub labels: Vec<String>,
    pub s: Vec<Vec<T>>,
}

impl<T: Weight> CollapseMatrix<T> {
    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> T {
        self.s.iter().flatten().fold(T::zero(), |acc, &x| acc + x)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }
}

pub fn collapse<T: Weight>(
    graph: &WeightedGraph<T>,
    labels: &ClusterLabels,
) -> Result<CollapseMatrix<T>> {
    if labels.len() != graph.n() {
        return Err(Error::Unlabeled(
            graph
                .ids()
                .get(labels.len())
                .cloned()
                .unwrap_or_else(|| format!("{} labels for {} nodes", labels.len(), graph.n())),
        ));
    }
    let names = labels.clusters();
    let position: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let of: Vec<usize> = (0..graph.n()).map(|x| position[labels.label(x)]).collect();
    let m = names.len();
    let mut s = vec![vec![T::zero(); m]; m];
    for x in 0..graph.n() {
        let a = of[x];
        for (y, w) in graph.row(x) {
            s[a][of[y]] = s[a][of[y]] + w;
        }
    }
    Ok(CollapseMatrix { labels: names, s })
}

/// Ratio degree of a cluster; clusters with no outside weight have no finite ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioDegree<T> {
    Finite(T),
    Isolated,
}

impl<T: Weight> RatioDegree<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            RatioDegree::Finite(r) => Some(r),
            RatioDegree::Isolated => None,
        }
    }

    /// Isolated ranks above every finite ratio.
    fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (RatioDegree::Isolated, RatioDegree::Isolated) => Equal,
            (RatioDegree::Isolated, _) => Greater,
            (_, RatioDegree::Isolated) => Less,
            (RatioDegree::Finite(a), RatioDegree::Finite(b)) => a.partial_cmp(b).unwrap_or(Equal),
        }
    }
}

impl<T: fmt::Display> fmt::Display for RatioDegree<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatioDegree::Finite(r) => write!(f, "{r}"),
            RatioDegree::Isolated => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDegrees<T> {
    pub labels: Vec<String>,
    pub d_in: Vec<T>,
    pub d_out: Vec<T>,
    pub ratio: Vec<RatioDegree<T>>,
}

pub fn degrees<T: Weight>(c: &CollapseMatrix<T>) -> ClusterDegrees<T> {
    let m = c.m();
    let mut d_in = Vec::with_capacity(m);
    let mut d_out = Vec::with_capacity(m);
    let mut ratio = Vec::with_capacity(m);
    for (i, row) in c.s.iter().enumerate() {
        let inside = row[i];
        let outside = row
            .iter()
            .enumerate()
            .filter(|(u, _)| *u != i)
            .fold(T::zero(), |acc, (_, &x)| acc + x);
        d_in.push(inside);
        d_out.push(outside);
        ratio.push(if outside > T::zero() {
            RatioDegree::Finite(inside / outside)
        } else {
            RatioDegree::Isolated
        });
    }
    ClusterDegrees {
        labels: c.labels.clone(),
        d_in,
        d_out,
        ratio,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCluster<T> {
    /// 1-based.
    pub rank: usize,
    pub label: String,
    pub ratio: RatioDegree<T>,
}

/// Clusters by nonincreasing ratio degree, ties by label; at most `top` entries.
pub fn rank_clusters<T: Weight>(d: &ClusterDegrees<T>, top: usize) -> Vec<RankedCluster<T>> {
    let mut order: Vec<usize> = (0..d.labels.len()).collect();
    order.sort_by(|&a, &b| {
        d.ratio[b]
            .rank_cmp(&d.ratio[a])
            .then_with(|| d.labels[a].cmp(&d.labels[b]))
    });
    order
        .into_iter()
        .take(top)
        .enumerate()
        .map(|(r, i)| RankedCluster {
            rank: r + 1,
            label: d.labels[i].clone(),
            ratio: d.ratio[i],
        })
        .collect()
}

/// `sum_i E_w(P_i, complement(P_i))` for a partition into `parts` nonempty parts.
///
/// Each cut edge is counted once from each side, i.e. twice in total.
pub fn weighted_cut<T: Weight>(
    graph: &WeightedGraph<T>,
    partition: &[usize],
    parts: usize,
) -> Result<T> {
    if partition.len() != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} of {} nodes",
            partition.len(),
            graph.n()
        )));
    }
    let mut sizes = vec![0usize; parts];
    for (node, &p) in partition.iter().enumerate() {
        if p >= parts {
            return Err(Error::OutOfRange {
                what: "part index",
                value: p,
                allowed: format!("< {parts} (node {})", graph.id(node)),
            });
        }
        sizes[p] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyPart(empty));
    }
    let mut cut = T::zero();
    for x in 0..graph.n() {
        for (y, w) in graph.row(x) {
            if partition[x] != partition[y] {
                cut = cut + w;
            }
        }
    }
    Ok(cut)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentRow<T> {
    pub order: usize,
    pub best_cluster: String,
    pub captured_mass: T,
    /// 1-based rank of `best_cluster` by ratio degree.
    pub cluster_ratio_rank: usize,
}

/// For each requested eigenvector order, the cluster holding the largest
/// squared mass and that cluster's ratio-degree rank. Order 0 is skipped.
pub fn eigenvector_cut_alignment<T: Scalar>(
    es: &EigenSystem<T>,
    graph: &WeightedGraph<T>,
    labels: &ClusterLabels,
    orders: &[usize],
) -> Result<Vec<AlignmentRow<T>>> {
    let ranking = rank_clusters(&degrees(&collapse(graph, labels)?), usize::MAX);
    let rank_of: HashMap<&str, usize> =
        ranking.iter().map(|r| (r.label.as_str(), r.rank)).collect();
    let mut rows = Vec::new();
    for &order in orders.iter().filter(|&&o| o != 0) {
        if order >= es.k() {
            return Err(Error::OutOfRange {
                what: "eigenvector order",
                value: order,
                allowed: format!("< {}", es.k()),
            });
        }
        let masses = captured_mass(&es.psi[order], labels);
        let (best, mass) = masses.into_iter().next().expect("at least one cluster");
        rows.push(AlignmentRow {
            order,
            cluster_ratio_rank: rank_of[best.as_str()],
            best_cluster: best,
            captured_mass: mass,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn graph(w: Vec<Vec<i64>>) -> WeightedGraph<i64> {
        let ids = (0..w.len()).map(|i| format!("v{i}")).collect();
        WeightedGraph::from_dense(ids, &w).unwrap().graph
    }

    fn labels(ls: &[&str]) -> ClusterLabels {
        ClusterLabels::new(ls.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn single_cluster_holds_total_mass() {
        let g = graph(vec![vec![0, 2, 1], vec![2, 0, 4], vec![1, 4, 0]]);
        let c = collapse(&g, &labels(&["x", "x", "x"])).unwrap();
        assert_eq!(c.s, vec![vec![14]]);
        assert_eq!(c.total(), g.total_mass());
    }

    #[test]
    fn disconnected_clusters_give_diagonal() {
        let g = graph(vec![
            vec![0, 3, 0, 0],
            vec![3, 0, 0, 0],
            vec![0, 0, 0, 5],
            vec![0, 0, 5, 0],
        ]);
        let c = collapse(&g, &labels(&["a", "a", "b", "b"])).unwrap();
        assert_eq!(c.s, vec![vec![6, 0], vec![0, 10]]);
        let d = degrees(&c);
        assert!(d.ratio.iter().all(|r| *r == RatioDegree::Isolated));
    }

    #[test]
    fn ratio_arithmetic() {
        let c = CollapseMatrix {
            labels: vec!["a".into(), "b".into()],
            s: vec![vec![4.0, 2.0], vec![2.0, 6.0]],
        };
        let d = degrees(&c);
        assert_eq!(
            d.ratio,
            vec![RatioDegree::Finite(2.0), RatioDegree::Finite(3.0)]
        );
        let ranked = rank_clusters(&d, 5);
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].label, "b");
        assert_eq!(ranked[1].rank, 2);
    }

    #[test]
    fn ranking_ties_by_label_and_isolated_first() {
        let d = ClusterDegrees {
            labels: vec!["c".into(), "a".into(), "b".into(), "z".into()],
            d_in: vec![1.0, 1.0, 3.0, 1.0],
            d_out: vec![1.0, 1.0, 1.0, 0.0],
            ratio: vec![
                RatioDegree::Finite(1.0),
                RatioDegree::Finite(1.0),
                RatioDegree::Finite(3.0),
                RatioDegree::Isolated,
            ],
        };
        let got: Vec<_> = rank_clusters(&d, 4).into_iter().map(|r| r.label).collect();
        assert_eq!(got, vec!["z", "b", "a", "c"]);
        assert_eq!(rank_clusters(&d, 2).len(), 2);
    }

    #[test]
    fn exact_rational_ratios() {
        let g = graph(vec![
            vec![0, 3, 1, 0],
            vec![3, 0, 0, 2],
            vec![1, 0, 0, 7],
            vec![0, 2, 7, 0],
        ]);
        let rg: WeightedGraph<Ratio<i64>> = WeightedGraph::from_dense(
            g.ids().to_vec(),
            &g.to_dense()
                .iter()
                .map(|r| r.iter().map(|&x| Ratio::from_integer(x)).collect())
                .collect::<Vec<Vec<_>>>(),
        )
        .unwrap()
        .graph;
        let d = degrees(&collapse(&rg, &labels(&["a", "a", "b", "b"])).unwrap());
        // a: inside 6, outside 1 + 2 = 3; b: inside 14, outside 3
        assert_eq!(d.ratio[0], RatioDegree::Finite(Ratio::new(2, 1)));
        assert_eq!(d.ratio[1], RatioDegree::Finite(Ratio::new(14, 3)));
    }

    #[test]
    fn cut_conventions() {
        let g = graph(vec![vec![0, 3], vec![3, 0]]);
        assert_eq!(weighted_cut(&g, &[0, 1], 2).unwrap(), 6);
        let g = graph(vec![
            vec![0, 3, 0, 0],
            vec![3, 0, 0, 0],
            vec![0, 0, 0, 5],
            vec![0, 0, 5, 0],
        ]);
        assert_eq!(weighted_cut(&g, &[0, 0, 1, 1], 2).unwrap(), 0);
    }

    #[test]
    fn cut_errors() {
        let g = graph(vec![vec![0, 3], vec![3, 0]]);
        assert!(matches!(
            weighted_cut(&g, &[0, 0], 2),
            Err(Error::EmptyPart(1))
        ));
        assert!(weighted_cut(&g, &[0, 2], 2).is_err());
        assert!(weighted_cut(&g, &[0], 2).is_err());
    }

    #[test]
    fn unlabeled_node_named() {
        let g = graph(vec![vec![0, 3], vec![3, 0]]);
        let meta = vec![
            NodeMeta::new("v0", 1.0, 0.0, 0.0).with_label("x"),
            NodeMeta::new("v1", 1.0, 0.0, 0.0),
        ];
        let err = ClusterLabels::from_meta(&g, &meta).unwrap_err();
        assert!(matches!(err, Error::Unlabeled(ref id) if id == "v1"));
        let err = collapse(&g, &labels(&["x"])).unwrap_err();
        assert!(matches!(err, Error::Unlabeled(_)));
    }
}
