//! Weighted interaction networks and edge-list ingestion.
//!
//! A [`WeightedGraph`] stores a symmetric nonnegative weight matrix with zero
//! diagonal in compressed sparse row form. Both orientations of every pair
//! are stored, so row `i` lists every neighbour of `i`.

use std::cmp::Ordering;
use std::collections::HashMap;

use log::info;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Weight};

/// One directed observation between two nodes: people migrated, calls placed, seconds talked.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction<T> {
    pub source: String,
    pub target: String,
    pub intensity: T,
    /// Total call duration in seconds, present for mobile-phone records.
    pub duration: Option<T>,
}

impl<T> RawInteraction<T> {
    pub fn new(source: impl Into<String>, target: impl Into<String>, intensity: T) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            intensity,
            duration: None,
        }
    }

    pub fn with_duration(mut self, duration: T) -> Self {
        self.duration = Some(duration);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeta<T> {
    pub id: String,
    pub population: T,
    pub longitude: T,
    pub latitude: T,
    pub cluster_label: Option<String>,
}

impl<T> NodeMeta<T> {
    pub fn new(id: impl Into<String>, population: T, longitude: T, latitude: T) -> Self {
        Self {
            id: id.into(),
            population,
            longitude,
            latitude,
            cluster_label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.cluster_label = Some(label.into());
        self
    }
}

/// Looks up node metadata by id, validating uniqueness and positive populations.
pub(crate) fn meta_index<T: Scalar>(meta: &[NodeMeta<T>]) -> Result<HashMap<&str, &NodeMeta<T>>> {
    let mut index = HashMap::with_capacity(meta.len());
    for m in meta {
        if m.population.is_nan() || m.population <= T::zero() {
            return Err(Error::BadPopulation {
                id: m.id.clone(),
                population: m.population.as_f64(),
            });
        }
        if index.insert(m.id.as_str(), m).is_some() {
            return Err(Error::DuplicateNode(m.id.clone()));
        }
    }
    Ok(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<T>,
}

/// Result of finalizing raw pair weights into a graph.
#[derive(Debug, Clone)]
pub struct Finalized<T> {
    pub graph: WeightedGraph<T>,
    /// Ids of nodes that ended with zero degree and were removed.
    pub dropped: Vec<String>,
}

impl<T: Weight> WeightedGraph<T> {
    /// Builds a graph from unordered pair contributions.
    ///
    /// Contributions to the same pair are summed regardless of orientation,
    /// self-pairs and zero totals are discarded, and zero-degree nodes are
    /// dropped. The summation order is canonical, so permuting `pairs` gives
    /// a bitwise-identical graph.
    pub fn from_pairs(
        ids: Vec<String>,
        pairs: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Finalized<T>> {
        let n = ids.len();
        let mut entries: Vec<(usize, usize, T)> = pairs
            .into_iter()
            .filter(|&(i, j, _)| i != j)
            .map(|(i, j, w)| if i < j { (i, j, w) } else { (j, i, w) })
            .collect();
        if let Some(&(_, j, _)) = entries.iter().find(|e| e.1 >= n) {
            return Err(Error::OutOfRange {
                what: "node index",
                value: j,
                allowed: format!("< {n}"),
            });
        }
        entries.sort_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal))
        });

        let mut summed: Vec<(usize, usize, T)> = Vec::with_capacity(entries.len());
        for (i, j, w) in entries {
            match summed.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 = last.2 + w,
                _ => summed.push((i, j, w)),
            }
        }
        summed.retain(|e| e.2 != T::zero());

        let mut has_edge = vec![false; n];
        for &(i, j, _) in &summed {
            has_edge[i] = true;
            has_edge[j] = true;
        }
        let mut remap = vec![usize::MAX; n];
        let mut kept = Vec::with_capacity(n);
        let mut dropped = Vec::new();
        for (old, id) in ids.into_iter().enumerate() {
            if has_edge[old] {
                remap[old] = kept.len();
                kept.push(id);
            } else {
                dropped.push(id);
            }
        }
        if !dropped.is_empty() {
            info!("dropped {} isolated node(s)", dropped.len());
        }
        let triplets = summed.into_iter().map(|(i, j, w)| (remap[i], remap[j], w));
        Ok(Finalized {
            graph: Self::from_upper(kept, triplets),
            dropped,
        })
    }

    /// Assembles CSR storage from distinct upper-triangle entries (i < j).
    fn from_upper(ids: Vec<String>, upper: impl Iterator<Item = (usize, usize, T)>) -> Self {
        let n = ids.len();
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, j, w) in upper {
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, w) in row {
                col.push(j);
                val.push(w);
            }
            row_ptr.push(col.len());
        }
        let index = ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        Self {
            ids,
            index,
            row_ptr,
            col,
            val,
        }
    }

    /// Builds from a dense symmetric matrix; only the upper triangle is read.
    pub fn from_dense(ids: Vec<String>, w: &[Vec<T>]) -> Result<Finalized<T>> {
        let n = ids.len();
        let mut pairs = Vec::new();
        for (i, row) in w.iter().enumerate().take(n) {
            for (j, &x) in row.iter().enumerate().skip(i + 1).take(n - i - 1) {
                if x < T::zero() {
                    return Err(Error::NegativeIntensity {
                        source_id: ids[i].clone(),
                        target: ids[j].clone(),
                        value: x.to_f64().unwrap_or(f64::NAN),
                    });
                }
                pairs.push((i, j, x));
            }
        }
        Self::from_pairs(ids, pairs)
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Neighbours of `i` with their weights, in increasing index order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[range.clone()]
            .iter()
            .copied()
            .zip(self.val[range].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[range.clone()].binary_search(&j) {
            Ok(pos) => self.val[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn degree(&self, i: usize) -> T {
        self.val[self.row_ptr[i]..self.row_ptr[i + 1]]
            .iter()
            .fold(T::zero(), |acc, &w| acc + w)
    }

    pub fn degrees(&self) -> Vec<T> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Number of unordered pairs with nonzero weight.
    pub fn edge_count(&self) -> usize {
        self.col.len() / 2
    }

    /// Sum over all ordered pairs, i.e. twice the sum over edges.
    pub fn total_mass(&self) -> T {
        self.val.iter().fold(T::zero(), |acc, &w| acc + w)
    }

    /// Upper-triangle entries `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.row(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// `y = W x`, parallel over rows.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = T::zero();
            for (j, w) in self.row(i) {
                acc = acc + w * x[j];
            }
            *yi = acc;
        });
    }

    /// Multiplies every weight by `c`.
    pub fn scaled(&self, c: T) -> WeightedGraph<T> {
        let mut g = self.clone();
        for v in g.val.iter_mut() {
            *v = *v * c;
        }
        g
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.n();
        let mut d = vec![vec![T::zero(); n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, w) in self.row(i) {
                row[j] = w;
            }
        }
        d
    }
}

impl<T: Scalar> WeightedGraph<T> {
    /// Applies `f(i, j, w)` to every edge and keeps the structure.
    ///
    /// Zero results are discarded; if that leaves a node without neighbours
    /// the call fails rather than silently shrinking the graph.
    pub fn map_weights<F>(&self, f: F) -> Result<WeightedGraph<T>>
    where
        F: Fn(usize, usize, T) -> Result<T>,
    {
        let mut pairs = Vec::with_capacity(self.edge_count());
        for (i, j, w) in self.edges() {
            let v = f(i, j, w)?;
            if v < T::zero() || v.is_nan() {
                return Err(Error::NegativeIntensity {
                    source_id: self.ids[i].clone(),
                    target: self.ids[j].clone(),
                    value: v.as_f64(),
                });
            }
            pairs.push((i, j, v));
        }
        let fin = Self::from_pairs(self.ids.clone(), pairs)?;
        if let Some(id) = fin.dropped.first() {
            return Err(Error::ZeroDegree(id.clone()));
        }
        Ok(fin.graph)
    }
}

/// Ingests raw interactions into a finalized graph.
///
/// Node order follows `meta`. Intensities for the same unordered pair are
/// summed, self-interactions are dropped, and nodes left without any
/// interaction are removed and reported in [`Finalized::dropped`].
pub fn ingest_edges<T: Scalar>(
    records: impl IntoIterator<Item = RawInteraction<T>>,
    meta: &[NodeMeta<T>],
) -> Result<Finalized<T>> {
    meta_index(meta)?;
    let position: HashMap<&str, usize> = meta
        .iter()
        .enumerate()
        .map(|(i, m)| (m.id.as_str(), i))
        .collect();
    let mut pairs = Vec::new();
    for rec in records {
        let s = *position
            .get(rec.source.as_str())
            .ok_or_else(|| Error::UnknownNode(rec.source.clone()))?;
        let t = *position
            .get(rec.target.as_str())
            .ok_or_else(|| Error::UnknownNode(rec.target.clone()))?;
        if rec.intensity < T::zero() || rec.intensity.is_nan() {
            return Err(Error::NegativeIntensity {
                source_id: rec.source,
                target: rec.target,
                value: rec.intensity.as_f64(),
            });
        }
        pairs.push((s, t, rec.intensity));
    }
    let ids = meta.iter().map(|m| m.id.clone()).collect();
    WeightedGraph::from_pairs(ids, pairs)
}
