//! Similarity kernels built from interaction intensities and node metadata.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{meta_index, NodeMeta, RawInteraction, WeightedGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `M_ij^2 / (P_i P_j)`
    MigrationSqOverProd,
    /// `M_ij / (P_i + P_j)`
    MigrationOverSum,
    /// `c M_ij / (P_i P_j)`
    MigrationOverProd,
    /// `exp(-|x_i - x_j|^2 / epsilon)` on node coordinates, all pairs.
    Gaussian,
    /// `exp(-(R_ij Tbar_ij)^2 / width^2)`
    MobileExpRt,
    /// `exp(-(R_ij^a / Nbar_ij^b)^2)`
    MobileExpRn,
    /// `Tbar_ij / R_ij = N_ij / (P_i P_j)`
    MobileCallsOverProd,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::MigrationSqOverProd => "migration_sq_over_prod",
            KernelKind::MigrationOverSum => "migration_over_sum",
            KernelKind::MigrationOverProd => "migration_over_prod",
            KernelKind::Gaussian => "gaussian",
            KernelKind::MobileExpRt => "mobile_exp_rt",
            KernelKind::MobileExpRn => "mobile_exp_rn",
            KernelKind::MobileCallsOverProd => "mobile_calls_over_prod",
        }
    }

    fn is_mobile(self) -> bool {
        matches!(
            self,
            KernelKind::MobileExpRt | KernelKind::MobileExpRn | KernelKind::MobileCallsOverProd
        )
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            KernelKind::Gaussian => &["epsilon", "scale"],
            KernelKind::MobileExpRt => &["width", "scale"],
            KernelKind::MobileExpRn => &["r_exponent", "n_exponent", "scale"],
            _ => &["scale"],
        }
    }
}

/// Kernel selection plus named constants, as read from
/// `{"kind": "...", "params": {"epsilon": ..., "scale": ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: KernelSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.kind.allowed_params();
        for (name, &value) in &self.params {
            let Some(&known) = allowed.iter().find(|a| **a == name.as_str()) else {
                return Err(Error::InvalidParameter(format!(
                    "kernel `{}` has no parameter `{name}`",
                    self.kind.name()
                )));
            };
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::BadKernelParam { name: known, value });
            }
        }
        if self.kind == KernelKind::Gaussian && !self.params.contains_key("epsilon") {
            return Err(Error::InvalidParameter(
                "gaussian kernel needs `epsilon`".to_string(),
            ));
        }
        Ok(())
    }

    fn param<T: Scalar>(&self, name: &str, default: f64) -> T {
        T::lit(self.params.get(name).copied().unwrap_or(default))
    }
}

/// Call totals for one unordered city pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCalls<T> {
    /// `T_ij`, seconds.
    pub seconds: T,
    /// `N_ij`, number of calls.
    pub calls: T,
}

/// Per-pair call totals keyed by `(min id, max id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobileAggregates<T> {
    pairs: BTreeMap<(String, String), PairCalls<T>>,
    population: HashMap<String, T>,
    position: HashMap<String, (T, T)>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl<T: Scalar> MobileAggregates<T> {
    pub fn get(&self, a: &str, b: &str) -> Option<PairCalls<T>> {
        self.pairs.get(&pair_key(a, b)).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, PairCalls<T>)> + '_ {
        self.pairs
            .iter()
            .map(|((a, b), c)| (a.as_str(), b.as_str(), *c))
    }

    /// Average call duration `R = T / N`; `None` when no calls were placed.
    pub fn mean_duration(&self, a: &str, b: &str) -> Option<T> {
        self.get(a, b)
            .filter(|c| c.calls > T::zero())
            .map(|c| c.seconds / c.calls)
    }

    /// `Tbar = T / (P_a P_b)`
    pub fn normalized_seconds(&self, a: &str, b: &str) -> Option<T> {
        let c = self.get(a, b)?;
        Some(c.seconds / (self.population[a] * self.population[b]))
    }

    /// `Nbar = N / (P_a P_b)`
    pub fn normalized_calls(&self, a: &str, b: &str) -> Option<T> {
        let c = self.get(a, b)?;
        Some(c.calls / (self.population[a] * self.population[b]))
    }

    /// Distance between node coordinates, in raw coordinate units.
    pub fn distance(&self, a: &str, b: &str) -> Option<T> {
        let (xa, ya) = *self.position.get(a)?;
        let (xb, yb) = *self.position.get(b)?;
        Some(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt())
    }
}

/// Sums call counts (`intensity`) and durations per unordered city pair.
pub fn compute_mobile_aggregates<T: Scalar>(
    calls: impl IntoIterator<Item = RawInteraction<T>>,
    meta: &[NodeMeta<T>],
) -> Result<MobileAggregates<T>> {
    let index = meta_index(meta)?;
    let mut contributions: BTreeMap<(String, String), Vec<(T, T)>> = BTreeMap::new();
    for rec in calls {
        for id in [&rec.source, &rec.target] {
            if !index.contains_key(id.as_str()) {
                return Err(Error::UnknownNode(id.clone()));
            }
        }
        let duration = rec.duration.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "call record {} -> {} has no duration",
                rec.source, rec.target
            ))
        })?;
        if rec.intensity < T::zero() || rec.intensity.is_nan() {
            return Err(Error::NegativeIntensity {
                source_id: rec.source,
                target: rec.target,
                value: rec.intensity.as_f64(),
            });
        }
        if duration < T::zero() || duration.is_nan() {
            return Err(Error::NegativeDuration {
                source_id: rec.source,
                target: rec.target,
                value: duration.as_f64(),
            });
        }
        if rec.source == rec.target {
            continue;
        }
        contributions
            .entry(pair_key(&rec.source, &rec.target))
            .or_default()
            .push((duration, rec.intensity));
    }
    let mut pairs = BTreeMap::new();
    for (key, mut parts) in contributions {
        parts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let seconds = parts.iter().map(|p| p.0).sum();
        let calls: T = parts.iter().map(|p| p.1).sum();
        if calls > T::zero() {
            pairs.insert(key, PairCalls { seconds, calls });
        }
    }
    Ok(MobileAggregates {
        pairs,
        population: meta.iter().map(|m| (m.id.clone(), m.population)).collect(),
        position: meta
            .iter()
            .map(|m| (m.id.clone(), (m.longitude, m.latitude)))
            .collect(),
    })
}

/// Builds the similarity matrix selected by `spec` over the nodes of `graph`.
///
/// Migration kernels read `M_ij` from the edges of `graph`. The Gaussian
/// kernel ignores the edges and fills every pair from node coordinates.
/// Mobile kernels read per-pair call totals from `aggregates` for every edge
/// of `graph`.
pub fn build_kernel<T: Scalar>(
    graph: &WeightedGraph<T>,
    meta: &[NodeMeta<T>],
    spec: &KernelSpec,
    aggregates: Option<&MobileAggregates<T>>,
) -> Result<WeightedGraph<T>> {
    spec.validate()?;
    let index = meta_index(meta)?;
    let nodes: Vec<&NodeMeta<T>> = graph
        .ids()
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::MissingPopulation(id.clone()))
        })
        .collect::<Result<_>>()?;
    let pop = |i: usize| nodes[i].population;
    let scale: T = spec.param("scale", 1.0);

    match spec.kind {
        KernelKind::MigrationSqOverProd => {
            graph.map_weights(|i, j, m| Ok(scale * m * m / (pop(i) * pop(j))))
        }
        KernelKind::MigrationOverSum => {
            graph.map_weights(|i, j, m| Ok(scale * m / (pop(i) + pop(j))))
        }
        KernelKind::MigrationOverProd => {
            graph.map_weights(|i, j, m| Ok(scale * m / (pop(i) * pop(j))))
        }
        KernelKind::Gaussian => {
            let eps: T = spec.param("epsilon", 1.0);
            let n = graph.n();
            let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx = nodes[i].longitude - nodes[j].longitude;
                    let dy = nodes[i].latitude - nodes[j].latitude;
                    pairs.push((i, j, scale * (-(dx * dx + dy * dy) / eps).exp()));
                }
            }
            let fin = WeightedGraph::from_pairs(graph.ids().to_vec(), pairs)?;
            match fin.dropped.first() {
                Some(id) => Err(Error::ZeroDegree(id.clone())),
                None => Ok(fin.graph),
            }
        }
        kind => {
            debug_assert!(kind.is_mobile());
            let agg = aggregates.ok_or(Error::MissingAggregates(kind.name()))?;
            let width: T = spec.param("width", 0.2);
            let a: T = spec.param("r_exponent", 0.16);
            let b: T = spec.param("n_exponent", 0.26);
            graph.map_weights(|i, j, _| {
                let (si, sj) = (graph.id(i), graph.id(j));
                let c = agg
                    .get(si, sj)
                    .ok_or_else(|| Error::MissingAggregates(kind.name()))?;
                let pp = pop(i) * pop(j);
                let r = c.seconds / c.calls;
                let tbar = c.seconds / pp;
                let nbar = c.calls / pp;
                let w = match kind {
                    KernelKind::MobileExpRt => (-(r * tbar / width).powi(2)).exp(),
                    KernelKind::MobileExpRn => (-(r.powf(a) / nbar.powf(b)).powi(2)).exp(),
                    _ => nbar,
                };
                Ok(scale * w)
            })
        }
    }
}
