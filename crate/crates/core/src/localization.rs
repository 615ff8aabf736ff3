//! Eigenvector colorings and localization measures.
//!
//! Localization is measured on the Euclidean unit-normalized right
//! eigenvector: the inverse participation ratio `sum_k v(k)^4`, the fraction
//! of nodes above a fraction of the peak magnitude, and the squared mass
//! captured by each cluster.

use std::collections::BTreeMap;

use crate::cluster::ClusterLabels;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::scalar::Scalar;
use crate::spectral::EigenSystem;

/// Node `k` colored by `psi_order(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coloring<T> {
    pub order: usize,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationReport<T> {
    pub order: usize,
    pub ipr: T,
    pub theta: T,
    pub support_fraction: T,
    /// Clusters by captured squared mass, largest first. Empty without labels.
    pub top_clusters: Vec<(String, T)>,
}

fn check_order<T: Scalar>(es: &EigenSystem<T>, i: usize) -> Result<()> {
    if i < es.k() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "eigenvector order",
            value: i,
            allowed: format!("< {}", es.k()),
        })
    }
}

pub fn coloring<T: Scalar>(es: &EigenSystem<T>, i: usize) -> Result<Coloring<T>> {
    check_order(es, i)?;
    Ok(Coloring {
        order: i,
        values: es.psi[i].clone(),
    })
}

/// Inverse participation ratio of `v` after unit normalization.
///
/// Computed as `sum v^4 / (sum v^2)^2`, so it is invariant to sign and scale.
pub fn ipr<T: Scalar>(v: &[T]) -> T {
    let sq: T = v.iter().map(|x| *x * *x).sum();
    let quart: T = v.iter().map(|x| (*x * *x) * (*x * *x)).sum();
    quart / (sq * sq)
}

/// Fraction of entries with `|v(k)| > theta * max |v|`.
pub fn support_fraction<T: Scalar>(v: &[T], theta: T) -> T {
    let peak = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let above = v.iter().filter(|x| x.abs() > theta * peak).count();
    T::from_usize_lossy(above) / T::from_usize_lossy(v.len())
}

/// Squared mass of the unit-normalized `v` inside each cluster, largest first,
/// ties broken by label.
pub fn captured_mass<T: Scalar>(v: &[T], labels: &ClusterLabels) -> Vec<(String, T)> {
    let total: T = v.iter().map(|x| *x * *x).sum();
    let mut per: BTreeMap<&str, T> = BTreeMap::new();
    for (node, x) in v.iter().enumerate() {
        *per.entry(labels.label(node)).or_insert_with(T::zero) += *x * *x / total;
    }
    let mut ranked: Vec<(String, T)> = per.into_iter().map(|(l, m)| (l.to_string(), m)).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked
}

pub fn localization_report<T: Scalar>(
    es: &EigenSystem<T>,
    i: usize,
    theta: T,
    labels: Option<&ClusterLabels>,
) -> Result<LocalizationReport<T>> {
    check_order(es, i)?;
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "support threshold must lie in (0, 1), got {theta}"
        )));
    }
    let v = &es.psi[i];
    if let Some(l) = labels {
        if l.len() != v.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} nodes",
                l.len(),
                v.len()
            )));
        }
    }
    Ok(LocalizationReport {
        order: i,
        ipr: ipr(v),
        theta,
        support_fraction: support_fraction(v, theta),
        top_clusters: labels.map(|l| captured_mass(v, l)).unwrap_or_default(),
    })
}

/// Histogram of coloring values over `[min, max]`.
pub fn entry_histogram<T: Scalar>(c: &Coloring<T>, bins: usize) -> Result<Histogram<T>> {
    if c.values.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let lo = c.values.iter().copied().fold(T::infinity(), T::min);
    let hi = c.values.iter().copied().fold(T::neg_infinity(), T::max);
    Histogram::build(&c.values, bins, lo, hi)
}
