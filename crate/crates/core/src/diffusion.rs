//! Diffusion-map embeddings and diffusion distances.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{EigenSystem, RandomWalkOperator};

/// Largest graph on which [`diffusion_distance`] powers `A` explicitly.
pub const MAX_POWERING_NODES: usize = 5_000;
/// Largest diffusion time accepted by [`diffusion_distance`].
pub const MAX_POWERING_TIME: u32 = 16;

/// Node `j` at `(lambda_1^t psi_1(j), ..., lambda_k^t psi_k(j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionEmbedding<T> {
    pub t: u32,
    /// `coords[node][axis]`, `axis = 0` holding eigenvector order 1.
    pub coords: Vec<Vec<T>>,
}

impl<T: Scalar> DiffusionEmbedding<T> {
    pub fn k(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }
}

/// Embeds every node using eigenvector orders `1..=k` at diffusion time `t`.
pub fn embed<T: Scalar>(es: &EigenSystem<T>, t: u32, k: usize) -> Result<DiffusionEmbedding<T>> {
    if t == 0 {
        return Err(Error::InvalidParameter(
            "diffusion time must be >= 1".into(),
        ));
    }
    if k == 0 || k >= es.k() {
        return Err(Error::OutOfRange {
            what: "embedding dimension",
            value: k,
            allowed: format!("1..={}", es.k().saturating_sub(1)),
        });
    }
    let scales: Vec<T> = es.lambda_powers(t).into_iter().take(k).collect();
    let coords = (0..es.n())
        .map(|node| {
            scales
                .iter()
                .enumerate()
                .map(|(axis, &s)| s * es.psi[axis + 1][node])
                .collect()
        })
        .collect();
    Ok(DiffusionEmbedding { t, coords })
}

fn check_node(i: usize, n: usize) -> Result<()> {
    if i < n {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "node index",
            value: i,
            allowed: format!("< {n}"),
        })
    }
}

/// Row `i` of `A^t`, by `t` left multiplications of the indicator.
pub fn transition_row<T: Scalar>(op: &RandomWalkOperator<'_, T>, i: usize, t: u32) -> Vec<T> {
    let n = op.n();
    let mut row = vec![T::zero(); n];
    row[i] = T::one();
    let mut next = vec![T::zero(); n];
    for _ in 0..t {
        op.apply_a_left(&row, &mut next);
        std::mem::swap(&mut row, &mut next);
    }
    row
}

/// Squared diffusion distance `sum_k (A^t_ik - A^t_jk)^2 / d_k`, by explicit powering.
pub fn diffusion_distance<T: Scalar>(
    op: &RandomWalkOperator<'_, T>,
    i: usize,
    j: usize,
    t: u32,
) -> Result<T> {
    let n = op.n();
    check_node(i, n)?;
    check_node(j, n)?;
    if t == 0 || t > MAX_POWERING_TIME {
        return Err(Error::InvalidParameter(format!(
            "explicit powering needs 1 <= t <= {MAX_POWERING_TIME}, got {t}"
        )));
    }
    if n > MAX_POWERING_NODES {
        return Err(Error::InvalidParameter(format!(
            "explicit powering limited to {MAX_POWERING_NODES} nodes, graph has {n}; use the embedding distance"
        )));
    }
    if i == j {
        return Ok(T::zero());
    }
    let ri = transition_row(op, i, t);
    let rj = transition_row(op, j, t);
    Ok(ri
        .iter()
        .zip(&rj)
        .zip(op.degrees())
        .map(|((&a, &b), &d)| (a - b) * (a - b) / d)
        .sum())
}

/// Squared Euclidean distance between the embedded coordinates of `i` and `j`.
pub fn embedding_distance<T: Scalar>(emb: &DiffusionEmbedding<T>, i: usize, j: usize) -> Result<T> {
    check_node(i, emb.n())?;
    check_node(j, emb.n())?;
    Ok(emb.coords[i]
        .iter()
        .zip(&emb.coords[j])
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::spectral::{full_eigensystem, normalize, top_eigenpairs, EigenOptions};

    fn triangle_with_tail() -> WeightedGraph<f64> {
        let w = vec![
            vec![0.0, 2.0, 1.0, 0.0],
            vec![2.0, 0.0, 3.0, 0.0],
            vec![1.0, 3.0, 0.0, 0.5],
            vec![0.0, 0.0, 0.5, 0.0],
        ];
        let ids = (0..4).map(|i| i.to_string()).collect();
        WeightedGraph::from_dense(ids, &w).unwrap().graph
    }

    #[test]
    fn unit_pair_distance_is_two() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let g = WeightedGraph::from_dense(ids, &[vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap()
            .graph;
        let op = normalize(&g).unwrap();
        assert_eq!(diffusion_distance(&op, 0, 1, 1).unwrap(), 2.0);
        assert_eq!(diffusion_distance(&op, 1, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn embedding_axes_and_time_rescaling() {
        let g = triangle_with_tail();
        let op = normalize(&g).unwrap();
        let es = top_eigenpairs(&op, 3, &EigenOptions::default()).unwrap();
        let e1 = embed(&es, 1, 1).unwrap();
        for j in 0..4 {
            assert!((e1.coords[j][0] - es.lambdas[1] * es.psi[1][j]).abs() < 1e-15);
        }
        let e2 = embed(&es, 2, 2).unwrap();
        let e4 = embed(&es, 4, 2).unwrap();
        for j in 0..4 {
            for r in 0..2 {
                let l = es.lambdas[r + 1];
                assert!((e4.coords[j][r] - e2.coords[j][r] * l * l).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn embed_rejects_bad_dimension() {
        let g = triangle_with_tail();
        let op = normalize(&g).unwrap();
        let es = top_eigenpairs(&op, 2, &EigenOptions::default()).unwrap();
        assert!(embed(&es, 1, 2).is_err());
        assert!(embed(&es, 0, 1).is_err());
        assert!(embed(&es, 1, 0).is_err());
    }

    #[test]
    fn range_checks() {
        let g = triangle_with_tail();
        let op = normalize(&g).unwrap();
        assert!(diffusion_distance(&op, 0, 9, 1).is_err());
        assert!(diffusion_distance(&op, 0, 1, 0).is_err());
        assert!(diffusion_distance(&op, 0, 1, MAX_POWERING_TIME + 1).is_err());
        let es = top_eigenpairs(&op, 3, &EigenOptions::default()).unwrap();
        let e = embed(&es, 1, 2).unwrap();
        assert!(embedding_distance(&e, 4, 0).is_err());
        assert_eq!(embedding_distance(&e, 2, 2).unwrap(), 0.0);
    }

    #[test]
    fn full_dimension_matches_powering() {
        let g = triangle_with_tail();
        let op = normalize(&g).unwrap();
        let es = full_eigensystem(&op).unwrap();
        for t in 1..=3 {
            let e = embed(&es, t, 3).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let a = embedding_distance(&e, i, j).unwrap();
                    let b = diffusion_distance(&op, i, j, t).unwrap();
                    assert!((a - b).abs() <= 1e-10 * b.max(1.0), "{a} vs {b}");
                }
            }
        }
    }
}
