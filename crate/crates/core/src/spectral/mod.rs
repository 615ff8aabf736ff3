//! The random-walk operator `A = D^-1 W` and its leading eigenpairs.
//!
//! Eigenpairs are computed on the symmetric conjugate
//! `S = D^-1/2 W D^-1/2`, which is similar to `A`. An orthonormal eigenvector
//! `v` of `S` gives the right eigenvector `psi = D^-1/2 v` and the left
//! eigenvector `phi = D^1/2 v` of `A`, so `Phi^T Psi = I`.

pub mod dense;
pub mod lanczos;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::histogram::Histogram;
use crate::scalar::{norm, Scalar};

use lanczos::{largest_eigenpairs, LanczosParams, SymmetricOperator};

/// Eigenvalue gaps below this are reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
/// Largest graph accepted by [`full_eigensystem`].
pub const MAX_DENSE_NODES: usize = 2_000;

#[derive(Debug, Clone)]
pub struct RandomWalkOperator<'g, T> {
    graph: &'g WeightedGraph<T>,
    degree: Vec<T>,
    inv_sqrt_degree: Vec<T>,
}

/// Builds `A = D^-1 W` with `D_ii = sum_j w_ij`.
pub fn normalize<T: Scalar>(graph: &WeightedGraph<T>) -> Result<RandomWalkOperator<'_, T>> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let degree = graph.degrees();
    if let Some(i) = degree.iter().position(|d| d.is_nan() || *d <= T::zero()) {
        return Err(Error::ZeroDegree(graph.id(i).to_string()));
    }
    let inv_sqrt_degree = degree.iter().map(|d| d.sqrt().recip()).collect();
    Ok(RandomWalkOperator {
        graph,
        degree,
        inv_sqrt_degree,
    })
}

impl<'g, T: Scalar> RandomWalkOperator<'g, T> {
    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn graph(&self) -> &'g WeightedGraph<T> {
        self.graph
    }

    pub fn degrees(&self) -> &[T] {
        &self.degree
    }

    /// `y = A x`
    pub fn apply_a(&self, x: &[T], y: &mut [T]) {
        self.graph.matvec(x, y);
        y.par_iter_mut()
            .zip(&self.degree)
            .for_each(|(yi, &d)| *yi /= d);
    }

    /// `y^T = x^T A`, i.e. `y = W D^-1 x`.
    pub fn apply_a_left(&self, x: &[T], y: &mut [T]) {
        let scaled: Vec<T> = x.iter().zip(&self.degree).map(|(&xi, &d)| xi / d).collect();
        self.graph.matvec(&scaled, y);
    }

    /// `y = S x`
    pub fn apply_s(&self, x: &[T], y: &mut [T]) {
        let scaled: Vec<T> = x
            .iter()
            .zip(&self.inv_sqrt_degree)
            .map(|(&xi, &s)| xi * s)
            .collect();
        self.graph.matvec(&scaled, y);
        y.par_iter_mut()
            .zip(&self.inv_sqrt_degree)
            .for_each(|(yi, &s)| *yi *= s);
    }

    pub fn a_entry(&self, i: usize, j: usize) -> T {
        self.graph.weight(i, j) / self.degree[i]
    }

    /// Row sums of `A`; all equal to one up to rounding.
    pub fn row_sums(&self) -> Vec<T> {
        let ones = vec![T::one(); self.n()];
        let mut y = vec![T::zero(); self.n()];
        self.apply_a(&ones, &mut y);
        y
    }

    /// Dense `A`, for small graphs and diagnostics.
    pub fn dense_a(&self) -> Vec<Vec<T>> {
        let n = self.n();
        let mut a = vec![vec![T::zero(); n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, w) in self.graph.row(i) {
                row[j] = w / self.degree[i];
            }
        }
        a
    }

    /// Dense `S`, for small graphs and diagnostics.
    pub fn dense_s(&self) -> Vec<Vec<T>> {
        let n = self.n();
        let mut s = vec![vec![T::zero(); n]; n];
        for (i, row) in s.iter_mut().enumerate() {
            for (j, w) in self.graph.row(i) {
                row[j] = w * self.inv_sqrt_degree[i] * self.inv_sqrt_degree[j];
            }
        }
        s
    }
}

struct Conjugate<'a, 'g, T>(&'a RandomWalkOperator<'g, T>);

impl<T: Scalar> SymmetricOperator<T> for Conjugate<'_, '_, T> {
    fn dim(&self) -> usize {
        self.0.n()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.0.apply_s(x, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions<T> {
    /// Residual tolerance on unit eigenvectors of `S`.
    pub tol: T,
    /// Operator-application budget; `None` means `300 * k`.
    pub max_matvecs: Option<usize>,
    /// Seed of the starting vector.
    pub seed: u64,
}

impl<T: Scalar> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(1000.0)),
            max_matvecs: None,
            seed: 0,
        }
    }
}

impl<T: Scalar> EigenOptions<T> {
    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Leading eigenvalues of `A` with paired right (`psi`) and left (`phi`) eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    /// Nonincreasing, `lambdas[0] = 1`.
    pub lambdas: Vec<T>,
    /// `psi[r][node]`
    pub psi: Vec<Vec<T>>,
    /// `phi[r][node]`
    pub phi: Vec<Vec<T>>,
    /// `|A psi_r - lambda_r psi_r|_D`, equal to the residual of the unit eigenvector of `S`.
    pub residuals: Vec<T>,
    /// Index pairs `(r, r + 1)` whose eigenvalues differ by less than [`DEGENERACY_GAP`].
    pub degenerate: Vec<(usize, usize)>,
    pub matvecs: usize,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    pub fn n(&self) -> usize {
        self.psi.first().map_or(0, Vec::len)
    }

    /// Whether eigenvalue `r` shares a degeneracy cluster with a neighbour.
    pub fn is_degenerate(&self, r: usize) -> bool {
        self.degenerate.iter().any(|&(a, b)| a == r || b == r)
    }

    /// `lambda_r^t` for `r = 1..k`, the per-axis scales of the diffusion map.
    pub fn lambda_powers(&self, t: u32) -> Vec<T> {
        self.lambdas
            .iter()
            .skip(1)
            .map(|l| l.powi(t as i32))
            .collect()
    }

    /// Number of leading nontrivial axes with `lambda_r^t > delta`.
    pub fn suggested_dimension(&self, t: u32, delta: T) -> usize {
        self.lambda_powers(t)
            .iter()
            .take_while(|p| **p > delta)
            .count()
    }
}

/// Index of the largest-magnitude entry, lowest index on ties.
fn dominant_index<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Computes the `k` largest eigenvalues of `A` and their eigenvector pairs.
///
/// Requires `1 <= k <= n - 1`. Each `psi_r` is signed so that its
/// largest-magnitude entry is positive.
pub fn top_eigenpairs<T: Scalar>(
    op: &RandomWalkOperator<'_, T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<EigenSystem<T>> {
    let n = op.n();
    if k == 0 || k + 1 > n {
        return Err(Error::OutOfRange {
            what: "eigenpair count k",
            value: k,
            allowed: format!("1..={}", n.saturating_sub(1)),
        });
    }
    let out = largest_eigenpairs(
        &Conjugate(op),
        k,
        LanczosParams {
            tol: opts.tol,
            max_matvecs: opts.max_matvecs.unwrap_or(300 * k).max(1),
            seed: opts.seed,
        },
    )?;

    Ok(assemble(op, out.values, out.vectors, out.matvecs))
}

/// Every eigenpair of `A` from a dense decomposition of `S`.
///
/// Cubic in `n`; intended for small graphs and for checks that need the
/// full spectrum. Limited to [`MAX_DENSE_NODES`] nodes.
pub fn full_eigensystem<T: Scalar>(op: &RandomWalkOperator<'_, T>) -> Result<EigenSystem<T>> {
    let n = op.n();
    if n > MAX_DENSE_NODES {
        return Err(Error::InvalidParameter(format!(
            "dense eigendecomposition limited to {MAX_DENSE_NODES} nodes, graph has {n}"
        )));
    }
    let eig = dense::symmetric_eigen(&op.dense_s());
    let values = eig.values.into_iter().rev().collect();
    let vectors = eig.vectors.into_iter().rev().collect();
    Ok(assemble(op, values, vectors, 0))
}

fn assemble<T: Scalar>(
    op: &RandomWalkOperator<'_, T>,
    values: Vec<T>,
    vectors: Vec<Vec<T>>,
    matvecs: usize,
) -> EigenSystem<T> {
    let n = op.n();
    let k = values.len();
    let mut psi = Vec::with_capacity(k);
    let mut phi = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut sv = vec![T::zero(); n];
    for (lambda, mut v) in values.iter().copied().zip(vectors) {
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut p: Vec<T> = v
            .iter()
            .zip(&op.inv_sqrt_degree)
            .map(|(&x, &s)| x * s)
            .collect();
        if p[dominant_index(&p)] < T::zero() {
            p.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
        op.apply_s(&v, &mut sv);
        let r: T = sv
            .iter()
            .zip(&v)
            .map(|(&s, &x)| (s - lambda * x).powi(2))
            .sum::<T>()
            .sqrt();
        residuals.push(r);
        phi.push(
            v.iter()
                .zip(&op.degree)
                .map(|(&x, &d)| x * d.sqrt())
                .collect(),
        );
        psi.push(p);
    }
    let gap = T::lit(DEGENERACY_GAP);
    let degenerate = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]).abs() < gap)
        .map(|(r, _)| (r, r + 1))
        .collect();
    EigenSystem {
        lambdas: values,
        psi,
        phi,
        residuals,
        degenerate,
        matvecs: matvecs + k,
    }
}

/// Histogram of the computed eigenvalues over `[min lambda, 1]`.
pub fn spectrum_histogram<T: Scalar>(es: &EigenSystem<T>, bins: usize) -> Result<Histogram<T>> {
    if es.k() == 0 {
        return Err(Error::InvalidParameter("empty eigensystem".into()));
    }
    let lo = es.lambdas.iter().copied().fold(T::one(), T::min);
    Histogram::build(&es.lambdas, bins, lo, T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dot;

    fn graph(w: Vec<Vec<f64>>) -> WeightedGraph<f64> {
        let ids = (0..w.len()).map(|i| format!("n{i}")).collect();
        WeightedGraph::from_dense(ids, &w).unwrap().graph
    }

    #[test]
    fn unit_pair_is_its_own_walk() {
        let g = graph(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let op = normalize(&g).unwrap();
        assert_eq!(op.degrees(), &[1.0, 1.0]);
        assert_eq!(op.dense_a(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn row_normalization_removes_scale() {
        let g = graph(vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        let op = normalize(&g).unwrap();
        assert_eq!(op.dense_a(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn random_rows_sum_to_one() {
        let mut state = 99u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 6;
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = next();
                w[i][j] = x;
                w[j][i] = x;
            }
        }
        let g = graph(w);
        let op = normalize(&g).unwrap();
        for s in op.row_sums() {
            assert!((s - 1.0).abs() <= 1e-12 * n as f64);
        }
    }

    #[test]
    fn two_node_closed_form() {
        let g = graph(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let op = normalize(&g).unwrap();
        let es = top_eigenpairs(&op, 1, &EigenOptions::default()).unwrap();
        assert!((es.lambdas[0] - 1.0).abs() < 1e-14);
        assert!((es.psi[0][0] - es.psi[0][1]).abs() < 1e-14);
        assert!(es.psi[0][0] > 0.0);
        // the second eigenvalue needs k = n, which is outside 1..=n-1
        assert!(top_eigenpairs(&op, 2, &EigenOptions::default()).is_err());
    }

    #[test]
    fn k_out_of_range() {
        let g = graph(vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let op = normalize(&g).unwrap();
        assert!(matches!(
            top_eigenpairs(&op, 0, &EigenOptions::default()),
            Err(Error::OutOfRange { .. })
        ));
        assert!(top_eigenpairs(&op, 3, &EigenOptions::default()).is_err());
    }

    #[test]
    fn path_graph_pairs_are_biorthonormal() {
        let n = 12;
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n - 1 {
            w[i][i + 1] = 1.0 + i as f64;
            w[i + 1][i] = 1.0 + i as f64;
        }
        let g = graph(w);
        let op = normalize(&g).unwrap();
        let es = top_eigenpairs(&op, n - 1, &EigenOptions::default()).unwrap();
        for i in 0..es.k() {
            for j in 0..es.k() {
                let d = dot(&es.phi[i], &es.psi[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-8);
            }
        }
        let c = es.psi[0][0];
        assert!(es.psi[0].iter().all(|x| (x - c).abs() < 1e-10));
        assert!(es.lambdas.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn disconnected_components_flag_degeneracy() {
        // two disjoint edges: eigenvalue 1 twice
        let g = graph(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        let op = normalize(&g).unwrap();
        let es = top_eigenpairs(&op, 2, &EigenOptions::default()).unwrap();
        assert!((es.lambdas[1] - 1.0).abs() < 1e-10);
        assert_eq!(es.degenerate, vec![(0, 1)]);
    }

    #[test]
    fn spectrum_histogram_examples() {
        let es = EigenSystem::<f64> {
            lambdas: vec![1.0, 0.5],
            psi: vec![vec![1.0], vec![1.0]],
            phi: vec![vec![1.0], vec![1.0]],
            residuals: vec![0.0, 0.0],
            degenerate: vec![],
            matvecs: 0,
        };
        assert_eq!(spectrum_histogram(&es, 2).unwrap().counts, vec![1, 1]);
        assert!(spectrum_histogram(&es, 0).is_err());
        let flat = EigenSystem::<f64> {
            lambdas: vec![0.3, 0.3, 0.3],
            ..es
        };
        let h = spectrum_histogram(&flat, 4).unwrap();
        assert_eq!(h.counts.iter().filter(|c| **c > 0).count(), 1);
        assert_eq!(h.total(), 3);
    }
}
