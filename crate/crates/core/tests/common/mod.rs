#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geospectral::graph::WeightedGraph;
use geospectral::kernel::{build_kernel, KernelKind, KernelSpec};
use geospectral::synth::{generate, GravityConfig, SyntheticNetwork};

/// Dense eigendecomposition of `D^{-1/2} W D^{-1/2}`, eigenvalues descending.
pub struct Oracle {
    pub degrees: Vec<f64>,
    pub values: Vec<f64>,
    /// Unit eigenvectors of the symmetric conjugate, `vectors[r][node]`.
    pub vectors: Vec<Vec<f64>>,
}

impl Oracle {
    pub fn new(g: &WeightedGraph<f64>) -> Self {
        let w = dense(g);
        let n = w.nrows();
        let degrees: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| w[(i, j)] / (degrees[i] * degrees[j]).sqrt());
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        Self {
            values: order.iter().map(|&r| eig.eigenvalues[r]).collect(),
            vectors: order
                .iter()
                .map(|&r| eig.eigenvectors.column(r).iter().copied().collect())
                .collect(),
            degrees,
        }
    }

    /// Right eigenvector `D^{-1/2} v_r`, signed so its largest-magnitude entry
    /// (lowest index on ties) is positive.
    pub fn psi(&self, r: usize) -> Vec<f64> {
        let mut p: Vec<f64> = self.vectors[r]
            .iter()
            .zip(&self.degrees)
            .map(|(v, d)| v / d.sqrt())
            .collect();
        let mut best = 0;
        for i in 0..p.len() {
            if p[i].abs() > p[best].abs() {
                best = i;
            }
        }
        if p[best] < 0.0 {
            p.iter_mut().for_each(|x| *x = -*x);
        }
        p
    }
}

pub fn dense(g: &WeightedGraph<f64>) -> DMatrix<f64> {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, x) in g.row(i) {
            w[(i, j)] = x;
        }
    }
    w
}

/// `A = D^{-1} W` as a dense matrix.
pub fn dense_walk(g: &WeightedGraph<f64>) -> DMatrix<f64> {
    let mut a = dense(g);
    for i in 0..a.nrows() {
        let d: f64 = a.row(i).sum();
        a.row_mut(i).iter_mut().for_each(|x| *x /= d);
    }
    a
}

/// Squared diffusion distance through a dense matrix power.
pub fn brute_diffusion_distance(g: &WeightedGraph<f64>, i: usize, j: usize, t: u32) -> f64 {
    let a = dense_walk(g);
    let mut p = DMatrix::identity(a.nrows(), a.nrows());
    for _ in 0..t {
        p = &p * &a;
    }
    let w = dense(g);
    (0..a.nrows())
        .map(|k| (p[(i, k)] - p[(j, k)]).powi(2) / w.row(k).sum())
        .sum()
}

/// Sine of the largest principal angle between the spans of two sets of vectors.
pub fn max_principal_sine(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let qa = orthonormal(a);
    let qb = orthonormal(b);
    let resid = &qa - &qb * (qb.transpose() * &qa);
    resid.singular_values().max()
}

fn orthonormal(vs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = vs[0].len();
    let m = DMatrix::from_fn(n, vs.len(), |i, c| vs[c][i]);
    m.qr().q()
}

pub fn random_dense_graph(n: usize, density: f64, seed: u64) -> WeightedGraph<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            // ring keeps every instance connected
            if j == i + 1 || rng.random::<f64>() < density {
                let x = rng.random_range(0.1..2.0);
                w[i][j] = x;
                w[j][i] = x;
            }
        }
    }
    w[0][n - 1] = w[0][n - 1].max(0.5);
    w[n - 1][0] = w[0][n - 1];
    let ids = (0..n).map(|i| format!("v{i}")).collect();
    WeightedGraph::from_dense(ids, &w).unwrap().graph
}

pub fn random_int_graph(n: usize, seed: u64) -> WeightedGraph<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = if rng.random::<f64>() < 0.6 {
                rng.random_range(1..50)
            } else {
                0
            };
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    let ids = (0..n).map(|i| format!("v{i}")).collect();
    WeightedGraph::from_dense(ids, &w).unwrap().graph
}

pub fn gravity(n: usize, seed: u64) -> SyntheticNetwork<f64> {
    generate(&GravityConfig::new(n, seed)).unwrap()
}

pub const MIGRATION_KINDS: [KernelKind; 3] = [
    KernelKind::MigrationSqOverProd,
    KernelKind::MigrationOverSum,
    KernelKind::MigrationOverProd,
];

/// One of several kernels over a gravity network, cycling with `i`.
pub fn kernel_variant(net: &SyntheticNetwork<f64>, i: usize) -> WeightedGraph<f64> {
    let spec = match i % 5 {
        r @ 0..=2 => KernelSpec::new(MIGRATION_KINDS[r]),
        3 => KernelSpec::new(KernelKind::Gaussian).with_param("epsilon", 0.05),
        _ => return net.graph.clone(),
    };
    build_kernel(&net.graph, &net.meta, &spec, None).unwrap()
}

/// A dense background with one small group attached by weak links.
///
/// Returns the graph and the group's node indices.
pub fn weak_community(
    n: usize,
    size: usize,
    coupling: f64,
    seed: u64,
) -> (WeightedGraph<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group: Vec<usize> = (n - size..n).collect();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let inside = group.contains(&i) == group.contains(&j);
            let x = if inside {
                rng.random_range(0.5..1.5)
            } else {
                coupling * rng.random_range(0.5..1.5)
            };
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    let ids = (0..n).map(|i| format!("v{i:02}")).collect();
    (WeightedGraph::from_dense(ids, &w).unwrap().graph, group)
}

pub fn unit(v: &[f64]) -> DVector<f64> {
    let v = DVector::from_column_slice(v);
    let n = v.norm();
    v / n
}
