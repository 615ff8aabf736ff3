//! Thick-restart Lanczos for the algebraically largest eigenpairs of a
//! symmetric operator.
//!
//! The basis is kept fully orthonormal (two Gram-Schmidt passes per new
//! vector) and the projected matrix is formed explicitly from stored
//! operator images, so a restart costs no extra operator applications.
//! An invariant subspace is continued with a seeded random direction,
//! which also recovers additional copies of repeated eigenvalues.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::symmetric_eigen;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm, Scalar};

/// A symmetric linear map on `R^dim`.
pub trait SymmetricOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// `y = Op x`
    fn apply(&self, x: &[T], y: &mut [T]);
}

#[derive(Debug, Clone)]
pub struct LanczosOutput<T> {
    /// Descending.
    pub values: Vec<T>,
    /// Orthonormal Ritz vectors matching `values`.
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
    pub matvecs: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosParams<T> {
    pub tol: T,
    /// Checked at every restart, so a run may overshoot by up to one basis fill.
    pub max_matvecs: usize,
    pub seed: u64,
}

fn random_unit<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let mut v: Vec<T> = (0..n)
        .map(|_| T::lit(rng.random_range(-1.0..1.0)))
        .collect();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    v
}

/// Removes the components of `w` along the orthonormal `basis`, twice.
fn orthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            axpy(-c, b, w);
        }
    }
}

/// Finds a unit vector orthogonal to `basis`, or `None` if it spans the space.
fn fresh_direction<T: Scalar>(rng: &mut ChaCha8Rng, basis: &[Vec<T>], n: usize) -> Option<Vec<T>> {
    if basis.len() >= n {
        return None;
    }
    let small = T::lit(1e-3);
    for _ in 0..8 {
        let mut w = random_unit::<T>(rng, n);
        orthogonalize(basis, &mut w);
        let nw = norm(&w);
        if nw > small {
            for x in w.iter_mut() {
                *x /= nw;
            }
            return Some(w);
        }
    }
    None
}

/// Combines columns: returns `sum_j coeff[j] * cols[j]`.
fn combine<T: Scalar>(cols: &[Vec<T>], coeff: &[T]) -> Vec<T> {
    let n = cols[0].len();
    let mut out = vec![T::zero(); n];
    for (c, col) in coeff.iter().zip(cols) {
        if *c != T::zero() {
            axpy(*c, col, &mut out);
        }
    }
    out
}

/// Computes the `k` algebraically largest eigenpairs of `op`.
pub fn largest_eigenpairs<T: Scalar, O: SymmetricOperator<T>>(
    op: &O,
    k: usize,
    params: LanczosParams<T>,
) -> Result<LanczosOutput<T>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::OutOfRange {
            what: "eigenpair count",
            value: k,
            allowed: format!("1..={n}"),
        });
    }
    let m = n.min((2 * k + 1).max(k + 20));
    let keep = (k + (m - k) / 2).min(m - 1).max(k.min(m - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut images: Vec<Vec<T>> = Vec::with_capacity(m);
    // projected matrix H = V^T Op V, grown column by column
    let mut h = vec![vec![T::zero(); m]; m];
    let mut next = Some(random_unit::<T>(&mut rng, n));
    let mut matvecs = 0;
    let mut best: Option<LanczosOutput<T>> = None;

    loop {
        while basis.len() < m {
            let v = match next.take() {
                Some(v) => v,
                None => match fresh_direction(&mut rng, &basis, n) {
                    Some(v) => v,
                    None => break,
                },
            };
            let mut w = vec![T::zero(); n];
            op.apply(&v, &mut w);
            matvecs += 1;
            let j = basis.len();
            basis.push(v);
            for i in 0..=j {
                let hij = dot(&basis[i], &w);
                h[i][j] = hij;
                h[j][i] = hij;
            }
            images.push(w.clone());

            let wn = norm(&w);
            orthogonalize(&basis, &mut w);
            let rn = norm(&w);
            if rn > T::lit(1e-10) * wn.max(T::min_positive_value()) && rn > T::min_positive_value()
            {
                scale_into(&mut w, rn);
                next = Some(w);
            } else {
                next = None;
            }
        }

        let dim = basis.len();
        let proj: Vec<Vec<T>> = h[..dim].iter().map(|row| row[..dim].to_vec()).collect();
        let eig = symmetric_eigen(&proj);
        // descending order of Ritz values
        let order: Vec<usize> = (0..dim).rev().collect();
        let take = k.min(dim);

        let mut values = Vec::with_capacity(take);
        let mut vectors = Vec::with_capacity(take);
        let mut residuals = Vec::with_capacity(take);
        for &idx in order.iter().take(take) {
            let theta = eig.values[idx];
            let y = &eig.vectors[idx];
            let u = combine(&basis, y);
            let mut r = combine(&images, y);
            axpy(-theta, &u, &mut r);
            values.push(theta);
            vectors.push(u);
            residuals.push(norm(&r));
        }
        let worst = residuals.iter().copied().fold(T::zero(), T::max);
        let out = LanczosOutput {
            values,
            vectors,
            residuals,
            matvecs,
        };
        if take == k && worst <= params.tol {
            return Ok(out);
        }
        let improved = match &best {
            None => true,
            Some(b) => {
                let bw = b.residuals.iter().copied().fold(T::zero(), T::max);
                worst < bw
            }
        };
        if improved {
            best = Some(out);
        }
        if matvecs >= params.max_matvecs || dim < m {
            let residuals = best
                .map(|b| b.residuals.iter().map(|r| r.as_f64()).collect())
                .unwrap_or_default();
            return Err(Error::NoConvergence { matvecs, residuals });
        }

        // thick restart: keep the leading Ritz vectors and their images
        let kept: Vec<usize> = order.iter().take(keep).copied().collect();
        let new_basis: Vec<Vec<T>> = kept
            .iter()
            .map(|&idx| combine(&basis, &eig.vectors[idx]))
            .collect();
        let new_images: Vec<Vec<T>> = kept
            .iter()
            .map(|&idx| combine(&images, &eig.vectors[idx]))
            .collect();
        basis = new_basis;
        images = new_images;
        for row in h.iter_mut() {
            row.iter_mut().for_each(|x| *x = T::zero());
        }
        for (a, &ia) in kept.iter().enumerate() {
            for b in 0..=a {
                let hab = dot(&basis[a], &images[b]);
                let hba = dot(&basis[b], &images[a]);
                let avg = (hab + hba) / (T::one() + T::one());
                h[a][b] = avg;
                h[b][a] = avg;
            }
            debug_assert!((h[a][a] - eig.values[ia]).abs() < T::lit(1e-6));
        }
        if let Some(f) = next.as_mut() {
            orthogonalize(&basis, f);
            let nf = norm(f);
            if nf > T::lit(1e-3) {
                scale_into(f, nf);
            } else {
                next = None;
            }
        }
    }
}

fn scale_into<T: Scalar>(w: &mut [T], by: T) {
    for x in w.iter_mut() {
        *x /= by;
    }
}
