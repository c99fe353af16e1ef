//! Spectral quantities of graph Laplacians: the largest eigenvalue and the
//! dilation scale derived from it, the Fiedler vector, and a dense
//! eigendecomposition used as an exact oracle on small graphs.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseOperator;

/// Multiplicative inflation applied to the power-iteration estimate so that
/// every true eigenvalue lands in `[0, 2^N pi]`.
pub const LAMBDA_INFLATION: f64 = 1.0 + 1e-6;

/// Default size cap for [`dense_eigendecomposition`].
pub const DENSE_CAP: usize = 2000;

/// Default seed for the power iteration start vector.
pub const DEFAULT_SEED: u64 = 42;

/// Eigenvalue gap below which the Fiedler vector is reported as ill-defined.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Estimated largest eigenvalue together with the dilation scale `N`, the
/// smallest integer with `lambda_max <= 2^N pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBound {
    pub lambda_max: f64,
    pub dilation: i32,
}

impl SpectralBound {
    pub fn from_lambda_max(lambda_max: f64) -> Result<Self> {
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive and finite, got {lambda_max}"
            )));
        }
        Ok(Self {
            lambda_max,
            dilation: dilation_scale(lambda_max),
        })
    }
}

/// Smallest integer `N` such that `lambda <= 2^N pi`.
pub fn dilation_scale(lambda: f64) -> i32 {
    let mut n = (lambda / PI).log2().ceil() as i32;
    while lambda > 2f64.powi(n) * PI {
        n += 1;
    }
    while lambda <= 2f64.powi(n - 1) * PI {
        n -= 1;
    }
    n
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            seed: DEFAULT_SEED,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn seeded_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Power iteration estimate of the largest eigenvalue, inflated by
/// [`LAMBDA_INFLATION`].
pub fn estimate_lambda_max(
    op: &SparseOperator,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralBound> {
    estimate_lambda_max_with(
        op,
        &PowerOptions {
            tol,
            max_iter,
            ..PowerOptions::default()
        },
    )
}

pub fn estimate_lambda_max_with(op: &SparseOperator, opts: &PowerOptions) -> Result<SpectralBound> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let n = op.dim();
    let mut x = seeded_vector(n, opts.seed);
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    op.apply_into(&x, &mut y);
    let mut theta = dot(&x, &y);
    for _ in 0..opts.max_iter {
        let ny = norm(&y);
        if ny == 0.0 {
            return Err(Error::DegenerateInput(
                "operator annihilates the start vector".into(),
            ));
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        op.apply_into(&x, &mut y);
        let next = dot(&x, &y);
        let converged = (next - theta).abs() < opts.tol * next.abs();
        theta = next;
        if converged {
            return SpectralBound::from_lambda_max(theta * LAMBDA_INFLATION);
        }
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iterations: opts.max_iter,
    })
}

/// Full eigendecomposition `L = U diag(lambda) U^T` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(g(lambda)) U^T f`
    pub fn apply_multiplier(&self, g: impl Fn(f64) -> f64, f: &[f64]) -> Vec<f64> {
        let u = &self.eigenvectors;
        let fv = nalgebra::DVector::from_column_slice(f);
        let mut coeffs = u.tr_mul(&fv);
        for (c, &lam) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= g(lam);
        }
        (u * coeffs).as_slice().to_vec()
    }

    /// `max |U^T U - I|`
    pub fn orthonormality_error(&self) -> f64 {
        let u = &self.eigenvectors;
        let gram = u.tr_mul(u) - DMatrix::<f64>::identity(self.dim(), self.dim());
        gram.amax()
    }

    /// `max |L U - U Lambda|`
    pub fn residual(&self, op: &SparseOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, &lam) in self.eigenvalues.iter().enumerate() {
            let col: Vec<f64> = self.eigenvectors.column(c).iter().copied().collect();
            let lu = op.matrix().matvec(&col);
            for (a, b) in lu.iter().zip(&col) {
                worst = worst.max((a - lam * b).abs());
            }
        }
        worst
    }
}

pub fn dense_eigendecomposition(op: &SparseOperator) -> Result<EigenDecomposition> {
    dense_eigendecomposition_capped(op, DENSE_CAP)
}

pub fn dense_eigendecomposition_capped(
    op: &SparseOperator,
    cap: usize,
) -> Result<EigenDecomposition> {
    let n = op.dim();
    if n > cap {
        return Err(Error::TooLarge { size: n, cap });
    }
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in op.matrix().entries() {
        dense[(i, j)] += v;
    }
    // symmetrize away roundoff from the normalized kinds
    let dense = (&dense + dense.transpose()) * 0.5;
    let eig = SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiedlerMethod {
    /// Dense below [`FiedlerOptions::dense_below`] vertices, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy)]
pub struct FiedlerOptions {
    /// Residual tolerance relative to a bound on the operator norm.
    pub tol: f64,
    /// Outer (inverse) iterations for the iterative method.
    pub max_iter: usize,
    pub method: FiedlerMethod,
    pub dense_below: usize,
    pub seed: u64,
}

impl Default for FiedlerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            method: FiedlerMethod::Auto,
            dense_below: 400,
            seed: DEFAULT_SEED,
        }
    }
}

/// Unit eigenvector of the second-smallest eigenvalue, sign-normalized with
/// [`normalize_sign`].
pub fn fiedler_vector(op: &SparseOperator, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    fiedler_vector_with(
        op,
        &FiedlerOptions {
            tol,
            max_iter,
            ..FiedlerOptions::default()
        },
    )
}

pub fn fiedler_vector_with(op: &SparseOperator, opts: &FiedlerOptions) -> Result<Vec<f64>> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let dense = match opts.method {
        FiedlerMethod::Dense => true,
        FiedlerMethod::Iterative => false,
        FiedlerMethod::Auto => op.dim() < opts.dense_below,
    };
    let mut v = if dense {
        fiedler_dense(op)?
    } else {
        fiedler_inverse_iteration(op, opts)?
    };
    normalize_sign(&mut v);
    Ok(v)
}

/// Flips `v` so that its first entry with magnitude above `1e-10 * max|v|` is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn fiedler_dense(op: &SparseOperator) -> Result<Vec<f64>> {
    let eig = dense_eigendecomposition_capped(op, usize::MAX)?;
    if eig.dim() >= 3 {
        let (l1, l2) = (eig.eigenvalues[1], eig.eigenvalues[2]);
        if (l2 - l1).abs() < DEGENERACY_GAP {
            return Err(Error::NearDegenerate {
                lambda_1: l1,
                lambda_2: l2,
            });
        }
    }
    Ok(eig.eigenvectors.column(1).iter().copied().collect())
}

fn project_out(v: &mut [f64], z: &[f64]) {
    let c = dot(v, z);
    v.iter_mut().zip(z).for_each(|(a, b)| *a -= c * b);
}

/// Conjugate gradients for `L y = b` on the orthogonal complement of `z`.
fn cg_solve(
    op: &SparseOperator,
    z: &[f64],
    b: &[f64],
    x0: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x = x0.to_vec();
    project_out(&mut x, z);
    let mut r = b.to_vec();
    project_out(&mut r, z);
    let bnorm = norm(&r);
    if bnorm == 0.0 {
        return vec![0.0; n];
    }
    let mut ax = vec![0.0; n];
    op.apply_into(&x, &mut ax);
    r.iter_mut().zip(&ax).for_each(|(ri, a)| *ri -= a);
    project_out(&mut r, z);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if rr.sqrt() <= rtol * bnorm {
            break;
        }
        op.apply_into(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, a)| *ri -= alpha * a);
        project_out(&mut r, z);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        p.iter_mut()
            .zip(&r)
            .for_each(|(pi, ri)| *pi = ri + beta * *pi);
    }
    project_out(&mut x, z);
    x
}

/// Modified Gram-Schmidt on the complement of `z`; drops nearly dependent columns.
fn orthonormalize(block: &mut Vec<Vec<f64>>, z: &[f64]) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for mut v in block.drain(..) {
        for _ in 0..2 {
            project_out(&mut v, z);
            for q in &out {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nv = norm(&v);
        if nv > 1e-14 {
            v.iter_mut().for_each(|a| *a /= nv);
            out.push(v);
        }
    }
    *block = out;
}

/// Block inverse iteration on the complement of the known null vector with
/// Rayleigh-Ritz extraction. The block carries one extra vector so that a
/// (near) repeated second eigenvalue shows up in the Ritz values.
fn fiedler_inverse_iteration(op: &SparseOperator, opts: &FiedlerOptions) -> Result<Vec<f64>> {
    let n = op.dim();
    let z = op.null_vector().to_vec();
    let block_size = 3.min(n - 1);
    let op_bound = (0..n)
        .map(|i| op.matrix().row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let cg_max = (20 * n).max(1000);

    let mut block: Vec<Vec<f64>> = (0..block_size)
        .map(|c| seeded_vector(n, opts.seed.wrapping_add(c as u64)))
        .collect();
    orthonormalize(&mut block, &z);
    let mut ritz: Vec<f64> = vec![1.0; block.len()];

    for _ in 0..opts.max_iter {
        let mut next: Vec<Vec<f64>> = block
            .iter()
            .zip(&ritz)
            .map(|(x, &theta)| {
                let guess: Vec<f64> = x.iter().map(|v| v / theta.max(1e-300)).collect();
                cg_solve(op, &z, x, &guess, 1e-13, cg_max)
            })
            .collect();
        orthonormalize(&mut next, &z);
        let m = next.len();
        if m == 0 {
            return Err(Error::DegenerateInput("inverse iteration collapsed".into()));
        }
        let images: Vec<Vec<f64>> = next.iter().map(|v| op.matrix().matvec(v)).collect();
        let h = DMatrix::from_fn(m, m, |a, b| {
            0.5 * (dot(&next[a], &images[b]) + dot(&next[b], &images[a]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        ritz = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let rotate = |src: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for (a, s) in src.iter().enumerate() {
                let c = eig.eigenvectors[(a, col)];
                v.iter_mut().zip(s).for_each(|(vi, si)| *vi += c * si);
            }
            v
        };
        block = order.iter().map(|&c| rotate(&next, c)).collect();
        let lx = rotate(&images, order[0]);
        let residual = lx
            .iter()
            .zip(&block[0])
            .map(|(a, b)| (a - ritz[0] * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tol * op_bound {
            if ritz.len() >= 2 && (ritz[1] - ritz[0]).abs() < DEGENERACY_GAP {
                return Err(Error::NearDegenerate {
                    lambda_1: ritz[0],
                    lambda_2: ritz[1],
                });
            }
            return Ok(block.swap_remove(0));
        }
    }
    Err(Error::NoConvergence {
        what: "fiedler inverse iteration",
        iterations: opts.max_iter,
    })
}
