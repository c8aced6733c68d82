//! Sparse matrices and a block eigensolver for the low end of the spectrum
//! of symmetric positive semidefinite operators.
//!
//! The solver is Chebyshev-filtered subspace iteration: each sweep damps the
//! spectrum above the largest current Ritz value with a Chebyshev polynomial,
//! re-orthonormalizes the block and performs a Rayleigh–Ritz projection.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                triplets.push((self.indices[k], r, self.values[k]));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// Upper bound on the spectral norm, `sqrt(‖A‖_1 ‖A‖_∞)`.
    pub fn norm_bound(&self) -> f64 {
        let mut row_max: f64 = 0.0;
        let mut col_sums = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k].abs();
                col_sums[self.indices[k]] += self.values[k].abs();
            }
            row_max = row_max.max(s);
        }
        let col_max = col_sums.iter().fold(0.0f64, |m, &s| m.max(s));
        libm::sqrt(row_max * col_max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] += self.values[k];
            }
        }
        m
    }
}

/// A symmetric positive semidefinite operator applied matrix-free.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Any upper bound on the largest eigenvalue.
    fn upper_bound(&self) -> f64;
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn upper_bound(&self) -> f64 {
        self.norm_bound()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    /// Block size; must exceed `want`.
    pub block: usize,
    /// Number of lowest eigenpairs that must converge.
    pub want: usize,
    /// Degree of the Chebyshev filter.
    pub degree: usize,
    /// Residual tolerance relative to the spectral upper bound.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// The block doubles, up to this size, while the wanted eigenvalues sit
    /// in a cluster that reaches the top of the block.
    pub max_block: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            block: 48,
            want: 20,
            degree: 20,
            tol: 1e-9,
            max_iter: 300,
            seed: 0x5eed,
            max_block: 192,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowSpectrum {
    /// All Ritz values of the final block, ascending.
    pub eigenvalues: Vec<f64>,
    /// Residual norms `‖A x − λ x‖` matching `eigenvalues`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub upper_bound: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Twice-repeated modified Gram–Schmidt; columns that collapse are replaced
/// by fresh random directions.
fn orthonormalize(block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for j in 0..block.len() {
        for _attempt in 0..4 {
            let before = norm(&block[j]);
            for _ in 0..2 {
                for i in 0..j {
                    let (head, tail) = block.split_at_mut(j);
                    let c = dot(&head[i], &tail[0]);
                    axpy(&mut tail[0], -c, &head[i]);
                }
            }
            let after = norm(&block[j]);
            if after > 1e-10 * before && after > 0.0 {
                block[j].iter_mut().for_each(|x| *x /= after);
                break;
            }
            for x in block[j].iter_mut() {
                *x = StandardNormal.sample(rng);
            }
        }
    }
}

/// Lowest eigenvalues of a symmetric positive semidefinite operator.
/// Relative spread under which the head and the block edge count as one
/// cluster.
const CLUSTER_WIDTH: f64 = 1e-2;

pub fn lowest_eigenvalues<A: SymmetricOperator + ?Sized>(op: &A, opts: &EigenOptions) -> Result<LowSpectrum> {
    let n = op.dim();
    let mut b = opts.block.min(n);
    if opts.want >= b && b < n {
        return Err(Error::Oracle(alloc::format!(
            "block size {b} must exceed the number of wanted eigenpairs {}",
            opts.want
        )));
    }
    let upper = op.upper_bound() * 1.01 + f64::MIN_POSITIVE;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mut scratch = vec![0.0; n];
    let want = opts.want.min(b);

    let mut ritz: Vec<f64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    for iteration in 0..=opts.max_iter {
        if iteration > 0 {
            let low = ritz[0].min(0.0);
            let cut = ritz[ritz.len() - 1];
            if cut < upper {
                chebyshev_filter(op, &mut x, opts.degree, low, cut, upper, &mut scratch);
            }
        }
        orthonormalize(&mut x, &mut rng);
        let ax: Vec<Vec<f64>> = x
            .iter()
            .map(|col| {
                let mut y = vec![0.0; n];
                op.apply(col, &mut y);
                y
            })
            .collect();
        let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&x[i], &ax[j]) + dot(&x[j], &ax[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        ritz = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut new_x = vec![vec![0.0; n]; b];
        let mut new_ax = vec![vec![0.0; n]; b];
        for (col, &src) in order.iter().enumerate() {
            for k in 0..b {
                let c = eig.eigenvectors[(k, src)];
                if c != 0.0 {
                    axpy(&mut new_x[col], c, &x[k]);
                    axpy(&mut new_ax[col], c, &ax[k]);
                }
            }
        }
        x = new_x;
        residuals = (0..b)
            .map(|j| {
                let mut r = new_ax[j].clone();
                axpy(&mut r, -ritz[j], &x[j]);
                norm(&r)
            })
            .collect();
        if residuals[..want].iter().all(|&r| r <= opts.tol * upper) {
            return Ok(LowSpectrum {
                eigenvalues: ritz,
                residuals,
                iterations: iteration,
                upper_bound: upper,
            });
        }
        let edge = ritz[b - 1];
        if iteration >= 3 && b < opts.max_block.min(n) && edge - ritz[want - 1] <= CLUSTER_WIDTH * edge.abs() {
            let grown = (2 * b).min(opts.max_block).min(n);
            for _ in b..grown {
                x.push((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
            }
            b = grown;
        }
    }
    Err(Error::Oracle(alloc::format!(
        "eigensolver did not converge in {} sweeps (worst residual {:e})",
        opts.max_iter,
        residuals[..want].iter().fold(0.0f64, |m, &r| m.max(r))
    )))
}

/// Applies the scaled Chebyshev polynomial that is one at `low` and bounded
/// by one in magnitude on `[cut, upper]`.
fn chebyshev_filter<A: SymmetricOperator + ?Sized>(
    op: &A,
    block: &mut [Vec<f64>],
    degree: usize,
    low: f64,
    cut: f64,
    upper: f64,
    scratch: &mut [f64],
) {
    let e = 0.5 * (upper - cut);
    let c = 0.5 * (upper + cut);
    let sigma1 = e / (low - c);
    let n = scratch.len();
    for x in block.iter_mut() {
        let mut prev = x.clone();
        op.apply(&prev, scratch);
        let mut cur: Vec<f64> = (0..n).map(|i| (scratch[i] - c * prev[i]) * sigma1 / e).collect();
        let mut sigma = sigma1;
        for _ in 1..degree {
            let sigma_next = 1.0 / (2.0 / sigma1 - sigma);
            op.apply(&cur, scratch);
            let next: Vec<f64> = (0..n)
                .map(|i| 2.0 * sigma_next / e * (scratch[i] - c * cur[i]) - sigma * sigma_next * prev[i])
                .collect();
            prev = core::mem::replace(&mut cur, next);
            sigma = sigma_next;
        }
        *x = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, if i == 0 || i == n - 1 { 1.0 } else { 2.0 }));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn triplets_merge_and_transpose() {
        let m = CsrMatrix::from_triplets(2, 3, alloc::vec![(0, 1, 1.0), (0, 1, 2.0), (1, 2, -1.0), (1, 0, 0.0)]);
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[(0, 1)], 3.0);
        assert_eq!(m.transpose().to_dense(), d.transpose());
        let mut y = [0.0; 2];
        m.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, [3.0, -1.0]);
    }

    #[test]
    fn norm_bound_dominates_spectrum() {
        let m = path_laplacian(30);
        let eig = SymmetricEigen::new(m.to_dense());
        assert!(eig.eigenvalues.max() <= m.norm_bound() + 1e-12);
    }

    #[test]
    fn path_graph_low_spectrum() {
        // Free-boundary path: eigenvalues 2 - 2 cos(pi k / n).
        let n = 400;
        let m = path_laplacian(n);
        let opts = EigenOptions {
            block: 16,
            want: 8,
            ..EigenOptions::default()
        };
        let s = lowest_eigenvalues(&m, &opts).unwrap();
        for k in 0..8 {
            let exact = 2.0 - 2.0 * libm::cos(core::f64::consts::PI * k as f64 / n as f64);
            assert!(
                (s.eigenvalues[k] - exact).abs() < 1e-9,
                "k {k}: {} vs {exact}",
                s.eigenvalues[k]
            );
        }
    }

    #[test]
    fn degenerate_kernel_is_resolved() {
        // Block diagonal: three disconnected paths give a three-fold kernel.
        let n = 120;
        let p = path_laplacian(n / 3);
        let mut t = Vec::new();
        for blk in 0..3 {
            let d = p.to_dense();
            for i in 0..n / 3 {
                for j in 0..n / 3 {
                    if d[(i, j)] != 0.0 {
                        t.push((blk * n / 3 + i, blk * n / 3 + j, d[(i, j)]));
                    }
                }
            }
        }
        let m = CsrMatrix::from_triplets(n, n, t);
        let s = lowest_eigenvalues(
            &m,
            &EigenOptions {
                block: 12,
                want: 6,
                ..EigenOptions::default()
            },
        )
        .unwrap();
        assert_eq!(s.eigenvalues.iter().filter(|&&l| l < 1e-8).count(), 3);
        assert!(s.eigenvalues[3] > 1e-3);
    }

    #[test]
    fn rejects_block_not_exceeding_want() {
        let m = path_laplacian(50);
        let r = lowest_eigenvalues(
            &m,
            &EigenOptions {
                block: 4,
                want: 4,
                ..EigenOptions::default()
            },
        );
        assert!(matches!(r, Err(Error::Oracle(_))));
    }

    #[test]
    fn block_grows_through_a_cut_cluster() {
        // 3-fold kernel, 40-fold eigenvalue 1, then 2, 3, ...
        let diag: Vec<f64> = (0..200)
            .map(|i| match i {
                0..=2 => 0.0,
                3..=42 => 1.0,
                _ => (i - 41) as f64,
            })
            .collect();
        let m = CsrMatrix::from_triplets(200, 200, diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect());
        let opts = EigenOptions {
            block: 12,
            want: 8,
            max_block: 96,
            ..EigenOptions::default()
        };
        let s = lowest_eigenvalues(&m, &opts).unwrap();
        assert!(s.eigenvalues.len() > 43);
        for k in 0..8 {
            assert!((s.eigenvalues[k] - diag[k]).abs() < 1e-9);
        }
    }
}
