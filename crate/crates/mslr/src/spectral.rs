//! SVD-backed spectral operators: singular value soft-thresholding, its
//! block-wise version, scale norms and dual norms, and the cheap upper bound
//! on the maximum singular value used to skip SVDs of already-small blocks.

use faer::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::partition::{extract_block, write_block, MultiScalePartition};

/// Singular values below this fraction of the largest are treated as zero
/// when a rank or a subspace is extracted.
pub const RANK_REL_TOL: f64 = 1e-12;

/// Reduced SVD `X = U diag(S) V^T` with `r = min(m, n)` and singular values
/// in descending order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// Number of singular values above the relative noise floor.
    pub fn rank(&self) -> usize {
        numerical_rank(&self.singular_values)
    }

    /// Rebuilds `U diag(S) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, r) = self.u.shape();
        let n = self.v.rows();
        let mut out = DenseMatrix::zeros(m, n);
        for k in 0..r {
            let s = self.singular_values[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let a = s * self.u.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * self.v.get(j, k);
                }
            }
        }
        out
    }
}

pub(crate) fn numerical_rank(singular_values: &[f64]) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > RANK_REL_TOL * top).count()
}

fn to_faer(x: &DenseMatrix) -> Mat<f64> {
    Mat::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j))
}

fn from_faer(x: faer::MatRef<'_, f64>) -> DenseMatrix {
    DenseMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)])
}

/// Reduced SVD of `x`. Convergence failures surface as numerical errors.
pub fn svd(x: &DenseMatrix) -> Result<SvdFactors> {
    let fac = to_faer(x)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let r = x.rows().min(x.cols());
    let sv = fac.S().column_vector();
    Ok(SvdFactors {
        u: from_faer(fac.U()),
        singular_values: (0..r).map(|i| sv[i]).collect(),
        v: from_faer(fac.V()),
    })
}

/// Singular values only, descending.
pub fn singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    to_faer(x)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))
}

/// Singular value soft-threshold: shrinks every singular value by `t`,
/// flooring at zero.
pub fn svt(x: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    check_threshold(t)?;
    Ok(svt_with_nuclear(x, t)?.0)
}

/// Soft-threshold plus the nuclear norm of the result (the sum of the
/// surviving shrunk singular values), which callers get for free.
fn svt_with_nuclear(x: &DenseMatrix, t: f64) -> Result<(DenseMatrix, f64, usize)> {
    let (m, n) = x.shape();
    if m == 1 || n == 1 {
        return Ok(vector_shrink(x, t));
    }
    let fac = svd(x)?;
    let kept = fac.singular_values.iter().take_while(|&&s| s > t).count();
    if kept == 0 {
        return Ok((DenseMatrix::zeros(m, n), 0.0, 0));
    }
    let mut out = DenseMatrix::zeros(m, n);
    let mut nuclear = 0.0;
    for k in 0..kept {
        let s = fac.singular_values[k] - t;
        nuclear += s;
        for i in 0..m {
            let a = s * fac.u.get(i, k);
            if a == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += a * fac.v.get(j, k);
            }
        }
    }
    Ok((out, nuclear, kept))
}

/// A row or column vector has the single singular value `|x|_2`, so its SVT
/// is a radial shrink.
fn vector_shrink(x: &DenseMatrix, t: f64) -> (DenseMatrix, f64, usize) {
    let norm = x.frobenius_norm();
    if norm <= t || norm == 0.0 {
        return (DenseMatrix::zeros(x.rows(), x.cols()), 0.0, 0);
    }
    let factor = (norm - t) / norm;
    let mut out = x.clone();
    out.scale_in_place(factor);
    (out, norm - t, 1)
}

/// Per-call accounting for [`block_svt_detailed`].
#[derive(Debug, Clone, Default)]
pub struct BlockSvtInfo {
    /// Nuclear norm of the thresholded result, summed over blocks, measured
    /// in the same block frame the thresholding ran in.
    pub nuclear_norm: f64,
    /// SVDs actually computed (blocks with both dimensions >= 2).
    pub svds_computed: usize,
    /// SVDs avoided because the upper bound on the top singular value was
    /// already below the threshold.
    pub svds_skipped: usize,
    /// `rank_histogram[r]` = number of blocks whose thresholded rank is `r`.
    pub rank_histogram: Vec<usize>,
}

impl BlockSvtInfo {
    fn record_rank(&mut self, rank: usize) {
        if self.rank_histogram.len() <= rank {
            self.rank_histogram.resize(rank + 1, 0);
        }
        self.rank_histogram[rank] += 1;
    }
}

/// Applies [`svt`] independently to every block of one scale and reassembles
/// the results.
pub fn block_svt(
    x: &DenseMatrix,
    partition: &MultiScalePartition,
    scale_idx: usize,
    t: f64,
) -> Result<DenseMatrix> {
    Ok(block_svt_detailed(x, partition, scale_idx, t)?.0)
}

/// [`block_svt`] plus accounting used for objective traces and the SVD-skip
/// statistics.
pub fn block_svt_detailed(
    x: &DenseMatrix,
    partition: &MultiScalePartition,
    scale_idx: usize,
    t: f64,
) -> Result<(DenseMatrix, BlockSvtInfo)> {
    check_threshold(t)?;
    check_shape(x, partition)?;
    let scale = partition.scale(scale_idx)?;
    let mut info = BlockSvtInfo::default();

    // Whole-matrix closed forms: the noise scale is a single vector block,
    // and 1x1 blocks reduce to the entrywise soft-threshold.
    if scale.is_noise() {
        let (out, nuclear, rank) = vector_shrink(x, t);
        info.nuclear_norm = nuclear;
        info.record_rank(rank);
        return Ok((out, info));
    }
    if scale.block_rows == 1 && scale.block_cols == 1 {
        let mut out = DenseMatrix::zeros(x.rows(), x.cols());
        for (o, &v) in out.data_mut().iter_mut().zip(x.data()) {
            let mag = v.abs();
            if mag > t {
                *o = v.signum() * (mag - t);
                info.nuclear_norm += mag - t;
                info.record_rank(1);
            } else {
                info.record_rank(0);
            }
        }
        return Ok((out, info));
    }

    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for b in partition.blocks(scale_idx)? {
        let block = extract_block(x, &b)?;
        if b.rows == 1 || b.cols == 1 {
            let (shrunk, nuclear, rank) = vector_shrink(&block, t);
            info.nuclear_norm += nuclear;
            info.record_rank(rank);
            if rank > 0 {
                write_block(&mut out, &b, &shrunk)?;
            }
            continue;
        }
        // Skip the SVD outright when even an upper bound on the largest
        // singular value is below the threshold: the result is exactly zero.
        if gram_bound_fast(&block) <= t {
            info.svds_skipped += 1;
            info.record_rank(0);
            continue;
        }
        info.svds_computed += 1;
        let (shrunk, nuclear, rank) = svt_with_nuclear(&block, t).map_err(|e| {
            Error::Numerical(format!(
                "scale {} block ({}, {}): {e}",
                scale.index, b.grid_row, b.grid_col
            ))
        })?;
        info.nuclear_norm += nuclear;
        info.record_rank(rank);
        if rank > 0 {
            write_block(&mut out, &b, &shrunk)?;
        }
    }
    Ok((out, info))
}

/// Upper bound on the largest singular value: the square root of the maximum
/// absolute row sum of the Gram matrix `X X^T`, which dominates its spectral
/// radius.
pub fn sigma_max_upper_bound(x: &DenseMatrix) -> f64 {
    let (m, n) = x.shape();
    if n == 1 {
        // Row i of the Gram matrix is x_i * x, so its absolute sum is
        // |x_i| * |x|_1; no need to form an m x m matrix.
        let l1: f64 = x.data().iter().map(|v| v.abs()).sum();
        let max_abs = x.max_abs();
        return (max_abs * l1).sqrt();
    }
    let mut worst = 0.0f64;
    for i in 0..m {
        let ri = x.row(i);
        let mut sum = 0.0;
        for j in 0..m {
            let rj = x.row(j);
            let mut dot = 0.0;
            for k in 0..n {
                dot += ri[k] * rj[k];
            }
            sum += dot.abs();
        }
        worst = worst.max(sum);
    }
    worst.sqrt()
}

/// Same bound evaluated on the cheaper Gram side. Any matrix norm of
/// `X^T X` bounds the squared top singular value, so transposing first keeps
/// the screen valid while avoiding a huge Gram matrix for tall blocks.
fn gram_bound_fast(x: &DenseMatrix) -> f64 {
    if x.rows() <= x.cols() {
        sigma_max_upper_bound(x)
    } else {
        sigma_max_upper_bound(&x.transpose())
    }
}

/// Block-wise nuclear norm of one scale: the sum of the nuclear norms of all
/// blocks. Reduces to the l1 norm for 1x1 blocks and to the Frobenius norm
/// for the noise scale.
pub fn scale_norm(x: &DenseMatrix, partition: &MultiScalePartition, scale_idx: usize) -> Result<f64> {
    check_shape(x, partition)?;
    let scale = partition.scale(scale_idx)?;
    if scale.is_noise() {
        return Ok(x.frobenius_norm());
    }
    if scale.block_rows == 1 && scale.block_cols == 1 {
        return Ok(x.data().iter().map(|v| v.abs()).sum());
    }
    let mut total = 0.0;
    for b in partition.blocks(scale_idx)? {
        let block = extract_block(x, &b)?;
        if b.rows == 1 || b.cols == 1 {
            total += block.frobenius_norm();
        } else {
            total += singular_values(&block)?.iter().sum::<f64>();
        }
    }
    Ok(total)
}

/// Dual of [`scale_norm`]: the maximum over blocks of the largest singular
/// value. The cheap upper bound screens out blocks that cannot beat the
/// running maximum; survivors get an exact SVD.
pub fn scale_dual_norm(
    x: &DenseMatrix,
    partition: &MultiScalePartition,
    scale_idx: usize,
) -> Result<f64> {
    check_shape(x, partition)?;
    let scale = partition.scale(scale_idx)?;
    if scale.is_noise() {
        return Ok(x.frobenius_norm());
    }
    if scale.block_rows == 1 && scale.block_cols == 1 {
        return Ok(x.max_abs());
    }
    let mut best = 0.0f64;
    for b in partition.blocks(scale_idx)? {
        let block = extract_block(x, &b)?;
        if b.rows == 1 || b.cols == 1 {
            best = best.max(block.frobenius_norm());
            continue;
        }
        if gram_bound_fast(&block) <= best {
            continue;
        }
        let sv = singular_values(&block)?;
        best = best.max(sv.first().copied().unwrap_or(0.0));
    }
    Ok(best)
}

/// Histogram of per-block numerical ranks for one scale of a component.
pub fn scale_rank_histogram(
    x: &DenseMatrix,
    partition: &MultiScalePartition,
    scale_idx: usize,
) -> Result<Vec<usize>> {
    check_shape(x, partition)?;
    let mut hist = vec![0usize];
    for b in partition.blocks(scale_idx)? {
        let block = extract_block(x, &b)?;
        let rank = if b.rows == 1 || b.cols == 1 {
            usize::from(block.frobenius_norm() > 0.0)
        } else {
            numerical_rank(&singular_values(&block)?)
        };
        if hist.len() <= rank {
            hist.resize(rank + 1, 0);
        }
        hist[rank] += 1;
    }
    Ok(hist)
}

fn check_threshold(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput(format!("threshold must be nonnegative, got {t}")));
    }
    Ok(())
}

fn check_shape(x: &DenseMatrix, partition: &MultiScalePartition) -> Result<()> {
    if x.shape() != (partition.rows(), partition.cols()) {
        return Err(Error::ShapeMismatch {
            expected_rows: partition.rows(),
            expected_cols: partition.cols(),
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    Ok(())
}

pub(crate) fn top_singular_triple(x: &DenseMatrix) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (m, n) = x.shape();
    if m == 1 || n == 1 {
        let norm = x.frobenius_norm();
        if norm == 0.0 {
            return Ok((0.0, vec![0.0; m], vec![0.0; n]));
        }
        return if n == 1 {
            let u: Vec<f64> = x.data().iter().map(|v| v / norm).collect();
            Ok((norm, u, vec![1.0]))
        } else {
            let v: Vec<f64> = x.data().iter().map(|v| v / norm).collect();
            Ok((norm, vec![1.0], v))
        };
    }
    let fac = svd(x)?;
    let sigma = fac.singular_values[0];
    let u = (0..m).map(|i| fac.u.get(i, 0)).collect();
    let v = (0..n).map(|j| fac.v.get(j, 0)).collect();
    Ok((sigma, u, v))
}
