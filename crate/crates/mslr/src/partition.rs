//! Multi-scale partitions of a matrix index set.
//!
//! A partition is an ordered list of scales. Each standard scale tiles the
//! M x N index set with blocks of a nominal size, growing geometrically from
//! one scale to the next; blocks at the right/bottom boundary may be ragged
//! when the nominal size does not divide the matrix. An optional final noise
//! scale reshapes the whole matrix into a single MN x 1 column.
//!
//! This module also provides the block reshape operator (extract), its
//! adjoint (embed), and the cyclic shifts used for random cycle spinning.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleKind {
    Standard,
    Noise,
}

/// One scale of a multi-scale partition: a tiling of the index set into
/// `block_rows` x `block_cols` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scale {
    /// 1-based scale label; equals position in the partition plus one.
    pub index: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    pub kind: ScaleKind,
}

impl Scale {
    pub fn is_noise(&self) -> bool {
        self.kind == ScaleKind::Noise
    }

    /// Nominal block area, used for the geometric-growth invariant.
    pub fn block_area(&self) -> usize {
        self.block_rows * self.block_cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    TwoSided,
    OneSided,
}

/// Ordered list of scales tiling an M x N index set.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiScalePartition {
    rows: usize,
    cols: usize,
    mode: PartitionMode,
    scales: Vec<Scale>,
}

/// Location of one block within one scale. Carries both the grid coordinate
/// and the resolved extent so ragged boundary blocks need no special casing
/// downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub scale: usize,
    pub grid_row: usize,
    pub grid_col: usize,
    pub row_start: usize,
    pub col_start: usize,
    /// Actual extent; at most the scale's nominal block size.
    pub rows: usize,
    pub cols: usize,
    pub kind: ScaleKind,
}

/// Cyclic shift offsets for one scale, drawn in `[0, block_rows) x [0, block_cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shift {
    pub row: usize,
    pub col: usize,
}

impl MultiScalePartition {
    /// Builds the geometric scale chain.
    ///
    /// Two-sided mode grows both block dimensions by `factor` per scale until
    /// a single block covers the matrix; one-sided mode grows only the rows
    /// and keeps blocks full-width. The final scale is clamped to the matrix
    /// dimensions. With `include_noise_scale`, an MN x 1 noise scale is
    /// appended.
    pub fn build(
        rows: usize,
        cols: usize,
        mode: PartitionMode,
        min_block: (usize, usize),
        factor: usize,
        include_noise_scale: bool,
    ) -> Result<MultiScalePartition> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if factor < 2 {
            return Err(Error::InvalidInput(format!("factor must be at least 2, got {factor}")));
        }
        let (m1, n1) = min_block;
        if m1 == 0 || n1 == 0 {
            return Err(Error::InvalidInput("min_block dimensions must be positive".into()));
        }
        if m1 > rows || n1 > cols {
            return Err(Error::InvalidInput(format!(
                "min_block {m1}x{n1} larger than matrix {rows}x{cols}"
            )));
        }
        if mode == PartitionMode::OneSided && n1 != cols {
            return Err(Error::InvalidInput(format!(
                "one-sided mode requires full-width blocks: min_block cols {n1} != matrix cols {cols}"
            )));
        }

        let mut dims = Vec::new();
        let (mut m, mut n) = (m1, n1);
        loop {
            dims.push((m, n));
            if m >= rows && n >= cols {
                break;
            }
            m = (m.saturating_mul(factor)).min(rows);
            n = match mode {
                PartitionMode::TwoSided => (n.saturating_mul(factor)).min(cols),
                PartitionMode::OneSided => cols,
            };
        }
        Self::from_scales(rows, cols, mode, &dims, include_noise_scale)
    }

    /// Builds a partition from an explicit chain of block sizes. Used for
    /// application-specific chains such as age-group tilings.
    pub fn from_scales(
        rows: usize,
        cols: usize,
        mode: PartitionMode,
        block_dims: &[(usize, usize)],
        include_noise_scale: bool,
    ) -> Result<MultiScalePartition> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if block_dims.is_empty() {
            return Err(Error::InvalidInput("partition needs at least one scale".into()));
        }
        let mut scales = Vec::with_capacity(block_dims.len() + 1);
        for (i, &(m, n)) in block_dims.iter().enumerate() {
            if m == 0 || n == 0 {
                return Err(Error::InvalidInput("block dimensions must be positive".into()));
            }
            if m > rows || n > cols {
                return Err(Error::InvalidInput(format!(
                    "scale {} block {m}x{n} exceeds matrix {rows}x{cols}",
                    i + 1
                )));
            }
            if i > 0 {
                let prev = block_dims[i - 1];
                if m * n <= prev.0 * prev.1 {
                    return Err(Error::InvalidInput(format!(
                        "block areas must strictly increase: scale {} is {m}x{n} after {}x{}",
                        i + 1,
                        prev.0,
                        prev.1
                    )));
                }
            }
            scales.push(Scale {
                index: i + 1,
                block_rows: m,
                block_cols: n,
                kind: ScaleKind::Standard,
            });
        }
        if include_noise_scale {
            scales.push(Scale {
                index: scales.len() + 1,
                block_rows: rows * cols,
                block_cols: 1,
                kind: ScaleKind::Noise,
            });
        }
        Ok(MultiScalePartition {
            rows,
            cols,
            mode,
            scales,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    pub fn scales(&self) -> &[Scale] {
        &self.scales
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn scale(&self, scale_idx: usize) -> Result<&Scale> {
        self.scales.get(scale_idx).ok_or_else(|| {
            Error::InvalidInput(format!(
                "scale index {scale_idx} out of range for partition with {} scales",
                self.scales.len()
            ))
        })
    }

    /// Number of blocks in the given scale's tiling.
    pub fn block_count(&self, scale_idx: usize) -> Result<usize> {
        let scale = self.scale(scale_idx)?;
        if scale.is_noise() {
            return Ok(1);
        }
        Ok(self.rows.div_ceil(scale.block_rows) * self.cols.div_ceil(scale.block_cols))
    }

    /// Iterates the blocks of one scale in row-major grid order.
    pub fn blocks(&self, scale_idx: usize) -> Result<impl Iterator<Item = BlockIndex> + '_> {
        let scale = self.scale(scale_idx)?.clone();
        let (rows, cols) = (self.rows, self.cols);
        let (grid_rows, grid_cols) = if scale.is_noise() {
            (1, 1)
        } else {
            (rows.div_ceil(scale.block_rows), cols.div_ceil(scale.block_cols))
        };
        Ok((0..grid_rows * grid_cols).map(move |k| {
            let grid_row = k / grid_cols;
            let grid_col = k % grid_cols;
            if scale.is_noise() {
                BlockIndex {
                    scale: scale_idx,
                    grid_row,
                    grid_col,
                    row_start: 0,
                    col_start: 0,
                    rows: rows * cols,
                    cols: 1,
                    kind: ScaleKind::Noise,
                }
            } else {
                let row_start = grid_row * scale.block_rows;
                let col_start = grid_col * scale.block_cols;
                BlockIndex {
                    scale: scale_idx,
                    grid_row,
                    grid_col,
                    row_start,
                    col_start,
                    rows: scale.block_rows.min(rows - row_start),
                    cols: scale.block_cols.min(cols - col_start),
                    kind: ScaleKind::Standard,
                }
            }
        }))
    }

    fn check_block(&self, b: &BlockIndex) -> Result<()> {
        let ok = match b.kind {
            ScaleKind::Noise => b.rows == self.rows * self.cols && b.cols == 1,
            ScaleKind::Standard => {
                b.row_start + b.rows <= self.rows && b.col_start + b.cols <= self.cols
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "block at grid ({}, {}) with extent {}x{} out of range for {}x{} matrix",
                b.grid_row, b.grid_col, b.rows, b.cols, self.rows, self.cols
            )))
        }
    }
}

/// Extracts block `b` from `x` as its own matrix. For the noise scale this
/// is the row-major flattening of the whole matrix into an MN x 1 column.
pub fn extract_block(x: &DenseMatrix, b: &BlockIndex) -> Result<DenseMatrix> {
    match b.kind {
        ScaleKind::Noise => {
            if b.rows != x.rows() * x.cols() {
                return Err(Error::InvalidInput(
                    "noise block extent does not match matrix size".into(),
                ));
            }
            DenseMatrix::from_vec(b.rows, 1, x.data().to_vec())
        }
        ScaleKind::Standard => {
            if b.row_start + b.rows > x.rows() || b.col_start + b.cols > x.cols() {
                return Err(Error::InvalidInput(format!(
                    "block ({}, {}) out of range for {}x{} matrix",
                    b.grid_row,
                    b.grid_col,
                    x.rows(),
                    x.cols()
                )));
            }
            let mut data = Vec::with_capacity(b.rows * b.cols);
            for r in 0..b.rows {
                let row = x.row(b.row_start + r);
                data.extend_from_slice(&row[b.col_start..b.col_start + b.cols]);
            }
            DenseMatrix::from_vec(b.rows, b.cols, data)
        }
    }
}

/// Adjoint of [`extract_block`]: places `block` into an otherwise-zero
/// `rows` x `cols` matrix.
pub fn embed_block(block: &DenseMatrix, b: &BlockIndex, rows: usize, cols: usize) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(rows, cols);
    write_block(&mut out, b, block)?;
    Ok(out)
}

/// Writes `block` into `out` at block position `b`. Blocks of one scale are
/// disjoint, so reassembly is a plain scatter.
pub(crate) fn write_block(out: &mut DenseMatrix, b: &BlockIndex, block: &DenseMatrix) -> Result<()> {
    if block.shape() != (b.rows, b.cols) {
        return Err(Error::ShapeMismatch {
            expected_rows: b.rows,
            expected_cols: b.cols,
            rows: block.rows(),
            cols: block.cols(),
        });
    }
    match b.kind {
        ScaleKind::Noise => {
            if b.rows != out.rows() * out.cols() {
                return Err(Error::InvalidInput(
                    "noise block extent does not match matrix size".into(),
                ));
            }
            out.data_mut().copy_from_slice(block.data());
        }
        ScaleKind::Standard => {
            if b.row_start + b.rows > out.rows() || b.col_start + b.cols > out.cols() {
                return Err(Error::InvalidInput(format!(
                    "block ({}, {}) out of range for {}x{} matrix",
                    b.grid_row,
                    b.grid_col,
                    out.rows(),
                    out.cols()
                )));
            }
            let cols = out.cols();
            for r in 0..b.rows {
                let dst_off = (b.row_start + r) * cols + b.col_start;
                out.data_mut()[dst_off..dst_off + b.cols]
                    .copy_from_slice(block.row(r));
            }
        }
    }
    Ok(())
}

/// Moves entry (r, c) to ((r + dr) mod M, (c + dc) mod N).
pub fn cyclic_shift(x: &DenseMatrix, shift: Shift) -> DenseMatrix {
    let (rows, cols) = x.shape();
    let dr = shift.row % rows;
    let dc = shift.col % cols;
    if dr == 0 && dc == 0 {
        return x.clone();
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        let dest_r = (r + dr) % rows;
        let src = x.row(r);
        for c in 0..cols {
            let dest_c = (c + dc) % cols;
            out.data_mut()[dest_r * cols + dest_c] = src[c];
        }
    }
    out
}

/// Inverse of [`cyclic_shift`] with the same offsets.
pub fn cyclic_unshift(x: &DenseMatrix, shift: Shift) -> DenseMatrix {
    let (rows, cols) = x.shape();
    let dr = shift.row % rows;
    let dc = shift.col % cols;
    cyclic_shift(
        x,
        Shift {
            row: (rows - dr) % rows,
            col: (cols - dc) % cols,
        },
    )
}

/// Draws offsets uniformly over one block period of the scale. Deterministic
/// given the generator state.
pub fn draw_shift<R: Rng>(scale: &Scale, rng: &mut R) -> Shift {
    Shift {
        row: rng.gen_range(0..scale.block_rows),
        col: rng.gen_range(0..scale.block_cols),
    }
}

/// Serializable partition description, the CLI-facing form.
///
/// Also parses from a compact string: `two-sided:1x1:2`, `one-sided:4x64:2`,
/// with an optional `:noise` suffix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub min_block: (usize, usize),
    pub factor: usize,
    #[serde(default)]
    pub include_noise_scale: bool,
}

impl PartitionSpec {
    pub fn build(&self, rows: usize, cols: usize) -> Result<MultiScalePartition> {
        MultiScalePartition::build(
            rows,
            cols,
            self.mode,
            self.min_block,
            self.factor,
            self.include_noise_scale,
        )
    }

    pub fn parse(s: &str) -> Result<PartitionSpec> {
        let err = |msg: &str| {
            Error::InvalidInput(format!(
                "bad partition spec '{s}': {msg} (expected e.g. 'two-sided:1x1:2[:noise]')"
            ))
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(err("expected 3 or 4 ':'-separated fields"));
        }
        let mode = match parts[0] {
            "two-sided" => PartitionMode::TwoSided,
            "one-sided" => PartitionMode::OneSided,
            other => return Err(err(&format!("unknown mode '{other}'"))),
        };
        let (m_str, n_str) = parts[1]
            .split_once('x')
            .ok_or_else(|| err("min block must look like '1x1'"))?;
        let min_block = (
            m_str.parse().map_err(|_| err("bad min block rows"))?,
            n_str.parse().map_err(|_| err("bad min block cols"))?,
        );
        let factor = parts[2].parse().map_err(|_| err("bad factor"))?;
        let include_noise_scale = match parts.get(3) {
            None => false,
            Some(&"noise") => true,
            Some(other) => return Err(err(&format!("unknown suffix '{other}'"))),
        };
        Ok(PartitionSpec {
            mode,
            min_block,
            factor,
            include_noise_scale,
        })
    }
}

pub use self::validate::block_belongs;

mod validate {
    use super::*;

    /// Checks that a block index is consistent with a partition; used by
    /// operations that take blocks and partitions from different sources.
    pub fn block_belongs(partition: &MultiScalePartition, b: &BlockIndex) -> Result<()> {
        partition.scale(b.scale)?;
        partition.check_block(b)
    }
}
