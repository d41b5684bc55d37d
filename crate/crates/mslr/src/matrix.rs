//! Dense row-major matrix type with elementary algebra and file I/O.
//!
//! `DenseMatrix` is the data carrier for every other module. Storage is
//! row-major (`data[r * cols + c]`), which matches the stride pattern of
//! block extraction. Two on-disk formats are supported:
//!
//! - **CSV**: `.` decimal, `,` separator, no header. Values are written with
//!   Rust's shortest round-trip formatting, so CSV round trips are exact.
//! - **mslr-binary**: 4-byte ASCII magic `MSLR`, `u32` rows, `u32` cols
//!   (little-endian), then rows x cols little-endian `f64` values in
//!   row-major order. Round trips are bit-exact on every platform.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 4] = b"MSLR";

/// Matrix file formats understood by [`load_matrix`] and [`save_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    MslrBinary,
}

impl MatrixFormat {
    /// Picks a format from the file extension: `.csv` is CSV, anything else
    /// is the binary format.
    pub fn from_path(path: &Path) -> MatrixFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::MslrBinary,
        }
    }
}

/// Dense M x N matrix of `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix. Dimensions must be positive.
    pub fn zeros(rows: usize, cols: usize) -> DenseMatrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data; the length must match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<DenseMatrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Convenience constructor from row slices; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> DenseMatrix {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged row in from_rows");
            data.extend_from_slice(row);
        }
        DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = value;
    }

    /// Row `r` as a contiguous slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Plain matrix product; shapes must be compatible.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected_rows: self.cols,
                expected_cols: other.cols,
                rows: other.rows,
                cols: other.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// In-place `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &DenseMatrix) -> Result<()> {
        self.check_same_shape(other)?;
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += a * s;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    pub(crate) fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                rows: other.rows,
                cols: other.cols,
            });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Entrywise `a*X + b*Y`; shapes must match.
pub fn axpby(a: f64, x: &DenseMatrix, b: f64, y: &DenseMatrix) -> Result<DenseMatrix> {
    x.check_same_shape(y)?;
    let data = x
        .data
        .iter()
        .zip(&y.data)
        .map(|(xv, yv)| a * xv + b * yv)
        .collect();
    DenseMatrix::from_vec(x.rows, x.cols, data)
}

/// Loads a matrix from disk, inferring dimensions from the file.
///
/// Returns a parse error with a line number on malformed CSV rows and a
/// validation error on any non-finite value.
pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DenseMatrix> {
    match format {
        MatrixFormat::Csv => load_csv(path),
        MatrixFormat::MslrBinary => load_binary(path),
    }
}

/// Writes a matrix to disk in the named format.
pub fn save_matrix(x: &DenseMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => save_csv(x, path),
        MatrixFormat::MslrBinary => save_binary(x, path),
    }
}

fn load_csv(path: &Path) -> Result<DenseMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, line_no, format!("cannot parse '{}' as a number", field.trim()))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(path, line_no, format!("non-finite value '{value}'")));
            }
            data.push(value);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(expected) if expected != count => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {expected} fields, found {count}"),
                ));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    DenseMatrix::from_vec(rows, cols, data)
}

fn save_csv(x: &DenseMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let mut line = String::new();
    for r in 0..x.rows {
        line.clear();
        for c in 0..x.cols {
            if c > 0 {
                line.push(',');
            }
            // Shortest representation that parses back to the same f64.
            line.push_str(&format!("{}", x.get(r, c)));
        }
        line.push('\n');
        writer.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn load_binary(path: &Path) -> Result<DenseMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != BINARY_MAGIC {
        return Err(Error::parse(path, 1, "bad magic, not an mslr-binary file"));
    }
    let mut word = [0u8; 4];
    reader.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
    let rows = u32::from_le_bytes(word) as usize;
    reader.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
    let cols = u32::from_le_bytes(word) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(path, 1, format!("invalid dimensions {rows}x{cols}")));
    }
    let count = rows * cols;
    let mut bytes = vec![0u8; count * 8];
    reader.read_exact(&mut bytes).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let value = f64::from_le_bytes(chunk.try_into().unwrap());
        if !value.is_finite() {
            return Err(Error::parse(
                path,
                1,
                format!("non-finite value at entry {} ({}, {})", i, i / cols, i % cols),
            ));
        }
        data.push(value);
    }
    DenseMatrix::from_vec(rows, cols, data)
}

fn save_binary(x: &DenseMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    writer.write_all(BINARY_MAGIC).map_err(|e| Error::io(path, e))?;
    writer
        .write_all(&(x.rows as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    writer
        .write_all(&(x.cols as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    for v in &x.data {
        writer.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-10.0..10.0))
    }

    #[test]
    fn csv_parse_basic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "1,2\n3,4\n").unwrap();
        let m = load_matrix(&path, MatrixFormat::Csv).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn csv_ragged_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "1,2\n3\n").unwrap();
        let err = load_matrix(&path, MatrixFormat::Csv).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "1,NaN\n").unwrap();
        assert!(load_matrix(&path, MatrixFormat::Csv).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DenseMatrix::from_rows(&[&[0.1]]);
        save_matrix(&m, &path, MatrixFormat::Csv).unwrap();
        let back = load_matrix(&path, MatrixFormat::Csv).unwrap();
        assert!((back.get(0, 0) - 0.1).abs() <= 1e-15 * 0.1);
        assert_eq!(back.get(0, 0), 0.1);
    }

    #[test]
    fn binary_layout_matches_spec() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        save_matrix(&m, &path, MatrixFormat::MslrBinary).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"MSLR");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 12 + 6 * 8);
        assert_eq!(
            f64::from_le_bytes(bytes[12..20].try_into().unwrap()),
            1.0
        );
    }

    #[test]
    fn binary_round_trip_bit_exact_random() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..20 {
            let m = random_matrix(1 + (seed as usize % 7), 1 + (seed as usize % 5), seed);
            let path = dir.path().join(format!("m{seed}.bin"));
            save_matrix(&m, &path, MatrixFormat::MslrBinary).unwrap();
            let back = load_matrix(&path, MatrixFormat::MslrBinary).unwrap();
            assert_eq!(back.shape(), m.shape());
            for (a, b) in m.data().iter().zip(back.data()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(load_matrix(&path, MatrixFormat::MslrBinary).is_err());
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let path = Path::new("/nonexistent-dir-mslr/m.bin");
        let m = DenseMatrix::zeros(1, 1);
        assert!(matches!(
            save_matrix(&m, path, MatrixFormat::MslrBinary),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn axpby_basics() {
        let x = DenseMatrix::from_rows(&[&[1.0, -2.0], &[3.0, 4.0]]);
        let y = DenseMatrix::from_rows(&[&[5.0, 6.0], &[-7.0, 8.0]]);

        let id = axpby(1.0, &x, 0.0, &y).unwrap();
        assert_eq!(id, x);

        let zero = axpby(1.0, &x, -1.0, &x).unwrap();
        assert!(zero.data().iter().all(|v| *v == 0.0));

        let a = DenseMatrix::from_rows(&[&[1.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0]]);
        let c = axpby(2.0, &a, 3.0, &b).unwrap();
        assert_eq!(c.get(0, 0), 5.0);
    }

    #[test]
    fn axpby_shape_mismatch() {
        let x = DenseMatrix::zeros(2, 2);
        let y = DenseMatrix::zeros(2, 3);
        assert!(axpby(1.0, &x, 1.0, &y).is_err());
    }

    #[test]
    fn axpby_is_linear() {
        for seed in 0..10 {
            let x = random_matrix(4, 5, seed);
            let y = random_matrix(4, 5, seed + 100);
            let (a, b, c, d) = (1.25, -0.5, 2.0, 0.75);
            let lhs = axpby(
                1.0,
                &axpby(a, &x, b, &y).unwrap(),
                1.0,
                &axpby(c, &x, d, &y).unwrap(),
            )
            .unwrap();
            let rhs = axpby(a + c, &x, b + d, &y).unwrap();
            for (l, r) in lhs.data().iter().zip(rhs.data()) {
                assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }
    }

    #[test]
    fn matmul_and_transpose() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
        let at = a.transpose();
        assert_eq!(at.data(), &[1.0, 3.0, 2.0, 4.0]);
    }
}
