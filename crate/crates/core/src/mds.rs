//! Classical multidimensional scaling: double-centering, symmetric
//! eigendecomposition (cyclic Jacobi), and the top-2 planar embedding.

use std::io::Write;
use std::path::Path;

use crate::apsp::DistanceMatrix;
use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 100;
/// Convergence: off-diagonal Frobenius norm relative to the input norm.
const OFF_DIAG_TOL: f64 = 1e-12;

/// Dense square matrix, row-major. Used for the centered Gram-like matrix
/// and for eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "row length {} in a {n}x{n} matrix",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Double-centers the squared distances: `B = -1/2 * J * D^2 * J` with
/// `J = I - (1/n) * ones`. Every row and column of `B` sums to ~0.
pub fn double_center(d: &DistanceMatrix) -> SquareMatrix {
    let n = d.n();
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            sq[i * n + j] = v * v;
        }
    }
    let inv_n = 1.0 / n as f64;
    let row_means: Vec<f64> = (0..n)
        .map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() * inv_n)
        .collect();
    let grand_mean = row_means.iter().sum::<f64>() * inv_n;
    let mut b = SquareMatrix::zeros(n);
    // Fill the upper triangle and mirror so B is symmetric bit-for-bit.
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (sq[i * n + j] - row_means[i] - row_means[j] + grand_mean);
            b.set(i, j, v);
            b.set(j, i, v);
        }
    }
    b
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns all eigenvalues in descending order with matching orthonormal
/// eigenvectors as columns. Each returned vector is sign-normalized: its
/// entry of largest magnitude is non-negative, ties broken by lowest index.
pub fn symmetric_eigen(b: &SquareMatrix) -> Result<(Vec<f64>, SquareMatrix)> {
    let n = b.n();
    let norm = b.frobenius_norm();
    let mut a = b.clone();
    let mut v = SquareMatrix::identity(n);
    if norm > 0.0 {
        let target = OFF_DIAG_TOL * norm;
        let mut converged = false;
        for _sweep in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| 2.0 * a.get(i, j) * a.get(i, j))
                .sum::<f64>()
                .sqrt();
            if off <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged {
            // one more check after the final sweep
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| 2.0 * a.get(i, j) * a.get(i, j))
                .sum::<f64>()
                .sqrt();
            if off > target {
                return Err(Error::EigenNoConvergence { sweeps: MAX_SWEEPS });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let mut column: Vec<f64> = (0..n).map(|row| v.get(row, src)).collect();
        sign_normalize(&mut column);
        for (row, &val) in column.iter().enumerate() {
            vectors.set(row, col, val);
        }
    }
    Ok((values, vectors))
}

/// Flips a vector so its largest-magnitude entry is non-negative
/// (ties broken by the lowest index).
fn sign_normalize(column: &mut [f64]) {
    let mut best = 0;
    for (i, v) in column.iter().enumerate() {
        if v.abs() > column[best].abs() {
            best = i;
        }
    }
    if column[best] < 0.0 {
        for v in column.iter_mut() {
            *v = -*v;
        }
    }
}

/// One Jacobi rotation zeroing `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut SquareMatrix, v: &mut SquareMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let tau = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.n();
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        let new_p = c * aip - s * aiq;
        let new_q = s * aip + c * aiq;
        a.set(i, p, new_p);
        a.set(p, i, new_p);
        a.set(i, q, new_q);
        a.set(q, i, new_q);
    }
    for i in 0..n {
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, c * vip - s * viq);
        v.set(i, q, s * vip + c * viq);
    }
}

/// The `k` algebraically largest eigenpairs: `(values descending,
/// vectors[j] = eigenvector of values[j], each of length n)`.
pub fn symmetric_eigen_top_k(b: &SquareMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = b.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let (values, vectors) = symmetric_eigen(b)?;
    let cols = (0..k)
        .map(|j| (0..n).map(|i| vectors.get(i, j)).collect())
        .collect();
    Ok((values[..k].to_vec(), cols))
}

/// Planar embedding recovered from a distance matrix: coordinates in an
/// arbitrary frame, plus the spectrum split into the two retained
/// eigenvalues and the remainder (diagnostics).
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMap {
    coords: Vec<[f64; 2]>,
    eigenvalues_used: [f64; 2],
    residual_spectrum: Vec<f64>,
}

impl RelativeMap {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn eigenvalues_used(&self) -> [f64; 2] {
        self.eigenvalues_used
    }

    pub fn residual_spectrum(&self) -> &[f64] {
        &self.residual_spectrum
    }

    /// Writes `id,x,y` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,x,y")?;
        for (id, p) in self.coords.iter().enumerate() {
            writeln!(w, "{id},{},{}", p[0], p[1])?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Writes the full spectrum, retained eigenvalues first.
    pub fn write_spectrum_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,eigenvalue")?;
        for (i, v) in self
            .eigenvalues_used
            .iter()
            .chain(self.residual_spectrum.iter())
            .enumerate()
        {
            writeln!(w, "{i},{v}")?;
        }
        Ok(())
    }

    pub fn write_spectrum_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_spectrum_csv(std::fs::File::create(path)?)
    }
}

/// Classical MDS: double-center, eigendecompose, embed on the top two
/// eigenpairs. `dims` other than 2 is rejected (the pipeline is planar).
/// Negative retained eigenvalues are clamped to 0 before the square root.
pub fn classical_mds(d: &DistanceMatrix, dims: usize) -> Result<RelativeMap> {
    if dims != 2 {
        return Err(Error::InvalidParameter(format!(
            "only 2-D embeddings are supported, got dims = {dims}"
        )));
    }
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 nodes to embed, got {n}"
        )));
    }
    let b = double_center(d);
    let (values, vectors) = symmetric_eigen(&b)?;
    let scale = [values[0].max(0.0).sqrt(), values[1].max(0.0).sqrt()];
    let coords = (0..n)
        .map(|i| [vectors.get(i, 0) * scale[0], vectors.get(i, 1) * scale[1]])
        .collect();
    Ok(RelativeMap {
        coords,
        eigenvalues_used: [values[0], values[1]],
        residual_spectrum: values[2..].to_vec(),
    })
}
