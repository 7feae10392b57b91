//! Small dense linear algebra: a row-major matrix, one-sided Jacobi SVD
//! (generic over the arithmetic provider) and a column-pivoted Householder QR
//! solve.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::arith::{Arithmetic, HostArithmetic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flat_map(|row| {
            assert_eq!(row.len(), c, "ragged rows");
            row.iter().copied()
        });
        Self::from_row_major(r, c, data.collect())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        self.matmul_with(&HostArithmetic, other)
    }

    pub fn matmul_with<A: Arithmetic>(&self, ar: &A, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        let mut col = vec![0.0; other.rows];
        for j in 0..other.cols {
            for (k, c) in col.iter_mut().enumerate() {
                *c = other[(k, j)];
            }
            for i in 0..self.rows {
                out[(i, j)] = ar.dot(self.row(i), &col);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

const MAX_SWEEPS: usize = 60;

/// Singular values of a square or tall matrix by one-sided Jacobi
/// (Hestenes) rotations, sorted in decreasing order.
///
/// Every arithmetic operation goes through `ar`, so in an emulated context
/// the result is what a `t`-bit machine would compute.
pub fn singular_values_with<A: Arithmetic>(ar: &A, m: &Matrix) -> Vec<f64> {
    let (rows, cols) = (m.rows, m.cols);
    // work on columns: store transposed so each column is contiguous
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let tol = ar.unit_roundoff().max(f64::EPSILON) * (rows as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = ar.dot(&a[p], &a[p]);
                let beta = ar.dot(&a[q], &a[q]);
                let gamma = ar.dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // zeta = (beta - alpha) / (2 gamma); t = sign(zeta) / (|zeta| + sqrt(1 + zeta^2))
                let zeta = ar.div(ar.sub(beta, alpha), ar.mul(2.0, gamma));
                let root = ar.sqrt(ar.add(1.0, ar.mul(zeta, zeta)));
                let t = if zeta.is_finite() {
                    let t = ar.div(1.0, ar.add(zeta.abs(), root));
                    if zeta < 0.0 {
                        -t
                    } else {
                        t
                    }
                } else {
                    0.0
                };
                let c = ar.div(1.0, ar.sqrt(ar.add(1.0, ar.mul(t, t))));
                let s = ar.mul(c, t);
                let (left, right) = a.split_at_mut(q);
                let (ap, aq) = (&mut left[p], &mut right[0]);
                for k in 0..rows {
                    let x = ap[k];
                    let y = aq[k];
                    ap[k] = ar.sub(ar.mul(c, x), ar.mul(s, y));
                    aq[k] = ar.add(ar.mul(s, x), ar.mul(c, y));
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = a.iter().map(|col| ar.sqrt(ar.dot(col, col))).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Smallest singular value (0 for a singular matrix, `+∞` never).
pub fn sigma_min_with<A: Arithmetic>(ar: &A, m: &Matrix) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    if m.cols == 1 && m.rows == 1 {
        return m[(0, 0)].abs();
    }
    singular_values_with(ar, m).last().copied().unwrap_or(0.0)
}

pub fn sigma_min(m: &Matrix) -> f64 {
    sigma_min_with(&HostArithmetic, m)
}

/// Solve `a · x = b` for square `a` by Householder QR with column pivoting.
///
/// Returns `None` when a pivot vanishes (numerically rank deficient).
pub fn solve_col_piv_qr(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n, "square system expected");
    assert_eq!(b.len(), n);
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = r.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }

    for k in 0..n {
        // pivot: largest remaining column norm
        let norms: Vec<f64> = (k..n)
            .map(|j| (k..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>())
            .collect();
        let (offset, _) =
            norms.iter().enumerate().fold(
                (0, -1.0),
                |best, (i, v)| if *v > best.1 { (i, *v) } else { best },
            );
        let p = k + offset;
        if p != k {
            for i in 0..n {
                r.data.swap(i * n + k, i * n + p);
            }
            perm.swap(k, p);
        }

        let norm = (k..n).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm <= f64::EPSILON * scale * n as f64 {
            return None;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..n {
                    r[(i, j)] -= s * v[i - k];
                }
            }
            let s: f64 = (k..n).map(|i| v[i - k] * rhs[i]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                rhs[i] -= s * v[i - k];
            }
        }
    }

    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= r[(i, j)] * y[j];
        }
        y[i] = s / r[(i, i)];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    Some(x)
}
