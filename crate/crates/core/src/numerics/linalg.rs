//! Dense row-major matrices and the few factorizations the crate needs.
//!
//! Sizes here are small (tens of rows/columns); simplicity and determinism
//! beat asymptotics.

use serde::Serialize;

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    /// Matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> S {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Borrow of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` copied out.
    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| crate::scalar::dot(self.row(i), v))
            .collect()
    }

    /// `self^T * v`.
    pub fn tr_matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension");
        let mut out = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + vi * a;
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.at(i, k);
                if aik == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.at(i, j) + aik * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Mat<S> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    /// Rows as owned vectors (for serialization into nested arrays).
    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Solves `a x = b` by LU with partial pivoting. Returns `None` when the
/// matrix is numerically singular.
pub fn solve_dense<S: Scalar>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    let n = a.rows();
    assert_eq!(a.cols(), n, "square system required");
    assert_eq!(b.len(), n, "rhs dimension");
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (piv, mag) = (k..n)
            .map(|i| (i, m.at(i, k).abs()))
            .fold((k, S::neg_infinity()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        if !(mag > S::zero()) || !mag.is_finite() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let t = m.at(k, j);
                m.set(k, j, m.at(piv, j));
                m.set(piv, j, t);
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m.at(i, k) / m.at(k, k);
            if f == S::zero() {
                continue;
            }
            for j in k..n {
                let v = m.at(i, j) - f * m.at(k, j);
                m.set(i, j, v);
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s = s - m.at(i, j) * x[j];
        }
        x[i] = s / m.at(i, i);
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Householder QR of a tall (or square) matrix `a` (`rows >= cols`).
///
/// Returns `(q, r)` with `q` the full square orthogonal factor
/// (`rows x rows`) and `r` upper trapezoidal (`rows x cols`), `a = q * r`.
pub fn householder_qr<S: Scalar>(a: &Mat<S>) -> (Mat<S>, Mat<S>) {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n, "householder_qr expects rows >= cols");
    let mut r = a.clone();
    let mut q = Mat::identity(m);
    for k in 0..n {
        // Build the reflector annihilating r[k+1.., k].
        let mut norm = S::zero();
        for i in k..m {
            norm = norm + r.at(i, k) * r.at(i, k);
        }
        let norm = norm.sqrt();
        if norm == S::zero() {
            continue;
        }
        let alpha = if r.at(k, k) >= S::zero() { -norm } else { norm };
        let mut v = vec![S::zero(); m];
        for i in k..m {
            v[i] = r.at(i, k);
        }
        v[k] = v[k] - alpha;
        let vnorm2: S = v[k..].iter().map(|&x| x * x).sum();
        if vnorm2 == S::zero() {
            continue;
        }
        let two = S::real(2.0);
        // r <- (I - 2 v v^T / v^T v) r
        for j in k..n {
            let mut dot = S::zero();
            for i in k..m {
                dot = dot + v[i] * r.at(i, j);
            }
            let f = two * dot / vnorm2;
            for i in k..m {
                let val = r.at(i, j) - f * v[i];
                r.set(i, j, val);
            }
        }
        // q <- q (I - 2 v v^T / v^T v)
        for i in 0..m {
            let mut dot = S::zero();
            for l in k..m {
                dot = dot + q.at(i, l) * v[l];
            }
            let f = two * dot / vnorm2;
            for l in k..m {
                let val = q.at(i, l) - f * v[l];
                q.set(i, l, val);
            }
        }
    }
    // Zero the annihilated part exactly so downstream rank checks are clean.
    for j in 0..n {
        for i in (j + 1)..m {
            r.set(i, j, S::zero());
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solve_dense_recovers_known_solution() {
        let a = Mat::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = solve_dense(&a, &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0 / 11.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 7.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn solve_dense_detects_singularity() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_dense(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn qr_reconstructs_and_is_orthogonal() {
        let a = Mat::from_rows(&[
            vec![1.0, 2.0],
            vec![-1.0, 0.5],
            vec![3.0, 1.0],
            vec![0.0, -2.0],
        ]);
        let (q, r) = householder_qr(&a);
        let qr = q.matmul(&r);
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                assert_abs_diff_eq!(qr.at(i, j), a.at(i, j), epsilon = 1e-12);
            }
        }
        let qtq = q.transpose().matmul(&q);
        for i in 0..q.rows() {
            for j in 0..q.rows() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(qtq.at(i, j), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matvec_and_transpose_agree() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![6.0, 15.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(a.transpose().matvec(&[1.0, 1.0]), a.tr_matvec(&[1.0, 1.0]));
    }
}
