//! Dense symmetric matrices and the small tridiagonal eigensolver used by Lanczos.

use std::io::{self, Write};

use crate::scalar::Real;

/// Dense symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    /// Build from rows; only the upper triangle is read and mirrored.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            assert_eq!(rows[i].len(), n, "matrix must be square");
            for j in i..n {
                m.set_sym(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set_sym(i, i, d);
        }
        m
    }

    /// Fill from a symmetric generator `f(i, j)`, evaluated for `j >= i` only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set_sym(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `y = M x`.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.n);
        // each off-diagonal pair once, from the upper triangle
        let mut diag = T::zero();
        let mut off = T::zero();
        for (i, &xi) in x.iter().enumerate() {
            let row = self.row(i);
            diag += row[i] * xi * xi;
            off += xi * dot(&row[i + 1..], &x[i + 1..]);
        }
        diag + off + off
    }

    /// Gershgorin upper bound on the spectrum, `max_i (M_ii + Σ_{j≠i} |M_ij|)`.
    pub fn gershgorin_upper(&self) -> T {
        (0..self.n)
            .map(|i| {
                let off = self
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(T::zero(), |acc, (_, v)| acc + v.abs());
                self.get(i, i) + off
            })
            .fold(T::neg_infinity(), T::max)
    }

    /// Largest `|M_ij − M_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row-major CSV dump, one matrix row per line, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.n {
            let line = self
                .row(i)
                .iter()
                .map(|v| format!("{:.16e}", v))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    // independent accumulators so the loop vectorizes
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (&x, &y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// `y += alpha · x`.
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<T: Real>(alpha: T, x: &mut [T]) {
    for v in x {
        *v *= alpha;
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix (implicit QL with
/// Wilkinson shifts).
///
/// `diag` has length m, `off[i]` couples `i` and `i + 1` (length m − 1).
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of a row-major m×m matrix.
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T]) -> (Vec<T>, Vec<T>) {
    let m = diag.len();
    assert!(off.len() + 1 == m || (m == 0 && off.is_empty()));
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(T::zero());
    let mut z = vec![T::zero(); m * m];
    for i in 0..m {
        z[i * m + i] = T::one();
    }
    let two = T::lit(2.0);

    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= T::epsilon() * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[mm] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = mm;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[mm] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..m {
                    let zk1 = z[k * m + i + 1];
                    let zk = z[k * m + i];
                    z[k * m + i + 1] = s * zk + c * zk1;
                    z[k * m + i] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&k| d[k]).collect();
    let mut vecs = vec![T::zero(); m * m];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..m {
            vecs[row * m + new_col] = z[row * m + old_col];
        }
    }
    (vals, vecs)
}
