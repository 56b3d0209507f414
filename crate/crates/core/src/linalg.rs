//! Dense real linear algebra in double precision.
//!
//! Matrices are stored row-major. The singular value decomposition uses
//! Householder bidiagonalization followed by implicitly shifted QR sweeps on
//! the bidiagonal (Golub-Reinsch); singular values are accurate to about
//! `eps * sigma_max` in absolute terms and are never clamped. The symmetric
//! eigensolver is an independent cyclic Jacobi iteration, so the two routines
//! can be used to cross-check each other.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = &self.row(i)[..self.cols.min(8)];
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty(format!("matrix shape {rows}x{cols}")));
        }
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(k) => Err(Error::NonFinite {
                row: k / self.cols,
                col: k % self.cols,
            }),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in self.row(i).iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ y`.
    pub fn tr_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "transpose of {}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// `AᵀA`, symmetric by construction.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for p in 0..n {
                let rp = r[p];
                if rp == 0.0 {
                    continue;
                }
                let grow = &mut g.data[p * n..p * n + n];
                for q in p..n {
                    grow[q] += rp * r[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.data[p * n + q] = g.data[q * n + p];
            }
        }
        g
    }

    /// `AAᵀ`, symmetric by construction.
    pub fn outer_gram(&self) -> Self {
        let m = self.rows;
        let mut g = Self::zeros(m, m);
        for p in 0..m {
            for q in p..m {
                let v = dot(self.row(p), self.row(q));
                g.data[p * m + q] = v;
                g.data[q * m + p] = v;
            }
        }
        g
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Multiplies column `j` by `d[j]` (right multiplication by a diagonal).
    pub fn scale_columns(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for {} columns",
                d.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for (x, &s) in out.row_mut(i).iter_mut().zip(d) {
                *x *= s;
            }
        }
        Ok(out)
    }

    /// Multiplies row `i` by `d[i]` (left multiplication by a diagonal).
    pub fn scale_rows(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for {} rows",
                d.len(),
                self.rows
            )));
        }
        let mut out = self.clone();
        for (i, &s) in d.iter().enumerate() {
            for x in out.row_mut(i) {
                *x *= s;
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Stacks `[self; other]` vertically.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "vstack of {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Stacks `[self, other]` horizontally.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest `|S_ij - S_ji|`, or `None` when the matrix is not square.
    pub fn max_asymmetry(&self) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    /// `(S + Sᵀ)/2`.
    pub fn symmetrized(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("symmetrize a non-square matrix".into()));
        }
        let n = self.rows;
        Ok(Self::from_fn(n, n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i))))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Thin singular value decomposition `A = U diag(sigma) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub u: DenseMatrix,
    /// Descending, non-negative.
    pub sigma: Vec<f64>,
    /// `n x k` with orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let us = self
            .u
            .scale_columns(&self.sigma)
            .expect("sigma length matches U columns");
        us.matmul(&self.v.transpose())
            .expect("U and V have matching inner dimension")
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DenseMatrix,
}

const SVD_MAX_ITERATIONS: usize = 75;

/// Full thin SVD.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    a.check_finite()?;
    if a.rows >= a.cols {
        let (sigma, u, v) = golub_reinsch(a.data.clone(), a.rows, a.cols, true)?;
        Ok(SvdResult {
            u: u.expect("vectors requested"),
            sigma,
            v: v.expect("vectors requested"),
        })
    } else {
        let t = a.transpose();
        let (sigma, u, v) = golub_reinsch(t.data, t.rows, t.cols, true)?;
        Ok(SvdResult {
            u: v.expect("vectors requested"),
            sigma,
            v: u.expect("vectors requested"),
        })
    }
}

/// Singular values only, descending. Same values as [`svd`] bit for bit.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    a.check_finite()?;
    let (sigma, _, _) = if a.rows >= a.cols {
        golub_reinsch(a.data.clone(), a.rows, a.cols, false)?
    } else {
        let t = a.transpose();
        golub_reinsch(t.data, t.rows, t.cols, false)?
    };
    Ok(sigma)
}

#[inline]
fn with_sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

type GrOutput = (Vec<f64>, Option<DenseMatrix>, Option<DenseMatrix>);

/// Golub-Reinsch SVD of a row-major `m x n` matrix with `m >= n`.
///
/// Column-oriented Householder updates are evaluated as row sweeps so the
/// inner loops stay contiguous; the QR phase rotates rows of `Uᵀ` and `Vᵀ`.
fn golub_reinsch(mut a: Vec<f64>, m: usize, n: usize, want_vectors: bool) -> Result<GrOutput> {
    debug_assert!(m >= n && n > 0);
    let idx = |i: usize, j: usize| i * n + j;
    let mut w = vec![0.0; n];
    let mut rv1 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let (mut g, mut scale, mut anorm) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut l = 0;

    // Householder reduction to bidiagonal form.
    for i in 0..n {
        l = i + 1;
        rv1[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        let mut s = 0.0;
        for k in i..m {
            scale += a[idx(k, i)].abs();
        }
        if scale != 0.0 {
            for k in i..m {
                a[idx(k, i)] /= scale;
                s += a[idx(k, i)] * a[idx(k, i)];
            }
            let f = a[idx(i, i)];
            g = -with_sign(s.sqrt(), f);
            let h = f * g - s;
            a[idx(i, i)] = f - g;
            if l < n {
                let acc = &mut tmp[l..n];
                acc.fill(0.0);
                for k in i..m {
                    let aki = a[idx(k, i)];
                    axpy(aki, &a[idx(k, l)..idx(k, n)], acc);
                }
                for v in acc.iter_mut() {
                    *v /= h;
                }
                for k in i..m {
                    let aki = a[idx(k, i)];
                    let row = &mut a[idx(k, l)..idx(k, n)];
                    axpy(aki, &tmp[l..n], row);
                }
            }
            for k in i..m {
                a[idx(k, i)] *= scale;
            }
        }
        w[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        s = 0.0;
        if i + 1 != n {
            for k in l..n {
                scale += a[idx(i, k)].abs();
            }
            if scale != 0.0 {
                for k in l..n {
                    a[idx(i, k)] /= scale;
                    s += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                g = -with_sign(s.sqrt(), f);
                let h = f * g - s;
                a[idx(i, l)] = f - g;
                for k in l..n {
                    rv1[k] = a[idx(i, k)] / h;
                }
                let (head, tail) = a.split_at_mut(idx(l, 0));
                let arow = &head[idx(i, l)..idx(i, n)];
                for j in 0..(m - l) {
                    let row = &mut tail[j * n + l..j * n + n];
                    let s = dot(row, arow);
                    axpy(s, &rv1[l..n], row);
                }
                for k in l..n {
                    a[idx(i, k)] *= scale;
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }

    let mut vt: Option<Vec<f64>> = None;
    let mut ut: Option<Vec<f64>> = None;
    if want_vectors {
        // Accumulate right-hand transformations into v (n x n, row-major).
        let mut v = vec![0.0; n * n];
        for i in (0..n).rev() {
            if i + 1 < n {
                if g != 0.0 {
                    for j in l..n {
                        v[j * n + i] = (a[idx(i, j)] / a[idx(i, l)]) / g;
                    }
                    let acc = &mut tmp[l..n];
                    acc.fill(0.0);
                    for k in l..n {
                        axpy(a[idx(i, k)], &v[k * n + l..k * n + n], acc);
                    }
                    for k in l..n {
                        let vki = v[k * n + i];
                        axpy(vki, &tmp[l..n], &mut v[k * n + l..k * n + n]);
                    }
                }
                for j in l..n {
                    v[i * n + j] = 0.0;
                    v[j * n + i] = 0.0;
                }
            }
            v[i * n + i] = 1.0;
            g = rv1[i];
            l = i;
        }
        // Accumulate left-hand transformations in place in a (m x n).
        for i in (0..n).rev() {
            l = i + 1;
            let gi = w[i];
            for j in l..n {
                a[idx(i, j)] = 0.0;
            }
            if gi != 0.0 {
                let ginv = 1.0 / gi;
                if l < n {
                    let acc = &mut tmp[l..n];
                    acc.fill(0.0);
                    for k in l..m {
                        let aki = a[idx(k, i)];
                        axpy(aki, &a[idx(k, l)..idx(k, n)], acc);
                    }
                    let aii = a[idx(i, i)];
                    for v in acc.iter_mut() {
                        *v = (*v / aii) * ginv;
                    }
                    for k in i..m {
                        let aki = a[idx(k, i)];
                        let row = &mut a[idx(k, l)..idx(k, n)];
                        axpy(aki, &tmp[l..n], row);
                    }
                }
                for j in i..m {
                    a[idx(j, i)] *= ginv;
                }
            } else {
                for j in i..m {
                    a[idx(j, i)] = 0.0;
                }
            }
            a[idx(i, i)] += 1.0;
        }
        ut = Some(transpose_raw(&a, m, n));
        vt = Some(transpose_raw(&v, n, n));
    }

    let rotate = |mat: &mut Vec<f64>, len: usize, p: usize, q: usize, c: f64, s: f64| {
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let (head, tail) = mat.split_at_mut(hi * len);
        let (rp, rq) = if p < q {
            (&mut head[lo * len..lo * len + len], &mut tail[..len])
        } else {
            (&mut tail[..len], &mut head[lo * len..lo * len + len])
        };
        for (y, z) in rp.iter_mut().zip(rq.iter_mut()) {
            let (yy, zz) = (*y, *z);
            *y = yy * c + zz * s;
            *z = zz * c - yy * s;
        }
    };

    // Diagonalization of the bidiagonal form.
    for k in (0..n).rev() {
        let mut its = 0;
        loop {
            let mut flag = true;
            let mut l = k;
            let mut nm = 0;
            loop {
                if rv1[l].abs() + anorm == anorm {
                    flag = false;
                    break;
                }
                nm = l - 1;
                if w[nm].abs() + anorm == anorm {
                    break;
                }
                l -= 1;
            }
            if flag {
                let mut c = 0.0;
                let mut s = 1.0;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if f.abs() + anorm == anorm {
                        break;
                    }
                    let g = w[i];
                    let mut h = f.hypot(g);
                    w[i] = h;
                    h = 1.0 / h;
                    c = g * h;
                    s = -f * h;
                    if let Some(ut) = ut.as_mut() {
                        rotate(ut, m, nm, i, c, s);
                    }
                }
            }
            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                    if let Some(vt) = vt.as_mut() {
                        for x in &mut vt[k * n..k * n + n] {
                            *x = -*x;
                        }
                    }
                }
                break;
            }
            if its == SVD_MAX_ITERATIONS {
                return Err(Error::NoConvergence(format!(
                    "singular value {k} not converged after {SVD_MAX_ITERATIONS} QR sweeps"
                )));
            }
            its += 1;
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + with_sign(g, f))) - h)) / x;
            let mut c = 1.0;
            let mut s = 1.0;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g *= c;
                let mut z = f.hypot(h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                if let Some(vt) = vt.as_mut() {
                    rotate(vt, n, j, i, c, s);
                }
                z = f.hypot(h);
                w[j] = z;
                if z != 0.0 {
                    z = 1.0 / z;
                    c = f * z;
                    s = h * z;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                if let Some(ut) = ut.as_mut() {
                    rotate(ut, m, j, i, c, s);
                }
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
    }

    // Sort descending; ties keep their original order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| w[q].total_cmp(&w[p]));
    let sigma: Vec<f64> = order.iter().map(|&p| w[p]).collect();
    let u = ut.map(|ut| {
        DenseMatrix::from_fn(m, n, |i, j| ut[order[j] * m + i])
    });
    let v = vt.map(|vt| {
        DenseMatrix::from_fn(n, n, |i, j| vt[order[j] * n + i])
    });
    Ok((sigma, u, v))
}

fn transpose_raw(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Rejects matrices whose asymmetry exceeds `1e-12 * ‖S‖_F`.
pub fn sym_eig(s: &DenseMatrix) -> Result<SymEigResult> {
    s.check_finite()?;
    let Some(asym) = s.max_asymmetry() else {
        return Err(Error::DimensionMismatch(format!(
            "sym_eig needs a square matrix, got {}x{}",
            s.rows, s.cols
        )));
    };
    let tolerance = 1e-12 * s.frobenius_norm();
    if asym > tolerance {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            tolerance,
        });
    }
    let n = s.rows;
    let mut a = s.symmetrized()?.data;
    let mut v = DenseMatrix::identity(n).data;

    for sweep in 0..=JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q].abs();
            }
        }
        if off == 0.0 {
            break;
        }
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                // Once the sweep count is past a few rounds, entries that no
                // longer change either diagonal are set to zero.
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let diff = aqq - app;
                let t = if diff.abs() + g == diff.abs() {
                    apq / diff
                } else {
                    let theta = 0.5 * diff / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                let tau = sn / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - sn * (arq + tau * arp);
                    let new_rq = arq + sn * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - sn * (vrq + tau * vrp);
                    v[r * n + q] = vrq + sn * (vrp - tau * vrq);
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| diag[q].total_cmp(&diag[p]));
    let eigenvalues = order.iter().map(|&p| diag[p]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(SymEigResult {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        let k = q.cols();
        q.gram().sub(&DenseMatrix::identity(k)).unwrap().frobenius_norm()
    }

    #[test]
    fn identity_singular_values() {
        let s = svd(&DenseMatrix::identity(5)).unwrap();
        assert_eq!(s.sigma, vec![1.0; 5]);
    }

    #[test]
    fn diagonal_with_negative_entry() {
        let a = DenseMatrix::from_diag(&[3.0, -4.0]);
        let s = svd(&a).unwrap();
        assert!((s.sigma[0] - 4.0).abs() < 1e-15);
        assert!((s.sigma[1] - 3.0).abs() < 1e-15);
        let r = s.reconstruct().sub(&a).unwrap().frobenius_norm();
        assert!(r < 1e-14);
    }

    #[test]
    fn random_square_reconstruction() {
        let a = random_matrix(50, 50, 11);
        let s = svd(&a).unwrap();
        let rel = s.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        assert!(rel < 1e-12, "reconstruction error {rel:e}");
        assert!(orthonormality_error(&s.u) < 1e-10);
        assert!(orthonormality_error(&s.v) < 1e-10);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn tall_and_wide_shapes() {
        for (r, c) in [(40, 7), (7, 40), (1, 6), (6, 1)] {
            let a = random_matrix(r, c, (r * 100 + c) as u64);
            let s = svd(&a).unwrap();
            assert_eq!(s.sigma.len(), r.min(c));
            assert_eq!(s.u.shape(), (r, r.min(c)));
            assert_eq!(s.v.shape(), (c, r.min(c)));
            let rel = s.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
            assert!(rel < 1e-12, "{r}x{c}: {rel:e}");
            assert!(orthonormality_error(&s.u) < 1e-10);
            assert!(orthonormality_error(&s.v) < 1e-10);
        }
    }

    #[test]
    fn rank_deficient_matrix() {
        let x = random_matrix(30, 3, 5);
        let y = random_matrix(3, 20, 6);
        let a = x.matmul(&y).unwrap();
        let s = svd(&a).unwrap();
        assert!(s.sigma[3] < 1e-13 * s.sigma[0]);
        let rel = s.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        assert!(rel < 1e-12);
        assert!(orthonormality_error(&s.u) < 1e-10);
    }

    #[test]
    fn values_only_matches_full() {
        let a = random_matrix(33, 21, 2);
        let full = svd(&a).unwrap();
        assert_eq!(singular_values(&a).unwrap(), full.sigma);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = DenseMatrix::identity(3);
        a.set(1, 2, f64::NAN);
        assert!(matches!(svd(&a), Err(Error::NonFinite { row: 1, col: 2 })));
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn eig_of_diagonal_and_zero() {
        let e = sym_eig(&DenseMatrix::from_diag(&[1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 1.0]);
        let z = sym_eig(&DenseMatrix::zeros(4, 4)).unwrap();
        assert!(z.eigenvalues.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn eig_residual_and_orthogonality() {
        let b = random_matrix(25, 25, 3);
        let s = b.add(&b.transpose()).unwrap();
        let e = sym_eig(&s).unwrap();
        let q = &e.eigenvectors;
        assert!(orthonormality_error(q) < 1e-10);
        let aq = s.matmul(q).unwrap();
        let ql = q.scale_columns(&e.eigenvalues).unwrap();
        let rel = aq.sub(&ql).unwrap().frobenius_norm() / s.frobenius_norm();
        assert!(rel < 1e-9, "{rel:e}");
    }

    #[test]
    fn asymmetric_rejected() {
        let mut s = DenseMatrix::identity(3);
        s.set(0, 1, 1e-3);
        assert!(matches!(sym_eig(&s), Err(Error::NotSymmetric { .. })));
        assert!(sym_eig(&random_matrix(2, 3, 1)).is_err());
    }

    #[test]
    fn gram_eigenvalues_match_squared_singular_values() {
        let a = random_matrix(30, 12, 9);
        let sigma = singular_values(&a).unwrap();
        let e = sym_eig(&a.gram()).unwrap();
        let lmax = e.eigenvalues[0];
        for (s, l) in sigma.iter().zip(&e.eigenvalues) {
            assert!((s * s - l).abs() <= 1e-9 * lmax);
        }
    }
}
