//! Dense complex matrices and the small decomposition toolkit the rest of
//! the crate is built on: pivoted Householder QR, one-sided Jacobi SVD,
//! Hermitian Jacobi eigendecomposition, and Hessenberg shifted-QR
//! eigenvalues for nonnormal matrices.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;
use rand_core::RngCore;

use crate::{Error, Result, C64};

const EPS: f64 = f64::EPSILON;

#[inline]
fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl core::fmt::Debug for CMat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Build from a row-major slice of (re, im) pairs; length must be rows*cols.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape { expected: (rows, cols), got: (entries.len(), 1) });
        }
        Ok(CMat { rows, cols, data: entries.to_vec() })
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape { expected: (rows, cols), got: (entries.len(), 1) });
        }
        Ok(CMat { rows, cols, data: entries.iter().map(|&x| c(x, 0.0)).collect() })
    }

    pub fn column_vector(entries: &[C64]) -> Self {
        CMat { rows: entries.len(), cols: 1, data: entries.to_vec() }
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        debug_assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C64::ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = C64::ZERO;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMat) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols);
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Stack horizontally: [self | other].
    pub fn hstack(&self, other: &CMat) -> CMat {
        assert_eq!(self.rows, other.rows);
        let mut out = CMat::zeros(self.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, other);
        out
    }

    /// Stack vertically: [self; other].
    pub fn vstack(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.cols);
        let mut out = CMat::zeros(self.rows + other.rows, self.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, 0, other);
        out
    }

    /// Columns selected by index, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> CMat {
        CMat::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Deviation of A^H A and A A^H from the identity (max of the two, Frobenius).
    pub fn unitarity_defect(&self) -> f64 {
        let aha = self.adjoint().mul(self);
        let aah = self.mul(&self.adjoint());
        let d1 = aha.sub(&CMat::identity(self.cols)).fro_norm();
        let d2 = aah.sub(&CMat::identity(self.rows)).fro_norm();
        d1.max(d2)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = C64::ONE;
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return C64::ZERO;
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                det = -det;
            }
            let piv = a[(k, k)];
            det *= piv;
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f == C64::ZERO {
                    continue;
                }
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
        det
    }

    /// Solve A X = B for square A by LU with partial pivoting.
    pub fn solve(&self, b: &CMat) -> Result<CMat> {
        assert!(self.is_square());
        assert_eq!(self.rows, b.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        let scale = self.max_abs().max(1.0);
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= EPS * scale * 16.0 {
                return Err(Error::SingularResolvent);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(k * x.cols + j, p * x.cols + j);
                }
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f == C64::ZERO {
                    continue;
                }
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
                for j in 0..x.cols {
                    let bkj = x[(k, j)];
                    x[(i, j)] -= f * bkj;
                }
            }
        }
        for k in (0..n).rev() {
            let piv = a[(k, k)];
            for j in 0..x.cols {
                let mut acc = x[(k, j)];
                for m in k + 1..n {
                    acc -= a[(k, m)] * x[(m, j)];
                }
                x[(k, j)] = acc / piv;
            }
        }
        Ok(x)
    }
}

/// Householder QR with column pivoting. `q` is square (rows x rows), `r` is
/// rows x cols upper triangular up to the permutation: A P = Q R, where P
/// permutes columns by `perm` (column j of A P is column perm[j] of A).
pub struct PivotedQr {
    pub q: CMat,
    pub r: CMat,
    pub perm: Vec<usize>,
}

impl CMat {
    pub fn qr_pivoted(&self) -> PivotedQr {
        let m = self.rows;
        let n = self.cols;
        let mut r = self.clone();
        let mut q = CMat::identity(m);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut colnorm: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| r[(i, j)].norm_sqr()).sum::<f64>())
            .collect();
        let steps = m.min(n);
        for k in 0..steps {
            // pivot: swap in the column with the largest remaining norm
            let (pj, _) = colnorm
                .iter()
                .enumerate()
                .skip(k)
                .fold((k, -1.0), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
            if pj != k {
                for i in 0..m {
                    let t = r[(i, k)];
                    r[(i, k)] = r[(i, pj)];
                    r[(i, pj)] = t;
                }
                perm.swap(k, pj);
                colnorm.swap(k, pj);
            }
            // Householder vector for column k below the diagonal
            let xnorm = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            if xnorm <= 0.0 {
                continue;
            }
            let x0 = r[(k, k)];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::ONE };
            let alpha = -phase * xnorm;
            let mut v: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
            v[0] -= alpha;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm <= EPS * xnorm {
                continue;
            }
            for z in v.iter_mut() {
                *z /= vnorm;
            }
            // apply H = I - 2 v v^H to R (rows k..m) and accumulate into Q
            for j in k..n {
                let mut dot = C64::ZERO;
                for (t, vi) in v.iter().enumerate() {
                    dot += vi.conj() * r[(k + t, j)];
                }
                let dot = dot * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= vi * dot;
                }
            }
            for i in 0..m {
                let mut dot = C64::ZERO;
                for (t, vi) in v.iter().enumerate() {
                    dot += q[(i, k + t)] * vi;
                }
                let dot = dot * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    q[(i, k + t)] -= dot * vi.conj();
                }
            }
            r[(k, k)] = alpha;
            for i in k + 1..m {
                r[(i, k)] = C64::ZERO;
            }
            for j in k + 1..n {
                colnorm[j] = (colnorm[j] - r[(k, j)].norm_sqr()).max(0.0);
            }
        }
        PivotedQr { q, r, perm }
    }

    /// Numerical column rank from pivoted QR with a relative diagonal threshold.
    pub fn rank_qr(&self, rel_tol: f64) -> usize {
        let qr = self.qr_pivoted();
        let k = self.rows.min(self.cols);
        if k == 0 {
            return 0;
        }
        let d0 = qr.r[(0, 0)].norm();
        if d0 == 0.0 {
            return 0;
        }
        (0..k).take_while(|&i| qr.r[(i, i)].norm() > rel_tol * d0).count()
    }

    /// Least-squares solution of min ||A x - b|| via pivoted QR; truncates
    /// directions with R diagonal below `rel_tol` relative to the largest.
    pub fn solve_lstsq(&self, b: &CMat, rel_tol: f64) -> CMat {
        assert_eq!(self.rows, b.rows);
        let n = self.cols;
        let qr = self.qr_pivoted();
        let k = self.rows.min(n);
        let d0 = if k > 0 { qr.r[(0, 0)].norm() } else { 0.0 };
        let rank = if d0 == 0.0 {
            0
        } else {
            (0..k).take_while(|&i| qr.r[(i, i)].norm() > rel_tol * d0).count()
        };
        let qtb = qr.q.adjoint().mul(b);
        let mut y = CMat::zeros(n, b.cols);
        for j in 0..b.cols {
            for i in (0..rank).rev() {
                let mut acc = qtb[(i, j)];
                for t in i + 1..rank {
                    acc -= qr.r[(i, t)] * y[(t, j)];
                }
                y[(i, j)] = acc / qr.r[(i, i)];
            }
        }
        // undo the column permutation
        let mut x = CMat::zeros(n, b.cols);
        for i in 0..n {
            for j in 0..b.cols {
                x[(qr.perm[i], j)] = y[(i, j)];
            }
        }
        x
    }
}

/// Singular value decomposition A = U diag(s) V^H with square U, V.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    /// Numerical rank with threshold `rel_tol * s[0]`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().take_while(|&&x| x > rel_tol * smax).count()
    }

    /// Right singular vectors spanning the numerical kernel (columns of V
    /// past the numerical rank).
    pub fn null_cols(&self, rel_tol: f64) -> CMat {
        let r = self.rank(rel_tol);
        let n = self.v.cols();
        self.v.block(0, r, n, n - r)
    }
}

/// The 2x2 complex Jacobi rotation diagonalizing [[a, h],[conj(h), b]]
/// (a, b real). Returns (cos, s) with the unitary J = [[cos, s],[-conj(s), cos]].
fn jacobi_rotation(a: f64, b: f64, h: C64) -> (f64, C64) {
    let habs = h.norm();
    if habs == 0.0 {
        return (1.0, C64::ZERO);
    }
    let phase = h / habs;
    let tau = (b - a) / (2.0 * habs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cos = 1.0 / (1.0 + t * t).sqrt();
    let sin = t * cos;
    (cos, phase * sin)
}

impl CMat {
    /// One-sided Jacobi SVD. Robust for the small systems used here; returns
    /// singular values sorted in decreasing order with full square U and V.
    pub fn svd(&self) -> Svd {
        if self.rows < self.cols {
            let t = self.adjoint().svd();
            return Svd { u: t.v, s: t.s, v: t.u };
        }
        let m = self.rows;
        let n = self.cols;
        let mut b = self.clone();
        let mut v = CMat::identity(n);
        let scale = self.max_abs();
        if scale == 0.0 || n == 0 {
            return Svd { u: CMat::identity(m), s: vec![0.0; n], v };
        }
        let max_sweeps = 60;
        for _ in 0..max_sweeps {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = C64::ZERO;
                    for i in 0..m {
                        let bp = b[(i, p)];
                        let bq = b[(i, q)];
                        app += bp.norm_sqr();
                        aqq += bq.norm_sqr();
                        apq += bp.conj() * bq;
                    }
                    let denom = (app * aqq).sqrt();
                    if denom == 0.0 || apq.norm() <= EPS * denom {
                        continue;
                    }
                    off = off.max(apq.norm() / denom);
                    let (cos, s) = jacobi_rotation(app, aqq, apq);
                    // columns (p,q) <- (p,q) * [[cos, s],[-conj(s), cos]]
                    for i in 0..m {
                        let bp = b[(i, p)];
                        let bq = b[(i, q)];
                        b[(i, p)] = bp * cos - bq * s.conj();
                        b[(i, q)] = bp * s + bq * cos;
                    }
                    for i in 0..n {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = vp * cos - vq * s.conj();
                        v[(i, q)] = vp * s + vq * cos;
                    }
                }
            }
            if off <= 4.0 * EPS {
                break;
            }
        }
        // singular values and thin U
        let mut order: Vec<usize> = (0..n).collect();
        let norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| b[(i, j)].norm_sqr()).sum::<f64>().sqrt())
            .collect();
        order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
        let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
        let v = v.select_cols(&order);
        let mut u = CMat::zeros(m, m);
        let mut ucols = 0usize;
        for (k, &j) in order.iter().enumerate() {
            if norms[j] > scale * EPS * 8.0 * (m as f64) {
                for i in 0..m {
                    u[(i, k)] = b[(i, j)] / norms[j];
                }
                ucols = k + 1;
            } else {
                break;
            }
        }
        // complete U to a full unitary
        if ucols < m {
            let partial = u.block(0, 0, m, ucols);
            let full = partial.complete_orthonormal();
            u.set_block(0, ucols, &full.block(0, ucols, m, m - ucols));
        }
        Svd { u, s, v }
    }

    /// Extend the (orthonormal) columns of `self` to a full orthonormal basis
    /// of the ambient space, bringing in standard basis vectors in index
    /// order. Deterministic; skips near-dependent candidates.
    pub fn complete_orthonormal(&self) -> CMat {
        let m = self.rows;
        let k = self.cols;
        assert!(k <= m);
        let mut basis: Vec<Vec<C64>> = (0..k).map(|j| self.col(j)).collect();
        let mut e = 0usize;
        while basis.len() < m {
            assert!(e < m, "failed to complete orthonormal basis");
            let mut v = vec![C64::ZERO; m];
            v[e] = C64::ONE;
            e += 1;
            // two rounds of Gram-Schmidt for stability
            for _ in 0..2 {
                for b in &basis {
                    let mut dot = C64::ZERO;
                    for i in 0..m {
                        dot += b[i].conj() * v[i];
                    }
                    for i in 0..m {
                        v[i] -= dot * b[i];
                    }
                }
            }
            let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 1e-8 {
                for z in v.iter_mut() {
                    *z /= nrm;
                }
                basis.push(v);
            }
        }
        let mut out = CMat::zeros(m, m);
        for (j, b) in basis.iter().enumerate() {
            out.set_col(j, b);
        }
        out
    }
}

/// Hermitian eigendecomposition A = W diag(lambda) W^H.
pub struct HermEig {
    /// Eigenvalues in decreasing order.
    pub values: Vec<f64>,
    /// Unitary matrix of eigenvectors (columns), matching `values`.
    pub vectors: CMat,
}

impl CMat {
    /// Two-sided Jacobi eigendecomposition for Hermitian matrices. The input
    /// is symmetrized; callers pass matrices Hermitian to round-off.
    pub fn herm_eig(&self) -> HermEig {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = CMat::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        let mut w = CMat::identity(n);
        let scale = a.max_abs().max(EPS);
        let max_sweeps = 60;
        for _ in 0..max_sweeps {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    off = off.max(a[(p, q)].norm());
                }
            }
            if off <= EPS * scale * 4.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let h = a[(p, q)];
                    if h.norm() <= EPS * scale * 0.01 {
                        continue;
                    }
                    let (cos, s) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, h);
                    // A <- J^H A J on rows/cols p, q
                    for i in 0..n {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip * cos - aiq * s.conj();
                        a[(i, q)] = aip * s + aiq * cos;
                    }
                    for j in 0..n {
                        let apj = a[(p, j)];
                        let aqj = a[(q, j)];
                        a[(p, j)] = apj * cos - aqj * s;
                        a[(q, j)] = apj * s.conj() + aqj * cos;
                    }
                    for i in 0..n {
                        let wip = w[(i, p)];
                        let wiq = w[(i, q)];
                        w[(i, p)] = wip * cos - wiq * s.conj();
                        w[(i, q)] = wip * s + wiq * cos;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));
        HermEig {
            values: order.iter().map(|&i| diag[i]).collect(),
            vectors: w.select_cols(&order),
        }
    }
}

impl CMat {
    /// Parlett–Reinsch balancing: diagonal similarity scaling by powers of 2
    /// to even out row/column norms before the eigenvalue iteration.
    fn balance(&mut self) {
        let n = self.rows;
        let radix = 2.0f64;
        loop {
            let mut converged = true;
            for i in 0..n {
                let mut cnorm = 0.0;
                let mut rnorm = 0.0;
                for j in 0..n {
                    if j != i {
                        cnorm += self[(j, i)].norm();
                        rnorm += self[(i, j)].norm();
                    }
                }
                if cnorm == 0.0 || rnorm == 0.0 {
                    continue;
                }
                let mut f = 1.0;
                let s = cnorm + rnorm;
                let mut cn = cnorm;
                let mut rn = rnorm;
                while cn < rn / radix {
                    f *= radix;
                    cn *= radix;
                    rn /= radix;
                }
                while cn > rn * radix {
                    f /= radix;
                    cn /= radix;
                    rn *= radix;
                }
                if (cn + rn) < 0.95 * s && f != 1.0 {
                    converged = false;
                    for j in 0..n {
                        self[(i, j)] = self[(i, j)] / f;
                    }
                    for j in 0..n {
                        self[(j, i)] = self[(j, i)] * f;
                    }
                }
            }
            if converged {
                break;
            }
        }
    }

    /// Householder reduction to upper Hessenberg form (in place, eigenvalues
    /// preserved; the transform is not accumulated).
    fn to_hessenberg(&mut self) {
        let n = self.rows;
        for k in 0..n.saturating_sub(2) {
            let xnorm = (k + 1..n).map(|i| self[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            if xnorm <= 0.0 {
                continue;
            }
            let x0 = self[(k + 1, k)];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::ONE };
            let alpha = -phase * xnorm;
            let mut v: Vec<C64> = (k + 1..n).map(|i| self[(i, k)]).collect();
            v[0] -= alpha;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm <= EPS * xnorm {
                continue;
            }
            for z in v.iter_mut() {
                *z /= vnorm;
            }
            // left: rows k+1..n
            for j in k..n {
                let mut dot = C64::ZERO;
                for (t, vi) in v.iter().enumerate() {
                    dot += vi.conj() * self[(k + 1 + t, j)];
                }
                let dot = dot * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    self[(k + 1 + t, j)] -= vi * dot;
                }
            }
            // right: cols k+1..n
            for i in 0..n {
                let mut dot = C64::ZERO;
                for (t, vi) in v.iter().enumerate() {
                    dot += self[(i, k + 1 + t)] * vi;
                }
                let dot = dot * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    self[(i, k + 1 + t)] -= dot * vi.conj();
                }
            }
            self[(k + 1, k)] = alpha;
            for i in k + 2..n {
                self[(i, k)] = C64::ZERO;
            }
        }
    }

    /// Eigenvalues of a general complex square matrix: balancing, Hessenberg
    /// reduction, then single-shift QR with Wilkinson shifts.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut h = self.clone();
        h.balance();
        h.to_hessenberg();
        let mut eigs = Vec::with_capacity(n);
        let mut hi = n; // active block is 0..hi
        let mut iter_budget = 40 * n.max(1);
        let scale = h.max_abs().max(EPS);
        while hi > 0 {
            if hi == 1 {
                eigs.push(h[(0, 0)]);
                hi = 0;
                continue;
            }
            // deflate where a subdiagonal entry is negligible
            let mut lo = hi - 1;
            while lo > 0 {
                let sub = h[(lo, lo - 1)].norm();
                if sub <= EPS * (h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm()).max(scale * EPS) {
                    h[(lo, lo - 1)] = C64::ZERO;
                    break;
                }
                lo -= 1;
            }
            if lo == hi - 1 {
                eigs.push(h[(hi - 1, hi - 1)]);
                hi -= 1;
                continue;
            }
            if iter_budget == 0 {
                return Err(Error::NoConvergence("eigenvalue QR iteration"));
            }
            iter_budget -= 1;
            // Wilkinson shift from the trailing 2x2 of the active block
            let a = h[(hi - 2, hi - 2)];
            let b = h[(hi - 2, hi - 1)];
            let cc = h[(hi - 1, hi - 2)];
            let d = h[(hi - 1, hi - 1)];
            let tr = a + d;
            let det = a * d - b * cc;
            let disc = (tr * tr - det * 4.0).sqrt();
            let m1 = (tr + disc) * 0.5;
            let m2 = (tr - disc) * 0.5;
            let shift = if (m1 - d).norm() < (m2 - d).norm() { m1 } else { m2 };
            // explicit QR step on the active block via Givens rotations
            let nb = hi - lo;
            let mut gs: Vec<(f64, C64)> = Vec::with_capacity(nb - 1);
            for i in lo..hi {
                h[(i, i)] -= shift;
            }
            for i in lo..hi - 1 {
                let x = h[(i, i)];
                let y = h[(i + 1, i)];
                let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
                let (cth, sth) = if r == 0.0 {
                    (1.0, C64::ZERO)
                } else {
                    ((x.norm() / r).max(1e-300), {
                        let xph = if x.norm() > 0.0 { x / x.norm() } else { C64::ONE };
                        (y / r) * xph.conj()
                    })
                };
                // rows i, i+1: [c, conj(s); -s, c] acting on the left
                for j in i..hi {
                    let hij = h[(i, j)];
                    let h1j = h[(i + 1, j)];
                    h[(i, j)] = hij * cth + h1j * sth.conj();
                    h[(i + 1, j)] = h1j * cth - hij * sth;
                }
                gs.push((cth, sth));
            }
            for (t, &(cth, sth)) in gs.iter().enumerate() {
                let i = lo + t;
                let top = if i + 2 < hi { i + 2 } else { hi };
                for r in lo..top {
                    let hri = h[(r, i)];
                    let hri1 = h[(r, i + 1)];
                    h[(r, i)] = hri * cth + hri1 * sth;
                    h[(r, i + 1)] = hri1 * cth - hri * sth.conj();
                }
            }
            for i in lo..hi {
                h[(i, i)] += shift;
            }
        }
        Ok(eigs)
    }
}

/// Dimension of the common kernel of the adjoints of the given matrices,
/// via the Hermitian eigendecomposition of sum A_i A_i^H. The threshold is
/// `rel_tol^2` relative to the largest eigenvalue, matching a singular-value
/// threshold of `rel_tol` on the stacked matrix.
pub fn joint_adjoint_nullity(mats: &[&CMat], rel_tol: f64) -> usize {
    assert!(!mats.is_empty());
    let n = mats[0].rows();
    let mut gram = CMat::zeros(n, n);
    for a in mats {
        assert_eq!(a.rows(), n);
        gram = gram.add(&a.mul(&a.adjoint()));
    }
    let eig = gram.herm_eig();
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if lmax <= 0.0 {
        return n;
    }
    eig.values.iter().filter(|&&v| v < rel_tol * rel_tol * lmax).count()
}

/// Haar-distributed random unitary of size n, drawn from the given RNG.
pub fn haar_unitary(n: usize, rng: &mut impl RngCore) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(gauss(rng), gauss(rng)));
    let qr = g.qr_pivoted();
    // fix the gauge so the distribution is exactly Haar: Q * diag(phase(R_ii))
    let mut q = qr.q;
    for j in 0..n {
        let d = qr.r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Standard normal via Box-Muller on the RNG's 53-bit uniforms.
pub fn gauss(rng: &mut impl RngCore) -> f64 {
    let u1 = uniform01(rng).max(1e-300);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

/// Uniform in [0, 1) with 53 random bits.
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    let x = rng.next_u64() >> 11;
    (x as f64) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mat(m: usize, n: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(m, n, |_, _| c(gauss(rng), gauss(rng)))
    }

    #[test]
    fn qr_reconstructs_and_q_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(m, n) in &[(4usize, 4usize), (6, 3), (3, 5)] {
            let a = random_mat(m, n, &mut rng);
            let qr = a.qr_pivoted();
            assert!(qr.q.unitarity_defect() < 1e-12);
            let ap = a.select_cols(&qr.perm);
            let recon = qr.q.mul(&qr.r);
            assert!(recon.sub(&ap).fro_norm() < 1e-12 * a.fro_norm().max(1.0));
            for i in 1..m.min(n) {
                for j in 0..i {
                    assert!(qr.r[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(m, n) in &[(5usize, 5usize), (7, 3), (3, 7), (4, 1)] {
            let a = random_mat(m, n, &mut rng);
            let svd = a.svd();
            assert!(svd.u.unitarity_defect() < 1e-12, "U not unitary");
            assert!(svd.v.unitarity_defect() < 1e-12, "V not unitary");
            let mut sm = CMat::zeros(m, n);
            for i in 0..m.min(n) {
                sm[(i, i)] = c(svd.s[i], 0.0);
            }
            let recon = svd.u.mul(&sm).mul(&svd.v.adjoint());
            assert!(recon.sub(&a).fro_norm() < 1e-11 * a.fro_norm().max(1.0));
            for i in 1..svd.s.len() {
                assert!(svd.s[i - 1] >= svd.s[i]);
            }
        }
    }

    #[test]
    fn svd_rank_detects_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_mat(5, 2, &mut rng);
        let ct = random_mat(2, 5, &mut rng);
        let a = b.mul(&ct); // rank 2
        let svd = a.svd();
        assert_eq!(svd.rank(1e-10), 2);
        let nullv = svd.null_cols(1e-10);
        assert_eq!(nullv.cols(), 3);
        assert!(a.mul(&nullv).fro_norm() < 1e-10 * a.fro_norm());
    }

    #[test]
    fn herm_eig_diagonalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_mat(6, 6, &mut rng);
        let a = g.add(&g.adjoint()); // Hermitian
        let eig = a.herm_eig();
        assert!(eig.vectors.unitarity_defect() < 1e-12);
        let mut lam = CMat::zeros(6, 6);
        for i in 0..6 {
            lam[(i, i)] = c(eig.values[i], 0.0);
        }
        let recon = eig.vectors.mul(&lam).mul(&eig.vectors.adjoint());
        assert!(recon.sub(&a).fro_norm() < 1e-11 * a.fro_norm());
    }

    #[test]
    fn eigenvalues_match_known_spectrum() {
        // companion-style matrix with spectrum {1, 2, 3}
        let a = CMat::from_real(3, 3, &[6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let mut eigs = a.eigenvalues().unwrap();
        eigs.sort_by(|x, y| x.re.total_cmp(&y.re));
        let expect = [1.0, 2.0, 3.0];
        for (e, &x) in eigs.iter().zip(&expect) {
            assert!((e.re - x).abs() < 1e-9 && e.im.abs() < 1e-9, "{e:?} vs {x}");
        }
    }

    #[test]
    fn eigenvalues_complex_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // unitary similarity of a fixed diagonal: spectrum is known exactly
        let d = [c(0.3, 0.4), c(-0.2, 0.1), c(0.0, -0.5), c(0.9, 0.0)];
        let u = haar_unitary(4, &mut rng);
        let mut dm = CMat::zeros(4, 4);
        for i in 0..4 {
            dm[(i, i)] = d[i];
        }
        let a = u.mul(&dm).mul(&u.adjoint());
        let eigs = a.eigenvalues().unwrap();
        for want in d {
            let best = eigs.iter().map(|e| (e - want).norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-10, "missing eigenvalue {want:?} (best dist {best:.2e})");
        }
    }

    #[test]
    fn lstsq_solves_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_mat(8, 4, &mut rng);
        let x0 = random_mat(4, 2, &mut rng);
        let b = a.mul(&x0);
        let x = a.solve_lstsq(&b, 1e-12);
        assert!(x.sub(&x0).fro_norm() < 1e-10 * x0.fro_norm());
    }

    #[test]
    fn solve_square_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_mat(5, 5, &mut rng);
        let x0 = random_mat(5, 3, &mut rng);
        let b = a.mul(&x0);
        let x = a.solve(&b).unwrap();
        assert!(x.sub(&x0).fro_norm() < 1e-9 * x0.fro_norm().max(1.0));
    }

    #[test]
    fn det_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_mat(4, 4, &mut rng);
        let b = random_mat(4, 4, &mut rng);
        let lhs = a.mul(&b).det();
        let rhs = a.det() * b.det();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(5, &mut rng);
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn complete_orthonormal_extends() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_mat(6, 2, &mut rng);
        let qr = a.qr_pivoted();
        let part = qr.q.block(0, 0, 6, 2);
        let full = part.complete_orthonormal();
        assert!(full.unitarity_defect() < 1e-10);
        assert!(full.block(0, 0, 6, 2).sub(&part).fro_norm() < 1e-14);
    }
}
