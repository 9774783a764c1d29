//! Admissible kernel triples (K, P, Q) on the zero variety of an inner-toral
//! polynomial: Q annihilates Phi(z) - w rowwise on the variety, P pairs with
//! it through the colligation, and both represent the same Szego-type kernel
//! K = Q(x)Q(y)^* / (1 - z conj(zeta)) = P(x)P(y)^* / (1 - w conj(eta)).
//!
//! Q is built from a Schur-complement formula at a base point, then reduced
//! to minimal bidegree and normalized so its largest coefficient is 1.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::cmat::CMat;
use crate::colligation::Colligation;
use crate::poly::{self, BiPoly, UniPoly};
use crate::{Error, Result, C64};

#[inline]
fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Annihilation tolerance for Q against the symbol on the variety.
pub const ANNIHILATION_TOL: f64 = 1e-9;
/// Tolerance for the two kernel representations agreeing pointwise.
pub const KERNEL_IDENTITY_TOL: f64 = 1e-8;

/// A matrix with bivariate polynomial entries.
#[derive(Clone, Debug)]
pub struct MatrixBiPoly {
    rows: usize,
    cols: usize,
    entries: Vec<BiPoly>,
}

impl MatrixBiPoly {
    pub fn new(rows: usize, cols: usize, entries: Vec<BiPoly>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::Invalid("entry count must match the shape"));
        }
        Ok(MatrixBiPoly { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixBiPoly { rows, cols, entries: vec![BiPoly::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &BiPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, p: BiPoly) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn entries(&self) -> &[BiPoly] {
        &self.entries
    }

    pub fn eval(&self, z: C64, w: C64) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).eval(z, w))
    }

    pub fn max_coeff(&self) -> f64 {
        self.entries.iter().map(|p| p.max_coeff()).fold(0.0, f64::max)
    }

    /// Largest bidegree over the entries, componentwise.
    pub fn bidegree_envelope(&self) -> (usize, usize) {
        let mut dz = 0;
        let mut dw = 0;
        for p in &self.entries {
            if !p.is_zero() {
                dz = dz.max(p.deg_z());
                dw = dw.max(p.deg_w());
            }
        }
        (dz, dw)
    }

    /// Right-multiply by a constant matrix.
    pub fn mul_const(&self, m: &CMat) -> MatrixBiPoly {
        assert_eq!(self.cols, m.rows());
        let mut out = MatrixBiPoly::zeros(self.rows, m.cols());
        for i in 0..self.rows {
            for j in 0..m.cols() {
                let mut acc = BiPoly::zero();
                for k in 0..self.cols {
                    let coef = m[(k, j)];
                    if coef != C64::ZERO {
                        acc = acc.add(&self.entry(i, k).scale(coef));
                    }
                }
                out.set_entry(i, j, acc);
            }
        }
        out
    }

    pub fn mul(&self, other: &MatrixBiPoly) -> MatrixBiPoly {
        assert_eq!(self.cols, other.rows);
        let mut out = MatrixBiPoly::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = BiPoly::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.entry(i, k).mul(other.entry(k, j)));
                }
                out.set_entry(i, j, acc);
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> MatrixBiPoly {
        MatrixBiPoly {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|p| p.scale(s)).collect(),
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatrixBiPoly {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let mut out = MatrixBiPoly::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set_entry(i, j, self.entry(r0 + i, c0 + j).clone());
            }
        }
        out
    }

    /// Determinant by cofactor expansion; intended for small matrices.
    pub fn det(&self) -> BiPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        match n {
            0 => BiPoly::constant(C64::ONE),
            1 => self.entry(0, 0).clone(),
            _ => {
                let mut acc = BiPoly::zero();
                for j in 0..n {
                    let minor = self.minor(0, j).det();
                    let term = self.entry(0, j).mul(&minor);
                    acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                acc
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> MatrixBiPoly {
        let n = self.rows;
        let mut out = MatrixBiPoly::zeros(n - 1, n - 1);
        let mut ii = 0;
        for i in 0..n {
            if i == row {
                continue;
            }
            let mut jj = 0;
            for j in 0..n {
                if j == col {
                    continue;
                }
                out.set_entry(ii, jj, self.entry(i, j).clone());
                jj += 1;
            }
            ii += 1;
        }
        out
    }

    /// Adjugate: adj[i][j] = (-1)^(i+j) det(minor(j, i)).
    pub fn adjugate(&self) -> MatrixBiPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return self.clone();
        }
        if n == 1 {
            let mut out = MatrixBiPoly::zeros(1, 1);
            out.set_entry(0, 0, BiPoly::constant(C64::ONE));
            return out;
        }
        let mut out = MatrixBiPoly::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let m = self.minor(j, i).det();
                out.set_entry(i, j, if (i + j) % 2 == 0 { m } else { m.scale(c(-1.0, 0.0)) });
            }
        }
        out
    }
}

/// Raw Schur-complement construction of Q at a base point: with the base
/// singular triple splitting Phi(z0) - w0 into [[E, G], [H, L]] (L invertible
/// at the base), the row block [det(L) I | -G adj(L)] annihilates the symbol
/// on the variety. Denominators det(I - zD) are cleared so entries are
/// polynomial.
pub fn construct_q_raw(
    col: &Colligation,
    p: &BiPoly,
    base: (C64, C64),
    alpha: usize,
) -> Result<MatrixBiPoly> {
    let (z0, w0) = base;
    let m = col.m();
    let n = col.n();
    if alpha == 0 || alpha > m {
        return Err(Error::Invalid("rank must be between 1 and the fiber dimension"));
    }
    let residual = p.eval(z0, w0).norm();
    if residual > poly::on_variety_tol(p) {
        return Err(Error::PointNotOnVariety { residual });
    }
    let phi0 = col.transfer(z0)?;
    let mut shifted = phi0;
    for i in 0..m {
        shifted[(i, i)] -= w0;
    }
    let svd = shifted.svd();
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let nullity = if smax <= 1e-12 * (1.0 + w0.norm()) {
        m
    } else {
        svd.s.iter().filter(|&&x| x <= crate::isopair::RANK_TOL * smax).count()
    };
    if nullity != alpha {
        return Err(Error::NullityMismatch { expected: alpha, got: nullity });
    }
    // columns reordered so the kernel block comes first
    let order: Vec<usize> = (m - alpha..m).chain(0..m - alpha).collect();
    let pi = svd.v.select_cols(&order);
    let pi_star = svd.u.select_cols(&order).adjoint();

    // d(z) = det(I - zD) and the polynomial resolvent numerator
    // adj_k = d_k I + D adj_{k-1}, so (I - zD) sum_k adj_k z^k = d(z) I
    let d_poly = if n == 0 {
        UniPoly::one()
    } else {
        let eigs = col.d().eigenvalues()?;
        let mut d = UniPoly::one();
        for e in eigs {
            d = d.mul(&UniPoly::new(vec![C64::ONE, -e]));
        }
        d
    };
    let mut adj_series: Vec<CMat> = Vec::new();
    if n > 0 {
        let mut prev = CMat::zeros(n, n);
        for k in 0..n {
            let dk = d_poly.coeffs.get(k).copied().unwrap_or(C64::ZERO);
            let mut ak = col.d().mul(&prev);
            for i in 0..n {
                ak[(i, i)] += dk;
            }
            adj_series.push(ak.clone());
            prev = ak;
        }
    }
    // Phi_poly(z) = d(z) A + z B adjseries(z) C, coefficients in z
    let deg = d_poly.degree().max(adj_series.len());
    let mut phi_poly: Vec<CMat> = vec![CMat::zeros(m, m); deg + 1];
    for (k, &dk) in d_poly.coeffs.iter().enumerate() {
        phi_poly[k] = phi_poly[k].add(&col.a().scale(dk));
    }
    for (k, ak) in adj_series.iter().enumerate() {
        let term = col.b().mul(ak).mul(col.c());
        phi_poly[k + 1] = phi_poly[k + 1].add(&term);
    }
    // Sigma(z, w) = Pi_* (Phi_poly(z) - w d(z) I) Pi as a polynomial matrix
    let w_gram = pi_star.mul(&pi);
    let mut sigma = MatrixBiPoly::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut grid = vec![C64::ZERO; (deg + 1) * 2];
            for (k, coef) in phi_poly.iter().enumerate() {
                let conj = pi_star.mul(coef).mul(&pi);
                grid[k * 2] += conj[(i, j)];
            }
            for (k, &dk) in d_poly.coeffs.iter().enumerate() {
                grid[k * 2 + 1] -= dk * w_gram[(i, j)];
            }
            sigma.set_entry(i, j, BiPoly::from_grid(deg + 1, 2, grid)?);
        }
    }
    let g = sigma.block(0, alpha, alpha, m - alpha);
    let l = sigma.block(alpha, alpha, m - alpha, m - alpha);
    let det_l = l.det();
    let adj_l = l.adjugate();
    // [det(L) I_alpha | -G adj(L)] Pi_*
    let mut row_block = MatrixBiPoly::zeros(alpha, m);
    for i in 0..alpha {
        row_block.set_entry(i, i, det_l.clone());
    }
    let g_adj = g.mul(&adj_l);
    for i in 0..alpha {
        for j in 0..m - alpha {
            row_block.set_entry(i, alpha + j, g_adj.entry(i, j).scale(c(-1.0, 0.0)));
        }
    }
    let q_raw = row_block.mul_const(&pi_star);
    certify_annihilation(&q_raw, col, p, 40, 0x51c0ffee)?;
    Ok(q_raw)
}

/// Max over sampled variety points of the sup-entry of Q(x) (Phi(z) - w),
/// relative to the scale of Q.
pub fn annihilation_residual(
    q: &MatrixBiPoly,
    col: &Colligation,
    p: &BiPoly,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let pts = poly::sample_variety(p, samples, seed, 0.95)?;
    let m = col.m();
    let scale = q.max_coeff().max(1e-300);
    let mut worst = 0.0f64;
    for pt in &pts {
        let mut shifted = col.transfer(pt.z)?;
        for i in 0..m {
            shifted[(i, i)] -= pt.w;
        }
        let qv = q.eval(pt.z, pt.w);
        worst = worst.max(qv.mul(&shifted).max_abs() / scale);
    }
    Ok(worst)
}

/// Gate on `annihilation_residual`, failing above the annihilation tolerance.
fn certify_annihilation(
    q: &MatrixBiPoly,
    col: &Colligation,
    p: &BiPoly,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let worst = annihilation_residual(q, col, p, samples, seed)?;
    if worst > ANNIHILATION_TOL {
        return Err(Error::CertificateFailed { what: "row annihilation of the symbol", residual: worst });
    }
    Ok(worst)
}

/// Reduce Q to the minimal bidegree with the same pointwise row space on the
/// variety, and normalize so the largest coefficient is exactly 1. The
/// search walks bidegrees in ascending total degree and solves for rows that
/// lie in the sampled row spaces; rows are accepted greedily while the
/// stacked value at the base point gains rank.
pub fn reduce_q(
    q_raw: &MatrixBiPoly,
    p: &BiPoly,
    base: (C64, C64),
    seed: u64,
) -> Result<MatrixBiPoly> {
    let alpha = q_raw.rows();
    let m = q_raw.cols();
    let (dz_cap, dw_cap) = q_raw.bidegree_envelope();
    let samples = poly::sample_variety(p, (48).max(4 * (dz_cap + 1) * (dw_cap + 1) * m), seed, 0.95)?;
    // orthonormal projectors onto the complement of the row space at samples
    let mut projectors = Vec::with_capacity(samples.len());
    for pt in &samples {
        let qv = q_raw.eval(pt.z, pt.w); // alpha x m
        let svd = qv.adjoint().svd(); // columns span the conjugated row space
        let rank = svd.rank(1e-10);
        if rank == 0 {
            // degenerate sample (raw rows vanish here): no constraint
            projectors.push(CMat::zeros(m, m));
            continue;
        }
        let um = svd.u.block(0, 0, m, rank);
        // pi = I - U U^H kills vectors in the conjugated row space
        let pi = CMat::identity(m).sub(&um.mul(&um.adjoint()));
        projectors.push(pi);
    }
    let mut degrees: Vec<(usize, usize)> = (0..=dz_cap)
        .flat_map(|i| (0..=dw_cap).map(move |j| (i, j)))
        .collect();
    degrees.sort_by_key(|&(i, j)| (i + j, i));
    for (dz, dw) in degrees {
        let monomials: Vec<(usize, usize)> =
            (0..=dz).flat_map(|i| (0..=dw).map(move |j| (i, j))).collect();
        let unknowns = monomials.len() * m;
        let mut cons = CMat::zeros(samples.len() * m, unknowns);
        for (t, pt) in samples.iter().enumerate() {
            // row q satisfies conj-row-space membership: q(x) pi = 0
            let pi = &projectors[t];
            for (mi, &(iz, jw)) in monomials.iter().enumerate() {
                let mono = pt.z.powu(iz as u32) * pt.w.powu(jw as u32);
                for col0 in 0..m {
                    for comp in 0..m {
                        // (q(x) applied to pi^T as row): sum_col q_col pi[comp, col]
                        cons[(t * m + comp, mi * m + col0)] = mono * pi[(comp, col0)].conj();
                    }
                }
            }
        }
        let svd = cons.svd();
        let smax = svd.s.first().copied().unwrap_or(0.0);
        let nullity = if smax == 0.0 {
            unknowns
        } else {
            svd.s.iter().filter(|&&x| x <= 1e-8 * smax).count()
        };
        if nullity < alpha {
            continue;
        }
        let null_basis = svd.v.block(0, unknowns - nullity, unknowns, nullity);
        // assemble candidate rows and select alpha of them that stay
        // independent at the base point
        let mut chosen: Vec<Vec<BiPoly>> = Vec::new();
        let mut stacked = CMat::zeros(0, m);
        for cand in 0..nullity {
            let mut row_polys = vec![BiPoly::zero(); m];
            for (mi, &(iz, jw)) in monomials.iter().enumerate() {
                for col0 in 0..m {
                    let coef = null_basis[(mi * m + col0, cand)];
                    if coef != C64::ZERO {
                        row_polys[col0] =
                            row_polys[col0].add(&BiPoly::monomial(coef, iz, jw));
                    }
                }
            }
            let val = CMat::from_fn(1, m, |_, j| row_polys[j].eval(base.0, base.1));
            let trial = if stacked.rows() == 0 { val.clone() } else { stacked.vstack(&val) };
            let r = trial.svd().rank(1e-8);
            if r > stacked.rows() {
                stacked = trial;
                chosen.push(row_polys);
                if chosen.len() == alpha {
                    break;
                }
            }
        }
        if chosen.len() < alpha {
            continue;
        }
        let mut q = MatrixBiPoly::zeros(alpha, m);
        for (i, row) in chosen.into_iter().enumerate() {
            for (j, poly_ij) in row.into_iter().enumerate() {
                q.set_entry(i, j, poly_ij);
            }
        }
        return Ok(normalize_max_coeff(&q));
    }
    Err(Error::CertificateFailed { what: "row-space degree reduction", residual: f64::NAN })
}

/// Divide by the largest-modulus coefficient (first in scan order on ties)
/// so that coefficient becomes exactly 1.
fn normalize_max_coeff(q: &MatrixBiPoly) -> MatrixBiPoly {
    let mut best = C64::ZERO;
    let mut best_norm = 0.0f64;
    for e in q.entries() {
        let (rows, cols, grid) = e.grid();
        for i in 0..rows {
            for j in 0..cols {
                let v = grid[i * cols + j];
                if v.norm() > best_norm + 1e-15 * best_norm.max(1.0) {
                    best_norm = v.norm();
                    best = v;
                }
            }
        }
    }
    if best_norm == 0.0 {
        return q.clone();
    }
    q.scale(C64::ONE / best)
}

/// Construct the reduced, normalized Q for the symbol at a base point of the
/// variety with joint kernel dimension alpha.
pub fn construct_q(
    col: &Colligation,
    p: &BiPoly,
    base: (C64, C64),
    alpha: usize,
    seed: u64,
) -> Result<MatrixBiPoly> {
    let q_raw = construct_q_raw(col, p, base, alpha)?;
    let q = reduce_q(&q_raw, p, base, seed)?;
    certify_annihilation(&q, col, p, 40, seed ^ 0x9e3779b97f4a7c15)?;
    Ok(q)
}

/// Construct P from Q: fit the minimal-bidegree polynomial matrix agreeing
/// with Q(x) B (I - zD)^{-1} on the variety, then certify the colligation
/// intertwining (Q | zP) U = (wQ | P) at fresh samples.
pub fn construct_p(
    q: &MatrixBiPoly,
    col: &Colligation,
    p: &BiPoly,
    seed: u64,
) -> Result<MatrixBiPoly> {
    let alpha = q.rows();
    let m = col.m();
    let n = col.n();
    if q.cols() != m {
        return Err(Error::Shape { expected: (alpha, m), got: (q.rows(), q.cols()) });
    }
    if n == 0 {
        return Err(Error::Invalid("state dimension is zero; P is empty"));
    }
    let (qdz, qdw) = q.bidegree_envelope();
    let samples = poly::sample_variety(p, (60).max(6 * (qdz + n + 1) * (qdw + 2)), seed, 0.95)?;
    let vals: Vec<CMat> = samples
        .iter()
        .map(|pt| {
            let resolvent_arg = CMat::identity(n).sub(&col.d().scale(pt.z));
            let binv = resolvent_arg.solve(&CMat::identity(n))?;
            Ok(q.eval(pt.z, pt.w).mul(col.b()).mul(&binv))
        })
        .collect::<Result<_>>()?;
    let scale = vals.iter().map(|v| v.max_abs()).fold(0.0, f64::max).max(1e-300);
    let mut degrees: Vec<(usize, usize)> = (0..=qdz + n + p.deg_z())
        .flat_map(|i| (0..=qdw + p.deg_w()).map(move |j| (i, j)))
        .collect();
    degrees.sort_by_key(|&(i, j)| (i + j, i));
    for (dz, dw) in degrees {
        let monomials: Vec<(usize, usize)> =
            (0..=dz).flat_map(|i| (0..=dw).map(move |j| (i, j))).collect();
        if monomials.len() * 2 > samples.len() {
            continue;
        }
        let design = CMat::from_fn(samples.len(), monomials.len(), |t, k| {
            let (iz, jw) = monomials[k];
            samples[t].z.powu(iz as u32) * samples[t].w.powu(jw as u32)
        });
        // one least-squares solve per entry of P against the shared design
        let mut rhs = CMat::zeros(samples.len(), alpha * n);
        for (t, v) in vals.iter().enumerate() {
            for i in 0..alpha {
                for j in 0..n {
                    rhs[(t, i * n + j)] = v[(i, j)];
                }
            }
        }
        let coef = design.solve_lstsq(&rhs, 1e-12);
        let residual = design.mul(&coef).sub(&rhs).max_abs() / scale;
        if residual > 1e-9 {
            continue;
        }
        let mut pmat = MatrixBiPoly::zeros(alpha, n);
        for i in 0..alpha {
            for j in 0..n {
                let mut poly_ij = BiPoly::zero();
                for (k, &(iz, jw)) in monomials.iter().enumerate() {
                    let cc = coef[(k, i * n + j)];
                    if cc.norm() > 1e-12 * scale {
                        poly_ij = poly_ij.add(&BiPoly::monomial(cc, iz, jw));
                    }
                }
                pmat.set_entry(i, j, poly_ij);
            }
        }
        let inter = intertwining_residual(q, &pmat, col, p, seed ^ 0xabcd_1234)?;
        if inter > KERNEL_IDENTITY_TOL {
            return Err(Error::CertificateFailed { what: "colligation intertwining", residual: inter });
        }
        return Ok(pmat);
    }
    Err(Error::CertificateFailed { what: "polynomial fit for P", residual: f64::NAN })
}

/// Max sup-entry residual of (Q | zP) U - (wQ | P) over sampled variety
/// points, relative to the scale of (Q, P).
pub fn intertwining_residual(
    q: &MatrixBiPoly,
    pmat: &MatrixBiPoly,
    col: &Colligation,
    p: &BiPoly,
    seed: u64,
) -> Result<f64> {
    let alpha = q.rows();
    let m = col.m();
    let n = col.n();
    let u = col.assemble();
    let pts = poly::sample_variety(p, 40, seed, 0.95)?;
    let scale = q.max_coeff().max(pmat.max_coeff()).max(1e-300);
    let mut worst = 0.0f64;
    for pt in &pts {
        let qv = q.eval(pt.z, pt.w);
        let pv = pmat.eval(pt.z, pt.w);
        let mut lhs_in = CMat::zeros(alpha, m + n);
        lhs_in.set_block(0, 0, &qv);
        lhs_in.set_block(0, m, &pv.scale(pt.z));
        let lhs = lhs_in.mul(&u);
        let mut rhs = CMat::zeros(alpha, m + n);
        rhs.set_block(0, 0, &qv.scale(pt.w));
        rhs.set_block(0, m, &pv);
        worst = worst.max(lhs.sub(&rhs).max_abs() / scale);
    }
    Ok(worst)
}

/// An admissible kernel triple for a pure isopair: the kernel on the variety
/// is K(x, y) = Q(x)Q(y)^*/(1 - z conj(zeta)) = P(x)P(y)^*/(1 - w conj(eta)).
#[derive(Clone, Debug)]
pub struct AdmissibleTriple {
    pub q: MatrixBiPoly,
    pub p_mat: MatrixBiPoly,
    pub curve: BiPoly,
    pub alpha: usize,
    pub base: (C64, C64),
}

impl AdmissibleTriple {
    /// Build Q and P at a base point and certify both representations.
    pub fn construct(
        col: &Colligation,
        p: &BiPoly,
        base: (C64, C64),
        alpha: usize,
        seed: u64,
    ) -> Result<Self> {
        let q = construct_q(col, p, base, alpha, seed)?;
        let p_mat = construct_p(&q, col, p, seed.wrapping_add(1))?;
        let triple = AdmissibleTriple { q, p_mat, curve: p.clone(), alpha, base };
        let report = triple.verify(50, seed.wrapping_add(2))?;
        if report.kernel_identity_residual > KERNEL_IDENTITY_TOL {
            return Err(Error::CertificateFailed {
                what: "kernel identity",
                residual: report.kernel_identity_residual,
            });
        }
        Ok(triple)
    }

    /// Kernel value K(x, y) as an alpha x alpha matrix, through the Q side.
    pub fn kernel_eval(&self, x: (C64, C64), y: (C64, C64)) -> Result<CMat> {
        let denom = C64::ONE - x.0 * y.0.conj();
        if denom.norm() < 1e-12 {
            return Err(Error::SzegoSingular);
        }
        Ok(self
            .q
            .eval(x.0, x.1)
            .mul(&self.q.eval(y.0, y.1).adjoint())
            .scale(C64::ONE / denom))
    }

    /// Kernel value through the P side.
    pub fn kernel_eval_p(&self, x: (C64, C64), y: (C64, C64)) -> Result<CMat> {
        let denom = C64::ONE - x.1 * y.1.conj();
        if denom.norm() < 1e-12 {
            return Err(Error::SzegoSingular);
        }
        Ok(self
            .p_mat
            .eval(x.0, x.1)
            .mul(&self.p_mat.eval(y.0, y.1).adjoint())
            .scale(C64::ONE / denom))
    }

    /// Verify the triple on sampled point pairs: the two kernel
    /// representations agree, Q has full rank alpha at the base, and Q still
    /// annihilates the symbol direction pointwise through the curve.
    pub fn verify(&self, pair_samples: usize, seed: u64) -> Result<AdmissibleReport> {
        let xs = poly::sample_variety(&self.curve, pair_samples, seed, 0.95)?;
        let ys = poly::sample_variety(&self.curve, pair_samples, seed ^ 0x5555_aaaa, 0.95)?;
        let scale = self.q.max_coeff().max(self.p_mat.max_coeff()).powi(2).max(1e-300);
        let mut worst = 0.0f64;
        for (x, y) in xs.iter().zip(&ys) {
            let kq = self.kernel_eval((x.z, x.w), (y.z, y.w))?;
            let kp = self.kernel_eval_p((x.z, x.w), (y.z, y.w))?;
            worst = worst.max(kq.sub(&kp).max_abs() / scale);
        }
        let q_base = self.q.eval(self.base.0, self.base.1);
        let q_rank = q_base.svd().rank(1e-8);
        let p_base = self.p_mat.eval(self.base.0, self.base.1);
        let p_rank = p_base.svd().rank(1e-8);
        Ok(AdmissibleReport {
            kernel_identity_residual: worst,
            q_base_rank: q_rank,
            p_base_rank: p_rank,
            alpha: self.alpha,
        })
    }
}

#[derive(Clone, Debug)]
pub struct AdmissibleReport {
    /// Max pointwise deviation between the Q-side and P-side kernels.
    pub kernel_identity_residual: f64,
    pub q_base_rank: usize,
    pub p_base_rank: usize,
    pub alpha: usize,
}

/// Unitarity of the kernel-section to model-vector correspondence: the Gram
/// of sections gamma_t^* K(., x_t) gamma_t computed through the kernel
/// formula must match the Gram of the vectors v_t = s_{zeta_t} Q(x_t)^*
/// gamma_t computed independently by Taylor-coefficient expansion in the
/// vector Hardy space (coefficient of z^k is conj(zeta_t)^k Q(x_t)^* gamma_t,
/// summed far past machine precision since |zeta| <= 0.6).
/// Returns the max entrywise deviation between the two Grams.
pub fn gram_unitarity_check(triple: &AdmissibleTriple, points: usize, seed: u64) -> Result<f64> {
    let pts = poly::sample_variety(&triple.curve, points, seed, 0.6)?;
    let alpha = triple.alpha;
    let m = triple.q.cols();
    let n_sec = pts.len();
    // gamma_t cycles through the standard basis of C^alpha
    let gammas: Vec<usize> = (0..n_sec).map(|t| t % alpha).collect();
    // Gram through the kernel: G1[s, t] = e_{g_s}^* K(x_s, x_t) e_{g_t}
    let mut g_kernel = CMat::zeros(n_sec, n_sec);
    for s in 0..n_sec {
        for t in 0..n_sec {
            let k = triple.kernel_eval((pts[s].z, pts[s].w), (pts[t].z, pts[t].w))?;
            g_kernel[(s, t)] = k[(gammas[s], gammas[t])];
        }
    }
    // Gram through model-space coefficients: v_t has k-th Taylor coefficient
    // conj(zeta_t)^k u_t with u_t = Q(x_t)^* e_{g_t} in C^m, so
    // <v_t, v_s> = sum_k (conj(zeta_t) zeta_s)^k <u_t, u_s>
    //            = <u_t, u_s> / (1 - zeta_s conj(zeta_t)), summed explicitly.
    let us: Vec<CMat> = (0..n_sec)
        .map(|t| {
            let qh = triple.q.eval(pts[t].z, pts[t].w).adjoint();
            qh.block(0, gammas[t], m, 1)
        })
        .collect();
    const TERMS: usize = 160; // 0.6^160 ~ 4e-36, far below any tolerance
    let mut g_model = CMat::zeros(n_sec, n_sec);
    for s in 0..n_sec {
        for t in 0..n_sec {
            let ratio = pts[s].z * pts[t].z.conj();
            let mut geom = C64::ZERO;
            let mut pow = C64::ONE;
            for _ in 0..TERMS {
                geom += pow;
                pow *= ratio;
            }
            let mut inner = C64::ZERO;
            for i in 0..m {
                inner += us[s][(i, 0)].conj() * us[t][(i, 0)];
            }
            g_model[(s, t)] = inner * geom;
        }
    }
    Ok(g_kernel.sub(&g_model).max_abs())
}

/// Orthonormality of the monomial-times-section basis under the kernel: the
/// functions f_{(a, j)} = z^a q_j (q_j the j-th column of Q^T viewed as a
/// C^alpha-valued function on the variety) should be orthonormal in the
/// kernel Hilbert space up to degree `a_max`. The Gram is estimated from a
/// structured sample set (circle nodes with all their fiber roots) via
/// Ghat = F^* G^+ F where G is the sampled kernel Gram and F the sampled
/// basis evaluations; returns the max deviation of Ghat from the identity.
pub fn basis_orthonormality_check(
    triple: &AdmissibleTriple,
    a_max: usize,
    seed: u64,
) -> Result<f64> {
    let p = &triple.curve;
    let alpha = triple.alpha;
    let m = triple.q.cols();
    // structured nodes: rings of z values with every interior fiber root,
    // so the samples see all sheets of the variety
    let mut nodes: Vec<(C64, C64)> = Vec::new();
    let rings = [0.42, 0.5, 0.58];
    let per_ring = (14 + 6 * a_max).max(20);
    let mut rot = 0.0f64;
    for &r in &rings {
        for k in 0..per_ring {
            let theta = core::f64::consts::TAU * (k as f64) / (per_ring as f64) + rot;
            let z = c(r * theta.cos(), r * theta.sin());
            let fiber = p.slice_at_z(z);
            for root in fiber.roots()? {
                if root.norm() < 1.0 - 1e-9 {
                    nodes.push((z, root));
                }
            }
        }
        rot += 0.31 + (seed % 7) as f64 * 1e-3;
    }
    if nodes.is_empty() {
        return Err(Error::SamplingExhausted);
    }
    // sections: standard basis vectors cycled per node
    let n_nodes = nodes.len();
    let sections: Vec<usize> = (0..n_nodes * alpha).map(|u| u % alpha).collect();
    let n_sec = n_nodes * alpha;
    let node_of = |u: usize| u / alpha;
    let mut g = CMat::zeros(n_sec, n_sec);
    for u in 0..n_sec {
        for v in 0..n_sec {
            let k = triple.kernel_eval(nodes[node_of(u)], nodes[node_of(v)])?;
            g[(u, v)] = k[(sections[u], sections[v])];
        }
    }
    // basis functions: m per degree level (columns of Q give C^alpha values)
    let n_basis = (a_max + 1) * m;
    let mut f = CMat::zeros(n_sec, n_basis);
    for u in 0..n_sec {
        let (z, w) = nodes[node_of(u)];
        let qv = triple.q.eval(z, w); // alpha x m
        for a in 0..=a_max {
            let za = z.powu(a as u32);
            for j in 0..m {
                f[(u, a * m + j)] = za * qv[(sections[u], j)];
            }
        }
    }
    // Ghat = F^* G^+ F through the Hermitian eigendecomposition of G
    let eig = g.herm_eig();
    let lam_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if lam_max <= 0.0 {
        return Err(Error::Invalid("sampled kernel Gram is zero"));
    }
    let cutoff = 2e-13 * lam_max;
    let mut ginv_f = CMat::zeros(n_sec, n_basis);
    let wh_f = eig.vectors.adjoint().mul(&f);
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam > cutoff {
            for jj in 0..n_basis {
                ginv_f[(i, jj)] = wh_f[(i, jj)] / lam;
            }
        }
    }
    let ghat = wh_f.adjoint().mul(&ginv_f);
    let mut dev = 0.0f64;
    for i in 0..n_basis {
        for j in 0..n_basis {
            let target = if i == j { C64::ONE } else { C64::ZERO };
            dev = dev.max((ghat[(i, j)] - target).norm());
        }
    }
    Ok(dev)
}
