//! Unitary colligations U = [[A, B], [C, D]] and their transfer functions
//! Phi(z) = A + z B (I - z D)^{-1} C, together with the defect factorization
//! I - Phi(mu) Phi(lambda)^* = (1 - mu conj(lambda)) F(mu) F(lambda)^* and
//! the lurking-isometry reconstruction of a colligation from samples.

use alloc::vec::Vec;
use num_complex::Complex;

use crate::cmat::CMat;
use crate::poly::UniPoly;
use crate::{Error, Result, C64};

#[inline]
fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Frobenius tolerance for "U is unitary".
pub const UNITARITY_TOL: f64 = 1e-10;
/// Margin keeping the state contraction strictly inside the disk.
const SPECTRUM_MARGIN: f64 = 1e-12;

/// Unitary colligation with signal dimension M and state dimension N.
#[derive(Clone, Debug)]
pub struct Colligation {
    a: CMat, // M x M
    b: CMat, // M x N
    c: CMat, // N x M
    d: CMat, // N x N
}

impl Colligation {
    /// Validate block shapes, unitarity of the assembled matrix, and strict
    /// contractivity of the state block D.
    pub fn new(a: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self> {
        let m = a.rows();
        let n = d.rows();
        if a.cols() != m {
            return Err(Error::BadColligation("A must be square"));
        }
        if d.cols() != n {
            return Err(Error::BadColligation("D must be square"));
        }
        if b.rows() != m || b.cols() != n {
            return Err(Error::BadColligation("B must be M x N"));
        }
        if c.rows() != n || c.cols() != m {
            return Err(Error::BadColligation("C must be N x M"));
        }
        let col = Colligation { a, b, c, d };
        let defect = col.assemble().unitarity_defect();
        if defect > UNITARITY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        if n > 0 {
            let eigs = col.d.eigenvalues()?;
            if eigs.iter().any(|e| e.norm() >= 1.0 - SPECTRUM_MARGIN) {
                return Err(Error::SpectrumNotInDisk);
            }
        }
        Ok(col)
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.d.rows()
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn c(&self) -> &CMat {
        &self.c
    }

    pub fn d(&self) -> &CMat {
        &self.d
    }

    /// The (M+N) x (M+N) block matrix [[A, B], [C, D]].
    pub fn assemble(&self) -> CMat {
        let m = self.m();
        let n = self.n();
        let mut u = CMat::zeros(m + n, m + n);
        u.set_block(0, 0, &self.a);
        u.set_block(0, m, &self.b);
        u.set_block(m, 0, &self.c);
        u.set_block(m, m, &self.d);
        u
    }

    /// Split a square matrix into colligation blocks with signal dimension m.
    pub fn from_blocks(u: &CMat, m: usize) -> Result<Self> {
        if !u.is_square() || m > u.rows() {
            return Err(Error::BadColligation("cannot split blocks"));
        }
        let n = u.rows() - m;
        Colligation::new(
            u.block(0, 0, m, m),
            u.block(0, m, m, n),
            u.block(m, 0, n, m),
            u.block(m, m, n, n),
        )
    }

    /// Transfer function value Phi(z); defined on a neighborhood of the
    /// closed disk since the spectrum of D is strictly inside it.
    pub fn transfer(&self, z: C64) -> Result<CMat> {
        let n = self.n();
        if n == 0 {
            return Ok(self.a.clone());
        }
        let resolvent_arg = CMat::identity(n).sub(&self.d.scale(z));
        let x = resolvent_arg.solve(&self.c)?; // (I - zD)^{-1} C
        Ok(self.a.add(&self.b.scale(z).mul(&x)))
    }

    /// Taylor coefficient of Phi at the origin: Phi_0 = A, Phi_k = B D^{k-1} C.
    pub fn taylor_coeff(&self, k: usize) -> CMat {
        if k == 0 {
            return self.a.clone();
        }
        if self.n() == 0 {
            return CMat::zeros(self.m(), self.m());
        }
        let mut dk = CMat::identity(self.n());
        for _ in 0..k - 1 {
            dk = dk.mul(&self.d);
        }
        self.b.mul(&dk).mul(&self.c)
    }

    /// Max deviation of Phi from unitarity over uniformly sampled boundary
    /// points, in Frobenius norm.
    pub fn inner_deviation(&self, samples: usize) -> Result<f64> {
        let eye = CMat::identity(self.m());
        let mut worst = 0.0f64;
        for k in 0..samples {
            let t = core::f64::consts::TAU * (k as f64) / (samples as f64);
            let z = c(t.cos(), t.sin());
            let phi = self.transfer(z)?;
            worst = worst.max(phi.adjoint().mul(&phi).sub(&eye).fro_norm());
        }
        Ok(worst)
    }

    /// Monic characteristic polynomial w -> det(wI - Phi(z)).
    pub fn char_poly(&self, z: C64) -> Result<UniPoly> {
        let eigs = self.transfer(z)?.eigenvalues()?;
        Ok(UniPoly::from_roots(&eigs))
    }
}

/// Direct sum of two colligations; the transfer function is the block
/// diagonal of the two transfer functions.
pub fn direct_sum(x: &Colligation, y: &Colligation) -> Result<Colligation> {
    let blk = |p: &CMat, q: &CMat| -> CMat {
        let mut out = CMat::zeros(p.rows() + q.rows(), p.cols() + q.cols());
        out.set_block(0, 0, p);
        out.set_block(p.rows(), p.cols(), q);
        out
    };
    Colligation::new(
        blk(&x.a, &y.a),
        blk(&x.b, &y.b),
        blk(&x.c, &y.c),
        blk(&x.d, &y.d),
    )
}

/// Defect factor values F(mu_i) at the sample points: square matrices
/// satisfying I - Phi(mu)Phi(lambda)^* = (1 - mu conj(lambda)) F(mu)F(lambda)^*
/// with a common right gauge across all points.
#[derive(Clone, Debug)]
pub struct DefectFactor {
    pub points: Vec<C64>,
    /// F(mu_i), each M x rank.
    pub values: Vec<CMat>,
    /// Numerical rank of the defect Gram; equals the state dimension of a
    /// minimal realization.
    pub rank: usize,
}

/// Eigenvalues of the defect Gram below this (relative) threshold are noise.
const DEFECT_RANK_TOL: f64 = 1e-10;

/// Factor the defect kernel of an inner function from its values at distinct
/// points of the open disk. `phi` evaluates the symbol.
pub fn defect_factor(points: &[C64], phi: impl Fn(C64) -> Result<CMat>) -> Result<DefectFactor> {
    if points.is_empty() {
        return Err(Error::Invalid("defect factorization needs sample points"));
    }
    let first = phi(points[0])?;
    let m = first.rows();
    if first.cols() != m {
        return Err(Error::Shape { expected: (m, m), got: (first.rows(), first.cols()) });
    }
    let s = points.len();
    let mut values_phi = Vec::with_capacity(s);
    values_phi.push(first);
    for &pt in &points[1..] {
        if pt.norm() >= 1.0 {
            return Err(Error::Invalid("defect samples must lie in the open disk"));
        }
        values_phi.push(phi(pt)?);
    }
    let eye = CMat::identity(m);
    let mut gram = CMat::zeros(s * m, s * m);
    for i in 0..s {
        for j in 0..s {
            let denom = C64::ONE - points[i] * points[j].conj();
            if denom.norm() < 1e-14 {
                return Err(Error::SzegoSingular);
            }
            let block = eye.sub(&values_phi[i].mul(&values_phi[j].adjoint())).scale(C64::ONE / denom);
            gram.set_block(i * m, j * m, &block);
        }
    }
    let eig = gram.herm_eig();
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&lmin) = eig.values.last() {
        if lmin < -1e-8 * lmax.max(1.0) {
            return Err(Error::NotInner { deviation: -lmin });
        }
    }
    let rank = eig.values.iter().take_while(|&&v| v > DEFECT_RANK_TOL * lmax).count();
    let mut f_all = CMat::zeros(s * m, rank);
    for j in 0..rank {
        let scale = eig.values[j].max(0.0).sqrt();
        for i in 0..s * m {
            f_all[(i, j)] = eig.vectors[(i, j)] * scale;
        }
    }
    let values = (0..s).map(|i| f_all.block(i * m, 0, m, rank)).collect();
    Ok(DefectFactor { points: points.to_vec(), values, rank })
}

/// Residual tolerance for the lurking-isometry system.
pub const ISOMETRY_TOL: f64 = 1e-7;

/// Reconstruct a unitary colligation from samples of an inner function and a
/// compatible defect factor: solve the lurking isometry that sends
/// (gamma; conj(lambda) F(lambda)^* gamma) to (Phi(lambda)^* gamma; F(lambda)^* gamma)
/// and read the colligation off its adjoint. Deterministic gauge: the
/// orthonormal completion brings in standard basis vectors in index order.
pub fn realize_from_samples(
    points: &[C64],
    phi_values: &[CMat],
    defect: &DefectFactor,
) -> Result<Colligation> {
    if points.len() != phi_values.len() || points.len() != defect.points.len() {
        return Err(Error::Invalid("sample sets must align"));
    }
    for (a, b) in points.iter().zip(&defect.points) {
        if (a - b).norm() > 0.0 {
            return Err(Error::Invalid("defect factor was built at different points"));
        }
    }
    let s = points.len();
    let m = phi_values[0].rows();
    let n = defect.rank;
    let dim = m + n;
    let mut x = CMat::zeros(dim, s * m);
    let mut y = CMat::zeros(dim, s * m);
    for i in 0..s {
        let lam = points[i];
        let fh = defect.values[i].adjoint(); // rank x M
        let ph = phi_values[i].adjoint(); // M x M
        for k in 0..m {
            let col = i * m + k;
            for r in 0..m {
                x[(r, col)] = if r == k { C64::ONE } else { C64::ZERO };
                y[(r, col)] = ph[(r, k)];
            }
            for r in 0..n {
                x[(m + r, col)] = lam.conj() * fh[(r, k)];
                y[(m + r, col)] = fh[(r, k)];
            }
        }
    }
    let svd = x.svd();
    let rank = svd.rank(1e-10);
    // images of the orthonormal range basis of X under the isometry
    let vr = svd.v.block(0, 0, s * m, rank);
    let mut q_y = y.mul(&vr);
    for j in 0..rank {
        let sj = svd.s[j];
        for i in 0..dim {
            q_y[(i, j)] = q_y[(i, j)] / sj;
        }
    }
    let residual = q_y.adjoint().mul(&q_y).sub(&CMat::identity(rank)).fro_norm();
    if residual > ISOMETRY_TOL {
        return Err(Error::IsometryResidual { residual });
    }
    let ux = svd.u.block(0, 0, dim, rank);
    let (ux_full, qy_full) = if rank < dim {
        (ux.complete_orthonormal(), q_y.complete_orthonormal())
    } else {
        (ux, q_y)
    };
    let v = qy_full.mul(&ux_full.adjoint());
    let u = v.adjoint();
    Colligation::from_blocks(&u, m)
}
