//! Univariate and bivariate complex polynomials, root finding through
//! balanced companion matrices, resultants by evaluation-interpolation at
//! roots of unity, and the inner-toral certification / variety sampling
//! routines built on top of them.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmat::{uniform01, CMat};
use crate::{Error, Result, C64};

#[inline]
fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

const TAU: f64 = core::f64::consts::TAU;

/// Polynomial in one variable, coefficients in ascending degree order.
/// The zero polynomial is an empty coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    pub coeffs: Vec<C64>,
}

impl UniPoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = UniPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        UniPoly { coeffs: vec![C64::ONE] }
    }

    pub fn constant(v: C64) -> Self {
        UniPoly::new(vec![v])
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(z) if *z == C64::ZERO) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(C64::ZERO)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = C64::ZERO;
        for &ck in self.coeffs.iter().rev() {
            acc = acc * x + ck;
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero();
        }
        UniPoly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck * ((k + 1) as f64))
                .collect(),
        )
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![C64::ZERO; n];
        for (k, &ck) in self.coeffs.iter().enumerate() {
            out[k] += ck;
        }
        for (k, &ck) in other.coeffs.iter().enumerate() {
            out[k] += ck;
        }
        UniPoly::new(out)
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|&ck| ck * s).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![C64::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == C64::ZERO {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> UniPoly {
        let mut p = UniPoly::one();
        for &r in roots {
            p = p.mul(&UniPoly::new(vec![-r, C64::ONE]));
        }
        p
    }

    pub fn monic(&self) -> Result<UniPoly> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let l = self.leading();
        Ok(self.scale(C64::ONE / l))
    }

    /// All complex roots via the balanced companion matrix, with two Newton
    /// polish steps per root. Leading coefficients below `1e-13` of the
    /// largest are treated as zero (degree drop).
    pub fn roots(&self) -> Result<Vec<C64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let maxc = self.max_coeff();
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= 1e-13 * maxc {
            coeffs.pop();
        }
        let n = coeffs.len() - 1;
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = coeffs[n];
        let mut comp = CMat::zeros(n, n);
        for i in 0..n {
            comp[(0, i)] = -coeffs[n - 1 - i] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = C64::ONE;
        }
        let mut roots = comp.eigenvalues()?;
        let dp = self.derivative();
        for r in roots.iter_mut() {
            for _ in 0..2 {
                let d = dp.eval(*r);
                if d.norm() <= 1e-14 * maxc {
                    break;
                }
                let step = self.eval(*r) / d;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                *r -= step;
            }
        }
        // deterministic order: by real part, then imaginary part
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }
}

/// Cluster a list of complex numbers: points within `radius` of an existing
/// cluster representative are merged into it. Returns (representative,
/// multiplicity) pairs in first-seen order.
pub fn cluster_points(points: &[C64], radius: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &p in points {
        if let Some(slot) = out.iter_mut().find(|(q, _)| (p - *q).norm() <= radius) {
            // running mean keeps the representative centered
            let k = slot.1 as f64;
            slot.0 = (slot.0 * k + p) / (k + 1.0);
            slot.1 += 1;
        } else {
            out.push((p, 1));
        }
    }
    out
}

/// Polynomial in two variables z and w. Coefficient grid is stored row-major
/// with rows indexed by the z-exponent and columns by the w-exponent; the
/// grid is trimmed so the last row and last column hold a nonzero entry
/// (except for the zero polynomial, stored as a single zero).
#[derive(Clone, Debug, PartialEq)]
pub struct BiPoly {
    zdeg1: usize, // rows = deg_z + 1
    wdeg1: usize, // cols = deg_w + 1
    coeffs: Vec<C64>,
}

impl BiPoly {
    pub fn from_grid(rows: usize, cols: usize, coeffs: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || coeffs.len() != rows * cols {
            return Err(Error::Invalid("coefficient grid shape mismatch"));
        }
        let mut p = BiPoly { zdeg1: rows, wdeg1: cols, coeffs };
        p.trim();
        Ok(p)
    }

    pub fn zero() -> Self {
        BiPoly { zdeg1: 1, wdeg1: 1, coeffs: vec![C64::ZERO] }
    }

    pub fn constant(v: C64) -> Self {
        BiPoly { zdeg1: 1, wdeg1: 1, coeffs: vec![v] }
    }

    /// The monomial c * z^i * w^j.
    pub fn monomial(coeff: C64, i: usize, j: usize) -> Self {
        let mut coeffs = vec![C64::ZERO; (i + 1) * (j + 1)];
        coeffs[i * (j + 1) + j] = coeff;
        let mut p = BiPoly { zdeg1: i + 1, wdeg1: j + 1, coeffs };
        p.trim();
        p
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        if i < self.zdeg1 && j < self.wdeg1 {
            self.coeffs[i * self.wdeg1 + j]
        } else {
            C64::ZERO
        }
    }

    fn trim(&mut self) {
        let nz_row = |p: &Self, i: usize| (0..p.wdeg1).any(|j| p.coeffs[i * p.wdeg1 + j] != C64::ZERO);
        let nz_col = |p: &Self, j: usize| (0..p.zdeg1).any(|i| p.coeffs[i * p.wdeg1 + j] != C64::ZERO);
        let mut rows = self.zdeg1;
        while rows > 1 && !nz_row(self, rows - 1) {
            rows -= 1;
        }
        let mut cols = self.wdeg1;
        while cols > 1 && !nz_col(self, cols - 1) {
            cols -= 1;
        }
        if rows != self.zdeg1 || cols != self.wdeg1 {
            let mut out = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for j in 0..cols {
                    out.push(self.coeffs[i * self.wdeg1 + j]);
                }
            }
            self.zdeg1 = rows;
            self.wdeg1 = cols;
            self.coeffs = out;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&z| z == C64::ZERO)
    }

    pub fn deg_z(&self) -> usize {
        self.zdeg1 - 1
    }

    pub fn deg_w(&self) -> usize {
        self.wdeg1 - 1
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.deg_z(), self.deg_w())
    }

    pub fn total_degree(&self) -> usize {
        let mut d = 0;
        for i in 0..self.zdeg1 {
            for j in 0..self.wdeg1 {
                if self.coeffs[i * self.wdeg1 + j] != C64::ZERO {
                    d = d.max(i + j);
                }
            }
        }
        d
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Row-major coefficient grid and its shape.
    pub fn grid(&self) -> (usize, usize, &[C64]) {
        (self.zdeg1, self.wdeg1, &self.coeffs)
    }

    pub fn eval(&self, z: C64, w: C64) -> C64 {
        // Horner in z over rows, each row Horner in w
        let mut acc = C64::ZERO;
        for i in (0..self.zdeg1).rev() {
            let mut row = C64::ZERO;
            for j in (0..self.wdeg1).rev() {
                row = row * w + self.coeffs[i * self.wdeg1 + j];
            }
            acc = acc * z + row;
        }
        acc
    }

    /// The univariate slice w -> p(z0, w).
    pub fn slice_at_z(&self, z0: C64) -> UniPoly {
        let mut out = vec![C64::ZERO; self.wdeg1];
        for i in (0..self.zdeg1).rev() {
            for j in 0..self.wdeg1 {
                out[j] = out[j] * z0 + self.coeffs[i * self.wdeg1 + j];
            }
        }
        UniPoly::new(out)
    }

    /// The univariate slice z -> p(z, w0).
    pub fn slice_at_w(&self, w0: C64) -> UniPoly {
        let mut out = vec![C64::ZERO; self.zdeg1];
        for j in (0..self.wdeg1).rev() {
            for i in 0..self.zdeg1 {
                out[i] = out[i] * w0 + self.coeffs[i * self.wdeg1 + j];
            }
        }
        UniPoly::new(out)
    }

    /// Coefficient of w^j as a polynomial in z.
    pub fn w_coeff(&self, j: usize) -> UniPoly {
        UniPoly::new((0..self.zdeg1).map(|i| self.coeff(i, j)).collect())
    }

    /// Leading coefficient in w as a polynomial in z.
    pub fn leading_w_coeff(&self) -> UniPoly {
        self.w_coeff(self.deg_w())
    }

    pub fn partial_z(&self) -> BiPoly {
        if self.zdeg1 == 1 {
            return BiPoly::zero();
        }
        let rows = self.zdeg1 - 1;
        let mut out = vec![C64::ZERO; rows * self.wdeg1];
        for i in 1..self.zdeg1 {
            for j in 0..self.wdeg1 {
                out[(i - 1) * self.wdeg1 + j] = self.coeffs[i * self.wdeg1 + j] * (i as f64);
            }
        }
        BiPoly::from_grid(rows, self.wdeg1, out).expect("derivative grid")
    }

    pub fn partial_w(&self) -> BiPoly {
        if self.wdeg1 == 1 {
            return BiPoly::zero();
        }
        let cols = self.wdeg1 - 1;
        let mut out = vec![C64::ZERO; self.zdeg1 * cols];
        for i in 0..self.zdeg1 {
            for j in 1..self.wdeg1 {
                out[i * cols + (j - 1)] = self.coeffs[i * self.wdeg1 + j] * (j as f64);
            }
        }
        BiPoly::from_grid(self.zdeg1, cols, out).expect("derivative grid")
    }

    /// Gradient (p_z, p_w) evaluated at a point.
    pub fn gradient(&self, z: C64, w: C64) -> (C64, C64) {
        (self.partial_z().eval(z, w), self.partial_w().eval(z, w))
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let rows = self.zdeg1.max(other.zdeg1);
        let cols = self.wdeg1.max(other.wdeg1);
        let mut out = vec![C64::ZERO; rows * cols];
        for i in 0..self.zdeg1 {
            for j in 0..self.wdeg1 {
                out[i * cols + j] += self.coeffs[i * self.wdeg1 + j];
            }
        }
        for i in 0..other.zdeg1 {
            for j in 0..other.wdeg1 {
                out[i * cols + j] += other.coeffs[i * other.wdeg1 + j];
            }
        }
        BiPoly::from_grid(rows, cols, out).expect("sum grid")
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> BiPoly {
        let mut p = BiPoly {
            zdeg1: self.zdeg1,
            wdeg1: self.wdeg1,
            coeffs: self.coeffs.iter().map(|&x| x * s).collect(),
        };
        p.trim();
        p
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        if self.is_zero() || other.is_zero() {
            return BiPoly::zero();
        }
        let rows = self.zdeg1 + other.zdeg1 - 1;
        let cols = self.wdeg1 + other.wdeg1 - 1;
        let mut out = vec![C64::ZERO; rows * cols];
        for i1 in 0..self.zdeg1 {
            for j1 in 0..self.wdeg1 {
                let a = self.coeffs[i1 * self.wdeg1 + j1];
                if a == C64::ZERO {
                    continue;
                }
                for i2 in 0..other.zdeg1 {
                    for j2 in 0..other.wdeg1 {
                        out[(i1 + i2) * cols + (j1 + j2)] += a * other.coeffs[i2 * other.wdeg1 + j2];
                    }
                }
            }
        }
        BiPoly::from_grid(rows, cols, out).expect("product grid")
    }

    pub fn pow(&self, k: usize) -> BiPoly {
        let mut acc = BiPoly::constant(C64::ONE);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Swap the roles of z and w (transpose the coefficient grid).
    pub fn swap_vars(&self) -> BiPoly {
        let mut out = vec![C64::ZERO; self.coeffs.len()];
        for i in 0..self.zdeg1 {
            for j in 0..self.wdeg1 {
                out[j * self.zdeg1 + i] = self.coeffs[i * self.wdeg1 + j];
            }
        }
        BiPoly { zdeg1: self.wdeg1, wdeg1: self.zdeg1, coeffs: out }
    }

    /// Scalar multiples of one another (used to reject repeated factors).
    pub fn is_scalar_multiple_of(&self, other: &BiPoly, tol: f64) -> bool {
        if self.bidegree() != other.bidegree() {
            return false;
        }
        let (sa, sb) = (self.max_coeff(), other.max_coeff());
        if sa == 0.0 || sb == 0.0 {
            return sa == sb;
        }
        // ratio at the largest coefficient of self
        let (mut bi, mut bj, mut best) = (0, 0, 0.0);
        for i in 0..self.zdeg1 {
            for j in 0..self.wdeg1 {
                let v = self.coeff(i, j).norm();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        let ob = other.coeff(bi, bj);
        if ob.norm() <= tol * sb {
            return false;
        }
        let ratio = self.coeff(bi, bj) / ob;
        self.sub(&other.scale(ratio)).max_coeff() <= tol * sa.max(sb * ratio.norm())
    }
}

/// Resultant of p and q with respect to w, a polynomial in z, computed by
/// evaluating the Sylvester determinant at roots of unity and interpolating
/// by inverse DFT. The Sylvester matrix uses the formal w-degrees.
pub fn resultant_w(p: &BiPoly, q: &BiPoly) -> Result<UniPoly> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let (dp, dq) = (p.deg_w(), q.deg_w());
    if dp == 0 && dq == 0 {
        return Ok(UniPoly::one());
    }
    // deg_z Res <= deg_z(p) * deg_w(q) + deg_z(q) * deg_w(p)
    let dmax = p.deg_z() * dq + q.deg_z() * dp;
    let nn = dmax + 1;
    let mut values = Vec::with_capacity(nn);
    for k in 0..nn {
        let t = TAU * (k as f64) / (nn as f64);
        let zk = c(t.cos(), t.sin());
        values.push(sylvester_det(&p.slice_at_z(zk), dp, &q.slice_at_z(zk), dq));
    }
    // inverse DFT at the same roots of unity
    let mut coeffs = Vec::with_capacity(nn);
    for j in 0..nn {
        let mut acc = C64::ZERO;
        for (k, &v) in values.iter().enumerate() {
            let t = -TAU * (j as f64) * (k as f64) / (nn as f64);
            acc += v * c(t.cos(), t.sin());
        }
        coeffs.push(acc / (nn as f64));
    }
    // snap coefficients that are pure interpolation noise to zero
    let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in coeffs.iter_mut() {
        if z.norm() <= 1e-13 * scale {
            *z = C64::ZERO;
        }
    }
    Ok(UniPoly::new(coeffs))
}

/// Determinant of the Sylvester matrix of u (formal degree du) and v (formal
/// degree dv); zero formal-leading coefficients are kept as zeros.
fn sylvester_det(u: &UniPoly, du: usize, v: &UniPoly, dv: usize) -> C64 {
    let n = du + dv;
    if n == 0 {
        return C64::ONE;
    }
    let uc = |k: usize| u.coeffs.get(k).copied().unwrap_or(C64::ZERO);
    let vc = |k: usize| v.coeffs.get(k).copied().unwrap_or(C64::ZERO);
    let mut s = CMat::zeros(n, n);
    for r in 0..dv {
        for k in 0..=du {
            s[(r, r + du - k)] = uc(k);
        }
    }
    for r in 0..du {
        for k in 0..=dv {
            s[(dv + r, r + dv - k)] = vc(k);
        }
    }
    s.det()
}

/// Square-free test: the discriminant resultant in each variable of positive
/// degree must be nonzero relative to the input scale.
pub fn is_square_free(p: &BiPoly, rel_tol: f64) -> Result<bool> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.deg_z() == 0 && p.deg_w() == 0 {
        return Err(Error::Invalid("square-free test needs a nonconstant polynomial"));
    }
    let mut ok = true;
    if p.deg_w() >= 1 {
        let r = resultant_w(p, &p.partial_w())?;
        let order = (p.deg_z() * (p.deg_w() - 1) + p.deg_z() * p.deg_w()).max(1);
        let scale = p.max_coeff().max(1.0).powi(order as i32).max(1.0);
        ok &= r.max_coeff() > rel_tol * scale;
    }
    if ok && p.deg_z() >= 1 {
        let ps = p.swap_vars();
        let r = resultant_w(&ps, &ps.partial_w())?;
        let order = (ps.deg_z() * (ps.deg_w() - 1) + ps.deg_z() * ps.deg_w()).max(1);
        let scale = p.max_coeff().max(1.0).powi(order as i32).max(1.0);
        ok &= r.max_coeff() > rel_tol * scale;
    }
    Ok(ok)
}

/// Parameters in the closed unit disk where the w-fiber of p degenerates:
/// roots in the disk of the discriminant resultant together with roots of
/// the leading w-coefficient. Clustered at radius 1e-6.
pub fn exceptional_lambdas(p: &BiPoly) -> Result<Vec<C64>> {
    if p.deg_w() == 0 {
        return Err(Error::DegenerateBidegree);
    }
    let mut bad: Vec<C64> = Vec::new();
    let disc = resultant_w(p, &p.partial_w())?;
    let order = (p.deg_z() * (p.deg_w().saturating_sub(1)) + p.deg_z() * p.deg_w()).max(1);
    let scale = p.max_coeff().max(1.0).powi(order as i32).max(1.0);
    if p.deg_w() >= 2 {
        if disc.max_coeff() <= 1e-10 * scale {
            return Err(Error::NotSquareFree);
        }
        if disc.degree() >= 1 {
            bad.extend(disc.roots()?);
        }
    }
    let lead = p.leading_w_coeff();
    if lead.degree() >= 1 && !lead.is_zero() {
        bad.extend(lead.roots()?);
    }
    let kept: Vec<C64> = bad.into_iter().filter(|z| z.norm() < 1.0 + 1e-9).collect();
    Ok(cluster_points(&kept, 1e-6).into_iter().map(|(z, _)| z).collect())
}

/// One fiber direction of the inner-toral check.
#[derive(Clone, Debug)]
pub struct DirectionReport {
    /// Max of | |root| - 1 | over fibers based at boundary parameters.
    pub boundary_max_deviation: f64,
    /// Max root modulus over fibers based at interior parameters.
    pub interior_max_modulus: f64,
    /// Sample points (parameter, root) violating the inner-toral pattern.
    pub witnesses: Vec<(C64, C64)>,
    /// Sampled parameters whose fiber polynomial vanished identically.
    pub degenerate_fibers: Vec<C64>,
}

/// Certification report for the inner-toral zero-set pattern.
#[derive(Clone, Debug)]
pub struct InnerToralReport {
    pub verdict: bool,
    /// Fibers in w over sampled z parameters.
    pub z_direction: DirectionReport,
    /// Fibers in z over sampled w parameters.
    pub w_direction: DirectionReport,
    pub tol: f64,
}

const WITNESS_CAP: usize = 8;

fn check_direction(
    p: &BiPoly,
    boundary_samples: usize,
    interior_samples: usize,
    tol: f64,
) -> Result<DirectionReport> {
    let mut rep = DirectionReport {
        boundary_max_deviation: 0.0,
        interior_max_modulus: 0.0,
        witnesses: Vec::new(),
        degenerate_fibers: Vec::new(),
    };
    let scale = p.max_coeff();
    let fiber_roots = |lam: C64| -> Result<Option<Vec<C64>>> {
        let u = p.slice_at_z(lam);
        if u.max_coeff() <= 1e-14 * scale {
            return Ok(None);
        }
        Ok(Some(u.roots()?))
    };
    for k in 0..boundary_samples {
        let t = TAU * (k as f64) / (boundary_samples as f64);
        let lam = c(t.cos(), t.sin());
        match fiber_roots(lam)? {
            None => rep.degenerate_fibers.push(lam),
            Some(roots) => {
                for mu in roots {
                    let dev = (mu.norm() - 1.0).abs();
                    rep.boundary_max_deviation = rep.boundary_max_deviation.max(dev);
                    if dev > tol && rep.witnesses.len() < WITNESS_CAP {
                        rep.witnesses.push((lam, mu));
                    }
                }
            }
        }
    }
    // deterministic sunflower points filling the open disk
    for k in 0..interior_samples {
        let r = 0.95 * (((k + 1) as f64) / (interior_samples as f64)).sqrt();
        let t = TAU * (((k as f64) * GOLDEN_CONJ) % 1.0);
        let lam = c(r * t.cos(), r * t.sin());
        match fiber_roots(lam)? {
            None => rep.degenerate_fibers.push(lam),
            Some(roots) => {
                for mu in roots {
                    rep.interior_max_modulus = rep.interior_max_modulus.max(mu.norm());
                    if mu.norm() >= 1.0 + tol && rep.witnesses.len() < WITNESS_CAP {
                        rep.witnesses.push((lam, mu));
                    }
                }
            }
        }
    }
    Ok(rep)
}

const GOLDEN_CONJ: f64 = 0.618_033_988_749_894_8;

/// Certify the inner-toral zero-set pattern by sampling fibers in both
/// variables: boundary fibers must have all roots on the unit circle, and
/// interior fibers must keep all roots inside the open disk.
pub fn check_inner_toral(
    p: &BiPoly,
    boundary_samples: usize,
    interior_samples: usize,
    tol: f64,
) -> Result<InnerToralReport> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.deg_z() == 0 || p.deg_w() == 0 {
        return Err(Error::DegenerateBidegree);
    }
    let zdir = check_direction(p, boundary_samples, interior_samples, tol)?;
    let swapped = p.swap_vars();
    let wdir = check_direction(&swapped, boundary_samples, interior_samples, tol)?;
    let clean = |d: &DirectionReport| {
        d.witnesses.is_empty()
            && d.degenerate_fibers.is_empty()
            && d.boundary_max_deviation <= tol
            && d.interior_max_modulus < 1.0 + tol
    };
    let verdict = clean(&zdir) && clean(&wdir);
    Ok(InnerToralReport { verdict, z_direction: zdir, w_direction: wdir, tol })
}

/// A sampled point of the zero set inside the bidisk.
#[derive(Clone, Copy, Debug)]
pub struct VarietyPoint {
    pub z: C64,
    pub w: C64,
    /// Gradient of the defining polynomial is nonzero here.
    pub regular: bool,
    /// Index of the factor this point was sampled from, when applicable.
    pub component: Option<usize>,
}

/// Residual threshold for "lies on the zero set" relative to coefficients.
pub fn on_variety_tol(p: &BiPoly) -> f64 {
    1e-8 * p.max_coeff().max(1.0)
}

/// Whether the gradient of p at the point is nonzero relative to scale.
pub fn is_regular_point(p: &BiPoly, z: C64, w: C64, reg_tol: f64) -> Result<bool> {
    let res = p.eval(z, w).norm();
    if res > on_variety_tol(p) {
        return Err(Error::PointNotOnVariety { residual: res });
    }
    let (gz, gw) = p.gradient(z, w);
    let gnorm = (gz.norm_sqr() + gw.norm_sqr()).sqrt();
    Ok(gnorm > reg_tol * p.max_coeff().max(1.0))
}

/// Default gradient threshold for regularity.
pub const REGULARITY_TOL: f64 = 1e-6;

/// Sample points of Z(p) inside the bidisk: draw the z-coordinate uniformly
/// in a disk of radius `radius`, avoid degenerate parameters, and keep the
/// fiber roots with |w| < 1. Deterministic for a fixed seed.
pub fn sample_variety(p: &BiPoly, count: usize, seed: u64, radius: f64) -> Result<Vec<VarietyPoint>> {
    if p.deg_w() == 0 {
        return Err(Error::DegenerateBidegree);
    }
    let exceptional = exceptional_lambdas(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let budget = 200 * count.max(1);
    while out.len() < count {
        attempts += 1;
        if attempts > budget {
            return Err(Error::SamplingExhausted);
        }
        let r = radius * uniform01(&mut rng).sqrt();
        let t = TAU * uniform01(&mut rng);
        let lam = c(r * t.cos(), r * t.sin());
        if exceptional.iter().any(|&e| (lam - e).norm() < 1e-3) {
            continue;
        }
        let u = p.slice_at_z(lam);
        if u.max_coeff() <= 1e-14 * p.max_coeff() || u.degree() == 0 {
            continue;
        }
        for mu in u.roots()? {
            if mu.norm() < 1.0 - 1e-9 && out.len() < count {
                let regular = is_regular_point(p, lam, mu, REGULARITY_TOL).unwrap_or(false);
                out.push(VarietyPoint { z: lam, w: mu, regular, component: None });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w2_minus_z() -> BiPoly {
        // w^2 - z
        BiPoly::from_grid(2, 3, vec![
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        ]).unwrap()
    }

    fn w_minus_z() -> BiPoly {
        BiPoly::from_grid(2, 2, vec![
            c(0.0, 0.0), c(1.0, 0.0),
            c(-1.0, 0.0), c(0.0, 0.0),
        ]).unwrap()
    }

    fn w2_minus_z2() -> BiPoly {
        // (w - z)(w + z) = w^2 - z^2
        BiPoly::from_grid(3, 3, vec![
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        ]).unwrap()
    }

    fn w3_minus_z2() -> BiPoly {
        BiPoly::from_grid(3, 4, vec![
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        ]).unwrap()
    }

    fn zw_minus_1() -> BiPoly {
        BiPoly::from_grid(2, 2, vec![
            c(-1.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0),
        ]).unwrap()
    }

    fn w_minus_2z() -> BiPoly {
        BiPoly::from_grid(2, 2, vec![
            c(0.0, 0.0), c(1.0, 0.0),
            c(-2.0, 0.0), c(0.0, 0.0),
        ]).unwrap()
    }

    #[test]
    fn roots_of_cubic_match_closed_form() {
        // (x - 1)(x - 2i)(x + 3) with known roots
        let p = UniPoly::from_roots(&[c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        let roots = p.roots().unwrap();
        for want in [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)] {
            let best = roots.iter().map(|r| (r - want).norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-12, "root {want:?} missing, best {best:.2e}");
        }
    }

    #[test]
    fn double_root_recovered_within_sqrt_eps() {
        let p = UniPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]); // w^2
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!(r.norm() < 1e-7);
        }
    }

    #[test]
    fn resultant_matches_hand_value() {
        // Res_w(w^2 - z, 2w) = -4z
        let p = w2_minus_z();
        let r = resultant_w(&p, &p.partial_w()).unwrap();
        assert_eq!(r.degree(), 1);
        assert!((r.coeffs[0]).norm() < 1e-12);
        assert!((r.coeffs[1] - c(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exceptional_lambdas_of_parabola_is_origin() {
        let bad = exceptional_lambdas(&w2_minus_z()).unwrap();
        assert_eq!(bad.len(), 1);
        assert!(bad[0].norm() < 1e-10);
    }

    #[test]
    fn square_free_classification() {
        assert!(is_square_free(&w2_minus_z(), 1e-10).unwrap());
        assert!(is_square_free(&w2_minus_z2(), 1e-10).unwrap());
        let sq = w_minus_z().mul(&w_minus_z());
        assert!(!is_square_free(&sq, 1e-10).unwrap());
        let psq = w2_minus_z().mul(&w2_minus_z());
        assert!(!is_square_free(&psq, 1e-10).unwrap());
    }

    #[test]
    fn inner_toral_corpus_passes() {
        for p in [w2_minus_z(), w_minus_z(), w2_minus_z2(), w3_minus_z2()] {
            let rep = check_inner_toral(&p, 64, 64, 1e-8).unwrap();
            assert!(rep.verdict, "expected inner-toral: {rep:?}");
        }
    }

    #[test]
    fn non_examples_fail_with_witnesses() {
        let rep = check_inner_toral(&zw_minus_1(), 64, 64, 1e-8).unwrap();
        assert!(!rep.verdict);
        // zw - 1 passes boundary fibers but has interior roots outside the disk
        assert!(rep.z_direction.interior_max_modulus > 1.0);
        assert!(!rep.z_direction.witnesses.is_empty());
        let (lam, mu) = rep.z_direction.witnesses[0];
        assert!((lam * mu - c(1.0, 0.0)).norm() < 1e-9);

        let rep = check_inner_toral(&w_minus_2z(), 64, 64, 1e-8).unwrap();
        assert!(!rep.verdict);
        assert!(rep.z_direction.boundary_max_deviation > 0.9);
    }

    #[test]
    fn variety_samples_lie_on_curve_and_are_deterministic() {
        let p = w2_minus_z();
        let pts = sample_variety(&p, 25, 7, 0.95).unwrap();
        assert_eq!(pts.len(), 25);
        for pt in &pts {
            assert!(p.eval(pt.z, pt.w).norm() < on_variety_tol(&p));
            assert!(pt.w.norm() < 1.0);
            assert!(pt.regular);
        }
        let again = sample_variety(&p, 25, 7, 0.95).unwrap();
        for (a, b) in pts.iter().zip(&again) {
            assert_eq!((a.z, a.w), (b.z, b.w));
        }
    }

    #[test]
    fn swap_vars_is_involution_and_transposes_eval() {
        let p = w3_minus_z2();
        let q = p.swap_vars();
        assert_eq!(q.swap_vars(), p);
        let (z, w) = (c(0.3, 0.1), c(-0.2, 0.4));
        assert!((p.eval(z, w) - q.eval(w, z)).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn slice_agrees_with_eval(
            zre in -1.0f64..1.0, zim in -1.0f64..1.0,
            wre in -1.0f64..1.0, wim in -1.0f64..1.0,
            grid in proptest::collection::vec(-2.0f64..2.0, 12),
        ) {
            let coeffs: Vec<C64> = grid.chunks(2).map(|ab| c(ab[0], ab[1])).collect();
            let p = BiPoly::from_grid(2, 3, coeffs).unwrap();
            let (z, w) = (c(zre, zim), c(wre, wim));
            let via_slice = p.slice_at_z(z).eval(w);
            let direct = p.eval(z, w);
            prop_assert!((via_slice - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
            let via_wslice = p.slice_at_w(w).eval(z);
            prop_assert!((via_wslice - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
        }

        #[test]
        fn product_rule_for_partial_w(
            a in proptest::collection::vec(-1.0f64..1.0, 8),
            b in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            let pa = BiPoly::from_grid(2, 2, a.chunks(2).map(|xy| c(xy[0], xy[1])).collect()).unwrap();
            let pb = BiPoly::from_grid(2, 2, b.chunks(2).map(|xy| c(xy[0], xy[1])).collect()).unwrap();
            let lhs = pa.mul(&pb).partial_w();
            let rhs = pa.partial_w().mul(&pb).add(&pa.mul(&pb.partial_w()));
            prop_assert!(lhs.sub(&rhs).max_coeff() <= 1e-12 * (1.0 + lhs.max_coeff()));
        }

        #[test]
        fn resultant_vanishes_iff_common_root_on_line(t in -0.9f64..0.9) {
            // p = w - z and q = w - t*z share a root over every z when t == 1;
            // resultant is (t - 1)^power * z^..., nonzero for t != 1
            let p = w_minus_z();
            let q = BiPoly::from_grid(2, 2, vec![
                c(0.0, 0.0), c(1.0, 0.0),
                c(-t, 0.0), c(0.0, 0.0),
            ]).unwrap();
            let r = resultant_w(&p, &q).unwrap();
            // Res_w(w - z, w - t z) = (t... ) actually equals (z*t - z)*(-1)^? = z(t-1) up to sign
            prop_assert_eq!(r.degree(), 1);
            prop_assert!((r.coeffs[1].norm() - (t - 1.0).abs()).abs() < 1e-10);
        }
    }
}
