//! Exact bivariate ideal computations over the Gaussian rationals.
//!
//! This module carries the exact half of the toolkit: Groebner bases of
//! two-generator ideals in `C[z, w]` with cofactor certificates, quotient
//! dimensions and normal sets, exact Sylvester resultants, exact division,
//! and a bridge from floating data (`rationalize`). On top of the exact
//! engine sits the cyclic-defect estimator, which expands determinant
//! generators into truncated-shift-model vectors and measures how much of
//! the model their polynomial orbit misses. Rank decisions on spans are
//! floating point by design; every symbol-level identity is exact.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::cmat::CMat;
use crate::isopair::ShiftModel;
use crate::kernel::AdmissibleTriple;
use crate::poly::BiPoly;
use crate::{C64, Error, Result};

/// Tolerance used when recovering exact rationals from floating data.
pub const RATIONALIZE_TOL: f64 = 1e-12;

/// Relative gate on the least-squares residual of a generator expansion.
pub const EXPANSION_RESIDUAL_TOL: f64 = 1e-9;

/// Relative singular-value threshold for floating span-rank decisions.
pub const SPAN_RANK_TOL: f64 = 1e-7;

/// Hard cap on Groebner basis growth; bivariate two-generator ideals stay
/// far below this, so hitting it signals a bug rather than a hard input.
const BASIS_CAP: usize = 128;

// ---------------------------------------------------------------------------
// Gaussian rationals
// ---------------------------------------------------------------------------

/// A complex number with exact rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaussianRational {
    re: BigRational,
    im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussianRational {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        GaussianRational {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    /// Exact ratio of two machine integers; `den` must be nonzero.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "denominator must be nonzero");
        GaussianRational {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        GaussianRational {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        GaussianRational {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        GaussianRational {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn neg(&self) -> Self {
        GaussianRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        GaussianRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Squared modulus as an exact rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return Err(Error::ExactDivisionByZero);
        }
        Ok(GaussianRational {
            re: &self.re / &n,
            im: -(&self.im / &n),
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

fn inv_nonzero(c: &GaussianRational) -> GaussianRational {
    c.inverse().expect("leading coefficient is nonzero by invariant")
}

// ---------------------------------------------------------------------------
// Rationalization of floating data
// ---------------------------------------------------------------------------

/// Recover the simplest rational within `tol` of `x` by continued fractions.
pub fn rationalize(x: f64, tol: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Invalid("cannot rationalize a non-finite value"));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid("rationalization tolerance must be positive"));
    }
    if x.abs() > 1e12 {
        return Err(Error::Invalid("value too large to rationalize"));
    }
    let mut p_prev = BigInt::one();
    let mut q_prev = BigInt::zero();
    let a0 = x.floor();
    let mut p_cur = BigInt::from(a0 as i64);
    let mut q_cur = BigInt::one();
    let mut frac = x - a0;
    for _ in 0..64 {
        let approx = ratio_to_f64(&BigRational::new(p_cur.clone(), q_cur.clone()));
        if (x - approx).abs() <= tol {
            return Ok(BigRational::new(p_cur, q_cur));
        }
        if frac <= 0.0 {
            break;
        }
        let recip = 1.0 / frac;
        let a = recip.floor();
        if !a.is_finite() || a > 1e15 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let p_next = &ai * &p_cur + &p_prev;
        let q_next = &ai * &q_cur + &q_prev;
        p_prev = core::mem::replace(&mut p_cur, p_next);
        q_prev = core::mem::replace(&mut q_cur, q_next);
        frac = recip - a;
    }
    let approx = ratio_to_f64(&BigRational::new(p_cur.clone(), q_cur.clone()));
    if (x - approx).abs() <= tol {
        Ok(BigRational::new(p_cur, q_cur))
    } else {
        Err(Error::Invalid("no rational approximation within tolerance"))
    }
}

/// Rationalize both parts of a complex floating value.
pub fn rationalize_complex(x: C64, tol: f64) -> Result<GaussianRational> {
    Ok(GaussianRational::new(
        rationalize(x.re, tol)?,
        rationalize(x.im, tol)?,
    ))
}

// ---------------------------------------------------------------------------
// Monomials and term orders
// ---------------------------------------------------------------------------

/// Exponent pair `(i, j)` standing for the monomial `z^i w^j`.
pub type Monomial = (u32, u32);

fn mono_divides(a: Monomial, b: Monomial) -> bool {
    a.0 <= b.0 && a.1 <= b.1
}

fn mono_lcm(a: Monomial, b: Monomial) -> Monomial {
    (a.0.max(b.0), a.1.max(b.1))
}

fn mono_sub(a: Monomial, b: Monomial) -> Monomial {
    (a.0 - b.0, a.1 - b.1)
}

/// Monomial orders on `C[z, w]` with `z` ranked above `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermOrder {
    /// Pure lexicographic order with `z > w`.
    LexZw,
    /// Graded reverse lexicographic order with `z > w`.
    DegRevLex,
}

impl TermOrder {
    pub fn cmp(&self, a: Monomial, b: Monomial) -> core::cmp::Ordering {
        match self {
            TermOrder::LexZw => a.0.cmp(&b.0).then(a.1.cmp(&b.1)),
            TermOrder::DegRevLex => {
                let (ta, tb) = (a.0 + a.1, b.0 + b.1);
                // On equal total degree the monomial with the smaller
                // w-exponent is the larger one.
                ta.cmp(&tb).then(b.1.cmp(&a.1))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact bivariate polynomials
// ---------------------------------------------------------------------------

/// Sparse bivariate polynomial with Gaussian-rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExactBiPoly {
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl ExactBiPoly {
    pub fn zero() -> Self {
        ExactBiPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        ExactBiPoly::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        let mut p = ExactBiPoly::zero();
        p.add_term((0, 0), c);
        p
    }

    pub fn monomial(c: GaussianRational, i: u32, j: u32) -> Self {
        let mut p = ExactBiPoly::zero();
        p.add_term((i, j), c);
        p
    }

    /// Build from integer-coefficient terms `(i, j, coeff)`.
    pub fn from_integer_terms(terms: &[(u32, u32, i64)]) -> Self {
        let mut p = ExactBiPoly::zero();
        for &(i, j, c) in terms {
            p.add_term((i, j), GaussianRational::from_integer(c));
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(cur) => {
                let sum = cur.add(&c);
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *cur = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, &GaussianRational)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, i: u32, j: u32) -> GaussianRational {
        self.terms
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    pub fn deg_z(&self) -> u32 {
        self.terms.keys().map(|m| m.0).max().unwrap_or(0)
    }

    pub fn deg_w(&self) -> u32 {
        self.terms.keys().map(|m| m.1).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.0 + m.1).max().unwrap_or(0)
    }

    /// Leading term under the given order, if the polynomial is nonzero.
    pub fn leading(&self, order: TermOrder) -> Option<(Monomial, GaussianRational)> {
        let mut best: Option<Monomial> = None;
        for m in self.terms.keys() {
            match best {
                None => best = Some(*m),
                Some(b) => {
                    if order.cmp(*m, b) == core::cmp::Ordering::Greater {
                        best = Some(*m);
                    }
                }
            }
        }
        best.map(|m| (m, self.terms[&m].clone()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = ExactBiPoly::zero();
        for (m, c) in self.terms() {
            out.add_term(m, c.neg());
        }
        out
    }

    pub fn scale(&self, s: &GaussianRational) -> Self {
        let mut out = ExactBiPoly::zero();
        for (m, c) in self.terms() {
            out.add_term(m, c.mul(s));
        }
        out
    }

    /// Multiply by the single term `s * z^(m.0) w^(m.1)`.
    pub fn mul_term(&self, m: Monomial, s: &GaussianRational) -> Self {
        let mut out = ExactBiPoly::zero();
        for (e, c) in self.terms() {
            out.add_term((e.0 + m.0, e.1 + m.1), c.mul(s));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = ExactBiPoly::zero();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term((ma.0 + mb.0, ma.1 + mb.1), ca.mul(cb));
            }
        }
        out
    }

    pub fn eval(&self, z: &GaussianRational, w: &GaussianRational) -> GaussianRational {
        let mut zpow = vec![GaussianRational::one()];
        for k in 1..=self.deg_z() as usize {
            let next = zpow[k - 1].mul(z);
            zpow.push(next);
        }
        let mut wpow = vec![GaussianRational::one()];
        for k in 1..=self.deg_w() as usize {
            let next = wpow[k - 1].mul(w);
            wpow.push(next);
        }
        let mut acc = GaussianRational::zero();
        for (m, c) in self.terms() {
            acc = acc.add(&c.mul(&zpow[m.0 as usize]).mul(&wpow[m.1 as usize]));
        }
        acc
    }

    /// Rationalize a floating polynomial coefficientwise; coefficients
    /// within `tol` of zero are dropped.
    pub fn from_float(p: &BiPoly, tol: f64) -> Result<Self> {
        let (rows, cols, grid) = p.grid();
        let mut out = ExactBiPoly::zero();
        for i in 0..rows {
            for j in 0..cols {
                let c = grid[i * cols + j];
                out.add_term(
                    (i as u32, j as u32),
                    rationalize_complex(c, tol)?,
                );
            }
        }
        Ok(out)
    }

    pub fn to_float(&self) -> BiPoly {
        let mut out = BiPoly::zero();
        for (m, c) in self.terms() {
            out = out.add(&BiPoly::monomial(c.to_c64(), m.0 as usize, m.1 as usize));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Exact univariate polynomials (resultants)
// ---------------------------------------------------------------------------

/// Dense univariate polynomial with Gaussian-rational coefficients,
/// stored in ascending degree order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactUniPoly {
    coeffs: Vec<GaussianRational>,
}

impl ExactUniPoly {
    pub fn new(mut coeffs: Vec<GaussianRational>) -> Self {
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        ExactUniPoly { coeffs }
    }

    pub fn zero() -> Self {
        ExactUniPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        ExactUniPoly {
            coeffs: vec![GaussianRational::one()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[GaussianRational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> GaussianRational {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    pub fn eval(&self, x: &GaussianRational) -> GaussianRational {
        let mut acc = GaussianRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k).add(&other.coeff(k)));
        }
        ExactUniPoly::new(out)
    }

    pub fn scale(&self, s: &GaussianRational) -> Self {
        ExactUniPoly::new(self.coeffs.iter().map(|c| c.mul(s)).collect())
    }

    /// Multiply by the linear factor `x - a`.
    fn mul_linear(&self, a: &GaussianRational) -> Self {
        if self.is_zero() {
            return ExactUniPoly::zero();
        }
        let mut out = vec![GaussianRational::zero(); self.coeffs.len() + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k + 1] = out[k + 1].add(c);
            out[k] = out[k].sub(&c.mul(a));
        }
        ExactUniPoly::new(out)
    }

    /// Exact Newton interpolation through distinct nodes.
    pub fn interpolate(nodes: &[(GaussianRational, GaussianRational)]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Invalid("interpolation needs at least one node"));
        }
        let n = nodes.len();
        let xs: Vec<&GaussianRational> = nodes.iter().map(|(x, _)| x).collect();
        let mut dd: Vec<GaussianRational> = nodes.iter().map(|(_, y)| y.clone()).collect();
        for level in 1..n {
            for k in (level..n).rev() {
                let num = dd[k].sub(&dd[k - 1]);
                let den = xs[k].sub(xs[k - level]);
                if den.is_zero() {
                    return Err(Error::Invalid("interpolation nodes must be distinct"));
                }
                dd[k] = num.div(&den)?;
            }
        }
        let mut poly = ExactUniPoly::zero();
        for k in (0..n).rev() {
            poly = poly
                .mul_linear(xs[k])
                .add(&ExactUniPoly::new(vec![dd[k].clone()]));
        }
        Ok(poly)
    }

    /// View as a bivariate polynomial in the first variable.
    pub fn to_bipoly_in_z(&self) -> ExactBiPoly {
        let mut out = ExactBiPoly::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            out.add_term((k as u32, 0), c.clone());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Certified multivariate division
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Tracked {
    g: ExactBiPoly,
    s: ExactBiPoly,
    t: ExactBiPoly,
}

impl Tracked {
    fn monic(self, order: TermOrder) -> Tracked {
        let (_, lc) = self
            .g
            .leading(order)
            .expect("monic normalization of a zero polynomial");
        let inv = inv_nonzero(&lc);
        Tracked {
            g: self.g.scale(&inv),
            s: self.s.scale(&inv),
            t: self.t.scale(&inv),
        }
    }
}

/// Divide `f` by the tracked basis, returning `(remainder, s, t)` with the
/// exact identity `f = s * p + t * q + remainder`, where every basis element
/// carries its own certificate `g_k = s_k * p + t_k * q`.
fn reduce_certified(
    f: &ExactBiPoly,
    basis: &[Tracked],
    order: TermOrder,
) -> (ExactBiPoly, ExactBiPoly, ExactBiPoly) {
    let mut cur = f.clone();
    let mut rem = ExactBiPoly::zero();
    let mut s_acc = ExactBiPoly::zero();
    let mut t_acc = ExactBiPoly::zero();
    'outer: while !cur.is_zero() {
        let (lm, lc) = cur.leading(order).expect("nonzero polynomial has a lead");
        for b in basis {
            let (bm, bc) = match b.g.leading(order) {
                Some(x) => x,
                None => continue,
            };
            if mono_divides(bm, lm) {
                let m = mono_sub(lm, bm);
                let c = lc.mul(&inv_nonzero(&bc));
                cur = cur.sub(&b.g.mul_term(m, &c));
                s_acc = s_acc.add(&b.s.mul_term(m, &c));
                t_acc = t_acc.add(&b.t.mul_term(m, &c));
                continue 'outer;
            }
        }
        rem.add_term(lm, lc.clone());
        cur.add_term(lm, lc.neg());
    }
    (rem, s_acc, t_acc)
}

fn s_polynomial(a: &Tracked, b: &Tracked, order: TermOrder) -> Tracked {
    let (la, ca) = a.g.leading(order).expect("nonzero basis element");
    let (lb, cb) = b.g.leading(order).expect("nonzero basis element");
    let l = mono_lcm(la, lb);
    let (ma, mb) = (mono_sub(l, la), mono_sub(l, lb));
    let (fa, fb) = (inv_nonzero(&ca), inv_nonzero(&cb));
    Tracked {
        g: a.g.mul_term(ma, &fa).sub(&b.g.mul_term(mb, &fb)),
        s: a.s.mul_term(ma, &fa).sub(&b.s.mul_term(mb, &fb)),
        t: a.t.mul_term(ma, &fa).sub(&b.t.mul_term(mb, &fb)),
    }
}

// ---------------------------------------------------------------------------
// Groebner bases
// ---------------------------------------------------------------------------

/// Reduced Groebner basis of the ideal `(p, q)` together with cofactor
/// certificates expressing every generator exactly in terms of the inputs.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    order: TermOrder,
    p: ExactBiPoly,
    q: ExactBiPoly,
    elems: Vec<Tracked>,
}

/// Dimension of `C[z, w] / (p, q)` as a complex vector space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotientDim {
    Finite(usize),
    Infinite,
}

/// Remainder of a polynomial modulo a Groebner basis, with the exact
/// cofactors witnessing `psi = s * p + t * q + remainder`.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub remainder: ExactBiPoly,
    pub s: ExactBiPoly,
    pub t: ExactBiPoly,
}

impl NormalForm {
    /// Check the certificate identity exactly.
    pub fn certifies(&self, gb: &GroebnerBasis, psi: &ExactBiPoly) -> bool {
        let recon = self
            .s
            .mul(&gb.p)
            .add(&self.t.mul(&gb.q))
            .add(&self.remainder);
        recon == *psi
    }
}

/// Buchberger's algorithm on the pair `(p, q)`, returning the reduced monic
/// Groebner basis sorted by leading monomial, with cofactor certificates.
pub fn buchberger(p: &ExactBiPoly, q: &ExactBiPoly, order: TermOrder) -> Result<GroebnerBasis> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut basis: Vec<Tracked> = vec![
        Tracked {
            g: p.clone(),
            s: ExactBiPoly::one(),
            t: ExactBiPoly::zero(),
        }
        .monic(order),
        Tracked {
            g: q.clone(),
            s: ExactBiPoly::zero(),
            t: ExactBiPoly::one(),
        }
        .monic(order),
    ];
    let mut pairs: Vec<(usize, usize)> = vec![(0, 1)];
    while let Some((i, j)) = pairs.pop() {
        let (li, _) = basis[i].g.leading(order).expect("basis stays nonzero");
        let (lj, _) = basis[j].g.leading(order).expect("basis stays nonzero");
        // Product criterion: coprime leading monomials reduce to zero.
        if mono_lcm(li, lj) == (li.0 + lj.0, li.1 + lj.1) {
            continue;
        }
        let sp = s_polynomial(&basis[i], &basis[j], order);
        let (rem, s_red, t_red) = reduce_certified(&sp.g, &basis, order);
        if rem.is_zero() {
            continue;
        }
        let tracked = Tracked {
            g: rem,
            s: sp.s.sub(&s_red),
            t: sp.t.sub(&t_red),
        }
        .monic(order);
        let new_idx = basis.len();
        for k in 0..new_idx {
            pairs.push((k, new_idx));
        }
        basis.push(tracked);
        if basis.len() > BASIS_CAP {
            return Err(Error::NoConvergence("groebner basis growth"));
        }
    }

    // Minimalize: drop elements whose leading monomial is divisible by the
    // leading monomial of another kept element.
    let mut order_idx: Vec<usize> = (0..basis.len()).collect();
    order_idx.sort_by(|&a, &b| {
        let (la, _) = basis[a].g.leading(order).expect("nonzero");
        let (lb, _) = basis[b].g.leading(order).expect("nonzero");
        order.cmp(la, lb)
    });
    let mut kept: Vec<Tracked> = Vec::new();
    for idx in order_idx {
        let (lm, _) = basis[idx].g.leading(order).expect("nonzero");
        let dominated = kept.iter().any(|k| {
            let (km, _) = k.g.leading(order).expect("nonzero");
            mono_divides(km, lm)
        });
        if !dominated {
            kept.push(basis[idx].clone());
        }
    }

    // Inter-reduce tails so the basis is fully reduced; leading terms are
    // untouched because the kept set has pairwise non-dividing leads.
    let mut reduced: Vec<Tracked> = kept.clone();
    for i in 0..reduced.len() {
        let others: Vec<Tracked> = reduced
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, t)| t.clone())
            .collect();
        let target = reduced[i].clone();
        let (rem, s_red, t_red) = reduce_certified(&target.g, &others, order);
        reduced[i] = Tracked {
            g: rem,
            s: target.s.sub(&s_red),
            t: target.t.sub(&t_red),
        }
        .monic(order);
    }
    reduced.sort_by(|a, b| {
        let (la, _) = a.g.leading(order).expect("nonzero");
        let (lb, _) = b.g.leading(order).expect("nonzero");
        order.cmp(la, lb)
    });

    Ok(GroebnerBasis {
        order,
        p: p.clone(),
        q: q.clone(),
        elems: reduced,
    })
}

impl GroebnerBasis {
    pub fn order(&self) -> TermOrder {
        self.order
    }

    pub fn inputs(&self) -> (&ExactBiPoly, &ExactBiPoly) {
        (&self.p, &self.q)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn generators(&self) -> impl ExactSizeIterator<Item = &ExactBiPoly> {
        self.elems.iter().map(|t| &t.g)
    }

    /// Cofactor pair `(s_k, t_k)` with `generator_k = s_k * p + t_k * q`.
    pub fn cofactor_pair(&self, k: usize) -> (&ExactBiPoly, &ExactBiPoly) {
        (&self.elems[k].s, &self.elems[k].t)
    }

    /// Check every generator's cofactor identity exactly.
    pub fn verify_cofactors(&self) -> bool {
        self.elems
            .iter()
            .all(|t| t.s.mul(&self.p).add(&t.t.mul(&self.q)) == t.g)
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.elems
            .iter()
            .map(|t| t.g.leading(self.order).expect("nonzero").0)
            .collect()
    }

    /// Monomials outside the leading-term staircase, sorted ascending under
    /// the basis order; `None` when the quotient is infinite-dimensional.
    pub fn normal_set(&self) -> Option<Vec<Monomial>> {
        let lms = self.leading_monomials();
        let zcap = lms.iter().filter(|m| m.1 == 0).map(|m| m.0).min()?;
        let wcap = lms.iter().filter(|m| m.0 == 0).map(|m| m.1).min()?;
        let mut out = Vec::new();
        for i in 0..zcap {
            for j in 0..wcap {
                if !lms.iter().any(|&lm| mono_divides(lm, (i, j))) {
                    out.push((i, j));
                }
            }
        }
        out.sort_by(|&a, &b| self.order.cmp(a, b));
        Some(out)
    }

    pub fn quotient_dim(&self) -> QuotientDim {
        match self.normal_set() {
            Some(ns) => QuotientDim::Finite(ns.len()),
            None => QuotientDim::Infinite,
        }
    }

    /// Fully reduce `psi`, returning the remainder and exact cofactors.
    pub fn normal_form(&self, psi: &ExactBiPoly) -> NormalForm {
        let (remainder, s, t) = reduce_certified(psi, &self.elems, self.order);
        NormalForm { remainder, s, t }
    }
}

/// Dimension of `C[z, w] / (p, q)` under the default lexicographic order.
pub fn quotient_dim(p: &ExactBiPoly, q: &ExactBiPoly) -> Result<QuotientDim> {
    Ok(buchberger(p, q, TermOrder::LexZw)?.quotient_dim())
}

// ---------------------------------------------------------------------------
// Resultants
// ---------------------------------------------------------------------------

fn w_coefficients(p: &ExactBiPoly) -> Vec<ExactUniPoly> {
    let mw = p.deg_w() as usize;
    let mut rows: Vec<Vec<GaussianRational>> =
        vec![vec![GaussianRational::zero(); p.deg_z() as usize + 1]; mw + 1];
    for (m, c) in p.terms() {
        rows[m.1 as usize][m.0 as usize] = c.clone();
    }
    rows.into_iter().map(ExactUniPoly::new).collect()
}

fn exact_det(mut m: Vec<Vec<GaussianRational>>) -> Result<GaussianRational> {
    let n = m.len();
    let mut det = GaussianRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero());
        let pr = match pivot {
            Some(pr) => pr,
            None => return Ok(GaussianRational::zero()),
        };
        if pr != col {
            m.swap(pr, col);
            det = det.neg();
        }
        let pv = m[col][col].clone();
        det = det.mul(&pv);
        let inv = pv.inverse()?;
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].mul(&inv);
            for c in col..n {
                let delta = factor.mul(&m[col][c]);
                m[r][c] = m[r][c].sub(&delta);
            }
        }
    }
    Ok(det)
}

/// Exact resultant of `p` and `q` with respect to `w`, as a polynomial in
/// `z`. Computed by evaluating the formal Sylvester determinant at integer
/// nodes and interpolating, so the answer is exact.
pub fn sylvester_resultant_w(p: &ExactBiPoly, q: &ExactBiPoly) -> Result<ExactUniPoly> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let (m1, m2) = (p.deg_w() as usize, q.deg_w() as usize);
    let n = m1 + m2;
    if n == 0 {
        return Ok(ExactUniPoly::one());
    }
    let (pc, qc) = (w_coefficients(p), w_coefficients(q));
    let bound = p.deg_z() as usize * m2 + q.deg_z() as usize * m1;
    let mut nodes = Vec::with_capacity(bound + 1);
    for k in 0..=bound {
        let z0 = GaussianRational::from_integer(k as i64);
        let pv: Vec<GaussianRational> = pc.iter().map(|c| c.eval(&z0)).collect();
        let qv: Vec<GaussianRational> = qc.iter().map(|c| c.eval(&z0)).collect();
        let mut mat = vec![vec![GaussianRational::zero(); n]; n];
        for r in 0..m2 {
            for k2 in 0..=m1 {
                mat[r][r + k2] = pv[m1 - k2].clone();
            }
        }
        for r in 0..m1 {
            for k2 in 0..=m2 {
                mat[m2 + r][r + k2] = qv[m2 - k2].clone();
            }
        }
        nodes.push((z0, exact_det(mat)?));
    }
    ExactUniPoly::interpolate(&nodes)
}

/// Decide whether `p` and `q` share a common factor, via finiteness of the
/// quotient. When the quotient is finite and both inputs genuinely involve
/// `w`, the exact `w`-resultant must be a nonzero polynomial; a vanishing
/// resultant in that situation fails the cross-check.
pub fn relatively_prime(p: &ExactBiPoly, q: &ExactBiPoly) -> Result<bool> {
    let gb = buchberger(p, q, TermOrder::LexZw)?;
    let coprime = matches!(gb.quotient_dim(), QuotientDim::Finite(_));
    if coprime && p.deg_w() > 0 && q.deg_w() > 0 {
        let res = sylvester_resultant_w(p, q)?;
        if res.is_zero() {
            return Err(Error::CertificateFailed {
                what: "resultant cross-check of a finite quotient",
                residual: 0.0,
            });
        }
    }
    Ok(coprime)
}

// ---------------------------------------------------------------------------
// Exact division
// ---------------------------------------------------------------------------

/// Exact quotient `f / g`, or `NotDivisible` if `g` does not divide `f`.
pub fn divide_exact(f: &ExactBiPoly, g: &ExactBiPoly) -> Result<ExactBiPoly> {
    if g.is_zero() {
        return Err(Error::ExactDivisionByZero);
    }
    if f.is_zero() {
        return Ok(ExactBiPoly::zero());
    }
    let order = TermOrder::LexZw;
    let (gm, gc) = g.leading(order).expect("nonzero divisor");
    let ginv = inv_nonzero(&gc);
    let mut cur = f.clone();
    let mut quot = ExactBiPoly::zero();
    while !cur.is_zero() {
        let (lm, lc) = cur.leading(order).expect("nonzero");
        if !mono_divides(gm, lm) {
            // With a single divisor, any term escaping to the remainder
            // certifies non-divisibility.
            return Err(Error::NotDivisible);
        }
        let m = mono_sub(lm, gm);
        let c = lc.mul(&ginv);
        quot.add_term(m, c.clone());
        cur = cur.sub(&g.mul_term(m, &c));
    }
    Ok(quot)
}

// ---------------------------------------------------------------------------
// Reduction modulo a curve monic in w
// ---------------------------------------------------------------------------

/// Scale `p` so the coefficient of its top `w`-power is the constant one;
/// errors if that coefficient involves `z`.
pub fn monic_in_w(p: &ExactBiPoly) -> Result<ExactBiPoly> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mw = p.deg_w();
    let mut lead: Option<GaussianRational> = None;
    for (m, c) in p.terms() {
        if m.1 == mw {
            if m.0 != 0 {
                return Err(Error::NotMonicInW);
            }
            lead = Some(c.clone());
        }
    }
    let lead = lead.ok_or(Error::NotMonicInW)?;
    Ok(p.scale(&lead.inverse()?))
}

/// Remainder of `f` upon division by a curve `p` monic in `w`, eliminating
/// every `w`-power at or above `deg_w(p)`.
pub fn reduce_mod_curve(f: &ExactBiPoly, p_monic: &ExactBiPoly) -> ExactBiPoly {
    let mw = p_monic.deg_w();
    debug_assert!(mw > 0, "curve must involve w");
    let mut cur = f.clone();
    loop {
        let worst = cur
            .terms()
            .filter(|(m, _)| m.1 >= mw)
            .map(|(m, _)| (m.1, m.0))
            .max();
        let (j, i) = match worst {
            Some(x) => x,
            None => return cur,
        };
        let c = cur.coeff(i, j);
        cur = cur.sub(&p_monic.mul_term((i, j - mw), &c));
    }
}

// ---------------------------------------------------------------------------
// Cyclic defect on truncated shift models
// ---------------------------------------------------------------------------

/// A model vector (coefficient sequence in the degree-major basis of the
/// truncated model) together with the total degree of the variety function
/// it represents.
#[derive(Clone, Debug)]
pub struct ModelGenerator {
    pub coeffs: Vec<C64>,
    pub degree: usize,
}

impl ModelGenerator {
    /// Coordinatewise sum of generators, used to probe single combined
    /// generators; the degree is the maximum of the parts.
    pub fn combine(gens: &[ModelGenerator]) -> Result<ModelGenerator> {
        let first = gens
            .first()
            .ok_or(Error::Invalid("cannot combine an empty generator list"))?;
        let dim = first.coeffs.len();
        let mut coeffs = vec![C64::ZERO; dim];
        let mut degree = 0;
        for g in gens {
            if g.coeffs.len() != dim {
                return Err(Error::Shape {
                    expected: (dim, 1),
                    got: (g.coeffs.len(), 1),
                });
            }
            for (acc, c) in coeffs.iter_mut().zip(&g.coeffs) {
                *acc += *c;
            }
            degree = degree.max(g.degree);
        }
        Ok(ModelGenerator { coeffs, degree })
    }
}

/// Progress of the cyclic-defect estimate across span degrees: for each
/// requested degree, the codimension of the generator orbit inside the
/// comparison block; the estimate stabilizes when the last two agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefectCurve {
    pub degrees: Vec<usize>,
    pub codims: Vec<usize>,
    pub stabilized: bool,
    pub value: Option<usize>,
}

/// Expand the determinant generators of an admissible triple into model
/// vectors. The generator polynomial is `det(Q * Q(base)^H)` reduced along
/// the curve (which must be monic in `w` up to a constant); each coordinate
/// copy is solved back through `Q` into a `z`-polynomial model vector by
/// least squares, gated by an annihilation-style residual check.
pub fn triple_generators(
    model: &ShiftModel,
    triple: &AdmissibleTriple,
) -> Result<Vec<ModelGenerator>> {
    let mfib = model.fiber_dim();
    let alpha = triple.alpha;
    if triple.q.rows() != alpha || triple.q.cols() != mfib {
        return Err(Error::Shape {
            expected: (alpha, mfib),
            got: (triple.q.rows(), triple.q.cols()),
        });
    }
    let curve = ExactBiPoly::from_float(&triple.curve, RATIONALIZE_TOL)?;
    if curve.deg_w() == 0 {
        return Err(Error::DegenerateBidegree);
    }
    let p_monic = monic_in_w(&curve)?;
    let mw = p_monic.deg_w() as usize;

    let mut qbar: Vec<Vec<ExactBiPoly>> = Vec::with_capacity(alpha);
    for r in 0..alpha {
        let mut row = Vec::with_capacity(mfib);
        for c in 0..mfib {
            let exact = ExactBiPoly::from_float(triple.q.entry(r, c), RATIONALIZE_TOL)?;
            row.push(reduce_mod_curve(&exact, &p_monic));
        }
        qbar.push(row);
    }

    let zb = rationalize_complex(triple.base.0, RATIONALIZE_TOL)?;
    let wb = rationalize_complex(triple.base.1, RATIONALIZE_TOL)?;
    let mut q0: Vec<Vec<ExactBiPoly>> = Vec::with_capacity(alpha);
    for r in 0..alpha {
        let mut row = Vec::with_capacity(alpha);
        for s in 0..alpha {
            let mut acc = ExactBiPoly::zero();
            for c in 0..mfib {
                let at_base = qbar[s][c].eval(&zb, &wb).conj();
                acc = acc.add(&qbar[r][c].scale(&at_base));
            }
            row.push(acc);
        }
        q0.push(row);
    }
    let det = exact_poly_det(&q0);
    let det_red = reduce_mod_curve(&det, &p_monic);
    if det_red.is_zero() {
        return Err(Error::Invalid(
            "generator determinant vanishes along the curve",
        ));
    }
    let gdeg = det_red.total_degree() as usize;

    let qf: Vec<Vec<BiPoly>> = qbar
        .iter()
        .map(|row| row.iter().map(|e| e.to_float()).collect())
        .collect();
    let qmaxz = qbar
        .iter()
        .flat_map(|row| row.iter().map(|e| e.deg_z() as usize))
        .max()
        .unwrap_or(0);
    let dh = gdeg + qmaxz + 2;
    if dh > model.truncation() {
        return Err(Error::TruncationInsufficient {
            needed: dh,
            have: model.truncation(),
        });
    }
    let maxr = dh + qmaxz;
    let rows = alpha * mw * (maxr + 1);
    let cols = mfib * (dh + 1);
    let mut design = CMat::zeros(rows, cols);
    for r in 0..alpha {
        for t in 0..mw {
            for zr in 0..=maxr {
                let row = (r * mw + t) * (maxr + 1) + zr;
                for c in 0..mfib {
                    for k in 0..=dh.min(zr) {
                        design[(row, c * (dh + 1) + k)] = qf[r][c].coeff(zr - k, t);
                    }
                }
            }
        }
    }

    let detf = det_red.to_float();
    let scale = 1.0 + detf.max_coeff();
    let mut out = Vec::with_capacity(alpha);
    for j in 0..alpha {
        let mut rhs = CMat::zeros(rows, 1);
        for t in 0..mw {
            for zr in 0..=maxr {
                rhs[((j * mw + t) * (maxr + 1) + zr, 0)] = detf.coeff(zr, t);
            }
        }
        let x = design.solve_lstsq(&rhs, 1e-12);
        let residual = design.mul(&x).sub(&rhs).max_abs();
        if residual > EXPANSION_RESIDUAL_TOL * scale {
            return Err(Error::CertificateFailed {
                what: "cyclic generator expansion",
                residual,
            });
        }
        let mut coeffs = vec![C64::ZERO; model.dim()];
        for c in 0..mfib {
            for k in 0..=dh {
                coeffs[k * mfib + c] = x[(c * (dh + 1) + k, 0)];
            }
        }
        out.push(ModelGenerator {
            coeffs,
            degree: gdeg,
        });
    }
    Ok(out)
}

fn exact_poly_det(m: &[Vec<ExactBiPoly>]) -> ExactBiPoly {
    let n = m.len();
    if n == 0 {
        return ExactBiPoly::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = ExactBiPoly::zero();
    for (c, top) in m[0].iter().enumerate() {
        if top.is_zero() {
            continue;
        }
        let minor: Vec<Vec<ExactBiPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != c)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = top.mul(&exact_poly_det(&minor));
        acc = if c % 2 == 0 {
            acc.add(&term)
        } else {
            acc.sub(&term)
        };
    }
    acc
}

/// Measure the codimension of the span `{S^a T^b g : a + b <= D}` (over all
/// generators) inside the comparison block of the model, for each requested
/// span degree `D`. The comparison block keeps coefficient degrees at most
/// `D - max_g deg(g)`: the span budget outruns the block by the generator
/// degree, so multiplication by the generator can fill the block completely
/// and the codimension converges to the true defect instead of counting a
/// permanent boundary layer.
pub fn cyclic_defect_with_generators(
    model: &ShiftModel,
    gens: &[ModelGenerator],
    degrees: &[usize],
) -> Result<DefectCurve> {
    if degrees.is_empty() {
        return Err(Error::Invalid("at least one span degree is required"));
    }
    if gens.is_empty() {
        return Err(Error::Invalid("at least one generator is required"));
    }
    let dim = model.dim();
    let mfib = model.fiber_dim();
    for g in gens {
        if g.coeffs.len() != dim {
            return Err(Error::Shape {
                expected: (dim, 1),
                got: (g.coeffs.len(), 1),
            });
        }
    }
    let maxdeg = gens.iter().map(|g| g.degree).max().unwrap_or(0);
    let s_mat = model.s_matrix();
    let t_mat = model.t_matrix();
    let mut codims = Vec::with_capacity(degrees.len());
    for &d in degrees {
        if d < maxdeg {
            return Err(Error::Invalid("span degree below generator degree"));
        }
        if model.truncation() < d + maxdeg {
            return Err(Error::TruncationInsufficient {
                needed: d + maxdeg,
                have: model.truncation(),
            });
        }
        let block_rows = (d - maxdeg + 1) * mfib;
        let mut columns: Vec<Vec<C64>> = Vec::new();
        for g in gens {
            let mut tb = g.coeffs.clone();
            for b in 0..=d {
                if b > 0 {
                    tb = t_mat.mul_vec(&tb);
                }
                let mut u = tb.clone();
                for a in 0..=(d - b) {
                    if a > 0 {
                        u = s_mat.mul_vec(&u);
                    }
                    columns.push(u[..block_rows].to_vec());
                }
            }
        }
        let mut span = CMat::zeros(block_rows, columns.len());
        for (cidx, col) in columns.iter().enumerate() {
            span.set_col(cidx, col);
        }
        let rank = span.svd().rank(SPAN_RANK_TOL);
        codims.push(block_rows - rank);
    }
    let stabilized = codims.len() >= 2 && codims[codims.len() - 1] == codims[codims.len() - 2];
    let value = if stabilized {
        codims.last().copied()
    } else {
        None
    };
    Ok(DefectCurve {
        degrees: degrees.to_vec(),
        codims,
        stabilized,
        value,
    })
}

/// Cyclic-defect estimate driven by the determinant generators of an
/// admissible triple.
pub fn cyclic_defect(
    model: &ShiftModel,
    triple: &AdmissibleTriple,
    degrees: &[usize],
) -> Result<DefectCurve> {
    let gens = triple_generators(model, triple)?;
    cyclic_defect_with_generators(model, &gens, degrees)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colligation::tests_support::{shuffle_colligation, split_disk_colligation};
    use crate::colligation::{direct_sum, Colligation};
    use proptest::prelude::*;

    fn ebp(terms: &[(u32, u32, i64)]) -> ExactBiPoly {
        ExactBiPoly::from_integer_terms(terms)
    }

    fn parabola() -> ExactBiPoly {
        // w^2 - z
        ebp(&[(0, 2, 1), (1, 0, -1)])
    }

    #[test]
    fn gaussian_rational_field_ops() {
        let a = GaussianRational::new(
            BigRational::new(BigInt::from(1), BigInt::from(1)),
            BigRational::new(BigInt::from(2), BigInt::from(1)),
        );
        let b = GaussianRational::new(
            BigRational::new(BigInt::from(3), BigInt::from(1)),
            BigRational::new(BigInt::from(-1), BigInt::from(1)),
        );
        let prod = a.mul(&b);
        let back = prod.div(&b).unwrap();
        assert_eq!(back, a);
        let recon = prod.div(&a).unwrap();
        assert_eq!(recon, b);
        assert!(GaussianRational::zero().inverse().is_err());
        assert_eq!(a.conj().conj(), a);
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        let half = rationalize(0.5, 1e-12).unwrap();
        assert_eq!(half, BigRational::new(BigInt::from(1), BigInt::from(2)));
        let third = rationalize(1.0 / 3.0, 1e-12).unwrap();
        assert_eq!(third, BigRational::new(BigInt::from(1), BigInt::from(3)));
        let neg = rationalize(-7.0 / 8.0, 1e-12).unwrap();
        assert_eq!(neg, BigRational::new(BigInt::from(-7), BigInt::from(8)));
        let noise = rationalize(1e-16, 1e-12).unwrap();
        assert!(noise.is_zero());
        assert!(rationalize(f64::NAN, 1e-12).is_err());
    }

    #[test]
    fn lex_basis_of_parabola_and_z() {
        let z = ebp(&[(1, 0, 1)]);
        let gb = buchberger(&parabola(), &z, TermOrder::LexZw).unwrap();
        let gens: Vec<ExactBiPoly> = gb.generators().cloned().collect();
        assert_eq!(gens.len(), 2);
        assert_eq!(gens[0], ebp(&[(0, 2, 1)])); // w^2
        assert_eq!(gens[1], ebp(&[(1, 0, 1)])); // z
        assert!(gb.verify_cofactors());
        let ns = gb.normal_set().unwrap();
        assert_eq!(ns, vec![(0, 0), (0, 1)]);
        assert_eq!(gb.quotient_dim(), QuotientDim::Finite(2));
    }

    #[test]
    fn coordinate_pair_has_point_quotient() {
        let z = ebp(&[(1, 0, 1)]);
        let w = ebp(&[(0, 1, 1)]);
        let gb = buchberger(&z, &w, TermOrder::LexZw).unwrap();
        let gens: Vec<ExactBiPoly> = gb.generators().cloned().collect();
        assert_eq!(gens, vec![ebp(&[(0, 1, 1)]), ebp(&[(1, 0, 1)])]);
        assert_eq!(gb.quotient_dim(), QuotientDim::Finite(1));
        assert_eq!(gb.normal_set().unwrap(), vec![(0, 0)]);
    }

    #[test]
    fn crossing_lines_reduce_to_coordinates() {
        let d1 = ebp(&[(0, 1, 1), (1, 0, -1)]); // w - z
        let d2 = ebp(&[(0, 1, 1), (1, 0, 1)]); // w + z
        let gb = buchberger(&d1, &d2, TermOrder::LexZw).unwrap();
        let gens: Vec<ExactBiPoly> = gb.generators().cloned().collect();
        assert_eq!(gens, vec![ebp(&[(0, 1, 1)]), ebp(&[(1, 0, 1)])]);
        assert!(gb.verify_cofactors());
        assert_eq!(gb.quotient_dim(), QuotientDim::Finite(1));
    }

    #[test]
    fn proportional_pair_has_infinite_quotient() {
        let p = parabola();
        let q = p.scale(&GaussianRational::from_integer(2));
        let gb = buchberger(&p, &q, TermOrder::LexZw).unwrap();
        assert_eq!(gb.quotient_dim(), QuotientDim::Infinite);
        assert!(gb.normal_set().is_none());
        assert!(!relatively_prime(&p, &q).unwrap());
    }

    #[test]
    fn normal_form_certificates_are_exact() {
        let z = ebp(&[(1, 0, 1)]);
        let p = parabola();
        let gb = buchberger(&p, &z, TermOrder::LexZw).unwrap();

        let w3 = ebp(&[(0, 3, 1)]);
        let nf = gb.normal_form(&w3);
        assert!(nf.remainder.is_zero());
        assert!(nf.certifies(&gb, &w3));

        let one_plus_w = ebp(&[(0, 0, 1), (0, 1, 1)]);
        let nf2 = gb.normal_form(&one_plus_w);
        assert_eq!(nf2.remainder, one_plus_w);
        assert!(nf2.certifies(&gb, &one_plus_w));

        let zw = ebp(&[(1, 1, 1)]);
        let nf3 = gb.normal_form(&zw);
        assert!(nf3.remainder.is_zero());
        assert!(nf3.certifies(&gb, &zw));

        // Remainders only carry staircase monomials.
        let ns = gb.normal_set().unwrap();
        for (m, _) in nf2.remainder.terms() {
            assert!(ns.contains(&m));
        }
    }

    #[test]
    fn graded_order_agrees_on_dimension() {
        let z = ebp(&[(1, 0, 1)]);
        let gb = buchberger(&parabola(), &z, TermOrder::DegRevLex).unwrap();
        assert_eq!(gb.quotient_dim(), QuotientDim::Finite(2));
        assert!(gb.verify_cofactors());
    }

    #[test]
    fn divide_exact_strips_known_factor() {
        let p = parabola();
        let cof = ebp(&[(0, 1, 1), (0, 0, 1)]); // w + 1
        let f = p.mul(&p).mul(&cof);
        let once = divide_exact(&f, &p).unwrap();
        let twice = divide_exact(&once, &p).unwrap();
        assert_eq!(twice, cof);
        assert!(matches!(
            divide_exact(&twice, &p),
            Err(Error::NotDivisible)
        ));
        assert!(matches!(
            divide_exact(&f, &ExactBiPoly::zero()),
            Err(Error::ExactDivisionByZero)
        ));
        assert_eq!(divide_exact(&p, &ExactBiPoly::one()).unwrap(), p);
    }

    #[test]
    fn resultant_matches_hand_computations() {
        let p = parabola();
        let dw = ebp(&[(0, 1, 2)]); // 2w
        let res = sylvester_resultant_w(&p, &dw).unwrap();
        // Res_w(w^2 - z, 2w) = -4z
        assert_eq!(res.degree(), 1);
        assert!(res.coeff(0).is_zero());
        assert_eq!(res.coeff(1), GaussianRational::from_integer(-4));

        let line = ebp(&[(0, 1, 1), (1, 0, -1)]); // w - z
        let res2 = sylvester_resultant_w(&p, &line).unwrap();
        // Res_w(w^2 - z, w - z) = z^2 - z
        assert_eq!(res2.coeff(2), GaussianRational::from_integer(1));
        assert_eq!(res2.coeff(1), GaussianRational::from_integer(-1));
        assert!(res2.coeff(0).is_zero());
    }

    #[test]
    fn resultant_vanishes_with_common_factor() {
        let common = ebp(&[(0, 1, 1), (1, 0, -1)]); // w - z
        let p = common.mul(&ebp(&[(0, 1, 1), (0, 0, 1)])); // (w - z)(w + 1)
        let q = common.mul(&ebp(&[(0, 1, 1), (0, 0, -1)])); // (w - z)(w - 1)
        let res = sylvester_resultant_w(&p, &q).unwrap();
        assert!(res.is_zero());
    }

    #[test]
    fn relative_primality_oracles() {
        let p = parabola();
        assert!(relatively_prime(&p, &ebp(&[(1, 0, 1)])).unwrap());
        assert!(relatively_prime(&p, &ebp(&[(0, 1, 1), (1, 0, -1)])).unwrap());
        let multiple = p.mul(&ebp(&[(0, 1, 1), (0, 0, 1)]));
        assert!(!relatively_prime(&p, &multiple).unwrap());
    }

    #[test]
    fn bezout_bound_on_small_pairs() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1dea);
        let mut draw = |max_total: u32| {
            let mut p = ExactBiPoly::zero();
            for i in 0..=max_total {
                for j in 0..=(max_total - i) {
                    let c = (rng.next_u32() % 5) as i64 - 2;
                    p = p.add(&ExactBiPoly::monomial(
                        GaussianRational::from_integer(c),
                        i,
                        j,
                    ));
                }
            }
            p
        };
        let mut checked = 0;
        for _ in 0..10 {
            let p = draw(3);
            let q = draw(3);
            if p.is_zero() || q.is_zero() {
                continue;
            }
            if let QuotientDim::Finite(dim) = quotient_dim(&p, &q).unwrap() {
                assert!(
                    dim <= (p.total_degree() * q.total_degree()) as usize,
                    "dimension {} exceeds degree product",
                    dim
                );
                checked += 1;
            }
        }
        assert!(checked >= 5, "too few finite quotients sampled: {}", checked);
    }

    #[test]
    fn reduction_along_monic_curve() {
        let p = monic_in_w(&parabola()).unwrap();
        // w^3 = z*w along the parabola.
        let red = reduce_mod_curve(&ebp(&[(0, 3, 1)]), &p);
        assert_eq!(red, ebp(&[(1, 1, 1)]));
        // A polynomial of low w-degree is untouched.
        let low = ebp(&[(2, 1, 3), (0, 0, 1)]);
        assert_eq!(reduce_mod_curve(&low, &p), low);
        // zw - 1 has a z-dependent leading w-coefficient.
        assert!(matches!(
            monic_in_w(&ebp(&[(1, 1, 1), (0, 0, -1)])),
            Err(Error::NotMonicInW)
        ));
    }

    fn parabola_triple() -> (ShiftModel, AdmissibleTriple) {
        let col = shuffle_colligation();
        let p = BiPoly::from_grid(
            2,
            3,
            vec![
                C64::ZERO,
                C64::ZERO,
                C64::ONE,
                -C64::ONE,
                C64::ZERO,
                C64::ZERO,
            ],
        )
        .unwrap();
        let base = (C64::new(0.25, 0.0), C64::new(0.5, 0.0));
        let triple = AdmissibleTriple::construct(&col, &p, base, 1, 0xfeed_beef).unwrap();
        let model = ShiftModel::new(col, 14).unwrap();
        (model, triple)
    }

    #[test]
    fn parabola_generator_expands_exactly() {
        let (model, triple) = parabola_triple();
        let gens = triple_generators(&model, &triple).unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[0].degree, 1);
        // The generator is 1 + w/2 with expansion (1, 1/2) in the fiber.
        let g = &gens[0];
        assert!((g.coeffs[0] - C64::ONE).norm() < 1e-9);
        assert!((g.coeffs[1] - C64::new(0.5, 0.0)).norm() < 1e-9);
        for c in &g.coeffs[2..] {
            assert!(c.norm() < 1e-9);
        }
    }

    #[test]
    fn parabola_defect_stabilizes_at_zero() {
        let (model, triple) = parabola_triple();
        let curve = cyclic_defect(&model, &triple, &[8, 10]).unwrap();
        assert_eq!(curve.codims, vec![0, 0]);
        assert!(curve.stabilized);
        assert_eq!(curve.value, Some(0));
    }

    #[test]
    fn scalar_shift_defect_is_zero() {
        let col = Colligation::new(
            CMat::zeros(1, 1),
            CMat::identity(1),
            CMat::identity(1),
            CMat::zeros(1, 1),
        )
        .unwrap();
        let line = BiPoly::from_grid(2, 2, vec![C64::ZERO, C64::ONE, -C64::ONE, C64::ZERO])
            .unwrap(); // w - z
        let base = (C64::new(0.3, 0.0), C64::new(0.3, 0.0));
        let triple = AdmissibleTriple::construct(&col, &line, base, 1, 0xabad1dea).unwrap();
        let model = ShiftModel::new(col, 10).unwrap();
        let curve = cyclic_defect(&model, &triple, &[6, 8]).unwrap();
        assert_eq!(curve.codims, vec![0, 0]);
        assert_eq!(curve.value, Some(0));
    }

    fn doubled_parabola() -> (ShiftModel, AdmissibleTriple) {
        let col = direct_sum(&shuffle_colligation(), &shuffle_colligation()).unwrap();
        let p = BiPoly::from_grid(
            2,
            3,
            vec![
                C64::ZERO,
                C64::ZERO,
                C64::ONE,
                -C64::ONE,
                C64::ZERO,
                C64::ZERO,
            ],
        )
        .unwrap();
        let base = (C64::new(0.25, 0.0), C64::new(0.5, 0.0));
        let triple = AdmissibleTriple::construct(&col, &p, base, 2, 0xc0ffee).unwrap();
        let model = ShiftModel::new(col, 14).unwrap();
        (model, triple)
    }

    #[test]
    fn doubled_parabola_needs_both_generators() {
        let (model, triple) = doubled_parabola();
        let gens = triple_generators(&model, &triple).unwrap();
        assert_eq!(gens.len(), 2);

        let full = cyclic_defect_with_generators(&model, &gens, &[8, 10]).unwrap();
        assert_eq!(full.codims, vec![0, 0]);
        assert!(full.stabilized);
        assert_eq!(full.value, Some(0));

        let partial = cyclic_defect_with_generators(&model, &gens[..1], &[8, 10]).unwrap();
        assert!(partial.codims[1] > partial.codims[0]);
        assert!(!partial.stabilized);
    }

    #[test]
    fn split_disk_single_generator_misses_one_direction() {
        let col = split_disk_colligation();
        let minus = BiPoly::from_grid(2, 2, vec![C64::ZERO, C64::ONE, -C64::ONE, C64::ZERO])
            .unwrap(); // w - z
        let plus = BiPoly::from_grid(2, 2, vec![C64::ZERO, C64::ONE, C64::ONE, C64::ZERO])
            .unwrap(); // w + z
        let t1 = AdmissibleTriple::construct(
            &col,
            &minus,
            (C64::new(0.3, 0.0), C64::new(0.3, 0.0)),
            1,
            11,
        )
        .unwrap();
        let t2 = AdmissibleTriple::construct(
            &col,
            &plus,
            (C64::new(0.3, 0.0), C64::new(-0.3, 0.0)),
            1,
            12,
        )
        .unwrap();
        let model = ShiftModel::new(col, 12).unwrap();
        let g1 = triple_generators(&model, &t1).unwrap();
        let g2 = triple_generators(&model, &t2).unwrap();
        assert_eq!(g1.len(), 1);
        assert_eq!(g2.len(), 1);

        // Both generators together reach the whole model.
        let both = [g1[0].clone(), g2[0].clone()];
        let full = cyclic_defect_with_generators(&model, &both, &[8, 10]).unwrap();
        assert_eq!(full.value, Some(0));

        // A single combined generator couples the two components through
        // evaluation at the origin, leaving exactly one missed direction.
        let combined = ModelGenerator::combine(&both).unwrap();
        let single =
            cyclic_defect_with_generators(&model, &[combined], &[8, 10]).unwrap();
        assert_eq!(single.codims, vec![1, 1]);
        assert!(single.stabilized);
        assert_eq!(single.value, Some(1));
    }

    #[test]
    fn truncation_guard_rejects_short_models() {
        let (_, triple) = parabola_triple();
        let short_model = ShiftModel::new(shuffle_colligation(), 8).unwrap();
        let res = cyclic_defect(&short_model, &triple, &[8]);
        assert!(matches!(
            res,
            Err(Error::TruncationInsufficient { needed: 9, have: 8 })
        ));
    }

    #[test]
    fn non_monic_curve_is_rejected() {
        let (model, mut triple) = parabola_triple();
        triple.curve =
            BiPoly::from_grid(2, 2, vec![-C64::ONE, C64::ZERO, C64::ZERO, C64::ONE])
                .unwrap(); // zw - 1
        assert!(matches!(
            triple_generators(&model, &triple),
            Err(Error::NotMonicInW)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// The reduced basis is a canonical object: swapping the input pair
        /// changes cofactors but not the generator list, and the quotient
        /// dimension is symmetric.
        #[test]
        fn reduced_basis_ignores_input_order(
            coeffs_p in proptest::collection::vec(-2i64..=2, 10),
            coeffs_q in proptest::collection::vec(-2i64..=2, 10),
        ) {
            let build = |cs: &[i64]| {
                let mut poly = ExactBiPoly::zero();
                let mut idx = 0;
                for i in 0..=3u32 {
                    for j in 0..=(3 - i) {
                        poly = poly.add(&ExactBiPoly::monomial(
                            GaussianRational::from_integer(cs[idx]),
                            i,
                            j,
                        ));
                        idx += 1;
                    }
                }
                poly
            };
            let p = build(&coeffs_p);
            let q = build(&coeffs_q);
            prop_assume!(!p.is_zero() && !q.is_zero());
            let ab = buchberger(&p, &q, TermOrder::LexZw).unwrap();
            let ba = buchberger(&q, &p, TermOrder::LexZw).unwrap();
            let gens_ab: Vec<ExactBiPoly> = ab.generators().cloned().collect();
            let gens_ba: Vec<ExactBiPoly> = ba.generators().cloned().collect();
            prop_assert_eq!(gens_ab, gens_ba);
            prop_assert_eq!(ab.quotient_dim(), ba.quotient_dim());
            prop_assert!(ab.verify_cofactors());
        }
    }
}
