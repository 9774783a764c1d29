//! Truncated shift models for pure isopairs annihilated by an inner-toral
//! polynomial: the pair (S, T) acts on polynomial vectors of degree at most
//! D as multiplication by z and by the symbol Phi. Provides joint-kernel
//! dimensions at variety points, the rank tuple over the factors of the
//! annihilating polynomial, characteristic-polynomial consistency checks,
//! multiplicities, and restriction to finite-codimension invariant ranges
//! of Blaschke numerators.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::cmat::{joint_adjoint_nullity, CMat};
use crate::colligation::Colligation;
use crate::poly::{self, BiPoly, UniPoly, VarietyPoint};
use crate::{Error, Result, C64};

#[inline]
fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

const TAU: f64 = core::f64::consts::TAU;

/// Relative singular-value threshold for kernel dimensions.
pub const RANK_TOL: f64 = 1e-7;

/// A list of pairwise-distinct factors of an annihilating polynomial,
/// together with their product.
#[derive(Clone, Debug)]
pub struct Factorization {
    factors: Vec<BiPoly>,
    product: BiPoly,
    /// Coefficientwise relative deviation between the supplied product and
    /// the product of the factors (zero when the product is derived).
    pub product_residual: f64,
}

impl Factorization {
    pub fn new(factors: Vec<BiPoly>) -> Result<Self> {
        Self::validate(&factors)?;
        let mut product = BiPoly::constant(C64::ONE);
        for f in &factors {
            product = product.mul(f);
        }
        Ok(Factorization { factors, product, product_residual: 0.0 })
    }

    /// Build from factors and an independently supplied product, verifying
    /// they agree coefficientwise to 1e-8 relative.
    pub fn with_product(factors: Vec<BiPoly>, product: BiPoly) -> Result<Self> {
        Self::validate(&factors)?;
        let mut formed = BiPoly::constant(C64::ONE);
        for f in &factors {
            formed = formed.mul(f);
        }
        let scale = product.max_coeff().max(formed.max_coeff()).max(1e-30);
        let residual = formed.sub(&product).max_coeff() / scale;
        if residual > 1e-8 {
            return Err(Error::BadFactorization("product of factors does not match the polynomial"));
        }
        Ok(Factorization { factors, product, product_residual: residual })
    }

    fn validate(factors: &[BiPoly]) -> Result<()> {
        if factors.is_empty() {
            return Err(Error::BadFactorization("empty factor list"));
        }
        for f in factors {
            if f.is_zero() {
                return Err(Error::BadFactorization("zero factor"));
            }
            if f.deg_z() == 0 || f.deg_w() == 0 {
                return Err(Error::BadFactorization("factor must depend on both variables"));
            }
        }
        for i in 0..factors.len() {
            for j in i + 1..factors.len() {
                if factors[i].is_scalar_multiple_of(&factors[j], 1e-8) {
                    return Err(Error::BadFactorization("repeated factor"));
                }
            }
        }
        Ok(())
    }

    pub fn factors(&self) -> &[BiPoly] {
        &self.factors
    }

    pub fn product(&self) -> &BiPoly {
        &self.product
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// (m_j, n_j) = bidegree of each factor.
    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        self.factors.iter().map(|f| f.bidegree()).collect()
    }
}

/// Which operator of the pair an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOp {
    /// Multiplication by the coordinate z.
    S,
    /// Multiplication by the symbol Phi.
    T,
}

/// The pair (S, T) compressed to vector polynomials of degree <= truncation.
///
/// Basis ordering is degree-major: entry a*M + k is coefficient k of the
/// degree-a block.
#[derive(Clone, Debug)]
pub struct ShiftModel {
    col: Colligation,
    truncation: usize,
}

impl ShiftModel {
    pub fn new(col: Colligation, truncation: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::Invalid("truncation must be at least 2"));
        }
        Ok(ShiftModel { col, truncation })
    }

    pub fn colligation(&self) -> &Colligation {
        &self.col
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn fiber_dim(&self) -> usize {
        self.col.m()
    }

    pub fn dim(&self) -> usize {
        (self.truncation + 1) * self.col.m()
    }

    /// Matrix of S: the block shift raising the degree by one.
    pub fn s_matrix(&self) -> CMat {
        let m = self.col.m();
        let d = self.truncation;
        let mut s = CMat::zeros((d + 1) * m, (d + 1) * m);
        for a in 0..d {
            for k in 0..m {
                s[((a + 1) * m + k, a * m + k)] = C64::ONE;
            }
        }
        s
    }

    /// Matrix of T: block lower-triangular Toeplitz in the Taylor
    /// coefficients of the symbol.
    pub fn t_matrix(&self) -> CMat {
        let m = self.col.m();
        let d = self.truncation;
        let mut t = CMat::zeros((d + 1) * m, (d + 1) * m);
        for b in 0..=d {
            let phi_b = self.col.taylor_coeff(b);
            if phi_b.max_abs() == 0.0 {
                continue;
            }
            for a in 0..=(d - b) {
                t.set_block((a + b) * m, a * m, &phi_b);
            }
        }
        t
    }

    /// Max residual of p(z, Phi(z)) over boundary and interior samples;
    /// equals zero exactly when p annihilates the pair.
    pub fn annihilation_residual(&self, p: &BiPoly, boundary: usize, interior: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        let mut check = |z: C64| -> Result<()> {
            let phi = self.col.transfer(z)?;
            let u = p.slice_at_z(z);
            let m = self.col.m();
            let mut acc = CMat::zeros(m, m);
            for &ck in u.coeffs.iter().rev() {
                acc = acc.mul(&phi);
                for i in 0..m {
                    acc[(i, i)] += ck;
                }
            }
            worst = worst.max(acc.fro_norm());
            Ok(())
        };
        for k in 0..boundary {
            let t = TAU * (k as f64) / (boundary as f64);
            check(c(t.cos(), t.sin()))?;
        }
        for k in 0..interior {
            let r = 0.9 * (((k + 1) as f64) / (interior as f64)).sqrt();
            let t = TAU * (((k as f64) * 0.618_033_988_749_894_8) % 1.0);
            check(c(r * t.cos(), r * t.sin()))?;
        }
        Ok(worst)
    }

    /// Dimension of the joint kernel of (S - z)^* and (T - w)^* at a point
    /// of the bidisk, computed on the symbol as the nullity of Phi(z) - w.
    pub fn joint_kernel_dim(&self, z: C64, w: C64) -> Result<usize> {
        let phi = self.col.transfer(z)?;
        let m = self.col.m();
        let mut shifted = phi;
        for i in 0..m {
            shifted[(i, i)] -= w;
        }
        let svd = shifted.svd();
        let smax = svd.s.first().copied().unwrap_or(0.0);
        let floor = 1e-12 * (1.0 + w.norm());
        if smax <= floor {
            return Ok(m);
        }
        Ok(svd.s.iter().filter(|&&x| x <= RANK_TOL * smax).count())
    }

    /// Multiplicity of S or T: the dimension of the kernel of the adjoint of
    /// the truncated operator. Recomputed at truncation + 1; disagreement is
    /// reported as instability.
    pub fn multiplicity(&self, which: PairOp) -> Result<usize> {
        let get = |model: &ShiftModel| -> usize {
            let v = match which {
                PairOp::S => model.s_matrix(),
                PairOp::T => model.t_matrix(),
            };
            joint_adjoint_nullity(&[&v], RANK_TOL)
        };
        let here = get(self);
        let bigger = ShiftModel::new(self.col.clone(), self.truncation + 1)?;
        if get(&bigger) != here {
            return Err(Error::TruncationUnstable);
        }
        Ok(here)
    }
}

/// Rank tuple of the isopair over the factors of its annihilating polynomial.
#[derive(Clone, Debug)]
pub struct RankResult {
    /// alpha_j = joint kernel dimension at regular points of factor j.
    pub alpha: Vec<usize>,
    /// The regular points that were used, per factor.
    pub samples: Vec<Vec<VarietyPoint>>,
    /// Fiber dimension M of the model.
    pub m: usize,
    /// State dimension N of the colligation.
    pub n: usize,
    /// M == sum alpha_j * deg_w(p_j).
    pub m_consistent: bool,
    /// N == sum alpha_j * deg_z(p_j).
    pub n_consistent: bool,
}

/// Sample regular points of one factor, regular for the full product and
/// clear of the other factors.
fn regular_component_samples(
    fac: &Factorization,
    j: usize,
    count: usize,
    seed: u64,
    radius: f64,
) -> Result<Vec<VarietyPoint>> {
    let pj = &fac.factors()[j];
    let product = fac.product();
    let mut kept = Vec::with_capacity(count);
    // oversample: regularity for the product prunes crossings with other factors
    let mut attempt = 0u64;
    while kept.len() < count && attempt < 40 {
        let raw = poly::sample_variety(pj, count * 2, seed.wrapping_add(attempt * 7919), radius)?;
        for pt in raw {
            if kept.len() >= count {
                break;
            }
            if !pt.regular {
                continue;
            }
            match poly::is_regular_point(product, pt.z, pt.w, poly::REGULARITY_TOL) {
                Ok(true) => {}
                _ => continue,
            }
            let clear = fac
                .factors()
                .iter()
                .enumerate()
                .all(|(l, pl)| l == j || pl.eval(pt.z, pt.w).norm() > 1e-6 * pl.max_coeff().max(1.0));
            if !clear {
                continue;
            }
            kept.push(VarietyPoint { component: Some(j), ..pt });
        }
        attempt += 1;
    }
    if kept.len() < count {
        return Err(Error::SamplingExhausted);
    }
    Ok(kept)
}

/// Compute the rank tuple: at regular points of each factor the joint kernel
/// dimension is constant; sampling retries (fresh seeds) up to 100 times
/// before reporting non-unanimity.
pub fn compute_rank(
    model: &ShiftModel,
    fac: &Factorization,
    samples_per_component: usize,
    seed: u64,
) -> Result<RankResult> {
    let m = model.colligation().m();
    let n = model.colligation().n();
    let mut alpha = Vec::with_capacity(fac.len());
    let mut samples = Vec::with_capacity(fac.len());
    for j in 0..fac.len() {
        let mut resolved = None;
        for retry in 0..100u64 {
            let pts = regular_component_samples(
                fac,
                j,
                samples_per_component,
                seed.wrapping_add(retry.wrapping_mul(104729)).wrapping_add(j as u64),
                0.95,
            )?;
            let dims: Vec<usize> = pts
                .iter()
                .map(|pt| model.joint_kernel_dim(pt.z, pt.w))
                .collect::<Result<_>>()?;
            let first = dims[0];
            if dims.iter().all(|&d| d == first) {
                resolved = Some((first, pts));
                break;
            }
        }
        let (a, pts) = resolved.ok_or(Error::NonUnanimousRank)?;
        alpha.push(a);
        samples.push(pts);
    }
    // the variety covers the z-disk with deg_w sheets, so mult(S) = M pairs
    // with the w-degree; symmetrically mult(T) = N pairs with the z-degree
    let m_sum: usize = alpha.iter().zip(fac.factors()).map(|(&a, p)| a * p.deg_w()).sum();
    let n_sum: usize = alpha.iter().zip(fac.factors()).map(|(&a, p)| a * p.deg_z()).sum();
    Ok(RankResult {
        alpha,
        samples,
        m,
        n,
        m_consistent: m_sum == m,
        n_consistent: n_sum == n,
    })
}

/// Compare det(wI - Phi(z)) against the product of the factor slices raised
/// to the rank tuple, both monic in w, over boundary and interior samples of
/// z. Returns the max coefficient deviation. Sample parameters where a
/// factor's leading w-coefficient nearly vanishes are skipped.
pub fn char_poly_check(
    model: &ShiftModel,
    fac: &Factorization,
    alpha: &[usize],
    samples: usize,
) -> Result<f64> {
    if alpha.len() != fac.len() {
        return Err(Error::Invalid("rank tuple length must match the factor count"));
    }
    let m = model.colligation().m();
    let claimed: usize = alpha.iter().zip(fac.factors()).map(|(&a, p)| a * p.deg_w()).sum();
    if claimed != m {
        return Err(Error::Invalid("characteristic polynomial degree mismatch"));
    }
    let mut worst = 0.0f64;
    let mut used = 0usize;
    for k in 0..samples {
        // interleave boundary and interior parameters
        let t = TAU * (k as f64) / (samples as f64);
        let r = if k % 2 == 0 { 1.0 } else { 0.3 + 0.6 * ((k as f64) / (samples as f64)) };
        let z = c(r * t.cos(), r * t.sin());
        let lhs = model.colligation().char_poly(z)?;
        let mut rhs = UniPoly::one();
        let mut degenerate = false;
        for (p, &a) in fac.factors().iter().zip(alpha) {
            let slice = p.slice_at_z(z);
            if slice.is_zero() || slice.degree() < p.deg_w() {
                degenerate = true;
                break;
            }
            let lead = slice.leading();
            if lead.norm() < 1e-8 * slice.max_coeff().max(1.0) {
                degenerate = true;
                break;
            }
            let monic = slice.scale(C64::ONE / lead);
            for _ in 0..a {
                rhs = rhs.mul(&monic);
            }
        }
        if degenerate {
            continue;
        }
        used += 1;
        let diff = lhs.sub(&rhs);
        worst = worst.max(diff.max_coeff());
    }
    if used == 0 {
        return Err(Error::SamplingExhausted);
    }
    Ok(worst)
}

/// A finite Blaschke product recorded by its zeros with multiplicity.
#[derive(Clone, Debug)]
pub struct BlaschkeProduct {
    /// Distinct zeros in the open disk, with multiplicities.
    pub zeros: Vec<(C64, usize)>,
}

impl BlaschkeProduct {
    pub fn from_zeros(zeros: &[(C64, usize)]) -> Result<Self> {
        for (z, m) in zeros {
            if z.norm() >= 1.0 {
                return Err(Error::SpectrumNotInDisk);
            }
            if *m == 0 {
                return Err(Error::Invalid("zero multiplicity"));
            }
        }
        Ok(BlaschkeProduct { zeros: zeros.to_vec() })
    }

    pub fn degree(&self) -> usize {
        self.zeros.iter().map(|&(_, m)| m).sum()
    }

    /// Monic numerator polynomial prod (z - zero)^mult.
    pub fn numerator(&self) -> UniPoly {
        let mut flat = Vec::new();
        for &(z, m) in &self.zeros {
            for _ in 0..m {
                flat.push(z);
            }
        }
        UniPoly::from_roots(&flat)
    }

    /// Denominator prod (1 - conj(zero) z)^mult.
    pub fn denominator(&self) -> UniPoly {
        let mut den = UniPoly::one();
        for &(z, m) in &self.zeros {
            let lin = UniPoly::new(vec![C64::ONE, -z.conj()]);
            for _ in 0..m {
                den = den.mul(&lin);
            }
        }
        den
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.numerator().eval(z) / self.denominator().eval(z)
    }

    /// Evaluate on a square matrix: prod (A - zero)^m (I - conj(zero) A)^{-m}.
    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        let n = a.rows();
        let mut acc = CMat::identity(n);
        for &(z, m) in &self.zeros {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] -= z;
            }
            let mut cayley = a.scale(-z.conj());
            for i in 0..n {
                cayley[(i, i)] += C64::ONE;
            }
            for _ in 0..m {
                acc = shifted.mul(&cayley.solve(&acc)?);
            }
        }
        Ok(acc)
    }
}

/// Minimal Blaschke product annihilating the matrix: zeros at the clustered
/// eigenvalues with exponents from the minimal polynomial. The certificate
/// ||u(A)|| <= 1e-9 * (1 + ||A||)^degree is enforced.
pub fn blaschke_annihilator(a: &CMat) -> Result<BlaschkeProduct> {
    if !a.is_square() {
        return Err(Error::Invalid("annihilator needs a square matrix"));
    }
    let n = a.rows();
    let eigs = a.eigenvalues()?;
    if eigs.iter().any(|e| e.norm() >= 1.0 - 1e-9) {
        return Err(Error::SpectrumNotInDisk);
    }
    let clusters = poly::cluster_points(&eigs, 1e-6);
    let mut zeros = Vec::with_capacity(clusters.len());
    for (lam, _) in clusters {
        // exponent in the minimal polynomial: nullity of (A - lam)^k stops
        // growing at the Jordan height
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= lam;
        }
        let mut power = shifted.clone();
        let mut prev_nullity = {
            let svd = power.svd();
            n - svd.rank(RANK_TOL)
        };
        let mut height = 1usize;
        loop {
            power = power.mul(&shifted);
            let nullity = n - power.svd().rank(RANK_TOL);
            if nullity == prev_nullity || height >= n {
                break;
            }
            prev_nullity = nullity;
            height += 1;
        }
        zeros.push((lam, height));
    }
    let u = BlaschkeProduct::from_zeros(&zeros)?;
    let residual = u.apply(a)?.fro_norm();
    let scale = (1.0 + a.fro_norm()).powi(u.degree() as i32);
    if residual > 1e-9 * scale {
        return Err(Error::CertificateFailed { what: "Blaschke annihilator", residual });
    }
    Ok(u)
}

/// The model pair compressed to the range of n(S) on inputs of degree at
/// most D - d, where n is the numerator of a degree-d Blaschke product.
/// This range is invariant enough for the joint-kernel comparison and has
/// codimension exactly d * M in the truncated space.
#[derive(Clone, Debug)]
pub struct RestrictedModel {
    /// Orthonormal basis of the range, as columns.
    pub basis: CMat,
    /// Compression of S to the range.
    pub s_c: CMat,
    /// Compression of T to the range.
    pub t_c: CMat,
    /// Codimension of the range in the truncated model space.
    pub codim: usize,
    /// Degree of the Blaschke product that produced the restriction.
    pub blaschke_degree: usize,
}

pub fn restrict_via_blaschke(model: &ShiftModel, u: &BlaschkeProduct) -> Result<RestrictedModel> {
    let d = u.degree();
    let dd = model.truncation();
    if dd < d + 2 {
        return Err(Error::TruncationInsufficient { needed: d + 2, have: dd });
    }
    let m = model.fiber_dim();
    let s = model.s_matrix();
    let numer = u.numerator();
    // n(S) columnwise on the degree <= D - d block
    let mut ns = CMat::zeros(model.dim(), model.dim());
    for i in 0..model.dim() {
        ns[(i, i)] = C64::ONE;
    }
    let mut acc = CMat::zeros(model.dim(), model.dim());
    for &ck in numer.coeffs.iter().rev() {
        acc = s.mul(&acc);
        for i in 0..model.dim() {
            acc[(i, i)] += ck;
        }
    }
    ns = acc.mul(&ns);
    let domain_cols: Vec<usize> = (0..(dd - d + 1) * m).collect();
    let gen = ns.select_cols(&domain_cols);
    let qr = gen.qr_pivoted();
    let kmax = gen.rows().min(gen.cols());
    let d0 = qr.r[(0, 0)].norm();
    let rank = if d0 == 0.0 {
        0
    } else {
        (0..kmax).take_while(|&i| qr.r[(i, i)].norm() > 1e-10 * d0).count()
    };
    let basis = qr.q.block(0, 0, model.dim(), rank);
    let t = model.t_matrix();
    let s_c = basis.adjoint().mul(&s).mul(&basis);
    let t_c = basis.adjoint().mul(&t).mul(&basis);
    Ok(RestrictedModel {
        basis,
        s_c,
        t_c,
        codim: model.dim() - rank,
        blaschke_degree: d,
    })
}

impl RestrictedModel {
    /// Joint kernel dimension of the adjoints of (S_c - z, T_c - w).
    pub fn joint_kernel_dim(&self, z: C64, w: C64) -> usize {
        let r = self.s_c.rows();
        let mut sz = self.s_c.clone();
        let mut tw = self.t_c.clone();
        for i in 0..r {
            sz[(i, i)] -= z;
            tw[(i, i)] -= w;
        }
        joint_adjoint_nullity(&[&sz, &tw], RANK_TOL)
    }
}

/// Report of the rank-stability check under a finite-codimension restriction.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub restricted_codim: usize,
    pub expected_codim: usize,
    pub codim_exact: bool,
    /// Per factor: all sampled joint kernel dimensions on the restriction
    /// equal alpha_j.
    pub per_component: Vec<bool>,
    pub all_stable: bool,
}

/// Verify that restricting the pair to the range of the Blaschke numerator
/// changes no joint-kernel dimension at regular points (sampled away from
/// the zeros of the Blaschke product) and that the codimension is exactly
/// degree * M.
pub fn rank_stability_check(
    model: &ShiftModel,
    fac: &Factorization,
    u: &BlaschkeProduct,
    alpha: &[usize],
    samples_per_component: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if alpha.len() != fac.len() {
        return Err(Error::Invalid("rank tuple length must match the factor count"));
    }
    let restricted = restrict_via_blaschke(model, u)?;
    let expected = u.degree() * model.fiber_dim();
    // truncation tails decay like radius^(D - d); keep samples well inside
    let radius = 0.35;
    let mut per_component = Vec::with_capacity(fac.len());
    for j in 0..fac.len() {
        let mut pts = Vec::new();
        let mut attempt = 0u64;
        while pts.len() < samples_per_component && attempt < 50 {
            let batch = regular_component_samples(
                fac,
                j,
                samples_per_component,
                seed.wrapping_add(attempt * 6151).wrapping_add(j as u64),
                radius,
            )?;
            for pt in batch {
                if pts.len() >= samples_per_component {
                    break;
                }
                let clear_of_zeros = u.zeros.iter().all(|&(z, _)| (pt.z - z).norm() > 0.05);
                if clear_of_zeros {
                    pts.push(pt);
                }
            }
            attempt += 1;
        }
        if pts.len() < samples_per_component {
            return Err(Error::SamplingExhausted);
        }
        let ok = pts
            .iter()
            .all(|pt| restricted.joint_kernel_dim(pt.z, pt.w) == alpha[j]);
        per_component.push(ok);
    }
    let codim_exact = restricted.codim == expected;
    let all_stable = codim_exact && per_component.iter().all(|&b| b);
    Ok(StabilityReport {
        restricted_codim: restricted.codim,
        expected_codim: expected,
        codim_exact,
        per_component,
        all_stable,
    })
}
