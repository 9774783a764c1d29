//! On-disk JSON formats and conversions to core types.
//!
//! - Bivariate polynomial: `{"bidegree": [dz, dw], "coeffs": [[[re, im], ...], ...]}`
//!   where `coeffs[i][j]` multiplies `z^i w^j`; the grid shape must be
//!   `(dz + 1) x (dw + 1)`.
//! - Colligation: `{"M": m, "N": n, "A": [[..]], "B": [[..]], "C": [[..]], "D": [[..]]}`
//!   with each block a row-major grid of `[re, im]` pairs; the assembled
//!   `[[A, B], [C, D]]` must be unitary with the state block strictly
//!   contractive. `A` is `M x M`, `B` is `M x N`, `C` is `N x M`, `D` is `N x N`.
//! - Factor list: a bare JSON array of bivariate polynomials.
//! - Matrix polynomial: `{"shape": [rows, cols], "entries": [[poly, ...], ...]}`.
//! - Exact polynomial: `{"terms": [{"i": .., "j": .., "re": "a/b", "im": "c/d"}, ...],
//!   "order": "lex_zw"}` with exact rational coefficient strings; an exact
//!   pair file is a bare JSON array of two of these.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use isopair_core::cmat::CMat;
use isopair_core::colligation::Colligation;
use isopair_core::ideal::{ExactBiPoly, GaussianRational, TermOrder};
use isopair_core::kernel::MatrixBiPoly;
use isopair_core::poly::BiPoly;
use isopair_core::C64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

/// Complex number on disk: `[re, im]`.
pub type ComplexDto = [f64; 2];

/// Row-major complex matrix on disk.
pub type MatrixDto = Vec<Vec<ComplexDto>>;

pub fn to_c64(c: ComplexDto) -> C64 {
    C64::new(c[0], c[1])
}

pub fn from_c64(c: C64) -> ComplexDto {
    [c.re, c.im]
}

/// Adapt a core error into a displayable usage/check error.
pub fn core_err(e: isopair_core::Error) -> anyhow::Error {
    anyhow!("{e}")
}

/// Parse a JSON file; parse errors carry the file path and the position
/// (line and column) reported by the JSON parser.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {what} file {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| anyhow!("malformed {what} file {}: {e}", path.display()))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        bail!("{what} contains a non-finite number")
    }
}

// ---------------------------------------------------------------------------
// Bivariate polynomials
// ---------------------------------------------------------------------------

/// Bivariate polynomial with complex coefficients: `coeffs[i][j] * z^i w^j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiPolyDto {
    pub bidegree: [usize; 2],
    pub coeffs: Vec<Vec<ComplexDto>>,
}

impl BiPolyDto {
    pub fn to_core(&self) -> Result<BiPoly> {
        let rows = self.bidegree[0] + 1;
        let cols = self.bidegree[1] + 1;
        if self.coeffs.len() != rows {
            bail!(
                "polynomial grid has {} rows, bidegree [{}, {}] needs {}",
                self.coeffs.len(),
                self.bidegree[0],
                self.bidegree[1],
                rows
            );
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for (i, row) in self.coeffs.iter().enumerate() {
            if row.len() != cols {
                bail!("polynomial grid row {i} has {} entries, needs {cols}", row.len());
            }
            for &[re, im] in row {
                flat.push(C64::new(
                    finite(re, "polynomial coefficient")?,
                    finite(im, "polynomial coefficient")?,
                ));
            }
        }
        BiPoly::from_grid(rows, cols, flat).map_err(core_err)
    }

    /// Canonical form: the grid is trimmed to the exact bidegree.
    pub fn from_core(p: &BiPoly) -> Self {
        let (dz, dw) = p.bidegree();
        let coeffs = (0..=dz)
            .map(|i| (0..=dw).map(|j| from_c64(p.coeff(i, j))).collect())
            .collect();
        BiPolyDto { bidegree: [dz, dw], coeffs }
    }
}

pub fn load_poly(path: &Path) -> Result<BiPoly> {
    read_json::<BiPolyDto>(path, "polynomial")?
        .to_core()
        .with_context(|| format!("invalid polynomial in {}", path.display()))
}

/// A factor list is a bare JSON array of polynomials.
pub fn load_factors(path: &Path) -> Result<Vec<BiPoly>> {
    let dtos: Vec<BiPolyDto> = read_json(path, "factor list")?;
    if dtos.is_empty() {
        bail!("factor list {} is empty", path.display());
    }
    dtos.iter()
        .enumerate()
        .map(|(k, d)| {
            d.to_core()
                .with_context(|| format!("invalid factor {k} in {}", path.display()))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Colligations
// ---------------------------------------------------------------------------

/// Unitary colligation blocks; field names on disk are upper case.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColligationDto {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "A")]
    pub a: MatrixDto,
    #[serde(rename = "B")]
    pub b: MatrixDto,
    #[serde(rename = "C")]
    pub c: MatrixDto,
    #[serde(rename = "D")]
    pub d: MatrixDto,
}

pub fn matrix_to_core(m: &MatrixDto, rows: usize, cols: usize, name: &str) -> Result<CMat> {
    if m.len() != rows {
        bail!("block {name} has {} rows, needs {rows}", m.len());
    }
    let mut flat = Vec::with_capacity(rows * cols);
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            bail!("block {name} row {i} has {} entries, needs {cols}", row.len());
        }
        for &[re, im] in row {
            flat.push(C64::new(finite(re, name)?, finite(im, name)?));
        }
    }
    CMat::from_rows(rows, cols, &flat).map_err(core_err)
}

pub fn matrix_from_core(m: &CMat) -> MatrixDto {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|&c| from_c64(c)).collect())
        .collect()
}

impl ColligationDto {
    pub fn to_core(&self) -> Result<Colligation> {
        let a = matrix_to_core(&self.a, self.m, self.m, "A")?;
        let b = matrix_to_core(&self.b, self.m, self.n, "B")?;
        let c = matrix_to_core(&self.c, self.n, self.m, "C")?;
        let d = matrix_to_core(&self.d, self.n, self.n, "D")?;
        Colligation::new(a, b, c, d).map_err(core_err)
    }

    pub fn from_core(col: &Colligation) -> Self {
        ColligationDto {
            m: col.m(),
            n: col.n(),
            a: matrix_from_core(col.a()),
            b: matrix_from_core(col.b()),
            c: matrix_from_core(col.c()),
            d: matrix_from_core(col.d()),
        }
    }
}

pub fn load_colligation(path: &Path) -> Result<Colligation> {
    read_json::<ColligationDto>(path, "colligation")?
        .to_core()
        .with_context(|| format!("invalid colligation in {}", path.display()))
}

// ---------------------------------------------------------------------------
// Matrix polynomials
// ---------------------------------------------------------------------------

/// Matrix of bivariate polynomials.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixBiPolyDto {
    pub shape: [usize; 2],
    pub entries: Vec<Vec<BiPolyDto>>,
}

impl MatrixBiPolyDto {
    pub fn to_core(&self) -> Result<MatrixBiPoly> {
        let [rows, cols] = self.shape;
        if self.entries.len() != rows {
            bail!("matrix polynomial has {} rows, shape says {rows}", self.entries.len());
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != cols {
                bail!("matrix polynomial row {i} has {} entries, needs {cols}", row.len());
            }
            for e in row {
                flat.push(e.to_core()?);
            }
        }
        MatrixBiPoly::new(rows, cols, flat).map_err(core_err)
    }

    pub fn from_core(m: &MatrixBiPoly) -> Self {
        let entries = (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| BiPolyDto::from_core(m.entry(i, j))).collect())
            .collect();
        MatrixBiPolyDto { shape: [m.rows(), m.cols()], entries }
    }
}

// ---------------------------------------------------------------------------
// Exact polynomials
// ---------------------------------------------------------------------------

/// One exact term: the coefficient of `z^i w^j` is `re + im * sqrt(-1)` with
/// both parts rational numbers written as strings ("3", "-7/2").
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactTermDto {
    pub i: u32,
    pub j: u32,
    pub re: String,
    pub im: String,
}

/// Exact polynomial as a list of terms plus an optional term-order tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactBiPolyDto {
    pub terms: Vec<ExactTermDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
}

fn parse_rational(s: &str, what: &str) -> Result<BigRational> {
    BigRational::from_str(s.trim()).map_err(|e| anyhow!("{what}: cannot parse rational {s:?}: {e}"))
}

impl ExactBiPolyDto {
    /// Terms with a repeated monomial are summed.
    pub fn to_core(&self) -> Result<ExactBiPoly> {
        let mut acc = ExactBiPoly::zero();
        for (k, t) in self.terms.iter().enumerate() {
            let re = parse_rational(&t.re, &format!("term {k}"))?;
            let im = parse_rational(&t.im, &format!("term {k}"))?;
            let c = GaussianRational::new(re, im);
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&ExactBiPoly::monomial(c, t.i, t.j));
        }
        Ok(acc)
    }

    pub fn from_core(p: &ExactBiPoly, order: TermOrder) -> Self {
        let terms = p
            .terms()
            .map(|((i, j), c)| ExactTermDto {
                i,
                j,
                re: c.re().to_string(),
                im: c.im().to_string(),
            })
            .collect();
        ExactBiPolyDto { terms, order: Some(order_name(order).to_string()) }
    }
}

pub fn parse_order(s: &str) -> Result<TermOrder> {
    match s {
        "lex_zw" => Ok(TermOrder::LexZw),
        "degrevlex" => Ok(TermOrder::DegRevLex),
        other => bail!("unknown term order {other:?} (expected \"lex_zw\" or \"degrevlex\")"),
    }
}

pub fn order_name(order: TermOrder) -> &'static str {
    match order {
        TermOrder::LexZw => "lex_zw",
        TermOrder::DegRevLex => "degrevlex",
    }
}

/// An exact pair file is a bare JSON array of exactly two exact polynomials.
/// Returns the pair and the order tag of the first polynomial carrying one.
pub fn load_exact_pair(path: &Path) -> Result<(ExactBiPoly, ExactBiPoly, Option<TermOrder>)> {
    let dtos: Vec<ExactBiPolyDto> = read_json(path, "exact pair")?;
    if dtos.len() != 2 {
        bail!("exact pair file {} has {} polynomials, needs exactly 2", path.display(), dtos.len());
    }
    let tag = dtos
        .iter()
        .find_map(|d| d.order.as_deref())
        .map(parse_order)
        .transpose()
        .with_context(|| format!("invalid order tag in {}", path.display()))?;
    let p = dtos[0]
        .to_core()
        .with_context(|| format!("invalid first polynomial in {}", path.display()))?;
    let q = dtos[1]
        .to_core()
        .with_context(|| format!("invalid second polynomial in {}", path.display()))?;
    Ok((p, q, tag))
}
