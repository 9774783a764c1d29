//! Command-line interface: seven subcommands that certify inner-toral
//! polynomials, realize colligations from transfer samples, compute rank
//! tuples, construct admissible kernel triples, run exact ideal
//! computations, estimate cyclic defects, and chain everything into one
//! bundle report.
//!
//! Every command prints a JSON report on stdout and a short human summary
//! on stderr. Output is byte-identical across runs for the same inputs,
//! flags, and seed.
//!
//! Exit codes: 0 when every check passed; 1 when a mathematical check
//! failed (the JSON report says which); 2 on input or usage errors.

use std::env;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use isopair_core::cmat::uniform01;
use isopair_core::colligation::{defect_factor, realize_from_samples, Colligation};
use isopair_core::ideal::{
    buchberger, cyclic_defect_with_generators, relatively_prime, triple_generators, DefectCurve,
    TermOrder,
};
use isopair_core::isopair::{
    char_poly_check, compute_rank, rank_stability_check, BlaschkeProduct, Factorization,
    ShiftModel, StabilityReport,
};
use isopair_core::kernel::{self, AdmissibleTriple};
use isopair_core::poly::{check_inner_toral, sample_variety, BiPoly, DirectionReport};
use isopair_core::{C64, Error as CoreError};

use crate::formats::{
    core_err, from_c64, load_colligation, load_exact_pair, load_factors, load_poly, order_name,
    parse_order, ExactBiPolyDto, MatrixBiPolyDto,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_MATH_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Gate on the truncated-model annihilation residual p(S, T) = 0.
const MODEL_ANNIHILATION_TOL: f64 = 1e-9;
/// Gate on the kernel-matrix annihilation residual Q (Phi - w) = 0.
const Q_ANNIHILATION_TOL: f64 = 1e-8;
/// Gate on the characteristic-polynomial comparison in the rank report.
const CHARPOLY_TOL: f64 = 1e-6;
/// Gate on the colligation intertwining relations of (Q, P).
const INTERTWINING_TOL: f64 = 1e-8;
/// Gate on the sesquilinear Gram comparison through the kernel.
const GRAM_TOL: f64 = 1e-10;
/// Gate on orthonormality of the lifted monomial frame.
const BASIS_TOL: f64 = 1e-10;
/// Span degrees probed by the cyclic-defect estimate.
const DEFECT_DEGREES: [usize; 3] = [8, 10, 12];

#[derive(Parser)]
#[command(
    name = "isopair-lab",
    version,
    about = "Certification toolkit for inner-toral polynomials, rational inner functions, \
             and pure isopairs",
    long_about = "Certification toolkit for inner-toral polynomials, rational inner \
functions, and pure isopairs.\n\nEach subcommand prints a JSON report on stdout and a \
one-line human summary on stderr; output is byte-identical for identical inputs and \
seeds. Exit codes: 0 all checks passed, 1 a mathematical check failed, 2 input or usage \
error.\n\nISOPAIR_LAB_THREADS caps worker parallelism when set (the pipeline currently \
executes sequentially, which honors any cap)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Certify that the zero set of a polynomial is confined to
    /// bidisk-interior, torus, and bidisk-exterior points
    CheckInnerToral {
        /// Polynomial JSON file
        #[arg(long)]
        poly: PathBuf,
        /// Boundary-deviation tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Fiber samples per direction and regime
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Reconstruct a colligation from transfer-function samples and verify
    /// the round trip on held-out points
    Realize {
        /// Colligation JSON file
        #[arg(long)]
        colligation: PathBuf,
        /// Interpolation sample count
        #[arg(long, default_value_t = 24)]
        samples: usize,
        /// RNG seed for sample points
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Held-out transfer error gate
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Compute the rank tuple of the isopair cut out by a factored
    /// polynomial on a truncated shift model
    Rank {
        /// Colligation JSON file
        #[arg(long)]
        colligation: PathBuf,
        /// Factor-list JSON file (array of polynomials)
        #[arg(long)]
        factors: PathBuf,
        /// Shift-model truncation order; the restriction-stability check
        /// needs generous truncation tails
        #[arg(long, default_value_t = 24)]
        truncation: usize,
        /// Regular sample points per component
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// RNG seed for variety sampling
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Construct an admissible kernel triple (K, P, Q) on the zero set of a
    /// polynomial and verify its certificates
    Kernel {
        /// Colligation JSON file
        #[arg(long)]
        colligation: PathBuf,
        /// Polynomial JSON file (the curve)
        #[arg(long)]
        poly: PathBuf,
        /// Shift-model truncation order (for the joint-kernel dimension)
        #[arg(long, default_value_t = 12)]
        truncation: usize,
        /// Sampled point pairs for the kernel identity
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// RNG seed for variety sampling
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kernel-identity residual gate
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Exact ideal computations on a pair of rational polynomials: reduced
    /// Groebner basis, quotient dimension, and relative primality
    Ideal {
        /// Exact-pair JSON file (array of two exact polynomials)
        #[arg(long)]
        factors: PathBuf,
        /// Term order: "lex_zw" or "degrevlex" (default: the file's tag,
        /// else lex_zw)
        #[arg(long)]
        order: Option<String>,
    },
    /// Estimate the cyclic defect of the determinant generators on a
    /// truncated shift model
    Defect {
        /// Colligation JSON file
        #[arg(long)]
        colligation: PathBuf,
        /// Polynomial JSON file (single curve)
        #[arg(long, conflicts_with = "factors")]
        poly: Option<PathBuf>,
        /// Factor-list JSON file (one triple per factor)
        #[arg(long)]
        factors: Option<PathBuf>,
        /// Shift-model truncation order
        #[arg(long, default_value_t = 16)]
        truncation: usize,
        /// RNG seed for base-point selection
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the full pipeline on a bundle: inner-toral check, realization
    /// round trip, rank tuple, kernel triples, and cyclic defect
    Report {
        /// Colligation JSON file
        #[arg(long)]
        colligation: PathBuf,
        /// Polynomial JSON file (the curve)
        #[arg(long)]
        poly: PathBuf,
        /// Optional factor-list JSON file; the product must match the curve
        #[arg(long)]
        factors: Option<PathBuf>,
        /// Shift-model truncation order; the restriction-stability check
        /// needs generous truncation tails
        #[arg(long, default_value_t = 24)]
        truncation: usize,
        /// Sample budget for the rank and kernel stages
        #[arg(long, default_value_t = 40)]
        samples: usize,
        /// RNG seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Residual gate for the inner-toral and kernel stages
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

/// Finished command: a JSON report, a human summary, and the overall verdict.
pub struct CmdReport {
    pub pass: bool,
    pub json: Value,
    pub summary: String,
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    match thread_cap() {
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
        Ok(Some(n)) => eprintln!("thread cap {n}: the pipeline executes sequentially"),
        Ok(None) => {}
    }
    match dispatch(cli.command) {
        Ok(rep) => {
            match serde_json::to_string_pretty(&rep.json) {
                Ok(s) => println!("{s}"),
                Err(e) => {
                    eprintln!("error: cannot serialize report: {e}");
                    return EXIT_USAGE;
                }
            }
            eprintln!("{}", rep.summary);
            if rep.pass {
                EXIT_PASS
            } else {
                EXIT_MATH_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match env::var("ISOPAIR_LAB_THREADS") {
        Err(env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(anyhow!("ISOPAIR_LAB_THREADS: {e}")),
        Ok(s) => {
            let n: usize = s
                .parse()
                .map_err(|_| anyhow!("ISOPAIR_LAB_THREADS must be a positive integer, got {s:?}"))?;
            if n == 0 {
                bail!("ISOPAIR_LAB_THREADS must be at least 1");
            }
            Ok(Some(n))
        }
    }
}

fn dispatch(command: Command) -> Result<CmdReport> {
    match command {
        Command::CheckInnerToral { poly, tol, samples } => cmd_check_inner_toral(&poly, tol, samples),
        Command::Realize { colligation, samples, seed, tol } => {
            cmd_realize(&colligation, samples, seed, tol)
        }
        Command::Rank { colligation, factors, truncation, samples, seed } => {
            cmd_rank(&colligation, &factors, truncation, samples, seed)
        }
        Command::Kernel { colligation, poly, truncation, samples, seed, tol } => {
            cmd_kernel(&colligation, &poly, truncation, samples, seed, tol)
        }
        Command::Ideal { factors, order } => cmd_ideal(&factors, order.as_deref()),
        Command::Defect { colligation, poly, factors, truncation, seed } => {
            cmd_defect(&colligation, poly.as_deref(), factors.as_deref(), truncation, seed)
        }
        Command::Report { colligation, poly, factors, truncation, samples, seed, tol } => {
            cmd_report(&colligation, &poly, factors.as_deref(), truncation, samples, seed, tol)
        }
    }
}

// ---------------------------------------------------------------------------
// Error classification and step plumbing
// ---------------------------------------------------------------------------

/// Errors that indicate a bad input file or flag (exit 2) rather than a
/// failed mathematical check (exit 1).
fn input_error(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::Shape { .. }
            | CoreError::BadColligation(_)
            | CoreError::NotUnitary { .. }
            | CoreError::SpectrumNotInDisk
            | CoreError::ZeroPolynomial
            | CoreError::DegenerateBidegree
            | CoreError::NotSquareFree
            | CoreError::BadFactorization(_)
            | CoreError::NotMonicInW
            | CoreError::TruncationInsufficient { .. }
            | CoreError::Invalid(_)
    )
}

/// A computation step: either a value or a failed check with its stage label.
enum Step<T> {
    Done(T),
    Failed { stage: &'static str, detail: String },
}

/// Input-class errors bubble up as usage errors; everything else becomes a
/// failed check attributed to `stage`.
fn classify<T>(stage: &'static str, r: core::result::Result<T, CoreError>) -> Result<Step<T>> {
    match r {
        Ok(v) => Ok(Step::Done(v)),
        Err(e) if input_error(&e) => Err(anyhow!("{e}")),
        Err(e) => Ok(Step::Failed { stage, detail: e.to_string() }),
    }
}

macro_rules! step_or {
    ($stage:expr, $r:expr) => {
        match classify($stage, $r)? {
            Step::Done(v) => v,
            Step::Failed { stage, detail } => return Ok(Step::Failed { stage, detail }),
        }
    };
}

fn verdict_str(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn fail_report(command: &str, stage: &str, detail: &str) -> CmdReport {
    CmdReport {
        pass: false,
        json: json!({
            "command": command,
            "verdict": "fail",
            "failure": {"stage": stage, "detail": detail},
        }),
        summary: format!("{command}: FAIL at {stage}: {detail}"),
    }
}

/// Insert a status field into a stage object.
fn with_status(v: Value, status: &str) -> Value {
    match v {
        Value::Object(mut map) => {
            map.insert("status".into(), json!(status));
            Value::Object(map)
        }
        other => json!({"status": status, "detail": other}),
    }
}

// ---------------------------------------------------------------------------
// check-inner-toral
// ---------------------------------------------------------------------------

fn dir_value(d: &DirectionReport) -> Value {
    json!({
        "boundary_max_deviation": d.boundary_max_deviation,
        "interior_max_modulus": d.interior_max_modulus,
        "witnesses": d
            .witnesses
            .iter()
            .map(|&(lam, mu)| json!({"parameter": from_c64(lam), "root": from_c64(mu)}))
            .collect::<Vec<Value>>(),
        "degenerate_fibers": d
            .degenerate_fibers
            .iter()
            .map(|&z| json!(from_c64(z)))
            .collect::<Vec<Value>>(),
    })
}

fn inner_toral_value(rep: &isopair_core::poly::InnerToralReport) -> (Value, bool, String) {
    let witnesses = rep.z_direction.witnesses.len() + rep.w_direction.witnesses.len();
    let value = json!({
        "tol": rep.tol,
        "verdict": verdict_str(rep.verdict),
        "z_direction": dir_value(&rep.z_direction),
        "w_direction": dir_value(&rep.w_direction),
    });
    let summary = if rep.verdict {
        format!(
            "inner-toral: PASS (boundary deviation {:.2e} / {:.2e})",
            rep.z_direction.boundary_max_deviation, rep.w_direction.boundary_max_deviation
        )
    } else {
        format!(
            "inner-toral: FAIL ({witnesses} witnesses, worst boundary deviation {:.2e} / {:.2e})",
            rep.z_direction.boundary_max_deviation, rep.w_direction.boundary_max_deviation
        )
    };
    (value, rep.verdict, summary)
}

fn cmd_check_inner_toral(poly: &std::path::Path, tol: f64, samples: usize) -> Result<CmdReport> {
    let p = load_poly(poly)?;
    let rep = match classify("certification", check_inner_toral(&p, samples, samples, tol))? {
        Step::Done(rep) => rep,
        Step::Failed { stage, detail } => {
            return Ok(fail_report("check-inner-toral", stage, &detail))
        }
    };
    let (value, pass, summary) = inner_toral_value(&rep);
    let mut json = value;
    if let Value::Object(map) = &mut json {
        map.insert("command".into(), json!("check-inner-toral"));
    }
    Ok(CmdReport { pass, json, summary: format!("check-{summary}") })
}

// ---------------------------------------------------------------------------
// realize
// ---------------------------------------------------------------------------

struct RealizeOutcome {
    m: usize,
    n_input: usize,
    n_realized: usize,
    held_out_error: f64,
}

fn disk_point(rng: &mut ChaCha8Rng) -> C64 {
    let r = 0.15 + 0.75 * uniform01(rng);
    let t = std::f64::consts::TAU * uniform01(rng);
    C64::new(r * t.cos(), r * t.sin())
}

fn realize_outcome(col: &Colligation, samples: usize, seed: u64) -> Result<Step<RealizeOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = samples.max(4);
    let pts: Vec<C64> = (0..count).map(|_| disk_point(&mut rng)).collect();
    let mut values = Vec::with_capacity(count);
    for &mu in &pts {
        values.push(step_or!("transfer evaluation", col.transfer(mu)));
    }
    let defect = step_or!("defect factorization", defect_factor(&pts, |z| col.transfer(z)));
    let realized =
        step_or!("realization", realize_from_samples(&pts, &values, &defect));
    let mut err = 0.0f64;
    for _ in 0..12 {
        let mu = disk_point(&mut rng);
        let a = step_or!("held-out evaluation", col.transfer(mu));
        let b = step_or!("held-out evaluation", realized.transfer(mu));
        err = err.max(a.sub(&b).max_abs());
    }
    Ok(Step::Done(RealizeOutcome {
        m: col.m(),
        n_input: col.n(),
        n_realized: realized.n(),
        held_out_error: err,
    }))
}

fn realize_value(out: &RealizeOutcome) -> Value {
    json!({
        "M": out.m,
        "N_input": out.n_input,
        "N_realized": out.n_realized,
        "held_out_error": out.held_out_error,
    })
}

fn cmd_realize(colligation: &std::path::Path, samples: usize, seed: u64, tol: f64) -> Result<CmdReport> {
    let col = load_colligation(colligation)?;
    let out = match realize_outcome(&col, samples, seed)? {
        Step::Done(out) => out,
        Step::Failed { stage, detail } => return Ok(fail_report("realize", stage, &detail)),
    };
    let pass = out.held_out_error <= tol;
    let mut json = realize_value(&out);
    if let Value::Object(map) = &mut json {
        map.insert("command".into(), json!("realize"));
        map.insert("tol".into(), json!(tol));
        map.insert("verdict".into(), json!(verdict_str(pass)));
    }
    let summary = format!(
        "realize: {} (held-out transfer error {:.2e}, state dimension {} -> {})",
        if pass { "PASS" } else { "FAIL" },
        out.held_out_error,
        out.n_input,
        out.n_realized
    );
    Ok(CmdReport { pass, json, summary })
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

struct RankOutcome {
    alpha: Vec<usize>,
    m: usize,
    n: usize,
    bidegrees: Vec<(usize, usize)>,
    m_consistent: bool,
    n_consistent: bool,
    annihilation: f64,
    charpoly: Option<f64>,
    stability: Option<StabilityReport>,
}

impl RankOutcome {
    fn stability_ok(&self) -> bool {
        self.stability
            .as_ref()
            .map(|s| s.all_stable && s.codim_exact)
            .unwrap_or(false)
    }

    fn pass(&self) -> bool {
        self.m_consistent
            && self.n_consistent
            && self.annihilation <= MODEL_ANNIHILATION_TOL
            && self.charpoly.map(|c| c <= CHARPOLY_TOL).unwrap_or(false)
            && self.stability_ok()
    }

    fn to_value(&self) -> Value {
        json!({
            "alpha": self.alpha,
            "M": self.m,
            "N": self.n,
            "bidegrees": self.bidegrees.iter().map(|&(dz, dw)| json!([dz, dw])).collect::<Vec<Value>>(),
            "identities": {"m_consistent": self.m_consistent, "n_consistent": self.n_consistent},
            "checks": {
                "annihilation": self.annihilation,
                "charpoly": self.charpoly,
                "stability": self.stability_ok(),
            },
        })
    }
}

/// Necessary size condition: with every rank at least one, the bimultiplicity
/// identities force deg_w(product) <= M and deg_z(product) <= N.
fn structural_mismatch(col: &Colligation, fac: &Factorization) -> Option<String> {
    let (dz, dw) = fac.product().bidegree();
    if dw > col.m() || dz > col.n() {
        Some(format!(
            "inconsistent M/N: colligation has M={}, N={}, but the factor product has \
             bidegree ({dz}, {dw}); the rank identities need deg_w <= M and deg_z <= N",
            col.m(),
            col.n()
        ))
    } else {
        None
    }
}

fn rank_outcome(
    col: &Colligation,
    fac: &Factorization,
    truncation: usize,
    samples: usize,
    seed: u64,
) -> Result<Step<RankOutcome>> {
    let model = ShiftModel::new(col.clone(), truncation).map_err(core_err)?;
    let annihilation =
        step_or!("model annihilation", model.annihilation_residual(fac.product(), 48, 48));
    let rank = step_or!("rank computation", compute_rank(&model, fac, samples, seed));
    let (charpoly, stability) = if rank.m_consistent && rank.n_consistent {
        let cp = step_or!(
            "characteristic polynomial comparison",
            char_poly_check(&model, fac, &rank.alpha, 48)
        );
        let u = BlaschkeProduct::from_zeros(&[(C64::ZERO, 1)]).map_err(core_err)?;
        let st = step_or!(
            "restriction stability",
            rank_stability_check(&model, fac, &u, &rank.alpha, 6, seed ^ 0x5bd1_e995)
        );
        (Some(cp), Some(st))
    } else {
        (None, None)
    };
    Ok(Step::Done(RankOutcome {
        alpha: rank.alpha,
        m: rank.m,
        n: rank.n,
        bidegrees: fac.bidegrees(),
        m_consistent: rank.m_consistent,
        n_consistent: rank.n_consistent,
        annihilation,
        charpoly,
        stability,
    }))
}

fn cmd_rank(
    colligation: &std::path::Path,
    factors: &std::path::Path,
    truncation: usize,
    samples: usize,
    seed: u64,
) -> Result<CmdReport> {
    let col = load_colligation(colligation)?;
    let fac = Factorization::new(load_factors(factors)?).map_err(core_err)?;
    if let Some(msg) = structural_mismatch(&col, &fac) {
        bail!(msg);
    }
    let out = match rank_outcome(&col, &fac, truncation, samples, seed)? {
        Step::Done(out) => out,
        Step::Failed { stage, detail } => return Ok(fail_report("rank", stage, &detail)),
    };
    let pass = out.pass();
    let mut json = out.to_value();
    if let Value::Object(map) = &mut json {
        map.insert("command".into(), json!("rank"));
        map.insert("verdict".into(), json!(verdict_str(pass)));
    }
    let summary = format!(
        "rank: {} (alpha = {:?}, M = {}, N = {})",
        if pass { "PASS" } else { "FAIL" },
        out.alpha,
        out.m,
        out.n
    );
    Ok(CmdReport { pass, json, summary })
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

struct KernelOutcome {
    alpha: usize,
    base: (C64, C64),
    annihilation: f64,
    kernel_identity: f64,
    intertwining: f64,
    gram_unitarity: f64,
    basis_gram: f64,
    /// The monomial-times-section frame is a complete orthonormal system
    /// only when the triple covers the whole fiber: alpha * deg_w == M.
    /// On a proper factor of the curve, Q has a column that vanishes
    /// identically on that component, so the frame Gram cannot be the
    /// identity and the basis residual is informational only.
    basis_frame_complete: bool,
    q_base_rank: usize,
    p_base_rank: usize,
    triple: AdmissibleTriple,
}

impl KernelOutcome {
    fn pass(&self, tol: f64) -> bool {
        self.annihilation <= Q_ANNIHILATION_TOL
            && self.kernel_identity <= tol
            && self.intertwining <= INTERTWINING_TOL
            && self.gram_unitarity <= GRAM_TOL
            && (!self.basis_frame_complete || self.basis_gram <= BASIS_TOL)
            && self.q_base_rank == self.alpha
            && self.p_base_rank == self.alpha
    }

    fn to_value(&self) -> Value {
        json!({
            "alpha": self.alpha,
            "base": {"z": from_c64(self.base.0), "w": from_c64(self.base.1)},
            "residuals": {
                "annihilation": self.annihilation,
                "kernel_identity": self.kernel_identity,
                "intertwining": self.intertwining,
                "gram_unitarity": self.gram_unitarity,
                "basis_gram": self.basis_gram,
            },
            "basis_frame_complete": self.basis_frame_complete,
            "ranks": {"q_base": self.q_base_rank, "p_base": self.p_base_rank},
        })
    }
}

/// Construct the triple on `curve` and run the full residual battery.
/// `others` are companion factors whose zero sets the base point must avoid.
fn kernel_outcome(
    col: &Colligation,
    model: &ShiftModel,
    curve: &BiPoly,
    others: &[&BiPoly],
    samples: usize,
    seed: u64,
) -> Result<Step<KernelOutcome>> {
    let pts = step_or!("variety sampling", sample_variety(curve, 32, seed, 0.6));
    let clear = |pt: &&isopair_core::poly::VarietyPoint| {
        others
            .iter()
            .all(|pl| pl.eval(pt.z, pt.w).norm() > 1e-6 * pl.max_coeff().max(1.0))
    };
    let base = match pts.iter().filter(|pt| pt.regular).find(clear) {
        Some(pt) => (pt.z, pt.w),
        None => {
            return Ok(Step::Failed {
                stage: "base point selection",
                detail: "no regular sample point clear of the other factors".into(),
            })
        }
    };
    let alpha = step_or!("joint kernel dimension", model.joint_kernel_dim(base.0, base.1));
    if alpha == 0 {
        return Ok(Step::Failed {
            stage: "joint kernel dimension",
            detail: "joint kernel is trivial at the base point".into(),
        });
    }
    let triple = step_or!(
        "triple construction",
        AdmissibleTriple::construct(col, curve, base, alpha, seed)
    );
    let annihilation = step_or!(
        "symbol annihilation",
        kernel::annihilation_residual(&triple.q, col, curve, samples, seed ^ 0x0bad_5eed)
    );
    let rep = step_or!("kernel identity", triple.verify(samples, seed ^ 0x7f4a_7c15));
    let intertwining = step_or!(
        "intertwining",
        kernel::intertwining_residual(&triple.q, &triple.p_mat, col, curve, seed ^ 0x2545_f491)
    );
    let gram_unitarity = step_or!(
        "gram unitarity",
        kernel::gram_unitarity_check(&triple, 12, seed ^ 0x9e37_79b9)
    );
    let basis_gram = step_or!(
        "basis gram",
        kernel::basis_orthonormality_check(&triple, 3, seed ^ 0x3c6e_f372)
    );
    let basis_frame_complete = alpha * curve.deg_w() == col.m();
    Ok(Step::Done(KernelOutcome {
        alpha,
        base,
        annihilation,
        kernel_identity: rep.kernel_identity_residual,
        intertwining,
        gram_unitarity,
        basis_gram,
        basis_frame_complete,
        q_base_rank: rep.q_base_rank,
        p_base_rank: rep.p_base_rank,
        triple,
    }))
}

fn cmd_kernel(
    colligation: &std::path::Path,
    poly: &std::path::Path,
    truncation: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CmdReport> {
    let col = load_colligation(colligation)?;
    let p = load_poly(poly)?;
    let model = ShiftModel::new(col.clone(), truncation).map_err(core_err)?;
    let out = match kernel_outcome(&col, &model, &p, &[], samples, seed)? {
        Step::Done(out) => out,
        Step::Failed { stage, detail } => return Ok(fail_report("kernel", stage, &detail)),
    };
    let pass = out.pass(tol);
    let mut json = out.to_value();
    if let Value::Object(map) = &mut json {
        map.insert("command".into(), json!("kernel"));
        map.insert("tol".into(), json!(tol));
        map.insert(
            "q".into(),
            serde_json::to_value(MatrixBiPolyDto::from_core(&out.triple.q))?,
        );
        map.insert(
            "p".into(),
            serde_json::to_value(MatrixBiPolyDto::from_core(&out.triple.p_mat))?,
        );
        map.insert("verdict".into(), json!(verdict_str(pass)));
    }
    let summary = format!(
        "kernel: {} (alpha = {}, kernel identity {:.2e}, gram {:.2e})",
        if pass { "PASS" } else { "FAIL" },
        out.alpha,
        out.kernel_identity,
        out.gram_unitarity
    );
    Ok(CmdReport { pass, json, summary })
}

// ---------------------------------------------------------------------------
// ideal
// ---------------------------------------------------------------------------

fn quotient_dim_value(d: isopair_core::ideal::QuotientDim) -> Value {
    match d {
        isopair_core::ideal::QuotientDim::Finite(n) => json!(n),
        isopair_core::ideal::QuotientDim::Infinite => json!("infinite"),
    }
}

fn cmd_ideal(factors: &std::path::Path, order_flag: Option<&str>) -> Result<CmdReport> {
    let (p, q, tag) = load_exact_pair(factors)?;
    let order = match order_flag {
        Some(s) => parse_order(s)?,
        None => tag.unwrap_or(TermOrder::LexZw),
    };
    if p.is_zero() || q.is_zero() {
        bail!("exact pair polynomials must be nonzero");
    }
    let gb = match classify("groebner basis", buchberger(&p, &q, order))? {
        Step::Done(gb) => gb,
        Step::Failed { stage, detail } => return Ok(fail_report("ideal", stage, &detail)),
    };
    let cofactors_verified = gb.verify_cofactors();
    let normal_set = gb.normal_set();
    let quotient = gb.quotient_dim();
    let nf_p = gb.normal_form(&p);
    let nf_q = gb.normal_form(&q);
    let members_reduce_to_zero = nf_p.remainder.is_zero()
        && nf_p.certifies(&gb, &p)
        && nf_q.remainder.is_zero()
        && nf_q.certifies(&gb, &q);
    let coprime = match classify("relative primality", relatively_prime(&p, &q))? {
        Step::Done(b) => b,
        Step::Failed { stage, detail } => return Ok(fail_report("ideal", stage, &detail)),
    };
    let pass = cofactors_verified && members_reduce_to_zero;
    let json = json!({
        "command": "ideal",
        "order": order_name(order),
        "basis": gb
            .generators()
            .map(|g| serde_json::to_value(ExactBiPolyDto::from_core(g, order)))
            .collect::<core::result::Result<Vec<Value>, _>>()?,
        "leading_monomials": gb
            .leading_monomials()
            .iter()
            .map(|&(i, j)| json!([i, j]))
            .collect::<Vec<Value>>(),
        "normal_set": normal_set
            .map(|ns| ns.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<Value>>()),
        "quotient_dim": quotient_dim_value(quotient),
        "relatively_prime": coprime,
        "cofactors_verified": cofactors_verified,
        "members_reduce_to_zero": members_reduce_to_zero,
        "verdict": verdict_str(pass),
    });
    let summary = format!(
        "ideal: {} (basis size {}, quotient {}, coprime {})",
        if pass { "PASS" } else { "FAIL" },
        gb.len(),
        match gb.quotient_dim() {
            isopair_core::ideal::QuotientDim::Finite(n) => n.to_string(),
            isopair_core::ideal::QuotientDim::Infinite => "infinite".to_string(),
        },
        coprime
    );
    Ok(CmdReport { pass, json, summary })
}

// ---------------------------------------------------------------------------
// defect
// ---------------------------------------------------------------------------

struct DefectOutcome {
    alpha: Vec<usize>,
    generator_count: usize,
    curve: DefectCurve,
}

fn defect_outcome(
    model: &ShiftModel,
    triples: &[AdmissibleTriple],
    degrees: &[usize],
) -> Result<Step<DefectOutcome>> {
    let mut gens = Vec::new();
    let mut alpha = Vec::new();
    for t in triples {
        alpha.push(t.alpha);
        let g = step_or!("generator expansion", triple_generators(model, t));
        gens.extend(g);
    }
    let curve = step_or!(
        "span codimension",
        cyclic_defect_with_generators(model, &gens, degrees)
    );
    Ok(Step::Done(DefectOutcome { alpha, generator_count: gens.len(), curve }))
}

fn defect_value(out: &DefectOutcome) -> Value {
    json!({
        "alpha": out.alpha,
        "generators": out.generator_count,
        "degrees": out.curve.degrees,
        "codims": out.curve.codims,
        "stabilized": out.curve.stabilized,
        "value": out.curve.value,
    })
}

fn cmd_defect(
    colligation: &std::path::Path,
    poly: Option<&std::path::Path>,
    factors: Option<&std::path::Path>,
    truncation: usize,
    seed: u64,
) -> Result<CmdReport> {
    let col = load_colligation(colligation)?;
    let factor_polys: Vec<BiPoly> = match (poly, factors) {
        (Some(p), None) => vec![load_poly(p)?],
        (None, Some(f)) => load_factors(f)?,
        (None, None) => bail!("provide --poly or --factors"),
        (Some(_), Some(_)) => unreachable!("clap rejects the conflicting flags"),
    };
    let model = ShiftModel::new(col.clone(), truncation).map_err(core_err)?;
    let mut triples = Vec::with_capacity(factor_polys.len());
    for (j, pj) in factor_polys.iter().enumerate() {
        let others: Vec<&BiPoly> =
            factor_polys.iter().enumerate().filter(|&(l, _)| l != j).map(|(_, p)| p).collect();
        let out =
            kernel_outcome(&col, &model, pj, &others, 40, seed.wrapping_add(101 * j as u64))?;
        match out {
            Step::Done(k) => triples.push(k.triple),
            Step::Failed { stage, detail } => {
                return Ok(fail_report("defect", stage, &detail));
            }
        }
    }
    let out = match defect_outcome(&model, &triples, &DEFECT_DEGREES)? {
        Step::Done(out) => out,
        Step::Failed { stage, detail } => return Ok(fail_report("defect", stage, &detail)),
    };
    let pass = out.curve.stabilized;
    let mut json = defect_value(&out);
    if let Value::Object(map) = &mut json {
        map.insert("command".into(), json!("defect"));
        map.insert("verdict".into(), json!(verdict_str(pass)));
    }
    let summary = match out.curve.value {
        Some(v) if pass => format!("defect: PASS (stabilized at {v}, codims {:?})", out.curve.codims),
        _ => format!("defect: FAIL (codims {:?} did not stabilize)", out.curve.codims),
    };
    Ok(CmdReport { pass, json, summary })
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    colligation: &std::path::Path,
    poly: &std::path::Path,
    factors: Option<&std::path::Path>,
    truncation: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CmdReport> {
    let col = load_colligation(colligation)?;
    let p = load_poly(poly)?;
    let fac = match factors {
        Some(f) => Factorization::with_product(load_factors(f)?, p.clone()).map_err(core_err)?,
        None => Factorization::new(vec![p.clone()]).map_err(core_err)?,
    };

    let mut stages = Map::new();
    let mut notes = Vec::new();
    let mut all_pass = true;

    // Stage 1: inner-toral certification of the curve.
    let fiber_samples = samples.max(150);
    let stage1 = match classify(
        "inner-toral certification",
        check_inner_toral(&p, fiber_samples, fiber_samples, tol),
    )? {
        Step::Done(rep) => {
            let (value, pass, summary) = inner_toral_value(&rep);
            notes.push(summary);
            all_pass &= pass;
            with_status(value, verdict_str(pass))
        }
        Step::Failed { stage, detail } => {
            all_pass = false;
            notes.push(format!("inner-toral: FAIL at {stage}: {detail}"));
            json!({"status": "fail", "stage": stage, "error": detail})
        }
    };
    stages.insert("inner_toral".into(), stage1);

    // Stage 2: realization round trip of the colligation.
    let stage2 = match realize_outcome(&col, 16, seed)? {
        Step::Done(out) => {
            let pass = out.held_out_error <= 1e-7;
            all_pass &= pass;
            notes.push(format!(
                "realization: {} (held-out error {:.2e})",
                if pass { "PASS" } else { "FAIL" },
                out.held_out_error
            ));
            with_status(realize_value(&out), verdict_str(pass))
        }
        Step::Failed { stage, detail } => {
            all_pass = false;
            notes.push(format!("realization: FAIL at {stage}: {detail}"));
            json!({"status": "fail", "stage": stage, "error": detail})
        }
    };
    stages.insert("realization".into(), stage2);

    // Stage 3: rank tuple. A structurally impossible bundle marks the stage
    // failed; the pipeline continues.
    let stage3 = if let Some(msg) = structural_mismatch(&col, &fac) {
        all_pass = false;
        notes.push(format!("rank: FAIL ({msg})"));
        json!({"status": "fail", "error": msg})
    } else {
        match rank_outcome(&col, &fac, truncation, samples.max(8), seed)? {
            Step::Done(out) => {
                let pass = out.pass();
                all_pass &= pass;
                notes.push(format!(
                    "rank: {} (alpha = {:?})",
                    if pass { "PASS" } else { "FAIL" },
                    out.alpha
                ));
                with_status(out.to_value(), verdict_str(pass))
            }
            Step::Failed { stage, detail } => {
                all_pass = false;
                notes.push(format!("rank: FAIL at {stage}: {detail}"));
                json!({"status": "fail", "stage": stage, "error": detail})
            }
        }
    };
    stages.insert("rank".into(), stage3);

    // Stage 4: one admissible triple per factor.
    let model = ShiftModel::new(col.clone(), truncation).map_err(core_err)?;
    let mut triples = Vec::new();
    let mut factor_values = Vec::new();
    let mut kernel_pass = true;
    for (j, pj) in fac.factors().iter().enumerate() {
        let others: Vec<&BiPoly> =
            fac.factors().iter().enumerate().filter(|&(l, _)| l != j).map(|(_, q)| q).collect();
        match kernel_outcome(&col, &model, pj, &others, samples, seed.wrapping_add(101 * j as u64))? {
            Step::Done(out) => {
                let pass = out.pass(tol);
                kernel_pass &= pass;
                factor_values.push(with_status(out.to_value(), verdict_str(pass)));
                triples.push(out.triple);
            }
            Step::Failed { stage, detail } => {
                kernel_pass = false;
                factor_values
                    .push(json!({"status": "fail", "stage": stage, "error": detail}));
            }
        }
    }
    all_pass &= kernel_pass;
    notes.push(format!(
        "kernel: {} ({} of {} factor triples verified)",
        if kernel_pass { "PASS" } else { "FAIL" },
        triples.len(),
        fac.len()
    ));
    stages.insert(
        "kernel".into(),
        json!({"status": verdict_str(kernel_pass), "factors": factor_values}),
    );

    // Stage 5: cyclic defect from the triples; skipped if any triple failed.
    let stage5 = if triples.len() != fac.len() {
        all_pass = false;
        notes.push("defect: SKIPPED (kernel stage did not produce all triples)".to_string());
        json!({"status": "skipped", "reason": "kernel stage did not produce all triples"})
    } else {
        match defect_outcome(&model, &triples, &DEFECT_DEGREES)? {
            Step::Done(out) => {
                let pass = out.curve.stabilized;
                all_pass &= pass;
                notes.push(format!(
                    "defect: {} (codims {:?})",
                    if pass { "PASS" } else { "FAIL" },
                    out.curve.codims
                ));
                with_status(defect_value(&out), verdict_str(pass))
            }
            Step::Failed { stage, detail } => {
                all_pass = false;
                notes.push(format!("defect: FAIL at {stage}: {detail}"));
                json!({"status": "fail", "stage": stage, "error": detail})
            }
        }
    };
    stages.insert("defect".into(), stage5);

    let json = json!({
        "command": "report",
        "stages": Value::Object(stages),
        "verdict": verdict_str(all_pass),
    });
    let mut summary = notes.join("\n");
    summary.push_str(&format!(
        "\nreport: {}",
        if all_pass { "PASS" } else { "FAIL" }
    ));
    Ok(CmdReport { pass: all_pass, json, summary })
}
