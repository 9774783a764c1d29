//! End-to-end acceptance suite.
//!
//! One test per acceptance criterion. Each test prints exactly one
//! `PASS criterion N: ...` or `FAIL criterion N: ...` line before asserting,
//! so `cargo test --test acceptance -- --nocapture --test-threads=1` yields a
//! one-line scoreboard. Tolerances and runtime budgets are pinned as consts.

use std::time::{Duration, Instant};

use isopair_core::cmat::{haar_unitary, uniform01, CMat};
use isopair_core::colligation::{defect_factor, direct_sum, realize_from_samples, Colligation};
use isopair_core::ideal::{
    buchberger, cyclic_defect_with_generators, quotient_dim, relatively_prime, triple_generators,
    ExactBiPoly, GaussianRational, ModelGenerator, QuotientDim, TermOrder,
};
use isopair_core::isopair::{
    compute_rank, rank_stability_check, BlaschkeProduct, Factorization, ShiftModel,
};
use isopair_core::kernel::{
    annihilation_residual, basis_orthonormality_check, gram_unitarity_check, AdmissibleTriple,
};
use isopair_core::poly::{check_inner_toral, sample_variety, BiPoly};
use isopair_core::C64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INNER_TOL: f64 = 1e-8;
const REALIZE_TOL: f64 = 1e-7;
const TRIPLE_RESIDUAL_TOL: f64 = 1e-8;
const GRAM_TOL: f64 = 1e-10;
const BASIS_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-10;

const INNER_BUDGET_EACH: Duration = Duration::from_secs(1);
const REALIZE_BUDGET: Duration = Duration::from_secs(10);
const IDEAL_BUDGET: Duration = Duration::from_secs(5);
const DEFECT_BUDGET: Duration = Duration::from_secs(30);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Print the scoreboard line, then enforce it.
fn conclude(n: usize, label: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("{status} criterion {n}: {label} ({detail})");
    assert!(ok, "criterion {n} ({label}) failed: {detail}");
}

fn real_poly(terms: &[(f64, usize, usize)]) -> BiPoly {
    let (a0, i0, j0) = terms[0];
    let mut p = BiPoly::monomial(c(a0, 0.0), i0, j0);
    for &(a, i, j) in &terms[1..] {
        p = p.add(&BiPoly::monomial(c(a, 0.0), i, j));
    }
    p
}

/// w^2 - z.
fn parabola() -> BiPoly {
    real_poly(&[(1.0, 0, 2), (-1.0, 1, 0)])
}

/// w + sign * z.
fn line(sign: f64) -> BiPoly {
    real_poly(&[(1.0, 0, 1), (sign, 1, 0)])
}

/// M = 2, N = 1 colligation with transfer function [[0, z], [1, 0]].
fn shuffle() -> Colligation {
    let a = CMat::from_rows(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let b = CMat::from_rows(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let cc = CMat::from_rows(1, 2, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let d = CMat::from_rows(1, 1, &[c(0.0, 0.0)]).unwrap();
    Colligation::new(a, b, cc, d).unwrap()
}

/// M = 4, N = 2: two independent copies of the shuffle.
fn doubled() -> Colligation {
    direct_sum(&shuffle(), &shuffle()).unwrap()
}

/// M = 2, N = 2 colligation with transfer function diag(z, -z).
fn split_disk() -> Colligation {
    let zero2 = CMat::from_rows(
        2,
        2,
        &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    let eye2 = CMat::from_rows(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let sig = CMat::from_rows(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).unwrap();
    Colligation::new(zero2.clone(), eye2, sig, zero2).unwrap()
}

#[test]
fn criterion_1_inner_toral_certification() {
    let certified = [
        ("w^2 - z", parabola()),
        ("w - z", line(-1.0)),
        ("w^2 - z^2", real_poly(&[(1.0, 0, 2), (-1.0, 2, 0)])),
        ("w^3 - z^2", real_poly(&[(1.0, 0, 3), (-1.0, 2, 0)])),
    ];
    let refuted = [
        ("zw - 1", real_poly(&[(1.0, 1, 1), (-1.0, 0, 0)])),
        ("w - 2z", real_poly(&[(1.0, 0, 1), (-2.0, 1, 0)])),
    ];
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();
    let mut slowest = Duration::ZERO;
    for (name, p) in &certified {
        let t0 = Instant::now();
        let rep = check_inner_toral(p, 200, 200, INNER_TOL).expect("certification must run");
        let dt = t0.elapsed();
        slowest = slowest.max(dt);
        let deviation = rep
            .z_direction
            .boundary_max_deviation
            .max(rep.w_direction.boundary_max_deviation);
        if !(rep.verdict && deviation <= INNER_TOL && dt < INNER_BUDGET_EACH) {
            ok = false;
            notes.push(format!(
                "{name}: verdict {}, boundary deviation {deviation:.2e}, {dt:?}",
                rep.verdict
            ));
        }
    }
    for (name, p) in &refuted {
        let t0 = Instant::now();
        let rep = check_inner_toral(p, 200, 200, INNER_TOL).expect("certification must run");
        let dt = t0.elapsed();
        slowest = slowest.max(dt);
        let witnesses = rep.z_direction.witnesses.len() + rep.w_direction.witnesses.len();
        if !(!rep.verdict && witnesses > 0 && dt < INNER_BUDGET_EACH) {
            ok = false;
            notes.push(format!(
                "{name}: verdict {}, {witnesses} witnesses, {dt:?}",
                rep.verdict
            ));
        }
    }
    let detail = if notes.is_empty() {
        format!("4 certified, 2 refuted with witnesses, slowest {slowest:?}")
    } else {
        notes.join("; ")
    };
    conclude(1, "inner-toral certification", ok, &detail);
}

fn disk_point(rng: &mut ChaCha8Rng) -> C64 {
    let r = 0.15 + 0.75 * uniform01(rng);
    let theta = 2.0 * std::f64::consts::PI * uniform01(rng);
    C64::from_polar(r, theta)
}

#[test]
fn criterion_2_realization_round_trip() {
    let sizes = [(1usize, 1usize), (2, 1), (2, 2), (4, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (m, n) = sizes[k % sizes.len()];
        let col = (0..8)
            .find_map(|_| Colligation::from_blocks(&haar_unitary(m + n, &mut rng), m).ok())
            .expect("a random unitary with a strictly contractive state corner");
        let points: Vec<C64> = (0..24).map(|_| disk_point(&mut rng)).collect();
        let values: Vec<CMat> = points
            .iter()
            .map(|&z| col.transfer(z).expect("transfer inside the disk"))
            .collect();
        let defect = defect_factor(&points, |z| col.transfer(z)).expect("defect factor");
        let recon = realize_from_samples(&points, &values, &defect).expect("realization");
        for _ in 0..10 {
            let z = disk_point(&mut rng);
            let err = col
                .transfer(z)
                .unwrap()
                .sub(&recon.transfer(z).unwrap())
                .max_abs();
            worst = worst.max(err);
        }
    }
    let dt = t0.elapsed();
    let ok = worst <= REALIZE_TOL && dt < REALIZE_BUDGET;
    conclude(
        2,
        "realization round trip",
        ok,
        &format!("20 colligations, worst held-out transfer error {worst:.2e}, total {dt:?}"),
    );
}

#[test]
fn criterion_3_rank_pipeline() {
    let cases: [(&str, Colligation, Vec<BiPoly>, Vec<usize>); 3] = [
        ("shuffle / w^2 - z", shuffle(), vec![parabola()], vec![1]),
        ("doubled shuffle / w^2 - z", doubled(), vec![parabola()], vec![2]),
        (
            "split disk / (w - z)(w + z)",
            split_disk(),
            vec![line(-1.0), line(1.0)],
            vec![1, 1],
        ),
    ];
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();
    let mut summaries: Vec<String> = Vec::new();
    for (name, col, factors, want) in cases {
        let model = ShiftModel::new(col, 24).expect("truncated model");
        let fac = Factorization::new(factors).expect("factorization");
        let rank = compute_rank(&model, &fac, 20, 0xC3).expect("rank pipeline");
        let enough = rank.samples.iter().all(|s| s.len() >= 20);
        if rank.alpha == want && rank.m_consistent && rank.n_consistent && enough {
            summaries.push(format!("{name}: alpha {:?}", rank.alpha));
        } else {
            ok = false;
            notes.push(format!(
                "{name}: alpha {:?} (wanted {want:?}), M identity {}, N identity {}, \
                 min samples {}",
                rank.alpha,
                rank.m_consistent,
                rank.n_consistent,
                rank.samples.iter().map(|s| s.len()).min().unwrap_or(0)
            ));
        }
    }
    let detail = if notes.is_empty() {
        format!(
            "{}; integer identities exact, >= 20 unanimous points per component",
            summaries.join("; ")
        )
    } else {
        notes.join("; ")
    };
    conclude(3, "rank pipeline on the exemplar corpus", ok, &detail);
}

#[test]
fn criterion_4_admissible_triple() {
    let col = shuffle();
    let p = parabola();
    let base = (c(0.25, 0.0), c(0.5, 0.0));
    let triple = AdmissibleTriple::construct(&col, &p, base, 1, 0xC4).expect("triple construction");
    let ann = annihilation_residual(&triple.q, &col, &p, 48, 0xC4 ^ 0x9e37)
        .expect("annihilation residual");
    let report = triple.verify(50, 0xC4 ^ 0x7f4a).expect("kernel identity");
    let gram = gram_unitarity_check(&triple, 12, 0xC4 ^ 0x2545).expect("gram unitarity");
    let basis = basis_orthonormality_check(&triple, 3, 0xC4 ^ 0x3c6e).expect("basis gram");
    let pts = sample_variety(&p, 10, 0xC4 ^ 0x0bad, 0.6).expect("variety samples");
    let mut closed_err = 0.0f64;
    for x in &pts {
        for y in &pts {
            let k = triple.kernel_eval((x.z, x.w), (y.z, y.w)).expect("kernel value");
            let closed = (C64::ONE + x.w * y.w.conj()) / (C64::ONE - x.z * y.z.conj());
            closed_err = closed_err.max((k[(0, 0)] - closed).norm());
        }
    }
    let ok = ann <= TRIPLE_RESIDUAL_TOL
        && report.kernel_identity_residual <= TRIPLE_RESIDUAL_TOL
        && report.q_base_rank == 1
        && report.p_base_rank == 1
        && gram <= GRAM_TOL
        && basis <= BASIS_TOL
        && closed_err <= CLOSED_FORM_TOL;
    conclude(
        4,
        "admissible kernel triple on the parabola exemplar",
        ok,
        &format!(
            "annihilation {ann:.2e}, kernel identity {:.2e}, gram {gram:.2e}, basis {basis:.2e}, \
             closed form {closed_err:.2e}",
            report.kernel_identity_residual
        ),
    );
}

fn random_exact(rng: &mut ChaCha8Rng, pool: &[(u32, u32)]) -> ExactBiPoly {
    let k = 3 + (uniform01(rng) * 3.0) as usize;
    let mut terms = Vec::with_capacity(k);
    for _ in 0..k {
        let (i, j) = pool[(uniform01(rng) * pool.len() as f64) as usize % pool.len()];
        let mut coeff = (uniform01(rng) * 6.0) as i64 - 3;
        if coeff >= 0 {
            coeff += 1;
        }
        terms.push((i, j, coeff));
    }
    ExactBiPoly::from_integer_terms(&terms)
}

#[test]
fn criterion_5_exact_ideal_engine() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();

    let pw = ExactBiPoly::from_integer_terms(&[(0, 2, 1), (1, 0, -1)]);
    let zg = ExactBiPoly::from_integer_terms(&[(1, 0, 1)]);
    let wg = ExactBiPoly::from_integer_terms(&[(0, 1, 1)]);

    let gb = buchberger(&pw, &zg, TermOrder::LexZw).expect("basis for (w^2 - z, z)");
    if !gb.verify_cofactors() {
        ok = false;
        notes.push("cofactor certificate failed for (w^2 - z, z)".into());
    }
    if gb.quotient_dim() != QuotientDim::Finite(2) {
        ok = false;
        notes.push(format!("dim for (w^2 - z, z) was {:?}", gb.quotient_dim()));
    }
    let mut ns = gb.normal_set().unwrap_or_default();
    ns.sort_unstable();
    if ns != vec![(0, 0), (0, 1)] {
        ok = false;
        notes.push(format!("normal set for (w^2 - z, z) was {ns:?}, wanted {{1, w}}"));
    }
    for (name, psi) in [("w^2 - z", &pw), ("z", &zg)] {
        let nf = gb.normal_form(psi);
        if !(nf.remainder.is_zero() && nf.certifies(&gb, psi)) {
            ok = false;
            notes.push(format!("membership certificate failed for {name}"));
        }
    }

    let gb2 = buchberger(&zg, &wg, TermOrder::LexZw).expect("basis for (z, w)");
    if !(gb2.verify_cofactors() && gb2.quotient_dim() == QuotientDim::Finite(1)) {
        ok = false;
        notes.push(format!("dim for (z, w) was {:?}", gb2.quotient_dim()));
    }

    let prop = ExactBiPoly::monomial(GaussianRational::from_ratio(-3, 2), 0, 2)
        .add(&ExactBiPoly::monomial(GaussianRational::from_ratio(3, 2), 1, 0));
    match quotient_dim(&pw, &prop).expect("proportional pair") {
        QuotientDim::Infinite => {}
        other => {
            ok = false;
            notes.push(format!("proportional pair reported {other:?}"));
        }
    }
    if relatively_prime(&pw, &prop).expect("primality of proportional pair") {
        ok = false;
        notes.push("proportional pair reported relatively prime".into());
    }
    if !relatively_prime(&pw, &zg).expect("primality of (w^2 - z, z)") {
        ok = false;
        notes.push("(w^2 - z, z) reported not relatively prime".into());
    }

    // Bezout bound on random exact relatively-prime pairs of total degree <= 4.
    // One graded-order basis per pair decides both primality (finiteness of
    // the quotient) and the dimension; the dimension itself does not depend
    // on the term order.
    let pool: Vec<(u32, u32)> = (0..=4u32)
        .flat_map(|i| (0..=(4 - i)).map(move |j| (i, j)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut coprime_pairs = 0usize;
    let mut attempts = 0usize;
    while coprime_pairs < 50 && attempts < 400 {
        attempts += 1;
        let a = random_exact(&mut rng, &pool);
        let b = random_exact(&mut rng, &pool);
        if a.total_degree() == 0 || b.total_degree() == 0 {
            continue;
        }
        let gbr = buchberger(&a, &b, TermOrder::DegRevLex).expect("basis for a random pair");
        let dim = match gbr.quotient_dim() {
            QuotientDim::Finite(d) => d,
            QuotientDim::Infinite => continue,
        };
        if !gbr.verify_cofactors() {
            ok = false;
            notes.push("cofactor certificate failed on a random pair".into());
        }
        let bound = (a.total_degree() * b.total_degree()) as usize;
        if dim > bound {
            ok = false;
            notes.push(format!("Bezout bound violated: dim {dim} > {bound}"));
        }
        coprime_pairs += 1;
    }
    if coprime_pairs < 50 {
        ok = false;
        notes.push(format!(
            "only {coprime_pairs} relatively prime pairs in {attempts} draws"
        ));
    }

    let dt = t0.elapsed();
    if dt >= IDEAL_BUDGET {
        ok = false;
        notes.push(format!("over budget: {dt:?}"));
    }
    let detail = if notes.is_empty() {
        format!(
            "dims 2 and 1 with exact certificates, proportional pair infinite, \
             Bezout bound held on 50 random pairs, {dt:?}"
        )
    } else {
        notes.join("; ")
    };
    conclude(5, "exact ideal engine", ok, &detail);
}

#[test]
fn criterion_6_cyclic_defect() {
    let t0 = Instant::now();
    let degrees = [8usize, 10, 12];
    let p = parabola();
    let base = (c(0.25, 0.0), c(0.5, 0.0));

    let col1 = shuffle();
    let model1 = ShiftModel::new(shuffle(), 16).expect("rank-one model");
    let triple1 = AdmissibleTriple::construct(&col1, &p, base, 1, 0xC6).expect("rank-one triple");
    let gens1 = triple_generators(&model1, &triple1).expect("rank-one generators");
    let curve1 =
        cyclic_defect_with_generators(&model1, &gens1, &degrees).expect("rank-one defect");

    let col2 = doubled();
    let model2 = ShiftModel::new(doubled(), 16).expect("rank-two model");
    let triple2 =
        AdmissibleTriple::construct(&col2, &p, base, 2, 0xC6 + 7).expect("rank-two triple");
    let gens2 = triple_generators(&model2, &triple2).expect("rank-two generators");
    let starved =
        cyclic_defect_with_generators(&model2, &gens2[..1], &degrees).expect("starved defect");
    let full = cyclic_defect_with_generators(&model2, &gens2, &degrees).expect("full defect");

    let dt = t0.elapsed();
    let ok = gens1.len() == 1
        && curve1.stabilized
        && curve1.value == Some(0)
        && gens2.len() == 2
        && !starved.stabilized
        && full.stabilized
        && full.value == Some(0)
        && dt < DEFECT_BUDGET;
    conclude(
        6,
        "cyclic defect stabilization",
        ok,
        &format!(
            "rank-one codims {:?}; rank-two with one generator codims {:?} (stabilized {}); \
             with two generators codims {:?}; {dt:?}",
            curve1.codims, starved.codims, starved.stabilized, full.codims
        ),
    );
}

#[test]
fn criterion_7_rank_stability_under_restriction() {
    let cases: [(&str, Colligation, Vec<BiPoly>, Vec<usize>); 3] = [
        ("shuffle", shuffle(), vec![parabola()], vec![1]),
        ("doubled shuffle", doubled(), vec![parabola()], vec![2]),
        ("split disk", split_disk(), vec![line(-1.0), line(1.0)], vec![1, 1]),
    ];
    let blaschkes: [(&str, BlaschkeProduct); 3] = [
        ("z", BlaschkeProduct::from_zeros(&[(c(0.0, 0.0), 1)]).unwrap()),
        ("z^2", BlaschkeProduct::from_zeros(&[(c(0.0, 0.0), 2)]).unwrap()),
        (
            "mobius at 0.4",
            BlaschkeProduct::from_zeros(&[(c(0.4, 0.0), 1)]).unwrap(),
        ),
    ];
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();
    let mut checked = 0usize;
    for (model_name, col, factors, alpha) in cases {
        let model = ShiftModel::new(col, 24).expect("truncated model");
        let fac = Factorization::new(factors).expect("factorization");
        for (u_name, u) in &blaschkes {
            let rep = rank_stability_check(&model, &fac, u, &alpha, 6, 0xC7)
                .expect("stability check");
            checked += 1;
            if !(rep.all_stable && rep.codim_exact) {
                ok = false;
                notes.push(format!(
                    "{model_name} under {u_name}: stable {}, codim {} (expected {})",
                    rep.all_stable, rep.restricted_codim, rep.expected_codim
                ));
            }
        }
    }
    let detail = if notes.is_empty() {
        format!("{checked}/9 restrictions kept alpha with exact codimension d*M")
    } else {
        notes.join("; ")
    };
    conclude(7, "rank stability under Blaschke restriction", ok, &detail);
}

#[test]
fn criterion_8_direct_sum_near_cyclicity() {
    let col = split_disk();
    let model = ShiftModel::new(split_disk(), 16).expect("split-disk model");
    let t_minus = AdmissibleTriple::construct(&col, &line(-1.0), (c(0.3, 0.0), c(0.3, 0.0)), 1, 0xC8)
        .expect("triple on w - z");
    let t_plus = AdmissibleTriple::construct(&col, &line(1.0), (c(0.3, 0.0), c(-0.3, 0.0)), 1, 0xC8 + 1)
        .expect("triple on w + z");
    let mut gens = triple_generators(&model, &t_minus).expect("generators on w - z");
    gens.extend(triple_generators(&model, &t_plus).expect("generators on w + z"));
    let combined = ModelGenerator::combine(&gens).expect("combined generator");
    let curve = cyclic_defect_with_generators(&model, &[combined], &[8, 10, 12])
        .expect("combined-generator defect");
    let ok = curve.stabilized && curve.value == Some(0);
    conclude(
        8,
        "direct-sum near-cyclicity with one combined generator",
        ok,
        &format!(
            "codims {:?}, stabilized {}, value {:?} (required stabilized defect 0)",
            curve.codims, curve.stabilized, curve.value
        ),
    );
}
