//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! straight to the terminal, so the lines survive output capture.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use kulkarni::actions::{
    cluster_oracle, containment, control_projection, homomorphism_defect, line_coverage, random_words,
    schottky_certificate, GroupSpec, OracleConfig,
};
use kulkarni::cli::check_layer;
use kulkarni::cyclic::{classify, invariant_lines, kulkarni_limit_set, ElementClass};
use kulkarni::gallery::{
    classical_schottky, gamma_a_normal_form, make_gamma_a, make_inoue_sm, make_kissing_schottky, make_suspension,
    permutation_b, KissingParams,
};
use kulkarni::mobius::{cr_membership, cr_p_generator, greenberg_limit_approx, CrElement};
use kulkarni::projective::{cx, line_through, Cpx, Mat3, ProjPoint, ProjTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A fixed, well conditioned change of basis so that no representative is
/// tested in its own eigenbasis.
fn conjugator() -> Mat3 {
    Mat3::new(
        cx(1.0, 0.1),
        cx(0.3, 0.0),
        cx(-0.2, 0.05),
        cx(0.1, -0.2),
        cx(1.0, 0.0),
        cx(0.4, 0.1),
        cx(-0.3, 0.0),
        cx(0.2, 0.1),
        cx(1.0, -0.1),
    )
}

fn conjugated(m: Mat3) -> ProjTransform {
    let p = conjugator();
    let p_inv = p.try_inverse().expect("invertible conjugator");
    ProjTransform::new(p * m * p_inv).expect("invertible element")
}

fn rot(t: f64) -> Cpx {
    Cpx::from_polar(1.0, 2.0 * PI * t)
}

fn diag(a: Cpx, b: Cpx, c: Cpx) -> Mat3 {
    Mat3::from_diagonal(&nalgebra::Vector3::new(a, b, c))
}

fn block21(l: Cpx, m: Cpx) -> Mat3 {
    let mut a = diag(l, l, m);
    a[(0, 1)] = cx(1.0, 0.0);
    a
}

fn table_representatives() -> Vec<(ElementClass, Mat3, bool)> {
    let one = cx(1.0, 0.0);
    let theta = 2f64.sqrt() - 1.0;
    let phi = 3f64.sqrt() - 1.0;
    let mut block3 = diag(one, one, one);
    block3[(0, 1)] = one;
    block3[(1, 2)] = one;
    vec![
        (ElementClass::Block3Unipotent, block3, true),
        (ElementClass::DiagTorsion, diag(one, cx(0.0, 1.0), cx(-1.0, 0.0)), true),
        (ElementClass::DiagEqualModuliRational, diag(cx(2.0, 0.0), rot(0.2) * 2.0, one), true),
        (ElementClass::DiagEqualModuliIrrational, diag(cx(2.0, 0.0), rot(theta) * 2.0, one), true),
        (ElementClass::DiagStrongLoxodromic, diag(cx(0.5, 0.0), one, cx(2.0, 0.0)), true),
        (ElementClass::B21Torsion, block21(one, cx(0.0, 1.0)), true),
        (ElementClass::B21Nonunit, block21(one, cx(2.0, 0.0)), true),
        (ElementClass::B21UnitIrrational, block21(one, rot(theta)), false),
        (ElementClass::DiagEllipticIrrational, diag(one, rot(theta), rot(phi)), false),
    ]
}

fn table_reproduction() -> Check {
    let cfg = OracleConfig { n_min: 150, exclusion: 0.2, ..OracleConfig::default() };
    let mut lines = Vec::new();
    let mut ok = true;
    for (class, m, required) in table_representatives() {
        let g = conjugated(m);
        let start = Instant::now();
        let c = classify(&g);
        let spec = GroupSpec::new(vec![("g", g)]).unwrap();
        let r = cluster_oracle(&spec, &cfg).unwrap();
        let k = kulkarni_limit_set(&c);
        let checks = [
            check_layer("L0", &r.l0, &k.l0),
            check_layer("L1", &r.l1, &k.l1),
            check_layer("L2", &r.l2, &k.l2),
            check_layer("Lambda", &r.lambda, &k.lambda),
        ];
        let secs = start.elapsed().as_secs_f64();
        let unknown: Vec<&str> = [(&k.l0, "L0"), (&k.l1, "L1"), (&k.l2, "L2"), (&k.lambda, "Lambda")]
            .iter()
            .filter(|(d, _)| d.unknown)
            .map(|(_, n)| *n)
            .collect();
        let worst = checks.iter().filter_map(|c| c.hausdorff).fold(0.0, f64::max);
        let pass = c.class == class && checks.iter().all(|c| c.pass) && secs <= 60.0;
        if required {
            ok &= pass;
        }
        lines.push(format!(
            "{}{} {} hausdorff<={worst:.3} {secs:.1}s{}{}",
            class.name(),
            if required { "" } else { " (computable layers)" },
            if pass { "ok" } else { "FAILED" },
            if unknown.is_empty() { String::new() } else { format!(" UNKNOWN:{}", unknown.join(",")) },
            if c.class == class { String::new() } else { format!(" classified as {}", c.class.name()) }
        ));
    }
    ensure(ok, lines.join("; "))
}

fn kissing_factorization() -> Check {
    let k = make_kissing_schottky(&KissingParams::default(), 4).unwrap();
    let d = &k.diagnostics;
    let poly = d.char_poly_residuals.iter().cloned().fold(0.0, f64::max);
    let vecs = d.eigenvector_residuals.iter().cloned().fold(0.0, f64::max);
    ensure(poly <= 1e-9 && vecs <= 1e-8, format!("max |P(lambda)| = {poly:.2e}, max eigenvector residual = {vecs:.2e}"))
}

fn kissing_certificate() -> Check {
    let k = make_kissing_schottky(&KissingParams::default(), 4).unwrap();
    let r = schottky_certificate(&k.group, &k.pairing).unwrap();
    let has = |a: &str, b: &str| r.tangencies.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a));
    let parabolic = has("R(M1)", "S(M1)") && has("R(M2)", "S(M2)");
    let worst = r.generators.iter().map(|g| g.circle_deviation).fold(0.0, f64::max);
    ensure(
        r.valid && r.kissing && parabolic && r.generators.len() == 3,
        format!(
            "valid={} pairings={} max circle deviation {worst:.2e} tangencies={:?}",
            r.valid,
            r.generators.len(),
            r.tangencies
        ),
    )
}

fn gamma_a_normal_forms() -> Check {
    let a = cx(2.0, 0.5);
    let g = make_gamma_a(a).unwrap();
    let gens = g.group.matrices();
    let mut worst_ok = true;
    for w in random_words(2, 1000, 12, 7) {
        let nf = gamma_a_normal_form(&w).unwrap();
        worst_ok &= nf.matrix(a).unwrap().proj_eq(&w.evaluate(&gens), 1e-9);
    }
    let b = permutation_b();
    let b3 = b.compose(&b).compose(&b);
    let exact = b3.is_identity(0.0);
    ensure(worst_ok && exact, format!("1000 words match={worst_ok}, B^3 = id exactly: {exact}"))
}

fn pairs(n_gens: usize, seed: u64) -> Vec<(kulkarni::words::Word, kulkarni::words::Word)> {
    let a = random_words(n_gens, 1000, 8, seed);
    let b = random_words(n_gens, 1000, 8, seed + 1);
    a.into_iter().zip(b).collect()
}

fn sm_group() -> GroupSpec {
    make_inoue_sm(&[[0, 0, 1], [1, 0, 1], [0, 1, 0]]).unwrap().group
}

fn control_homomorphism() -> Check {
    let k = make_kissing_schottky(&KissingParams::default(), 4).unwrap();
    let d_eps = homomorphism_defect(&k.group, &pairs(3, 11)).unwrap();
    let sm = sm_group();
    let d_sm = homomorphism_defect(&sm, &pairs(sm.generators.len(), 13)).unwrap();
    ensure(d_eps <= 1e-10 && d_sm <= 1e-10, format!("kissing group {d_eps:.2e}, S_M {d_sm:.2e}"))
}

fn greenberg_circle() -> Check {
    let proj = control_projection(&sm_group(), 0).unwrap();
    let cloud = greenberg_limit_approx(&proj.maps(), 8).unwrap();
    let worst = cloud.points.iter().filter_map(|c| c.point.to_cpx()).map(|z| z.im.abs()).fold(0.0, f64::max);
    ensure(
        !cloud.points.is_empty() && worst <= 1e-6,
        format!("{} fixed points, max |Im| = {worst:.2e}", cloud.points.len()),
    )
}

fn random_cr(rng: &mut ChaCha8Rng) -> CrElement {
    let v: [f64; 4] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    CrElement::new(cx(v[0] / n, v[1] / n), cx(v[2] / n, v[3] / n)).unwrap()
}

fn cr_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut closed = 0;
    let mut fix_err: f64 = 0.0;
    for _ in 0..200 {
        let (g, h) = (random_cr(&mut rng), random_cr(&mut rng));
        if cr_membership(&g.to_map().compose(&h.to_map()), 1e-10).is_some() {
            closed += 1;
        }
        let (pp, pm) = g.fixed_points().unwrap();
        fix_err = fix_err.max((pp * pm.conj() + 1.0).norm());
    }
    let mut deriv_err: f64 = 0.0;
    for p in [-1.0, -2.0, -0.5] {
        for i in 1..=100 {
            let x = i as f64 / 101.0;
            let gen = cr_p_generator(p, x).unwrap();
            let z = cx(gen.z_x[0], gen.z_x[1]);
            deriv_err = deriv_err.max((gen.gamma.derivative(z).re - gen.f_x).abs());
        }
    }
    ensure(
        closed == 200 && fix_err <= 1e-9 && deriv_err <= 1e-9,
        format!("closed {closed}/200, fixed-point identity {fix_err:.2e}, derivative identity {deriv_err:.2e}"),
    )
}

fn suspension_prediction() -> Check {
    let cfg = OracleConfig { max_len: 8, n_min: 6, samples: 300, ..OracleConfig::default() };
    let finite = make_suspension(&classical_schottky(), &[cx(-1.0, 0.0)], 6).unwrap();
    let r = cluster_oracle(&finite.group, &cfg).unwrap();
    let c = containment(&r.lambda, &finite.prediction, 0.05);
    let infinite = make_suspension(&classical_schottky(), &[cx(2.0, 0.0)], 6).unwrap();
    let r2 = cluster_oracle(&infinite.group, &cfg).unwrap();
    let e12 = line_through(&ProjPoint::basis(0), &ProjPoint::basis(1)).unwrap();
    let near = line_coverage(&r2.lambda, &e12, 0.05).count;
    ensure(
        c.contained && near >= 50,
        format!(
            "Z2: {}/{} points within 0.05 (max {:.3}); <2>: {near} points near line(e1,e2)",
            c.within, c.points, c.max_distance
        ),
    )
}

fn invariant_line_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut reported = 0;
    let mut count = 0;
    while count < 200 {
        let p = Mat3::from_fn(|_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        if p.determinant().norm() < 0.1 {
            continue;
        }
        let lam: Vec<Cpx> =
            (0..3).map(|_| Cpx::from_polar(rng.gen_range(0.3..3.0), rng.gen_range(0.0..2.0 * PI))).collect();
        if (0..3).any(|i| (0..i).any(|j| (lam[i] - lam[j]).norm() < 0.1)) {
            continue;
        }
        let g = ProjTransform::new(p * diag(lam[0], lam[1], lam[2]) * p.try_inverse().unwrap()).unwrap();
        let inv = invariant_lines(&classify(&g));
        for l in &inv.lines {
            let img = g.apply_line(&l.line);
            let d = kulkarni::projective::phase_aligned_diff(img.dual(), l.line.dual());
            worst = worst.max(d);
            reported += 1;
        }
        count += 1;
    }
    let one = cx(1.0, 0.0);
    let mut block3 = diag(one, one, one);
    block3[(0, 1)] = one;
    block3[(1, 2)] = one;
    let b = invariant_lines(&classify(&conjugated(block3)));
    ensure(
        worst <= 1e-10 && reported == 600 && b.lines.len() == 1,
        format!("{reported} lines from 200 elements, max self-map defect {worst:.2e}; BLOCK3 reports {}", b.lines.len()),
    )
}

fn run_bin(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_kulkarni")).args(args).output().expect("binary runs");
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("kulkarni-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let group = dir.join("g.json");
    std::fs::write(&group, r#"{"matrix": [[[0.5,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]],[[0,0],[0,0],[2,0]]]}"#).unwrap();
    let g = group.to_str().unwrap();
    let mut same = true;
    let mut checked = Vec::new();
    let csv = |k: usize| dir.join(format!("cloud{k}.csv"));
    let mut csvs = Vec::new();
    for k in 0..2 {
        let c = csv(k);
        let runs = [
            run_bin(&["--seed", "3", "limit-set", "--group", g, "--mode", "oracle", "--word-len", "60", "--samples", "300",
                "--out", c.to_str().unwrap()]),
            run_bin(&["gallery", "kissing-schottky", "--depth", "4"]),
            run_bin(&["classify", "--matrix", g]),
        ];
        csvs.push(std::fs::read(&c).unwrap());
        checked.push(runs);
    }
    for (a, b) in checked[0].iter().zip(&checked[1]) {
        same &= a == b && a.1 == 0 && !a.0.is_empty();
    }
    same &= csvs[0] == csvs[1] && !csvs[0].is_empty();
    let _ = std::fs::remove_dir_all(&dir);
    ensure(same, format!("3 JSON outputs and 1 CSV ({} bytes) byte-identical across runs: {same}", csvs[0].len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("table reproduction", table_reproduction),
        ("kissing matrix factorization", kissing_factorization),
        ("kissing Schottky certificate", kissing_certificate),
        ("diagonal-permutation normal form", gamma_a_normal_forms),
        ("control projection homomorphism", control_homomorphism),
        ("Greenberg circle of S_M", greenberg_circle),
        ("Cr group suite", cr_suite),
        ("suspension prediction", suspension_prediction),
        ("invariant lines", invariant_line_check),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        writeln!(out, "criterion {:>2} {tag} {name} [{:.1}s]: {detail}", i + 1, start.elapsed().as_secs_f64()).unwrap();
        out.flush().unwrap();
        if result.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
