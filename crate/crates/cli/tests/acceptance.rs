//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails. Run with `cargo test -p qopt-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use serde_json::Value;

use qopt_core::analysis::{analyze, verify_restriction_lemma, AnalysisReport, ExtReal};
use qopt_core::linalg::{subordinate_norm, DenseMatrix};
use qopt_core::method::{
    approximation_operator, check_id_smoother_representability, check_smoother_injectivity, extended_projection,
    MethodSpec,
};
use qopt_core::models::{
    build_poisson_1d, build_sequence_example, build_synthetic_2d, random_consistent_method, random_restriction_case,
    DiscreteForm, DiscreteSpace, Poisson1dParams, PoissonSmoother, RandomSmallParams, SequenceExampleParams,
    SequenceVariant, Synthetic2dParams, SyntheticCase, SyntheticModel,
};
use qopt_core::spaces::ritz_projection;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn seq(variant: SequenceVariant, n: usize, alpha: f64, beta: f64) -> MethodSpec {
    build_sequence_example(&SequenceExampleParams::new(variant, n, alpha).with_beta(beta)).unwrap()
}

fn poisson(space: DiscreteSpace, smoother: PoissonSmoother, refinement: usize, eta: f64) -> MethodSpec {
    build_poisson_1d(
        &Poisson1dParams::new(space, smoother)
            .with_mesh(4, refinement)
            .with_penalty(eta),
    )
    .unwrap()
}

fn synthetic(case: SyntheticCase, angle: Option<f64>) -> SyntheticModel {
    let mut p = Synthetic2dParams::new(case);
    p.angle = angle;
    build_synthetic_2d(&p).unwrap()
}

fn synthetic_method(case: SyntheticCase, angle: Option<f64>) -> MethodSpec {
    match synthetic(case, angle) {
        SyntheticModel::Method(m) => m,
        SyntheticModel::Restriction(_) => unreachable!("method case"),
    }
}

/// Every shipped fully consistent model instance, labelled.
fn consistent_models() -> Vec<(String, MethodSpec)> {
    let mut out = Vec::new();
    for n in 1..=4 {
        for alpha in [1.0, 0.5, 0.1] {
            out.push((
                format!("sequence ignore n={n} alpha={alpha}"),
                seq(SequenceVariant::Ignore, n, alpha, 1.0),
            ));
        }
    }
    for n in 1..=3 {
        for beta in [1.0, 10.0, 100.0] {
            out.push((
                format!("sequence exploit n={n} beta={beta}"),
                seq(SequenceVariant::Exploit, n, 1.0, beta),
            ));
        }
    }
    for (n, alpha) in [(1, 1.0), (3, 0.3)] {
        out.push((
            format!("sequence ritz n={n} alpha={alpha}"),
            seq(SequenceVariant::Ritz, n, alpha, 1.0),
        ));
    }
    out.push(("sequence zero n=1".into(), seq(SequenceVariant::Zero, 1, 1.0, 1.0)));
    for r in [2, 4] {
        out.push((
            format!("poisson conforming identity r={r}"),
            poisson(DiscreteSpace::ConformingP1, PoissonSmoother::Identity, r, 1.0),
        ));
    }
    out.push((
        "poisson conforming averaging".into(),
        poisson(DiscreteSpace::ConformingP1, PoissonSmoother::Averaging, 4, 1.0),
    ));
    out.push((
        "poisson broken ritz".into(),
        poisson(DiscreteSpace::BrokenP1, PoissonSmoother::Ritz, 4, 1.0),
    ));
    for r in [2, 4, 8] {
        for eta in [1.0, 10.0] {
            out.push((
                format!("poisson broken averaging r={r} eta={eta}"),
                poisson(DiscreteSpace::BrokenP1, PoissonSmoother::Averaging, r, eta),
            ));
        }
    }
    out.push((
        "synthetic angle-pi-4".into(),
        synthetic_method(SyntheticCase::AnglePi4, None),
    ));
    for angle in [0.3, 1.2] {
        out.push((
            format!("synthetic oblique {angle}"),
            synthetic_method(SyntheticCase::Oblique, Some(angle)),
        ));
    }
    for seed in 0..12 {
        out.push((
            format!("random-small seed={seed}"),
            random_consistent_method(&RandomSmallParams::new(seed)).unwrap(),
        ));
    }
    out
}

fn inconsistent_models() -> Vec<(String, MethodSpec)> {
    let restricted = build_poisson_1d(
        &Poisson1dParams::new(DiscreteSpace::BrokenP1, PoissonSmoother::Averaging).with_form(DiscreteForm::Restricted),
    )
    .unwrap();
    vec![
        ("sequence zero n=2".into(), seq(SequenceVariant::Zero, 2, 1.0, 1.0)),
        ("poisson broken averaging restricted".into(), restricted),
    ]
}

fn reports(models: &[(String, MethodSpec)]) -> Vec<(String, AnalysisReport)> {
    models
        .iter()
        .map(|(name, m)| (name.clone(), analyze(m).unwrap()))
        .collect()
}

fn finite(x: ExtReal, what: &str, model: &str) -> Result<f64, String> {
    x.finite().ok_or_else(|| format!("{what} infinite on {model}"))
}

fn qopt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qopt"))
}

fn run_cli(args: &[&str], config: &Path, threads: Option<&str>) -> (i32, Vec<u8>) {
    let mut cmd = qopt();
    cmd.args(args).arg("--config").arg(config);
    match threads {
        Some(t) => cmd.env("QOPT_THREADS", t),
        None => cmd.env_remove("QOPT_THREADS"),
    };
    let out = cmd.output().expect("qopt runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn num(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        _ => v.as_f64().expect("numeric field"),
    }
}

fn conforming_baseline(dir: &Path) -> Outcome {
    let config = write_config(
        dir,
        "conforming.json",
        r#"{"schema_version": 1, "model": {"name": "poisson-1d",
            "params": {"discrete_space": "conforming-p1", "smoother": "identity"}}}"#,
    );
    let (code, stdout) = run_cli(&["analyze"], &config, None);
    ensure(code == 0, || format!("exit code {code}"))?;
    let doc: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let report = &doc["records"][0]["report"];
    for (key, expected) in [
        ("c_qopt_opnorm", 1.0),
        ("c_stab", 1.0),
        ("delta_v", 0.0),
        ("delta_s", 0.0),
    ] {
        let got = num(&report[key]);
        ensure((got - expected).abs() <= 1e-9, || {
            format!("{key} = {got}, expected {expected}")
        })?;
    }
    Ok("C_qopt = C_stab = 1, deltaV = deltaS = 0 via `qopt analyze`".into())
}

fn exact_identities(reports: &[(String, AnalysisReport)]) -> Outcome {
    let mut worst = 0.0_f64;
    for (name, r) in reports {
        let scale = r.scale();
        let c = finite(r.c_qopt_opnorm, "C_qopt", name)?;
        let dv = finite(r.delta_v, "deltaV", name)?;
        let complement = finite(r.complement_norm, "|I - Pext|", name)?;
        let a = (c - (1.0 + dv * dv).sqrt()).abs();
        let b = (c - complement).abs();
        ensure(a <= 1e-8 * scale, || {
            format!("{name}: |C_qopt - sqrt(1+deltaV^2)| = {a:e}")
        })?;
        ensure(b <= 1e-8 * scale, || format!("{name}: |Pext| vs |I-Pext| gap {b:e}"))?;
        worst = worst.max(a / scale).max(b / scale);
    }
    Ok(format!(
        "{} consistent models, worst relative gap {worst:.1e}",
        reports.len()
    ))
}

fn route_agreement(reports: &[(String, AnalysisReport)]) -> Outcome {
    let mut worst = 0.0_f64;
    for (name, r) in reports {
        let scale = r.scale();
        let c = finite(r.c_qopt_opnorm, "opnorm route", name)?;
        let dual = finite(r.c_qopt_dualnorm, "dual-norm route", name)?;
        let angle = finite(r.c_qopt_angle, "angle route", name)?;
        let gap = (c - dual).abs().max((c - angle).abs()).max((dual - angle).abs());
        ensure(gap <= 1e-7 * scale, || format!("{name}: routes differ by {gap:e}"))?;
        worst = worst.max(gap / scale);
    }
    Ok(format!(
        "{} consistent models, worst relative gap {worst:.1e}",
        reports.len()
    ))
}

fn two_sided_bound(reports: &[(String, AnalysisReport)]) -> Outcome {
    let check = |name: &str, r: &AnalysisReport| -> Result<(), String> {
        let c = r.c_qopt_opnorm.value();
        let ds = r.delta_s.value();
        let lower = r.c_stab.max(ds) - 1e-9;
        let upper = r.c_stab.hypot(ds) + 1e-8 * r.scale();
        ensure(lower <= c && c <= upper, || {
            format!(
                "{name}: C_qopt = {c} outside [{lower}, {upper}] (C_stab {}, deltaS {ds})",
                r.c_stab
            )
        })
    };
    for (name, r) in reports {
        check(name, r)?;
    }
    for seed in 0..100u64 {
        let m = random_consistent_method(&RandomSmallParams::new(1000 + seed)).unwrap();
        ensure(m.setup().vhat().dim() <= 12, || {
            format!("random seed {seed} exceeds dimension 12")
        })?;
        let r = analyze(&m).unwrap();
        ensure(r.consistent, || format!("random seed {seed} not consistent"))?;
        check(&format!("random seed {seed}"), &r)?;
    }
    Ok(format!("{} shipped models and 100 random setups", reports.len()))
}

fn sequence_reproduction() -> Outcome {
    for truncation in [None, Some(6), Some(12), Some(25)] {
        let mut p = SequenceExampleParams::new(SequenceVariant::Ignore, 2, 1.0);
        p.truncation = truncation;
        let r = analyze(&build_sequence_example(&p).unwrap()).unwrap();
        let ds = r.delta_s.value();
        ensure((r.c_stab - 1.0).abs() <= 1e-10, || {
            format!("variant 1: C_stab = {}", r.c_stab)
        })?;
        ensure((ds - 2f64.sqrt()).abs() <= 1e-10, || {
            format!("variant 1: deltaS = {ds}")
        })?;

        let mut p = SequenceExampleParams::new(SequenceVariant::Exploit, 2, 1.0).with_beta(10.0);
        p.truncation = truncation;
        let r = analyze(&build_sequence_example(&p).unwrap()).unwrap();
        let ds = r.delta_s.value();
        let c = r.c_qopt_opnorm.value();
        ensure(ds.abs() <= 1e-10, || format!("variant 2: deltaS = {ds}"))?;
        ensure((c - r.c_stab).abs() <= 1e-8, || {
            format!("variant 2: C_qopt = {c}, C_stab = {}", r.c_stab)
        })?;
        ensure(r.c_stab >= 10.0 / 2f64.sqrt(), || {
            format!("variant 2: C_stab = {}", r.c_stab)
        })?;
    }
    Ok("variant 1 and 2 reproduced for truncations n+2, 6, 12, 25".into())
}

fn restriction_lemma() -> Outcome {
    let expected = [
        (SyntheticCase::IdentityT1, [1.0, 1.0, 1.0]),
        (SyntheticCase::HalfOnesT2, [0.5f64.sqrt(), 0.5f64.sqrt(), 1.0]),
    ];
    for (case, want) in expected {
        let SyntheticModel::Restriction(c) = synthetic(case, None) else {
            unreachable!("restriction case")
        };
        let r = verify_restriction_lemma(&c.space, &c.operator, &c.subspace).unwrap();
        let got = [r.c, r.delta, r.norm];
        for (g, w) in got.iter().zip(want) {
            ensure((g - w).abs() <= 1e-14, || {
                format!("{case:?}: got {got:?}, expected {want:?}")
            })?;
        }
    }
    let mut worst_ratio = 0.0_f64;
    for seed in 0..200u64 {
        let c = random_restriction_case(seed, 12).unwrap();
        let r = verify_restriction_lemma(&c.space, &c.operator, &c.subspace).unwrap();
        let m = r.c.max(r.delta);
        let h = r.c.hypot(r.delta);
        ensure(
            m <= r.norm + 1e-9 && r.norm <= h + 1e-9 && h <= 2f64.sqrt() * m + 1e-9,
            || format!("seed {seed}: C {}, delta {}, |T| {}", r.c, r.delta, r.norm),
        )?;
        if m > 0.0 {
            worst_ratio = worst_ratio.max(r.norm / m);
        }
    }
    Ok(format!(
        "T1, T2 exact; 200 random cases, max |T|/max(C,delta) = {worst_ratio:.4}"
    ))
}

fn structure_theorems() -> Outcome {
    for n in 1..=5 {
        let ignore = check_smoother_injectivity(&seq(SequenceVariant::Ignore, n, 1.0, 1.0)).unwrap();
        ensure(!ignore.injective, || format!("variant 1, n={n}: smoother injective"))?;
        ensure(
            ignore.smoother_rank == n - 1 && ignore.approximation_rank == n - 1,
            || format!("variant 1, n={n}: ranks {:?}", ignore),
        )?;
        let m = seq(SequenceVariant::Exploit, n, 1.0, 1.0);
        let exploit = check_smoother_injectivity(&m).unwrap();
        let k = m.setup().s().dim();
        ensure(exploit.injective && exploit.approximation_rank == k, || {
            format!("variant 2, n={n}: {:?} with dim S = {k}", exploit)
        })?;
    }
    for alpha in [1.0, 0.5, 0.1, 3.0] {
        for n in 1..=4 {
            let m = seq(SequenceVariant::Ignore, n, alpha, 1.0);
            let d = check_id_smoother_representability(m.setup());
            ensure((d[n - 1] - alpha).abs() <= 1e-10, || {
                format!("n={n}, alpha={alpha}: residual {}", d[n - 1])
            })?;
        }
    }
    Ok("injectivity and ranks for n = 1..5; representability residual = alpha".into())
}

fn optimal_smoothing() -> Outcome {
    let models = [
        ("sequence ritz n=1", seq(SequenceVariant::Ritz, 1, 1.0, 1.0)),
        ("sequence ritz n=3 alpha=0.3", seq(SequenceVariant::Ritz, 3, 0.3, 1.0)),
        (
            "broken P1 ritz r=2",
            poisson(DiscreteSpace::BrokenP1, PoissonSmoother::Ritz, 2, 1.0),
        ),
        (
            "broken P1 ritz r=4",
            poisson(DiscreteSpace::BrokenP1, PoissonSmoother::Ritz, 4, 1.0),
        ),
    ];
    let mut worst = 0.0_f64;
    for (name, m) in &models {
        let setup = m.setup();
        let p = approximation_operator(m).unwrap().matrix;
        let pi_s = ritz_projection(setup.vhat(), setup.s())
            .unwrap()
            .matrix
            .matmul(setup.v().basis())
            .unwrap();
        let diff: DenseMatrix = setup.s().basis() * &(&p - &pi_s);
        let gap = subordinate_norm(&diff, &setup.gram_v(), setup.vhat().gram()).unwrap();
        ensure(gap <= 1e-9, || format!("{name}: |P - Pi_S| = {gap:e}"))?;
        let c = analyze(m).unwrap().c_qopt_opnorm.value();
        ensure((c - 1.0).abs() <= 1e-9, || format!("{name}: C_qopt = {c}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("sequence and broken P1, max |P - Pi_S| = {worst:.1e}"))
}

fn galerkin_orthogonality(models: &[(String, MethodSpec)], reports: &[(String, AnalysisReport)]) -> Outcome {
    let mut worst = 0.0_f64;
    for ((name, m), (_, r)) in models.iter().zip(reports) {
        let ops = extended_projection(m).unwrap();
        let n = m.setup().vhat().dim();
        // entry (x, sigma) of (I - Pext)^T bext is bext(x - Pext x, sigma)
        let complement = &DenseMatrix::identity(n) - &ops.p_ext.matrix;
        let residual = complement.tr_matmul(&ops.b_ext).unwrap().max_abs();
        ensure(residual <= 1e-9 * r.scale(), || {
            format!("{name}: residual {residual:e}")
        })?;
        worst = worst.max(residual);
    }
    Ok(format!(
        "{} consistent models, worst residual {worst:.1e}",
        models.len()
    ))
}

fn classical_bound(reports: &[(String, AnalysisReport)], dir: &Path) -> Outcome {
    for (name, r) in reports {
        let c = r.c_qopt_opnorm.value();
        let bound = r.classical_bound.value();
        ensure(c <= bound + 1e-8 * r.scale(), || {
            format!("{name}: C_qopt = {c} > C_bext/beta = {bound}")
        })?;
    }
    let config = write_config(
        dir,
        "classical.json",
        r#"{"schema_version": 1,
            "model": {"name": "poisson-1d", "params": {"discrete_space": "broken-p1", "smoother": "averaging"}},
            "sweep": [{"path": "fine_refinement", "values": [2, 4, 8]}]}"#,
    );
    let (code, stdout) = run_cli(&["sweep"], &config, None);
    ensure(code == 0, || format!("sweep exit code {code}"))?;
    let doc: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let best = doc["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|rec| num(&rec["report"]["classical_bound"]) / num(&rec["report"]["c_qopt_opnorm"]))
        .fold(0.0_f64, f64::max);
    ensure(best > 2.0, || {
        format!("largest C_bext/(beta C_qopt) along the sweep is {best}")
    })?;
    Ok(format!(
        "{} models; slack factor {best:.3} on the broken P1 averaging sweep",
        reports.len()
    ))
}

fn determinism(dir: &Path) -> Outcome {
    let configs = [
        (
            "sweep",
            r#"{"schema_version": 1,
                "model": {"name": "sequence-example", "params": {"variant": 1, "n": 2, "alpha": 1.0}},
                "sweep": [{"path": "alpha", "values": [1.0, 0.5, 0.1]}, {"path": "n", "values": [1, 2, 3]}]}"#,
        ),
        (
            "sweep",
            r#"{"schema_version": 1,
                "model": {"name": "poisson-1d", "params": {"discrete_space": "broken-p1"}},
                "sweep": [{"path": "fine_refinement", "values": [2, 4, 8]}, {"path": "penalty_weight", "values": [1, 10]}]}"#,
        ),
        (
            "sweep",
            r#"{"schema_version": 1, "model": {"name": "random-small", "params": {"seed": 0}},
                "sweep": [{"path": "seed", "values": [0, 1, 2, 3, 4, 5, 6, 7]}]}"#,
        ),
        (
            "analyze",
            r#"{"schema_version": 1, "model": {"name": "synthetic-2d", "params": {"case": "half-ones-T2"}}}"#,
        ),
        (
            "analyze",
            r#"{"schema_version": 1, "model": {"name": "sequence-example", "params": {"variant": "zero", "n": 2, "alpha": 1.0}}}"#,
        ),
    ];
    for (i, (command, body)) in configs.iter().enumerate() {
        let config = write_config(dir, &format!("determinism-{i}.json"), body);
        let (code_a, a) = run_cli(&[command], &config, None);
        let (code_b, b) = run_cli(&[command], &config, None);
        let (code_c, c) = run_cli(&[command], &config, Some("1"));
        ensure(code_a != 1 && !a.is_empty(), || {
            format!("config {i}: exit code {code_a}")
        })?;
        ensure(code_a == code_b && code_a == code_c, || {
            format!("config {i}: exit codes differ")
        })?;
        ensure(a == b, || format!("config {i}: reruns differ"))?;
        ensure(a == c, || format!("config {i}: single-threaded run differs"))?;
    }
    Ok(format!(
        "{} configs byte-identical across reruns and thread counts",
        configs.len()
    ))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let dir = dir.path();
    let consistent = consistent_models();
    let consistent_reports = reports(&consistent);
    let mut all_reports = consistent_reports.clone();
    all_reports.extend(reports(&inconsistent_models()));

    let criteria: Vec<Criterion<'_>> = vec![
        ("conforming baseline", Box::new(|| conforming_baseline(dir))),
        (
            "exact identity suite",
            Box::new(|| exact_identities(&consistent_reports)),
        ),
        ("route agreement", Box::new(|| route_agreement(&consistent_reports))),
        ("two-sided bound suite", Box::new(|| two_sided_bound(&all_reports))),
        ("sequence-example reproduction", Box::new(sequence_reproduction)),
        ("restriction-lemma suite", Box::new(restriction_lemma)),
        ("structure theorems", Box::new(structure_theorems)),
        ("optimal smoothing", Box::new(optimal_smoothing)),
        (
            "generalized Galerkin orthogonality",
            Box::new(|| galerkin_orthogonality(&consistent, &consistent_reports)),
        ),
        ("classical bound", Box::new(|| classical_bound(&all_reports, dir))),
        ("determinism", Box::new(|| determinism(dir))),
    ];

    let mut failures = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(criterion))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
