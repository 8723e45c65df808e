use bmkit::geometry::DyadicCube;
use bmkit::grid::indicator;
use bmkit::lebesgue::ExponentVector;
use bmkit::morrey::bm_norm;
use bmkit::verify::{run_suite, with_threads, SuiteConfig, VerificationReport, SUITES};
use bmkit::SpaceParams;
use serde_json::Value;
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

const BASELINE_TOL: f64 = 1e-6;

struct Runs {
    reports: BTreeMap<&'static str, VerificationReport>,
    identical: Vec<(&'static str, bool)>,
}

fn run_all(cfg: &SuiteConfig) -> Runs {
    let mut reports = BTreeMap::new();
    let mut identical = Vec::new();
    for name in SUITES {
        let a = with_threads(Some(1), || run_suite(name, cfg)).expect(name);
        let b = with_threads(Some(4), || run_suite(name, cfg)).expect(name);
        let same = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
        identical.push((name, same));
        reports.insert(name, a);
    }
    Runs { reports, identical }
}

fn checks_pass(r: &VerificationReport, ids: &[&str]) -> Result<(), String> {
    for id in ids {
        match r.check(id) {
            None => return Err(format!("{}: missing check {id}", r.suite)),
            Some(c) if !c.pass => return Err(format!("{}: {id} failed, measured {:?}, bound {}", r.suite, c.measured, c.bound)),
            _ => {}
        }
    }
    Ok(())
}

fn members(r: &VerificationReport, id: &str) -> u64 {
    r.check(id).and_then(|c| c.parameters.get("members")).and_then(Value::as_u64).unwrap_or(0)
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= BASELINE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn baseline(key: &str) -> Vec<f64> {
    let b: Value = serde_json::from_str(include_str!("baselines.json")).unwrap();
    match &b[key] {
        Value::Array(v) => v.iter().map(|x| x.as_f64().unwrap()).collect(),
        v => vec![v.as_f64().unwrap()],
    }
}

fn tracked(r: &VerificationReport, id: &str, range: std::ops::Range<usize>, key: &str) -> Result<(), String> {
    let got = &r.check(id).ok_or(format!("missing {id}"))?.measured[range];
    let want = baseline(key);
    if got.len() == want.len() && got.iter().zip(&want).all(|(a, b)| near(*a, *b)) {
        Ok(())
    } else {
        Err(format!("{key} drifted: {got:?} vs baseline {want:?}"))
    }
}

fn closed_forms() -> Result<(), String> {
    let cases = [
        (SpaceParams::uniform(2.0, 1, 3.0, 6.0), 1usize, 3f64.powf(1.0 / 6.0)),
        (SpaceParams::new(ExponentVector(vec![2.0, 4.0]), 4.0, 8.0).unwrap(), 2, (5.0f64 / 3.0).powf(1.0 / 8.0)),
    ];
    for (sp, n, want) in cases {
        let f = indicator(&DyadicCube::standard(0, vec![0; n]), 3).unwrap();
        let start = Instant::now();
        let got = bm_norm(&f, &sp).unwrap().total;
        let secs = start.elapsed().as_secs_f64();
        if (got - want).abs() > 1e-9 * want {
            return Err(format!("n={n}: {got} vs {want}"));
        }
        if secs >= 1.0 {
            return Err(format!("n={n}: took {secs:.2}s"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cfg = SuiteConfig::default();
    let runs = run_all(&cfg);
    let r = |s: &str| &runs.reports[s];

    let criteria: Vec<(&str, Result<(), String>)> = vec![
        ("closed-form norms 3^{1/6} and (5/3)^{1/8}", closed_forms().and(checks_pass(r("norms-exact"), &["closed-form-n1", "closed-form-n2"]))),
        ("nontriviality boundary classification", checks_pass(r("norms-exact"), &["boundary-coarse-n1", "boundary-coarse-n2", "boundary-fine-n1", "boundary-fine-n2"])),
        ("dilation and translation laws on 200 functions", checks_pass(r("dilation-translation"), &["dilation", "translation"]).and_then(|_| {
            let m = members(r("dilation-translation"), "dilation");
            if m == 200 { Ok(()) } else { Err(format!("{m} members")) }
        })),
        ("constant-1 embeddings in r and p on 200 functions", checks_pass(r("embeddings"), &["embed-r", "embed-p"]).and_then(|_| {
            let m = members(r("embeddings"), "embed-r");
            if m == 200 { Ok(()) } else { Err(format!("{m} members")) }
        })),
        ("Hölder, Young and the pairing bound", checks_pass(r("holder-young"), &["holder", "young"]).and(checks_pass(r("duality-sandwich"), &["pairing"]))),
        ("block sandwich and normalized blocks", checks_pass(r("duality-sandwich"), &["sandwich", "normalized-blocks"])
            .and(tracked(r("duality-sandwich"), "sandwich", 1..2, "sandwich_median_width"))),
        ("fractional closed form and pointwise estimate", checks_pass(r("fractional"), &["closed-form", "pointwise-estimate"])),
        ("operator-norm estimates stable across J = 4..7", checks_pass(r("maximal"), &[
            "bounded-dyadic-maximal-morrey", "bounded-dyadic-maximal-block",
            "bounded-iterated-maximal-morrey", "bounded-iterated-maximal-block",
            "bounded-band-sign-morrey", "bounded-band-sign-block",
            "bounded-riesz-morrey", "bounded-riesz-block",
            "bounded-vector-maximal", "maximal-dominates",
        ])),
        ("Littlewood-Paley partition, reconstruction and square function", checks_pass(r("littlewood-paley"), &[
            "partition-of-unity", "reconstruction", "square-function-band", "multiplier-l2", "multiplier-uniform", "peetre",
        ]).and(tracked(r("littlewood-paley"), "square-function-band", 0..4, "square_function_band"))),
        ("heat closed form and decreasing residuals", checks_pass(r("heat"), &["gaussian-closed-form", "mass", "residual-decay"])),
        ("wavelet orthonormality, Plancherel and equivalence band", checks_pass(r("wavelet"), &[
            "haar-gram", "db4-gram", "plancherel", "equivalence-db4", "equivalence-haar",
        ])
            .and(tracked(r("wavelet"), "equivalence-db4", 0..2, "wavelet_band_db4"))
            .and(tracked(r("wavelet"), "equivalence-haar", 0..2, "wavelet_band_haar"))),
        ("chain rule ratio finite, homogeneous and stable", checks_pass(r("chain-rule"), &["ratio-finite", "homogeneity"])),
        ("byte-identical reports for 1 and 4 threads", {
            let bad: Vec<_> = runs.identical.iter().filter(|(_, same)| !same).map(|(n, _)| *n).collect();
            if bad.is_empty() { Ok(()) } else { Err(format!("differs: {bad:?}")) }
        }),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        match outcome {
            Ok(()) => println!("PASS {:>2} {name}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
