use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use qsde_cli::model_file;
use qsde_core::convergence::{generator_study, semigroup_study, StudyConfig, DEFAULT_K_SCHEDULE};
use qsde_core::elimination::eliminate;
use qsde_core::models::{builtin, BUILTIN_NAMES};
use qsde_core::operator::C64;
use qsde_core::semigroup::FieldAmplitudes;
use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn qsde(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_qsde")).args(args).output().expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(!stderr.contains("panicked"), "panic: {stderr}");
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_model(dir: &tempfile::TempDir, name: &str, json: &Value) -> String {
    let p = dir.path().join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_string(json).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn duan_kimble_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("duan-kimble")).unwrap()).unwrap()
}

fn csv_values(text: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        vec!["fixture", "kind", "k", "t_max", "grid_points", "alpha", "beta", "value"]
    );
    r.records().map(|rec| rec.unwrap()[7].parse().unwrap()).collect()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn shipped_duan_kimble_validates() {
    let o = qsde(&["validate", &fixture("duan-kimble")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks pass"));
    // lookup by name without the extension
    let bare = fixture("duan-kimble").trim_end_matches(".json").to_string();
    assert_eq!(qsde(&["validate", &bare]).status.code(), Some(0));
}

#[test]
fn slow_drift_defect_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = duan_kimble_json();
    m["roles"]["A"] = serde_json::json!({"add": [{"ref": "a"}, m["p0"].clone()]});
    let path = write_model(&dir, "defect", &m);
    let report = dir.path().join("report.json");
    let o = qsde(&["validate", &path, "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL structural.e"), "{}", stdout(&o));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(doc["overall"], Value::Bool(false));
    let e = doc["checks"].as_array().unwrap().iter().find(|c| c["name"] == "structural.e").unwrap();
    assert!((e["max_violation"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // downstream commands refuse it as a domain failure
    assert_eq!(qsde(&["eliminate", &path]).status.code(), Some(1));
}

#[test]
fn parse_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut empty = duan_kimble_json();
    empty["operators"] = serde_json::json!({});
    let cases = vec![
        ("empty", empty),
        ("dangling", serde_json::json!({"name": "x", "space": [2], "channels": 1,
            "operators": {"a": {"ref": "missing"}}})),
        ("cycle", serde_json::json!({"name": "x", "space": [2], "channels": 1,
            "operators": {"a": {"ref": "b"}, "b": {"adjoint": {"ref": "a"}}}})),
        ("baddim", serde_json::json!({"name": "x", "space": ["cutoff+1"], "channels": 1,
            "operators": {"a": {"identity": 2}}})),
        ("mismatch", serde_json::json!({"name": "x", "space": [2], "channels": 1,
            "operators": {"a": {"identity": 3}}, "roles": {"B": {"ref": "a"}}})),
        ("ragged", serde_json::json!({"name": "x", "space": [2], "channels": 1,
            "operators": {"a": {"matrix": [[[1, 0]], [[0, 0], [1, 0]]]}}})),
        ("unknown-key", serde_json::json!({"name": "x", "space": [2], "channels": 1,
            "operators": {"a": {"identity": 2}}, "colour": 3})),
        ("funcalc", serde_json::json!({"name": "x", "space": [2], "channels": 1,
            "operators": {"a": {"funcalc": {"name": "mirror-scattering", "operand": {"creator": 2},
                "args": {"theta": 1, "gamma": 1}}}}})),
    ];
    for (name, model) in cases {
        let path = write_model(&dir, name, &model);
        let o = qsde(&["validate", &path]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(qsde(&["validate", garbage.to_str().unwrap()]).status.code(), Some(2));
    let o = qsde(&["validate", &fixture("duan-kimble"), "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flag_errors_exit_two() {
    let dk = fixture("duan-kimble");
    assert_eq!(qsde(&["converge", &dk, "--k", "2,4"]).status.code(), Some(2));
    assert_eq!(qsde(&["converge", &dk, "--k", "4,2,8"]).status.code(), Some(2));
    assert_eq!(qsde(&["converge", &dk, "--alpha", "0.1,0.2"]).status.code(), Some(2));
    assert_eq!(qsde(&["converge", &dk, "--alpha", "zebra"]).status.code(), Some(2));
    assert_eq!(qsde(&["converge", &dk, "--kind", "banana"]).status.code(), Some(2));
    assert_eq!(qsde(&["converge", &dk, "--kind", "semigroup", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(qsde(&["example", "nope"]).status.code(), Some(2));
}

#[test]
fn eliminate_writes_the_closed_form_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_eq!(qsde(&["eliminate", &fixture("duan-kimble"), "--out", p.to_str().unwrap()]).status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);

    let doc: Value = serde_json::from_slice(&ta).unwrap();
    let entry = |m: &Value, r: usize, col: usize| c(m[r][col][0].as_f64().unwrap(), m[r][col][1].as_f64().unwrap());
    let (gamma, g, alpha) = (1.0, 2.0, c(0.3, 0.4));
    let want_k = -alpha.norm_sqr() * gamma / (2.0 * g * g);
    assert!((entry(&doc["K"], 1, 1) - c(want_k, 0.0)).norm() < 1e-10);
    assert!(entry(&doc["K"], 0, 0).norm() < 1e-10);
    let want_l = -alpha.conj() * gamma.sqrt() / g;
    assert!((entry(&doc["L"][0], 1, 0) - want_l).norm() < 1e-10);
    assert!((entry(&doc["N"][0][0], 0, 0) - c(1.0, 0.0)).norm() < 1e-10);
    assert!((entry(&doc["N"][0][0], 1, 1) - c(-1.0, 0.0)).norm() < 1e-10);
    assert_eq!(doc["compression"].as_array().unwrap().len(), 15);
}

#[test]
fn trivial_family_limit_is_its_input() {
    let o = qsde(&["eliminate", &fixture("trivial")]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let m = model_file::load(&fixture("trivial")).unwrap();
    let fam = &m.fixture.family;
    let close = |json: &Value, want: &qsde_core::operator::CMatrix| {
        for r in 0..2 {
            for col in 0..2 {
                let z = c(json[r][col][0].as_f64().unwrap(), json[r][col][1].as_f64().unwrap());
                assert!((z - want[(r, col)]).norm() < 1e-14);
            }
        }
    };
    close(&doc["K"], fam.b.matrix());
    close(&doc["L"][0], fam.g_ops[0].matrix());
    close(&doc["M"][0], &(-fam.w_ops[0][0].matrix() * fam.g_ops[0].matrix().adjoint()));
    close(&doc["N"][0][0], fam.w_ops[0][0].matrix());
}

#[test]
fn shipped_models_match_library_fixtures() {
    for name in BUILTIN_NAMES {
        let parsed = model_file::load(&fixture(name)).unwrap().fixture;
        let lib = builtin(name).unwrap();
        let (p, l) = (&parsed.family, &lib.family);
        let pairs = [(&p.y, &l.y), (&p.a, &l.a), (&p.b, &l.b), (&p.f_ops[0], &l.f_ops[0]), (&p.g_ops[0], &l.g_ops[0])];
        for (i, (x, y)) in pairs.iter().enumerate() {
            assert!((*x - *y).spectral_norm() <= 1e-14, "{name} role {i}");
        }
        assert!((&p.w_ops[0][0] - &l.w_ops[0][0]).spectral_norm() <= 1e-14, "{name} W");
        assert_eq!(parsed.sub.p0().matrix(), lib.sub.p0().matrix(), "{name} p0");
        assert_eq!(parsed.cutoff, lib.cutoff, "{name} cutoff");
    }
}

#[test]
fn mirror_scattering_funcalc_matches_elimination() {
    let m = model_file::load(&fixture("mirror")).unwrap();
    let res = eliminate(&m.fixture.family, &m.fixture.sub, 1e-10).unwrap();
    let want = m.fixture.family.y.matrix().nrows() / 4;
    assert_eq!(res.limit.n_ops[0][0].matrix().nrows(), want);
    let closed = qsde_core::models::mirror::expected_limit(1.0, 0.5, 1.0, 8).unwrap();
    assert!((&res.limit.n_ops[0][0] - &closed.n_ops[0][0]).spectral_norm() < 1e-10);
}

#[test]
fn generator_study_matches_library_bit_for_bit() {
    let o = qsde(&["converge", &fixture("duan-kimble")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cli_values = csv_values(&stdout(&o));

    let m = model_file::load(&fixture("duan-kimble")).unwrap();
    let cfg = StudyConfig::new(FieldAmplitudes::uniform(1, c(0.5, 0.0), c(0.5, 0.0)));
    assert_eq!(cfg.k_schedule, DEFAULT_K_SCHEDULE.to_vec());
    let bumped = m.with_cutoff(6).unwrap().fixture;
    let lib = generator_study(&m.fixture, &cfg, Some(&bumped)).unwrap();
    assert_eq!(cli_values.len(), lib.values.len());
    for (a, b) in cli_values.iter().zip(&lib.values) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let rate = lib.fitted_rate.unwrap();
    assert!((-1.15..=-0.85).contains(&rate), "{rate}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("verdict=converging"));
}

#[test]
fn semigroup_study_matches_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("gaps.csv");
    let report = dir.path().join("report.json");
    let o = qsde(&[
        "converge",
        &fixture("duan-kimble"),
        "--kind",
        "semigroup",
        "--k",
        "2,4,8",
        "--T",
        "1",
        "--grid",
        "9",
        "--alpha",
        "0",
        "--beta",
        "0.2-0.1i",
        "--csv",
        csv_path.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("duan-kimble,semigroup,2.0,1.0,9,0.0+0.0i,0.2-0.1i,"));
    let cli_values = csv_values(&text);

    let m = model_file::load(&fixture("duan-kimble")).unwrap();
    let amp = FieldAmplitudes::new(vec![c(0.0, 0.0)], vec![c(0.2, -0.1)]).unwrap();
    let mut cfg = StudyConfig::new(amp);
    cfg.k_schedule = vec![2.0, 4.0, 8.0];
    cfg.t_max = 1.0;
    cfg.grid_points = 9;
    cfg.check_grid = true;
    let lib = semigroup_study(&m.fixture, &cfg, Some(&m.with_cutoff(6).unwrap().fixture)).unwrap();
    for (a, b) in cli_values.iter().zip(&lib.values) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "Converging");
    assert_eq!(doc["kind"], serde_json::to_value(lib.kind).unwrap());
}

#[test]
fn trivial_semigroup_study_is_flat_zero() {
    let o = qsde(&["converge", &fixture("trivial"), "--kind", "semigroup", "--k", "1,2,4", "--grid", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(csv_values(&stdout(&o)).iter().all(|v| *v == 0.0));
}

#[test]
fn truncation_study_runs_and_rejects_scattering() {
    let o = qsde(&["converge", &fixture("truncation-demo"), "--kind", "truncation", "--cutoffs", "2,4,8,12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = csv_values(&stdout(&o));
    assert_eq!(v.len(), 3);
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
    // the reduced atom scatters nontrivially, so truncation is refused
    let o = qsde(&["converge", &fixture("duan-kimble"), "--kind", "truncation", "--cutoffs", "1,2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn semigroup_command_reports_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sg.json");
    let o = qsde(&["semigroup", &fixture("cavity"), "--grid", "5", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(doc["dissipativity"].as_f64().unwrap() <= 1e-10);
    assert!(doc["norms"].as_array().unwrap().iter().all(|n| n.as_f64().unwrap() <= 1.0 + 1e-12));
    let o = qsde(&["semigroup", &fixture("cavity"), "--k", "3", "--grid", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cavity,3.0,"));
}

#[test]
fn examples_round_trip() {
    let o = qsde(&["example"]);
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(names.contains(&"duan-kimble".to_string()));
    let dir = tempfile::tempdir().unwrap();
    for n in &names {
        let text = stdout(&qsde(&["example", n]));
        let p: PathBuf = dir.path().join(format!("{n}.json"));
        std::fs::write(&p, text).unwrap();
        assert_eq!(qsde(&["validate", p.to_str().unwrap()]).status.code(), Some(0), "{n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parser_is_total_on_garbage(text in "\\PC{0,200}") {
        let _ = model_file::parse(&text);
    }

    #[test]
    fn parser_is_total_on_mutated_models(cut in 0usize..1200, junk in "[\\[\\]{}:,\"0-9a-z+-]{0,8}") {
        let base = std::fs::read_to_string(fixture("cavity")).unwrap();
        let cut = cut.min(base.len());
        let cut = (0..=cut).rev().find(|&i| base.is_char_boundary(i)).unwrap();
        let mutated = format!("{}{}{}", &base[..cut], junk, &base[cut..]);
        let _ = model_file::parse(&mutated);
    }
}
