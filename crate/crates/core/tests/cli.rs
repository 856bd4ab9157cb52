use std::io::Write;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_moutard");
const U1: &str = "(4*z^4 + 13*r^4 + 20*r^2*z^2)/((r^2 - 2*z^2)^2*r^2)";
const UU1: &str = "(-8*r^2*((r^2 - 5*z^2)^2 - 33*z^4) - 8*C1*(5*r^2 + 2*z^2))/(4*r^2*z^2 + r^4 + C1)^2";

fn moutard(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("MOUTARD_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn transform_json_schema() {
    let o = moutard(&[
        "transform",
        "--potential",
        "0",
        "--seed",
        "r^2-2*z^2",
        "--at",
        "1,1",
        "--out",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    for key in ["u", "y_h", "u_tilde", "verification", "params", "values"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["values"][0]["value"].as_f64().unwrap(), 37.0);
    for key in ["grid", "n_evaluated", "n_skipped", "max_abs", "max_rel", "worst_point"] {
        assert!(v["verification"].get(key).is_some(), "missing {key}");
    }
    // same inputs, same bytes
    let again = moutard(&[
        "transform",
        "--potential",
        "0",
        "--seed",
        "r^2-2*z^2",
        "--at",
        "1,1",
        "--out",
        "json",
    ]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn transform_with_parameter_and_seed_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "sin(k*z)").unwrap();
    let path = f.path().to_str().unwrap();
    let o = moutard(&[
        "transform",
        "--potential",
        "-k^2",
        "--seed-file",
        path,
        "--param",
        "k=1",
        "--at",
        "1,1.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("u_tilde("))
        .unwrap()
        .to_string();
    let got: f64 = line.rsplit(" = ").next().unwrap().parse().unwrap();
    let want = -1.0 + 1.0 + 2.0 / 1.5f64.sin().powi(2);
    assert!((got - want).abs() < 1e-12 * want, "{line}");
}

#[test]
fn non_solution_seed_exits_1() {
    let o = moutard(&["transform", "--potential", "0", "--seed", "r"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed is not a solution"));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        moutard(&["transform", "--potential", "0", "--seed", "r^(1/2)"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(moutard(&["transform", "--potential", "0"]).status.code(), Some(2));
    assert_eq!(
        moutard(&["transform", "--potential", "0", "--seed-file", "/nonexistent/seed"])
            .status
            .code(),
        Some(2)
    );
    let o = moutard(&["scan", "--expr", "1", "--grid", "0:5:10,-5:5:10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1/r^2"));
    assert_eq!(moutard(&["catalog", "show", "nope"]).status.code(), Some(2));
    assert_eq!(
        moutard(&["chain", "--config", "/nonexistent.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn solve_csv_at_points() {
    let o = moutard(&[
        "solve",
        "--potential",
        "0",
        "--seed",
        "r^2-2*z^2",
        "--solution",
        "z",
        "--base",
        "1,0",
        "--at",
        "1,1",
        "--at",
        "2,0.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,z,value"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[..2], [1.0, 1.0]);
    assert!((row[2] - 1.0).abs() < 1e-12);
    // every number carries 17 significant digits
    for cell in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{cell}");
    }
}

#[test]
fn solve_trivial_pair_is_a_multiple_of_the_partner() {
    let o = moutard(&[
        "solve",
        "--potential",
        "0",
        "--seed",
        "r^2-2*z^2",
        "--solution",
        "r^2-2*z^2",
        "--base",
        "1,0",
        "--additive-constant",
        "2",
        "--grid",
        "1.5:3:4,-1:1:3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let partner = 1.0 / (v[0] * (v[0] * v[0] - 2.0 * v[1] * v[1]));
        assert!((v[2] - 2.0 * partner).abs() < 1e-13 * partner.abs(), "{line}");
    }
}

#[test]
fn solve_across_the_cone_exits_3() {
    let o = moutard(&[
        "solve",
        "--potential",
        U1,
        "--seed",
        "1/(r*(r^2-2*z^2))",
        "--solution",
        "r*z/((r^2 - 2*z^2)*sqrt(r^2 + z^2))",
        "--base",
        "1,0",
        "--at",
        "1,-1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no singularity-free path"), "{}", stderr(&o));
}

#[test]
fn verify_reports_and_fails() {
    let ok = moutard(&["verify", "--potential", U1, "--solution", "1/(r*(r^2-2*z^2))"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["passed"], true);
    let bad = moutard(&["verify", "--potential", "0", "--solution", "r"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["passed"], false);
}

#[test]
fn scan_second_stage_potential_is_finite() {
    let o = moutard(&[
        "scan",
        "--expr",
        UU1,
        "--param",
        "C1=1",
        "--grid",
        "0.05:5:100,-5:5:100",
        "--expect",
        "finite",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["n_singular"], 0);
    assert!(v["min"].as_f64().unwrap() < 0.0);
    assert_eq!(v["finite_everywhere"], true);

    let neg = moutard(&[
        "scan",
        "--expr",
        U1,
        "--grid",
        "0.05:5:100,-5:5:100",
        "--expect",
        "negative",
    ]);
    assert_eq!(neg.status.code(), Some(1));
}

#[test]
fn chain_config_reproduces_second_stage() {
    let o = moutard(&["chain", "--config", &config_path("ex1.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["stages"].as_array().unwrap().len(), 2);
    assert_eq!(v["passed"], true);
    let o = moutard(&[
        "eval",
        "--expr",
        v["final_potential"].as_str().unwrap(),
        "--param",
        "C1=1",
        "--at",
        "1,0",
    ]);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((value + 12.0).abs() < 1e-12, "{row}");
}

#[test]
fn chain_expectation_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"u0": "0", "steps": [{"y_h": "r^2 - 2*z^2", "expect": "1/r^2"}]}"#,
    )
    .unwrap();
    let o = moutard(&["chain", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["expectations"][0]["passed"], false);

    std::fs::write(&path, r#"{"u0": "0", "steps": [{"y_h": "r"}]}"#).unwrap();
    let o = moutard(&["chain", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stage 1"));

    std::fs::write(&path, r#"{"u0": "0", "steps": [{"y_h": "r"}], "extra": true}"#).unwrap();
    assert_eq!(
        moutard(&["chain", "--config", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn catalog_commands() {
    let list = moutard(&["catalog", "list"]);
    assert!(stdout(&list).lines().any(|l| l.starts_with("ex2-second")));
    let show = moutard(&["catalog", "show", "ex3-second"]);
    assert_eq!(json(&show)["name"], "ex3-second");
    let export = moutard(&["catalog", "export"]);
    assert!(json(&export).as_array().unwrap().len() >= 8);
    let verify = moutard(&["catalog", "verify", "ex2-second"]);
    assert_eq!(verify.status.code(), Some(0), "{}", stderr(&verify));
    assert_eq!(json(&verify)[0]["passed"], true);
}

#[test]
fn catalog_verify_failing_side_condition_exits_1() {
    // C2 = 1 breaks the negativity condition for k = 1
    let o = moutard(&["catalog", "verify", "ex2-second", "--param", "C2=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL"));
}
