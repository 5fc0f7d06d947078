use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_roughpath"));
    c.env_remove("ROUGHPATH_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Checks the subset of JSON Schema used by the shipped files.
fn validate(v: &Value, s: &Value, at: &str) {
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().map(|x| x.as_str().unwrap()).collect(),
            _ => panic!("bad schema type at {at}"),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            other => panic!("unsupported type {other}"),
        });
        assert!(ok, "{at}: {v} is not {types:?}");
    }
    if let Some(e) = s.get("enum") {
        assert!(e.as_array().unwrap().contains(v), "{at}: {v} not in {e}");
    }
    if let (Some(min), Some(x)) = (s.get("minimum"), v.as_f64()) {
        assert!(x >= min.as_f64().unwrap(), "{at}: {x} below {min}");
    }
    if let Some(req) = s.get("required") {
        for k in req.as_array().unwrap() {
            assert!(v.get(k.as_str().unwrap()).is_some(), "{at}: missing {k}");
        }
    }
    if let (Some(props), Some(obj)) = (s.get("properties"), v.as_object()) {
        for (k, sub) in props.as_object().unwrap() {
            if let Some(x) = obj.get(k) {
                validate(x, sub, &format!("{at}.{k}"));
            }
        }
    }
    if let (Some(items), Some(xs)) = (s.get("items"), v.as_array()) {
        if let Some(n) = s.get("minItems") {
            assert!(xs.len() as u64 >= n.as_u64().unwrap(), "{at}: too short");
        }
        if let Some(n) = s.get("maxItems") {
            assert!(xs.len() as u64 <= n.as_u64().unwrap(), "{at}: too long");
        }
        for (i, x) in xs.iter().enumerate() {
            validate(x, items, &format!("{at}[{i}]"));
        }
    }
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn error_payload(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let v: Value = serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"));
    validate(&v, &schema("error"), "error");
    v
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut a = vec!["gen-path"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let o = run(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_path_has_dyadic_rows() {
    let d = tempfile::tempdir().unwrap();
    let p = gen(d.path(), "bm.csv", &["--kind", "brownian", "--K", "12", "--seed", "7"]);
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4097);
    let t: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
    assert_eq!(t, 2f64.powi(-12));
    let again = gen(d.path(), "bm2.csv", &["--kind", "brownian", "--K", "12", "--seed", "7"]);
    assert_eq!(text, std::fs::read_to_string(again).unwrap());
}

#[test]
fn diagnose_reports_verdict() {
    let d = tempfile::tempdir().unwrap();
    let p = gen(d.path(), "bm.csv", &["--kind", "brownian", "--K", "12", "--seed", "7"]);
    let o = run(&["diagnose", "--path", s(&p), "--beta", "0.6", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate(&v, &schema("diagnose"), "diagnose");
    assert!(v["verdict"].is_string());
    assert_eq!(v["levels"].as_array().unwrap().len(), 11);

    let table = run(&["diagnose", "--path", s(&p), "--beta", "0.6"]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("verdict:"));
}

#[test]
fn integrate_smooth_and_rough() {
    let d = tempfile::tempdir().unwrap();
    let p = gen(d.path(), "sq.csv", &["--kind", "square", "--K", "14"]);
    let out = d.path().join("int.json");
    let o = run(&["integrate", "--path", s(&p), "--field", "t + x^2", "--json-out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    validate(&v, &schema("integrate"), "integrate");
    // ∫ (t + t^4) 2t dt = 2/3 + 1/3
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let bm = gen(d.path(), "bm.csv", &["--kind", "brownian", "--K", "10", "--seed", "1"]);
    let o = run(&["integrate", "--path", s(&bm), "--field", "sin(t)*x", "--tol", "1e-12", "--json-out", s(&out)]);
    assert_eq!(code(&o), 3);
    assert_eq!(error_payload(&o)["error"], "not_converged");
    validate(&json_file(&out), &schema("integrate"), "integrate");
}

#[test]
fn validation_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = d.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let cases = [
        write("header.csv", "time,value\n0,0\n0.5,1\n1,2\n"),
        write("shuffled.csv", "t,value\n0,0\n1,2\n0.5,1\n"),
        write("grid.csv", "t,value\n0,0\n0.4,1\n1,2\n"),
        write("count.csv", "t,value\n0,0\n0.5,1\n0.75,1\n1,2\n"),
        d.path().join("missing.csv"),
    ];
    let kinds: Vec<String> = cases
        .iter()
        .map(|p| {
            let o = run(&["diagnose", "--path", s(p), "--beta", "0.5"]);
            assert_eq!(code(&o), 2, "{}", p.display());
            error_payload(&o)["error"].as_str().unwrap().to_string()
        })
        .collect();
    assert_eq!(kinds[1], "schema_error");
    assert_eq!(kinds[2], "non_dyadic_grid");

    let p = gen(d.path(), "lin.csv", &["--kind", "linear", "--K", "8"]);
    assert_eq!(code(&run(&["diagnose", "--path", s(&p), "--beta", "1.5"])), 2);
    assert_eq!(code(&run(&["integrate", "--path", s(&p), "--field", "sin(", "--json-out", "-"])), 2);
    assert_eq!(code(&run(&["gen-path", "--kind", "zigzag", "--K", "8"])), 2);
    assert_eq!(code(&run(&["reproduce", "nothing"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn near_grid_times_are_accepted() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("near.csv");
    std::fs::write(&p, format!("t,value\n0,0\n{},1\n1,0\n", 0.5 + 1e-14)).unwrap();
    assert_eq!(code(&run(&["diagnose", "--path", s(&p), "--beta", "0.5"])), 0);
}

#[test]
fn config_file_supplies_defaults() {
    let d = tempfile::tempdir().unwrap();
    let p = gen(d.path(), "bm.csv", &["--kind", "brownian", "--K", "10", "--seed", "3"]);
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, format!("# diagnose defaults\npath = {}\nbeta = 0.7\njson = true\n", s(&p))).unwrap();
    let o = run(&["--config", s(&cfg), "diagnose"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["beta"], 0.7);

    let o = run(&["--config", s(&cfg), "diagnose", "--beta", "0.4"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["beta"], 0.4);

    std::fs::write(&cfg, "betta = 0.7\n").unwrap();
    let o = run(&["--config", s(&cfg), "diagnose"]);
    assert_eq!(code(&o), 2);
    error_payload(&o);
}

#[test]
fn ensembles_ignore_thread_count() {
    let go = |threads: &str| {
        let o = run(&["--threads", threads, "ito-compare", "--paths", "6", "--K", "10", "--seed", "5", "--json-out", "-"]);
        assert_eq!(code(&o), 0);
        serde_json::from_slice::<Value>(&o.stdout).unwrap()
    };
    let (a, b) = (go("1"), go("3"));
    validate(&a, &schema("ito-compare"), "ito");
    assert_eq!(a, b);

    let o = bin().env("ROUGHPATH_THREADS", "0").args(["wiener-mc", "--paths", "4", "--K", "10"]).output().unwrap();
    assert_eq!(code(&o), 2);
    let o = bin().env("ROUGHPATH_THREADS", "2").args(["wiener-mc", "--paths", "4", "--K", "10", "--levels", "2,4"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate(&v, &schema("wiener-mc"), "wiener");
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn ito_csv_rows() {
    let d = tempfile::tempdir().unwrap();
    let csv = d.path().join("res.csv");
    let o = run(&["ito-compare", "--paths", "4", "--K", "10", "--seed", "9", "--csv-out", s(&csv), "--json-out", "-"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,residual");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("9,"));
}

#[test]
fn green_check_smooth() {
    let d = tempfile::tempdir().unwrap();
    let p = gen(d.path(), "sine.csv", &["--kind", "sine", "--K", "14"]);
    let o = run(&["green-check", "--path", s(&p), "--field", "sin(t)*x", "--tol", "1e-7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate(&v, &schema("green-check"), "green");
    assert!(v["difference"].as_f64().unwrap().abs() < 1e-5);
}

#[test]
fn solve_ode_linear_driver() {
    let d = tempfile::tempdir().unwrap();
    let x = gen(d.path(), "lin.csv", &["--kind", "linear", "--K", "14"]);
    let out = d.path().join("y.csv");
    let o = run(&["solve-ode", "--drivers", s(&x), "--F", "linear", "--y0", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("t,y1"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 1f64.exp()).abs() < 1e-5);
    let side = json_file(&d.path().join("y.csv.json"));
    validate(&side, &schema("solve-ode"), "ode");
    assert!(!side["solution"]["windows"].as_array().unwrap().is_empty());

    // dy1 = y2 dx, dy2 = -y1 dx: rotation by x(1) = 1
    let o = run(&[
        "solve-ode", "--drivers", s(&x), "--F", "expression", "--m", "2", "--expr", "y2", "--expr", "-y1", "--y0", "1,0", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 1f64.cos()).abs() < 1e-5 && (last[2] + 1f64.sin()).abs() < 1e-5);
}

#[test]
fn solve_ode_blow_up_is_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    let x = gen(d.path(), "lin.csv", &["--kind", "linear", "--K", "12"]);
    let out = d.path().join("y.csv");
    let o = run(&["solve-ode", "--drivers", s(&x), "--F", "expression", "--expr", "y^2", "--y0", "4", "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    error_payload(&o);
}

#[test]
fn averages_dump() {
    let d = tempfile::tempdir().unwrap();
    let p = gen(d.path(), "lin.csv", &["--kind", "linear", "--K", "4"]);
    let o = run(&["averages", "--path", s(&p)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,n,h");
    // levels 0..=3 hold 1 + 2 + 4 + 8 cells
    assert_eq!(lines.len(), 16);
    let h0: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((h0 - 0.5).abs() < 1e-15);
}

#[test]
fn reproduce_single_experiment() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("r.json");
    let o = run(&["reproduce", "young-oracle", "--json-out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("[PASS]"));
    validate(&json_file(&out), &schema("reproduce"), "reproduce");
}
