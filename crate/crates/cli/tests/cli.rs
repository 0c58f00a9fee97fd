use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn beltrami(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beltrami"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CIRCLE: &str = "lambda = 8.0\n\n[[components]]\npreset = \"circle\"\n";

const FAST: &str = "safety = 0.25\nnodes_per_2pi = 128\nt_nodes = 9\ndirections = 200\nclosure = 1e-11\n";

fn synthesize_circle(dir: &Path) -> (String, String, String) {
    let link = write(dir, "circle.toml", CIRCLE);
    let config = write(dir, "run.toml", FAST);
    let field = dir.join("circle.field").to_str().unwrap().to_string();
    let report = dir.join("fit.json");
    let o = beltrami(&[
        "synthesize",
        "--link",
        &link,
        "--config",
        &config,
        "--out",
        &field,
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["fit"]["tubes"].as_array().unwrap().len(), 1);
    (link, config, field)
}

#[test]
fn unknot_synthesize_verify_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (link, config, field) = synthesize_circle(dir.path());
    let report = dir.path().join("verify.json");
    let orbits = dir.path().join("orbits");
    let o = beltrami(&[
        "verify",
        "--field",
        &field,
        "--link",
        &link,
        "--config",
        &config,
        "--report",
        report.to_str().unwrap(),
        "--out",
        orbits.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}{}", stderr(&o));
    assert!(stdout.contains("PASS confinement[0]"));
    assert!(orbits.join("orbit_0.csv").exists());

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    let orbit = &json["components"][0]["orbit"];
    let start: Vec<f64> = orbit["start"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let period = orbit["period"].as_f64().unwrap();

    // A seed on the orbit closes up after one period.
    let seeds = write(dir.path(), "seeds.txt", &format!("# orbit start\n{:.17e} {:.17e} {:.17e}\n", start[0], start[1], start[2]));
    let traces = dir.path().join("traces");
    let o = beltrami(&[
        "trace",
        "--field",
        &field,
        "--seeds",
        &seeds,
        "--t-end",
        &format!("{period:.17e}"),
        "--out",
        traces.to_str().unwrap(),
        "--rtol",
        "1e-12",
        "--atol",
        "1e-13",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(traces.join("trace_0.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let (first, last) = (&rows[0], rows.last().unwrap());
    let gap = (1..4).map(|i| (first[i] - last[i]).powi(2)).sum::<f64>().sqrt();
    assert!(gap < 1e-6, "closure gap {gap}");
}

#[test]
fn verification_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (link, config, field) = synthesize_circle(dir.path());
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = beltrami(&["verify", "--field", &field, "--link", &link, "--config", &config, "--report", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn missing_lambda_is_a_parse_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let link = write(dir.path(), "bad.toml", "[[components]]\npreset = \"circle\"\n");
    let o = beltrami(&["synthesize", "--link", &link, "--out", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
    assert!(!dir.path().join("f").exists());
}

#[test]
fn zero_lambda_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let link = write(dir.path(), "zero.toml", "lambda = 0.0\n[[components]]\npreset = \"circle\"\n");
    let o = beltrami(&["synthesize", "--link", &link, "--out", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nonzero"), "{}", stderr(&o));
    let o = beltrami(&["synthesize", "--link", &write(dir.path(), "c.toml", CIRCLE), "--lambda", "0", "--out", "x"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn over_budget_fit_still_writes_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let link = write(dir.path(), "circle.toml", CIRCLE);
    let config = write(dir.path(), "tight.toml", "nodes_per_2pi = 64\nt_nodes = 5\ndirections = 4\ntolerance = 1e-9\n");
    let field = dir.path().join("f.field");
    let report = dir.path().join("fit.json");
    let o = beltrami(&[
        "synthesize",
        "--link",
        &link,
        "--config",
        &config,
        "--out",
        field.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(field.exists() && report.exists());
}

#[test]
fn corrupted_field_file_is_rejected_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let (link, _, field) = synthesize_circle(dir.path());
    let text = fs::read_to_string(&field).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let row = lines.iter().position(|l| !l.starts_with('#') && l.split_whitespace().count() == 8).unwrap();
    let mut values: Vec<String> = lines[row].split_whitespace().map(str::to_string).collect();
    values[0] = "2.0".into();
    lines[row] = values.join(" ");
    let bad = write(dir.path(), "bad.field", &(lines.join("\n") + "\n"));
    let o = beltrami(&["verify", "--field", &bad, "--link", &link]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("member"), "{}", stderr(&o));
}

#[test]
fn mismatched_lambda_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config, field) = synthesize_circle(dir.path());
    let other = write(dir.path(), "other.toml", "lambda = 3.0\n[[components]]\npreset = \"circle\"\n");
    let o = beltrami(&["verify", "--field", &field, "--link", &other, "--config", &config]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lambda"));
}

#[test]
fn trace_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, field) = synthesize_circle(dir.path());
    let empty = write(dir.path(), "empty.txt", "# nothing\n\n");
    let out = dir.path().join("none");
    let o = beltrami(&["trace", "--field", &field, "--seeds", &empty, "--t-end", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 0);

    let seeds = write(dir.path(), "two.txt", "1 0 0\n0.5, 0.5, 0.1\n");
    let out = dir.path().join("zero");
    let o = beltrami(&["trace", "--field", &field, "--seeds", &seeds, "--t-end", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for i in 0..2 {
        let text = fs::read_to_string(out.join(format!("trace_{i}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}

#[test]
fn sample_grid_matches_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let field = write(
        dir.path(),
        "one.field",
        "beltrami-field 1\nlambda 2.0000000000000000e0\nmembers 1\n# kx ky kz ex ey ez alpha beta\n\
         0 0 1 1 0 0 1.0 0.5\n",
    );
    let out = dir.path().join("s.csv");
    let o = beltrami(&["sample", "--field", &field, "--grid", "0:1:2,0:1:2,0:1:2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,z,ux,uy,uz");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        // k = z, e = x: u = α Re N + β Im N with N = (x̂ + i ŷ) e^{2iz}.
        let (c, s) = ((2.0 * r[2]).cos(), (2.0 * r[2]).sin());
        let expect = [1.0 * c + 0.5 * s, -s + 0.5 * c, 0.0];
        for i in 0..3 {
            assert!((r[3 + i] - expect[i]).abs() < 1e-14, "{r:?}");
        }
    }

    let o = beltrami(&["sample", "--field", &field, "--grid", "0:1:1,0:1:2,0:1:2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_with_parse_code() {
    assert_eq!(code(&beltrami(&["synthesize", "--bogus"])), 2);
    assert_eq!(code(&beltrami(&[])), 2);
    assert_eq!(code(&beltrami(&["--help"])), 0);
}

#[test]
fn missing_file_is_an_io_error() {
    let o = beltrami(&["sample", "--field", "/nonexistent/x.field", "--grid", "0:1:2,0:1:2,0:1:2", "--out", "x"]);
    assert_eq!(code(&o), 7);
}
