use hgeom::cli::{csv_float, parse_config, run, to_json, Command as Cmd, OutputFormat};
use serde_json::Value;
use std::io::Write;
use std::process::{Command, Stdio};

fn hgeom(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hgeom"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const EIGEN3: &str =
    r#"{"state":{"type":"eigenstate","n":3},"point":{"mu":0,"sigma":1},"command":"metric"}"#;

#[test]
fn metric_from_stdin() {
    let (code, out, _) = hgeom(&[], EIGEN3);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["metrics"][0]["reduced"]["mumu"], 7.0);
    assert_eq!(v["metrics"][0]["reduced"]["sigmasigma"], 26.0);
}

#[test]
fn config_errors_exit_two() {
    let (code, out, err) = hgeom(
        &["-"],
        "{\"state\": {\"type\": \"eigenstate\"},\n \"command\": \"metric\"}",
    );
    assert_eq!(code, 2);
    assert!(err.contains("config error"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kind"], "config");
    assert_eq!(v["line"], 1);

    let (code, _, _) = hgeom(&["--sigma", "-1"], EIGEN3);
    assert_eq!(code, 2);
    let (code, _, _) = hgeom(&["/nonexistent/config.json"], "");
    assert_eq!(code, 2);
}

#[test]
fn computational_errors_exit_one() {
    let text = r#"{"state":{"type":"eigenstate","n":0},"point":{"mu":0,"sigma":1},"command":"crb",
                   "estimation":{"trials":3}}"#;
    let (code, out, _) = hgeom(&[], text);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["kind"], "estimation");
}

#[test]
fn flags_override_file() {
    let (code, out, _) = hgeom(&["--sigma", "2", "--mu", "-1.5", "--format", "csv"], EIGEN3);
    assert_eq!(code, 0);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "closed_form");
    assert_eq!(row[1].parse::<f64>().unwrap(), -1.5);
    assert_eq!(row[2].parse::<f64>().unwrap(), 2.0);
    assert_eq!(row[3].parse::<f64>().unwrap(), 7.0 / 4.0);
}

#[test]
fn sample_is_seeded() {
    let text = r#"{"state":{"type":"mixture","terms":[{"n":0,"weight":0.3},{"n":2,"weight":0.7}]},
                   "point":{"mu":1,"sigma":0.5},"command":"sample","estimation":{"count":50}}"#;
    let a = hgeom(&["--seed", "5"], text);
    let b = hgeom(&["--seed", "5"], text);
    let c = hgeom(&["--seed", "6"], text);
    assert_eq!(a, b);
    assert_ne!(a.1, c.1);
    assert_eq!(a.1.lines().count(), 51);
}

/// Re-reading an emitted report must give back the same numbers bit for bit.
#[test]
fn reports_round_trip() {
    let configs = [
        EIGEN3.to_string(),
        r#"{"state":{"type":"mixture","terms":[{"n":0,"weight":0.5},{"n":1,"weight":0.5}]},"point":{"mu":0.1,"sigma":0.7},"command":"curvature"}"#.into(),
        r#"{"state":{"type":"superposition","terms":[{"n":1,"re":0.6},{"n":4,"re":0.0,"im":0.8}]},"point":{"mu":0,"sigma":1.1},"command":"metric"}"#.into(),
        r#"{"state":{"type":"eigenstate","n":2},"point":{"mu":0,"sigma":1},"command":"geodesic","geodesic":{"steps":50},"output":{"format":"json"}}"#.into(),
        r#"{"state":{"type":"eigenstate","n":1},"point":{"mu":0,"sigma":1},"command":"sample","estimation":{"count":40},"output":{"format":"json"}}"#.into(),
        r#"{"state":{"type":"eigenstate","n":1},"point":{"mu":0,"sigma":1},"command":"verify","estimation":{"count":300}}"#.into(),
    ];
    for text in &configs {
        let config = parse_config(text).unwrap();
        assert_eq!(config.output_format, OutputFormat::Json);
        let out = run(&config);
        assert_eq!(out.exit_code, 0, "{}", out.stdout);
        let reread: Value = serde_json::from_str(&out.stdout).unwrap();
        // Identical text after re-serialization means every number parsed
        // back to the value it was printed from.
        assert_eq!(to_json(&reread), out.stdout, "{text}");
        let mut numbers = Vec::new();
        collect_numbers(&reread, &mut numbers);
        assert!(!numbers.is_empty());
        for x in numbers {
            let std_parse: f64 = serde_json::to_string(&x).unwrap().parse().unwrap();
            assert_eq!(std_parse.to_bits(), x.to_bits());
        }
    }
}

fn collect_numbers(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.push(n.as_f64().unwrap()),
        Value::Array(a) => a.iter().for_each(|x| collect_numbers(x, out)),
        Value::Object(o) => o.values().for_each(|x| collect_numbers(x, out)),
        _ => {}
    }
}

#[test]
fn csv_round_trip_matches_json() {
    let text = r#"{"state":{"type":"eigenstate","n":2},"point":{"mu":0.3,"sigma":1.7},"command":"geodesic","geodesic":{"steps":25}}"#;
    let mut config = parse_config(text).unwrap();
    assert_eq!(config.command, Cmd::Geodesic);
    let csv = run(&config).stdout;
    config.output_format = OutputFormat::Json;
    let json: Value = serde_json::from_str(&run(&config).stdout).unwrap();
    let samples = json["samples"].as_array().unwrap();
    for (line, s) in csv.lines().skip(1).zip(samples) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        for (i, key) in ["tau", "mu", "sigma", "dmu", "dsigma"].iter().enumerate() {
            let j = s[key].as_f64().unwrap();
            assert_eq!(cols[i].to_bits(), j.to_bits(), "{key}");
            assert_eq!(csv_float(j), csv_float(cols[i]));
        }
    }
}
