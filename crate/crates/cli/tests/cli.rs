use std::path::PathBuf;
use std::process::{Command, Output};

use pfuchs::json::FixtureFile;
use serde_json::{json, Value};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfuchs")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    json_of(&out)
}

#[test]
fn bracket_golden() {
    assert_eq!(ok(&["bracket", "--p", "3", "--x", "1/2", "--m", "2"]), json!({"value": 4}));
}

#[test]
fn exponent_golden() {
    let v = ok(&["exponent", &fixture("fixture_m_half.json"), "--kmax", "3"]);
    assert_eq!(v, json!({"A": [["14 mod 27"]], "det_trace": [0, 0, 0]}));
}

#[test]
fn ska_of_identity_is_identity() {
    let v = ok(&["skA", &fixture("fixture_identity.json"), "--k", "1", "--A", "0"]);
    let s = &v["S"];
    assert_eq!(s.as_array().unwrap().len(), 1);
    let terms = s[0][0]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 1);
    assert_eq!(terms[0]["exp"], json!([0]));
    assert_eq!(terms[0]["coef"]["mantissa"], "1");
    assert_eq!(terms[0]["coef"]["shift"], 0);
}

#[test]
fn ska_twisted_matches_inverse_twist() {
    let v = ok(&["skA", &fixture("twisted_rank2.json"), "--k", "2", "--A", "0;1/2"]);
    let off = &v["S"][0][1]["terms"];
    assert_eq!(off.as_array().unwrap().len(), 1);
    assert_eq!(off[0]["exp"], json!([1]));
    assert_eq!(v["det_constant_lognorm"], "0");
}

#[test]
fn factor_and_norms() {
    let f = fixture("series_tinv_1_t.json");
    let v = ok(&["factor", &f]);
    assert_eq!(v["degrees"], json!([-1, 1]));
    assert_eq!(v["P"]["window"], json!([[0, 2]]));
    assert_eq!(v["u"]["window"], json!([[-1, -1]]));
    assert_eq!(v["residual_lognorm"], "-inf");
    assert_eq!(ok(&["norm", &f, "--box=-1:1"])["lognorm"], "1");
    assert_eq!(ok(&["width", &f, "--box", "0"])["width"], json!([2]));
    assert_eq!(ok(&["unit", &f, "--box", "0"])["unit"], false);
    assert_eq!(ok(&["unit", &f, "--box", "1/2"])["dominant"], json!([1]));
}

#[test]
fn exponent_set_commands() {
    let (a, b) = (fixture("exponents_a.json"), fixture("exponents_b.json"));
    let v = ok(&["weakequiv", &a, &b, "--hmax", "4"]);
    assert_eq!(v["weak"]["certified"], true);
    assert_eq!(v["weak"]["c"], "1");
    assert!(v["strict"]["equivalent"].is_array());
    let v = ok(&["partition", &a]);
    assert_eq!(v["blocks"], json!([[0, 2], [1]]));
    assert!(v["check"]["valid"].is_object());
    let v = ok(&["liouville", "--p", "3", "--x", "1/2", "--m", "3"]);
    assert_eq!(v["class"], "non-liouville-non-integer");
}

#[test]
fn decomposition_commands() {
    let v = ok(&["decompose", &fixture("twisted_rank2.json")]);
    assert_eq!(v["factors"].as_array().unwrap().len(), 2);
    assert!(v["factors"].as_array().unwrap().iter().all(|f| f["certificate"]["passed"] == true));
    let v = ok(&["constant-basis", &fixture("unipotent_twisted.json"), "--A", "0"]);
    assert_eq!(v["nilpotent"], true);
    let v = ok(&["action", &fixture("twisted_rank2.json"), "--k", "1", "--a", "1"]);
    assert_eq!(v["laws"]["group_law_residual"], "-inf");
    assert_eq!(v["E"].as_array().unwrap().len(), 2);
}

#[test]
fn output_is_deterministic() {
    let args = ["decompose", &fixture("twisted_rank2.json")];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fixture_files_round_trip() {
    for name in [
        "fixture_m_half.json",
        "fixture_identity.json",
        "twisted_rank2.json",
        "unipotent_twisted.json",
        "series_tinv_1_t.json",
        "exponents_a.json",
        "exponents_b.json",
    ] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let f = FixtureFile::parse(&text).unwrap();
        assert_eq!(f.emit(), text, "{name}");
    }
    let v = run(&["fixture", "twisted_rank2"]);
    assert_eq!(v.stdout, std::fs::read(fixture("twisted_rank2.json")).unwrap());
}

#[test]
fn exit_codes() {
    let out = run(&["bracket", "--x", "1/2", "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"]["code"], "usage");
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let out = run(&["exponent", "/definitely/missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["error"]["code"], "io");
    // A series file where a module is expected.
    let out = run(&["exponent", &fixture("series_tinv_1_t.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["error"]["code"], "schema_mismatch");
    let out = run(&["factor", &fixture("exponents_a.json")]);
    assert_eq!(json_of(&out)["error"]["code"], "schema_mismatch");
    // Denominator divisible by p.
    let out = run(&["bracket", "--p", "3", "--x", "1/3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["error"]["code"], "denominator_divisible_by_p");
}

#[test]
fn malformed_input_has_its_own_code() {
    let dir = std::env::temp_dir().join(format!("pfuchs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["norm", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["error"]["code"], "malformed_json");
    let low = dir.join("low.json");
    std::fs::write(
        &low,
        r#"{"schema":1,"p":3,"prec":4,"nvars":1,"kind":"scalar","payload":{"shift":0,"mantissa":"1","prec":9}}"#,
    )
    .unwrap();
    let out = run(&["norm", low.to_str().unwrap()]);
    assert_eq!(json_of(&out)["error"]["code"], "schema_mismatch");
    std::fs::remove_dir_all(&dir).ok();
}
