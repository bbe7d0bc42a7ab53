use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;
use shabound_core::pipeline::AnalyzeReport;
use shabound_core::search::SearchReport;

fn shabound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shabound")).args(args).output().expect("binary runs")
}

fn shabound_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shabound")).args(args).env(key, val).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_ok(args: &[&str]) -> (String, Value) {
    let o = shabound(args);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(&o));
    let text = stdout(&o);
    let v = serde_json::from_str(&text).unwrap();
    (text, v)
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect()
}

fn config_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

const ELEVEN: [&str; 7] = ["analyze", "--curve", "[0,-1,1,0,0]", "--point", "[\"0/1\",\"0/1\"]", "--p", "5"];

#[test]
fn analyze_eleven_a_fixture() {
    let mut args = ELEVEN.to_vec();
    args.push("--json");
    let (text, v) = json_ok(&args);
    assert_eq!(v["codomain_discriminant"], "-161051");
    assert_eq!(strings(&v["sets"]["s1"]), Vec::<String>::new());
    assert_eq!(strings(&v["sets"]["s2"]), ["11"]);
    assert_eq!(strings(&v["sets"]["s3"]), ["5"]);
    assert_eq!((v["m_phi"].as_str(), v["m_phihat"].as_str()), (Some("0"), Some("0")));
    assert_eq!(v["sandwich_phi"]["lower_dim"], "0");
    assert_eq!(v["sandwich_phi"]["upper_dim"], "0");
    assert_eq!(v["sandwich_phihat"]["lower_dim"], "0");
    assert_eq!(v["sandwich_phihat"]["upper_dim"], "2");
    assert_eq!(v["dual_swap"], true);
    assert_eq!(v["bounds"]["advisory"], true);

    // typed round trip is byte-identical
    let report: AnalyzeReport = serde_json::from_str(&text).unwrap();
    assert_eq!(format!("{}\n", serde_json::to_string_pretty(&report).unwrap()), text);
}

#[test]
fn text_view_carries_the_json_leaves() {
    let o = shabound(&ELEVEN);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("codomain_discriminant: -161051\n"), "{text}");
    assert!(text.contains("sets.s2: [11]\n"));
    assert!(text.contains("sandwich_phihat.upper_dim: 2\n"));
}

#[test]
fn analyze_wrong_order_exits_2() {
    let o = shabound(&["analyze", "--curve", "[0,-1,1,0,0]", "--point", "[\"0\",\"0\"]", "--p", "7", "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(&stderr(&o)).unwrap();
    assert_eq!(err["error"]["field"], "point");
    assert!(err["error"]["message"].as_str().unwrap().contains("point order"));
}

#[test]
fn analyze_bad_inputs_name_the_field() {
    let o = shabound(&["analyze", "--curve", "[0,0,0,0]", "--point", "O", "--p", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: curve:"), "{}", stderr(&o));
    let o = shabound(&["analyze", "--curve", "[0,-1,1,0,0]", "--point", "[\"1\",\"1\"]", "--p", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: point:"), "{}", stderr(&o));
    let o = shabound(&["analyze", "--curve", "[0,-1,1,0,0]", "--point", "[\"0\",\"0\"]", "--p", "5", "--second-kernel", "[1,x]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: second_kernel:"), "{}", stderr(&o));
}

#[test]
fn analyze_huge_discriminant_exits_3() {
    // Tate normal form at b = 10^29 + 1: the minimal discriminant has 203 digits
    let b = "100000000000000000000000000001";
    let a1 = "-100000000000000000000000000000";
    let curve = format!("[\"{a1}\",\"-{b}\",\"-{b}\",\"0\",\"0\"]");
    let o = shabound_env(
        &["analyze", "--curve", &curve, "--point", "[\"0\",\"0\"]", "--p", "5"],
        "SHABOUND_FACTOR_BUDGET",
        "20000",
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("incomplete factorization"));
}

#[test]
fn matrix_examples() {
    let (_, v) = json_ok(&["matrix", "--p", "5", "--s1", "2,3", "--s2", "11,31", "--json"]);
    assert_eq!(v["rank"], "2");
    assert_eq!(strings(&v["spec"]["matrix"]["row_labels"]), ["11", "31"]);
    let (_, v) = json_ok(&["matrix", "--p", "5", "--s2", "11", "--json"]);
    assert_eq!(v["rank"], "0");
    let o = shabound(&["matrix", "--p", "5", "--s1", "2", "--s2", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("7"), "{}", stderr(&o));
}

#[test]
fn sandwich_command() {
    let (_, v) = json_ok(&["sandwich", "--p", "5", "--s2", "11", "--json"]);
    assert_eq!((v["lower_dim"].as_str(), v["upper_dim"].as_str()), (Some("0"), Some("0")));
    let (_, v) = json_ok(&["sandwich", "--p", "5", "--s1", "11", "--json"]);
    assert_eq!((v["lower_dim"].as_str(), v["upper_dim"].as_str()), (Some("0"), Some("2")));
}

#[test]
fn bounds_examples() {
    let (_, v) = json_ok(&["bounds", "--budget", "5,1,3,1", "--json"]);
    assert_eq!(v["sha_guarantee"], "1");
    let (_, v) = json_ok(&["budget", "--p", "5", "--k", "1", "--n", "3", "--deg-h", "1", "--json"]);
    assert_eq!(v["sha_guarantee"], "1");
    let (_, v) = json_ok(&["bounds", "--sum", "11", "--r", "0", "--json"]);
    assert_eq!(v["sha_from_sum"], "5");
    let (_, v) = json_ok(&["bounds", "--d", "4", "--cp", "0", "--totally-imaginary", "--zeta", "--s1", "3", "--s2", "2", "--m", "1", "--mhat", "1", "--json"]);
    assert_eq!(v["hypothesis_ok"], true);
    assert_eq!(v["advisory"], false);
    let o = shabound(&["bounds", "--d", "3", "--totally-imaginary"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: field:"));
    let o = shabound(&["bounds", "--budget", "4,1,1,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn search_box_contains_fixture_row() {
    let cfg = config_file(r#"{"p": 5, "parameter_box": 40}"#);
    let path = cfg.path().to_str().unwrap();
    let o = shabound(&["search", "--config", path, "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("tried 81"), "{}", stderr(&o));
    let text = stdout(&o);
    let report: SearchReport = serde_json::from_str(&text).unwrap();
    let row = report.row(1).expect("b = 1 row");
    assert_eq!(row.analysis.as_ref().unwrap().s2, vec![11]);
    assert_eq!(format!("{}\n", serde_json::to_string_pretty(&report).unwrap()), text);

    // worker count does not change the bytes
    let o2 = shabound(&["search", "--config", path, "--json", "--jobs", "2"]);
    assert_eq!(stdout(&o2), text);
}

#[test]
fn search_forced_primes_hit_287() {
    let cfg = config_file(r#"{"p": "5", "force_s1": ["41"], "force_s2": [11], "parameter_box": 2000}"#);
    let (_, v) = json_ok(&["search", "--config", cfg.path().to_str().unwrap(), "--json"]);
    assert_eq!(v["construction"]["base"], "287");
    assert!(v["rows"].as_array().unwrap().iter().any(|r| r["b"] == "287"));
}

#[test]
fn search_omega_zero_filters_everything() {
    let cfg = config_file(r#"{"omega_max": 0, "parameter_box": 30}"#);
    let (_, v) = json_ok(&["search", "--config", cfg.path().to_str().unwrap(), "--json"]);
    assert!(v["rows"].as_array().unwrap().is_empty());
}

#[test]
fn search_config_errors_exit_2() {
    for body in [r#"{"p": 11}"#, r#"{"force_s2": [7]}"#, r#"{"bogus": 1}"#, "not json"] {
        let cfg = config_file(body);
        let o = shabound(&["search", "--config", cfg.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}: {}", stderr(&o));
        assert!(stderr(&o).contains("config"), "{body}");
    }
    let o = shabound(&["search", "--config", "/nonexistent/shabound.json"]);
    assert_eq!(o.status.code(), Some(2));
}
