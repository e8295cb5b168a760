use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_freeclt");
const BERNOULLI: &str = r#"{"preset": "bernoulli", "variance": 1}"#;
const SEMICIRCLE: &str = r#"{"preset": "semicircle", "variance": 1}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(csv: &str, row: usize, col: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == col).unwrap();
    lines.nth(row).unwrap().split(',').nth(k).unwrap().parse().unwrap()
}

#[test]
fn convolve_single_bernoulli() {
    let o = run(&["convolve", "--measure", BERNOULLI, "--grid", "0:0:1@2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("re_z,im_z,re_G,im_G,iterations\n"));
    assert!(field(&out, 0, "re_G").abs() < 1e-15);
    assert!((field(&out, 0, "im_G") + 0.4).abs() < 1e-15);
}

#[test]
fn convolve_two_semicircles() {
    let o = run(&["convolve", "--measure", SEMICIRCLE, "--measure", SEMICIRCLE, "--grid", "0:0:1@2"]);
    assert_eq!(o.status.code(), Some(0));
    let expected = (2.0 - 12f64.sqrt()) / 4.0;
    assert!((field(&stdout(&o), 0, "im_G") - expected).abs() < 1e-9);
    assert!((expected + 0.3660254).abs() < 1e-7);
}

#[test]
fn input_errors_exit_with_two_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = run(&["convolve", "--grid", "0:0:1@2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = run(&["convolve", "--measure", "{\"atoms\": [[0, 0.3]]}", "--grid", "0:0:1@2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["convolve", "--measure", BERNOULLI, "--grid", "0:1:2@0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["kolmogorov", "--measure", "{\"atoms\": [[0.5, 1]]}"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("variance 0"));
    let o = run(&["bai-bound", "--measure", BERNOULLI, "--strict-params"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let o = run(&[
        "convolve", "--measure", BERNOULLI, "--measure", BERNOULLI, "--measure", BERNOULLI,
        "--grid", "0.3:0.3:1@1e-6", "--max-iter", "1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge at z"));
}

#[test]
fn measure_and_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("m.json");
    std::fs::write(&spec, r#"{"atoms": [[-1, 0.5], [1, 0.5]]}"#).unwrap();
    let grid = dir.path().join("z.txt");
    std::fs::write(&grid, "# re im\n0 2\n1.5,0.5\n").unwrap();
    let out = dir.path().join("g.json");
    let o = run(&[
        "convolve", "--measure", spec.to_str().unwrap(), "--measure", BERNOULLI,
        "--grid", grid.to_str().unwrap(), "--format", "json", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    let im = rows[0]["im_g"].as_f64().unwrap();
    assert!((im + 1.0 / 8f64.sqrt()).abs() < 1e-10);
}

#[test]
fn kolmogorov_presets() {
    let o = run(&["kolmogorov", "--measure", SEMICIRCLE]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(field(&s, 0, "delta") <= field(&s, 0, "uncertainty"));

    let o = run(&["kolmogorov", "--measure", BERNOULLI, "--measure", BERNOULLI, "--normalize", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let exact = 0.25 - 1.0 / (2.0 * std::f64::consts::PI);
    let delta = v["delta"].as_f64().unwrap();
    assert!((delta - exact).abs() <= v["uncertainty"].as_f64().unwrap());
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = |t: &'static str| {
        vec![
            "diagnostics", "--measure", BERNOULLI, "--measure", BERNOULLI, "--normalize",
            "--grid", "-2:2:9@1", "--threads", t,
        ]
    };
    let one = run(&args("1"));
    let four = run(&args("4"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let s = stdout(&one);
    assert!(s.starts_with("re_z,im_z,abs_r_1,abs_r_2,abs_q,abs_Q_z1,abs_z1_minus_omega2\n"));
    for row in 0..9 {
        assert!(field(&s, row, "abs_Q_z1") <= 1e-8);
        assert!(field(&s, row, "abs_z1_minus_omega2") <= 1e-8);
    }
}

#[test]
fn rate_sweep_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.csv");
    let o = run(&["rate-sweep", "--measure", BERNOULLI, "--ns", "2,4", "--eps", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("n,L3n,L4n,delta,delta_uncertainty\n"));
    assert!((field(&table, 0, "L4n") - 0.5).abs() < 1e-12);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rates.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["eps_used"].as_f64(), Some(0.1));
    assert!(summary["fitted_exponent"].is_number());
}

#[test]
fn bai_bound_report_fields() {
    let o = run(&["bai-bound", "--measure", BERNOULLI, "--measure", BERNOULLI, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in [
        "params", "c_gamma", "term_v", "term_eps", "integral_real", "integral_vertical_sup", "bound",
        "measured_delta", "dominated",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["dominated"].as_bool(), Some(true));
}
