//! Binary-level checks: determinism of produced artifacts (acceptance
//! criterion 11), exit codes, and pipeline round trips.

use std::path::Path;
use std::process::Command;

fn qpix() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpix"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn qpix");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn gen_data(dir: &Path) {
    run_ok(qpix().args([
        "gen-data",
        "--out",
        dir.to_str().unwrap(),
        "--width",
        "28",
        "--height",
        "28",
        "--classes",
        "3",
        "--train-count",
        "24",
        "--test-count",
        "12",
        "--seed",
        "5",
    ]));
}

#[test]
fn criterion_11_determinism_of_checkpoints_and_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_data(&data);

    let train_args = |out: &Path, threads: &str| {
        vec![
            "--threads".into(),
            threads.to_string(),
            "train".into(),
            "--data-dir".into(),
            data.to_str().unwrap().to_string(),
            "--model".into(),
            "mps".into(),
            "--classes".into(),
            "3".into(),
            "--resize".into(),
            "16x16".into(),
            "--chi-img".into(),
            "2".into(),
            "--chi-class".into(),
            "4".into(),
            "--epochs".into(),
            "3".into(),
            "--batch-size".into(),
            "8".into(),
            "--seed".into(),
            "9".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let run_a = tmp.path().join("run_a");
    let run_b = tmp.path().join("run_b");
    run_ok(qpix().args(train_args(&run_a, "1")));
    run_ok(qpix().args(train_args(&run_b, "2")));
    for file in ["best.qpxc", "final.qpxc", "metrics.csv"] {
        let a = std::fs::read(run_a.join(file)).unwrap();
        let b = std::fs::read(run_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeded runs");
    }

    // Compression outputs are byte-identical too.
    let comp_args = |out: &Path| {
        vec![
            "compress".to_string(),
            "--data-dir".into(),
            data.to_str().unwrap().to_string(),
            "--split".into(),
            "train".into(),
            "--subset".into(),
            "3".into(),
            "--mode".into(),
            "mps".into(),
            "--chi".into(),
            "4".into(),
            "--resize".into(),
            "16x16".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let comp_a = tmp.path().join("comp_a");
    let comp_b = tmp.path().join("comp_b");
    run_ok(qpix().args(comp_args(&comp_a)));
    run_ok(qpix().args(comp_args(&comp_b)));
    for file in ["img_00000.qpxm", "img_00002.qpxm", "fidelity.csv"] {
        let a = std::fs::read(comp_a.join(file)).unwrap();
        let b = std::fs::read(comp_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeded runs");
    }
    println!("criterion 11 PASS: checkpoints, metrics CSVs and compressed images are bit-identical across reruns and thread counts");
}

#[test]
fn eval_reproduces_logged_test_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_data(&data);
    let out = tmp.path().join("run");
    run_ok(qpix().args([
        "train",
        "--data-dir",
        data.to_str().unwrap(),
        "--model",
        "mps",
        "--classes",
        "3",
        "--resize",
        "16x16",
        "--chi-img",
        "2",
        "--chi-class",
        "4",
        "--epochs",
        "4",
        "--batch-size",
        "8",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]));
    // Last CSV row's test accuracy must match eval of final.qpxc exactly.
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let logged: f64 = last.split(',').last().unwrap().parse().unwrap();
    let eval_out = run_ok(qpix().args([
        "eval",
        "--checkpoint",
        out.join("final.qpxc").to_str().unwrap(),
        "--data-dir",
        data.to_str().unwrap(),
        "--split",
        "test",
    ]));
    let reported: f64 = eval_out
        .lines()
        .find(|l| l.starts_with("accuracy:"))
        .unwrap()
        .split_whitespace()
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (reported - logged).abs() < 1e-12,
        "eval accuracy {reported} vs logged {logged}"
    );
}

#[test]
fn encode_reports_the_expected_qubit_budgets() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_data(&data);
    let out1 = run_ok(qpix().args([
        "encode",
        "--data-dir",
        data.to_str().unwrap(),
        "--subset",
        "2",
        "--resize",
        "32x32",
        "--patches",
        "1x1",
        "--out",
        tmp.path().join("enc1").to_str().unwrap(),
    ]));
    assert!(out1.contains("11 qubits"), "got: {out1}");
    let out2 = run_ok(qpix().args([
        "encode",
        "--data-dir",
        data.to_str().unwrap(),
        "--subset",
        "2",
        "--resize",
        "32x32",
        "--patches",
        "2x4",
        "--out",
        tmp.path().join("enc2").to_str().unwrap(),
    ]));
    assert!(out2.contains("64 qubits"), "got: {out2}");
}

#[test]
fn non_power_of_two_patch_fails_with_data_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_data(&data);
    // 28x28 single patch: 784 pixels is not a power of two.
    let out = qpix()
        .args([
            "encode",
            "--data-dir",
            data.to_str().unwrap(),
            "--subset",
            "1",
            "--resize",
            "28x28",
            "--patches",
            "1x1",
            "--out",
            tmp.path().join("enc").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2), "shape precondition is a usage error");

    // A missing dataset directory is a data error (exit 3).
    let out = qpix()
        .args([
            "encode",
            "--data-dir",
            tmp.path().join("nope").to_str().unwrap(),
            "--resize",
            "32x32",
            "--patches",
            "1x1",
            "--out",
            tmp.path().join("enc3").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn render_produces_monotonically_better_reconstructions() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_data(&data);
    // Compress one image at increasing bond dimension and measure the
    // decode MSE against the resized original.
    let mut errors = Vec::new();
    for &chi in &[1usize, 2, 4, 8] {
        let out = tmp.path().join(format!("c{chi}"));
        run_ok(qpix().args([
            "compress",
            "--data-dir",
            data.to_str().unwrap(),
            "--subset",
            "1",
            "--mode",
            "mps",
            "--chi",
            &chi.to_string(),
            "--resize",
            "16x16",
            "--out",
            out.to_str().unwrap(),
        ]));
        let pgm = tmp.path().join(format!("r{chi}.pgm"));
        run_ok(qpix().args([
            "render",
            "--in",
            out.join("img_00000.qpxm").to_str().unwrap(),
            "--out",
            pgm.to_str().unwrap(),
        ]));
        let fidelity_csv = std::fs::read_to_string(out.join("fidelity.csv")).unwrap();
        let err: f64 = fidelity_csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .last()
            .unwrap()
            .parse()
            .unwrap();
        errors.push(err);
        assert!(pgm.exists());
    }
    for w in errors.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-12,
            "truncation error not monotone: {errors:?}"
        );
    }
}

#[test]
fn report_emits_one_polyline_per_series() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("metrics.csv");
    std::fs::write(
        &csv,
        "epoch,train_loss,train_acc,test_acc\n0,1.0,0.3,0.2\n1,0.8,0.5,0.4\n2,0.6,0.7,0.6\n",
    )
    .unwrap();
    let svg_path = tmp.path().join("chart.svg");
    run_ok(qpix().args([
        "report",
        "--metrics-csv",
        csv.to_str().unwrap(),
        "--out",
        svg_path.to_str().unwrap(),
    ]));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert!(svg.contains("train_loss") && svg.contains("test_acc"));
}

#[test]
fn export_circuit_emits_a_valid_gate_list() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_data(&data);
    let out = tmp.path().join("cmp");
    run_ok(qpix().args([
        "compress",
        "--data-dir",
        data.to_str().unwrap(),
        "--subset",
        "1",
        "--mode",
        "mps",
        "--chi",
        "2",
        "--resize",
        "16x16",
        "--out",
        out.to_str().unwrap(),
    ]));
    let gates_path = tmp.path().join("gates.json");
    run_ok(qpix().args([
        "export-circuit",
        "--in",
        out.join("img_00000.qpxm").to_str().unwrap(),
        "--out",
        gates_path.to_str().unwrap(),
    ]));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&gates_path).unwrap()).unwrap();
    // 16x16 single patch: 9 qubits, one staircase gate per site.
    assert_eq!(parsed["n_qubits"], 9);
    assert_eq!(parsed["gates"].as_array().unwrap().len(), 9);
    let first = &parsed["gates"][0];
    let span = first["span"].as_u64().unwrap() as usize;
    assert_eq!(
        first["matrix"].as_array().unwrap().len(),
        (1 << span) * (1 << span)
    );
}
