//! End-to-end command-line behavior: flag validation, file ingestion, exit
//! codes, and output formats.

mod common;

use std::path::PathBuf;
use std::process::Command;

use cp_altls::solver::Variant;
use cp_altls_cli::{cmd_decompose, cmd_lemma_suite, DecomposeConfig, LemmaSuiteConfig};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cpaltls"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cpaltls-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_errors_exit_1() {
    let out = binary().arg("experiment").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("usage"), "stderr: {stderr}");

    let out = binary()
        .args(["experiment", "--preset", "bogus", "--output", "/tmp/x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_tensor_exits_2_with_location() {
    let dir = temp_dir("badparse");
    let input = dir.join("bad.tensor");
    std::fs::write(&input, "3\n2 2 2\n1 2 3 4 5 banana 7 8\n").unwrap();
    let out = binary()
        .args([
            "decompose",
            "--input",
            input.to_str().unwrap(),
            "--rank",
            "1",
            "--output",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn zero_tensor_collapse_exits_3() {
    let dir = temp_dir("zero");
    let input = dir.join("zero.tensor");
    std::fs::write(&input, "3\n2 2 2\n0 0 0 0 0 0 0 0\n").unwrap();
    let out = binary()
        .args([
            "decompose",
            "--input",
            input.to_str().unwrap(),
            "--rank",
            "1",
            "--output",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("degenerate"), "stderr: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unwritable_output_fails_nonzero() {
    let dir = temp_dir("unwritable");
    let blocker = dir.join("blocker");
    std::fs::write(&blocker, "file, not a directory").unwrap();
    let out = binary()
        .args([
            "lemma-suite",
            "--instances",
            "1",
            "--output",
            blocker.join("suite.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rank_one_tensor_converges_in_few_iterations() {
    let dir = temp_dir("rank1");
    let input = dir.join("rank1.tensor");
    common::write_synthetic_tensor(&input, &[4, 5, 6], 1, 21);
    let config = DecomposeConfig {
        input,
        rank: 1,
        variant: Variant::Serial,
        seed: 2,
        output: dir.join("out"),
        no_timestamp: true,
        max_iters: 5,
        tol: 1e-12,
    };
    let outcome = cmd_decompose(&config).unwrap();
    assert!(
        outcome.final_relative_error < 1e-10,
        "relative error {:e}",
        outcome.final_relative_error
    );
    let csv = std::fs::read_to_string(&outcome.trace_path).unwrap();
    let data_rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert!(data_rows <= 6, "took {} iterations", data_rows - 1);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rank_above_extent_warns_but_runs() {
    let dir = temp_dir("overrank");
    let input = dir.join("small.tensor");
    common::write_synthetic_tensor(&input, &[2, 6, 6], 2, 33);
    let config = DecomposeConfig {
        input,
        rank: 4,
        variant: Variant::Serial,
        seed: 1,
        output: dir.join("out"),
        no_timestamp: true,
        max_iters: 15,
        tol: 1e-8,
    };
    let outcome = cmd_decompose(&config).unwrap();
    assert!(outcome.rank_warning);
    assert!(outcome.model_path.exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn binary_tensor_ingestion() {
    let dir = temp_dir("binary");
    let input = dir.join("tensor.dten");
    // synthesize, then store in the binary format
    let mut rng = cp_altls::rng::StreamRng::new(5, cp_altls::rng::Stream::Cyclic);
    let data: Vec<f64> = (0..24).map(|_| rng.normal()).collect();
    let tensor = cp_altls::DenseTensor::new(vec![2, 3, 4], data).unwrap();
    let mut bytes = Vec::new();
    cp_altls::io::write_tensor_binary(&tensor, &mut bytes).unwrap();
    std::fs::write(&input, bytes).unwrap();

    let out = binary()
        .args([
            "decompose",
            "--input",
            input.to_str().unwrap(),
            "--rank",
            "2",
            "--max-iters",
            "10",
            "--output",
            dir.join("out").to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out.model").exists());
    assert!(dir.join("out.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn lemma_suite_single_instance_is_deterministic() {
    let dir = temp_dir("lemma1");
    let mut outputs = Vec::new();
    for round in 0..2 {
        let path = dir.join(format!("suite-{round}.csv"));
        let outcome = cmd_lemma_suite(&LemmaSuiteConfig {
            instances: 1,
            seed: 4,
            output: path.clone(),
            no_timestamp: true,
        })
        .unwrap();
        assert_eq!(outcome.rows, 8);
        assert_eq!(outcome.violations, 0);
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 9, "header plus one row per oracle");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn lemma_suite_exit_code_on_success() {
    let dir = temp_dir("lemmaexit");
    let out = binary()
        .args([
            "lemma-suite",
            "--instances",
            "2",
            "--output",
            dir.join("suite.csv").to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn hybrid_preset_marks_phases_in_csv() {
    let dir = temp_dir("hybrid");
    let out = binary()
        .args([
            "experiment",
            "--preset",
            "hybrid-cyclic",
            "--seeds",
            "0",
            "--omega",
            "0.5",
            "--reduced-iters",
            "3",
            "--regular-iters",
            "4",
            "--output",
            dir.to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("hybrid-cyclic_s0_w0.5.csv")).unwrap();
    assert!(csv.contains("# phase_boundary_iteration=4"));
    assert!(csv.contains(",reduced,"));
    assert!(csv.contains(",regular,"));
    assert!(csv.contains("iteration,epsilon,rel_error,weight_error,phase,wall_seconds"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn experiment_csv_headers_and_ordering() {
    let dir = temp_dir("headers");
    let out = binary()
        .args([
            "experiment",
            "--preset",
            "odeco3",
            "--seeds",
            "5",
            "--output",
            dir.to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("odeco3_s5.csv")).unwrap();
    let mut lines = csv.lines();
    // comment block first, then the fixed header, then iteration 0
    let mut line = lines.next().unwrap();
    while line.starts_with('#') {
        line = lines.next().unwrap();
    }
    assert_eq!(line, "iteration,epsilon,rel_error,weight_error,phase,wall_seconds");
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"), "first data row: {first}");
    assert!(first.ends_with(",init,"));

    // the epsilon column descends strictly to below 1e-12
    let eps: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("iteration"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]), "eps not decreasing: {eps:?}");
    assert!(*eps.last().unwrap() < 1e-12);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn weights_preset_writes_both_generators_with_weight_errors() {
    let dir = temp_dir("weights");
    let out = binary()
        .args([
            "experiment",
            "--preset",
            "weights",
            "--seeds",
            "1",
            "--output",
            dir.to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for name in ["weights-odeco3_s1.csv", "weights-ideco3_s1.csv"] {
        let csv = std::fs::read_to_string(dir.join(name)).unwrap();
        let with_weight_error = csv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("iteration"))
            .filter(|l| !l.split(',').nth(3).unwrap().is_empty())
            .count();
        assert!(with_weight_error >= 2, "{name}: weight_error column empty");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn hybrid_preset_emits_one_csv_per_omega() {
    let dir = temp_dir("omega-grid");
    let out = binary()
        .args([
            "experiment",
            "--preset",
            "hybrid-cyclic",
            "--seeds",
            "2",
            "--reduced-iters",
            "2",
            "--regular-iters",
            "2",
            "--output",
            dir.to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let files: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(files.len(), 5, "expected one file per omega: {files:?}");
    for omega in ["0", "0.25", "0.5", "0.75", "1"] {
        assert!(
            files.iter().any(|f| f == &format!("hybrid-cyclic_s2_w{omega}.csv")),
            "missing omega {omega} in {files:?}"
        );
    }
    let _ = std::fs::remove_dir_all(&dir);
}
