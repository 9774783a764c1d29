//! Integration tests for the command-line binary: exit-code contract,
//! JSON schemas, determinism, and input validation.

use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isopair-lab"))
        .args(args)
        .output()
        .expect("binary must launch")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isopair-lab"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary must launch")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal termination")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout must be JSON ({e}); got: {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn usage_without_arguments_exits_two() {
    let out = run(&[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_input_file_exits_two() {
    let out = run(&["check-inner-toral", "--poly", "/nonexistent/poly.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).starts_with("error:"));
}

#[test]
fn malformed_json_reports_position_and_exits_two() {
    let out = run(&["check-inner-toral", "--poly", &fixture("malformed.json")]);
    assert_eq!(code(&out), 2);
    let err = stderr_text(&out);
    assert!(err.contains("malformed"), "stderr was: {err}");
    assert!(err.contains("line 1"), "stderr was: {err}");
}

#[test]
fn inner_toral_certification_passes_on_the_parabola() {
    let out = run(&["check-inner-toral", "--poly", &fixture("parabola.json")]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["command"], "check-inner-toral");
    assert_eq!(v["verdict"], "pass");
    assert!(v["z_direction"]["boundary_max_deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn inner_toral_refutation_carries_witnesses_and_exits_one() {
    let out = run(&["check-inner-toral", "--poly", &fixture("zw_minus_one.json")]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "fail");
    let witnesses = v["z_direction"]["witnesses"].as_array().unwrap().len()
        + v["w_direction"]["witnesses"].as_array().unwrap().len();
    assert!(witnesses > 0, "refutation must name witnesses");
}

#[test]
fn realize_reconstructs_the_split_disk_transfer_function() {
    let out = run(&["realize", "--colligation", &fixture("split_disk.json")]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["command"], "realize");
    assert_eq!(v["verdict"], "pass");
    assert!(v["held_out_error"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn rank_pipeline_passes_on_the_shuffle_with_the_parabola() {
    let out = run(&[
        "rank",
        "--colligation",
        &fixture("shuffle.json"),
        "--factors",
        &fixture("parabola_factors.json"),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "rank");
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["alpha"], serde_json::json!([1]));
    assert_eq!(v["identities"]["m_consistent"], true);
    assert_eq!(v["identities"]["n_consistent"], true);
    assert_eq!(v["checks"]["stability"], true);
}

#[test]
fn rank_output_is_byte_identical_across_reruns() {
    let args = [
        "rank",
        "--colligation",
        &fixture("split_disk.json"),
        "--factors",
        &fixture("split_factors.json"),
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "reports must be reproducible");
}

#[test]
fn rank_rejects_structurally_inconsistent_inputs() {
    let out = run(&[
        "rank",
        "--colligation",
        &fixture("shuffle.json"),
        "--factors",
        &fixture("cusp_factors.json"),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("inconsistent M/N"));
}

#[test]
fn kernel_triple_certifies_on_the_shuffle_with_the_parabola() {
    let out = run(&[
        "kernel",
        "--colligation",
        &fixture("shuffle.json"),
        "--poly",
        &fixture("parabola.json"),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "kernel");
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["alpha"], 1);
    assert_eq!(v["basis_frame_complete"], true);
    assert_eq!(v["ranks"]["q_base"], 1);
    assert!(v["residuals"]["kernel_identity"].as_f64().unwrap() <= 1e-8);
    assert!(v["q"]["shape"].is_array() && v["p"]["shape"].is_array());
}

#[test]
fn ideal_reports_the_expected_quotient_for_the_parabola_and_z() {
    let out = run(&["ideal", "--factors", &fixture("exact_parabola_z.json")]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "ideal");
    assert_eq!(v["order"], "lex_zw", "order tag from the file must win");
    assert_eq!(v["quotient_dim"], 2);
    assert_eq!(v["normal_set"], serde_json::json!([[0, 0], [0, 1]]));
    assert_eq!(v["relatively_prime"], true);
    assert_eq!(v["cofactors_verified"], true);
    assert_eq!(v["members_reduce_to_zero"], true);
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn ideal_detects_proportional_generators() {
    let out = run(&["ideal", "--factors", &fixture("exact_proportional.json")]);
    assert_eq!(code(&out), 0, "the computation itself is still certified");
    let v = stdout_json(&out);
    assert_eq!(v["quotient_dim"], "infinite");
    assert_eq!(v["relatively_prime"], false);
    assert!(v["normal_set"].is_null());
}

#[test]
fn defect_stabilizes_at_zero_on_the_split_disk_with_both_factors() {
    let out = run(&[
        "defect",
        "--colligation",
        &fixture("split_disk.json"),
        "--factors",
        &fixture("split_factors.json"),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "defect");
    assert_eq!(v["generators"], 2);
    assert_eq!(v["codims"], serde_json::json!([0, 0, 0]));
    assert_eq!(v["stabilized"], true);
    assert_eq!(v["value"], 0);
}

#[test]
fn defect_refuses_both_poly_and_factors() {
    let out = run(&[
        "defect",
        "--colligation",
        &fixture("split_disk.json"),
        "--poly",
        &fixture("split.json"),
        "--factors",
        &fixture("split_factors.json"),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn report_runs_all_stages_on_the_parabola_bundle() {
    let out = run(&[
        "report",
        "--colligation",
        &fixture("shuffle.json"),
        "--poly",
        &fixture("parabola.json"),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "report");
    assert_eq!(v["verdict"], "pass");
    for stage in ["inner_toral", "realization", "rank", "kernel", "defect"] {
        let status = &v["stages"][stage]["status"];
        assert_eq!(status, "pass", "stage {stage} was {status}");
    }
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let out = run_env(
        &["check-inner-toral", "--poly", &fixture("parabola.json")],
        "ISOPAIR_LAB_THREADS",
        "zero",
    );
    assert_eq!(code(&out), 2);
    let ok = run_env(
        &["check-inner-toral", "--poly", &fixture("parabola.json")],
        "ISOPAIR_LAB_THREADS",
        "3",
    );
    assert_eq!(code(&ok), 0);
    assert!(stderr_text(&ok).contains("thread cap 3"));
}
