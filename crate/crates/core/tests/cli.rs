//! End-to-end tests of the `fbsr` binary: pinned output lines, exit
//! codes, config-file layering, and byte-identical reruns.

use std::fs;
use std::process::{Command, Output};

fn fbsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbsr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn exact_bias_prints_decimal_and_fraction() {
    let out = fbsr(&[
        "bias", "--variant", "srff", "--bits", "3", "--excess", "5", "--method", "exact",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "-0.046875 (-3/64)\n");
}

#[test]
fn deterministic_round_prints_plain_integer() {
    let out = fbsr(&[
        "round",
        "--format",
        "binary8p4",
        "--mode",
        "tne",
        "--value",
        "1.0625",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "1\n");
}

#[test]
fn closed_form_bound_accepts_the_closed_alias() {
    let out = fbsr(&["bias", "--variant", "srf", "--bits", "2", "--method", "closed"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "0\n");
}

#[test]
fn negative_values_round_by_magnitude() {
    let out = fbsr(&[
        "round",
        "--format",
        "binary8p4",
        "--mode",
        "ta",
        "--value",
        "-1.0625",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "-1.125 (-9/8)\n");
}

#[test]
fn counter_source_walks_the_draw_space() {
    let out = fbsr(&[
        "round",
        "--format",
        "binary8p4",
        "--mode",
        "srff",
        "--bits",
        "2",
        "--bit-source",
        "counter",
        "--value",
        "1.03125",
        "--count",
        "4",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "1\n1\n1\n1.125 (9/8)\n");
}

#[test]
fn usage_errors_exit_with_two() {
    let unknown_flag = fbsr(&["bias", "--variant", "srff", "--no-such-flag"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    let unknown_subcommand = fbsr(&["frobnicate"]);
    assert_eq!(unknown_subcommand.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one_and_explain() {
    let bad_preset = fbsr(&[
        "round", "--format", "nosuch", "--mode", "tne", "--value", "1.0",
    ]);
    assert_eq!(bad_preset.status.code(), Some(1));
    assert!(stderr_of(&bad_preset).starts_with("error:"));

    let unsupported = fbsr(&[
        "bias",
        "--variant",
        "src",
        "--bits",
        "3",
        "--excess",
        "5",
        "--method",
        "floorsum",
    ]);
    assert_eq!(unsupported.status.code(), Some(1));
    assert!(stderr_of(&unsupported).starts_with("error:"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bias.conf");
    fs::write(
        &path,
        "# exact enumeration setup\nvariant = srff\nbits = 3\nexcess = 5\nmethod = exact\n",
    )
    .expect("write config");
    let cfg = path.to_str().expect("utf-8 path");

    let from_file = fbsr(&["--config", cfg, "bias"]);
    assert!(from_file.status.success(), "{}", stderr_of(&from_file));
    assert_eq!(stdout_of(&from_file), "-0.046875 (-3/64)\n");

    let overridden = fbsr(&["--config", cfg, "bias", "--bits", "1"]);
    assert!(overridden.status.success(), "{}", stderr_of(&overridden));
    assert_eq!(stdout_of(&overridden), "-0.234375 (-15/64)\n");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.conf");
    fs::write(&path, "variant = srff\nbogus = 1\n").expect("write config");
    let out = fbsr(&["--config", path.to_str().expect("utf-8 path"), "bias"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("bogus"), "{}", stderr_of(&out));
}

#[test]
fn sweep_output_is_byte_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    let csv = |name: &str, threads: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = fbsr(&[
            "--threads",
            threads,
            "fig1",
            "--bits",
            "2",
            "--samples",
            "200",
            "--points",
            "16",
            "--seed",
            "9",
            "--out",
            path.to_str().expect("utf-8 path"),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        // With the CSV in a file, the per-variant summary goes to stdout.
        assert!(stdout_of(&out).contains("avg_bias_ulp="));
        fs::read(path).expect("csv written")
    };
    let first = csv("a.csv", "2");
    let second = csv("b.csv", "2");
    let serial = csv("c.csv", "1");
    assert_eq!(first, second, "same argv must reproduce the same bytes");
    assert_eq!(first, serial, "thread count must not change the bytes");

    let text = String::from_utf8(first).expect("utf-8 csv");
    assert!(text.starts_with("# command=fig1\n"), "{text}");
    for key in ["# bits=2", "# samples=200", "# points=16", "# seed=9"] {
        assert!(text.contains(key), "missing {key} in preamble:\n{text}");
    }
    assert!(text.contains("x,mean_srff,mean_srf"));
}

#[test]
fn training_run_reports_summary_flags() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("qat.csv");
    let out = fbsr(&[
        "qat",
        "--problem",
        "linreg",
        "--mode",
        "tne",
        "--steps",
        "400",
        "--out",
        path.to_str().expect("utf-8 path"),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let summary = stdout_of(&out);
    assert!(summary.contains("final_loss="), "{summary}");
    assert!(summary.contains("stagnated=true"), "{summary}");
    let text = fs::read_to_string(path).expect("csv written");
    assert!(text.starts_with("# command=qat\n"), "{text}");
    assert!(text.contains("step,loss,mean_abs_weight"), "{text}");
}

#[test]
fn formats_table_lists_the_presets() {
    let out = fbsr(&["formats"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let table = stdout_of(&out);
    for name in ["bfloat16", "binary8p4", "p3"] {
        assert!(table.contains(name), "missing {name}:\n{table}");
    }
    assert!(table.contains("240"), "largest binary8p4 value:\n{table}");
    assert!(table.contains("57344"), "largest p3 value:\n{table}");
}
