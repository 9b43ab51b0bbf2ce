//! End-to-end tests of the compiled binary: artifact schemas, determinism,
//! exit codes, and the empirical access-probability cross-check.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aoikit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const BASE: &str = r#"
[scenario]
devices = 10
frame_secs = 0.1
lambda = 0.5
p_access = 1.0
po_semantics = "success-factor"

[channel]
path_loss_exp = 3.8
noise_power_w = 1e-13
bandwidth_hz = 100000.0
blocklength = 400
log2m_bits = 23.253496664211536
ref_snr_db = -5.0

[link]
power_w = 0.2
distance_m = 100.0

[qos]
peak_aoi_threshold = 3.0
delay_threshold_frames = 12
ec_threshold = 0.02
aoi_exponent = 1.5
delay_exponent = 0.5
lagrange_multiplier = 1.0
"#;

/// Small two-subchannel instance that trains in well under a second.
const TINY_TRAIN: &str = r#"
[scenario]
devices = 3
subchannels = 2
frame_secs = 0.1
lambda = 0.5
p_access = 0.5
po_semantics = "success-factor"

[channel]
path_loss_exp = 3.8
noise_power_w = 1e-13
bandwidth_hz = 10000.0
blocklength = 250
log2m_bits = 2000.0

[link]
power_w = 0.1
distance_m = 150.0

[qos]
peak_aoi_threshold = 4.0
delay_threshold_frames = 5
ec_threshold = 4.0
aoi_exponent = 1.5
delay_exponent = 0.01
lagrange_multiplier = 0.5

[env]
epochs = 10
access_grid = [0.6, 1.0]
discount = 0.9
bandwidth_hz = [10000.0, 5000.0]
distance_min_m = 50.0
distance_max_m = 300.0
eps_bar_samples = 200

[train]
episodes = 30
minibatch = 4
replay_capacity = 500
eps_decay_episodes = 20
"#;

#[test]
fn bounds_rerun_is_byte_identical_and_row_count_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&[
            "bounds",
            "--config",
            &cfg,
            "--sweep",
            "blocklength=100:600:6",
            "--seed",
            "3",
            "--out",
            &out.display().to_string(),
        ]);
        assert!(o.status.success(), "{}", stderr_of(&o));
    }
    let a = fs::read(out_a.join("bounds.csv")).unwrap();
    let b = fs::read(out_b.join("bounds.csv")).unwrap();
    assert_eq!(a, b, "reruns with the same seed must be byte-identical");
    let meta_a = fs::read(out_a.join("bounds_meta.json")).unwrap();
    let meta_b = fs::read(out_b.join("bounds_meta.json")).unwrap();
    assert_eq!(meta_a, meta_b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 7, "header plus one row per sweep point");
    assert!(text.starts_with("sweep_param,sweep_value,devices,rb_count,"));
}

#[test]
fn unknown_sweep_parameter_exits_2_and_lists_every_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let o = run(&[
        "bounds",
        "--config",
        &cfg,
        "--sweep",
        "p_acess=0.1,0.2",
        "--out",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_of(&o);
    for name in aoikit_core::config::SWEEPABLE {
        assert!(err.contains(name), "stderr should list '{name}': {err}");
    }
    assert!(!dir.path().join("bounds.csv").exists(), "no artifact on usage error");
}

#[test]
fn missing_config_field_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = BASE.replace("blocklength = 400\n", "");
    let cfg = write_config(dir.path(), "broken.toml", &broken);
    let o = run(&["bounds", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr_of(&o).contains("blocklength"),
        "error should name the missing field: {}",
        stderr_of(&o)
    );
}

#[test]
fn conflicting_stop_conditions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let o = run(&["simulate", "--config", &cfg, "--updates", "10", "--frames", "10"]);
    assert!(!o.status.success());
}

#[test]
fn saturated_simulation_matches_the_access_closed_form() {
    // Decoding pinned to always-fail keeps every device backlogged, so the
    // all-backlogged contention formula is exact and the empirical access
    // success rate must match it to Monte-Carlo accuracy.
    let dir = tempfile::tempdir().unwrap();
    let saturated = BASE
        .replace("ref_snr_db = -5.0", "force_decode_error = 1.0")
        .replace("lambda = 0.5", "lambda = 0.02");
    let cfg = write_config(dir.path(), "sat.toml", &saturated);
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        &cfg,
        "--frames",
        "3000",
        "--out",
        &out.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let emp = summary["empirical_p_succ"].as_f64().unwrap();
    let ana = summary["analytic_p_succ_all_backlogged"].as_f64().unwrap();
    let attempts = summary["attempts"].as_u64().unwrap();
    assert!(attempts > 20_000, "saturated run should attempt every frame");
    let se = (ana * (1.0 - ana) / attempts as f64).sqrt();
    assert!(
        (emp - ana).abs() <= 3.0 * se,
        "empirical {emp} vs closed form {ana} (3 s.e. = {:.2e})",
        3.0 * se
    );
    // Nothing ever decodes, so no updates and no validity verdict.
    assert_eq!(summary["updates_delivered"].as_u64(), Some(0));
    assert!(summary["validity_check"].is_null());
}

#[test]
fn simulate_is_fast_and_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let out = dir.path().join("out");
    let started = std::time::Instant::now();
    let o = run(&[
        "simulate",
        "--config",
        &cfg,
        "--updates",
        "5000",
        "--out",
        &out.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    assert!(started.elapsed().as_secs() < 1, "tiny run should finish in under a second");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["updates_delivered"].as_u64().unwrap() >= 5000);
    assert_eq!(summary["config"]["scenario"]["devices"].as_u64(), Some(10));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 5000);
    assert!(trace.starts_with("device,"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let out = dir.path().join("from_env");
    let o = bin()
        .args(["bounds", "--config", &cfg])
        .env("AOIKIT_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr_of(&o));
    assert!(out.join("bounds.csv").exists());
}

#[test]
fn train_writes_curves_checkpoints_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.toml", TINY_TRAIN);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&[
            "train",
            "--config",
            &cfg,
            "--algo",
            "both",
            "--seeds",
            "2",
            "--seed",
            "11",
            "--out",
            &out.display().to_string(),
        ]);
        assert!(o.status.success(), "{}", stderr_of(&o));
    }
    let mut curves = 0;
    for algo in ["ddqn", "dueling"] {
        for seed in 0..2 {
            let name = format!("curve_{algo}_seed{seed}.csv");
            let a = fs::read(out_a.join(&name)).unwrap();
            let b = fs::read(out_b.join(&name)).unwrap();
            assert_eq!(a, b, "{name} must be reproducible");
            let text = String::from_utf8(a).unwrap();
            assert_eq!(text.lines().next().unwrap(), "episode,return,violation,loss,discounted,exploration");
            assert_eq!(text.lines().count(), 31, "header + one row per episode");
            assert!(out_a.join(format!("checkpoint_{algo}_seed{seed}.json")).exists());
            curves += 1;
        }
    }
    assert_eq!(curves, 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("train_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["comparison"]["seeds"].as_u64(), Some(2));
}

#[test]
fn evaluate_runs_a_checkpoint_and_rejects_shape_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.toml", TINY_TRAIN);
    let out = dir.path().join("t");
    let o = run(&[
        "train", "--config", &cfg, "--algo", "ddqn", "--out", &out.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let ckpt = out.join("checkpoint_ddqn_seed0.json").display().to_string();

    let o = run(&[
        "evaluate",
        "--config",
        &cfg,
        "--checkpoint",
        &ckpt,
        "--episodes",
        "3",
        "--out",
        &out.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("evaluate.json")).unwrap()).unwrap();
    assert_eq!(report["returns"].as_array().unwrap().len(), 3);
    assert!(report["mean_return"].as_f64().unwrap().is_finite());

    // A scenario with a different device count has a different observation
    // and action shape; the checkpoint must be refused.
    let other = TINY_TRAIN.replace("devices = 3", "devices = 4");
    let cfg_other = write_config(dir.path(), "other.toml", &other);
    let o = run(&["evaluate", "--config", &cfg_other, "--checkpoint", &ckpt]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_of(&o).contains("does not match"), "{}", stderr_of(&o));
}

#[test]
fn validate_subcommand_reports_every_check_and_exits_zero() {
    let o = run(&["validate"]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let passes = text.lines().filter(|l| l.starts_with("PASS")).count();
    let fails = text.lines().filter(|l| l.starts_with("FAIL")).count();
    assert_eq!(fails, 0, "{text}");
    assert!(passes >= 15, "expected the full table, saw {passes} PASS lines");
}
