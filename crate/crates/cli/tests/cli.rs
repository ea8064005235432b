use std::path::{Path, PathBuf};
use std::process::Command;

use kdeverify::imdp_file::read_imdp;
use kdeverify::output::{Heatmap, StrategyMap};
use kdeverify::samples::{format_samples, read_samples};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn kdeverify(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_kdeverify"))
        .args(args)
        .output()
        .expect("binary runs");
    Out {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes `text` as `name` inside `dir` and returns its path.
fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn case_study(replace: &[(&str, &str)]) -> String {
    let mut t = std::fs::read_to_string(fixture("case_study.toml")).unwrap();
    for (a, b) in replace {
        assert!(t.contains(a), "fixture lacks {a}");
        t = t.replace(a, b);
    }
    t
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn sample_file_round_trip_is_byte_identical() {
    let text = std::fs::read_to_string(fixture("samples_100.csv")).unwrap();
    let data = read_samples(&fixture("samples_100.csv")).unwrap();
    assert_eq!(data.len(), 100);
    assert_eq!(format_samples(&data), text);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("copy.csv");
    kdeverify::samples::write_samples(&p, &data).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), text.as_bytes());
}

#[test]
fn estimate_lc_on_example5_contains_the_true_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdeverify(&["estimate-lc", "--config", s(&fixture("example5.toml")), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = read_json(&dir.path().join("lc_report.json"));
    let iv = &v["reports"][0]["interval"];
    let (lo, hi) = (iv[0].as_f64().unwrap(), iv[1].as_f64().unwrap());
    assert!(lo <= 0.1210 && 0.1210 <= hi, "[{lo}, {hi}]");
    assert!(o.stdout.contains("L_hat") && o.stdout.contains("suggested delta"));
    assert!(dir.path().join("lc_summary.txt").exists());
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("example5.toml"))
        .unwrap()
        .replace("n = 60000", "n = 3000")
        .replace("m = 20", "m = 3");
    let cfg = write_config(dir.path(), "small.toml", &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = kdeverify(&["estimate-lc", "--config", s(&cfg), "--out", s(out), "--seed", "5", "--threads", "1"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
    }
    let ra = std::fs::read(a.join("lc_report.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("lc_report.json")).unwrap());
    let c = dir.path().join("c");
    kdeverify(&["estimate-lc", "--config", s(&cfg), "--out", s(&c), "--seed", "6"]);
    assert_ne!(ra, std::fs::read(c.join("lc_report.json")).unwrap());
}

#[test]
fn missing_smoothness_constant_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("example5.toml"))
        .unwrap()
        .replace("c_f = 1.0\n", "");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let o = kdeverify(&["estimate-lc", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("C_f") && o.stderr.contains("lc.c_f"), "{}", o.stderr);
}

#[test]
fn unknown_fields_and_systems_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", &case_study(&[("case_study_1", "nope")]));
    let o = kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("system.builtin"), "{}", o.stderr);
    let cfg = write_config(dir.path(), "b.toml", &case_study(&[("delta = 0.4", "delta = 0.4\ncolour = 1")]));
    assert_eq!(kdeverify(&["build-imdp", "--config", s(&cfg)]).code, 2);
}

#[test]
fn model_based_build_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdeverify(&["build-imdp", "--config", s(&fixture("case_study.toml")), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let m = read_imdp(&dir.path().join("imdp.json")).unwrap();
    assert_eq!(m.n_states(), 26);
    assert!(m.is_degenerate());
    let manifest: serde_json::Value = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["n_cells"], 25);
    assert_eq!(manifest["method"], "model_based");
    assert_eq!(manifest["config"]["seed"], 3);

    let vdir = dir.path().join("v");
    let imdp = dir.path().join("imdp.json");
    let o = kdeverify(&[
        "verify",
        "--config",
        s(&fixture("case_study.toml")),
        "--imdp",
        s(&imdp),
        "--out",
        s(&vdir),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let h: Heatmap = read_json(&vdir.join("heatmap.json"));
    assert_eq!(h.p_lo, h.p_up);
    assert_eq!(h.p_lo.len(), 25);
    // The two D cells sit at the start of the first row.
    assert_eq!(h.p_lo[0], 1.0);
    assert_eq!(h.p_lo[1], 1.0);
    assert!(!vdir.join("strategy_map.json").exists());
}

#[test]
fn fine_grid_heatmap_separates_target_and_obstacle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &case_study(&[("delta = 0.4", "delta = 0.1")]));
    let o = kdeverify(&["verify", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let h: Heatmap = read_json(&dir.path().join("heatmap.json"));
    assert_eq!(h.grid.counts, vec![20, 20]);
    let at = |x: f64, y: f64| {
        let (i, j) = ((x / 0.1) as usize, (y / 0.1) as usize);
        h.p_up[j * 20 + i]
    };
    // Inside D the value is one, on O it is zero.
    assert_eq!(at(0.35, 0.15), 1.0);
    assert_eq!(at(1.65, 1.85), 0.0);
    // Elsewhere the abstraction stays within the closeness bound of direct simulation
    // of the true system, with leaving the domain counted as failure.
    let sys = kdeverify_core::systems::presets::case_study_1();
    for (k, &(x, y)) in [(0.45, 0.45), (1.05, 1.05), (1.95, 0.05), (0.05, 1.95), (1.25, 0.75)].iter().enumerate() {
        let mc = simulate_reach_avoid(&sys, &[x, y], 20_000, k as u64);
        assert!((mc - at(x, y)).abs() <= 0.1, "({x}, {y}): simulated {mc}, abstraction {}", at(x, y));
    }
    assert!(h.p_lo.iter().zip(&h.p_up).all(|(a, b)| a == b));
}

/// Fraction of simulated paths that reach D within three steps without touching O
/// or leaving `[0, 2]²`.
fn simulate_reach_avoid(sys: &kdeverify_core::systems::BuiltinSystem, x0: &[f64], runs: usize, seed: u64) -> f64 {
    use kdeverify_core::systems::TransitionSampler;
    let mut rng = kdeverify_core::stream_rng(seed, kdeverify_core::StreamTag::Scratch, 0);
    let inside = |p: &[f64], r: [[f64; 2]; 2]| r[0][0] <= p[0] && p[0] <= r[0][1] && r[1][0] <= p[1] && p[1] <= r[1][1];
    let dom = [[0.0, 2.0], [0.0, 2.0]];
    let (o, d) = ([[1.2, 2.0], [1.6, 2.0]], [[0.0, 0.8], [0.0, 0.4]]);
    let mut hits = 0;
    for _ in 0..runs {
        let mut p = x0.to_vec();
        for _ in 0..3 {
            p = sys.sample_transition(&p, "a1", &mut rng).unwrap();
            if !inside(&p, dom) || inside(&p, o) {
                break;
            }
            if inside(&p, d) {
                hits += 1;
                break;
            }
        }
    }
    hits as f64 / runs as f64
}

#[test]
fn zero_horizon_gives_the_target_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "z.toml", &case_study(&[("!O U<=3 D", "F<=0 D")]));
    let o = kdeverify(&["verify", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let h: Heatmap = read_json(&dir.path().join("heatmap.json"));
    let expected: Vec<f64> = (0..25).map(|c| if c < 2 { 1.0 } else { 0.0 }).collect();
    assert_eq!(h.p_lo, expected);
    assert_eq!(h.p_up, expected);
}

#[test]
fn threshold_query_reports_verdict_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", &case_study(&[("\"!O U<=3 D\"", "\"P>=0.8 [ !O U<=3 D ]\"")]));
    let o = kdeverify(&["verify", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let line = o.stdout.lines().find(|l| l.starts_with("verdicts:")).expect("verdict line");
    let nums: Vec<usize> = line
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(nums.iter().sum::<usize>(), 26);
    // Point intervals leave nothing undecided.
    assert_eq!(nums[2], 0);
}

#[test]
fn npe_build_from_the_simulator_satisfies_the_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n.toml",
        &case_study(&[("method = \"model_based\"", "method = \"npe\"\nn = 2000")]),
    );
    let o = kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    // Reading validates the sandwich and ordering invariants again.
    let m = read_imdp(&dir.path().join("imdp.json")).unwrap();
    assert!(!m.is_degenerate());
    let manifest: serde_json::Value = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["npe_samples"][0], 2000);
    assert_eq!(manifest["x_grid"], 3);
}

#[test]
fn empirical_budget_overrun_reports_the_required_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.toml",
        &case_study(&[
            ("method = \"model_based\"", "method = \"empirical\"\neps_g = 0.2\nbeta_bar = 0.1"),
            ("delta = 0.4", "delta = 0.1"),
        ]),
    );
    let o = kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 3, "{}", o.stderr);
    // eps_bar = 0.2 / 2400, N = 1 / (4 * 0.1 * eps_bar^2) = 360,000,000.
    assert!(o.stderr.contains("360000000"), "{}", o.stderr);
}

#[test]
fn empirical_build_on_the_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.toml",
        &case_study(&[("method = \"model_based\"", "method = \"empirical\"\neps_bar = 0.05\nbeta_bar = 0.1")]),
    );
    let o = kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let manifest: serde_json::Value = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["samples_per_row"], 1000);
}

#[test]
fn non_divisible_delta_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", &case_study(&[("delta = 0.4", "delta = 0.3")]));
    assert_eq!(kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]).code, 2);
}

#[test]
fn closeness_budget_sets_a_dividing_delta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "k.toml",
        &case_study(&[(
            "delta = 0.4",
            "[abstraction.closeness]\nepsilon = 0.1\nhorizon = 3\nlipschitz = 0.0722",
        )]),
    );
    let o = kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let manifest: serde_json::Value = read_json(&dir.path().join("manifest.json"));
    // 0.1 / (3 * 0.0722 * 0.64) = 0.7214 rounds down to 2/3.
    assert_eq!(manifest["n_cells"], 9);
    let d = manifest["delta"][0].as_f64().unwrap();
    assert!((d - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn switched_system_emits_strategy_maps_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", &case_study(&[("case_study_1", "case_study_2")]));
    for mode in ["paper", "robust"] {
        let out = dir.path().join(mode);
        let o = kdeverify(&["verify", "--config", s(&cfg), "--out", s(&out), "--mode", mode]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let sm: StrategyMap = read_json(&out.join("strategy_map.json"));
        assert_eq!(sm.actions, vec!["a1", "a2"]);
        assert_eq!(sm.first_step_max.len(), 25);
        assert_eq!(sm.table_max.len(), 3);
        let r: serde_json::Value = read_json(&out.join("result.json"));
        assert_eq!(r["result"]["mode"], mode);
    }
}

#[test]
fn json_configs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
  "seed": 2,
  "system": {"builtin": "case_study_1"},
  "abstraction": {"method": "model_based", "delta": 1.0},
  "spec": {"formula": "F<=1 D", "labels": [{"name": "D", "regions": [[[0.0, 1.0], [0.0, 1.0]]]}]}
}"#;
    let cfg = write_config(dir.path(), "c.json", text);
    let o = kdeverify(&["verify", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
}

#[test]
fn sample_file_systems_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("from_samples.toml");
    let o = kdeverify(&["estimate-lc", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = read_json(&dir.path().join("lc_report.json"));
    assert_eq!(v["reports"][0]["n"], 50);
    let o = kdeverify(&["verify", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("verdicts:"));
}

#[test]
fn underflowing_kernel_weights_are_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_config(dir.path(), "one.csv", "d=2,action=a1\n0,0,0.1,0.1\n");
    let text = std::fs::read_to_string(fixture("from_samples.toml"))
        .unwrap()
        .replace("samples_100.csv", s(&csv))
        .replace("x_grid = 2", "x_grid = 2\nbandwidth = { h_x = [0.001, 0.001], h_y = [0.5, 0.5] }");
    let cfg = write_config(dir.path(), "u.toml", &text);
    let o = kdeverify(&["build-imdp", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.code, 4, "{}", o.stderr);
}

#[test]
fn reproduce_rejects_unknown_cases_and_runs_known_ones() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdeverify(&["reproduce", "nope", "--out", s(dir.path())]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("example5"));
    let o = kdeverify(&["reproduce", "example5", "--seeds", "1", "--out", s(dir.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let table = std::fs::read_to_string(dir.path().join("example5/table.md")).unwrap();
    assert!(table.contains("interval contains L") && table.contains("PASS"));
    assert!(dir.path().join("example5/results.json").exists());
}

#[test]
fn missing_config_and_bad_flags_exit_with_validation_code() {
    assert_eq!(kdeverify(&["estimate-lc"]).code, 2);
    assert_eq!(kdeverify(&["verify", "--mode", "sideways"]).code, 2);
}
