use std::path::Path;
use std::process::{Command, Output};

use sandwich_cli::record::TrialRecord;

fn sandwich(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sandwich"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn k4_file(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("k4.txt");
    std::fs::write(&p, "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    p
}

#[test]
fn probe_counts_perfect_matchings_of_k4() {
    let dir = tempfile::tempdir().unwrap();
    let host = k4_file(dir.path());
    let o = sandwich(&[
        "probe",
        "--host",
        path_str(&host),
        "--target",
        "1 1 1 1",
        "--edge",
        "0 1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1/3 (1 of 3 factors)");

    let o = sandwich(&[
        "probe",
        "--host",
        path_str(&host),
        "--target",
        "0 1 1 0",
        "--edge",
        "0 1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("0 "), "{}", stdout(&o));

    let o = sandwich(&[
        "probe",
        "--host",
        path_str(&host),
        "--target",
        "1 1 1 1",
        "--edge",
        "0 1",
        "--estimator",
        "heuristic",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "0.25 (heuristic)");
}

#[test]
fn probe_names_the_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "4 2\n0 1\nzero two\n").unwrap();
    let o = sandwich(&[
        "probe",
        "--host",
        path_str(&bad),
        "--target",
        "1 1 1 1",
        "--edge",
        "0 1",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

fn read_lines(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p).unwrap().lines().map(String::from).collect()
}

#[test]
fn run_is_byte_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, threads, trials) in [("a", "1", "1"), ("b", "1", "1"), ("c", "1", "40"), ("d", "4", "40")] {
        let out = dir.path().join(format!("{name}.jsonl"));
        let o = sandwich(&[
            "run",
            "--trials",
            trials,
            "--seed",
            "5",
            "--threads",
            threads,
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let summary = std::fs::read(format!("{}.summary.json", out.display())).unwrap();
        outputs.push((std::fs::read(&out).unwrap(), summary));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
}

#[test]
fn exact_run_is_sandwiched_unless_ind_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.jsonl");
    let o = sandwich(&[
        "run",
        "--n",
        "5",
        "--d",
        "2",
        "--estimator",
        "exact",
        "--trials",
        "1000",
        "--seed",
        "11",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines = read_lines(&out);
    assert_eq!(lines.len(), 1000);
    for (i, line) in lines.iter().enumerate() {
        let key_at = |k: &str| {
            line.find(&format!("\"{k}\""))
                .unwrap_or_else(|| panic!("{k} missing: {line}"))
        };
        let order = ["trialIndex", "seedDerived", "stage1", "stage2", "sandwich", "densities"].map(key_at);
        assert!(order.windows(2).all(|w| w[0] < w[1]), "key order: {line}");
        let r: TrialRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.trial_index, i as u64);
        let s = r.sandwich.unwrap();
        assert!((s.contains_lower && s.contains_upper) || s.any_ind_sample, "{line}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.summary.json", out.display())).unwrap()).unwrap();
    assert_eq!(summary["trials"], 1000);
    assert_eq!(summary["noTriggerFailures"], 0);
    assert_eq!(summary["approximate"], false);
}

#[test]
fn stage_one_records_have_no_stage_two_fields() {
    let o = sandwich(&["run", "--stage", "one", "--trials", "5", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for line in stdout(&o).lines() {
        assert!(line.contains("\"stage1\""));
        for k in ["stage2", "sandwich", "densities"] {
            assert!(!line.contains(k), "{line}");
        }
    }
    let o = sandwich(&["run", "--stage", "two", "--trials", "5", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for line in stdout(&o).lines() {
        assert!(!line.contains("\"stage1\"") && line.contains("\"stage2\""), "{line}");
    }
}

#[test]
fn out_of_range_zeta_is_a_config_error_naming_the_field() {
    let o = sandwich(&["run", "--trials", "3", "--set", "zeta1=1.5"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("zeta1"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 6, "d": 3, "trials": 2, "overrides": {"zeta2": 1.5}}"#).unwrap();
    let o = sandwich(&["run", "--config", path_str(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("zeta2"), "{}", stderr(&o));

    let o = sandwich(&["run", "--trials", "3", "--set", "C=3"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("zeta1"), "{}", stderr(&o));

    for bad in [
        vec!["--set", "omega=1"],
        vec!["--trials", "0"],
        vec!["--estimator", "empirical:x"],
        vec!["--n", "9"],
    ] {
        let mut args = vec!["run"];
        args.extend(bad.iter().copied());
        let o = sandwich(&args);
        assert_eq!(code(&o), 1, "{bad:?}: {}", stderr(&o));
    }
}

#[test]
fn flags_win_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 6, "d": 3, "trials": 7, "seed": 1, "overrides": {"zeta1": 0.3}}"#,
    )
    .unwrap();
    let out = dir.path().join("r.jsonl");
    let o = sandwich(&[
        "run",
        "--config",
        path_str(&cfg),
        "--n",
        "5",
        "--d",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.summary.json", out.display())).unwrap()).unwrap();
    assert_eq!(
        (s["n"].as_u64(), s["d"].as_u64(), s["trials"].as_u64()),
        (Some(5), Some(2), Some(7))
    );

    std::fs::write(&cfg, r#"{"n": 5, "colour": "red"}"#).unwrap();
    assert_eq!(code(&sandwich(&["run", "--config", path_str(&cfg)])), 1);
}

#[test]
fn a_broken_invariant_exits_two() {
    // the heuristic accepts edges no factor of the residual contains, and the
    // coupling then runs out of admissible edges before G is complete
    let o = sandwich(&[
        "run",
        "--n",
        "5",
        "--d",
        "2",
        "--trials",
        "300",
        "--seed",
        "3",
        "--estimator",
        "heuristic",
        "--debug-asserts",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("infeasible"), "{}", stderr(&o));
}

#[test]
fn verify_uniformity_passes_and_refuses_approximations() {
    let o = sandwich(&[
        "verify",
        "uniformity",
        "--n",
        "5",
        "--d",
        "2",
        "--trials",
        "60000",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS uniformity.p_value"));

    let o = sandwich(&["verify", "uniformity", "--estimator", "heuristic"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("exact"), "{}", stderr(&o));

    // 12 graphs need at least 60 trials for expected cells of 5
    let o = sandwich(&["verify", "uniformity", "--trials", "50"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_independence_and_containment_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ind.csv");
    let o = sandwich(&[
        "verify",
        "independence",
        "--n",
        "6",
        "--d",
        "3",
        "--trials",
        "50000",
        "--seed",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("test,statistic,threshold,pass\n"));
    assert_eq!(csv.lines().count(), 3);

    let o = sandwich(&[
        "verify",
        "containment",
        "--n",
        "6",
        "--d",
        "3",
        "--trials",
        "5000",
        "--seed",
        "4",
        "--debug-asserts",
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn verify_all_at_desk_scale() {
    let o = sandwich(&[
        "verify", "all", "--n", "6", "--d", "3", "--trials", "20000", "--seed", "3",
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS ")).count(), 9);
}

#[test]
fn params_reports_cases_and_validity() {
    let json = |n: &str, d: &str| -> serde_json::Value {
        let o = sandwich(&["params", "--n", n, "--d", d]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        serde_json::from_str(&stdout(&o)).unwrap()
    };
    let a = json("1000000", "10000");
    assert_eq!(a["params"]["case"], "Case1");
    assert!((a["params"]["xi1"].as_f64().unwrap() - 0.111_375_323_807_442_7).abs() < 1e-12);
    assert_eq!(a["constraints"]["constraints"].as_array().unwrap().len(), 8);
    // ζ₁ = C·ξ₁ > 1 here, so no binomial density is planned for H_ζ
    assert!(a["params"]["p1"].is_null());

    let b = json("1000000", "100000");
    assert_eq!(b["params"]["case"], "Case2");
    assert!((b["params"]["sigma"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let c = json("100", "99");
    assert_eq!(c["params"]["in_validity_window"], false);
    assert_eq!(c["constraints"]["all_checkable_pass"], false);
}

#[test]
fn sweep_empty_grid_is_just_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{"zetaMult": []}"#).unwrap();
    let o = sandwich(&["sweep", "--grid", path_str(&grid)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = sandwich_cli::record::SUMMARY_CSV_HEADER.join(",");
    assert_eq!(stdout(&o), format!("{header}\n"));
}

#[test]
fn one_point_sweep_equals_the_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let common = ["--n", "6", "--d", "3", "--trials", "200", "--seed", "21"];
    let mut run = vec!["run", "--format", "csv", "--out", path_str(&out)];
    run.extend(common);
    assert_eq!(code(&sandwich(&run)), 0);
    let mut sweep = vec!["sweep"];
    sweep.extend(common);
    let o = sandwich(&sweep);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        std::fs::read_to_string(format!("{}.summary.csv", out.display())).unwrap()
    );
}

#[test]
fn sweep_ind_sample_rate_does_not_grow_with_zeta() {
    // ζ₁ = C·ξ₁ ∈ {0.1, 0.3, 0.5} under the desk slacks C = 1, ξ₁ = 0.4
    let o = sandwich(&[
        "sweep",
        "--n",
        "5",
        "--d",
        "2",
        "--trials",
        "20000",
        "--seed",
        "9",
        "--zeta-mults",
        "0.25,0.75,1.25",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let col = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "stage1_ind_sample_rate")
        .unwrap();
    let rates: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(rates.len(), 3);
    let sd = |p: f64| (p * (1.0 - p) / 20000.0).sqrt();
    for w in rates.windows(2) {
        assert!(w[1] <= w[0] + 2.0 * (sd(w[0]) + sd(w[1])), "{rates:?}");
    }
}

#[test]
fn sweep_records_per_point_failures_and_continues() {
    let o = sandwich(&["sweep", "--ns", "5,9", "--ds", "2", "--trials", "20", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][17].is_empty());
    assert!(rows[1][17].contains("capped"), "{:?}", rows[1]);
}
