use std::process::Command;

use deadline_sched::cli::{run_from_args, ExperimentConfig, Outcome};
use deadline_sched::{CostToGoTable, Error};

fn run(args: &[&str]) -> (Result<Outcome, Error>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("deadline-sched").chain(args.iter().copied());
    let r = run_from_args(argv, &mut out, &mut err);
    (r, String::from_utf8(out).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (r, out) = run(args);
    let outcome = r.unwrap_or_else(|e| panic!("{args:?}: {e}"));
    assert!(outcome.passed(), "{args:?}: {:?}", outcome.failures);
    out
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn col(csv: &str, name: &str) -> Vec<f64> {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(csv).iter().map(|r| r[i].parse().unwrap()).collect()
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_deadline-sched"));
    c.env_remove(deadline_sched::cli::OUT_DIR_ENV);
    c
}

#[test]
fn moments_rows_decrease() {
    let out = ok(&["moments", "--channel", "truncexp:lambda=1,gamma0=0.001", "--M", "8"]);
    assert_eq!(out.lines().next().unwrap(), "m,nu_m,gmean_m,nu_inf");
    let nu = col(&out, "nu_m");
    assert_eq!(nu.len(), 8);
    assert!(nu.windows(2).all(|w| w[1] < w[0]));
    let nu_inf = col(&out, "nu_inf");
    assert!(nu_inf.iter().all(|&v| v == nu_inf[0] && v < nu[7]));
}

#[test]
fn single_moment() {
    let out = ok(&["moments", "--M", "1"]);
    assert_eq!(rows(&out).len(), 1);
    assert!((col(&out, "nu_m")[0] - 6.337_874_07).abs() < 1e-6);
}

#[test]
fn divergent_channel_is_a_clean_error() {
    let (r, _) = run(&["moments", "--channel", "gamma:k=1,theta=1"]);
    assert!(matches!(r, Err(Error::NonIntegrable { .. })), "{r:?}");

    let o = bin().args(["moments", "--channel", "gamma:k=1,theta=1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.starts_with("error:") && !stderr.contains("panicked"), "{stderr}");
}

#[test]
fn bad_channel_and_unknown_flags_are_errors() {
    assert!(run(&["moments", "--channel", "rayleigh:k=2"]).0.is_err());
    assert!(run(&["moments", "--channel", "gamma:k=2,foo=1"]).0.is_err());
    assert!(run(&["moments", "--bogus"]).0.is_err());
    let o = bin().args(["table2", "--verbose"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_documents_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("moments", &["--channel", "--M", "--out"]),
        ("dp-solve", &["--channel", "--T", "--B-max", "--grid-points", "--inner-tol", "--quad-nodes", "--check", "--out"]),
        (
            "simulate",
            &[
                "--config", "--channel", "--T", "--B", "--policies", "--episodes", "--seed", "--workers",
                "--dp-table", "--grid-points", "--independent", "--check", "--out",
            ],
        ),
        ("profile", &["--T", "--B", "--policies", "--episodes", "--seed"]),
        ("oneshot-thresholds", &["--channel", "--T", "--check", "--out"]),
        ("oneshot-energy", &["--channel", "--T", "--B", "--episodes", "--seed", "--check", "--out"]),
        ("table2", &["--check", "--out"]),
        ("gap-curve", &["--channel", "--b-min", "--b-max", "--points", "--check", "--out"]),
    ];
    for (cmd, flags) in cases {
        let o = bin().args([cmd, "--help"]).output().unwrap();
        assert!(o.status.success(), "{cmd}");
        let help = String::from_utf8(o.stdout).unwrap();
        for f in *flags {
            assert!(help.contains(f), "{cmd} --help lacks {f}");
        }
    }
}

#[test]
fn simulate_reproduces_policy_ordering() {
    let out = ok(&[
        "simulate", "--T", "5", "--B", "10", "--policies", "eq,sub1,sub2,dp", "--episodes", "100000", "--seed", "7",
    ]);
    assert_eq!(
        out.lines().next().unwrap(),
        "policy,B,T,episodes,mean_energy,stderr,mean_energy_db,non_causal"
    );
    let policies: Vec<String> = rows(&out).iter().map(|r| r[0].clone()).collect();
    assert_eq!(policies, ["eq", "sub1", "sub2", "dp"]);
    let e = col(&out, "mean_energy");
    assert!(e[3] <= e[2] && e[2] <= e[1] && e[1] <= e[0], "{e:?}");
}

#[test]
fn single_episode_run() {
    let out = ok(&["simulate", "--T", "3", "--B", "2", "--policies", "eq,iwf", "--episodes", "1"]);
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0][3], "1");
    assert!(col(&out, "mean_energy").iter().all(|e| e.is_finite() && *e > 0.0));
    assert_eq!(r[1][7], "true");
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |file: &str, workers: &str| -> Vec<String> {
        [
            "simulate", "--T", "4", "--B", "6", "--policies", "eq,sub1,sub2,oneshot,iwf", "--episodes", "5000",
            "--seed", "99", "--workers", workers, "--out",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain(std::iter::once(dir.path().join(file).display().to_string()))
        .collect()
    };
    for (file, workers) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")] {
        let owned = args(file, workers);
        ok(&owned.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv"), read("c.csv"));
}

#[test]
fn profile_lists_every_slot() {
    let out = ok(&["profile", "--T", "10", "--B", "5", "--policies", "eq,sub2", "--episodes", "2000"]);
    assert_eq!(out.lines().next().unwrap(), "policy,slot_index_t,mean_bits");
    let r = rows(&out);
    assert_eq!(r.len(), 20);
    for row in r.iter().filter(|r| r[0] == "eq") {
        assert!((row[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    }
    let total: f64 = r.iter().filter(|r| r[0] == "sub2").map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 5.0).abs() < 1e-9);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"channel": "gamma:k=2,theta=1", "B": 4, "T": 3, "policies": ["eq", "sub1"], "episodes": 500, "seed": 3}"#,
    )
    .unwrap();
    let path = cfg.display().to_string();
    let out = ok(&["simulate", "--config", &path, "--T", "4"]);
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!((r[0][1].as_str(), r[0][2].as_str(), r[0][3].as_str()), ("4", "4", "500"));

    std::fs::write(&cfg, r#"{"B": 4, "T": 3, "colour": "blue"}"#).unwrap();
    assert!(run(&["simulate", "--config", &path]).0.is_err());
}

#[test]
fn experiment_config_canonical_string() {
    let s = "channel=truncexp:lambda=1,gamma0=0.001;B=10;T=5;policies=eq,sub2,dp;episodes=100000;seed=7;grid_points=1025;workers=1";
    let cfg: ExperimentConfig = s.parse().unwrap();
    assert_eq!(cfg.to_string(), s);
    assert!("channel=truncexp:lambda=1,gamma0=0.001;B=10;T=5".parse::<ExperimentConfig>().is_err());
    let opt2_long = s.replace("policies=eq,sub2,dp", "policies=opt2");
    assert!(opt2_long.parse::<ExperimentConfig>().is_err());
}

#[test]
fn opt2_refuses_long_horizons() {
    let (r, _) = run(&["simulate", "--T", "5", "--B", "3", "--policies", "opt2", "--episodes", "10"]);
    assert!(r.is_err());
    ok(&["simulate", "--T", "2", "--B", "3", "--policies", "opt2,dp", "--episodes", "10"]);
}

#[test]
fn dp_solve_check_and_reuse_by_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv").display().to_string();
    ok(&["dp-solve", "--T", "2", "--B-max", "10", "--check", "--out", &table]);
    let parsed = CostToGoTable::read_csv(std::io::BufReader::new(std::fs::File::open(&table).unwrap())).unwrap();
    assert_eq!((parsed.t_max(), parsed.b_max()), (2, 10.0));

    ok(&["simulate", "--T", "2", "--B", "8", "--policies", "dp", "--episodes", "200", "--dp-table", &table]);
    // table too short or too narrow for the request
    assert!(run(&["simulate", "--T", "3", "--B", "8", "--policies", "dp", "--episodes", "20", "--dp-table", &table]).0.is_err());
    assert!(run(&["simulate", "--T", "2", "--B", "12", "--policies", "dp", "--episodes", "20", "--dp-table", &table]).0.is_err());
    // solved for another channel
    assert!(run(&[
        "simulate", "--channel", "gamma:k=2,theta=1", "--T", "2", "--B", "8", "--policies", "dp", "--episodes", "20",
        "--dp-table", &table,
    ])
    .0
    .is_err());
}

#[test]
fn missing_dp_table_points_to_dp_solve() {
    let (r, _) = run(&["simulate", "--T", "3", "--B", "4", "--policies", "dp", "--dp-table", "/nonexistent/table.csv"]);
    let msg = r.unwrap_err().to_string();
    assert!(msg.contains("dp-solve"), "{msg}");
}

#[test]
fn dp_check_flags_a_coarse_table() {
    // too few nodes to resolve E_g, and too few grid points to follow the closed form
    let o = bin()
        .args(["dp-solve", "--T", "2", "--B-max", "20", "--grid-points", "5", "--quad-nodes", "2", "--check"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stderr).unwrap().contains("check failed"));
}

#[test]
fn oneshot_thresholds_table() {
    let out = ok(&["oneshot-thresholds", "--T", "50", "--check"]);
    assert_eq!(out.lines().next().unwrap(), "t,omega_t,gain_threshold");
    let omega = col(&out, "omega_t");
    let thr = col(&out, "gain_threshold");
    assert_eq!(omega.len(), 49);
    assert!(omega.iter().all(|w| w.is_finite()));
    assert!(thr.windows(2).all(|w| w[1] >= w[0]));
    assert!((omega[0] - 6.337_874_07).abs() < 1e-6);
}

#[test]
fn oneshot_energy_json() {
    let out = ok(&["oneshot-energy", "--T", "10", "--B", "1", "--episodes", "100000", "--seed", "3", "--check"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let e = v["expected_energy"].as_f64().unwrap();
    let mc = v["simulated_energy"].as_f64().unwrap();
    let se = v["simulated_stderr"].as_f64().unwrap();
    assert!((e - mc).abs() < 4.0 * se);
    assert_eq!(v["T"], 10);
    let bare: serde_json::Value = serde_json::from_str(&ok(&["oneshot-energy", "--T", "10", "--B", "1"])).unwrap();
    assert!(bare.get("simulated_energy").is_none());
}

#[test]
fn table2_matches_published_values() {
    let out = ok(&["table2", "--check"]);
    let r = rows(&out);
    assert_eq!(r.len(), 6);
    assert!(r.iter().all(|row| row.last().unwrap() == "true"));
}

#[test]
fn gap_curve_checks() {
    let out = ok(&["gap-curve", "--check"]);
    let gap = col(&out, "gap_db");
    assert_eq!(gap.len(), 60);
    assert!(gap.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert!(run(&["gap-curve", "--b-min", "5", "--b-max", "1"]).0.is_err());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["moments", "--M", "3"])
        .env(deadline_sched::cli::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert_eq!(written.lines().count(), 4);
}
