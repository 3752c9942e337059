use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn metavqe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metavqe"))
        .args(args)
        .current_dir(dir)
        .env_remove("METAVQE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &[
    "--n",
    "3",
    "--l1",
    "1",
    "--l2",
    "1",
    "--train-points",
    "3",
    "--test-points",
    "5",
    "--max-iterations",
    "40",
    "--vqe-seeds",
    "1,2",
];

fn run_small(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--output-dir", out];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    metavqe(&args, dir)
}

#[test]
fn validate_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.conf");
    fs::write(&cfg, "# small run\nn = 4\nL1 = 1\nalgorithms = meta, vqe\nmeta_start=-0.5\n").unwrap();
    let o = metavqe(&["validate-config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let canonical = String::from_utf8(o.stdout).unwrap();
    assert!(canonical.contains("algorithms = meta,vqe\n"));
    assert!(canonical.contains("meta_start = -0.5\n"));
    fs::write(&cfg, &canonical).unwrap();
    let again = metavqe(&["validate-config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), canonical);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "n = 4\nlayers = 3\n").unwrap();
    let o = metavqe(&["validate-config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown key `layers`"));

    let o = metavqe(&["run", "--n", "12"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--full"));

    let o = metavqe(&["run", "--encoding", "cubic"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = metavqe(&["run", "--no-such-flag"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = metavqe(&["--threads", "0", "exact", "--n", "2"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = metavqe(&["run", "--model", "file", "--hamiltonian", "missing.ham"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.ham"));
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_small(tmp.path(), "a", &["--threads", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = tmp.path().join("a");
    for alg in ["meta", "ga", "vqe", "opt-meta", "opt-ga"] {
        let csv = fs::read_to_string(a.join(format!("profile_{alg}.csv"))).unwrap();
        assert!(csv.starts_with("meta_value,energy,exact,abs_err,rel_err,algorithm,n,L1,L2,seed,termination\n"));
        let rows = if alg == "vqe" { 10 } else { 5 };
        assert_eq!(csv.lines().count(), rows + 1, "{alg}");
    }
    for name in ["train_meta.json", "train_ga.json", "trace_meta.csv", "trace_ga.csv", "exact.csv", "config.txt"] {
        assert!(a.join(name).exists(), "{name}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["algorithms"].as_array().unwrap().len(), 5);
    assert_eq!(summary["meta_params"], 18);
    assert_eq!(summary["plain_params"], 12);
    assert!(summary["error"].is_null());

    let o = run_small(tmp.path(), "b", &["--threads", "1"]);
    assert_eq!(code(&o), 0);
    let b = tmp.path().join("b");
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "summary.json" || name == "config.txt" {
            continue;
        }
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn exact_only_run_skips_optimization() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_small(tmp.path(), "x", &["--algorithms", "exact"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = tmp.path().join("x");
    let exact = fs::read_to_string(x.join("exact.csv")).unwrap();
    assert_eq!(exact.lines().next(), Some("meta_value,exact"));
    assert_eq!(exact.lines().count(), 6);
    assert!(!x.join("profile_meta.csv").exists());
}

#[test]
fn exact_subcommand_prints_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let o = metavqe(
        &["exact", "--n", "2", "--field", "0", "--test-points", "3", "--meta-start", "0", "--meta-stop", "0"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    // Two-site periodic chain at delta = 0: doubled XX + YY, ground energy -4.
    let e: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((e + 4.0).abs() < 1e-10);
    assert!(tmp.path().join("metavqe-out/exact.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_metavqe"))
        .args(["exact", "--n", "2", "--test-points", "2"])
        .current_dir(tmp.path())
        .env("METAVQE_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("from-env/exact.csv").exists());
}

#[test]
fn file_model_and_generator_ansatz() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = data("toy2.ham");
    let o = metavqe(
        &[
            "run",
            "--output-dir",
            "toy",
            "--model",
            "file",
            "--hamiltonian",
            toy.to_str().unwrap(),
            "--l1",
            "1",
            "--l2",
            "1",
            "--train-points",
            "4",
            "--test-points",
            "6",
            "--meta-start",
            "-1",
            "--meta-stop",
            "1",
            "--algorithms",
            "meta,opt-meta,ga",
            "--gaussian-squared",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("toy/profile_opt-meta.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);

    let ham = data("xxz4_open.ham");
    let generators = data("pair4.gen");
    let o = metavqe(
        &[
            "run",
            "--output-dir",
            "ucc",
            "--model",
            "file",
            "--hamiltonian",
            ham.to_str().unwrap(),
            "--ansatz",
            "ucc",
            "--generators",
            generators.to_str().unwrap(),
            "--repetitions",
            "2",
            "--train-points",
            "3",
            "--test-points",
            "4",
            "--vqe-seeds",
            "3",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("ucc/summary.json")).unwrap()).unwrap();
    // Three generator names, two repetitions, linear encoding (w, phi) per angle.
    assert_eq!(summary["meta_params"], 12);
    assert_eq!(summary["plain_params"], 6);
}

#[test]
fn runtime_failure_exits_1_and_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("partial");
    fs::create_dir_all(out.join("exact.csv")).unwrap();
    let o = run_small(tmp.path(), "partial", &[]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(out.join("config.txt").exists());
}

fn plot(tmp: &Path, args: &[&str]) -> Output {
    let mut all = vec!["plotdata", "--output-dir", "plots"];
    all.extend_from_slice(args);
    metavqe(&all, tmp)
}

fn columns(path: &Path) -> Vec<usize> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().count())
        .collect()
}

#[test]
fn plotdata_columns_and_grid_checks() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_small(tmp.path(), "a", &[])), 0);
    let a = tmp.path().join("a");
    let p = |alg: &str| a.join(format!("profile_{alg}.csv")).to_str().unwrap().to_string();

    let o = plot(tmp.path(), &[&p("meta")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let plots = tmp.path().join("plots");
    assert_eq!(columns(&plots.join("energy.dat")), vec![2; 5]);
    assert_eq!(columns(&plots.join("abs_error.dat")), vec![2; 5]);
    assert_eq!(columns(&plots.join("rel_error.dat")), vec![2; 5]);

    let five: Vec<String> = ["meta", "ga", "vqe", "opt-meta", "opt-ga"].iter().map(|s| p(s)).collect();
    let exact = a.join("exact.csv");
    let mut args: Vec<&str> = five.iter().map(String::as_str).collect();
    args.extend(["--exact", exact.to_str().unwrap()]);
    let o = plot(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(columns(&plots.join("energy.dat")), vec![7; 5]);
    assert_eq!(columns(&plots.join("rel_error.dat")), vec![6; 5]);
    let header = fs::read_to_string(plots.join("energy.dat")).unwrap();
    assert!(header.starts_with("# meta_value exact meta ga vqe opt-meta opt-ga\n"));

    assert_eq!(code(&run_small(tmp.path(), "c", &["--meta-stop", "0.5", "--algorithms", "meta"])), 0);
    let other = tmp.path().join("c/profile_meta.csv");
    let o = plot(tmp.path(), &[&p("meta"), other.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(other.to_str().unwrap()));

    let junk = tmp.path().join("junk.csv");
    fs::write(&junk, "a,b\n1,2\n").unwrap();
    assert_eq!(code(&plot(tmp.path(), &[junk.to_str().unwrap()])), 2);
}
