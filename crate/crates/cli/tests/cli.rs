use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bayesloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayesloc")).args(args).output().expect("binary runs")
}

fn bayesloc_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayesloc"))
        .env("BAYESLOC_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const SUBCOMMANDS: [&str; 6] =
    ["simulate", "train-fingerprint", "localize", "evaluate", "fstar", "learning-curve"];

#[test]
fn help_lists_units_for_every_subcommand() {
    for sub in SUBCOMMANDS {
        let o = bayesloc(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        let text = stdout(&o);
        assert!(text.contains('['), "{sub} help has no units:\n{text}");
    }
    let o = bayesloc(&["simulate", "--help"]);
    let text = stdout(&o);
    for flag in ["--space", "--resolution", "--txs", "--trials", "--seed", "--epsilon", "--d ", "--out"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("[m]"));
}

#[test]
fn flag_errors_exit_two_with_usage() {
    let o = bayesloc(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));

    let o = bayesloc(&["simulate", "--trials", "0", "--out", "unused"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new("unused").exists());

    let o = bayesloc(&["fstar", "--space", "10", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = bayesloc(&["localize", "--desk-scenario"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty observation"));
    assert!(stderr(&o).contains("Usage"));

    let o =
        bayesloc(&["fstar", "--space", "10x10", "--resolution", "0.5", "--txs", "random:0", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(2));

    let o = bayesloc_threads("zero", &["fstar", "--symmetric-demo", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

fn table_rows(csv: &str) -> Vec<(String, String, f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn simulate_writes_artifacts_with_unit_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = bayesloc(&[
        "simulate",
        "--desk-scenario",
        "--resolution",
        "1",
        "--trials",
        "60",
        "--seed",
        "3",
        "--d-points",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["table.csv", "table.txt", "manifest.txt", "fstar.csv", "curve_MAP.csv", "curve_MP_3.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }

    let rows = table_rows(&fs::read_to_string(out.join("table.csv")).unwrap());
    let lower_better = ["MSE", "EDE"];
    // Normalized entries are raw over the column's best raw value.
    for metric in ["Likelihood", "P(eps)", "P(d)", "MSE", "EDE"] {
        let col: Vec<_> = rows.iter().filter(|r| r.1 == metric).collect();
        assert_eq!(col.len(), 5);
        let best = if lower_better.contains(&metric) {
            col.iter().map(|r| r.2).fold(f64::INFINITY, f64::min)
        } else {
            col.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max)
        };
        for r in &col {
            let want = r.2 / best;
            assert!((r.3 - want).abs() < 1e-5, "{metric} {}: {} vs {want}", r.0, r.3);
        }
        assert!(col.iter().any(|r| (r.3 - 1.0).abs() < 1e-12));
    }
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 3"));
    assert!(manifest.contains("trials = 60"));
}

#[test]
fn seeded_reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = bayesloc_threads(
            threads,
            &[
                "simulate",
                "--space",
                "8x6",
                "--resolution",
                "0.5",
                "--txs",
                "random:3",
                "--trials",
                "40",
                "--seed",
                "11",
                "--out",
                out.to_str().unwrap(),
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        dir_bytes(&out)
    };
    let a = run("1", "a");
    assert_eq!(a, run("3", "b"));
    assert!(a.len() >= 12);
}

fn write_traces(path: &Path, corrupt: bool) {
    let mut s = String::from("rx_x,rx_y,tx_id,rssi_dbm\n");
    for (x, y, base) in [(0.0, 0.0, -40.0), (4.0, 0.0, -55.0), (0.0, 4.0, -65.0)] {
        for k in 0..6 {
            s.push_str(&format!("{x},{y},ap0,{}\n", base - (k % 3) as f64));
            s.push_str(&format!("{x},{y},ap1,{}\n", base - 20.0 + (k % 2) as f64));
        }
    }
    if corrupt {
        s.push_str("1.0,oops,ap0,-50\n");
    }
    fs::write(path, s).unwrap();
}

#[test]
fn train_fingerprint_summary_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("t.csv");
    write_traces(&traces, false);
    let db_a = dir.path().join("a.json");
    let db_b = dir.path().join("b.json");
    let o = bayesloc(&[
        "train-fingerprint",
        "--traces",
        traces.to_str().unwrap(),
        "--out",
        db_a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("3 locations, 2 transmitters"));
    bayesloc(&["train-fingerprint", "--traces", traces.to_str().unwrap(), "--out", db_b.to_str().unwrap()]);
    assert_eq!(fs::read(&db_a).unwrap(), fs::read(&db_b).unwrap());

    let o = bayesloc(&[
        "localize",
        "--db",
        db_a.to_str().unwrap(),
        "--obs",
        "ap0=-55,ap1=-75",
        "--dump-posterior",
        dir.path().join("post.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("FING     (4.0000, 0.0000)"), "{text}");
    let post = fs::read_to_string(dir.path().join("post.csv")).unwrap();
    assert_eq!(post.lines().count(), 4);

    let o = bayesloc(&["localize", "--db", db_a.to_str().unwrap(), "--obs", "ap9=-50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("shares no transmitter"), "{}", stderr(&o));
}

#[test]
fn corrupt_trace_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("bad.csv");
    write_traces(&traces, true);
    let o = bayesloc(&[
        "train-fingerprint",
        "--traces",
        traces.to_str().unwrap(),
        "--out",
        dir.path().join("db.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 38"), "{}", stderr(&o));
    assert!(!dir.path().join("db.json").exists());
}

#[test]
fn skewed_demo_values() {
    let o = bayesloc(&["localize", "--skewed-demo"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |prefix: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(prefix)).unwrap();
        line.split_whitespace().last().unwrap().parse().unwrap()
    };
    // Mean 2/15 and median 2 - sqrt(3.5) of the density, by hand.
    assert!(value("MAP").abs() < 1e-3);
    assert!((value("MP(d=0.6") - 0.1).abs() < 2e-3);
    assert!((value("MMSE") - 2.0 / 15.0).abs() < 1e-3);
    assert!((value("MEDE") - (2.0 - 3.5f64.sqrt())).abs() < 2e-3);
}

#[test]
fn noiseless_observation_makes_estimators_agree() {
    let dir = tempfile::tempdir().unwrap();
    let txs = dir.path().join("txs.csv");
    fs::write(&txs, "tx_id,x,y\ntx0,0,0\ntx1,10,0\ntx2,0,10\ntx3,10,10\n").unwrap();
    let truth = (4.0f64, 6.0f64);
    let obs: Vec<String> = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0)]
        .iter()
        .enumerate()
        .map(|(k, (x, y))| {
            let d = ((truth.0 - x).powi(2) + (truth.1 - y).powi(2)).sqrt();
            format!("tx{k}={}", -40.0 - 30.0 * d.log10())
        })
        .collect();
    let o = bayesloc(&[
        "localize",
        "--space",
        "10x10",
        "--resolution",
        "0.5",
        "--txs",
        txs.to_str().unwrap(),
        "--sigma",
        "0.001",
        "--obs",
        &obs.join(","),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let estimates: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(estimates.len(), 5);
    for l in &estimates[..3] {
        assert!(l.contains("(4.0000, 6.0000)"), "{l}");
    }
    // Every window holding the point mass ties; the first in grid order wins.
    for l in &estimates[3..] {
        assert!(l.contains("P(d>r) 0.0000"), "{l}");
        assert!(!l.ends_with("ties 1"), "{l}");
    }

    let o = bayesloc(&["localize", "--space", "10x10", "--txs", txs.to_str().unwrap(), "--obs", "tx7=-50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tx7"));
}

#[test]
fn evaluate_symmetric_demo_is_attainable() {
    let o = bayesloc(&["evaluate", "--symmetric-demo", "--trials", "200", "--seed", "2", "--d-points", "32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("attainability: 20 of 20"), "{text}");
    let theta_map: f64 = text
        .lines()
        .find(|l| l.starts_with("  MAP "))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(theta_map.abs() < 0.1, "{text}");
    let matrix: Vec<&str> = text.lines().skip(3).take(5).collect();
    assert!(matrix.iter().all(|l| !l.contains(">>") && !l.contains("<<")), "{text}");
}

#[test]
fn fstar_prints_csv() {
    let o = bayesloc(&["fstar", "--symmetric-demo", "--trials", "20", "--d-points", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("d,F\n"));
    assert_eq!(text.lines().count(), 9);
    assert!(text.trim_end().ends_with(",1.000000"));
}

#[test]
fn learning_curve_on_synthetic_survey() {
    let dir = tempfile::tempdir().unwrap();
    let o = bayesloc(&[
        "learning-curve",
        "--synthetic",
        "high",
        "--repeats",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("learning_curve.csv")).unwrap();
    assert!(csv.starts_with("fraction,MAP,MMSE,MEDE,FING\n"));
    assert_eq!(csv.lines().count(), 6);
    assert!(stdout(&o).contains("slope MEDE"));

    let o = bayesloc(&["learning-curve"]);
    assert_eq!(o.status.code(), Some(2));
}
