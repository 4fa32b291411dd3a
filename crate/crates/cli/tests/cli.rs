use std::path::Path;
use std::process::{Command, Output};

use fedclus_cli::report::METRICS;
use fedclus_cli::{ExperimentReport, Summary};

const SMALL: &str = r#"{
  "data": {"synthetic": {"n_train": 1500, "n_test": 300, "seed": 5}},
  "partition": {"k": 5, "skew": 0.8},
  "topology": {"q": 2},
  "algorithms": ["fedavg", "fedclusavg"],
  "train": {"epochs": 2},
  "rounds": 3,
  "seeds": [1, 2, 3, 4, 5]
}"#;

fn fedclus(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fedclus"));
    cmd.args(args).env("SOURCE_DATE_EPOCH", "1700000000");
    match threads {
        Some(t) => cmd.env("FEDCLUS_THREADS", t),
        None => cmd.env_remove("FEDCLUS_THREADS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_parseable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("results");
    let o = fedclus(&["run", "--config", &cfg, "--out", s(&out)], None);
    assert!(o.status.success(), "{}", stderr(&o));

    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let report = ExperimentReport::from_json(&text).unwrap();
    assert_eq!(report.generated_at_unix, 1_700_000_000);
    assert_eq!(report.runs.len(), 10);
    assert_eq!(ExperimentReport::from_json(&report.to_json()).unwrap(), report);

    let rounds = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
    let mut lines = rounds.lines();
    assert_eq!(
        lines.next(),
        Some("round,seed,algorithm,loss,accuracy,precision,recall,f1")
    );
    assert_eq!(lines.count(), 2 * 5 * 4);

    let ledger = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("round,seed,algorithm,link,direction,messages,bytes\n"));
    // 3 rounds x 2 directions per cell, all on access links
    assert_eq!(ledger.lines().count() - 1, 10 * 3 * 2);
    assert!(!out.join("compare.csv").exists());
}

#[test]
fn override_changes_round_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o = fedclus(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            s(&out),
            "--override",
            "rounds=5",
            "--override",
            "seeds=[9]",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ExperimentReport::load(&out.join("report.json")).unwrap();
    assert_eq!(report.config.rounds, 5);
    assert!(report.runs.iter().all(|r| r.rounds.len() == 6 && r.seed == 9));
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at_unix\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reruns_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut reports = Vec::new();
    for (i, threads) in ["1", "3", "0"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}"));
        let o = fedclus(&["compare", "--config", &cfg, "--out", s(&out)], Some(threads));
        assert!(o.status.success(), "{}", stderr(&o));
        reports.push(out);
    }
    let base = strip_timestamp(&std::fs::read_to_string(reports[0].join("report.json")).unwrap());
    for r in &reports[1..] {
        assert_eq!(
            strip_timestamp(&std::fs::read_to_string(r.join("report.json")).unwrap()),
            base
        );
        for f in ["rounds.csv", "ledger.csv", "compare.csv"] {
            assert_eq!(
                std::fs::read(r.join(f)).unwrap(),
                std::fs::read(reports[0].join(f)).unwrap(),
                "{f}"
            );
        }
    }
}

fn parse_row(line: &str) -> (String, String, String, [f64; 5]) {
    let f: Vec<&str> = line.split(',').collect();
    let v: Vec<f64> = f[3..8].iter().map(|x| x.parse().unwrap()).collect();
    (f[0].into(), f[1].into(), f[2].into(), [v[0], v[1], v[2], v[3], v[4]])
}

#[test]
fn compare_summaries_match_rounds_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("c");
    let o = fedclus(&["compare", "--config", &cfg, "--out", s(&out)], None);
    assert!(o.status.success(), "{}", stderr(&o));

    let compare = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let rows: Vec<_> = compare.lines().skip(1).map(parse_row).collect();
    for m in METRICS {
        let summary_rows = rows.iter().filter(|r| r.0 == "summary" && r.2 == m).count();
        assert_eq!(summary_rows, 2, "{m}");
        assert!(rows
            .iter()
            .any(|r| r.0 == "delta" && r.1 == "fedclusavg-fedavg" && r.2 == m));
    }

    // final-round values per (algorithm, seed) straight from rounds.csv
    let rounds = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
    let cols = ["loss", "accuracy", "precision", "recall", "f1"];
    for alg in ["fedavg", "fedclusavg"] {
        for (ci, metric) in cols.iter().enumerate() {
            let values: Vec<f64> = rounds
                .lines()
                .skip(1)
                .map(|l| l.split(',').collect::<Vec<_>>())
                .filter(|f| f[2] == alg && f[0] == "3")
                .map(|f| f[3 + ci].parse().unwrap())
                .collect();
            assert_eq!(values.len(), 5);
            let s = Summary::of(&values).unwrap();
            let row = rows
                .iter()
                .find(|r| r.0 == "summary" && r.1 == alg && r.2 == *metric)
                .unwrap();
            assert_eq!(row.3, [s.min, s.q1, s.median, s.mean, s.max], "{alg} {metric}");
        }
    }
}

#[test]
fn compare_needs_two_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = fedclus(
        &[
            "compare",
            "--config",
            &cfg,
            "--out",
            s(dir.path()),
            "--override",
            r#"algorithms=["fedavg"]"#,
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[usage]"));
}

#[test]
fn identical_shards_give_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "data": {"synthetic": {"n_train": 250, "n_test": 200}},
          "partition": {"k": 4, "strategy": "replicate"},
          "algorithms": ["fedavg", "fedclusavg"],
          "rounds": 4,
          "seeds": [1, 2, 3]
        }"#,
    );
    let out = dir.path().join("z");
    let o = fedclus(&["compare", "--config", &cfg, "--out", s(&out)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let compare = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let deltas: Vec<_> = compare
        .lines()
        .skip(1)
        .map(parse_row)
        .filter(|r| r.0 == "delta")
        .collect();
    assert_eq!(deltas.len(), METRICS.len());
    for d in deltas {
        assert!(d.3.iter().all(|v| v.abs() <= 1e-12), "{d:?}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"algorithms": ["fedavg"], "seeds": [1], "cluster": {"theta": 1.5}}"#,
    );
    let o = fedclus(&["run", "--config", &cfg, "--out", s(dir.path())], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cluster.theta"), "{}", stderr(&o));

    let o = fedclus(&["run", "--config", s(&dir.path().join("nope.json"))], None);
    assert_eq!(o.status.code(), Some(1));

    let o = fedclus(&["run", "--bogus"], None);
    assert_eq!(o.status.code(), Some(1));

    let cfg = write_config(dir.path(), SMALL);
    let o = fedclus(&["run", "--config", &cfg, "--out", s(dir.path())], Some("many"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let body = format!(
        r#"{{"data": {{"csv": {{"path": {:?}}}}}, "partition": {{"k": 2}}, "algorithms": ["fedavg"], "seeds": [1], "rounds": 1}}"#,
        s(&missing)
    );
    let cfg = write_config(dir.path(), &body);
    let o = fedclus(&["run", "--config", &cfg, "--out", s(&dir.path().join("o"))], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[data]"), "{}", stderr(&o));
}

#[test]
fn plots_are_written_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("p");
    assert!(fedclus(
        &["run", "--config", &cfg, "--out", s(&out), "--override", "seeds=[1]"],
        None
    )
    .status
    .success());
    let report = out.join("report.json");
    let figs_a = dir.path().join("fa");
    let figs_b = dir.path().join("fb");
    for figs in [&figs_a, &figs_b] {
        let o = fedclus(&["plot", "--report", s(&report), "--out", s(figs)], None);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<String> = std::fs::read_dir(&figs_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "accuracy_vs_round.svg",
            "latency_bars.svg",
            "roc_fedavg.svg",
            "roc_fedclusavg.svg"
        ]
    );
    for n in &names {
        let a = std::fs::read(figs_a.join(n)).unwrap();
        assert_eq!(a, std::fs::read(figs_b.join(n)).unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains(r#"version="1.1""#) && text.contains(r#"viewBox="0 0 800 600""#));
    }

    std::fs::write(dir.path().join("bad.json"), "{\"runs\": 3}").unwrap();
    let o = fedclus(
        &["plot", "--report", s(&dir.path().join("bad.json")), "--out", s(&figs_a)],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[report]"));
}
