use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn toma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toma")).args(args).output().expect("spawn toma")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn order_dump_euclidean_has_ten_singletons() {
    let schema = fixture("embeddings/e1.txt");
    let out = toma(&["order", "--schema", path(&schema), "--metric", "euclidean"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let classes = data_lines(&text);
    assert_eq!(classes.len(), 10);
    assert!(classes[0].ends_with(": hr,c"));
    assert!(classes[9].ends_with(": nr,nc"));
    assert!(text.starts_with("# toma 0.1.0 config-sha256="));
}

#[test]
fn order_dump_chebyshev_has_a_four_way_tie() {
    let out = toma(&["order", "--schema", path(&fixture("embeddings/e1.txt")), "--metric", "chebyshev"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let classes = data_lines(&text);
    assert_eq!(classes.len(), 5);
    assert_eq!(classes[4], "class 4 dist 3 : hr,nc;fr,nc;mr,nc;nr,nc");
}

#[test]
fn unknown_metric_exits_2_and_lists_metrics() {
    let out = toma(&["order", "--schema", path(&fixture("embeddings/e1.txt")), "--metric", "taxicab"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("euclidean") && err.contains("manhattan") && err.contains("chebyshev"), "{err}");
}

#[test]
fn broken_schema_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("bad.txt");
    fs::write(&schema, "aspect relevance\nlabel nr 0\nlabel hr one\n").unwrap();
    let out = toma(&["order", "--schema", path(&schema)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.txt"), "{}", stderr(&out));
}

#[test]
fn missing_schema_file_exits_2() {
    let out = toma(&["order", "--schema", "/nonexistent/schema.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_is_deterministic_and_flags_override_config() {
    let cfg = fixture("three_docs/ndcg.ini");
    let a = toma(&["evaluate", "--config", path(&cfg), "--families", "cheb"]);
    let b = toma(&["evaluate", "--config", path(&cfg), "--families", "cheb"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(data_lines(&text).iter().all(|l| l.contains("\tCHEB-ndcg\t")));
    assert!(text.contains("r_213\tt\tCHEB-ndcg\t1.0000"));
}

#[test]
fn evaluate_writes_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = toma(&["evaluate", "--config", path(&fixture("three_docs/ap.ini")), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let written = fs::read_to_string(out_dir.join("scores-ap.tsv")).unwrap();
    assert!(written.contains("r_123\tt\tCAM-ap\t0.7917"));
    assert!(stdout(&out).is_empty());
}

fn three_doc_job(dir: &Path) -> PathBuf {
    let runs = dir.join("runs");
    fs::create_dir(&runs).unwrap();
    fs::copy(fixture("three_docs/schema.txt"), dir.join("schema.txt")).unwrap();
    fs::copy(fixture("three_docs/qrels.txt"), dir.join("qrels.txt")).unwrap();
    let cfg = dir.join("job.ini");
    fs::write(&cfg, "[input]\nschema = schema.txt\nqrels = qrels.txt\nruns = runs\n").unwrap();
    cfg
}

#[test]
fn empty_run_scores_zero_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_doc_job(dir.path());
    fs::write(dir.path().join("runs/empty.run"), "").unwrap();
    fs::copy(fixture("three_docs/runs/r_123.run"), dir.path().join("runs/r_123.run")).unwrap();
    let out = toma(&["evaluate", "--config", path(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("empty run file"), "{}", stderr(&out));
    let text = stdout(&out);
    let empty: Vec<&str> = data_lines(&text).into_iter().filter(|l| l.starts_with("empty\t")).collect();
    assert_eq!(empty.len(), 10, "5 families x (topic row + mean row)");
    assert!(empty.iter().all(|l| l.ends_with("\t0.0000")));
}

#[test]
fn malformed_run_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_doc_job(dir.path());
    fs::write(dir.path().join("runs/bad.run"), "t Q0 d1 1 2.0 bad\nt Q0 d2 2 x bad\n").unwrap();
    let out = toma(&["evaluate", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.run") && err.contains("line 2"), "{err}");
}

#[test]
fn depth_cut_equals_hand_truncated_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_doc_job(dir.path());
    let mut long = String::new();
    let mut short = String::new();
    let docs = ["d2", "x1", "d3", "x2", "x3", "d1", "x4"];
    for (i, d) in docs.iter().enumerate() {
        long.push_str(&format!("t Q0 {d} {} {} long\n", i + 1, 10 - i));
        if i < 5 {
            short.push_str(&format!("t Q0 {d} {} {} short\n", i + 1, 10 - i));
        }
    }
    fs::write(dir.path().join("runs/long.run"), long).unwrap();
    fs::write(dir.path().join("runs/short.run"), short).unwrap();
    let cut = |measure: &str, depth: &str| {
        let out = toma(&["evaluate", "--config", path(&cfg), "--measure", measure, "--depth", depth]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = stdout(&out);
        let by_run = |run: &str| -> Vec<String> {
            data_lines(&text)
                .iter()
                .filter(|l| l.starts_with(&format!("{run}\tt\t")))
                .map(|l| l.split('\t').nth(3).unwrap().to_string())
                .collect()
        };
        (by_run("long"), by_run("short"))
    };
    for measure in ["ndcg", "ap"] {
        let (long_at_5, short_at_5) = cut(measure, "5");
        assert_eq!(long_at_5, short_at_5, "{measure}");
        let (long_full, _) = cut(measure, "full");
        assert_ne!(long_full, long_at_5, "d1 at rank 6 counts only without the cut");
    }
}

fn write_scores(path: &Path, measure: &str, topics: &[&str], scale: f64) {
    let mut text = String::from("# comment lines are skipped\n");
    for (r, run) in ["alpha", "beta", "gamma", "delta"].iter().enumerate() {
        for (t, topic) in topics.iter().enumerate() {
            let score = scale * (((r * 7 + t * 3) % 11) as f64 / 10.0) + 0.001 * r as f64;
            text.push_str(&format!("{run}\t{topic}\t{measure}\t{score:.4}\n"));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn analyze_identical_measures_correlate_perfectly_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let topics: Vec<String> = (0..12).map(|t| format!("t{t}")).collect();
    let topics: Vec<&str> = topics.iter().map(String::as_str).collect();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    write_scores(&a, "A", &topics, 1.0);
    write_scores(&b, "B", &topics, 0.5);
    let run = |out: &Path| {
        let o = toma(&["analyze", "--scores", path(&a), path(&b), "--seed", "7", "--out", path(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        o
    };
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    let first = run(&one);
    run(&two);
    assert!(stderr(&first).contains("audits skipped"));
    let corr = fs::read_to_string(one.join("correlation.tsv")).unwrap();
    let summary = data_lines(&corr).into_iter().find(|l| l.contains("\tmean\t")).unwrap();
    assert!(summary.starts_with("A\tB\tmean\t1.0000\t"), "{summary}");
    assert!(summary.contains("equivalent=true"));
    assert_eq!(stdout(&first), "");
    for name in ["correlation.tsv", "dp.tsv"] {
        assert_eq!(fs::read(one.join(name)).unwrap(), fs::read(two.join(name)).unwrap(), "{name}");
    }
    let dp = fs::read_to_string(one.join("dp.tsv")).unwrap();
    assert!(dp.lines().next().unwrap().ends_with("seed=7"));
    assert_eq!(data_lines(&dp).iter().filter(|l| l.contains("\tpercentage\t")).count(), 2);
}

#[test]
fn analyze_rejects_mismatched_topics() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    write_scores(&a, "A", &["t1", "t2", "t3"], 1.0);
    write_scores(&b, "B", &["t1", "t2", "t4"], 1.0);
    let out = toma(&["analyze", "--scores", path(&a), path(&b), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    write_scores(&a, "A", &["t1", "t2", "t3"], 1.0);
    let out = toma(&["analyze", "--scores", path(&a)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed"));
}

#[test]
fn analyze_runs_audits_when_inputs_are_configured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_doc_job(dir.path());
    // a second topic `u` mirrors `t`: the paired test needs at least two topics
    let mirror = |text: &str| -> String {
        let u: String = text.lines().filter(|l| l.starts_with("t ")).map(|l| format!("u{}\n", &l[1..])).collect();
        format!("{text}{u}")
    };
    let qrels = fs::read_to_string(dir.path().join("qrels.txt")).unwrap();
    fs::write(dir.path().join("qrels.txt"), mirror(&qrels)).unwrap();
    for tag in ["r_123", "r_321", "r_2"] {
        let run = fs::read_to_string(fixture(&format!("three_docs/runs/{tag}.run"))).unwrap();
        fs::write(dir.path().join(format!("runs/{tag}.run")), mirror(&run)).unwrap();
    }
    let scores = dir.path().join("scores.tsv");
    let eval = toma(&["evaluate", "--config", path(&cfg)]);
    fs::write(&scores, &eval.stdout).unwrap();
    let out_dir = dir.path().join("reports");
    let out = toma(&[
        "analyze",
        "--config",
        path(&cfg),
        "--scores",
        path(&scores),
        "--seed",
        "3",
        "--out",
        path(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let zero = fs::read_to_string(out_dir.join("zero_aspect.tsv")).unwrap();
    // EUCL picks r_123: no fixture document is worst on both aspects
    assert!(zero.contains("# best runs selected by EUCL-ndcg"));
    assert!(data_lines(&zero).contains(&"1-5\t0\t0.00"), "{zero}");
    let quality = fs::read_to_string(out_dir.join("quality.tsv")).unwrap();
    let lines = data_lines(&quality);
    assert_eq!(lines[1], "1-25\t3.3333", "(1+2 + 3+1 + 3+0) / 3 on both topics");
    assert_eq!(lines[2], "26-50\tNA");
}

#[test]
fn discretize_quantiles_and_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let signals = dir.path().join("pagerank.txt");
    let table: String = (0..100).map(|d| format!("doc{d:03} {}\n", 1.0 / (d + 1) as f64)).collect();
    fs::write(&signals, table).unwrap();
    let out = toma(&["discretize", "--signals", path(&signals)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let grades: Vec<&str> = data_lines(&text).iter().map(|l| l.split(' ').nth(1).unwrap()).collect();
    let count = |g: &str| grades.iter().filter(|x| **x == g).count();
    assert_eq!((count("2"), count("1"), count("0")), (5, 10, 85));
    assert!(text.contains("doc000 2\n"));

    let spam = dir.path().join("spam.txt");
    fs::write(&spam, "a 79\nb 85\nc 90\n").unwrap();
    let cfg = dir.path().join("spam.ini");
    fs::write(&cfg, "[discretize]\nmethod = threshold\nthresholds = 80 90\n").unwrap();
    let out = toma(&["discretize", "--config", path(&cfg), "--signals", path(&spam)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(data_lines(&stdout(&out)), vec!["a 0", "b 1", "c 2"]);
}

#[test]
fn discretize_per_topic_pools() {
    let dir = tempfile::tempdir().unwrap();
    let signals = dir.path().join("s.txt");
    fs::write(&signals, "a 1\nb 2\nc 3\nd 4\n").unwrap();
    let pool = dir.path().join("pool.txt");
    fs::write(&pool, "t1 0 a 1\nt1 0 b 0\nt2 0 c 1\nt2 0 d 1\n").unwrap();
    let cfg = dir.path().join("d.ini");
    fs::write(&cfg, "[discretize]\npool = pool.txt\nfractions = 0.5 0.5\n").unwrap();
    let out = toma(&["discretize", "--config", path(&cfg), "--signals", path(&signals)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(data_lines(&stdout(&out)), vec!["t1 0 a 0", "t1 0 b 1", "t2 0 c 0", "t2 0 d 1"]);
}

#[test]
fn discretize_empty_and_malformed_tables() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = toma(&["discretize", "--signals", path(&empty)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(data_lines(&stdout(&out)).is_empty());

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "a 1\nb\n").unwrap();
    let out = toma(&["discretize", "--signals", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn config_typo_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.ini");
    fs::write(&cfg, "[order]\nmetirc = chebyshev\n").unwrap();
    let out = toma(&["order", "--config", path(&cfg), "--schema", path(&fixture("embeddings/e1.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("metirc"));
}

#[test]
fn header_hash_tracks_settings() {
    let schema = fixture("embeddings/e1.txt");
    let head = |metric: &str| {
        let out = toma(&["order", "--schema", path(&schema), "--metric", metric]);
        stdout(&out).lines().next().unwrap().to_string()
    };
    assert_eq!(head("manhattan"), head("manhattan"));
    assert_ne!(head("manhattan"), head("chebyshev"));
    assert!(head("manhattan").ends_with("seed=none"));
}
