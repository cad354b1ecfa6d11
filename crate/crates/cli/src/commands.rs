use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use toma_core::analysis::{
    discriminative_power, measure_correlation, quality_bands, quality_report_tsv, select_best_runs, zero_aspect_at_k,
};
use toma_core::aspect::{build_tuple_space, AspectSchema, GroundTruth};
use toma_core::ingest::{
    discretize_quantile, discretize_quantile_per_topic, discretize_threshold, join_aspect_qrels, parse_qrels, parse_run,
    RunFile, RunOrdering, SignalTable,
};
use toma_core::measures::Depth;
use toma_core::order::build_order;
use toma_core::pipeline::evaluate;
use toma_core::score::{parse_score_tsv, ScoreMatrix};

use crate::{header, CliError, JobConfig, Output, Report};

fn bad(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn in_file<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| bad(format!("{}: {e}", path.display()))
}

pub fn load_schema(cfg: &JobConfig) -> Result<AspectSchema, CliError> {
    let path = cfg.require_path("input.schema")?;
    AspectSchema::parse(open(&path)?).map_err(in_file(&path))
}

/// Reads the combined qrels file, or joins per-aspect files from `[aspect_qrels]`.
pub fn load_qrels(cfg: &JobConfig, schema: &AspectSchema, warnings: &mut Vec<String>) -> Result<GroundTruth, CliError> {
    let merge = cfg.merge_map()?;
    let combined = cfg.paths("input.qrels");
    let per_aspect = cfg.aspect_qrels();
    let outcome = match (combined.as_slice(), per_aspect.is_empty()) {
        ([path], true) => parse_qrels(open(path)?, schema, &merge).map_err(in_file(path))?,
        ([], false) => {
            let readers = per_aspect
                .iter()
                .map(|(aspect, path)| Ok((aspect.clone(), open(path)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            join_aspect_qrels(schema, readers, &merge).map_err(|e| bad(format!("aspect qrels: {e}")))?
        }
        ([], true) => return Err(bad("no qrels given (set input.qrels or [aspect_qrels])")),
        _ => return Err(bad("give exactly one combined qrels file or per-aspect [aspect_qrels], not both")),
    };
    if outcome.coupling_corrections > 0 {
        warnings.push(format!(
            "{} grade(s) rewritten to satisfy coupling rules",
            outcome.coupling_corrections
        ));
    }
    if outcome.filled_cells > 0 {
        warnings.push(format!("{} missing aspect grade(s) filled with the worst label", outcome.filled_cells));
    }
    Ok(outcome.ground_truth)
}

fn run_paths(cfg: &JobConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for path in cfg.paths("input.runs") {
        if path.is_dir() {
            let mut entries = std::fs::read_dir(&path)
                .map_err(in_file(&path))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(in_file(&path))?;
            entries.retain(|p| p.is_file());
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path);
        }
    }
    Ok(files)
}

/// Empty run files take their file stem as run tag.
pub fn load_runs(cfg: &JobConfig, warnings: &mut Vec<String>) -> Result<Vec<RunFile>, CliError> {
    let ordering = match cfg.text("input.run_order") {
        None | Some("score") => RunOrdering::ByScore,
        Some("rank") => RunOrdering::ByRank,
        Some(other) => return Err(bad(format!("input.run_order: expected score or rank, found `{other}`"))),
    };
    let paths = run_paths(cfg)?;
    if paths.is_empty() {
        return Err(bad("no run files given (set input.runs)"));
    }
    let mut runs: Vec<RunFile> = Vec::with_capacity(paths.len());
    for path in &paths {
        let mut run = parse_run(open(path)?, ordering).map_err(in_file(path))?;
        if run.run_tag.is_empty() {
            run.run_tag = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            warnings.push(format!("{}: empty run file; every topic scores 0", path.display()));
        }
        if runs.iter().any(|r| r.run_tag == run.run_tag) {
            return Err(bad(format!("{}: run tag `{}` used by another file", path.display(), run.run_tag)));
        }
        runs.push(run);
    }
    Ok(runs)
}

pub fn cmd_order(cfg: &JobConfig) -> Result<Report, CliError> {
    let schema = load_schema(cfg)?;
    let metric = cfg.metric()?;
    let order = build_order(&build_tuple_space(&schema), &schema, metric).map_err(|e| bad(e.to_string()))?;
    Ok(Report {
        outputs: vec![Output {
            name: format!("order-{}.txt", metric.name()),
            body: header(cfg, None) + &order.dump(&schema),
        }],
        warnings: Vec::new(),
    })
}

pub fn cmd_evaluate(cfg: &JobConfig) -> Result<Report, CliError> {
    let mut warnings = Vec::new();
    let schema = load_schema(cfg)?;
    let plan = cfg.plan(&schema)?;
    let gt = load_qrels(cfg, &schema, &mut warnings)?;
    let runs = load_runs(cfg, &mut warnings)?;
    let eval = evaluate(&schema, &gt, &runs, &plan).map_err(|e| bad(e.to_string()))?;
    for topic in &eval.unjudged_topics {
        warnings.push(format!("topic `{topic}` has no judgments; scored 0"));
    }
    let mut body = header(cfg, None);
    for m in &eval.matrices {
        body.push_str(&m.to_tsv());
    }
    let depth = match plan.measure.depth {
        Depth::Full => String::new(),
        Depth::At(k) => format!("@{k}"),
    };
    Ok(Report {
        outputs: vec![Output {
            name: format!("scores-{}{depth}.tsv", plan.measure.kind),
            body,
        }],
        warnings,
    })
}

fn load_scores(cfg: &JobConfig) -> Result<Vec<ScoreMatrix>, CliError> {
    let paths = cfg.paths("analysis.scores");
    if paths.is_empty() {
        return Err(bad("no score files given (set analysis.scores or --scores)"));
    }
    let mut matrices: Vec<ScoreMatrix> = Vec::new();
    for path in &paths {
        for m in parse_score_tsv(open(path)?).map_err(in_file(path))? {
            if matrices.iter().any(|x| x.measure() == m.measure()) {
                return Err(bad(format!("{}: measure `{}` appears in more than one file", path.display(), m.measure())));
            }
            matrices.push(m);
        }
    }
    Ok(matrices)
}

/// Concatenates TSV reports that share a column header, keeping the first header only.
fn join_reports(reports: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    for (i, report) in reports.into_iter().enumerate() {
        match (i, report.split_once('\n')) {
            (0, _) | (_, None) => out.push_str(&report),
            (_, Some((_, rest))) => out.push_str(rest),
        }
    }
    out
}

/// Correlation for every pair of measures, discriminative power for every
/// measure and, when schema, qrels and runs are configured, the zero-aspect
/// and quality-band audits of the per-topic best runs.
pub fn cmd_analyze(cfg: &JobConfig) -> Result<Report, CliError> {
    let mut warnings = Vec::new();
    let matrices = load_scores(cfg)?;
    let seed = cfg
        .seed()?
        .ok_or_else(|| bad("discriminative power needs a seed (set analysis.seed or --seed)"))?;
    let head = header(cfg, Some(seed));
    let mut outputs = Vec::new();

    if matrices.len() >= 2 {
        let mut reports = Vec::new();
        for (i, a) in matrices.iter().enumerate() {
            for b in &matrices[i + 1..] {
                let r = measure_correlation(a, b).map_err(|e| bad(format!("{} vs {}: {e}", a.measure(), b.measure())))?;
                reports.push(r.to_tsv());
            }
        }
        outputs.push(Output {
            name: "correlation.tsv".into(),
            body: head.clone() + &join_reports(reports),
        });
    } else {
        warnings.push("only one measure; correlation report skipped".into());
    }

    let (samples, alpha) = (cfg.samples()?, cfg.alpha()?);
    let dp = matrices
        .iter()
        .map(|m| {
            discriminative_power(m, samples, alpha, seed)
                .map(|r| r.to_tsv())
                .map_err(|e| bad(format!("{}: {e}", m.measure())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    outputs.push(Output {
        name: "dp.tsv".into(),
        body: head.clone() + &join_reports(dp),
    });

    let audits_configured = cfg.get("input.schema").is_some() && cfg.get("input.runs").is_some();
    if audits_configured {
        let schema = load_schema(cfg)?;
        let gt = load_qrels(cfg, &schema, &mut warnings)?;
        let runs = load_runs(cfg, &mut warnings)?;
        let selector = match cfg.text("analysis.audit_measure") {
            None => &matrices[0],
            Some(label) => matrices
                .iter()
                .find(|m| m.measure() == label)
                .ok_or_else(|| bad(format!("analysis.audit_measure: no scores for `{label}`")))?,
        };
        let best = select_best_runs(selector);
        let zero = zero_aspect_at_k(&best, &runs, &gt, cfg.k()?).map_err(|e| bad(e.to_string()))?;
        let bands = quality_bands(&best, &runs, &gt, &cfg.bands()?).map_err(|e| bad(e.to_string()))?;
        let audit_head = format!("{head}# best runs selected by {}\n", selector.measure());
        outputs.push(Output {
            name: "zero_aspect.tsv".into(),
            body: audit_head.clone() + &zero.to_tsv(),
        });
        outputs.push(Output {
            name: "quality.tsv".into(),
            body: audit_head + &quality_report_tsv(&bands),
        });
    } else {
        warnings.push("schema, qrels or runs not configured; zero-aspect and quality audits skipped".into());
    }
    Ok(Report { outputs, warnings })
}

/// `topic -> docs` from any TREC-style file whose first and third columns are topic and doc.
fn load_pool(path: &Path) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let mut pools: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(in_file(path))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(bad(format!("{}: line {}: expected `topic iteration docid ...`", path.display(), idx + 1)));
        }
        let docs = pools.entry(fields[0].to_string()).or_default();
        if !docs.iter().any(|d| d == fields[2]) {
            docs.push(fields[2].to_string());
        }
    }
    Ok(pools)
}

/// Quantile blocks (top block first) or threshold cuts over a `docid score` table.
pub fn cmd_discretize(cfg: &JobConfig) -> Result<Report, CliError> {
    let path = cfg.require_path("discretize.signals")?;
    let signals = SignalTable::parse(open(&path)?).map_err(in_file(&path))?;
    let mut body = header(cfg, None);
    match cfg.text("discretize.method").unwrap_or("quantile") {
        "quantile" => {
            let fractions = cfg.numbers("discretize.fractions")?.unwrap_or_else(|| vec![0.05, 0.10, 0.85]);
            let grades = cfg
                .grades()?
                .unwrap_or_else(|| (0..fractions.len()).rev().collect());
            match cfg.path("discretize.pool") {
                Some(pool) => {
                    let pools = load_pool(&pool)?;
                    let graded = discretize_quantile_per_topic(&signals, &pools, &fractions, &grades)
                        .map_err(|e| bad(e.to_string()))?;
                    for ((topic, doc), g) in graded {
                        body.push_str(&format!("{topic} 0 {doc} {g}\n"));
                    }
                }
                None => {
                    let graded = discretize_quantile(&signals, &fractions, &grades).map_err(|e| bad(e.to_string()))?;
                    for (doc, g) in graded {
                        body.push_str(&format!("{doc} {g}\n"));
                    }
                }
            }
        }
        "threshold" => {
            let cuts = cfg
                .numbers("discretize.thresholds")?
                .ok_or_else(|| bad("threshold discretization needs discretize.thresholds"))?;
            for (doc, g) in discretize_threshold(&signals, &cuts).map_err(|e| bad(e.to_string()))? {
                body.push_str(&format!("{doc} {g}\n"));
            }
        }
        other => return Err(bad(format!("discretize.method: expected quantile or threshold, found `{other}`"))),
    }
    Ok(Report {
        outputs: vec![Output {
            name: "grades.txt".into(),
            body,
        }],
        warnings: Vec::new(),
    })
}
