//! Run files, multi-aspect qrels and signal tables.
//!
//! Run lines are `topic Q0 docid rank score runtag`. Qrels start with a
//! `# aspects: a1 a2 ...` header followed by `topic 0 docid grade1 [grade2 ...]`
//! lines; grades are label names or grade indices. Signal tables are
//! `docid score` lines.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use thiserror::Error;

use crate::aspect::{AspectSchema, GroundTruth, LabelTuple, SchemaError};
use crate::measures::RankedList;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: document `{doc}` repeated for topic `{topic}`")]
    DuplicateDoc { line: usize, topic: String, doc: String },
    #[error("line {line}: run tag `{found}` differs from `{expected}`")]
    MixedRunTag { line: usize, expected: String, found: String },
    #[error("line {line}: unknown label `{label}` for aspect `{aspect}`")]
    UnknownLabel { line: usize, aspect: String, label: String },
    #[error("line {line}: {got} grade column(s) but the schema has {expected} aspect(s)")]
    AspectCountMismatch { line: usize, expected: usize, got: usize },
    #[error("qrels header lists aspects {found:?}, schema has {expected:?}")]
    HeaderMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("line {line}: topic `{topic}` document `{doc}` judged twice")]
    DuplicateJudgment { line: usize, topic: String, doc: String },
    #[error("line {line}: document `{doc}` listed twice")]
    DuplicateSignal { line: usize, doc: String },
    #[error("invalid discretization: {0}")]
    Discretization(String),
    #[error("unknown aspect `{0}`")]
    UnknownAspect(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("io: {0}")]
    Io(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, what: &str, line: usize) -> Result<f64, IngestError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("{what} `{field}` is not a finite number"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: i64,
    pub score: f64,
}

/// How entries within a topic are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunOrdering {
    /// Score descending, doc id ascending; the rank column is ignored.
    #[default]
    ByScore,
    /// Rank ascending, doc id ascending.
    ByRank,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    /// Empty when the file had no entries.
    pub run_tag: String,
    pub topics: BTreeMap<String, Vec<RunEntry>>,
}

impl RunFile {
    pub fn is_empty(&self) -> bool {
        self.topics.values().all(Vec::is_empty)
    }

    pub fn ranked_list(&self, topic: &str) -> RankedList {
        RankedList {
            topic_id: topic.to_string(),
            doc_ids: self
                .topics
                .get(topic)
                .map(|es| es.iter().map(|e| e.doc_id.clone()).collect())
                .unwrap_or_default(),
        }
    }
}

pub fn parse_run<R: BufRead>(reader: R, ordering: RunOrdering) -> Result<RunFile, IngestError> {
    let mut run = RunFile::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [topic, _q0, doc, rank, score, tag] = fields.as_slice() else {
            return Err(parse_err(line_no, format!("expected 6 fields, found {}", fields.len())));
        };
        let rank: i64 = rank
            .parse()
            .map_err(|_| parse_err(line_no, format!("rank `{rank}` is not an integer")))?;
        let score = parse_number(score, "score", line_no)?;
        if run.run_tag.is_empty() {
            run.run_tag = tag.to_string();
        } else if run.run_tag != *tag {
            return Err(IngestError::MixedRunTag {
                line: line_no,
                expected: run.run_tag.clone(),
                found: tag.to_string(),
            });
        }
        if !seen.insert((topic.to_string(), doc.to_string())) {
            return Err(IngestError::DuplicateDoc {
                line: line_no,
                topic: topic.to_string(),
                doc: doc.to_string(),
            });
        }
        run.topics.entry(topic.to_string()).or_default().push(RunEntry {
            doc_id: doc.to_string(),
            rank,
            score,
        });
    }
    for entries in run.topics.values_mut() {
        match ordering {
            RunOrdering::ByScore => {
                entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)))
            }
            RunOrdering::ByRank => entries.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.doc_id.cmp(&b.doc_id))),
        }
    }
    Ok(run)
}

/// Canonical form: topics ascending, entries in stored order, ranks renumbered from 1.
pub fn serialize_run(run: &RunFile) -> String {
    let mut out = String::new();
    for (topic, entries) in &run.topics {
        for (i, e) in entries.iter().enumerate() {
            out.push_str(&format!("{topic} Q0 {} {} {} {}\n", e.doc_id, i + 1, e.score, run.run_tag));
        }
    }
    out
}

/// Per-aspect rewrites applied to raw grade tokens before label lookup,
/// e.g. `relevance: junk -> nr`.
pub type MergeMap = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QrelsOutcome {
    pub ground_truth: GroundTruth,
    /// Grades rewritten to satisfy coupling rules.
    pub coupling_corrections: usize,
    /// Aspect cells filled with the worst label because they were absent.
    pub filled_cells: usize,
}

fn resolve_grade(
    schema: &AspectSchema,
    aspect: usize,
    token: &str,
    merge: &MergeMap,
    line: usize,
) -> Result<usize, IngestError> {
    let a = &schema.aspects()[aspect];
    let token = merge
        .get(&a.name)
        .and_then(|m| m.get(token))
        .map_or(token, String::as_str);
    if let Some(g) = a.label_index(token) {
        return Ok(g);
    }
    match token.parse::<usize>() {
        Ok(g) if g < a.labels.len() => Ok(g),
        _ => Err(IngestError::UnknownLabel {
            line,
            aspect: a.name.clone(),
            label: token.to_string(),
        }),
    }
}

/// Validates merge targets against the schema.
pub fn check_merge_map(schema: &AspectSchema, merge: &MergeMap) -> Result<(), IngestError> {
    for (aspect, map) in merge {
        let idx = schema
            .aspect_index(aspect)
            .ok_or_else(|| IngestError::UnknownAspect(aspect.clone()))?;
        for target in map.values() {
            if schema.aspects()[idx].label_index(target).is_none() {
                return Err(IngestError::UnknownLabel {
                    line: 0,
                    aspect: aspect.clone(),
                    label: target.clone(),
                });
            }
        }
    }
    Ok(())
}

pub fn parse_qrels<R: BufRead>(reader: R, schema: &AspectSchema, merge: &MergeMap) -> Result<QrelsOutcome, IngestError> {
    check_merge_map(schema, merge)?;
    let expected: Vec<String> = schema.aspects().iter().map(|a| a.name.clone()).collect();
    let mut header_seen = false;
    let mut outcome = QrelsOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(list) = comment.trim().strip_prefix("aspects:") {
                let found: Vec<String> = list.split_whitespace().map(String::from).collect();
                if found != expected {
                    return Err(IngestError::HeaderMismatch { expected, found });
                }
                header_seen = true;
            }
            continue;
        }
        if !header_seen {
            return Err(parse_err(line_no, "missing `# aspects:` header before first judgment"));
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(parse_err(line_no, "expected `topic iteration docid grade...`"));
        }
        let (topic, doc, grades) = (fields[0], fields[2], &fields[3..]);
        if grades.len() > schema.len() {
            return Err(IngestError::AspectCountMismatch {
                line: line_no,
                expected: schema.len(),
                got: grades.len(),
            });
        }
        let mut tuple = vec![0usize; schema.len()];
        for (a, token) in grades.iter().enumerate() {
            tuple[a] = resolve_grade(schema, a, token, merge, line_no)?;
        }
        outcome.filled_cells += schema.len() - grades.len();
        if outcome.ground_truth.get(topic, doc).is_some() {
            return Err(IngestError::DuplicateJudgment {
                line: line_no,
                topic: topic.to_string(),
                doc: doc.to_string(),
            });
        }
        let (tuple, rewrites) = schema.enforce_rules(&LabelTuple::new(tuple))?;
        outcome.coupling_corrections += rewrites;
        outcome.ground_truth.insert(schema, topic, doc, tuple)?;
    }
    Ok(outcome)
}

/// Joins single-aspect TREC qrels (`topic iteration docid grade`) into one
/// ground truth. Pairs missing from an aspect's file get that aspect's worst label.
pub fn join_aspect_qrels<R: BufRead>(
    schema: &AspectSchema,
    files: Vec<(String, R)>,
    merge: &MergeMap,
) -> Result<QrelsOutcome, IngestError> {
    check_merge_map(schema, merge)?;
    let mut cells: BTreeMap<(String, String), Vec<Option<usize>>> = BTreeMap::new();
    for (aspect_name, reader) in files {
        let aspect = schema
            .aspect_index(&aspect_name)
            .ok_or_else(|| IngestError::UnknownAspect(aspect_name.clone()))?;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let [topic, _iter, doc, grade] = fields.as_slice() else {
                return Err(parse_err(line_no, format!("{aspect_name}: expected 4 fields, found {}", fields.len())));
            };
            let g = resolve_grade(schema, aspect, grade, merge, line_no)?;
            let slot = cells
                .entry((topic.to_string(), doc.to_string()))
                .or_insert_with(|| vec![None; schema.len()]);
            if slot[aspect].replace(g).is_some() {
                return Err(IngestError::DuplicateJudgment {
                    line: line_no,
                    topic: topic.to_string(),
                    doc: doc.to_string(),
                });
            }
        }
    }
    let mut outcome = QrelsOutcome::default();
    for ((topic, doc), slot) in cells {
        outcome.filled_cells += slot.iter().filter(|g| g.is_none()).count();
        let tuple = LabelTuple::new(slot.into_iter().map(|g| g.unwrap_or(0)).collect());
        let (tuple, rewrites) = schema.enforce_rules(&tuple)?;
        outcome.coupling_corrections += rewrites;
        outcome.ground_truth.insert(schema, &topic, &doc, tuple)?;
    }
    Ok(outcome)
}

/// Writes ground truth in the multi-aspect qrels format using label names.
pub fn serialize_qrels(gt: &GroundTruth, schema: &AspectSchema) -> String {
    let names: Vec<&str> = schema.aspects().iter().map(|a| a.name.as_str()).collect();
    let mut out = format!("# aspects: {}\n", names.join(" "));
    for (topic, docs) in gt.topics() {
        for (doc, tuple) in docs {
            let labels = schema.format_tuple(tuple).replace(',', " ");
            out.push_str(&format!("{topic} 0 {doc} {labels}\n"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalTable {
    rows: Vec<(String, f64)>,
}

impl SignalTable {
    pub fn new(rows: Vec<(String, f64)>) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        for (i, (doc, _)) in rows.iter().enumerate() {
            if !seen.insert(doc.as_str()) {
                return Err(IngestError::DuplicateSignal { line: i + 1, doc: doc.clone() });
            }
        }
        Ok(SignalTable { rows })
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, IngestError> {
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let [doc, score] = fields.as_slice() else {
                return Err(parse_err(line_no, format!("expected `docid score`, found {} field(s)", fields.len())));
            };
            if !seen.insert(doc.to_string()) {
                return Err(IngestError::DuplicateSignal {
                    line: line_no,
                    doc: doc.to_string(),
                });
            }
            rows.push((doc.to_string(), parse_number(score, "score", line_no)?));
        }
        Ok(SignalTable { rows })
    }

    pub fn rows(&self) -> &[(String, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn restricted(&self, docs: &HashSet<&str>) -> SignalTable {
        SignalTable {
            rows: self.rows.iter().filter(|(d, _)| docs.contains(d.as_str())).cloned().collect(),
        }
    }
}

/// Block of each position of a descending-sorted table, from cumulative
/// fractions rounded to the nearest count. The first block keeps at least one document.
pub fn quantile_block_sizes(n: usize, fractions: &[f64]) -> Result<Vec<usize>, IngestError> {
    if fractions.is_empty() || fractions.iter().any(|f| *f <= 0.0 || !f.is_finite()) {
        return Err(IngestError::Discretization("fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(IngestError::Discretization(format!("fractions sum to {total}, not 1")));
    }
    let mut sizes = Vec::with_capacity(fractions.len());
    let mut cumulative = 0.0;
    let mut prev = 0usize;
    for (i, f) in fractions.iter().enumerate() {
        cumulative += f;
        let mut boundary = if i + 1 == fractions.len() {
            n
        } else {
            // snap first so float drift (0.15 * 20 = 3.0000000000000004) cannot move a .5 boundary
            (((cumulative * n as f64) * 1e6).round() / 1e6).round().max(0.0) as usize
        };
        if i == 0 && n > 0 {
            boundary = boundary.max(1);
        }
        let boundary = boundary.clamp(prev, n);
        sizes.push(boundary - prev);
        prev = boundary;
    }
    Ok(sizes)
}

/// Assigns `grades[i]` to the i-th block of documents sorted by score
/// descending (ties by doc id). `grades` runs from the top block down.
pub fn discretize_quantile(
    signals: &SignalTable,
    fractions: &[f64],
    grades: &[usize],
) -> Result<BTreeMap<String, usize>, IngestError> {
    if grades.len() != fractions.len() {
        return Err(IngestError::Discretization(format!(
            "{} grade(s) for {} fraction(s)",
            grades.len(),
            fractions.len()
        )));
    }
    let sizes = quantile_block_sizes(signals.len(), fractions)?;
    let mut sorted: Vec<&(String, f64)> = signals.rows.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut out = BTreeMap::new();
    let mut docs = sorted.into_iter();
    for (size, &grade) in sizes.iter().zip(grades) {
        for (doc, _) in docs.by_ref().take(*size) {
            out.insert(doc.clone(), grade);
        }
    }
    Ok(out)
}

/// Quantiles computed separately within each topic's pool. Pool documents
/// absent from the table are left out.
pub fn discretize_quantile_per_topic(
    signals: &SignalTable,
    pools: &BTreeMap<String, Vec<String>>,
    fractions: &[f64],
    grades: &[usize],
) -> Result<BTreeMap<(String, String), usize>, IngestError> {
    let mut out = BTreeMap::new();
    for (topic, docs) in pools {
        let pool: HashSet<&str> = docs.iter().map(String::as_str).collect();
        for (doc, g) in discretize_quantile(&signals.restricted(&pool), fractions, grades)? {
            out.insert((topic.clone(), doc), g);
        }
    }
    Ok(out)
}

/// Grade = number of cut points not exceeding the score.
pub fn discretize_threshold(signals: &SignalTable, thresholds: &[f64]) -> Result<BTreeMap<String, usize>, IngestError> {
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IngestError::Discretization("thresholds must be strictly ascending".into()));
    }
    Ok(signals
        .rows
        .iter()
        .map(|(doc, s)| (doc.clone(), thresholds.iter().filter(|&&c| c <= *s).count()))
        .collect())
}
