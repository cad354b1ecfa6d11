//! Runs × topics grids of scores and their TSV form.
//!
//! Rows are `run_tag<TAB>topic_id<TAB>measure<TAB>score` with four decimals.
//! Each run also gets an `all` row holding its mean over topics.

use std::collections::BTreeMap;
use std::io::BufRead;

use thiserror::Error;

/// Pseudo-topic carrying per-run means.
pub const ALL_TOPICS: &str = "all";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("measure `{measure}`: run `{run}` has no score for topic `{topic}`")]
    NotRectangular { measure: String, run: String, topic: String },
    #[error("matrices `{0}` and `{1}` cover different runs or topics")]
    Mismatch(String, String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    measure: String,
    runs: Vec<String>,
    topics: Vec<String>,
    /// Row-major, one row per run.
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Zero-filled matrix. Runs and topics are kept in the given order.
    pub fn new(measure: impl Into<String>, runs: Vec<String>, topics: Vec<String>) -> Self {
        let scores = vec![0.0; runs.len() * topics.len()];
        ScoreMatrix {
            measure: measure.into(),
            runs,
            topics,
            scores,
        }
    }

    /// Builds a matrix from nested rows; `rows[r][t]` is run r on topic t.
    pub fn from_rows(measure: impl Into<String>, runs: Vec<String>, topics: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(rows.len(), runs.len());
        assert!(rows.iter().all(|r| r.len() == topics.len()));
        ScoreMatrix {
            measure: measure.into(),
            runs,
            topics,
            scores: rows.into_iter().flatten().collect(),
        }
    }

    pub fn measure(&self) -> &str {
        &self.measure
    }

    pub fn runs(&self) -> &[String] {
        &self.runs
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn get(&self, run: usize, topic: usize) -> f64 {
        self.scores[run * self.topics.len() + topic]
    }

    pub fn set(&mut self, run: usize, topic: usize, value: f64) {
        let n = self.topics.len();
        self.scores[run * n + topic] = value;
    }

    pub fn run_scores(&self, run: usize) -> &[f64] {
        let n = self.topics.len();
        &self.scores[run * n..(run + 1) * n]
    }

    /// Scores of every run on one topic, in run order.
    pub fn topic_scores(&self, topic: usize) -> Vec<f64> {
        (0..self.runs.len()).map(|r| self.get(r, topic)).collect()
    }

    pub fn run_mean(&self, run: usize) -> f64 {
        let row = self.run_scores(run);
        if row.is_empty() {
            0.0
        } else {
            row.iter().sum::<f64>() / row.len() as f64
        }
    }

    pub fn same_shape(&self, other: &ScoreMatrix) -> bool {
        self.runs == other.runs && self.topics == other.topics
    }

    /// Copy with rows sorted by run tag and columns by topic id.
    pub fn sorted(&self) -> ScoreMatrix {
        let mut run_idx: Vec<usize> = (0..self.runs.len()).collect();
        run_idx.sort_by(|&a, &b| self.runs[a].cmp(&self.runs[b]));
        let mut topic_idx: Vec<usize> = (0..self.topics.len()).collect();
        topic_idx.sort_by(|&a, &b| self.topics[a].cmp(&self.topics[b]));
        let rows = run_idx
            .iter()
            .map(|&r| topic_idx.iter().map(|&t| self.get(r, t)).collect())
            .collect();
        ScoreMatrix::from_rows(
            self.measure.clone(),
            run_idx.iter().map(|&r| self.runs[r].clone()).collect(),
            topic_idx.iter().map(|&t| self.topics[t].clone()).collect(),
            rows,
        )
    }

    /// TSV rows for this matrix, run-major, with the `all` row after each run's topics.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        // `+ 0.0` turns the -0.0 of an empty sum into 0.0 so it never prints a sign
        for (r, run) in self.runs.iter().enumerate() {
            for (t, topic) in self.topics.iter().enumerate() {
                out.push_str(&format!("{run}\t{topic}\t{}\t{:.4}\n", self.measure, self.get(r, t) + 0.0));
            }
            out.push_str(&format!("{run}\t{ALL_TOPICS}\t{}\t{:.4}\n", self.measure, self.run_mean(r) + 0.0));
        }
        out
    }
}

/// Reads score TSV into one matrix per measure, in order of first appearance.
/// `#` comment lines and `all` rows are skipped.
pub fn parse_score_tsv<R: BufRead>(reader: R) -> Result<Vec<ScoreMatrix>, ScoreError> {
    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<String, BTreeMap<(String, String), f64>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| ScoreError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        let [run, topic, measure, score] = fields.as_slice() else {
            return Err(ScoreError::Parse {
                line: line_no,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        };
        if *topic == ALL_TOPICS {
            continue;
        }
        let value: f64 = score.parse().map_err(|_| ScoreError::Parse {
            line: line_no,
            message: format!("score `{score}` is not a number"),
        })?;
        if !order.iter().any(|m| m == measure) {
            order.push(measure.to_string());
        }
        let previous = cells
            .entry(measure.to_string())
            .or_default()
            .insert((run.to_string(), topic.to_string()), value);
        if previous.is_some() {
            return Err(ScoreError::Parse {
                line: line_no,
                message: format!("duplicate score for run `{run}` topic `{topic}`"),
            });
        }
    }
    order
        .into_iter()
        .map(|measure| {
            let grid = &cells[&measure];
            let mut runs: Vec<String> = grid.keys().map(|(r, _)| r.clone()).collect();
            runs.dedup();
            let mut topics: Vec<String> = grid.keys().map(|(_, t)| t.clone()).collect();
            topics.sort();
            topics.dedup();
            let mut m = ScoreMatrix::new(measure.clone(), runs.clone(), topics.clone());
            for (r, run) in runs.iter().enumerate() {
                for (t, topic) in topics.iter().enumerate() {
                    let v = grid.get(&(run.clone(), topic.clone())).ok_or_else(|| ScoreError::NotRectangular {
                        measure: measure.clone(),
                        run: run.clone(),
                        topic: topic.clone(),
                    })?;
                    m.set(r, t, *v);
                }
            }
            Ok(m)
        })
        .collect()
}
