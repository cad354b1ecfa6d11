//! Single-aspect measures and the multi-aspect measures composed from them.
//!
//! DCG discounts every rank, including the first, by `log_b(rank + 1)`.
//! Gains are used linearly. Ideals are taken over all judged documents of a
//! topic, never just the retrieved ones, and AP's recall base is the judged
//! relevant count.

mod baselines;
mod ideal;
mod toma;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::aspect::{AspectSchema, TopicJudgments};

pub use baselines::{cam_score, mm_score, uniform_aspect_weights, MmVariant};
pub use ideal::{
    estimate_upper_bound, generate_ideal_rankings, toma_ideal_ranking, IdealRanking, IdealStrategy, UpperBound,
    EXHAUSTIVE_LIMIT,
};
pub use toma::toma_score;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("topic {topic}: document `{doc}` appears more than once")]
    DuplicateDoc { topic: String, doc: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("aspect weights must lie in [0,1] and sum to 1 (got {0:?})")]
    Weight(Vec<f64>),
    #[error("no weight assigned to judged tuple {0}")]
    MissingWeight(String),
    #[error("invalid gain map: {0}")]
    Gain(String),
}

/// Documents retrieved for one topic, rank 1 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub topic_id: String,
    pub doc_ids: Vec<String>,
}

impl RankedList {
    pub fn new(topic_id: impl Into<String>, doc_ids: Vec<String>) -> Result<Self, MeasureError> {
        let topic_id = topic_id.into();
        let mut seen = HashSet::new();
        for d in &doc_ids {
            if !seen.insert(d.as_str()) {
                return Err(MeasureError::DuplicateDoc {
                    topic: topic_id,
                    doc: d.clone(),
                });
            }
        }
        Ok(RankedList { topic_id, doc_ids })
    }

    /// Convenience for tests and fixtures.
    pub fn of(topic_id: &str, docs: &[&str]) -> Result<Self, MeasureError> {
        Self::new(topic_id, docs.iter().map(|d| d.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureKind {
    Ndcg,
    Ap,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Ndcg => "ndcg",
            MeasureKind::Ap => "ap",
        }
    }
}

impl FromStr for MeasureKind {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ndcg" => Ok(MeasureKind::Ndcg),
            "ap" | "map" => Ok(MeasureKind::Ap),
            _ => Err(MeasureError::Config(format!("unknown measure `{s}` (expected ndcg or ap)"))),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Depth {
    Full,
    At(usize),
}

impl Depth {
    pub fn cut(&self, len: usize) -> usize {
        match self {
            Depth::Full => len,
            Depth::At(k) => len.min(*k),
        }
    }
}

impl FromStr for Depth {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("full") || s == "all" {
            return Ok(Depth::Full);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Depth::At(k)),
            _ => Err(MeasureError::Config(format!("depth must be a positive integer or `full`, got `{s}`"))),
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Full => f.write_str("full"),
            Depth::At(k) => write!(f, "{k}"),
        }
    }
}

/// Per-aspect numeric gain of every label, indexed `[aspect][grade]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectGains {
    gains: Vec<Vec<f64>>,
}

impl AspectGains {
    pub fn new(schema: &AspectSchema, gains: Vec<Vec<f64>>) -> Result<Self, MeasureError> {
        if gains.len() != schema.len() {
            return Err(MeasureError::Gain(format!(
                "{} aspect map(s) for {} aspect(s)",
                gains.len(),
                schema.len()
            )));
        }
        for (aspect, row) in schema.aspects().iter().zip(&gains) {
            if row.len() != aspect.labels.len() {
                return Err(MeasureError::Gain(format!("aspect `{}` needs {} gains", aspect.name, aspect.labels.len())));
            }
            if row.iter().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(MeasureError::Gain(format!("aspect `{}` has a negative gain", aspect.name)));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err(MeasureError::Gain(format!(
                    "gains of aspect `{}` decrease along its label order",
                    aspect.name
                )));
            }
        }
        Ok(AspectGains { gains })
    }

    /// Gain = grade index.
    pub fn grade_indices(schema: &AspectSchema) -> Self {
        AspectGains {
            gains: schema
                .aspects()
                .iter()
                .map(|a| (0..a.labels.len()).map(|g| g as f64).collect())
                .collect(),
        }
    }

    /// Every grade above the worst maps to 1.
    pub fn binary_above_zero(schema: &AspectSchema) -> Self {
        AspectGains {
            gains: schema
                .aspects()
                .iter()
                .map(|a| (0..a.labels.len()).map(|g| if g > 0 { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Builds gains from label-name maps. Aspects absent from `maps` use grade indices;
    /// labels absent from an aspect's map get 0.
    pub fn from_label_maps(schema: &AspectSchema, maps: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<Self, MeasureError> {
        for (aspect, map) in maps {
            let idx = schema
                .aspect_index(aspect)
                .ok_or_else(|| MeasureError::Gain(format!("unknown aspect `{aspect}`")))?;
            for label in map.keys() {
                if schema.aspects()[idx].label_index(label).is_none() {
                    return Err(MeasureError::Gain(format!("unknown label `{label}` for aspect `{aspect}`")));
                }
            }
        }
        let gains = schema
            .aspects()
            .iter()
            .map(|a| match maps.get(&a.name) {
                Some(map) => a.labels.iter().map(|l| map.get(&l.name).copied().unwrap_or(0.0)).collect(),
                None => (0..a.labels.len()).map(|g| g as f64).collect(),
            })
            .collect();
        AspectGains::new(schema, gains)
    }

    /// Binary map: listed labels ↦ 1, others ↦ 0. Unlisted aspects use `grade > 0`.
    pub fn from_relevant_sets(schema: &AspectSchema, sets: &BTreeMap<String, Vec<String>>) -> Result<Self, MeasureError> {
        let mut maps = BTreeMap::new();
        for (aspect, labels) in sets {
            maps.insert(aspect.clone(), labels.iter().map(|l| (l.clone(), 1.0)).collect());
        }
        let mut gains = Self::from_label_maps(schema, &maps)?;
        for (a, aspect) in schema.aspects().iter().enumerate() {
            if !sets.contains_key(&aspect.name) {
                gains.gains[a] = (0..aspect.labels.len()).map(|g| if g > 0 { 1.0 } else { 0.0 }).collect();
            }
        }
        Ok(gains)
    }

    pub fn gain(&self, aspect: usize, grade: usize) -> f64 {
        self.gains[aspect][grade]
    }

    pub fn aspect_count(&self) -> usize {
        self.gains.len()
    }

    pub fn is_binary(&self) -> bool {
        self.gains.iter().flatten().all(|&g| g == 0.0 || g == 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureConfig {
    pub kind: MeasureKind,
    pub depth: Depth,
    pub log_base: f64,
    /// Per-aspect projection used by CAM and MM.
    pub gains: AspectGains,
}

impl MeasureConfig {
    /// Grade-index gains for nDCG, `grade > 0` relevance for AP, log base 2, full depth.
    pub fn default_for(schema: &AspectSchema, kind: MeasureKind) -> Self {
        let gains = match kind {
            MeasureKind::Ndcg => AspectGains::grade_indices(schema),
            MeasureKind::Ap => AspectGains::binary_above_zero(schema),
        };
        MeasureConfig {
            kind,
            depth: Depth::Full,
            log_base: 2.0,
            gains,
        }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        if self.log_base <= 1.0 || !self.log_base.is_finite() {
            return Err(MeasureError::Config(format!("log base must exceed 1, got {}", self.log_base)));
        }
        if self.kind == MeasureKind::Ap && !self.gains.is_binary() {
            return Err(MeasureError::Config("AP needs binary per-aspect maps".into()));
        }
        Ok(())
    }
}

pub fn dcg(gains: &[f64], log_base: f64) -> f64 {
    let ln_base = log_base.ln();
    gains
        .iter()
        .enumerate()
        .map(|(i, g)| g * ln_base / ((i + 2) as f64).ln())
        .sum()
}

/// nDCG from precomputed gains: the run's gains in rank order, and the gains
/// of every judged document (in any order).
pub fn ndcg_from_gains(run_gains: &[f64], judged_gains: &[f64], depth: Depth, log_base: f64) -> f64 {
    let mut ideal = judged_gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    ideal.truncate(depth.cut(ideal.len()));
    let ideal_dcg = dcg(&ideal, log_base);
    if ideal_dcg <= 0.0 {
        return 0.0;
    }
    let run = &run_gains[..depth.cut(run_gains.len())];
    dcg(run, log_base) / ideal_dcg
}

pub fn ndcg<F>(run: &RankedList, gains_of: F, judged_gains: &[f64], depth: Depth, log_base: f64) -> f64
where
    F: Fn(&str) -> f64,
{
    let run_gains: Vec<f64> = run.doc_ids.iter().map(|d| gains_of(d)).collect();
    ndcg_from_gains(&run_gains, judged_gains, depth, log_base)
}

/// AP from a relevance pattern in rank order; `total_relevant` is the recall base.
pub fn average_precision_from_flags(flags: &[bool], total_relevant: usize, depth: Depth) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in flags[..depth.cut(flags.len())].iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

pub fn average_precision(run: &RankedList, relevant: &HashSet<&str>, total_relevant: usize, depth: Depth) -> f64 {
    let flags: Vec<bool> = run.doc_ids.iter().map(|d| relevant.contains(d.as_str())).collect();
    average_precision_from_flags(&flags, total_relevant, depth)
}

/// Score of `run` on one aspect after projecting grades through `cfg.gains`.
pub(crate) fn aspect_score(run: &RankedList, judged: Option<&TopicJudgments>, aspect: usize, cfg: &MeasureConfig) -> f64 {
    let Some(judged) = judged else { return 0.0 };
    let gain_of = |doc: &str| judged.get(doc).map_or(0.0, |t| cfg.gains.gain(aspect, t.grades()[aspect]));
    match cfg.kind {
        MeasureKind::Ndcg => {
            let all: Vec<f64> = judged.values().map(|t| cfg.gains.gain(aspect, t.grades()[aspect])).collect();
            ndcg(run, gain_of, &all, cfg.depth, cfg.log_base)
        }
        MeasureKind::Ap => {
            let total = judged
                .values()
                .filter(|t| cfg.gains.gain(aspect, t.grades()[aspect]) >= 1.0)
                .count();
            let flags: Vec<bool> = run.doc_ids.iter().map(|d| gain_of(d) >= 1.0).collect();
            average_precision_from_flags(&flags, total, cfg.depth)
        }
    }
}
