//! Scores a set of runs under several measure families at once.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::aspect::{build_tuple_space, AspectSchema, GroundTruth};
use crate::ingest::RunFile;
use crate::measures::{
    cam_score, mm_score, toma_score, uniform_aspect_weights, Depth, MeasureConfig, MeasureError, MmVariant,
};
use crate::order::{assign_weights, build_order, MetricKind, OrderError, WeightAssignment, WeightPolicy};
use crate::score::ScoreMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("unknown measure family `{0}` (expected eucl, manh, cheb, cam or mm)")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Toma(MetricKind),
    Cam,
    Mm,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Toma(MetricKind::Euclidean),
        Family::Toma(MetricKind::Manhattan),
        Family::Toma(MetricKind::Chebyshev),
        Family::Cam,
        Family::Mm,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Family::Toma(m) => m.tag(),
            Family::Cam => "CAM",
            Family::Mm => "MM",
        }
    }
}

impl FromStr for Family {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cam" => Ok(Family::Cam),
            "mm" => Ok(Family::Mm),
            other => other
                .parse::<MetricKind>()
                .map(Family::Toma)
                .map_err(|_| EvalError::UnknownFamily(s.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub measure: MeasureConfig,
    pub families: Vec<Family>,
    /// Weights for the TOMA families.
    pub weight_policy: WeightPolicy,
    /// CAM/MM aspect weights; uniform when `None`.
    pub aspect_weights: Option<Vec<f64>>,
    pub mm_variant: MmVariant,
}

impl EvalPlan {
    /// Label written in score files, e.g. `EUCL-ndcg` or `CAM-ap@5`.
    pub fn label(&self, family: Family) -> String {
        let base = format!("{}-{}", family.tag(), self.measure.kind);
        match self.measure.depth {
            Depth::Full => base,
            Depth::At(k) => format!("{base}@{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub matrices: Vec<ScoreMatrix>,
    /// Topics scored 0 everywhere because nothing is judged for them.
    pub unjudged_topics: Vec<String>,
}

enum Scorer {
    Toma(WeightAssignment),
    Cam,
    Mm,
}

/// Scores every run on every topic seen in the qrels or the runs.
/// Runs are ordered by tag and topics by id.
pub fn evaluate(schema: &AspectSchema, gt: &GroundTruth, runs: &[RunFile], plan: &EvalPlan) -> Result<Evaluation, EvalError> {
    plan.measure.validate()?;
    let aspect_weights = plan
        .aspect_weights
        .clone()
        .unwrap_or_else(|| uniform_aspect_weights(schema.len()));

    let mut runs: Vec<&RunFile> = runs.iter().collect();
    runs.sort_by(|a, b| a.run_tag.cmp(&b.run_tag));
    let topics: Vec<String> = gt
        .topic_ids()
        .cloned()
        .chain(runs.iter().flat_map(|r| r.topics.keys().cloned()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let unjudged_topics = topics.iter().filter(|t| gt.topic(t).is_none()).cloned().collect();

    let space = build_tuple_space(schema);
    let mut matrices = Vec::with_capacity(plan.families.len());
    for &family in &plan.families {
        let scorer = match family {
            Family::Toma(metric) => {
                let order = build_order(&space, schema, metric)?;
                Scorer::Toma(assign_weights(&order, plan.weight_policy.clone())?)
            }
            Family::Cam => Scorer::Cam,
            Family::Mm => Scorer::Mm,
        };
        let cells: Vec<(usize, usize)> = (0..runs.len())
            .flat_map(|r| (0..topics.len()).map(move |t| (r, t)))
            .collect();
        let scores = cells
            .par_iter()
            .map(|&(r, t)| {
                let list = runs[r].ranked_list(&topics[t]);
                match &scorer {
                    Scorer::Toma(w) => toma_score(&list, gt, schema, w, &plan.measure),
                    Scorer::Cam => cam_score(&list, gt, &plan.measure, &aspect_weights),
                    Scorer::Mm => mm_score(&list, gt, &plan.measure, &aspect_weights, plan.mm_variant),
                }
            })
            .collect::<Result<Vec<f64>, MeasureError>>()?;
        let rows = scores.chunks(topics.len().max(1)).map(<[f64]>::to_vec).collect();
        let rows = if topics.is_empty() { vec![Vec::new(); runs.len()] } else { rows };
        matrices.push(ScoreMatrix::from_rows(
            plan.label(family),
            runs.iter().map(|r| r.run_tag.clone()).collect(),
            topics.clone(),
            rows,
        ));
    }
    Ok(Evaluation {
        matrices,
        unjudged_topics,
    })
}
