//! Candidate "ideal" rankings for measures that do not define one, and the
//! upper-bound estimate built from them.

use std::cmp::Ordering;

use crate::aspect::{LabelTuple, TopicJudgments};
use crate::order::WeightAssignment;

use super::{AspectGains, MeasureError, RankedList};

/// Judged sets up to this size are also searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdealStrategy {
    /// Sort by aspect `order[0]` descending, ties by `order[1]`, and so on.
    Lexicographic(Vec<usize>),
    SumOfGains,
    SumOfSquaredGains,
    MaxGain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealRanking {
    pub strategy: IdealStrategy,
    pub ranking: RankedList,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

fn sorted_by<F>(topic_id: &str, judged: &TopicJudgments, mut cmp: F) -> RankedList
where
    F: FnMut(&LabelTuple, &LabelTuple) -> Ordering,
{
    let mut docs: Vec<(&String, &LabelTuple)> = judged.iter().collect();
    // BTreeMap iteration is doc-ascending; the stable sort keeps that for ties
    docs.sort_by(|(_, a), (_, b)| cmp(a, b));
    RankedList {
        topic_id: topic_id.to_string(),
        doc_ids: docs.into_iter().map(|(d, _)| d.clone()).collect(),
    }
}

/// One lexicographic ideal per permutation of aspects, then the sum, sum of
/// squares and max strategies. Scores come from `gains`; ties go to the
/// smaller doc id.
pub fn generate_ideal_rankings(topic_id: &str, judged: &TopicJudgments, gains: &AspectGains) -> Vec<IdealRanking> {
    let n = gains.aspect_count();
    let g = |t: &LabelTuple, a: usize| gains.gain(a, t.grades()[a]);
    let mut out = Vec::new();
    for perm in permutations(n) {
        let ranking = sorted_by(topic_id, judged, |x, y| {
            perm.iter()
                .map(|&a| g(y, a).total_cmp(&g(x, a)))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
        out.push(IdealRanking {
            strategy: IdealStrategy::Lexicographic(perm),
            ranking,
        });
    }
    let sum = |t: &LabelTuple| (0..n).map(|a| g(t, a)).sum::<f64>();
    let sum_sq = |t: &LabelTuple| (0..n).map(|a| g(t, a) * g(t, a)).sum::<f64>();
    let max = |t: &LabelTuple| (0..n).map(|a| g(t, a)).fold(0.0, f64::max);
    out.push(IdealRanking {
        strategy: IdealStrategy::SumOfGains,
        ranking: sorted_by(topic_id, judged, |x, y| sum(y).total_cmp(&sum(x))),
    });
    out.push(IdealRanking {
        strategy: IdealStrategy::SumOfSquaredGains,
        ranking: sorted_by(topic_id, judged, |x, y| sum_sq(y).total_cmp(&sum_sq(x))),
    });
    out.push(IdealRanking {
        strategy: IdealStrategy::MaxGain,
        ranking: sorted_by(topic_id, judged, |x, y| max(y).total_cmp(&max(x))),
    });
    out
}

/// Judged documents by descending weight; unweighted tuples sort last.
pub fn toma_ideal_ranking(topic_id: &str, judged: &TopicJudgments, weights: &WeightAssignment) -> RankedList {
    sorted_by(topic_id, judged, |x, y| weights.get(y).cmp(&weights.get(x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    /// Best score among the generated ideal rankings.
    pub from_ideals: f64,
    /// Best score over every ordered subset of the judged documents, when small enough.
    pub exhaustive: Option<f64>,
}

impl UpperBound {
    pub fn value(&self) -> f64 {
        self.exhaustive.map_or(self.from_ideals, |e| e.max(self.from_ideals))
    }
}

fn for_each_arrangement<F>(items: &[String], visit: &mut F) -> Result<(), MeasureError>
where
    F: FnMut(&[String]) -> Result<(), MeasureError>,
{
    fn go<F>(items: &[String], used: &mut [bool], prefix: &mut Vec<String>, visit: &mut F) -> Result<(), MeasureError>
    where
        F: FnMut(&[String]) -> Result<(), MeasureError>,
    {
        for i in 0..items.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            prefix.push(items[i].clone());
            visit(prefix)?;
            go(items, used, prefix, visit)?;
            prefix.pop();
            used[i] = false;
        }
        Ok(())
    }
    go(items, &mut vec![false; items.len()], &mut Vec::new(), visit)
}

/// Maximum of `measure` over the ideal rankings, plus an exhaustive search
/// over all non-empty arrangements when at most [`EXHAUSTIVE_LIMIT`] documents are judged.
pub fn estimate_upper_bound<F>(
    measure: F,
    topic_id: &str,
    judged: &TopicJudgments,
    gains: &AspectGains,
) -> Result<UpperBound, MeasureError>
where
    F: Fn(&RankedList) -> Result<f64, MeasureError>,
{
    let mut from_ideals = 0.0_f64;
    for ideal in generate_ideal_rankings(topic_id, judged, gains) {
        from_ideals = from_ideals.max(measure(&ideal.ranking)?);
    }
    let exhaustive = if judged.len() <= EXHAUSTIVE_LIMIT {
        let docs: Vec<String> = judged.keys().cloned().collect();
        let mut best = 0.0_f64;
        let mut probe = RankedList {
            topic_id: topic_id.to_string(),
            doc_ids: Vec::new(),
        };
        for_each_arrangement(&docs, &mut |prefix| {
            probe.doc_ids.clear();
            probe.doc_ids.extend_from_slice(prefix);
            best = best.max(measure(&probe)?);
            Ok(())
        })?;
        Some(best)
    } else {
        None
    };
    Ok(UpperBound { from_ideals, exhaustive })
}
