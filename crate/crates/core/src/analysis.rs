//! Meta-evaluation over score matrices: rank correlation between measures,
//! discriminative power under a paired bootstrap test, and audits of the
//! documents the best runs put at the top.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aspect::GroundTruth;
use crate::ingest::RunFile;
use crate::score::ScoreMatrix;

/// Mean τ above this marks two measures as equivalent.
pub const EQUIVALENCE_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least {needed} values are required, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("tau is undefined: one input is constant")]
    DegenerateInput,
    #[error("input contains NaN")]
    NotANumber,
    #[error("matrices `{0}` and `{1}` cover different runs or topics")]
    Mismatch(String, String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid rank bands: {0}")]
    InvalidBands(String),
}

/// Kendall's tau-b, computed in O(n log n).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::TooShort { needed: 2, got: n });
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(AnalysisError::NotANumber);
    }
    // `+ 0.0` folds -0.0 into 0.0 so sorting and equality agree
    let mut pairs: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let ties = |len: u64| len * len.saturating_sub(1) / 2;
    let total = ties(n as u64);
    // ties in x, and joint ties in (x, y)
    let (mut x_ties, mut joint_ties) = (0u64, 0u64);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        x_ties += ties((j - i) as u64);
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && pairs[l].1 == pairs[k].1 {
                l += 1;
            }
            joint_ties += ties((l - k) as u64);
            k = l;
        }
        i = j;
    }

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = count_inversions(&mut ys);

    let mut y_ties = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        y_ties += ties((j - i) as u64);
        i = j;
    }

    let x_pairs = total - x_ties;
    let y_pairs = total - y_ties;
    if x_pairs == 0 || y_pairs == 0 {
        return Err(AnalysisError::DegenerateInput);
    }
    // concordant - discordant
    let numerator = total as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64 - 2.0 * swaps as f64;
    Ok(numerator / ((x_pairs as f64) * (y_pairs as f64)).sqrt())
}

/// Sorts `v` ascending and returns the number of strictly inverted pairs.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Runs of one topic ordered by score, best first; ties by run tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRanking {
    pub topic_id: String,
    pub entries: Vec<(String, f64)>,
}

pub fn system_ranking(m: &ScoreMatrix, topic: usize) -> SystemRanking {
    let mut entries: Vec<(String, f64)> = m
        .runs()
        .iter()
        .enumerate()
        .map(|(r, tag)| (tag.clone(), m.get(r, topic)))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    SystemRanking {
        topic_id: m.topics()[topic].clone(),
        entries,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub measure_a: String,
    pub measure_b: String,
    /// `None` where either measure scores every run identically.
    pub per_topic: Vec<(String, Option<f64>)>,
    pub mean_tau: Option<f64>,
    pub excluded: usize,
    pub equivalent: bool,
}

impl CorrelationReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("measure_a\tmeasure_b\ttopic\ttau\n");
        for (topic, tau) in &self.per_topic {
            let _ = writeln!(out, "{}\t{}\t{topic}\t{}", self.measure_a, self.measure_b, fmt_opt(*tau));
        }
        let _ = writeln!(
            out,
            "{}\t{}\tmean\t{}\t# excluded={} equivalent={}",
            self.measure_a,
            self.measure_b,
            fmt_opt(self.mean_tau),
            self.excluded,
            self.equivalent
        );
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{:.4}", x + 0.0))
}

/// Realigns `m` to the run and topic order of `reference`, if both cover the same sets.
fn aligned(reference: &ScoreMatrix, m: &ScoreMatrix) -> Option<ScoreMatrix> {
    if reference.same_shape(m) {
        return Some(m.clone());
    }
    let a = reference.sorted();
    let b = m.sorted();
    if !a.same_shape(&b) {
        return None;
    }
    let run_pos: HashMap<&str, usize> = b.runs().iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let topic_pos: HashMap<&str, usize> = b.topics().iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let rows = reference
        .runs()
        .iter()
        .map(|r| {
            reference
                .topics()
                .iter()
                .map(|t| b.get(run_pos[r.as_str()], topic_pos[t.as_str()]))
                .collect()
        })
        .collect();
    Some(ScoreMatrix::from_rows(
        m.measure(),
        reference.runs().to_vec(),
        reference.topics().to_vec(),
        rows,
    ))
}

/// Per-topic τ between the run rankings induced by two measures, and their mean.
pub fn measure_correlation(m1: &ScoreMatrix, m2: &ScoreMatrix) -> Result<CorrelationReport, AnalysisError> {
    let m2 = aligned(m1, m2).ok_or_else(|| AnalysisError::Mismatch(m1.measure().into(), m2.measure().into()))?;
    let mut per_topic = Vec::with_capacity(m1.topics().len());
    for (t, topic) in m1.topics().iter().enumerate() {
        let tau = match kendall_tau(&m1.topic_scores(t), &m2.topic_scores(t)) {
            Ok(v) => Some(v),
            Err(AnalysisError::DegenerateInput) => None,
            Err(e) => return Err(e),
        };
        per_topic.push((topic.clone(), tau));
    }
    let defined: Vec<f64> = per_topic.iter().filter_map(|(_, t)| *t).collect();
    let mean_tau = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(CorrelationReport {
        measure_a: m1.measure().to_string(),
        measure_b: m2.measure().to_string(),
        excluded: per_topic.len() - defined.len(),
        equivalent: mean_tau.is_some_and(|t| t > EQUIVALENCE_THRESHOLD),
        per_topic,
        mean_tau,
    })
}

/// Standard deviations at or below this are treated as zero, so float noise
/// in differences like `0.3 - 0.2` does not pass for spread.
pub const ZERO_SD: f64 = 1e-12;

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Studentized mean: `mean / (sd / √n)` with the n−1 standard deviation.
/// Zero variance gives 0 for a zero mean and ±∞ otherwise.
pub fn paired_t(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let (mean, sd) = mean_sd(values);
    if sd <= ZERO_SD {
        let mean = if mean.abs() <= ZERO_SD { 0.0 } else { mean };
        if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (sd / n.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    pub run_a: String,
    pub run_b: String,
    pub t: f64,
    pub asl: f64,
    pub significant: bool,
}

/// Paired bootstrap on per-topic differences `d`: resample the centred
/// differences `b` times and report the fraction whose |t| reaches the
/// observed |t| (the achieved significance level).
pub fn bootstrap_asl<R: Rng>(d: &[f64], b: usize, rng: &mut R) -> (f64, f64) {
    let n = d.len();
    let t_obs = paired_t(d);
    let (mean, sd) = mean_sd(d);
    if sd <= ZERO_SD {
        // no spread to resample: the difference is either exactly zero or certain
        return (t_obs, if t_obs == 0.0 { 1.0 } else { 0.0 });
    }
    let centred: Vec<f64> = d.iter().map(|v| v - mean).collect();
    let threshold = t_obs.abs();
    let mut sample = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..b {
        for s in sample.iter_mut() {
            *s = centred[rng.random_range(0..n)];
        }
        if paired_t(&sample).abs() >= threshold {
            hits += 1;
        }
    }
    (t_obs, hits as f64 / b as f64)
}

/// Seeds the stream for one run pair from the user seed and both run tags.
pub fn pair_rng(seed: u64, run_a: &str, run_b: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(run_a.as_bytes());
    hasher.update([0u8]);
    hasher.update(run_b.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpReport {
    pub measure: String,
    pub samples: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Ordered by (run_a, run_b); `run_a < run_b`.
    pub pairs: Vec<PairTest>,
    pub pairs_total: usize,
    pub pairs_significant: usize,
    pub percentage: f64,
}

impl DpReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("measure\trun_a\trun_b\tt\tasl\tsignificant\n");
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{}",
                self.measure, p.run_a, p.run_b, p.t + 0.0, p.asl, p.significant
            );
        }
        let _ = writeln!(
            out,
            "{}\tpercentage\t{}/{}\t{:.2}\tB={} alpha={}",
            self.measure, self.pairs_significant, self.pairs_total, self.percentage, self.samples, self.alpha
        );
        out
    }
}

/// Share of run pairs whose bootstrap ASL falls below `alpha`.
///
/// Pairs are oriented by run tag and each gets its own RNG stream, so the
/// report does not depend on run order or on how pairs are scheduled.
pub fn discriminative_power(m: &ScoreMatrix, samples: usize, alpha: f64, seed: u64) -> Result<DpReport, AnalysisError> {
    let runs = m.runs().len();
    let topics = m.topics().len();
    if runs < 2 {
        return Err(AnalysisError::TooShort { needed: 2, got: runs });
    }
    if topics < 2 {
        return Err(AnalysisError::TooShort { needed: 2, got: topics });
    }
    if samples == 0 {
        return Err(AnalysisError::Parameter("bootstrap sample count must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::Parameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let mut order: Vec<usize> = (0..runs).collect();
    order.sort_by(|&a, &b| m.runs()[a].cmp(&m.runs()[b]));
    let pairs: Vec<(usize, usize)> = (0..runs)
        .flat_map(|i| (i + 1..runs).map(move |j| (i, j)))
        .map(|(i, j)| (order[i], order[j]))
        .collect();
    let tests: Vec<PairTest> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (run_a, run_b) = (&m.runs()[a], &m.runs()[b]);
            let d: Vec<f64> = m.run_scores(a).iter().zip(m.run_scores(b)).map(|(x, y)| x - y).collect();
            let mut rng = pair_rng(seed, run_a, run_b);
            let (t, asl) = bootstrap_asl(&d, samples, &mut rng);
            PairTest {
                run_a: run_a.clone(),
                run_b: run_b.clone(),
                t,
                asl,
                significant: asl < alpha,
            }
        })
        .collect();
    let pairs_significant = tests.iter().filter(|p| p.significant).count();
    let pairs_total = tests.len();
    Ok(DpReport {
        measure: m.measure().to_string(),
        samples,
        alpha,
        seed,
        percentage: 100.0 * pairs_significant as f64 / pairs_total as f64,
        pairs: tests,
        pairs_total,
        pairs_significant,
    })
}

/// Highest-scoring run per topic; ties go to the smaller run tag.
pub fn select_best_runs(m: &ScoreMatrix) -> BTreeMap<String, String> {
    (0..m.topics().len())
        .filter_map(|t| {
            let ranking = system_ranking(m, t);
            ranking.entries.first().map(|(run, _)| (ranking.topic_id, run.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankCount {
    pub rank: usize,
    pub count: usize,
    /// (topic, rank) slots holding a document.
    pub slots: usize,
}

impl RankCount {
    pub fn percent(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            100.0 * self.count as f64 / self.slots as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroAspectReport {
    pub k: usize,
    pub per_rank: Vec<RankCount>,
    pub total: RankCount,
}

impl ZeroAspectReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tcount\tpercent\n");
        for r in &self.per_rank {
            let _ = writeln!(out, "{}\t{}\t{:.2}", r.rank, r.count, r.percent());
        }
        let _ = writeln!(out, "1-{}\t{}\t{:.2}", self.k, self.total.count, self.total.percent());
        out
    }
}

fn grade_sum(gt: &GroundTruth, topic: &str, doc: &str) -> usize {
    gt.get(topic, doc).map_or(0, |t| t.grade_sum())
}

fn run_index(runs: &[RunFile]) -> HashMap<&str, &RunFile> {
    runs.iter().map(|r| (r.run_tag.as_str(), r)).collect()
}

/// Counts top-k documents of the selected runs that are worst on every
/// aspect. Unjudged documents count as worst.
pub fn zero_aspect_at_k(
    best: &BTreeMap<String, String>,
    runs: &[RunFile],
    gt: &GroundTruth,
    k: usize,
) -> Result<ZeroAspectReport, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::Parameter("k must be at least 1".into()));
    }
    let index = run_index(runs);
    let mut per_rank: Vec<RankCount> = (1..=k).map(|rank| RankCount { rank, count: 0, slots: 0 }).collect();
    for (topic, tag) in best {
        let Some(run) = index.get(tag.as_str()) else { continue };
        let list = run.ranked_list(topic);
        for (slot, doc) in per_rank.iter_mut().zip(&list.doc_ids) {
            slot.slots += 1;
            if grade_sum(gt, topic, doc) == 0 {
                slot.count += 1;
            }
        }
    }
    let total = RankCount {
        rank: 0,
        count: per_rank.iter().map(|r| r.count).sum(),
        slots: per_rank.iter().map(|r| r.slots).sum(),
    };
    Ok(ZeroAspectReport { k, per_rank, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandMean {
    /// Inclusive 1-based rank interval.
    pub band: (usize, usize),
    pub docs: usize,
    /// `None` when no selected run retrieved anything in the band.
    pub mean_sum: Option<f64>,
}

pub fn quality_report_tsv(bands: &[BandMean]) -> String {
    let mut out = String::from("band\tmean_sum\n");
    for b in bands {
        let _ = writeln!(out, "{}-{}\t{}", b.band.0, b.band.1, fmt_opt(b.mean_sum));
    }
    out
}

/// Mean grade-index sum of the documents the selected runs place in each band.
pub fn quality_bands(
    best: &BTreeMap<String, String>,
    runs: &[RunFile],
    gt: &GroundTruth,
    bands: &[(usize, usize)],
) -> Result<Vec<BandMean>, AnalysisError> {
    for (i, &(lo, hi)) in bands.iter().enumerate() {
        if lo == 0 || hi < lo {
            return Err(AnalysisError::InvalidBands(format!("{lo}-{hi}")));
        }
        if i > 0 && lo <= bands[i - 1].1 {
            return Err(AnalysisError::InvalidBands("bands must be disjoint and ascending".into()));
        }
    }
    let index = run_index(runs);
    let mut sums = vec![(0usize, 0usize); bands.len()];
    for (topic, tag) in best {
        let Some(run) = index.get(tag.as_str()) else { continue };
        for (pos, doc) in run.ranked_list(topic).doc_ids.iter().enumerate() {
            let rank = pos + 1;
            if let Some(b) = bands.iter().position(|&(lo, hi)| (lo..=hi).contains(&rank)) {
                sums[b].0 += grade_sum(gt, topic, doc);
                sums[b].1 += 1;
            }
        }
    }
    Ok(bands
        .iter()
        .zip(sums)
        .map(|(&band, (sum, docs))| BandMean {
            band,
            docs,
            mean_sum: (docs > 0).then(|| sum as f64 / docs as f64),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspect::{Aspect, AspectSchema, LabelTuple};
    use crate::ingest::{parse_run, RunOrdering};

    fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
        let (mut p, mut q, mut tx, mut ty) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let dx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
                let dy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
                match (dx == 0.0, dy == 0.0) {
                    (true, true) => {}
                    (true, false) => tx += 1.0,
                    (false, true) => ty += 1.0,
                    _ if dx == dy => p += 1.0,
                    _ => q += 1.0,
                }
            }
        }
        (p - q) / ((p + q + tx) * (p + q + ty)).sqrt()
    }

    #[test]
    fn tau_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(kendall_tau(&x, &[1.0, 1.0, 1.0, 1.0]), Err(AnalysisError::DegenerateInput));
        assert!(matches!(kendall_tau(&x, &[1.0]), Err(AnalysisError::LengthMismatch(4, 1))));
        assert!(matches!(kendall_tau(&[1.0], &[1.0]), Err(AnalysisError::TooShort { .. })));
    }

    #[test]
    fn tau_with_ties_matches_pair_counting() {
        let x = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 0.5, 2.0];
        let y = [2.0, 1.0, 1.0, 3.0, 0.0, 3.0, 2.0, 5.0];
        assert!((kendall_tau(&x, &y).unwrap() - brute_tau(&x, &y)).abs() < 1e-12);
    }

    fn matrix(measure: &str, rows: Vec<Vec<f64>>) -> ScoreMatrix {
        let runs = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let topics = (0..rows[0].len()).map(|i| format!("t{i}")).collect();
        ScoreMatrix::from_rows(measure, runs, topics, rows)
    }

    #[test]
    fn correlation_of_identical_and_affine() {
        let m = matrix("a", vec![vec![0.1, 0.5], vec![0.3, 0.2], vec![0.2, 0.9]]);
        let r = measure_correlation(&m, &m).unwrap();
        assert_eq!(r.mean_tau, Some(1.0));
        assert!(r.equivalent);
        let affine = matrix("b", vec![vec![0.4, 1.5], vec![1.0, 0.8], vec![0.7, 2.9]]);
        assert_eq!(measure_correlation(&m, &affine).unwrap().mean_tau, Some(1.0));
    }

    #[test]
    fn constant_topics_are_excluded() {
        let m1 = matrix("a", vec![vec![0.1, 0.5], vec![0.3, 0.5]]);
        let m2 = matrix("b", vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
        let r = measure_correlation(&m1, &m2).unwrap();
        assert_eq!(r.per_topic[1].1, None);
        assert_eq!(r.excluded, 1);
        assert_eq!(r.mean_tau, Some(1.0));
    }

    #[test]
    fn correlation_rejects_other_shapes() {
        let m1 = matrix("a", vec![vec![0.1, 0.5], vec![0.3, 0.5]]);
        let m2 = matrix("b", vec![vec![0.1, 0.2, 0.3], vec![0.3, 0.4, 0.5]]);
        assert!(matches!(measure_correlation(&m1, &m2), Err(AnalysisError::Mismatch(..))));
    }

    #[test]
    fn identical_runs_not_significant() {
        let row: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let m = matrix("a", vec![row.clone(), row]);
        let r = discriminative_power(&m, 500, 0.01, 7).unwrap();
        assert_eq!(r.pairs[0].asl, 1.0);
        assert_eq!(r.pairs_significant, 0);
    }

    #[test]
    fn constant_shift_with_noise_is_significant() {
        let a: Vec<f64> = (0..50).map(|i| 0.2 + 0.1 * ((i * 7 % 11) as f64 / 11.0)).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + 0.5 + 0.05 * ((i * 3 % 5) as f64 / 5.0)).collect();
        let m = matrix("a", vec![a, b]);
        let r = discriminative_power(&m, 1000, 0.01, 1).unwrap();
        assert!(r.pairs[0].significant);
        assert_eq!(r.percentage, 100.0);
    }

    #[test]
    fn degenerate_variance() {
        let m = matrix("a", vec![vec![0.2, 0.3, 0.4], vec![0.1, 0.2, 0.3]]);
        let r = discriminative_power(&m, 100, 0.01, 1).unwrap();
        assert!(r.pairs[0].significant);
        assert!(r.pairs[0].t.is_infinite());
    }

    #[test]
    fn dp_parameter_checks() {
        let m = matrix("a", vec![vec![0.2, 0.3]]);
        assert!(discriminative_power(&m, 10, 0.01, 1).is_err());
        let m = matrix("a", vec![vec![0.2, 0.3], vec![0.1, 0.5]]);
        assert!(discriminative_power(&m, 0, 0.01, 1).is_err());
        assert!(discriminative_power(&m, 10, 1.5, 1).is_err());
    }

    #[test]
    fn dp_independent_of_run_order() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|r| (0..10).map(|t| ((r * 13 + t * 7) % 17) as f64 / 17.0 + r as f64 * 0.05).collect())
            .collect();
        let m = matrix("a", rows.clone());
        let mut rev_rows = rows;
        rev_rows.reverse();
        let rev = ScoreMatrix::from_rows("a", (0..4).rev().map(|i| format!("r{i}")).collect(), m.topics().to_vec(), rev_rows);
        let a = discriminative_power(&m, 300, 0.05, 3).unwrap();
        let b = discriminative_power(&rev, 300, 0.05, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_runs() {
        let m = ScoreMatrix::from_rows(
            "a",
            vec!["A".into(), "B".into()],
            vec!["t".into(), "u".into()],
            vec![vec![0.4, 0.5], vec![0.7, 0.5]],
        );
        let best = select_best_runs(&m);
        assert_eq!(best["t"], "B");
        assert_eq!(best["u"], "A");
    }

    fn audit_fixture() -> (GroundTruth, Vec<RunFile>) {
        let s = AspectSchema::new(
            vec![
                Aspect::from_pairs("r", &[("n", "0"), ("m", "1"), ("h", "2"), ("x", "3")]).unwrap(),
                Aspect::from_pairs("c", &[("n", "0"), ("p", "1"), ("c", "2")]).unwrap(),
            ],
            vec![],
        )
        .unwrap();
        let mut gt = GroundTruth::new();
        gt.insert(&s, "1", "good", LabelTuple::new(vec![3, 2])).unwrap();
        gt.insert(&s, "1", "bad", LabelTuple::new(vec![0, 0])).unwrap();
        let run = parse_run("1 Q0 unjudged 1 3 A\n1 Q0 good 2 2 A\n1 Q0 bad 3 1 A\n".as_bytes(), RunOrdering::ByScore).unwrap();
        (gt, vec![run])
    }

    #[test]
    fn zero_aspect_counts_unjudged_as_worst() {
        let (gt, runs) = audit_fixture();
        let best: BTreeMap<String, String> = [("1".to_string(), "A".to_string())].into();
        let r = zero_aspect_at_k(&best, &runs, &gt, 5).unwrap();
        assert_eq!(r.per_rank[0].count, 1);
        assert_eq!(r.per_rank[1].count, 0);
        assert_eq!(r.per_rank[2].count, 1);
        assert_eq!(r.per_rank[3].slots, 0);
        assert_eq!(r.total.count, 2);
        assert_eq!(r.total.slots, 3);
        assert!(r.to_tsv().ends_with("1-5\t2\t66.67\n"));
    }

    #[test]
    fn bands() {
        let (gt, runs) = audit_fixture();
        let best: BTreeMap<String, String> = [("1".to_string(), "A".to_string())].into();
        let r = quality_bands(&best, &runs, &gt, &[(1, 2), (3, 3), (4, 10)]).unwrap();
        assert_eq!(r[0].mean_sum, Some(2.5));
        assert_eq!(r[1].mean_sum, Some(0.0));
        assert_eq!(r[2].mean_sum, None);
        assert!(quality_bands(&best, &runs, &gt, &[(1, 5), (5, 9)]).is_err());
        assert!(quality_bands(&best, &runs, &gt, &[(0, 5)]).is_err());
        assert_eq!(quality_report_tsv(&r), "band\tmean_sum\n1-2\t2.5000\n3-3\t0.0000\n4-10\tNA\n");
    }
}
