//! Aggregating baselines: weighted arithmetic (CAM) and weighted harmonic (MM)
//! means of per-aspect scores.

use std::fmt;
use std::str::FromStr;

use crate::aspect::GroundTruth;

use super::{aspect_score, MeasureConfig, MeasureError, RankedList};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum MmVariant {
    /// `Σp / Σ(p/μ)`.
    #[default]
    Canonical,
    /// `1 / Σ(1/μ)`, ignoring the aspect weights.
    TableReproduction,
}

impl FromStr for MmVariant {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(MmVariant::Canonical),
            "table" => Ok(MmVariant::TableReproduction),
            _ => Err(MeasureError::Config(format!("unknown MM variant `{s}` (expected canonical or table)"))),
        }
    }
}

impl fmt::Display for MmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MmVariant::Canonical => "canonical",
            MmVariant::TableReproduction => "table",
        })
    }
}

pub fn uniform_aspect_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_weights(p: &[f64], cfg: &MeasureConfig) -> Result<(), MeasureError> {
    let in_range = p.iter().all(|w| (0.0..=1.0).contains(w));
    let sum: f64 = p.iter().sum();
    if p.len() != cfg.gains.aspect_count() || !in_range || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(MeasureError::Weight(p.to_vec()));
    }
    Ok(())
}

fn per_aspect(run: &RankedList, gt: &GroundTruth, cfg: &MeasureConfig) -> Vec<f64> {
    let judged = gt.topic(&run.topic_id);
    (0..cfg.gains.aspect_count())
        .map(|a| aspect_score(run, judged, a, cfg))
        .collect()
}

pub fn cam_score(run: &RankedList, gt: &GroundTruth, cfg: &MeasureConfig, p: &[f64]) -> Result<f64, MeasureError> {
    check_weights(p, cfg)?;
    Ok(p.iter().zip(per_aspect(run, gt, cfg)).map(|(w, s)| w * s).sum())
}

/// Zero when any aspect scores zero.
pub fn mm_score(
    run: &RankedList,
    gt: &GroundTruth,
    cfg: &MeasureConfig,
    p: &[f64],
    variant: MmVariant,
) -> Result<f64, MeasureError> {
    check_weights(p, cfg)?;
    let scores = per_aspect(run, gt, cfg);
    if scores.iter().any(|&s| s <= 0.0) {
        return Ok(0.0);
    }
    Ok(match variant {
        MmVariant::Canonical => {
            let num: f64 = p.iter().sum();
            let den: f64 = p.iter().zip(&scores).map(|(w, s)| w / s).sum();
            num / den
        }
        MmVariant::TableReproduction => 1.0 / scores.iter().map(|s| 1.0 / s).sum::<f64>(),
    })
}
