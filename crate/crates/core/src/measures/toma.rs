use crate::aspect::{AspectSchema, GroundTruth};
use crate::order::WeightAssignment;

use super::{average_precision_from_flags, ndcg_from_gains, MeasureConfig, MeasureError, MeasureKind, RankedList};

/// Scores `run` by mapping each retrieved document's tuple through `weights`
/// and applying the configured single-aspect measure to the resulting gains.
///
/// Unjudged documents weigh 0. For AP the weights must be binary; a document
/// is relevant when its weight is 1.
pub fn toma_score(
    run: &RankedList,
    gt: &GroundTruth,
    schema: &AspectSchema,
    weights: &WeightAssignment,
    cfg: &MeasureConfig,
) -> Result<f64, MeasureError> {
    if cfg.kind == MeasureKind::Ap && !weights.is_binary() {
        return Err(MeasureError::Config("AP needs a binary weight assignment".into()));
    }
    let Some(judged) = gt.topic(&run.topic_id) else {
        return Ok(0.0);
    };
    let weight_of = |tuple| {
        weights
            .get(tuple)
            .map(f64::from)
            .ok_or_else(|| MeasureError::MissingWeight(schema.format_tuple(tuple)))
    };
    let judged_weights = judged.values().map(weight_of).collect::<Result<Vec<f64>, _>>()?;
    let run_weights = run
        .doc_ids
        .iter()
        .map(|d| judged.get(d).map_or(Ok(0.0), weight_of))
        .collect::<Result<Vec<f64>, _>>()?;

    Ok(match cfg.kind {
        MeasureKind::Ndcg => ndcg_from_gains(&run_weights, &judged_weights, cfg.depth, cfg.log_base),
        MeasureKind::Ap => {
            let total = judged_weights.iter().filter(|&&w| w >= 1.0).count();
            let flags: Vec<bool> = run_weights.iter().map(|&w| w >= 1.0).collect();
            average_precision_from_flags(&flags, total, cfg.depth)
        }
    })
}
