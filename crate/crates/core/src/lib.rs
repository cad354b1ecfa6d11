//! Multi-aspect evaluation of ranked lists.
//!
//! Label tuples are embedded in Euclidean space and ordered by their distance
//! to the best tuple. The resulting weak order extends the componentwise
//! (Pareto) order; integer weights per equivalence class then feed any
//! single-aspect measure such as nDCG or AP. The aggregating baselines CAM
//! (arithmetic mean) and MM (harmonic mean) are provided for comparison,
//! together with the meta-evaluation used to compare measures.
//!
//! ```
//! use toma_core::{build_order, build_tuple_space, Aspect, AspectSchema, MetricKind};
//!
//! let schema = AspectSchema::new(
//!     vec![
//!         Aspect::from_pairs("relevance", &[("nr", "0"), ("mr", "1"), ("fr", "2"), ("hr", "3")]).unwrap(),
//!         Aspect::from_pairs("correctness", &[("nc", "0"), ("pc", "1.5"), ("c", "3")]).unwrap(),
//!     ],
//!     vec![],
//! )
//! .unwrap();
//! let order = build_order(&build_tuple_space(&schema), &schema, MetricKind::Chebyshev).unwrap();
//! assert_eq!(order.class_count(), 5);
//! ```

pub mod analysis;
pub mod aspect;
pub mod ingest;
pub mod measures;
pub mod order;
pub mod pipeline;
pub mod score;

pub use analysis::{
    discriminative_power, kendall_tau, measure_correlation, quality_bands, select_best_runs, zero_aspect_at_k,
    AnalysisError, CorrelationReport, DpReport,
};
pub use aspect::{
    build_tuple_space, pareto_dominates, Aspect, AspectSchema, CouplingRule, GroundTruth, LabelTuple, SchemaError,
    TupleSpace,
};
pub use ingest::{parse_qrels, parse_run, IngestError, RunFile, RunOrdering, SignalTable};
pub use measures::{
    cam_score, mm_score, toma_score, AspectGains, Depth, MeasureConfig, MeasureError, MeasureKind, MmVariant,
    RankedList,
};
pub use order::{
    assign_weights, build_order, check_extends_partial_order, DistanceOrder, MetricKind, OrderError,
    WeightAssignment, WeightPolicy,
};
pub use pipeline::{evaluate, EvalError, EvalPlan, Evaluation, Family};
pub use score::{ScoreError, ScoreMatrix};
