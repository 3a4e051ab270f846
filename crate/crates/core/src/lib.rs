//! Explain how an aggregated time series evolves.
//!
//! The series is cut into segments whose top contributing slices stay
//! consistent, and each segment reports its top-m non-overlapping explanations.
//!
//! ```
//! use std::collections::HashMap;
//! use evolex_core::{explain_evolving, load_csv, AggFunction, ExplainRequest, KChoice};
//!
//! let csv = "t,cat,v\n1,a,1\n1,b,1\n2,a,5\n2,b,1\n3,a,9\n3,b,1\n4,a,9\n4,b,5\n5,a,9\n5,b,9\n";
//! let rel = load_csv(csv.as_bytes(), "t", &HashMap::new()).unwrap();
//! let req = ExplainRequest {
//!     measure: Some("v".into()),
//!     agg: AggFunction::Sum,
//!     explain_by: vec!["cat".into()],
//!     k: KChoice::Fixed(2),
//!     ..Default::default()
//! };
//! let out = explain_evolving(&rel, &req).unwrap();
//! assert_eq!(out.segments.len(), 2);
//! assert_eq!(out.segments[0].explanations[0].label, "cat=a");
//! assert_eq!(out.segments[1].explanations[0].label, "cat=b");
//! ```

pub mod cascade;
pub mod cube;
pub mod diff;
pub mod error;
pub mod explanation;
mod expr;
pub mod pipeline;
pub mod relation;
pub mod segment;
pub mod variance;

pub use cascade::{
    brute_force_top_m, ca_top_m, ca_top_m_full, guess_and_verify, Cascade, TopExplanations,
};
pub use cube::{
    complement_series, filter_explanations, materialize_cube, smooth, AggFunction, AggSpec, Series,
    SeriesCube,
};
pub use diff::{gamma_tau, precompute_scores, Effect, ScoreTable, ScoredExplanation, SegmentRef};
pub use error::{Error, Phase, Result};
pub use explanation::{enumerate_explanations, overlaps, ExplainBy, Explanation, ExplanationCatalog};
pub use pipeline::{explain_evolving, EvolvingExplanations, ExplainOptions, ExplainRequest, KChoice};
pub use relation::{load_csv, AttributeKind, AttributeSchema, DerivedColumn, Relation, TimeValue, TypeHint, ValueType};
pub use segment::{
    k_segmentation_dp, select_optimal_k, sketch_select, ElbowRule, KVarianceCurve,
    SegmentationScheme, SketchParams,
};
pub use variance::{DistanceContext, MetricRegistry, VarianceMetric};
