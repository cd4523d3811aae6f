//! Dataset ingestion and OTB-style evaluation.

pub mod dataset;
pub mod metrics;
pub mod protocol;

pub use dataset::{load_dataset, load_sequence, parse_boxes, Attribute, SequenceRecord};
pub use metrics::{auc, iou, success_curve, thresholds, SuccessCurve, N_THRESHOLDS};
pub use protocol::{
    provider_for, run_protocol, run_protocol_with, sre_perturbations, track_sequence, tre_segments,
    EvalReport, FusionRunner, GroundTruthOracle, Protocol, SequenceScore, TrackerRunner,
};
