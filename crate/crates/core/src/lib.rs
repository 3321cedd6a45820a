//! Covert node discovery from co-occurrence logs.
//!
//! Records of who took part in each interaction are fitted with an
//! influence-transmission model by maximum likelihood; records that the fitted
//! model finds improbable are ranked first as the ones most likely to have
//! involved an unobserved participant. Network generators, a pattern
//! simulator and a precision/recall harness reproduce controlled experiments.

pub mod detector;
pub mod error;
pub mod estimator;
pub mod evaluator;
pub mod experiment;
pub mod fmt;
pub mod likelihood;
pub mod netgen;
pub mod observation;
pub mod oracle;
pub mod simulator;
pub mod theta;

pub use detector::{rank_records, suspiciousness, Ranking};
pub use error::{Error, Result};
pub use estimator::{anneal, fit, init_theta, AnnealConfig, FitConfig, FitResult, InitStrategy};
pub use evaluator::{baseline_curves, curves, precision_recall_f, EvalCurve};
pub use likelihood::{
    grad_f, grad_r, log_likelihood, record_probability, record_probability_pairwise, Evaluation,
    FloorMode, PROBABILITY_FLOOR,
};
pub use netgen::{avg_clustering, degree_gini, generate_ba_grouped, generate_er, GenConfig, Network};
pub use observation::ObservationSet;
pub use oracle::brute_force_record_probability;
pub use simulator::{enumerate_patterns, mask_covert, sample_patterns, ObservationMode, PatternLog};
pub use theta::{project_constraints, project_simplex, Theta};
pub use experiment::{
    derive_seed, run_pipeline, run_pipeline_at, run_replicate, run_sweep, CovertSelector,
    ExperimentSpec, Manifest, NetworkSource, ObservationSpec, SweepAxis, SweepSpec,
};
