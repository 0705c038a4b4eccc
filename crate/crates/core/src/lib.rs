//! Relational hyperevent models for coauthoring and citation networks.
//!
//! Publication events (a set of authors publishing a paper that cites a set
//! of references) are replayed in time order. Each event is compared with
//! uniformly sampled non-events of the same size through history-dependent
//! covariates, and effects are estimated by a stratified Cox partial
//! likelihood.
//!
//! The `parallel` feature (on by default) evaluates covariates and
//! likelihood contributions with rayon; results are bit-identical either
//! way.

pub mod attributes;
pub mod covariates;
pub mod estimator;
pub mod events;
pub mod pipeline;
pub mod sampling;
pub mod simulator;
pub mod util;

pub use attributes::{AttributeLedger, DecayConfig, LedgerConfig, OrderSet};
pub use covariates::{compute_vector, Covariate, CovariateSpec, ModelVariant, Transform};
pub use estimator::{bootstrap, contribution_analysis, fit, FitConfig, FitReport, FitResult, TieMethod};
pub use events::{validate_stream, AuthorId, EventStream, PaperId, PublicationEvent, RiskSetState};
pub use pipeline::{ingest_aminer, run, RunConfig};
pub use sampling::{build_instance_table, sample_controls, HyperedgeInstance, InstanceTable, SamplingConfig, StratumKey};
pub use simulator::{simulate, SimConfig, SimOutput};
