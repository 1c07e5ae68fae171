//! Jammer-resilient time synchronization for multi-antenna uplinks.
//!
//! A user transmits a secret pseudo-random sequence; a base station with `B`
//! antennas slides a window over its receive stream and declares
//! synchronization at the first window whose statistic crosses a threshold.
//! A multi-antenna jammer may be active at any time. The [`detectors`] module
//! implements the subspace-fitting detector together with the baselines,
//! [`jammers`] the attack models, [`signal`] the transmit/receive model and
//! [`harness`] the Monte-Carlo experiments.

pub mod detectors;
pub mod error;
pub mod harness;
pub mod jammers;
pub mod linalg;
pub mod rng;
pub mod signal;

pub use detectors::{
    detect, metric_trace, statistic_bajass, statistic_jass, statistic_jass_evd, statistic_unmitigated,
    statistic_unnormalized, Classification, DetectionOutcome, DetectorKind, DetectorParams, Projection, TraceSeed,
};
pub use error::{Error, Result};
pub use harness::{
    run_ablation, run_mismatch_experiment, run_roc_experiment, run_trial, sweep_thresholds, ExperimentConfig,
    RocPoint, Simulator, TrialRecord,
};
pub use jammers::{JammerKind, JammerSpec};
pub use linalg::{CMatrix, C64};
pub use signal::{ChannelRealization, ChannelSource, ReceiveStream, ScenarioConfig, Secret, SyncSequence};
