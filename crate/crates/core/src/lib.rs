//! Motion-style analytics for multi-sensor smartphone logs.
//!
//! The crate turns 1 Hz sensor logs (six three-axis sensors plus an optional
//! GPS track) into:
//!
//! * a 540-dimensional statistical feature vector per record ([`features`]),
//! * five interpretable gait indicators normalized to a 0–5 scale ([`dna`]),
//! * GPS velocity and acceleration aggregates ([`gps`]),
//!
//! and trains seeded random forests ([`forest`]) for activity recognition and
//! runner identification, evaluated with confusion matrices, Cohen's kappa and
//! pooled-variance t-tests ([`eval`]). [`synth`] generates deterministic
//! synthetic cohorts in the on-disk log format so the whole pipeline can run
//! without private data.

pub mod cli;
pub mod dna;
pub mod eval;
pub mod features;
pub mod forest;
pub mod gps;
pub mod ingest;
pub mod pipeline;
pub mod stats;
pub mod synth;

mod rng;

pub use dna::{DnaParams, RawDna, RunnerDna};
pub use eval::{ConfusionMatrix, GroupSummary, TTestResult};
pub use features::{FeatureVector, ImportanceRanking};
pub use forest::{Dataset, Forest, ForestParams};
pub use gps::{KinematicFeatures, KinematicSeries};
pub use ingest::{
    Activity, ActivityRecord, Axis, Channel, GpsPoint, RecordMeta, Sensor, SensorAxisSeries, Sex,
    VolunteerProfile,
};
