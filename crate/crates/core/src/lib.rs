//! Tripartite estimands for two-arm randomized trials.
//!
//! The crate covers three families of quantities:
//!
//! * treatment differences in the proportion of subjects whose first
//!   intercurrent event (ICE) is due to an adverse event or lack of efficacy
//!   ([`ice_estimands`]);
//! * the efficacy effect within adherence-defined principal strata via the
//!   adherence causal estimators ([`ace`]), together with comparator
//!   estimators (naive adherers, hypothetical-strategy MAR, jump to reference);
//! * inference ([`inference`]) and a synthetic-trial simulator with a
//!   brute-force potential-outcome oracle ([`sim`]).
//!
//! Subject-level data lives in [`data`]; ICE indicators, disposition
//! classification and cumulative incidence live in [`ice`].

pub mod ace;
pub mod cli;
pub mod config;
pub mod data;
pub mod frame;
pub mod ice;
pub mod ice_estimands;
pub mod inference;
pub mod regression;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;

pub use data::{
    Arm, CovariateSchema, DispositionEvidence, DispositionReason, EventTime, SubjectRecord,
    TrialDataset,
};
pub use frame::AnalysisFrame;
