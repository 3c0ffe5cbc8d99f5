//! Eigenvalue-based detection of a single passive emitter with a large
//! uniform linear array.
//!
//! The pipeline is: synthesize snapshots ([`array_signal`]), form the sample
//! covariance and its eigenvalues ([`covariance`]), evaluate a test
//! statistic against a CFAR threshold ([`detectors`]) whose closed form
//! comes from random-matrix limit laws ([`rmt`]), and repeat over many
//! trials to estimate rates ([`montecarlo`]).
//!
//! The crate is `no_std` with `alloc` when built without the default `std`
//! feature. `parallel` runs Monte Carlo trials on rayon.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod array_signal;
pub mod covariance;
pub mod detectors;
pub mod error;
pub mod montecarlo;
pub mod rmt;

pub use array_signal::{
    steering_vector, synth_snapshots, ArrayConfig, Hypothesis, RngStream, ScenarioConfig,
    SignalModel, SnapshotMatrix, C64,
};
pub use covariance::{
    eigen_spectrum, noise_variance_estimate, sample_covariance, snapshot_spectrum, EigenSpectrum,
    HermitianMatrix,
};
pub use detectors::{
    analytic_threshold, decide, glrt_statistic, mean_max_min, ratio_max_min, ratio_max_nv,
    CalibrationTable, Decision, DetectorKind, ThresholdMode, ThresholdPolicy, ThresholdSource,
};
pub use error::{Error, Result};
pub use montecarlo::{
    calibrate_threshold, pmiss_vs_n, roc_curve, roc_curves, run_statistics, CampaignConfig,
    RocGrid, RocPoint, SweepRow,
};
pub use rmt::{
    mp_edges, tw_cdf, tw_constants, tw_quantile, MpEdges, TwConstants, TwOrder, TwTable, TwTables,
};
