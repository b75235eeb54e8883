//! Detection of radio-frequency interference in GNSS reflectometry
//! delay-Doppler map noise floors.
//!
//! The crate covers the whole pipeline: DDM noise-floor extraction
//! ([`ddm`]), jammer overpass geometry ([`geometry`]), the per-epoch and
//! streaming detectors ([`detect`]), a truth-labelled simulator
//! ([`scenario`]), the record file formats ([`ingest`]) and the counting and
//! scoring harness ([`evaluate`]).

pub mod ddm;
pub mod detect;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod ingest;
pub mod observation;
pub mod scenario;
pub mod units;

#[cfg(any(test, feature = "testing"))]
pub mod testing;

pub use crate::ddm::{DdmGrid, GridShape, NoiseModel, SynthParams};
pub use crate::detect::{Cause, Detector, DetectorConfig, FlagRecord, Method};
pub use crate::error::{Error, Result};
pub use crate::geometry::{LossRange, OverpassGeometry};
pub use crate::ingest::ParseMode;
pub use crate::observation::{ChannelObservation, EpochRecord, EpochTime, Region, SatId};
pub use crate::scenario::{Scenario, TruthLabel};

/// Toolkit version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
