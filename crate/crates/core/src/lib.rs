//! Spatial-domain comparison of EEG channel-relevance maps.
//!
//! - [`montage`]: electrode grid layout and spatial maps
//! - [`transport`]: exact Earth Mover's Distance
//! - [`spdgeom`]: SPD covariance geometry, MDM classifier, backward elimination
//! - [`signal`]: EDF ingestion, band-pass filtering, epoching, splitting
//! - [`relevance`]: relevance score ingestion, top-k sets, cohort counts, MI baseline
//! - [`stats`]: accuracy metrics, chance level, Wilcoxon signed-rank test
//!
//! Numeric code is generic over [`Real`]; the `*F64` aliases below fix the
//! scalar to `f64`, which is what the command-line tool uses.

pub mod montage;
pub mod relevance;
pub mod scalar;
pub mod signal;
pub mod spdgeom;
pub mod stats;
pub mod transport;

pub use scalar::Real;

pub type SpatialMapF64 = montage::SpatialMap<f64>;
pub type EmdResultF64 = transport::EmdResult<f64>;
pub type TransportPlanF64 = transport::TransportPlan<f64>;
pub type CostMatrixF64 = transport::CostMatrix<f64>;
pub type SpdMatrixF64 = spdgeom::SpdMatrix<f64>;
pub type MdmModelF64 = spdgeom::MdmModel<f64>;
pub type RecordingF64 = signal::Recording<f64>;
pub type EpochF64 = signal::Epoch<f64>;
