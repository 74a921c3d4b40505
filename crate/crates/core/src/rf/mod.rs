//! RSSI fingerprints, path-loss ranging, trilateration, stationarity and
//! zone matching.

pub mod fingerprint;
pub mod layout;
pub mod pathloss;
pub mod stationarity;
pub mod trilat;
pub mod zones;

use thiserror::Error;

pub use fingerprint::{build_fingerprints, median, RssiFingerprint};
pub use layout::{Sniffer, SnifferLayout};
pub use pathloss::{rssi_to_distance, PathLossParams};
pub use stationarity::{classify_stationarity, Mobility, StationarityConfig, StationarityReport};
pub use trilat::{
    direction_vector, linearized_solution, range_residual, trilaterate, PositionEstimate,
    TrilaterationOptions,
};
pub use zones::{
    fingerprint_distance, learn_reference_points, match_zone, ZoneMatch, ZoneModel,
    MIN_REFERENCE_FINGERPRINTS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfError {
    #[error("sniffers are collinear or too few")]
    DegenerateLayout,
    #[error("estimate coincides with the layout centroid")]
    UndefinedDirection,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("duplicate zone label {0:?}")]
    DuplicateLabel(String),
    #[error("no reference point shares two sniffers with the fingerprint")]
    NoComparableReference,
    #[error("invalid path-loss parameters: {0}")]
    InvalidParams(String),
    #[error("layout: {0}")]
    Layout(String),
}
