//! Windowed traffic series, device states, device kinds and presence.

pub mod kind;
pub mod presence;
pub mod series;
pub mod states;

use thiserror::Error;

pub use kind::{classify_device_kind, hour_coverage, kind_from_coverage, HourCoverage, KindConfig};
pub use presence::{
    presence_intervals, weekly_routine, DayGroup, GroupRoutine, PresenceIntervals, RoutineConfig,
    WeeklyRoutine, DEFAULT_GAP_S,
};
pub use series::{aggregate_windows, dedup_frames, frames_by_device, TrafficSeries, WindowCounts};
pub use states::{
    classify_states, compute_threshold, rolling_mean, DeviceState, StateConfig, StateTimeline,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrafficError {
    #[error("invalid range: end {end} is not after start {start}")]
    InvalidRange { start: u64, end: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
