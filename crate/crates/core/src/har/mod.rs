//! Rule-based activity recognition over device states and zones.

pub mod engine;
pub mod guests;
pub mod rules;
pub mod sleep;

pub use engine::{evaluate_rules, ActivityEvent, DeviceTrack, Grid};
pub use guests::{detect_guests, GuestEvent, Resemblance};
pub use rules::{compile_rules, Condition, Rule, RuleError, Selector, Target, DEFAULT_RULES};
pub use sleep::{detect_sleep_wake, SleepWake};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarError {
    #[error("inputs are not on one window grid: {0}")]
    GridMismatch(String),
    #[error("invalid range {0}")]
    InvalidRange(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
}
