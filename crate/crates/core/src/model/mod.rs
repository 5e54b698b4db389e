//! Domain types and the pure decision step of a single agent.

mod decision;
mod grid;
mod window;

pub use decision::{
    argmax, available_modes, available_modes_with, best_mode, blend_filter, decide, habit_triggers, perceive,
    record_trip, score, scores, Agent, Decision, DecisionContext, ModeSet, Thresholds, FILTER_MAX, FILTER_MIN,
    VALUE_MAX, VALUE_MIN,
};
pub use grid::{CriteriaVector, Criterion, Mode, ModeGrid, PerMode};
pub use window::{habit_frequencies, TripWindow, DEFAULT_WINDOW_CAPACITY};
