//! Measurement-record chaos diagnostics for the quantum kicked top.
//!
//! A spin-`j` top is kicked, rotated and then measured for the sign of
//! `J_z` once per period. The crate computes the exact probability of every
//! measurement history, the Shannon entropy `H_n` of the record after `n`
//! periods, and the rate `H_N / N`.

pub mod error;
pub mod experiments;
pub mod kicked_top;
pub mod metrics;
pub mod record;
pub mod spin;

pub use error::{Error, Result};
pub use kicked_top::{FloquetOperator, TopParameters};
pub use metrics::{entropy_series, rate_estimate, shannon_entropy, EntropySeries, RateEstimate, RateMethod};
pub use record::{history_distribution, single_history_probability, History, MeasurementScheme, Outcome};
pub use spin::{coherent_state, BlochPoint, PureState, Spin, SpinSystem};
