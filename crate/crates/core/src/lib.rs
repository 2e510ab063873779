//! Reliable publish/subscribe transport over lossy wireless links.
//!
//! * [`analytic`]: closed-form retransmission traffic model.
//! * [`sim`]: deterministic discrete-event simulation of the heartbeat /
//!   acknack reliability protocol over an impaired link.
//! * [`optimizer`]: derives a tuned QoS profile from the link budget.
//! * [`profile_io`]: XML profile output, scenario JSON, metrics and trace CSV.

pub mod analytic;
pub mod error;
pub mod optimizer;
pub mod profile_io;
pub mod sim;

pub use error::{Error, Result};
