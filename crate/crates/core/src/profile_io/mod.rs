//! File formats: XML QoS profiles, scenario JSON, metrics and trace CSV.

pub mod csv;
pub mod scenario;
pub mod xml;

pub use self::csv::{read_metrics_csv, write_metrics_csv, write_trace_csv, MetricsRow};
pub use scenario::{parse_scenario, render_scenario};
pub use xml::{emit_profile_xml, heartbeat_period_parts, parse_profile_xml, DurationParts, ParsedProfile, ProfileNames};
