//! Fast DDS style XML profiles.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sim::{BlockedPublish, History, QosProfile, Reliability};

const NAMESPACE: &str = "http://www.eprosima.com/XMLSchemas/fastRTPS_Profiles";

/// Names used inside the emitted document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileNames {
    pub transport_id: String,
    pub participant: String,
    pub data_writer: String,
    pub data_reader: String,
}

impl Default for ProfileNames {
    fn default() -> Self {
        Self {
            transport_id: "udp_transport".into(),
            participant: "participant_profile".into(),
            data_writer: "default publisher profile".into(),
            data_reader: "default subscriber profile".into(),
        }
    }
}

/// A period as whole seconds plus nanoseconds, `0 <= nanosec < 1e9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DurationParts {
    pub sec: u64,
    pub nanosec: u32,
}

impl DurationParts {
    /// Nearest nanosecond, ties away from zero.
    pub fn from_secs_f64(period_s: f64) -> Self {
        let sec = period_s.floor();
        let mut nanos = ((period_s - sec) * 1e9).round();
        let mut sec = sec as u64;
        if nanos >= 1e9 {
            sec += 1;
            nanos = 0.0;
        }
        Self { sec, nanosec: nanos as u32 }
    }

    pub fn as_secs_f64(&self) -> f64 {
        self.sec as f64 + f64::from(self.nanosec) * 1e-9
    }
}

pub fn heartbeat_period_parts(retransmission_rate_hz: f64) -> DurationParts {
    DurationParts::from_secs_f64(1.0 / retransmission_rate_hz)
}

fn reliability_kind(r: Reliability) -> &'static str {
    match r {
        Reliability::Reliable => "RELIABLE",
        Reliability::BestEffort => "BEST_EFFORT",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn history_block(out: &mut String, indent: &str, history: History) {
    let _ = writeln!(out, "{indent}<historyQos>");
    match history {
        History::KeepAll => {
            let _ = writeln!(out, "{indent}  <kind>KEEP_ALL</kind>");
        }
        History::KeepLast(depth) => {
            let _ = writeln!(out, "{indent}  <kind>KEEP_LAST</kind>");
            let _ = writeln!(out, "{indent}  <depth>{depth}</depth>");
        }
    }
    let _ = writeln!(out, "{indent}</historyQos>");
}

/// Renders `qos` as a profile document. Output is byte-stable for equal inputs.
pub fn emit_profile_xml(qos: &QosProfile, names: &ProfileNames) -> Result<String> {
    qos.validate()?;
    let hb = heartbeat_period_parts(qos.retransmission_rate_hz);
    let kind = reliability_kind(qos.reliability);
    let mut o = String::new();
    let _ = writeln!(o, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(o, r#"<profiles xmlns="{NAMESPACE}">"#);
    let _ = writeln!(o, "  <transport_descriptors>");
    let _ = writeln!(o, "    <transport_descriptor>");
    let _ = writeln!(o, "      <transport_id>{}</transport_id>", escape(&names.transport_id));
    let _ = writeln!(o, "      <type>UDPv4</type>");
    let _ = writeln!(o, "      <maxMessageSize>{}</maxMessageSize>", qos.max_rtps_message_bytes);
    let _ = writeln!(o, "    </transport_descriptor>");
    let _ = writeln!(o, "  </transport_descriptors>");

    let _ = writeln!(o, r#"  <participant profile_name="{}" is_default_profile="true">"#, escape(&names.participant));
    let _ = writeln!(o, "    <rtps>");
    let _ = writeln!(o, "      <userTransports>");
    let _ = writeln!(o, "        <transport_id>{}</transport_id>", escape(&names.transport_id));
    let _ = writeln!(o, "      </userTransports>");
    let _ = writeln!(o, "      <useBuiltinTransports>false</useBuiltinTransports>");
    let _ = writeln!(o, "    </rtps>");
    let _ = writeln!(o, "  </participant>");

    let _ = writeln!(o, r#"  <data_writer profile_name="{}" is_default_profile="true">"#, escape(&names.data_writer));
    let _ = writeln!(o, "    <qos>");
    let _ = writeln!(o, "      <reliability>");
    let _ = writeln!(o, "        <kind>{kind}</kind>");
    let _ = writeln!(o, "      </reliability>");
    let _ = writeln!(o, "    </qos>");
    let _ = writeln!(o, "    <topic>");
    history_block(&mut o, "      ", qos.history);
    match qos.history_cache_capacity {
        Some(n) => {
            let _ = writeln!(o, "      <resourceLimitsQos>");
            let _ = writeln!(o, "        <max_samples>{n}</max_samples>");
            let _ = writeln!(o, "      </resourceLimitsQos>");
        }
        None => {
            let _ = writeln!(o, "      <!-- history cache unbounded: KEEP_ALL default resource limits apply -->");
        }
    }
    let _ = writeln!(o, "    </topic>");
    let _ = writeln!(o, "    <times>");
    let _ = writeln!(o, "      <heartbeatPeriod>");
    let _ = writeln!(o, "        <sec>{}</sec>", hb.sec);
    let _ = writeln!(o, "        <nanosec>{}</nanosec>", hb.nanosec);
    let _ = writeln!(o, "      </heartbeatPeriod>");
    let _ = writeln!(o, "    </times>");
    let _ = writeln!(o, "  </data_writer>");

    let _ = writeln!(o, r#"  <data_reader profile_name="{}" is_default_profile="true">"#, escape(&names.data_reader));
    let _ = writeln!(o, "    <qos>");
    let _ = writeln!(o, "      <reliability>");
    let _ = writeln!(o, "        <kind>{kind}</kind>");
    let _ = writeln!(o, "      </reliability>");
    let _ = writeln!(o, "    </qos>");
    let _ = writeln!(o, "    <topic>");
    history_block(&mut o, "      ", qos.history);
    let _ = writeln!(o, "    </topic>");
    let _ = writeln!(o, "  </data_reader>");
    let _ = writeln!(o, "</profiles>");
    Ok(o)
}

/// Values recovered from an emitted profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProfile {
    pub max_message_bytes: u64,
    pub heartbeat_period: DurationParts,
    pub max_samples: Option<u64>,
    pub reliability: Reliability,
    pub history: History,
}

impl ParsedProfile {
    pub fn retransmission_rate_hz(&self) -> f64 {
        1.0 / self.heartbeat_period.as_secs_f64()
    }

    pub fn to_qos(&self) -> QosProfile {
        QosProfile {
            max_rtps_message_bytes: self.max_message_bytes,
            retransmission_rate_hz: self.retransmission_rate_hz(),
            history_cache_capacity: self.max_samples,
            reliability: self.reliability,
            history: self.history,
            blocked_publish: BlockedPublish::Defer,
        }
    }
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Profile(msg.into())
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, name: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn path<'a, 'i>(node: roxmltree::Node<'a, 'i>, names: &[&str]) -> Result<roxmltree::Node<'a, 'i>> {
    let mut cur = node;
    for n in names {
        cur = child(cur, n).ok_or_else(|| perr(format!("missing <{}>", names.join("/"))))?;
    }
    Ok(cur)
}

fn number<T: std::str::FromStr>(node: roxmltree::Node, what: &str) -> Result<T> {
    node.text()
        .map(str::trim)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(format!("<{what}> is not a valid number")))
}

/// Reads back a document produced by [`emit_profile_xml`].
pub fn parse_profile_xml(text: &str) -> Result<ParsedProfile> {
    let doc = roxmltree::Document::parse(text).map_err(|e| perr(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "profiles" {
        return Err(perr("root element is not <profiles>"));
    }
    let max_message_bytes = number(
        path(root, &["transport_descriptors", "transport_descriptor", "maxMessageSize"])?,
        "maxMessageSize",
    )?;
    let writer = path(root, &["data_writer"])?;
    let reliability = match path(writer, &["qos", "reliability", "kind"])?.text().map(str::trim) {
        Some("RELIABLE") => Reliability::Reliable,
        Some("BEST_EFFORT") => Reliability::BestEffort,
        other => return Err(perr(format!("unknown reliability kind {other:?}"))),
    };
    let history_node = path(writer, &["topic", "historyQos"])?;
    let history = match path(history_node, &["kind"])?.text().map(str::trim) {
        Some("KEEP_ALL") => History::KeepAll,
        Some("KEEP_LAST") => History::KeepLast(number(path(history_node, &["depth"])?, "depth")?),
        other => return Err(perr(format!("unknown history kind {other:?}"))),
    };
    let max_samples = match child(path(writer, &["topic"])?, "resourceLimitsQos") {
        Some(limits) => Some(number(path(limits, &["max_samples"])?, "max_samples")?),
        None => None,
    };
    let hb = path(writer, &["times", "heartbeatPeriod"])?;
    let heartbeat_period = DurationParts {
        sec: number(path(hb, &["sec"])?, "sec")?,
        nanosec: number(path(hb, &["nanosec"])?, "nanosec")?,
    };
    if heartbeat_period.nanosec >= 1_000_000_000 {
        return Err(perr("<nanosec> must be below 1e9"));
    }
    Ok(ParsedProfile { max_message_bytes, heartbeat_period, max_samples, reliability, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn optimized() -> QosProfile {
        QosProfile {
            max_rtps_message_bytes: 1472,
            retransmission_rate_hz: 60.0,
            history_cache_capacity: Some(140),
            ..QosProfile::middleware_default()
        }
    }

    #[test]
    fn heartbeat_split() {
        assert_eq!(heartbeat_period_parts(60.0), DurationParts { sec: 0, nanosec: 16_666_667 });
        assert_eq!(heartbeat_period_parts(1.0), DurationParts { sec: 1, nanosec: 0 });
        assert_eq!(heartbeat_period_parts(1.0 / 3.0), DurationParts { sec: 3, nanosec: 0 });
        assert_eq!(DurationParts::from_secs_f64(0.9999999999), DurationParts { sec: 1, nanosec: 0 });
        assert_eq!(DurationParts::from_secs_f64(2.5e-9), DurationParts { sec: 0, nanosec: 3 });
    }

    #[test]
    fn emitted_fields() {
        let xml = emit_profile_xml(&optimized(), &ProfileNames::default()).unwrap();
        assert!(xml.contains("<maxMessageSize>1472</maxMessageSize>"));
        assert!(xml.contains("<nanosec>16666667</nanosec>"));
        assert!(xml.contains("<max_samples>140</max_samples>"));
        assert!(xml.contains("<useBuiltinTransports>false</useBuiltinTransports>"));
        assert!(xml.ends_with("</profiles>\n"));
        assert_eq!(xml, emit_profile_xml(&optimized(), &ProfileNames::default()).unwrap());
    }

    #[test]
    fn unbounded_cache_omits_max_samples() {
        let q = QosProfile { history_cache_capacity: None, ..optimized() };
        let xml = emit_profile_xml(&q, &ProfileNames::default()).unwrap();
        assert!(!xml.contains("max_samples"));
        assert!(xml.contains("<!-- history cache unbounded"));
        assert_eq!(parse_profile_xml(&xml).unwrap().max_samples, None);
    }

    #[test]
    fn parse_round_trip() {
        let xml = emit_profile_xml(&optimized(), &ProfileNames::default()).unwrap();
        let parsed = parse_profile_xml(&xml).unwrap();
        assert_eq!(parsed.max_message_bytes, 1472);
        assert_eq!(parsed.max_samples, Some(140));
        assert_eq!(parsed.reliability, Reliability::Reliable);
        assert_eq!(parsed.history, History::KeepAll);
        assert!((parsed.retransmission_rate_hz() - 60.0).abs() < 1e-4);
    }

    #[test]
    fn keep_last_round_trip() {
        let q = QosProfile { history: History::KeepLast(7), reliability: Reliability::BestEffort, ..optimized() };
        let parsed = parse_profile_xml(&emit_profile_xml(&q, &ProfileNames::default()).unwrap()).unwrap();
        assert_eq!(parsed.history, History::KeepLast(7));
        assert_eq!(parsed.reliability, Reliability::BestEffort);
    }

    #[test]
    fn names_are_escaped() {
        let names = ProfileNames { data_writer: "a<b>&\"c\"".into(), ..ProfileNames::default() };
        let xml = emit_profile_xml(&optimized(), &names).unwrap();
        assert!(roxmltree::Document::parse(&xml).is_ok());
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(parse_profile_xml("<profiles>").is_err());
        assert!(parse_profile_xml("<other/>").is_err());
    }

    proptest! {
        #[test]
        fn numeric_fields_round_trip(m in 1u64..1_000_000, n in 0.01f64..1000.0, cap in proptest::option::of(1u64..100_000)) {
            let q = QosProfile { max_rtps_message_bytes: m, retransmission_rate_hz: n, history_cache_capacity: cap, ..optimized() };
            let parsed = parse_profile_xml(&emit_profile_xml(&q, &ProfileNames::default()).unwrap()).unwrap();
            prop_assert_eq!(parsed.max_message_bytes, m);
            prop_assert_eq!(parsed.max_samples, cap);
            prop_assert!(parsed.heartbeat_period.nanosec < 1_000_000_000);
            prop_assert!((parsed.heartbeat_period.as_secs_f64() - 1.0 / n).abs() <= 0.51e-9);
        }
    }
}
