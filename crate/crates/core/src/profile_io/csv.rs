//! Metrics and trace CSV.

use crate::error::{Error, Result};
use crate::sim::{MetricsReport, TraceEvent};

pub const METRICS_HEADER: [&str; 9] = [
    "scenario",
    "payload_bytes",
    "mode",
    "reception_rate_hz",
    "avg_latency_ms",
    "jitter_ms",
    "delivery_ratio",
    "max_burst_bytes",
    "complete",
];

pub const TRACE_HEADER: [&str; 6] = ["time_s", "entity", "event", "seq", "bytes", "detail"];

/// Average latency beyond this many publish intervals is reported as absent.
pub const LATENCY_OVERRUN_INTERVALS: f64 = 100.0;

/// One line of the metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub payload_bytes: u64,
    pub mode: String,
    pub reception_rate_hz: Option<f64>,
    pub avg_latency_ms: Option<f64>,
    pub jitter_ms: Option<f64>,
    pub delivery_ratio: f64,
    pub max_burst_bytes: f64,
    pub complete: bool,
}

impl MetricsRow {
    /// Latency and jitter are blanked when the average latency exceeds
    /// [`LATENCY_OVERRUN_INTERVALS`] publish intervals.
    pub fn from_report(scenario: &str, payload_bytes: u64, mode: &str, publish_rate_hz: f64, m: &MetricsReport) -> Self {
        let overrun = m.avg_latency_s.is_some_and(|l| l > LATENCY_OVERRUN_INTERVALS / publish_rate_hz);
        let ms = |v: Option<f64>| if overrun { None } else { v.map(|s| s * 1e3) };
        Self {
            scenario: scenario.to_string(),
            payload_bytes,
            mode: mode.to_string(),
            reception_rate_hz: m.reception_rate_hz,
            avg_latency_ms: ms(m.avg_latency_s),
            jitter_ms: ms(m.jitter_s),
            delivery_ratio: m.delivery_ratio,
            max_burst_bytes: m.max_burst_bytes as f64,
            complete: m.complete,
        }
    }

    /// Field-wise arithmetic mean. Optional fields average the trials that
    /// have a value; `complete` holds only if every trial completed.
    pub fn mean(scenario: &str, rows: &[MetricsRow]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Csv("cannot aggregate zero rows".into()))?;
        let n = rows.len() as f64;
        let opt_mean = |f: fn(&MetricsRow) -> Option<f64>| {
            let vals: Vec<f64> = rows.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        Ok(Self {
            scenario: scenario.to_string(),
            payload_bytes: first.payload_bytes,
            mode: first.mode.clone(),
            reception_rate_hz: opt_mean(|r| r.reception_rate_hz),
            avg_latency_ms: opt_mean(|r| r.avg_latency_ms),
            jitter_ms: opt_mean(|r| r.jitter_ms),
            delivery_ratio: rows.iter().map(|r| r.delivery_ratio).sum::<f64>() / n,
            max_burst_bytes: rows.iter().map(|r| r.max_burst_bytes).sum::<f64>() / n,
            complete: rows.iter().all(|r| r.complete),
        })
    }

    fn fields(&self) -> [String; 9] {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        [
            self.scenario.clone(),
            self.payload_bytes.to_string(),
            self.mode.clone(),
            opt(self.reception_rate_hz),
            opt(self.avg_latency_ms),
            opt(self.jitter_ms),
            format!("{:.6}", self.delivery_ratio),
            format!("{:.0}", self.max_burst_bytes),
            self.complete.to_string(),
        ]
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Csv(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

pub fn write_metrics_csv(rows: &[MetricsRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Csv("no metrics rows to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    finish(w)
}

pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(Error::Csv(format!("unexpected header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let num = |s: &str, col: &str| s.parse::<f64>().map_err(|_| Error::Csv(format!("bad {col} value '{s}'")));
    let opt = |s: &str, col: &str| if s.is_empty() { Ok(None) } else { num(s, col).map(Some) };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(MetricsRow {
            scenario: rec[0].to_string(),
            payload_bytes: rec[1].parse().map_err(|_| Error::Csv(format!("bad payload_bytes '{}'", &rec[1])))?,
            mode: rec[2].to_string(),
            reception_rate_hz: opt(&rec[3], "reception_rate_hz")?,
            avg_latency_ms: opt(&rec[4], "avg_latency_ms")?,
            jitter_ms: opt(&rec[5], "jitter_ms")?,
            delivery_ratio: num(&rec[6], "delivery_ratio")?,
            max_burst_bytes: num(&rec[7], "max_burst_bytes")?,
            complete: rec[8].parse().map_err(|_| Error::Csv(format!("bad complete '{}'", &rec[8])))?,
        });
    }
    Ok(rows)
}

pub fn write_trace_csv(events: &[TraceEvent]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for e in events {
        w.write_record([
            format!("{:.9}", e.time_s),
            e.entity.to_string(),
            e.event.to_string(),
            e.seq.map(|s| s.to_string()).unwrap_or_default(),
            e.bytes.map(|b| b.to_string()).unwrap_or_default(),
            e.detail.clone(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}
