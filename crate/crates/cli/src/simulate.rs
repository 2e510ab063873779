use anyhow::Result;
use rayon::prelude::*;
use rtpslab::analytic::RTPS_HEADER_BYTES;
use rtpslab::profile_io::{write_trace_csv, MetricsRow};
use rtpslab::sim::{run_scenario_with, QosProfile, RunOptions, ScenarioSpec};

pub struct Trial {
    pub row: MetricsRow,
    pub trace_csv: Option<String>,
}

/// `default` for the stock middleware profile, `optimized` for a
/// fragmentation-free profile with `n = 2r`, otherwise `custom`.
pub fn mode_label(spec: &ScenarioSpec) -> &'static str {
    let q = &spec.qos;
    if *q == QosProfile::middleware_default() {
        "default"
    } else if q.max_rtps_message_bytes + RTPS_HEADER_BYTES == spec.link.mtu_bytes
        && q.retransmission_rate_hz == 2.0 * spec.workload.publish_rate_hz
    {
        "optimized"
    } else {
        "custom"
    }
}

/// Runs `trials` copies with seeds `base_seed..base_seed + trials`, in
/// parallel; results come back in trial order.
pub fn run_trials(spec: &ScenarioSpec, trials: u32, base_seed: u64, mode: &str, record_trace: bool) -> Result<Vec<Trial>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = spec.clone();
            s.rng_seed = base_seed.wrapping_add(u64::from(i));
            let out = run_scenario_with(&s, RunOptions { record_trace })?;
            let row = MetricsRow::from_report(
                &format!("{}#{i}", spec.name),
                spec.workload.sample_size_bytes,
                mode,
                spec.workload.publish_rate_hz,
                &out.metrics,
            );
            let trace_csv = if record_trace { Some(write_trace_csv(&out.trace)?) } else { None };
            Ok(Trial { row, trace_csv })
        })
        .collect()
}

/// Per-trial rows followed by their mean.
pub fn table(spec: &ScenarioSpec, trials: &[Trial]) -> Result<Vec<MetricsRow>> {
    let mut rows: Vec<MetricsRow> = trials.iter().map(|t| t.row.clone()).collect();
    rows.push(MetricsRow::mean(&format!("{}#mean", spec.name), &rows)?);
    Ok(rows)
}
