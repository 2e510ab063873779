use super::types::SampleRecord;

/// Summary of one run, mirroring the subscriber-side measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// `received / (t_last - t_first)`; absent below two deliveries.
    pub reception_rate_hz: Option<f64>,
    pub avg_latency_s: Option<f64>,
    /// Population standard deviation of latency.
    pub jitter_s: Option<f64>,
    pub delivery_ratio: f64,
    pub max_burst_bytes: u64,
    pub received_count: u64,
    pub published_count: u64,
    pub complete: bool,
}

/// Metrics over the delivered records. `max_burst_bytes` is left at 0 and
/// `complete` means every record was delivered; the simulator refines both.
pub fn compute_metrics(records: &[SampleRecord]) -> MetricsReport {
    let mut first = f64::INFINITY;
    let mut last = f64::NEG_INFINITY;
    let mut latencies = Vec::new();
    for r in records {
        if let (Some(d), Some(lat)) = (r.delivery_time_s, r.latency_s()) {
            first = first.min(d);
            last = last.max(d);
            latencies.push(lat);
        }
    }
    let received = latencies.len() as u64;
    let span = last - first;
    let reception_rate_hz = (received >= 2 && span > 0.0).then(|| received as f64 / span);
    let (avg_latency_s, jitter_s) = if latencies.is_empty() {
        (None, None)
    } else {
        let n = latencies.len() as f64;
        let mean = latencies.iter().sum::<f64>() / n;
        let var = latencies.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    let published = records.len() as u64;
    MetricsReport {
        reception_rate_hz,
        avg_latency_s,
        jitter_s,
        delivery_ratio: if published == 0 { 0.0 } else { received as f64 / published as f64 },
        max_burst_bytes: 0,
        received_count: received,
        published_count: published,
        complete: published > 0 && received == published,
    }
}

/// Deliveries per bin of width `bin_s`, bins starting at `origin_s`.
pub fn reception_timeline(records: &[SampleRecord], origin_s: f64, bin_s: f64, n_bins: usize) -> Vec<u64> {
    let mut bins = vec![0u64; n_bins];
    for d in records.iter().filter_map(|r| r.delivery_time_s) {
        let k = ((d - origin_s) / bin_s).floor();
        if k >= 0.0 && (k as usize) < n_bins {
            bins[k as usize] += 1;
        }
    }
    bins
}

/// Seconds after `restore_s` until reception holds at `target_hz` or more
/// in every 1 s bin up to `horizon_s`. `None` if it never does.
pub fn recovery_time_s(records: &[SampleRecord], restore_s: f64, horizon_s: f64, target_hz: f64) -> Option<f64> {
    let n_bins = (horizon_s - restore_s).floor().max(0.0) as usize;
    let bins = reception_timeline(records, restore_s, 1.0, n_bins);
    let mut start = None;
    for (k, &count) in bins.iter().enumerate() {
        if (count as f64) >= target_hz {
            start.get_or_insert(k);
        } else {
            start = None;
        }
    }
    start.map(|k| k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, publish: f64, delivery: Option<f64>) -> SampleRecord {
        SampleRecord {
            sample_id: id,
            sequence_number: Some(id + 1),
            publish_time_s: publish,
            delivery_time_s: delivery,
            acknowledged: delivery.is_some(),
        }
    }

    #[test]
    fn reception_rate_uses_first_to_last_span() {
        let records: Vec<_> = (0..1000).map(|i| rec(i, i as f64 / 30.0, Some(i as f64 / 30.0 + 0.01))).collect();
        let m = compute_metrics(&records);
        assert!((m.reception_rate_hz.unwrap() - 1000.0 / (999.0 / 30.0)).abs() < 1e-9);
        assert!((m.reception_rate_hz.unwrap() - 30.03).abs() < 0.001);
        assert!(m.jitter_s.unwrap() < 1e-12);
        assert!(m.complete);
    }

    #[test]
    fn single_delivery_has_no_rate() {
        let m = compute_metrics(&[rec(0, 0.0, Some(0.25)), rec(1, 0.1, None)]);
        assert_eq!(m.reception_rate_hz, None);
        assert_eq!(m.avg_latency_s, Some(0.25));
        assert_eq!(m.delivery_ratio, 0.5);
        assert!(!m.complete);
    }

    #[test]
    fn jitter_is_population_std() {
        let m = compute_metrics(&[rec(0, 0.0, Some(1.0)), rec(1, 0.0, Some(3.0))]);
        assert!((m.avg_latency_s.unwrap() - 2.0).abs() < 1e-12);
        assert!((m.jitter_s.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovery_requires_sustained_rate() {
        // 10 Hz for 3 s, then 30 Hz for 5 s
        let mut records = Vec::new();
        let mut id = 0;
        for k in 0..30 {
            records.push(rec(id, 0.0, Some(10.0 + k as f64 / 10.0)));
            id += 1;
        }
        for k in 0..150 {
            records.push(rec(id, 0.0, Some(13.0 + k as f64 / 30.0)));
            id += 1;
        }
        assert_eq!(recovery_time_s(&records, 10.0, 18.0, 29.0), Some(3.0));
        assert_eq!(recovery_time_s(&records, 10.0, 19.0, 29.0), None);
    }
}
