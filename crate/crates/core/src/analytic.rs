//! Closed-form model of reliable RTPS traffic over a lossy link.
//!
//! All rates are bytes per second, all sizes bytes, all probabilities in
//! `[0, 1]`. Packet counting ignores protocol headers: a message of `m`
//! bytes occupies `ceil(m / mtu)` link packets.
//!
//! The recursion [`round_traffic_recursion`] is kept next to the closed
//! forms so the fixed point of one can be checked against the other.

use crate::error::{invalid, Error, Result};

/// Default maximum RTPS message size (64 KiB).
pub const DEFAULT_MAX_RTPS_MESSAGE_BYTES: u64 = 65_536;
/// Standard Ethernet / Wi-Fi MTU.
pub const DEFAULT_MTU_BYTES: u64 = 1_500;
/// RTPS header allowance subtracted from the MTU for fragmentation-free messages.
pub const RTPS_HEADER_BYTES: u64 = 28;

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Application publish rate `r * u` in bytes per second.
pub fn publish_rate(rate_hz: f64, sample_bytes: f64) -> Result<f64> {
    check_positive("publish rate", rate_hz)?;
    if !(sample_bytes >= 1.0 && sample_bytes.is_finite()) {
        return Err(invalid(format!("sample size must be >= 1 byte, got {sample_bytes}")));
    }
    Ok(rate_hz * sample_bytes)
}

/// Throughput available at each boundary of the publish path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerThroughputs {
    pub app_to_dds: f64,
    pub dds_to_os: f64,
    pub os_to_link: f64,
}

impl LayerThroughputs {
    pub fn new(app_to_dds: f64, dds_to_os: f64, os_to_link: f64) -> Result<Self> {
        check_positive("app->dds throughput", app_to_dds)?;
        check_positive("dds->os throughput", dds_to_os)?;
        check_positive("os->link throughput", os_to_link)?;
        Ok(Self { app_to_dds, dds_to_os, os_to_link })
    }
}

/// The end-to-end ceiling is the slowest boundary.
pub fn bottleneck_throughput(t: &LayerThroughputs) -> f64 {
    t.app_to_dds.min(t.dds_to_os).min(t.os_to_link)
}

/// How one sample is split into RTPS messages and then into link packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentationPlan {
    pub sample_size_bytes: u64,
    pub max_rtps_message_bytes: u64,
    pub mtu_bytes: u64,
    /// Size in bytes of each RTPS message, in order.
    pub message_sizes: Vec<u64>,
    /// Link packets needed by each RTPS message.
    pub packets_per_message: Vec<u64>,
    pub total_packets: u64,
}

impl FragmentationPlan {
    pub fn new(sample_bytes: u64, max_message_bytes: u64, mtu_bytes: u64) -> Result<Self> {
        if sample_bytes == 0 || max_message_bytes == 0 || mtu_bytes == 0 {
            return Err(invalid(format!(
                "fragmentation needs non-zero sizes (u={sample_bytes}, M={max_message_bytes}, mtu={mtu_bytes})"
            )));
        }
        let n_messages = sample_bytes.div_ceil(max_message_bytes);
        let mut message_sizes = Vec::with_capacity(n_messages as usize);
        let mut remaining = sample_bytes;
        while remaining > 0 {
            let size = remaining.min(max_message_bytes);
            message_sizes.push(size);
            remaining -= size;
        }
        let packets_per_message: Vec<u64> =
            message_sizes.iter().map(|m| m.div_ceil(mtu_bytes)).collect();
        let total_packets = packets_per_message.iter().sum();
        Ok(Self {
            sample_size_bytes: sample_bytes,
            max_rtps_message_bytes: max_message_bytes,
            mtu_bytes,
            message_sizes,
            packets_per_message,
            total_packets,
        })
    }

    /// `N_RT`.
    pub fn n_rtps_messages(&self) -> u64 {
        self.message_sizes.len() as u64
    }

    /// Packets in the largest (first) RTPS message, i.e. `N_IP` of a full message.
    pub fn packets_per_full_message(&self) -> u64 {
        self.packets_per_message.first().copied().unwrap_or(1)
    }

    /// True when no RTPS message is split by the IP layer.
    pub fn is_fragmentation_free(&self) -> bool {
        self.packets_per_message.iter().all(|&k| k == 1)
    }
}

pub fn fragmentation_plan(sample_bytes: u64, max_message_bytes: u64, mtu_bytes: u64) -> Result<FragmentationPlan> {
    FragmentationPlan::new(sample_bytes, max_message_bytes, mtu_bytes)
}

/// Probability that all `packets` packets of a unit survive: `p^k`.
pub fn unit_delivery_prob(p: f64, packets: u64) -> Result<f64> {
    check_prob("packet delivery probability", p)?;
    if packets == 0 {
        return Err(invalid("a delivery unit needs at least one packet"));
    }
    Ok(p.powf(packets as f64))
}

/// New samples that become available at retransmission round `k` (1-based).
pub fn staircase_delta(rate_hz: f64, retx_hz: f64, round: u64) -> Result<u64> {
    check_positive("publish rate", rate_hz)?;
    check_positive("retransmission rate", retx_hz)?;
    if round == 0 {
        return Err(invalid("rounds are numbered from 1"));
    }
    let ratio = rate_hz / retx_hz;
    let hi = (ratio * round as f64).floor();
    let lo = (ratio * (round - 1) as f64).floor();
    Ok((hi - lo) as u64)
}

/// One step of the per-round traffic recursion
/// `X_k = dS_k * u + p^2 (1 - q) X_{k-1}`.
///
/// `delta_samples` may be fractional when iterating with the mean `r / n`.
pub fn round_traffic_recursion(prev: f64, delta_samples: f64, sample_bytes: f64, p: f64, q: f64) -> f64 {
    delta_samples * sample_bytes + p * p * (1.0 - q) * prev
}

/// Contraction factor `p^2 (1 - q)` of the recursion; the fixed point exists iff it is < 1.
pub fn contraction_factor(p: f64, q: f64) -> f64 {
    p * p * (1.0 - q)
}

fn amplification_denominator(p: f64, q: f64) -> Result<f64> {
    check_prob("packet delivery probability", p)?;
    check_prob("unit delivery probability", q)?;
    let factor = contraction_factor(p, q);
    if factor >= 1.0 {
        return Err(Error::NumericDomain(format!(
            "recursion does not contract: p^2(1-q) = {factor}"
        )));
    }
    let denom = 1.0 - factor;
    if denom < f64::MIN_POSITIVE {
        return Err(Error::NumericDomain("amplification denominator underflows".into()));
    }
    Ok(denom)
}

/// Steady-state bytes per retransmission round, the fixed point of the recursion.
pub fn steady_state_round_traffic(rate_hz: f64, sample_bytes: f64, retx_hz: f64, p: f64, q: f64) -> Result<f64> {
    let r_pub = publish_rate(rate_hz, sample_bytes)?;
    check_positive("retransmission rate", retx_hz)?;
    Ok(r_pub / (retx_hz * amplification_denominator(p, q)?))
}

/// Steady-state byte rate offered to the link, `R_pub / (1 - p^2 (1 - p^N_IP))`.
///
/// Independent of the retransmission rate.
pub fn steady_state_rate(r_pub: f64, p: f64, n_ip: u64) -> Result<f64> {
    check_positive("publish byte rate", r_pub)?;
    let q = unit_delivery_prob(p, n_ip)?;
    Ok(r_pub / amplification_denominator(p, q)?)
}

/// Worst-case bytes entering the link back-to-back in one round: a fresh
/// sample coinciding with the retransmitted backlog.
pub fn burst_size(sample_bytes: f64, rate_hz: f64, retx_hz: f64, p: f64, q: f64) -> Result<f64> {
    let x = steady_state_round_traffic(rate_hz, sample_bytes, retx_hz, p, q)?;
    Ok(sample_bytes + contraction_factor(p, q) * x)
}

/// Result of sizing the writer history cache against the link budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheLimit {
    pub samples: u64,
    /// The floor came out as zero and was raised to one.
    pub clamped: bool,
}

/// `floor(T * w / u)` samples, never less than one.
pub fn history_cache_limit(link_bytes_per_s: f64, utilization: f64, sample_bytes: f64) -> Result<CacheLimit> {
    check_positive("link throughput", link_bytes_per_s)?;
    check_positive("sample size", sample_bytes)?;
    if !(utilization > 0.0 && utilization <= 1.0) {
        return Err(invalid(format!("utilization must lie in (0, 1], got {utilization}")));
    }
    let raw = (link_bytes_per_s * utilization / sample_bytes).floor();
    if raw < 1.0 {
        Ok(CacheLimit { samples: 1, clamped: true })
    } else {
        Ok(CacheLimit { samples: raw as u64, clamped: false })
    }
}

/// Which unit must arrive intact for the recursion's success probability `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuccessUnit {
    /// Every packet of the sample (`q = p^total_packets`).
    #[default]
    Sample,
    /// One full RTPS message (`q = p^N_IP`).
    RtpsMessage,
}

/// Parameters of one publish stream as seen by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficParams {
    pub publish_rate_hz: f64,
    pub sample_size_bytes: f64,
    pub retransmission_rate_hz: f64,
    pub packet_delivery_prob: f64,
    pub unit_packets: u64,
}

impl TrafficParams {
    pub fn new(rate_hz: f64, sample_bytes: f64, retx_hz: f64, p: f64, unit_packets: u64) -> Result<Self> {
        publish_rate(rate_hz, sample_bytes)?;
        check_positive("retransmission rate", retx_hz)?;
        check_prob("packet delivery probability", p)?;
        if unit_packets == 0 {
            return Err(invalid("a delivery unit needs at least one packet"));
        }
        Ok(Self {
            publish_rate_hz: rate_hz,
            sample_size_bytes: sample_bytes,
            retransmission_rate_hz: retx_hz,
            packet_delivery_prob: p,
            unit_packets,
        })
    }

    /// Builds the parameters from a fragmentation plan with the chosen success unit.
    pub fn from_plan(rate_hz: f64, retx_hz: f64, p: f64, plan: &FragmentationPlan, unit: SuccessUnit) -> Result<Self> {
        let packets = match unit {
            SuccessUnit::Sample => plan.total_packets,
            SuccessUnit::RtpsMessage => plan.packets_per_full_message(),
        };
        Self::new(rate_hz, plan.sample_size_bytes as f64, retx_hz, p, packets)
    }

    pub fn unit_delivery_prob(&self) -> f64 {
        self.packet_delivery_prob.powf(self.unit_packets as f64)
    }

    pub fn publish_rate(&self) -> f64 {
        self.publish_rate_hz * self.sample_size_bytes
    }

    pub fn steady_state_round_traffic(&self) -> Result<f64> {
        steady_state_round_traffic(
            self.publish_rate_hz,
            self.sample_size_bytes,
            self.retransmission_rate_hz,
            self.packet_delivery_prob,
            self.unit_delivery_prob(),
        )
    }

    pub fn steady_state_rate(&self) -> Result<f64> {
        steady_state_rate(self.publish_rate(), self.packet_delivery_prob, self.unit_packets)
    }

    pub fn burst_size(&self) -> Result<f64> {
        burst_size(
            self.sample_size_bytes,
            self.publish_rate_hz,
            self.retransmission_rate_hz,
            self.packet_delivery_prob,
            self.unit_delivery_prob(),
        )
    }
}

/// Best-effort delivery probabilities, one row per PER and one column per payload.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryTable {
    pub payloads: Vec<u64>,
    pub pers: Vec<f64>,
    /// `cells[i][j]` is the delivery probability for `pers[i]`, `payloads[j]`.
    pub cells: Vec<Vec<f64>>,
}

impl DeliveryTable {
    pub fn cell(&self, per_index: usize, payload_index: usize) -> f64 {
        self.cells[per_index][payload_index]
    }
}

/// A sample is delivered without retransmission only if every packet survives.
pub fn delivery_rate_table(payloads: &[u64], pers: &[f64], max_message_bytes: u64, mtu_bytes: u64) -> Result<DeliveryTable> {
    if payloads.is_empty() || pers.is_empty() {
        return Err(invalid("delivery table needs at least one payload and one PER"));
    }
    let plans = payloads
        .iter()
        .map(|&u| FragmentationPlan::new(u, max_message_bytes, mtu_bytes))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(pers.len());
    for &per in pers {
        check_prob("packet error rate", per)?;
        cells.push(plans.iter().map(|plan| (1.0 - per).powf(plan.total_packets as f64)).collect());
    }
    Ok(DeliveryTable { payloads: payloads.to_vec(), pers: pers.to_vec(), cells })
}
