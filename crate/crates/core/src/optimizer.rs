//! Three-step profile tuning: fragmentation-free messages, heartbeat at
//! twice the publish rate, and a history cache sized to the link budget.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{burst_size, history_cache_limit, steady_state_rate, DEFAULT_MTU_BYTES, RTPS_HEADER_BYTES};
use crate::error::{invalid, Error, Result};
use crate::sim::{BlockedPublish, History, QosProfile, Reliability};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationInput {
    pub publish_rate_hz: f64,
    pub sample_size_bytes: u64,
    pub link_throughput_bytes_per_s: f64,
    /// Fraction of the link granted to this traffic, `0 < w <= 1`.
    pub utilization: f64,
    pub mtu_bytes: u64,
}

impl OptimizationInput {
    pub fn new(publish_rate_hz: f64, sample_size_bytes: u64, link_throughput_bytes_per_s: f64, utilization: f64) -> Result<Self> {
        let input = Self {
            publish_rate_hz,
            sample_size_bytes,
            link_throughput_bytes_per_s,
            utilization,
            mtu_bytes: DEFAULT_MTU_BYTES,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn with_mtu(mut self, mtu_bytes: u64) -> Result<Self> {
        self.mtu_bytes = mtu_bytes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.publish_rate_hz > 0.0 && self.publish_rate_hz.is_finite()) {
            return Err(invalid("publish rate must be positive"));
        }
        if self.sample_size_bytes == 0 {
            return Err(invalid("sample size must be positive"));
        }
        if !(self.link_throughput_bytes_per_s > 0.0 && self.link_throughput_bytes_per_s.is_finite()) {
            return Err(invalid("link throughput must be positive"));
        }
        if !(self.utilization > 0.0 && self.utilization <= 1.0) {
            return Err(invalid(format!("utilization must lie in (0, 1], got {}", self.utilization)));
        }
        if self.mtu_bytes <= RTPS_HEADER_BYTES {
            return Err(invalid(format!("mtu must exceed the {RTPS_HEADER_BYTES} B RTPS header")));
        }
        Ok(())
    }

    /// `T * w`.
    pub fn link_budget_bytes_per_s(&self) -> f64 {
        self.link_throughput_bytes_per_s * self.utilization
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerWarning {
    /// The budget cannot hold a single sample; the cache was clamped to 1.
    LowBudget,
}

impl fmt::Display for OptimizerWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerWarning::LowBudget => f.write_str("LOW_BUDGET: link budget is below one sample, history cache clamped to 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedProfile {
    pub profile: QosProfile,
    pub warnings: Vec<OptimizerWarning>,
}

/// Largest RTPS message that fits one link packet.
pub fn fragmentation_free_message_bytes(mtu_bytes: u64) -> u64 {
    mtu_bytes - RTPS_HEADER_BYTES
}

pub fn optimize_profile(input: &OptimizationInput) -> Result<OptimizedProfile> {
    input.validate()?;
    let cache = history_cache_limit(
        input.link_throughput_bytes_per_s,
        input.utilization,
        input.sample_size_bytes as f64,
    )?;
    let mut warnings = Vec::new();
    if cache.clamped {
        warnings.push(OptimizerWarning::LowBudget);
    }
    let profile = QosProfile {
        max_rtps_message_bytes: fragmentation_free_message_bytes(input.mtu_bytes),
        retransmission_rate_hz: 2.0 * input.publish_rate_hz,
        history_cache_capacity: Some(cache.samples),
        reliability: Reliability::Reliable,
        history: History::KeepAll,
        blocked_publish: BlockedPublish::Defer,
    };
    Ok(OptimizedProfile { profile, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub offered_rate_bytes_per_s: f64,
    pub link_budget_bytes_per_s: f64,
    pub feasible: bool,
    pub predicted_burst_bytes: f64,
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "offered_rate_bytes_per_s = {:.1}", self.offered_rate_bytes_per_s)?;
        writeln!(f, "link_budget_bytes_per_s = {:.1}", self.link_budget_bytes_per_s)?;
        writeln!(f, "predicted_burst_bytes = {:.1}", self.predicted_burst_bytes)?;
        write!(f, "feasible = {}", self.feasible)
    }
}

/// Predicted load of the optimized (fragmentation-free, `n = 2r`) profile at delivery probability `p`.
pub fn feasibility(input: &OptimizationInput, p: f64) -> Result<FeasibilityReport> {
    input.validate()?;
    let r = input.publish_rate_hz;
    let u = input.sample_size_bytes as f64;
    let offered = steady_state_rate(r * u, p, 1)?;
    let burst = burst_size(u, r, 2.0 * r, p, p)?;
    let budget = input.link_budget_bytes_per_s();
    Ok(FeasibilityReport {
        offered_rate_bytes_per_s: offered,
        link_budget_bytes_per_s: budget,
        feasible: offered <= budget,
        predicted_burst_bytes: burst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelUse {
    Exclusive,
    Shared,
}

impl FromStr for ChannelUse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exclusive" => Ok(ChannelUse::Exclusive),
            "shared" => Ok(ChannelUse::Shared),
            other => Err(invalid(format!("unknown channel use '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UtilizationCaveat {
    SharedChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilizationRange {
    pub low: f64,
    pub high: f64,
    pub caveat: Option<UtilizationCaveat>,
}

/// `[0.6, 0.7]` on a dedicated link; a conservative 0.3 when other hosts share the channel.
pub fn recommend_utilization(channel: ChannelUse) -> UtilizationRange {
    match channel {
        ChannelUse::Exclusive => UtilizationRange { low: 0.6, high: 0.7, caveat: None },
        ChannelUse::Shared => UtilizationRange { low: 0.3, high: 0.3, caveat: Some(UtilizationCaveat::SharedChannel) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wireless() -> OptimizationInput {
        OptimizationInput::new(30.0, 231_000, 54.125e6, 0.6).unwrap()
    }

    #[test]
    fn wireless_433mbps_profile() {
        let out = optimize_profile(&wireless()).unwrap();
        assert_eq!(out.profile.max_rtps_message_bytes, 1472);
        assert_eq!(out.profile.retransmission_rate_hz, 60.0);
        assert_eq!(out.profile.history_cache_capacity, Some(140));
        assert_eq!(out.profile.reliability, Reliability::Reliable);
        assert_eq!(out.profile.history, History::KeepAll);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn budget_of_30mbytes_gives_129() {
        let input = OptimizationInput::new(30.0, 231_000, 30e6, 1.0).unwrap();
        assert_eq!(optimize_profile(&input).unwrap().profile.history_cache_capacity, Some(129));
    }

    #[test]
    fn heartbeat_depends_only_on_rate() {
        let input = OptimizationInput::new(1.0, 999, 1e3, 0.1).unwrap();
        assert_eq!(optimize_profile(&input).unwrap().profile.retransmission_rate_hz, 2.0);
    }

    #[test]
    fn low_budget_clamps_with_warning() {
        let input = OptimizationInput::new(30.0, 231_000, 1e5, 0.5).unwrap();
        let out = optimize_profile(&input).unwrap();
        assert_eq!(out.profile.history_cache_capacity, Some(1));
        assert_eq!(out.warnings, vec![OptimizerWarning::LowBudget]);
    }

    #[test]
    fn non_default_mtu_moves_step_one() {
        let input = wireless().with_mtu(9000).unwrap();
        assert_eq!(optimize_profile(&input).unwrap().profile.max_rtps_message_bytes, 8972);
    }

    #[test]
    fn utilization_above_one_rejected() {
        assert!(OptimizationInput::new(30.0, 231_000, 54.125e6, 1.1).is_err());
    }

    #[test]
    fn feasible_at_per_20() {
        let rep = feasibility(&wireless(), 0.8).unwrap();
        let oracle = 6.93e6 / (1.0 - 0.64 * 0.2);
        assert!((rep.offered_rate_bytes_per_s - oracle).abs() / oracle < 1e-12);
        assert!((rep.offered_rate_bytes_per_s - 7.948e6).abs() < 1e3);
        assert!((rep.link_budget_bytes_per_s - 32.475e6).abs() < 1e-6);
        assert!(rep.feasible);
    }

    #[test]
    fn lossless_offered_equals_publish_rate() {
        let rep = feasibility(&wireless(), 1.0).unwrap();
        assert_eq!(rep.offered_rate_bytes_per_s, 30.0 * 231_000.0);
        assert_eq!(rep.predicted_burst_bytes, 231_000.0);
    }

    #[test]
    fn overload_is_infeasible() {
        let input = OptimizationInput::new(30.0, 2_000_000, 54.125e6, 0.6).unwrap();
        assert!(!feasibility(&input, 1.0).unwrap().feasible);
    }

    #[test]
    fn utilization_recommendations() {
        let ex = recommend_utilization(ChannelUse::Exclusive);
        assert_eq!((ex.low, ex.high, ex.caveat), (0.6, 0.7, None));
        let sh = recommend_utilization(ChannelUse::Shared);
        assert_eq!((sh.low, sh.high), (0.3, 0.3));
        assert_eq!(sh.caveat, Some(UtilizationCaveat::SharedChannel));
    }

    #[test]
    fn channel_use_round_trips() {
        for c in [ChannelUse::Exclusive, ChannelUse::Shared] {
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<ChannelUse>(&text).unwrap(), c);
            assert_eq!(text.trim_matches('"').parse::<ChannelUse>().unwrap(), c);
        }
    }

    proptest! {
        #[test]
        fn step_one_is_constant(r in 0.1f64..1000.0, u in 1u64..10_000_000, t in 1e3f64..1e10, w in 0.01f64..=1.0) {
            let input = OptimizationInput::new(r, u, t, w).unwrap();
            let out = optimize_profile(&input).unwrap();
            prop_assert_eq!(out.profile.max_rtps_message_bytes, 1472);
            prop_assert_eq!(out.profile.retransmission_rate_hz, 2.0 * r);
            prop_assert!((1.0 / out.profile.retransmission_rate_hz - 1.0 / (2.0 * r)).abs() < 1e-15);
        }

        #[test]
        fn cache_is_floor_of_budget(r in 0.1f64..1000.0, u in 1u64..10_000_000, t in 1e3f64..1e10, w in 0.01f64..=1.0) {
            let input = OptimizationInput::new(r, u, t, w).unwrap();
            let out = optimize_profile(&input).unwrap();
            let n = out.profile.history_cache_capacity.unwrap() as f64;
            let budget = t * w;
            if out.warnings.is_empty() {
                prop_assert!(n * u as f64 <= budget);
                prop_assert!(budget < (n + 1.0) * u as f64);
            } else {
                prop_assert_eq!(n, 1.0);
                prop_assert!(budget < u as f64);
            }
        }

        #[test]
        fn cache_is_scale_consistent(u in 1_000u64..1_000_000, t in 1e6f64..1e9, w in 0.05f64..=1.0) {
            let ratio = t * w / u as f64;
            // stay clear of floor boundaries where rounding could flip the result
            prop_assume!((ratio - ratio.round()).abs() > 1e-6);
            let a = optimize_profile(&OptimizationInput::new(30.0, u, t, w).unwrap()).unwrap();
            let b = optimize_profile(&OptimizationInput::new(30.0, 2 * u, 2.0 * t, w).unwrap()).unwrap();
            prop_assert_eq!(a.profile.history_cache_capacity, b.profile.history_cache_capacity);
        }
    }
}
