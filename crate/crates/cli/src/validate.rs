use std::fmt;

use anyhow::Result;
use rayon::prelude::*;
use rtpslab::analytic::{burst_size, steady_state_rate};
use rtpslab::sim::{run_scenario_with, LinkModel, QosProfile, RunOptions, ScenarioSpec, WorkloadSpec};

pub const RATE_TOLERANCE: f64 = 0.05;
pub const BURST_TOLERANCE: f64 = 0.10;
pub const LOSSLESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub p: f64,
    pub n_ip: u64,
    pub rate_hz: f64,
    pub retx_hz: f64,
}

impl Cell {
    /// Sample size and max message size giving one message of `n_ip` packets.
    fn sizes(&self) -> (u64, u64) {
        if self.n_ip == 1 {
            (1472, 1472)
        } else {
            // one 65,536 B message at most, split into n_ip MTU packets
            ((self.n_ip - 1) * 1500 + 1000, 65_536)
        }
    }

    fn burst_comparable(&self) -> bool {
        (self.rate_hz / self.retx_hz).fract() == 0.0
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub rate_dev: f64,
    pub burst_dev: Option<f64>,
    pub pass: bool,
}

impl fmt::Display for CellResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.cell;
        write!(f, "p={} n_ip={} r={} n={} rate_dev={:.6}", c.p, c.n_ip, c.rate_hz, c.retx_hz, self.rate_dev)?;
        match self.burst_dev {
            Some(d) => write!(f, " burst_dev={d:.6}")?,
            None => write!(f, " burst_dev=n/a")?,
        }
        write!(f, " {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

pub fn default_grid(rate_hz: f64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for p in [1.0, 0.99, 0.9] {
        for n_ip in [1, 44] {
            for retx_hz in [rate_hz / 2.0, 2.0 * rate_hz] {
                cells.push(Cell { p, n_ip, rate_hz, retx_hz });
            }
        }
    }
    cells
}

pub fn run_cell(cell: Cell, rounds: u64, seed: u64) -> Result<CellResult> {
    let (u, m) = cell.sizes();
    let span = rounds as f64 / cell.retx_hz;
    let count = (span * cell.rate_hz).round() as u64;
    let spec = ScenarioSpec {
        name: "validate".into(),
        workload: WorkloadSpec { publish_rate_hz: cell.rate_hz, sample_size_bytes: u, sample_count: count, start_time_s: 0.0 },
        link: LinkModel { delivery_prob: cell.p, ..LinkModel::ideal() },
        qos: QosProfile {
            max_rtps_message_bytes: m,
            retransmission_rate_hz: cell.retx_hz,
            history_cache_capacity: None,
            ..QosProfile::middleware_default()
        },
        duration_s: span * 100.0 + 1000.0,
        rng_seed: seed,
    };
    let out = run_scenario_with(&spec, RunOptions { record_trace: false })?;
    let r_pub = cell.rate_hz * u as f64;
    let model_rate = steady_state_rate(r_pub, cell.p, cell.n_ip)?;
    let rate_dev = (out.link_stats.offered_rate_bytes_per_s - model_rate).abs() / model_rate;
    let burst_dev = if cell.burst_comparable() {
        let q = cell.p.powi(cell.n_ip as i32);
        let model_burst = burst_size(u as f64, cell.rate_hz, cell.retx_hz, cell.p, q)?;
        Some((out.link_stats.mean_round_burst_bytes - model_burst).abs() / model_burst)
    } else {
        None
    };
    let (rate_tol, burst_tol) = if cell.p == 1.0 { (LOSSLESS_TOLERANCE, LOSSLESS_TOLERANCE) } else { (RATE_TOLERANCE, BURST_TOLERANCE) };
    let pass = rate_dev <= rate_tol && burst_dev.is_none_or(|d| d <= burst_tol);
    Ok(CellResult { cell, rate_dev, burst_dev, pass })
}

pub fn run_grid(cells: &[Cell], rounds: u64, seed: u64) -> Result<Vec<CellResult>> {
    cells.par_iter().map(|&c| run_cell(c, rounds, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_cells_are_exact() {
        for n_ip in [1, 44] {
            let r = run_cell(Cell { p: 1.0, n_ip, rate_hz: 2.0, retx_hz: 1.0 }, 200, 1).unwrap();
            assert!(r.rate_dev < 1e-9 && r.burst_dev.unwrap() < 1e-9, "{r}");
        }
    }

    #[test]
    fn sizes_hit_packet_count() {
        let (u, m) = Cell { p: 1.0, n_ip: 44, rate_hz: 1.0, retx_hz: 1.0 }.sizes();
        assert_eq!(u.min(m).div_ceil(1500), 44);
        assert!(u <= m);
    }
}
