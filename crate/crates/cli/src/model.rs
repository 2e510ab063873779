use std::fmt::Write as _;

use anyhow::{bail, Result};
use rtpslab::analytic::{burst_size, delivery_rate_table, steady_state_rate, FragmentationPlan};

/// Payload x N_IP surface of the steady-state rate.
pub fn rdds_csv(rate_hz: f64, per: f64, payloads: &[u64], nips: &[u64]) -> Result<String> {
    if payloads.is_empty() || nips.is_empty() {
        bail!("empty grid");
    }
    let p = 1.0 - per;
    let mut out = String::from("payload_bytes,r_pub_bytes_per_s");
    for n in nips {
        let _ = write!(out, ",r_dds_nip_{n}");
    }
    out.push('\n');
    for &u in payloads {
        let r_pub = rate_hz * u as f64;
        let _ = write!(out, "{u},{r_pub:.3}");
        for &n in nips {
            let _ = write!(out, ",{:.3}", steady_state_rate(r_pub, p, n)?);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Worst-case burst over publish rate x heartbeat rate at a fixed publish byte rate.
pub fn burst_csv(
    r_pub_bytes_per_s: f64,
    per: f64,
    rates: &[f64],
    retx: &[f64],
    max_message_bytes: u64,
    mtu: u64,
) -> Result<String> {
    if rates.is_empty() || retx.is_empty() {
        bail!("empty grid");
    }
    let p = 1.0 - per;
    let mut out = String::from("publish_rate_hz,retx_rate_hz,sample_bytes,n_ip,burst_bytes,burst_mbits,default_retx\n");
    for &r in rates {
        let u = r_pub_bytes_per_s / r;
        let plan = FragmentationPlan::new(u.round().max(1.0) as u64, max_message_bytes, mtu)?;
        let n_ip = plan.packets_per_full_message();
        let q = p.powi(n_ip as i32);
        for &n in retx {
            let b = burst_size(u, r, n, p, q)?;
            let default_retx = (n - 1.0 / 3.0).abs() < 1e-3;
            let _ = writeln!(out, "{r},{n},{u:.3},{n_ip},{b:.3},{:.6},{default_retx}", b * 8.0 / 1e6);
        }
    }
    Ok(out)
}

/// Best-effort delivery percentages, one row per PER.
pub fn delivery_csv(pers: &[f64], payloads: &[u64], max_message_bytes: u64, mtu: u64) -> Result<String> {
    if pers.is_empty() || payloads.is_empty() {
        bail!("empty grid");
    }
    let table = delivery_rate_table(payloads, pers, max_message_bytes, mtu)?;
    let mut out = String::from("per");
    for u in payloads {
        let _ = write!(out, ",{u}");
    }
    out.push('\n');
    for (i, per) in pers.iter().enumerate() {
        let _ = write!(out, "{per}");
        for j in 0..payloads.len() {
            let _ = write!(out, ",{:.3}", table.cell(i, j) * 100.0);
        }
        out.push('\n');
    }
    Ok(out)
}
