use anyhow::{bail, Context, Result};

/// Byte count with an optional `k` (x1000) suffix: `231000`, `231k`, `33.5k`.
pub fn parse_bytes(s: &str) -> Result<u64> {
    let t = s.trim();
    let (num, scale) = match t.strip_suffix(['k', 'K']) {
        Some(n) => (n, 1000.0),
        None => (t, 1.0),
    };
    let v: f64 = num.parse().with_context(|| format!("invalid byte count '{s}'"))?;
    let bytes = v * scale;
    if !(bytes >= 1.0 && bytes.is_finite()) || bytes.fract() != 0.0 {
        bail!("byte count '{s}' must be a positive whole number");
    }
    Ok(bytes as u64)
}

/// Decimal megabits per second to bytes per second.
pub fn mbps_to_bytes_per_s(mbps: f64) -> f64 {
    mbps * 1e6 / 8.0
}

/// `a,b,c` or `a..b` (stepping by `a`, or by `step` when given), in bytes.
pub fn parse_byte_list(s: &str, step: Option<u64>) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse_bytes(lo)?;
        let hi = parse_bytes(hi)?;
        let step = step.unwrap_or(lo);
        if step == 0 || hi < lo {
            bail!("empty range '{s}'");
        }
        return Ok((0..).map(|i| lo + i * step).take_while(|&v| v <= hi).collect());
    }
    let out = s.split(',').filter(|p| !p.trim().is_empty()).map(parse_bytes).collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        bail!("empty list '{s}'");
    }
    Ok(out)
}

/// Comma-separated floats.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let out = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("invalid number '{p}'")))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        bail!("empty list '{s}'");
    }
    Ok(out)
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    let out = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("invalid integer '{p}'")))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        bail!("empty list '{s}'");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_suffix() {
        assert_eq!(parse_bytes("231k").unwrap(), 231_000);
        assert_eq!(parse_bytes("231000").unwrap(), 231_000);
        assert_eq!(parse_bytes("33.5k").unwrap(), 33_500);
        assert!(parse_bytes("0").is_err());
        assert!(parse_bytes("1.5").is_err());
        assert!(parse_bytes("abc").is_err());
    }

    #[test]
    fn ranges_and_lists() {
        let v = parse_byte_list("33k..330k", None).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!((v[0], v[9]), (33_000, 330_000));
        assert_eq!(parse_byte_list("1k,2k", None).unwrap(), vec![1000, 2000]);
        assert_eq!(parse_byte_list("10..30", Some(10)).unwrap(), vec![10, 20, 30]);
        assert!(parse_byte_list("", None).is_err());
        assert!(parse_byte_list("5k..1k", None).is_err());
    }

    #[test]
    fn megabits() {
        assert_eq!(mbps_to_bytes_per_s(433.0), 54.125e6);
        assert_eq!(mbps_to_bytes_per_s(240.0), 30e6);
    }
}
