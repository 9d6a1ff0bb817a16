//! Time-grid expressions of the form `A:B:logN` (geometric spacing) or
//! `A:B:linN` (arithmetic spacing), producing `N` points from `A` to `B`
//! inclusive.

use anyhow::{anyhow, bail, Context, Result};

pub fn parse_time_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("a time grid looks like A:B:logN or A:B:linN, got {text:?}");
    }
    let a: f64 = parts[0]
        .parse()
        .with_context(|| format!("bad grid start {:?}", parts[0]))?;
    let b: f64 = parts[1]
        .parse()
        .with_context(|| format!("bad grid end {:?}", parts[1]))?;
    let (geometric, count_text) = if let Some(rest) = parts[2].strip_prefix("log") {
        (true, rest)
    } else if let Some(rest) = parts[2].strip_prefix("lin") {
        (false, rest)
    } else {
        bail!(
            "the grid point count must be prefixed with 'log' or 'lin', got {:?}",
            parts[2]
        );
    };
    let n: usize = count_text
        .parse()
        .with_context(|| format!("bad grid point count {count_text:?}"))?;
    if n == 0 {
        bail!("a time grid needs at least one point");
    }
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        bail!("grid endpoints must be positive finite times, got {a} and {b}");
    }
    if a > b {
        bail!("grid start {a} exceeds grid end {b}");
    }
    if n == 1 {
        if a != b {
            return Err(anyhow!(
                "a single-point grid needs equal endpoints, got {a} and {b}"
            ));
        }
        return Ok(vec![a]);
    }
    let mut out = Vec::with_capacity(n);
    let denom = (n - 1) as f64;
    for k in 0..n {
        let s = k as f64 / denom;
        let v = if geometric {
            a * (b / a).powf(s)
        } else {
            a + (b - a) * s
        };
        out.push(v);
    }
    // Pin the endpoints exactly.
    out[0] = a;
    out[n - 1] = b;
    Ok(out)
}
