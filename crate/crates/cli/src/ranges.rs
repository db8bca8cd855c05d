//! List and range arguments: `1,8,64`, `1..1048576` (doubling), `0..400:20` (stepped).

use crate::error::{CliError, CliResult};

fn num<T: std::str::FromStr>(s: &str) -> CliResult<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse {s:?} as a number")))
}

/// Comma list of integers; `a..b` expands to `a, 2a, 4a, ...` up to `b`.
pub fn int_list(text: &str) -> CliResult<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        if let Some((a, b)) = part.split_once("..") {
            let (mut v, end): (u64, u64) = (num(a)?, num(b)?);
            if v == 0 || v > end {
                return Err(CliError::Usage(format!("bad doubling range {part:?}")));
            }
            while v <= end {
                out.push(v);
                v *= 2;
            }
        } else {
            out.push(num(part)?);
        }
    }
    Ok(out)
}

/// Comma list of floats, e.g. `1e-10,1e-14`.
pub fn float_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',').map(num).collect()
}

/// `start..end:step` inclusive, or a comma list.
pub fn stepped(text: &str) -> CliResult<Vec<f64>> {
    let Some((range, step)) = text.split_once(':') else {
        return float_list(text);
    };
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| CliError::Usage(format!("expected start..end:step, got {text:?}")))?;
    let (start, end, step): (f64, f64, f64) = (num(a)?, num(b)?, num(step)?);
    if step.is_nan() || step <= 0.0 || start > end {
        return Err(CliError::Usage(format!("bad range {text:?}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}
