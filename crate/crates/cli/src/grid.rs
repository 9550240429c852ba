//! `lo:hi:count` ranges and comma-separated lists.

use crate::{CliError, CliResult};

fn bad(what: &str, text: &str) -> CliError {
    CliError::Validation(format!("cannot read {what} from '{text}'"))
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

pub fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad("lo:hi:count", text));
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad("lo:hi:count", text))?;
    let hi: f64 = parts[1].parse().map_err(|_| bad("lo:hi:count", text))?;
    let count: usize = parts[2].parse().map_err(|_| bad("lo:hi:count", text))?;
    if !lo.is_finite() || !hi.is_finite() || count == 0 || (count > 1 && hi <= lo) {
        return Err(CliError::Validation(format!("range '{text}' needs finite lo < hi and count >= 1")));
    }
    Ok(linspace(lo, hi, count))
}

pub fn parse_list(text: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad("a list of numbers", text))?;
    if values.is_empty() {
        return Err(bad("a list of numbers", text));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("2:2:1").unwrap(), vec![2.0]);
        let r = parse_range("0.1:5:50").unwrap();
        assert_eq!((r.len(), r[0], r[49]), (50, 0.1, 5.0));
        for bad in ["1:0:3", "0:1", "0:1:0", "a:1:2", "0:inf:2"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("-2, -0.5,1").unwrap(), vec![-2.0, -0.5, 1.0]);
        assert!(parse_list("1,,2").is_err());
        assert!(parse_list("nan").is_err());
    }
}
