//! Sweep lists: `a:b:xK` (geometric), `a:b:+d` (arithmetic) or a comma list.

use diracwkb::{Error, Result};

/// Relative slack when deciding whether the last step still lands on `b`.
const END_SLACK: f64 = 1e-9;
const MAX_POINTS: usize = 10_000;

fn number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::invalid(what, format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::invalid(what, "must be finite"));
    }
    Ok(v)
}

/// Expands a range spec into its values, in the order written.
pub fn parse_range(spec: &str, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        [a, b, step] => {
            let a = number(a, what)?;
            let b = number(b, what)?;
            let step = step.trim();
            if let Some(k) = step.strip_prefix('x') {
                geometric(a, b, number(k, what)?, what)?
            } else if let Some(d) = step.strip_prefix('+') {
                arithmetic(a, b, number(d, what)?, what)?
            } else {
                return Err(Error::invalid(what, format!("step '{step}' must start with 'x' or '+'")));
            }
        }
        [list] => list.split(',').map(|s| number(s, what)).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::invalid(what, format!("'{spec}' is neither a:b:xK, a:b:+d nor a list"))),
    };
    if out.is_empty() {
        return Err(Error::invalid(what, "empty range"));
    }
    Ok(out)
}

fn geometric(a: f64, b: f64, k: f64, what: &str) -> Result<Vec<f64>> {
    if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
        return Err(Error::invalid(what, "geometric ends must be nonzero with equal sign"));
    }
    if !(k > 1.0) {
        return Err(Error::invalid(what, "geometric factor must exceed 1"));
    }
    if b.abs() < a.abs() {
        return Err(Error::invalid(what, "geometric range must grow in magnitude"));
    }
    let mut out = Vec::new();
    let mut v = a;
    while v.abs() <= b.abs() * (1.0 + END_SLACK) {
        out.push(v);
        if out.len() > MAX_POINTS {
            return Err(Error::invalid(what, format!("more than {MAX_POINTS} points")));
        }
        v *= k;
    }
    Ok(out)
}

fn arithmetic(a: f64, b: f64, d: f64, what: &str) -> Result<Vec<f64>> {
    if !(d > 0.0) {
        return Err(Error::invalid(what, "arithmetic step must be positive"));
    }
    let dir = if b >= a { 1.0 } else { -1.0 };
    let count = ((b - a).abs() / d * (1.0 + END_SLACK)).floor() as usize + 1;
    if count > MAX_POINTS {
        return Err(Error::invalid(what, format!("more than {MAX_POINTS} points")));
    }
    // index-based so long ranges do not accumulate rounding
    Ok((0..count).map(|i| a + dir * d * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling() {
        assert_eq!(parse_range("100:1600:x2", "l").unwrap(), vec![100.0, 200.0, 400.0, 800.0, 1600.0]);
        assert_eq!(parse_range("-100:-400:x2", "l").unwrap(), vec![-100.0, -200.0, -400.0]);
        assert_eq!(parse_range("20:320:x2", "b").unwrap().len(), 5);
    }

    #[test]
    fn arithmetic_and_lists() {
        assert_eq!(parse_range("1:2:+0.25", "l").unwrap(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(parse_range("3:1:+1", "l").unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(parse_range("0.1:0.3:+0.1", "l").unwrap().len(), 3);
        assert_eq!(parse_range("5, 7,9", "l").unwrap(), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "1:2", "1:2:3", "1:2:x1", "0:4:x2", "-1:4:x2", "1:2:+0", "a:b:x2", "1:inf:+1", "4:1:x2"] {
            assert!(parse_range(bad, "l").is_err(), "{bad}");
        }
    }
}
