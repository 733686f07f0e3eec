//! Score files and CSV interchange.
//!
//! Score files hold one float per line. Lines that are blank or start with
//! `#` are skipped. Curves and profiles are two-column CSV with a header row
//! and 12-significant-digit values, so re-reading and re-writing is
//! byte-for-byte idempotent.

use crate::error::{AuditError, Result};
use crate::profile::TabulatedProfile;
use crate::tradeoff::TradeoffCurve;
use std::fmt::Write as _;
use std::path::Path;

pub const PROFILE_HEADER: &str = "epsilon,delta";
pub const CURVE_HEADER: &str = "alpha,beta";

/// Formats like C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses a score file body.
pub fn parse_scores(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| AuditError::Parse {
            line: i + 1,
            msg: format!("not a number: {t:?}"),
        })?;
        if !v.is_finite() {
            return Err(AuditError::Parse {
                line: i + 1,
                msg: format!("non-finite value: {t:?}"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AuditError::Io(format!("{}: {e}", path.display())))?;
    parse_scores(&text)
}

/// Writes scores with shortest round-trip formatting.
pub fn scores_to_string(scores: &[f64]) -> String {
    let mut s = String::with_capacity(scores.len() * 20);
    for x in scores {
        writeln!(s, "{x}").expect("write to string");
    }
    s
}

pub fn write_scores(path: &Path, scores: &[f64]) -> Result<()> {
    write_text(path, &scores_to_string(scores))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| AuditError::Io(format!("{}: {e}", path.display())))
}

fn pairs_to_csv<I: IntoIterator<Item = (f64, f64)>>(header: &str, rows: I) -> String {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    for (a, b) in rows {
        writeln!(s, "{},{}", format_sig12(a), format_sig12(b)).expect("write to string");
    }
    s
}

fn parse_pairs(text: &str, header: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !seen_header {
            seen_header = true;
            if t.eq_ignore_ascii_case(header) {
                continue;
            }
        }
        let err = |msg: String| AuditError::Parse { line: i + 1, msg };
        let (a, b) = t
            .split_once(',')
            .ok_or_else(|| err(format!("expected two columns: {t:?}")))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| err(format!("not a number: {a:?}")))?;
        let b: f64 = b
            .trim()
            .parse()
            .map_err(|_| err(format!("not a number: {b:?}")))?;
        out.push((a, b));
    }
    Ok(out)
}

pub fn profile_to_csv(profile: &TabulatedProfile) -> String {
    pairs_to_csv(
        PROFILE_HEADER,
        profile
            .eps()
            .iter()
            .copied()
            .zip(profile.delta().iter().copied()),
    )
}

/// Parses an `epsilon,delta` CSV. The header row is optional.
pub fn parse_profile_csv(text: &str) -> Result<TabulatedProfile> {
    let rows = parse_pairs(text, PROFILE_HEADER)?;
    if rows.is_empty() {
        return Err(AuditError::Empty("profile"));
    }
    let (eps, delta) = rows.into_iter().unzip();
    TabulatedProfile::new(eps, delta)
}

pub fn curve_to_csv(curve: &TradeoffCurve) -> String {
    pairs_to_csv(CURVE_HEADER, curve.points().iter().copied())
}

/// Parses an `alpha,beta` CSV. The header row is optional.
pub fn parse_curve_csv(text: &str) -> Result<TradeoffCurve> {
    let rows = parse_pairs(text, CURVE_HEADER)?;
    if rows.is_empty() {
        return Err(AuditError::Empty("trade-off curve"));
    }
    TradeoffCurve::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_matches_printf() {
        assert_eq!(format_sig12(0.1), "0.1");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(-2.5), "-2.5");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(123456789012.0), "123456789012");
        assert_eq!(format_sig12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(format_sig12(1e-5), "1e-05");
        assert_eq!(format_sig12(0.0001234), "0.0001234");
        assert_eq!(format_sig12(9.9999999999999e-1), "1");
    }

    #[test]
    fn scores_parse_and_report_lines() {
        assert_eq!(parse_scores("1\n\n# c\n2.5\n").unwrap(), vec![1.0, 2.5]);
        match parse_scores("1\nabc\n") {
            Err(AuditError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let xs = vec![0.1, -3.0, 1e-300, 123.456];
        assert_eq!(parse_scores(&scores_to_string(&xs)).unwrap(), xs);
    }

    #[test]
    fn profile_csv_idempotent() {
        let p = TabulatedProfile::new(vec![0.0, 0.5, 1.0], vec![0.3, 0.2 / 3.0, 0.01]).unwrap();
        let a = profile_to_csv(&p);
        let b = profile_to_csv(&parse_profile_csv(&a).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("epsilon,delta\n"));
        assert!(parse_profile_csv("").is_err());
    }
}
