//! Plain-text serialization: PSD templates and power-delay profiles.
//!
//! Templates round-trip bit-exactly through decimal text (17 significant
//! digits suffice to reconstruct any f64). Power-delay profiles use a
//! bare two-column format so measured profiles can be dropped in from any
//! tool.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::PedBProfile;
use crate::error::{Error, Result};
use crate::spectral::PsdTemplate;

/// Render a template in the two-column text format: one header line with
/// bin count, sample rate and label, then `bin value` rows.
pub fn format_template(tpl: &PsdTemplate, sample_rate_hz: f64) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# n={} sample_rate_hz={:.16e} label={}",
        tpl.n(),
        sample_rate_hz,
        tpl.label()
    )
    .expect("string write");
    for (k, v) in tpl.values().iter().enumerate() {
        writeln!(out, "{k} {v:.16e}").expect("string write");
    }
    out
}

/// Parse the template text format back into a template and its sample
/// rate.
pub fn parse_template(text: &str) -> Result<(PsdTemplate, f64)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty template file".into()))?;
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("template header must start with '#'".into()))?
        .trim();

    let mut n: Option<usize> = None;
    let mut rate: Option<f64> = None;
    let mut label: Option<String> = None;
    let mut rest = body;
    while !rest.is_empty() {
        // label=... consumes the remainder so labels may contain spaces.
        if let Some(value) = rest.strip_prefix("label=") {
            label = Some(value.to_string());
            break;
        }
        let (field, tail) = match rest.split_once(char::is_whitespace) {
            Some((f, t)) => (f, t.trim_start()),
            None => (rest, ""),
        };
        if let Some(v) = field.strip_prefix("n=") {
            n = Some(
                v.parse()
                    .map_err(|_| Error::Parse(format!("bad bin count {v:?}")))?,
            );
        } else if let Some(v) = field.strip_prefix("sample_rate_hz=") {
            rate = Some(
                v.parse()
                    .map_err(|_| Error::Parse(format!("bad sample rate {v:?}")))?,
            );
        } else {
            return Err(Error::Parse(format!("unknown header field {field:?}")));
        }
        rest = tail;
    }
    let n = n.ok_or_else(|| Error::Parse("header missing n=".into()))?;
    let rate = rate.ok_or_else(|| Error::Parse("header missing sample_rate_hz=".into()))?;
    let label = label.ok_or_else(|| Error::Parse("header missing label=".into()))?;

    let mut values = Vec::with_capacity(n);
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (idx, val) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Parse(format!("expected 'bin value', got {line:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::Parse(format!("bad bin index {idx:?}")))?;
        if idx != values.len() {
            return Err(Error::Parse(format!(
                "bin indices must be consecutive from 0; expected {}, got {idx}",
                values.len()
            )));
        }
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad bin value {val:?}")))?;
        values.push(val);
    }
    if values.len() != n {
        return Err(Error::Parse(format!(
            "header says n={n} but file has {} rows",
            values.len()
        )));
    }
    Ok((PsdTemplate::new(values, label)?, rate))
}

/// Write a template to a file in the text format.
pub fn save_template(tpl: &PsdTemplate, sample_rate_hz: f64, path: &Path) -> Result<()> {
    std::fs::write(path, format_template(tpl, sample_rate_hz))?;
    Ok(())
}

/// Read a template file written by [`save_template`].
pub fn load_template(path: &Path) -> Result<(PsdTemplate, f64)> {
    parse_template(&std::fs::read_to_string(path)?)
}

/// Parse a power-delay profile from two-column text: `delay_ns gain_db`
/// per tap, blank lines and `#` comments ignored.
pub fn parse_pdp(text: &str) -> Result<PedBProfile> {
    let mut delays = Vec::new();
    let mut gains = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (d, g) = line.split_once(char::is_whitespace).ok_or_else(|| {
            Error::Parse(format!(
                "line {}: expected 'delay_ns gain_db', got {line:?}",
                lineno + 1
            ))
        })?;
        let d: f64 = d
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad delay {d:?}", lineno + 1)))?;
        let g: f64 = g
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad gain {g:?}", lineno + 1)))?;
        delays.push(d);
        gains.push(g);
    }
    PedBProfile::new(delays, gains)
}

/// Read a power-delay profile file.
pub fn load_pdp(path: &Path) -> Result<PedBProfile> {
    parse_pdp(&std::fs::read_to_string(path)?)
}
