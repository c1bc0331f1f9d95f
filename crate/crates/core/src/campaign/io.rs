//! Trace file format.
//!
//! ```text
//! # power_dbm=-60
//! # attenuation_db=70
//! freq_hz,re,im
//! 4.07e9,0.91,-0.02
//! ```
//!
//! The frequency column may be `freq_hz`, `freq_khz`, `freq_mhz` or
//! `freq_ghz`. Other `#` lines are comments. Values are written in the
//! shortest form that parses back to the same `f64`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::CampaignError;
use crate::fit::ComplexTrace;

fn parse_err(line: usize, column: usize, reason: impl Into<String>) -> CampaignError {
    CampaignError::Parse {
        line,
        column,
        reason: reason.into(),
    }
}

fn frequency_scale(name: &str) -> Result<f64, CampaignError> {
    match name {
        "freq_hz" => Ok(1.0),
        "freq_khz" => Ok(1e3),
        "freq_mhz" => Ok(1e6),
        "freq_ghz" => Ok(1e9),
        other => Err(CampaignError::Unit(format!(
            "unsupported frequency column `{other}`"
        ))),
    }
}

fn parse_metadata(
    body: &str,
    line: usize,
    power: &mut f64,
    attenuation: &mut f64,
) -> Result<(), CampaignError> {
    let Some((key, value)) = body.split_once('=') else {
        return Ok(());
    };
    let target = match key.trim() {
        "power_dbm" => power,
        "attenuation_db" => attenuation,
        _ => return Ok(()),
    };
    *target = value.trim().parse().map_err(|_| {
        parse_err(
            line,
            1,
            format!("metadata `{}` is not a number", key.trim()),
        )
    })?;
    if !target.is_finite() {
        return Err(parse_err(
            line,
            1,
            format!("metadata `{}` is not finite", key.trim()),
        ));
    }
    Ok(())
}

/// Parses a trace from any reader. Line and column numbers in errors are
/// 1-based; columns count comma-separated fields.
pub fn read_trace(reader: impl Read) -> Result<ComplexTrace, CampaignError> {
    let mut power = 0.0;
    let mut attenuation = 0.0;
    let mut scale: Option<f64> = None;
    let mut freqs = Vec::new();
    let mut samples = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(body) = text.strip_prefix('#') {
            parse_metadata(body, lineno, &mut power, &mut attenuation)?;
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let Some(s) = scale else {
            if fields.len() != 3 {
                return Err(parse_err(
                    lineno,
                    1,
                    format!("expected 3 header columns, found {}", fields.len()),
                ));
            }
            if !fields[0].starts_with("freq_") {
                return Err(parse_err(
                    lineno,
                    1,
                    format!("first column must be a frequency, found `{}`", fields[0]),
                ));
            }
            scale = Some(frequency_scale(fields[0])?);
            for (c, want) in [(1, "re"), (2, "im")] {
                if fields[c] != want {
                    return Err(parse_err(
                        lineno,
                        c + 1,
                        format!("expected `{want}`, found `{}`", fields[c]),
                    ));
                }
            }
            continue;
        };
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                fields.len().min(3) + 1,
                format!("expected 3 values, found {}", fields.len()),
            ));
        }
        let mut v = [0.0; 3];
        for (c, f) in fields.iter().enumerate() {
            v[c] = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(lineno, c + 1, format!("`{f}` is not a finite number")))?;
        }
        let f = if s == 1.0 { v[0] } else { v[0] * s };
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(parse_err(
                    lineno,
                    1,
                    format!("frequency {f} Hz does not increase (previous {prev} Hz)"),
                ));
            }
        }
        freqs.push(f);
        samples.push(Complex64::new(v[1], v[2]));
    }
    if scale.is_none() {
        return Err(parse_err(1, 1, "missing header line `freq_hz,re,im`"));
    }
    Ok(ComplexTrace::new(freqs, samples, power, attenuation)?)
}

pub fn parse_trace(text: &str) -> Result<ComplexTrace, CampaignError> {
    read_trace(text.as_bytes())
}

pub fn ingest_trace(path: &Path) -> Result<ComplexTrace, CampaignError> {
    read_trace(std::fs::File::open(path)?)
}

pub fn trace_to_string(trace: &ComplexTrace) -> String {
    let mut s = String::with_capacity(48 * trace.len() + 64);
    let _ = writeln!(s, "# power_dbm={}", trace.power_dbm());
    let _ = writeln!(s, "# attenuation_db={}", trace.attenuation_db());
    s.push_str("freq_hz,re,im\n");
    for (f, z) in trace.freqs().iter().zip(trace.samples()) {
        let _ = writeln!(s, "{f},{},{}", z.re, z.im);
    }
    s
}

pub fn write_trace(trace: &ComplexTrace, mut writer: impl Write) -> Result<(), CampaignError> {
    writer.write_all(trace_to_string(trace).as_bytes())?;
    Ok(())
}

pub fn save_trace(trace: &ComplexTrace, path: &Path) -> Result<(), CampaignError> {
    std::fs::write(path, trace_to_string(trace))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "# power_dbm=-60\n# attenuation_db=70\n# note\nfreq_hz,re,im\n1,0.5,0.1\n2,0.25,-0.1\n3,0.5,0\n4,1,0\n5,1,0\n6,1,0\n7,1,0\n8,1,0\n";

    #[test]
    fn valid_file_parses() {
        let t = parse_trace(GOOD).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t.power_dbm(), -60.0);
        assert_eq!(t.attenuation_db(), 70.0);
        assert_eq!(t.samples()[1], Complex64::new(0.25, -0.1));
    }

    #[test]
    fn non_monotonic_row_names_line() {
        let bad = GOOD.replace("3,0.5,0", "2,0.5,0");
        match parse_trace(&bad) {
            Err(CampaignError::Parse { line, column, .. }) => assert_eq!((line, column), (7, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_names_column() {
        let bad = GOOD.replace("2,0.25,-0.1", "2,0.25,x");
        match parse_trace(&bad) {
            Err(CampaignError::Parse { line, column, .. }) => assert_eq!((line, column), (6, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn units() {
        let ghz = GOOD.replace("freq_hz", "freq_ghz");
        assert_eq!(parse_trace(&ghz).unwrap().freqs()[0], 1e9);
        assert!(matches!(
            parse_trace(&GOOD.replace("freq_hz", "freq_thz")),
            Err(CampaignError::Unit(_))
        ));
    }

    #[test]
    fn write_read_is_bit_exact() {
        let freqs: Vec<f64> = (0..16)
            .map(|k| 4.0743e9 + k as f64 * 1_234.567_891_234_5)
            .collect();
        let samples: Vec<Complex64> = (0..16)
            .map(|k| Complex64::new((k as f64 * 0.37).sin() / 3.0, (k as f64).sqrt() * 1e-17))
            .collect();
        let t = ComplexTrace::new(freqs, samples, -61.123_456_789, 70.0).unwrap();
        assert_eq!(parse_trace(&trace_to_string(&t)).unwrap(), t);
    }
}
