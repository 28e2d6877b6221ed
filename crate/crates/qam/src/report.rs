//! JSON run reports.
//!
//! Every report carries the tool name, its version, the subcommand that
//! produced it, and an ISO-8601 timestamp. The timestamp honours the
//! `SOURCE_DATE_EPOCH` convention (seconds since the Unix epoch) so that
//! report files can be made byte-reproducible; bulk numeric outputs never
//! contain timestamps in the first place.

use crate::error::{QamError, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{Map, Value};
use std::path::Path;

/// The report generation time in ISO-8601, from `SOURCE_DATE_EPOCH` when
/// set (a misparse is a loud configuration error, not a silent fallback),
/// otherwise the wall clock.
pub fn timestamp() -> Result<String> {
    let moment: DateTime<Utc> = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(raw) => {
            let secs: i64 = raw.trim().parse().map_err(|_| {
                QamError::Config(format!(
                    "SOURCE_DATE_EPOCH must be an integer count of seconds, got '{raw}'"
                ))
            })?;
            DateTime::from_timestamp(secs, 0).ok_or_else(|| {
                QamError::Config(format!("SOURCE_DATE_EPOCH {secs} is out of range"))
            })?
        }
        Err(_) => Utc::now(),
    };
    Ok(moment.to_rfc3339_opts(SecondsFormat::Secs, true))
}

/// The common header fields of a report.
pub fn base_report(subcommand: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    map.insert("tool".into(), Value::String("qam".into()));
    map.insert(
        "version".into(),
        Value::String(env!("CARGO_PKG_VERSION").into()),
    );
    map.insert("generated_at".into(), Value::String(timestamp()?));
    map.insert("subcommand".into(), Value::String(subcommand.into()));
    Ok(map)
}

/// Write a report as pretty-printed JSON with a trailing newline, to the
/// path or to standard output when no path is given.
pub fn write_report(out: Option<&Path>, report: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| QamError::Config(format!("serializing report: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// A JSON value for a float that may be non-finite (JSON has no literal
/// for those, so they are encoded as strings).
pub fn json_f64(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(format!("{x}")),
    }
}
