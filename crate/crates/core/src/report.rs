//! CSV output. Every file starts with a schema-version line followed by the
//! resolved config as `#`-prefixed TOML; floats use Rust's shortest
//! round-trip formatting, so parsing a report gives back identical values.

use std::fmt::Write as _;

use crate::channel::ChannelRealization;
use crate::config::{ScenarioConfig, SCHEMA_VERSION};
use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::runner::{AlphaRow, ReportRow, RunResult};

pub const SWEEP_COLUMNS: &str = "snr_db,estimator,prior,nmse_theory,nmse_sim,stderr_sim,trials";
pub const ALPHA_COLUMNS: &str =
    "alpha,mg_mean,mg_variance,power_theory,power_sim,power_stderr,snr_db,estimator,prior,nmse_theory,nmse_sim,stderr_sim,trials";
pub const CORRELATION_COLUMNS: &str = "q,p,re,im";
pub const CHANNEL_COLUMNS: &str = "trial,k,m,re,im";

const CONFIG_BEGIN: &str = "# config.begin";
const CONFIG_END: &str = "# config.end";

fn header(out: &mut String, config: &ScenarioConfig, extra: &[String]) -> Result<()> {
    writeln!(out, "# schema_version={SCHEMA_VERSION}").unwrap();
    for line in extra {
        writeln!(out, "# {line}").unwrap();
    }
    writeln!(out, "{CONFIG_BEGIN}").unwrap();
    for line in config.to_toml()?.lines() {
        writeln!(out, "# {line}").unwrap();
    }
    writeln!(out, "{CONFIG_END}").unwrap();
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn push_row(out: &mut String, r: &ReportRow) {
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        r.snr_db,
        r.estimator,
        r.prior,
        opt(r.nmse_theory),
        opt(r.nmse_sim),
        opt(r.stderr_sim),
        r.trials
    )
    .unwrap();
}

/// NMSE sweep table.
pub fn sweep_csv(result: &RunResult) -> Result<String> {
    let mut out = String::new();
    header(&mut out, &result.config, &[])?;
    writeln!(out, "{SWEEP_COLUMNS}").unwrap();
    for r in &result.rows {
        push_row(&mut out, r);
    }
    Ok(out)
}

/// Fading-severity sweep table.
pub fn alpha_csv(config: &ScenarioConfig, rows: &[AlphaRow]) -> Result<String> {
    let mut out = String::new();
    header(&mut out, config, &[])?;
    writeln!(out, "{ALPHA_COLUMNS}").unwrap();
    for a in rows {
        for r in &a.rows {
            write!(
                out,
                "{},{},{},{},{},{},",
                a.alpha,
                a.mg_mean,
                a.mg_variance,
                a.power_theory,
                opt(a.power_sim.map(|e| e.mean)),
                opt(a.power_sim.map(|e| e.stderr)),
            )
            .unwrap();
            push_row(&mut out, r);
        }
    }
    Ok(out)
}

/// Correlation matrix, one row per entry (zero-based storage indices).
pub fn correlation_csv(config: &ScenarioConfig, link: &str, r: &CorrelationMatrix) -> Result<String> {
    let mut out = String::new();
    header(
        &mut out,
        config,
        &[format!(
            "link={link} field={} coupling_adjusted={} quad_points={} dim={}",
            r.field,
            r.coupling_adjusted,
            r.quad_points,
            r.dim()
        )],
    )?;
    writeln!(out, "{CORRELATION_COLUMNS}").unwrap();
    for q in 0..r.dim() {
        for p in 0..r.dim() {
            let z = r.entries[(q, p)];
            writeln!(out, "{q},{p},{},{}", z.re, z.im).unwrap();
        }
    }
    Ok(out)
}

/// Cascaded channel vectors of the kept trials.
pub fn channels_csv(config: &ScenarioConfig, channels: &[ChannelRealization]) -> Result<String> {
    let mut out = String::new();
    header(&mut out, config, &[])?;
    writeln!(out, "{CHANNEL_COLUMNS}").unwrap();
    for (t, ch) in channels.iter().enumerate() {
        let m = ch.cascaded.nrows();
        for (i, z) in ch.c.iter().enumerate() {
            writeln!(out, "{t},{},{},{},{}", i / m, i % m, z.re, z.im).unwrap();
        }
    }
    Ok(out)
}

/// Splits a report into its embedded config and the data lines after the
/// column header.
pub fn split_report(text: &str) -> Result<(ScenarioConfig, Vec<&str>)> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default();
    if first != format!("# schema_version={SCHEMA_VERSION}") {
        return Err(Error::Config(format!("unsupported report header '{first}'")));
    }
    let mut toml = String::new();
    let mut inside = false;
    let mut data = Vec::new();
    let mut seen_columns = false;
    for line in lines {
        if line == CONFIG_BEGIN {
            inside = true;
        } else if line == CONFIG_END {
            inside = false;
        } else if inside {
            toml.push_str(line.strip_prefix("# ").unwrap_or(line.trim_start_matches('#')));
            toml.push('\n');
        } else if line.starts_with('#') {
            continue;
        } else if !seen_columns {
            seen_columns = true;
        } else {
            data.push(line);
        }
    }
    Ok((ScenarioConfig::from_toml(&toml)?, data))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|e| Error::Config(format!("bad number '{s}': {e}")))
}

/// Parses a sweep report written by [`sweep_csv`].
pub fn parse_sweep_csv(text: &str) -> Result<(ScenarioConfig, Vec<ReportRow>)> {
    let (config, data) = split_report(text)?;
    let rows = data
        .iter()
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Config(format!("expected 7 fields in '{line}'")));
            }
            Ok(ReportRow {
                snr_db: parse_opt(f[0])?.ok_or_else(|| Error::Config("missing snr_db".into()))?,
                estimator: f[1].to_string(),
                prior: f[2].to_string(),
                nmse_theory: parse_opt(f[3])?,
                nmse_sim: parse_opt(f[4])?,
                stderr_sim: parse_opt(f[5])?,
                trials: f[6]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad trial count '{}': {e}", f[6])))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((config, rows))
}
