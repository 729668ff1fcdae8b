//! On-disk formats.
//!
//! Every text artifact begins with a schema line `# optospring-csv v1 <kind>`
//! so readers can refuse files from the wrong producer or version without
//! guessing from the header row. Floats are written with Rust's shortest
//! round-trip exponential formatting, so rereading a file reproduces the
//! exact bit pattern and rewriting unchanged data is byte-identical.
//!
//! All writers go through [`atomic_write`]: content lands in a sibling
//! temporary file and is renamed into place, so readers never observe a
//! half-written artifact.
//!
//! The two-channel time-series format is binary (the records run to millions
//! of samples): a 16-byte magic, the sample rate, the length, then
//! interleaved little-endian f64 pairs.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::budget::BudgetReport;
use crate::error::Error;
use crate::fringe::FringeSweep;
use crate::subtract::SubtractionResult;
use crate::welch::TimeSeries;
use crate::Result;

const CSV_SCHEMA: &str = "# optospring-csv v1";
const TIMESERIES_MAGIC: &[u8; 16] = b"OSPRNG2CHv1\0\0\0\0\0";

/// Write `bytes` to `path` via a temporary sibling plus rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::MalformedInput {
            reason: format!("not a writable file path: {}", path.display()),
        })?;
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize pretty JSON (newline-terminated) to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::MalformedInput {
        reason: format!("json serialization: {e}"),
    })?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Budget CSV: one row per grid point, amplitude densities in m/rtHz and the
/// total-to-SQL power ratio in dB.
pub fn budget_csv_string(report: &BudgetReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_SCHEMA);
    out.push_str(" budget\n");
    out.push_str(
        "frequency_hz,quantum_asd_m_per_rthz,thermal_asd_m_per_rthz,\
         total_asd_m_per_rthz,sql_asd_m_per_rthz,ratio_db_power\n",
    );
    let grid = report.total.grid.values();
    for i in 0..grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(grid[i]),
            fmt(report.quantum.values[i]),
            fmt(report.thermal.values[i]),
            fmt(report.total.values[i]),
            fmt(report.sql.values[i]),
            fmt(report.ratio_to_sql.values[i]),
        ));
    }
    out
}

pub fn write_budget_csv(path: &Path, report: &BudgetReport) -> Result<()> {
    atomic_write(path, budget_csv_string(report).as_bytes())
}

/// Subtraction CSV. `calibrated_m` optionally appends the residual converted
/// to equivalent displacement (flagged bins stay zero there too).
pub fn subtraction_csv_string(
    result: &SubtractionResult,
    calibrated_m: Option<&[f64]>,
) -> Result<String> {
    if let Some(cal) = calibrated_m {
        if cal.len() != result.grid.len() {
            return Err(Error::GridMismatch {
                reason: format!(
                    "calibrated column has {} bins, result has {}",
                    cal.len(),
                    result.grid.len()
                ),
            });
        }
    }
    let mut out = String::new();
    out.push_str(CSV_SCHEMA);
    out.push_str(" subtraction\n");
    out.push_str("frequency_hz,coherence,common_mode_asd,residual_asd,gain,flag");
    if calibrated_m.is_some() {
        out.push_str(",residual_asd_m_per_rthz");
    }
    out.push('\n');
    for (i, &f) in result.grid.values().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            fmt(f),
            fmt(result.coherence[i]),
            fmt(result.common_mode_asd[i]),
            fmt(result.residual_asd[i]),
            fmt(result.gain[i]),
            result.flags[i].as_str(),
        ));
        if let Some(cal) = calibrated_m {
            out.push(',');
            out.push_str(&fmt(cal[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_subtraction_csv(
    path: &Path,
    result: &SubtractionResult,
    calibrated_m: Option<&[f64]>,
) -> Result<()> {
    atomic_write(path, subtraction_csv_string(result, calibrated_m)?.as_bytes())
}

/// Fringe sweep CSV: swept laser angular frequency versus detector volts.
pub fn write_fringe_sweep_csv(path: &Path, sweep: &FringeSweep) -> Result<()> {
    let mut out = String::new();
    out.push_str(CSV_SCHEMA);
    out.push_str(" fringe-sweep\n");
    out.push_str("omega_rad_s,volts_v\n");
    for (w, v) in sweep.omega.iter().zip(&sweep.volts) {
        out.push_str(&format!("{},{}\n", fmt(*w), fmt(*v)));
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_fringe_sweep_csv(path: &Path) -> Result<FringeSweep> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, schema) = lines.next().ok_or_else(|| Error::MalformedInput {
        reason: "empty fringe sweep file".into(),
    })?;
    let expected = format!("{CSV_SCHEMA} fringe-sweep");
    if schema.trim() != expected {
        return Err(Error::MalformedInput {
            reason: format!("schema line is `{schema}`, expected `{expected}`"),
        });
    }
    match lines.next() {
        Some((_, h)) if h.trim() == "omega_rad_s,volts_v" => {}
        other => {
            return Err(Error::MalformedInput {
                reason: format!("bad fringe sweep header: {:?}", other.map(|(_, h)| h)),
            })
        }
    }
    let mut omega = Vec::new();
    let mut volts = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |field: Option<&str>| -> Result<f64> {
            field
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::MalformedInput {
                    reason: format!("line {}: expected two floats, got `{line}`", lineno + 1),
                })
        };
        omega.push(parse(fields.next())?);
        volts.push(parse(fields.next())?);
        if fields.next().is_some() {
            return Err(Error::MalformedInput {
                reason: format!("line {}: too many fields", lineno + 1),
            });
        }
    }
    FringeSweep::new(omega, volts)
}

/// Interleaved two-channel binary record.
pub fn write_timeseries_binary(path: &Path, ch1: &TimeSeries, ch2: &TimeSeries) -> Result<()> {
    if ch1.fs != ch2.fs || ch1.data.len() != ch2.data.len() {
        return Err(Error::ChannelMismatch {
            reason: "channels must share sample rate and length".into(),
        });
    }
    let n = ch1.data.len();
    let mut bytes = Vec::with_capacity(32 + 16 * n);
    bytes.extend_from_slice(TIMESERIES_MAGIC);
    bytes.extend_from_slice(&ch1.fs.to_le_bytes());
    bytes.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        bytes.extend_from_slice(&ch1.data[i].to_le_bytes());
        bytes.extend_from_slice(&ch2.data[i].to_le_bytes());
    }
    atomic_write(path, &bytes)
}

pub fn read_timeseries_binary(path: &Path) -> Result<(TimeSeries, TimeSeries)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 32 || &bytes[..16] != TIMESERIES_MAGIC {
        return Err(Error::MalformedInput {
            reason: "not a two-channel time-series file (bad magic or truncated header)".into(),
        });
    }
    let fs_hz = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[24..32].try_into().unwrap()) as usize;
    let expected = 32 + 16 * n;
    if bytes.len() != expected {
        return Err(Error::MalformedInput {
            reason: format!(
                "time-series payload is {} bytes, header promises {expected}",
                bytes.len()
            ),
        });
    }
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        let off = 32 + 16 * i;
        d1.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        d2.push(f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap()));
    }
    Ok((TimeSeries::new(fs_hz, d1)?, TimeSeries::new(fs_hz, d2)?))
}
