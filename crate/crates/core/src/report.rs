//! CSV results, the configuration sidecar and the slot trace.
//!
//! Results file columns: `scheme,snr_db,bits,errors,ber`, one row per
//! (scheme label, SNR) point, BER printed with 12 significant digits. The
//! sidecar next to it (`<results>.cfg`) is a valid configuration file for
//! the run followed by `#` comment lines describing the sweep.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sim::{BerPoint, RunReport, SchemeLabel, TraceRow};

pub const RESULTS_HEADER: [&str; 5] = ["scheme", "snr_db", "bits", "errors", "ber"];

pub const TRACE_HEADER: [&str; 11] = [
    "snr_db",
    "protocol",
    "chunk",
    "slot",
    "action",
    "pair",
    "hop",
    "sinr",
    "occupancy_before",
    "occupancy_after",
    "reselections",
];

/// BER with 12 significant digits.
pub fn format_ber(ber: f64) -> String {
    format!("{ber:.11e}")
}

/// Path of the configuration sidecar for a results file.
pub fn sidecar_path(results: &Path) -> PathBuf {
    let mut name = results.as_os_str().to_owned();
    name.push(".cfg");
    PathBuf::from(name)
}

/// Writes the result rows to any writer.
pub fn write_points<W: Write>(points: &[BerPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for p in points {
        w.write_record([
            p.scheme.to_string(),
            p.snr_db.to_string(),
            p.bits_total().to_string(),
            p.bit_errors().to_string(),
            format_ber(p.ber()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sidecar_text(report: &RunReport) -> String {
    let mut s = String::from("# configuration echo; the sweep itself is described in the comments below\n");
    s.push_str(&report.config.to_kv());
    let snrs: Vec<String> = report.plan.snr_db.iter().map(|x| x.to_string()).collect();
    let protocols: Vec<&str> = report.plan.protocols.iter().map(|p| p.as_str()).collect();
    s.push_str(&format!("# sweep_snr_db = {}\n", snrs.join(",")));
    s.push_str(&format!("# bits_per_point = {}\n", report.plan.bits_per_point));
    s.push_str(&format!("# protocols = {}\n", protocols.join(",")));
    s.push_str("# snr convention = 10 log10(1 / noise variance), unit-energy symbols\n");
    s.push_str(&format!("# mmse_fallbacks = {}\n", report.mmse_fallbacks));
    if !report.ml_choices.is_empty() {
        let c: Vec<String> = report.ml_choices.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("# ml_choice_counts = {}\n", c.join(",")));
    }
    for sm in &report.slot_summaries {
        s.push_str(&format!(
            "# slots snr_db={} protocol={} receive={} transmit={} idle={} idle_fraction={:.6} stalled_chunks={}\n",
            sm.snr_db,
            sm.protocol.as_str(),
            sm.stats.receive,
            sm.stats.transmit,
            sm.stats.idle,
            sm.stats.idle_fraction(),
            sm.stalled_chunks
        ));
    }
    s.push_str(&format!("# wall_clock_s = {:.3}\n", report.wall_clock.as_secs_f64()));
    s
}

/// Writes the results CSV and its configuration sidecar.
pub fn emit_report(report: &RunReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_points(&report.points, BufWriter::new(file)).map_err(|e| Error::csv(path, e))?;
    let side = sidecar_path(path);
    std::fs::write(&side, sidecar_text(report)).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

/// One parsed results row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: SchemeLabel,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
}

impl From<&BerPoint> for ReportRow {
    fn from(p: &BerPoint) -> Self {
        ReportRow {
            scheme: p.scheme,
            snr_db: p.snr_db,
            bits: p.bits_total(),
            errors: p.bit_errors(),
            ber: p.ber(),
        }
    }
}

/// Reads a results CSV written by [`emit_report`].
pub fn parse_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(Error::Report {
            path: path.into(),
            row: 0,
            reason: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |reason: String| Error::Report {
            path: path.into(),
            row: i + 1,
            reason,
        };
        let field = |j: usize| rec.get(j).unwrap_or("");
        rows.push(ReportRow {
            scheme: field(0).parse().map_err(|e: Error| bad(e.to_string()))?,
            snr_db: field(1).parse().map_err(|_| bad(format!("snr_db `{}`", field(1))))?,
            bits: field(2).parse().map_err(|_| bad(format!("bits `{}`", field(2))))?,
            errors: field(3).parse().map_err(|_| bad(format!("errors `{}`", field(3))))?,
            ber: field(4).parse().map_err(|_| bad(format!("ber `{}`", field(4))))?,
        });
    }
    Ok(rows)
}

fn join(occ: &[usize]) -> String {
    occ.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(";")
}

/// Writes one row per slot. Occupancies list every relay, separated by `;`.
pub fn write_trace(rows: &[TraceRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let res: csv::Result<()> = (|| {
        w.write_record(TRACE_HEADER)?;
        for row in rows {
            let r = &row.record;
            let pair = match r.action {
                crate::buffer::SlotAction::Receive { pair } | crate::buffer::SlotAction::Transmit { pair } => {
                    pair.to_string()
                }
                crate::buffer::SlotAction::Idle => String::new(),
            };
            w.write_record([
                row.snr_db.to_string(),
                row.protocol.as_str().to_string(),
                row.chunk.to_string(),
                r.slot.to_string(),
                r.action.as_str().to_string(),
                pair,
                r.hop.map(|h| h.as_str().to_string()).unwrap_or_default(),
                r.sinr.map(|s| format!("{s:.6e}")).unwrap_or_default(),
                join(&r.occupancy_before),
                join(&r.occupancy_after),
                r.reselections.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| Error::csv(path, e))
}
