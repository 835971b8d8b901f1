//! Record models and CSV parsing for the three trace inputs: flow records
//! (data sessions), call records and the cell/POI table.
//!
//! The interchange format is deliberately plain: comma-separated, `\n`
//! line endings, a fixed header per file kind, no quoting. Fields that
//! would need quoting (embedded commas) are rejected rather than parsed.
//! Parsing is streaming; [`RecordReader`] yields one row at a time so
//! memory use does not grow with file size.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One XDR-style data-session row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRecord {
    pub user_id: String,
    pub cell_id: String,
    pub t_start: i64,
    pub t_end: i64,
    pub bytes_up: u64,
    pub bytes_down: u64,
    pub pkts_up: u64,
    pub pkts_down: u64,
    pub app_id: String,
    pub host: Option<String>,
}

impl FlowRecord {
    pub fn bytes_total(&self) -> u64 {
        self.bytes_up + self.bytes_down
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if self.cell_id.is_empty() {
            return Err("empty cell_id".into());
        }
        if self.app_id.is_empty() {
            return Err("empty app_id".into());
        }
        if self.t_end < self.t_start {
            return Err("t_end < t_start".into());
        }
        Ok(())
    }
}

/// One CDR row: who called whom, when, for how long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub caller_id: String,
    pub callee_id: String,
    pub t_start: i64,
    pub duration_s: u64,
}

impl CallRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if self.caller_id.is_empty() {
            return Err("empty caller_id".into());
        }
        if self.callee_id.is_empty() {
            return Err("empty callee_id".into());
        }
        if self.caller_id == self.callee_id {
            return Err("self-call".into());
        }
        Ok(())
    }
}

/// Cell metadata: location plus optional point-of-interest label.
#[derive(Debug, Clone, PartialEq)]
pub struct CellInfo {
    pub cell_id: String,
    pub lat: f64,
    pub lon: f64,
    pub poi_label: Option<String>,
}

impl CellInfo {
    fn check(&self) -> std::result::Result<(), String> {
        if self.cell_id.is_empty() {
            return Err("empty cell_id".into());
        }
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return Err("lat out of range".into());
        }
        if !self.lon.is_finite() || !(-180.0..=180.0).contains(&self.lon) {
            return Err("lon out of range".into());
        }
        Ok(())
    }
}

/// Outcome summary of one parse run. `rows_total` counts data rows only
/// (the header line is not a row); rejects carry the physical line number
/// in the file, so the first data row is line 2.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub rows_total: usize,
    pub rows_ok: usize,
    pub rows_rejected: usize,
    pub rejects: Vec<(usize, String)>,
}

impl ParseReport {
    fn ok(&mut self) {
        self.rows_total += 1;
        self.rows_ok += 1;
    }

    fn reject(&mut self, line: usize, reason: String) {
        self.rows_total += 1;
        self.rows_rejected += 1;
        self.rejects.push((line, reason));
    }
}

/// A record kind that round-trips through one CSV row.
pub trait CsvRecord: Sized {
    /// The exact header line this file kind must carry.
    const HEADER: &'static str;

    fn parse_fields(fields: &[&str]) -> std::result::Result<Self, String>;

    /// Serialize into one header-compatible row (no trailing newline).
    fn to_row(&self) -> String;
}

fn field_count<const N: usize>(fields: &[&str]) -> std::result::Result<(), String> {
    if fields.len() != N {
        return Err(format!("expected {} fields, got {}", N, fields.len()));
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad {name}: {s:?}"))
}

impl CsvRecord for FlowRecord {
    const HEADER: &'static str =
        "user_id,cell_id,t_start,t_end,bytes_up,bytes_down,pkts_up,pkts_down,app_id,host";

    fn parse_fields(fields: &[&str]) -> std::result::Result<Self, String> {
        field_count::<10>(fields)?;
        let rec = FlowRecord {
            user_id: fields[0].to_string(),
            cell_id: fields[1].to_string(),
            t_start: parse_num(fields[2], "t_start")?,
            t_end: parse_num(fields[3], "t_end")?,
            bytes_up: parse_num(fields[4], "bytes_up")?,
            bytes_down: parse_num(fields[5], "bytes_down")?,
            pkts_up: parse_num(fields[6], "pkts_up")?,
            pkts_down: parse_num(fields[7], "pkts_down")?,
            app_id: fields[8].to_string(),
            host: if fields[9].is_empty() {
                None
            } else {
                Some(fields[9].to_string())
            },
        };
        rec.check()?;
        Ok(rec)
    }

    fn to_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.user_id,
            self.cell_id,
            self.t_start,
            self.t_end,
            self.bytes_up,
            self.bytes_down,
            self.pkts_up,
            self.pkts_down,
            self.app_id,
            self.host.as_deref().unwrap_or("")
        )
    }
}

impl CsvRecord for CallRecord {
    const HEADER: &'static str = "caller_id,callee_id,t_start,duration_s";

    fn parse_fields(fields: &[&str]) -> std::result::Result<Self, String> {
        field_count::<4>(fields)?;
        let rec = CallRecord {
            caller_id: fields[0].to_string(),
            callee_id: fields[1].to_string(),
            t_start: parse_num(fields[2], "t_start")?,
            duration_s: parse_num(fields[3], "duration_s")?,
        };
        rec.check()?;
        Ok(rec)
    }

    fn to_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.caller_id, self.callee_id, self.t_start, self.duration_s
        )
    }
}

impl CsvRecord for CellInfo {
    const HEADER: &'static str = "cell_id,lat,lon,poi_label";

    fn parse_fields(fields: &[&str]) -> std::result::Result<Self, String> {
        field_count::<4>(fields)?;
        let rec = CellInfo {
            cell_id: fields[0].to_string(),
            lat: parse_num(fields[1], "lat")?,
            lon: parse_num(fields[2], "lon")?,
            poi_label: if fields[3].is_empty() {
                None
            } else {
                Some(fields[3].to_string())
            },
        };
        rec.check()?;
        Ok(rec)
    }

    fn to_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.cell_id,
            self.lat,
            self.lon,
            self.poi_label.as_deref().unwrap_or("")
        )
    }
}

/// Per-row outcome delivered by the streaming reader.
#[derive(Debug)]
pub enum Row<T> {
    Ok(T),
    Rejected { line: usize, reason: String },
}

/// Streaming CSV reader: checks the header eagerly, then yields rows one
/// at a time. Memory use is bounded by the longest line, not the file.
pub struct RecordReader<R: BufRead, T: CsvRecord> {
    inner: R,
    buf: String,
    line: usize,
    _marker: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: CsvRecord> RecordReader<R, T> {
    /// Reads and validates the header line.
    pub fn new(mut inner: R) -> Result<Self> {
        let mut buf = String::new();
        let n = inner.read_line(&mut buf)?;
        if n == 0 {
            return Err(Error::Schema("missing header line".into()));
        }
        let header = buf.trim_end_matches('\n').trim_end_matches('\r');
        if header != T::HEADER {
            return Err(Error::Schema(format!(
                "bad header: expected {:?}, got {:?}",
                T::HEADER,
                header
            )));
        }
        Ok(RecordReader {
            inner,
            buf: String::new(),
            line: 1,
            _marker: std::marker::PhantomData,
        })
    }

    /// Physical line number of the most recently yielded row.
    pub fn line(&self) -> usize {
        self.line
    }
}

impl<R: BufRead, T: CsvRecord> Iterator for RecordReader<R, T> {
    type Item = Result<Row<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.inner.read_line(&mut self.buf) {
            Err(e) => return Some(Err(e.into())),
            Ok(0) => return None,
            Ok(_) => {}
        }
        self.line += 1;
        let text = self.buf.trim_end_matches('\n').trim_end_matches('\r');
        if text.is_empty() && self.buf.ends_with('\n') && self.buf.len() <= 2 {
            // tolerate a blank final line
            return self.next();
        }
        let fields: Vec<&str> = text.split(',').collect();
        Some(Ok(match T::parse_fields(&fields) {
            Ok(rec) => Row::Ok(rec),
            Err(reason) => Row::Rejected {
                line: self.line,
                reason,
            },
        }))
    }
}

fn collect_rows<R: BufRead, T: CsvRecord>(
    source: R,
    strict: bool,
    mut dedup: impl FnMut(&T) -> Option<String>,
) -> Result<(Vec<T>, ParseReport)> {
    let mut reader = RecordReader::<R, T>::new(source)?;
    let mut out = Vec::new();
    let mut report = ParseReport::default();
    while let Some(item) = reader.next() {
        match item? {
            Row::Ok(rec) => {
                if let Some(reason) = dedup(&rec) {
                    let line = reader.line();
                    if strict {
                        return Err(Error::Row { line, reason });
                    }
                    report.reject(line, reason);
                } else {
                    report.ok();
                    out.push(rec);
                }
            }
            Row::Rejected { line, reason } => {
                if strict {
                    return Err(Error::Row { line, reason });
                }
                report.reject(line, reason);
            }
        }
    }
    Ok((out, report))
}

/// Parse a flow CSV. In strict mode the first bad row aborts; otherwise
/// bad rows are recorded in the report and parsing continues.
pub fn parse_flow_csv<R: BufRead>(source: R, strict: bool) -> Result<(Vec<FlowRecord>, ParseReport)> {
    collect_rows(source, strict, |_| None)
}

pub fn parse_call_csv<R: BufRead>(source: R, strict: bool) -> Result<(Vec<CallRecord>, ParseReport)> {
    collect_rows(source, strict, |_| None)
}

/// Parse a cell table. Later rows re-using an already seen `cell_id` are
/// rejected.
pub fn parse_cells_csv<R: BufRead>(source: R) -> Result<(Vec<CellInfo>, ParseReport)> {
    let mut seen: HashSet<String> = HashSet::new();
    collect_rows(source, false, move |cell: &CellInfo| {
        if !seen.insert(cell.cell_id.clone()) {
            Some("duplicate cell_id".into())
        } else {
            None
        }
    })
}

fn check_writable(field: &str) -> Result<()> {
    if field.contains(',') || field.contains('\n') || field.contains('\r') {
        return Err(Error::InvalidArgument(format!(
            "field {field:?} contains a separator and cannot be written unquoted"
        )));
    }
    Ok(())
}

/// Serialize records back to the canonical CSV form.
pub fn write_csv<T: CsvRecord, W: Write>(records: &[T], out: &mut W) -> Result<()> {
    writeln!(out, "{}", T::HEADER)?;
    for rec in records {
        let row = rec.to_row();
        for field in row.split(',') {
            check_writable(field)?;
        }
        // a field containing a comma would shift the column count
        if row.split(',').count() != T::HEADER.split(',').count() {
            return Err(Error::InvalidArgument(
                "record fields contain separators".into(),
            ));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}
