//! The performance-record CSV.
//!
//! Columns are `record_id, subject_id, token_label, net_profit, seed`,
//! followed by one column per extra feature (sorted by name). Floats are
//! written in shortest round-trip form, so import(export(r)) == r.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tokenlab_core::market::{Price, Qty, Trade};
use tokenlab_core::{PerformanceRecord, TokenId};

pub const BASE_COLUMNS: [&str; 5] = ["record_id", "subject_id", "token_label", "net_profit", "seed"];

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("bad header: {0}")]
    Header(String),
    #[error("record {0} has a different set of extra features from the first record")]
    InconsistentExtras(u64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn extra_keys(records: &[PerformanceRecord]) -> Result<Vec<String>, DatasetError> {
    let Some(first) = records.first() else { return Ok(Vec::new()) };
    let keys: Vec<String> = first.extra_features.keys().cloned().collect();
    if let Some(bad) = records.iter().find(|r| !r.extra_features.keys().eq(keys.iter())) {
        return Err(DatasetError::InconsistentExtras(bad.record_id));
    }
    Ok(keys)
}

fn row(r: &PerformanceRecord) -> Vec<String> {
    let mut out = vec![
        r.record_id.to_string(),
        r.subject_id.to_string(),
        r.token_label.to_string(),
        r.net_profit.to_string(),
        r.seed.to_string(),
    ];
    out.extend(r.extra_features.values().map(f64::to_string));
    out
}

/// Writes a header and one row per record.
pub fn write_records<W: Write>(out: W, records: &[PerformanceRecord]) -> Result<(), DatasetError> {
    let keys = extra_keys(records)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    header.extend(keys.iter().map(String::as_str));
    w.write_record(&header)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn parse<T: std::str::FromStr>(field: Option<&str>, name: &str, line: u64) -> Result<T, DatasetError>
where
    T::Err: std::fmt::Display,
{
    let raw = field.ok_or_else(|| DatasetError::Row { line, message: format!("missing {name}") })?;
    raw.trim().parse().map_err(|e| DatasetError::Row { line, message: format!("{name} {raw:?}: {e}") })
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<PerformanceRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < BASE_COLUMNS.len() || header.iter().zip(BASE_COLUMNS).any(|(a, b)| a.trim() != b) {
        return Err(DatasetError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let extras: Vec<String> = header.iter().skip(BASE_COLUMNS.len()).map(str::to_owned).collect();
    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(DatasetError::Row {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let token: TokenId = parse(rec.get(2), "token_label", line)?;
        let mut extra_features = BTreeMap::new();
        for (i, name) in extras.iter().enumerate() {
            extra_features.insert(name.clone(), parse(rec.get(BASE_COLUMNS.len() + i), name, line)?);
        }
        out.push(PerformanceRecord {
            record_id: parse(rec.get(0), "record_id", line)?,
            subject_id: parse(rec.get(1), "subject_id", line)?,
            token_label: token,
            net_profit: parse(rec.get(3), "net_profit", line)?,
            seed: parse(rec.get(4), "seed", line)?,
            extra_features,
        });
    }
    Ok(out)
}

pub fn export_dataset(records: &[PerformanceRecord], path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    write_records(std::io::BufWriter::new(file), records)
}

pub fn import_dataset(path: &Path) -> Result<Vec<PerformanceRecord>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    read_records(std::io::BufReader::new(file))
}

/// Appends one record, writing the header first if the file is new or
/// empty. The record must not carry extra features.
pub fn append_record(path: &Path, record: &PerformanceRecord) -> Result<(), DatasetError> {
    if !record.extra_features.is_empty() {
        return Err(DatasetError::InconsistentExtras(record.record_id));
    }
    let io = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let fresh = file.metadata().map_err(io)?.len() == 0;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    if fresh {
        w.write_record(BASE_COLUMNS)?;
    }
    w.write_record(row(record))?;
    let bytes = w.into_inner().map_err(|e| io(e.into_error()))?;
    file.write_all(&bytes).map_err(io)?;
    file.sync_data().map_err(io)
}

pub const TRADE_LOG_COLUMNS: [&str; 5] = ["seq", "price_ticks", "quantity", "buyer_id", "seller_id"];

/// One line of a per-session trade log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeLogRow {
    pub seq: u64,
    pub price_ticks: Price,
    pub quantity: Qty,
    pub buyer_id: u32,
    pub seller_id: u32,
}

impl From<&Trade> for TradeLogRow {
    fn from(t: &Trade) -> Self {
        TradeLogRow {
            seq: t.seq,
            price_ticks: t.price,
            quantity: t.quantity,
            buyer_id: t.buyer.0,
            seller_id: t.seller.0,
        }
    }
}

pub fn write_trade_log<W: Write>(out: W, trades: &[Trade]) -> Result<(), DatasetError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRADE_LOG_COLUMNS)?;
    for t in trades {
        w.serialize(TradeLogRow::from(t))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trade_log<R: Read>(input: R) -> Result<Vec<TradeLogRow>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if !header.iter().eq(TRADE_LOG_COLUMNS) {
        return Err(DatasetError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    rdr.deserialize().map(|r| r.map_err(DatasetError::from)).collect()
}

pub fn export_trade_log(trades: &[Trade], path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    write_trade_log(std::io::BufWriter::new(file), trades)
}
