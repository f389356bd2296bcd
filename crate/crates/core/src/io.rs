//! CSV and JSON artifacts.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Schedule, SystemParams, TradeoffPoint};
use crate::offline::water_levels;
use crate::online::{PolicyTable, ValueTable};
use crate::sweep::SweepRow;

/// One trade-off point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRecord {
    pub method: String,
    pub w: f64,
    pub avg_aoi: f64,
    pub avg_distortion: f64,
    pub weighted_cost: f64,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl TradeoffRecord {
    pub fn new(method: &str, point: &TradeoffPoint, seed: u64, k: usize) -> Self {
        Self {
            method: method.to_string(),
            w: point.w_used,
            avg_aoi: point.avg_aoi,
            avg_distortion: point.avg_distortion,
            weighted_cost: point.weighted_cost,
            seed,
            k,
        }
    }
}

/// Successful sweep rows as records, plus `(method, w, error)` for the failed ones.
pub fn sweep_records(rows: &[SweepRow]) -> (Vec<TradeoffRecord>, Vec<(String, f64, String)>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for row in rows {
        match &row.result {
            Ok(p) => ok.push(TradeoffRecord::new(row.method.name(), p, row.seed, row.k)),
            Err(e) => failed.push((row.method.name().to_string(), row.w, e.to_string())),
        }
    }
    (ok, failed)
}

/// One interval of an offline schedule. The last interval has no busy block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub l: usize,
    #[serde(rename = "X_l")]
    pub x_l: usize,
    #[serde(rename = "P_l")]
    pub p_l: Option<f64>,
    pub nu_l: Option<f64>,
}

pub fn schedule_records(schedule: &Schedule, params: &SystemParams) -> Vec<ScheduleRecord> {
    let nu = water_levels(schedule, params).nu;
    schedule
        .inter_tx()
        .iter()
        .enumerate()
        .map(|(i, &x)| ScheduleRecord {
            l: i + 1,
            x_l: x,
            p_l: schedule.powers().get(i).copied(),
            nu_l: nu.get(i).copied(),
        })
        .collect()
}

/// Rebuilds a schedule from its records.
pub fn schedule_from_records(records: &[ScheduleRecord]) -> Result<Schedule> {
    let x = records.iter().map(|r| r.x_l).collect();
    let p = records.iter().filter_map(|r| r.p_l).collect();
    Schedule::new(x, p)
}

/// One kept state of a solved MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub delta: usize,
    pub d_index: usize,
    pub b: usize,
    pub value: f64,
    pub power: usize,
}

pub fn table_records(values: &ValueTable, policy: &PolicyTable) -> Vec<TableRecord> {
    values
        .space()
        .states()
        .map(|s| TableRecord {
            delta: s.delta,
            d_index: s.d_index,
            b: s.b,
            value: values.get(s).expect("kept state"),
            power: policy.get(s).expect("kept state"),
        })
        .collect()
}

pub fn write_csv_to<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_from<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv_to(BufWriter::new(File::create(path)?), rows)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_csv_from(File::open(path)?)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
