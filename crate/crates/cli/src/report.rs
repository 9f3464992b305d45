//! Result rows and their CSV form.

use std::io;
use std::path::Path;

use anyhow::{Context, Result};
use lem_core::steppers::Method;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const HEADER: [&str; 12] =
    ["case", "method", "D", "B", "C", "mu", "dt", "wall_seconds", "err_l2_rel", "err_linf_rel", "dof_updates_per_step", "warnings"];

/// One run of a sweep. Failed runs keep their configuration and carry NaN
/// errors with the failure in `warnings`; untimed runs carry a NaN time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    #[serde(serialize_with = "write_method", deserialize_with = "read_method")]
    pub method: Method,
    #[serde(rename = "D")]
    pub subdomains: usize,
    #[serde(rename = "B")]
    pub buffer: usize,
    #[serde(rename = "C", serialize_with = "write_float")]
    pub courant: f64,
    #[serde(serialize_with = "write_float")]
    pub mu: f64,
    #[serde(serialize_with = "write_float")]
    pub dt: f64,
    #[serde(serialize_with = "write_float")]
    pub wall_seconds: f64,
    #[serde(serialize_with = "write_float")]
    pub err_l2_rel: f64,
    #[serde(serialize_with = "write_float")]
    pub err_linf_rel: f64,
    pub dof_updates_per_step: usize,
    pub warnings: String,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.err_l2_rel.is_nan()
    }
}

// `{:e}` prints the shortest digits that parse back to the same double.
fn write_float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:e}"))
}

fn write_method<S: Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.name())
}

fn read_method<'de, D: Deserializer<'de>>(d: D) -> Result<Method, D::Error> {
    let name = String::deserialize(d)?;
    name.parse().map_err(serde::de::Error::custom)
}

pub fn write_csv<W: io::Write>(rows: &[ReportRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    anyhow::ensure!(header == HEADER, "unexpected CSV header {header:?}");
    r.deserialize().map(|row| row.context("malformed report row")).collect()
}

pub fn emit_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(rows, io::BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))
}

pub fn parse_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(file).with_context(|| format!("reading {}", path.display()))
}
