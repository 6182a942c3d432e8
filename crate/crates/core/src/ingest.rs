//! CSV loaders and writers for the crop, fertilizer and market corpora.
//!
//! Row numbers in errors count data rows from 1; the header is row 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{LabeledDataset, Schema, AGRONOMIC_FEATURES, MARKET_PRICE};
use crate::error::{KisanError, Result};
use crate::forecast::{month_index, PricePoint, PriceSeries};

const LABEL: &str = "label";

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| KisanError::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| KisanError::io(path, e))
}

fn csv_error(e: csv::Error) -> KisanError {
    KisanError::Data(format!("csv: {e}"))
}

/// Maps each expected column to its position, rejecting unknown, missing
/// and duplicate header names.
fn resolve_header(header: &csv::StringRecord, expected: &[&str]) -> Result<Vec<usize>> {
    let mut seen = BTreeSet::new();
    for name in header.iter() {
        let name = name.trim();
        if !expected.contains(&name) {
            return Err(KisanError::Data(format!("header: unknown column '{name}'")));
        }
        if !seen.insert(name) {
            return Err(KisanError::Data(format!("header: duplicate column '{name}'")));
        }
    }
    expected
        .iter()
        .map(|col| {
            header
                .iter()
                .position(|h| h.trim() == *col)
                .ok_or_else(|| KisanError::Data(format!("header: missing column '{col}'")))
        })
        .collect()
}

/// Reads every record, checking the field count against the header.
fn records<R: Read>(reader: R) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != header.len() {
            return Err(KisanError::Data(format!(
                "row {}: expected {} fields, got {}",
                i + 1,
                header.len(),
                rec.len()
            )));
        }
        rows.push(rec);
    }
    Ok((header, rows))
}

fn text<'a>(rec: &'a csv::StringRecord, row: usize, pos: usize, name: &str) -> Result<&'a str> {
    let v = rec[pos].trim();
    if v.is_empty() {
        return Err(KisanError::Data(format!("row {row}: empty field '{name}'")));
    }
    Ok(v)
}

fn number(rec: &csv::StringRecord, row: usize, pos: usize, name: &str) -> Result<f64> {
    let raw = text(rec, row, pos, name)?;
    let v: f64 = raw
        .parse()
        .map_err(|_| KisanError::Data(format!("row {row}: field '{name}' is not a number: '{raw}'")))?;
    if !v.is_finite() {
        return Err(KisanError::Data(format!("row {row}: field '{name}' is not finite")));
    }
    Ok(v)
}

/// Parses a crop corpus. Columns are the agronomic features plus `label`,
/// and `market_price` when `with_price`; any order is accepted.
pub fn parse_crop_csv<R: Read>(reader: R, with_price: bool) -> Result<LabeledDataset> {
    let schema = if with_price {
        Schema::benchmark()
    } else {
        Schema::agronomic()
    };
    let mut expected: Vec<&str> = schema.features.iter().map(String::as_str).collect();
    expected.push(LABEL);
    let (header, recs) = records(reader)?;
    let pos = resolve_header(&header, &expected)?;
    let arity = schema.arity();
    let mut rows = Vec::with_capacity(recs.len());
    let mut labels = Vec::with_capacity(recs.len());
    for (i, rec) in recs.iter().enumerate() {
        let row = i + 1;
        let values = (0..arity)
            .map(|j| number(rec, row, pos[j], expected[j]))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
        labels.push(text(rec, row, pos[arity], LABEL)?.to_string());
    }
    LabeledDataset::from_labels(schema, rows, &labels)
}

pub fn load_crop_dataset(path: impl AsRef<Path>, with_price: bool) -> Result<LabeledDataset> {
    parse_crop_csv(open(path.as_ref())?, with_price)
}

/// Loads a crop corpus with or without a `market_price` column, as the
/// header says.
pub fn load_crop_corpus(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| KisanError::io(path, e))?;
    let with_price = text
        .lines()
        .next()
        .is_some_and(|h| h.split(',').any(|c| c.trim().trim_matches('"') == MARKET_PRICE));
    parse_crop_csv(text.as_bytes(), with_price)
}

/// Writes a dataset as CSV: schema features in order, then `label`.
pub fn write_crop_dataset(path: impl AsRef<Path>, dataset: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = dataset.schema.features.iter().map(String::as_str).collect();
    header.push(LABEL);
    w.write_record(&header).map_err(csv_error)?;
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(dataset.class_catalog[label].clone());
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(|e| KisanError::io(path, e))
}

const MARKET_COLUMNS: [&str; 4] = ["crop", "month", "year", "price"];

/// Parses a market history with columns `crop, month, year, price` into one
/// chronologically sorted series per crop.
pub fn parse_market_csv<R: Read>(reader: R) -> Result<BTreeMap<String, PriceSeries>> {
    let (header, recs) = records(reader)?;
    let pos = resolve_header(&header, &MARKET_COLUMNS)?;
    let mut by_crop: BTreeMap<String, BTreeMap<i64, PricePoint>> = BTreeMap::new();
    for (i, rec) in recs.iter().enumerate() {
        let row = i + 1;
        let crop = text(rec, row, pos[0], "crop")?;
        let month_raw = number(rec, row, pos[1], "month")?;
        let year_raw = number(rec, row, pos[2], "year")?;
        let price = number(rec, row, pos[3], "price")?;
        if month_raw.fract() != 0.0 || !(1.0..=12.0).contains(&month_raw) {
            return Err(KisanError::Data(format!("row {row}: month {month_raw} outside 1-12")));
        }
        if year_raw.fract() != 0.0 || year_raw.abs() > 1e6 {
            return Err(KisanError::Data(format!(
                "row {row}: year {year_raw} is not a valid year"
            )));
        }
        if price <= 0.0 {
            return Err(KisanError::Data(format!(
                "row {row}: price must be positive, got {price}"
            )));
        }
        let (year, month) = (year_raw as i32, month_raw as u32);
        let point = PricePoint { year, month, price };
        if by_crop
            .entry(crop.to_string())
            .or_default()
            .insert(month_index(year, month), point)
            .is_some()
        {
            return Err(KisanError::Data(format!(
                "row {row}: duplicate timestamp ({crop}, {year}, {month})"
            )));
        }
    }
    by_crop
        .into_iter()
        .map(|(crop, points)| {
            let series = PriceSeries::new(crop.clone(), points.into_values().collect())?;
            Ok((crop, series))
        })
        .collect()
}

pub fn load_market_history(path: impl AsRef<Path>) -> Result<BTreeMap<String, PriceSeries>> {
    parse_market_csv(open(path.as_ref())?)
}

pub fn write_market_history<'a>(
    path: impl AsRef<Path>,
    series: impl IntoIterator<Item = &'a PriceSeries>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(MARKET_COLUMNS).map_err(csv_error)?;
    for s in series {
        for p in &s.points {
            w.write_record([
                s.crop_id.clone(),
                p.month.to_string(),
                p.year.to_string(),
                p.price.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| KisanError::io(path, e))
}

/// Fertilizer inputs before one-hot encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilizerQuery {
    pub n: f64,
    pub p: f64,
    pub k: f64,
    pub soil_type: String,
    pub moisture: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilizerRecord {
    pub n: f64,
    pub p: f64,
    pub k: f64,
    pub soil_type: String,
    pub moisture: f64,
    pub temperature: f64,
    pub label: String,
}

impl FertilizerRecord {
    pub fn query(&self) -> FertilizerQuery {
        FertilizerQuery {
            n: self.n,
            p: self.p,
            k: self.k,
            soil_type: self.soil_type.clone(),
            moisture: self.moisture,
            temperature: self.temperature,
        }
    }
}

const FERTILIZER_COLUMNS: [&str; 7] = ["N", "P", "K", "soil_type", "moisture", "temperature", "label"];
const FERTILIZER_NUMERIC: [&str; 5] = ["N", "P", "K", "moisture", "temperature"];
const SOIL_PREFIX: &str = "soil_type=";

/// One-hot layout of the fertilizer schema: the five numeric columns, then
/// one `soil_type=<category>` column per category in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FertilizerEncoder {
    pub soil_types: Vec<String>,
}

impl FertilizerEncoder {
    pub fn new(categories: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let set: BTreeSet<String> = categories.into_iter().map(Into::into).collect();
        Self {
            soil_types: set.into_iter().collect(),
        }
    }

    /// Recovers the encoder from an encoded schema.
    pub fn from_schema(schema: &Schema) -> Result<Self> {
        if schema.arity() < FERTILIZER_NUMERIC.len()
            || schema.features[..FERTILIZER_NUMERIC.len()] != FERTILIZER_NUMERIC
        {
            return Err(KisanError::InvalidInput(format!(
                "schema '{}' is not a fertilizer schema",
                schema.id
            )));
        }
        let soil_types = schema.features[FERTILIZER_NUMERIC.len()..]
            .iter()
            .map(|f| {
                f.strip_prefix(SOIL_PREFIX)
                    .map(str::to_string)
                    .ok_or_else(|| KisanError::InvalidInput(format!("unexpected fertilizer column '{f}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let encoder = Self::new(soil_types.clone());
        if encoder.soil_types != soil_types {
            return Err(KisanError::InvalidInput(
                "soil columns are not in lexicographic order".into(),
            ));
        }
        Ok(encoder)
    }

    pub fn schema(&self) -> Schema {
        let mut features: Vec<String> = FERTILIZER_NUMERIC.iter().map(|s| s.to_string()).collect();
        features.extend(self.soil_types.iter().map(|s| format!("{SOIL_PREFIX}{s}")));
        Schema::new("fertilizer", features)
    }

    pub fn encode(&self, q: &FertilizerQuery) -> Result<Vec<f64>> {
        let slot = self
            .soil_types
            .binary_search(&q.soil_type)
            .map_err(|_| KisanError::UnknownCategory {
                kind: "soil_type",
                value: q.soil_type.clone(),
                known: self.soil_types.clone(),
            })?;
        let mut row = vec![q.n, q.p, q.k, q.moisture, q.temperature];
        row.extend((0..self.soil_types.len()).map(|i| if i == slot { 1.0 } else { 0.0 }));
        Ok(row)
    }
}

/// One-hot encodes records over the soil types they contain.
pub fn encode_fertilizer(records: &[FertilizerRecord]) -> Result<(LabeledDataset, FertilizerEncoder)> {
    let encoder = FertilizerEncoder::new(records.iter().map(|r| r.soil_type.clone()));
    let rows = records
        .iter()
        .map(|r| encoder.encode(&r.query()))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<&str> = records.iter().map(|r| r.label.as_str()).collect();
    Ok((LabeledDataset::from_labels(encoder.schema(), rows, &labels)?, encoder))
}

pub fn parse_fertilizer_records<R: Read>(reader: R) -> Result<Vec<FertilizerRecord>> {
    let (header, recs) = records(reader)?;
    let pos = resolve_header(&header, &FERTILIZER_COLUMNS)?;
    recs.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let num = |j: usize| number(rec, row, pos[j], FERTILIZER_COLUMNS[j]);
            Ok(FertilizerRecord {
                n: num(0)?,
                p: num(1)?,
                k: num(2)?,
                soil_type: text(rec, row, pos[3], "soil_type")?.to_string(),
                moisture: num(4)?,
                temperature: num(5)?,
                label: text(rec, row, pos[6], LABEL)?.to_string(),
            })
        })
        .collect()
}

/// Loads the fertilizer corpus with `soil_type` one-hot expanded.
pub fn load_fertilizer_records(path: impl AsRef<Path>) -> Result<Vec<FertilizerRecord>> {
    parse_fertilizer_records(open(path.as_ref())?)
}

pub fn load_fertilizer_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    Ok(encode_fertilizer(&load_fertilizer_records(path)?)?.0)
}

pub fn write_fertilizer_records(path: impl AsRef<Path>, records: &[FertilizerRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(FERTILIZER_COLUMNS).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.p.to_string(),
            r.k.to_string(),
            r.soil_type.clone(),
            r.moisture.to_string(),
            r.temperature.to_string(),
            r.label.clone(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| KisanError::io(path, e))
}

/// Writes raw bytes, mapping failures to a path-addressed error.
pub fn write_file(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    create(path)?.write_all(contents).map_err(|e| KisanError::io(path, e))
}

/// Columns of the agronomic schema, for callers building CSV headers.
pub fn crop_columns(with_price: bool) -> Vec<&'static str> {
    let mut cols: Vec<&str> = AGRONOMIC_FEATURES.to_vec();
    if with_price {
        cols.push(MARKET_PRICE);
    }
    cols.push(LABEL);
    cols
}
