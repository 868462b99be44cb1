//! CSV input parsing (landmarks, pathology ratings, global stages, region
//! mapping, measurement tables) and a deterministic CSV writer for reports.

use std::collections::BTreeMap;
use std::path::Path;

use exvivo_core::thickness::{Landmark, LandmarkSet};
use serde::Deserialize;

use crate::error::{AppError, Result};

/// Rating locations packaged with the crate: each cortical ROI and the
/// pathology sampling region it maps to, with an exact/closest flag.
pub const PACKAGED_REGION_MAPPING: &str = include_str!("../data/region_mapping.csv");

const ORDINAL_LEVELS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 3.0];

#[derive(Debug, Clone, Deserialize)]
pub struct RatingRow {
    pub subject: String,
    pub region: String,
    pub ptau: Option<f64>,
    pub abeta: Option<f64>,
    pub tdp43: Option<f64>,
    pub asyn: Option<f64>,
    pub neuronloss: Option<f64>,
}

impl RatingRow {
    pub fn measure(&self, name: &str) -> Option<f64> {
        match name {
            "ptau" => self.ptau,
            "abeta" => self.abeta,
            "tdp43" => self.tdp43,
            "asyn" => self.asyn,
            "neuronloss" => self.neuronloss,
            _ => None,
        }
    }
}

/// Regional pathology measures, in fixed report order.
pub const RATING_MEASURES: [&str; 5] = ["ptau", "abeta", "tdp43", "asyn", "neuronloss"];

#[derive(Debug, Clone, Deserialize)]
pub struct GlobalRow {
    pub subject: String,
    pub a_score: Option<f64>,
    pub b_score: Option<f64>,
    pub c_score: Option<f64>,
    pub braak06: Option<f64>,
}

impl GlobalRow {
    pub fn measure(&self, name: &str) -> Option<f64> {
        match name {
            "a_score" => self.a_score,
            "b_score" => self.b_score,
            "c_score" => self.c_score,
            "braak06" => self.braak06,
            _ => None,
        }
    }
}

/// Per-subject global stages, in fixed report order.
pub const GLOBAL_MEASURES: [&str; 4] = ["a_score", "b_score", "c_score", "braak06"];

#[derive(Debug, Clone)]
pub struct MappingRow {
    pub roi: String,
    pub pathology_region: String,
    pub exact: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ThicknessRow {
    pub subject: String,
    pub landmark: String,
    pub thickness_mm: Option<f64>,
    #[serde(default)]
    pub flag: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VolumeRow {
    pub subject: String,
    pub region: String,
    pub voxel_count: Option<u64>,
    pub volume_mm3: Option<f64>,
    pub icv_mm3: Option<f64>,
    pub icv_adjusted: Option<f64>,
    pub normalized_wmh: Option<f64>,
    #[serde(default)]
    pub flag: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GroupRow {
    pub subject: String,
    pub group: String,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::csv(path, e.to_string()))
}

fn rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, rec) in reader(path)?.deserialize().enumerate() {
        let row: T = rec.map_err(|e| AppError::csv(path, format!("row {}: {e}", i + 2)))?;
        out.push(row);
    }
    Ok(out)
}

/// `name,x_mm,y_mm,z_mm` physical coordinates in the volume's affine frame.
pub fn read_landmarks(path: &Path) -> Result<LandmarkSet> {
    #[derive(Deserialize)]
    struct Row {
        name: String,
        x_mm: f64,
        y_mm: f64,
        z_mm: f64,
    }
    let parsed: Vec<Row> = rows(path)?;
    let entries = parsed
        .into_iter()
        .map(|r| Landmark { name: r.name, point: [r.x_mm, r.y_mm, r.z_mm] })
        .collect();
    LandmarkSet::new(entries).map_err(Into::into)
}

/// `subject,region,ptau,abeta,tdp43,asyn,neuronloss`; blank means missing;
/// values restricted to the ordinal scale {0, 0.5, 1, 2, 3}.
pub fn read_ratings(path: &Path) -> Result<Vec<RatingRow>> {
    let parsed: Vec<RatingRow> = rows(path)?;
    for (i, row) in parsed.iter().enumerate() {
        for m in RATING_MEASURES {
            if let Some(v) = row.measure(m) {
                if !ORDINAL_LEVELS.contains(&v) {
                    return Err(AppError::csv(
                        path,
                        format!("row {}: {m} = {v} is not an ordinal level (0, 0.5, 1, 2, 3)", i + 2),
                    ));
                }
            }
        }
    }
    Ok(parsed)
}

/// `subject,a_score,b_score,c_score,braak06`; A/B/C in 0..=3, Braak in 0..=6.
pub fn read_globals(path: &Path) -> Result<Vec<GlobalRow>> {
    let parsed: Vec<GlobalRow> = rows(path)?;
    for (i, row) in parsed.iter().enumerate() {
        for (name, max) in [("a_score", 3.0), ("b_score", 3.0), ("c_score", 3.0), ("braak06", 6.0)] {
            if let Some(v) = row.measure(name) {
                if !(0.0..=max).contains(&v) {
                    return Err(AppError::csv(path, format!("row {}: {name} = {v} outside 0..={max}", i + 2)));
                }
            }
        }
    }
    Ok(parsed)
}

/// `roi,pathology_region,exact` with exact in {Y, N}.
pub fn read_region_mapping(path: &Path) -> Result<Vec<MappingRow>> {
    parse_region_mapping(
        &std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?,
        path,
    )
}

/// The 16-row mapping shipped with the crate.
pub fn packaged_region_mapping() -> Vec<MappingRow> {
    parse_region_mapping(PACKAGED_REGION_MAPPING, Path::new("<packaged>"))
        .expect("packaged mapping is well-formed")
}

fn parse_region_mapping(text: &str, path: &Path) -> Result<Vec<MappingRow>> {
    #[derive(Deserialize)]
    struct Row {
        roi: String,
        pathology_region: String,
        exact: String,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let row: Row = rec.map_err(|e| AppError::csv(path, format!("row {}: {e}", i + 2)))?;
        let exact = match row.exact.as_str() {
            "Y" => true,
            "N" => false,
            other => {
                return Err(AppError::csv(path, format!("row {}: exact must be Y or N, got {other:?}", i + 2)))
            }
        };
        out.push(MappingRow { roi: row.roi, pathology_region: row.pathology_region, exact });
    }
    Ok(out)
}

pub fn read_thickness_rows(path: &Path) -> Result<Vec<ThicknessRow>> {
    rows(path)
}

pub fn read_volume_rows(path: &Path) -> Result<Vec<VolumeRow>> {
    rows(path)
}

pub fn read_groups(path: &Path) -> Result<Vec<GroupRow>> {
    rows(path)
}

/// One subject id per line; blank lines and `#` comments ignored.
pub fn read_subject_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// Write a report CSV with a fixed header and preformatted fields, using
/// `\n` line endings so output is byte-stable across platforms.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| AppError::csv(path, e.to_string()))?;
    w.write_record(header).map_err(|e| AppError::csv(path, e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| AppError::csv(path, e.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))?;
    Ok(())
}

/// Index ratings by (subject, pathology region).
pub fn ratings_index(rows: &[RatingRow]) -> BTreeMap<(String, String), RatingRow> {
    rows.iter().map(|r| ((r.subject.clone(), r.region.clone()), r.clone())).collect()
}
