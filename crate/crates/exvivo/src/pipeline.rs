//! Batch commands behind the `exvivo` binary: per-subject measurement,
//! cohort aggregation, and correlation studies.
//!
//! Determinism contract: identical config + inputs produce byte-identical
//! reports. All floats go through `sigfmt::sig6`, all rows are sorted by
//! (subject, item) or built in a fixed order, and per-subject concurrency
//! never affects output ordering.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use exvivo_core::edt::distance_transform;
use exvivo_core::measure::{impute_icv, normalized_wmh_volume, region_volume};
use exvivo_core::metrics::{evaluate_labels, mean_sd};
use exvivo_core::phantom::{generate, PhantomKind, PhantomSpec};
use exvivo_core::stats::{
    bh_fdr, bland_altman, icc_average_fixed_raters, partial_spearman, rank_sum_test, spearman,
    Alternative,
};
use exvivo_core::thickness::inscribed_sphere_thickness_with;
use exvivo_core::CoreError;
use rayon::prelude::*;

use crate::config::{StudyConfig, SubjectEntry};
use crate::csvio::{self, GLOBAL_MEASURES, RATING_MEASURES};
use crate::error::{AppError, Result};
use crate::nifti;
use crate::sigfmt::{sig6, sig6_opt};

/// Subcortical structures reported in volume-based tables, fixed order.
pub const SUBCORTICAL_REGIONS: [&str; 4] = ["caudate", "putamen", "globus_pallidus", "thalamus"];

#[derive(Debug, Clone, Copy, Default)]
pub struct RunSummary {
    pub rows: usize,
    pub failed_rows: usize,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        if self.failed_rows > 0 {
            1
        } else {
            0
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AppError::Config(format!("cannot build a {jobs}-thread pool: {e}")))
}

fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| AppError::io(out_dir, e))
}

// ---------------------------------------------------------------------------
// thickness

pub const THICKNESS_HEADER: [&str; 10] = [
    "subject",
    "landmark",
    "thickness_mm",
    "center_x",
    "center_y",
    "center_z",
    "radius_mm",
    "snapped",
    "snap_distance_mm",
    "flag",
];

pub fn cmd_thickness(cfg: &StudyConfig, jobs: usize, out_dir: &Path) -> Result<RunSummary> {
    if cfg.subjects.is_empty() {
        return Err(AppError::Config("no subjects".into()));
    }
    let gm = cfg
        .label_id("gm")
        .ok_or_else(|| AppError::Config("thickness requires a 'gm' entry in [labels]".into()))?;
    let names = cfg.landmark_names();
    ensure_out_dir(out_dir)?;

    let mut rows: Vec<Vec<String>> = pool(jobs)?.install(|| {
        cfg.subjects
            .par_iter()
            .map(|sub| subject_thickness_rows(cfg, sub, gm, &names))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    rows.sort();

    let failed = rows.iter().filter(|r| r[2].is_empty()).count();
    csvio::write_csv(&out_dir.join("thickness.csv"), &THICKNESS_HEADER, &rows)?;
    Ok(RunSummary { rows: rows.len(), failed_rows: failed })
}

fn subject_thickness_rows(
    cfg: &StudyConfig,
    sub: &SubjectEntry,
    gm: u32,
    names: &[String],
) -> Vec<Vec<String>> {
    match subject_thickness_inner(cfg, sub, gm, names) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("subject {}: {e}", sub.id);
            names
                .iter()
                .map(|name| error_thickness_row(&sub.id, name, "subject-error"))
                .collect()
        }
    }
}

fn error_thickness_row(subject: &str, landmark: &str, flag: &str) -> Vec<String> {
    let mut row = vec![subject.to_string(), landmark.to_string()];
    row.extend(std::iter::repeat(String::new()).take(7));
    row.push(flag.to_string());
    row
}

fn subject_thickness_inner(
    cfg: &StudyConfig,
    sub: &SubjectEntry,
    gm: u32,
    names: &[String],
) -> Result<Vec<Vec<String>>> {
    let map = nifti::read_label_map(&sub.label_map, Some(cfg.dictionary()))?;
    let landmark_path = sub
        .landmarks
        .as_ref()
        .ok_or_else(|| AppError::Config(format!("subject '{}' has no landmark file", sub.id)))?;
    let landmarks = csvio::read_landmarks(landmark_path)?;
    let mask = map.mask_of(gm);
    let dist = distance_transform(&mask);
    let params = cfg.thickness_params();

    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let Some(lm) = landmarks.get(name) else {
            rows.push(error_thickness_row(&sub.id, name, "missing-landmark"));
            continue;
        };
        match inscribed_sphere_thickness_with(&mask, &dist.data, lm.point, &params) {
            Ok(t) => rows.push(vec![
                sub.id.clone(),
                name.clone(),
                sig6(t.thickness_mm),
                sig6(t.sphere_center[0]),
                sig6(t.sphere_center[1]),
                sig6(t.sphere_center[2]),
                sig6(t.sphere_radius_mm),
                t.snapped.to_string(),
                sig6(t.snap_distance_mm),
                if t.thin_region { "thin-region".into() } else { String::new() },
            ]),
            Err(CoreError::LandmarkOutsideSegmentation { .. }) => {
                rows.push(error_thickness_row(&sub.id, name, "outside-segmentation"));
            }
            Err(e) => {
                eprintln!("subject {} landmark {name}: {e}", sub.id);
                rows.push(error_thickness_row(&sub.id, name, "measure-error"));
            }
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// volumes

pub const VOLUMES_HEADER: [&str; 8] = [
    "subject",
    "region",
    "voxel_count",
    "volume_mm3",
    "icv_mm3",
    "icv_adjusted",
    "normalized_wmh",
    "flag",
];

pub fn cmd_volumes(cfg: &StudyConfig, jobs: usize, out_dir: &Path) -> Result<RunSummary> {
    if cfg.subjects.is_empty() {
        return Err(AppError::Config("no subjects".into()));
    }
    if cfg.labels.is_empty() {
        return Err(AppError::Config("volumes requires a [labels] table".into()));
    }
    ensure_out_dir(out_dir)?;

    // ICV imputation across the cohort: missing values take the cohort mean.
    let provided: Vec<Option<f64>> = cfg.subjects.iter().map(|s| s.icv_mm3).collect();
    let any_icv = provided.iter().any(Option::is_some);
    let icv: Vec<Option<f64>> = if any_icv {
        impute_icv(&provided)?.into_iter().map(Some).collect()
    } else {
        provided.clone()
    };

    let mut rows: Vec<Vec<String>> = pool(jobs)?.install(|| {
        cfg.subjects
            .par_iter()
            .zip(icv.par_iter())
            .zip(provided.par_iter())
            .map(|((sub, &icv_val), orig)| subject_volume_rows(cfg, sub, icv_val, orig.is_none() && any_icv))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    rows.sort();

    let failed = rows.iter().filter(|r| r[7] == "subject-error").count();
    csvio::write_csv(&out_dir.join("volumes.csv"), &VOLUMES_HEADER, &rows)?;
    Ok(RunSummary { rows: rows.len(), failed_rows: failed })
}

fn subject_volume_rows(
    cfg: &StudyConfig,
    sub: &SubjectEntry,
    icv: Option<f64>,
    imputed: bool,
) -> Vec<Vec<String>> {
    let map = match nifti::read_label_map(&sub.label_map, Some(cfg.dictionary())) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("subject {}: {e}", sub.id);
            return cfg
                .labels
                .keys()
                .map(|region| {
                    let mut row = vec![sub.id.clone(), region.clone()];
                    row.extend(std::iter::repeat(String::new()).take(5));
                    row.push("subject-error".into());
                    row
                })
                .collect();
        }
    };

    let wmh_pair = cfg.label_id("wmh").zip(cfg.label_id("wm"));
    let mut rows = Vec::with_capacity(cfg.labels.len());
    for (region, &id) in &cfg.labels {
        let mut flag = if imputed { "imputed".to_string() } else { String::new() };
        let vol = match region_volume(&map, id, icv) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("subject {} region {region}: {e}", sub.id);
                let mut row = vec![sub.id.clone(), region.clone()];
                row.extend(std::iter::repeat(String::new()).take(5));
                row.push("subject-error".into());
                rows.push(row);
                continue;
            }
        };
        let mut normalized = String::new();
        if region == "wmh" {
            if let Some((wmh_id, wm_id)) = wmh_pair {
                match normalized_wmh_volume(&map, wmh_id, wm_id) {
                    Ok(v) => normalized = sig6(v),
                    Err(_) => {
                        if !flag.is_empty() {
                            flag.push(';');
                        }
                        flag.push_str("undefined-normalization");
                    }
                }
            }
        }
        rows.push(vec![
            sub.id.clone(),
            region.clone(),
            vol.voxel_count.to_string(),
            sig6(vol.volume_mm3),
            sig6_opt(vol.icv_mm3),
            sig6_opt(vol.icv_adjusted),
            normalized,
            flag,
        ]);
    }
    rows
}

// ---------------------------------------------------------------------------
// evaluate

pub const METRICS_HEADER: [&str; 5] = ["subject", "label", "dsc", "hd95_mm", "flag"];

pub fn cmd_evaluate(
    candidate_dir: &Path,
    reference_dir: &Path,
    labels: Option<Vec<u32>>,
    jobs: usize,
    out_dir: &Path,
) -> Result<RunSummary> {
    let subjects = matched_volumes(candidate_dir, reference_dir)?;
    if subjects.is_empty() {
        return Err(AppError::Config("no subjects".into()));
    }
    ensure_out_dir(out_dir)?;

    type SubjectOut = (Vec<Vec<String>>, Vec<(String, f64, Option<f64>)>);
    let per_subject: Vec<SubjectOut> = pool(jobs)?.install(|| {
        subjects
            .par_iter()
            .map(|(subject, cand, refr)| evaluate_one(subject, cand, refr, labels.as_deref()))
            .collect()
    });

    let mut rows = Vec::new();
    let mut samples: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (subject_rows, subject_samples) in per_subject {
        rows.extend(subject_rows);
        for (label, dsc, hd) in subject_samples {
            let entry = samples.entry(label).or_default();
            entry.0.push(dsc);
            if let Some(h) = hd {
                entry.1.push(h);
            }
        }
    }
    rows.sort();
    let failed = rows.iter().filter(|r| r[4].starts_with("subject-error") || r[4] == "grid-mismatch").count();
    csvio::write_csv(&out_dir.join("metrics.csv"), &METRICS_HEADER, &rows)?;

    let mut aggregate = serde_json::Map::new();
    for (label, (dscs, hds)) in &samples {
        let mut entry = serde_json::Map::new();
        entry.insert("dsc".into(), agg_json(dscs));
        entry.insert(
            "hd95_mm".into(),
            if hds.is_empty() { serde_json::Value::Null } else { agg_json(hds) },
        );
        aggregate.insert(label.clone(), serde_json::Value::Object(entry));
    }
    let json = serde_json::to_string_pretty(&serde_json::Value::Object(aggregate))?;
    std::fs::write(out_dir.join("aggregate.json"), json + "\n")
        .map_err(|e| AppError::io(out_dir.join("aggregate.json"), e))?;
    Ok(RunSummary { rows: rows.len(), failed_rows: failed })
}

fn agg_json(values: &[f64]) -> serde_json::Value {
    let (mean, sd) = mean_sd(values);
    serde_json::json!({
        "mean": json_num(mean),
        "sd": json_num(sd),
        "n": values.len(),
    })
}

/// Round to the report precision so JSON output is byte-stable.
fn json_num(v: f64) -> serde_json::Value {
    serde_json::Value::from(sig6(v).parse::<f64>().unwrap_or(0.0))
}

fn matched_volumes(candidate_dir: &Path, reference_dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(candidate_dir).map_err(|e| AppError::io(candidate_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| AppError::io(candidate_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let subject = match name.strip_suffix(".nii.gz").or_else(|| name.strip_suffix(".nii")) {
            Some(s) => s.to_string(),
            None => continue,
        };
        let reference = reference_dir.join(&name);
        if reference.exists() {
            out.push((subject, entry.path(), reference));
        }
    }
    out.sort();
    Ok(out)
}

#[allow(clippy::type_complexity)]
fn evaluate_one(
    subject: &str,
    candidate: &Path,
    reference: &Path,
    labels: Option<&[u32]>,
) -> (Vec<Vec<String>>, Vec<(String, f64, Option<f64>)>) {
    let error_row = |flag: &str| {
        (
            vec![vec![subject.to_string(), String::new(), String::new(), String::new(), flag.to_string()]],
            Vec::new(),
        )
    };
    let (cand, refr) = match (nifti::read_label_map(candidate, None), nifti::read_label_map(reference, None)) {
        (Ok(c), Ok(r)) => (c, r),
        (c, r) => {
            if let Err(e) = c.and(r) {
                eprintln!("subject {subject}: {e}");
            }
            return error_row("subject-error");
        }
    };
    let ids: Vec<u32> = match labels {
        Some(l) => l.to_vec(),
        None => {
            let mut set: BTreeSet<u32> = refr.dictionary.keys().copied().collect();
            set.extend(cand.dictionary.keys().copied());
            set.into_iter().collect()
        }
    };
    let report = match evaluate_labels(&cand, &refr, &ids) {
        Ok(r) => r,
        Err(CoreError::GridMismatch) => return error_row("grid-mismatch"),
        Err(e) => {
            eprintln!("subject {subject}: {e}");
            return error_row("subject-error");
        }
    };
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for m in &report.per_label {
        let flag = if m.absent_in_both {
            "absent-in-both"
        } else if m.hd95_mm.is_none() {
            "hd95-undefined"
        } else {
            ""
        };
        rows.push(vec![
            subject.to_string(),
            m.label.clone(),
            sig6(m.dsc),
            sig6_opt(m.hd95_mm),
            flag.to_string(),
        ]);
        samples.push((m.label.clone(), m.dsc, m.hd95_mm));
    }
    (rows, samples)
}

// ---------------------------------------------------------------------------
// correlate

pub const CORRELATION_HEADER: [&str; 7] = ["roi", "measure", "rho", "p", "n", "bh_rejected", "flag"];
pub const AGREEMENT_HEADER: [&str; 8] =
    ["roi", "icc", "n", "mean_difference", "sd_difference", "loa_low", "loa_high", "flag"];
pub const GROUP_HEADER: [&str; 11] = [
    "region",
    "group_a",
    "group_b",
    "n_a",
    "n_b",
    "u",
    "p",
    "exact",
    "bh_rejected",
    "stars",
    "flag",
];

struct Cell {
    roi: String,
    measure: String,
    rho: Option<f64>,
    p: Option<f64>,
    n: usize,
    flag: String,
}

impl Cell {
    fn ok(roi: &str, measure: &str, rho: f64, p: f64, n: usize) -> Self {
        Cell { roi: roi.into(), measure: measure.into(), rho: Some(rho), p: Some(p), n, flag: String::new() }
    }

    fn flagged(roi: &str, measure: &str, n: usize, flag: &str) -> Self {
        Cell { roi: roi.into(), measure: measure.into(), rho: None, p: None, n, flag: flag.into() }
    }
}

/// Apply BH across the table's valid cells and render rows.
fn finish_cells(mut cells: Vec<Cell>, q: f64) -> Result<Vec<Vec<String>>> {
    let valid: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].p.is_some()).collect();
    if !valid.is_empty() {
        let ps: Vec<f64> = valid.iter().map(|&i| cells[i].p.unwrap()).collect();
        let rejected = bh_fdr(&ps, q)?;
        for (slot, &i) in valid.iter().enumerate() {
            cells[i].flag = rejected[slot].to_string();
        }
    }
    Ok(cells
        .into_iter()
        .map(|c| {
            let (bh, flag) = if c.p.is_some() { (c.flag, String::new()) } else { (String::new(), c.flag) };
            vec![
                c.roi,
                c.measure,
                sig6_opt(c.rho),
                sig6_opt(c.p),
                c.n.to_string(),
                bh,
                flag,
            ]
        })
        .collect())
}

fn complete_pairs(x: &[f64], y: &[f64]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a.is_finite() && b.is_finite()).count()
}

fn correlation_cell(roi: &str, measure: &str, x: &[f64], y: &[f64], alt: Alternative, min_n: usize) -> Cell {
    let n = complete_pairs(x, y);
    if n < min_n {
        return Cell::flagged(roi, measure, n, "insufficient-n");
    }
    match spearman(x, y, alt) {
        Ok(r) => Cell::ok(roi, measure, r.rho, r.p, r.n),
        Err(CoreError::ConstantInput(_)) => Cell::flagged(roi, measure, n, "constant-input"),
        Err(_) => Cell::flagged(roi, measure, n, "insufficient-n"),
    }
}

pub fn cmd_correlate(cfg: &StudyConfig, out_dir: &Path) -> Result<RunSummary> {
    let thickness_path = cfg
        .inputs
        .thickness
        .as_ref()
        .ok_or_else(|| AppError::Config("correlate requires inputs.thickness".into()))?;
    let ratings_path = cfg
        .inputs
        .ratings
        .as_ref()
        .ok_or_else(|| AppError::Config("correlate requires inputs.ratings".into()))?;
    let alt = cfg.alternative()?;
    let q = cfg.study.q;
    let min_n = cfg.study.min_n;
    ensure_out_dir(out_dir)?;

    let thickness = csvio::read_thickness_rows(thickness_path)?;
    let ratings = csvio::ratings_index(&csvio::read_ratings(ratings_path)?);
    let globals = match &cfg.inputs.globals {
        Some(p) => csvio::read_globals(p)?,
        None => Vec::new(),
    };
    let mapping = match &cfg.inputs.region_mapping {
        Some(p) => csvio::read_region_mapping(p)?,
        None => csvio::packaged_region_mapping(),
    };
    let mapping_by_roi: BTreeMap<&str, &str> =
        mapping.iter().map(|m| (m.roi.as_str(), m.pathology_region.as_str())).collect();

    let subset: Option<BTreeSet<String>> = match &cfg.inputs.subset {
        Some(p) => Some(csvio::read_subject_list(p)?.into_iter().collect()),
        None => None,
    };
    let in_subset = |s: &str| subset.as_ref().map_or(true, |set| set.contains(s));

    let mut subjects: BTreeSet<String> = thickness
        .iter()
        .map(|r| r.subject.clone())
        .filter(|s| in_subset(s))
        .collect();
    subjects.extend(
        globals.iter().map(|g| g.subject.clone()).filter(|s| in_subset(s)),
    );
    let subjects: Vec<String> = subjects.into_iter().collect();
    if subjects.is_empty() {
        return Err(AppError::Config("no subjects".into()));
    }

    let mut thick_by_key: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut rois: BTreeSet<String> = BTreeSet::new();
    for row in &thickness {
        rois.insert(row.landmark.clone());
        if row.flag.is_empty() {
            if let Some(v) = row.thickness_mm {
                thick_by_key.insert((row.subject.clone(), row.landmark.clone()), v);
            }
        }
    }
    let globals_by_subject: BTreeMap<&str, &csvio::GlobalRow> =
        globals.iter().map(|g| (g.subject.as_str(), g)).collect();

    let thickness_series = |roi: &str| -> Vec<f64> {
        subjects
            .iter()
            .map(|s| thick_by_key.get(&(s.clone(), roi.to_string())).copied().unwrap_or(f64::NAN))
            .collect()
    };

    // Table-4-style matrix: thickness vs regional ratings and global stages.
    let mut cells = Vec::new();
    for roi in &rois {
        let Some(region) = mapping_by_roi.get(roi.as_str()) else {
            eprintln!("skipping unmapped ROI '{roi}'");
            continue;
        };
        let x = thickness_series(roi);
        for measure in RATING_MEASURES {
            let y: Vec<f64> = subjects
                .iter()
                .map(|s| {
                    ratings
                        .get(&(s.clone(), region.to_string()))
                        .and_then(|r| r.measure(measure))
                        .unwrap_or(f64::NAN)
                })
                .collect();
            cells.push(correlation_cell(roi, measure, &x, &y, alt, min_n));
        }
        if !globals.is_empty() {
            for measure in GLOBAL_MEASURES {
                let y: Vec<f64> = subjects
                    .iter()
                    .map(|s| {
                        globals_by_subject
                            .get(s.as_str())
                            .and_then(|g| g.measure(measure))
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                cells.push(correlation_cell(roi, measure, &x, &y, alt, min_n));
            }
        }
    }
    let rows = finish_cells(cells, q)?;
    let n_rows = rows.len();
    csvio::write_csv(&out_dir.join("correlation_matrix.csv"), &CORRELATION_HEADER, &rows)?;

    let mut total = n_rows;
    if let Some(volumes_path) = &cfg.inputs.volumes {
        let volumes = csvio::read_volume_rows(volumes_path)?;
        total += write_wmh_table(cfg, &subjects, &rois, &thickness_series, &volumes, alt, out_dir)?;
        if let Some(groups_path) = &cfg.inputs.groups {
            let groups = csvio::read_groups(groups_path)?;
            total += write_group_table(q, &subjects, &volumes, &groups, out_dir)?;
        }
    }
    if let Some(b_path) = &cfg.inputs.thickness_b {
        total += write_agreement_table(&subjects, &rois, &thick_by_key, b_path, out_dir)?;
    }
    Ok(RunSummary { rows: total, failed_rows: 0 })
}

/// Table-5-style: thickness and subcortical volumes vs normalized WMH
/// volume; volume correlations are partialed on ICV.
fn write_wmh_table(
    cfg: &StudyConfig,
    subjects: &[String],
    rois: &BTreeSet<String>,
    thickness_series: &dyn Fn(&str) -> Vec<f64>,
    volumes: &[csvio::VolumeRow],
    alt: Alternative,
    out_dir: &Path,
) -> Result<usize> {
    let mut nwmh: BTreeMap<&str, f64> = BTreeMap::new();
    let mut icv: BTreeMap<&str, f64> = BTreeMap::new();
    let mut region_volume: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for row in volumes {
        if let Some(v) = row.normalized_wmh {
            nwmh.insert(&row.subject, v);
        }
        if let Some(v) = row.icv_mm3 {
            icv.insert(&row.subject, v);
        }
        if let Some(v) = row.volume_mm3 {
            region_volume.insert((&row.subject, &row.region), v);
        }
    }
    let y: Vec<f64> = subjects
        .iter()
        .map(|s| nwmh.get(s.as_str()).copied().unwrap_or(f64::NAN))
        .collect();

    let mut cells = Vec::new();
    for roi in rois {
        let x = thickness_series(roi);
        cells.push(correlation_cell(roi, "normalized_wmh", &x, &y, alt, cfg.study.min_n));
    }
    for region in SUBCORTICAL_REGIONS {
        let x: Vec<f64> = subjects
            .iter()
            .map(|s| region_volume.get(&(s.as_str(), region)).copied().unwrap_or(f64::NAN))
            .collect();
        if x.iter().all(|v| v.is_nan()) {
            continue; // structure not measured in this cohort
        }
        let z: Vec<f64> = subjects
            .iter()
            .map(|s| icv.get(s.as_str()).copied().unwrap_or(f64::NAN))
            .collect();
        let measure = "normalized_wmh_partial_icv";
        if z.iter().all(|v| v.is_nan()) {
            cells.push(Cell::flagged(region, measure, 0, "missing-icv"));
            continue;
        }
        let n = subjects
            .iter()
            .enumerate()
            .filter(|(i, _)| x[*i].is_finite() && y[*i].is_finite() && z[*i].is_finite())
            .count();
        if n < cfg.study.min_n.max(4) {
            cells.push(Cell::flagged(region, measure, n, "insufficient-n"));
            continue;
        }
        match partial_spearman(&x, &y, &z, "icv", alt) {
            Ok(r) => cells.push(Cell::ok(region, measure, r.rho, r.p, r.n)),
            Err(CoreError::ConstantInput(_)) => cells.push(Cell::flagged(region, measure, n, "constant-input")),
            Err(e) => {
                eprintln!("region {region}: {e}");
                cells.push(Cell::flagged(region, measure, n, "stat-error"));
            }
        }
    }
    let rows = finish_cells(cells, cfg.study.q)?;
    csvio::write_csv(&out_dir.join("wmh_correlation.csv"), &CORRELATION_HEADER, &rows)?;
    Ok(rows.len())
}

/// Table-3-style agreement between two measurement sources per ROI.
fn write_agreement_table(
    subjects: &[String],
    rois: &BTreeSet<String>,
    thick_a: &BTreeMap<(String, String), f64>,
    b_path: &Path,
    out_dir: &Path,
) -> Result<usize> {
    let b_rows = csvio::read_thickness_rows(b_path)?;
    let mut thick_b: BTreeMap<(String, String), f64> = BTreeMap::new();
    for row in &b_rows {
        if row.flag.is_empty() {
            if let Some(v) = row.thickness_mm {
                thick_b.insert((row.subject.clone(), row.landmark.clone()), v);
            }
        }
    }
    let mut rows = Vec::new();
    for roi in rois {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for s in subjects {
            let key = (s.clone(), roi.clone());
            if let (Some(&x), Some(&y)) = (thick_a.get(&key), thick_b.get(&key)) {
                a.push(x);
                b.push(y);
            }
        }
        let n = a.len();
        let paired: Vec<Vec<f64>> = a.iter().zip(&b).map(|(&x, &y)| vec![x, y]).collect();
        let (icc, mut flag) = match icc_average_fixed_raters(&paired) {
            Ok(r) => (Some(r.icc), String::new()),
            Err(CoreError::ConstantInput(_)) => (None, "constant-input".to_string()),
            Err(_) => (None, "insufficient-n".to_string()),
        };
        let ba = bland_altman(&a, &b).ok();
        if ba.is_none() && flag.is_empty() {
            flag = "insufficient-n".into();
        }
        rows.push(vec![
            roi.clone(),
            sig6_opt(icc),
            n.to_string(),
            sig6_opt(ba.as_ref().map(|r| r.mean_difference)),
            sig6_opt(ba.as_ref().map(|r| r.sd_difference)),
            sig6_opt(ba.as_ref().map(|r| r.loa_low)),
            sig6_opt(ba.as_ref().map(|r| r.loa_high)),
            flag,
        ]);
    }
    csvio::write_csv(&out_dir.join("agreement.csv"), &AGREEMENT_HEADER, &rows)?;
    Ok(rows.len())
}

fn stars(p: f64) -> &'static str {
    if p <= 0.0001 {
        "****"
    } else if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else {
        "ns"
    }
}

/// Fig-9-style pairwise group comparisons of subcortical volumes, with BH
/// applied per structure across its pairwise tests.
fn write_group_table(
    q: f64,
    subjects: &[String],
    volumes: &[csvio::VolumeRow],
    groups: &[csvio::GroupRow],
    out_dir: &Path,
) -> Result<usize> {
    let group_of: BTreeMap<&str, &str> =
        groups.iter().map(|g| (g.subject.as_str(), g.group.as_str())).collect();
    let group_names: BTreeSet<&str> = subjects
        .iter()
        .filter_map(|s| group_of.get(s.as_str()).copied())
        .collect();
    let group_names: Vec<&str> = group_names.into_iter().collect();

    let mut volume_of: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for row in volumes {
        if let Some(v) = row.volume_mm3 {
            volume_of.insert((&row.subject, &row.region), v);
        }
    }

    let mut rows = Vec::new();
    for region in SUBCORTICAL_REGIONS {
        struct Pair {
            a: String,
            b: String,
            n_a: usize,
            n_b: usize,
            u: Option<f64>,
            p: Option<f64>,
            exact: Option<bool>,
            flag: String,
        }
        let mut pairs = Vec::new();
        for (i, &ga) in group_names.iter().enumerate() {
            for &gb in &group_names[i + 1..] {
                let collect = |g: &str| -> Vec<f64> {
                    subjects
                        .iter()
                        .filter(|s| group_of.get(s.as_str()) == Some(&g))
                        .filter_map(|s| volume_of.get(&(s.as_str(), region)).copied())
                        .collect()
                };
                let a = collect(ga);
                let b = collect(gb);
                let mut pair = Pair {
                    a: ga.into(),
                    b: gb.into(),
                    n_a: a.len(),
                    n_b: b.len(),
                    u: None,
                    p: None,
                    exact: None,
                    flag: String::new(),
                };
                match rank_sum_test(&a, &b) {
                    Ok(r) => {
                        pair.u = Some(r.u);
                        pair.p = Some(r.p);
                        pair.exact = Some(r.exact);
                    }
                    Err(_) => pair.flag = "insufficient-n".into(),
                }
                pairs.push(pair);
            }
        }
        if subjects.iter().all(|s| !volume_of.contains_key(&(s.as_str(), region))) {
            continue; // structure not measured in this cohort
        }
        let valid: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].p.is_some()).collect();
        let mut rejected = vec![false; pairs.len()];
        if !valid.is_empty() {
            let ps: Vec<f64> = valid.iter().map(|&i| pairs[i].p.unwrap()).collect();
            let decisions = bh_fdr(&ps, q)?;
            for (slot, &i) in valid.iter().enumerate() {
                rejected[i] = decisions[slot];
            }
        }
        for (i, pair) in pairs.iter().enumerate() {
            rows.push(vec![
                region.to_string(),
                pair.a.clone(),
                pair.b.clone(),
                pair.n_a.to_string(),
                pair.n_b.to_string(),
                sig6_opt(pair.u),
                sig6_opt(pair.p),
                pair.exact.map(|e| e.to_string()).unwrap_or_default(),
                if pair.p.is_some() { rejected[i].to_string() } else { String::new() },
                pair.p.map(stars).unwrap_or("").to_string(),
                pair.flag.clone(),
            ]);
        }
    }
    csvio::write_csv(&out_dir.join("group_comparison.csv"), &GROUP_HEADER, &rows)?;
    Ok(rows.len())
}

// ---------------------------------------------------------------------------
// phantom

/// Generate a phantom, writing `<name>.nii.gz`, a ground-truth JSON sidecar,
/// and (when the phantom has one) a landmark CSV ready for `thickness`.
pub fn cmd_phantom(
    kind: PhantomKind,
    spacing: f64,
    seed: u64,
    name: &str,
    out_dir: &Path,
) -> Result<RunSummary> {
    ensure_out_dir(out_dir)?;
    let spec = PhantomSpec { kind, spacing: [spacing; 3], seed };
    let (map, truth) = generate(&spec)?;
    nifti::write_label_map(&map, &out_dir.join(format!("{name}.nii.gz")))?;

    let counts: BTreeMap<String, usize> = truth
        .label_counts
        .iter()
        .map(|(&id, &n)| {
            let label = map.dictionary.get(&id).cloned().unwrap_or_else(|| format!("label_{id}"));
            (label, n)
        })
        .collect();
    let sidecar = serde_json::json!({
        "thickness_mm": truth.thickness_mm.map(json_num),
        "landmark_mm": truth.landmark_mm.map(|p| p.map(json_num)),
        "label_counts": counts,
        "component_count": truth.component_count,
    });
    let json_path = out_dir.join(format!("{name}_truth.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)? + "\n")
        .map_err(|e| AppError::io(&json_path, e))?;

    if let Some(p) = truth.landmark_mm {
        let rows = vec![vec![
            "phantom".to_string(),
            sig6(p[0]),
            sig6(p[1]),
            sig6(p[2]),
        ]];
        csvio::write_csv(
            &out_dir.join(format!("{name}_landmarks.csv")),
            &["name", "x_mm", "y_mm", "z_mm"],
            &rows,
        )?;
    }
    Ok(RunSummary { rows: 1, failed_rows: 0 })
}
