//! Study configuration: a single TOML file describing the cohort, label
//! dictionary, input tables, and statistical options.
//!
//! Grammar (all paths relative to the config file):
//!
//! ```toml
//! [study]
//! q = 0.05                  # BH false-discovery level, in (0, 1)
//! alternative = "less"      # less | greater | two-sided
//! min_n = 3                 # smallest usable sample per correlation cell
//! snap_tolerance_mm = 1.0
//! search_radius_mm = 20.0
//! landmarks = ["visual", "motor"]   # optional; default: the 16 canonical names
//!
//! [labels]                  # name -> integer id; ids unique and nonzero
//! gm = 1
//! wm = 2
//!
//! [inputs]                  # measurement and rating tables (see csvio)
//! ratings = "ratings.csv"
//! globals = "globals.csv"          # optional
//! region_mapping = "mapping.csv"   # optional; packaged 16-row table otherwise
//! thickness = "thickness.csv"      # required by `correlate`
//! volumes = "volumes.csv"          # optional; enables WMH and group tables
//! thickness_b = "rater_b.csv"      # optional; enables the agreement table
//! groups = "groups.csv"            # optional; enables group comparisons
//! subset = "subset.txt"            # optional subject filter
//!
//! [[subjects]]
//! id = "s01"
//! label_map = "s01.nii.gz"
//! landmarks = "s01_landmarks.csv"
//! icv_mm3 = 1.2e6                  # optional
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use exvivo_core::stats::Alternative;
use exvivo_core::thickness::{ThicknessParams, CANONICAL_LANDMARKS};
use serde::Deserialize;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub labels: BTreeMap<String, u32>,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_alternative")]
    pub alternative: String,
    #[serde(default = "default_min_n")]
    pub min_n: usize,
    #[serde(default = "default_snap")]
    pub snap_tolerance_mm: f64,
    #[serde(default = "default_search")]
    pub search_radius_mm: f64,
    #[serde(default)]
    pub landmarks: Option<Vec<String>>,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            q: default_q(),
            alternative: default_alternative(),
            min_n: default_min_n(),
            snap_tolerance_mm: default_snap(),
            search_radius_mm: default_search(),
            landmarks: None,
        }
    }
}

fn default_q() -> f64 {
    0.05
}
fn default_alternative() -> String {
    "less".into()
}
fn default_min_n() -> usize {
    3
}
fn default_snap() -> f64 {
    ThicknessParams::default().snap_tolerance_mm
}
fn default_search() -> f64 {
    ThicknessParams::default().search_radius_mm
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub ratings: Option<PathBuf>,
    pub globals: Option<PathBuf>,
    pub region_mapping: Option<PathBuf>,
    pub thickness: Option<PathBuf>,
    pub volumes: Option<PathBuf>,
    pub thickness_b: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub subset: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    pub label_map: PathBuf,
    pub landmarks: Option<PathBuf>,
    pub icv_mm3: Option<f64>,
}

impl StudyConfig {
    /// Parse and validate; relative paths are resolved against the config
    /// file's directory and must exist (fail-fast, before any computation).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg: StudyConfig =
            toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        for opt in [
            &mut self.inputs.ratings,
            &mut self.inputs.globals,
            &mut self.inputs.region_mapping,
            &mut self.inputs.thickness,
            &mut self.inputs.volumes,
            &mut self.inputs.thickness_b,
            &mut self.inputs.groups,
            &mut self.inputs.subset,
        ] {
            if let Some(p) = opt.as_mut() {
                fix(p);
            }
        }
        for s in &mut self.subjects {
            fix(&mut s.label_map);
            if let Some(p) = s.landmarks.as_mut() {
                fix(p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.study;
        if !(s.q > 0.0 && s.q < 1.0) {
            return Err(AppError::Config(format!("q must be in (0, 1), got {}", s.q)));
        }
        if !(s.snap_tolerance_mm > 0.0) || !(s.search_radius_mm > 0.0) {
            return Err(AppError::Config("tolerances must be positive".into()));
        }
        if s.min_n < 3 {
            return Err(AppError::Config("min_n must be at least 3".into()));
        }
        self.alternative()?;

        let mut seen_ids = BTreeSet::new();
        for (name, &id) in &self.labels {
            if id == 0 {
                return Err(AppError::Config(format!("label '{name}' uses the reserved background id 0")));
            }
            if !seen_ids.insert(id) {
                return Err(AppError::Config(format!("label id {id} assigned to more than one name")));
            }
        }

        let mut subjects = BTreeSet::new();
        for sub in &self.subjects {
            if !subjects.insert(&sub.id) {
                return Err(AppError::Config(format!("duplicate subject id '{}'", sub.id)));
            }
            check_exists(&sub.label_map)?;
            if let Some(p) = &sub.landmarks {
                check_exists(p)?;
            }
            if let Some(icv) = sub.icv_mm3 {
                if !(icv > 0.0) {
                    return Err(AppError::Config(format!("subject '{}': icv_mm3 must be positive", sub.id)));
                }
            }
        }
        for p in [
            &self.inputs.ratings,
            &self.inputs.globals,
            &self.inputs.region_mapping,
            &self.inputs.thickness,
            &self.inputs.volumes,
            &self.inputs.thickness_b,
            &self.inputs.groups,
            &self.inputs.subset,
        ]
        .into_iter()
        .flatten()
        {
            check_exists(p)?;
        }
        Ok(())
    }

    pub fn alternative(&self) -> Result<Alternative> {
        self.study
            .alternative
            .parse()
            .map_err(|_| AppError::Config(format!("unknown alternative '{}'", self.study.alternative)))
    }

    pub fn thickness_params(&self) -> ThicknessParams {
        ThicknessParams {
            search_radius_mm: self.study.search_radius_mm,
            snap_tolerance_mm: self.study.snap_tolerance_mm,
        }
    }

    /// Landmark names measured by `thickness`, in report order.
    pub fn landmark_names(&self) -> Vec<String> {
        match &self.study.landmarks {
            Some(list) => list.clone(),
            None => CANONICAL_LANDMARKS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn label_id(&self, name: &str) -> Option<u32> {
        self.labels.get(name).copied()
    }

    /// id -> name dictionary for LabelMap construction.
    pub fn dictionary(&self) -> BTreeMap<u32, String> {
        self.labels.iter().map(|(n, &i)| (i, n.clone())).collect()
    }
}

fn check_exists(p: &Path) -> Result<()> {
    if !p.exists() {
        return Err(AppError::Config(format!("referenced path does not exist: {}", p.display())));
    }
    Ok(())
}
