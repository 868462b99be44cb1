//! In-memory volume containers: scalar images, label maps and binary masks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::grid::VoxelGrid;

/// Dense 3D scalar field (MRI intensities), x-fastest order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    pub grid: VoxelGrid,
    pub data: Vec<f32>,
}

impl ImageVolume {
    pub fn new(grid: VoxelGrid, data: Vec<f32>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(CoreError::InvalidVolume(format!(
                "data length {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidVolume("non-finite intensity value".into()));
        }
        Ok(Self { grid, data })
    }

    pub fn filled(grid: VoxelGrid, value: f32) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }
}

/// Dense 3D integer label field plus a label dictionary. Label 0 is
/// background and never appears in the dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub grid: VoxelGrid,
    pub labels: Vec<u32>,
    pub dictionary: BTreeMap<u32, String>,
}

impl LabelMap {
    pub fn new(grid: VoxelGrid, labels: Vec<u32>, dictionary: BTreeMap<u32, String>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(CoreError::InvalidVolume(format!(
                "label data length {} does not match grid size {}",
                labels.len(),
                grid.len()
            )));
        }
        if dictionary.contains_key(&0) {
            return Err(CoreError::InvalidVolume("label 0 is reserved for background".into()));
        }
        for &l in labels.iter() {
            if l != 0 && !dictionary.contains_key(&l) {
                return Err(CoreError::InvalidVolume(format!("label {l} present in data but not in dictionary")));
            }
        }
        Ok(Self { grid, labels, dictionary })
    }

    /// Label id for a dictionary name, if present.
    pub fn label_id(&self, name: &str) -> Option<u32> {
        self.dictionary.iter().find(|(_, n)| n.as_str() == name).map(|(&id, _)| id)
    }

    /// Binary mask of one label.
    pub fn mask_of(&self, label_id: u32) -> Mask {
        Mask {
            grid: self.grid.clone(),
            data: self.labels.iter().map(|&l| l == label_id).collect(),
        }
    }

    /// Largest label id in the dictionary (0 when empty).
    pub fn max_label(&self) -> u32 {
        self.dictionary.keys().next_back().copied().unwrap_or(0)
    }
}

/// Binary foreground mask over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub grid: VoxelGrid,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(grid: VoxelGrid, data: Vec<bool>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(CoreError::InvalidVolume(format!(
                "mask length {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn empty(grid: VoxelGrid) -> Self {
        let n = grid.len();
        Self { grid, data: vec![false; n] }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn grid() -> VoxelGrid {
        VoxelGrid::from_spacing([4, 4, 4], [0.3; 3]).unwrap()
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(ImageVolume::new(grid(), vec![0.0; 5]).is_err());
        assert!(LabelMap::new(grid(), vec![0; 5], BTreeMap::new()).is_err());
    }

    #[test]
    fn rejects_nan() {
        let mut d = vec![0.0f32; 64];
        d[10] = f32::NAN;
        assert!(ImageVolume::new(grid(), d).is_err());
    }

    #[test]
    fn rejects_undeclared_label() {
        let mut l = vec![0u32; 64];
        l[3] = 5;
        assert!(LabelMap::new(grid(), l, BTreeMap::new()).is_err());
    }

    #[test]
    fn label_lookup_by_name() {
        let mut dict = BTreeMap::new();
        dict.insert(2u32, "WM".to_string());
        dict.insert(3u32, "WMH".to_string());
        let lm = LabelMap::new(grid(), vec![0; 64], dict).unwrap();
        assert_eq!(lm.label_id("WMH"), Some(3));
        assert_eq!(lm.label_id("GM"), None);
        assert_eq!(lm.max_label(), 3);
    }
}
