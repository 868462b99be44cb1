//! Connected-component labeling for segmentation cleanup.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::volume::Mask;

/// Neighborhood used for foreground connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Six,
    Eighteen,
    TwentySix,
}

impl Connectivity {
    fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::Eighteen => (1..=2).contains(&manhattan),
                        Connectivity::TwentySix => manhattan >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Components labeled 1..=K in decreasing size order; ties broken by the
/// smaller minimum linear voxel index. Background stays 0.
#[derive(Debug, Clone)]
pub struct ComponentLabels {
    pub labels: Vec<u32>,
    /// sizes[k-1] is the voxel count of component k.
    pub sizes: Vec<usize>,
}

pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> ComponentLabels {
    let grid = &mask.grid;
    let [nx, ny, nz] = grid.dims();
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; mask.data.len()];
    // (size, min linear index) per provisional component
    let mut stats: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..mask.data.len() {
        if !mask.data[start] || labels[start] != 0 {
            continue;
        }
        let provisional = stats.len() as u32 + 1;
        let mut size = 0usize;
        labels[start] = provisional;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let [x, y, z] = grid.coords(idx);
            for off in &offsets {
                let (qx, qy, qz) = (x as i64 + off[0], y as i64 + off[1], z as i64 + off[2]);
                if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i64 || qy >= ny as i64 || qz >= nz as i64 {
                    continue;
                }
                let qi = grid.linear(qx as usize, qy as usize, qz as usize);
                if mask.data[qi] && labels[qi] == 0 {
                    labels[qi] = provisional;
                    queue.push_back(qi);
                }
            }
        }
        stats.push((size, start));
    }

    // rank: decreasing size, then increasing first-seen voxel index
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| stats[b].0.cmp(&stats[a].0).then(stats[a].1.cmp(&stats[b].1)));
    let mut remap = vec![0u32; stats.len() + 1];
    for (rank, &old) in order.iter().enumerate() {
        remap[old + 1] = rank as u32 + 1;
    }
    for l in labels.iter_mut() {
        *l = remap[*l as usize];
    }
    let sizes = order.iter().map(|&old| stats[old].0).collect();
    ComponentLabels { labels, sizes }
}

/// Mask of the largest connected component (26-connectivity); an empty
/// mask stays empty.
pub fn largest_component(mask: &Mask) -> Mask {
    let cc = connected_components(mask, Connectivity::TwentySix);
    Mask {
        grid: mask.grid.clone(),
        data: cc.labels.iter().map(|&l| l == 1).collect(),
    }
}
