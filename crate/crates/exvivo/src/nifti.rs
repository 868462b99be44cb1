//! Single-file NIfTI-1 reader and writer (.nii and .nii.gz).
//!
//! Scope is deliberately narrow: 3D volumes, datatypes u8/i16/i32/f32,
//! optional gzip, little- or big-endian headers on read, little-endian on
//! write. Two-file NIfTI-1 and NIfTI-2 are rejected with explicit errors.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use exvivo_core::{ImageVolume, LabelMap, VoxelGrid};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{AppError, Result};

const HEADER_LEN: usize = 348;
const VOX_OFFSET: usize = 352;

/// On-disk sample type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    U8,
    I16,
    I32,
    F32,
}

impl Datatype {
    pub const ALL: [Datatype; 4] = [Datatype::U8, Datatype::I16, Datatype::I32, Datatype::F32];

    fn code(self) -> i16 {
        match self {
            Datatype::U8 => 2,
            Datatype::I16 => 4,
            Datatype::I32 => 8,
            Datatype::F32 => 16,
        }
    }

    fn from_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(Datatype::U8),
            4 => Some(Datatype::I16),
            8 => Some(Datatype::I32),
            16 => Some(Datatype::F32),
            _ => None,
        }
    }

    fn bytes(self) -> usize {
        match self {
            Datatype::U8 => 1,
            Datatype::I16 => 2,
            Datatype::I32 => 4,
            Datatype::F32 => 4,
        }
    }

    /// Largest label id representable without loss.
    pub fn max_label(self) -> u32 {
        match self {
            Datatype::U8 => u8::MAX as u32,
            Datatype::I16 => i16::MAX as u32,
            Datatype::I32 => i32::MAX as u32,
            Datatype::F32 => 1 << 24, // exact integer range of f32
        }
    }
}

struct Parsed {
    grid: VoxelGrid,
    datatype: Datatype,
    scl: Option<(f64, f64)>,
    /// raw sample bytes, already endian-normalized to little-endian
    data: Vec<u8>,
}

/// Read an intensity volume; scl_slope/scl_inter are applied when set.
pub fn read_image(path: &Path) -> Result<ImageVolume> {
    let p = parse(path)?;
    let n = p.grid.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let raw = sample(&p, i);
        let v = match p.scl {
            Some((slope, inter)) => raw * slope + inter,
            None => raw,
        };
        out.push(v as f32);
    }
    ImageVolume::new(p.grid, out).map_err(Into::into)
}

/// Read a label map. Requires an integer datatype with no intensity scaling;
/// ids missing from `dictionary` get synthesized `label_<id>` names.
pub fn read_label_map(path: &Path, dictionary: Option<BTreeMap<u32, String>>) -> Result<LabelMap> {
    let p = parse(path)?;
    if p.datatype == Datatype::F32 {
        return Err(AppError::nifti(path, "float volume cannot be read as a label map; use an integer datatype"));
    }
    if p.scl.is_some() {
        return Err(AppError::nifti(path, "label map must not carry intensity scaling (scl_slope/scl_inter)"));
    }
    let n = p.grid.len();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let v = sample(&p, i);
        if v < 0.0 {
            return Err(AppError::nifti(path, format!("negative label value {v}")));
        }
        labels.push(v as u32);
    }
    let mut dict = dictionary.unwrap_or_default();
    for &l in &labels {
        if l != 0 {
            dict.entry(l).or_insert_with(|| format!("label_{l}"));
        }
    }
    LabelMap::new(p.grid, labels, dict).map_err(Into::into)
}

/// Write an intensity volume as float-32.
pub fn write_image(volume: &ImageVolume, path: &Path) -> Result<()> {
    let mut body = Vec::with_capacity(volume.data.len() * 4);
    for &v in &volume.data {
        body.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &volume.grid, Datatype::F32, &body)
}

/// Write a label map, picking the smallest integer datatype that fits.
pub fn write_label_map(map: &LabelMap, path: &Path) -> Result<()> {
    let max = map.max_label();
    let dt = if max <= Datatype::U8.max_label() {
        Datatype::U8
    } else if max <= Datatype::I16.max_label() {
        Datatype::I16
    } else {
        Datatype::I32
    };
    write_label_map_as(map, path, dt)
}

/// Write a label map with an explicit datatype; errors if any id overflows.
pub fn write_label_map_as(map: &LabelMap, path: &Path, datatype: Datatype) -> Result<()> {
    let max = map.max_label();
    if max > datatype.max_label() {
        return Err(AppError::nifti(
            path,
            format!("label {max} exceeds the {datatype:?} range"),
        ));
    }
    let mut body = Vec::with_capacity(map.labels.len() * datatype.bytes());
    for &l in &map.labels {
        match datatype {
            Datatype::U8 => body.push(l as u8),
            Datatype::I16 => body.extend_from_slice(&(l as i16).to_le_bytes()),
            Datatype::I32 => body.extend_from_slice(&(l as i32).to_le_bytes()),
            Datatype::F32 => body.extend_from_slice(&(l as f32).to_le_bytes()),
        }
    }
    write_file(path, &map.grid, datatype, &body)
}

fn parse(path: &Path) -> Result<Parsed> {
    let mut file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(|e| AppError::io(path, e))?;
    let mut bytes = Vec::new();
    if n == 2 && magic == [0x1f, 0x8b] {
        let mut dec = GzDecoder::new(std::io::Cursor::new(magic).chain(file));
        dec.read_to_end(&mut bytes).map_err(|e| AppError::io(path, e))?;
    } else {
        bytes.extend_from_slice(&magic[..n]);
        file.read_to_end(&mut bytes).map_err(|e| AppError::io(path, e))?;
    }
    if bytes.len() < HEADER_LEN {
        return Err(AppError::nifti(path, "file shorter than a NIfTI-1 header"));
    }

    let sizeof_hdr_le = i32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let swap = match sizeof_hdr_le {
        348 => false,
        x if x.swap_bytes() == 348 => true,
        540 => return Err(AppError::nifti(path, "NIfTI-2 is not supported")),
        x if x.swap_bytes() == 540 => return Err(AppError::nifti(path, "NIfTI-2 is not supported")),
        _ => return Err(AppError::nifti(path, "bad header (sizeof_hdr != 348)")),
    };
    match &bytes[344..348] {
        b"n+1\0" => {}
        b"ni1\0" => return Err(AppError::nifti(path, "unsupported two-file NIfTI")),
        _ => return Err(AppError::nifti(path, "bad magic (expected \"n+1\\0\")")),
    }

    let i16_at = |off: usize| -> i16 {
        let v = i16::from_le_bytes(bytes[off..off + 2].try_into().unwrap());
        if swap { v.swap_bytes() } else { v }
    };
    let f32_at = |off: usize| -> f32 {
        let v = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        f32::from_bits(if swap { v.swap_bytes() } else { v })
    };

    let ndim = i16_at(40);
    if !(1..=7).contains(&ndim) {
        return Err(AppError::nifti(path, format!("bad dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for i in 0..3 {
        let d = if (i as i16) < ndim { i16_at(40 + 2 * (i + 1)) } else { 1 };
        if d < 1 {
            return Err(AppError::nifti(path, format!("bad dim[{}] = {d}", i + 1)));
        }
        dims[i] = d as usize;
    }
    for i in 3..ndim as usize {
        let d = i16_at(40 + 2 * (i + 1));
        if d > 1 {
            return Err(AppError::nifti(path, "4D+ volumes are not supported"));
        }
    }

    let datatype = Datatype::from_code(i16_at(70))
        .ok_or_else(|| AppError::nifti(path, format!("unsupported datatype code {}", i16_at(70))))?;

    let qfac = {
        let v = f32_at(76) as f64;
        if v == -1.0 { -1.0 } else { 1.0 }
    };
    let mut pixdim = [0f64; 3];
    for i in 0..3 {
        pixdim[i] = f32_at(76 + 4 * (i + 1)) as f64;
        if !(pixdim[i] > 0.0) {
            return Err(AppError::nifti(path, format!("non-positive pixdim[{}]", i + 1)));
        }
    }

    let vox_offset = f32_at(108) as usize;
    if vox_offset < HEADER_LEN {
        return Err(AppError::nifti(path, "vox_offset inside the header"));
    }
    let slope = f32_at(112) as f64;
    let inter = f32_at(116) as f64;
    let scl = if slope != 0.0 && !(slope == 1.0 && inter == 0.0) {
        Some((slope, inter))
    } else {
        None
    };

    let qform_code = i16_at(252);
    let sform_code = i16_at(254);
    let affine = if sform_code > 0 {
        let mut a = [[0f64; 4]; 4];
        for (r, row) in a.iter_mut().take(3).enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = f32_at(280 + 16 * r + 4 * c) as f64;
            }
        }
        a[3] = [0.0, 0.0, 0.0, 1.0];
        a
    } else if qform_code > 0 {
        quaternion_affine(
            f32_at(256) as f64,
            f32_at(260) as f64,
            f32_at(264) as f64,
            [f32_at(268) as f64, f32_at(272) as f64, f32_at(276) as f64],
            pixdim,
            qfac,
        )
    } else {
        [
            [pixdim[0], 0.0, 0.0, 0.0],
            [0.0, pixdim[1], 0.0, 0.0],
            [0.0, 0.0, pixdim[2], 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    };
    let grid = VoxelGrid::from_affine_spacing(dims, affine, pixdim)
        .map_err(|e| AppError::nifti(path, format!("inconsistent geometry: {e}")))?;

    let need = grid.len() * datatype.bytes();
    if bytes.len() < vox_offset + need {
        return Err(AppError::nifti(
            path,
            format!("data truncated: need {need} bytes at offset {vox_offset}, file has {}", bytes.len()),
        ));
    }
    let mut data = bytes[vox_offset..vox_offset + need].to_vec();
    if swap && datatype.bytes() > 1 {
        for chunk in data.chunks_mut(datatype.bytes()) {
            chunk.reverse();
        }
    }
    Ok(Parsed { grid, datatype, scl, data })
}

fn quaternion_affine(b: f64, c: f64, d: f64, offset: [f64; 3], pixdim: [f64; 3], qfac: f64) -> [[f64; 4]; 4] {
    let a = (1.0 - b * b - c * c - d * d).max(0.0).sqrt();
    let r = [
        [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
        [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
        [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - b * b - c * c],
    ];
    let mut m = [[0f64; 4]; 4];
    for i in 0..3 {
        m[i][0] = r[i][0] * pixdim[0];
        m[i][1] = r[i][1] * pixdim[1];
        m[i][2] = r[i][2] * pixdim[2] * qfac;
        m[i][3] = offset[i];
    }
    m[3] = [0.0, 0.0, 0.0, 1.0];
    m
}

fn sample(p: &Parsed, i: usize) -> f64 {
    let w = p.datatype.bytes();
    let b = &p.data[i * w..(i + 1) * w];
    match p.datatype {
        Datatype::U8 => b[0] as f64,
        Datatype::I16 => i16::from_le_bytes(b.try_into().unwrap()) as f64,
        Datatype::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
        Datatype::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
    }
}

fn write_file(path: &Path, grid: &VoxelGrid, datatype: Datatype, body: &[u8]) -> Result<()> {
    let mut hdr = vec![0u8; VOX_OFFSET];
    hdr[0..4].copy_from_slice(&348i32.to_le_bytes());

    let dims = grid.dims();
    put_i16(&mut hdr, 40, 3);
    for i in 0..3 {
        let d = i16::try_from(dims[i])
            .map_err(|_| AppError::nifti(path, format!("dim {} exceeds the NIfTI-1 limit", dims[i])))?;
        put_i16(&mut hdr, 40 + 2 * (i + 1), d);
        put_i16(&mut hdr, 40 + 2 * (i + 4), 1); // dim[4..6]
    }
    put_i16(&mut hdr, 54, 1); // dim[7]

    put_i16(&mut hdr, 70, datatype.code());
    put_i16(&mut hdr, 72, (datatype.bytes() * 8) as i16);

    put_f32(&mut hdr, 76, 1.0); // qfac
    let spacing = grid.spacing();
    for i in 0..3 {
        put_f32(&mut hdr, 76 + 4 * (i + 1), spacing[i] as f32);
    }
    put_f32(&mut hdr, 108, VOX_OFFSET as f32);
    put_f32(&mut hdr, 112, 1.0); // scl_slope
    hdr[123] = 2; // xyzt_units: millimeters

    put_i16(&mut hdr, 252, 0); // qform_code
    put_i16(&mut hdr, 254, 1); // sform_code: scanner anatomical
    let aff = grid.affine();
    for r in 0..3 {
        for c in 0..4 {
            put_f32(&mut hdr, 280 + 16 * r + 4 * c, aff[r][c] as f32);
        }
    }
    hdr[344..348].copy_from_slice(b"n+1\0");

    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let mut sink: Box<dyn Write> = if gz {
        Box::new(GzEncoder::new(file, Compression::default()))
    } else {
        Box::new(file)
    };
    sink.write_all(&hdr).map_err(|e| AppError::io(path, e))?;
    sink.write_all(body).map_err(|e| AppError::io(path, e))?;
    sink.flush().map_err(|e| AppError::io(path, e))?;
    Ok(())
}

fn put_i16(buf: &mut [u8], off: usize, v: i16) {
    buf[off..off + 2].copy_from_slice(&v.to_le_bytes());
}

fn put_f32(buf: &mut [u8], off: usize, v: f32) {
    buf[off..off + 4].copy_from_slice(&v.to_le_bytes());
}
