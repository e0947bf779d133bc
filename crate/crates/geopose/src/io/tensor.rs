//! Flat binary tensor format for dense maps.
//!
//! Layout: magic `GPDM`, then six little-endian `u32` words (format version,
//! width, height, stride, joint count, limb count), then `f32` little-endian
//! planes in the order heatmaps, affinity fields, offsets — exactly the
//! in-memory plane order of [`DenseMaps`]. Externally produced network
//! outputs written in this layout can be fed straight into the decoder.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::posedecode::{DecodeError, DenseMaps};

pub const TENSOR_MAGIC: [u8; 4] = *b"GPDM";
pub const TENSOR_VERSION: u32 = 1;

/// Guard against absurd headers before allocating.
const MAX_CELLS: u64 = 1 << 28;

#[derive(Debug, Error)]
pub enum TensorIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a dense-map tensor (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported tensor version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },
    #[error("{path}: truncated tensor, expected {expected} bytes of payload, got {got}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("{path}: implausible dimensions {width}x{height}")]
    ImplausibleDims {
        path: PathBuf,
        width: u32,
        height: u32,
    },
    #[error("{path}: {source}")]
    Shape {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },
}

fn write_plane(out: &mut Vec<u8>, plane: &[f32]) {
    out.reserve(plane.len() * 4);
    for &v in plane {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes dense maps to the binary layout.
pub fn dense_maps_to_bytes(maps: &DenseMaps) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        28 + 4
            * (maps.heatmap_planes().len() + maps.paf_planes().len() + maps.offset_planes().len()),
    );
    out.extend_from_slice(&TENSOR_MAGIC);
    for word in [
        TENSOR_VERSION,
        maps.width() as u32,
        maps.height() as u32,
        maps.stride() as u32,
        maps.joint_count() as u32,
        maps.limb_count() as u32,
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    write_plane(&mut out, maps.heatmap_planes());
    write_plane(&mut out, maps.paf_planes());
    write_plane(&mut out, maps.offset_planes());
    out
}

/// Parses dense maps from the binary layout.
pub fn dense_maps_from_bytes(
    bytes: &[u8],
    path: impl AsRef<Path>,
) -> Result<DenseMaps, TensorIoError> {
    let path = path.as_ref();
    let err_path = || path.to_path_buf();
    if bytes.len() < 28 {
        return Err(TensorIoError::Truncated {
            path: err_path(),
            expected: 28,
            got: bytes.len(),
        });
    }
    if bytes[0..4] != TENSOR_MAGIC {
        return Err(TensorIoError::BadMagic { path: err_path() });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != TENSOR_VERSION {
        return Err(TensorIoError::UnsupportedVersion {
            path: err_path(),
            version,
        });
    }
    let (width, height, stride, joints, limbs) = (word(1), word(2), word(3), word(4), word(5));
    if width as u64 * height as u64 > MAX_CELLS {
        return Err(TensorIoError::ImplausibleDims {
            path: err_path(),
            width,
            height,
        });
    }
    let cells = width as usize * height as usize;
    let plane_counts = [
        joints as usize * cells,
        2 * limbs as usize * cells,
        3 * (joints as usize).saturating_sub(1) * cells,
    ];
    let payload = &bytes[28..];
    let expected: usize = plane_counts.iter().sum::<usize>() * 4;
    if payload.len() != expected {
        return Err(TensorIoError::Truncated {
            path: err_path(),
            expected,
            got: payload.len(),
        });
    }

    let mut cursor = 0usize;
    let mut take = |count: usize| -> Vec<f32> {
        let slice = &payload[cursor..cursor + 4 * count];
        cursor += 4 * count;
        slice
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let heatmaps = take(plane_counts[0]);
    let pafs = take(plane_counts[1]);
    let offsets = take(plane_counts[2]);

    DenseMaps::from_planes(
        width as usize,
        height as usize,
        stride as usize,
        joints as usize,
        limbs as usize,
        heatmaps,
        pafs,
        offsets,
    )
    .map_err(|source| TensorIoError::Shape {
        path: err_path(),
        source,
    })
}

pub fn write_dense_maps(maps: &DenseMaps, path: impl AsRef<Path>) -> Result<(), TensorIoError> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|source| TensorIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&dense_maps_to_bytes(maps))
        .map_err(|source| TensorIoError::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn read_dense_maps(path: impl AsRef<Path>) -> Result<DenseMaps, TensorIoError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| TensorIoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    dense_maps_from_bytes(&bytes, path)
}
