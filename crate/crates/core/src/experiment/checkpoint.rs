//! Binary field checkpoints.
//!
//! Layout, all little-endian: magic "LVLB1\0", version u16, x_dims u16,
//! x_points u32, v_points u32, x_extent f64, v_extent f64, time f64,
//! gamma f64, payload length u64, then the field values as f64,
//! x-outer and v-inner.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::phase_grid::{build_grid, DistributionField, GridSpec};

pub const MAGIC: &[u8; 6] = b"LVLB1\0";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 6 + 2 + 2 + 4 + 4 + 8 * 4 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: bad magic bytes, not a checkpoint")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported checkpoint version {version}")]
    Version { path: PathBuf, version: u16 },
    #[error("{path}: payload holds {found} values, header implies {expected}")]
    Length { path: PathBuf, found: u64, expected: u64 },
    #[error("{path}: truncated checkpoint")]
    Truncated { path: PathBuf },
    #[error("{path}: {message}")]
    Header { path: PathBuf, message: String },
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub field: DistributionField,
    pub gamma: f64,
}

pub fn encode_checkpoint(field: &DistributionField, gamma: f64) -> Vec<u8> {
    let spec = field.grid().spec();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.x_dims as u16).to_le_bytes());
    out.extend_from_slice(&(spec.x_points as u32).to_le_bytes());
    out.extend_from_slice(&(spec.v_points as u32).to_le_bytes());
    for v in [spec.x_extent, spec.v_extent, field.time(), gamma] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(field.values().len() as u64).to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// `path` only labels errors.
pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint, CheckpointError> {
    let p = || path.to_path_buf();
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic { path: p() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Truncated { path: p() });
    }
    let mut at = MAGIC.len();
    let mut take = |n: usize| {
        let s = &bytes[at..at + n];
        at += n;
        s
    };
    let version = u16::from_le_bytes(take(2).try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::Version { path: p(), version });
    }
    let x_dims = u16::from_le_bytes(take(2).try_into().unwrap()) as usize;
    let x_points = u32::from_le_bytes(take(4).try_into().unwrap()) as usize;
    let v_points = u32::from_le_bytes(take(4).try_into().unwrap()) as usize;
    let mut f = [0.0; 4];
    for v in f.iter_mut() {
        *v = f64::from_le_bytes(take(8).try_into().unwrap());
    }
    let [x_extent, v_extent, time, gamma] = f;
    let len = u64::from_le_bytes(take(8).try_into().unwrap());
    let spec = GridSpec { x_dims, x_extent, x_points, v_extent, v_points };
    let grid = build_grid(&spec).map_err(|e| CheckpointError::Header { path: p(), message: e.to_string() })?;
    let expected = grid.len() as u64;
    if len != expected {
        return Err(CheckpointError::Length { path: p(), found: len, expected });
    }
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != 8 * len {
        return Err(CheckpointError::Length { path: p(), found: payload.len() as u64 / 8, expected });
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let field = DistributionField::new(grid, time, values)
        .map_err(|e| CheckpointError::Header { path: p(), message: e.to_string() })?;
    Ok(Checkpoint { field, gamma })
}

pub fn write_checkpoint(path: &Path, field: &DistributionField, gamma: f64) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(&encode_checkpoint(field, gamma)).map_err(io)?;
    file.flush().map_err(io)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
    let mut bytes = Vec::new();
    std::fs::File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> DistributionField {
        let grid = build_grid(&GridSpec { x_dims: 1, x_extent: 3.0, x_points: 9, v_extent: 4.0, v_points: 8 }).unwrap();
        DistributionField::from_fn(grid, 2.5, |x, v| (x[0] - 0.3 * v[1]).sin() * 1e-7).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = field();
        let bytes = encode_checkpoint(&f, 0.375);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * f.values().len());
        let back = decode_checkpoint(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back.gamma.to_bits(), 0.375f64.to_bits());
        assert_eq!(back.field.time().to_bits(), 2.5f64.to_bits());
        assert!(back.field.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(encode_checkpoint(&back.field, back.gamma), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_checkpoint(&field(), 0.5);
        assert_eq!(&bytes[..6], b"LVLB1\0");
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 9);
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 8);
    }

    #[test]
    fn corruption_is_named() {
        let mut bytes = encode_checkpoint(&field(), 0.5);
        bytes[0] = b'X';
        let err = decode_checkpoint(&bytes, Path::new("dir/state.lvlb")).unwrap_err();
        assert!(matches!(err, CheckpointError::BadMagic { .. }));
        assert!(err.to_string().contains("dir/state.lvlb"));

        let mut short = encode_checkpoint(&field(), 0.5);
        short.truncate(short.len() - 8);
        assert!(matches!(decode_checkpoint(&short, Path::new("x")), Err(CheckpointError::Length { .. })));
    }
}
