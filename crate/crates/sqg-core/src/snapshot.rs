//! Binary field snapshots.
//!
//! Layout (little-endian): magic `"SQGF"`, format version `u32`, grid size
//! `n: u32`, `box_length: f64`, `kind: u8` (0 = physical samples, 1 = spectral
//! coefficients as interleaved re/im), then the payload over the full n-by-n
//! lattice in row-major order. Readers validate the complete header and the
//! payload length before allocating or parsing any data.

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::Grid;
use num_complex::Complex64;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"SQGF";
pub const FORMAT_VERSION: u32 = 1;
/// Cap on the stored grid size; keeps hostile headers from requesting huge
/// allocations before the length check can reject them.
pub const MAX_SNAPSHOT_N: u32 = 16384;

const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 1;

#[derive(Debug, Clone)]
pub enum Snapshot {
    Physical(PhysicalField),
    Spectral(SpectralField),
}

impl Snapshot {
    pub fn grid(&self) -> Grid {
        match self {
            Snapshot::Physical(f) => f.grid,
            Snapshot::Spectral(f) => f.grid,
        }
    }
}

fn header(grid: Grid, kind: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length.to_le_bytes());
    out.push(kind);
    out
}

pub fn encode_physical(f: &PhysicalField) -> Vec<u8> {
    let mut out = header(f.grid, 0);
    out.reserve(f.data.len() * 8);
    for v in &f.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_spectral(f: &SpectralField) -> Vec<u8> {
    let mut out = header(f.grid, 1);
    out.reserve(f.coeffs.len() * 16);
    for c in &f.coeffs {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

/// Parse a snapshot from raw bytes, validating magic, version, header fields,
/// and the exact payload length before touching the payload.
pub fn read_snapshot_bytes(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SnapshotLength {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::SnapshotMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::SnapshotVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if n < 8 || n % 2 != 0 || n > MAX_SNAPSHOT_N {
        return Err(Error::SnapshotHeader {
            field: "n".into(),
            reason: format!("{n} outside the supported even range [8, {MAX_SNAPSHOT_N}]"),
        });
    }
    let box_length = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if !(box_length.is_finite() && box_length > 0.0) {
        return Err(Error::SnapshotHeader {
            field: "box_length".into(),
            reason: format!("{box_length} is not finite and positive"),
        });
    }
    let kind = bytes[20];
    if kind > 1 {
        return Err(Error::SnapshotHeader {
            field: "kind".into(),
            reason: format!("{kind} is not a known payload kind (0 physical, 1 spectral)"),
        });
    }
    let cells = n as usize * n as usize;
    let expected = cells * if kind == 0 { 8 } else { 16 };
    let found = bytes.len() - HEADER_LEN;
    if found != expected {
        return Err(Error::SnapshotLength { expected, found });
    }
    let grid = Grid::new(n as usize, box_length)?;
    let payload = &bytes[HEADER_LEN..];

    if kind == 0 {
        let mut data = Vec::with_capacity(cells);
        for (i, chunk) in payload.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::SnapshotNonFinite { index: i });
            }
            data.push(v);
        }
        Ok(Snapshot::Physical(PhysicalField { grid, data }))
    } else {
        let mut coeffs = Vec::with_capacity(cells);
        let mut scale = 0.0_f64;
        for (i, chunk) in payload.chunks_exact(16).enumerate() {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::SnapshotNonFinite { index: i });
            }
            scale = scale.max(re.abs()).max(im.abs());
            coeffs.push(Complex64::new(re, im));
        }
        let field = SpectralField { grid, coeffs };
        let defect = field.hermitian_defect();
        if defect > 1e-10 * scale.max(1.0) {
            return Err(Error::SnapshotNotHermitian { defect });
        }
        Ok(Snapshot::Spectral(field))
    }
}

pub fn write_snapshot_physical(f: &PhysicalField, path: &Path) -> Result<()> {
    std::fs::write(path, encode_physical(f))?;
    Ok(())
}

pub fn write_snapshot_spectral(f: &SpectralField, path: &Path) -> Result<()> {
    std::fs::write(path, encode_spectral(f))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    read_snapshot_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::make_band_field;
    use crate::grid::TWO_PI;

    fn grid() -> Grid {
        Grid::new(16, TWO_PI).unwrap()
    }

    #[test]
    fn spectral_round_trip_is_bitwise_exact() {
        let f = make_band_field(grid(), 1.0, 5.0, 42);
        let bytes = encode_spectral(&f);
        match read_snapshot_bytes(&bytes).unwrap() {
            Snapshot::Spectral(g) => {
                assert_eq!(f.grid, g.grid);
                for (a, b) in f.coeffs.iter().zip(g.coeffs.iter()) {
                    assert_eq!(a.re.to_bits(), b.re.to_bits());
                    assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
            other => panic!("expected spectral payload, got {other:?}"),
        }
    }

    #[test]
    fn physical_round_trip_via_files_is_bitwise_exact() {
        let f = crate::field::inverse_transform(&make_band_field(grid(), 1.0, 4.0, 7));
        let path = std::env::temp_dir().join(format!("sqgf_rt_{}.snap", std::process::id()));
        write_snapshot_physical(&f, &path).unwrap();
        let back = read_snapshot(&path).unwrap();
        std::fs::remove_file(&path).ok();
        match back {
            Snapshot::Physical(g) => {
                assert_eq!(f.grid, g.grid);
                for (a, b) in f.data.iter().zip(g.data.iter()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            other => panic!("expected physical payload, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_magic_is_rejected_at_offset_zero() {
        let mut bytes = encode_spectral(&SpectralField::zeros(grid()));
        bytes[0] = b'X';
        let err = read_snapshot_bytes(&bytes).unwrap_err();
        assert!(matches!(err, Error::SnapshotMagic));
        assert!(err.to_string().contains("offset 0"), "message: {err}");
    }

    #[test]
    fn future_version_is_an_explicit_error() {
        let mut bytes = encode_spectral(&SpectralField::zeros(grid()));
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        match read_snapshot_bytes(&bytes).unwrap_err() {
            Error::SnapshotVersion { found, expected } => {
                assert_eq!(found, 2);
                assert_eq!(expected, 1);
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_and_padded_payloads_are_rejected() {
        let bytes = encode_spectral(&SpectralField::zeros(grid()));
        let err = read_snapshot_bytes(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::SnapshotLength { .. }), "got {err:?}");
        let mut padded = bytes.clone();
        padded.push(0);
        let err = read_snapshot_bytes(&padded).unwrap_err();
        assert!(matches!(err, Error::SnapshotLength { .. }), "got {err:?}");
    }

    #[test]
    fn hostile_header_sizes_fail_before_allocation() {
        let mut bytes = encode_spectral(&SpectralField::zeros(grid()));
        bytes[8..12].copy_from_slice(&1_000_000_000u32.to_le_bytes());
        match read_snapshot_bytes(&bytes).unwrap_err() {
            Error::SnapshotHeader { field, .. } => assert_eq!(field, "n"),
            other => panic!("expected header error, got {other:?}"),
        }
        bytes[8..12].copy_from_slice(&15u32.to_le_bytes());
        assert!(matches!(
            read_snapshot_bytes(&bytes).unwrap_err(),
            Error::SnapshotHeader { .. }
        ));
    }

    #[test]
    fn bad_kind_and_box_length_are_header_errors() {
        let mut bytes = encode_spectral(&SpectralField::zeros(grid()));
        bytes[20] = 7;
        match read_snapshot_bytes(&bytes).unwrap_err() {
            Error::SnapshotHeader { field, .. } => assert_eq!(field, "kind"),
            other => panic!("expected kind error, got {other:?}"),
        }
        let mut bytes = encode_spectral(&SpectralField::zeros(grid()));
        bytes[12..20].copy_from_slice(&f64::NAN.to_le_bytes());
        match read_snapshot_bytes(&bytes).unwrap_err() {
            Error::SnapshotHeader { field, .. } => assert_eq!(field, "box_length"),
            other => panic!("expected box_length error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_payload_entries_are_located() {
        let f = crate::field::inverse_transform(&make_band_field(grid(), 1.0, 4.0, 9));
        let mut bytes = encode_physical(&f);
        let idx = 37;
        let off = 21 + idx * 8;
        bytes[off..off + 8].copy_from_slice(&f64::INFINITY.to_le_bytes());
        match read_snapshot_bytes(&bytes).unwrap_err() {
            Error::SnapshotNonFinite { index } => assert_eq!(index, idx),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_spectral_payload_is_rejected() {
        let mut f = SpectralField::zeros(grid());
        // a lone positive-frequency coefficient with no mirror partner
        f.coeffs[1 * 16 + 2] = Complex64::new(1.0, 0.5);
        let bytes = encode_spectral(&f);
        match read_snapshot_bytes(&bytes).unwrap_err() {
            Error::SnapshotNotHermitian { defect } => assert!(defect > 0.1),
            other => panic!("expected symmetry error, got {other:?}"),
        }
    }
}
