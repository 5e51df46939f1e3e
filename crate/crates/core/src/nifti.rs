//! NIfTI-1 subset reader and writer.
//!
//! Supported subset: single-file volumes (`.nii`, gzip container by `.gz`
//! extension), little-endian byte order, datatype codes 2 (u8), 4 (i16),
//! 8 (i32), 16 (f32) and 64 (f64). `scl_slope`/`scl_inter` are applied on
//! read when the slope is finite and nonzero. Orientation fields are read
//! past but ignored — all downstream computation is voxel-space, and grids
//! are required to match exactly instead of being resampled.
//!
//! Note that the format stores voxel spacing as `f32` (`pixdim`); spacings
//! survive a write→read round trip exactly only when representable in `f32`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volume::{ScalarKind, Volume3D};

const HEADER_SIZE: usize = 348;
/// Header + 4-byte extension flag; data starts here in files we write.
const DEFAULT_VOX_OFFSET: usize = 352;

mod offset {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const MAGIC: usize = 344;
}

fn has_gz_extension(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn read_i16(bytes: &[u8], at: usize) -> i16 {
    i16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_i32(bytes: &[u8], at: usize) -> i32 {
    i32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_f32(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

struct ParsedHeader {
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
    kind: ScalarKind,
    vox_offset: usize,
    scl_slope: f32,
    scl_inter: f32,
}

fn parse_header(bytes: &[u8]) -> Result<ParsedHeader> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::CorruptHeader(format!(
            "file holds {} bytes, need at least {HEADER_SIZE}",
            bytes.len()
        )));
    }

    let sizeof_hdr = read_i32(bytes, offset::SIZEOF_HDR);
    if sizeof_hdr != HEADER_SIZE as i32 {
        return Err(Error::CorruptHeader(format!(
            "sizeof_hdr = {sizeof_hdr}, expected {HEADER_SIZE} (big-endian files are unsupported)"
        )));
    }

    let magic = &bytes[offset::MAGIC..offset::MAGIC + 4];
    if magic != b"n+1\0" && magic != b"ni1\0" {
        return Err(Error::CorruptHeader(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }

    let ndim = read_i16(bytes, offset::DIM);
    if !(1..=7).contains(&ndim) {
        return Err(Error::CorruptHeader(format!("dim[0] = {ndim}")));
    }
    let mut dim = [1usize; 7];
    for (i, d) in dim.iter_mut().enumerate().take(ndim as usize) {
        let v = read_i16(bytes, offset::DIM + 2 * (i + 1));
        if v < 1 {
            return Err(Error::CorruptHeader(format!("dim[{}] = {v}", i + 1)));
        }
        *d = v as usize;
    }
    // Trailing dims of size 1 are tolerated; genuine 4D+ payloads are not.
    if dim[3..].iter().any(|&d| d > 1) {
        return Err(Error::CorruptHeader(format!(
            "volume is not 3D: dims {dim:?}"
        )));
    }

    let kind = ScalarKind::from_code(read_i16(bytes, offset::DATATYPE))?;

    let mut spacing = [0f64; 3];
    for (i, s) in spacing.iter_mut().enumerate() {
        let p = read_f32(bytes, offset::PIXDIM + 4 * (i + 1));
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::CorruptHeader(format!("pixdim[{}] = {p}", i + 1)));
        }
        *s = p as f64;
    }

    let vox_offset = read_f32(bytes, offset::VOX_OFFSET);
    if !vox_offset.is_finite() || vox_offset < HEADER_SIZE as f32 || vox_offset.fract() != 0.0 {
        return Err(Error::CorruptHeader(format!("vox_offset = {vox_offset}")));
    }

    Ok(ParsedHeader {
        dims: (dim[0], dim[1], dim[2]),
        spacing: (spacing[0], spacing[1], spacing[2]),
        kind,
        vox_offset: vox_offset as usize,
        scl_slope: read_f32(bytes, offset::SCL_SLOPE),
        scl_inter: read_f32(bytes, offset::SCL_INTER),
    })
}

fn decode_payload(payload: &[u8], kind: ScalarKind, nvox: usize) -> Result<Vec<f64>> {
    let need = nvox * kind.byte_size();
    if payload.len() < need {
        return Err(Error::DimensionMismatch {
            expected: nvox,
            actual: payload.len() / kind.byte_size(),
        });
    }
    let payload = &payload[..need];
    let data = match kind {
        ScalarKind::U8 => payload.iter().map(|&b| b as f64).collect(),
        ScalarKind::I16 => payload
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        ScalarKind::I32 => payload
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        ScalarKind::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        ScalarKind::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect(),
    };
    Ok(data)
}

/// Parse a NIfTI-1 volume from in-memory bytes (already decompressed).
pub fn parse_volume(bytes: &[u8]) -> Result<Volume3D> {
    let header = parse_header(bytes)?;
    if bytes.len() < header.vox_offset {
        return Err(Error::CorruptHeader(format!(
            "vox_offset {} beyond end of file ({} bytes)",
            header.vox_offset,
            bytes.len()
        )));
    }
    let nvox = header.dims.0 * header.dims.1 * header.dims.2;
    let mut data = decode_payload(&bytes[header.vox_offset..], header.kind, nvox)?;

    // NaN slopes occur in the wild; treat them like the "no scaling" 0 value.
    let slope = header.scl_slope as f64;
    let inter = header.scl_inter as f64;
    if slope.is_finite() && slope != 0.0 {
        for v in &mut data {
            *v = slope * *v + inter;
        }
    }

    let volume = Volume3D::new(header.dims, header.spacing, data)?.with_scalar_kind(header.kind);
    volume.ensure_finite("volume payload")?;
    Ok(volume)
}

/// Read a volume from a `.nii` or `.nii.gz` file.
pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if has_gz_extension(path) {
        let mut out = Vec::new();
        MultiGzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        out
    } else {
        raw
    };
    parse_volume(&bytes)
}

fn encode_header(v: &Volume3D, kind: ScalarKind) -> [u8; HEADER_SIZE] {
    let mut h = [0u8; HEADER_SIZE];
    h[offset::SIZEOF_HDR..offset::SIZEOF_HDR + 4]
        .copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());

    let (nx, ny, nz) = v.dims();
    let dim: [i16; 8] = [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        h[offset::DIM + 2 * i..offset::DIM + 2 * i + 2].copy_from_slice(&d.to_le_bytes());
    }

    h[offset::DATATYPE..offset::DATATYPE + 2].copy_from_slice(&kind.code().to_le_bytes());
    let bitpix = (kind.byte_size() * 8) as i16;
    h[offset::BITPIX..offset::BITPIX + 2].copy_from_slice(&bitpix.to_le_bytes());

    let (sx, sy, sz) = v.spacing();
    let pixdim: [f32; 8] = [1.0, sx as f32, sy as f32, sz as f32, 1.0, 1.0, 1.0, 1.0];
    for (i, p) in pixdim.iter().enumerate() {
        h[offset::PIXDIM + 4 * i..offset::PIXDIM + 4 * i + 4].copy_from_slice(&p.to_le_bytes());
    }

    h[offset::VOX_OFFSET..offset::VOX_OFFSET + 4]
        .copy_from_slice(&(DEFAULT_VOX_OFFSET as f32).to_le_bytes());
    h[offset::SCL_SLOPE..offset::SCL_SLOPE + 4].copy_from_slice(&1f32.to_le_bytes());
    h[offset::SCL_INTER..offset::SCL_INTER + 4].copy_from_slice(&0f32.to_le_bytes());
    h[offset::MAGIC..offset::MAGIC + 4].copy_from_slice(b"n+1\0");
    h
}

fn encode_payload(v: &Volume3D, kind: ScalarKind) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(v.len() * kind.byte_size());
    if let Some((lo, hi)) = kind.integer_range() {
        for &value in v.data() {
            let rounded = value.round();
            if !(lo..=hi).contains(&rounded) {
                return Err(Error::RangeOverflow { value, kind });
            }
            match kind {
                ScalarKind::U8 => out.push(rounded as u8),
                ScalarKind::I16 => out.extend_from_slice(&(rounded as i16).to_le_bytes()),
                ScalarKind::I32 => out.extend_from_slice(&(rounded as i32).to_le_bytes()),
                _ => unreachable!(),
            }
        }
    } else {
        for &value in v.data() {
            match kind {
                ScalarKind::F32 => out.extend_from_slice(&(value as f32).to_le_bytes()),
                ScalarKind::F64 => out.extend_from_slice(&value.to_le_bytes()),
                _ => unreachable!(),
            }
        }
    }
    Ok(out)
}

/// Serialize a volume to NIfTI-1 bytes (uncompressed).
///
/// Integer targets store values rounded to the nearest integer and fail with
/// [`Error::RangeOverflow`] when a value falls outside the representable
/// range; float targets are always admissible.
pub fn volume_to_bytes(v: &Volume3D, kind: ScalarKind) -> Result<Vec<u8>> {
    let payload = encode_payload(v, kind)?;
    let mut bytes = Vec::with_capacity(DEFAULT_VOX_OFFSET + payload.len());
    bytes.extend_from_slice(&encode_header(v, kind));
    bytes.extend_from_slice(&[0u8; 4]); // no header extensions
    bytes.extend_from_slice(&payload);
    Ok(bytes)
}

/// Write a volume to a `.nii` or `.nii.gz` file with the requested scalar kind.
pub fn write_volume(v: &Volume3D, path: impl AsRef<Path>, kind: ScalarKind) -> Result<()> {
    let path = path.as_ref();
    if (v.dims().0).max(v.dims().1).max(v.dims().2) > i16::MAX as usize {
        return Err(Error::InvalidVolume(format!(
            "dims {:?} exceed the format's 16-bit dimension fields",
            v.dims()
        )));
    }
    let bytes = volume_to_bytes(v, kind)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if has_gz_extension(path) {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?;
    } else {
        let mut file = file;
        file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_volume(dims: (usize, usize, usize)) -> Volume3D {
        let n = dims.0 * dims.1 * dims.2;
        let data = (0..n).map(|i| i as f64 * 0.5 - 3.0).collect();
        Volume3D::new(dims, (1.0, 2.0, 0.5), data).unwrap()
    }

    #[test]
    fn zero_volume_roundtrip_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zeros.nii");
        let v = Volume3D::constant((8, 8, 8), (1.0, 1.0, 1.0), 0.0);
        write_volume(&v, &path, ScalarKind::F32).unwrap();
        let back = read_volume(&path).unwrap();
        assert_eq!(back.dims(), (8, 8, 8));
        assert!(back.data().iter().all(|&x| x == 0.0));
        assert_eq!(back.scalar_kind(), ScalarKind::F32);
    }

    #[test]
    fn f64_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["ramp.nii", "ramp.nii.gz"] {
            let path = dir.path().join(name);
            let v = ramp_volume((4, 3, 5));
            write_volume(&v, &path, ScalarKind::F64).unwrap();
            let back = read_volume(&path).unwrap();
            assert_eq!(back.dims(), v.dims());
            assert_eq!(back.spacing(), v.spacing());
            assert_eq!(back.data(), v.data());
        }
    }

    #[test]
    fn i16_roundtrip_preserves_integral_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ints.nii");
        let data: Vec<f64> = (0..27).map(|i| (i * 37 % 200) as f64 - 100.0).collect();
        let v = Volume3D::new((3, 3, 3), (1.0, 1.0, 1.0), data).unwrap();
        write_volume(&v, &path, ScalarKind::I16).unwrap();
        let back = read_volume(&path).unwrap();
        assert_eq!(back.data(), v.data());
    }

    #[test]
    fn signed16_overflow_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("over.nii");
        let v = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 70000.0);
        let err = write_volume(&v, &path, ScalarKind::I16).unwrap_err();
        assert!(matches!(err, Error::RangeOverflow { .. }));
    }

    #[test]
    fn short_payload_is_dimension_mismatch() {
        let v = Volume3D::constant((4, 4, 4), (1.0, 1.0, 1.0), 1.0);
        let mut bytes = volume_to_bytes(&v, ScalarKind::F32).unwrap();
        bytes.truncate(bytes.len() - 4); // drop one voxel
        let err = parse_volume(&bytes).unwrap_err();
        match err {
            Error::DimensionMismatch { expected, actual } => {
                assert_eq!(expected, 64);
                assert_eq!(actual, 63);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wrong_sizeof_hdr_is_corrupt() {
        let v = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 1.0);
        let mut bytes = volume_to_bytes(&v, ScalarKind::F32).unwrap();
        bytes[0..4].copy_from_slice(&349i32.to_le_bytes());
        assert!(matches!(
            parse_volume(&bytes).unwrap_err(),
            Error::CorruptHeader(_)
        ));
    }

    #[test]
    fn unknown_datatype_code_is_rejected() {
        let v = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 1.0);
        let mut bytes = volume_to_bytes(&v, ScalarKind::F32).unwrap();
        bytes[offset::DATATYPE..offset::DATATYPE + 2].copy_from_slice(&512i16.to_le_bytes());
        assert!(matches!(
            parse_volume(&bytes).unwrap_err(),
            Error::UnsupportedDatatype(512)
        ));
    }

    #[test]
    fn scale_slope_and_intercept_apply_on_read() {
        let v = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        let mut bytes = volume_to_bytes(&v, ScalarKind::I16).unwrap();
        // payload: stored integers 0..8
        for (i, chunk) in (0..8i16).enumerate() {
            let at = DEFAULT_VOX_OFFSET + 2 * i;
            bytes[at..at + 2].copy_from_slice(&chunk.to_le_bytes());
        }
        bytes[offset::SCL_SLOPE..offset::SCL_SLOPE + 4].copy_from_slice(&2.5f32.to_le_bytes());
        bytes[offset::SCL_INTER..offset::SCL_INTER + 4].copy_from_slice(&(-1.0f32).to_le_bytes());
        let back = parse_volume(&bytes).unwrap();
        for (i, &got) in back.data().iter().enumerate() {
            assert_eq!(got, 2.5 * i as f64 - 1.0);
        }
    }

    #[test]
    fn nan_payload_is_rejected() {
        let v = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        let mut bytes = volume_to_bytes(&v, ScalarKind::F64).unwrap();
        bytes[DEFAULT_VOX_OFFSET..DEFAULT_VOX_OFFSET + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            parse_volume(&bytes).unwrap_err(),
            Error::NonFiniteData(_)
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_volume("/nonexistent/path/vol.nii").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
