//! File formats.
//!
//! * Images: raw little-endian `f64` values in row-major order (`x.bin`) with
//!   a JSON sidecar (`x.json`) holding the side and the amplitude range.
//! * 16-bit binary PGM for viewing.
//! * Banks: JSON.
//! * Coefficient dumps: one binary file of interleaved `(re, im)` `f64`
//!   pairs plus a JSON manifest listing every field with its offset.
//! * Generation manifest: CSV, one row per sample.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bank::WaveletBank;
use crate::bench::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::grid::GridImage;
use crate::transforms::{ScatteringCoeffs, WaveletCoeffs};

/// Sidecar of a binary image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageHeader {
    pub schema_version: u32,
    pub n: usize,
    /// Nominal amplitude range `[lo, hi]`.
    pub range: [f64; 2],
}

/// Path of the JSON sidecar of an image file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_image(path: &Path, image: &GridImage, range: [f64; 2]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in image.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let header = ImageHeader { schema_version: SCHEMA_VERSION, n: image.side(), range };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

pub fn read_image(path: &Path) -> Result<(GridImage, ImageHeader)> {
    let header: ImageHeader = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!("image sidecar has schema_version {}", header.schema_version)));
    }
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let d = header.n * header.n;
    if bytes.len() != 8 * d {
        return Err(Error::Format(format!("{} holds {} bytes, expected {}", path.display(), bytes.len(), 8 * d)));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((GridImage::from_vec(header.n, values)?, header))
}

/// 16-bit PGM with `range` mapped to `[0, 65535]`, values clamped.
pub fn write_pgm(path: &Path, image: &GridImage, range: [f64; 2]) -> Result<()> {
    let [lo, hi] = range;
    if !(hi > lo) {
        return Err(Error::InvalidParam(format!("empty display range {range:?}")));
    }
    let n = image.side();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{n} {n}\n65535\n")?;
    for v in image.values() {
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        w.write_all(&((t * 65535.0).round() as u16).to_be_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_bank(path: &Path, bank: &WaveletBank) -> Result<()> {
    std::fs::write(path, bank.to_json()?)?;
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<WaveletBank> {
    WaveletBank::from_json(&std::fs::read_to_string(path)?)
}

/// One field of a coefficient dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    /// `low`, `j,k` for first order or `j,k,j2,k2` for second order.
    pub name: String,
    /// Offset in complex values from the start of the binary file.
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub schema_version: u32,
    pub n: usize,
    pub data_file: String,
    pub entries: Vec<DumpEntry>,
}

fn dump_fields<'a>(dir: &Path, n: usize, fields: impl Iterator<Item = (String, &'a [Complex64])>) -> Result<DumpManifest> {
    std::fs::create_dir_all(dir)?;
    let data_file = "coefficients.bin".to_string();
    let mut w = BufWriter::new(File::create(dir.join(&data_file))?);
    let mut entries = Vec::new();
    let mut offset = 0;
    for (name, field) in fields {
        for z in field {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        entries.push(DumpEntry { name, offset, len: field.len() });
        offset += field.len();
    }
    w.flush()?;
    let manifest = DumpManifest { schema_version: SCHEMA_VERSION, n, data_file, entries };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Dumps first-order coefficients into `dir`.
pub fn dump_wavelet_coeffs(dir: &Path, c: &WaveletCoeffs) -> Result<DumpManifest> {
    let fields = std::iter::once(("low".to_string(), c.low.as_slice()))
        .chain(c.keys().map(|(j, k)| (format!("{j},{k}"), c.detail(j, k))));
    dump_fields(dir, c.n, fields)
}

/// Dumps scattering coefficients into `dir`.
pub fn dump_scattering_coeffs(dir: &Path, c: &ScatteringCoeffs) -> Result<DumpManifest> {
    let first = c.first.iter().map(|((j, k), f)| (format!("{j},{k}"), f.as_slice()));
    let second = c
        .second
        .iter()
        .map(|s| (format!("{},{},{},{}", s.key.j, s.key.k, s.key.j2, s.key.k2), s.field.as_slice()));
    dump_fields(dir, c.n, first.chain(second))
}

/// Reads every field of a dump back, in manifest order.
pub fn read_dump(dir: &Path) -> Result<(DumpManifest, Vec<Vec<Complex64>>)> {
    let manifest: DumpManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut bytes = Vec::new();
    File::open(dir.join(&manifest.data_file))?.read_to_end(&mut bytes)?;
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let mut fields = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let end = 2 * (e.offset + e.len);
        if end > values.len() {
            return Err(Error::Format(format!("dump entry {} runs past the data file", e.name)));
        }
        fields.push(values[2 * e.offset..end].chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    Ok((manifest, fields))
}

/// Row of the generation manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub file: String,
    pub alpha: f64,
    pub seed: u64,
    pub n: usize,
    pub gap: f64,
    pub contour_length: f64,
    pub contour_lipschitz: f64,
    pub region_lipschitz: f64,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<ManifestRow>, _>>()?)
}
