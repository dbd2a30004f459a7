//! On-disk formats.
//!
//! - `BIDB`: bit-packed dataset. Magic `"BIDB"`, version `u32 = 1`,
//!   `n_samples: u64`, `n_bits: u64` (all little-endian), then the packed
//!   rows exactly as stored in memory. Bit-exact by construction.
//! - `BIDF`: real matrix. Magic `"BIDF"`, version `u32 = 1`,
//!   `n_samples: u64`, `n_features: u64`, then row-major `f32` LE values.
//!   CSV (one comma-separated sample per line) is accepted as an
//!   alternative real-matrix input.
//! - Histograms travel as JSON `{n_bits, n_samples, counts}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bitdata::{BitDataset, RealMatrix};
use crate::error::{Error, Result};
use crate::histogram::DistanceHistogram;

const BIDB_MAGIC: &[u8; 4] = b"BIDB";
const BIDF_MAGIC: &[u8; 4] = b"BIDF";
const FORMAT_VERSION: u32 = 1;

fn read_header(reader: &mut impl Read, magic: &[u8; 4]) -> Result<(u64, u64)> {
    let mut got_magic = [0u8; 4];
    reader.read_exact(&mut got_magic).map_err(truncated)?;
    if &got_magic != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got_magic),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut buf4 = [0u8; 4];
    reader.read_exact(&mut buf4).map_err(truncated)?;
    let version = u32::from_le_bytes(buf4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let mut buf8 = [0u8; 8];
    reader.read_exact(&mut buf8).map_err(truncated)?;
    let a = u64::from_le_bytes(buf8);
    reader.read_exact(&mut buf8).map_err(truncated)?;
    let b = u64::from_le_bytes(buf8);
    Ok((a, b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated file".into())
    } else {
        Error::Io(e)
    }
}

/// Write a dataset in BIDB format.
pub fn write_bidb(path: &Path, ds: &BitDataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BIDB_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ds.n_samples() as u64).to_le_bytes())?;
    w.write_all(&(ds.n_bits() as u64).to_le_bytes())?;
    w.write_all(ds.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Read a BIDB dataset, validating magic, version, size and padding.
pub fn read_bidb(path: &Path) -> Result<BitDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let (n_samples, n_bits) = read_header(&mut r, BIDB_MAGIC)?;
    let (n_samples, n_bits) = (n_samples as usize, n_bits as usize);
    if n_samples == 0 || n_bits == 0 {
        return Err(Error::Format("empty dataset".into()));
    }
    let expected = n_samples * n_bits.div_ceil(8);
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            data.len()
        )));
    }
    BitDataset::from_packed(n_samples, n_bits, data)
}

/// Write a real matrix in BIDF format (f32 little-endian payload).
pub fn write_bidf(path: &Path, m: &RealMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BIDF_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(m.n_samples() as u64).to_le_bytes())?;
    w.write_all(&(m.n_features() as u64).to_le_bytes())?;
    for &v in m.values() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a BIDF real matrix.
pub fn read_bidf(path: &Path) -> Result<RealMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let (n_samples, n_features) = read_header(&mut r, BIDF_MAGIC)?;
    let (n_samples, n_features) = (n_samples as usize, n_features as usize);
    let expected = n_samples
        .checked_mul(n_features)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    RealMatrix::new(n_samples, n_features, values)
}

/// Read a real matrix from CSV, one comma-separated sample per line.
pub fn read_real_csv(path: &Path) -> Result<RealMatrix> {
    let content = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            Error::Format(format!("line {}: {e}", lineno + 1))
        })?);
    }
    RealMatrix::from_rows(&rows)
}

/// Load a real matrix, sniffing BIDF by magic and falling back to CSV.
pub fn read_real_matrix_auto(path: &Path) -> Result<RealMatrix> {
    let mut head = [0u8; 4];
    let mut f = File::open(path)?;
    let n = f.read(&mut head)?;
    if n == 4 && &head == BIDF_MAGIC {
        read_bidf(path)
    } else {
        read_real_csv(path)
    }
}

/// Serialize a histogram as JSON.
pub fn write_histogram_json(path: &Path, hist: &DistanceHistogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, hist)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Read a histogram from JSON.
pub fn read_histogram_json(path: &Path) -> Result<DistanceHistogram> {
    let r = BufReader::new(File::open(path)?);
    let hist: DistanceHistogram = serde_json::from_reader(r)?;
    // Re-validate the shape invariant through the constructor.
    DistanceHistogram::new(hist.n_bits(), hist.n_samples(), hist.counts().to_vec())
}

/// True when the file starts with the BIDB magic.
pub fn is_bidb(path: &Path) -> Result<bool> {
    let mut head = [0u8; 4];
    let mut f = File::open(path)?;
    let n = f.read(&mut head)?;
    Ok(n == 4 && &head == BIDB_MAGIC)
}
