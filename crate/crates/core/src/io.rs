//! Binary field snapshots, CSV diagnostics and content hashes.
//!
//! Snapshot layout, all little-endian:
//! `b"NSVFPSN1"`, `nx: u64`, `nv: u64`, `v_max: f64`, `t: f64`, then `f`
//! row-major (`f[i * nv + j]`), then `rho`, then `m`, as `f64`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"NSVFPSN1";
const HEADER_LEN: usize = 8 + 8 + 8 + 8 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub nv: usize,
    pub v_max: f64,
    pub t: f64,
    pub f: Vec<f64>,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.f.len() + self.rho.len() + self.m.len();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * n);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.nv as u64).to_le_bytes());
        out.extend_from_slice(&self.v_max.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for x in self.f.iter().chain(&self.rho).chain(&self.m) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Snapshot {
            path: origin.to_path_buf(),
            reason,
        };
        if bytes.len() < HEADER_LEN || &bytes[..8] != SNAPSHOT_MAGIC {
            return Err(bad("missing snapshot header".into()));
        }
        let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().expect("8-byte slice") };
        let nx = u64::from_le_bytes(word(1)) as usize;
        let nv = u64::from_le_bytes(word(2)) as usize;
        let v_max = f64::from_le_bytes(word(3));
        let t = f64::from_le_bytes(word(4));
        let expected = nx
            .checked_mul(nv)
            .and_then(|k| k.checked_add(2 * nx))
            .and_then(|k| k.checked_mul(8))
            .and_then(|k| k.checked_add(HEADER_LEN))
            .ok_or_else(|| bad("dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(bad(format!(
                "expected {expected} bytes for nx={nx}, nv={nv}, found {}",
                bytes.len()
            )));
        }
        let mut vals = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let f: Vec<f64> = vals.by_ref().take(nx * nv).collect();
        let rho: Vec<f64> = vals.by_ref().take(nx).collect();
        let m: Vec<f64> = vals.collect();
        Ok(Snapshot {
            nx,
            nv,
            v_max,
            t,
            f,
            rho,
            m,
        })
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    std::fs::write(path, snap.to_bytes()).map_err(|e| Error::Snapshot {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut fh| fh.read_to_end(&mut bytes))
        .map_err(|e| Error::Snapshot {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    Snapshot::from_bytes(&bytes, path)
}

/// Streams diagnostics rows to a CSV file, header first.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", DiagnosticsRecord::csv_header())?;
        Ok(CsvWriter { out })
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.out, "{}", rec.csv_row())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
