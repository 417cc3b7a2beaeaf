use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Lattice, SpectralField};
use crate::truncation::ModelParams;

pub const MAGIC: [u8; 4] = *b"IMCG";
pub const FORMAT_VERSION: u32 = 1;
/// Bytes before the payload.
pub const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 3 * 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub grid_radius: u32,
    pub n: u32,
    pub k: u32,
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
    pub count: u64,
}

fn lattice_count(radius: u64) -> u64 {
    let side = 2 * radius + 1;
    side * side * side
}

impl CheckpointHeader {
    pub fn new(u: &SpectralField, params: &ModelParams) -> Self {
        Self {
            version: FORMAT_VERSION,
            grid_radius: u.radius() as u32,
            n: params.n,
            k: params.k,
            omega: params.omega,
            beta: params.beta,
            gamma: params.gamma,
            count: u.coeffs().len() as u64,
        }
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        let mut at = 0;
        let mut put = |b: &[u8]| {
            out[at..at + b.len()].copy_from_slice(b);
            at += b.len();
        };
        put(&MAGIC);
        put(&self.version.to_le_bytes());
        put(&self.grid_radius.to_le_bytes());
        put(&self.n.to_le_bytes());
        put(&self.k.to_le_bytes());
        put(&self.omega.to_le_bytes());
        put(&self.beta.to_le_bytes());
        put(&self.gamma.to_le_bytes());
        put(&self.count.to_le_bytes());
        out
    }
}

fn take<const L: usize>(buf: &[u8], at: &mut usize) -> [u8; L] {
    let out: [u8; L] = buf[*at..*at + L].try_into().expect("length checked");
    *at += L;
    out
}

/// Writes the header and the coefficients in lattice order.
pub fn write_field<W: Write>(mut w: W, u: &SpectralField, params: &ModelParams) -> Result<()> {
    w.write_all(&CheckpointHeader::new(u, params).to_bytes())?;
    for c in u.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<(CheckpointHeader, SpectralField)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let mut rest = [0u8; HEADER_LEN - 4];
    r.read_exact(&mut rest)?;
    let mut at = 0;
    let version = u32::from_le_bytes(take(&rest, &mut at));
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let header = CheckpointHeader {
        version,
        grid_radius: u32::from_le_bytes(take(&rest, &mut at)),
        n: u32::from_le_bytes(take(&rest, &mut at)),
        k: u32::from_le_bytes(take(&rest, &mut at)),
        omega: f64::from_le_bytes(take(&rest, &mut at)),
        beta: f64::from_le_bytes(take(&rest, &mut at)),
        gamma: f64::from_le_bytes(take(&rest, &mut at)),
        count: u64::from_le_bytes(take(&rest, &mut at)),
    };
    let expected = lattice_count(header.grid_radius as u64);
    if header.count != expected {
        return Err(Error::CountMismatch {
            expected,
            found: header.count,
        });
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() as u64 != 16 * expected {
        return Err(Error::CountMismatch {
            expected,
            found: payload.len() as u64 / 16,
        });
    }
    let coeffs = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("chunk of 16"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("chunk of 16"));
            Complex64::new(re, im)
        })
        .collect();
    let lattice = Lattice::new(header.grid_radius as usize);
    Ok((header, SpectralField::from_coeffs(&lattice, coeffs)?))
}

pub fn save_field(path: impl AsRef<Path>, u: &SpectralField, params: &ModelParams) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), u, params)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<(CheckpointHeader, SpectralField)> {
    read_field(BufReader::new(File::open(path)?))
}
