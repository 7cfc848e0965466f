//! Binary PEPS checkpoints.
//!
//! Layout (all integers little-endian):
//! `b"TNFPEPS\0"`, version `u32`, rows `u32`, cols `u32`, d `u32`, D `u32`,
//! boundary `u8` (0 open, 1 periodic), then per site in row-major order:
//! rank `u32`, extents `u32 × rank`, entries as `(re, im)` `f64` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Peps;
use crate::error::{bail, Result};
use crate::model::Boundary;
use crate::tensor::{Tensor, C64};

const MAGIC: &[u8; 8] = b"TNFPEPS\0";
const VERSION: u32 = 1;

pub fn write_peps<W: Write>(peps: &Peps, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [VERSION, peps.rows() as u32, peps.cols() as u32, peps.phys_dim() as u32, peps.bond_dim() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[match peps.boundary() {
        Boundary::Obc => 0u8,
        Boundary::Pbc => 1u8,
    }])?;
    for t in peps.sites() {
        w.write_all(&(t.rank() as u32).to_le_bytes())?;
        for &e in t.extents() {
            w.write_all(&(e as u32).to_le_bytes())?;
        }
        for x in t.data() {
            w.write_all(&x.re.to_le_bytes())?;
            w.write_all(&x.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_peps<R: Read>(mut r: R) -> Result<Peps> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!(Format, "not a PEPS checkpoint (bad magic)");
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        bail!(Format, "unsupported PEPS checkpoint version {version}");
    }
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    let bond = read_u32(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let boundary = match flag[0] {
        0 => Boundary::Obc,
        1 => Boundary::Pbc,
        b => bail!(Format, "unknown boundary flag {b}"),
    };
    if rows == 0 || cols == 0 || rows * cols > 1 << 20 {
        bail!(Format, "implausible lattice extents {rows}x{cols}");
    }
    let mut sites = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let rank = read_u32(&mut r)? as usize;
        if rank != 5 {
            bail!(Format, "site tensor of rank {rank}");
        }
        let extents = (0..rank).map(|_| read_u32(&mut r).map(|e| e as usize)).collect::<Result<Vec<_>>>()?;
        let len: usize = extents.iter().product();
        if len > 1 << 26 {
            bail!(Format, "site tensor with {len} entries");
        }
        let data = (0..len)
            .map(|_| Ok(C64::new(read_f64(&mut r)?, read_f64(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        sites.push(Tensor::new(extents, data).map_err(|e| crate::TnfError::Format(e.to_string()))?);
    }
    let peps = Peps::new(rows, cols, boundary, sites).map_err(|e| crate::TnfError::Format(e.to_string()))?;
    if peps.phys_dim() != d || peps.bond_dim() != bond {
        bail!(Format, "header dimensions (d = {d}, D = {bond}) disagree with site tensors");
    }
    Ok(peps)
}

pub fn save_peps(peps: &Peps, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_peps(peps, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_peps(path: &Path) -> Result<Peps> {
    read_peps(BufReader::new(File::open(path)?))
}
