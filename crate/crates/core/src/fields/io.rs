//! Flat binary and CSV snapshots.
//!
//! Binary layout: four little-endian `f64` header values `d, N, m, L`,
//! then `N^d * m` values, node-major (all components of node 0 first).

use std::io::{Read, Write};

use super::{GridSpec, VectorField};
use crate::error::{Error, Result};

pub fn write_binary(f: &VectorField, mut w: impl Write) -> Result<()> {
    let g = f.grid();
    for v in [g.d() as f64, g.n() as f64, f.m() as f64, g.l()] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * g.len() * f.m());
    for i in 0..g.len() {
        for j in 0..f.m() {
            buf.extend_from_slice(&f.value(i, j).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary(mut r: impl Read) -> Result<VectorField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 32 || bytes.len() % 8 != 0 {
        return Err(Error::Io("truncated field snapshot".into()));
    }
    let vals: Vec<f64> =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let (d, n, m, l) = (vals[0] as usize, vals[1] as usize, vals[2] as usize, vals[3]);
    let grid = GridSpec::new(d, l, n, true)?;
    if vals.len() != 4 + grid.len() * m || m == 0 {
        return Err(Error::Io("snapshot length does not match its header".into()));
    }
    let comps = (0..m).map(|j| (0..grid.len()).map(|i| vals[4 + i * m + j]).collect()).collect();
    VectorField::new(grid, comps)
}

/// One row per node: coordinates, then components.
pub fn write_csv(f: &VectorField, mut w: impl Write) -> Result<()> {
    let g = f.grid();
    let mut header: Vec<String> = (1..=g.d()).map(|a| format!("x{a}")).collect();
    header.extend((1..=f.m()).map(|j| format!("v{j}")));
    writeln!(w, "{}", header.join(","))?;
    for i in 0..g.len() {
        let x = g.point(i);
        let row: Vec<String> = x[..g.d()]
            .iter()
            .copied()
            .chain((0..f.m()).map(|j| f.value(i, j)))
            .map(|v| format!("{v:e}"))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
