//! Little-endian binary formats for field snapshots and noise paths.
//!
//! Field file: 32-byte header (`STHRFLD1`, u32 dimension, u32 nx, u32 ny,
//! u32 component count, 8 reserved bytes) then `ncomp * nx * ny` f64 values,
//! component-major, x fastest.
//!
//! Noise file: header (`STHRNOI1`, u64 seed, f64 κ, f64 t_min, f64 t_max,
//! f64 dt) then the three Wiener increment channels, the three OU initial
//! values and the three OU increment channels.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::model::{Role, StateTriple};
use crate::noise::{OuPath, PathChannels, TimeGrid, WienerPath};

const FIELD_MAGIC: &[u8; 8] = b"STHRFLD1";
const NOISE_MAGIC: &[u8; 8] = b"STHRNOI1";

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64s(w: &mut impl Write, vals: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(vals.len() * 8);
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(w.write_all(&buf)?)
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(b)
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated data block: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes the components of `fields` (all on one grid).
pub fn write_fields(w: &mut impl Write, fields: &[&ScalarField]) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Invalid("no fields to write".into()))?;
    let grid = first.grid();
    if fields.iter().any(|f| !f.same_grid(first)) {
        return Err(Error::GridMismatch);
    }
    let pts = grid.points();
    w.write_all(FIELD_MAGIC)?;
    put_u32(w, grid.dimension() as u32)?;
    put_u32(w, pts[0] as u32)?;
    put_u32(w, pts.get(1).copied().unwrap_or(1) as u32)?;
    put_u32(w, fields.len() as u32)?;
    w.write_all(&[0u8; 8])?;
    for f in fields {
        put_f64s(w, f.values())?;
    }
    Ok(())
}

pub fn write_state(w: &mut impl Write, state: &StateTriple) -> Result<()> {
    let [a, b, c] = state.components();
    write_fields(w, &[a, b, c])
}

/// Reads a field file onto `grid`, checking the header against it.
pub fn read_fields(r: &mut impl Read, grid: &Arc<Grid>) -> Result<Vec<ScalarField>> {
    if &get::<8>(r)? != FIELD_MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let dim = u32::from_le_bytes(get(r)?) as usize;
    let nx = u32::from_le_bytes(get(r)?) as usize;
    let ny = u32::from_le_bytes(get(r)?) as usize;
    let ncomp = u32::from_le_bytes(get(r)?) as usize;
    get::<8>(r)?;
    let pts = grid.points();
    if dim != grid.dimension() || nx != pts[0] || ny != pts.get(1).copied().unwrap_or(1) {
        return Err(Error::Format(format!(
            "file grid {dim}D {nx}x{ny} does not match the target grid"
        )));
    }
    (0..ncomp)
        .map(|_| ScalarField::new(grid.clone(), get_f64s(r, nx * ny)?))
        .collect()
}

pub fn read_state(r: &mut impl Read, grid: &Arc<Grid>, role: Role) -> Result<StateTriple> {
    let fields = read_fields(r, grid)?;
    let n = fields.len();
    let fields: [ScalarField; 3] = fields
        .try_into()
        .map_err(|_| Error::Format(format!("expected 3 components, found {n}")))?;
    StateTriple::new(role, fields)
}

/// Writes a master path and its OU process.
pub fn write_noise(w: &mut impl Write, wiener: &WienerPath, ou: &OuPath) -> Result<()> {
    let grid = wiener.time_grid();
    if grid != ou.time_grid() {
        return Err(Error::Invalid(
            "Wiener and OU paths use different time grids".into(),
        ));
    }
    if wiener.origin() != 0 || ou.origin() != 0 {
        return Err(Error::Invalid(
            "only unshifted master paths can be saved".into(),
        ));
    }
    w.write_all(NOISE_MAGIC)?;
    w.write_all(&wiener.seed().to_le_bytes())?;
    put_f64s(w, &[ou.kappa(), grid.t_min(), grid.t_max(), grid.dt()])?;
    for c in 0..3 {
        put_f64s(w, wiener.increments(c))?;
    }
    put_f64s(w, &ou.initial())?;
    for c in 0..3 {
        put_f64s(w, ou.increments(c))?;
    }
    Ok(())
}

pub fn read_noise(r: &mut impl Read) -> Result<(WienerPath, OuPath)> {
    if &get::<8>(r)? != NOISE_MAGIC {
        return Err(Error::Format("not a noise file (bad magic)".into()));
    }
    let seed = u64::from_le_bytes(get(r)?);
    let head = get_f64s(r, 4)?;
    let (kappa, t_min, t_max, dt) = (head[0], head[1], head[2], head[3]);
    let grid = TimeGrid::new(t_min, t_max, dt)?;
    let n = grid.len() - 1;
    let mut wiener_inc = Vec::with_capacity(3);
    for _ in 0..3 {
        wiener_inc.push(get_f64s(r, n)?);
    }
    let initial = get_f64s(r, 3)?;
    let mut ou_inc = Vec::with_capacity(3);
    for _ in 0..3 {
        ou_inc.push(get_f64s(r, n)?);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after noise data".into()));
    }
    let to3 = |v: Vec<Vec<f64>>| -> [Vec<f64>; 3] { v.try_into().expect("three channels") };
    let wiener = WienerPath::from_increments(grid, seed, 0, to3(wiener_inc))?;
    let ou = OuPath::from_parts(
        grid,
        kappa,
        [initial[0], initial[1], initial[2]],
        to3(ou_inc),
    )?;
    Ok((wiener, ou))
}
