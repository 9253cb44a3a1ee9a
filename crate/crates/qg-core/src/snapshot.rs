//! Binary snapshot and trajectory files.
//!
//! Snapshot layout (little endian): magic `QGSF`, format version u32, grid
//! size u32, box length f64, snapshot time f64, gamma f64, then n*n
//! coefficient pairs (re, im) as f64 in row-major order with the mean mode
//! at index (0, 0). Trajectory layout: magic `QGTR`, format version u32,
//! record count u32, gamma f64, kappa f64, then that many snapshot records.
//! Round trips are bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::dynamics::TrajectoryRecord;
use crate::error::{QgError, QgResult};
use crate::field::SpectralField;
use crate::grid::Grid2D;
use crate::params::PhysicalParams;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"QGSF";
pub const TRAJECTORY_MAGIC: &[u8; 4] = b"QGTR";
pub const FORMAT_VERSION: u32 = 1;

fn write_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u32<R: Read>(r: &mut R) -> QgResult<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> QgResult<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_magic<R: Read>(r: &mut R, expect: &[u8; 4], what: &str) -> QgResult<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != expect {
        return Err(QgError::SnapshotFormat(format!(
            "bad {what} magic {m:?}, expected {expect:?}"
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(QgError::SnapshotFormat(format!(
            "unsupported {what} format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

pub fn write_snapshot<W: Write>(
    w: &mut W,
    field: &SpectralField,
    time: f64,
    gamma: f64,
) -> QgResult<()> {
    let grid = field.grid();
    w.write_all(SNAPSHOT_MAGIC)?;
    write_u32(w, FORMAT_VERSION)?;
    write_u32(w, grid.n() as u32)?;
    write_f64(w, grid.box_length())?;
    write_f64(w, time)?;
    write_f64(w, gamma)?;
    for c in field.coeffs().iter() {
        write_f64(w, c.re)?;
        write_f64(w, c.im)?;
    }
    Ok(())
}

/// Reads one snapshot record; the stored coefficients must satisfy the same
/// structural constraints as a freshly built field.
pub fn read_snapshot<R: Read>(r: &mut R) -> QgResult<(SpectralField, f64, f64)> {
    read_magic(r, SNAPSHOT_MAGIC, "snapshot")?;
    let n = read_u32(r)? as usize;
    let box_length = read_f64(r)?;
    let time = read_f64(r)?;
    let gamma = read_f64(r)?;
    let grid = Grid2D::with_box_length(n, box_length)?;
    let mut coeffs: Array2<Complex64> = Array2::zeros((n, n));
    for c in coeffs.iter_mut() {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        *c = Complex64::new(re, im);
    }
    let field = SpectralField::from_coeffs(grid, coeffs)?;
    Ok((field, time, gamma))
}

pub fn write_trajectory<W: Write>(w: &mut W, traj: &TrajectoryRecord) -> QgResult<()> {
    w.write_all(TRAJECTORY_MAGIC)?;
    write_u32(w, FORMAT_VERSION)?;
    write_u32(w, traj.snapshots.len() as u32)?;
    write_f64(w, traj.params.gamma)?;
    write_f64(w, traj.params.kappa)?;
    for (&t, f) in traj.times.iter().zip(traj.snapshots.iter()) {
        write_snapshot(w, f, t, traj.params.gamma)?;
    }
    Ok(())
}

/// Reads a trajectory container. Per-step diagnostics are not stored in the
/// binary format (they travel in the diagnostics table); the returned record
/// has an empty diagnostic list.
pub fn read_trajectory<R: Read>(r: &mut R) -> QgResult<TrajectoryRecord> {
    read_magic(r, TRAJECTORY_MAGIC, "trajectory")?;
    let count = read_u32(r)? as usize;
    let gamma = read_f64(r)?;
    let kappa = read_f64(r)?;
    let params = PhysicalParams::new(gamma, kappa)?;
    if count == 0 {
        return Err(QgError::SnapshotFormat("empty trajectory file".into()));
    }
    let mut times = Vec::with_capacity(count);
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        let (field, t, g) = read_snapshot(r)?;
        if (g - gamma).abs() > 0.0 {
            return Err(QgError::SnapshotFormat(format!(
                "snapshot gamma {g} disagrees with container gamma {gamma}"
            )));
        }
        if let Some(prev) = snapshots.last() {
            let prev: &SpectralField = prev;
            prev.grid().check_same(field.grid())?;
        }
        times.push(t);
        snapshots.push(field);
    }
    let grid = *snapshots[0].grid();
    Ok(TrajectoryRecord {
        grid,
        params,
        times,
        snapshots,
        diag: Vec::new(),
    })
}

pub fn save_trajectory<P: AsRef<Path>>(path: P, traj: &TrajectoryRecord) -> QgResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectory(&mut w, traj)
}

pub fn load_trajectory<P: AsRef<Path>>(path: P) -> QgResult<TrajectoryRecord> {
    let mut r = BufReader::new(File::open(path)?);
    read_trajectory(&mut r)
}

pub fn save_snapshot<P: AsRef<Path>>(
    path: P,
    field: &SpectralField,
    time: f64,
    gamma: f64,
) -> QgResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, field, time, gamma)
}

pub fn load_snapshot<P: AsRef<Path>>(path: P) -> QgResult<(SpectralField, f64, f64)> {
    let mut r = BufReader::new(File::open(path)?);
    read_snapshot(&mut r)
}
