//! Persistent file formats.
//!
//! Grids use a small binary layout: magic `FRIM`, `u32` version, `u32`
//! side, then `side²` `f64` samples row-major, all little-endian. Tables
//! are CSV files whose first line is a `# ` comment recording the command
//! and parameters that produced them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use wavefront_core::metrics::RadialBin;
use wavefront_core::solver::TraceRow;
use wavefront_core::{PhaseGrid, Pupil, SlopeSet};

use crate::error::ValidationError;

pub const GRID_MAGIC: &[u8; 4] = b"FRIM";
pub const GRID_VERSION: u32 = 1;
const GRID_HEADER: usize = 12;

pub const SLOPES_HEADER: [&str; 6] = ["isub", "ix", "iy", "dx", "dy", "var"];
pub const TRACE_HEADER: [&str; 6] = [
    "iter",
    "flops",
    "rnorm",
    "resid_var",
    "resid_var_norm",
    "strehl",
];
pub const SF_HEADER: [&str; 3] = ["r", "D_measured", "D_theory"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn encode_grid(grid: &PhaseGrid) -> Vec<u8> {
    let mut buf = Vec::with_capacity(GRID_HEADER + 8 * grid.len());
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(&GRID_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.side() as u32).to_le_bytes());
    for v in grid.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_grid(bytes: &[u8]) -> Result<PhaseGrid> {
    if bytes.len() < GRID_HEADER || &bytes[..4] != GRID_MAGIC {
        bail!(ValidationError::new("not a grid file (bad magic)"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != GRID_VERSION {
        bail!(ValidationError::new(format!(
            "unsupported grid version {version}"
        )));
    }
    let side = word(8) as usize;
    let expected = GRID_HEADER + 8 * side * side;
    if bytes.len() != expected {
        bail!(ValidationError::new(format!(
            "grid of side {side} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let values = bytes[GRID_HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PhaseGrid::from_values(side, values).map_err(|e| ValidationError::new(e.to_string()).into())
}

pub fn write_grid(path: &Path, grid: &PhaseGrid) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(&encode_grid(grid))?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_grid(path: &Path) -> Result<PhaseGrid> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_grid(&bytes).with_context(|| format!("in {}", path.display()))
}

/// CSV writer whose file starts with `# {comment}`.
pub fn csv_writer(path: &Path, comment: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut w = create(path)?;
    writeln!(w, "# {comment}")?;
    Ok(csv::Writer::from_writer(w))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))
}

/// Shortest round-tripping text for `v`, in scientific notation when tiny or huge.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_slopes(path: &Path, comment: &str, slopes: &SlopeSet) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record(SLOPES_HEADER)?;
    for (i, &(ix, iy)) in slopes.positions().iter().enumerate() {
        w.write_record([
            i.to_string(),
            ix.to_string(),
            iy.to_string(),
            num(slopes.dx(i)),
            num(slopes.dy(i)),
            num(slopes.variance()[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_slopes(path: &Path) -> Result<SlopeSet> {
    let mut r = csv_reader(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(SLOPES_HEADER) {
        bail!(ValidationError::new(format!(
            "{}: expected header {}",
            path.display(),
            SLOPES_HEADER.join(",")
        )));
    }
    let (mut positions, mut slopes, mut variance) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| {
            ValidationError::new(format!("{}: row {}: bad {what}", path.display(), line + 1))
        };
        let int = |i: usize, what: &str| rec[i].trim().parse::<usize>().map_err(|_| bad(what));
        let num = |i: usize, what: &str| rec[i].trim().parse::<f64>().map_err(|_| bad(what));
        if int(0, "isub")? != line {
            return Err(bad("isub (rows must be in order)").into());
        }
        positions.push((int(1, "ix")?, int(2, "iy")?));
        slopes.push(num(3, "dx")?);
        slopes.push(num(4, "dy")?);
        variance.push(num(5, "var")?);
    }
    SlopeSet::from_parts(positions, slopes, variance)
        .map_err(|e| ValidationError::new(e.to_string()).into())
}

/// Errors unless `slopes` were taken on `pupil`.
pub fn check_slopes_pupil(slopes: &SlopeSet, pupil: &Pupil) -> Result<()> {
    slopes
        .check_pupil(pupil)
        .map_err(|e| ValidationError::new(format!("slopes do not fit the pupil: {e}")).into())
}

pub fn trace_record(row: &TraceRow) -> [String; 6] {
    [
        row.iter.to_string(),
        row.flops.to_string(),
        num(row.rnorm),
        opt(row.resid_var),
        opt(row.resid_var_norm),
        opt(row.strehl),
    ]
}

pub fn write_trace(path: &Path, comment: &str, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        w.write_record(trace_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_structure(
    path: &Path,
    comment: &str,
    bins: &[RadialBin],
    theory: impl Fn(f64) -> f64,
) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record(SF_HEADER)?;
    for b in bins {
        w.write_record([num(b.r), num(b.value), num(theory(b.r))])?;
    }
    w.flush()?;
    Ok(())
}
