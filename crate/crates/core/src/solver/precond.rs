//! Diagonal preconditioners.
//!
//! Both need the whole operator: the diagonal `A_ii` for Jacobi and the row
//! norms `Σj A_ij²` for the optimal diagonal. They are obtained from the
//! `N` columns `A·e_i` (A is symmetric, so columns are rows), an O(N²)
//! precompute done once per geometry and noise model and optionally cached
//! on disk.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{FlopCategory, FlopCounter};

use super::config::{Preconditioner, Space};
use super::system::LinearOperator;

const CACHE_MAGIC: &[u8; 4] = b"FRDP";

/// `M = diag(m)` for Jacobi, applied as `z = r / m`; `Q = diag(q)` for the
/// optimal diagonal, applied as `z = q·r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPreconditioner {
    kind: Preconditioner,
    space: Space,
    values: Vec<f64>,
}

impl DiagonalPreconditioner {
    pub fn new(kind: Preconditioner, space: Space, values: Vec<f64>) -> Result<Self> {
        if kind == Preconditioner::None {
            return Err(Error::Config(
                "a diagonal preconditioner needs a kind".into(),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::Construction(format!(
                "preconditioner entry {i} is {v:e}; must be > 0"
            )));
        }
        Ok(Self {
            kind,
            space,
            values,
        })
    }

    pub fn kind(&self) -> Preconditioner {
        self.kind
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// `m` (Jacobi) or `q` (optimal diagonal).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64], flops: &mut FlopCounter) {
        match self.kind {
            Preconditioner::Jacobi => {
                for ((zi, ri), m) in z.iter_mut().zip(r).zip(&self.values) {
                    *zi = ri / m;
                }
            }
            _ => {
                for ((zi, ri), q) in z.iter_mut().zip(r).zip(&self.values) {
                    *zi = ri * q;
                }
            }
        }
        flops.add(FlopCategory::Preconditioner, r.len() as u64);
    }

    /// Writes the preconditioner in a small binary format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut buf = Vec::with_capacity(16 + 8 * self.values.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.push(match self.kind {
            Preconditioner::Jacobi => 1,
            _ => 2,
        });
        buf.push(match self.space {
            Space::W => 0,
            Space::U => 1,
        });
        buf.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        fs::File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut buf = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(io)?;
        let bad = || {
            Error::Io(format!(
                "{}: not a preconditioner cache file",
                path.display()
            ))
        };
        if buf.len() < 14 || &buf[..4] != CACHE_MAGIC {
            return Err(bad());
        }
        let kind = match buf[4] {
            1 => Preconditioner::Jacobi,
            2 => Preconditioner::OptimalDiagonal,
            _ => return Err(bad()),
        };
        let space = match buf[5] {
            0 => Space::W,
            1 => Space::U,
            _ => return Err(bad()),
        };
        let n = u64::from_le_bytes(buf[6..14].try_into().unwrap()) as usize;
        if buf.len() != 14 + 8 * n {
            return Err(bad());
        }
        let values = buf[14..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(kind, space, values)
    }
}

/// Diagonal and squared row norms of `op`, from its `N` columns.
pub fn operator_diagonals(op: &dyn LinearOperator) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = op.dim();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], FlopCounter::new()),
            |(e, col, flops), i| {
                e[i] = 1.0;
                let res = op.apply(e, col, flops);
                e[i] = 0.0;
                res.map(|_| (col[i], col.iter().map(|v| v * v).sum()))
            },
        )
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// `m_i = A_ii`.
pub fn build_jacobi(op: &dyn LinearOperator, space: Space) -> Result<DiagonalPreconditioner> {
    let (diag, _) = operator_diagonals(op)?;
    DiagonalPreconditioner::new(Preconditioner::Jacobi, space, diag)
}

/// `q_i = A_ii / Σj A_ij²`.
pub fn build_optimal_diagonal(
    op: &dyn LinearOperator,
    space: Space,
) -> Result<DiagonalPreconditioner> {
    let (diag, rows) = operator_diagonals(op)?;
    if let Some(i) = rows.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Construction(format!(
            "row {i} of the operator is zero"
        )));
    }
    let q = diag.iter().zip(&rows).map(|(d, r)| d / r).collect();
    DiagonalPreconditioner::new(Preconditioner::OptimalDiagonal, space, q)
}

/// Builds the requested preconditioner, or `None` for unpreconditioned CG.
pub fn build_preconditioner(
    op: &dyn LinearOperator,
    kind: Preconditioner,
    space: Space,
) -> Result<Option<DiagonalPreconditioner>> {
    match kind {
        Preconditioner::None => Ok(None),
        Preconditioner::Jacobi => build_jacobi(op, space).map(Some),
        Preconditioner::OptimalDiagonal => build_optimal_diagonal(op, space).map(Some),
    }
}

/// 64-bit FNV-1a, stable across builds and platforms.
#[derive(Debug, Clone, Copy)]
pub struct CacheKey(u64);

impl Default for CacheKey {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl CacheKey {
    pub fn bytes(mut self, data: &[u8]) -> Self {
        for &b in data {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
        self
    }

    pub fn f64s(self, data: &[f64]) -> Self {
        data.iter().fold(self, |k, v| k.bytes(&v.to_le_bytes()))
    }

    pub fn finish(self) -> u64 {
        self.0
    }

    pub fn file_name(self, prefix: &str) -> PathBuf {
        PathBuf::from(format!("{prefix}-{:016x}.bin", self.0))
    }
}

/// Loads `dir/file` if present, otherwise builds and stores it.
pub fn load_or_build(
    dir: &Path,
    file: &Path,
    build: impl FnOnce() -> Result<DiagonalPreconditioner>,
) -> Result<DiagonalPreconditioner> {
    let path = dir.join(file);
    if path.exists() {
        if let Ok(p) = DiagonalPreconditioner::load(&path) {
            return Ok(p);
        }
    }
    let p = build()?;
    p.save(&path)?;
    Ok(p)
}
