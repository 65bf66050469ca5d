use crate::error::{Error, Result};

/// Number of refinement scales `p` for a grid of side `2^p + 1`.
pub fn scales_for_side(side: usize) -> Result<u32> {
    if side < 3 || !(side - 1).is_power_of_two() {
        return Err(Error::GridSide(side));
    }
    Ok((side - 1).trailing_zeros())
}

/// Side `2^p + 1` of a grid with `p` scales.
pub fn side_for_scales(scales: u32) -> Result<usize> {
    if scales == 0 || scales > 24 {
        return Err(Error::Config(format!(
            "scale count must be in 1..=24, got {scales}"
        )));
    }
    Ok((1usize << scales) + 1)
}

/// Square lattice of phase samples, stored row-major (`index = iy * side + ix`).
///
/// The same storage holds either wavefront samples `w` or generators `u`,
/// since the fractal operators work in place.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    side: usize,
    values: Vec<f64>,
}

impl PhaseGrid {
    pub fn zeros(side: usize) -> Result<Self> {
        scales_for_side(side)?;
        Ok(Self {
            side,
            values: vec![0.0; side * side],
        })
    }

    pub fn from_values(side: usize, values: Vec<f64>) -> Result<Self> {
        scales_for_side(side)?;
        crate::error::check_len(side * side, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite phase sample at index {i}"
            )));
        }
        Ok(Self { side, values })
    }

    /// Grid filled by `f(ix, iy)`.
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut grid = Self::zeros(side)?;
        for iy in 0..side {
            for ix in 0..side {
                grid.values[iy * side + ix] = f(ix, iy);
            }
        }
        Ok(grid)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn scales(&self) -> u32 {
        (self.side - 1).trailing_zeros()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.side + ix
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.side + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, value: f64) {
        self.values[iy * self.side + ix] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
