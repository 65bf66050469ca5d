use crate::error::{check_len, Error, Result};
use crate::fractal::{FractalOperator, Transform};
use crate::metrics::{FlopCategory, FlopCounter};
use crate::sensor::Pupil;

use super::config::Space;

/// A symmetric linear map available only through its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A·x`, tallying the work in `flops`.
    fn apply(&self, x: &[f64], y: &mut [f64], flops: &mut FlopCounter) -> Result<()>;
}

/// Left-hand side of the regularized normal equations.
///
/// - `W`: `A = Sᵀ·C_e⁻¹·S + K⁻ᵀ·K⁻¹`
/// - `U`: `A = Kᵀ·Sᵀ·C_e⁻¹·S·K + I`
#[derive(Debug, Clone)]
pub struct NormalEquations<'a> {
    space: Space,
    pupil: &'a Pupil,
    fractal: &'a FractalOperator,
    /// Diagonal of `C_e⁻¹`, one entry per measurement.
    weights: &'a [f64],
}

impl<'a> NormalEquations<'a> {
    pub fn new(
        space: Space,
        pupil: &'a Pupil,
        fractal: &'a FractalOperator,
        weights: &'a [f64],
    ) -> Result<Self> {
        check_len(fractal.side(), pupil.side())?;
        check_len(pupil.num_measurements(), weights.len())?;
        if let Some(w) = weights.iter().find(|&&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!(
                "data weights must be finite and nonnegative, got {w}"
            )));
        }
        Ok(Self {
            space,
            pupil,
            fractal,
            weights,
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn pupil(&self) -> &Pupil {
        self.pupil
    }

    pub fn fractal(&self) -> &FractalOperator {
        self.fractal
    }

    pub fn weights(&self) -> &[f64] {
        self.weights
    }

    /// `g = Sᵀ·C_e⁻¹·S·w`, with `slopes` as scratch.
    fn data_term(
        &self,
        w: &[f64],
        slopes: &mut [f64],
        g: &mut [f64],
        flops: &mut FlopCounter,
    ) -> Result<()> {
        flops.add(FlopCategory::Sensor, self.pupil.apply_s(w, slopes)?);
        for (s, wt) in slopes.iter_mut().zip(self.weights) {
            *s *= wt;
        }
        flops.add(FlopCategory::NoiseWeighting, slopes.len() as u64);
        flops.add(
            FlopCategory::Sensor,
            self.pupil.apply_s_transpose(slopes, g)?,
        );
        Ok(())
    }

    /// Right-hand side for measured slopes `d`: `Sᵀ·C_e⁻¹·d`, preceded by
    /// `Kᵀ` in generator space.
    pub fn rhs(&self, slopes: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>> {
        check_len(self.weights.len(), slopes.len())?;
        let weighted: Vec<f64> = slopes
            .iter()
            .zip(self.weights)
            .map(|(d, w)| d * w)
            .collect();
        flops.add(FlopCategory::NoiseWeighting, weighted.len() as u64);
        let mut b = vec![0.0; self.dim()];
        flops.add(
            FlopCategory::Sensor,
            self.pupil.apply_s_transpose(&weighted, &mut b)?,
        );
        if self.space == Space::U {
            flops.add(
                FlopCategory::Fractal,
                self.fractal.apply(Transform::Transpose, &mut b)?,
            );
        }
        Ok(b)
    }

    /// Wavefront corresponding to unknowns `x` of this system.
    pub fn to_wavefront(&self, x: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>> {
        let mut w = x.to_vec();
        if self.space == Space::U {
            flops.add(
                FlopCategory::Fractal,
                self.fractal.apply(Transform::Forward, &mut w)?,
            );
        }
        Ok(w)
    }
}

impl LinearOperator for NormalEquations<'_> {
    fn dim(&self) -> usize {
        self.fractal.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64], flops: &mut FlopCounter) -> Result<()> {
        let n = self.dim();
        check_len(n, x.len())?;
        check_len(n, y.len())?;
        let mut slopes = vec![0.0; self.weights.len()];
        let mut tmp = x.to_vec();
        match self.space {
            Space::W => {
                self.data_term(x, &mut slopes, y, flops)?;
                flops.add(
                    FlopCategory::Fractal,
                    self.fractal.apply(Transform::Inverse, &mut tmp)?,
                );
                flops.add(
                    FlopCategory::Fractal,
                    self.fractal.apply(Transform::InverseTranspose, &mut tmp)?,
                );
                for (yi, ti) in y.iter_mut().zip(&tmp) {
                    *yi += ti;
                }
            }
            Space::U => {
                flops.add(
                    FlopCategory::Fractal,
                    self.fractal.apply(Transform::Forward, &mut tmp)?,
                );
                self.data_term(&tmp, &mut slopes, y, flops)?;
                flops.add(
                    FlopCategory::Fractal,
                    self.fractal.apply(Transform::Transpose, y)?,
                );
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi += xi;
                }
            }
        }
        flops.add(FlopCategory::Vector, n as u64);
        Ok(())
    }
}
