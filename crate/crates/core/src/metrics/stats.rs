use crate::error::{check_len, Error, Result};
use crate::sensor::Pupil;

/// Piston-removed residual over the pupil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    /// Root mean square, rad.
    pub rms: f64,
    /// Variance, rad².
    pub variance: f64,
}

/// Statistics of `estimate − truth` over the pupil samples, piston removed.
pub fn residual_stats(estimate: &[f64], truth: &[f64], pupil: &Pupil) -> Result<ResidualStats> {
    let mask = pupil.sample_mask();
    check_len(mask.len(), estimate.len())?;
    check_len(mask.len(), truth.len())?;
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::Domain("pupil has no samples".into()));
    }
    let residual = || {
        estimate
            .iter()
            .zip(truth)
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|((e, t), _)| e - t)
    };
    let mean = residual().sum::<f64>() / count as f64;
    let variance = residual().map(|e| (e - mean).powi(2)).sum::<f64>() / count as f64;
    Ok(ResidualStats {
        rms: variance.sqrt(),
        variance,
    })
}

/// Strehl ratio under the Maréchal approximation, `exp(−σ²)`.
pub fn strehl(variance: f64) -> f64 {
    (-variance).exp()
}
