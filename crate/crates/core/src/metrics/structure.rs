use crate::error::{check_len, Error, Result};
use crate::fractal::PhaseGrid;

/// Averaged structure function of a set of screens.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureEstimate {
    side: usize,
    /// `D(δ)` for `δ ∈ [−(side−1), side−1]²`, row-major over `(δy, δx)`.
    map: Vec<f64>,
}

/// One annulus of the radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBin {
    /// Mean offset length of the bin.
    pub r: f64,
    /// Mean of the 2D map over the bin.
    pub value: f64,
    /// Number of offsets in the bin.
    pub offsets: usize,
}

impl StructureEstimate {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Width of the offset map, `2·side − 1`.
    pub fn map_width(&self) -> usize {
        2 * self.side - 1
    }

    pub fn map(&self) -> &[f64] {
        &self.map
    }

    /// `D(δx, δy)`.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let c = self.side as isize - 1;
        self.map[((dy + c) * self.map_width() as isize + dx + c) as usize]
    }

    /// Mean of estimates over disjoint sets of screens, weighted by the
    /// number of screens in each.
    pub fn weighted_mean(parts: &[(usize, StructureEstimate)]) -> Result<StructureEstimate> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::Domain("no estimates given".into()))?;
        let mut map = vec![0.0; first.map.len()];
        let mut total = 0usize;
        for (count, est) in parts {
            check_len(first.side, est.side)?;
            for (m, v) in map.iter_mut().zip(&est.map) {
                *m += *count as f64 * v;
            }
            total += count;
        }
        if total == 0 {
            return Err(Error::Domain("estimates cover no screens".into()));
        }
        map.iter_mut().for_each(|m| *m /= total as f64);
        Ok(StructureEstimate {
            side: first.side,
            map,
        })
    }

    /// Radial profile: offsets binned by `round(|δ|)`, each bin averaging
    /// the map with equal weight per offset. Bin 0 is omitted.
    pub fn radial_profile(&self) -> Vec<RadialBin> {
        let c = self.side as isize - 1;
        let nbins = (std::f64::consts::SQRT_2 * c as f64).round() as usize + 1;
        let mut sum = vec![0.0; nbins];
        let mut rsum = vec![0.0; nbins];
        let mut count = vec![0usize; nbins];
        for dy in -c..=c {
            for dx in -c..=c {
                let r = (dx as f64).hypot(dy as f64);
                let b = r.round() as usize;
                sum[b] += self.at(dx, dy);
                rsum[b] += r;
                count[b] += 1;
            }
        }
        (1..nbins)
            .filter(|&b| count[b] > 0)
            .map(|b| RadialBin {
                r: rsum[b] / count[b] as f64,
                value: sum[b] / count[b] as f64,
                offsets: count[b],
            })
            .collect()
    }
}

/// Averages `[w(x+δ) − w(x)]²` over all positions of the full grid and over
/// all screens, for every offset δ.
pub fn empirical_structure_function(screens: &[PhaseGrid]) -> Result<StructureEstimate> {
    let first = screens
        .first()
        .ok_or_else(|| Error::Domain("no screens given".into()))?;
    let n = first.side();
    for s in screens {
        check_len(n, s.side())?;
    }
    let c = n - 1;
    let width = 2 * n - 1;
    let mut map = vec![0.0; width * width];
    // D(δ) = D(−δ): accumulate δy ≥ 0 and mirror.
    for dy in 0..n {
        for dx in -(c as isize)..=(c as isize) {
            if dy == 0 && dx < 0 {
                continue;
            }
            let (x0, x1) = if dx >= 0 {
                (0, n - dx as usize)
            } else {
                ((-dx) as usize, n)
            };
            let mut acc = 0.0;
            for s in screens {
                let v = s.values();
                for y in 0..n - dy {
                    let row = &v[y * n..(y + 1) * n];
                    let shifted = &v[(y + dy) * n..(y + dy + 1) * n];
                    for x in x0..x1 {
                        let d = shifted[(x as isize + dx) as usize] - row[x];
                        acc += d * d;
                    }
                }
            }
            let pairs = (n - dy) * (x1 - x0) * screens.len();
            let value = acc / pairs as f64;
            let at = |dx: isize, dy: isize| {
                ((dy + c as isize) as usize) * width + (dx + c as isize) as usize
            };
            map[at(dx, dy as isize)] = value;
            map[at(-dx, -(dy as isize))] = value;
        }
    }
    Ok(StructureEstimate { side: n, map })
}
