use std::fmt;

/// Operator families tallied separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlopCategory {
    /// `K`, `Kᵀ`, `K⁻¹`, `K⁻ᵀ`
    Fractal,
    /// `S`, `Sᵀ`
    Sensor,
    /// `C_e⁻¹`
    NoiseWeighting,
    /// Dot products, axpys and the regularization sum.
    Vector,
    /// Diagonal preconditioner application.
    Preconditioner,
}

impl FlopCategory {
    pub const ALL: [FlopCategory; 5] = [
        FlopCategory::Fractal,
        FlopCategory::Sensor,
        FlopCategory::NoiseWeighting,
        FlopCategory::Vector,
        FlopCategory::Preconditioner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlopCategory::Fractal => "fractal",
            FlopCategory::Sensor => "sensor",
            FlopCategory::NoiseWeighting => "noise",
            FlopCategory::Vector => "vector",
            FlopCategory::Preconditioner => "precond",
        }
    }
}

/// Floating-point operation tallies; a multiply-add counts as 2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlopCounter {
    tallies: [u64; 5],
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, category: FlopCategory, flops: u64) {
        self.tallies[category as usize] += flops;
    }

    pub fn get(&self, category: FlopCategory) -> u64 {
        self.tallies[category as usize]
    }

    pub fn total(&self) -> u64 {
        self.tallies.iter().sum()
    }

    pub fn reset(&mut self) {
        self.tallies = [0; 5];
    }

    pub fn merge(&mut self, other: &FlopCounter) {
        for (a, b) in self.tallies.iter_mut().zip(other.tallies) {
            *a += b;
        }
    }

    /// Dot product of length `n`: `2n − 1`.
    pub fn dot(&mut self, n: usize) {
        self.add(FlopCategory::Vector, (2 * n).saturating_sub(1) as u64);
    }

    /// `y += a·x` of length `n`.
    pub fn axpy(&mut self, n: usize) {
        self.add(FlopCategory::Vector, 2 * n as u64);
    }
}

/// Reference operation counts for the reconstruction, in units of the
/// number of unknowns `N`.
#[derive(Debug, Clone, Copy)]
pub struct FlopModel;

impl FlopModel {
    /// Start-up cost from a zero initial guess, solving for wavefront samples.
    pub const OVERHEAD_W: f64 = 4.0;
    /// Start-up cost from a zero initial guess, solving for generators.
    pub const OVERHEAD_U: f64 = 10.0;
    /// Fixed cost of the tabulated totals.
    pub const TABLE_OVERHEAD: f64 = 23.0;
    pub const CG_ITERATION: f64 = 33.0;
    pub const PCG_ITERATION: f64 = 34.0;

    /// Exact cost of one application of any fractal operator on `n_u` samples.
    pub fn fractal_operator(n_u: usize) -> u64 {
        6 * n_u as u64 - 14
    }

    pub fn per_iteration(preconditioned: bool) -> f64 {
        if preconditioned {
            Self::PCG_ITERATION
        } else {
            Self::CG_ITERATION
        }
    }

    /// `(overhead + c·iterations)·N` with `c` = 33 (CG) or 34 (PCG).
    pub fn total(overhead: f64, preconditioned: bool, iterations: usize, n: usize) -> f64 {
        (overhead + Self::per_iteration(preconditioned) * iterations as f64) * n as f64
    }
}

/// Measured tallies next to the model prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopReport {
    pub unknowns: usize,
    pub iterations: usize,
    pub preconditioned: bool,
    pub measured: FlopCounter,
    /// `(23 + c·iterations)·N`
    pub model_table: f64,
    /// `(overhead + c·iterations)·N` with the zero-start overhead.
    pub model_zero_start: f64,
}

impl FlopReport {
    pub fn ratio_to_table(&self) -> f64 {
        self.measured.total() as f64 / self.model_table
    }

    pub fn per_unknown(&self) -> f64 {
        self.measured.total() as f64 / self.unknowns as f64
    }
}

/// Compares measured tallies against the model for a solve of `iterations`
/// iterations over `unknowns` unknowns.
pub fn flop_report(
    counter: &FlopCounter,
    unknowns: usize,
    iterations: usize,
    preconditioned: bool,
    generator_space: bool,
) -> FlopReport {
    let overhead = if generator_space {
        FlopModel::OVERHEAD_U
    } else {
        FlopModel::OVERHEAD_W
    };
    FlopReport {
        unknowns,
        iterations,
        preconditioned,
        measured: *counter,
        model_table: FlopModel::total(
            FlopModel::TABLE_OVERHEAD,
            preconditioned,
            iterations,
            unknowns,
        ),
        model_zero_start: FlopModel::total(overhead, preconditioned, iterations, unknowns),
    }
}

impl fmt::Display for FlopReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.unknowns as f64;
        writeln!(f, "{:<10} {:>14} {:>10}", "category", "flops", "flops/N")?;
        for c in FlopCategory::ALL {
            let v = self.measured.get(c);
            writeln!(f, "{:<10} {:>14} {:>10.2}", c.name(), v, v as f64 / n)?;
        }
        let total = self.measured.total();
        writeln!(
            f,
            "{:<10} {:>14} {:>10.2}",
            "total",
            total,
            total as f64 / n
        )?;
        writeln!(
            f,
            "{:<10} {:>14.0} {:>10.2}",
            "model",
            self.model_table,
            self.model_table / n
        )?;
        write!(
            f,
            "{:<10} {:>14.0} {:>10.2}",
            "model-0",
            self.model_zero_start,
            self.model_zero_start / n
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_accumulates_and_resets() {
        let mut c = FlopCounter::new();
        c.add(FlopCategory::Fractal, 136);
        c.dot(10);
        c.axpy(10);
        assert_eq!(c.get(FlopCategory::Fractal), 136);
        assert_eq!(c.get(FlopCategory::Vector), 19 + 20);
        assert_eq!(c.total(), 175);
        let mut d = FlopCounter::new();
        d.merge(&c);
        d.merge(&c);
        assert_eq!(d.total(), 350);
        c.reset();
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn model_values() {
        assert_eq!(FlopModel::fractal_operator(25), 136);
        assert_eq!(FlopModel::total(23.0, true, 10, 100), 36_300.0);
        assert_eq!(FlopModel::total(23.0, false, 10, 100), 35_300.0);
        let r = flop_report(&FlopCounter::new(), 100, 10, true, true);
        assert_eq!(r.model_zero_start, (10.0 + 340.0) * 100.0);
        assert!(format!("{r}").contains("fractal"));
    }
}
