/// Monte Carlo estimate with its standard error and a bound on the bias
/// from truncating paths at the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub bias_bound: f64,
}

impl Estimate {
    pub(super) fn new(mean: f64, std_error: f64, n: u64, bias_bound: f64) -> Self {
        Estimate {
            mean,
            std_error,
            n,
            bias_bound,
        }
    }

    /// `|mean − reference| / std_error`; infinite if the error is zero and the
    /// values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.mean - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

/// Running mean and sum of squared deviations (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
pub(super) struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}
