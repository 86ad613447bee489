//! Summation helpers with order-stable rounding.

/// Neumaier-compensated sum.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A partial log-sum-exp `max + log(sum)`, where `sum` is a compensated sum
/// of `exp(x − max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    pub const EMPTY: LogSum = LogSum {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    /// Sequential log-sum-exp of a slice of log values.
    pub fn of(logs: &[f64]) -> LogSum {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return LogSum::EMPTY;
        }
        LogSum {
            max,
            sum: neumaier_sum(logs.iter().map(|&x| (x - max).exp())),
        }
    }

    pub fn combine(self, other: LogSum) -> LogSum {
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        let max = self.max.max(other.max);
        LogSum {
            max,
            sum: self.sum * (self.max - max).exp() + other.sum * (other.max - max).exp(),
        }
    }

    pub fn value(self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Pairwise tree reduction in a fixed order.
pub fn tree_reduce(mut parts: Vec<LogSum>) -> LogSum {
    if parts.is_empty() {
        return LogSum::EMPTY;
    }
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0].combine(c[1]) } else { c[0] })
            .collect();
    }
    parts[0]
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, r²)`. A series
/// with no variance in `y` has `r² = 1`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= 1e-300 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Some((slope, intercept, r2))
}
