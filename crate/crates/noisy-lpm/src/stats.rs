//! Small numeric helpers: standard-normal functions, stable logistic forms,
//! and compensated summation.

use libm::erfc;

/// ln(2π)/2, the normalising constant of the standard normal log-density.
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density φ(x).
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal log-density log φ(x).
pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - HALF_LN_TWO_PI
}

/// Standard normal CDF Φ(x), accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability mass a Normal(centre, sd²) assigns to [lo, hi].
///
/// Computed as a difference of upper tails so that windows far from the
/// centre do not lose precision to cancellation.
pub fn norm_window(centre: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let a = (lo - centre) / sd;
    let b = (hi - centre) / sd;
    // Φ(b) − Φ(a) = Q(a) − Q(b) with Q the upper tail.
    let q = |t: f64| 0.5 * erfc(t / std::f64::consts::SQRT_2);
    (q(a) - q(b)).max(0.0)
}

/// Logistic function 1/(1+e^{−x}).
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// (log p, log(1−p)) for p = logistic(x), stable for any x.
pub fn log_logistic_pair(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        let l = (-x).exp().ln_1p(); // log(1+e^{−x})
        (-l, -x - l)
    } else {
        let l = x.exp().ln_1p(); // log(1+e^{x})
        (x - l, -l)
    }
}

/// Neumaier-compensated accumulator for long floating-point sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
