//! Small floating-point helpers shared by the accounting modules.

/// Compensated (Kahan) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<KahanSum>().total()
}

/// `ln Σ exp(x_i)` with the maximum factored out. Returns `-inf` for an empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + kahan_sum(xs.iter().map(|x| (x - max).exp())).ln()
}

/// `ln(2^k - 1)` for k ≥ 1.
pub fn ln_pow2_minus_one(k: usize) -> f64 {
    if k <= 50 {
        (((1u64 << k) - 1) as f64).ln()
    } else {
        let a = k as f64 * std::f64::consts::LN_2;
        a + (-(-a).exp_m1()).ln()
    }
}

/// `ln(e^a - 1)` for a > 0.
pub fn ln_exp_minus_one(a: f64) -> f64 {
    if a > 1.0 {
        a + (-(-a).exp_m1()).ln()
    } else {
        a.exp_m1().ln()
    }
}
