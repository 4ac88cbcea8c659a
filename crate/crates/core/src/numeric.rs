//! Small numerical kernels: compensated summation, log-factorials and
//! adaptive Gauss-Kronrod quadrature.

use alloc::vec::Vec;

/// Neumaier (improved Kahan-Babuska) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// `ln(n!)`, exact summation below 64 and `lgamma` above.
pub fn ln_factorial(n: u32) -> f64 {
    if n < 64 {
        compensated_sum((2..=n).map(|k| libm::log(k as f64)))
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `ln[d (d+1) ... (d+q-1)]` for `d = 2^tau`, evaluated without forming `2^tau`
/// products.
pub fn ln_rising_pow2(tau: u32, q: u32) -> f64 {
    let d = libm::exp2(tau as f64);
    let base = tau as f64 * core::f64::consts::LN_2;
    compensated_sum((0..q).map(|k| base + libm::log1p(k as f64 / d)))
}

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        // odd Kronrod indices coincide with the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration over consecutive segments
/// `breaks[0]..breaks[1]..`, refined until the summed error estimate drops
/// below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    const MAX_INTERVALS: usize = 20_000;
    let mut parts: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gauss_kronrod_15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total = compensated_sum(parts.iter().map(|p| p.2));
        let err = compensated_sum(parts.iter().map(|p| p.3));
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= MAX_INTERVALS {
            return total;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (a, b, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval exhausted at floating-point resolution
            let (v, _) = gauss_kronrod_15(&f, a, b);
            parts.push((a, b, v, 0.0));
            continue;
        }
        let (v1, e1) = gauss_kronrod_15(&f, a, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, b);
        parts.push((a, mid, v1, e1));
        parts.push((mid, b, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1.0e16];
        xs.extend(core::iter::repeat(1.0).take(1000));
        xs.push(-1.0e16);
        assert_eq!(compensated_sum(xs.iter().copied()), 1000.0);
    }

    #[test]
    fn ln_factorial_matches_products() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(8) - (40320.0f64).ln()).abs() < 1e-13);
        assert!((ln_factorial(70) - libm::lgamma(71.0)).abs() < 1e-10);
    }

    #[test]
    fn rising_power_matches_direct_product() {
        // d = 4, q = 3: 4 * 5 * 6 = 120
        assert!((ln_rising_pow2(2, 3) - 120f64.ln()).abs() < 1e-14);
        assert_eq!(ln_rising_pow2(5, 0), 0.0);
    }

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate(|x| x * x * x, &[0.0, 2.0], 1e-14, 1e-14);
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn integrates_peaked_integrand() {
        // x^8 e^{-x} over [0, 200] = 8! to double precision
        let v = integrate(|x| x.powi(8) * (-x).exp(), &[0.0, 1.0, 10.0, 200.0], 0.0, 1e-12);
        assert!((v / 40320.0 - 1.0).abs() < 1e-11);
    }
}
