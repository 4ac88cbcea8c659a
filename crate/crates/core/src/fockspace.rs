//! Fock-space delocalization observables and their closed-form references.
//!
//! Conventions: `N = 2^L`, `tau = t - 1`, `d = 2^tau`. Densities are over the
//! bit-string probability `p`; internally integrals run over `x = N p`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;


use crate::dual::ipr_via_m;
use crate::model::{CircuitSpec, Variant};
use crate::numeric::{compensated_sum, integrate, ln_factorial, ln_rising_pow2};
use crate::statevector::StateVector;
use crate::{Error, Result};

/// `I_q = sum_z |<z|psi>|^{2q}`.
pub fn ipr(state: &StateVector, q: u32) -> Result<f64> {
    if q < 1 {
        return Err(Error::InvalidOrder(q));
    }
    Ok(compensated_sum(state.amplitudes().iter().map(|a| a.norm_sqr().powi(q as i32))))
}

/// `sum_z p_z^q` over precomputed probabilities.
pub fn ipr_of_probabilities(probs: &[f64], q: u32) -> f64 {
    compensated_sum(probs.iter().map(|p| p.powi(q as i32)))
}

/// `S_q = ln(I_q) / (1 - q)`.
pub fn participation_entropy(ipr: f64, q: u32) -> Result<f64> {
    if q == 1 {
        return Err(Error::InvalidOrder(q));
    }
    Ok(ipr.ln() / (1.0 - q as f64))
}

fn check_order(q: u32) -> Result<()> {
    if q < 1 {
        return Err(Error::InvalidOrder(q));
    }
    Ok(())
}

/// `ln[q! d^q / (d (d+1) ... (d+q-1))]`, the Haar factor at `d = 2^tau`.
pub fn ln_haar_bracket(tau: u32, q: u32) -> f64 {
    ln_factorial(q) + q as f64 * tau as f64 * LN_2 - ln_rising_pow2(tau, q)
}

/// `ln I_q(t)` of the self-dual chain.
pub fn ln_ipr_du_analytic(sites: usize, t: u32, q: u32) -> Result<f64> {
    check_order(q)?;
    if t < 1 {
        return Err(Error::InvalidTime(t));
    }
    Ok(sites as f64 * (1.0 - q as f64) * LN_2 + ln_haar_bracket(t - 1, q))
}

/// `I_q(t) = 2^{L(1-q)} q! 2^{q tau} / [2^tau (2^tau+1) ... (2^tau+q-1)]`.
pub fn ipr_du_analytic(sites: usize, t: u32, q: u32) -> Result<f64> {
    ln_ipr_du_analytic(sites, t, q).map(f64::exp)
}

/// Haar-state value `q! 2^{L(1-q)}`.
pub fn ipr_haar(sites: usize, q: u32) -> f64 {
    (ln_factorial(q) + sites as f64 * (1.0 - q as f64) * LN_2).exp()
}

pub fn s_q_du_analytic(sites: usize, t: u32, q: u32) -> Result<f64> {
    if q == 1 {
        return Err(Error::InvalidOrder(q));
    }
    Ok(ln_ipr_du_analytic(sites, t, q)? / (1.0 - q as f64))
}

/// `L ln 2 + ln(q!)/(1-q)`.
pub fn s_q_haar(sites: usize, q: u32) -> Result<f64> {
    if q <= 1 {
        return Err(Error::InvalidOrder(q));
    }
    Ok(sites as f64 * LN_2 + ln_factorial(q) / (1.0 - q as f64))
}

/// `c_pm(t) = 1 pm cos^t(2 theta)`.
pub fn perturbation_weights(t: u32, theta: f64) -> (f64, f64) {
    let c = (2.0 * theta).cos().powi(t as i32);
    (1.0 + c, 1.0 - c)
}

/// Boundary-kick IPR: `I_q^DU(t) ([c_+]^q + [c_-]^q) / 2`.
pub fn ipr_perturbed_analytic(sites: usize, t: u32, q: u32, theta: f64) -> Result<f64> {
    let du = ipr_du_analytic(sites, t, q)?;
    let (cp, cm) = perturbation_weights(t, theta);
    Ok(du * (cp.powi(q as i32) + cm.powi(q as i32)) / 2.0)
}

/// Closed-form IPR for the variants that have one; `None` otherwise.
pub fn analytic_ipr(spec: &CircuitSpec, t: u32, q: u32) -> Option<f64> {
    if t == 0 {
        return Some(1.0);
    }
    match spec.variant {
        Variant::DualUnitary => ipr_du_analytic(spec.sites, t, q).ok(),
        Variant::BoundaryKick { theta } => ipr_perturbed_analytic(spec.sites, t, q, theta).ok(),
        Variant::BoundaryGeneric { gate } => ipr_via_m(spec.sites, t, q, &gate).ok(),
        _ => None,
    }
}

/// Continuous part plus atoms of a bit-string probability law.
pub trait Density {
    fn sites(&self) -> usize;
    /// Density of the continuous part at `p`.
    fn pdf(&self, p: f64) -> f64;
    /// Right-continuous CDF including atoms.
    fn cdf(&self, p: f64) -> f64;
    /// Point masses `(location, weight)`.
    fn atoms(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
    /// Sorted points in `p` covering the continuous support, including kinks.
    fn breakpoints(&self) -> Vec<f64>;

    fn dim(&self) -> f64 {
        libm::exp2(self.sites() as f64)
    }

    /// `lim_{x -> p^-} cdf(x)`.
    fn cdf_left(&self, p: f64) -> f64 {
        let jump: f64 = self.atoms().iter().filter(|a| a.0 == p).map(|a| a.1).sum();
        self.cdf(p) - jump
    }
}

/// `[0, 1, 2, 4, ..., edge]` in units of `x = N p`.
fn geometric_breaks(edge: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut x = 1.0;
    while x < edge {
        out.push(x);
        x *= 2.0;
    }
    out.push(edge);
    out
}

/// Finite-time law of the self-dual chain,
/// `N (1 - 2^-tau) (1 - N p / 2^tau)^{2^tau - 2}` on `[0, 2^tau / N]`;
/// a single atom at `1/N` for `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualUnitaryDensity {
    pub sites: usize,
    pub t: u32,
}

impl DualUnitaryDensity {
    pub fn new(sites: usize, t: u32) -> Result<Self> {
        if t < 1 {
            return Err(Error::InvalidTime(t));
        }
        if t > 64 {
            return Err(Error::InvalidTime(t));
        }
        Ok(Self { sites, t })
    }

    fn width(&self) -> f64 {
        libm::exp2((self.t - 1) as f64)
    }

    /// Density in `x = N p` (integrates to one over `[0, 2^tau]`).
    fn scaled_pdf(&self, x: f64) -> f64 {
        let d = self.width();
        if self.t == 1 || !(0.0..=d).contains(&x) {
            return 0.0;
        }
        if self.t == 2 {
            return 0.5;
        }
        (1.0 - 1.0 / d) * ((d - 2.0) * (-x / d).ln_1p()).exp()
    }

    fn scaled_cdf(&self, x: f64) -> f64 {
        let d = self.width();
        if x < 0.0 {
            return 0.0;
        }
        if self.t == 1 {
            return if x >= 1.0 { 1.0 } else { 0.0 };
        }
        if x >= d {
            return 1.0;
        }
        -((d - 1.0) * (-x / d).ln_1p()).exp_m1()
    }
}

impl Density for DualUnitaryDensity {
    fn sites(&self) -> usize {
        self.sites
    }

    fn pdf(&self, p: f64) -> f64 {
        let n = self.dim();
        n * self.scaled_pdf(n * p)
    }

    fn cdf(&self, p: f64) -> f64 {
        self.scaled_cdf(self.dim() * p)
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        if self.t == 1 {
            vec![(1.0 / self.dim(), 1.0)]
        } else {
            Vec::new()
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.t == 1 {
            return Vec::new();
        }
        let n = self.dim();
        geometric_breaks(self.width()).into_iter().map(|x| x / n).collect()
    }
}

/// `P_DU(p; t)` for `t >= 2`.
pub fn p_du_density(p: f64, sites: usize, t: u32) -> Result<f64> {
    if t < 2 {
        return Err(Error::InvalidTime(t));
    }
    Ok(DualUnitaryDensity::new(sites, t)?.pdf(p))
}

/// `N exp(-N p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PorterThomas {
    pub sites: usize,
}

/// Upper cut of the Porter-Thomas quadrature in `x = N p`.
const PORTER_THOMAS_CUT: f64 = 1024.0;

impl Density for PorterThomas {
    fn sites(&self) -> usize {
        self.sites
    }

    fn pdf(&self, p: f64) -> f64 {
        let n = self.dim();
        if p < 0.0 {
            0.0
        } else {
            n * (-n * p).exp()
        }
    }

    fn cdf(&self, p: f64) -> f64 {
        if p <= 0.0 {
            0.0
        } else {
            -(-self.dim() * p).exp_m1()
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let n = self.dim();
        geometric_breaks(PORTER_THOMAS_CUT).into_iter().map(|x| x / n).collect()
    }
}

pub fn porter_thomas_density(p: f64, sites: usize) -> f64 {
    PorterThomas { sites }.pdf(p)
}

/// Weights below this are treated as a point mass at `p = 0`.
pub const DEGENERATE_WEIGHT: f64 = 1e-12;

/// Boundary-kick law `(1/2) sum_pm P_DU(p / c_pm; t) / c_pm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedDensity {
    pub sites: usize,
    pub t: u32,
    pub theta: f64,
}

impl PerturbedDensity {
    pub fn new(sites: usize, t: u32, theta: f64) -> Result<Self> {
        DualUnitaryDensity::new(sites, t)?;
        Ok(Self { sites, t, theta })
    }

    fn base(&self) -> DualUnitaryDensity {
        DualUnitaryDensity {
            sites: self.sites,
            t: self.t,
        }
    }

    pub fn weights(&self) -> (f64, f64) {
        perturbation_weights(self.t, self.theta)
    }

    fn components(&self) -> [f64; 2] {
        let (cp, cm) = self.weights();
        [cp, cm]
    }
}

impl Density for PerturbedDensity {
    fn sites(&self) -> usize {
        self.sites
    }

    fn pdf(&self, p: f64) -> f64 {
        let base = self.base();
        self.components()
            .iter()
            .filter(|&&c| c >= DEGENERATE_WEIGHT)
            .map(|&c| 0.5 * base.pdf(p / c) / c)
            .sum()
    }

    fn cdf(&self, p: f64) -> f64 {
        let base = self.base();
        self.components()
            .iter()
            .map(|&c| {
                if c < DEGENERATE_WEIGHT {
                    if p >= 0.0 {
                        0.5
                    } else {
                        0.0
                    }
                } else {
                    0.5 * base.cdf(p / c)
                }
            })
            .sum()
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for c in self.components() {
            let loc = if c < DEGENERATE_WEIGHT {
                Some(0.0)
            } else if self.t == 1 {
                Some(c / self.dim())
            } else {
                None
            };
            if let Some(loc) = loc {
                match out.iter_mut().find(|a| a.0 == loc) {
                    Some(a) => a.1 += 0.5,
                    None => out.push((loc, 0.5)),
                }
            }
        }
        out
    }

    fn breakpoints(&self) -> Vec<f64> {
        let base = self.base().breakpoints();
        let mut out: Vec<f64> = self
            .components()
            .iter()
            .filter(|&&c| c >= DEGENERATE_WEIGHT)
            .flat_map(|&c| base.iter().map(move |p| p * c))
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }
}

/// Continuous part of the boundary-kick law at `p` (atoms excluded).
pub fn p_perturbed_density(p: f64, sites: usize, t: u32, theta: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::InvalidTime(t));
    }
    Ok(PerturbedDensity::new(sites, t, theta)?.pdf(p))
}

/// `I_q = 2^L int p^q P(p) dp`, atoms included.
pub fn moment_of_density<D: Density + ?Sized>(density: &D, q: u32) -> f64 {
    let n = density.dim();
    let atoms = n * compensated_sum(density.atoms().iter().map(|&(p, w)| w * p.powi(q as i32)));
    let breaks: Vec<f64> = density.breakpoints().iter().map(|p| p * n).collect();
    if breaks.len() < 2 {
        return atoms;
    }
    // N int p^q P(p) dp = N^{-q} int x^q P(x/N) dx
    let scaled = integrate(|x| x.powi(q as i32) * density.pdf(x / n), &breaks, 0.0, 1e-12);
    atoms + scaled * n.powi(-(q as i32))
}

/// Histogram of bit-string probabilities, equal-width in `N p` with a
/// separate bucket for exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapHistogram {
    pub sites: usize,
    pub t: u32,
    /// Bin edges over `p`; `edges.len() == counts.len() + 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub zero_count: u64,
    /// Samples above the last edge.
    pub overflow: u64,
    pub total: u64,
}

impl OverlapHistogram {
    /// Empirical density of the nonzero samples over `p`, normalized by all samples.
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| c as f64 / (self.total as f64 * (w[1] - w[0])))
            .collect()
    }

    pub fn zero_weight(&self) -> f64 {
        self.zero_count as f64 / self.total as f64
    }
}

pub const MIN_BINS: usize = 10;

/// Bins `probs` on `[0, x_max / N]`; `x_max` defaults to `ceil(max N p)`.
pub fn histogram(probs: &[f64], sites: usize, t: u32, bins: usize, x_max: Option<f64>) -> Result<OverlapHistogram> {
    if bins < MIN_BINS {
        return Err(Error::InvalidArgument("histogram needs at least 10 bins"));
    }
    let n = libm::exp2(sites as f64);
    let x_max = match x_max {
        Some(x) if x > 0.0 && x.is_finite() => x,
        Some(_) => return Err(Error::InvalidArgument("histogram range must be positive")),
        None => probs.iter().fold(0.0f64, |m, &p| m.max(p * n)).ceil().max(1.0),
    };
    let width = x_max / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 * width / n).collect();
    let mut counts = vec![0u64; bins];
    let (mut zero_count, mut overflow) = (0u64, 0u64);
    for &p in probs {
        if p == 0.0 {
            zero_count += 1;
            continue;
        }
        let x = p * n;
        if x > x_max {
            overflow += 1;
            continue;
        }
        let k = ((x / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(OverlapHistogram {
        sites,
        t,
        edges,
        counts,
        zero_count,
        overflow,
        total: probs.len() as u64,
    })
}

/// Relative distance within which a sample is identified with an atom.
pub const ATOM_SNAP_REL: f64 = 1e-9;

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// `reference`. Samples within [`ATOM_SNAP_REL`] of an atom are moved onto it.
pub fn ks_statistic<D: Density + ?Sized>(samples: &[f64], reference: &D) -> f64 {
    let atoms = reference.atoms();
    let scale = 1.0 / reference.dim();
    let mut xs: Vec<f64> = samples
        .iter()
        .map(|&p| {
            atoms
                .iter()
                .find(|a| (p - a.0).abs() <= ATOM_SNAP_REL * a.0.max(scale))
                .map_or(p, |a| a.0)
        })
        .collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        worst = worst
            .max((j as f64 / n - reference.cdf(v)).abs())
            .max((i as f64 / n - reference.cdf_left(v)).abs());
        i = j;
    }
    for &(a, _) in &atoms {
        let below = xs.partition_point(|&x| x < a) as f64;
        let upto = xs.partition_point(|&x| x <= a) as f64;
        worst = worst
            .max((upto / n - reference.cdf(a)).abs())
            .max((below / n - reference.cdf_left(a)).abs());
    }
    worst
}

/// KS distance against an arbitrary continuous CDF.
pub fn ks_statistic_fn<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// One `(t, q)` cell of an IPR time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IprRow {
    pub t: u32,
    pub q: u32,
    pub ipr: f64,
    pub entropy: f64,
    pub ipr_analytic: Option<f64>,
    pub entropy_analytic: Option<f64>,
    /// `I_q / (q! 2^{L(1-q)})`.
    pub haar_ratio: f64,
}

pub type IprSeries = Vec<IprRow>;

/// Rows for one evolved state, `q >= 2` each.
pub fn ipr_rows(spec: &CircuitSpec, t: u32, probs: &[f64], orders: &[u32]) -> Result<Vec<IprRow>> {
    orders
        .iter()
        .map(|&q| {
            if q < 2 {
                return Err(Error::InvalidOrder(q));
            }
            let value = ipr_of_probabilities(probs, q);
            let analytic = analytic_ipr(spec, t, q);
            Ok(IprRow {
                t,
                q,
                ipr: value,
                entropy: participation_entropy(value, q)?,
                ipr_analytic: analytic,
                entropy_analytic: analytic.map(|a| a.ln() / (1.0 - q as f64)),
                haar_ratio: value / ipr_haar(spec.sites, q),
            })
        })
        .collect()
}

/// First `t` whose value lies within `threshold` of `target`.
pub fn ergodic_approach_time(series: &[(u32, f64)], target: f64, threshold: f64) -> Option<u32> {
    series.iter().find(|(_, s)| (s - target).abs() < threshold).map(|&(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::evolve_from_zero;
    use core::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn product_state_is_localized() {
        let s = StateVector::init_zero(6).unwrap();
        for q in 1..=8 {
            assert_eq!(ipr(&s, q).unwrap(), 1.0);
        }
        assert_eq!(participation_entropy(1.0, 3).unwrap(), 0.0);
        assert!(participation_entropy(1.0, 1).is_err());
    }

    #[test]
    fn first_period_values() {
        let l = 10;
        let s = evolve_from_zero(&CircuitSpec::self_dual(l, PI / 3.0), 1).unwrap();
        for q in 2..=8u32 {
            let want = 2f64.powi(l as i32 * (1 - q as i32));
            assert!(rel(ipr(&s, q).unwrap(), want) < 1e-12);
        }
        assert!((ipr(&s, 1).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn du_closed_form_values() {
        for q in 2..=8 {
            let want = 2f64.powi(7 * (1 - q as i32));
            assert!(rel(ipr_du_analytic(7, 1, q).unwrap(), want) < 1e-13);
        }
        // q = 2, tau = 2: I_2 2^L = 2 * 16 / (4 * 5) = 1.6
        let l = 9;
        let v = ipr_du_analytic(l, 3, 2).unwrap() * 2f64.powi(l as i32);
        assert!((v - 1.6).abs() < 1e-13);
        assert!((ipr_du_analytic(l, 3, 2).unwrap() / ipr_haar(l, 2) - 0.8).abs() < 1e-13);
        // late times approach q! 2^{L(1-q)}
        for q in 2..=8 {
            assert!(rel(ipr_du_analytic(12, 60, q).unwrap(), ipr_haar(12, q)) < 1e-12);
        }
        assert!(ipr_du_analytic(5, 0, 2).is_err());
    }

    #[test]
    fn du_closed_form_is_overflow_safe() {
        let v = ipr_du_analytic(40, 2000, 64).unwrap();
        assert!(v.is_finite());
        let s = s_q_du_analytic(40, 2000, 64).unwrap();
        assert!((s - s_q_haar(40, 64).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn entropy_closed_form_values() {
        let l = 14;
        for q in 2..=8 {
            assert!((s_q_du_analytic(l, 1, q).unwrap() - l as f64 * LN_2).abs() < 1e-12);
            let late = l as f64 * LN_2 + ln_factorial(q) / (1.0 - q as f64);
            assert!((s_q_du_analytic(l, 80, q).unwrap() - late).abs() < 1e-10);
        }
        assert!((s_q_haar(l, 2).unwrap() - (l as f64 - 1.0) * LN_2).abs() < 1e-13);
        assert!(s_q_du_analytic(l, 3, 1).is_err());
    }

    #[test]
    fn second_period_density_is_uniform() {
        let l = 8;
        let n = 256.0;
        for k in 0..=10 {
            let p = k as f64 * 2.0 / n / 10.0;
            assert!((p_du_density(p, l, 2).unwrap() - n / 2.0).abs() < 1e-12);
        }
        assert_eq!(p_du_density(2.0 / n + 1e-9, l, 2).unwrap(), 0.0);
        assert!(p_du_density(0.0, l, 1).is_err());
    }

    #[test]
    fn densities_normalize() {
        for t in 2..=12 {
            let d = DualUnitaryDensity::new(10, t).unwrap();
            assert!((moment_of_density(&d, 0) / d.dim() - 1.0).abs() < 1e-10, "t = {t}");
            assert!((moment_of_density(&d, 1) - 1.0).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn porter_thomas_moments() {
        let pt = PorterThomas { sites: 12 };
        assert_eq!(porter_thomas_density(0.0, 12), 4096.0);
        assert!((moment_of_density(&pt, 1) - 1.0).abs() < 1e-10);
        assert!(rel(moment_of_density(&pt, 2), 2.0 / 4096.0) < 1e-10);
        assert!(rel(moment_of_density(&pt, 2), ipr_haar(12, 2)) < 1e-10);
    }

    #[test]
    fn large_time_density_approaches_porter_thomas() {
        // Frozen oracle: max_x |P_DU/P_PT - 1| on x in [0, 10] tends to
        // 31 * 2^-tau (second-order expansion of the log ratio at x = 10).
        for tau in 10..=16u32 {
            let t = tau + 1;
            let d = DualUnitaryDensity::new(12, t).unwrap();
            let pt = PorterThomas { sites: 12 };
            let n = d.dim();
            let worst = (0..=1000)
                .map(|k| {
                    let p = k as f64 * 0.01 / n;
                    (d.pdf(p) / pt.pdf(p) - 1.0).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 2f64.powi(5 - tau as i32), "tau = {tau}: {worst}");
            assert!(worst > 2f64.powi(4 - tau as i32), "tau = {tau}: {worst}");
        }
    }

    #[test]
    fn perturbed_limits() {
        let l = 10;
        for t in 1..=8 {
            for q in 2..=6 {
                let du = ipr_du_analytic(l, t, q).unwrap();
                assert!(rel(ipr_perturbed_analytic(l, t, q, PI / 4.0).unwrap(), du) < 1e-13);
                let frozen = ipr_perturbed_analytic(l, t, q, 0.0).unwrap();
                assert!(rel(frozen, du * 2f64.powi(q as i32 - 1)) < 1e-13);
            }
        }
        // theta = pi/14, q = 2, t = 2: c_pm = 1 pm cos^2(pi/7)
        let c = (PI / 7.0).cos();
        assert!((c - 0.900_968_867_902_419).abs() < 1e-15);
        let factor = ((1.0 + c * c).powi(2) + (1.0 - c * c).powi(2)) / 2.0;
        let got = ipr_perturbed_analytic(l, 2, 2, PI / 14.0).unwrap() / ipr_du_analytic(l, 2, 2).unwrap();
        assert!((got - factor).abs() < 1e-14);
    }

    #[test]
    fn perturbed_density_reduces_and_normalizes() {
        let l = 9;
        for t in 2..=7 {
            let du = DualUnitaryDensity::new(l, t).unwrap();
            let pd = PerturbedDensity::new(l, t, PI / 4.0).unwrap();
            for k in 0..50 {
                let p = k as f64 / 512.0 / 5.0;
                assert!((pd.pdf(p) - du.pdf(p)).abs() < 1e-9);
            }
            for theta in [0.0, PI / 14.0, 0.3, PI / 2.0] {
                let pd = PerturbedDensity::new(l, t, theta).unwrap();
                assert!((moment_of_density(&pd, 1) - 1.0).abs() < 1e-8, "t = {t}, theta = {theta}");
                let mass = pd.atoms().iter().map(|a| a.1).sum::<f64>()
                    + integrate(|p| pd.pdf(p), &pd.breakpoints(), 0.0, 1e-12);
                assert!((mass - 1.0).abs() < 1e-8);
            }
        }
        let frozen = PerturbedDensity::new(l, 3, 0.0).unwrap();
        assert_eq!(frozen.atoms(), vec![(0.0, 0.5)]);
        assert_eq!(frozen.cdf(0.0), 0.5);
        assert_eq!(frozen.cdf_left(0.0), 0.0);
    }

    #[test]
    fn histogram_accounts_for_every_sample() {
        let s = evolve_from_zero(&CircuitSpec::self_dual(8, PI / 3.0).with_variant(Variant::BoundaryKick { theta: 0.0 }), 4).unwrap();
        let probs = s.probabilities();
        let h = histogram(&probs, 8, 4, 20, None).unwrap();
        assert_eq!(h.zero_count + h.counts.iter().sum::<u64>() + h.overflow, 256);
        assert_eq!(h.zero_count, 128);
        assert!((compensated_sum(probs.iter().copied()) - 1.0).abs() < 1e-10);
        let mass: f64 = h.density().iter().zip(h.edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum();
        assert!((mass + h.zero_weight() - 1.0).abs() < 1e-12);
        assert!(histogram(&probs, 8, 4, 9, None).is_err());
    }

    #[test]
    fn ks_is_zero_against_matching_atom() {
        let s = evolve_from_zero(&CircuitSpec::self_dual(10, PI / 3.0), 1).unwrap();
        let d = DualUnitaryDensity::new(10, 1).unwrap();
        assert_eq!(ks_statistic(&s.probabilities(), &d), 0.0);
    }

    #[test]
    fn ks_detects_a_wrong_reference() {
        let probs: Vec<f64> = (0..1000).map(|k| (k as f64 + 0.5) / 1000.0 * 2.0 / 1024.0).collect();
        let uniform = DualUnitaryDensity::new(10, 2).unwrap();
        assert!(ks_statistic(&probs, &uniform) < 1e-3);
        let pt = PorterThomas { sites: 10 };
        assert!(ks_statistic(&probs, &pt) > 0.1);
        let direct = ks_statistic_fn(&probs, |p| uniform.cdf(p));
        assert!((direct - ks_statistic(&probs, &uniform)).abs() < 1e-12);
    }

    #[test]
    fn approach_time_picks_first_hit() {
        let series = [(0, 0.0), (1, 5.0), (2, 6.8), (3, 6.95), (4, 6.99)];
        assert_eq!(ergodic_approach_time(&series, 7.0, 0.1), Some(3));
        assert_eq!(ergodic_approach_time(&series, 9.0, 0.1), None);
    }

    #[test]
    fn rows_carry_bounds_and_entropy_identity() {
        let l = 10;
        let spec = CircuitSpec::self_dual(l, PI / 3.0);
        let ev = crate::statevector::FloquetEvolver::new(&spec).unwrap();
        let mut s = StateVector::init_zero(l).unwrap();
        let mut rows = Vec::new();
        ev.evolve(&mut s, 0, 8, |t, st| rows.extend(ipr_rows(&spec, t, &st.probabilities(), &[2, 3, 4, 8]).unwrap()))
            .unwrap();
        for r in rows {
            let floor = 2f64.powi(l as i32 * (1 - r.q as i32));
            assert!(r.ipr >= floor * (1.0 - 1e-12) && r.ipr <= 1.0);
            assert!((r.entropy - r.ipr.ln() / (1.0 - r.q as f64)).abs() < 1e-12);
            assert!(r.entropy <= l as f64 * LN_2 + 1e-12);
            assert!(r.ipr_analytic.is_some());
        }
    }
}
