//! Haar-random unitaries and Monte-Carlo estimates of Haar moments.
//!
//! The closed form used throughout is
//! `E_Haar |<a|U|b>|^{2q} = |a|^{2q} |b|^{2q} q! / [d (d+1) ... (d+q-1)]`,
//! the aggregate of the Weingarten sum. Individual Weingarten functions are
//! never tabulated.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix4};
use rand_core::RngCore;

use crate::numeric::{ln_factorial, CompensatedSum};
use crate::rng::{complex_normal, stream_rng, StreamId, StreamTag};
use crate::{Complex64, Error, Result};

/// Samples per Monte-Carlo stream. Fixed so that chunking, and hence the
/// estimate, is independent of how chunks are scheduled.
pub const MC_CHUNK: usize = 4096;

/// Haar-distributed `d x d` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` folded back into `Q`.
pub fn sample_haar<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    assert!(d >= 1, "dimension must be positive");
    let ginibre = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            col *= rjj / n;
        }
    }
    q
}

/// Haar U(4) gate for two neighbouring sites, basis `|z_left z_right>`.
pub fn sample_gate_u4<R: RngCore + ?Sized>(rng: &mut R) -> Matrix4<Complex64> {
    let u = sample_haar(4, rng);
    Matrix4::from_fn(|i, j| u[(i, j)])
}

/// `max |(U^dag U - 1)_ij|`.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// `ln E_Haar |<a|U|b>|^{2q}` for unit vectors in dimension `d`.
pub fn ln_haar_moment_closed(d: usize, q: u32) -> f64 {
    let df = d as f64;
    let ln_rising: f64 = (0..q).map(|k| (df + k as f64).ln()).sum();
    ln_factorial(q) - ln_rising
}

/// `q! / [d (d+1) ... (d+q-1)]`.
pub fn haar_moment_closed(d: usize, q: u32) -> f64 {
    ln_haar_moment_closed(d, q).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub dim: usize,
    pub q: u32,
}

impl MomentEstimate {
    /// `(mean - reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.std_error
    }
}

/// Running moments of one stream, mergeable with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl MomentAccumulator {
    pub fn from_samples(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut sum = CompensatedSum::new();
        sum.extend(values.iter().copied());
        let mean = sum.value() / values.len() as f64;
        let mut m2 = CompensatedSum::new();
        m2.extend(values.iter().map(|v| (v - mean) * (v - mean)));
        Self {
            count: values.len(),
            mean,
            m2: m2.value(),
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        let wb = other.count as f64 / n;
        Self {
            count: self.count + other.count,
            mean: self.mean + delta * wb,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * wb,
        }
    }
}

/// Merges chunk accumulators by a fixed pairwise tree over their order.
pub fn pairwise_merge(parts: &[MomentAccumulator]) -> MomentAccumulator {
    match parts.len() {
        0 => MomentAccumulator::default(),
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            pairwise_merge(l).merge(&pairwise_merge(r))
        }
    }
}

/// Number of chunks used for `samples` draws.
pub fn mc_chunk_count(samples: usize) -> usize {
    samples.div_ceil(MC_CHUNK)
}

/// Moments of `|<a|U|b>|^{2q}` for chunk `chunk` of an `samples`-draw run.
pub fn mc_moment_chunk(
    d: usize,
    q: u32,
    samples: usize,
    seed: u64,
    chunk: usize,
    a: &DVector<Complex64>,
    b: &DVector<Complex64>,
) -> MomentAccumulator {
    let start = chunk * MC_CHUNK;
    let count = MC_CHUNK.min(samples.saturating_sub(start));
    let mut rng = stream_rng(seed, StreamId::new(StreamTag::MonteCarlo, 0, chunk as u32));
    let a_conj = a.map(|x| x.conj());
    let values: Vec<f64> = (0..count)
        .map(|_| {
            let u = sample_haar(d, &mut rng);
            let amp = (a_conj.transpose() * (&u * b))[(0, 0)];
            amp.norm_sqr().powi(q as i32)
        })
        .collect();
    MomentAccumulator::from_samples(&values)
}

pub fn finish_estimate(acc: MomentAccumulator, d: usize, q: u32) -> MomentEstimate {
    let n = acc.count as f64;
    let variance = if acc.count > 1 { acc.m2 / (n - 1.0) } else { 0.0 };
    MomentEstimate {
        mean: acc.mean,
        std_error: (variance / n).sqrt(),
        samples: acc.count,
        dim: d,
        q,
    }
}

pub const MC_MIN_SAMPLES: usize = 1000;

fn check_mc_args(d: usize, q: u32, samples: usize, a: &DVector<Complex64>, b: &DVector<Complex64>) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument("Haar dimension must be at least 2"));
    }
    if q < 1 {
        return Err(Error::InvalidOrder(q));
    }
    if samples < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument("Monte-Carlo needs at least 1000 samples"));
    }
    if a.len() != d || b.len() != d {
        return Err(Error::InvalidArgument("probe vectors must have dimension d"));
    }
    if (a.norm() - 1.0).abs() > 1e-12 || (b.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("probe vectors must be normalized"));
    }
    Ok(())
}

/// Monte-Carlo estimate of `E |<a|U|b>|^{2q}` for unit `a`, `b`.
pub fn mc_moment_with_vectors(
    d: usize,
    q: u32,
    samples: usize,
    seed: u64,
    a: &DVector<Complex64>,
    b: &DVector<Complex64>,
) -> Result<MomentEstimate> {
    check_mc_args(d, q, samples, a, b)?;
    let parts: Vec<MomentAccumulator> = (0..mc_chunk_count(samples))
        .map(|c| mc_moment_chunk(d, q, samples, seed, c, a, b))
        .collect();
    Ok(finish_estimate(pairwise_merge(&parts), d, q))
}

/// First basis vector, used as both probes by [`mc_moment`].
pub fn basis_vector(d: usize, k: usize) -> DVector<Complex64> {
    let mut v = DVector::from_element(d, Complex64::new(0.0, 0.0));
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Monte-Carlo estimate of `E |U_00|^{2q}`.
pub fn mc_moment(d: usize, q: u32, samples: usize, seed: u64) -> Result<MomentEstimate> {
    let e0 = basis_vector(d.max(1), 0);
    mc_moment_with_vectors(d, q, samples, seed, &e0, &e0)
}

/// Validates the arguments of a chunked run driven from outside the crate.
pub fn check_mc(d: usize, q: u32, samples: usize, a: &DVector<Complex64>, b: &DVector<Complex64>) -> Result<()> {
    check_mc_args(d, q, samples, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamId, StreamTag};

    fn rng(k: u32) -> rand_chacha::ChaCha8Rng {
        stream_rng(7, StreamId::new(StreamTag::User, 0, k))
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut r = rng(0);
        for d in [2, 3, 4, 8, 16] {
            let u = sample_haar(d, &mut r);
            assert!(unitarity_deviation(&u) < 1e-10, "d = {d}");
        }
    }

    #[test]
    fn gate_u4_deterministic_and_seed_sensitive() {
        let a = sample_gate_u4(&mut rng(1));
        let b = sample_gate_u4(&mut rng(1));
        let c = sample_gate_u4(&mut rng(2));
        assert_eq!(a, b);
        assert_ne!(a, c);
        let dm = DMatrix::from_fn(4, 4, |i, j| a[(i, j)]);
        assert!(unitarity_deviation(&dm) < 1e-10);
    }

    #[test]
    fn closed_form_values() {
        assert!((haar_moment_closed(5, 1) - 0.2).abs() < 1e-15);
        assert!((haar_moment_closed(4, 2) - 0.1).abs() < 1e-15);
        assert!((haar_moment_closed(8, 2) - 2.0 / 72.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_times_rising_factorial_is_q_factorial() {
        for d in [2usize, 3, 8, 64, 1024] {
            for q in 1..=10u32 {
                let ln_rising: f64 = (0..q).map(|k| ((d + k as usize) as f64).ln()).sum();
                let residual = ln_haar_moment_closed(d, q) + ln_rising - ln_factorial(q);
                assert!(residual.abs() < 1e-12, "d = {d}, q = {q}");
            }
        }
    }

    #[test]
    fn first_moment_is_one_over_d() {
        let est = mc_moment(4, 1, 20_000, 11).unwrap();
        assert!(est.z_score(0.25).abs() < 3.0, "{est:?}");
    }

    #[test]
    fn estimates_are_seed_deterministic() {
        assert_eq!(mc_moment(4, 2, 5000, 3).unwrap(), mc_moment(4, 2, 5000, 3).unwrap());
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 37 % 101) as f64).sqrt()).collect();
        let whole = MomentAccumulator::from_samples(&xs);
        let parts: Vec<_> = xs.chunks(97).map(MomentAccumulator::from_samples).collect();
        let merged = pairwise_merge(&parts);
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9);
    }

    #[test]
    fn rejects_too_few_samples() {
        assert!(mc_moment(4, 2, 999, 0).is_err());
        assert!(mc_moment(1, 2, 5000, 0).is_err());
    }
}
