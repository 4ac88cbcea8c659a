use fockdu_core::rmt::{basis_vector, haar_moment_closed, mc_moment, mc_moment_with_vectors, sample_haar};
use fockdu_core::rng::{stream_rng, StreamId, StreamTag};
use fockdu_core::Complex64;
use nalgebra::{DVector, Schur};

#[test]
fn second_moment_d8() {
    let est = mc_moment(8, 2, 100_000, 1).unwrap();
    let want = 2.0 / 72.0;
    assert!((haar_moment_closed(8, 2) / want - 1.0).abs() < 1e-14);
    assert!(est.z_score(want).abs() < 3.0, "{est:?}");
}

#[test]
fn first_moment_d4_large_sample() {
    let est = mc_moment(4, 1, 100_000, 2).unwrap();
    assert!(est.z_score(0.25).abs() < 3.0, "{est:?}");
}

#[test]
fn first_moment_any_d() {
    for d in [2, 3, 5, 16] {
        let est = mc_moment(d, 1, 10_000, 3).unwrap();
        assert!(est.z_score(1.0 / d as f64).abs() < 3.0, "d = {d}: {est:?}");
    }
}

#[test]
fn error_shrinks_with_samples() {
    let want = haar_moment_closed(8, 2);
    let ests: Vec<_> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| mc_moment(8, 2, n, 5).unwrap())
        .collect();
    for w in ests.windows(2) {
        assert!(w[1].std_error < w[0].std_error / 2.5);
    }
    for e in &ests {
        assert!(e.z_score(want).abs() < 3.0, "{e:?}");
    }
    let ratio = ests[0].std_error / ests[2].std_error;
    assert!((ratio / 10.0 - 1.0).abs() < 0.3, "{ratio}");
}

#[test]
fn estimate_independent_of_probe_vectors() {
    let d = 8;
    let mut rng = stream_rng(9, StreamId::new(StreamTag::User, 0, 0));
    let u = sample_haar(d, &mut rng);
    let a: DVector<Complex64> = u.column(0).into_owned();
    let b: DVector<Complex64> = u.column(3).into_owned();
    let x = mc_moment_with_vectors(d, 2, 50_000, 21, &a, &b).unwrap();
    let y = mc_moment_with_vectors(d, 2, 50_000, 22, &basis_vector(d, 0), &basis_vector(d, 5)).unwrap();
    let sigma = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
    assert!((x.mean - y.mean).abs() < 3.0 * sigma, "{x:?} {y:?}");
}

#[test]
fn eigenphases_are_flat() {
    let (d, samples, bins) = (8usize, 10_000usize, 16usize);
    let mut rng = stream_rng(4, StreamId::new(StreamTag::User, 0, 1));
    let mut counts = vec![0u64; bins];
    for _ in 0..samples {
        let u = sample_haar(d, &mut rng);
        let (_, t) = Schur::new(u).unpack();
        for k in 0..d {
            let phase = t[(k, k)].arg() + std::f64::consts::PI;
            let b = ((phase / (2.0 * std::f64::consts::PI)) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
    }
    let total = (d * samples) as f64;
    let p = 1.0 / bins as f64;
    let expected = total * p;
    let sigma = (total * p * (1.0 - p)).sqrt();
    for (k, &c) in counts.iter().enumerate() {
        let z = (c as f64 - expected) / sigma;
        assert!(z.abs() < 4.0, "bin {k}: {c} vs {expected} ({z:.2} sigma)");
    }
}

#[test]
fn same_seed_same_estimate() {
    assert_eq!(mc_moment(8, 3, 3000, 77).unwrap(), mc_moment(8, 3, 3000, 77).unwrap());
    assert_ne!(mc_moment(8, 3, 3000, 77).unwrap(), mc_moment(8, 3, 3000, 78).unwrap());
}
