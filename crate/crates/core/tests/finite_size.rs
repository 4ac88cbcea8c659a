use fockdu_core::fockspace::{histogram, ipr_du_analytic, ipr_of_probabilities, ipr_perturbed_analytic};
use fockdu_core::model::{CircuitSpec, Variant};
use fockdu_core::statevector::{FloquetEvolver, StateVector};
use std::f64::consts::PI;

fn max_deviation(spec: &CircuitSpec, t_max: u32, q: u32, analytic: impl Fn(u32) -> f64) -> f64 {
    let evolver = FloquetEvolver::new(spec).unwrap();
    let mut state = StateVector::init_zero(spec.sites).unwrap();
    let mut worst = 0.0f64;
    evolver
        .evolve(&mut state, 0, t_max, |t, s| {
            if t >= 1 {
                let i = ipr_of_probabilities(&s.probabilities(), q);
                worst = worst.max((i / analytic(t) - 1.0).abs());
            }
        })
        .unwrap();
    worst
}

#[test]
fn du_deviation_shrinks_with_size() {
    let devs: Vec<f64> = [10, 12, 14]
        .iter()
        .map(|&l| max_deviation(&CircuitSpec::self_dual(l, PI / 3.0), 8, 2, |t| ipr_du_analytic(l, t, 2).unwrap()))
        .collect();
    assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
}

#[test]
fn perturbed_deviation_shrinks_with_size() {
    let theta = PI / 14.0;
    let devs: Vec<f64> = [8, 12, 16]
        .iter()
        .map(|&l| {
            let spec = CircuitSpec::self_dual(l, PI / 3.0).with_variant(Variant::BoundaryKick { theta });
            max_deviation(&spec, 8, 2, |t| ipr_perturbed_analytic(l, t, 2, theta).unwrap())
        })
        .collect();
    assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
}

#[test]
fn frozen_boundary_splits_fock_space_in_half() {
    let l = 10;
    let spec = CircuitSpec::self_dual(l, PI / 3.0).with_variant(Variant::BoundaryKick { theta: 0.0 });
    let evolver = FloquetEvolver::new(&spec).unwrap();
    let mut state = StateVector::init_zero(l).unwrap();
    evolver
        .evolve(&mut state, 0, 6, |t, s| {
            if t >= 1 {
                let probs = s.probabilities();
                let h = histogram(&probs, l, t, 20, None).unwrap();
                assert_eq!(h.zero_count, 1 << (l - 1), "t = {t}");
                for q in 2..=4 {
                    let want = ipr_du_analytic(l, t, q).unwrap() * 2f64.powi(q as i32 - 1);
                    if t == 1 {
                        assert!((ipr_of_probabilities(&probs, q) / want - 1.0).abs() < 1e-12);
                    }
                }
            }
        })
        .unwrap();
}
