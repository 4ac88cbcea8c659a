use fockdu_core::fockspace::{
    ipr_du_analytic, ipr_perturbed_analytic, moment_of_density, DualUnitaryDensity, Density, PerturbedDensity,
};
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn du_density_moments_reproduce_closed_form() {
    for l in [8, 14] {
        for t in 2..=12 {
            let d = DualUnitaryDensity::new(l, t).unwrap();
            assert!((moment_of_density(&d, 1) - 1.0).abs() < 1e-10);
            for q in 2..=8 {
                let err = rel(moment_of_density(&d, q), ipr_du_analytic(l, t, q).unwrap());
                assert!(err < 1e-6, "L = {l}, t = {t}, q = {q}: {err:e}");
            }
        }
    }
}

#[test]
fn perturbed_density_moments_reproduce_closed_form() {
    for theta in [0.0, PI / 14.0, 0.4, PI / 4.0, 1.0] {
        for t in 1..=10 {
            let d = PerturbedDensity::new(12, t, theta).unwrap();
            let mass = moment_of_density(&d, 0) / d.dim();
            assert!((mass - 1.0).abs() < 1e-8, "theta = {theta}, t = {t}");
            for q in 2..=8 {
                let err = rel(moment_of_density(&d, q), ipr_perturbed_analytic(12, t, q, theta).unwrap());
                assert!(err < 1e-6, "theta = {theta}, t = {t}, q = {q}: {err:e}");
            }
        }
    }
}

#[test]
fn cdfs_are_monotone_and_reach_one() {
    let dens: Vec<Box<dyn Density>> = vec![
        Box::new(DualUnitaryDensity::new(10, 4).unwrap()),
        Box::new(PerturbedDensity::new(10, 3, PI / 14.0).unwrap()),
        Box::new(PerturbedDensity::new(10, 3, 0.0).unwrap()),
    ];
    for d in &dens {
        let n = d.dim();
        let mut prev = 0.0;
        for k in 0..=2000 {
            let c = d.cdf(k as f64 * 0.01 / n);
            assert!(c + 1e-15 >= prev);
            prev = c;
        }
        assert!((d.cdf(100.0 / n) - 1.0).abs() < 1e-12);
    }
}
