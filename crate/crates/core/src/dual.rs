//! Space-time dual transfer matrices.
//!
//! At `J = b = pi/4` every amplitude of the `t`-period state factorizes as
//!
//! ```text
//! <z_1 ... z_L | psi(t)> = 2^{-L/2} w <L| U(z_1) U(z_2) ... U(z_L) |R>
//! ```
//!
//! with `2^tau x 2^tau` unitaries `U(0)`, `U(1)` (`tau = t - 1`) acting along
//! the chain and a bond phase `w = exp(-i pi (L-1) t / 4)` from the literal
//! gate phases. Dual index `a = (a_1 ... a_tau)` holds the spin history of one
//! site at periods `2..t`, `a_1` as most significant bit:
//!
//! * `U(z) = H^{(x)tau} D(z)` with `H = [[1, i], [i, 1]] / sqrt2` carrying the
//!   Ising bonds between neighbouring histories,
//! * `D(z)` diagonal, `D(z)_a = (-i)^{#flips(0, a_1, ..., a_tau, z)} exp(-i h (1 + sum_k s(a_k)))`
//!   carrying the kicks and the field of that site,
//! * `<L| = exp(-i pi tau / 4) 2^{-tau/2} (1, ..., 1)`, `|R> = (1, ..., 1)`.
//!
//! Replacing the kick on the last site by a gate `u` only swaps `U(z_L)|R>`
//! for the boundary vector `|R(z_L)>` built by [`right_boundary_perturbed`].

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, LN_2};

use nalgebra::{DMatrix, DVector};

use crate::fockspace::ipr_du_analytic;
use crate::model::{kick_gate, BitString, CircuitSpec, GateU2, Variant};
use crate::rmt::unitarity_deviation;
use crate::{Complex64, Error, Result};

/// Largest dual time extent for which matrices are formed (`d = 1024`).
pub const MAX_TAU: u32 = 10;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// Spin history `(a_1, ..., a_tau)` of dual index `a`.
#[inline]
fn history_bit(a: usize, k: usize, tau: u32) -> usize {
    (a >> (tau as usize - 1 - k)) & 1
}

/// `exp(-i h (1 + sum_k s(a_k)))` for the field of one site.
fn field_phase(a: usize, tau: u32, h: f64) -> Complex64 {
    let ones = a.count_ones() as f64;
    let spin_sum = 1.0 + (tau as f64 - 2.0 * ones);
    Complex64::from_polar(1.0, -h * spin_sum)
}

/// Number of spin flips along `0, a_1, ..., a_tau, z`.
fn flips(a: usize, tau: u32, z: u8) -> u32 {
    let mut prev = 0usize;
    let mut count = 0;
    for k in 0..tau as usize {
        let cur = history_bit(a, k, tau);
        count += (cur ^ prev) as u32;
        prev = cur;
    }
    count + (prev ^ z as usize) as u32
}

/// `H^{(x)tau}` with `H = [[1, i], [i, 1]] / sqrt2`.
fn bond_unitary(tau: u32) -> DMatrix<Complex64> {
    let d = 1usize << tau;
    let scale = libm::exp2(-(tau as f64) / 2.0);
    DMatrix::from_fn(d, d, |a, b| i_pow((a ^ b).count_ones()) * scale)
}

fn transfer_pair(tau: u32, h: f64, bond: &DMatrix<Complex64>) -> [DMatrix<Complex64>; 2] {
    let d = 1usize << tau;
    [0u8, 1].map(|z| {
        let diag: Vec<Complex64> = (0..d)
            .map(|a| (-I).powu(flips(a, tau, z)) * field_phase(a, tau, h))
            .collect();
        let mut u = bond.clone();
        for (mut col, dz) in u.column_iter_mut().zip(diag) {
            col *= dz;
        }
        u
    })
}

fn check_dual_spec(spec: &CircuitSpec, t: u32) -> Result<()> {
    spec.check_shape()?;
    if !spec.is_dual_point() {
        return Err(Error::NotDualUnitary {
            coupling: spec.coupling,
            kick: spec.kick,
        });
    }
    if t < 1 || t - 1 > MAX_TAU {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

/// `2^{(1+tau)/2} H^{(x)tau} D^u(z)`: right boundary when the last site is
/// kicked by `u` instead of `exp(-i pi/4 X)`, with the field `h` of that site.
pub fn right_boundary_vector(tau: u32, h: f64, u: &GateU2, z: u8) -> DVector<Complex64> {
    let d = 1usize << tau;
    let weights: DVector<Complex64> = DVector::from_fn(d, |a, _| {
        let mut amp = Complex64::new(1.0, 0.0);
        let mut prev = 0usize;
        for k in 0..tau as usize {
            let cur = history_bit(a, k, tau);
            amp *= u.get(cur, prev);
            prev = cur;
        }
        amp * u.get(z as usize, prev) * field_phase(a, tau, h)
    });
    let scale = libm::exp2((1.0 + tau as f64) / 2.0);
    bond_unitary(tau) * weights * Complex64::new(scale, 0.0)
}

/// Right boundary `|R(z_L)>` for the boundary gate of `spec`.
pub fn right_boundary_perturbed(spec: &CircuitSpec, t: u32, z_last: u8) -> Result<DVector<Complex64>> {
    check_dual_spec(spec, t)?;
    if z_last > 1 {
        return Err(Error::InvalidBit(z_last));
    }
    let u = match spec.variant {
        Variant::BoundaryKick { .. } | Variant::BoundaryGeneric { .. } => spec.variant.boundary_gate().unwrap(),
        Variant::DualUnitary => kick_gate(FRAC_PI_4),
        _ => return Err(Error::UnsupportedVariant(spec.variant.name())),
    };
    Ok(right_boundary_vector(t - 1, spec.fields[spec.sites - 1], &u, z_last))
}

/// Dual transfer matrices and boundaries for one `(spec, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTransferSet {
    sites: usize,
    tau: u32,
    /// `[U(0), U(1)]` for each distinct field value.
    gates: Vec<[DMatrix<Complex64>; 2]>,
    site_gate: Vec<usize>,
    left: DVector<Complex64>,
    right: DVector<Complex64>,
    /// `|R(0)>, |R(1)>` replacing `U(z_L)|R>` for boundary-perturbed chains.
    boundary: Option<[DVector<Complex64>; 2]>,
    bond_phase: Complex64,
    norm_prefactor: f64,
}

/// Builds the dual set for `spec` after `t` periods.
pub fn build_dual_set(spec: &CircuitSpec, t: u32) -> Result<DualTransferSet> {
    check_dual_spec(spec, t)?;
    let boundary_gate = match spec.variant {
        Variant::DualUnitary => None,
        Variant::BoundaryKick { .. } | Variant::BoundaryGeneric { .. } => spec.variant.boundary_gate(),
        _ => return Err(Error::UnsupportedVariant(spec.variant.name())),
    };
    if let Some(u) = boundary_gate {
        let deviation = u.unitarity_deviation();
        if !(deviation < crate::model::UNITARITY_TOL) {
            return Err(Error::NonUnitary { deviation });
        }
    }
    let tau = t - 1;
    let d = 1usize << tau;
    let bond = bond_unitary(tau);
    let mut distinct: Vec<f64> = Vec::new();
    let mut site_gate = Vec::with_capacity(spec.sites);
    for &h in &spec.fields {
        let k = match distinct.iter().position(|&x| x.to_bits() == h.to_bits()) {
            Some(k) => k,
            None => {
                distinct.push(h);
                distinct.len() - 1
            }
        };
        site_gate.push(k);
    }
    let gates = distinct.iter().map(|&h| transfer_pair(tau, h, &bond)).collect();
    let left_entry = Complex64::from_polar(libm::exp2(-(tau as f64) / 2.0), -FRAC_PI_4 * tau as f64);
    let boundary = boundary_gate.map(|u| {
        let h = spec.fields[spec.sites - 1];
        [right_boundary_vector(tau, h, &u, 0), right_boundary_vector(tau, h, &u, 1)]
    });
    Ok(DualTransferSet {
        sites: spec.sites,
        tau,
        gates,
        site_gate,
        left: DVector::from_element(d, left_entry),
        right: DVector::from_element(d, Complex64::new(1.0, 0.0)),
        boundary,
        bond_phase: Complex64::from_polar(1.0, -FRAC_PI_4 * ((spec.sites - 1) as f64) * t as f64),
        norm_prefactor: (-(spec.sites as f64) / 2.0 * LN_2).exp(),
    })
}

impl DualTransferSet {
    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        1 << self.tau
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// `U(z)` acting at `site`.
    pub fn transfer(&self, site: usize, z: u8) -> &DMatrix<Complex64> {
        &self.gates[self.site_gate[site]][z as usize]
    }

    /// `U(0)` of the first site (the only pair for homogeneous fields).
    pub fn u0(&self) -> &DMatrix<Complex64> {
        self.transfer(0, 0)
    }

    pub fn u1(&self) -> &DMatrix<Complex64> {
        self.transfer(0, 1)
    }

    pub fn left(&self) -> &DVector<Complex64> {
        &self.left
    }

    pub fn right(&self) -> &DVector<Complex64> {
        &self.right
    }

    pub fn boundary(&self) -> Option<&[DVector<Complex64>; 2]> {
        self.boundary.as_ref()
    }

    pub fn norm_prefactor(&self) -> f64 {
        self.norm_prefactor
    }

    pub fn bond_phase(&self) -> Complex64 {
        self.bond_phase
    }

    /// Largest `max |U^dag U - 1|` over all stored transfer matrices.
    pub fn unitarity_deviation(&self) -> f64 {
        self.gates
            .iter()
            .flat_map(|pair| pair.iter())
            .map(unitarity_deviation)
            .fold(0.0, f64::max)
    }

    /// `v^T U(z)` as a column vector.
    fn sweep(&self, v: &DVector<Complex64>, site: usize, z: u8) -> DVector<Complex64> {
        self.transfer(site, z).tr_mul(v)
    }

    fn close(&self, v: &DVector<Complex64>, z_last: u8) -> Complex64 {
        let last = self.sites - 1;
        let tail = match &self.boundary {
            Some(r) => v.dot(&r[z_last as usize]),
            None => self.sweep(v, last, z_last).dot(&self.right),
        };
        tail * self.bond_phase * self.norm_prefactor
    }

    /// `<z|psi(t)>` as a matrix product along the chain.
    pub fn overlap_via_dual(&self, z: &BitString) -> Result<Complex64> {
        if z.len() != self.sites {
            return Err(Error::BitStringLength {
                expected: self.sites,
                found: z.len(),
            });
        }
        let mut v = self.left.clone();
        for site in 0..self.sites - 1 {
            v = self.sweep(&v, site, z.bit(site));
        }
        Ok(self.close(&v, z.bit(self.sites - 1)))
    }

    /// All `2^L` overlaps, indexed like a state vector, sharing prefixes.
    pub fn overlaps_all(&self) -> Vec<Complex64> {
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); 1 << self.sites];
        self.descend(&self.left, 0, 0, &mut out);
        out
    }

    fn descend(&self, v: &DVector<Complex64>, site: usize, prefix: usize, out: &mut [Complex64]) {
        if site == self.sites - 1 {
            for z in 0..2u8 {
                out[(prefix << 1) | z as usize] = self.close(v, z);
            }
            return;
        }
        for z in 0..2u8 {
            let next = self.sweep(v, site, z);
            self.descend(&next, site + 1, (prefix << 1) | z as usize, out);
        }
    }
}

/// `M_ij = |u_ij|^2`, rows and columns summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnistochasticMatrix {
    pub entries: [[f64; 2]; 2],
}

impl UnistochasticMatrix {
    /// Second eigenvalue `tr M - 1` (the first is 1).
    pub fn subleading_eigenvalue(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1] - 1.0
    }

    pub fn row_sums(&self) -> [f64; 2] {
        self.entries.map(|r| r[0] + r[1])
    }

    pub fn column_sums(&self) -> [f64; 2] {
        [0, 1].map(|j| self.entries[0][j] + self.entries[1][j])
    }
}

pub fn unistochastic(u: &GateU2) -> UnistochasticMatrix {
    UnistochasticMatrix {
        entries: u.entries().map(|r| r.map(|x| x.norm_sqr())),
    }
}

/// Powers up to this use repeated multiplication; beyond, the spectral form.
pub const M_POWER_DIRECT_MAX: u32 = 64;

/// `<0| M^t |z>` for `M = unistochastic(u)`.
pub fn m_element(u: &GateU2, t: u32, z: u8) -> f64 {
    let m = unistochastic(u);
    let (p0, p1) = if t <= M_POWER_DIRECT_MAX {
        let mut row = [1.0, 0.0];
        for _ in 0..t {
            row = [
                row[0] * m.entries[0][0] + row[1] * m.entries[1][0],
                row[0] * m.entries[0][1] + row[1] * m.entries[1][1],
            ];
        }
        (row[0], row[1])
    } else {
        // 2x2 doubly stochastic: eigenvalues 1 and tr M - 1, eigenvectors |+>, |->
        let lt = m.subleading_eigenvalue().powi(t as i32);
        ((1.0 + lt) / 2.0, (1.0 - lt) / 2.0)
    };
    if z == 0 {
        p0
    } else {
        p1
    }
}

/// `I_q^DU(t) 2^{q-1} sum_z <0|M^t|z>^q`.
pub fn ipr_via_m(sites: usize, t: u32, q: u32, u: &GateU2) -> Result<f64> {
    let du = ipr_du_analytic(sites, t, q)?;
    let sum: f64 = (0..2u8).map(|z| m_element(u, t, z).powi(q as i32)).sum();
    Ok(du * 2f64.powi(q as i32 - 1) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::ipr_perturbed_analytic;
    use crate::statevector::evolve_from_zero;
    use core::f64::consts::PI;

    fn spec(l: usize) -> CircuitSpec {
        CircuitSpec::self_dual(l, PI / 3.0)
    }

    #[test]
    fn first_nontrivial_tau_is_two_by_two() {
        let set = build_dual_set(&spec(4), 2).unwrap();
        assert_eq!(set.u0().shape(), (2, 2));
        assert_eq!(set.u1().shape(), (2, 2));
        assert!(set.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn transfer_matrices_unitary() {
        for t in 1..=9 {
            let set = build_dual_set(&spec(3), t).unwrap();
            assert!(set.unitarity_deviation() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn first_period_overlaps_have_flat_modulus() {
        let set = build_dual_set(&spec(7), 1).unwrap();
        for a in set.overlaps_all() {
            assert!((a.norm() - 2f64.powf(-3.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_statevector_exactly() {
        let (l, t) = (6, 4);
        let s = evolve_from_zero(&spec(l), t).unwrap();
        let set = build_dual_set(&spec(l), t).unwrap();
        let all = set.overlaps_all();
        for (z, a) in s.amplitudes().iter().enumerate() {
            let via = set.overlap_via_dual(&BitString::from_index(z, l).unwrap()).unwrap();
            assert!((via.norm() - a.norm()).abs() < 1e-10);
            assert!((via - a).norm() < 1e-10, "phase convention drifted at z = {z}");
            assert!((all[z] - via).norm() < 1e-14);
        }
        let total: f64 = all.iter().map(|a| a.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_statevector_with_inhomogeneous_fields() {
        let (l, t) = (5, 3);
        let s = spec(l).with_fields(vec![0.3, -1.2, 0.77, 2.0, 0.1]);
        let psi = evolve_from_zero(&s, t).unwrap();
        let set = build_dual_set(&s, t).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(set.overlaps_all()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_statevector_with_boundary_gate() {
        let u = kick_gate(0.61).mul(&GateU2::from_entries([
            [Complex64::from_polar(1.0, 0.4), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -1.3)],
        ]));
        for variant in [Variant::BoundaryKick { theta: PI / 14.0 }, Variant::BoundaryGeneric { gate: u }] {
            let s = spec(6).with_variant(variant);
            for t in 1..=4 {
                let psi = evolve_from_zero(&s, t).unwrap();
                let set = build_dual_set(&s, t).unwrap();
                for (a, b) in psi.amplitudes().iter().zip(set.overlaps_all()) {
                    assert!((a - b).norm() < 1e-12, "{variant:?}, t = {t}");
                }
            }
        }
    }

    #[test]
    fn rejects_off_point_and_random_variants() {
        let mut s = spec(5);
        s.coupling = 0.5;
        assert!(matches!(build_dual_set(&s, 3), Err(Error::NotDualUnitary { .. })));
        let s = spec(5).with_variant(Variant::MidTwoSite { seed: 1 });
        assert_eq!(build_dual_set(&s, 3), Err(Error::UnsupportedVariant("mid2")));
        assert!(build_dual_set(&spec(5), 0).is_err());
    }

    #[test]
    fn dual_unitary_boundary_reproduces_plain_right_vector() {
        let s = spec(5);
        let set = build_dual_set(&s, 4).unwrap();
        for z in 0..2u8 {
            let r = right_boundary_perturbed(&s, 4, z).unwrap();
            let plain = set.transfer(4, z) * set.right();
            assert!((&r - plain).norm() < 1e-12);
            assert!((r.norm_squared() - 2f64.powi(4) * m_element(&kick_gate(FRAC_PI_4), 4, z)).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_norm_is_m_power() {
        let mut rng = crate::rng::stream_rng(3, crate::rng::StreamId::new(crate::rng::StreamTag::User, 0, 0));
        for trial in 0..10 {
            let h = crate::rmt::sample_haar(2, &mut rng);
            let u = GateU2::from_entries([[h[(0, 0)], h[(0, 1)]], [h[(1, 0)], h[(1, 1)]]]);
            let s = spec(4).with_variant(Variant::BoundaryGeneric { gate: u });
            for t in 1..=6 {
                for z in 0..2u8 {
                    let r = right_boundary_perturbed(&s, t, z).unwrap();
                    let want = 2f64.powi(t as i32) * m_element(&u, t, z);
                    assert!((r.norm_squared() - want).abs() < 1e-10, "trial {trial}, t = {t}, z = {z}");
                }
            }
        }
    }

    #[test]
    fn frozen_boundary_has_empty_upper_vector() {
        let s = spec(4).with_variant(Variant::BoundaryKick { theta: 0.0 });
        let r = right_boundary_perturbed(&s, 3, 1).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn unistochastic_of_kick() {
        let theta = 0.37;
        let m = unistochastic(&kick_gate(theta));
        let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
        assert!((m.entries[0][0] - c2).abs() < 1e-15 && (m.entries[0][1] - s2).abs() < 1e-15);
        assert!((m.entries[1][0] - s2).abs() < 1e-15 && (m.entries[1][1] - c2).abs() < 1e-15);
        assert!((m.subleading_eigenvalue() - (2.0 * theta).cos()).abs() < 1e-15);
        for s in m.row_sums().into_iter().chain(m.column_sums()) {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn m_powers_match_spectral_form() {
        for theta in [0.0, 0.2, PI / 14.0, PI / 4.0, 1.3] {
            let u = kick_gate(theta);
            for t in [1u32, 2, 5, 30, 64, 65, 200] {
                let c = (2.0 * theta).cos().powi(t as i32);
                assert!((m_element(&u, t, 0) - (1.0 + c) / 2.0).abs() < 1e-13);
                assert!((m_element(&u, t, 1) - (1.0 - c) / 2.0).abs() < 1e-13);
                assert!((m_element(&u, t, 0) + m_element(&u, t, 1) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn m_relaxes_to_one_half_for_generic_gates() {
        let u = kick_gate(0.3).mul(&GateU2::from_entries([
            [Complex64::from_polar(1.0, 0.2), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, 1.0)],
        ]));
        assert!((m_element(&u, 2000, 0) - 0.5).abs() < 1e-12);
        assert!((m_element(&u, 2000, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ipr_via_m_agrees_with_closed_forms() {
        let l = 12;
        for t in 1..=10 {
            for q in 2..=8 {
                for theta in [0.0, PI / 14.0, 0.5, PI / 4.0] {
                    let a = ipr_via_m(l, t, q, &kick_gate(theta)).unwrap();
                    let b = ipr_perturbed_analytic(l, t, q, theta).unwrap();
                    assert!((a / b - 1.0).abs() < 1e-12);
                }
                let du = ipr_du_analytic(l, t, q).unwrap();
                assert!((ipr_via_m(l, t, q, &kick_gate(FRAC_PI_4)).unwrap() / du - 1.0).abs() < 1e-12);
                let id = ipr_via_m(l, t, q, &GateU2::IDENTITY).unwrap();
                assert!((id / (du * 2f64.powi(q as i32 - 1)) - 1.0).abs() < 1e-12);
            }
        }
        let generic = kick_gate(0.9);
        for q in 2..=6 {
            let late = ipr_via_m(l, 3000, q, &generic).unwrap();
            assert!((late / crate::fockspace::ipr_haar(l, q) - 1.0).abs() < 1e-10);
        }
    }
}
