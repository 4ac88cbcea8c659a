//! The kicked Ising circuit family.
//!
//! One Floquet period is `U_F = exp(-i H_K) exp(-i H_I)` with
//!
//! ```text
//! H_I = J sum_{j<L} Z_j Z_{j+1} + sum_j h_j Z_j      (open chain)
//! H_K = b sum_j X_j
//! ```
//!
//! and the self-dual point is `J = b = pi/4`. Gates carry the phases of the
//! literal matrix exponentials; comparisons elsewhere are modulus based or up
//! to a global phase.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, FRAC_PI_8};


use crate::{Complex64, Error, Result};

/// Tolerance on `J`, `b` for the dual-unitary point.
pub const DUAL_POINT_TOL: f64 = 1e-12;
/// Unitarity tolerance for single-site gates.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Distance to a multiple of pi/8 below which a phase counts as Clifford.
pub const CLIFFORD_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A 2x2 complex matrix acting on one site, `entries[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct GateU2 {
    entries: [[Complex64; 2]; 2],
}

impl GateU2 {
    pub const IDENTITY: Self = Self {
        entries: [[ONE, ZERO], [ZERO, ONE]],
    };

    /// Wraps the entries without checking unitarity; see [`GateU2::try_new`].
    pub const fn from_entries(entries: [[Complex64; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn try_new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let gate = Self { entries };
        let deviation = gate.unitarity_deviation();
        if deviation < UNITARITY_TOL {
            Ok(gate)
        } else {
            Err(Error::NonUnitary { deviation })
        }
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.entries[i][0] * rhs.entries[0][j] + self.entries[i][1] * rhs.entries[1][j];
            }
        }
        Self { entries: out }
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Self {
            entries: [[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]],
        }
    }

    /// `max |(U^dag U - 1)_ij|`.
    pub fn unitarity_deviation(&self) -> f64 {
        self.adjoint().mul(self).max_distance(&Self::IDENTITY)
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        worst
    }

    /// Distance after removing the best global phase, `min_phi max |A - e^{i phi} B|`
    /// approximated by aligning on the largest entry of `other`.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        let (mut bi, mut bj, mut best) = (0, 0, 0.0f64);
        for i in 0..2 {
            for j in 0..2 {
                let n = other.entries[i][j].norm();
                if n > best {
                    (bi, bj, best) = (i, j, n);
                }
            }
        }
        if best == 0.0 || self.entries[bi][bj].norm() == 0.0 {
            return self.max_distance(other);
        }
        let ratio = self.entries[bi][bj] / other.entries[bi][bj];
        let phase = ratio / ratio.norm();
        let mut rotated = *other;
        for row in rotated.entries.iter_mut() {
            for cell in row.iter_mut() {
                *cell *= phase;
            }
        }
        self.max_distance(&rotated)
    }
}

/// `exp(-i b X) = cos b - i sin b X`.
pub fn kick_gate(b: f64) -> GateU2 {
    let c = Complex64::new(b.cos(), 0.0);
    let s = Complex64::new(0.0, -b.sin());
    GateU2::from_entries([[c, s], [s, c]])
}

/// What replaces or augments the self-dual Floquet step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Variant {
    DualUnitary,
    /// Kick on the last site replaced by `exp(-i theta X)`.
    BoundaryKick { theta: f64 },
    /// Kick on the last site replaced by an arbitrary `u`.
    BoundaryGeneric { gate: GateU2 },
    /// One Haar U(2) on the central site, fixed in time.
    MidSingleSite { seed: u64 },
    /// A Haar U(4) on the central bond, redrawn every period.
    MidTwoSite { seed: u64 },
    /// Even-bond then odd-bond layer of Haar U(4) gates per period.
    RandomBrickwork { seed: u64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::DualUnitary => "dual",
            Variant::BoundaryKick { .. } => "boundary-kick",
            Variant::BoundaryGeneric { .. } => "boundary-generic",
            Variant::MidSingleSite { .. } => "mid1",
            Variant::MidTwoSite { .. } => "mid2",
            Variant::RandomBrickwork { .. } => "random",
        }
    }

    /// Gate on the last site, if the variant replaces the kick there.
    pub fn boundary_gate(&self) -> Option<GateU2> {
        match *self {
            Variant::BoundaryKick { theta } => Some(kick_gate(theta)),
            Variant::BoundaryGeneric { gate } => Some(gate),
            _ => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Variant::MidSingleSite { seed } | Variant::MidTwoSite { seed } | Variant::RandomBrickwork { seed } => Some(seed),
            _ => None,
        }
    }
}

/// Model parameters. Angles are in radians.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CircuitSpec {
    pub sites: usize,
    /// Ising coupling `J`.
    pub coupling: f64,
    /// Kick strength `b`.
    pub kick: f64,
    /// Longitudinal fields `h_j`, one per site.
    pub fields: Vec<f64>,
    /// Delta-tensor phase `g`; the default fields are `h_j = g`.
    pub phase: f64,
    pub variant: Variant,
}

impl CircuitSpec {
    /// Self-dual point with homogeneous fields `h_j = g`.
    pub fn self_dual(sites: usize, phase: f64) -> Self {
        Self {
            sites,
            coupling: FRAC_PI_4,
            kick: FRAC_PI_4,
            fields: vec![phase; sites],
            phase,
            variant: Variant::DualUnitary,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_fields(mut self, fields: Vec<f64>) -> Self {
        self.fields = fields;
        self
    }

    pub fn is_dual_point(&self) -> bool {
        (self.coupling - FRAC_PI_4).abs() <= DUAL_POINT_TOL && (self.kick - FRAC_PI_4).abs() <= DUAL_POINT_TOL
    }

    pub fn homogeneous_fields(&self) -> Option<f64> {
        let first = *self.fields.first()?;
        self.fields.iter().all(|&h| h == first).then_some(first)
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    /// Checks structural invariants only (site count and field count).
    pub fn check_shape(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::TooFewSites(self.sites));
        }
        if self.fields.len() != self.sites {
            return Err(Error::FieldCount {
                expected: self.sites,
                found: self.fields.len(),
            });
        }
        Ok(())
    }

    /// Errors for invariant violations, warnings for Clifford-point phases.
    pub fn validate(&self) -> Diagnostics {
        let mut diag = Diagnostics::default();
        if let Err(e) = self.check_shape() {
            diag.errors.push(e);
        }
        let finite = self.coupling.is_finite()
            && self.kick.is_finite()
            && self.phase.is_finite()
            && self.fields.iter().all(|h| h.is_finite());
        if !finite {
            diag.errors.push(Error::NonFinite("angle"));
        }
        match self.variant {
            Variant::RandomBrickwork { .. } => {}
            _ if !self.is_dual_point() => diag.errors.push(Error::NotDualUnitary {
                coupling: self.coupling,
                kick: self.kick,
            }),
            _ => {}
        }
        if let Variant::BoundaryGeneric { gate } = self.variant {
            let deviation = gate.unitarity_deviation();
            if !(deviation < UNITARITY_TOL) {
                diag.errors.push(Error::NonUnitary { deviation });
            }
        }
        if let Variant::BoundaryKick { theta } = self.variant {
            if !theta.is_finite() {
                diag.errors.push(Error::NonFinite("theta"));
            }
        }
        if !matches!(self.variant, Variant::RandomBrickwork { .. }) {
            let mut phases: Vec<f64> = Vec::with_capacity(self.fields.len() + 1);
            phases.push(self.phase);
            phases.extend(self.fields.iter().copied());
            phases.sort_by(|a, b| a.total_cmp(b));
            phases.dedup();
            for value in phases {
                if let Some(multiple) = clifford_multiple(value) {
                    diag.warnings.push(Warning::CliffordPhase { value, multiple });
                }
            }
        }
        diag
    }
}

/// Returns `k` when `value` is within [`CLIFFORD_TOL`] of `k pi/8`.
pub fn clifford_multiple(value: f64) -> Option<i64> {
    if !value.is_finite() {
        return None;
    }
    let k = (value / FRAC_PI_8).round();
    ((value - k * FRAC_PI_8).abs() <= CLIFFORD_TOL).then_some(k as i64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// Phase sits on a Clifford point, where `U(0)`, `U(1)` fail to be universal.
    CliffordPhase { value: f64, multiple: i64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::CliffordPhase { value, multiple } => write!(
                f,
                "phase {value} is {multiple}*pi/8; dual transfer gates are not universal there"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub errors: Vec<Error>,
    pub warnings: Vec<Warning>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<Warning>> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self.warnings),
        }
    }
}

/// A computational-basis state `|z_1 ... z_L>`; `z_1` is the most significant
/// bit of [`BitString::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    index: usize,
    len: usize,
}

impl BitString {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() >= usize::BITS as usize {
            return Err(Error::InvalidArgument("bit-string too long"));
        }
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::InvalidBit(b));
            }
            index = (index << 1) | b as usize;
        }
        Ok(Self { index, len: bits.len() })
    }

    pub fn from_index(index: usize, len: usize) -> Result<Self> {
        if len >= usize::BITS as usize || index >> len != 0 {
            return Err(Error::IndexOutOfRange {
                index,
                dim: 1usize.checked_shl(len as u32).unwrap_or(usize::MAX),
            });
        }
        Ok(Self { index, len })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit of site `j` (0-based from the left end of the chain).
    #[inline]
    pub fn bit(&self, site: usize) -> u8 {
        site_bit(self.index, site, self.len)
    }
}

/// Bit of `site` (0-based) inside an amplitude index of an `len`-site chain.
#[inline]
pub fn site_bit(index: usize, site: usize, len: usize) -> u8 {
    ((index >> (len - 1 - site)) & 1) as u8
}

/// `J sum s_j s_{j+1} + sum h_j s_j` with `s = 1 - 2 z`.
pub fn ising_energy(spec: &CircuitSpec, index: usize) -> f64 {
    let l = spec.sites;
    let bonds = l - 1;
    let mask = (1usize << bonds) - 1;
    let domain_walls = ((index ^ (index >> 1)) & mask).count_ones() as f64;
    let bond_sum = bonds as f64 - 2.0 * domain_walls;
    let field_sum = match spec.homogeneous_fields() {
        Some(h) => h * (l as f64 - 2.0 * index.count_ones() as f64),
        None => spec
            .fields
            .iter()
            .enumerate()
            .map(|(j, &h)| if site_bit(index, j, l) == 0 { h } else { -h })
            .sum(),
    };
    spec.coupling * bond_sum + field_sum
}

/// `exp(-i [J sum s_j s_{j+1} + sum h_j s_j])` for the bit-string `z`.
pub fn ising_phase(z: &BitString, spec: &CircuitSpec) -> Result<Complex64> {
    spec.check_shape()?;
    if z.len() != spec.sites {
        return Err(Error::BitStringLength {
            expected: spec.sites,
            found: z.len(),
        });
    }
    Ok(Complex64::from_polar(1.0, -ising_energy(spec, z.index())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kick_zero_is_identity() {
        assert!(kick_gate(0.0).max_distance(&GateU2::IDENTITY) < 1e-15);
    }

    #[test]
    fn kick_quarter_is_hadamard_like() {
        // Literal exp(-i pi/4 X) = (1/sqrt2)[[1, -i], [-i, 1]], the complex
        // conjugate of the diagrammatic [[1, i], [i, 1]] / sqrt2.
        let g = kick_gate(FRAC_PI_4);
        let expected = GateU2::from_entries([
            [c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)],
            [c(0.0, -FRAC_1_SQRT_2), c(FRAC_1_SQRT_2, 0.0)],
        ]);
        assert!(g.max_distance(&expected) < 1e-15);
        let diagram = GateU2::from_entries([
            [c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)],
            [c(0.0, FRAC_1_SQRT_2), c(FRAC_1_SQRT_2, 0.0)],
        ]);
        let conj = GateU2::from_entries(diagram.entries().map(|r| r.map(|x| x.conj())));
        assert!(g.distance_up_to_phase(&conj) < 1e-15);
        // moduli agree with the diagram entry by entry
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.get(i, j).norm() - diagram.get(i, j).norm()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kick_half_is_x_up_to_phase() {
        let x = GateU2::from_entries([[ZERO, c(0.0, 1.0)], [c(0.0, 1.0), ZERO]]);
        assert!(kick_gate(PI / 2.0).distance_up_to_phase(&x) < 1e-15);
    }

    #[test]
    fn ising_phase_aligned_chain() {
        let mut spec = CircuitSpec::self_dual(5, 0.0);
        spec.fields = vec![0.0; 5];
        let z = BitString::from_bits(&[0; 5]).unwrap();
        let got = ising_phase(&z, &spec).unwrap();
        let want = Complex64::from_polar(1.0, -4.0 * FRAC_PI_4);
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn ising_phase_antialigned_pair() {
        let spec = CircuitSpec::self_dual(2, 0.0);
        let z = BitString::from_bits(&[0, 1]).unwrap();
        let got = ising_phase(&z, &spec).unwrap();
        assert!((got - Complex64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn ising_phase_with_fields() {
        let g = PI / 3.0;
        let spec = CircuitSpec::self_dual(2, g);
        let z = BitString::from_bits(&[0, 0]).unwrap();
        let got = ising_phase(&z, &spec).unwrap();
        let want = Complex64::from_polar(1.0, -(FRAC_PI_4 + 2.0 * g));
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn ising_phase_inhomogeneous_matches_direct_sum() {
        let spec = CircuitSpec::self_dual(4, 0.3).with_fields(vec![0.1, -0.7, 1.3, 0.25]);
        for index in 0..16 {
            let z = BitString::from_index(index, 4).unwrap();
            let s: Vec<f64> = (0..4).map(|j| 1.0 - 2.0 * z.bit(j) as f64).collect();
            let e: f64 = FRAC_PI_4 * (0..3).map(|j| s[j] * s[j + 1]).sum::<f64>()
                + (0..4).map(|j| spec.fields[j] * s[j]).sum::<f64>();
            let got = ising_phase(&z, &spec).unwrap();
            assert!((got - Complex64::from_polar(1.0, -e)).norm() < 1e-14);
        }
    }

    #[test]
    fn ising_phase_rejects_length_mismatch() {
        let spec = CircuitSpec::self_dual(3, 0.2);
        let z = BitString::from_bits(&[0, 1]).unwrap();
        assert_eq!(
            ising_phase(&z, &spec),
            Err(Error::BitStringLength { expected: 3, found: 2 })
        );
    }

    #[test]
    fn bit_convention_first_site_is_msb() {
        let z = BitString::from_bits(&[1, 0, 0]).unwrap();
        assert_eq!(z.index(), 4);
        assert_eq!(z.bit(0), 1);
        assert_eq!(z.bit(2), 0);
        assert_eq!(BitString::from_bits(&[0, 2]), Err(Error::InvalidBit(2)));
    }

    #[test]
    fn validate_default_point_is_clean() {
        let d = CircuitSpec::self_dual(14, PI / 3.0).validate();
        assert!(d.errors.is_empty());
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn validate_warns_on_clifford_phase() {
        let d = CircuitSpec::self_dual(6, PI / 8.0).validate();
        assert!(d.errors.is_empty());
        assert!(matches!(d.warnings[0], Warning::CliffordPhase { multiple: 1, .. }));
    }

    #[test]
    fn validate_rejects_non_unitary_boundary() {
        let bad = GateU2::from_entries([[ONE, ONE], [ZERO, ONE]]);
        let d = CircuitSpec::self_dual(6, 1.0)
            .with_variant(Variant::BoundaryGeneric { gate: bad })
            .validate();
        assert!(matches!(d.errors[0], Error::NonUnitary { .. }));
    }

    #[test]
    fn validate_rejects_short_chain_and_off_dual_point() {
        let d = CircuitSpec::self_dual(1, 1.0).validate();
        assert_eq!(d.errors[0], Error::TooFewSites(1));
        let mut spec = CircuitSpec::self_dual(4, 1.0);
        spec.kick = 0.3;
        assert!(matches!(spec.validate().errors[0], Error::NotDualUnitary { .. }));
        spec.variant = Variant::RandomBrickwork { seed: 1 };
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn validate_rejects_field_count() {
        let spec = CircuitSpec::self_dual(4, 1.0).with_fields(vec![1.0; 3]);
        assert_eq!(spec.validate().errors[0], Error::FieldCount { expected: 4, found: 3 });
    }
}
