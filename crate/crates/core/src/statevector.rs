//! Dense Floquet evolution of the `2^L` amplitudes.
//!
//! Site `j` (0-based) lives on bit `L-1-j` of the amplitude index, so the
//! kick layer walks strides `2^{L-1}, ..., 2, 1` as butterfly passes.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix4;

use crate::model::{ising_energy, kick_gate, BitString, CircuitSpec, GateU2, Variant};
use crate::numeric::compensated_sum;
use crate::rmt::{sample_gate_u4, sample_haar};
use crate::rng::{stream_rng, StreamId, StreamTag};
use crate::{Complex64, Error, Result};

/// Default memory cap for one state: 4 GiB, i.e. L <= 28.
pub const DEFAULT_MEMORY_BUDGET: u128 = 1 << 32;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub type Gate4 = Matrix4<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|00...0>`.
    pub fn init_zero(sites: usize) -> Result<Self> {
        Self::init_zero_with_budget(sites, DEFAULT_MEMORY_BUDGET)
    }

    pub fn init_zero_with_budget(sites: usize, budget_bytes: u128) -> Result<Self> {
        if sites < 2 {
            return Err(Error::TooFewSites(sites));
        }
        let required_bytes = (core::mem::size_of::<Complex64>() as u128) << sites.min(127);
        if sites >= usize::BITS as usize - 5 || required_bytes > budget_bytes {
            return Err(Error::MemoryBudget {
                sites,
                required_bytes,
                budget_bytes,
            });
        }
        let mut amps = vec![ZERO; 1 << sites];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { sites, amps })
    }

    pub fn from_amplitudes(sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        if sites < 2 {
            return Err(Error::TooFewSites(sites));
        }
        if amps.len() != 1 << sites {
            return Err(Error::InvalidArgument("amplitude count must be 2^L"));
        }
        Ok(Self { sites, amps })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, z: &BitString) -> Result<Complex64> {
        if z.len() != self.sites {
            return Err(Error::BitStringLength {
                expected: self.sites,
                found: z.len(),
            });
        }
        Ok(self.amps[z.index()])
    }

    pub fn amplitude_at(&self, index: usize) -> Result<Complex64> {
        self.amps.get(index).copied().ok_or(Error::IndexOutOfRange {
            index,
            dim: self.amps.len(),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amps.iter().map(|a| a.norm_sqr()))
    }

    /// Bit-string probabilities `|<z|psi>|^2`, indexed like the amplitudes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies `amps[z]` by `exp(-i E_I(z))`.
    pub fn apply_ising_layer(&mut self, spec: &CircuitSpec) -> Result<()> {
        self.check_spec(spec)?;
        for (z, a) in self.amps.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -ising_energy(spec, z));
        }
        Ok(())
    }

    /// Multiplies by a precomputed diagonal.
    pub fn apply_diagonal(&mut self, diag: &[Complex64]) {
        assert_eq!(diag.len(), self.amps.len());
        for (a, d) in self.amps.iter_mut().zip(diag) {
            *a *= d;
        }
    }

    /// `exp(-i b X)` on every site.
    pub fn apply_kick_layer(&mut self, b: f64) {
        let gate = kick_gate(b);
        for site in 0..self.sites {
            self.apply_single_site(site, &gate);
        }
    }

    pub fn apply_single_site(&mut self, site: usize, gate: &GateU2) {
        assert!(site < self.sites, "site {site} out of range");
        let stride = 1usize << (self.sites - 1 - site);
        let (g00, g01, g10, g11) = (gate.get(0, 0), gate.get(0, 1), gate.get(1, 0), gate.get(1, 1));
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = g00 * x0 + g01 * x1;
                *a1 = g10 * x0 + g11 * x1;
            }
        }
    }

    /// Two-site gate on `(site, site + 1)`, basis `|z_site z_{site+1}>`.
    pub fn apply_two_site(&mut self, site: usize, gate: &Gate4) {
        assert!(site + 1 < self.sites, "bond {site} out of range");
        let s_right = 1usize << (self.sites - 2 - site);
        let s_left = 2 * s_right;
        for block in self.amps.chunks_exact_mut(2 * s_left) {
            for off in 0..s_right {
                let idx = [off, off + s_right, off + s_left, off + s_left + s_right];
                let x = [block[idx[0]], block[idx[1]], block[idx[2]], block[idx[3]]];
                for (r, &i) in idx.iter().enumerate() {
                    block[i] = gate[(r, 0)] * x[0] + gate[(r, 1)] * x[1] + gate[(r, 2)] * x[2] + gate[(r, 3)] * x[3];
                }
            }
        }
    }

    fn check_spec(&self, spec: &CircuitSpec) -> Result<()> {
        spec.check_shape()?;
        if spec.sites != self.sites {
            return Err(Error::InvalidArgument("spec and state have different site counts"));
        }
        Ok(())
    }
}

/// Site carrying the mid-chain single-site gate, `ceil(L/2)` counted from 1.
pub fn mid_site(sites: usize) -> usize {
    sites.div_ceil(2) - 1
}

/// Left site of the central bond.
pub fn mid_bond(sites: usize) -> usize {
    sites / 2 - 1
}

pub fn mid_single_gate(seed: u64, sites: usize) -> GateU2 {
    let mut rng = stream_rng(seed, StreamId::new(StreamTag::MidSingleSite, 0, mid_site(sites) as u32));
    let u = sample_haar(2, &mut rng);
    GateU2::from_entries([[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]])
}

pub fn mid_two_site_gate(seed: u64, sites: usize, period: u32) -> Gate4 {
    let mut rng = stream_rng(seed, StreamId::new(StreamTag::MidTwoSite, period, mid_bond(sites) as u32));
    sample_gate_u4(&mut rng)
}

pub fn brickwork_gate(seed: u64, period: u32, bond: usize) -> Gate4 {
    let mut rng = stream_rng(seed, StreamId::new(StreamTag::Brickwork, period, bond as u32));
    sample_gate_u4(&mut rng)
}

/// Precomputed pieces of the Floquet step for a fixed spec.
#[derive(Debug, Clone)]
pub struct FloquetEvolver {
    spec: CircuitSpec,
    diagonal: Vec<Complex64>,
    kick: GateU2,
    boundary: Option<GateU2>,
    mid_single: Option<GateU2>,
}

impl FloquetEvolver {
    pub fn new(spec: &CircuitSpec) -> Result<Self> {
        spec.validate().into_result()?;
        let brickwork = matches!(spec.variant, Variant::RandomBrickwork { .. });
        let diagonal = if brickwork {
            Vec::new()
        } else {
            (0..spec.dim())
                .map(|z| Complex64::from_polar(1.0, -ising_energy(spec, z)))
                .collect()
        };
        let mid_single = match spec.variant {
            Variant::MidSingleSite { seed } => Some(mid_single_gate(seed, spec.sites)),
            _ => None,
        };
        Ok(Self {
            spec: spec.clone(),
            diagonal,
            kick: kick_gate(spec.kick),
            boundary: spec.variant.boundary_gate(),
            mid_single,
        })
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    /// One period; `period` is 0 for the first step.
    pub fn step(&self, state: &mut StateVector, period: u32) -> Result<()> {
        state.check_spec(&self.spec)?;
        let l = self.spec.sites;
        match self.spec.variant {
            Variant::RandomBrickwork { seed } => {
                for parity in [0usize, 1] {
                    for bond in (parity..l - 1).step_by(2) {
                        state.apply_two_site(bond, &brickwork_gate(seed, period, bond));
                    }
                }
                return Ok(());
            }
            _ => {
                state.apply_diagonal(&self.diagonal);
                for site in 0..l {
                    let gate = match self.boundary {
                        Some(ref u) if site == l - 1 => u,
                        _ => &self.kick,
                    };
                    state.apply_single_site(site, gate);
                }
            }
        }
        match self.spec.variant {
            Variant::MidSingleSite { .. } => {
                if let Some(ref u) = self.mid_single {
                    state.apply_single_site(mid_site(l), u);
                }
            }
            Variant::MidTwoSite { seed } => {
                state.apply_two_site(mid_bond(l), &mid_two_site_gate(seed, l, period));
            }
            _ => {}
        }
        Ok(())
    }

    /// Evolves `state` from period `start` for `periods` steps, handing every
    /// intermediate state (after periods `start+1, ...`) to `visit`.
    pub fn evolve<F: FnMut(u32, &StateVector)>(
        &self,
        state: &mut StateVector,
        start: u32,
        periods: u32,
        mut visit: F,
    ) -> Result<()> {
        for k in 0..periods {
            self.step(state, start + k)?;
            visit(start + k + 1, state);
        }
        Ok(())
    }
}

/// One Floquet period of `spec` applied to `state`; `period` indexes the step
/// (0 for the first) and keys the random gates of the random variants.
pub fn floquet_step(state: &mut StateVector, spec: &CircuitSpec, period: u32) -> Result<()> {
    FloquetEvolver::new(spec)?.step(state, period)
}

/// `|0...0>` evolved for `t` periods.
pub fn evolve_from_zero(spec: &CircuitSpec, t: u32) -> Result<StateVector> {
    let evolver = FloquetEvolver::new(spec)?;
    let mut state = StateVector::init_zero(spec.sites)?;
    evolver.evolve(&mut state, 0, t, |_, _| {})?;
    Ok(state)
}

/// Max `|a_i - b_i|` after aligning the global phase on the largest entry of `b`.
pub fn distance_up_to_phase(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (k, _) = b
        .iter()
        .enumerate()
        .fold((0, -1.0f64), |acc, (i, x)| if x.norm() > acc.1 { (i, x.norm()) } else { acc });
    let phase = if a[k].norm() > 0.0 && b[k].norm() > 0.0 {
        let r = a[k] / b[k];
        r / r.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}
