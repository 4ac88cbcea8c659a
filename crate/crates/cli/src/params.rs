//! Typed parameter sets of each subcommand.

use fockdu_core::model::{CircuitSpec, GateU2, Variant};
use fockdu_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::config::de::{one_or_many, opt_one_or_many};
use crate::error::{CliError, CliResult};

fn angle(s: &str) -> Angle {
    s.parse().expect("built-in angle literal")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Chain, variant and seed shared by the evolving subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainParams {
    #[serde(rename = "L")]
    pub sites: usize,
    pub g: Angle,
    #[serde(rename = "J")]
    pub coupling: Angle,
    pub b: Angle,
    /// Per-site fields; `h_j = g` when absent.
    #[serde(
        skip_serializing_if = "Option::is_none",
        deserialize_with = "opt_one_or_many"
    )]
    pub h: Option<Vec<Angle>>,
    pub variant: String,
    pub theta: Angle,
    /// Boundary gate, row-major `re, im` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            sites: 14,
            g: angle("pi/3"),
            coupling: angle("pi/4"),
            b: angle("pi/4"),
            h: None,
            variant: "dual".into(),
            theta: angle("pi/14"),
            gate: None,
            seed: 1,
        }
    }
}

pub const VARIANT_NAMES: [&str; 6] = [
    "dual",
    "boundary-kick",
    "boundary-generic",
    "mid1",
    "mid2",
    "random",
];

pub fn parse_gate(raw: &[f64]) -> CliResult<GateU2> {
    if raw.len() != 8 {
        return Err(CliError::validation(
            "gate needs 8 numbers: row-major re, im pairs",
        ));
    }
    let c = |k: usize| Complex64::new(raw[2 * k], raw[2 * k + 1]);
    GateU2::try_new([[c(0), c(1)], [c(2), c(3)]]).map_err(Into::into)
}

/// Variant by name; seeded variants take `seed`.
pub fn variant_from(name: &str, theta: f64, gate: Option<&[f64]>, seed: u64) -> CliResult<Variant> {
    Ok(match name {
        "dual" => Variant::DualUnitary,
        "boundary-kick" => Variant::BoundaryKick { theta },
        "boundary-generic" => {
            let raw =
                gate.ok_or_else(|| CliError::validation("variant boundary-generic needs `gate`"))?;
            Variant::BoundaryGeneric {
                gate: parse_gate(raw)?,
            }
        }
        "mid1" => Variant::MidSingleSite { seed },
        "mid2" => Variant::MidTwoSite { seed },
        "random" => Variant::RandomBrickwork { seed },
        other => {
            return Err(CliError::validation(format!(
                "unknown variant `{other}` (expected one of {})",
                VARIANT_NAMES.join(", ")
            )))
        }
    })
}

impl ChainParams {
    /// Validated spec plus its warnings.
    pub fn spec(&self) -> CliResult<(CircuitSpec, Vec<String>)> {
        let variant = variant_from(
            &self.variant,
            self.theta.radians(),
            self.gate.as_deref(),
            self.seed,
        )?;
        let fields = match &self.h {
            Some(h) => h.iter().map(Angle::radians).collect(),
            None => vec![self.g.radians(); self.sites],
        };
        let spec = CircuitSpec {
            sites: self.sites,
            coupling: self.coupling.radians(),
            kick: self.b.radians(),
            fields,
            phase: self.g.radians(),
            variant,
        };
        let warnings = spec.validate().into_result()?;
        Ok((spec, warnings.iter().map(ToString::to_string).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IprParams {
    #[serde(flatten)]
    pub chain: ChainParams,
    #[serde(deserialize_with = "one_or_many")]
    pub q: Vec<u32>,
    pub t_max: u32,
    /// Writes `|amps|^2` of every period as a binary dump.
    pub dump: bool,
    pub format: Format,
    pub plot: bool,
    /// Requires every numeric/analytic ratio within `[0.95, 1.05]`.
    pub check: bool,
}

impl Default for IprParams {
    fn default() -> Self {
        Self {
            chain: ChainParams::default(),
            q: vec![2, 4, 6, 8],
            t_max: 10,
            dump: false,
            format: Format::Csv,
            plot: false,
            check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistParams {
    #[serde(flatten)]
    pub chain: ChainParams,
    #[serde(deserialize_with = "one_or_many")]
    pub t: Vec<u32>,
    pub bins: usize,
    /// Upper histogram edge in units of `N p`; the largest sample when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    pub format: Format,
    pub plot: bool,
    /// Requires KS distances below the thresholds of [`crate::commands::dist`].
    pub check: bool,
}

impl Default for DistParams {
    fn default() -> Self {
        Self {
            chain: ChainParams::default(),
            t: vec![1, 2, 3, 6],
            bins: 60,
            x_max: None,
            format: Format::Csv,
            plot: false,
            check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualVerifyParams {
    /// Largest chain length; all `2..=L` are swept.
    #[serde(rename = "L")]
    pub sites_max: usize,
    pub t_max: u32,
    pub g: Angle,
    pub variant: String,
    pub theta: Angle,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<Vec<f64>>,
    pub tolerance: f64,
    /// Writes `U(0)`, `U(1)` and the boundary vectors at `L` for every `t`.
    pub dump_matrices: bool,
    pub format: Format,
}

impl Default for DualVerifyParams {
    fn default() -> Self {
        Self {
            sites_max: 8,
            t_max: 5,
            g: angle("pi/3"),
            variant: "dual".into(),
            theta: angle("pi/14"),
            gate: None,
            tolerance: 1e-10,
            dump_matrices: false,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HaarCheckParams {
    pub d: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub q: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
    /// Largest accepted `|z|`.
    pub sigma: f64,
    pub format: Format,
}

impl Default for HaarCheckParams {
    fn default() -> Self {
        Self {
            d: 8,
            q: vec![2, 3],
            samples: 100_000,
            seed: 1,
            sigma: 3.0,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareParams {
    #[serde(deserialize_with = "one_or_many")]
    pub models: Vec<String>,
    #[serde(rename = "L", deserialize_with = "one_or_many")]
    pub sizes: Vec<usize>,
    pub realizations: usize,
    pub t_max: u32,
    /// Ergodic window in nats around `(L - 1) ln 2`.
    pub threshold: f64,
    pub g: Angle,
    pub seed: u64,
    pub format: Format,
    pub plot: bool,
    /// Requires the size dependence of `t*` described in [`crate::commands::compare`].
    pub check: bool,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            models: ["dual", "random", "mid1", "mid2"]
                .map(String::from)
                .to_vec(),
            sizes: vec![10, 12, 14],
            realizations: 50,
            t_max: 16,
            threshold: 0.1,
            g: angle("pi/3"),
            seed: 1,
            format: Format::Csv,
            plot: false,
            check: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_key_value, resolve};

    #[test]
    fn defaults_reproduce_the_reference_chain() {
        let (spec, warnings) = ChainParams::default().spec().unwrap();
        assert_eq!(spec, CircuitSpec::self_dual(14, std::f64::consts::PI / 3.0));
        assert!(warnings.is_empty());
    }

    #[test]
    fn resolves_from_text() {
        let p: IprParams =
            resolve(parse_key_value("L=10\nq=2\ng=pi/8\nvariant=boundary-kick\ntheta=0").unwrap())
                .unwrap();
        assert_eq!(p.chain.sites, 10);
        assert_eq!(p.q, vec![2]);
        let (spec, warnings) = p.chain.spec().unwrap();
        assert_eq!(spec.variant, Variant::BoundaryKick { theta: 0.0 });
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn rejects_unknown_keys_and_variants() {
        assert!(resolve::<IprParams>(parse_key_value("Lx=10").unwrap()).is_err());
        let p: IprParams = resolve(parse_key_value("variant=brick").unwrap()).unwrap();
        assert!(p.chain.spec().is_err());
    }

    #[test]
    fn inhomogeneous_fields_and_generic_gate() {
        let text = "L=3\nh=0.1,pi/5,0.3\nvariant=boundary-generic\ngate=0,0,1,0,1,0,0,0";
        let p: IprParams = resolve(parse_key_value(text).unwrap()).unwrap();
        let (spec, _) = p.chain.spec().unwrap();
        assert_eq!(spec.fields[1], std::f64::consts::PI / 5.0);
        let bad = "variant=boundary-generic\ngate=1,0,1,0,1,0,0,0";
        let p: IprParams = resolve(parse_key_value(bad).unwrap()).unwrap();
        assert!(p.chain.spec().is_err());
    }
}
