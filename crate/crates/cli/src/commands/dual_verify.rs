//! Sweep comparing direct evolution with the dual matrix-product overlaps.

use std::time::Instant;

use fockdu_core::dual::build_dual_set;
use fockdu_core::model::CircuitSpec;
use fockdu_core::statevector::evolve_from_zero;
use fockdu_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{to_value, Context, Outcome, Table};
use crate::error::{CliError, CliResult};
use crate::output::{complex_list, complex_rows, f17, RunDir};
use crate::params::{variant_from, DualVerifyParams};

pub const HEADER: [&str; 6] = [
    "L",
    "t",
    "max_modulus_dev",
    "max_aligned_dev",
    "max_raw_dev",
    "unitarity_dev",
];

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Cell {
    #[serde(rename = "L")]
    pub sites: usize,
    pub t: u32,
    /// `max_z ||<z|psi>| - |overlap(z)||`.
    pub modulus_dev: f64,
    /// Same after aligning one global phase on `z = 0...0`.
    pub aligned_dev: f64,
    /// Without any phase alignment.
    pub raw_dev: f64,
    pub unitarity_dev: f64,
}

pub fn cell(spec: &CircuitSpec, t: u32) -> CliResult<Cell> {
    let direct = evolve_from_zero(spec, t)?;
    let set = build_dual_set(spec, t)?;
    let dual = set.overlaps_all();
    let a = direct.amplitudes();
    let phase = if a[0].norm() > 0.0 && dual[0].norm() > 0.0 {
        let r = a[0] / dual[0];
        r / r.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut c = Cell {
        sites: spec.sites,
        t,
        modulus_dev: 0.0,
        aligned_dev: 0.0,
        raw_dev: 0.0,
        unitarity_dev: set.unitarity_deviation(),
    };
    for (x, y) in a.iter().zip(&dual) {
        c.modulus_dev = c.modulus_dev.max((x.norm() - y.norm()).abs());
        c.aligned_dev = c.aligned_dev.max((x - y * phase).norm());
        c.raw_dev = c.raw_dev.max((x - y).norm());
    }
    Ok(c)
}

/// All `(L, t)` with `2 <= L <= sites_max`, `1 <= t <= t_max`.
pub fn sweep(
    make_spec: impl Fn(usize) -> CircuitSpec + Sync,
    sites_max: usize,
    t_max: u32,
) -> CliResult<Vec<Cell>> {
    let grid: Vec<(usize, u32)> = (2..=sites_max)
        .flat_map(|l| (1..=t_max).map(move |t| (l, t)))
        .collect();
    grid.par_iter()
        .map(|&(l, t)| cell(&make_spec(l), t))
        .collect()
}

fn spec_for(params: &DualVerifyParams, sites: usize) -> CliResult<CircuitSpec> {
    let variant = variant_from(
        &params.variant,
        params.theta.radians(),
        params.gate.as_deref(),
        0,
    )?;
    Ok(CircuitSpec::self_dual(sites, params.g.radians()).with_variant(variant))
}

pub fn run(params: &DualVerifyParams, ctx: &Context) -> CliResult<Outcome> {
    if params.sites_max < 2 || params.t_max < 1 {
        return Err(CliError::validation("need L >= 2 and t-max >= 1"));
    }
    let probe = spec_for(params, params.sites_max)?;
    let warnings: Vec<String> = probe
        .validate()
        .into_result()?
        .iter()
        .map(ToString::to_string)
        .collect();
    build_dual_set(&probe, 1)?;
    let start = Instant::now();
    let cells = ctx.pool()?.install(|| {
        sweep(
            |l| spec_for(params, l).expect("variant checked above"),
            params.sites_max,
            params.t_max,
        )
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut dir = RunDir::create(&ctx.root, "dual-verify", to_value(params), 0)?;
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.sites.to_string(),
                c.t.to_string(),
                f17(c.modulus_dev),
                f17(c.aligned_dev),
                f17(c.raw_dev),
                f17(c.unitarity_dev),
            ]
        })
        .collect();
    Table {
        stem: "dual_verify".into(),
        header: HEADER.to_vec(),
        rows,
    }
    .write(&mut dir, params.format, false)?;
    if params.dump_matrices {
        for t in 1..=params.t_max {
            let set = build_dual_set(&probe, t)?;
            let value = json!({
                "L": params.sites_max,
                "t": t,
                "tau": set.tau(),
                "layout": "row-major [re, im]",
                "u0": complex_rows(set.u0()),
                "u1": complex_rows(set.u1()),
                "left": complex_list(set.left().as_slice()),
                "right": complex_list(set.right().as_slice()),
                "boundary": set.boundary().map(|b| [complex_list(b[0].as_slice()), complex_list(b[1].as_slice())]),
                "bond_phase": [set.bond_phase().re, set.bond_phase().im],
                "norm_prefactor": set.norm_prefactor(),
            });
            dir.write_json(
                &format!("dual_L{:02}_t{t:02}.json", params.sites_max),
                &value,
            )?;
        }
    }
    let mut failures = Vec::new();
    for c in &cells {
        ctx.say(&format!(
            "L={:2} t={}: modulus {:.3e}  phase-aligned {:.3e}  unitarity {:.3e}",
            c.sites, c.t, c.modulus_dev, c.aligned_dev, c.unitarity_dev
        ));
        if !(c.modulus_dev < params.tolerance) || !(c.unitarity_dev < params.tolerance) {
            failures.push(format!(
                "L={} t={}: deviation above {:e}",
                c.sites, c.t, params.tolerance
            ));
        }
    }
    let worst = cells.iter().fold(0.0f64, |m, c| m.max(c.modulus_dev));
    ctx.say(&format!(
        "max modulus deviation {worst:.3e} in {elapsed:.2} s"
    ));
    let summary = json!({ "max_modulus_dev": worst, "seconds": elapsed, "cells": cells });
    let (path, manifest) = dir.finish(ctx.threads, warnings, summary)?;
    ctx.say(&format!("wrote {}", path.display()));
    Ok(Outcome {
        dir: path,
        manifest,
        failures,
    })
}
