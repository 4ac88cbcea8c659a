//! Bit-string probability histograms against the finite-time laws and Porter-Thomas.

use fockdu_core::fockspace::{
    histogram, ks_statistic, Density, DualUnitaryDensity, OverlapHistogram, PerturbedDensity,
    PorterThomas,
};
use fockdu_core::model::{CircuitSpec, Variant};
use fockdu_core::statevector::{FloquetEvolver, StateVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{to_value, Context, Outcome, Table};
use crate::error::{CliError, CliResult};
use crate::output::{f17, f17_opt, RunDir};
use crate::params::DistParams;
use crate::plot;

pub const HEADER: [&str; 6] = [
    "bin_lo",
    "bin_hi",
    "count",
    "density",
    "analytic",
    "porter_thomas",
];

/// KS bound against the self-dual law under `--check`.
pub const KS_TOL_DUAL: f64 = 0.02;
/// KS bound against the boundary-kick law under `--check`.
pub const KS_TOL_PERTURBED: f64 = 0.03;

/// Closed-form law of `p` after `t` periods, where one exists.
pub fn reference(spec: &CircuitSpec, t: u32) -> Option<Box<dyn Density + Send + Sync>> {
    if t == 0 || !spec.is_dual_point() {
        return None;
    }
    match spec.variant {
        Variant::DualUnitary => DualUnitaryDensity::new(spec.sites, t)
            .ok()
            .map(|d| Box::new(d) as _),
        Variant::BoundaryKick { theta } => PerturbedDensity::new(spec.sites, t, theta)
            .ok()
            .map(|d| Box::new(d) as _),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: u32,
    #[serde(skip)]
    pub histogram: OverlapHistogram,
    #[serde(skip)]
    pub analytic: Vec<Option<f64>>,
    #[serde(skip)]
    pub porter_thomas: Vec<f64>,
    pub ks_analytic: Option<f64>,
    pub ks_porter_thomas: f64,
    pub zero_count: u64,
    pub overflow: u64,
}

/// Mean density of `d` over the half-open bin `[lo, hi)`.
fn bin_average(d: &dyn Density, lo: f64, hi: f64) -> f64 {
    (d.cdf_left(hi) - d.cdf_left(lo)) / (hi - lo)
}

pub fn snapshot(
    spec: &CircuitSpec,
    t: u32,
    probs: &[f64],
    bins: usize,
    x_max: Option<f64>,
) -> CliResult<Snapshot> {
    let h = histogram(probs, spec.sites, t, bins, x_max)?;
    let pt = PorterThomas { sites: spec.sites };
    let refd = reference(spec, t);
    let bins_lohi: Vec<(f64, f64)> = h.edges.windows(2).map(|w| (w[0], w[1])).collect();
    let analytic = bins_lohi
        .iter()
        .map(|&(lo, hi)| refd.as_deref().map(|d| bin_average(d, lo, hi)))
        .collect();
    let porter_thomas = bins_lohi
        .iter()
        .map(|&(lo, hi)| bin_average(&pt, lo, hi))
        .collect();
    Ok(Snapshot {
        t,
        ks_analytic: refd.as_deref().map(|d| ks_statistic(probs, d)),
        ks_porter_thomas: ks_statistic(probs, &pt),
        zero_count: h.zero_count,
        overflow: h.overflow,
        analytic,
        porter_thomas,
        histogram: h,
    })
}

/// Probabilities after each period in `times`.
pub fn probabilities_at(spec: &CircuitSpec, times: &[u32]) -> CliResult<Vec<(u32, Vec<f64>)>> {
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let t_max = *sorted
        .last()
        .ok_or_else(|| CliError::validation("need at least one time"))?;
    let evolver = FloquetEvolver::new(spec)?;
    let mut state = StateVector::init_zero(spec.sites)?;
    let mut out = Vec::new();
    if sorted[0] == 0 {
        out.push((0, state.probabilities()));
    }
    evolver.evolve(&mut state, 0, t_max, |t, s| {
        if sorted.binary_search(&t).is_ok() {
            out.push((t, s.probabilities()));
        }
    })?;
    Ok(out)
}

pub fn compute(
    spec: &CircuitSpec,
    times: &[u32],
    bins: usize,
    x_max: Option<f64>,
) -> CliResult<Vec<Snapshot>> {
    let probs = probabilities_at(spec, times)?;
    probs
        .par_iter()
        .map(|(t, p)| snapshot(spec, *t, p, bins, x_max))
        .collect()
}

fn rows(s: &Snapshot) -> Vec<Vec<String>> {
    let h = &s.histogram;
    let dens = h.density();
    h.edges
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            vec![
                f17(w[0]),
                f17(w[1]),
                h.counts[k].to_string(),
                f17(dens[k]),
                f17_opt(s.analytic[k]),
                f17(s.porter_thomas[k]),
            ]
        })
        .collect()
}

pub fn ks_tolerance(spec: &CircuitSpec) -> Option<f64> {
    match spec.variant {
        Variant::DualUnitary => Some(KS_TOL_DUAL),
        Variant::BoundaryKick { .. } => Some(KS_TOL_PERTURBED),
        _ => None,
    }
}

pub fn run(params: &DistParams, ctx: &Context) -> CliResult<Outcome> {
    let (spec, warnings) = params.chain.spec()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if params.t.contains(&0) {
        return Err(CliError::validation("times must be at least 1"));
    }
    let snaps = ctx
        .pool()?
        .install(|| compute(&spec, &params.t, params.bins, params.x_max))?;
    let mut dir = RunDir::create(&ctx.root, "dist", to_value(params), params.chain.seed)?;
    let mut failures = Vec::new();
    let tol = ks_tolerance(&spec);
    for s in &snaps {
        let stem = format!("hist_t{:03}", s.t);
        let csv = Table {
            stem: stem.clone(),
            header: HEADER.to_vec(),
            rows: rows(s),
        }
        .write(&mut dir, params.format, params.plot)?;
        if let (true, Some(text)) = (params.plot, csv.as_deref()) {
            let title = format!("L = {}, t = {}, {}", spec.sites, s.t, spec.variant.name());
            super::write_figure(&mut dir, &stem, text, |c| plot::render_hist(c, &title))?;
        }
        let ks_a = s
            .ks_analytic
            .map_or("n/a".to_string(), |d| format!("{d:.4e}"));
        ctx.say(&format!(
            "t={}: KS vs finite-time law {ks_a}, KS vs Porter-Thomas {:.4e}, zero-probability strings {}",
            s.t, s.ks_porter_thomas, s.zero_count
        ));
        if let (true, Some(tol), Some(d)) = (params.check, tol, s.ks_analytic) {
            if d >= tol {
                failures.push(format!("t={}: KS {d:.4} not below {tol}", s.t));
            }
        }
    }
    let summary = json!({ "snapshots": snaps, "ks_tolerance": tol });
    let (path, manifest) = dir.finish(ctx.threads, warnings, summary)?;
    ctx.say(&format!("wrote {}", path.display()));
    Ok(Outcome {
        dir: path,
        manifest,
        failures,
    })
}
