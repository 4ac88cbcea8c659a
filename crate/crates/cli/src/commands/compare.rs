//! `S_2(t)` of the self-dual chain against random and locally perturbed circuits,
//! and the time `t*` at which each reaches the ergodic value `(L - 1) ln 2`.
//!
//! Under `--check`: `t*` of `dual` is the same for every `L`, `t*` of `random`
//! grows strictly with `L`, and `mid1`/`mid2` reach the window no later than
//! `random` at each `L`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use fockdu_core::fockspace::{ergodic_approach_time, ipr_of_probabilities, participation_entropy};
use fockdu_core::model::{CircuitSpec, Variant};
use fockdu_core::rng::{stream_rng, StreamId, StreamTag};
use fockdu_core::statevector::{FloquetEvolver, StateVector};
use rand_core::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{to_value, Context, Outcome, Table};
use crate::error::{CliError, CliResult};
use crate::output::{f17, RunDir};
use crate::params::CompareParams;
use crate::plot;

pub const MODELS: [&str; 4] = ["dual", "random", "mid1", "mid2"];
pub const HEADER: [&str; 6] = ["model", "L", "t", "S_2", "S_2_std", "realizations"];
pub const TSTAR_HEADER: [&str; 4] = ["model", "L", "t_star", "threshold"];

/// Seed of realization `r`, derived from the master seed.
pub fn realization_seed(master: u64, r: usize) -> u64 {
    stream_rng(master, StreamId::new(StreamTag::User, 0, r as u32)).next_u64()
}

pub fn model_spec(model: &str, sites: usize, g: f64, seed: u64) -> CliResult<CircuitSpec> {
    let variant = match model {
        "dual" => Variant::DualUnitary,
        "random" => Variant::RandomBrickwork { seed },
        "mid1" => Variant::MidSingleSite { seed },
        "mid2" => Variant::MidTwoSite { seed },
        other => {
            return Err(CliError::validation(format!(
                "unknown model `{other}` (expected one of {})",
                MODELS.join(", ")
            )))
        }
    };
    Ok(CircuitSpec::self_dual(sites, g).with_variant(variant))
}

/// `S_2(t)` for `t = 0..=t_max`.
pub fn entropy_series(spec: &CircuitSpec, t_max: u32) -> CliResult<Vec<f64>> {
    let evolver = FloquetEvolver::new(spec)?;
    let mut state = StateVector::init_zero(spec.sites)?;
    let mut out = vec![0.0];
    evolver.evolve(&mut state, 0, t_max, |_, s| {
        let i = ipr_of_probabilities(&s.probabilities(), 2);
        out.push(participation_entropy(i, 2).expect("q = 2 is valid"));
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Curve {
    pub model: String,
    #[serde(rename = "L")]
    pub sites: usize,
    pub realizations: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub t_star: Option<u32>,
}

pub fn realizations_for(model: &str, requested: usize) -> usize {
    if model == "dual" {
        1
    } else {
        requested
    }
}

pub fn compute(params: &CompareParams) -> CliResult<Vec<Curve>> {
    if params.realizations == 0 || params.sizes.is_empty() || params.models.is_empty() {
        return Err(CliError::validation(
            "need models, sizes and at least one realization",
        ));
    }
    let g = params.g.radians();
    let mut jobs = Vec::new();
    for m in &params.models {
        for &l in &params.sizes {
            for r in 0..realizations_for(m, params.realizations) {
                jobs.push((
                    m.as_str(),
                    l,
                    r,
                    model_spec(m, l, g, realization_seed(params.seed, r))?,
                ));
            }
        }
    }
    let series: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|(_, _, _, spec)| entropy_series(spec, params.t_max))
        .collect::<CliResult<_>>()?;
    let mut grouped: BTreeMap<(usize, usize), (String, Vec<&Vec<f64>>)> = BTreeMap::new();
    for ((m, l, _, _), s) in jobs.iter().zip(&series) {
        let mi = params
            .models
            .iter()
            .position(|x| x == m)
            .expect("model listed");
        let li = params
            .sizes
            .iter()
            .position(|x| x == l)
            .expect("size listed");
        grouped
            .entry((mi, li))
            .or_insert_with(|| (m.to_string(), Vec::new()))
            .1
            .push(s);
    }
    Ok(grouped
        .into_iter()
        .map(|((_, li), (model, runs))| {
            let sites = params.sizes[li];
            let n = runs.len() as f64;
            let len = params.t_max as usize + 1;
            let mean: Vec<f64> = (0..len)
                .map(|t| runs.iter().map(|s| s[t]).sum::<f64>() / n)
                .collect();
            let std: Vec<f64> = (0..len)
                .map(|t| {
                    if runs.len() < 2 {
                        0.0
                    } else {
                        (runs.iter().map(|s| (s[t] - mean[t]).powi(2)).sum::<f64>() / (n - 1.0))
                            .sqrt()
                    }
                })
                .collect();
            let pairs: Vec<(u32, f64)> = mean
                .iter()
                .enumerate()
                .map(|(t, &s)| (t as u32, s))
                .collect();
            let t_star =
                ergodic_approach_time(&pairs, (sites as f64 - 1.0) * LN_2, params.threshold);
            Curve {
                model,
                sites,
                realizations: runs.len(),
                mean,
                std,
                t_star,
            }
        })
        .collect())
}

fn t_star_of<'a>(curves: &'a [Curve], model: &str) -> Vec<&'a Curve> {
    let mut v: Vec<&Curve> = curves.iter().filter(|c| c.model == model).collect();
    v.sort_by_key(|c| c.sites);
    v
}

/// Violations of the size dependence expected of each model.
pub fn check(curves: &[Curve]) -> Vec<String> {
    let mut failures = Vec::new();
    let dual = t_star_of(curves, "dual");
    if let Some(first) = dual.first() {
        if first.t_star.is_none() || dual.iter().any(|c| c.t_star != first.t_star) {
            let ts: Vec<_> = dual.iter().map(|c| (c.sites, c.t_star)).collect();
            failures.push(format!("dual t* not constant in L: {ts:?}"));
        }
    }
    let random = t_star_of(curves, "random");
    for w in random.windows(2) {
        let ok = matches!((w[0].t_star, w[1].t_star), (Some(a), Some(b)) if b > a);
        if !ok {
            failures.push(format!(
                "random t* not strictly increasing: L={} -> {:?}, L={} -> {:?}",
                w[0].sites, w[0].t_star, w[1].sites, w[1].t_star
            ));
        }
    }
    for m in ["mid1", "mid2"] {
        for c in t_star_of(curves, m) {
            if let Some(r) = random.iter().find(|r| r.sites == c.sites) {
                let later = match (c.t_star, r.t_star) {
                    (Some(a), Some(b)) => a > b,
                    (None, Some(_)) => true,
                    _ => false,
                };
                if later {
                    failures.push(format!(
                        "{m} reaches the ergodic value after random at L={}",
                        c.sites
                    ));
                }
            }
        }
    }
    failures
}

pub fn run(params: &CompareParams, ctx: &Context) -> CliResult<Outcome> {
    for m in &params.models {
        model_spec(m, 2, 0.0, 0)?;
    }
    let curves = ctx.pool()?.install(|| compute(params))?;
    let mut dir = RunDir::create(&ctx.root, "compare", to_value(params), params.seed)?;
    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| {
            (0..c.mean.len()).map(move |t| {
                vec![
                    c.model.clone(),
                    c.sites.to_string(),
                    t.to_string(),
                    f17(c.mean[t]),
                    f17(c.std[t]),
                    c.realizations.to_string(),
                ]
            })
        })
        .collect();
    let csv = Table {
        stem: "compare".into(),
        header: HEADER.to_vec(),
        rows,
    }
    .write(&mut dir, params.format, params.plot)?;
    let tstar: Vec<Vec<String>> = curves
        .iter()
        .map(|c| {
            vec![
                c.model.clone(),
                c.sites.to_string(),
                c.t_star.map(|t| t.to_string()).unwrap_or_default(),
                f17(params.threshold),
            ]
        })
        .collect();
    Table {
        stem: "tstar".into(),
        header: TSTAR_HEADER.to_vec(),
        rows: tstar,
    }
    .write(&mut dir, params.format, false)?;
    if let (true, Some(text)) = (params.plot, csv.as_deref()) {
        super::write_figure(&mut dir, "compare", text, plot::render_compare)?;
    }
    for c in &curves {
        let t = c
            .t_star
            .map_or(format!("> {}", params.t_max), |t| t.to_string());
        ctx.say(&format!(
            "{:6} L={:2}: t* = {t} ({} realizations)",
            c.model, c.sites, c.realizations
        ));
    }
    let failures = if params.check {
        check(&curves)
    } else {
        Vec::new()
    };
    let t_stars: Vec<_> = curves
        .iter()
        .map(|c| json!({"model": c.model, "L": c.sites, "t_star": c.t_star}))
        .collect();
    let summary = json!({
        "t_star": t_stars,
        "threshold_nats": params.threshold,
        "random_geometry": "open brickwork, even then odd bonds, Haar U(4) gates resampled every period",
    });
    let (path, manifest) = dir.finish(ctx.threads, Vec::new(), summary)?;
    ctx.say(&format!("wrote {}", path.display()));
    Ok(Outcome {
        dir: path,
        manifest,
        failures,
    })
}
