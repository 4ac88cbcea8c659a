//! Monte-Carlo Haar moments against the closed form.

use std::time::Instant;

use fockdu_core::rmt::{
    basis_vector, check_mc, finish_estimate, haar_moment_closed, mc_chunk_count, mc_moment_chunk,
    pairwise_merge, MomentEstimate,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{to_value, Context, Outcome, Table};
use crate::error::CliResult;
use crate::output::{f17, RunDir};
use crate::params::HaarCheckParams;

pub const HEADER: [&str; 7] = [
    "d",
    "q",
    "samples",
    "mean",
    "std_error",
    "closed_form",
    "z_score",
];

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct HaarRow {
    pub estimate: MomentEstimate,
    pub closed_form: f64,
    pub z_score: f64,
}

/// Chunks run in parallel and are merged in a fixed order, so the result
/// does not depend on the worker count.
pub fn estimate(d: usize, q: u32, samples: usize, seed: u64) -> CliResult<HaarRow> {
    let e0 = basis_vector(d.max(1), 0);
    check_mc(d, q, samples, &e0, &e0)?;
    let parts: Vec<_> = (0..mc_chunk_count(samples))
        .into_par_iter()
        .map(|c| mc_moment_chunk(d, q, samples, seed, c, &e0, &e0))
        .collect();
    let estimate = finish_estimate(pairwise_merge(&parts), d, q);
    let closed_form = haar_moment_closed(d, q);
    Ok(HaarRow {
        estimate,
        closed_form,
        z_score: estimate.z_score(closed_form),
    })
}

pub fn run(params: &HaarCheckParams, ctx: &Context) -> CliResult<Outcome> {
    let start = Instant::now();
    let pool = ctx.pool()?;
    let rows: Vec<HaarRow> = params
        .q
        .iter()
        .map(|&q| pool.install(|| estimate(params.d, q, params.samples, params.seed)))
        .collect::<CliResult<_>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut dir = RunDir::create(&ctx.root, "haar-check", to_value(params), params.seed)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.estimate.dim.to_string(),
                r.estimate.q.to_string(),
                r.estimate.samples.to_string(),
                f17(r.estimate.mean),
                f17(r.estimate.std_error),
                f17(r.closed_form),
                f17(r.z_score),
            ]
        })
        .collect();
    Table {
        stem: "haar_check".into(),
        header: HEADER.to_vec(),
        rows: table,
    }
    .write(&mut dir, params.format, false)?;
    let mut failures = Vec::new();
    for r in &rows {
        ctx.say(&format!(
            "d={} q={}: mean {:.6e} +- {:.2e}, closed form {:.6e}, z = {:+.3}",
            r.estimate.dim,
            r.estimate.q,
            r.estimate.mean,
            r.estimate.std_error,
            r.closed_form,
            r.z_score
        ));
        if !(r.z_score.abs() < params.sigma) {
            failures.push(format!(
                "q={}: |z| = {:.3} not below {}",
                r.estimate.q,
                r.z_score.abs(),
                params.sigma
            ));
        }
    }
    let summary = json!({ "rows": rows, "seconds": elapsed });
    let (path, manifest) = dir.finish(ctx.threads, Vec::new(), summary)?;
    ctx.say(&format!("wrote {}", path.display()));
    Ok(Outcome {
        dir: path,
        manifest,
        failures,
    })
}
