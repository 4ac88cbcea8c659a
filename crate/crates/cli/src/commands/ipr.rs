//! IPR and participation-entropy time series against the closed forms.

use fockdu_core::fockspace::{ipr_rows, IprRow};
use fockdu_core::model::CircuitSpec;
use fockdu_core::statevector::{FloquetEvolver, StateVector};
use rayon::prelude::*;
use serde_json::json;

use super::{to_value, Context, Outcome, Table};
use crate::error::{CliError, CliResult};
use crate::output::{encode_dump, f17, f17_opt, value_hash, DumpHeader, RunDir};
use crate::params::IprParams;
use crate::plot;

pub const HEADER: [&str; 7] = [
    "t",
    "q",
    "I_q",
    "S_q",
    "I_q_analytic",
    "S_q_analytic",
    "haar_ratio",
];

/// Accepted band of `I_q / I_q^analytic` under `--check`.
pub const RATIO_TOL: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct IprData {
    pub rows: Vec<IprRow>,
    /// `(t, |amps|^2)` for every period, when requested.
    pub probs: Vec<(u32, Vec<f64>)>,
}

/// Rows for `t = 0..=t_max`, ordered by `t` then by position in `orders`.
pub fn compute(
    spec: &CircuitSpec,
    t_max: u32,
    orders: &[u32],
    keep_probs: bool,
) -> CliResult<IprData> {
    if orders.is_empty() {
        return Err(CliError::validation("need at least one order q"));
    }
    let evolver = FloquetEvolver::new(spec)?;
    let mut state = StateVector::init_zero(spec.sites)?;
    let mut rows = Vec::new();
    let mut probs_out = Vec::new();
    let mut failure = None;
    let mut record = |t: u32, s: &StateVector| {
        let probs = s.probabilities();
        let cells: Result<Vec<Vec<IprRow>>, _> = orders
            .par_iter()
            .map(|&q| ipr_rows(spec, t, &probs, &[q]))
            .collect();
        match cells {
            Ok(c) => rows.extend(c.into_iter().flatten()),
            Err(e) => failure = failure.take().or(Some(e)),
        }
        if keep_probs {
            probs_out.push((t, probs));
        }
    };
    record(0, &state);
    evolver.evolve(&mut state, 0, t_max, &mut record)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(IprData {
        rows,
        probs: probs_out,
    })
}

/// Largest `|I_q / I_q^analytic - 1|` over `t >= 1`, per order.
pub fn max_deviation(rows: &[IprRow], q: u32, t_max: u32) -> Option<f64> {
    rows.iter()
        .filter(|r| r.q == q && r.t >= 1 && r.t <= t_max)
        .map(|r| r.ipr_analytic.map(|a| (r.ipr / a - 1.0).abs()))
        .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))
}

pub fn table(rows: &[IprRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                r.q.to_string(),
                f17(r.ipr),
                f17(r.entropy),
                f17_opt(r.ipr_analytic),
                f17_opt(r.entropy_analytic),
                f17(r.haar_ratio),
            ]
        })
        .collect()
}

pub fn run(params: &IprParams, ctx: &Context) -> CliResult<Outcome> {
    let (spec, warnings) = params.chain.spec()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let data = ctx
        .pool()?
        .install(|| compute(&spec, params.t_max, &params.q, params.dump))?;
    let mut dir = RunDir::create(&ctx.root, "ipr", to_value(params), params.chain.seed)?;
    let csv = Table {
        stem: "ipr".into(),
        header: HEADER.to_vec(),
        rows: table(&data.rows),
    }
    .write(&mut dir, params.format, params.plot)?;
    if params.dump {
        let spec_hash = value_hash(&to_value(&spec));
        for (t, probs) in &data.probs {
            let header = DumpHeader {
                sites: spec.sites,
                t: *t,
                spec_hash: spec_hash.clone(),
                count: probs.len(),
                dtype: "<f8".into(),
            };
            dir.write_bytes(&format!("probs_t{t:03}.bin"), &encode_dump(&header, probs))?;
        }
    }
    if let (true, Some(text)) = (params.plot, csv.as_deref()) {
        super::write_figure(&mut dir, "ipr", text, plot::render_ipr)?;
    }
    let mut failures = Vec::new();
    let mut deviations = serde_json::Map::new();
    for &q in &params.q {
        match max_deviation(&data.rows, q, params.t_max) {
            Some(d) => {
                ctx.say(&format!(
                    "q={q}: max |I_q/I_q^exact - 1| over t=1..{} = {d:.4e}",
                    params.t_max
                ));
                deviations.insert(q.to_string(), json!(d));
                if params.check && d > RATIO_TOL {
                    failures.push(format!("q={q}: deviation {d:.4} exceeds {RATIO_TOL}"));
                }
            }
            None => ctx.say(&format!(
                "q={q}: no closed form for variant {}",
                spec.variant.name()
            )),
        }
    }
    let summary = json!({ "max_deviation": deviations, "ratio_tolerance": RATIO_TOL });
    let (path, manifest) = dir.finish(ctx.threads, warnings, summary)?;
    ctx.say(&format!("wrote {}", path.display()));
    Ok(Outcome {
        dir: path,
        manifest,
        failures,
    })
}
