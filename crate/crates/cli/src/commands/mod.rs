//! One module per subcommand. Each exposes a pure `compute` used by the tests
//! and a `run` that writes the run directory.

pub mod compare;
pub mod dist;
pub mod dual_verify;
pub mod haar_check;
pub mod ipr;

use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::output::{RunDir, RunManifest};
use crate::params::Format;

/// Where and with how many workers a subcommand runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub root: PathBuf,
    pub threads: usize,
    pub quiet: bool,
}

impl Context {
    pub fn new(root: PathBuf, threads: Option<usize>) -> Self {
        let threads = threads
            .filter(|&n| n > 0)
            .unwrap_or_else(rayon::current_num_threads);
        Self {
            root,
            threads,
            quiet: false,
        }
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}").into())
    }

    pub fn say(&self, line: &str) {
        if !self.quiet {
            crate::output::say(line);
        }
    }
}

/// What a run produced; `failures` lists violated checks.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub failures: Vec<String>,
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("parameters serialize")
}

/// A table written as CSV or as a JSON list of records.
pub(crate) struct Table {
    pub stem: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.header
                            .iter()
                            .zip(r)
                            .map(|(h, v)| {
                                let cell = if v.is_empty() {
                                    Value::Null
                                } else {
                                    v.parse::<f64>()
                                        .map(Value::from)
                                        .unwrap_or_else(|_| Value::String(v.clone()))
                                };
                                (h.to_string(), cell)
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// Writes in `format`; a CSV is always written when a figure needs it.
    pub fn write(
        &self,
        dir: &mut RunDir,
        format: Format,
        for_plot: bool,
    ) -> CliResult<Option<String>> {
        if format == Format::Json {
            dir.write_json(&format!("{}.json", self.stem), &self.json())?;
        }
        if format == Format::Csv || for_plot {
            let p = dir.write_csv(&format!("{}.csv", self.stem), &self.header, &self.rows)?;
            return Ok(Some(std::fs::read_to_string(p)?));
        }
        Ok(None)
    }
}

/// Renders `stem.svg` from the CSV text just written.
pub(crate) fn write_figure(
    dir: &mut RunDir,
    stem: &str,
    csv_text: &str,
    render: impl Fn(&str) -> CliResult<String>,
) -> CliResult<()> {
    let svg = render(csv_text)?;
    dir.write_bytes(&format!("{stem}.svg"), svg.as_bytes())?;
    Ok(())
}
