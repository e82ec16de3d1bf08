use std::path::Path;

use log::info;
use rayon::prelude::*;

use super::config::{Method, RunConfig};
use super::csv::{render, Row};
use crate::acquisition::{run_loop, LoopConfig, LoopOutcome, Termination};
use crate::benchmarks::{benchmark, percentile_estimate, vanilla_bq_baseline, Benchmark, BenchmarkOptions, DesignKind};
use crate::error::{Error, Result};

/// Result of one run. `error` is set when the run stopped early; `rows`
/// then holds everything recorded up to that point.
#[derive(Debug)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub csv: String,
    pub truth: f64,
    pub termination: Option<Termination>,
    pub error: Option<Error>,
    pub warnings: Vec<String>,
}

impl RunResult {
    /// First cumulative cost at which `|rel_err| < tolerance`, with the
    /// number of primary-source rows up to and including that row.
    pub fn cost_to_tolerance(&self, tolerance: f64) -> Option<(f64, usize)> {
        let mut primary = 0;
        for r in &self.rows {
            if r.source == 1 {
                primary += 1;
            }
            if r.rel_err.abs() < tolerance {
                return Some((r.cum_cost, primary));
            }
        }
        None
    }

    pub fn final_rel_err(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.rel_err)
    }
}

fn loop_config(c: &RunConfig, bench: &Benchmark, seed: u64) -> LoopConfig {
    LoopConfig {
        budget: c.budget,
        acquisition: c.acquisition,
        allow_pathological: c.allow_pathological,
        restarts: c.restarts,
        prescan: c.prescan,
        seed,
        refit: c.refit,
        fit_restarts: c.fit_restarts,
        fit_restart_interval: c.fit_restart_interval,
        max_iterations: c.max_iterations,
        noise: Some(c.noise.clone().map_or_else(|| bench.noise.clone(), |n| broadcast(n, bench.n_sources()))),
        lengthscale_prior: c.lengthscale_prior,
        empirical_bayes: c.empirical_bayes,
        ..LoopConfig::default()
    }
}

fn broadcast<T: Clone>(v: Vec<T>, n: usize) -> Vec<T> {
    if v.len() == 1 {
        vec![v[0].clone(); n]
    } else {
        v
    }
}

fn outcome_rows(o: &LoopOutcome, truth: f64) -> Vec<Row> {
    o.records.iter().map(|r| Row::from_record(r, truth)).collect()
}

/// Runs `config` with its first seed without writing anything.
pub fn execute(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let seed = config.seed();
    let bench = benchmark(&config.benchmark, &BenchmarkOptions { seed, sir_reps: config.sir_reps })?;
    let truth = bench.ground_truth();
    let dim = bench.dim();
    info!("{} on {} (seed {seed}, budget {})", config.label(), bench.id, config.budget);
    let (rows, n_sources, termination, error, warnings) = match config.method {
        Method::Pe => {
            let c1 = bench.primary_cost()?;
            let mut cost = 0.0;
            let mut first_err = None;
            let est = percentile_estimate(
                |x| {
                    cost += c1.cost(0, x).unwrap_or(f64::NAN);
                    bench.sources[0].evaluate(x).unwrap_or_else(|e| {
                        first_err.get_or_insert(e);
                        f64::NAN
                    })
                },
                bench.measure.bounds(),
                config.pe_nodes,
            )?;
            if let Some(e) = first_err {
                return Err(e);
            }
            let row = Row {
                iter: config.pe_nodes.pow(dim as u32),
                source: 1,
                x: vec![f64::NAN; dim],
                y: f64::NAN,
                cost,
                cum_cost: cost,
                ez: est,
                vz: 0.0,
                rel_err: (est - truth) / truth,
                acq_value: f64::NAN,
                lambda: f64::NAN,
                b_flat: vec![f64::NAN],
                is_final: true,
            };
            (vec![row], 1, None, None, Vec::new())
        }
        Method::Amsbq => {
            let lc = loop_config(config, &bench, seed);
            let initial = bench.initial_design(DesignKind::MultiSource, seed)?;
            let o = run_loop(&bench.source_refs(), &bench.measure, &bench.cost, &lc, &initial)?;
            (outcome_rows(&o, truth), bench.n_sources(), Some(o.termination), o.error, o.warnings)
        }
        Method::Vbq => {
            let lc = loop_config(config, &bench, seed);
            let initial = bench.initial_design(DesignKind::PrimaryOnly, seed)?;
            let o = vanilla_bq_baseline(bench.sources[0].as_ref(), &bench.measure, &bench.primary_cost()?, &lc, &initial)?;
            (outcome_rows(&o, truth), 1, Some(o.termination), o.error, o.warnings)
        }
    };
    let csv = render(dim, n_sources, &rows);
    Ok(RunResult { label: config.label(), seed, rows, csv, truth, termination, error, warnings })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// [`execute`], then writes the CSV to `config.out` (if set), including
/// the partial CSV of a run that stopped on an error.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    let result = execute(config)?;
    if let Some(out) = &config.out {
        write(out, &result.csv)?;
    }
    Ok(result)
}

/// Per-configuration summary over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub label: String,
    pub runs: usize,
    /// Runs that reached the tolerance.
    pub reached: usize,
    /// Runs that stopped on an error.
    pub failed: usize,
    /// Median cost to tolerance; infinite when most runs never reach it.
    pub median_cost: f64,
    pub median_primary_queries: f64,
    pub median_final_abs_err: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

pub fn summarize(label: &str, results: &[RunResult], tolerance: f64) -> Summary {
    let hits: Vec<Option<(f64, usize)>> = results.iter().map(|r| r.cost_to_tolerance(tolerance)).collect();
    Summary {
        label: label.to_string(),
        runs: results.len(),
        reached: hits.iter().flatten().count(),
        failed: results.iter().filter(|r| r.error.is_some()).count(),
        median_cost: median(hits.iter().map(|h| h.map_or(f64::INFINITY, |p| p.0)).collect()),
        median_primary_queries: median(hits.iter().map(|h| h.map_or(f64::INFINITY, |p| p.1 as f64)).collect()),
        median_final_abs_err: median(results.iter().map(|r| r.final_rel_err().abs()).collect()),
    }
}

#[derive(Debug)]
pub struct Comparison {
    pub benchmark: String,
    pub tolerance: f64,
    pub summaries: Vec<Summary>,
    /// Individual runs, grouped like `summaries`.
    pub runs: Vec<Vec<RunResult>>,
}

fn seed_path(out: &Path, seed: u64, n_seeds: usize) -> std::path::PathBuf {
    let s = out.to_string_lossy();
    if s.contains("{seed}") {
        return s.replace("{seed}", &seed.to_string()).into();
    }
    if n_seeds == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    out.with_file_name(name)
}

/// Runs every configuration for each of its seeds and summarises
/// cost-to-tolerance per configuration. The tolerance is `tolerance` when
/// given, otherwise the first configuration's.
pub fn compare(configs: &[RunConfig], tolerance: Option<f64>) -> Result<Comparison> {
    if configs.len() < 2 {
        return Err(Error::Config("compare needs at least two configurations".into()));
    }
    let bench = &configs[0].benchmark;
    if let Some(c) = configs.iter().find(|c| &c.benchmark != bench) {
        return Err(Error::Config(format!("cannot compare runs on different benchmarks ('{bench}' and '{}')", c.benchmark)));
    }
    for c in configs {
        c.validate()?;
    }
    let tolerance = tolerance.unwrap_or(configs[0].tolerance);
    let jobs: Vec<(usize, RunConfig)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |s| (i, c.with_seed(*s))))
        .collect();
    let done: Vec<(usize, RunResult)> = jobs
        .par_iter()
        .map(|(i, c)| {
            let r = execute(c)?;
            if let Some(out) = &configs[*i].out {
                write(&seed_path(out, c.seed(), configs[*i].seeds.len()), &r.csv)?;
            }
            Ok((*i, r))
        })
        .collect::<Result<_>>()?;
    let mut runs: Vec<Vec<RunResult>> = configs.iter().map(|_| Vec::new()).collect();
    for (i, r) in done {
        runs[i].push(r);
    }
    let summaries = configs.iter().zip(&runs).map(|(c, rs)| summarize(&c.label(), rs, tolerance)).collect();
    Ok(Comparison { benchmark: bench.clone(), tolerance, summaries, runs })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("benchmark,label,runs,reached,failed,tolerance,median_cost_to_tol,median_primary_queries_to_tol,median_final_abs_rel_err\n");
        for m in &self.summaries {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.benchmark,
                m.label,
                m.runs,
                m.reached,
                m.failed,
                super::csv::format_g(self.tolerance),
                super::csv::format_g(m.median_cost),
                super::csv::format_g(m.median_primary_queries),
                super::csv::format_g(m.median_final_abs_err)
            ));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("benchmark {}  tolerance {}\n", self.benchmark, self.tolerance);
        s.push_str(&format!(
            "{:<20} {:>5} {:>8} {:>14} {:>16} {:>14}\n",
            "label", "runs", "reached", "cost-to-tol", "primary-to-tol", "final |err|"
        ));
        for m in &self.summaries {
            s.push_str(&format!(
                "{:<20} {:>5} {:>8} {:>14.6} {:>16.1} {:>14.3e}\n",
                m.label, m.runs, m.reached, m.median_cost, m.median_primary_queries, m.median_final_abs_err
            ));
        }
        s
    }
}
