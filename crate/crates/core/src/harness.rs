//! Benchmark plans, per-run and summary CSV files, and the function listing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{make_function, registry};
use crate::error::{Error, Result};
use crate::pe_smc::{self, PeSmcConfig, RunResult, TraceRow};
use crate::smc_sa::{self, SmcSaConfig};

pub const RUNS_HEADER: &str = "function,dim,algo,seed,best_f,best_x,iters,evals,wall_ms,status";
pub const SUMMARY_HEADER: &str = "function,dim,algorithm,n_runs,mean_best,std_best,mean_evals,mean_wall_ms";
pub const TRACE_HEADER: &str = "k,lambda,ness,components,best_f,accept_rate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "pe-smc")]
    PeSmc,
    #[serde(rename = "smc-sa")]
    SmcSa,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::PeSmc => "pe-smc",
            Algorithm::SmcSa => "smc-sa",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pe-smc" => Ok(Algorithm::PeSmc),
            "smc-sa" => Ok(Algorithm::SmcSa),
            other => Err(Error::Parse(format!("unknown algorithm {other:?} (expected pe-smc or smc-sa)"))),
        }
    }
}

/// One line of a plan: `runs` repetitions of a single (function, dim, algorithm) task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTask {
    #[serde(rename = "fn")]
    pub function: String,
    pub dim: usize,
    pub algo: Algorithm,
    pub runs: usize,
    /// Fields merged over the algorithm's default config for this dimension.
    #[serde(default)]
    pub overrides: serde_json::Map<String, serde_json::Value>,
}

/// A benchmark plan. Run `r` of every task uses seed `base_seed + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub base_seed: u64,
    pub tasks: Vec<BenchTask>,
}

impl BenchPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn merged<T: Serialize + for<'de> Deserialize<'de>>(
    base: T,
    overrides: &serde_json::Map<String, serde_json::Value>,
) -> Result<T> {
    let mut value = serde_json::to_value(base)?;
    let obj = value.as_object_mut().expect("configs serialize to objects");
    for (k, v) in overrides {
        obj.insert(k.clone(), v.clone());
    }
    Ok(serde_json::from_value(value)?)
}

pub fn pe_smc_config(dim: usize, seed: u64, overrides: &serde_json::Map<String, serde_json::Value>) -> Result<PeSmcConfig> {
    let mut cfg: PeSmcConfig = merged(PeSmcConfig::for_dim(dim), overrides)?;
    cfg.seed = seed;
    Ok(cfg)
}

pub fn smc_sa_config(dim: usize, seed: u64, overrides: &serde_json::Map<String, serde_json::Value>) -> Result<SmcSaConfig> {
    let mut cfg: SmcSaConfig = merged(SmcSaConfig::for_dim(dim), overrides)?;
    cfg.seed = seed;
    Ok(cfg)
}

/// Runs one algorithm on one registered function.
pub fn run_single(
    function: &str,
    dim: usize,
    algo: Algorithm,
    seed: u64,
    overrides: &serde_json::Map<String, serde_json::Value>,
) -> Result<RunResult> {
    let spec = make_function(function, dim)?;
    match algo {
        Algorithm::PeSmc => pe_smc::run(&spec, &pe_smc_config(dim, seed, overrides)?),
        Algorithm::SmcSa => smc_sa::run_smc_sa(&spec, &smc_sa_config(dim, seed, overrides)?),
    }
}

/// One row of the per-run CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub function: String,
    pub dim: usize,
    pub algo: Algorithm,
    pub seed: u64,
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub iters: usize,
    pub evals: u64,
    pub wall_ms: f64,
    /// `"ok"` or `"error: ..."`.
    pub status: String,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// One row of the summary CSV (statistics over the completed runs only).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function: String,
    pub dim: usize,
    pub algorithm: Algorithm,
    pub n_runs: usize,
    pub mean_best: f64,
    pub std_best: f64,
    pub mean_evals: f64,
    pub mean_wall_ms: f64,
}

/// Sample mean and sample standard deviation (n − 1 denominator; 0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(plan: &BenchPlan, records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut offset = 0;
    plan.tasks
        .iter()
        .map(|task| {
            let rows = &records[offset..offset + task.runs];
            offset += task.runs;
            let ok: Vec<&RunRecord> = rows.iter().filter(|r| r.is_ok()).collect();
            let best: Vec<f64> = ok.iter().map(|r| r.best_f).collect();
            let evals: Vec<f64> = ok.iter().map(|r| r.evals as f64).collect();
            let wall: Vec<f64> = ok.iter().map(|r| r.wall_ms).collect();
            let (mean_best, std_best) = mean_std(&best);
            SummaryRow {
                function: task.function.clone(),
                dim: task.dim,
                algorithm: task.algo,
                n_runs: ok.len(),
                mean_best,
                std_best,
                mean_evals: mean_std(&evals).0,
                mean_wall_ms: mean_std(&wall).0,
            }
        })
        .collect()
}

/// Output of [`run_bench`].
#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl BenchOutput {
    pub fn all_ok(&self) -> bool {
        self.records.iter().all(RunRecord::is_ok)
    }
}

/// Executes every run of the plan on the thread pool. Records are ordered by
/// (task, run index) whatever the completion order.
pub fn run_bench(plan: &BenchPlan) -> Result<BenchOutput> {
    for task in &plan.tasks {
        make_function(&task.function, task.dim)?;
    }
    let jobs: Vec<(&BenchTask, u64)> = plan
        .tasks
        .iter()
        .flat_map(|t| (0..t.runs as u64).map(move |r| (t, plan.base_seed + r)))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|(task, seed)| {
            let start = Instant::now();
            let outcome = run_single(&task.function, task.dim, task.algo, *seed, &task.overrides);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Ok(r) => RunRecord {
                    function: task.function.clone(),
                    dim: task.dim,
                    algo: task.algo,
                    seed: *seed,
                    best_f: r.best_f,
                    best_x: r.best_x,
                    iters: r.iterations,
                    evals: r.evaluations,
                    wall_ms,
                    status: "ok".into(),
                },
                Err(e) => RunRecord {
                    function: task.function.clone(),
                    dim: task.dim,
                    algo: task.algo,
                    seed: *seed,
                    best_f: f64::NAN,
                    best_x: Vec::new(),
                    iters: 0,
                    evals: 0,
                    wall_ms,
                    status: format!("error: {e}").replace([',', '\n'], ";"),
                },
            }
        })
        .collect();
    let summary = summarize(plan, &records);
    Ok(BenchOutput { records, summary })
}

fn join_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Per-run CSV. Floats use the shortest representation that parses back exactly;
/// `best_x` is one field with `;`-separated coordinates.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.function,
            r.dim,
            r.algo.as_str(),
            r.seed,
            r.best_f,
            join_point(&r.best_x),
            r.iters,
            r.evals,
            r.wall_ms,
            r.status
        )
        .expect("writing to a String");
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.function,
            r.dim,
            r.algorithm.as_str(),
            r.n_runs,
            r.mean_best,
            r.std_best,
            r.mean_evals,
            r.mean_wall_ms
        )
        .expect("writing to a String");
    }
    out
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.k, t.lambda, t.ness, t.components, t.best_f, t.accept_rate
        )
        .expect("writing to a String");
    }
    out
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, i: usize, what: &str) -> Result<T> {
    rec.get(i)
        .ok_or_else(|| Error::Parse(format!("missing column {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {:?}", rec.get(i))))
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &str) -> Result<()> {
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?;
    let got = header.iter().collect::<Vec<_>>().join(",");
    if got != expected {
        return Err(Error::Parse(format!("unexpected header {got:?}")));
    }
    Ok(())
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut reader, RUNS_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let xs = rec.get(5).unwrap_or("");
        let best_x = if xs.is_empty() {
            Vec::new()
        } else {
            xs.split(';')
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate {v:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        out.push(RunRecord {
            function: rec.get(0).unwrap_or("").to_string(),
            dim: parse_field(&rec, 1, "dim")?,
            algo: parse_field(&rec, 2, "algo")?,
            seed: parse_field(&rec, 3, "seed")?,
            best_f: parse_field(&rec, 4, "best_f")?,
            best_x,
            iters: parse_field(&rec, 6, "iters")?,
            evals: parse_field(&rec, 7, "evals")?,
            wall_ms: parse_field(&rec, 8, "wall_ms")?,
            status: rec.get(9).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut reader, SUMMARY_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        out.push(SummaryRow {
            function: rec.get(0).unwrap_or("").to_string(),
            dim: parse_field(&rec, 1, "dim")?,
            algorithm: parse_field(&rec, 2, "algorithm")?,
            n_runs: parse_field(&rec, 3, "n_runs")?,
            mean_best: parse_field(&rec, 4, "mean_best")?,
            std_best: parse_field(&rec, 5, "std_best")?,
            mean_evals: parse_field(&rec, 6, "mean_evals")?,
            mean_wall_ms: parse_field(&rec, 7, "mean_wall_ms")?,
        });
    }
    Ok(out)
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut reader, TRACE_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        out.push(TraceRow {
            k: parse_field(&rec, 0, "k")?,
            lambda: parse_field(&rec, 1, "lambda")?,
            ness: parse_field(&rec, 2, "ness")?,
            components: parse_field(&rec, 3, "components")?,
            best_f: parse_field(&rec, 4, "best_f")?,
            accept_rate: parse_field(&rec, 5, "accept_rate")?,
            additions: 0,
            budget_exhausted: false,
        });
    }
    Ok(out)
}

/// Writes `runs.csv` and `summary.csv` under `dir`, returning their paths.
pub fn write_bench(output: &BenchOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let runs = dir.join("runs.csv");
    let summary = dir.join("summary.csv");
    fs::write(&runs, runs_csv(&output.records))?;
    fs::write(&summary, summary_csv(&output.summary))?;
    Ok((runs, summary))
}

/// One line per registered (function, dim): name, dim, box, goal.
pub fn list_functions() -> String {
    let mut out = String::new();
    for e in registry() {
        let (lo, hi) = e.interval;
        writeln!(out, "{} {} [{},{}]^{} {}", e.function, e.dim, lo, hi, e.dim, e.published_goal)
            .expect("writing to a String");
    }
    out
}
