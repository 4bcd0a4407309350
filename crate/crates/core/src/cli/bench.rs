use clap::Args;
use serde::Serialize;

use super::recover::hidden_poly;
use super::{budget, AlgoArg, CliError, Output};
use crate::error::Error;
use crate::oracle::OracleSession;
use crate::reconstruct::{recover, Algorithm, RecoverOptions};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Primes in the grid (repeatable; default 101 1009 10007).
    #[arg(long)]
    pub p: Vec<u64>,
    /// Degrees in the grid (repeatable; default 1).
    #[arg(long)]
    pub d: Vec<usize>,
    /// Algorithms in the grid (repeatable; default all).
    #[arg(long = "algo", value_enum)]
    pub algo: Vec<AlgoArg>,
    /// Seeds per cell.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// First seed; cell runs use `seed..seed + seeds`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub p: u64,
    pub d: usize,
    pub algorithm: &'static str,
    pub seeds: u64,
    pub successes: u64,
    pub median_ms: Option<f64>,
    pub median_queries: Option<u64>,
    pub median_distinct_points: Option<u64>,
    pub median_work: Option<u64>,
    pub fallbacks: u64,
    pub status: &'static str,
}

fn median<T: Copy + PartialOrd>(mut v: Vec<T>) -> Option<T> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(v[(v.len() - 1) / 2])
}

pub fn cell(
    p: u64,
    d: usize,
    algo: Algorithm,
    a: &BenchArgs,
    timing: bool,
) -> Result<BenchRow, CliError> {
    let opts = RecoverOptions {
        budget: budget(a.budget)?,
        epsilon: a.epsilon,
        ..Default::default()
    };
    let mut row = BenchRow {
        p,
        d,
        algorithm: algo.name(),
        seeds: a.seeds,
        successes: 0,
        median_ms: None,
        median_queries: None,
        median_distinct_points: None,
        median_work: None,
        fallbacks: 0,
        status: "ok",
    };
    let (mut ms, mut queries, mut distinct, mut work) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for seed in a.seed..a.seed + a.seeds {
        let hidden = hidden_poly("random", p, d, seed)?;
        let session = OracleSession::exact(hidden.clone())?;
        let report = match recover(algo, &session, d, &opts) {
            Ok(r) => r,
            Err(Error::BudgetExceeded { .. }) => {
                row.status = "skipped";
                return Ok(row);
            }
            Err(e) => return Err(e.into()),
        };
        if report.recovered.as_ref() == Some(&hidden) {
            row.successes += 1;
        }
        row.fallbacks += report.fallback_used as u64;
        ms.push(report.elapsed_ms.map_or(0.0, |e| e.total));
        queries.push(report.total_queries);
        distinct.push(report.distinct_points);
        work.push(report.work);
    }
    if row.successes < row.seeds {
        row.status = "fail";
    }
    row.median_ms = if timing { median(ms) } else { None };
    row.median_queries = median(queries);
    row.median_distinct_points = median(distinct);
    row.median_work = median(work);
    Ok(row)
}

pub fn run(a: &BenchArgs, timing: bool) -> Result<Output, CliError> {
    budget(a.budget)?;
    if a.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let primes = if a.p.is_empty() {
        vec![101, 1009, 10007]
    } else {
        a.p.clone()
    };
    let degrees = if a.d.is_empty() { vec![1] } else { a.d.clone() };
    let algos: Vec<Algorithm> = if a.algo.is_empty() {
        vec![Algorithm::Brute, Algorithm::Short, Algorithm::TwoStage]
    } else {
        a.algo.iter().map(|&x| x.into()).collect()
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut failed = false;
    for &p in &primes {
        for &d in &degrees {
            for &algo in &algos {
                let row = cell(p, d, algo, a, timing)?;
                failed |= row.status == "fail";
                w.serialize(&row).expect("row serializes");
            }
        }
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    Ok(Output {
        text,
        code: if failed { 1 } else { 0 },
    })
}
