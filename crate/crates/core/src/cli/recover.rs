use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{budget, modulus, AlgoArg, CliError, ModeArg, Output, SCHEMA_VERSION};
use crate::oracle::{OracleMode, OracleSession};
use crate::poly::MonicPoly;
use crate::reconstruct::{recover, RecoverOptions, RecoveryReport};

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long = "algo", value_enum, default_value = "two-stage")]
    pub algo: AlgoArg,
    /// Hidden polynomial (`"x^2 + 3*x + 5"` or `"5,3"`), or `random`.
    #[arg(long, default_value = "random")]
    pub hidden: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that an oracle answer is correct.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Answers per point, combined by majority vote (odd).
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "signed")]
    pub mode: ModeArg,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Emit the JSON report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct RecoverJson<'a> {
    schema_version: &'static str,
    command: &'static str,
    p: u64,
    d: usize,
    seed: u64,
    gamma: f64,
    reps: usize,
    mode: OracleMode,
    hidden: &'a MonicPoly,
    success: bool,
    #[serde(flatten)]
    report: &'a RecoveryReport,
}

pub fn hidden_poly(text: &str, p: u64, d: usize, seed: u64) -> Result<MonicPoly, CliError> {
    let m = modulus(p)?;
    if d == 0 {
        return Err(CliError::usage("degree must be at least 1"));
    }
    if text.eq_ignore_ascii_case("random") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(MonicPoly::random_squarefree(m, d, &mut rng));
    }
    let f = MonicPoly::parse(text, m, Some(d))?;
    if !f.is_squarefree() {
        return Err(CliError::usage(format!(
            "hidden polynomial {f} is not square-free"
        )));
    }
    Ok(f)
}

pub fn run(a: &RecoverArgs, timing: bool) -> Result<Output, CliError> {
    let budget = budget(a.budget)?;
    let hidden = hidden_poly(&a.hidden, a.p, a.d, a.seed)?;
    if a.reps == 0 || a.reps % 2 == 0 {
        return Err(CliError::usage(format!(
            "--reps must be odd, got {}",
            a.reps
        )));
    }
    let session = OracleSession::new(hidden.clone(), a.gamma, a.seed, a.mode.into())?;
    let opts = RecoverOptions {
        reps: a.reps,
        budget,
        epsilon: a.epsilon,
    };
    let mut report = recover(a.algo.into(), &session, a.d, &opts)?;
    if !timing {
        report.elapsed_ms = None;
    }
    let success = report.recovered.as_ref() == Some(&hidden);
    let text = if a.json {
        let json = RecoverJson {
            schema_version: SCHEMA_VERSION,
            command: "recover",
            p: a.p,
            d: a.d,
            seed: a.seed,
            gamma: a.gamma,
            reps: a.reps,
            mode: session.mode(),
            hidden: &hidden,
            success,
            report: &report,
        };
        serde_json::to_string_pretty(&json).expect("report serializes") + "\n"
    } else {
        let recovered = report
            .recovered
            .as_ref()
            .map_or("none".to_string(), |g| g.to_string());
        let mut s = format!(
            "algorithm: {}\nhidden: {hidden}\nrecovered: {recovered}\nsuccess: {success}\n\
             total_queries: {}\ndistinct_points: {}\nsurvivors: {} -> {}\nfallback_used: {}\n",
            report.algorithm.name(),
            report.total_queries,
            report.distinct_points,
            report.survivors_stage1,
            report.survivors_stage2,
            report.fallback_used,
        );
        if let Some(e) = report.elapsed_ms {
            s += &format!("elapsed_ms: {:.3}\n", e.total);
        }
        s
    };
    if !success {
        eprintln!(
            "recovery mismatch: hidden {hidden}, recovered {:?}",
            report.recovered.as_ref().map(|g| g.to_string())
        );
    }
    Ok(Output {
        text,
        code: if success { 0 } else { 1 },
    })
}
