use clap::Args;
use serde::Serialize;

use super::recover::hidden_poly;
use super::{budget, CliError, Output, SCHEMA_VERSION};
use crate::poly::MonicPoly;
use crate::quantum::{
    choose_k, distribution_for, gram_matrix, povm_alpha, sigma_bound, sigma_within_bound,
};

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Tensor power; defaults to `ceil(2(d+1)/epsilon)`.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, default_value = "random")]
    pub hidden: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Emit the JSON report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct QuantumJson<'a> {
    schema_version: &'static str,
    command: &'static str,
    p: u64,
    d: usize,
    epsilon: f64,
    seed: u64,
    hidden: &'a MonicPoly,
    order: usize,
    k: u32,
    queries: u32,
    sigma_2d: i64,
    sigma_bound: f64,
    sigma_within_bound: bool,
    lambda_max: f64,
    iterations: usize,
    alpha: f64,
    one_minus_alpha_times_p: f64,
    p_correct: f64,
    p_wrong: f64,
    residual_mass: f64,
    total_mass: f64,
}

pub fn run(a: &QuantumArgs) -> Result<Output, CliError> {
    let budget = budget(a.budget)?;
    let hidden = hidden_poly(&a.hidden, a.p, a.d, a.seed)?;
    let k = match a.k {
        Some(0) => return Err(CliError::usage("--k must be at least 1")),
        Some(k) => k,
        None => choose_k(a.d, a.epsilon)?,
    };
    let gram = gram_matrix(hidden.modulus(), a.d, k, budget)?;
    let povm = povm_alpha(&gram)?;
    let dist = distribution_for(&gram, &povm, &hidden)?;
    let sigma = gram.sigma();
    let json = QuantumJson {
        schema_version: SCHEMA_VERSION,
        command: "quantum",
        p: a.p,
        d: a.d,
        epsilon: a.epsilon,
        seed: a.seed,
        hidden: &hidden,
        order: gram.order(),
        k,
        queries: dist.queries(),
        sigma_2d: sigma,
        sigma_bound: sigma_bound(a.p, a.d),
        sigma_within_bound: sigma_within_bound(sigma, a.p, a.d),
        lambda_max: dist.lambda_max,
        iterations: dist.iterations,
        alpha: dist.alpha,
        one_minus_alpha_times_p: (1.0 - dist.alpha) * a.p as f64,
        p_correct: dist.p_correct().unwrap_or(0.0),
        p_wrong: dist.p_wrong(),
        residual_mass: dist.residual,
        total_mass: dist.total(),
    };
    let text = if a.json {
        serde_json::to_string_pretty(&json).expect("report serializes") + "\n"
    } else {
        format!(
            "hidden: {hidden}\nk: {k}\nsigma_2d: {sigma} (bound {:.4})\nlambda_max: {}\nalpha: {}\n\
             (1 - alpha) * p: {}\np_correct: {}\nresidual_mass: {}\n",
            json.sigma_bound, json.lambda_max, json.alpha, json.one_minus_alpha_times_p, json.p_correct, json.residual_mass
        )
    };
    Ok(Output { text, code: 0 })
}
