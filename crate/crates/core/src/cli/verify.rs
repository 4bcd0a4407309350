use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{budget, modulus, CliError, Output};
use crate::charsum::{
    moment_bound, multilinear_bound, multilinear_bound_holds, multilinear_form_sum, pair_identity,
    pair_identity_expected, random_form_set, short_sum_sweep, weil_sweep, MomentTable,
    WeightVector,
};
use crate::error::Error;
use crate::ffield::PrimeModulus;
use crate::poly::checked_pow;
use crate::quantum::{sigma_2d, sigma_bound, sigma_within_bound};
use crate::Budget;

pub const DEFAULT_PRIMES: [u64; 7] = [5, 7, 11, 13, 31, 61, 101];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    PairIdentity,
    Weil,
    WeilShort,
    MultWeil,
    Moment,
    Sigma,
}

impl Lemma {
    pub const ALL: [Lemma; 6] = [
        Lemma::PairIdentity,
        Lemma::Weil,
        Lemma::WeilShort,
        Lemma::MultWeil,
        Lemma::Moment,
        Lemma::Sigma,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Lemma::PairIdentity => "pair-identity",
            Lemma::Weil => "weil",
            Lemma::WeilShort => "weil-short",
            Lemma::MultWeil => "mult-weil",
            Lemma::Moment => "moment",
            Lemma::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Lemmas to check (repeatable; default all).
    #[arg(long, value_enum)]
    pub lemma: Vec<Lemma>,
    /// Primes to sweep (repeatable; default 5 7 11 13 31 61 101).
    #[arg(long)]
    pub p: Vec<u64>,
    /// Largest degree `d`; complete sums go up to degree `2d`.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Random samples per randomized instance.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub lemma: &'static str,
    pub p: u64,
    pub d: usize,
    pub params: String,
    pub measured: String,
    pub bound: String,
    pub status: &'static str,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn skipped(lemma: Lemma, p: u64, d: usize, params: String) -> Row {
    Row {
        lemma: lemma.id(),
        p,
        d,
        params,
        measured: String::new(),
        bound: String::new(),
        status: "skipped",
    }
}

/// Deterministic generator for one instance.
fn instance_rng(seed: u64, lemma: Lemma, p: u64, d: usize, extra: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((lemma as u64) << 56) ^ (p << 16) ^ ((d as u64) << 8) ^ extra);
    rng
}

fn budget_skip<T>(r: crate::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BudgetExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn pair_rows(m: PrimeModulus, out: &mut Vec<Row>) {
    for a in m.elements() {
        for b in m.elements() {
            let got = pair_identity(a, b);
            let want = pair_identity_expected(a, b);
            out.push(Row {
                lemma: Lemma::PairIdentity.id(),
                p: m.value(),
                d: 1,
                params: format!("a={};b={}", a.value(), b.value()),
                measured: got.to_string(),
                bound: want.to_string(),
                status: status(got == want),
            });
        }
    }
}

fn weil_rows(
    m: PrimeModulus,
    dmax: usize,
    budget: Budget,
    out: &mut Vec<Row>,
) -> Result<(), CliError> {
    let p = m.value();
    for degree in 1..=2 * dmax {
        let params = format!("D={degree}");
        match budget_skip(weil_sweep(m, degree, budget))? {
            None => out.push(skipped(Lemma::Weil, p, degree, params)),
            Some(s) => out.push(Row {
                lemma: Lemma::Weil.id(),
                p,
                d: degree,
                params: format!("{params};checked={};squares={}", s.checked, s.squares),
                measured: s.max_abs.to_string(),
                bound: s.bound(p).to_string(),
                status: status(s.violations.is_empty()),
            }),
        }
    }
    Ok(())
}

fn weil_short_rows(
    m: PrimeModulus,
    dmax: usize,
    budget: Budget,
    out: &mut Vec<Row>,
) -> Result<(), CliError> {
    let p = m.value();
    for d in 1..=dmax {
        match budget_skip(short_sum_sweep(m, d, budget))? {
            None => out.push(skipped(Lemma::WeilShort, p, d, "C=1".into())),
            Some(s) => {
                let scale = s.scale(p);
                out.push(Row {
                    lemma: Lemma::WeilShort.id(),
                    p,
                    d,
                    params: format!("C=1;pairs={};measured_C={}", s.pairs, s.constant(p)),
                    measured: s.max_abs.to_string(),
                    bound: scale.to_string(),
                    status: status(s.max_abs as f64 <= scale),
                });
            }
        }
    }
    Ok(())
}

fn mult_weil_rows(
    m: PrimeModulus,
    dmax: usize,
    trials: usize,
    seed: u64,
    budget: Budget,
    out: &mut Vec<Row>,
) -> Result<(), CliError> {
    let p = m.value();
    for d in 1..=dmax {
        for ell in 1..=3usize {
            let params = format!("l={ell};trials={trials}");
            let distinct = checked_pow(p as u128, d).unwrap_or(u128::MAX);
            let per_trial = checked_pow(p as u128, d).and_then(|n| n.checked_mul(ell as u128));
            let total = per_trial.and_then(|n| n.checked_mul(trials as u128));
            if ell as u128 > distinct || !budget.allows(total) {
                out.push(skipped(Lemma::MultWeil, p, d, params));
                continue;
            }
            let mut rng = instance_rng(seed, Lemma::MultWeil, p, d, ell as u64);
            let mut max_abs = 0i64;
            let mut ok = true;
            for _ in 0..trials {
                let forms = random_form_set(m, d, ell, &mut rng)?;
                let s = multilinear_form_sum(&forms, d, budget)?;
                max_abs = max_abs.max(s.abs());
                if !multilinear_bound_holds(s, ell, p, d) {
                    ok = false;
                    eprintln!("mult-weil violation: p={p} d={d} forms={forms:?} sum={s}");
                }
            }
            out.push(Row {
                lemma: Lemma::MultWeil.id(),
                p,
                d,
                params,
                measured: max_abs.to_string(),
                bound: multilinear_bound(ell, p, d).to_string(),
                status: status(ok),
            });
        }
    }
    Ok(())
}

fn dedup(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Orders `r` and windows `N` tested for one `(p, d)`.
pub fn moment_grid(p: u64, d: usize) -> (Vec<u32>, Vec<usize>) {
    let lp = (p as f64).ln();
    let rs = dedup(vec![1, 2, lp.ceil() as u64])
        .into_iter()
        .map(|r| r as u32)
        .collect();
    let ns = dedup(
        vec![1, 5, (d as f64 * lp * lp).ceil() as u64]
            .into_iter()
            .map(|n| n.min(p))
            .collect(),
    )
    .into_iter()
    .map(|n| n as usize)
    .collect();
    (rs, ns)
}

fn moment_rows(
    m: PrimeModulus,
    dmax: usize,
    trials: usize,
    seed: u64,
    budget: Budget,
    out: &mut Vec<Row>,
) -> Result<(), CliError> {
    let p = m.value();
    for d in 1..=dmax {
        let (rs, ns) = moment_grid(p, d);
        let window = *ns.iter().max().unwrap();
        let rows_cost = checked_pow(p as u128, d)
            .and_then(|n| n.checked_mul((window * trials * ns.len()) as u128));
        let table = if budget.allows(rows_cost) {
            budget_skip(MomentTable::new(m, d, window, budget))?
        } else {
            None
        };
        let Some(table) = table else {
            for &n in &ns {
                for &r in &rs {
                    out.push(skipped(
                        Lemma::Moment,
                        p,
                        d,
                        format!("r={r};N={n};trials={trials}"),
                    ));
                }
            }
            continue;
        };
        for &n in &ns {
            let mut rng = instance_rng(seed, Lemma::Moment, p, d, n as u64);
            let mut worst = vec![0.0f64; rs.len()];
            for t in 0..trials {
                let w = WeightVector::random(n, t % 2 == 0, &mut rng);
                for (slot, v) in worst.iter_mut().zip(table.moments(&w, &rs)?) {
                    *slot = slot.max(v);
                }
            }
            for (&r, &v) in rs.iter().zip(&worst) {
                let bound = moment_bound(n, p, d, r);
                out.push(Row {
                    lemma: Lemma::Moment.id(),
                    p,
                    d,
                    params: format!("r={r};N={n};trials={trials}"),
                    measured: v.to_string(),
                    bound: bound.to_string(),
                    status: status(v <= bound),
                });
            }
        }
    }
    Ok(())
}

fn sigma_rows(
    m: PrimeModulus,
    dmax: usize,
    budget: Budget,
    out: &mut Vec<Row>,
) -> Result<(), CliError> {
    let p = m.value();
    for d in 1..=dmax {
        if p <= 3 {
            out.push(skipped(Lemma::Sigma, p, d, "p<=3 excluded".into()));
            continue;
        }
        match budget_skip(sigma_2d(m, d, budget))? {
            None => out.push(skipped(Lemma::Sigma, p, d, String::new())),
            Some(s) => out.push(Row {
                lemma: Lemma::Sigma.id(),
                p,
                d,
                params: String::new(),
                measured: s.to_string(),
                bound: sigma_bound(p, d).to_string(),
                status: status(sigma_within_bound(s, p, d)),
            }),
        }
    }
    Ok(())
}

/// All rows of a sweep, grouped by lemma then prime.
pub fn sweep(
    lemmas: &[Lemma],
    primes: &[u64],
    dmax: usize,
    trials: usize,
    seed: u64,
    budget: Budget,
) -> Result<Vec<Row>, CliError> {
    let mods = primes
        .iter()
        .map(|&p| modulus(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for &lemma in lemmas {
        for &m in &mods {
            match lemma {
                Lemma::PairIdentity => pair_rows(m, &mut out),
                Lemma::Weil => weil_rows(m, dmax, budget, &mut out)?,
                Lemma::WeilShort => weil_short_rows(m, dmax, budget, &mut out)?,
                Lemma::MultWeil => mult_weil_rows(m, dmax, trials, seed, budget, &mut out)?,
                Lemma::Moment => moment_rows(m, dmax, trials, seed, budget, &mut out)?,
                Lemma::Sigma => sigma_rows(m, dmax, budget, &mut out)?,
            }
        }
    }
    Ok(out)
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

pub fn run(a: &VerifyArgs) -> Result<Output, CliError> {
    let budget = budget(a.budget)?;
    if a.d == 0 {
        return Err(CliError::usage("degree must be at least 1"));
    }
    let lemmas = if a.lemma.is_empty() {
        Lemma::ALL.to_vec()
    } else {
        a.lemma.clone()
    };
    let primes = if a.p.is_empty() {
        DEFAULT_PRIMES.to_vec()
    } else {
        a.p.clone()
    };
    let rows = sweep(&lemmas, &primes, a.d, a.trials, a.seed, budget)?;
    let failures: Vec<&Row> = rows.iter().filter(|r| r.status == "fail").collect();
    for r in &failures {
        eprintln!(
            "violation: {} p={} d={} {} measured={} bound={}",
            r.lemma, r.p, r.d, r.params, r.measured, r.bound
        );
    }
    Ok(Output {
        text: to_csv(&rows),
        code: if failures.is_empty() { 0 } else { 1 },
    })
}
