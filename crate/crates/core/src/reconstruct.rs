//! Classical recovery of the hidden polynomial.
//!
//! Three algorithms share one candidate space (square-free monic polynomials
//! of degree `d` in canonical order) and one answer cache:
//!
//! * [`brute_force_recover`] correlates every candidate against all `p` answers.
//! * [`short_window_recover`] correlates every candidate against the answers at
//!   `x = 1..=M` only.
//! * [`two_stage_recover`] shortlists candidates on the short window `1..=N`
//!   (threshold `|S_N| >= N - d`), verifies survivors on `1..=M`
//!   (threshold `S_M >= M - d`) and, if verification does not isolate a single
//!   candidate, falls back to full-range correlation among the survivors.
//!
//! Windows are `N = min(ceil(d ln^2 p), p)` and `M = min(ceil(d sqrt(p) ln^2 p), p)`.
//! Every oracle answer is requested once and cached, so the reported query
//! count equals the number of distinct points asked (times the repetition
//! count when majority voting is enabled).

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffield::{CharTable, PrimeModulus};
use crate::oracle::{OracleMode, OracleSession};
use crate::poly::{squarefree_count_exhaustive, squarefree_count_formula, MonicPoly, MonicSpace};
use crate::scan::{Character, Scanner};
use crate::{cost, Budget};

/// Spaces up to this size are counted by enumeration in [`query_lower_bound`].
const EXACT_COUNT_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlgorithmParams {
    pub epsilon: f64,
    /// Stage-1 window `N_eff`.
    pub stage1_window: u64,
    /// Stage-2 window `M_eff`.
    pub stage2_window: u64,
    pub stage1_threshold: i64,
    pub stage2_threshold: i64,
}

impl AlgorithmParams {
    pub fn new(modulus: PrimeModulus, d: usize, epsilon: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDegree);
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let p = modulus.value();
        let pf = p as f64;
        let log2 = pf.ln().powi(2);
        let n = ((d as f64 * log2).ceil() as u64).min(p);
        let m = ((d as f64 * pf.sqrt() * log2).ceil() as u64).min(p);
        if n <= d as u64 {
            return Err(Error::InvalidArgument(format!(
                "stage-1 window {n} must exceed the degree {d} (p = {p} too small)"
            )));
        }
        Ok(AlgorithmParams {
            epsilon,
            stage1_window: n,
            stage2_window: m.max(n),
            stage1_threshold: n as i64 - d as i64,
            stage2_threshold: m.max(n) as i64 - d as i64,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Brute,
    Short,
    TwoStage,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Brute => "brute",
            Algorithm::Short => "short",
            Algorithm::TwoStage => "two-stage",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Elapsed {
    pub stage1: f64,
    pub stage2: f64,
    pub total: f64,
}

impl Elapsed {
    fn new(stage1: Duration, stage2: Duration) -> Self {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        Elapsed {
            stage1: ms(stage1),
            stage2: ms(stage2),
            total: ms(stage1 + stage2),
        }
    }
}

/// Outcome of one recovery run.
///
/// For the single-stage algorithms `survivors_stage1` is the number of
/// candidates scanned and `survivors_stage2` the number tied at the maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub algorithm: Algorithm,
    pub recovered: Option<MonicPoly>,
    pub survivors_stage1: u64,
    pub survivors_stage2: u64,
    pub total_queries: u64,
    pub distinct_points: u64,
    pub candidates: u64,
    /// Sum over scanned candidates of the window length each was scored on.
    pub work: u64,
    pub fallback_used: bool,
    /// More than one candidate attained the deciding maximum.
    pub ambiguous: bool,
    pub elapsed_ms: Option<Elapsed>,
    pub params: AlgorithmParams,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoverOptions {
    /// Answers per point; above 1 each point is a majority vote. Must be odd.
    pub reps: usize,
    pub budget: Budget,
    pub epsilon: f64,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions {
            reps: 1,
            budget: Budget::default(),
            epsilon: 0.5,
        }
    }
}

/// Answers at `x = 1, 2, ...` (taken mod p), fetched lazily and kept.
struct AnswerCache<'s> {
    session: &'s OracleSession,
    reps: usize,
    answers: Vec<i8>,
}

impl<'s> AnswerCache<'s> {
    fn new(session: &'s OracleSession, reps: usize) -> Result<Self> {
        if reps == 0 || reps % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "repetition count must be odd, got {reps}"
            )));
        }
        Ok(AnswerCache {
            session,
            reps,
            answers: Vec::new(),
        })
    }

    fn extend_to(&mut self, window: u64) -> &[i8] {
        let m = self.session.modulus();
        while (self.answers.len() as u64) < window {
            let x = m.elem(self.answers.len() as u64 + 1);
            let a = if self.reps == 1 {
                self.session.query(x)
            } else {
                self.session
                    .majority_estimate(x, self.reps)
                    .expect("reps validated")
            };
            self.answers.push(a);
        }
        &self.answers[..window as usize]
    }

    fn len(&self) -> u64 {
        self.answers.len() as u64
    }
}

struct Context {
    modulus: PrimeModulus,
    space: MonicSpace,
    chi: CharTable,
    character: Character,
    candidates: u64,
    params: AlgorithmParams,
}

impl Context {
    fn new(session: &OracleSession, d: usize, opts: &RecoverOptions) -> Result<Self> {
        let modulus = session.modulus();
        let params = AlgorithmParams::new(modulus, d, opts.epsilon)?;
        let space = MonicSpace::new(modulus, d, opts.budget)?;
        let character = match session.mode() {
            OracleMode::Signed => Character::Plain,
            OracleMode::Patched => Character::Patched,
        };
        let candidates = squarefree_count_formula(modulus, d).unwrap() as u64;
        Ok(Context {
            modulus,
            space,
            chi: CharTable::new(modulus),
            character,
            candidates,
            params,
        })
    }

    fn scanner(&self) -> Scanner<'_> {
        Scanner::new(self.space, &self.chi, self.character, true)
    }

    fn p(&self) -> u64 {
        self.modulus.value()
    }
}

/// Correlates every square-free candidate with the full answer vector.
pub fn brute_force_recover(
    session: &OracleSession,
    d: usize,
    opts: &RecoverOptions,
) -> Result<RecoveryReport> {
    let ctx = Context::new(session, d, opts)?;
    opts.budget
        .check(cost(&[ctx.candidates as u128, ctx.p() as u128]))?;
    single_stage(session, &ctx, opts, Algorithm::Brute, ctx.p())
}

/// Correlates every square-free candidate with the answers on `1..=M_eff`.
pub fn short_window_recover(
    session: &OracleSession,
    d: usize,
    opts: &RecoverOptions,
) -> Result<RecoveryReport> {
    let ctx = Context::new(session, d, opts)?;
    let window = ctx.params.stage2_window;
    opts.budget
        .check(cost(&[ctx.candidates as u128, window as u128]))?;
    single_stage(session, &ctx, opts, Algorithm::Short, window)
}

fn single_stage(
    session: &OracleSession,
    ctx: &Context,
    opts: &RecoverOptions,
    algorithm: Algorithm,
    window: u64,
) -> Result<RecoveryReport> {
    let before = session.query_count();
    let start = Instant::now();
    let mut cache = AnswerCache::new(session, opts.reps)?;
    let answers = cache.extend_to(window);
    let best = ctx.scanner().argmax(answers);
    let elapsed = start.elapsed();
    let recovered = best.map(|b| ctx.space.poly_at(b.index));
    Ok(RecoveryReport {
        algorithm,
        recovered,
        survivors_stage1: ctx.candidates,
        survivors_stage2: best.map_or(0, |b| b.ties),
        total_queries: session.query_count() - before,
        distinct_points: cache.len(),
        candidates: ctx.candidates,
        work: ctx.candidates.saturating_mul(window),
        fallback_used: false,
        ambiguous: best.is_some_and(|b| b.ties > 1),
        elapsed_ms: Some(Elapsed::new(elapsed, Duration::ZERO)),
        params: ctx.params,
    })
}

fn stage1(ctx: &Context, cache: &mut AnswerCache<'_>) -> Vec<MonicPoly> {
    let n = ctx.params.stage1_window;
    let threshold = ctx.params.stage1_threshold;
    let answers = cache.extend_to(n);
    ctx.scanner()
        .filter(answers, |s| s.abs() >= threshold)
        .into_iter()
        .map(|(i, _)| ctx.space.poly_at(i))
        .collect()
}

/// Square-free candidates with `|sum_{x=1}^{N_eff} O(x) chi(g(x))| >= N_eff - d`,
/// in canonical order.
pub fn stage1_survivors(
    session: &OracleSession,
    d: usize,
    opts: &RecoverOptions,
) -> Result<Vec<MonicPoly>> {
    let ctx = Context::new(session, d, opts)?;
    opts.budget.check(cost(&[
        ctx.candidates as u128,
        ctx.params.stage1_window as u128,
    ]))?;
    let mut cache = AnswerCache::new(session, opts.reps)?;
    Ok(stage1(&ctx, &mut cache))
}

/// Shortlist on `1..=N_eff`, verify on `1..=M_eff`, full-range tie-break if needed.
pub fn two_stage_recover(
    session: &OracleSession,
    d: usize,
    opts: &RecoverOptions,
) -> Result<RecoveryReport> {
    let ctx = Context::new(session, d, opts)?;
    let params = ctx.params;
    opts.budget.check(cost(&[
        ctx.candidates as u128,
        params.stage1_window as u128,
    ]))?;
    let before = session.query_count();
    let mut cache = AnswerCache::new(session, opts.reps)?;

    let t1 = Instant::now();
    let survivors1 = stage1(&ctx, &mut cache);
    let stage1_time = t1.elapsed();

    let t2 = Instant::now();
    let scanner = ctx.scanner();
    let window = params.stage2_window;
    let answers = cache.extend_to(window).to_vec();
    let scores = scanner.scores_of(&survivors1, &answers);
    let survivors2: Vec<MonicPoly> = survivors1
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s >= params.stage2_threshold)
        .map(|(g, _)| g.clone())
        .collect();
    let mut work = ctx
        .candidates
        .saturating_mul(params.stage1_window)
        .saturating_add((survivors1.len() as u64).saturating_mul(window));

    let mut fallback_used = false;
    let mut ambiguous = false;
    let recovered = if survivors2.len() == 1 {
        Some(survivors2[0].clone())
    } else {
        fallback_used = true;
        let pool: Vec<MonicPoly> = if !survivors2.is_empty() {
            survivors2.clone()
        } else if !survivors1.is_empty() {
            survivors1.clone()
        } else {
            ctx.space.squarefree().collect()
        };
        let full = cache.extend_to(ctx.p()).to_vec();
        let full_scores = scanner.scores_of(&pool, &full);
        work = work.saturating_add((pool.len() as u64).saturating_mul(ctx.p()));
        let best = full_scores.iter().copied().max();
        best.and_then(|top| {
            ambiguous = full_scores.iter().filter(|&&s| s == top).count() > 1;
            // pool is in canonical order, so the first maximum is the smallest
            pool.iter()
                .zip(&full_scores)
                .find(|(_, &s)| s == top)
                .map(|(g, _)| g.clone())
        })
    };
    let stage2_time = t2.elapsed();

    Ok(RecoveryReport {
        algorithm: Algorithm::TwoStage,
        recovered,
        survivors_stage1: survivors1.len() as u64,
        survivors_stage2: survivors2.len() as u64,
        total_queries: session.query_count() - before,
        distinct_points: cache.len(),
        candidates: ctx.candidates,
        work,
        fallback_used,
        ambiguous,
        elapsed_ms: Some(Elapsed::new(stage1_time, stage2_time)),
        params,
    })
}

pub fn recover(
    algorithm: Algorithm,
    session: &OracleSession,
    d: usize,
    opts: &RecoverOptions,
) -> Result<RecoveryReport> {
    match algorithm {
        Algorithm::Brute => brute_force_recover(session, d, opts),
        Algorithm::Short => short_window_recover(session, d, opts),
        Algorithm::TwoStage => two_stage_recover(session, d, opts),
    }
}

/// Smallest `m` with `3^m >= count`.
pub fn ceil_log3(count: u128) -> u32 {
    let mut m = 0;
    let mut pow: u128 = 1;
    while pow < count {
        pow = pow.saturating_mul(3);
        m += 1;
    }
    m
}

/// Information-theoretic floor `ceil(log_3 |M_d|)` on the number of ternary
/// answers needed to single out a square-free candidate.
pub fn query_lower_bound(modulus: PrimeModulus, d: usize, budget: Budget) -> Result<u32> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    let small = Budget::new(budget.limit().min(EXACT_COUNT_LIMIT));
    if let Ok(count) = squarefree_count_exhaustive(modulus, d, small) {
        return Ok(ceil_log3(count as u128));
    }
    match squarefree_count_formula(modulus, d) {
        Some(count) => Ok(ceil_log3(count)),
        None => {
            let p = modulus.value() as f64;
            let log3 = d as f64 * p.ln() / 3f64.ln() + (1.0 - 1.0 / p).ln() / 3f64.ln();
            Ok(log3.ceil() as u32)
        }
    }
}
