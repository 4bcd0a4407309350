//! Black-box access to the hidden polynomial.
//!
//! An [`OracleSession`] answers `x -> chi(f(x))` (or the patched `chi~(f(x))`)
//! and counts every answer it serves. With `gamma < 1` each answer is replaced,
//! with probability `1 - gamma`, by a uniformly chosen wrong value. Noise draws
//! come from a ChaCha stream keyed by `(seed, x, draw index)`, so a noisy run is
//! reproducible no matter in which order or on which thread points are asked.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffield::{legendre, legendre_ext, FpElement, PrimeModulus};
use crate::poly::MonicPoly;

/// ChaCha words reserved per noise draw.
const WORDS_PER_DRAW: u128 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// `chi(f(x))`, values in {-1, 0, 1}.
    Signed,
    /// `chi~(f(x))`, values in {-1, 1}.
    Patched,
}

impl OracleMode {
    fn codomain(self) -> &'static [i8] {
        match self {
            OracleMode::Signed => &[-1, 0, 1],
            OracleMode::Patched => &[-1, 1],
        }
    }
}

#[derive(Debug)]
pub struct OracleSession {
    hidden: MonicPoly,
    gamma: f64,
    seed: u64,
    mode: OracleMode,
    queries: AtomicU64,
    draws: Mutex<HashMap<u64, u64>>,
}

impl OracleSession {
    /// `gamma` must lie in `(1/2, 1]`; the hidden polynomial must be square-free.
    pub fn new(hidden: MonicPoly, gamma: f64, seed: u64, mode: OracleMode) -> Result<Self> {
        if !hidden.is_squarefree() {
            return Err(Error::NotSquareFree(hidden.to_string()));
        }
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (1/2, 1], got {gamma}"
            )));
        }
        Ok(OracleSession {
            hidden,
            gamma,
            seed,
            mode,
            queries: AtomicU64::new(0),
            draws: Mutex::new(HashMap::new()),
        })
    }

    /// Noise-free signed oracle.
    pub fn exact(hidden: MonicPoly) -> Result<Self> {
        OracleSession::new(hidden, 1.0, 0, OracleMode::Signed)
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.hidden.modulus()
    }

    pub fn degree(&self) -> usize {
        self.hidden.degree()
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_exact(&self) -> bool {
        self.gamma == 1.0
    }

    /// Number of answers served so far.
    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// Ground truth for test harnesses. Recovery algorithms never call this.
    pub fn reveal(&self) -> &MonicPoly {
        &self.hidden
    }

    fn truth(&self, x: FpElement) -> i8 {
        let v = self.hidden.eval(x);
        match self.mode {
            OracleMode::Signed => legendre(v),
            OracleMode::Patched => legendre_ext(v),
        }
    }

    pub fn query(&self, x: FpElement) -> i8 {
        debug_assert_eq!(x.modulus(), self.modulus());
        self.queries.fetch_add(1, Ordering::Relaxed);
        let truth = self.truth(x);
        if self.is_exact() {
            return truth;
        }
        let draw = {
            let mut draws = self.draws.lock().expect("draw table poisoned");
            let slot = draws.entry(x.value()).or_insert(0);
            let d = *slot;
            *slot += 1;
            d
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(x.value());
        rng.set_word_pos(draw as u128 * WORDS_PER_DRAW);
        let u: f64 = rng.gen();
        if u < self.gamma {
            return truth;
        }
        let wrong: Vec<i8> = self
            .mode
            .codomain()
            .iter()
            .copied()
            .filter(|&v| v != truth)
            .collect();
        wrong[rng.gen_range(0..wrong.len())]
    }

    /// Plurality of `t` answers at `x` (smallest value on ties). `t` must be odd.
    pub fn majority_estimate(&self, x: FpElement, t: usize) -> Result<i8> {
        if t == 0 || t % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "repetition count must be odd, got {t}"
            )));
        }
        let mut tally = [0usize; 3];
        for _ in 0..t {
            tally[(self.query(x) + 1) as usize] += 1;
        }
        let best = *tally.iter().max().unwrap();
        let pos = tally.iter().position(|&c| c == best).unwrap();
        Ok(pos as i8 - 1)
    }
}
