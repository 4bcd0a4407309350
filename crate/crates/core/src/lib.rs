//! Reconstruction of a hidden square-free monic polynomial over F_p from an
//! oracle for the quadratic character of its values.
//!
//! The crate is organized bottom-up:
//!
//! * [`ffield`]: F_p arithmetic, the Legendre symbol and its patched variant.
//! * [`poly`]: monic polynomials, square-freeness, square roots, enumeration.
//! * [`oracle`]: the black box `x -> chi(f(x))` with query accounting and noise.
//! * [`charsum`]: exhaustive character sums and the bounds they obey.
//! * [`reconstruct`]: brute-force, short-window and two-stage recovery.
//! * [`quantum`]: classical simulation of the query-state POVM.
//! * [`cli`]: the `legrec` command-line front end.

pub mod charsum;
pub mod cli;
pub mod error;
pub mod ffield;
pub mod oracle;
pub mod poly;
pub mod quantum;
pub mod reconstruct;
mod scan;

pub use error::{Error, Result};
pub use ffield::{CharTable, FpElement, PrimeModulus};
pub use poly::{MonicPoly, MonicSpace};

/// Cap on the number of elementary operations an exhaustive routine may plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(u64);

impl Budget {
    pub const DEFAULT: u64 = 1_000_000_000;

    pub fn new(limit: u64) -> Self {
        Budget(limit)
    }

    pub fn limit(self) -> u64 {
        self.0
    }

    /// `needed = None` stands for an estimate that overflowed `u128`.
    pub fn check(self, needed: Option<u128>) -> Result<()> {
        match needed {
            Some(n) if n <= self.0 as u128 => Ok(()),
            Some(n) => Err(Error::BudgetExceeded {
                needed: n,
                budget: self.0,
            }),
            None => Err(Error::BudgetExceeded {
                needed: u128::MAX,
                budget: self.0,
            }),
        }
    }

    pub fn allows(self, needed: Option<u128>) -> bool {
        self.check(needed).is_ok()
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget(Self::DEFAULT)
    }
}

/// Product of cost factors, `None` on overflow.
pub(crate) fn cost(factors: &[u128]) -> Option<u128> {
    factors.iter().try_fold(1u128, |acc, &f| acc.checked_mul(f))
}
