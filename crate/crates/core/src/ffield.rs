//! Arithmetic in the prime field F_p and the quadratic character.
//!
//! Residues are always kept in canonical form `[0, p)`. Moduli are limited to
//! 63 bits so that every product fits in a `u128` intermediate.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Witnesses making Miller-Rabin deterministic for every n < 3.3 * 10^24.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Largest modulus for which [`CharTable`] precomputes a lookup table.
const TABLE_LIMIT: u64 = 1 << 26;

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if m <= u32::MAX as u64 {
        a * b % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n == w {
            return true;
        }
        if n % w == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An odd prime below 2^63.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 63 {
            return Err(Error::ModulusTooLarge(p));
        }
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        Ok(PrimeModulus(p))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// Reduces `v` into the field.
    #[inline]
    pub fn elem(self, v: u64) -> FpElement {
        FpElement {
            value: v % self.0,
            modulus: self,
        }
    }

    pub fn elem_signed(self, v: i64) -> FpElement {
        self.elem(v.rem_euclid(self.0 as i64) as u64)
    }

    pub fn zero(self) -> FpElement {
        self.elem(0)
    }

    pub fn one(self) -> FpElement {
        self.elem(1)
    }

    /// Iterates over all field elements in increasing order.
    pub fn elements(self) -> impl Iterator<Item = FpElement> {
        (0..self.0).map(move |v| FpElement {
            value: v,
            modulus: self,
        })
    }

    // Raw helpers on canonical residues. Callers guarantee inputs are < p.

    #[inline]
    pub fn add_raw(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub_raw(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn mul_raw(self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.0)
    }

    #[inline]
    pub fn neg_raw(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    pub fn pow_raw(self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.0)
    }

    /// Inverse via Fermat. Panics on zero.
    pub fn inv_raw(self, a: u64) -> u64 {
        assert!(a % self.0 != 0, "inverse of zero");
        pow_mod(a, self.0 - 2, self.0)
    }

    /// Legendre symbol via Euler's criterion.
    pub fn legendre_raw(self, a: u64) -> i8 {
        let a = a % self.0;
        if a == 0 {
            return 0;
        }
        if pow_mod(a, (self.0 - 1) / 2, self.0) == 1 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A residue modulo a [`PrimeModulus`], always canonical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FpElement {
    value: u64,
    modulus: PrimeModulus,
}

impl FpElement {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> PrimeModulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    /// Square-and-multiply; `0^0 = 1`.
    pub fn pow(self, e: u64) -> FpElement {
        mod_pow(self, e)
    }

    pub fn inverse(self) -> Option<FpElement> {
        if self.value == 0 {
            None
        } else {
            Some(FpElement {
                value: self.modulus.inv_raw(self.value),
                modulus: self.modulus,
            })
        }
    }

    pub fn legendre(self) -> i8 {
        legendre(self)
    }

    pub fn legendre_ext(self) -> i8 {
        legendre_ext(self)
    }
}

impl fmt::Display for FpElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FpElement {
    type Output = FpElement;
    fn add(self, rhs: FpElement) -> FpElement {
        debug_assert_eq!(self.modulus, rhs.modulus);
        FpElement {
            value: self.modulus.add_raw(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Sub for FpElement {
    type Output = FpElement;
    fn sub(self, rhs: FpElement) -> FpElement {
        debug_assert_eq!(self.modulus, rhs.modulus);
        FpElement {
            value: self.modulus.sub_raw(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Mul for FpElement {
    type Output = FpElement;
    fn mul(self, rhs: FpElement) -> FpElement {
        debug_assert_eq!(self.modulus, rhs.modulus);
        FpElement {
            value: self.modulus.mul_raw(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Neg for FpElement {
    type Output = FpElement;
    fn neg(self) -> FpElement {
        FpElement {
            value: self.modulus.neg_raw(self.value),
            modulus: self.modulus,
        }
    }
}

pub fn mod_pow(a: FpElement, e: u64) -> FpElement {
    FpElement {
        value: pow_mod(a.value, e, a.modulus.0),
        modulus: a.modulus,
    }
}

/// Quadratic character: 0 at 0, +1 on nonzero squares, -1 otherwise.
pub fn legendre(a: FpElement) -> i8 {
    a.modulus.legendre_raw(a.value)
}

/// Jacobi symbol (a/n) for odd n, by the binary reduction.
pub fn jacobi(a: u64, n: u64) -> i8 {
    assert!(n % 2 == 1, "jacobi symbol needs an odd modulus");
    let mut a = a % n;
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(n % 8, 3 | 5) {
            t = -t;
        }
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Legendre symbol computed through [`jacobi`]; must agree with [`legendre`].
pub fn legendre_jacobi(a: FpElement) -> i8 {
    jacobi(a.value, a.modulus.0)
}

/// Patched character: like [`legendre`] but 1 at zero.
pub fn legendre_ext(a: FpElement) -> i8 {
    if a.value == 0 {
        1
    } else {
        legendre(a)
    }
}

/// Quadratic character with an optional lookup table for small p.
#[derive(Clone, Debug)]
pub struct CharTable {
    modulus: PrimeModulus,
    table: Option<Vec<i8>>,
}

impl CharTable {
    pub fn new(modulus: PrimeModulus) -> Self {
        let p = modulus.value();
        if p > TABLE_LIMIT {
            return CharTable {
                modulus,
                table: None,
            };
        }
        let mut table = vec![-1i8; p as usize];
        table[0] = 0;
        // y^2 walked incrementally: (y+1)^2 = y^2 + 2y + 1.
        let mut sq = 0u64;
        for y in 0..(p - 1) / 2 {
            sq = modulus.add_raw(sq, modulus.add_raw((2 * y) % p, 1));
            table[sq as usize] = 1;
        }
        CharTable {
            modulus,
            table: Some(table),
        }
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    /// `v` must be canonical.
    #[inline]
    pub fn chi(&self, v: u64) -> i8 {
        match &self.table {
            Some(t) => t[v as usize],
            None => self.modulus.legendre_raw(v),
        }
    }

    #[inline]
    pub fn chi_ext(&self, v: u64) -> i8 {
        if v == 0 {
            1
        } else {
            self.chi(v)
        }
    }

    pub fn table(&self) -> Option<&[i8]> {
        self.table.as_deref()
    }
}
