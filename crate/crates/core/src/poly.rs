//! Monic polynomials over F_p and the candidate spaces they live in.
//!
//! A monic polynomial of degree `d` is stored densely as `(s_0, ..., s_{d-1})`
//! with the leading 1 implicit. The canonical ordering of a degree-`d` space is
//! lexicographic in `(s_{d-1}, ..., s_0)`, which is the same as reading the
//! coefficients as base-`p` digits with `s_{d-1}` most significant.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ffield::{FpElement, PrimeModulus};
use crate::Budget;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonicPoly {
    modulus: PrimeModulus,
    coeffs: Vec<u64>,
}

impl MonicPoly {
    /// Builds `X^d + s_{d-1} X^{d-1} + ... + s_0` from `(s_0, ..., s_{d-1})`.
    pub fn new(modulus: PrimeModulus, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::ZeroDegree);
        }
        let p = modulus.value();
        Ok(MonicPoly {
            modulus,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        })
    }

    pub fn from_elements(coeffs: &[FpElement]) -> Result<Self> {
        let modulus = coeffs.first().ok_or(Error::ZeroDegree)?.modulus();
        MonicPoly::new(modulus, coeffs.iter().map(|c| c.value()).collect())
    }

    /// `X + shift`.
    pub fn linear(modulus: PrimeModulus, shift: u64) -> Self {
        MonicPoly {
            modulus,
            coeffs: vec![shift % modulus.value()],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    /// Non-leading coefficients `(s_0, ..., s_{d-1})` as canonical residues.
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FpElement {
        self.modulus.elem(self.coeffs[i])
    }

    /// Horner evaluation.
    pub fn eval(&self, x: FpElement) -> FpElement {
        debug_assert_eq!(x.modulus(), self.modulus);
        self.modulus.elem(self.eval_raw(x.value()))
    }

    /// Horner evaluation on a canonical residue.
    #[inline]
    pub fn eval_raw(&self, x: u64) -> u64 {
        let m = self.modulus;
        let mut acc = 1u64;
        for &c in self.coeffs.iter().rev() {
            acc = m.add_raw(m.mul_raw(acc, x), c);
        }
        acc
    }

    pub fn mul(&self, other: &MonicPoly) -> MonicPoly {
        assert_eq!(self.modulus, other.modulus, "modulus mismatch");
        let prod = dense_mul(self.modulus, &self.full(), &other.full());
        MonicPoly::from_full(self.modulus, prod)
    }

    /// True iff `gcd(f, f')` is constant.
    pub fn is_squarefree(&self) -> bool {
        let f = self.full();
        let df = derivative(self.modulus, &f);
        dense_gcd(self.modulus, f, df).len() == 1
    }

    /// Monic `G` with `G^2 = self`, if one exists.
    pub fn sqrt(&self) -> Option<MonicPoly> {
        let dd = self.degree();
        if dd % 2 == 1 {
            return None;
        }
        let m = self.modulus;
        let half = dd / 2;
        let f = self.full();
        let inv2 = m.inv_raw(2);
        // b[half] = 1; solve for b[half-k] from the coefficient of X^{dd-k}.
        let mut b = vec![0u64; half + 1];
        b[half] = 1;
        for k in 1..=half {
            let target = dd - k;
            let mut rest = 0u64;
            for i in (half - k + 1)..half {
                let j = target - i;
                if j > half - k && j < half {
                    rest = m.add_raw(rest, m.mul_raw(b[i], b[j]));
                }
            }
            b[half - k] = m.mul_raw(m.sub_raw(f[target], rest), inv2);
        }
        let g = MonicPoly::from_full(m, b);
        if g.mul(&g) == *self {
            Some(g)
        } else {
            None
        }
    }

    pub fn is_perfect_square(&self) -> bool {
        self.sqrt().is_some()
    }

    /// Parses `"x^2 + 3*x + 5"` or a bare coefficient list `"5,3"` meaning
    /// `(s_0, s_1)`. When `degree` is given the result must have that degree.
    pub fn parse(text: &str, modulus: PrimeModulus, degree: Option<usize>) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let poly = if text.contains(['x', 'X']) {
            parse_expression(text, modulus)?
        } else {
            let coeffs = text
                .split(',')
                .map(|t| parse_int(t.trim(), modulus))
                .collect::<Result<Vec<_>>>()?;
            MonicPoly::new(modulus, coeffs)?
        };
        if let Some(d) = degree {
            if poly.degree() != d {
                return Err(Error::Parse(format!(
                    "expected degree {d}, got degree {} from {text:?}",
                    poly.degree()
                )));
            }
        }
        Ok(poly)
    }

    /// Uniform draw from the square-free monic polynomials of degree `d`.
    pub fn random_squarefree<R: rand::Rng + ?Sized>(
        modulus: PrimeModulus,
        d: usize,
        rng: &mut R,
    ) -> Self {
        assert!(d >= 1, "degree must be positive");
        loop {
            let coeffs = (0..d).map(|_| rng.gen_range(0..modulus.value())).collect();
            let g = MonicPoly { modulus, coeffs };
            if g.is_squarefree() {
                return g;
            }
        }
    }

    /// Position within the lexicographically ordered monic space of this degree.
    pub fn index(&self) -> u128 {
        let p = self.modulus.value() as u128;
        self.coeffs
            .iter()
            .rev()
            .fold(0u128, |acc, &c| acc * p + c as u128)
    }

    /// Full coefficient vector, low to high, including the leading 1.
    fn full(&self) -> Vec<u64> {
        let mut v = self.coeffs.clone();
        v.push(1);
        v
    }

    fn from_full(modulus: PrimeModulus, mut full: Vec<u64>) -> MonicPoly {
        debug_assert_eq!(full.last(), Some(&1));
        full.pop();
        MonicPoly {
            modulus,
            coeffs: full,
        }
    }
}

impl PartialOrd for MonicPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonicPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.modulus
            .cmp(&other.modulus)
            .then(self.degree().cmp(&other.degree()))
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

impl fmt::Display for MonicPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.degree();
        let mut terms = vec![if d == 1 {
            "x".to_string()
        } else {
            format!("x^{d}")
        }];
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let term = match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "x".to_string(),
                (1, c) => format!("{c}*x"),
                (i, 1) => format!("x^{i}"),
                (i, c) => format!("{c}*x^{i}"),
            };
            terms.push(term);
        }
        write!(f, "{}", terms.join(" + "))
    }
}

impl Serialize for MonicPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn parse_int(t: &str, modulus: PrimeModulus) -> Result<u64> {
    let v: i128 = t
        .parse()
        .map_err(|_| Error::Parse(format!("bad coefficient {t:?}")))?;
    Ok(v.rem_euclid(modulus.value() as i128) as u64)
}

fn parse_expression(text: &str, modulus: PrimeModulus) -> Result<MonicPoly> {
    // Split into signed terms.
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut current = String::new();
    let mut negative = false;
    for (i, ch) in cleaned.chars().enumerate() {
        if (ch == '+' || ch == '-') && !current.ends_with('^') {
            if current.is_empty() && i != 0 {
                return Err(Error::Parse(format!("dangling operator in {text:?}")));
            }
            if !current.is_empty() {
                terms.push((negative, std::mem::take(&mut current)));
            }
            negative = ch == '-';
        } else {
            current.push(ch);
        }
    }
    if current.is_empty() {
        return Err(Error::Parse(format!("trailing operator in {text:?}")));
    }
    terms.push((negative, current));

    let p = modulus.value();
    let mut coeffs: Vec<u64> = Vec::new();
    for (neg, term) in terms {
        let lower = term.to_ascii_lowercase();
        let (coef, exp) = match lower.find('x') {
            None => (parse_int(&lower, modulus)?, 0usize),
            Some(pos) => {
                let head = lower[..pos].trim_end_matches('*');
                let coef = if head.is_empty() {
                    1
                } else {
                    parse_int(head, modulus)?
                };
                let tail = &lower[pos + 1..];
                let exp = if tail.is_empty() {
                    1
                } else if let Some(e) = tail.strip_prefix('^') {
                    e.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad exponent in {term:?}")))?
                } else {
                    return Err(Error::Parse(format!("bad term {term:?}")));
                };
                (coef, exp)
            }
        };
        if coeffs.len() <= exp {
            coeffs.resize(exp + 1, 0);
        }
        let c = if neg { modulus.neg_raw(coef) } else { coef };
        coeffs[exp] = (coeffs[exp] + c) % p;
    }
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
        coeffs.pop();
    }
    if coeffs.len() < 2 {
        return Err(Error::ZeroDegree);
    }
    if *coeffs.last().unwrap() != 1 {
        return Err(Error::Parse(format!("{text:?} is not monic")));
    }
    Ok(MonicPoly::from_full(modulus, coeffs))
}

// Dense helpers on full coefficient vectors (low to high, no trailing zeros
// except the zero polynomial, which is the empty vector).

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn dense_mul(m: PrimeModulus, a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = m.add_raw(out[i + j], m.mul_raw(x, y));
        }
    }
    trim(out)
}

fn derivative(m: PrimeModulus, f: &[u64]) -> Vec<u64> {
    let p = m.value();
    trim(
        f.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| m.mul_raw(c, i as u64 % p))
            .collect(),
    )
}

/// Remainder of `a` modulo nonzero `b`.
fn dense_rem(m: PrimeModulus, mut a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    let lead_inv = m.inv_raw(*b.last().expect("division by zero polynomial"));
    while a.len() >= b.len() {
        let shift = a.len() - b.len();
        let q = m.mul_raw(*a.last().unwrap(), lead_inv);
        for (i, &c) in b.iter().enumerate() {
            a[shift + i] = m.sub_raw(a[shift + i], m.mul_raw(q, c));
        }
        a = trim(a);
    }
    a
}

/// Monic gcd; returns `[1]` for coprime inputs.
fn dense_gcd(m: PrimeModulus, a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    let (mut a, mut b) = (trim(a), trim(b));
    while !b.is_empty() {
        let r = dense_rem(m, a, &b);
        a = b;
        b = r;
    }
    let lead_inv = m.inv_raw(*a.last().expect("gcd of two zero polynomials"));
    a.into_iter().map(|c| m.mul_raw(c, lead_inv)).collect()
}

/// All monic polynomials of a fixed degree, in canonical lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonicSpace {
    modulus: PrimeModulus,
    degree: usize,
    len: u64,
}

impl MonicSpace {
    /// Fails if `p^d` exceeds the budget.
    pub fn new(modulus: PrimeModulus, degree: usize, budget: Budget) -> Result<Self> {
        if degree == 0 {
            return Err(Error::ZeroDegree);
        }
        let len = checked_pow(modulus.value() as u128, degree);
        budget.check(len)?;
        Ok(MonicSpace {
            modulus,
            degree,
            len: len.unwrap() as u64,
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn poly_at(&self, index: u64) -> MonicPoly {
        assert!(index < self.len, "index out of range");
        let p = self.modulus.value();
        let mut rest = index;
        let coeffs = (0..self.degree)
            .map(|_| {
                let c = rest % p;
                rest /= p;
                c
            })
            .collect();
        MonicPoly {
            modulus: self.modulus,
            coeffs,
        }
    }

    pub fn index_of(&self, poly: &MonicPoly) -> Option<u64> {
        if poly.modulus != self.modulus || poly.degree() != self.degree {
            return None;
        }
        Some(poly.index() as u64)
    }

    pub fn iter(&self) -> impl Iterator<Item = MonicPoly> + '_ {
        self.range(0..self.len)
    }

    /// A contiguous slice of the canonical order, for partitioned scans.
    pub fn range(&self, r: std::ops::Range<u64>) -> impl Iterator<Item = MonicPoly> + '_ {
        let end = r.end.min(self.len);
        (r.start..end).map(move |i| self.poly_at(i))
    }

    pub fn squarefree(&self) -> impl Iterator<Item = MonicPoly> + '_ {
        self.iter().filter(MonicPoly::is_squarefree)
    }
}

pub(crate) fn checked_pow(base: u128, exp: usize) -> Option<u128> {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base))
}

/// Monic degree-`d` polynomials in canonical order, optionally square-free only.
pub fn enumerate_monic(
    d: usize,
    modulus: PrimeModulus,
    squarefree_only: bool,
    budget: Budget,
) -> Result<impl Iterator<Item = MonicPoly>> {
    let space = MonicSpace::new(modulus, d, budget)?;
    Ok((0..space.len())
        .map(move |i| space.poly_at(i))
        .filter(move |g| !squarefree_only || g.is_squarefree()))
}

/// Number of square-free monic polynomials of degree `d`: `p` for `d = 1`,
/// `p^d - p^(d-1)` otherwise. `None` on `u128` overflow.
pub fn squarefree_count_formula(modulus: PrimeModulus, d: usize) -> Option<u128> {
    let p = modulus.value() as u128;
    match d {
        0 => Some(1),
        1 => Some(p),
        _ => Some(checked_pow(p, d)? - checked_pow(p, d - 1)?),
    }
}

pub fn squarefree_count_exhaustive(modulus: PrimeModulus, d: usize, budget: Budget) -> Result<u64> {
    Ok(enumerate_monic(d, modulus, true, budget)?.count() as u64)
}
