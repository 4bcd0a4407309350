//! Exhaustive character sums and the bounds they are expected to satisfy.
//!
//! Every sum here is an exact integer except the weighted moments, whose
//! inner sums carry real weights and are accumulated in `f64` in a fixed
//! order. Logarithms in bound formulas are natural logarithms.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ffield::{CharTable, FpElement, PrimeModulus};
use crate::poly::{checked_pow, MonicPoly, MonicSpace};
use crate::scan::{Character, Scanner};
use crate::{cost, Budget};

/// `sum_{x in F_p} chi(F(x))`.
pub fn complete_char_sum(f: &MonicPoly) -> i64 {
    let m = f.modulus();
    m.elements().map(|x| f.eval(x).legendre() as i64).sum()
}

/// `sum_{x=1}^{M} chi(F(x))` for `1 <= M < p`.
pub fn short_char_sum(f: &MonicPoly, window: u64) -> Result<i64> {
    let p = f.modulus().value();
    if window == 0 || window >= p {
        return Err(Error::InvalidArgument(format!(
            "window must lie in [1, p-1], got {window} for p = {p}"
        )));
    }
    Ok((1..=window)
        .map(|x| f.modulus().legendre_raw(f.eval_raw(x)) as i64)
        .sum())
}

/// `sum_{x in F_p} chi((x + a)(x + b))`: `p - 1` if `a = b`, else `-1`.
pub fn pair_identity(a: FpElement, b: FpElement) -> i64 {
    let m = a.modulus();
    debug_assert_eq!(m, b.modulus());
    m.elements()
        .map(|x| ((x + a) * (x + b)).legendre() as i64)
        .sum()
}

/// Closed form that [`pair_identity`] must reproduce.
pub fn pair_identity_expected(a: FpElement, b: FpElement) -> i64 {
    if a == b {
        a.modulus().value() as i64 - 1
    } else {
        -1
    }
}

/// `S_0 + c_1 S_1 + ... + c_{d-1} S_{d-1} + c_d` in the variables `S_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearForm {
    modulus: PrimeModulus,
    coeffs: Vec<u64>,
    constant: u64,
}

impl LinearForm {
    /// `coeffs` are `(c_1, ..., c_{d-1})`.
    pub fn new(modulus: PrimeModulus, coeffs: Vec<u64>, constant: u64) -> Self {
        let p = modulus.value();
        LinearForm {
            modulus,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
            constant: constant % p,
        }
    }

    /// Number of variables, `d`.
    pub fn arity(&self) -> usize {
        self.coeffs.len() + 1
    }

    pub fn eval(&self, s: &[u64]) -> u64 {
        assert_eq!(s.len(), self.arity());
        let m = self.modulus;
        let mut acc = m.add_raw(s[0] % m.value(), self.constant);
        for (c, &si) in self.coeffs.iter().zip(&s[1..]) {
            acc = m.add_raw(acc, m.mul_raw(*c, si % m.value()));
        }
        acc
    }

    /// A uniformly random form in `d` variables.
    pub fn random<R: Rng + ?Sized>(modulus: PrimeModulus, d: usize, rng: &mut R) -> Self {
        let p = modulus.value();
        let coeffs = (1..d).map(|_| rng.gen_range(0..p)).collect();
        LinearForm::new(modulus, coeffs, rng.gen_range(0..p))
    }
}

/// `ell` pairwise distinct random forms in `d` variables.
pub fn random_form_set<R: Rng + ?Sized>(
    modulus: PrimeModulus,
    d: usize,
    ell: usize,
    rng: &mut R,
) -> Result<Vec<LinearForm>> {
    let distinct = checked_pow(modulus.value() as u128, d).unwrap_or(u128::MAX);
    if ell as u128 > distinct {
        return Err(Error::InvalidArgument(format!(
            "only {distinct} distinct forms exist"
        )));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(ell);
    while out.len() < ell {
        let f = LinearForm::random(modulus, d, rng);
        if seen.insert(f.clone()) {
            out.push(f);
        }
    }
    Ok(out)
}

/// `sum_{s in F_p^d} chi(prod_nu L_nu(s))` by direct enumeration.
pub fn multilinear_form_sum(forms: &[LinearForm], d: usize, budget: Budget) -> Result<i64> {
    let first = forms
        .first()
        .ok_or_else(|| Error::InvalidArgument("no forms given".into()))?;
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    let m = first.modulus;
    for f in forms {
        if f.modulus != m || f.arity() != d {
            return Err(Error::InvalidArgument(format!(
                "every form needs {d} variables over F_{m}"
            )));
        }
    }
    let unique: HashSet<&LinearForm> = forms.iter().collect();
    if unique.len() != forms.len() {
        return Err(Error::InvalidArgument(
            "forms must be pairwise distinct".into(),
        ));
    }
    let p = m.value();
    let points = checked_pow(p as u128, d);
    budget.check(points.and_then(|n| n.checked_mul(forms.len() as u128)))?;
    let chi = CharTable::new(m);
    let outer = checked_pow(p as u128, d - 1).unwrap() as u64;

    let total: i64 = (0..outer)
        .into_par_iter()
        .map(|rest| {
            // (s_1, ..., s_{d-1}) from the base-p digits of `rest`.
            let mut tail = Vec::with_capacity(d - 1);
            let mut r = rest;
            for _ in 1..d {
                tail.push(r % p);
                r /= p;
            }
            let partial: Vec<u64> = forms
                .iter()
                .map(|f| {
                    f.coeffs
                        .iter()
                        .zip(&tail)
                        .fold(f.constant, |acc, (&c, &s)| m.add_raw(acc, m.mul_raw(c, s)))
                })
                .collect();
            (0..p)
                .map(|s0| {
                    let prod = partial
                        .iter()
                        .fold(1u64, |acc, &c| m.mul_raw(acc, m.add_raw(c, s0)));
                    chi.chi(prod) as i64
                })
                .sum::<i64>()
        })
        .sum();
    Ok(total)
}

/// `|S| <= 2 ell p^{d - 1/2}`, compared exactly as `S^2 <= 4 ell^2 p^{2d-1}`.
pub fn multilinear_bound_holds(sum: i64, ell: usize, p: u64, d: usize) -> bool {
    let lhs = (sum as i128).pow(2) as u128;
    match checked_pow(p as u128, 2 * d - 1).and_then(|pp| pp.checked_mul(4 * (ell as u128).pow(2)))
    {
        Some(rhs) => lhs <= rhs,
        None => true,
    }
}

pub fn multilinear_bound(ell: usize, p: u64, d: usize) -> f64 {
    2.0 * ell as f64 * (p as f64).powf(d as f64 - 0.5)
}

/// Real weights `alpha_1, ..., alpha_N` with `|alpha_x| <= 1`, zero beyond `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    alphas: Vec<f64>,
}

impl WeightVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument(
                "weight vector must be non-empty".into(),
            ));
        }
        if let Some(a) = alphas.iter().find(|a| !a.is_finite() || a.abs() > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "weight {a} outside [-1, 1]"
            )));
        }
        Ok(WeightVector { alphas })
    }

    /// Uniform signs when `signs` is set, else uniform reals in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, signs: bool, rng: &mut R) -> Self {
        let alphas = (0..n)
            .map(|_| {
                if signs {
                    if rng.gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    rng.gen_range(-1.0..=1.0)
                }
            })
            .collect();
        WeightVector { alphas }
    }

    pub fn window(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// Character values `chi(g(x))` for every monic `g` of degree `d` and
/// `x = 1..=N`, kept so that many weight vectors can be tried cheaply.
pub struct MomentTable {
    modulus: PrimeModulus,
    degree: usize,
    window: usize,
    rows: Vec<i8>,
}

impl MomentTable {
    /// Enumerates all `p^d` monic polynomials (not only square-free ones).
    pub fn new(
        modulus: PrimeModulus,
        degree: usize,
        window: usize,
        budget: Budget,
    ) -> Result<Self> {
        let p = modulus.value();
        if window == 0 || window as u64 > p {
            return Err(Error::InvalidArgument(format!(
                "window must lie in [1, p], got {window}"
            )));
        }
        budget.check(checked_pow(p as u128, degree).and_then(|n| n.checked_mul(window as u128)))?;
        let space = MonicSpace::new(modulus, degree, budget)?;
        let chi = CharTable::new(modulus);
        let (_, rows) = Scanner::new(space, &chi, Character::Plain, false).char_rows(window);
        Ok(MomentTable {
            modulus,
            degree,
            window,
            rows,
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// `sum_g |sum_{x=1}^{N'} alpha_x chi(g(x))|^{2r}` for each `r` in `rs`,
    /// where `N' = w.window() <= N`.
    pub fn moments(&self, w: &WeightVector, rs: &[u32]) -> Result<Vec<f64>> {
        let n = w.window();
        if n > self.window {
            return Err(Error::InvalidArgument(format!(
                "weights longer than table window {}",
                self.window
            )));
        }
        if rs.contains(&0) {
            return Err(Error::InvalidArgument(
                "moment order r must be at least 1".into(),
            ));
        }
        let mut acc = vec![0.0f64; rs.len()];
        for row in self.rows.chunks_exact(self.window) {
            let inner: f64 = row[..n]
                .iter()
                .zip(w.alphas())
                .map(|(&c, &a)| c as f64 * a)
                .sum();
            let sq = inner * inner;
            for (slot, &r) in acc.iter_mut().zip(rs) {
                *slot += sq.powi(r as i32);
            }
        }
        Ok(acc)
    }
}

/// `sum_{g monic, deg d} |sum_{x=1}^N alpha_x chi(g(x))|^{2r}`.
pub fn moment_sum(
    w: &WeightVector,
    modulus: PrimeModulus,
    d: usize,
    r: u32,
    budget: Budget,
) -> Result<f64> {
    let table = MomentTable::new(modulus, d, w.window(), budget)?;
    Ok(table.moments(w, &[r])?[0])
}

/// `4 r N^{2r} p^{d - 1/2} + (2r)!/r! N^r p^d`.
pub fn moment_bound(n: usize, p: u64, d: usize, r: u32) -> f64 {
    let (n, p, rf) = (n as f64, p as f64, r as f64);
    let falling: f64 = ((r + 1)..=(2 * r)).map(|k| k as f64).product();
    4.0 * rf * n.powi(2 * r as i32) * p.powf(d as f64 - 0.5)
        + falling * n.powi(r as i32) * p.powi(d as i32)
}

/// Outcome of checking `|sum chi(F)| <= D sqrt(p)` over every monic non-square
/// `F` of one degree.
#[derive(Clone, Debug, PartialEq)]
pub struct WeilSummary {
    pub degree: usize,
    /// Non-square polynomials checked.
    pub checked: u64,
    /// Perfect squares excluded.
    pub squares: u64,
    pub max_abs: i64,
    pub violations: Vec<MonicPoly>,
}

impl WeilSummary {
    pub fn bound(&self, p: u64) -> f64 {
        self.degree as f64 * (p as f64).sqrt()
    }
}

/// Exhaustive Weil-bound check at one degree; comparisons are exact
/// (`S^2 <= D^2 p`).
pub fn weil_sweep(modulus: PrimeModulus, degree: usize, budget: Budget) -> Result<WeilSummary> {
    let p = modulus.value();
    budget.check(cost(&[
        checked_pow(p as u128, degree).unwrap_or(u128::MAX),
        p as u128,
    ]))?;
    let space = MonicSpace::new(modulus, degree, budget)?;
    let squares: HashSet<u64> = if degree % 2 == 0 {
        MonicSpace::new(modulus, degree / 2, budget)?
            .iter()
            .map(|g| g.mul(&g).index() as u64)
            .collect()
    } else {
        HashSet::new()
    };
    let chi = CharTable::new(modulus);
    let scanner = Scanner::new(space, &chi, Character::Plain, false);
    let ones = vec![1i8; p as usize];
    let limit = (degree as i128).pow(2) * p as i128;
    let summary = scanner.fold(
        &ones,
        || WeilSummary {
            degree,
            checked: 0,
            squares: 0,
            max_abs: 0,
            violations: Vec::new(),
        },
        |acc, index, sum| {
            if squares.contains(&index) {
                acc.squares += 1;
                return;
            }
            acc.checked += 1;
            acc.max_abs = acc.max_abs.max(sum.abs());
            if (sum as i128).pow(2) > limit {
                acc.violations.push(space.poly_at(index));
            }
        },
        |mut a, b| {
            a.checked += b.checked;
            a.squares += b.squares;
            a.max_abs = a.max_abs.max(b.max_abs);
            a.violations.extend(b.violations);
            a
        },
    );
    Ok(summary)
}

/// Largest partial sum `|sum_{x=1}^{M} chi(g(x) h(x))|` over distinct square-free
/// `g, h` of degree `d` and all `M < p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortSumSummary {
    pub degree: usize,
    pub pairs: u64,
    pub max_abs: i64,
}

impl ShortSumSummary {
    /// `D sqrt(p) ln p` with `D = 2d`, the shape of the short-interval bound.
    pub fn scale(&self, p: u64) -> f64 {
        let pf = p as f64;
        2.0 * self.degree as f64 * pf.sqrt() * pf.ln()
    }

    /// Measured constant `C = max |S_M| / (D sqrt(p) ln p)`.
    pub fn constant(&self, p: u64) -> f64 {
        self.max_abs as f64 / self.scale(p)
    }
}

pub fn short_sum_sweep(modulus: PrimeModulus, d: usize, budget: Budget) -> Result<ShortSumSummary> {
    let p = modulus.value();
    let n = crate::poly::squarefree_count_formula(modulus, d).unwrap_or(u128::MAX);
    budget.check(cost(&[n, n.saturating_sub(1) / 2 + 1, p as u128]))?;
    let space = MonicSpace::new(modulus, d, budget)?;
    let chi = CharTable::new(modulus);
    let window = (p - 1) as usize;
    let (_, rows) = Scanner::new(space, &chi, Character::Plain, true).char_rows(window);
    let count = rows.len() / window.max(1);
    let max_abs = (0..count)
        .into_par_iter()
        .map(|i| {
            let g = &rows[i * window..(i + 1) * window];
            let mut best = 0i64;
            for j in (i + 1)..count {
                let h = &rows[j * window..(j + 1) * window];
                let mut s = 0i64;
                for (&a, &b) in g.iter().zip(h) {
                    s += (a * b) as i64;
                    best = best.max(s.abs());
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    let pairs = (count as u64) * (count as u64).saturating_sub(1) / 2;
    Ok(ShortSumSummary {
        degree: d,
        pairs,
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    fn poly(p: u64, c: &[u64]) -> MonicPoly {
        MonicPoly::new(m(p), c.to_vec()).unwrap()
    }

    #[test]
    fn complete_sum_examples() {
        assert_eq!(complete_char_sum(&poly(7, &[0])), 0);
        assert_eq!(complete_char_sum(&poly(7, &[0, 1])), -1);
        assert_eq!(complete_char_sum(&poly(7, &[0, 0])), 6);
    }

    #[test]
    fn short_sum_examples() {
        assert_eq!(short_char_sum(&poly(7, &[0]), 3).unwrap(), 1);
        assert!(short_char_sum(&poly(7, &[0]), 7).is_err());
        assert!(short_char_sum(&poly(7, &[0]), 0).is_err());
        let f = poly(101, &[0, 1]);
        let s = short_char_sum(&f, 50).unwrap();
        assert!((s.abs() as f64) <= 2.0 * 101f64.sqrt() * 101f64.ln());
        for q in [7u64, 13] {
            for c in 0..q {
                let f = poly(q, &[c, 1]);
                let zero = f.eval(m(q).zero()).legendre() as i64;
                assert_eq!(
                    short_char_sum(&f, q - 1).unwrap(),
                    complete_char_sum(&f) - zero
                );
            }
        }
    }

    #[test]
    fn pair_identity_examples() {
        let p = m(7);
        assert_eq!(pair_identity(p.elem(1), p.elem(1)), 6);
        assert_eq!(pair_identity(p.elem(1), p.elem(3)), -1);
        let q = m(101);
        assert_eq!(pair_identity(q.elem(0), q.elem(100)), -1);
    }

    #[test]
    fn multilinear_examples() {
        let p = m(7);
        let b = Budget::default();
        let s0 = LinearForm::new(p, vec![], 0);
        let s0_plus_1 = LinearForm::new(p, vec![], 1);
        assert_eq!(multilinear_form_sum(&[s0.clone()], 1, b).unwrap(), 0);
        assert_eq!(
            multilinear_form_sum(&[s0.clone(), s0_plus_1], 1, b).unwrap(),
            -1
        );
        assert!(multilinear_form_sum(&[s0.clone(), s0.clone()], 1, b).is_err());
        assert!(multilinear_form_sum(&[s0], 2, b).is_err());

        let q = m(5);
        let forms = [
            LinearForm::new(q, vec![0], 0),
            LinearForm::new(q, vec![1], 1),
        ];
        let s = multilinear_form_sum(&forms, 2, b).unwrap();
        // direct double sum
        let mut direct = 0i64;
        for s0 in 0..5u64 {
            for s1 in 0..5u64 {
                direct += q.legendre_raw(s0 * ((s0 + s1 + 1) % 5)) as i64;
            }
        }
        assert_eq!(s, direct);
        assert!((s.abs() as f64) <= 2.0 * 2.0 * 5f64.powf(1.5));
        assert!(multilinear_bound_holds(s, 2, 5, 2));
    }

    #[test]
    fn multilinear_budget() {
        let p = m(101);
        let f = LinearForm::new(p, vec![1, 2], 3);
        assert!(matches!(
            multilinear_form_sum(&[f], 3, Budget::new(1000)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn moment_examples() {
        let p = m(7);
        let b = Budget::default();
        let one = WeightVector::new(vec![1.0]).unwrap();
        assert_eq!(moment_sum(&one, p, 1, 1, b).unwrap(), 6.0);
        let zero = WeightVector::new(vec![0.0; 4]).unwrap();
        assert_eq!(moment_sum(&zero, p, 2, 3, b).unwrap(), 0.0);
        assert!(WeightVector::new(vec![1.5]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert!(moment_sum(&one, p, 1, 0, b).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WeightVector::random(5, true, &mut rng);
        let v = moment_sum(&w, m(101), 1, 2, b).unwrap();
        assert!(v <= 8.0 * 625.0 * 101f64.sqrt() + 12.0 * 25.0 * 101.0);
        assert_eq!(
            moment_bound(5, 101, 1, 2),
            8.0 * 625.0 * 101f64.sqrt() + 12.0 * 25.0 * 101.0
        );
    }

    /// The moment rewritten as a sum over 2r-tuples of points, each term an
    /// inner sum over polynomials. Independent of the per-polynomial route.
    fn moment_by_tuples(w: &[f64], p: u64, d: usize, r: u32) -> f64 {
        let modulus = m(p);
        let space = MonicSpace::new(modulus, d, Budget::default()).unwrap();
        let polys: Vec<_> = space.iter().collect();
        let n = w.len();
        let k = 2 * r as usize;
        let mut total = 0.0;
        let mut tuple = vec![0usize; k];
        loop {
            let weight: f64 = tuple.iter().map(|&i| w[i]).product();
            let inner: i64 = polys
                .iter()
                .map(|g| {
                    let prod = tuple.iter().fold(1u64, |acc, &i| {
                        modulus.mul_raw(acc, g.eval_raw(i as u64 + 1))
                    });
                    modulus.legendre_raw(prod) as i64
                })
                .sum();
            total += weight * inner as f64;
            let mut pos = 0;
            loop {
                if pos == k {
                    return total;
                }
                tuple[pos] += 1;
                if tuple[pos] < n {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn moment_matches_tuple_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, d, n, r) in [
            (5u64, 1usize, 3usize, 1u32),
            (5, 2, 3, 1),
            (7, 1, 4, 2),
            (5, 2, 2, 2),
        ] {
            let w = WeightVector::random(n, false, &mut rng);
            let direct = moment_sum(&w, m(p), d, r, Budget::default()).unwrap();
            let tuples = moment_by_tuples(w.alphas(), p, d, r);
            assert!(
                (direct - tuples).abs() <= 1e-9 * direct.abs().max(1.0),
                "{direct} vs {tuples}"
            );
        }
    }

    #[test]
    fn weil_sweep_small() {
        for q in [5u64, 7, 11] {
            for deg in 1..=4 {
                let s = weil_sweep(m(q), deg, Budget::default()).unwrap();
                assert!(s.violations.is_empty());
                let total = q.pow(deg as u32);
                let squares = if deg % 2 == 0 {
                    q.pow(deg as u32 / 2)
                } else {
                    0
                };
                assert_eq!(s.squares, squares);
                assert_eq!(s.checked, total - squares);
                // cross-check the sweep's maximum against direct summation
                let direct = MonicSpace::new(m(q), deg, Budget::default())
                    .unwrap()
                    .iter()
                    .filter(|f| !f.is_perfect_square())
                    .map(|f| complete_char_sum(&f).abs())
                    .max()
                    .unwrap();
                assert_eq!(s.max_abs, direct);
            }
        }
    }

    #[test]
    fn short_sweep_small() {
        let s = short_sum_sweep(m(13), 1, Budget::default()).unwrap();
        assert_eq!(s.pairs, 78);
        let mut best = 0i64;
        for a in 0..13u64 {
            for b in (a + 1)..13 {
                let f = poly(13, &[a]).mul(&poly(13, &[b]));
                for w in 1..13 {
                    best = best.max(short_char_sum(&f, w).unwrap().abs());
                }
            }
        }
        assert_eq!(s.max_abs, best);
        assert!(s.constant(13) <= 1.0);
    }
}
