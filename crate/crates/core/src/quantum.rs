//! Classical simulation of query-state identification.
//!
//! The state of a polynomial `g` is `Psi_g = p^{-1/2} sum_x chi~(g(x)) |x>`,
//! stored as its sign vector. The `k`-fold tensor power is never built: its
//! overlaps are `c_{gh}^k` with `c_{gh} = <Psi_g, Psi_h>`. The measurement uses
//! the operators `alpha Psi_{g,k} Psi_{g,k}^*` plus a residual, with `alpha`
//! just below `1 / lambda_max` of the Gram matrix.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffield::{CharTable, PrimeModulus};
use crate::poly::{squarefree_count_formula, MonicPoly, MonicSpace};
use crate::{cost, Budget};

/// Largest Gram matrix order accepted.
pub const MAX_ORDER: u64 = 5000;
pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const EIGEN_MAX_ITERATIONS: usize = 100_000;
/// `alpha = (1 - ALPHA_MARGIN) / lambda_max`.
pub const ALPHA_MARGIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignState {
    poly: MonicPoly,
    signs: Vec<i8>,
}

impl SignState {
    pub fn new(g: &MonicPoly) -> Result<Self> {
        Self::with_table(g, &CharTable::new(g.modulus()))
    }

    pub fn with_table(g: &MonicPoly, chi: &CharTable) -> Result<Self> {
        if !g.is_squarefree() {
            return Err(Error::NotSquareFree(g.to_string()));
        }
        let p = g.modulus().value();
        let signs = (0..p).map(|x| chi.chi_ext(g.eval_raw(x))).collect();
        Ok(SignState {
            poly: g.clone(),
            signs,
        })
    }

    pub fn poly(&self) -> &MonicPoly {
        &self.poly
    }

    /// `chi~(g(x))` for `x = 0..p`.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `1 / sqrt(p)`.
    pub fn normalizer(&self) -> f64 {
        1.0 / (self.signs.len() as f64).sqrt()
    }

    pub fn amplitude(&self, x: usize) -> f64 {
        self.signs[x] as f64 * self.normalizer()
    }

    /// Exact squared norm: sum of squared signs over `p`.
    pub fn norm_squared(&self) -> Ratio<i64> {
        let s: i64 = self.signs.iter().map(|&v| (v as i64).pow(2)).sum();
        Ratio::new(s, self.signs.len() as i64)
    }

    /// `sum_x chi~(g(x)) chi~(h(x))`.
    pub fn correlation(&self, other: &SignState) -> i64 {
        dot(&self.signs, &other.signs)
    }
}

fn dot(a: &[i8], b: &[i8]) -> i64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x as i32 * y as i32)
        .sum::<i32>() as i64
}

/// `c_{gh} = (1/p) sum_x chi~(g(x)) chi~(h(x))`, exactly.
pub fn pair_overlap(g: &MonicPoly, h: &MonicPoly) -> Result<Ratio<i64>> {
    if g.modulus() != h.modulus() || g.degree() != h.degree() {
        return Err(Error::InvalidArgument(
            "polynomials must share modulus and degree".into(),
        ));
    }
    let chi = CharTable::new(g.modulus());
    let a = SignState::with_table(g, &chi)?;
    let b = SignState::with_table(h, &chi)?;
    Ok(Ratio::new(a.correlation(&b), g.modulus().value() as i64))
}

/// `ceil(2(d+1)/epsilon)`.
pub fn choose_k(d: usize, epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let raw = 2.0 * (d as f64 + 1.0) / epsilon;
    let snapped = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    if snapped > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} gives an unrepresentable k"
        )));
    }
    Ok(snapped as u32)
}

/// `2 d sqrt(p)`.
pub fn sigma_bound(p: u64, d: usize) -> f64 {
    2.0 * d as f64 * (p as f64).sqrt()
}

/// `sigma <= 2 d sqrt(p)`, compared as `sigma^2 <= 4 d^2 p`.
pub fn sigma_within_bound(sigma: i64, p: u64, d: usize) -> bool {
    (sigma as i128).pow(2) <= 4 * (d as i128).pow(2) * p as i128
}

fn states(modulus: PrimeModulus, d: usize, budget: Budget) -> Result<Vec<SignState>> {
    let space = MonicSpace::new(modulus, d, budget)?;
    let chi = CharTable::new(modulus);
    let polys: Vec<MonicPoly> = space.squarefree().collect();
    Ok(polys
        .par_iter()
        .map(|g| SignState::with_table(g, &chi).unwrap())
        .collect())
}

/// Row-major matrix of correlations `sum_x chi~(g(x)) chi~(h(x))`.
fn correlations(states: &[SignState]) -> Vec<i64> {
    let n = states.len();
    let upper: Vec<Vec<i64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            states[i..]
                .iter()
                .map(|h| states[i].correlation(h))
                .collect()
        })
        .collect();
    let mut out = vec![0i64; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            out[i * n + i + off] = v;
            out[(i + off) * n + i] = v;
        }
    }
    out
}

/// Sign-vector products needed for all unordered pairs, `n(n+1)/2 * p`.
fn pair_cost(n: u128, p: u64) -> Option<u128> {
    cost(&[n, n + 1, p as u128]).map(|c| c / 2)
}

fn check_order(modulus: PrimeModulus, d: usize, budget: Budget) -> Result<u64> {
    let n = squarefree_count_formula(modulus, d).unwrap_or(u128::MAX);
    if n > MAX_ORDER as u128 {
        return Err(Error::BudgetExceeded {
            needed: n,
            budget: MAX_ORDER,
        });
    }
    budget.check(pair_cost(n, modulus.value()))?;
    Ok(n as u64)
}

/// `max |sum_x chi~(g(x)) chi~(h(x))|` over distinct square-free `g, h` of degree `d`.
pub fn sigma_2d(modulus: PrimeModulus, d: usize, budget: Budget) -> Result<i64> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    let n = squarefree_count_formula(modulus, d).unwrap_or(u128::MAX);
    budget.check(pair_cost(n, modulus.value()))?;
    let st = states(modulus, d, budget)?;
    Ok((0..st.len())
        .into_par_iter()
        .map(|i| {
            st[i + 1..]
                .iter()
                .map(|h| st[i].correlation(h).abs())
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    modulus: PrimeModulus,
    degree: usize,
    k: u32,
    polys: Vec<MonicPoly>,
    /// Integer correlations `p c_{gh}`.
    sums: Vec<i64>,
    /// `c_{gh}^k`.
    entries: Vec<f64>,
}

/// Gram matrix of the `k`-fold query states over all square-free monic
/// polynomials of degree `d`, in canonical order.
pub fn gram_matrix(modulus: PrimeModulus, d: usize, k: u32, budget: Budget) -> Result<GramMatrix> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_order(modulus, d, budget)?;
    let st = states(modulus, d, budget)?;
    let sums = correlations(&st);
    let p = modulus.value() as f64;
    let entries = sums
        .par_iter()
        .map(|&s| (s as f64 / p).powi(k as i32))
        .collect();
    let polys = st.into_iter().map(|s| s.poly).collect();
    Ok(GramMatrix {
        modulus,
        degree: d,
        k,
        polys,
        sums,
        entries,
    })
}

impl GramMatrix {
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn order(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[MonicPoly] {
        &self.polys
    }

    pub fn index_of(&self, g: &MonicPoly) -> Option<usize> {
        self.polys.binary_search(g).ok()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order() + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `c_{gh}` as an exact fraction.
    pub fn overlap(&self, i: usize, j: usize) -> Ratio<i64> {
        Ratio::new(self.sums[i * self.order() + j], self.modulus.value() as i64)
    }

    /// `sigma_{2d}` read off the off-diagonal correlations.
    pub fn sigma(&self) -> i64 {
        let n = self.order();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.sums[i * n + j].abs())
            .max()
            .unwrap_or(0)
    }

    fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let n = self.order();
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.entries[i * n..(i + 1) * n]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigen {
    pub lambda_max: f64,
    pub iterations: usize,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Power iteration on `G - mu I` from the unit vector along `start`, stopping
/// once `||G v - lambda v|| <= EIGEN_TOLERANCE * lambda`.
fn power_iteration(g: &GramMatrix, start: Vec<f64>, shift: f64) -> Result<Eigen> {
    let n = g.order();
    let mut v = start;
    normalize(&mut v);
    let mut gv = vec![0.0; n];
    for it in 1..=EIGEN_MAX_ITERATIONS {
        g.matvec(&v, &mut gv);
        let lambda: f64 = gv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let residual = gv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= EIGEN_TOLERANCE * lambda.abs() {
            return Ok(Eigen {
                lambda_max: lambda,
                iterations: it,
            });
        }
        for (x, y) in v.iter_mut().zip(&gv) {
            *x = y - shift * *x;
        }
        normalize(&mut v);
    }
    Err(Error::NonConvergence(EIGEN_MAX_ITERATIONS))
}

/// Largest eigenvalue of the Gram matrix.
///
/// Iteration starts from the normalized all-ones vector. When some entry is
/// negative that vector can be an eigenvector for a smaller eigenvalue, so a
/// second deterministic start (a ramp) is also run and the larger result kept.
pub fn dominant_eigenvalue(g: &GramMatrix) -> Result<Eigen> {
    let n = g.order();
    let radius = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| g.entry(i, j).abs())
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    let shift = (1.0 - radius).max(0.0);
    let first = power_iteration(g, vec![1.0; n], shift)?;
    if g.entries.iter().all(|&e| e >= 0.0) {
        return Ok(first);
    }
    let ramp = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
    let second = power_iteration(g, ramp, shift)?;
    Ok(Eigen {
        lambda_max: first.lambda_max.max(second.lambda_max),
        iterations: first.iterations + second.iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub poly: MonicPoly,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmResult {
    pub k: u32,
    pub alpha: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    pub hidden: Option<MonicPoly>,
    /// One entry per candidate, canonical order; empty until a hidden
    /// polynomial is measured.
    pub outcomes: Vec<Outcome>,
    /// Probability of the residual outcome.
    pub residual: f64,
}

impl PovmResult {
    pub fn p_correct(&self) -> Option<f64> {
        let f = self.hidden.as_ref()?;
        self.outcomes
            .iter()
            .find(|o| &o.poly == f)
            .map(|o| o.probability)
    }

    /// Probability of a polynomial other than the hidden one.
    pub fn p_wrong(&self) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| Some(&o.poly) != self.hidden.as_ref())
            .map(|o| o.probability)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum::<f64>() + self.residual
    }

    /// Oracle queries used by the simulated procedure.
    pub fn queries(&self) -> u32 {
        self.k
    }
}

pub fn povm_alpha(g: &GramMatrix) -> Result<PovmResult> {
    let eig = dominant_eigenvalue(g)?;
    Ok(PovmResult {
        k: g.k,
        alpha: (1.0 - ALPHA_MARGIN) / eig.lambda_max,
        lambda_max: eig.lambda_max,
        iterations: eig.iterations,
        hidden: None,
        outcomes: Vec::new(),
        residual: 1.0,
    })
}

/// Outcome distribution when the hidden polynomial is `f`: `g` is observed
/// with probability `alpha c_{gf}^{2k}`.
pub fn distribution_for(g: &GramMatrix, povm: &PovmResult, f: &MonicPoly) -> Result<PovmResult> {
    let j = g.index_of(f).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{f} is not a square-free candidate of degree {}",
            g.degree
        ))
    })?;
    let outcomes: Vec<Outcome> = (0..g.order())
        .map(|i| Outcome {
            poly: g.polys[i].clone(),
            probability: povm.alpha * g.entry(i, j).powi(2),
        })
        .collect();
    let mass: f64 = outcomes.iter().map(|o| o.probability).sum();
    Ok(PovmResult {
        hidden: Some(f.clone()),
        outcomes,
        residual: 1.0 - mass,
        ..povm.clone()
    })
}

pub fn measurement_distribution(
    f: &MonicPoly,
    d: usize,
    k: u32,
    budget: Budget,
) -> Result<PovmResult> {
    if f.degree() != d {
        return Err(Error::InvalidArgument(format!(
            "hidden polynomial has degree {}, expected {d}",
            f.degree()
        )));
    }
    if !f.is_squarefree() {
        return Err(Error::NotSquareFree(f.to_string()));
    }
    let g = gram_matrix(f.modulus(), d, k, budget)?;
    let povm = povm_alpha(&g)?;
    distribution_for(&g, &povm, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn m(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    fn identity(n: usize) -> GramMatrix {
        let polys = (0..n as u64)
            .map(|s| MonicPoly::linear(m(101), s))
            .collect();
        let mut sums = vec![0; n * n];
        for i in 0..n {
            sums[i * n + i] = 101;
        }
        let entries = sums.iter().map(|&s| s as f64 / 101.0).collect();
        GramMatrix {
            modulus: m(101),
            degree: 1,
            k: 1,
            polys,
            sums,
            entries,
        }
    }

    fn min_eigenvalue(g: &GramMatrix) -> f64 {
        let n = g.order();
        DMatrix::from_row_slice(n, n, g.entries())
            .symmetric_eigenvalues()
            .min()
    }

    fn max_eigenvalue(g: &GramMatrix) -> f64 {
        let n = g.order();
        DMatrix::from_row_slice(n, n, g.entries())
            .symmetric_eigenvalues()
            .max()
    }

    #[test]
    fn state_of_x_mod_7() {
        let s = SignState::new(&MonicPoly::linear(m(7), 0)).unwrap();
        assert_eq!(s.signs(), &[1, 1, 1, -1, 1, -1, -1]);
        assert_eq!(s.norm_squared(), Ratio::from_integer(1));
        assert!((s.amplitude(3) + 1.0 / 7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rootless_state_matches_chi() {
        let g = MonicPoly::new(m(11), vec![1, 0]).unwrap(); // x^2 + 1, -1 is a non-residue mod 11
        let s = SignState::new(&g).unwrap();
        for x in 0..11 {
            assert_eq!(s.signs()[x as usize], m(11).legendre_raw(g.eval_raw(x)));
        }
        assert!(SignState::new(&MonicPoly::new(m(11), vec![1, 2]).unwrap()).is_err());
    }

    #[test]
    fn overlaps_p7() {
        let x = MonicPoly::linear(m(7), 0);
        let x1 = MonicPoly::linear(m(7), 1);
        assert_eq!(pair_overlap(&x, &x).unwrap(), Ratio::from_integer(1));
        assert_eq!(pair_overlap(&x, &x1).unwrap(), Ratio::new(-1, 7));
        let sigma = sigma_2d(m(7), 1, Budget::default()).unwrap();
        assert!(sigma <= 5);
        for a in 0..7 {
            for b in 0..7 {
                if a != b {
                    let c = pair_overlap(&MonicPoly::linear(m(7), a), &MonicPoly::linear(m(7), b))
                        .unwrap();
                    assert!(*c.numer() * c.numer().signum() <= sigma);
                }
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let b = Budget::default();
        for (p, d) in [(7u64, 1usize), (13, 1), (101, 1), (251, 1), (7, 2), (11, 2)] {
            let s = sigma_2d(m(p), d, b).unwrap();
            assert!(sigma_within_bound(s, p, d), "p={p} d={d} sigma={s}");
        }
        assert!(sigma_2d(m(13), 1, b).unwrap() <= 7);
        assert!(!sigma_within_bound(6, 7, 1));
        assert!(sigma_within_bound(5, 7, 1));
    }

    #[test]
    fn choose_k_examples() {
        assert_eq!(choose_k(1, 0.5).unwrap(), 8);
        assert_eq!(choose_k(1, 1.0).unwrap(), 4);
        assert_eq!(choose_k(2, 0.5).unwrap(), 12);
        assert_eq!(choose_k(1, 0.3).unwrap(), 14);
        assert_eq!(choose_k(1, 0.1).unwrap(), 40);
        assert!(choose_k(1, 0.0).is_err());
        assert!(choose_k(1, -1.0).is_err());
    }

    #[test]
    fn gram_entries() {
        let g = gram_matrix(m(7), 1, 2, Budget::default()).unwrap();
        assert_eq!(g.order(), 7);
        let x = g.index_of(&MonicPoly::linear(m(7), 0)).unwrap();
        let x1 = g.index_of(&MonicPoly::linear(m(7), 1)).unwrap();
        assert!((g.entry(x, x1) - 1.0 / 49.0).abs() < 1e-15);
        assert_eq!(g.overlap(x, x1).pow(2), Ratio::new(1, 49));
        for i in 0..7 {
            assert_eq!(g.entry(i, i), 1.0);
        }
        let g8 = gram_matrix(m(7), 1, 8, Budget::default()).unwrap();
        let cap = (g8.sigma() as f64 / 7.0).powi(8);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(g8.entry(i, j), g8.entry(j, i));
                if i != j {
                    assert!(g8.entry(i, j).abs() <= cap * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn gram_budget() {
        let err = gram_matrix(m(101), 2, 1, Budget::default()).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(gram_matrix(m(7), 1, 0, Budget::default()).is_err());
    }

    #[test]
    fn identity_gram_gives_unit_alpha() {
        for n in [1, 5] {
            let r = povm_alpha(&identity(n)).unwrap();
            assert!((r.lambda_max - 1.0).abs() < 1e-15);
            assert!((r.alpha - 1.0).abs() < 1e-11);
            assert!(r.alpha * r.lambda_max <= 1.0);
        }
    }

    #[test]
    fn eigenvalue_matches_dense_solver() {
        for (p, d, k) in [
            (7u64, 1usize, 1u32),
            (7, 1, 3),
            (13, 1, 2),
            (7, 2, 1),
            (11, 2, 3),
            (31, 1, 5),
        ] {
            let g = gram_matrix(m(p), d, k, Budget::default()).unwrap();
            let r = povm_alpha(&g).unwrap();
            let want = max_eigenvalue(&g);
            assert!(
                (r.lambda_max - want).abs() <= 1e-9 * want,
                "p={p} d={d} k={k}: {} vs {want}",
                r.lambda_max
            );
            assert!(min_eigenvalue(&g) >= -1e-9);
            assert!(r.alpha * r.lambda_max <= 1.0);
        }
    }

    #[test]
    fn p101_k6() {
        let f = MonicPoly::linear(m(101), 17);
        let r = measurement_distribution(&f, 1, 6, Budget::default()).unwrap();
        assert!(1.0 - r.alpha <= 10.0 / 101.0);
        assert!((r.p_correct().unwrap() - r.alpha).abs() < 1e-10);
        assert!((r.total() - 1.0).abs() < 1e-9);
        assert!(r.outcomes.iter().all(|o| o.probability >= -1e-12));
        assert!(r.residual >= -1e-12);
        let sigma = sigma_2d(m(101), 1, Budget::default()).unwrap() as f64;
        assert!(r.p_wrong() <= (sigma / 101.0).powi(12) * 101.0);
        assert_eq!(r.queries(), 6);
    }

    #[test]
    fn distribution_rejects_bad_hidden() {
        let b = Budget::default();
        assert!(
            measurement_distribution(&MonicPoly::new(m(7), vec![1, 2]).unwrap(), 2, 2, b).is_err()
        );
        assert!(measurement_distribution(&MonicPoly::linear(m(7), 1), 2, 2, b).is_err());
    }
}
