//! Correlation scans over a whole monic space.
//!
//! Candidates are split as `g = h + s_0` where `h` carries the top
//! coefficients. Values of `h` over the window are computed once per group of
//! `p` consecutive candidates, after which every shift `s_0` costs one addition
//! and one table lookup per point. Chunks are fixed-size and merged in index
//! order, so results do not depend on the number of worker threads.

use rayon::prelude::*;

use crate::ffield::CharTable;
use crate::poly::{MonicPoly, MonicSpace};

const CHUNK: u64 = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Character {
    /// chi, zero at zero.
    Plain,
    /// chi with the value at zero patched to 1.
    Patched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Best {
    pub index: u64,
    pub score: i64,
    pub ties: u64,
}

impl Best {
    fn merge(a: Option<Best>, b: Option<Best>) -> Option<Best> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(match a.score.cmp(&b.score) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => Best {
                    index: a.index.min(b.index),
                    score: a.score,
                    ties: a.ties + b.ties,
                },
            }),
        }
    }
}

pub(crate) struct Scanner<'a> {
    space: MonicSpace,
    chi: &'a CharTable,
    character: Character,
    squarefree_only: bool,
    /// `chi` over `[0, 2p)` by residue; lets degree 1 read contiguous slices.
    doubled: Option<Vec<i8>>,
}

impl<'a> Scanner<'a> {
    pub fn new(
        space: MonicSpace,
        chi: &'a CharTable,
        character: Character,
        squarefree_only: bool,
    ) -> Self {
        let p = space.modulus().value();
        let doubled = (space.degree() == 1 && chi.table().is_some()).then(|| {
            (0..2 * p)
                .map(|v| Self::char_of(chi, character, v % p))
                .collect()
        });
        Scanner {
            space,
            chi,
            character,
            squarefree_only,
            doubled,
        }
    }

    #[inline]
    fn char_of(chi: &CharTable, character: Character, v: u64) -> i8 {
        match character {
            Character::Plain => chi.chi(v),
            Character::Patched => chi.chi_ext(v),
        }
    }

    #[inline]
    pub fn character_value(&self, v: u64) -> i8 {
        Self::char_of(self.chi, self.character, v)
    }

    /// Square-freeness of the candidate at `index`.
    fn admissible(&self, index: u64) -> bool {
        if !self.squarefree_only {
            return true;
        }
        let m = self.space.modulus();
        let p = m.value();
        match self.space.degree() {
            1 => true,
            2 => {
                let (s0, s1) = (index % p, index / p);
                let disc = m.sub_raw(m.mul_raw(s1, s1), m.mul_raw(4 % p, s0));
                disc != 0
            }
            _ => self.space.poly_at(index).is_squarefree(),
        }
    }

    /// Values of `h(x) = g(x) - s_0` at `x = 1..=window` for the group of `index`.
    fn group_values(&self, group: u64, window: usize) -> Vec<u64> {
        let m = self.space.modulus();
        let p = m.value();
        let d = self.space.degree();
        let mut top = Vec::with_capacity(d - 1);
        let mut rest = group;
        for _ in 1..d {
            top.push(rest % p);
            rest /= p;
        }
        // top = (s_1, ..., s_{d-1})
        (1..=window as u64)
            .map(|x| {
                let x = x % p;
                let mut acc = 1u64;
                for &c in top.iter().rev() {
                    acc = m.add_raw(m.mul_raw(acc, x), c);
                }
                m.mul_raw(acc, x)
            })
            .collect()
    }

    fn chunk_scores(&self, start: u64, end: u64, weights: &[i8], mut emit: impl FnMut(u64, i64)) {
        let m = self.space.modulus();
        let p = m.value();
        let window = weights.len();
        debug_assert!(window as u64 <= p, "window longer than the field");
        if let Some(doubled) = &self.doubled {
            for s0 in start..end {
                let slice = &doubled[(s0 as usize + 1)..(s0 as usize + 1 + window)];
                let score: i32 = slice
                    .iter()
                    .zip(weights)
                    .map(|(&c, &w)| (c as i32) * (w as i32))
                    .sum();
                emit(s0, score as i64);
            }
            return;
        }
        let mut group = u64::MAX;
        let mut h = Vec::new();
        for index in start..end {
            if !self.admissible(index) {
                continue;
            }
            if index / p != group {
                group = index / p;
                h = self.group_values(group, window);
            }
            let s0 = index % p;
            let mut score = 0i64;
            for (&hv, &w) in h.iter().zip(weights) {
                score += (self.character_value(m.add_raw(hv, s0)) * w) as i64;
            }
            emit(index, score);
        }
    }

    fn chunks(&self) -> impl IndexedParallelIterator<Item = (u64, u64)> {
        let len = self.space.len();
        let n = len.div_ceil(CHUNK);
        (0..n as usize)
            .into_par_iter()
            .map(move |c| (c as u64 * CHUNK, ((c as u64 + 1) * CHUNK).min(len)))
    }

    /// `(index, score)` for every admissible candidate whose score passes `keep`,
    /// where the score is `sum_{x=1}^{W} weights[x-1] * char(g(x))`.
    pub fn filter<F>(&self, weights: &[i8], keep: F) -> Vec<(u64, i64)>
    where
        F: Fn(i64) -> bool + Sync,
    {
        let parts: Vec<Vec<(u64, i64)>> = self
            .chunks()
            .map(|(a, b)| {
                let mut out = Vec::new();
                self.chunk_scores(a, b, weights, |i, s| {
                    if keep(s) {
                        out.push((i, s));
                    }
                });
                out
            })
            .collect();
        parts.into_iter().flatten().collect()
    }

    /// Highest score, lowest index among ties, and the number of ties.
    pub fn argmax(&self, weights: &[i8]) -> Option<Best> {
        self.chunks()
            .map(|(a, b)| {
                let mut best = None;
                self.chunk_scores(a, b, weights, |i, s| {
                    best = Best::merge(
                        best,
                        Some(Best {
                            index: i,
                            score: s,
                            ties: 1,
                        }),
                    );
                });
                best
            })
            .reduce(|| None, Best::merge)
    }

    /// Visits every admissible candidate's score in index order.
    #[cfg(test)]
    pub fn for_each_score(&self, weights: &[i8], mut f: impl FnMut(u64, i64)) {
        let parts: Vec<Vec<(u64, i64)>> = self
            .chunks()
            .map(|(a, b)| {
                let mut out = Vec::with_capacity((b - a) as usize);
                self.chunk_scores(a, b, weights, |i, s| out.push((i, s)));
                out
            })
            .collect();
        for (i, s) in parts.into_iter().flatten() {
            f(i, s);
        }
    }

    /// Folds scores chunk by chunk, then merges chunk results in index order.
    pub fn fold<T, I, F, M>(&self, weights: &[i8], init: I, fold: F, merge: M) -> T
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, u64, i64) + Sync,
        M: Fn(T, T) -> T,
    {
        let parts: Vec<T> = self
            .chunks()
            .map(|(a, b)| {
                let mut acc = init();
                self.chunk_scores(a, b, weights, |i, s| fold(&mut acc, i, s));
                acc
            })
            .collect();
        parts.into_iter().fold(init(), merge)
    }

    /// Scores of explicitly listed candidates.
    pub fn scores_of(&self, polys: &[MonicPoly], weights: &[i8]) -> Vec<i64> {
        let p = self.space.modulus().value();
        polys
            .par_iter()
            .map(|g| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| {
                        (self.character_value(g.eval_raw((k as u64 + 1) % p)) * w) as i64
                    })
                    .sum()
            })
            .collect()
    }

    /// Character values `char(g(x))`, `x = 1..=window`, for every candidate,
    /// row-major in index order. Non-admissible rows are omitted.
    pub fn char_rows(&self, window: usize) -> (Vec<u64>, Vec<i8>) {
        let m = self.space.modulus();
        let p = m.value();
        let parts: Vec<(Vec<u64>, Vec<i8>)> = self
            .chunks()
            .map(|(a, b)| {
                let mut idx = Vec::new();
                let mut rows = Vec::new();
                let mut group = u64::MAX;
                let mut h = Vec::new();
                for index in a..b {
                    if !self.admissible(index) {
                        continue;
                    }
                    if index / p != group {
                        group = index / p;
                        h = self.group_values(group, window);
                    }
                    let s0 = index % p;
                    idx.push(index);
                    rows.extend(h.iter().map(|&hv| self.character_value(m.add_raw(hv, s0))));
                }
                (idx, rows)
            })
            .collect();
        let mut idx = Vec::new();
        let mut rows = Vec::new();
        for (i, r) in parts {
            idx.extend(i);
            rows.extend(r);
        }
        (idx, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::PrimeModulus;
    use crate::Budget;

    fn naive(g: &MonicPoly, weights: &[i8], chi: &CharTable, c: Character) -> i64 {
        let p = g.modulus().value();
        weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let v = g.eval_raw((k as u64 + 1) % p);
                let c = match c {
                    Character::Plain => chi.chi(v),
                    Character::Patched => chi.chi_ext(v),
                };
                (c * w) as i64
            })
            .sum()
    }

    #[test]
    fn shift_scan_matches_horner_evaluation() {
        for (q, d) in [(7u64, 1usize), (11, 1), (7, 2), (5, 3), (13, 2)] {
            let m = PrimeModulus::new(q).unwrap();
            let chi = CharTable::new(m);
            let space = MonicSpace::new(m, d, Budget::default()).unwrap();
            for c in [Character::Plain, Character::Patched] {
                for sf in [false, true] {
                    for window in [1usize, 3, q as usize] {
                        let weights: Vec<i8> =
                            (0..window).map(|k| [1i8, -1, 0][(k * 7 + 1) % 3]).collect();
                        let scanner = Scanner::new(space, &chi, c, sf);
                        let mut got = Vec::new();
                        scanner.for_each_score(&weights, |i, s| got.push((i, s)));
                        let want: Vec<(u64, i64)> = space
                            .iter()
                            .enumerate()
                            .filter(|(_, g)| !sf || g.is_squarefree())
                            .map(|(i, g)| (i as u64, naive(&g, &weights, &chi, c)))
                            .collect();
                        assert_eq!(got, want, "p={q} d={d} {c:?} sf={sf} w={window}");
                        let polys: Vec<_> = want.iter().map(|&(i, _)| space.poly_at(i)).collect();
                        let direct = scanner.scores_of(&polys, &weights);
                        assert_eq!(direct, want.iter().map(|w| w.1).collect::<Vec<_>>());
                        let best = scanner.argmax(&weights).unwrap();
                        let top = want.iter().map(|w| w.1).max().unwrap();
                        assert_eq!(best.score, top);
                        assert_eq!(best.index, want.iter().find(|w| w.1 == top).unwrap().0);
                        assert_eq!(
                            best.ties as usize,
                            want.iter().filter(|w| w.1 == top).count()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn char_rows_layout() {
        let m = PrimeModulus::new(7).unwrap();
        let chi = CharTable::new(m);
        let space = MonicSpace::new(m, 2, Budget::default()).unwrap();
        let scanner = Scanner::new(space, &chi, Character::Plain, true);
        let (idx, rows) = scanner.char_rows(4);
        assert_eq!(idx.len(), 42);
        assert_eq!(rows.len(), 42 * 4);
        for (r, &i) in idx.iter().enumerate() {
            let g = space.poly_at(i);
            for x in 1..=4u64 {
                assert_eq!(rows[r * 4 + x as usize - 1], chi.chi(g.eval_raw(x)));
            }
        }
    }
}
