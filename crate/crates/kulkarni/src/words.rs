//! Reduced-word enumeration over a finite generating set with projective
//! deduplication of the resulting group elements.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projective::{Cpx, MobiusMap, ProjTransform, TAU_CMP};

/// Default cap on the number of distinct elements.
pub const DEFAULT_BUDGET: usize = 1_000_000;
/// Cell size for hashing canonical keys.
const CELL: f64 = 1e-7;

/// A group element with a canonical projective key.
pub trait GroupElement: Clone + Send + Sync {
    fn identity() -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;
    /// Entries of the lift after scaling to unit Frobenius norm and rotating
    /// the first entry of (nearly) maximal modulus to the positive real axis,
    /// flattened as `re, im` pairs and followed by the logarithm of the norm of
    /// the unimodular lift. Equal projective classes give equal keys.
    fn key(&self) -> Vec<f64>;
}

fn canonical_key(entries: &[Cpx]) -> Vec<f64> {
    let n = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let max = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = entries.iter().position(|z| z.norm() >= (1.0 - 1e-6) * max).unwrap_or(0);
    let phase = entries[pivot].conj() / entries[pivot].norm();
    // the norm of the unimodular lift separates powers of a loxodromic
    // element, whose normalized entries converge
    let mut key: Vec<f64> = entries
        .iter()
        .flat_map(|z| {
            // structured matrices have many exact zeros; rounding noise
            // around them would otherwise straddle cell boundaries
            let w = z * phase / n;
            let flush = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
            [flush(w.re), flush(w.im)]
        })
        .collect();
    key.push(n.ln());
    key
}

impl GroupElement for ProjTransform {
    fn identity() -> Self {
        ProjTransform::identity()
    }
    fn mul(&self, rhs: &Self) -> Self {
        self.compose(rhs)
    }
    fn inverse(&self) -> Self {
        ProjTransform::inverse(self)
    }
    fn key(&self) -> Vec<f64> {
        canonical_key(self.lift().as_slice())
    }
}

impl GroupElement for MobiusMap {
    fn identity() -> Self {
        MobiusMap::identity()
    }
    fn mul(&self, rhs: &Self) -> Self {
        self.compose(rhs)
    }
    fn inverse(&self) -> Self {
        MobiusMap::inverse(self)
    }
    fn key(&self) -> Vec<f64> {
        canonical_key(self.lift().as_slice())
    }
}

/// A signed generator: `(index, +1 | -1)`.
pub type Letter = (usize, i8);

/// A word in the generators, read left to right as a matrix product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Self { letters: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// No letter is followed by its inverse.
    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| !(w[0].0 == w[1].0 && w[0].1 == -w[1].1))
    }

    /// Free reduction.
    pub fn reduced(&self) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            match out.last() {
                Some(&(g, e)) if g == l.0 && e == -l.1 => {
                    out.pop();
                }
                _ => out.push(l),
            }
        }
        Self { letters: out }
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self { letters: self.letters.iter().chain(&other.letters).copied().collect() }
    }

    pub fn inverse(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|&(g, e)| (g, -e)).collect() }
    }

    /// Product of the generators along the word.
    pub fn evaluate<T: GroupElement>(&self, gens: &[T]) -> T {
        let mut acc = T::identity();
        for &(g, e) in &self.letters {
            acc = if e > 0 { acc.mul(&gens[g]) } else { acc.mul(&gens[g].inverse()) };
        }
        acc
    }

    /// Readable form such as `M1 Meps^-1`.
    pub fn display(&self, names: &[String]) -> String {
        if self.letters.is_empty() {
            return "id".to_string();
        }
        self.letters
            .iter()
            .map(|&(g, e)| if e > 0 { names[g].clone() } else { format!("{}^-1", names[g]) })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// An enumerated element with the word that produced it and its inverse
/// (carried along so that long words are never inverted numerically).
#[derive(Debug, Clone)]
pub struct Enumerated<T> {
    pub word: Word,
    pub element: T,
    pub inverse: T,
}

/// Hash set over canonical keys with a tolerant re-check.
pub struct DedupSet {
    cells: HashMap<Vec<i64>, Vec<usize>>,
    keys: Vec<Vec<f64>>,
    tol: f64,
}

impl Default for DedupSet {
    fn default() -> Self {
        Self::new(TAU_CMP)
    }
}

impl DedupSet {
    pub fn new(tol: f64) -> Self {
        Self { cells: HashMap::new(), keys: Vec::new(), tol }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn cell(key: &[f64]) -> Vec<i64> {
        key.iter().map(|x| (x / CELL).floor() as i64).collect()
    }

    /// Cells to probe: the key's own cell plus neighbours along coordinates
    /// lying close to a cell boundary (at most six such coordinates).
    fn probes(key: &[f64]) -> Vec<Vec<i64>> {
        let base = Self::cell(key);
        let mut out = vec![base.clone()];
        let mut near = 0;
        for (i, x) in key.iter().enumerate() {
            let frac = x / CELL - (x / CELL).floor();
            let shift = if frac < 0.01 {
                -1
            } else if frac > 0.99 {
                1
            } else {
                continue;
            };
            near += 1;
            if near > 6 {
                break;
            }
            let extra: Vec<Vec<i64>> = out
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c[i] += shift;
                    c
                })
                .collect();
            out.extend(extra);
        }
        out
    }

    /// Index of an equal key already present.
    pub fn find(&self, key: &[f64]) -> Option<usize> {
        for probe in Self::probes(key) {
            if let Some(list) = self.cells.get(&probe) {
                for &i in list {
                    let d = self.keys[i].iter().zip(key).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if d <= self.tol {
                        return Some(i);
                    }
                }
            }
        }
        None
    }

    /// Inserts the key; returns `false` if an equal one was present.
    pub fn insert(&mut self, key: Vec<f64>) -> bool {
        if self.find(&key).is_some() {
            return false;
        }
        let idx = self.keys.len();
        self.cells.entry(Self::cell(&key)).or_default().push(idx);
        self.keys.push(key);
        true
    }
}

/// All distinct elements given by reduced words of length at most
/// `max_len`, ordered by length and then lexicographically by letters
/// (generator `i` before its inverse, before generator `i + 1`). A word
/// equal to an earlier element is dropped and not extended further.
pub fn enumerate_words<T: GroupElement>(gens: &[T], max_len: usize, budget: usize) -> Result<Vec<Enumerated<T>>> {
    let letters: Vec<(Letter, T, T)> = gens
        .iter()
        .enumerate()
        .flat_map(|(i, g)| {
            let inv = g.inverse();
            [((i, 1i8), g.clone(), inv.clone()), ((i, -1i8), inv, g.clone())]
        })
        .collect();
    let id = T::identity();
    let mut seen = DedupSet::default();
    seen.insert(id.key());
    let mut out = vec![Enumerated { word: Word::empty(), element: id.clone(), inverse: id }];
    let mut frontier: Vec<usize> = vec![0];
    for _ in 0..max_len {
        let candidates: Vec<(usize, usize)> = frontier
            .iter()
            .flat_map(|&p| {
                let last = out[p].word.letters.last().copied();
                letters
                    .iter()
                    .enumerate()
                    .filter(move |(_, (l, _, _))| last.map_or(true, |(g, e)| !(g == l.0 && e == -l.1)))
                    .map(move |(k, _)| (p, k))
            })
            .collect();
        let products: Vec<(T, T, Vec<f64>)> = candidates
            .par_iter()
            .map(|&(p, k)| {
                let (_, g, ginv) = &letters[k];
                let e = out[p].element.mul(g);
                let inv = ginv.mul(&out[p].inverse);
                let key = e.key();
                (e, inv, key)
            })
            .collect();
        let mut next = Vec::new();
        for ((p, k), (e, inv, key)) in candidates.into_iter().zip(products) {
            if seen.insert(key) {
                if seen.len() > budget {
                    return Err(Error::BudgetExceeded(budget));
                }
                let mut word = out[p].word.clone();
                word.letters.push(letters[k].0);
                next.push(out.len());
                out.push(Enumerated { word, element: e, inverse: inv });
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::{cx, ONE};

    #[test]
    fn cyclic_counts() {
        let g = ProjTransform::diag(cx(0.5, 0.0), ONE, cx(2.0, 0.0)).unwrap();
        let all = enumerate_words(&[g], 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(all.len(), 11);
        assert!(all[0].word.is_empty());
        assert_eq!(all[1].word.letters, vec![(0, 1)]);
        assert_eq!(all[2].word.letters, vec![(0, -1)]);
    }

    #[test]
    fn finite_cyclic_collapses() {
        let b = ProjTransform::from_real_rows([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let all = enumerate_words(&[b], 6, DEFAULT_BUDGET).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn free_group_count() {
        let a = MobiusMap::from_coeffs(cx(1.0, 0.0), cx(2.0, 0.0), ZERO_C, ONE).unwrap();
        let b = MobiusMap::from_coeffs(ONE, ZERO_C, cx(2.0, 0.0), ONE).unwrap();
        for l in 1..=5 {
            let all = enumerate_words(&[a, b], l, DEFAULT_BUDGET).unwrap();
            assert_eq!(all.len(), 2 * 3usize.pow(l as u32) - 1);
        }
    }

    const ZERO_C: Cpx = Cpx::new(0.0, 0.0);

    #[test]
    fn budget() {
        let a = MobiusMap::from_coeffs(cx(1.0, 0.0), cx(2.0, 0.0), ZERO_C, ONE).unwrap();
        let b = MobiusMap::from_coeffs(ONE, ZERO_C, cx(2.0, 0.0), ONE).unwrap();
        assert_eq!(enumerate_words(&[a, b], 6, 100).unwrap_err(), Error::BudgetExceeded(100));
    }

    #[test]
    fn inverses_carried() {
        let a = MobiusMap::from_coeffs(cx(1.0, 1.0), cx(2.0, 0.0), cx(0.3, 0.0), ONE).unwrap();
        let b = MobiusMap::from_coeffs(ONE, cx(0.0, 0.5), cx(2.0, 0.0), ONE).unwrap();
        for e in enumerate_words(&[a, b], 4, DEFAULT_BUDGET).unwrap() {
            assert!(e.element.compose(&e.inverse).is_identity(1e-9));
            assert!(e.word.evaluate(&[a, b]).proj_eq(&e.element, 1e-12));
        }
    }

    #[test]
    fn word_reduction() {
        let w = Word { letters: vec![(0, 1), (1, 1), (1, -1), (0, 1)] };
        assert!(!w.is_reduced());
        assert_eq!(w.reduced().letters, vec![(0, 1), (0, 1)]);
        assert_eq!(w.concat(&w.inverse()).reduced(), Word::empty());
    }
}
