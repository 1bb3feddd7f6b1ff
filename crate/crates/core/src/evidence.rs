//! Odds, log-odds and weight-of-evidence calculus, revealed relations and
//! the duality between psychometric preferences and preference intensity.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::choice::{TimeGrid, TimePoint};
use crate::dataset::ChoiceDataset;
use crate::error::{Error, Result};
use crate::softmax::SoftmaxParams;

/// Anything that yields binary log-odds `ℓ_t(a, b)`.
pub trait EvidenceSource {
    fn universe_size(&self) -> usize;

    fn time_grid(&self) -> &TimeGrid;

    fn log_odds(&self, t: TimePoint, a: usize, b: usize) -> Result<f64>;

    /// Weight of evidence `w_t(a,b) = ℓ_t(a,b) − ℓ_0(a,b)`.
    fn weight(&self, t: TimePoint, a: usize, b: usize) -> Result<f64> {
        Ok(self.log_odds(t, a, b)? - self.log_odds(TimePoint::Zero, a, b)?)
    }
}

impl EvidenceSource for ChoiceDataset {
    fn universe_size(&self) -> usize {
        self.universe().len()
    }

    fn time_grid(&self) -> &TimeGrid {
        self.grid()
    }

    fn log_odds(&self, t: TimePoint, a: usize, b: usize) -> Result<f64> {
        ChoiceDataset::log_odds(self, t, a, b)
    }
}

impl EvidenceSource for SoftmaxParams {
    fn universe_size(&self) -> usize {
        self.len()
    }

    fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn log_odds(&self, t: TimePoint, a: usize, b: usize) -> Result<f64> {
        self.grid.check(t)?;
        Ok(self.score(t, a) - self.score(t, b))
    }

    fn weight(&self, t: TimePoint, a: usize, b: usize) -> Result<f64> {
        self.grid.check(t)?;
        Ok(SoftmaxParams::weight(self, t, a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvidenceStats {
    pub odds: f64,
    pub log_odds: f64,
    pub strength: f64,
    pub weight: f64,
    pub easiness: f64,
}

pub fn evidence_stats<S: EvidenceSource + ?Sized>(
    source: &S,
    t: TimePoint,
    a: usize,
    b: usize,
) -> Result<EvidenceStats> {
    if a == b {
        return Err(Error::invalid("evidence needs two distinct alternatives"));
    }
    let log_odds = source.log_odds(t, a, b)?;
    let weight = source.weight(t, a, b)?;
    Ok(EvidenceStats {
        odds: log_odds.exp(),
        log_odds,
        strength: weight.exp(),
        weight,
        easiness: weight.abs(),
    })
}

/// Weight-of-evidence matrix at `t`; the diagonal is zero.
pub fn weight_matrix<S: EvidenceSource + ?Sized>(source: &S, t: TimePoint) -> Result<Vec<Vec<f64>>> {
    let n = source.universe_size();
    let mut w = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                w[a][b] = source.weight(t, a, b)?;
            }
        }
    }
    Ok(w)
}

pub type OrderedPair = (usize, usize);

/// Unordered pair stored as `(min, max)`.
pub type UnorderedPair = (usize, usize);

pub fn unordered(a: usize, b: usize) -> UnorderedPair {
    (a.min(b), a.max(b))
}

/// Revealed preference `≻`, intensity `≻♮` and ease `≻*` over a finite universe.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RevealedRelations {
    pub size: usize,
    pub pref: BTreeSet<OrderedPair>,
    pub intensity: BTreeSet<(OrderedPair, OrderedPair)>,
    pub ease: BTreeSet<(UnorderedPair, UnorderedPair)>,
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = OrderedPair> + Clone {
    (0..n).flat_map(move |a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
}

fn unordered_pairs(n: usize) -> impl Iterator<Item = UnorderedPair> + Clone {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
}

impl RevealedRelations {
    /// Relations represented by the function `v` (psychometric preferences and
    /// preference intensity).
    pub fn represented_by(v: &[f64]) -> Self {
        let w: Vec<Vec<f64>> = v.iter().map(|x| v.iter().map(|y| x - y).collect()).collect();
        Self::from_weights(&w)
    }

    /// Strict comparisons on the given weights, with no tolerance.
    pub fn from_weights(w: &[Vec<f64>]) -> Self {
        let n = w.len();
        let pref = ordered_pairs(n).filter(|&(a, b)| w[a][b] > 0.0).collect();
        let mut intensity = BTreeSet::new();
        for (a, b) in ordered_pairs(n) {
            for (c, d) in ordered_pairs(n) {
                if w[a][b] > w[c][d] {
                    intensity.insert(((a, b), (c, d)));
                }
            }
        }
        let mut ease = BTreeSet::new();
        for (a, b) in unordered_pairs(n) {
            for (c, d) in unordered_pairs(n) {
                if w[a][b].abs() > w[c][d].abs() {
                    ease.insert(((a, b), (c, d)));
                }
            }
        }
        RevealedRelations {
            size: n,
            pref,
            intensity,
            ease,
        }
    }
}

pub fn revealed_relations<S: EvidenceSource + ?Sized>(
    source: &S,
    t: TimePoint,
) -> Result<RevealedRelations> {
    Ok(RevealedRelations::from_weights(&weight_matrix(source, t)?))
}

/// Preference intensity derived from psychometric preferences `(≻, ≻*)`:
/// `(a,b) ≻♮ (c,d)` iff
/// (i) `a ⪰ b`, `c ⪰ d` and `{a,b} ≻* {c,d}`, or
/// (ii) `a ≻ b` and `d ≻ c`, or
/// (iii) `b ⪰ a`, `d ⪰ c` and `{c,d} ≻* {a,b}`.
pub fn duality_map(
    size: usize,
    pref: &BTreeSet<OrderedPair>,
    ease: &BTreeSet<(UnorderedPair, UnorderedPair)>,
) -> BTreeSet<(OrderedPair, OrderedPair)> {
    let strict = |x: usize, y: usize| pref.contains(&(x, y));
    let weak = |x: usize, y: usize| !strict(y, x);
    let easier = |p: OrderedPair, q: OrderedPair| {
        ease.contains(&(unordered(p.0, p.1), unordered(q.0, q.1)))
    };
    let mut intensity = BTreeSet::new();
    for (a, b) in ordered_pairs(size) {
        for (c, d) in ordered_pairs(size) {
            let holds = (weak(a, b) && weak(c, d) && easier((a, b), (c, d)))
                || (strict(a, b) && strict(d, c))
                || (weak(b, a) && weak(d, c) && easier((c, d), (a, b)));
            if holds {
                intensity.insert(((a, b), (c, d)));
            }
        }
    }
    intensity
}

/// Psychometric preferences derived from a preference intensity:
/// `a ≻ b` iff `(a,c) ≻♮ (b,c)` for every `c ∉ {a, b}`, and
/// `{a,b} ≻* {c,d}` iff `(a∨b, a∧b) ≻♮ (c∨d, c∧d)`.
pub fn duality_inverse(
    size: usize,
    intensity: &BTreeSet<(OrderedPair, OrderedPair)>,
) -> Result<(BTreeSet<OrderedPair>, BTreeSet<(UnorderedPair, UnorderedPair)>)> {
    if size < 3 {
        return Err(Error::UnsupportedSize(size));
    }
    let pref: BTreeSet<OrderedPair> = ordered_pairs(size)
        .filter(|&(a, b)| {
            (0..size)
                .filter(|&c| c != a && c != b)
                .all(|c| intensity.contains(&((a, c), (b, c))))
        })
        .collect();
    // max first; when neither is strictly preferred either orientation works
    let oriented = |(x, y): UnorderedPair| if pref.contains(&(y, x)) { (y, x) } else { (x, y) };
    let mut ease = BTreeSet::new();
    for p in unordered_pairs(size) {
        for q in unordered_pairs(size) {
            if intensity.contains(&(oriented(p), oriented(q))) {
                ease.insert((p, q));
            }
        }
    }
    Ok((pref, ease))
}
