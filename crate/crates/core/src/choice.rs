//! Finite universes, menus, deadline grids and choice distributions.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of distinct alternative labels. Alternatives are referred to by
/// their position in this list everywhere else in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Universe {
    labels: Vec<String>,
}

impl Universe {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::invalid(format!(
                "a universe needs at least 2 alternatives, got {}",
                labels.len()
            )));
        }
        let mut seen = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::invalid(format!(
                    "duplicate label {l:?} at positions {j} and {i}"
                )));
            }
        }
        Ok(Universe { labels })
    }

    /// Universe labelled `0, 1, ..., n-1`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn full_menu(&self) -> Menu {
        Menu((0..self.len()).collect())
    }
}

impl TryFrom<Vec<String>> for Universe {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Universe::new(v)
    }
}

impl From<Universe> for Vec<String> {
    fn from(u: Universe) -> Self {
        u.labels
    }
}

/// Nonempty set of alternatives, stored sorted by universe position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Menu(Vec<usize>);

impl Menu {
    pub fn new(mut members: Vec<usize>, universe_size: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("menus must be nonempty"));
        }
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate alternative {} in menu", w[0])));
        }
        if let Some(&m) = members.last().filter(|&&m| m >= universe_size) {
            return Err(Error::invalid(format!(
                "alternative {m} outside a universe of size {universe_size}"
            )));
        }
        Ok(Menu(members))
    }

    pub fn pair(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b);
        Menu(if a < b { vec![a, b] } else { vec![b, a] })
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    pub fn position(&self, a: usize) -> Result<usize> {
        self.0.binary_search(&a).map_err(|_| Error::NotInMenu(a))
    }
}

/// Every menu with at least two members, in size-then-lexicographic order.
pub fn all_menus(n: usize) -> Vec<Menu> {
    let mut menus: Vec<Menu> = (0u64..(1u64 << n))
        .filter(|mask| mask.count_ones() >= 2)
        .map(|mask| Menu((0..n).filter(|i| mask >> i & 1 == 1).collect()))
        .collect();
    menus.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    menus
}

pub fn binary_menus(n: usize) -> Vec<Menu> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            out.push(Menu(vec![a, b]));
        }
    }
    out
}

/// Probability distribution over the members of a menu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDistribution {
    menu: Menu,
    probs: Vec<f64>,
}

pub const NORMALIZATION_TOL: f64 = 1e-12;

impl ChoiceDistribution {
    pub fn new(menu: Menu, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != menu.len() {
            return Err(Error::invalid(format!(
                "{} probabilities for a menu of {} alternatives",
                probs.len(),
                menu.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ChoiceDistribution { menu, probs })
    }

    /// Normalizes nonnegative weights. Used for frequencies and for the
    /// max-shifted exponentials of softmax-type formulas.
    pub fn from_weights(menu: Menu, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.len() != menu.len() || !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("weights must be nonnegative with a positive sum"));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(ChoiceDistribution { menu, probs })
    }

    /// Distribution proportional to `exp(scores)`, computed with the maximum
    /// subtracted first.
    pub fn from_log_weights(menu: Menu, scores: &[f64]) -> Result<Self> {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::invalid("log-weights must be finite"));
        }
        let weights = scores.iter().map(|s| (s - max).exp()).collect();
        Self::from_weights(menu, weights)
    }

    pub fn menu(&self) -> &Menu {
        &self.menu
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: usize) -> Result<f64> {
        Ok(self.probs[self.menu.position(a)?])
    }

    /// Probability of `a`, zero outside the menu.
    pub fn mass(&self, a: usize) -> f64 {
        self.menu.position(a).map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.menu.members().iter().copied().zip(self.probs.iter().copied())
    }

    /// Total variation distance, treating both as distributions on the union
    /// of their menus.
    pub fn total_variation(&self, other: &ChoiceDistribution) -> f64 {
        let mut sum = 0.0;
        for (a, p) in self.iter() {
            sum += (p - other.mass(a)).abs();
        }
        for (a, q) in other.iter() {
            if !self.menu.contains(a) {
                sum += q;
            }
        }
        0.5 * sum
    }
}

/// A point of `T₀ = {0} ∪ T`: either the zero point or the i-th deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimePoint {
    Zero,
    Deadline(usize),
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::Zero => write!(f, "0"),
            TimePoint::Deadline(i) => write!(f, "T[{i}]"),
        }
    }
}

/// Deadline grid `T`. When `ordered` is false the grid is treated as an
/// abstract index set and "s > t" comparisons become "s ≠ t".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    deadlines: Vec<f64>,
    #[serde(default = "default_true")]
    ordered: bool,
}

fn default_true() -> bool {
    true
}

impl TimeGrid {
    pub fn new(deadlines: Vec<f64>) -> Result<Self> {
        Self::build(deadlines, true)
    }

    pub fn unordered(deadlines: Vec<f64>) -> Result<Self> {
        Self::build(deadlines, false)
    }

    fn build(deadlines: Vec<f64>, ordered: bool) -> Result<Self> {
        if deadlines.is_empty() {
            return Err(Error::invalid("the deadline grid must be nonempty"));
        }
        if let Some(t) = deadlines.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::invalid(format!("deadline {t} is not a positive real")));
        }
        if ordered {
            if deadlines.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("deadlines must be strictly increasing"));
            }
        } else {
            for (i, t) in deadlines.iter().enumerate() {
                if deadlines[..i].contains(t) {
                    return Err(Error::invalid(format!("deadline {t} repeated")));
                }
            }
        }
        Ok(TimeGrid { deadlines, ordered })
    }

    pub fn deadlines(&self) -> &[f64] {
        &self.deadlines
    }

    pub fn len(&self) -> usize {
        self.deadlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deadlines.is_empty()
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    pub fn value(&self, t: TimePoint) -> f64 {
        match t {
            TimePoint::Zero => 0.0,
            TimePoint::Deadline(i) => self.deadlines[i],
        }
    }

    /// Looks up a time value; `0` maps to the zero point.
    pub fn point(&self, value: f64) -> Result<TimePoint> {
        if value == 0.0 {
            return Ok(TimePoint::Zero);
        }
        self.deadlines
            .iter()
            .position(|&t| t == value)
            .map(TimePoint::Deadline)
            .ok_or_else(|| Error::UnknownTime(value.to_string()))
    }

    pub fn check(&self, t: TimePoint) -> Result<()> {
        match t {
            TimePoint::Deadline(i) if i >= self.deadlines.len() => {
                Err(Error::UnknownTime(t.to_string()))
            }
            _ => Ok(()),
        }
    }

    /// All points of `T₀`, zero first.
    pub fn points(&self) -> impl Iterator<Item = TimePoint> {
        std::iter::once(TimePoint::Zero).chain(self.deadline_points())
    }

    pub fn deadline_points(&self) -> impl Iterator<Item = TimePoint> {
        (0..self.deadlines.len()).map(TimePoint::Deadline)
    }

    /// Index pairs `(t, s)` of deadlines with `s > t`, or `s ≠ t` on an
    /// unordered grid.
    pub fn later_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.deadlines.len();
        let mut out = Vec::new();
        for t in 0..n {
            for s in 0..n {
                let later = if self.ordered { s > t } else { s != t };
                if later {
                    out.push((t, s));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universe_rejects_duplicates_and_singletons() {
        assert!(Universe::new(["a", "b", "a"]).is_err());
        assert!(Universe::new(["a"]).is_err());
        let u = Universe::new(["x", "y"]).unwrap();
        assert_eq!(u.index_of("y"), Some(1));
    }

    #[test]
    fn menu_is_sorted_and_checked() {
        let m = Menu::new(vec![2, 0], 3).unwrap();
        assert_eq!(m.members(), &[0, 2]);
        assert!(Menu::new(vec![], 3).is_err());
        assert!(Menu::new(vec![1, 1], 3).is_err());
        assert!(Menu::new(vec![3], 3).is_err());
    }

    #[test]
    fn menu_enumeration_counts() {
        assert_eq!(all_menus(4).len(), 11);
        assert_eq!(binary_menus(4).len(), 6);
        assert_eq!(all_menus(3)[0], Menu::pair(0, 1));
    }

    #[test]
    fn distribution_normalization_is_enforced() {
        let m = Menu::pair(0, 1);
        assert!(ChoiceDistribution::new(m.clone(), vec![0.5, 0.4]).is_err());
        let d = ChoiceDistribution::from_log_weights(m, &[1000.0, 1000.0]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn grid_orders() {
        assert!(TimeGrid::new(vec![2.0, 1.0]).is_err());
        let g = TimeGrid::unordered(vec![2.0, 1.0]).unwrap();
        assert_eq!(g.later_pairs(), vec![(0, 1), (1, 0)]);
        let g = TimeGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.later_pairs(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.point(0.0).unwrap(), TimePoint::Zero);
        assert!(g.point(1.5).is_err());
    }
}
