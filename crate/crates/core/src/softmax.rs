//! Softmax random choice processes
//! `p_t(a, A) ∝ exp(u(a)/λ(t) + α(a))`, with `p_0(a, A) ∝ exp(α(a))`.

use serde::{Deserialize, Serialize};

use crate::choice::{all_menus, ChoiceDistribution, Menu, TimeGrid, TimePoint, Universe};
use crate::dataset::ChoiceDataset;
use crate::error::{Error, Result};

/// Utility `u`, initial bias `α` (both indexed by alternative) and noise `λ`
/// (indexed by deadline). The zero point is handled as its own branch rather
/// than as `λ = ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxParams {
    pub universe: Universe,
    pub grid: TimeGrid,
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SoftmaxParams {
    pub fn new(
        universe: Universe,
        grid: TimeGrid,
        u: Vec<f64>,
        alpha: Vec<f64>,
        lambda: Vec<f64>,
    ) -> Result<Self> {
        let n = universe.len();
        if u.len() != n || alpha.len() != n {
            return Err(Error::invalid(format!(
                "u and alpha must have {n} entries (got {} and {})",
                u.len(),
                alpha.len()
            )));
        }
        if lambda.len() != grid.len() {
            return Err(Error::invalid(format!(
                "lambda must have one entry per deadline ({}), got {}",
                grid.len(),
                lambda.len()
            )));
        }
        if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("noise {l} is not a positive real")));
        }
        if u.iter().chain(&alpha).any(|x| !x.is_finite()) {
            return Err(Error::invalid("u and alpha must be finite"));
        }
        Ok(SoftmaxParams {
            universe,
            grid,
            u,
            alpha,
            lambda,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Exponent `u(a)/λ(t) + α(a)`, or `α(a)` at the zero point.
    pub fn score(&self, t: TimePoint, a: usize) -> f64 {
        match t {
            TimePoint::Zero => self.alpha[a],
            TimePoint::Deadline(i) => self.u[a] / self.lambda[i] + self.alpha[a],
        }
    }

    pub fn distribution(&self, t: TimePoint, menu: &Menu) -> Result<ChoiceDistribution> {
        self.grid.check(t)?;
        if let Some(&a) = menu.members().iter().find(|&&a| a >= self.len()) {
            return Err(Error::NotInMenu(a));
        }
        // shifting u by its menu maximum first makes constant u reproduce p_0 bit for bit
        let top = menu.members().iter().map(|&a| self.u[a]).fold(f64::NEG_INFINITY, f64::max);
        let scores: Vec<f64> = menu
            .members()
            .iter()
            .map(|&a| match t {
                TimePoint::Zero => self.alpha[a],
                TimePoint::Deadline(i) => (self.u[a] - top) / self.lambda[i] + self.alpha[a],
            })
            .collect();
        ChoiceDistribution::from_log_weights(menu.clone(), &scores)
    }

    /// `p_t(a, A)`.
    pub fn prob(&self, t: TimePoint, menu: &Menu, a: usize) -> Result<f64> {
        let pos = menu.position(a)?;
        Ok(self.distribution(t, menu)?.probs()[pos])
    }

    /// Weight of evidence `w_t(a,b) = [u(a) − u(b)]/λ(t)`; zero at `t = 0`.
    pub fn weight(&self, t: TimePoint, a: usize, b: usize) -> f64 {
        match t {
            TimePoint::Zero => 0.0,
            TimePoint::Deadline(i) => (self.u[a] - self.u[b]) / self.lambda[i],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.u.iter().all(|&x| x == self.u[0])
    }

    /// Exact dataset with a table for every point of `T₀` and every menu given.
    pub fn generate(&self, menus: &[Menu]) -> Result<ChoiceDataset> {
        let mut data = ChoiceDataset::exact(self.universe.clone(), self.grid.clone());
        for t in self.grid.points() {
            for menu in menus {
                data.insert(t, self.distribution(t, menu)?)?;
            }
        }
        Ok(data)
    }

    /// Dataset over every menu of size at least two.
    pub fn generate_all(&self) -> Result<ChoiceDataset> {
        self.generate(&all_menus(self.len()))
    }
}

/// `softmax_prob(params, t, menu, a)`.
pub fn softmax_prob(params: &SoftmaxParams, t: TimePoint, menu: &Menu, a: usize) -> Result<f64> {
    params.prob(t, menu, a)
}

/// Infinite-deliberation rule: the `α`-softmax restricted to `argmax_A u`,
/// with exact equality deciding ties.
pub fn limit_rule(params: &SoftmaxParams, menu: &Menu) -> Result<ChoiceDistribution> {
    if let Some(&a) = menu.members().iter().find(|&&a| a >= params.len()) {
        return Err(Error::NotInMenu(a));
    }
    let best = menu
        .members()
        .iter()
        .map(|&a| params.u[a])
        .fold(f64::NEG_INFINITY, f64::max);
    let scores: Vec<f64> = menu
        .members()
        .iter()
        .map(|&a| {
            if params.u[a] == best {
                params.alpha[a]
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    ChoiceDistribution::from_log_weights(menu.clone(), &scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(u: Vec<f64>, alpha: Vec<f64>, lambda: Vec<f64>) -> SoftmaxParams {
        let n = u.len();
        let grid = TimeGrid::new((1..=lambda.len()).map(|i| i as f64).collect()).unwrap();
        SoftmaxParams::new(Universe::indexed(n).unwrap(), grid, u, alpha, lambda).unwrap()
    }

    #[test]
    fn binary_logistic_value() {
        let p = params(vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0]);
        let v = softmax_prob(&p, TimePoint::Deadline(0), &Menu::pair(0, 1), 0).unwrap();
        // 1/(1+e^-1)
        assert_abs_diff_eq!(v, 0.731_058_578_630_004_9, epsilon = 1e-15);
    }

    #[test]
    fn zero_point_with_null_bias_is_uniform() {
        let p = params(vec![3.0, -1.0, 2.0, 0.5], vec![0.0; 4], vec![0.1]);
        let menu = Menu::new(vec![0, 1, 3], 4).unwrap();
        for &a in menu.members() {
            assert_abs_diff_eq!(p.prob(TimePoint::Zero, &menu, a).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_utility_freezes_the_process() {
        let p = params(vec![2.0; 3], vec![0.3, -1.0, 2.0], vec![0.5, 0.01]);
        for menu in all_menus(3) {
            let zero = p.distribution(TimePoint::Zero, &menu).unwrap();
            for t in p.grid.deadline_points() {
                let d = p.distribution(t, &menu).unwrap();
                for (x, y) in d.probs().iter().zip(zero.probs()) {
                    assert_abs_diff_eq!(x, y, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn huge_exponents_do_not_overflow() {
        let p = params(vec![700.0, 699.0], vec![0.0, 0.0], vec![1.0]);
        let d = p.distribution(TimePoint::Deadline(0), &Menu::pair(0, 1)).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.731_058_578_630_004_9, epsilon = 1e-15);
    }

    #[test]
    fn errors_on_foreign_alternative_and_time() {
        let p = params(vec![1.0, 0.0, 2.0], vec![0.0; 3], vec![1.0]);
        assert_eq!(
            p.prob(TimePoint::Deadline(0), &Menu::pair(0, 1), 2),
            Err(Error::NotInMenu(2))
        );
        assert!(p.prob(TimePoint::Deadline(3), &Menu::pair(0, 1), 0).is_err());
    }

    #[test]
    fn limit_rule_breaks_ties_by_bias() {
        let p = params(vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 3f64.ln()], vec![1.0]);
        let d = limit_rule(&p, &Menu::new(vec![0, 1, 2], 3).unwrap()).unwrap();
        assert_eq!(d.probs()[0], 0.0);
        assert_abs_diff_eq!(d.probs()[1], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probs()[2], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn limit_rule_unique_maximizer_is_point_mass() {
        let p = params(vec![0.0, 5.0, 1.0], vec![4.0, -2.0, 1.0], vec![1.0]);
        let d = limit_rule(&p, &Menu::new(vec![0, 1, 2], 3).unwrap()).unwrap();
        assert_eq!(d.probs(), &[0.0, 1.0, 0.0]);
    }
}
