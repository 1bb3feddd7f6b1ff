//! Executable checks of the behavioral axioms against a [`ChoiceDataset`].
//!
//! Every checker is a deterministic threshold test. Quantities that fall
//! inside the tolerance band count as ties and never produce violations.
//! Failed checks carry witnesses: the time points, alternatives and the two
//! quantities whose stated relation is violated, so that [`replay`] can
//! re-evaluate them.

use serde::Serialize;

use crate::choice::{ChoiceDistribution, Menu, TimePoint};
use crate::dataset::{ChoiceDataset, DatasetKind};
use crate::error::{Error, Result};
use crate::evidence::{weight_matrix, EvidenceSource};
use crate::softmax::SoftmaxParams;

/// Witness lists are truncated to this many entries; `violations` keeps the total.
pub const MAX_WITNESSES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    Positivity,
    ChoiceAxiom,
    IntensityConsistency,
    PreferenceConsistency,
    EaseConsistency,
    DecreasingErrorRate,
    ConstantRelativeEase,
    ConstantRelativeWeight,
    LogOddsRatioInvariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// A replayable counterexample. `t` and `s` are time values (0 for the zero
/// point); the meaning of `lhs`/`rhs` per axiom is documented on [`replay`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    pub s: Option<f64>,
    pub alternatives: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Agreement of the three monotone-noise criteria for a fitted softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ErrorRateCriteria {
    pub decreasing_error_rate: bool,
    pub lambda_decreasing: bool,
    pub stochastic_dominance: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<ErrorRateCriteria>,
}

impl AxiomReport {
    fn new(axiom: Axiom, tolerance: f64) -> Self {
        AxiomReport {
            axiom,
            verdict: Verdict::Pass,
            tolerance,
            violations: 0,
            witnesses: Vec::new(),
            notes: Vec::new(),
            criteria: None,
        }
    }

    fn not_applicable(axiom: Axiom, tolerance: f64, note: impl Into<String>) -> Self {
        let mut r = Self::new(axiom, tolerance);
        r.verdict = Verdict::NotApplicable;
        r.notes.push(note.into());
        r
    }

    fn violate(&mut self, w: Witness) {
        self.verdict = Verdict::Fail;
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Tolerance bands. Exact data uses fixed tiny bands; empirical data scales
/// `c/√n` with `n` the smallest table sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub positivity: f64,
    pub choice: f64,
    pub weight: f64,
    pub ratio: f64,
}

/// Constants `c` of the empirical `c/√n` bands (choice axiom, weight, ratio).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalScale {
    pub choice: f64,
    pub weight: f64,
    pub ratio: f64,
}

impl Default for EmpiricalScale {
    fn default() -> Self {
        EmpiricalScale {
            choice: 4.0,
            weight: 3.0,
            ratio: 5.0,
        }
    }
}

impl Tolerances {
    pub const EXACT: Tolerances = Tolerances {
        positivity: 0.0,
        choice: 1e-9,
        weight: 1e-9,
        ratio: 1e-9,
    };

    pub fn empirical(min_count: u64, scale: EmpiricalScale) -> Self {
        let root = (min_count.max(1) as f64).sqrt();
        Tolerances {
            positivity: 0.0,
            choice: scale.choice / root,
            weight: scale.weight / root,
            ratio: scale.ratio / root,
        }
    }

    pub fn for_dataset(d: &ChoiceDataset) -> Self {
        match d.kind() {
            DatasetKind::Exact => Self::EXACT,
            DatasetKind::Empirical { min_count } => {
                Self::empirical(min_count, EmpiricalScale::default())
            }
        }
    }
}

pub fn check_positivity(d: &ChoiceDataset, tol: &Tolerances) -> Result<AxiomReport> {
    d.require_binary()?;
    let mut report = AxiomReport::new(Axiom::Positivity, tol.positivity);
    let n = d.universe().len();
    let grid = d.grid();
    for t in grid.points() {
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let p = d.binary(t, a, b)?;
                if p <= tol.positivity {
                    report.violate(Witness {
                        t: grid.value(t),
                        s: None,
                        alternatives: vec![a, b],
                        lhs: p,
                        rhs: tol.positivity,
                    });
                }
                if let Some(counts) = d.counts(t, &Menu::pair(a, b)) {
                    let total: u64 = counts.iter().sum();
                    if p < 1.0 / (2.0 * total as f64) {
                        report.notes.push(format!(
                            "small sample: p_{}({}, {}) estimated from {} of {} observations",
                            grid.value(t),
                            d.universe().label(a),
                            d.universe().label(b),
                            (p * total as f64).round(),
                            total
                        ));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Product form of Luce's choice axiom:
/// `p_t(a,b)·p_t(b,A) = p_t(b,a)·p_t(a,A)` for every provided menu `A ∋ a, b`.
pub fn check_choice_axiom(d: &ChoiceDataset, tol: &Tolerances) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::ChoiceAxiom, tol.choice);
    let grid = d.grid();
    let mut menus = 0usize;
    for t in grid.points() {
        for table in d.large_menus(t) {
            menus += 1;
            let members = table.menu().members();
            for &a in members {
                for &b in members {
                    if a >= b {
                        continue;
                    }
                    let lhs = d.binary(t, a, b)? * table.prob(b)?;
                    let rhs = d.binary(t, b, a)? * table.prob(a)?;
                    if (lhs - rhs).abs() > tol.choice * lhs.max(rhs) {
                        let mut alternatives = vec![a, b];
                        alternatives.extend_from_slice(members);
                        report.violate(Witness {
                            t: grid.value(t),
                            s: None,
                            alternatives,
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
    }
    if menus == 0 {
        report
            .notes
            .push("vacuous: no menu with more than two alternatives".to_owned());
    }
    Ok(report)
}

/// Luce utility at `t` normalized to `v(reference) = 0`:
/// `v_t(x) = ln[p_t(x, ref) / p_t(ref, x)]`.
pub fn fit_luce(d: &ChoiceDataset, t: TimePoint, reference: usize) -> Result<Vec<f64>> {
    let n = d.universe().len();
    if reference >= n {
        return Err(Error::NotInMenu(reference));
    }
    (0..n)
        .map(|x| {
            if x == reference {
                Ok(0.0)
            } else {
                d.log_odds(t, x, reference)
            }
        })
        .collect()
}

/// Luce rule `p(a, A) ∝ exp(v(a))`.
pub fn luce_distribution(v: &[f64], menu: &Menu) -> Result<ChoiceDistribution> {
    let scores: Vec<f64> = menu.members().iter().map(|&a| v[a]).collect();
    ChoiceDistribution::from_log_weights(menu.clone(), &scores)
}

fn deadline_weights(d: &ChoiceDataset) -> Result<Vec<Vec<Vec<f64>>>> {
    d.grid().deadline_points().map(|t| weight_matrix(d, t)).collect()
}

fn distinct_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

fn unordered_pairs(n: usize) -> Vec<(usize, usize)> {
    distinct_pairs(n).into_iter().filter(|(a, b)| a < b).collect()
}

/// Intensity, Preference and Ease Consistency, in that order.
pub fn check_consistency(d: &ChoiceDataset, tol: &Tolerances) -> Result<Vec<AxiomReport>> {
    let eps = tol.weight;
    let axioms = [
        Axiom::IntensityConsistency,
        Axiom::PreferenceConsistency,
        Axiom::EaseConsistency,
    ];
    if d.grid().len() < 2 {
        return Ok(axioms
            .iter()
            .map(|&a| AxiomReport::not_applicable(a, eps, "fewer than two deadlines"))
            .collect());
    }
    let w = deadline_weights(d)?;
    let times = d.grid().deadlines();
    let n = d.universe().len();
    let ordered = distinct_pairs(n);
    let unordered = unordered_pairs(n);
    let [mut intensity, mut preference, mut ease] = axioms.map(|a| AxiomReport::new(a, eps));

    for (ti, si) in d.grid().later_pairs() {
        let (wt, ws) = (&w[ti], &w[si]);
        for &(a, b) in &ordered {
            for &(c, e) in &ordered {
                let lhs = wt[a][b] - wt[c][e];
                let rhs = ws[a][b] - ws[c][e];
                if lhs > eps && rhs < -eps {
                    intensity.violate(Witness {
                        t: times[ti],
                        s: Some(times[si]),
                        alternatives: vec![a, b, c, e],
                        lhs,
                        rhs,
                    });
                }
            }
            if wt[a][b] > eps && ws[a][b] <= -eps {
                preference.violate(Witness {
                    t: times[ti],
                    s: Some(times[si]),
                    alternatives: vec![a, b],
                    lhs: wt[a][b],
                    rhs: ws[a][b],
                });
            }
        }
        for &(a, b) in &unordered {
            for &(c, e) in &unordered {
                let later = ws[a][b].abs() - ws[c][e].abs();
                let earlier = wt[a][b].abs() - wt[c][e].abs();
                if later > eps && earlier <= -eps {
                    ease.violate(Witness {
                        t: times[ti],
                        s: Some(times[si]),
                        alternatives: vec![a, b, c, e],
                        lhs: later,
                        rhs: earlier,
                    });
                }
            }
        }
    }
    Ok(vec![intensity, preference, ease])
}

/// Decreasing Error Rate: `p_t(a,b) > p_0(a,b) + ε ⇒ p_s(a,b) ≥ p_t(a,b) − ε`
/// for `s > t`. With a fitted softmax, also reports whether `λ` is
/// nonincreasing and whether payoff stochastic dominance holds on every
/// provided menu, and whether the three criteria agree.
pub fn check_decreasing_error_rate(
    d: &ChoiceDataset,
    tol: &Tolerances,
    fit: Option<&SoftmaxParams>,
) -> Result<AxiomReport> {
    let eps = tol.weight;
    if !d.grid().is_ordered() {
        return Ok(AxiomReport::not_applicable(
            Axiom::DecreasingErrorRate,
            eps,
            "the deadline grid is unordered",
        ));
    }
    let mut report = AxiomReport::new(Axiom::DecreasingErrorRate, eps);
    let n = d.universe().len();
    let times = d.grid().deadlines();
    let pairs = d.grid().later_pairs();
    for &(ti, si) in &pairs {
        let (t, s) = (TimePoint::Deadline(ti), TimePoint::Deadline(si));
        for (a, b) in distinct_pairs(n) {
            let p0 = d.binary(TimePoint::Zero, a, b)?;
            let pt = d.binary(t, a, b)?;
            let ps = d.binary(s, a, b)?;
            if pt > p0 + eps && ps < pt - eps {
                report.violate(Witness {
                    t: times[ti],
                    s: Some(times[si]),
                    alternatives: vec![a, b],
                    lhs: ps,
                    rhs: pt,
                });
            }
        }
    }
    if let Some(fit) = fit {
        let lambda_decreasing = pairs
            .iter()
            .all(|&(ti, si)| fit.lambda[si] <= fit.lambda[ti] * (1.0 + tol.ratio));
        let dominance = stochastic_dominance(d, &fit.u, eps)?;
        let der = report.passed();
        report.criteria = Some(ErrorRateCriteria {
            decreasing_error_rate: der,
            lambda_decreasing,
            stochastic_dominance: dominance,
            agree: der == lambda_decreasing && der == dominance,
        });
    }
    Ok(report)
}

/// Payoff stochastic dominance over every provided menu, at every utility
/// level present in the menu.
pub fn stochastic_dominance(d: &ChoiceDataset, u: &[f64], eps: f64) -> Result<bool> {
    let menus: Vec<Menu> = d
        .tables()
        .filter(|(t, _)| *t == TimePoint::Zero)
        .map(|(_, dist)| dist.menu().clone())
        .collect();
    for menu in &menus {
        for (ti, si) in d.grid().later_pairs() {
            let pt = d.table(TimePoint::Deadline(ti), menu)?;
            let ps = d.table(TimePoint::Deadline(si), menu)?;
            for &level in menu.members() {
                let bar = u[level];
                let upper = |dist: &ChoiceDistribution| -> f64 {
                    dist.iter().filter(|(a, _)| u[*a] > bar).map(|(_, p)| p).sum()
                };
                if upper(ps) < upper(pt) - eps {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ratio {
    Undefined,
    Finite(f64),
    Infinite(f64),
}

fn ratio(num: f64, den: f64, zero: f64) -> Ratio {
    let num = if num.abs() <= zero { 0.0 } else { num };
    let den = if den.abs() <= zero { 0.0 } else { den };
    match (num == 0.0, den == 0.0) {
        (true, true) => Ratio::Undefined,
        (_, true) => Ratio::Infinite(num.signum()),
        _ => Ratio::Finite(num / den),
    }
}

fn ratio_value(r: Ratio) -> f64 {
    match r {
        Ratio::Undefined => f64::NAN,
        Ratio::Finite(x) => x,
        Ratio::Infinite(sign) => sign * f64::INFINITY,
    }
}

/// Equality of two ratios when at least one is well defined.
fn ratios_agree(x: Ratio, y: Ratio, rel: f64) -> bool {
    match (x, y) {
        (Ratio::Undefined, Ratio::Undefined) => true,
        (Ratio::Infinite(a), Ratio::Infinite(b)) => a == b,
        (Ratio::Finite(a), Ratio::Finite(b)) => (a - b).abs() <= rel * a.abs().max(b.abs()),
        _ => false,
    }
}

/// Constant Relative Ease of Comparison, Constant Relative Weight of
/// Evidence and Log-odds Ratio Invariance, in that order. Weights within the
/// weight band of zero are treated as zero when deciding whether a ratio is
/// well defined.
pub fn check_relative_invariance(d: &ChoiceDataset, tol: &Tolerances) -> Result<Vec<AxiomReport>> {
    let axioms = [
        Axiom::ConstantRelativeEase,
        Axiom::ConstantRelativeWeight,
        Axiom::LogOddsRatioInvariance,
    ];
    if d.grid().len() < 2 {
        return Ok(axioms
            .iter()
            .map(|&a| AxiomReport::not_applicable(a, tol.ratio, "fewer than two deadlines"))
            .collect());
    }
    let w = deadline_weights(d)?;
    let times = d.grid().deadlines();
    let n = d.universe().len();
    let zero = tol.weight;
    let ordered = distinct_pairs(n);
    let unordered = unordered_pairs(n);
    let [mut ease, mut weight, mut lori] = axioms.map(|a| AxiomReport::new(a, tol.ratio));

    let compare = |report: &mut AxiomReport, ti: usize, si: usize, alts: Vec<usize>, x: Ratio, y: Ratio| {
        if !ratios_agree(x, y, tol.ratio) {
            report.violate(Witness {
                t: times[ti],
                s: Some(times[si]),
                alternatives: alts,
                lhs: ratio_value(x),
                rhs: ratio_value(y),
            });
        }
    };

    for (ti, si) in d.grid().later_pairs() {
        let (wt, ws) = (&w[ti], &w[si]);
        for &(a, b) in &unordered {
            for &(c, e) in &unordered {
                if (a, b) == (c, e) {
                    continue;
                }
                let x = ratio(wt[a][b].abs(), wt[c][e].abs(), zero);
                let y = ratio(ws[a][b].abs(), ws[c][e].abs(), zero);
                compare(&mut ease, ti, si, vec![a, b, c, e], x, y);
            }
        }
        for &(a, b) in &ordered {
            for &(c, e) in &ordered {
                if (a, b) == (c, e) {
                    continue;
                }
                let x = ratio(wt[a][b], wt[c][e], zero);
                let y = ratio(ws[a][b], ws[c][e], zero);
                compare(&mut weight, ti, si, vec![a, b, c, e], x, y);
            }
        }
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if a == b || a == c || b == c {
                        continue;
                    }
                    let x = ratio(wt[a][c], wt[b][c], zero);
                    let y = ratio(ws[a][c], ws[b][c], zero);
                    compare(&mut lori, ti, si, vec![a, b, c], x, y);
                }
            }
        }
    }
    Ok(vec![ease, weight, lori])
}

/// Runs every checker. Checks that need log-odds become not-applicable when
/// Positivity fails.
pub fn audit(d: &ChoiceDataset, tol: &Tolerances) -> Result<Vec<AxiomReport>> {
    let positivity = check_positivity(d, tol)?;
    let positive = positivity.verdict == Verdict::Pass;
    let mut out = vec![positivity, check_choice_axiom(d, tol)?];
    if positive {
        out.extend(check_consistency(d, tol)?);
        out.push(check_decreasing_error_rate(d, tol, None)?);
        out.extend(check_relative_invariance(d, tol)?);
    } else {
        for axiom in [
            Axiom::IntensityConsistency,
            Axiom::PreferenceConsistency,
            Axiom::EaseConsistency,
            Axiom::DecreasingErrorRate,
            Axiom::ConstantRelativeEase,
            Axiom::ConstantRelativeWeight,
            Axiom::LogOddsRatioInvariance,
        ] {
            out.push(AxiomReport::not_applicable(axiom, tol.weight, "Positivity fails"));
        }
    }
    Ok(out)
}

/// Re-evaluates a witness against the dataset and reports whether the
/// violation is reproduced.
///
/// * Positivity: `lhs = p_t(a,b) ≤ rhs = τ`.
/// * ChoiceAxiom (`[a, b, A…]`): `lhs = p_t(a,b)p_t(b,A)`, `rhs = p_t(b,a)p_t(a,A)` differ.
/// * IntensityConsistency: `lhs = w_t(a,b) − w_t(c,d) > ε`, `rhs = w_s(…) − w_s(…) < −ε`.
/// * PreferenceConsistency: `lhs = w_t(a,b) > ε`, `rhs = w_s(a,b) ≤ −ε`.
/// * EaseConsistency: `lhs = e_s(a,b) − e_s(c,d) > ε`, `rhs = e_t(…) − e_t(…) ≤ −ε`.
/// * DecreasingErrorRate: `lhs = p_s(a,b) < rhs − ε` with `rhs = p_t(a,b) > p_0(a,b) + ε`.
/// * ratio axioms: `lhs` (at `t`) and `rhs` (at `s`) disagree.
pub fn replay(d: &ChoiceDataset, axiom: Axiom, w: &Witness, tol: &Tolerances) -> Result<bool> {
    let grid = d.grid();
    let t = grid.point(w.t)?;
    let s = w.s.map(|s| grid.point(s)).transpose()?;
    let later = || s.ok_or_else(|| Error::invalid("witness lacks a second time point"));
    let alts = &w.alternatives;
    let eps = tol.weight;
    Ok(match axiom {
        Axiom::Positivity => d.binary(t, alts[0], alts[1])? <= tol.positivity,
        Axiom::ChoiceAxiom => {
            let (a, b) = (alts[0], alts[1]);
            let menu = Menu::new(alts[2..].to_vec(), d.universe().len())?;
            let table = d.table(t, &menu)?;
            let lhs = d.binary(t, a, b)? * table.prob(b)?;
            let rhs = d.binary(t, b, a)? * table.prob(a)?;
            (lhs - rhs).abs() > tol.choice * lhs.max(rhs)
        }
        Axiom::IntensityConsistency => {
            let s = later()?;
            let (a, b, c, e) = (alts[0], alts[1], alts[2], alts[3]);
            let lhs = d.weight(t, a, b)? - d.weight(t, c, e)?;
            let rhs = d.weight(s, a, b)? - d.weight(s, c, e)?;
            lhs > eps && rhs < -eps
        }
        Axiom::PreferenceConsistency => {
            let s = later()?;
            d.weight(t, alts[0], alts[1])? > eps && d.weight(s, alts[0], alts[1])? <= -eps
        }
        Axiom::EaseConsistency => {
            let s = later()?;
            let (a, b, c, e) = (alts[0], alts[1], alts[2], alts[3]);
            let diff = |x: TimePoint| -> Result<f64> {
                Ok(d.weight(x, a, b)?.abs() - d.weight(x, c, e)?.abs())
            };
            diff(s)? > eps && diff(t)? <= -eps
        }
        Axiom::DecreasingErrorRate => {
            let s = later()?;
            let (a, b) = (alts[0], alts[1]);
            let pt = d.binary(t, a, b)?;
            pt > d.binary(TimePoint::Zero, a, b)? + eps && d.binary(s, a, b)? < pt - eps
        }
        Axiom::ConstantRelativeEase | Axiom::ConstantRelativeWeight | Axiom::LogOddsRatioInvariance => {
            let s = later()?;
            let at = |x: TimePoint| -> Result<Ratio> {
                let (num, den) = match axiom {
                    Axiom::ConstantRelativeEase => (
                        d.weight(x, alts[0], alts[1])?.abs(),
                        d.weight(x, alts[2], alts[3])?.abs(),
                    ),
                    Axiom::ConstantRelativeWeight => (
                        d.weight(x, alts[0], alts[1])?,
                        d.weight(x, alts[2], alts[3])?,
                    ),
                    _ => (
                        d.weight(x, alts[0], alts[2])?,
                        d.weight(x, alts[1], alts[2])?,
                    ),
                };
                Ok(ratio(num, den, eps))
            };
            !ratios_agree(at(t)?, at(s)?, tol.ratio)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{binary_menus, TimeGrid, Universe};

    fn softmax(u: Vec<f64>, alpha: Vec<f64>, lambda: Vec<f64>) -> SoftmaxParams {
        let n = u.len();
        let grid = TimeGrid::new((1..=lambda.len()).map(|i| i as f64).collect()).unwrap();
        SoftmaxParams::new(Universe::indexed(n).unwrap(), grid, u, alpha, lambda).unwrap()
    }

    /// Luce process with utility `v[t]` at each point of `T₀` (index 0 = zero point).
    fn luce_process(v: &[Vec<f64>], ordered: bool) -> ChoiceDataset {
        let n = v[0].len();
        let deadlines: Vec<f64> = (1..v.len()).map(|i| i as f64).collect();
        let grid = if ordered {
            TimeGrid::new(deadlines).unwrap()
        } else {
            TimeGrid::unordered(deadlines).unwrap()
        };
        let mut d = ChoiceDataset::exact(Universe::indexed(n).unwrap(), grid.clone());
        for (i, t) in grid.points().enumerate() {
            for menu in crate::choice::all_menus(n) {
                d.insert(t, luce_distribution(&v[i], &menu).unwrap()).unwrap();
            }
        }
        d
    }

    fn assert_replays(d: &ChoiceDataset, r: &AxiomReport) {
        assert_eq!(r.verdict, Verdict::Fail, "{:?}", r.axiom);
        assert!(!r.witnesses.is_empty());
        let tol = Tolerances::for_dataset(d);
        for w in &r.witnesses {
            assert!(replay(d, r.axiom, w, &tol).unwrap(), "{:?} witness {w:?} did not replay", r.axiom);
        }
    }

    #[test]
    fn softmax_tables_pass_everything() {
        let p = softmax(vec![0.0, 1.0, -0.5, 2.0], vec![0.3, 0.0, -0.2, 1.0], vec![2.0, 1.0, 0.5]);
        let d = p.generate_all().unwrap();
        for r in audit(&d, &Tolerances::EXACT).unwrap() {
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        }
    }

    #[test]
    fn zero_binary_probability_fails_positivity() {
        let grid = TimeGrid::new(vec![1.0]).unwrap();
        let mut d = ChoiceDataset::exact(Universe::indexed(2).unwrap(), grid);
        let m = Menu::pair(0, 1);
        d.insert(TimePoint::Zero, ChoiceDistribution::new(m.clone(), vec![0.5, 0.5]).unwrap()).unwrap();
        d.insert(TimePoint::Deadline(0), ChoiceDistribution::new(m, vec![1.0, 0.0]).unwrap()).unwrap();
        let r = check_positivity(&d, &Tolerances::EXACT).unwrap();
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].alternatives, vec![1, 0]);
        assert_eq!(r.witnesses[0].t, 1.0);
        assert_replays(&d, &r);
        // the rest of the audit degrades instead of erroring
        let all = audit(&d, &Tolerances::EXACT).unwrap();
        assert_eq!(all[2].verdict, Verdict::NotApplicable);
    }

    #[test]
    fn empirical_zero_count_warns() {
        let grid = TimeGrid::new(vec![1.0]).unwrap();
        let mut d = ChoiceDataset::empirical(Universe::indexed(2).unwrap(), grid);
        let m = Menu::pair(0, 1);
        d.insert_counts(TimePoint::Zero, m.clone(), vec![50, 50]).unwrap();
        d.insert_counts(TimePoint::Deadline(0), m, vec![100, 0]).unwrap();
        let tol = Tolerances::for_dataset(&d);
        let r = check_positivity(&d, &tol).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.notes.iter().any(|n| n.contains("small sample") && n.contains("0 of 100")));
    }

    #[test]
    fn missing_binary_table_is_an_error() {
        let grid = TimeGrid::new(vec![1.0]).unwrap();
        let d = ChoiceDataset::exact(Universe::indexed(2).unwrap(), grid);
        assert!(matches!(
            check_positivity(&d, &Tolerances::EXACT),
            Err(Error::MissingTable { .. })
        ));
    }

    #[test]
    fn hand_built_iia_violation() {
        let grid = TimeGrid::new(vec![1.0]).unwrap();
        let mut d = ChoiceDataset::exact(Universe::indexed(3).unwrap(), grid);
        for t in [TimePoint::Zero, TimePoint::Deadline(0)] {
            for m in binary_menus(3) {
                d.insert(t, ChoiceDistribution::new(m, vec![0.5, 0.5]).unwrap()).unwrap();
            }
            let full = Menu::new(vec![0, 1, 2], 3).unwrap();
            let probs = if t == TimePoint::Zero {
                ChoiceDistribution::from_weights(full, vec![1.0; 3]).unwrap()
            } else {
                ChoiceDistribution::new(full, vec![0.6, 0.2, 0.2]).unwrap()
            };
            d.insert(t, probs).unwrap();
        }
        let r = check_choice_axiom(&d, &Tolerances::EXACT).unwrap();
        assert_replays(&d, &r);
        let w = &r.witnesses[0];
        assert_eq!(w.t, 1.0);
        assert_eq!(&w.alternatives[..2], &[0, 1]);
        // binary odds 1 against menu odds 3
        assert!((w.lhs / 0.5 - 0.2).abs() < 1e-15 && (w.rhs / 0.5 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn binary_only_data_passes_choice_axiom_vacuously() {
        let p = softmax(vec![0.0, 1.0, 2.0], vec![0.0; 3], vec![1.0]);
        let d = p.generate(&binary_menus(3)).unwrap();
        let r = check_choice_axiom(&d, &Tolerances::EXACT).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.notes[0].starts_with("vacuous"));
    }

    #[test]
    fn luce_fit_recovers_scaled_utility() {
        let p = softmax(vec![0.0, 1.0, 2.0], vec![0.0; 3], vec![1.0]);
        let d = p.generate_all().unwrap();
        let v = fit_luce(&d, TimePoint::Deadline(0), 0).unwrap();
        for (x, y) in v.iter().zip([0.0, 1.0, 2.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        let shifted = fit_luce(&d, TimePoint::Deadline(0), 2).unwrap();
        for (x, y) in v.iter().zip(&shifted) {
            assert!((x - y - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn luce_fit_at_zero_is_bias() {
        let alpha = vec![0.4, -1.0, 2.5];
        let p = softmax(vec![0.0, 1.0, 2.0], alpha.clone(), vec![1.0]);
        let d = p.generate_all().unwrap();
        let v = fit_luce(&d, TimePoint::Zero, 1).unwrap();
        for (x, a) in v.iter().zip(&alpha) {
            assert!((x - (a - alpha[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn intensity_flip_is_caught() {
        // (a,b) more intense than (b,c) at t=1; reversed at t=2
        let d = luce_process(&[vec![0.0; 3], vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]], true);
        let reports = check_consistency(&d, &Tolerances::EXACT).unwrap();
        assert_replays(&d, &reports[0]);
        assert_eq!(reports[1].verdict, Verdict::Pass);
    }

    #[test]
    fn preference_reversal_is_caught() {
        let d = luce_process(&[vec![0.0; 3], vec![0.0, 1.0, 2.0], vec![0.0, -1.0, 2.0]], true);
        let reports = check_consistency(&d, &Tolerances::EXACT).unwrap();
        assert_replays(&d, &reports[1]);
    }

    #[test]
    fn ease_growth_is_caught() {
        // {0,1} harder than {1,2} at t=1, easier at t=2; order is preserved
        let d = luce_process(&[vec![0.0; 3], vec![0.0, 1.0, 3.0], vec![0.0, 3.0, 4.0]], true);
        let reports = check_consistency(&d, &Tolerances::EXACT).unwrap();
        assert_eq!(reports[1].verdict, Verdict::Pass);
        assert_replays(&d, &reports[2]);
    }

    #[test]
    fn single_deadline_consistency_not_applicable() {
        let p = softmax(vec![0.0, 1.0], vec![0.0; 2], vec![1.0]);
        let d = p.generate_all().unwrap();
        let reports = check_consistency(&d, &Tolerances::EXACT).unwrap();
        assert!(reports.iter().all(|r| r.verdict == Verdict::NotApplicable));
    }

    #[test]
    fn decreasing_noise_passes_with_agreeing_criteria() {
        let p = softmax(vec![0.0, 1.0, 2.5], vec![0.1, 0.0, -0.3], vec![2.0, 1.0, 0.5]);
        let d = p.generate_all().unwrap();
        let r = check_decreasing_error_rate(&d, &Tolerances::EXACT, Some(&p)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let c = r.criteria.unwrap();
        assert!(c.agree && c.lambda_decreasing && c.stochastic_dominance);
    }

    #[test]
    fn increasing_noise_fails_with_agreeing_criteria() {
        let p = softmax(vec![0.0, 1.0, 2.5], vec![0.0; 3], vec![1.0, 2.0]);
        let d = p.generate_all().unwrap();
        let r = check_decreasing_error_rate(&d, &Tolerances::EXACT, Some(&p)).unwrap();
        assert_replays(&d, &r);
        let c = r.criteria.unwrap();
        assert!(c.agree && !c.lambda_decreasing && !c.stochastic_dominance);
    }

    #[test]
    fn constant_process_passes_error_rate_vacuously() {
        let p = softmax(vec![1.0; 3], vec![0.2, 0.0, 1.0], vec![1.0, 2.0]);
        let d = p.generate_all().unwrap();
        let r = check_decreasing_error_rate(&d, &Tolerances::EXACT, None).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn quadratic_drift_breaks_relative_weight() {
        // v_t = t·u + t²·u²
        let u = [0.0, 1.0, 2.0];
        let v: Vec<Vec<f64>> = (0..3)
            .map(|t| {
                let t = t as f64;
                u.iter().map(|x| t * x + t * t * x * x).collect()
            })
            .collect();
        let d = luce_process(&v, true);
        let reports = check_relative_invariance(&d, &Tolerances::EXACT).unwrap();
        assert_replays(&d, &reports[1]);
        // w_1(2,0)/w_1(1,0) = 6/2 while w_2(2,0)/w_2(1,0) = 20/6
        assert!(reports[1]
            .witnesses
            .iter()
            .any(|w| w.alternatives == vec![2, 0, 1, 0]));
    }

    #[test]
    fn relative_invariance_vacuous_without_evidence() {
        let p = softmax(vec![0.5; 4], vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.5]);
        let d = p.generate_all().unwrap();
        for r in check_relative_invariance(&d, &Tolerances::EXACT).unwrap() {
            assert_eq!(r.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn unordered_grid_checks_both_directions() {
        // u scales by 2 from "t=1" to "t=2" but grid order is irrelevant
        let d = luce_process(&[vec![0.0; 3], vec![0.0, 2.0, 4.0], vec![0.0, 1.0, 2.0]], false);
        for r in check_consistency(&d, &Tolerances::EXACT).unwrap() {
            assert_eq!(r.verdict, Verdict::Pass);
        }
        let d = luce_process(&[vec![0.0; 3], vec![0.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]], false);
        let r = &check_consistency(&d, &Tolerances::EXACT).unwrap()[0];
        assert_replays(&d, r);
        assert!(r.witnesses.iter().any(|w| w.t == 2.0));
        let r = check_decreasing_error_rate(&d, &Tolerances::EXACT, None).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }
}
