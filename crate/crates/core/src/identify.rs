//! Identification of softmax components from binary choice tables, and the
//! comparisons that decide whether two parameter sets describe the same
//! process or match a neural DDM parametrization.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::choice::TimePoint;
use crate::dataset::{ChoiceDataset, DatasetKind};
use crate::error::{Error, Result};
use crate::softmax::SoftmaxParams;

/// Constancy tolerance for exact tables.
pub const EXACT_CONSTANCY_TOL: f64 = 1e-10;

/// Empirical constancy band `c/√n`.
pub const EMPIRICAL_CONSTANCY_SCALE: f64 = 3.0;

pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Pair and deadline used to normalize the identified utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub a: usize,
    pub b: usize,
    pub t: TimePoint,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedParams {
    /// For constant data `u ≡ 0` and `lambda` holds placeholders.
    pub params: SoftmaxParams,
    pub anchor: Option<Anchor>,
    pub constant: bool,
}

impl IdentifiedParams {
    pub fn lambda(&self) -> Option<&[f64]> {
        (!self.constant).then_some(self.params.lambda.as_slice())
    }

    pub fn to_json(&self) -> Value {
        let p = &self.params;
        let labels = p.universe.labels();
        let by_label = |xs: &[f64]| -> Value {
            Value::Object(labels.iter().zip(xs).map(|(l, x)| (l.clone(), Value::from(*x))).collect::<Map<_, _>>())
        };
        let anchor = match &self.anchor {
            Some(a) => serde_json::json!({
                "a": labels[a.a],
                "b": labels[a.b],
                "t": p.grid.value(a.t),
                "weight": a.weight,
            }),
            None => Value::Null,
        };
        serde_json::json!({
            "constant": self.constant,
            "anchor": anchor,
            "deadlines": p.grid.deadlines(),
            "u": by_label(&p.u),
            "alpha": by_label(&p.alpha),
            "lambda": self.lambda(),
        })
    }
}

/// `3/√n` for empirical data with smallest table size `n`, else a fixed
/// rounding band.
pub fn constancy_tolerance(d: &ChoiceDataset) -> f64 {
    match d.kind() {
        DatasetKind::Exact => EXACT_CONSTANCY_TOL,
        DatasetKind::Empirical { min_count } => {
            EMPIRICAL_CONSTANCY_SCALE / (min_count.max(1) as f64).sqrt()
        }
    }
}

/// `None` if no binary probability ever rises above its zero-point value by
/// more than `tol`; otherwise the anchor with the largest weight of
/// evidence among the rising ones (first in scan order on ties).
pub fn detect_constant(d: &ChoiceDataset, tol: f64) -> Result<Option<Anchor>> {
    d.require_binary()?;
    let n = d.universe().len();
    let mut best: Option<Anchor> = None;
    for t in d.grid().deadline_points() {
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                if d.binary(t, a, b)? <= d.binary(TimePoint::Zero, a, b)? + tol {
                    continue;
                }
                let weight = d.log_odds(t, a, b)? - d.log_odds(TimePoint::Zero, a, b)?;
                if best.is_none_or(|x| weight > x.weight) {
                    best = Some(Anchor { a, b, t, weight });
                }
            }
        }
    }
    Ok(best)
}

/// Identifies `(u, α, λ)` with the anchor chosen by [`detect_constant`].
pub fn identify(d: &ChoiceDataset) -> Result<IdentifiedParams> {
    let anchor = detect_constant(d, constancy_tolerance(d))?;
    identify_with(d, anchor)
}

/// Identification from a given anchor (`None` for the constant case).
/// The anchor weight must be positive.
pub fn identify_with(d: &ChoiceDataset, anchor: Option<Anchor>) -> Result<IdentifiedParams> {
    d.require_binary()?;
    let n = d.universe().len();
    let zero_odds = |x: usize, b: usize| {
        if x == b {
            Ok(0.0)
        } else {
            d.log_odds(TimePoint::Zero, x, b)
        }
    };
    let weight = |t: TimePoint, x: usize, b: usize| -> Result<f64> {
        if x == b {
            Ok(0.0)
        } else {
            Ok(d.log_odds(t, x, b)? - d.log_odds(TimePoint::Zero, x, b)?)
        }
    };
    let Some(anchor) = anchor else {
        let alpha = (0..n).map(|x| zero_odds(x, 0)).collect::<Result<Vec<_>>>()?;
        let params = SoftmaxParams::new(
            d.universe().clone(),
            d.grid().clone(),
            vec![0.0; n],
            alpha,
            vec![1.0; d.grid().len()],
        )?;
        return Ok(IdentifiedParams { params, anchor: None, constant: true });
    };
    let Anchor { a, b, t, .. } = anchor;
    let scale = weight(t, a, b)?;
    if !(scale > 0.0) {
        return Err(Error::invalid(format!("anchor weight {scale} is not positive")));
    }
    let u = (0..n).map(|x| Ok(weight(t, x, b)? / scale)).collect::<Result<Vec<_>>>()?;
    let alpha = (0..n).map(|x| zero_odds(x, b)).collect::<Result<Vec<_>>>()?;
    let mut lambda = Vec::with_capacity(d.grid().len());
    for s in d.grid().deadline_points() {
        let w = weight(s, a, b)?;
        if !(w > 0.0) {
            return Err(Error::NotSoftmax(format!(
                "weight of evidence for ({}, {}) is {w} at t={} but positive at t={}; preference consistency fails",
                d.universe().label(a),
                d.universe().label(b),
                d.grid().value(s),
                d.grid().value(t)
            )));
        }
        lambda.push(1.0 / w);
    }
    let params = SoftmaxParams::new(d.universe().clone(), d.grid().clone(), u, alpha, lambda)?;
    Ok(IdentifiedParams { params, anchor: Some(anchor), constant: false })
}

/// Largest relative deviation between the tables of `d` and the
/// probabilities `params` assigns to them.
pub fn reconstruction_residual(d: &ChoiceDataset, params: &SoftmaxParams) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (t, table) in d.tables() {
        let fit = params.distribution(t, table.menu())?;
        for (p, q) in table.probs().iter().zip(fit.probs()) {
            worst = worst.max((p - q).abs() / p.max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub k: f64,
    pub h: f64,
    pub l: f64,
    pub max_residual: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn is_flat(x: &[f64], tol: f64) -> bool {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= tol
}

/// Least-squares slope and intercept of `y` on `x`. The slope only uses
/// deviations from the means, so it ignores location.
fn affine_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let k = sxy / sxx;
    (k, my - k * mx)
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, x| m.max(x.abs()))
}

/// Whether `q = (k u + h, α + l, kλ)` for some `k > 0`. `λ` residuals are
/// relative. Two constant processes are compared on `α` only.
pub fn params_equivalent(p: &SoftmaxParams, q: &SoftmaxParams, tol: f64) -> Result<EquivalenceReport> {
    if p.universe != q.universe || p.grid != q.grid {
        return Err(Error::invalid("parameter sets live on different universes or grids"));
    }
    let l = mean(&q.alpha) - mean(&p.alpha);
    let alpha_res = max_abs(q.alpha.iter().zip(&p.alpha).map(|(b, a)| b - a - l));
    let (pc, qc) = (is_flat(&p.u, tol), is_flat(&q.u, tol));
    if pc || qc {
        let h = mean(&q.u) - mean(&p.u);
        let max_residual = if pc && qc { alpha_res } else { f64::INFINITY };
        return Ok(EquivalenceReport {
            equivalent: max_residual <= tol,
            k: if pc && qc { 1.0 } else { f64::NAN },
            h,
            l,
            max_residual,
        });
    }
    let (k, h) = affine_fit(&p.u, &q.u);
    let u_res = max_abs(q.u.iter().zip(&p.u).map(|(b, a)| b - k * a - h));
    let lambda_res = if k > 0.0 {
        max_abs(q.lambda.iter().zip(&p.lambda).map(|(b, a)| b / (k * a) - 1.0))
    } else {
        f64::INFINITY
    };
    let max_residual = u_res.max(alpha_res).max(lambda_res);
    Ok(EquivalenceReport { equivalent: max_residual <= tol, k, h, l, max_residual })
}

/// Neural parametrization: utilities `v`, initial distribution `μ` and one
/// threshold per deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralParams {
    pub v: Vec<f64>,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
}

impl NeuralParams {
    /// `v = k u + h`, `μ ∝ e^α`, `β = 1/(kλ)`.
    pub fn from_behavioral(p: &SoftmaxParams, k: f64, h: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!("scale {k} is not a positive real")));
        }
        Ok(NeuralParams {
            v: p.u.iter().map(|u| k * u + h).collect(),
            mu: normalized_exp(&p.alpha),
            beta: p.lambda.iter().map(|l| 1.0 / (k * l)).collect(),
        })
    }
}

fn normalized_exp(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = x.iter().map(|a| (a - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|a| a / s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossValidationReport {
    pub equivalent: bool,
    pub j: f64,
    pub k: f64,
    pub h: f64,
    pub v_residual: f64,
    pub mu_residual: f64,
    /// Relative.
    pub beta_residual: f64,
    pub max_residual: f64,
}

/// Checks `v = k u + h`, `μ = j e^α` and `β = 1/(kλ)` with `j` fixed by
/// normalization of `μ`.
pub fn cross_validate(
    behavioral: &SoftmaxParams,
    neural: &NeuralParams,
    tol: f64,
) -> Result<CrossValidationReport> {
    let n = behavioral.len();
    if neural.v.len() != n || neural.mu.len() != n {
        return Err(Error::invalid(format!("neural parameters must cover {n} alternatives")));
    }
    if neural.beta.len() != behavioral.lambda.len() {
        return Err(Error::invalid("one threshold per deadline is required"));
    }
    if let Some(m) = neural.mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::InvalidNeuralBias(format!("initial probability {m} is not positive")));
    }
    let total: f64 = neural.mu.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidNeuralBias(format!("initial distribution sums to {total}")));
    }
    if is_flat(&behavioral.u, 0.0) {
        return Err(Error::invalid("behavioral utility is constant; the scale k is not identified"));
    }
    let (k, h) = affine_fit(&behavioral.u, &neural.v);
    let v_residual = max_abs(neural.v.iter().zip(&behavioral.u).map(|(v, u)| v - k * u - h));
    let top = behavioral.alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let j = 1.0 / behavioral.alpha.iter().map(|a| (a - top).exp()).sum::<f64>() * (-top).exp();
    let mu_residual = max_abs(
        neural.mu.iter().zip(normalized_exp(&behavioral.alpha)).map(|(m, e)| m - e),
    );
    let beta_residual = if k > 0.0 {
        max_abs(neural.beta.iter().zip(&behavioral.lambda).map(|(b, l)| b * k * l - 1.0))
    } else {
        f64::INFINITY
    };
    let max_residual = v_residual.max(mu_residual).max(beta_residual);
    Ok(CrossValidationReport {
        equivalent: max_residual <= tol,
        j,
        k,
        h,
        v_residual,
        mu_residual,
        beta_residual,
        max_residual,
    })
}
