//! Gibbs transition rule, the binary and global Gibbs bijections between
//! initial conditions and ex-ante priors, and transitivity of a DDM.

use serde_json::{Map, Value};

use super::{log_acceptance_prob, DdmSpec, DELTA_SWITCH};
use crate::error::{Error, Result};

/// Below this `|x|` the `g` function switches to its second-order expansion.
pub const G_SERIES_SWITCH: f64 = 1e-6;

/// Default tolerance on the cycle log-residual.
pub const TRANSITIVITY_TOL: f64 = 1e-9;

const PRIOR_SUM_TOL: f64 = 1e-12;

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln|e^y − 1|`.
fn ln_abs_expm1(y: f64) -> f64 {
    if y > 0.0 {
        y + (-(-y).exp_m1()).ln()
    } else {
        (-y.exp_m1()).ln()
    }
}

/// Posterior `π e^{βv(a)} / (π e^{βv(a)} + (1 − π) e^{βv(b)})`.
pub fn gibbs_posterior(v_a: f64, v_b: f64, beta: f64, pi_ab: f64) -> f64 {
    logistic(beta * (v_a - v_b) + logit(pi_ab))
}

/// `ln π^ζ(a,b) − ln π^ζ(b,a) = ln ℙ^ζ(a,b) − ln ℙ^ζ(b,a) − βδ`.
///
/// Written through `expm1` so the result stays accurate when `δ` is small:
/// it equals `βδ + ln|e^{−(β+ζ)δ} − 1| − ln|e^{(β−ζ)δ} − 1|`.
pub(crate) fn prior_log_odds(spec: &DdmSpec, a: usize, b: usize) -> Result<f64> {
    spec.check_pair(a, b)?;
    let beta = spec.beta();
    let delta = spec.v()[a] - spec.v()[b];
    let z = spec.zeta(a, b);
    if delta.abs() < DELTA_SWITCH {
        // the first-order terms cancel, leaving ln((β+ζ)/(β−ζ)) + O(δ²)
        return Ok((z / beta).ln_1p() - (-z / beta).ln_1p());
    }
    Ok(beta * delta + ln_abs_expm1(-(beta + z) * delta) - ln_abs_expm1((beta - z) * delta))
}

/// Ex-ante probability `π^ζ(a,b)` whose Gibbs transition reproduces
/// `ℙ^ζ(a,b)`.
pub fn gibbs_prior_binary(spec: &DdmSpec, a: usize, b: usize) -> Result<f64> {
    Ok(logistic(prior_log_odds(spec, a, b)?))
}

/// `g(x, y) = ln((e^{y+x} + 1)/(e^{y−x} + 1))/x − 1`.
pub fn g(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if x.abs() < G_SERIES_SWITCH {
        let t = (0.5 * y).tanh();
        return t - x * x * t * (1.0 - t * t) / 12.0;
    }
    if x.abs() > 30.0 || y < -700.0 {
        return (softplus(y + x) - softplus(y - x)) / x - 1.0;
    }
    let q = 2.0 * x.sinh() / ((-y).exp() + (-x).exp());
    q.ln_1p() / x - 1.0
}

/// Initial condition `ζ = β g(βδ, logit π)` that makes the DDM match the
/// Gibbs transition from the prior `pi_ab`.
pub fn zeta_from_prior_binary(v_a: f64, v_b: f64, beta: f64, pi_ab: f64) -> f64 {
    zeta_from_log_odds(v_a - v_b, beta, logit(pi_ab))
}

fn zeta_from_log_odds(delta: f64, beta: f64, y: f64) -> f64 {
    beta * g(beta * delta, y)
}

/// A fully supported prior over the alternatives of a DDM.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsPrior {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl GibbsPrior {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() || probs.is_empty() {
            return Err(Error::invalid("need one probability per label"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::invalid(format!("prior mass {p} is not positive")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::invalid(format!("prior sums to {sum}")));
        }
        Ok(GibbsPrior { labels, probs })
    }

    /// Normalizes positive weights.
    pub fn from_weights(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("prior weight {w} is not positive")));
        }
        let sum: f64 = weights.iter().sum();
        Self::new(labels, weights.iter().map(|w| w / sum).collect())
    }

    pub fn from_log_weights(labels: Vec<String>, logs: &[f64]) -> Result<Self> {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::invalid("prior log-weights must be finite"));
        }
        let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        Self::from_weights(labels, &w)
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        Self::from_weights(labels, &vec![1.0; n])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let m: Map<String, Value> = self
            .labels
            .iter()
            .zip(&self.probs)
            .map(|(l, p)| (l.clone(), Value::from(*p)))
            .collect();
        Value::Object(m)
    }

    /// Reads `{label: prob}` and orders it as `labels`. Probabilities are
    /// renormalized if their sum is off by more than the storage tolerance.
    pub fn from_json(doc: &Value, labels: &[String]) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::schema("", "expected an object mapping labels to probabilities"))?;
        for key in obj.keys() {
            if !labels.contains(key) {
                return Err(Error::schema(format!("/{key}"), "unknown label"));
            }
        }
        let mut w = Vec::with_capacity(labels.len());
        for l in labels {
            let p = obj
                .get(l)
                .ok_or_else(|| Error::schema("", format!("missing probability for {l:?}")))?;
            let p = p
                .as_f64()
                .filter(|p| p.is_finite() && *p > 0.0)
                .ok_or_else(|| Error::schema(format!("/{l}"), "expected a positive number"))?;
            w.push(p);
        }
        Self::from_weights(labels.to_vec(), &w).map_err(|e| Error::schema("", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitivityReport {
    pub transitive: bool,
    pub tolerance: f64,
    /// Triple with the largest cycle residual, if there are any triples.
    pub worst_triple: Option<[usize; 3]>,
    pub worst_residual: f64,
}

/// Compares `ln ℙ(b,a) + ln ℙ(c,b) + ln ℙ(a,c)` with the reverse cycle on
/// every triple.
pub fn is_transitive(spec: &DdmSpec, tol: f64) -> Result<TransitivityReport> {
    let n = spec.len();
    let mut lp = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                lp[a * n + b] = log_acceptance_prob(spec, a, b)?;
            }
        }
    }
    let p = |a: usize, b: usize| lp[a * n + b];
    let mut worst: Option<([usize; 3], f64)> = None;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let forward = p(b, a) + p(c, b) + p(a, c);
                let backward = p(c, a) + p(b, c) + p(a, b);
                let r = (forward - backward).abs();
                if worst.is_none_or(|(_, w)| r > w) {
                    worst = Some(([a, b, c], r));
                }
            }
        }
    }
    let worst_residual = worst.map_or(0.0, |(_, r)| r);
    Ok(TransitivityReport {
        transitive: worst_residual <= tol,
        tolerance: tol,
        worst_triple: worst.map(|(t, _)| t),
        worst_residual,
    })
}

/// Global prior `π^ζ` of a transitive DDM, anchored at the first alternative.
pub fn prior_from_transitive_zeta(spec: &DdmSpec) -> Result<GibbsPrior> {
    let report = is_transitive(spec, TRANSITIVITY_TOL)?;
    if !report.transitive {
        return Err(Error::Intransitive {
            triple: report.worst_triple.unwrap_or_default(),
            residual: report.worst_residual,
        });
    }
    prior_through(spec, 0)
}

/// `ln π(a) − ln π(r)` from the pairs through `r`, normalized.
pub(crate) fn prior_through(spec: &DdmSpec, r: usize) -> Result<GibbsPrior> {
    let logs = (0..spec.len())
        .map(|a| if a == r { Ok(0.0) } else { prior_log_odds(spec, a, r) })
        .collect::<Result<Vec<_>>>()?;
    GibbsPrior::from_log_weights(spec.labels().to_vec(), &logs)
}

/// Initial conditions whose Gibbs priors are the pairwise conditionals of
/// `pi`. The result is transitive by construction.
pub fn zeta_from_global_prior(v: &[f64], beta: f64, pi: &GibbsPrior) -> Result<DdmSpec> {
    if v.len() != pi.len() {
        return Err(Error::invalid(format!(
            "{} utilities for a prior over {} alternatives",
            v.len(),
            pi.len()
        )));
    }
    let lp: Vec<f64> = pi.probs.iter().map(|p| p.ln()).collect();
    DdmSpec::from_fn(pi.labels.clone(), v.to_vec(), beta, |a, b| {
        zeta_from_log_odds(v[a] - v[b], beta, lp[a] - lp[b])
    })
    .map_err(|e| Error::InvalidNeuralBias(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddm::acceptance_prob;
    use approx::assert_abs_diff_eq;

    fn pair(delta: f64, zeta: f64, beta: f64) -> DdmSpec {
        DdmSpec::with_indexed_labels(vec![delta, 0.0], beta, vec![zeta]).unwrap()
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn posterior_examples() {
        assert_abs_diff_eq!(
            gibbs_posterior(1.3, 0.2, 0.849, 0.5),
            1.0 / (1.0 + (-0.849f64 * 1.1).exp()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(gibbs_posterior(0.7, 0.7, 2.0, 0.31), 0.31, epsilon = 1e-15);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(gibbs_posterior(1.0, 0.0, 1.0, 0.25), e / (3.0 + e), epsilon = 1e-15);
        assert_abs_diff_eq!(e / (3.0 + e), 0.475_366_886_418_671_7, epsilon = 1e-15);
    }

    #[test]
    fn binary_prior_examples() {
        for (d, b) in [(0.0, 1.0), (2.0, 0.849), (-7.0, 1.442)] {
            assert_abs_diff_eq!(gibbs_prior_binary(&pair(d, 0.0, b), 0, 1).unwrap(), 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(gibbs_prior_binary(&pair(0.0, 0.5, 1.0), 0, 1).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta_from_prior_binary(1.0, -2.0, 1.442, 0.5), 0.0);
        assert_abs_diff_eq!(zeta_from_prior_binary(0.3, 0.3, 1.0, 0.75), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn g_branches_meet() {
        for y in [-5.0, -0.3, 0.0, 1.2, 8.0] {
            let below = g(G_SERIES_SWITCH * (1.0 - 1e-9), y);
            let above = g(G_SERIES_SWITCH * (1.0 + 1e-9), y);
            assert!((below - above).abs() < 1e-10, "{y}: {below} {above}");
            let below = g(30.0 * (1.0 - 1e-12), y);
            let above = g(30.0 * (1.0 + 1e-12), y);
            assert!((below - above).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_transition_reproduces_acceptance() {
        for &d in &[-3.0, -0.2, 1e-9, 0.5, 4.0] {
            for &z in &[-0.8, 0.0, 0.3] {
                let s = pair(d, z, 1.0);
                let pi = gibbs_prior_binary(&s, 0, 1).unwrap();
                assert_abs_diff_eq!(
                    gibbs_posterior(d, 0.0, 1.0, pi),
                    acceptance_prob(&s, 0, 1).unwrap(),
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn intransitive_cycle_is_detected() {
        let beta = 1.0;
        let s = DdmSpec::with_indexed_labels(vec![0.0; 3], beta, vec![0.3 * beta; 3]).unwrap();
        let r = is_transitive(&s, TRANSITIVITY_TOL).unwrap();
        assert!(!r.transitive);
        assert_eq!(r.worst_triple, Some([0, 1, 2]));
        // zero drift: P(a,b) = (1 + ζ/β)/2 for a < b
        let up = (1.3f64 / 2.0).ln();
        let down = (0.7f64 / 2.0).ln();
        // forward: P(1,0) P(2,1) P(0,2) = down, down, up; backward: up, up, down
        assert_abs_diff_eq!(r.worst_residual, (up - down).abs(), epsilon = 1e-14);
        assert!(matches!(prior_from_transitive_zeta(&s), Err(Error::Intransitive { .. })));
    }

    #[test]
    fn small_universes_are_vacuously_transitive() {
        let s = pair(1.0, 0.4, 1.0);
        let r = is_transitive(&s, 0.0).unwrap();
        assert!(r.transitive);
        assert_eq!(r.worst_triple, None);
    }

    #[test]
    fn unbiased_prior_is_uniform() {
        let s = DdmSpec::unbiased(labels(4), vec![0.1, -2.0, 3.0, 0.5], 1.442).unwrap();
        let p = prior_from_transitive_zeta(&s).unwrap();
        for &x in p.probs() {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_prior_gives_null_bias() {
        let pi = GibbsPrior::uniform(labels(3)).unwrap();
        let s = zeta_from_global_prior(&[0.0, 1.0, -1.0], 0.849, &pi).unwrap();
        assert!(s.is_unbiased());
    }

    #[test]
    fn global_matches_binary_for_two_alternatives() {
        let pi = GibbsPrior::new(labels(2), vec![0.3, 0.7]).unwrap();
        let s = zeta_from_global_prior(&[0.4, -0.2], 1.2, &pi).unwrap();
        assert_abs_diff_eq!(
            s.zeta(0, 1),
            zeta_from_prior_binary(0.4, -0.2, 1.2, 0.3),
            epsilon = 1e-15
        );
    }

    #[test]
    fn prior_json_roundtrip_and_errors() {
        let pi = GibbsPrior::new(labels(3), vec![0.2, 0.3, 0.5]).unwrap();
        let back = GibbsPrior::from_json(&pi.to_json(), pi.labels()).unwrap();
        assert_eq!(back, pi);
        let bad = serde_json::json!({"x0": 0.5, "x1": 0.5, "zz": 0.1});
        assert!(matches!(GibbsPrior::from_json(&bad, &labels(2)), Err(Error::Schema { .. })));
        let bad = serde_json::json!({"x0": 0.5, "x1": 0.0});
        assert!(matches!(GibbsPrior::from_json(&bad, &labels(2)), Err(Error::Schema { .. })));
    }
}
