//! Binary value-based drift-diffusion comparisons `DDM(v, β, ζ)`.
//!
//! The net evidence for proposal `a` against incumbent `b` follows
//! `dZ = [v(a) − v(b)] dτ + √2 dW` from `Z = ζ(a,b)` until it hits `±β`.

mod gibbs;

pub use gibbs::{
    gibbs_posterior, gibbs_prior_binary, is_transitive, prior_from_transitive_zeta,
    zeta_from_global_prior, zeta_from_prior_binary, GibbsPrior, TransitivityReport, G_SERIES_SWITCH,
    TRANSITIVITY_TOL,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::choice::Menu;
use crate::error::{Error, Result};

/// Drift magnitude below which the zero-drift expansion is used.
pub const DELTA_SWITCH: f64 = 1e-8;

/// Default Euler–Maruyama step in seconds.
pub const DEFAULT_DT: f64 = 1e-4;

/// Default step budget for one comparison.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;

/// A value-based DDM over a finite set of alternatives. `ζ` is stored for
/// `a < b` only; `ζ(b, a) = −ζ(a, b)` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DdmSpec {
    labels: Vec<String>,
    v: Vec<f64>,
    beta: f64,
    zeta: Vec<f64>,
}

fn packed(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < n);
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

impl DdmSpec {
    /// Unbiased spec (`ζ ≡ 0`).
    pub fn unbiased(labels: Vec<String>, v: Vec<f64>, beta: f64) -> Result<Self> {
        let n = v.len();
        Self::new(labels, v, beta, vec![0.0; n * n.saturating_sub(1) / 2])
    }

    /// `zeta` lists `ζ(a, b)` for `a < b` in row-major order.
    pub fn new(labels: Vec<String>, v: Vec<f64>, beta: f64, zeta: Vec<f64>) -> Result<Self> {
        let n = v.len();
        if n == 0 || labels.len() != n {
            return Err(Error::invalid(format!(
                "need one label per utility (got {} labels, {n} utilities)",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!("duplicate label {l:?}")));
            }
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("threshold {beta} is not a positive real")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("neural utilities must be finite"));
        }
        if zeta.len() != n * (n - 1) / 2 {
            return Err(Error::invalid(format!(
                "expected {} initial conditions, got {}",
                n * (n - 1) / 2,
                zeta.len()
            )));
        }
        if let Some(z) = zeta.iter().find(|z| !(z.abs() < beta)) {
            return Err(Error::invalid(format!(
                "initial condition {z} outside (-{beta}, {beta})"
            )));
        }
        Ok(DdmSpec { labels, v, beta, zeta })
    }

    pub fn with_indexed_labels(v: Vec<f64>, beta: f64, zeta: Vec<f64>) -> Result<Self> {
        let labels = (0..v.len()).map(|i| i.to_string()).collect();
        Self::new(labels, v, beta, zeta)
    }

    /// Builds `ζ` from a function evaluated on `a < b`.
    pub fn from_fn(
        labels: Vec<String>,
        v: Vec<f64>,
        beta: f64,
        mut zeta: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let n = v.len();
        let mut packed = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                packed.push(zeta(a, b));
            }
        }
        Self::new(labels, v, beta, packed)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ζ(a, b)`; zero on the diagonal.
    pub fn zeta(&self, a: usize, b: usize) -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.zeta[packed(self.len(), a, b)],
            Greater => -self.zeta[packed(self.len(), b, a)],
            Equal => 0.0,
        }
    }

    pub fn is_unbiased(&self) -> bool {
        self.zeta.iter().all(|&z| z == 0.0)
    }

    /// Same DDM with the threshold replaced; `ζ` is kept as is.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.labels.clone(), self.v.clone(), beta, self.zeta.clone())
    }

    /// Sub-DDM on the members of `menu`, re-indexed in menu order.
    pub fn restrict(&self, menu: &Menu) -> Result<Self> {
        let m = menu.members();
        if let Some(&a) = m.iter().find(|&&a| a >= self.len()) {
            return Err(Error::NotInMenu(a));
        }
        let labels = m.iter().map(|&a| self.labels[a].clone()).collect();
        let v = m.iter().map(|&a| self.v[a]).collect();
        Self::from_fn(labels, v, self.beta, |i, j| self.zeta(m[i], m[j]))
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        if a >= self.len() {
            return Err(Error::NotInMenu(a));
        }
        if b >= self.len() {
            return Err(Error::NotInMenu(b));
        }
        if a == b {
            return Err(Error::invalid("a comparison needs two distinct alternatives"));
        }
        Ok(())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `{"v": {label: value}, "beta": r, "zeta": [[a, b, value], ...]}` with
    /// only nonzero `a < b` entries listed.
    pub fn to_json(&self) -> Value {
        let v: Map<String, Value> = self
            .labels
            .iter()
            .zip(&self.v)
            .map(|(l, x)| (l.clone(), Value::from(*x)))
            .collect();
        let n = self.len();
        let mut zeta = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let z = self.zeta(a, b);
                if z != 0.0 {
                    zeta.push(serde_json::json!([self.labels[a], self.labels[b], z]));
                }
            }
        }
        serde_json::json!({"v": v, "beta": self.beta, "zeta": zeta})
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let file: DdmSpecFile = serde_json::from_value(doc.clone())
            .map_err(|e| Error::schema("", e.to_string()))?;
        let labels: Vec<String> = file.v.keys().cloned().collect();
        let v = file
            .v
            .iter()
            .map(|(l, x)| {
                x.as_f64()
                    .ok_or_else(|| Error::schema(format!("/v/{l}"), "expected a number"))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = v.len();
        let mut zeta = vec![None; n * n.saturating_sub(1) / 2];
        for (i, (a, b, z)) in file.zeta.into_iter().enumerate() {
            let path = format!("/zeta/{i}");
            let find = |l: &str| {
                labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::schema(&path, format!("unknown label {l:?}")))
            };
            let (ia, ib) = (find(&a)?, find(&b)?);
            let (lo, hi, z) = match ia.cmp(&ib) {
                std::cmp::Ordering::Less => (ia, ib, z),
                std::cmp::Ordering::Greater => (ib, ia, -z),
                std::cmp::Ordering::Equal => {
                    return Err(Error::schema(path, "initial conditions need distinct alternatives"))
                }
            };
            let slot = &mut zeta[packed(n, lo, hi)];
            if slot.replace(z).is_some() {
                return Err(Error::schema(path, format!("pair ({a}, {b}) listed twice")));
            }
        }
        Self::new(labels, v, file.beta, zeta.into_iter().map(|z| z.unwrap_or(0.0)).collect())
            .map_err(|e| Error::schema("", e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DdmSpecFile {
    v: Map<String, Value>,
    beta: f64,
    #[serde(default)]
    zeta: Vec<(String, String, f64)>,
}

/// `ℙ(success)` for a diffusion with drift `delta`, start `start` and
/// barriers `±beta`: `(1 − e^{−(ζ+β)δ}) / (1 − e^{−2βδ})`.
pub fn hit_upper_probability(delta: f64, start: f64, beta: f64) -> f64 {
    let up = start + beta;
    let width = 2.0 * beta;
    if delta.abs() < DELTA_SWITCH {
        // first-order expansion keeps the branch continuous to ~1e-16
        return up / width * (1.0 + 0.5 * (width - up) * delta);
    }
    if delta > 0.0 {
        (-up * delta).exp_m1() / (-width * delta).exp_m1()
    } else {
        let x = -delta;
        (-(width - up) * x).exp() * (-up * x).exp_m1() / (-width * x).exp_m1()
    }
}

/// Acceptance probability `ℙ^ζ(a, b)` that proposal `a` beats incumbent `b`.
pub fn acceptance_prob(spec: &DdmSpec, a: usize, b: usize) -> Result<f64> {
    spec.check_pair(a, b)?;
    Ok(hit_upper_probability(spec.v[a] - spec.v[b], spec.zeta(a, b), spec.beta))
}

/// `ln ℙ^ζ(a, b)` without forming tiny probabilities first.
pub fn log_acceptance_prob(spec: &DdmSpec, a: usize, b: usize) -> Result<f64> {
    spec.check_pair(a, b)?;
    let delta = spec.v[a] - spec.v[b];
    let (z, beta) = (spec.zeta(a, b), spec.beta);
    if delta < -DELTA_SWITCH {
        let x = -delta;
        let (up, width) = (z + beta, 2.0 * beta);
        Ok(-(width - up) * x + ((-up * x).exp_m1() / (-width * x).exp_m1()).ln())
    } else {
        Ok(hit_upper_probability(delta, z, beta).ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonOutcome {
    pub winner: usize,
    /// Response time in seconds.
    pub rt: f64,
}

/// Euler–Maruyama walker for one comparison. The increments are exact for
/// Brownian motion with drift; barrier crossings between grid points are
/// caught with the Brownian-bridge crossing probability, which removes the
/// `O(√dt)` overshoot bias of the plain scheme.
#[derive(Debug, Clone, Copy)]
pub struct Diffusion {
    pub drift: f64,
    pub start: f64,
    pub beta: f64,
    pub dt: f64,
}

/// Result of a possibly truncated walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Walk {
    Upper(u64),
    Lower(u64),
    /// Step limit reached with the walk still inside the barriers.
    Unfinished,
}

impl Diffusion {
    /// Walks for at most `limit` steps.
    pub fn walk<R: Rng + ?Sized>(&self, rng: &mut R, limit: u64) -> Walk {
        let beta = self.beta;
        let mean = self.drift * self.dt;
        let sd = (2.0 * self.dt).sqrt();
        // bridge crossing probabilities below e^-40 are ignored
        let horizon = 40.0 * self.dt;
        let mut z = self.start;
        let mut step = 0u64;
        while step < limit {
            step += 1;
            let noise: f64 = rng.sample(StandardNormal);
            let next = z + mean + sd * noise;
            if next >= beta {
                return Walk::Upper(step);
            }
            if next <= -beta {
                return Walk::Lower(step);
            }
            let up = (beta - z) * (beta - next);
            let down = (beta + z) * (beta + next);
            if up < horizon || down < horizon {
                let p_up = (-up / self.dt).exp();
                let p_down = (-down / self.dt).exp();
                let u: f64 = rng.random();
                if u < p_up {
                    return Walk::Upper(step);
                }
                if u < p_up + p_down {
                    return Walk::Lower(step);
                }
            }
            z = next;
        }
        Walk::Unfinished
    }
}

/// Simulates one comparison of proposal `a` against incumbent `b`.
pub fn sample_comparison<R: Rng + ?Sized>(
    spec: &DdmSpec,
    a: usize,
    b: usize,
    rng: &mut R,
    dt: f64,
) -> Result<ComparisonOutcome> {
    sample_comparison_with_budget(spec, a, b, rng, dt, DEFAULT_MAX_STEPS)
}

pub fn sample_comparison_with_budget<R: Rng + ?Sized>(
    spec: &DdmSpec,
    a: usize,
    b: usize,
    rng: &mut R,
    dt: f64,
    max_steps: u64,
) -> Result<ComparisonOutcome> {
    spec.check_pair(a, b)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("step {dt} is not a positive real")));
    }
    let walk = Diffusion {
        drift: spec.v[a] - spec.v[b],
        start: spec.zeta(a, b),
        beta: spec.beta,
        dt,
    }
    .walk(rng, max_steps);
    match walk {
        Walk::Upper(steps) => Ok(ComparisonOutcome { winner: a, rt: steps as f64 * dt }),
        Walk::Lower(steps) => Ok(ComparisonOutcome { winner: b, rt: steps as f64 * dt }),
        Walk::Unfinished => Err(Error::Runaway(max_steps)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(delta: f64, zeta: f64, beta: f64) -> DdmSpec {
        DdmSpec::with_indexed_labels(vec![delta, 0.0], beta, vec![zeta]).unwrap()
    }

    #[test]
    fn symmetric_unbiased_is_a_coin() {
        for beta in [0.1, 0.849, 3.0] {
            assert_eq!(acceptance_prob(&pair(0.0, 0.0, beta), 0, 1).unwrap(), 0.5);
        }
    }

    #[test]
    fn zero_drift_is_linear_in_start() {
        assert_eq!(acceptance_prob(&pair(0.0, 0.5, 1.0), 0, 1).unwrap(), 0.75);
        assert_eq!(acceptance_prob(&pair(0.0, 0.5, 1.0), 1, 0).unwrap(), 0.25);
    }

    #[test]
    fn unbiased_is_logistic() {
        let p = acceptance_prob(&pair(1.0, 0.0, 0.849), 0, 1).unwrap();
        assert_abs_diff_eq!(p, 1.0 / (1.0 + (-0.849f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.700_357_327_588_125_6, epsilon = 1e-15);
    }

    #[test]
    fn complementarity_and_range() {
        for &delta in &[-50.0, -3.0, -1e-9, 0.0, 1e-12, 1e-7, 0.4, 50.0] {
            for &zeta in &[-0.99, -0.3, 0.0, 0.6, 0.99] {
                let s = pair(delta, zeta, 1.0);
                let p = acceptance_prob(&s, 0, 1).unwrap();
                let q = acceptance_prob(&s, 1, 0).unwrap();
                // 1 − e^{−100} is not representable, so strictness is checked where it can hold
                assert!(p > 0.0 && p <= 1.0, "{delta} {zeta} {p}");
                if delta.abs() <= 10.0 {
                    assert!(p < 1.0);
                }
                assert_abs_diff_eq!(p + q, 1.0, epsilon = 1e-12);
                let lp = log_acceptance_prob(&s, 0, 1).unwrap();
                assert_abs_diff_eq!(lp, p.ln(), epsilon = 1e-12 * lp.abs().max(1.0));
            }
        }
    }

    #[test]
    fn continuous_across_the_zero_drift_switch() {
        for &zeta in &[-0.7, 0.0, 0.45] {
            for beta in [0.5, 1.442] {
                let below = hit_upper_probability(DELTA_SWITCH * (1.0 - 1e-9), zeta, beta);
                let above = hit_upper_probability(DELTA_SWITCH * (1.0 + 1e-9), zeta, beta);
                assert!((below - above).abs() < 1e-10, "{zeta} {beta}: {below} vs {above}");
                let below = hit_upper_probability(-DELTA_SWITCH * (1.0 - 1e-9), zeta, beta);
                let above = hit_upper_probability(-DELTA_SWITCH * (1.0 + 1e-9), zeta, beta);
                assert!((below - above).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = pair(0.3, 0.1, 0.849);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_comparison(&s, 0, 1, &mut rng, DEFAULT_DT).unwrap()
        };
        assert_eq!(draw(7), draw(7));
        let o = draw(7);
        assert!(o.rt > 0.0 && (o.winner == 0 || o.winner == 1));
    }

    #[test]
    fn budget_exhaustion_is_runaway() {
        let s = pair(0.0, 0.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = sample_comparison_with_budget(&s, 0, 1, &mut rng, 1e-6, 10);
        assert_eq!(r, Err(Error::Runaway(10)));
    }

    #[test]
    fn spec_validation() {
        assert!(DdmSpec::with_indexed_labels(vec![0.0, 1.0], 1.0, vec![1.0]).is_err());
        assert!(DdmSpec::with_indexed_labels(vec![0.0, 1.0], 0.0, vec![0.0]).is_err());
        assert!(DdmSpec::with_indexed_labels(vec![0.0, 1.0, 2.0], 1.0, vec![0.0]).is_err());
        let s = DdmSpec::with_indexed_labels(vec![0.0, 1.0, 2.0], 1.0, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(s.zeta(0, 2), 0.2);
        assert_eq!(s.zeta(2, 1), -0.3);
        let r = s.restrict(&Menu::new(vec![0, 2], 3).unwrap()).unwrap();
        assert_eq!(r.zeta(1, 0), -0.2);
        assert_eq!(r.labels(), &["0", "2"]);
    }

    #[test]
    fn json_keeps_label_order_and_upper_entries() {
        let text = r#"{"v": {"z": 1.0, "a": 0.0, "m": 2.0}, "beta": 1.0,
                       "zeta": [["m", "z", 0.25]]}"#;
        let s = DdmSpec::from_json(&serde_json::from_str(text).unwrap()).unwrap();
        assert_eq!(s.labels(), &["z", "a", "m"]);
        assert_eq!(s.zeta(0, 2), -0.25);
        let back = DdmSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.to_json()["zeta"], serde_json::json!([["z", "m", -0.25]]));
    }
}
