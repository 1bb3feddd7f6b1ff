//! Exploration kernels, the Metropolis-DDM runner, and the incumbent chain
//! it induces.

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::choice::{ChoiceDistribution, Menu};
use crate::ddm::{
    acceptance_prob, prior_from_transitive_zeta, sample_comparison_with_budget,
    DdmSpec, Diffusion, Walk, DEFAULT_MAX_STEPS,
};
use crate::error::{Error, Result};

/// Column sums of a kernel must be within this of one.
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub const ORACLE_TOL: f64 = 1e-12;
pub const ORACLE_MAX_ITERS: usize = 1_000_000;
pub const REVERSIBILITY_TOL: f64 = 1e-12;

/// Transition kernel over the alternatives of a menu. Entry `(a|b)` is the
/// probability of moving to `a` from `b`; positions follow the menu order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    menu: Menu,
    entries: Vec<f64>,
}

impl MarkovKernel {
    /// `rows[i][j]` is the probability of moving to `menu[i]` from `menu[j]`.
    pub fn new(menu: Menu, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = menu.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("kernel over {n} alternatives must be {n}x{n}")));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(x) = entries.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::invalid(format!("kernel entry {x} is not a probability")));
        }
        let k = MarkovKernel { menu, entries };
        for b in 0..n {
            let s: f64 = (0..n).map(|a| k.at(a, b)).sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(format!("column {b} sums to {s}")));
            }
        }
        Ok(k)
    }

    pub fn menu(&self) -> &Menu {
        &self.menu
    }

    pub fn len(&self) -> usize {
        self.menu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.menu.len() == 0
    }

    /// Entry by menu positions.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len() + j]
    }

    /// Entry `(a|b)` by alternative.
    pub fn get(&self, a: usize, b: usize) -> Result<f64> {
        Ok(self.at(self.menu.position(a)?, self.menu.position(b)?))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.at(i, j)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.column(j).iter().sum()).collect()
    }

    /// One step of the chain applied to a distribution over positions.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let n = self.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| self.at(i, j)).collect()).collect();
        serde_json::json!({"menu": self.menu.members(), "matrix": rows})
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Topology {
    #[default]
    Uniform,
    /// Undirected edges between menu positions.
    Graph { edges: Vec<(usize, usize)> },
}

fn distances(n: usize, edges: &[(usize, usize)]) -> Result<Vec<Vec<usize>>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::invalid(format!("edge ({a}, {b}) leaves the menu of size {n}")));
        }
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut out = Vec::with_capacity(n);
    for s in 0..n {
        let mut d = vec![usize::MAX; n];
        d[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if d[y] == usize::MAX {
                    d[y] = d[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        if let Some(t) = d.iter().position(|&x| x == usize::MAX) {
            return Err(Error::invalid(format!("exploration graph is disconnected: no path {s} to {t}")));
        }
        out.push(d);
    }
    Ok(out)
}

/// Symmetric exploration matrix. On a graph, `Q(a|b) = k d(a,b)^{−ρ}` with
/// one constant `k` for the whole menu; leftover mass stays on the diagonal.
pub fn build_exploration(menu: &Menu, topology: &Topology, rho: f64) -> Result<MarkovKernel> {
    let n = menu.len();
    if n < 2 {
        return Err(Error::invalid("exploration needs at least two alternatives"));
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::invalid(format!("exploration aversion {rho} must be nonnegative")));
    }
    let mut rows = vec![vec![0.0; n]; n];
    match topology {
        Topology::Uniform => {
            for (i, row) in rows.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    if i != j {
                        *x = 1.0 / (n - 1) as f64;
                    }
                }
            }
        }
        Topology::Graph { edges } => {
            let d = distances(n, edges)?;
            let reach = |i: usize, j: usize| (d[i][j] as f64).powf(-rho);
            let widest = (0..n)
                .map(|j| (0..n).filter(|&i| i != j).map(|i| reach(i, j)).sum::<f64>())
                .fold(0.0, f64::max);
            let k = 1.0 / widest;
            for j in 0..n {
                let mut off = 0.0;
                for i in (0..n).filter(|&i| i != j) {
                    rows[i][j] = k * reach(i, j);
                    off += rows[i][j];
                }
                rows[j][j] = (1.0 - off).max(0.0);
            }
        }
    }
    MarkovKernel::new(menu.clone(), rows)
}

/// Incumbent chain `M(a|b) = Q(a|b) ℙ^ζ(a,b)`, diagonal as the remainder.
pub fn incumbent_matrix(q: &MarkovKernel, spec: &DdmSpec) -> Result<MarkovKernel> {
    let m = q.menu().members();
    let n = m.len();
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut off = 0.0;
        for i in (0..n).filter(|&i| i != j) {
            let x = if q.at(i, j) == 0.0 { 0.0 } else { q.at(i, j) * acceptance_prob(spec, m[i], m[j])? };
            rows[i][j] = x;
            off += x;
        }
        rows[j][j] = 1.0 - off;
    }
    MarkovKernel::new(q.menu().clone(), rows)
}

/// Stationary law `m(a) ∝ π^ζ(a) e^{βv(a)}` of the incumbent chain on `menu`.
pub fn stationary(spec: &DdmSpec, menu: &Menu) -> Result<ChoiceDistribution> {
    let sub = spec.restrict(menu)?;
    let prior = prior_from_transitive_zeta(&sub)?;
    let scores: Vec<f64> = prior
        .probs()
        .iter()
        .zip(sub.v())
        .map(|(p, v)| p.ln() + sub.beta() * v)
        .collect();
    ChoiceDistribution::from_log_weights(menu.clone(), &scores)
}

/// Power iteration from the uniform distribution.
pub fn stationary_oracle(m: &MarkovKernel, tol: f64, max_iters: usize) -> Result<ChoiceDistribution> {
    let n = m.len();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let y = m.apply(&x);
        let tv = 0.5 * x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>();
        x = y;
        if tv < tol {
            return ChoiceDistribution::from_weights(m.menu().clone(), x);
        }
    }
    Err(Error::NonConvergence(max_iters))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversibilityReport {
    pub reversible: bool,
    pub tolerance: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_residual: f64,
}

/// Detailed balance `M(a|b) m(b) = M(b|a) m(a)` on every pair.
pub fn check_reversibility(
    kernel: &MarkovKernel,
    m: &ChoiceDistribution,
    tol: f64,
) -> Result<ReversibilityReport> {
    let members = kernel.menu().members();
    if m.menu() != kernel.menu() {
        return Err(Error::invalid("distribution and kernel are over different menus"));
    }
    let p = m.probs();
    let mut worst: Option<((usize, usize), f64)> = None;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let r = (kernel.at(i, j) * p[j] - kernel.at(j, i) * p[i]).abs();
            if worst.is_none_or(|(_, w)| r > w) {
                worst = Some(((members[i], members[j]), r));
            }
        }
    }
    let worst_residual = worst.map_or(0.0, |(_, r)| r);
    Ok(ReversibilityReport {
        reversible: worst_residual <= tol,
        tolerance: tol,
        worst_pair: worst.map(|(p, _)| p),
        worst_residual,
    })
}

/// One comparison of the runner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub incumbent: usize,
    pub proposal: usize,
    pub winner: usize,
    /// Elapsed time when the comparison ends.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub initial: usize,
    pub steps: Vec<TraceStep>,
    pub choice: usize,
    /// Comparisons run, counting the one that crossed the deadline.
    pub iterations: usize,
    pub elapsed: f64,
}

impl RunTrace {
    /// One JSON record per comparison.
    pub fn to_json_lines(&self, labels: &[String]) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let rec = serde_json::json!({
                "iteration": i + 1,
                "incumbent": labels[s.incumbent],
                "proposal": labels[s.proposal],
                "winner": labels[s.winner],
                "tau": s.tau,
                "final": i + 1 == self.steps.len(),
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }
}

/// Samplers shared by the full and the fast runner.
struct Explorer {
    members: Vec<usize>,
    initial: WeightedIndex<f64>,
    /// Per incumbent position: proposal law, or `None` if `Q` keeps it fixed.
    proposals: Vec<Option<WeightedIndex<f64>>>,
}

impl Explorer {
    fn new(q: &MarkovKernel, mu: &ChoiceDistribution) -> Result<Self> {
        if mu.menu() != q.menu() {
            return Err(Error::invalid("initial distribution and exploration matrix are over different menus"));
        }
        let n = q.len();
        let initial = WeightedIndex::new(mu.probs())
            .map_err(|e| Error::invalid(format!("initial distribution: {e}")))?;
        let proposals = (0..n)
            .map(|j| {
                let w: Vec<f64> = (0..n).map(|i| if i == j { 0.0 } else { q.at(i, j) }).collect();
                WeightedIndex::new(&w).ok()
            })
            .collect();
        Ok(Explorer { members: q.menu().members().to_vec(), initial, proposals })
    }

    /// Next proposal position, skipping self-proposals. Skips take no time,
    /// so drawing from the off-diagonal part directly has the same law.
    fn propose<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Option<usize> {
        self.proposals[j].as_ref().map(|d| d.sample(rng))
    }
}

fn check_run(spec: &DdmSpec, q: &MarkovKernel, deadline: f64, dt: f64) -> Result<()> {
    if !(deadline.is_finite() && deadline > 0.0) {
        return Err(Error::invalid(format!("deadline {deadline} is not a positive real")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("step {dt} is not a positive real")));
    }
    if let Some(&a) = q.menu().members().iter().find(|&&a| a >= spec.len()) {
        return Err(Error::NotInMenu(a));
    }
    Ok(())
}

/// Metropolis-DDM under a deadline. The comparison that ends after the
/// deadline is discarded and the incumbent entering it is chosen.
pub fn run<R: Rng + ?Sized>(
    spec: &DdmSpec,
    q: &MarkovKernel,
    mu: &ChoiceDistribution,
    deadline: f64,
    rng: &mut R,
    dt: f64,
) -> Result<RunTrace> {
    check_run(spec, q, deadline, dt)?;
    let ex = Explorer::new(q, mu)?;
    let mut b = ex.initial.sample(rng);
    let initial = ex.members[b];
    let mut steps = Vec::new();
    let mut tau = 0.0;
    if q.len() > 1 {
        while let Some(a) = ex.propose(b, rng) {
            let o = sample_comparison_with_budget(spec, ex.members[a], ex.members[b], rng, dt, DEFAULT_MAX_STEPS)?;
            tau += o.rt;
            steps.push(TraceStep { incumbent: ex.members[b], proposal: ex.members[a], winner: o.winner, tau });
            if tau > deadline {
                break;
            }
            if o.winner == ex.members[a] {
                b = a;
            }
        }
    }
    Ok(RunTrace {
        initial,
        iterations: steps.len(),
        choice: ex.members[b],
        elapsed: tau,
        steps,
    })
}

/// Same law of the final choice as [`run`], without a trace: elapsed time is
/// counted in whole steps and the comparison that would cross the deadline
/// is cut off there instead of being run to completion.
pub struct FastRunner {
    ex: Explorer,
    walks: Vec<Option<Diffusion>>,
    n: usize,
    dt: f64,
    deadline_steps: u64,
}

impl FastRunner {
    pub fn new(spec: &DdmSpec, q: &MarkovKernel, mu: &ChoiceDistribution, deadline: f64, dt: f64) -> Result<Self> {
        check_run(spec, q, deadline, dt)?;
        let ex = Explorer::new(q, mu)?;
        let m = &ex.members;
        let n = m.len();
        let mut walks = vec![None; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                walks[i * n + j] = Some(Diffusion {
                    drift: spec.v()[m[i]] - spec.v()[m[j]],
                    start: spec.zeta(m[i], m[j]),
                    beta: spec.beta(),
                    dt,
                });
            }
        }
        // τ = steps·dt exceeds the deadline once steps > deadline/dt; the
        // slack absorbs rounding in the quotient
        let deadline_steps = (deadline / dt * (1.0 + 1e-12)).floor() as u64;
        Ok(FastRunner { ex, walks, n, dt, deadline_steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Final choice of one run.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RunSummary> {
        let mut b = self.ex.initial.sample(rng);
        let mut out = RunSummary { choice: 0, iterations: 0, completed: 0, completed_steps: 0 };
        if self.n > 1 {
            let mut left = self.deadline_steps;
            while let Some(a) = self.ex.propose(b, rng) {
                let walk = self.walks[a * self.n + b].as_ref().expect("distinct positions");
                let limit = left.min(DEFAULT_MAX_STEPS);
                out.iterations += 1;
                let steps = match walk.walk(rng, limit) {
                    Walk::Upper(s) => {
                        b = a;
                        s
                    }
                    Walk::Lower(s) => s,
                    Walk::Unfinished if limit == left => break,
                    Walk::Unfinished => return Err(Error::Runaway(DEFAULT_MAX_STEPS)),
                };
                left -= steps;
                out.completed += 1;
                out.completed_steps += steps;
            }
        }
        out.choice = self.ex.members[b];
        Ok(out)
    }
}

/// Outcome of one fast run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub choice: usize,
    /// Comparisons started, counting the one cut off at the deadline.
    pub iterations: u32,
    /// Comparisons that finished before the deadline.
    pub completed: u32,
    /// Steps spent in comparisons that finished before the deadline.
    pub completed_steps: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full(n: usize) -> Menu {
        Menu::new((0..n).collect(), n).unwrap()
    }

    fn path(n: usize) -> Topology {
        Topology::Graph { edges: (1..n).map(|i| (i - 1, i)).collect() }
    }

    #[test]
    fn uniform_exploration() {
        let q = build_exploration(&full(8), &Topology::Uniform, 0.0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(q.at(i, j), if i == j { 0.0 } else { 1.0 / 7.0 });
            }
        }
    }

    #[test]
    fn path_graph_limits() {
        let q = build_exploration(&full(3), &path(3), 1e-12).unwrap();
        assert_abs_diff_eq!(q.at(2, 0), q.at(1, 0), epsilon = 1e-11);
        assert_abs_diff_eq!(q.at(0, 1), 0.5, epsilon = 1e-11);
        let q = build_exploration(&full(3), &path(3), 10.0).unwrap();
        // k = 1/2 from the middle column, so Q(1|0) = 1/2 and Q(2|0) = 2^-11
        assert_abs_diff_eq!(q.at(1, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.at(2, 0), 0.5 / 1024.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.at(0, 0), 0.5 - 0.5 / 1024.0, epsilon = 1e-15);
        assert_eq!(q.at(1, 1), 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q.at(i, j), q.at(j, i));
            }
        }
    }

    #[test]
    fn disconnected_graph_and_tiny_menu_fail() {
        let g = Topology::Graph { edges: vec![(0, 1)] };
        assert!(build_exploration(&full(3), &g, 1.0).is_err());
        assert!(build_exploration(&Menu::new(vec![0], 1).unwrap(), &Topology::Uniform, 0.0).is_err());
    }

    #[test]
    fn binary_incumbent_matrix() {
        let spec = DdmSpec::with_indexed_labels(vec![0.0, 1.0], 1.0, vec![0.0]).unwrap();
        let q = build_exploration(&full(2), &Topology::Uniform, 0.0).unwrap();
        let m = incumbent_matrix(&q, &spec).unwrap();
        assert_abs_diff_eq!(m.at(1, 0), 0.731_058_578_630_004_9, epsilon = 1e-15);
        assert_abs_diff_eq!(m.at(0, 0), 0.268_941_421_369_995_1, epsilon = 1e-15);
        let s = stationary(&spec, &full(2)).unwrap();
        assert_abs_diff_eq!(s.probs()[0], 0.268_941_421_369_995_1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.probs()[1], 0.731_058_578_630_004_9, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_binary_oracle_is_uniform() {
        let k = MarkovKernel::new(full(2), vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let s = stationary_oracle(&k, ORACLE_TOL, ORACLE_MAX_ITERS).unwrap();
        assert_abs_diff_eq!(s.probs()[0], 0.5, epsilon = 1e-15);
        let r = check_reversibility(&k, &s, REVERSIBILITY_TOL).unwrap();
        assert!(r.reversible);
    }

    #[test]
    fn intransitive_chain_is_irreversible() {
        let spec = DdmSpec::with_indexed_labels(vec![0.0; 3], 1.0, vec![0.3; 3]).unwrap();
        let q = build_exploration(&full(3), &Topology::Uniform, 0.0).unwrap();
        let m = incumbent_matrix(&q, &spec).unwrap();
        let s = stationary_oracle(&m, 1e-15, ORACLE_MAX_ITERS).unwrap();
        let r = check_reversibility(&m, &s, REVERSIBILITY_TOL).unwrap();
        assert!(!r.reversible);
        assert!(r.worst_residual > 1e-3);
        assert!(stationary(&spec, &full(3)).is_err());
    }

    #[test]
    fn submenu_stationary_uses_member_values() {
        let spec = DdmSpec::unbiased((0..4).map(|i| i.to_string()).collect(), vec![0.0, 5.0, 1.0, 2.0], 0.5).unwrap();
        let menu = Menu::new(vec![0, 2], 4).unwrap();
        let s = stationary(&spec, &menu).unwrap();
        assert_abs_diff_eq!(s.prob(2).unwrap(), 1.0 / (1.0 + (-0.5f64).exp()), epsilon = 1e-15);
        let q = build_exploration(&menu, &Topology::Uniform, 0.0).unwrap();
        assert_abs_diff_eq!(
            incumbent_matrix(&q, &spec).unwrap().get(2, 0).unwrap(),
            1.0 / (1.0 + (-0.5f64).exp()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn runner_trace_is_consistent() {
        let spec = DdmSpec::unbiased((0..4).map(|i| i.to_string()).collect(), vec![0.0, 1.0, 2.0, 3.0], 0.849).unwrap();
        let menu = full(4);
        let q = build_exploration(&menu, &path(4), 1.0).unwrap();
        let mu = ChoiceDistribution::from_weights(menu, vec![1.0; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tr = run(&spec, &q, &mu, 2.0, &mut rng, 1e-3).unwrap();
        assert!(tr.iterations >= 1);
        assert!(tr.elapsed > 2.0);
        let mut prev = 0.0;
        let mut inc = tr.initial;
        for s in &tr.steps {
            assert!(s.tau > prev);
            prev = s.tau;
            assert_eq!(s.incumbent, inc);
            assert!(s.winner == s.incumbent || s.winner == s.proposal);
            assert_ne!(s.proposal, s.incumbent);
            inc = s.winner;
        }
        assert_eq!(tr.choice, tr.steps.last().unwrap().incumbent);
        let lines = tr.to_json_lines(spec.labels());
        assert_eq!(lines.lines().count(), tr.iterations);

        let mut again = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(run(&spec, &q, &mu, 2.0, &mut again, 1e-3).unwrap(), tr);
    }

    #[test]
    fn singleton_menu_returns_at_once() {
        let spec = DdmSpec::unbiased(vec!["a".into(), "b".into()], vec![0.0, 1.0], 1.0).unwrap();
        let menu = Menu::new(vec![1], 2).unwrap();
        let q = MarkovKernel::new(menu.clone(), vec![vec![1.0]]).unwrap();
        let mu = ChoiceDistribution::from_weights(menu, vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = run(&spec, &q, &mu, 1.0, &mut rng, 1e-4).unwrap();
        assert_eq!((tr.choice, tr.iterations), (1, 0));
        let fast = FastRunner::new(&spec, &q, &mu, 1.0, 1e-4).unwrap();
        assert_eq!(fast.choose(&mut rng).unwrap().choice, 1);
    }

    #[test]
    fn kernel_validation() {
        assert!(MarkovKernel::new(full(2), vec![vec![0.5, 0.5], vec![0.4, 0.5]]).is_err());
        assert!(MarkovKernel::new(full(2), vec![vec![1.5, 0.5], vec![-0.5, 0.5]]).is_err());
        assert!(MarkovKernel::new(full(2), vec![vec![1.0]]).is_err());
    }
}
