#![allow(dead_code)]

use prefdisc::axioms::luce_distribution;
use prefdisc::choice::all_menus;
use prefdisc::ddm::{zeta_from_global_prior, DdmSpec, GibbsPrior};
use prefdisc::{ChoiceDataset, SoftmaxParams, TimeGrid, Universe};
use rand::Rng;

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Random softmax process with `u, α ∈ [−3, 3]` and λ decreasing on
/// deadlines `1..=T`.
pub fn random_softmax<R: Rng>(rng: &mut R, max_n: usize, max_t: usize) -> SoftmaxParams {
    let n = rng.random_range(2..=max_n);
    let t = rng.random_range(1..=max_t);
    let u = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let alpha = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut lambda: Vec<f64> = (0..t).map(|_| rng.random_range(0.2..5.0)).collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    let grid = TimeGrid::new((1..=t).map(|i| i as f64).collect()).unwrap();
    SoftmaxParams::new(Universe::indexed(n).unwrap(), grid, u, alpha, lambda).unwrap()
}

/// Luce model with utility `v[i]` at the `i`-th point of `T₀` (zero first),
/// tabulated on every menu.
pub fn luce_process(v: &[Vec<f64>], ordered: bool) -> ChoiceDataset {
    let n = v[0].len();
    let deadlines: Vec<f64> = (1..v.len()).map(|i| i as f64).collect();
    let grid = if ordered {
        TimeGrid::new(deadlines).unwrap()
    } else {
        TimeGrid::unordered(deadlines).unwrap()
    };
    let mut d = ChoiceDataset::exact(Universe::indexed(n).unwrap(), grid.clone());
    for (i, t) in grid.points().enumerate() {
        for menu in all_menus(n) {
            d.insert(t, luce_distribution(&v[i], &menu).unwrap()).unwrap();
        }
    }
    d
}

pub fn random_prior<R: Rng>(rng: &mut R, n: usize) -> GibbsPrior {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5f64..1.5).exp()).collect();
    GibbsPrior::from_weights(labels(n), &w).unwrap()
}

/// Transitive DDM built from a random global prior.
pub fn random_transitive_spec<R: Rng>(rng: &mut R, n: usize) -> DdmSpec {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let beta = rng.random_range(0.5..1.5);
    zeta_from_global_prior(&v, beta, &random_prior(rng, n)).unwrap()
}

/// DDM with independent initial conditions, generically intransitive.
pub fn random_spec<R: Rng>(rng: &mut R, n: usize) -> DdmSpec {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let beta = rng.random_range(0.5..1.5);
    DdmSpec::from_fn(labels(n), v, beta, |_, _| rng.random_range(-0.9..0.9) * beta).unwrap()
}
