mod common;

use common::total_variation;
use dfdbayes_core::simulate::{ising_simulate, pgm_gibbs_sample, SimConfig, Simulator};
use dfdbayes_core::{DiscreteModel, GraphicalModel, IsingModel};

fn index(x: &[i64], base: usize) -> usize {
    x.iter().rev().fold(0, |a, &v| a * base + v as usize)
}

#[test]
fn two_by_two_ising_matches_enumeration() {
    let model = IsingModel::grid(2).unwrap();
    let theta = [5.0];
    let states: Vec<Vec<i64>> = (0..16).map(|s| (0..4).map(|i| (s >> i) & 1).collect()).collect();
    let w: Vec<f64> = states.iter().map(|x| model.log_tilde_p(&theta, x).exp()).collect();
    let z: f64 = w.iter().sum();
    let exact: Vec<f64> = w.iter().map(|v| v / z).collect();

    let n = 100_000;
    let cfg = SimConfig { n_draws: n, iters_per_draw: model.default_iters(), seed: 17 };
    let data = ising_simulate(&model, &theta, &cfg).unwrap();
    let mut freq = vec![0.0; 16];
    for x in data.iter() {
        freq[index(x, 2)] += 1.0 / n as f64;
    }
    let tv = total_variation(&freq, &exact);
    assert!(tv <= 0.02, "tv {tv}");
}

#[test]
fn three_by_three_site_means_respect_grid_symmetry() {
    let model = IsingModel::grid(3).unwrap();
    let n = 100_000;
    let cfg = SimConfig { n_draws: n, iters_per_draw: model.default_iters(), seed: 23 };
    let means = ising_simulate(&model, &[5.0], &cfg).unwrap().column_means();
    for orbit in [&[0usize, 2, 6, 8][..], &[1, 3, 5, 7]] {
        let vals: Vec<f64> = orbit.iter().map(|&i| means[i]).collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 0.02, "orbit {orbit:?} means {vals:?}");
    }
}

#[test]
fn two_node_graphical_model_matches_enumeration() {
    let model = GraphicalModel::poisson(2, vec![(0, 1)]).unwrap();
    let theta = [1.2, 0.8, 0.15];
    const CAP: usize = 30;
    let mut exact = vec![0.0; CAP * CAP];
    for a in 0..CAP as i64 {
        for b in 0..CAP as i64 {
            exact[index(&[a, b], CAP)] = model.log_tilde_p(&theta, &[a, b]).exp();
        }
    }
    let z: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|v| *v /= z);

    let n = 100_000;
    // two weakly coupled nodes mix within a few sweeps
    let data = pgm_gibbs_sample(&model, &theta, n, 20, 29).unwrap();
    let mut freq = vec![0.0; CAP * CAP];
    for x in data.iter() {
        if x.iter().all(|&v| (v as usize) < CAP) {
            freq[index(x, CAP)] += 1.0 / n as f64;
        }
    }
    let tv = total_variation(&freq, &exact);
    assert!(tv <= 0.02, "tv {tv}");
}
