mod common;

use common::{fd_gradient, fd_laplacian};
use dfdbayes_core::domain::ProductDomain;
use dfdbayes_core::error::ModelError;
use dfdbayes_core::losses::{EvalMode, ExpIndicatorKernel};
use dfdbayes_core::rng::rng_from_seed;
use dfdbayes_core::simulate::cmp_sample;
use dfdbayes_core::{
    Aggregation, CmpModel, Dataset, DfdLoss, DiscreteModel, GraphicalModel, IsingModel, KsdLoss, Loss,
    PseudoLikelihoodLoss,
};
use rand::Rng;

const RANDOM_THETAS: usize = 20;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Relative errors of the analytic gradient and trace against finite
/// differences of the value.
fn errors<L: Loss>(loss: &L, theta: &[f64]) -> (f64, f64) {
    let g = loss.gradient(theta);
    let fd = fd_gradient(|t| loss.value(t), theta, 1e-5);
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let tr = loss.hessian_trace(theta);
    let fd_tr = fd_laplacian(|t| loss.value(t), theta, 1e-3);
    (max_abs(&diff) / max_abs(&fd), (tr - fd_tr).abs() / fd_tr.abs())
}

fn check<L: Loss>(name: &str, loss: &L, theta: &[f64]) {
    let (eg, et) = errors(loss, theta);
    assert!(eg <= 1e-5, "{name}: gradient error {eg} at {theta:?}");
    assert!(et <= 1e-4, "{name}: trace error {et} at {theta:?}");
}

const MODES: [EvalMode; 2] = [EvalMode::Keyed, EvalMode::Direct];

/// Checks derivatives of the DFD loss in keyed and direct evaluation and
/// that both evaluations agree.
fn check_dfd<M: DiscreteModel>(name: &str, model: &M, data: &Dataset, thetas: &[Vec<f64>]) {
    let keyed = DfdLoss::with_options(model, data, Aggregation::Auto, EvalMode::Keyed);
    let direct = DfdLoss::with_options(model, data, Aggregation::Never, EvalMode::Direct);
    assert!(keyed.is_keyed() && !direct.is_keyed());
    for theta in thetas {
        let (a, b) = (keyed.value(theta), direct.value(theta));
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{name}: keyed {a} vs direct {b}");
        for (loss, mode) in [(&keyed, "keyed"), (&direct, "direct")] {
            check(&format!("{name} {mode}"), loss, theta);
        }
    }
}

fn binary_data(d: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    Dataset::from_flat(d, (0..n * d).map(|_| rng.random_range(0..2)).collect()).unwrap()
}

fn count_data(d: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    Dataset::from_flat(d, (0..n * d).map(|_| rng.random_range(0..7)).collect()).unwrap()
}

#[test]
fn cmp_dfd() {
    let model = CmpModel::new();
    let data = cmp_sample(&[4.0, 0.75], 200, 1).unwrap();
    let mut rng = rng_from_seed(2);
    let thetas: Vec<Vec<f64>> =
        (0..RANDOM_THETAS).map(|_| vec![rng.random_range(1.0..8.0), rng.random_range(0.4..1.6)]).collect();
    check_dfd("cmp", &model, &data, &thetas);
}

#[test]
fn cmp_dfd_two_point_example() {
    let model = CmpModel::new();
    let data = Dataset::from_flat(1, vec![2, 3]).unwrap();
    check("cmp {2,3}", &DfdLoss::new(&model, &data), &[4.0, 1.0]);
}

#[test]
fn ising_dfd() {
    let model = IsingModel::grid(3).unwrap();
    let data = binary_data(9, 50, 3);
    let mut rng = rng_from_seed(4);
    let thetas: Vec<Vec<f64>> = (0..RANDOM_THETAS).map(|_| vec![rng.random_range(0.5..10.0)]).collect();
    check_dfd("ising", &model, &data, &thetas);
}

fn pgm_theta<R: Rng>(model: &GraphicalModel, rng: &mut R, dispersion: bool) -> Vec<f64> {
    let d = model.dim();
    let lin: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..1.5)).collect();
    let inter: Vec<f64> = model.edges().iter().map(|_| rng.random_range(0.01..0.3)).collect();
    let disp: Vec<f64> = if dispersion { (0..d).map(|_| rng.random_range(0.3..1.5)).collect() } else { vec![] };
    model.pack(&lin, &inter, &disp)
}

#[test]
fn pgm_dfd() {
    let model = GraphicalModel::poisson(4, GraphicalModel::complete_edges(4)).unwrap();
    let data = count_data(4, 60, 5);
    let mut rng = rng_from_seed(6);
    let thetas: Vec<Vec<f64>> = (0..RANDOM_THETAS).map(|_| pgm_theta(&model, &mut rng, false)).collect();
    check_dfd("pgm", &model, &data, &thetas);
}

#[test]
fn cmp_pgm_dfd() {
    let model = GraphicalModel::cmp(4, GraphicalModel::complete_edges(4)).unwrap();
    let data = count_data(4, 60, 7);
    let mut rng = rng_from_seed(8);
    let thetas: Vec<Vec<f64>> = (0..RANDOM_THETAS).map(|_| pgm_theta(&model, &mut rng, true)).collect();
    check_dfd("cmp-pgm", &model, &data, &thetas);
}

#[test]
fn keyed_ksd() {
    let kernel = ExpIndicatorKernel::hamming();
    let cmp = CmpModel::new();
    let data = cmp_sample(&[4.0, 0.75], 100, 9).unwrap();
    let loss = KsdLoss::with_options(&cmp, kernel, &data, Aggregation::Auto, EvalMode::Keyed);
    assert!(loss.is_keyed());
    let mut rng = rng_from_seed(10);
    for _ in 0..5 {
        check("ksd cmp", &loss, &[rng.random_range(2.0..6.0), rng.random_range(0.5..1.2)]);
    }
    let ising = IsingModel::grid(3).unwrap();
    let data = binary_data(9, 40, 11);
    let loss = KsdLoss::with_options(&ising, kernel, &data, Aggregation::Auto, EvalMode::Keyed);
    assert!(loss.is_keyed());
    for _ in 0..5 {
        check("ksd ising", &loss, &[rng.random_range(1.0..8.0)]);
    }
    let pgm = GraphicalModel::cmp(3, GraphicalModel::complete_edges(3)).unwrap();
    let data = count_data(3, 30, 12);
    let loss = KsdLoss::with_options(&pgm, kernel, &data, Aggregation::Auto, EvalMode::Keyed);
    assert!(loss.is_keyed());
    for _ in 0..5 {
        check("ksd cmp-pgm", &loss, &pgm_theta(&pgm, &mut rng, true));
    }
}

#[test]
fn pseudo_likelihood() {
    let model = IsingModel::grid(3).unwrap();
    let data = binary_data(9, 50, 13);
    let losses = MODES.map(|mode| PseudoLikelihoodLoss::with_options(&model, &data, Aggregation::Never, mode).unwrap());
    let mut rng = rng_from_seed(14);
    for _ in 0..RANDOM_THETAS {
        let theta = [rng.random_range(0.5..10.0)];
        let (a, b) = (losses[0].value(&theta), losses[1].value(&theta));
        assert!((a - b).abs() <= 1e-10 * b.abs(), "pseudo keyed {a} vs direct {b}");
        for loss in &losses {
            check("pseudo", loss, &theta);
        }
    }
}

/// CMP without its exponential-family structure.
struct Opaque(CmpModel);

impl DiscreteModel for Opaque {
    fn domain(&self) -> &ProductDomain {
        self.0.domain()
    }
    fn dim_theta(&self) -> usize {
        2
    }
    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        self.0.check_theta(theta)
    }
    fn log_tilde_p(&self, theta: &[f64], x: &[i64]) -> f64 {
        self.0.log_tilde_p(theta, x)
    }
}

#[test]
fn models_without_structure_fall_back_to_differences() {
    let data = cmp_sample(&[4.0, 0.75], 100, 15).unwrap();
    let model = CmpModel::new();
    let analytic = DfdLoss::new(&model, &data);
    let opaque_model = Opaque(CmpModel::new());
    let opaque = DfdLoss::new(&opaque_model, &data);
    let theta = [3.5, 0.9];
    assert!((analytic.value(&theta) - opaque.value(&theta)).abs() < 1e-10 * analytic.value(&theta).abs());
    let (a, b) = (analytic.gradient(&theta), opaque.gradient(&theta));
    assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() <= 1e-5 * max_abs(&a)));
    let (a, b) = (analytic.hessian_trace(&theta), opaque.hessian_trace(&theta));
    assert!((a - b).abs() <= 1e-4 * a.abs(), "{a} vs {b}");
}
