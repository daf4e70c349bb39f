use dfdbayes_core::domain::{CoordinateDomain, CoordinateEncoding, ExtendedCoordinate, ProductDomain};
use dfdbayes_core::losses::{DfdLoss, ExpIndicatorKernel, KsdLoss};
use dfdbayes_core::models::TabulatedModel;
use dfdbayes_core::{CmpModel, Dataset, DiscreteModel, GraphicalModel, IsingModel, Loss};
use proptest::prelude::*;

fn coordinate() -> impl Strategy<Value = CoordinateDomain> {
    prop_oneof![
        (2usize..7).prop_map(CoordinateDomain::FiniteCyclic),
        Just(CoordinateDomain::HalfInfiniteMin),
        Just(CoordinateDomain::BiInfinite),
    ]
}

fn domain_and_point() -> impl Strategy<Value = (ProductDomain, Vec<i64>)> {
    prop::collection::vec(coordinate(), 1..5).prop_flat_map(|coords| {
        let values: Vec<BoxedStrategy<i64>> = coords
            .iter()
            .map(|c| match *c {
                CoordinateDomain::FiniteCyclic(k) => (0..k as i64).boxed(),
                CoordinateDomain::HalfInfiniteMin => prop_oneof![Just(0i64), 0..50i64].boxed(),
                CoordinateDomain::BiInfinite => (-50..50i64).boxed(),
            })
            .collect();
        (Just(ProductDomain::new(coords).unwrap()), values)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn successor_and_predecessor_are_inverse((dom, x) in domain_and_point(), axis in 0usize..4) {
        let axis = axis % dom.dim();
        let down = dom.pred(&x, axis).unwrap();
        prop_assert_eq!(dom.succ_extended(&down, axis).unwrap(), x.clone());
        let up = dom.succ(&x, axis).unwrap();
        prop_assert_eq!(dom.pred(&up, axis).unwrap().to_point().unwrap(), x.clone());
        let star = x[axis] == 0 && dom.coord(axis) == CoordinateDomain::HalfInfiniteMin;
        prop_assert_eq!(down.0[axis] == ExtendedCoordinate::Star, star);
    }

    #[test]
    fn summation_by_parts(
        sizes in prop::collection::vec(2usize..5, 1..4),
        axis in 0usize..3,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let axis = axis % sizes.len();
        let dom = ProductDomain::new(sizes.iter().map(|&k| CoordinateDomain::FiniteCyclic(k)).collect()).unwrap();
        let points = dom.enumerate().unwrap();
        let mut rng = dfdbayes_core::rng::rng_from_seed(seed);
        let f: Vec<f64> = points.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = points.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let index = |x: &[i64]| x.iter().zip(&sizes).fold(0usize, |a, (&v, &k)| a * k + v as usize);
        let lhs: f64 = points
            .iter()
            .map(|x| {
                let down = dom.pred(x, axis).unwrap().to_point().map_or(0.0, |y| g[index(&y)]);
                f[index(x)] * down
            })
            .sum();
        let rhs: f64 = points.iter().map(|x| f[index(&dom.succ(x, axis).unwrap())] * g[index(x)]).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn forward_ratio_is_the_shifted_backward_ratio(
        m in 2usize..4,
        bits in prop::collection::vec(0i64..2, 9),
        temp in 0.2f64..10.0,
        counts in prop::collection::vec(0i64..20, 3),
        lin in prop::collection::vec(-1.0f64..2.0, 3),
        inter in prop::collection::vec(0.0f64..0.5, 3),
        disp in prop::collection::vec(0.3f64..2.0, 3),
        j in 0usize..3,
    ) {
        let ising = IsingModel::grid(m).unwrap();
        let x = &bits[..m * m];
        check_forward(&ising, &[temp], x, j % (m * m))?;
        let cmp = CmpModel::new();
        check_forward(&cmp, &[lin[0].exp(), disp[0]], &counts[..1], 0)?;
        let pgm = GraphicalModel::cmp(3, GraphicalModel::complete_edges(3)).unwrap();
        let theta = pgm.pack(&lin, &inter, &disp);
        check_forward(&pgm, &theta, &counts, j)?;
    }

    #[test]
    fn ratios_are_positive_off_the_boundary(counts in prop::collection::vec(1i64..30, 3), j in 0usize..3) {
        let pgm = GraphicalModel::poisson(3, GraphicalModel::complete_edges(3)).unwrap();
        let theta = pgm.pack(&[0.5, 1.0, -0.3], &[0.1, 0.0, 0.2], &[]);
        prop_assert!(pgm.ratio_minus(&theta, &counts, j) > 0.0);
        let mut zero = counts.clone();
        zero[j] = 0;
        prop_assert_eq!(pgm.ratio_minus(&theta, &zero, j), 0.0);
    }

    /// Losses read positions only, so re-encoding raw values by any
    /// order-preserving map leaves them bit-identical.
    #[test]
    fn order_preserving_relabelling(
        raw in prop::collection::vec(0i64..8, 1..40),
        scale in 1i64..50,
        offset in -100i64..100,
        theta in (0.5f64..6.0, 0.3f64..2.0),
    ) {
        let cmp = CmpModel::new();
        let relabelled: Vec<i64> = raw.iter().map(|&v| offset + scale * v).collect();
        let rank = |vals: &[i64]| {
            let mut u = vals.to_vec();
            u.sort_unstable();
            u.dedup();
            vals.iter().map(|v| u.binary_search(v).unwrap() as i64).collect::<Vec<_>>()
        };
        let data = Dataset::from_flat(1, rank(&relabelled)).unwrap();
        let again = Dataset::from_flat(1, rank(&raw)).unwrap();
        let th = [theta.0, theta.1];
        prop_assert_eq!(DfdLoss::new(&cmp, &data).value(&th).to_bits(), DfdLoss::new(&cmp, &again).value(&th).to_bits());
        let k = ExpIndicatorKernel::hamming();
        prop_assert_eq!(KsdLoss::new(&cmp, k, &data).value(&th).to_bits(), KsdLoss::new(&cmp, k, &again).value(&th).to_bits());
    }

    #[test]
    fn encoding_round_trip(lo in -1000i64..1000, span in 1i64..100, v in 0i64..100, reversed in any::<bool>()) {
        let (dom, enc) = if reversed {
            CoordinateEncoding::from_bounds(None, Some(lo)).unwrap()
        } else {
            CoordinateEncoding::from_bounds(Some(lo), Some(lo + span)).unwrap()
        };
        let raw = if reversed { lo - v } else { lo + v.min(span) };
        let pos = enc.encode(raw);
        prop_assert!(dom.contains(pos));
        prop_assert_eq!(enc.decode(pos), raw);
    }

    #[test]
    fn tabulated_tail_is_geometric(w in prop::collection::vec(-2.0f64..2.0, 3), decay in -2.0f64..-0.1, x in 2i64..40) {
        let dom = ProductDomain::uniform(CoordinateDomain::HalfInfiniteMin, 1).unwrap();
        let t = TabulatedModel::new(dom, vec![3], w, decay).unwrap();
        prop_assert!((t.log_tilde_p(&[], &[x + 1]) - t.log_tilde_p(&[], &[x]) - decay).abs() < 1e-12);
    }
}

fn check_forward<M: DiscreteModel>(model: &M, theta: &[f64], x: &[i64], j: usize) -> Result<(), TestCaseError> {
    let up = model.domain().succ(x, j).unwrap();
    let expect = (model.log_tilde_p(theta, x) - model.log_tilde_p(theta, &up)).exp();
    let got = model.ratio_minus(theta, &up, j);
    prop_assert!((got - expect).abs() <= 1e-10 * expect.max(1.0), "{got} vs {expect}");
    prop_assert!((model.ratio_forward(theta, x, j) - expect).abs() <= 1e-10 * expect.max(1.0));
    Ok(())
}
