use eestim::estimators::{ee_step, Dataset, EeRunner, EeUpdate, EstimationTrace, EstimatorConfig, StepSizeKind};
use eestim::models::{Crf, Ising1dPeriodic, Ising2d, MiniErgm, Vbm};
use eestim::oracle::theorem1_residual;
use eestim::sampler::{acceptance_prob, RngStream};
use eestim::{BinaryState, Model, ParamVector, Proposal};
use proptest::prelude::*;

fn family(k: usize) -> Box<dyn Model> {
    match k {
        0 => Box::new(Ising2d::new(3, 3, true)),
        1 => Box::new(Ising1dPeriodic::new(7)),
        2 => Box::new(Vbm::new(6)),
        3 => Box::new(Crf::new((0..12).map(|i| (i as f64 * 0.37).sin()).collect(), 3, 4).unwrap()),
        _ => Box::new(MiniErgm::new(4)),
    }
}

/// Exact for integer statistics; the CRF carries real-valued features.
fn same_stats(k: usize, a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| if k == 3 { (x - y).abs() <= 1e-12 * (1.0 + y.abs()) } else { x == y })
}

fn state_of(model: &dyn Model, code: u64) -> BinaryState {
    let n = model.layout().len();
    BinaryState::from_code(model.encoding(), model.layout(), code & ((1u64 << n) - 1))
}

proptest! {
    #[test]
    fn change_statistics_are_full_statistic_differences(k in 0usize..5, code in any::<u64>(), site in any::<usize>()) {
        let model = family(k);
        let x = state_of(model.as_ref(), code);
        let p = Proposal::symmetric(site % x.len(), x.len());
        let delta = model.change_stats(&x, &p).unwrap();
        let y = x.apply_proposal(&p).unwrap();
        let diff = model.suff_stats(&y).unwrap().sub(&model.suff_stats(&x).unwrap());
        prop_assert!(same_stats(k, &delta, &diff), "{:?} vs {:?}", delta, diff);
    }

    #[test]
    fn toggling_twice_is_the_identity(k in 0usize..5, code in any::<u64>(), site in any::<usize>()) {
        let model = family(k);
        let x = state_of(model.as_ref(), code);
        let mut y = x.clone();
        let s = site % y.len();
        y.toggle(s);
        prop_assert_ne!(&y, &x);
        y.toggle(s);
        prop_assert_eq!(y, x);
    }

    #[test]
    fn change_statistics_telescope_along_a_path(k in 0usize..5, code in any::<u64>(), path in prop::collection::vec(any::<usize>(), 1..20)) {
        let model = family(k);
        let start = state_of(model.as_ref(), code);
        let mut x = start.clone();
        let mut total = vec![0.0; model.num_stats()];
        for s in path {
            let p = Proposal::symmetric(s % x.len(), x.len());
            for (t, d) in total.iter_mut().zip(model.change_stats(&x, &p).unwrap().iter()) {
                *t += d;
            }
            x = x.apply_proposal(&p).unwrap();
        }
        let diff = model.suff_stats(&x).unwrap().sub(&model.suff_stats(&start).unwrap());
        prop_assert!(same_stats(k, &total, &diff), "{:?} vs {:?}", total, diff);
    }

    #[test]
    fn acceptance_is_a_probability(k in 0usize..5, code in any::<u64>(), site in any::<usize>(), scale in -30.0f64..30.0) {
        let model = family(k);
        let x = state_of(model.as_ref(), code);
        let theta: Vec<f64> = (0..model.num_stats()).map(|i| scale * ((i as f64) * 1.3).cos()).collect();
        let p = Proposal::symmetric(site % x.len(), x.len());
        let alpha = acceptance_prob(model.as_ref(), &theta, &x, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&alpha));
    }

    #[test]
    fn sign_step_moves_each_coordinate_by_its_step_size(
        theta in prop::collection::vec(-5.0f64..5.0, 1..8),
        signs in prop::collection::vec(-1i8..=1, 8),
        a in 1e-4f64..0.1,
        c in 1e-4f64..0.1,
    ) {
        let d: Vec<f64> = signs.iter().take(theta.len()).map(|&s| s as f64 * 3.0).collect();
        let th = ParamVector(theta.clone());
        let cfg = EstimatorConfig::new(a, c, 1, 10);
        let next = ee_step(&th, &d, &cfg, StepSizeKind::MaxAbsC);
        for i in 0..theta.len() {
            let expected = theta[i] - a * theta[i].abs().max(c) * d[i].signum() * (d[i] != 0.0) as u8 as f64;
            prop_assert_eq!(next[i], expected);
        }
    }
}

#[test]
fn expected_change_vanishes_for_every_family() {
    let small: Vec<Box<dyn Model>> = vec![
        Box::new(Ising2d::new(2, 2, true)),
        Box::new(Ising1dPeriodic::new(4)),
        Box::new(Vbm::new(4)),
        Box::new(Crf::new(vec![0.5, -1.0, 2.0, 0.1], 2, 2).unwrap()),
        Box::new(MiniErgm::new(2)),
    ];
    for model in &small {
        let theta: Vec<f64> = (0..model.num_stats()).map(|i| 0.7 - 0.4 * i as f64).collect();
        assert!(theorem1_residual(model.as_ref(), &theta).unwrap() < 1e-12, "{}", model.name());
    }
}

#[test]
fn logged_discrepancies_are_exact_statistic_differences() {
    let model = Vbm::new(5);
    let mut rng = RngStream::new(9, 0).rng();
    let targets: Vec<BinaryState> = (0..3)
        .map(|_| BinaryState::random(&mut rng, model.encoding(), model.layout()))
        .collect();
    let data = Dataset::shared(&model, targets.clone()).unwrap();
    let mut runner = EeRunner::new(&data, &ParamVector::zeros(model.num_stats()), 4).unwrap();
    let cfg = EstimatorConfig::new(0.01, 0.01, 3, 200);
    for _ in 0..50 {
        let mut trace = EstimationTrace::new(model.num_stats());
        runner.run(&cfg, EeUpdate::Sign, 1, &mut trace).unwrap();
        let states: Vec<&BinaryState> = runner.states().collect();
        let mut total = vec![0.0; model.num_stats()];
        for (acc, (x, t)) in runner.accumulators().zip(states.iter().zip(&targets)) {
            let diff = model.suff_stats(x).unwrap().sub(&model.suff_stats(t).unwrap());
            assert_eq!(acc, &diff[..]);
            total.iter_mut().zip(diff.iter()).for_each(|(s, d)| *s += d);
        }
        let mean: Vec<f64> = total.iter().map(|s| s / states.len() as f64).collect();
        assert_eq!(trace.d(0), &mean[..]);
    }
}
