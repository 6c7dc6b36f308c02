mod common;

use common::*;
use proptest::prelude::*;
use qparts::linalg::{eigvalsh, hermitian_residual, tensor};
use qparts::observables::push_forward;
use qparts::random;
use qparts::{DimPair, Factor, Instrument, OutcomeLabel, Surjection};

fn effect_bounds(m: &qparts::CMatrix64) -> (f64, f64) {
    let v = eigvalsh(m);
    (v[0], v[v.len() - 1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seq_prod_of_effects_is_an_effect(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = random::rng(seed);
        let a = random::effect::<f64>(&mut rng, n);
        let b = random::effect::<f64>(&mut rng, n);
        let ab = a.seq_prod(&b).unwrap();
        let (lo, hi) = effect_bounds(ab.matrix());
        prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
        prop_assert!(hermitian_residual(ab.matrix()) < 1e-12);
    }

    #[test]
    fn seq_prod_observable_is_normalized(seed in any::<u64>(), n in 2usize..5, ka in 1usize..4, kb in 1usize..4) {
        let mut rng = random::rng(seed);
        let a = random::observable::<f64>(&mut rng, n, ka);
        let b = random::observable::<f64>(&mut rng, n, kb);
        let ab = a.seq_prod(&b).unwrap();
        prop_assert_eq!(ab.len(), ka * kb);
        let total = ab.effects().fold(qparts::CMatrix64::zeros(n, n), |acc, e| acc + e.matrix());
        prop_assert!((total - qparts::linalg::identity::<f64>(n)).norm() < 1e-10);
    }

    #[test]
    fn coarse_graining_pushes_distributions_forward(seed in any::<u64>(), n in 2usize..4, k in 1usize..6) {
        let mut rng = random::rng(seed);
        let b = random::observable::<f64>(&mut rng, n, k);
        let labels: Vec<_> = b.labels().cloned().collect();
        let m = 1 + (seed as usize) % k;
        let f = random::surjection(&mut rng, &labels, m);
        let rho = random::state::<f64>(&mut rng, n);
        let lhs = b.coarse_grain(&f).unwrap().distribution(&rho, tol()).unwrap();
        let rhs = push_forward(&b.distribution(&rho, tol()).unwrap(), &f).unwrap();
        for (x, p) in &lhs {
            prop_assert!((p - rhs[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn instrument_events_match_hat(seed in any::<u64>(), n in 2usize..4, k in 1usize..5) {
        let mut rng = random::rng(seed);
        let i = random::instrument::<f64>(&mut rng, n, k, 2);
        let hat = i.measured_observable();
        let rho = random::state::<f64>(&mut rng, n);
        for (x, op) in i.iter() {
            let lhs = op.apply(rho.matrix()).unwrap().trace().re;
            let rhs = (rho.matrix() * hat.effect(x).unwrap().matrix()).trace().re;
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
        let total = i.total_channel().op().apply(rho.matrix()).unwrap().trace().re;
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tensor_then_reduce_rescales(seed in any::<u64>(), n1 in 2usize..4, n2 in 2usize..4) {
        let mut rng = random::rng(seed);
        let a = random::effect::<f64>(&mut rng, n1);
        let b = random::effect::<f64>(&mut rng, n2);
        let d = DimPair::new(n1, n2).unwrap();
        let ab = a.tensor(&b);
        let r1 = ab.reduce(d, Factor::First).unwrap();
        let r2 = ab.reduce(d, Factor::Second).unwrap();
        prop_assert!((r1.matrix() - a.matrix() * c(b.trace() / n2 as f64)).norm() < 1e-12);
        prop_assert!((r2.matrix() - b.matrix() * c(a.trace() / n1 as f64)).norm() < 1e-12);
    }

    #[test]
    fn reduced_instrument_is_an_instrument(seed in any::<u64>(), n2 in 2usize..4) {
        let mut rng = random::rng(seed);
        let d = DimPair::new(2, n2).unwrap();
        let i = random::instrument::<f64>(&mut rng, 2 * n2, 2, 1);
        for side in [Factor::First, Factor::Second] {
            let r = i.reduce(d, side, tol()).unwrap();
            let n = d.of(side);
            let rho = random::state::<f64>(&mut rng, n);
            let out = r.total_channel().op().apply(rho.matrix()).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(eigvalsh(&out)[0] > -1e-10);
        }
    }

    #[test]
    fn luders_tensor_commutes(seed in any::<u64>(), ka in 1usize..4, kb in 1usize..4) {
        let mut rng = random::rng(seed);
        let a = random::observable::<f64>(&mut rng, 2, ka);
        let b = random::observable::<f64>(&mut rng, 2, kb);
        let lhs = Instrument::luders(&a).tensor(&Instrument::luders(&b));
        let rhs = Instrument::luders(&a.tensor(&b));
        prop_assert!(lhs.max_choi_distance(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn surjection_composition_matches_pointwise(seed in any::<u64>(), k in 2usize..7) {
        let mut rng = random::rng(seed);
        let dom: Vec<OutcomeLabel> = (0..k).map(OutcomeLabel::from).collect();
        let f = random::surjection(&mut rng, &dom, 1 + (seed as usize) % k);
        let mid: Vec<_> = f.codomain().cloned().collect();
        let g = random::surjection(&mut rng, &mid, 1 + (seed as usize / 7) % mid.len());
        let gf = g.after(&f).unwrap();
        for x in &dom {
            prop_assert_eq!(gf.apply(x), g.apply(f.apply(x).unwrap()));
        }
    }

    #[test]
    fn part_map_certificates_replay(seed in any::<u64>(), k in 2usize..6) {
        let mut rng = random::rng(seed);
        let parent = random::observable::<f64>(&mut rng, 2, k);
        let labels: Vec<_> = parent.labels().cloned().collect();
        let f = random::surjection(&mut rng, &labels, 1 + (seed as usize) % k);
        let child = parent.coarse_grain(&f).unwrap();
        let cert = qparts::find_part_map(&child, &parent, tol()).unwrap();
        prop_assert!(cert.is_some());
        prop_assert!(cert.unwrap().replay(tol()).unwrap() <= tol().scaled(2));
    }

    #[test]
    fn tensor_is_associative_on_states(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let a = random::state::<f64>(&mut rng, 2);
        let b = random::state::<f64>(&mut rng, 2);
        let cc = random::state::<f64>(&mut rng, 3);
        let lhs = tensor(&tensor(a.matrix(), b.matrix()), cc.matrix());
        let rhs = tensor(a.matrix(), &tensor(b.matrix(), cc.matrix()));
        prop_assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn labels_round_trip_through_text(xs in proptest::collection::vec(0usize..20, 1..4), nest in any::<bool>()) {
        let items: Vec<OutcomeLabel> = xs.iter().map(|&x| OutcomeLabel::from(x)).collect();
        let label = if nest {
            OutcomeLabel::pair(&OutcomeLabel::tuple(items.clone()), &items[0])
        } else {
            OutcomeLabel::tuple(items)
        };
        let text = label.to_string();
        prop_assert_eq!(OutcomeLabel::parse(&text).unwrap(), label);
    }
}

#[test]
fn identity_surjection_is_bijective() {
    let dom: Vec<OutcomeLabel> = (0..4).map(OutcomeLabel::from).collect();
    assert!(Surjection::identity(&dom).is_bijective());
}
