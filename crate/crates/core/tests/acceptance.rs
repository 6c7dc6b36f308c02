mod common;

use common::*;
use qparts::linalg::{self, frobenius_distance, tensor, trace_re};
use qparts::parts::DEFAULT_MAX_OUTCOMES;
use qparts::random::{self, SuiteRng};
use qparts::{
    emit_report, enumerate_parts, equivalent, find_part_map, run_theorem_suite, DimPair, Effect, Entity, Factor,
    Instrument, Observable, Observable64, OutcomeLabel, Status, Surjection, SwapOperator,
};
use rand::Rng;

fn first(t: &OutcomeLabel) -> OutcomeLabel {
    t.components().expect("pair")[0].clone()
}

fn second(t: &OutcomeLabel) -> OutcomeLabel {
    t.components().expect("pair")[1].clone()
}

fn event(rng: &mut SuiteRng, labels: &[OutcomeLabel]) -> Vec<OutcomeLabel> {
    labels.iter().filter(|_| rng.random_bool(0.5)).cloned().collect()
}

#[test]
fn criterion_01_hat_duality() {
    let mut rng = random::rng(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let (k, per) = (rng.random_range(2..=5), rng.random_range(1..=3));
        let i = random::instrument::<f64>(&mut rng, n, k, per);
        let hat = i.measured_observable();
        let labels: Vec<_> = i.labels().cloned().collect();
        for _ in 0..50 {
            let rho = random::state::<f64>(&mut rng, n);
            let x = event(&mut rng, &labels);
            let out = apply_via_choi(i.event(&x).unwrap().choi(), n, n, rho.matrix());
            let lhs = trace_re(&out);
            let rhs = trace_re(&(rho.matrix() * hat.event_effect(&x).unwrap().matrix()));
            worst = worst.max((lhs - rhs).abs());
        }
    }
    criterion(1, "hat duality", worst <= 1e-10, format!("max residual {worst:.3e}"));
}

#[test]
fn criterion_02_coarse_grained_hat() {
    let mut rng = random::rng(102);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=3);
        let k = rng.random_range(2..=5);
        let i = random::instrument::<f64>(&mut rng, n, k, 2);
        let labels: Vec<_> = i.labels().cloned().collect();
        let m = rng.random_range(1..=k);
        let f = random::surjection(&mut rng, &labels, m);
        let lhs = i.measured_observable().coarse_grain(&f).unwrap();
        let coarse = i.coarse_grain(&f).unwrap();
        // Hat of the coarse instrument from tr[Φ(|s⟩⟨r|)].
        for (y, op) in coarse.iter() {
            let dual = {
                let mut acc = linalg::zeros::<f64>(n, n);
                for r in 0..n {
                    for s in 0..n {
                        let unit = linalg::matrix_unit::<f64>(n, s, r);
                        acc[(r, s)] = linalg::trace(&op.apply(&unit).unwrap());
                    }
                }
                acc
            };
            worst = worst.max(frobenius_distance(&dual, lhs.effect(y).unwrap().matrix()).unwrap());
        }
    }
    criterion(2, "coarse-grained hat", worst <= 1e-10, format!("max residual {worst:.3e}"));
}

#[test]
fn criterion_03_sequential_product_surjections() {
    let mut rng = random::rng(103);
    let mut worst = 0.0f64;
    let mut missing = 0;
    for _ in 0..50 {
        let n = rng.random_range(2..=3);
        let (ka, kb) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let a = random::observable::<f64>(&mut rng, n, ka);
        let b = random::observable::<f64>(&mut rng, n, kb);
        let ab = a.seq_prod(&b).unwrap();
        let bl: Vec<_> = b.labels().cloned().collect();
        let h = random::surjection(&mut rng, &bl, 2);
        let children = [a.clone(), b.conditioned_by(&a).unwrap(), a.seq_prod(&b.coarse_grain(&h).unwrap()).unwrap()];
        // The proof's maps, as independent expectations.
        let expected = [
            Surjection::from_fn(ab.labels(), first),
            Surjection::from_fn(ab.labels(), second),
            Surjection::from_fn(ab.labels(), |t| OutcomeLabel::pair(&first(t), h.apply(&second(t)).unwrap())),
        ];
        for (child, f) in children.iter().zip(&expected) {
            worst = worst.max(obs_distance(&ab.coarse_grain(f).unwrap(), child));
            match find_part_map(child, &ab, tol()).unwrap() {
                Some(cert) => worst = worst.max(cert.replay(tol()).unwrap()),
                None => missing += 1,
            }
        }
    }
    criterion(
        3,
        "sequential product surjections",
        missing == 0 && worst <= 1e-10,
        format!("missing {missing}, max residual {worst:.3e}"),
    );
}

#[test]
fn criterion_04_binary_sequential_parts() {
    let mut rng = random::rng(104);
    let mut counts = Vec::new();
    let mut contained = true;
    for _ in 0..20 {
        let a = random::binary_observable::<f64>(&mut rng, 2);
        let b = random::binary_observable::<f64>(&mut rng, 2);
        let ab = a.seq_prod(&b).unwrap();
        let classes = enumerate_parts(&ab, tol(), DEFAULT_MAX_OUTCOMES).unwrap();
        counts.push(classes.len());
        for target in [a.clone(), b.conditioned_by(&a).unwrap()] {
            let target: Entity<f64> = target.into();
            let hit = classes
                .iter()
                .any(|(c, _)| equivalent(&target, &Entity::Observable(c.clone()), tol()).unwrap());
            contained &= hit;
        }
    }
    let ok = contained && counts.iter().all(|&c| c == 9);
    criterion(4, "binary sequential product has nine part classes", ok, format!("class counts {counts:?}, A and (B|A) present: {contained}"));
}

#[test]
fn criterion_05_luders_product() {
    let mut rng = random::rng(105);
    let mut commuting = 0.0f64;
    let mut gap = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let (k1, k2) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let (a, b) = random::commuting_pair::<f64>(&mut rng, n, k1, k2);
        let d = Instrument::luders(&a.seq_prod(&b).unwrap())
            .max_choi_distance(&Instrument::luders(&a).product(&Instrument::luders(&b)).unwrap())
            .unwrap();
        commuting = commuting.max(d);
        let a = random::observable::<f64>(&mut rng, 2, 2);
        let b = random::observable::<f64>(&mut rng, 2, 2);
        let d = Instrument::luders(&a.seq_prod(&b).unwrap())
            .max_choi_distance(&Instrument::luders(&a).product(&Instrument::luders(&b)).unwrap())
            .unwrap();
        gap = gap.min(d);
    }
    criterion(
        5,
        "Luders product",
        commuting <= 1e-9 && gap > 1e-6,
        format!("commuting max {commuting:.3e}, non-commuting min {gap:.3e}"),
    );
}

#[test]
fn criterion_06_luders_product_hat() {
    let mut rng = random::rng(106);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=3);
        let (ka, kb) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let a = random::observable::<f64>(&mut rng, n, ka);
        let b = random::observable::<f64>(&mut rng, n, kb);
        let hat = Instrument::luders(&a).product(&Instrument::luders(&b)).unwrap().measured_observable();
        // A∘B from the oracle square root.
        for (x, ax) in a.iter() {
            let r = oracle_sqrt(ax.matrix());
            for (y, by) in b.iter() {
                let expected = &r * by.matrix() * &r;
                worst = worst.max((hat.effect(&OutcomeLabel::pair(x, y)).unwrap().matrix() - expected).norm());
            }
        }
    }
    criterion(6, "Luders product hat", worst <= 1e-10, format!("max residual {worst:.3e}"));
}

#[test]
fn criterion_07_atomic_luders() {
    let mut rng = random::rng(107);
    let mut worst = 0.0f64;
    let mut weight = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let u = random::unitary::<f64>(&mut rng, n);
        let v = random::unitary::<f64>(&mut rng, n);
        let basis = |w: &qparts::CMatrix64| -> Observable64 {
            let outcomes = (0..n).map(|i| {
                let col = w.column(i).into_owned();
                (OutcomeLabel::from(i), linalg::ket_bra(&col, &col))
            });
            Observable::from_matrices(outcomes, tol()).unwrap()
        };
        let (a, b) = (basis(&u), basis(&v));
        let rho = random::state::<f64>(&mut rng, n);
        let left = Instrument::luders(&a.seq_prod(&b).unwrap());
        let right = Instrument::luders(&a).product(&Instrument::luders(&b)).unwrap();
        let mut total = 0.0;
        for x in 0..n {
            let phi = u.column(x).into_owned();
            let px = (phi.adjoint() * rho.matrix() * &phi)[(0, 0)].re;
            for y in 0..n {
                let psi = v.column(y).into_owned();
                let lambda = phi.dotc(&psi).norm_sqr() * px;
                total += lambda;
                let xy = pair(x, y);
                let l_out = left.operation(&xy).unwrap().apply(rho.matrix()).unwrap();
                let r_out = right.operation(&xy).unwrap().apply(rho.matrix()).unwrap();
                worst = worst.max((l_out - linalg::ket_bra(&phi, &phi) * c(lambda)).norm());
                worst = worst.max((r_out - linalg::ket_bra(&psi, &psi) * c(lambda)).norm());
            }
        }
        weight = weight.max((total - 1.0).abs());
    }
    criterion(
        7,
        "atomic Luders identities",
        worst <= 1e-9 && weight <= 1e-10,
        format!("identity residual {worst:.3e}, weight residual {weight:.3e}"),
    );
}

#[test]
fn criterion_08_trivial_product_gap() {
    let mut rng = random::rng(108);
    let mut gap = f64::INFINITY;
    let mut valid = true;
    for _ in 0..30 {
        let n = rng.random_range(2..=3);
        let (a, b) = (random::observable::<f64>(&mut rng, n, 2), random::observable::<f64>(&mut rng, n, 2));
        let (alpha, beta) = (random::state::<f64>(&mut rng, n), random::state::<f64>(&mut rng, n));
        let i = Instrument::trivial(&a, &alpha, tol()).unwrap();
        let j = Instrument::trivial(&b, &beta, tol()).unwrap();
        let lhs = i.product(&j).unwrap().measured_observable();
        let rhs = a.seq_prod(&b).unwrap();
        let rebuild = |o: &Observable64| Observable::from_matrices(o.iter().map(|(x, e)| (x.clone(), e.matrix().clone())), tol());
        valid &= rebuild(&lhs).is_ok() && rebuild(&rhs).is_ok();
        // Expected closed form: (I∘J)^_(x,y) = tr(B_y α) A_x.
        for (x, ax) in a.iter() {
            for (y, by) in b.iter() {
                let coeff = trace_re(&(by.matrix() * alpha.matrix()));
                let got = lhs.effect(&OutcomeLabel::pair(x, y)).unwrap();
                assert!((got.matrix() - ax.matrix() * c(coeff)).norm() < 1e-10);
            }
        }
        gap = gap.min(obs_distance(&lhs, &rhs));
    }
    criterion(8, "trivial product gap", gap > 1e-6 && valid, format!("min deviation {gap:.3e}, both sides valid: {valid}"));
}

#[test]
fn criterion_09_factorization() {
    let mut rng = random::rng(109);
    let mut accepted = true;
    for _ in 0..50 {
        let (n1, n2) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let b = random::effect::<f64>(&mut rng, n1);
        let cc = random::effect::<f64>(&mut rng, n2);
        let a = b.tensor(&cc);
        match a.factorization_test(DimPair::new(n1, n2).unwrap(), tol()).unwrap() {
            Some((f1, f2)) => accepted &= (f1.tensor(&f2).matrix() - a.matrix()).norm() < 1e-9,
            None => accepted = false,
        }
    }
    let mut bell_rejected = true;
    for n in 2..=3 {
        let psi = qparts::CVector::<f64>::from_fn(n * n, |i, _| if i % (n + 1) == 0 { c(1.0 / (n as f64).sqrt()) } else { c(0.0) });
        let atom = Effect::atom(&psi, tol()).unwrap();
        bell_rejected &= atom.factorization_test(DimPair::new(n, n).unwrap(), tol()).unwrap().is_none();
    }
    let d = DimPair::new(2, 2).unwrap();
    let mut scan: Vec<(Effect<f64>, bool)> = vec![(Effect::zero(4), true), (Effect::identity(4), true)];
    for _ in 0..50 {
        scan.push((random::effect::<f64>(&mut rng, 4), false));
    }
    let mut scan_ok = true;
    for (a, expected) in &scan {
        let a1 = oracle_partial_trace(a.matrix(), 2, 2, true) * c(0.5);
        let a2 = oracle_partial_trace(a.matrix(), 2, 2, false) * c(0.5);
        let self_factor = (tensor(&a1, &a2) - a.matrix()).norm() <= tol().scaled(4);
        let via_lib = tensor(a.reduce(d, Factor::First).unwrap().matrix(), a.reduce(d, Factor::Second).unwrap().matrix());
        scan_ok &= self_factor == *expected && ((via_lib - a.matrix()).norm() <= tol().scaled(4)) == *expected;
    }
    criterion(
        9,
        "factorization test",
        accepted && bell_rejected && scan_ok,
        format!("products accepted {accepted}, Bell rejected {bell_rejected}, self-factorization scan {scan_ok}"),
    );
}

#[test]
fn criterion_10_atom_reduction_spectra() {
    let mut rng = random::rng(110);
    let mut worst = 0.0f64;
    for (n1, n2) in [(2, 2), (2, 3), (3, 2)] {
        for _ in 0..30 {
            let psi = random::unit_vector::<f64>(&mut rng, n1 * n2);
            let a = Effect::atom(&psi, tol()).unwrap();
            let alpha: Vec<f64> = oracle_eigenvalues(&(oracle_partial_trace(a.matrix(), n1, n2, true) * c(1.0 / n2 as f64)))
                .into_iter()
                .filter(|v| *v > 1e-9)
                .collect();
            let beta: Vec<f64> = oracle_eigenvalues(&(oracle_partial_trace(a.matrix(), n1, n2, false) * c(1.0 / n1 as f64)))
                .into_iter()
                .filter(|v| *v > 1e-9)
                .collect();
            assert_eq!(alpha.len(), beta.len());
            for (x, y) in alpha.iter().zip(&beta) {
                worst = worst.max((x - n1 as f64 / n2 as f64 * y).abs());
            }
            let (la, lb) = a.atom_reduction_spectrum(DimPair::new(n1, n2).unwrap(), tol()).unwrap();
            assert_eq!((la.len(), lb.len()), (alpha.len(), beta.len()));
            for (x, y) in la.iter().rev().zip(&alpha).chain(lb.iter().rev().zip(&beta)) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    criterion(10, "atom reduction spectra", worst <= 1e-9, format!("max residual {worst:.3e}"));
}

const REDUCTION_CHECKS: [&str; 20] = [
    "reduced-effect-additive",
    "atom-reduction-schmidt",
    "reduced-observable-statistics",
    "reduced-tensor-observable",
    "tensor-post-processing",
    "reduced-post-processing",
    "tensor-of-joints",
    "reduced-joint",
    "reduced-instrument-hat",
    "reduced-tensor-instrument",
    "tensor-instrument-hat",
    "tensor-kraus",
    "reduced-tensor-kraus",
    "luders-tensor",
    "reduced-luders-tensor",
    "factorized-kraus-reduction",
    "trivial-tensor",
    "reduced-trivial-tensor",
    "reduced-trivial",
    "reduced-trivial-tensor-summed",
];

#[test]
fn criterion_11_reduction_identities() {
    let report = run_theorem_suite(42, 1e-9, false);
    let find = |id: &str| report.checks.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("missing check {id}"));
    let mut bad = Vec::new();
    for id in REDUCTION_CHECKS {
        let check = find(id);
        if check.status != Status::Pass || check.residual.is_nan() || check.residual > 1e-9 {
            bad.push(id);
        }
    }
    for id in ["reduced-luders-tensor-literal", "reduced-trivial-tensor-pointwise"] {
        let check = find(id);
        if check.status != Status::Flagged || !check.residual.is_finite() {
            bad.push(id);
        }
    }
    criterion(11, "reduction identities", bad.is_empty(), format!("{} checks, offending {bad:?}", REDUCTION_CHECKS.len() + 2));
}

#[test]
fn criterion_12_model_partial_traces() {
    let mut rng = random::rng(112);
    let mut interchange = 0.0f64;
    for [n1, n2, n3] in [[2usize, 2, 2], [2, 3, 2]] {
        for _ in 0..50 {
            let a = random::ginibre::<f64>(&mut rng, n1 * n2 * n3, n1 * n2 * n3);
            let b = random::ginibre::<f64>(&mut rng, n3, n3);
            let inner = oracle_partial_trace(&(&a * tensor(&linalg::identity(n1 * n2), &b)), n1 * n2, n3, true);
            let lhs = oracle_partial_trace(&inner, n1, n2, true);
            // tr₂ of a three-factor operator, by explicit index sums.
            let n13 = n1 * n3;
            let tr2 = qparts::CMatrix64::from_fn(n13, n13, |r, s| {
                let (a1, a3, b1, b3) = (r / n3, r % n3, s / n3, s % n3);
                (0..n2).map(|k| a[((a1 * n2 + k) * n3 + a3, (b1 * n2 + k) * n3 + b3)]).sum()
            });
            let rhs = oracle_partial_trace(&(tr2 * tensor(&linalg::identity(n1), &b)), n1, n3, true);
            interchange = interchange.max((lhs - rhs).norm());
        }
    }
    let mut reduced = 0.0f64;
    for (n1, n2) in [(2, 2), (2, 3)] {
        let d = DimPair::new(n1, n2).unwrap();
        for _ in 0..10 {
            let m = random::measurement_model::<f64>(&mut rng, n1 * n2, 2, 2);
            let inst = m.instrument(tol()).unwrap();
            for side in [Factor::First, Factor::Second] {
                let direct = m.reduced_instrument(d, side, tol()).unwrap();
                let via = inst.reduce(d, side, tol()).unwrap();
                reduced = reduced.max(direct.max_choi_distance(&via).unwrap());
            }
        }
    }
    criterion(
        12,
        "model partial traces",
        interchange <= 1e-9 && reduced <= 1e-9,
        format!("interchange {interchange:.3e}, reduced model {reduced:.3e}"),
    );
}

#[test]
fn criterion_13_composite_models() {
    let mut rng = random::rng(113);
    let mut factor = 0.0f64;
    let mut coeff = 0.0f64;
    let d = DimPair::new(2, 2).unwrap();
    for _ in 0..10 {
        let m1 = random::measurement_model::<f64>(&mut rng, 2, 2, 2);
        let m2 = random::measurement_model::<f64>(&mut rng, 2, 2, 2);
        let (i1, i2) = (m1.instrument(tol()).unwrap(), m2.instrument(tol()).unwrap());
        let joint = m1.composite(&m2).instrument(tol()).unwrap();
        let (r1, r2) = (joint.reduce(d, Factor::First, tol()).unwrap(), joint.reduce(d, Factor::Second, tol()).unwrap());
        let rho1 = random::state::<f64>(&mut rng, 2);
        let rho2 = random::state::<f64>(&mut rng, 2);
        for (x, s) in i1.iter() {
            for (y, t) in i2.iter() {
                let xy = OutcomeLabel::pair(x, y);
                let lhs = joint.operation(&xy).unwrap().apply(&tensor(rho1.matrix(), rho2.matrix())).unwrap();
                let rhs = tensor(&s.apply(rho1.matrix()).unwrap(), &t.apply(rho2.matrix()).unwrap());
                factor = factor.max((lhs - rhs).norm());
                let c1 = trace_re(&t.apply(&linalg::identity(2)).unwrap()) / 2.0;
                let c2 = trace_re(&s.apply(&linalg::identity(2)).unwrap()) / 2.0;
                coeff = coeff.max(r1.operation(&xy).unwrap().choi_distance(&s.scaled(c1)).unwrap());
                coeff = coeff.max(r2.operation(&xy).unwrap().choi_distance(&t.scaled(c2)).unwrap());
            }
        }
    }
    let u = SwapOperator::<f64>::new(2, 2, 2, 2).unwrap();
    assert_eq!(u.matrix().nrows(), 16);
    criterion(
        13,
        "composite models",
        factor <= 1e-9 && coeff <= 1e-9,
        format!("factorization {factor:.3e}, reduction coefficients {coeff:.3e}"),
    );
}

#[test]
fn criterion_14_part_search_oracle() {
    let mut rng = random::rng(114);
    let mut disagreements = 0;
    let (mut positives, mut negatives) = (0, 0);
    for case in 0..100 {
        let k = rng.random_range(2..=6);
        let parent = random::observable::<f64>(&mut rng, 2, k);
        let labels: Vec<_> = parent.labels().cloned().collect();
        let m = rng.random_range(1..=k.min(4));
        let f = random::surjection(&mut rng, &labels, m);
        let image = parent.coarse_grain(&f).unwrap();
        let child = match case % 3 {
            0 => image,
            1 => random::observable::<f64>(&mut rng, 2, m),
            _ => {
                let noise = random::observable::<f64>(&mut rng, 2, m);
                let mixed = image
                    .iter()
                    .zip(noise.effects())
                    .map(|((x, e), n)| (x.clone(), e.matrix() * c(0.9) + n.matrix() * c(0.1)));
                Observable::from_matrices(mixed, tol()).unwrap()
            }
        };
        let found = find_part_map(&child, &parent, tol()).unwrap();
        let oracle = oracle_is_part(&child, &parent, tol().scaled(2));
        if found.is_some() != oracle {
            disagreements += 1;
        }
        if oracle {
            positives += 1;
        } else {
            negatives += 1;
        }
    }
    criterion(
        14,
        "part search oracle",
        disagreements == 0 && positives > 0 && negatives > 0,
        format!("{disagreements} disagreements over {positives} positive and {negatives} negative cases"),
    );
}

#[test]
fn criterion_15_determinism() {
    let a = emit_report(&run_theorem_suite(42, 1e-9, false));
    let b = emit_report(&run_theorem_suite(42, 1e-9, false));
    criterion(15, "determinism", a == b, format!("{} bytes per report", a.len()));
}
