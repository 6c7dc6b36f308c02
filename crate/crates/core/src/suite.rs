//! Seeded verification suite over random instances.
//!
//! Each check draws from its own ChaCha stream, so a check's instances do not
//! depend on which checks ran before it.

use std::time::Instant;

use indexmap::IndexMap;
use rand::Rng;

use crate::effects::{DensityState, Effect};
use crate::error::{Error, Result};
use crate::instruments::{reduced_trivial_residual, trivial_composites, Instrument, QuantumOperation};
use crate::io::{Check, Report, Status};
use crate::labels::OutcomeLabel;
use crate::linalg::{
    self, embed, frobenius_distance, identity, partial_trace, partial_trace_over, principal_sqrt, scale, schmidt,
    tensor, tensor_vec, trace, trace_re, CMatrix, DimPair, Factor, Tolerance,
};
use crate::models::{MeasurementModel, SwapOperator};
use crate::observables::{push_forward, Observable};
use crate::parts::{
    enumerate_parts, equivalent, find_part_map, find_part_map_instr, joint_from_common, marginal_check, CoexistenceWitness,
    Entity, DEFAULT_MAX_OUTCOMES,
};
use crate::random::{self, SuiteRng};
use crate::surjection::Surjection;

type M = CMatrix<f64>;

/// Runs every check and collects the results.
pub fn run_theorem_suite(seed: u64, tol: f64, timings: bool) -> Report {
    let mut runner = Runner {
        seed,
        tol: Tolerance::new(tol).unwrap_or_default(),
        timings,
        stream: 0,
        report: Report::new(seed, tol),
    };
    linalg_checks(&mut runner);
    effect_checks(&mut runner);
    observable_checks(&mut runner);
    instrument_checks(&mut runner);
    model_checks(&mut runner);
    part_checks(&mut runner);
    runner.report
}

struct Runner {
    seed: u64,
    tol: Tolerance<f64>,
    timings: bool,
    stream: u64,
    report: Report,
}

enum Rule {
    AtMost(f64),
    Above(f64),
    Flag,
}

impl Runner {
    fn run(&mut self, id: &str, claim: &str, rule: Rule, body: impl FnOnce(&mut SuiteRng, Tolerance<f64>) -> Result<f64>) {
        let mut rng = random::rng(self.seed);
        rng.set_stream(self.stream);
        self.stream += 1;
        let start = Instant::now();
        let outcome = body(&mut rng, self.tol);
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let mut check = match (outcome, rule) {
            (Ok(r), Rule::AtMost(bound)) => Check::bounded(id, claim, r, bound),
            (Ok(r), Rule::Above(floor)) => {
                let status = if r > floor { Status::Pass } else { Status::Fail };
                Check::with_status(id, claim, status, r)
            }
            (Ok(r), Rule::Flag) => Check::with_status(id, claim, Status::Flagged, r),
            (Err(_), _) => Check::with_status(id, claim, Status::Fail, f64::NAN),
        };
        if self.timings {
            check.runtime_ms = Some(elapsed);
        }
        self.report.push(check);
    }
}

fn dims(n1: usize, n2: usize) -> DimPair {
    DimPair::new(n1, n2).expect("positive dimensions")
}

fn l(x: usize) -> OutcomeLabel {
    OutcomeLabel::from(x)
}

/// Largest Frobenius distance between same-labeled effects.
fn obs_distance(a: &Observable<f64>, b: &Observable<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::OutcomeSpaceMismatch(format!("{} vs {} outcomes", a.len(), b.len())));
    }
    let mut worst = 0.0f64;
    for (x, ax) in a.iter() {
        worst = worst.max(frobenius_distance(ax.matrix(), b.effect(x)?.matrix())?);
    }
    Ok(worst)
}

fn random_psd(rng: &mut SuiteRng, n: usize, rank: usize) -> M {
    let g = random::ginibre::<f64>(rng, n, rank);
    let m = &g * g.adjoint();
    let norm = m.norm();
    scale(&m, 1.0 / norm)
}

fn random_event(rng: &mut SuiteRng, labels: &[OutcomeLabel]) -> Vec<OutcomeLabel> {
    labels.iter().filter(|_| rng.random_bool(0.5)).cloned().collect()
}

fn relabel(a: &Observable<f64>, f: impl Fn(usize) -> OutcomeLabel) -> Observable<f64> {
    let outcomes = a.effects().enumerate().map(|(i, e)| (f(i), e.clone())).collect();
    Observable::from_parts_unchecked(a.dim(), outcomes)
}

fn op_from_kraus(kraus: Vec<M>) -> QuantumOperation<f64> {
    let (rows, cols) = kraus[0].shape();
    QuantumOperation::from_kraus_unchecked(cols, rows, kraus)
}

fn effect_violation(m: &M) -> f64 {
    let evs = linalg::eigvalsh(m);
    let lo = evs.first().copied().unwrap_or(0.0);
    let hi = evs.last().copied().unwrap_or(0.0);
    (-lo).max(hi - 1.0).max(0.0) + linalg::hermitian_residual(m)
}

fn linalg_checks(r: &mut Runner) {
    r.run("principal-sqrt-squares", "sqrt(M)^2 = M for PSD M", Rule::AtMost(1e-8), |rng, tol| {
        let mut worst = 0.0f64;
        for i in 0..200 {
            let n = 2 + i % 7;
            let rank = rng.random_range(1..=n);
            let m = random_psd(rng, n, rank);
            let s = principal_sqrt(&m, tol)?;
            worst = worst.max(frobenius_distance(&(&s * &s), &m)?);
        }
        Ok(worst)
    });
    r.run("partial-trace-linear", "tr2(aM+bN) = a tr2(M) + b tr2(N)", Rule::AtMost(1e-12), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let m = random::ginibre::<f64>(rng, d.total(), d.total());
            let n = random::ginibre::<f64>(rng, d.total(), d.total());
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let lhs = partial_trace(&(scale(&m, a) + scale(&n, b)), d, Factor::Second)?;
            let rhs = scale(&partial_trace(&m, d, Factor::Second)?, a) + scale(&partial_trace(&n, d, Factor::Second)?, b);
            worst = worst.max(frobenius_distance(&lhs, &rhs)?);
        }
        Ok(worst)
    });
    r.run("partial-trace-adjoint", "tr[tr2(M) a] = tr[M (a x 1)]", Rule::AtMost(1e-10), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let m = random::ginibre::<f64>(rng, d.total(), d.total());
            let a = random::ginibre::<f64>(rng, d.n1(), d.n1());
            let lhs = trace(&(partial_trace(&m, d, Factor::Second)? * &a));
            let rhs = trace(&(&m * embed(&a, d, Factor::First)));
            worst = worst.max((lhs - rhs).norm());
        }
        Ok(worst)
    });
    r.run("schmidt-local-unitary-invariance", "Schmidt coefficients of psi and (U x V)psi agree", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let psi = random::unit_vector::<f64>(rng, d.total());
            let u = tensor(&random::unitary::<f64>(rng, d.n1()), &random::unitary::<f64>(rng, d.n2()));
            let a = schmidt(&psi, d, tol)?.coefficients;
            let b = schmidt(&(&u * &psi), d, tol)?.coefficients;
            if a.len() != b.len() {
                return Ok(f64::INFINITY);
            }
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    });
}

fn effect_checks(r: &mut Runner) {
    r.run("sequential-product-effect", "a o b is an effect; 1 o b = b; a o 1 = a", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for i in 0..200 {
            let n = 2 + i % 5;
            let a = random::effect::<f64>(rng, n);
            let b = random::effect::<f64>(rng, n);
            let one = Effect::identity(n);
            worst = worst.max(effect_violation(a.seq_prod(&b)?.matrix()));
            worst = worst.max(frobenius_distance(one.seq_prod(&b)?.matrix(), b.matrix())?);
            worst = worst.max(frobenius_distance(a.seq_prod(&one)?.matrix(), a.matrix())?);
        }
        Ok(worst)
    });
    r.run("reduced-effect-additive", "(a+b)^1 = a^1 + b^1 and 1^1 = 1", Rule::AtMost(1e-12), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let a = random::effect::<f64>(rng, d.total()).scaled(0.5)?;
            let b = random::effect::<f64>(rng, d.total()).scaled(0.5)?;
            let sum = Effect::new(a.matrix() + b.matrix(), tol)?;
            for side in [Factor::First, Factor::Second] {
                let lhs = sum.reduce(d, side)?;
                let rhs = a.reduce(d, side)?.matrix() + b.reduce(d, side)?.matrix();
                worst = worst.max(frobenius_distance(lhs.matrix(), &rhs)?);
                let one = Effect::<f64>::identity(d.total()).reduce(d, side)?;
                worst = worst.max(frobenius_distance(one.matrix(), &identity(d.of(side)))?);
            }
        }
        Ok(worst)
    });
    r.run("atom-reduction-schmidt", "P_psi^1 = (1/n2) sum lambda_i^2 P_(psi_i)", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let psi = random::unit_vector::<f64>(rng, d.total());
            let a = Effect::atom(&psi, tol)?;
            let s = schmidt(&psi, d, tol)?;
            let mut expected = linalg::zeros::<f64>(d.n1(), d.n1());
            for (lambda, u) in s.coefficients.iter().zip(&s.left) {
                expected += scale(&linalg::ket_bra(u, u), lambda * lambda / d.n2() as f64);
            }
            worst = worst.max(frobenius_distance(a.reduce(d, Factor::First)?.matrix(), &expected)?);
        }
        Ok(worst)
    });
    r.run(
        "atom-factorization-schmidt-rank",
        "an atom factorizes iff its vector has Schmidt rank 1 (mismatch count)",
        Rule::AtMost(0.0),
        |rng, tol| {
            let mut mismatches = 0usize;
            for i in 0..100 {
                let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
                let psi = if i % 2 == 0 {
                    tensor_vec(&random::unit_vector::<f64>(rng, d.n1()), &random::unit_vector::<f64>(rng, d.n2()))
                } else {
                    random::unit_vector::<f64>(rng, d.total())
                };
                let a = Effect::atom(&psi, tol)?;
                let factors = a.factorization_test(d, tol)?.is_some();
                let rank_one = schmidt(&psi, d, Tolerance::new(1e-6)?)?.rank() == 1;
                if factors != rank_one {
                    mismatches += 1;
                }
            }
            Ok(mismatches as f64)
        },
    );
    r.run(
        "factorization-products-and-bell",
        "b x c factorizes with recovered factors; Bell atoms do not",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
                let a = random::effect::<f64>(rng, d.n1()).tensor(&random::effect::<f64>(rng, d.n2()));
                match a.factorization_test(d, tol)? {
                    Some((b, c)) => worst = worst.max(frobenius_distance(b.tensor(&c).matrix(), a.matrix())?),
                    None => return Ok(f64::INFINITY),
                }
            }
            for n in 2..=3 {
                let d = dims(n, n);
                let mut psi = linalg::zeros::<f64>(n * n, 1).column(0).into_owned();
                for i in 0..n {
                    psi[i * n + i] = linalg::creal(1.0 / (n as f64).sqrt());
                }
                if Effect::atom(&psi, tol)?.factorization_test(d, tol)?.is_some() {
                    return Ok(f64::INFINITY);
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "self-factorization-trivial-only",
        "a = a^1 x a^2 only for a in {0, 1} (mismatch count)",
        Rule::AtMost(0.0),
        |rng, tol| {
            let mut mismatches = 0usize;
            let d = dims(2, 2);
            let mut scan: Vec<(Effect<f64>, bool)> = vec![(Effect::zero(4), true), (Effect::identity(4), true)];
            for _ in 0..50 {
                scan.push((random::effect::<f64>(rng, 4), false));
            }
            for _ in 0..10 {
                let p = random::effect::<f64>(rng, 2).tensor(&random::effect::<f64>(rng, 2));
                scan.push((p, false));
            }
            for (a, expected) in scan {
                let prod = tensor(a.reduce(d, Factor::First)?.matrix(), a.reduce(d, Factor::Second)?.matrix());
                if linalg::approx_eq(&prod, a.matrix(), tol)? != expected {
                    mismatches += 1;
                }
            }
            Ok(mismatches as f64)
        },
    );
    r.run("atom-reduction-spectra", "nonzero eigenvalues pair as alpha_i = (n1/n2) beta_i", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for (n1, n2) in [(2, 2), (2, 3), (3, 2)] {
            let d = dims(n1, n2);
            for _ in 0..30 {
                let a = random::atom::<f64>(rng, d.total());
                let (alpha, beta) = a.atom_reduction_spectrum(d, tol)?;
                if alpha.len() != beta.len() {
                    return Ok(f64::INFINITY);
                }
                for (x, y) in alpha.iter().zip(&beta) {
                    worst = worst.max((x - n1 as f64 / n2 as f64 * y).abs());
                }
            }
        }
        Ok(worst)
    });
}

fn observable_checks(r: &mut Runner) {
    r.run("coarse-grain-push-forward", "distribution of f(B) = push-forward of distribution of B", Rule::AtMost(1e-12), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.random_range(2..=4);
            let k = rng.random_range(2..=5);
            let b = random::observable::<f64>(rng, n, k);
            let labels: Vec<_> = b.labels().cloned().collect();
            let r0 = rng.random_range(1..=k);
            let f = random::surjection(rng, &labels, r0);
            let rho = random::state::<f64>(rng, n);
            let lhs = b.coarse_grain(&f)?.distribution(&rho, tol)?;
            let rhs = push_forward(&b.distribution(&rho, tol)?, &f)?;
            for (x, p) in &lhs {
                worst = worst.max((p - rhs[x]).abs());
            }
        }
        Ok(worst)
    });
    r.run(
        "sequential-product-coarse-grainings",
        "A = f(AoB), (B|A) = g(AoB), Aoh(B) = u(AoB)",
        Rule::AtMost(1e-9),
        |rng, _| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let n = rng.random_range(2..=3);
                let r1 = rng.random_range(2..=3);
                let a = random::observable::<f64>(rng, n, r1);
                let r2 = rng.random_range(2..=4);
                let b = random::observable::<f64>(rng, n, r2);
                let ab = a.seq_prod(&b)?;
                let first = |t: &OutcomeLabel| t.components().expect("pair")[0].clone();
                let second = |t: &OutcomeLabel| t.components().expect("pair")[1].clone();
                worst = worst.max(obs_distance(&ab.coarse_grain(&Surjection::from_fn(ab.labels(), first))?, &a)?);
                let cond = b.conditioned_by(&a)?;
                worst = worst.max(obs_distance(&ab.coarse_grain(&Surjection::from_fn(ab.labels(), second))?, &cond)?);
                let b_labels: Vec<_> = b.labels().cloned().collect();
                let r3 = rng.random_range(1..=b.len());
                let h = random::surjection(rng, &b_labels, r3);
                let u = Surjection::from_fn(ab.labels(), |t| {
                    OutcomeLabel::pair(&first(t), h.apply(&second(t)).expect("total"))
                });
                worst = worst.max(obs_distance(&ab.coarse_grain(&u)?, &a.seq_prod(&b.coarse_grain(&h)?)?)?);
            }
            Ok(worst)
        },
    );
    r.run("reduced-observable-statistics", "Phi^(A^1)_rho1 = Phi^A_(rho1 x 1/n2)", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let r4 = rng.random_range(2..=4);
            let a = random::observable::<f64>(rng, d.total(), r4);
            for side in [Factor::First, Factor::Second] {
                let rho = random::state::<f64>(rng, d.of(side));
                let mixed = DensityState::<f64>::maximally_mixed(d.other(side));
                let joint = match side {
                    Factor::First => rho.tensor(&mixed),
                    Factor::Second => mixed.tensor(&rho),
                };
                let lhs = a.reduce(d, side)?.distribution(&rho, tol)?;
                let rhs = a.distribution(&joint, tol)?;
                for (x, p) in &lhs {
                    worst = worst.max((p - rhs[x]).abs());
                }
            }
        }
        Ok(worst)
    });
    r.run("reduced-tensor-observable", "(A1 x A2)^1_(x,y) = mu^(A2)(y) A1_x", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let r5 = rng.random_range(2..=3);
            let a1 = random::observable::<f64>(rng, d.n1(), r5);
            let r6 = rng.random_range(2..=3);
            let a2 = random::observable::<f64>(rng, d.n2(), r6);
            let joint = a1.tensor(&a2);
            let r1 = joint.reduce(d, Factor::First)?;
            let r2 = joint.reduce(d, Factor::Second)?;
            let (mu1, mu2) = (a1.random_measure(), a2.random_measure());
            for (x, ax) in a1.iter() {
                for (y, by) in a2.iter() {
                    let xy = OutcomeLabel::pair(x, y);
                    worst = worst.max(frobenius_distance(r1.effect(&xy)?.matrix(), &scale(ax.matrix(), mu2[y]))?);
                    worst = worst.max(frobenius_distance(r2.effect(&xy)?.matrix(), &scale(by.matrix(), mu1[x]))?);
                }
            }
        }
        Ok(worst)
    });
    r.run("tensor-post-processing", "(nu.A) x (mu.B) = (nu x mu).(A x B)", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let r7 = rng.random_range(2..=3);
            let a = random::observable::<f64>(rng, 2, r7);
            let r8 = rng.random_range(2..=3);
            let r9 = rng.random_range(2..=3);
            let b = random::observable::<f64>(rng, r8, r9);
            let a_labels: Vec<_> = a.labels().cloned().collect();
            let b_labels: Vec<_> = b.labels().cloned().collect();
            let r10 = rng.random_range(1..=3);
            let nu = random::stochastic::<f64>(rng, &a_labels, r10);
            let r11 = rng.random_range(1..=3);
            let mu = random::stochastic::<f64>(rng, &b_labels, r11);
            let lhs = a.post_process(&nu)?.tensor(&b.post_process(&mu)?);
            let rhs = a.tensor(&b).post_process(&nu.tensor(&mu))?;
            worst = worst.max(obs_distance(&lhs, &rhs)?);
        }
        Ok(worst)
    });
    r.run("reduced-post-processing", "(nu.A)^1 = nu.A^1", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let d = dims(rng.random_range(2..=3), rng.random_range(2..=3));
            let r12 = rng.random_range(2..=4);
            let a = random::observable::<f64>(rng, d.total(), r12);
            let labels: Vec<_> = a.labels().cloned().collect();
            let r13 = rng.random_range(1..=3);
            let nu = random::stochastic::<f64>(rng, &labels, r13);
            for side in [Factor::First, Factor::Second] {
                let lhs = a.post_process(&nu)?.reduce(d, side)?;
                let rhs = a.reduce(d, side)?.post_process(&nu)?;
                worst = worst.max(obs_distance(&lhs, &rhs)?);
            }
        }
        Ok(worst)
    });
    r.run(
        "tensor-of-joints",
        "joints C1 for (A1,B1) and C2 for (A2,B2) give C1 x C2 with marginals A1 x A2, B1 x B2",
        Rule::AtMost(1e-9),
        |rng, _| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let (k1, k2) = (rng.random_range(2..=3), 2);
                let joint = |rng: &mut SuiteRng, n: usize| {
                    relabel(&random::observable::<f64>(rng, n, k1 * k2), |i| OutcomeLabel::pair(&l(i / k2), &l(i % k2)))
                };
                let c1 = joint(rng, 2);
                let r14 = rng.random_range(2..=3);
                let c2 = joint(rng, r14);
                let proj = |c: &Observable<f64>, i: usize| {
                    c.coarse_grain(&Surjection::from_fn(c.labels(), |t| t.components().expect("pair")[i].clone()))
                };
                let (a1, b1, a2, b2) = (proj(&c1, 0)?, proj(&c1, 1)?, proj(&c2, 0)?, proj(&c2, 1)?);
                let c = c1.tensor(&c2);
                for (i, expected) in [(0, a1.tensor(&a2)), (1, b1.tensor(&b2))] {
                    let f = Surjection::from_fn(c.labels(), |t| {
                        let parts = t.components().expect("pair");
                        OutcomeLabel::pair(&parts[0].components().expect("pair")[i], &parts[1].components().expect("pair")[i])
                    });
                    worst = worst.max(obs_distance(&c.coarse_grain(&f)?, &expected)?);
                }
            }
            Ok(worst)
        },
    );
    r.run("reduced-joint", "a joint C for (A,B) reduces to a joint C^1 for (A^1,B^1)", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let d = dims(rng.random_range(2..=3), 2);
            let r15 = rng.random_range(3..=5);
            let c = random::observable::<f64>(rng, d.total(), r15);
            let labels: Vec<_> = c.labels().cloned().collect();
            let f = random::surjection(rng, &labels, 2);
            let r16 = rng.random_range(2..=3);
            let g = random::surjection(rng, &labels, r16);
            for side in [Factor::First, Factor::Second] {
                let cr = c.reduce(d, side)?;
                worst = worst.max(obs_distance(&cr.coarse_grain(&f)?, &c.coarse_grain(&f)?.reduce(d, side)?)?);
                worst = worst.max(obs_distance(&cr.coarse_grain(&g)?, &c.coarse_grain(&g)?.reduce(d, side)?)?);
            }
        }
        Ok(worst)
    });
}

fn instrument_checks(r: &mut Runner) {
    r.run("hat-duality", "tr[I_X(rho)] = tr(rho I^_X)", Rule::AtMost(1e-10), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.random_range(2..=4);
            let r17 = rng.random_range(2..=4);
            let r18 = rng.random_range(1..=3);
            let i = random::instrument::<f64>(rng, n, r17, r18);
            let hat = i.measured_observable();
            let labels: Vec<_> = i.labels().cloned().collect();
            for _ in 0..50 {
                let rho = random::state::<f64>(rng, n);
                let event = random_event(rng, &labels);
                let lhs = trace_re(&i.event(&event)?.apply(rho.matrix())?);
                let rhs = trace_re(&(rho.matrix() * hat.event_effect(&event)?.matrix()));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    });
    r.run("coarse-grained-hat", "f(I^) = f(I)^", Rule::AtMost(1e-10), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.random_range(2..=3);
            let r19 = rng.random_range(2..=5);
            let r20 = rng.random_range(1..=2);
            let i = random::instrument::<f64>(rng, n, r19, r20);
            let labels: Vec<_> = i.labels().cloned().collect();
            let r21 = rng.random_range(1..=labels.len());
            let f = random::surjection(rng, &labels, r21);
            worst = worst.max(obs_distance(&i.measured_observable().coarse_grain(&f)?, &i.coarse_grain(&f)?.measured_observable())?);
        }
        Ok(worst)
    });
    r.run("luders-commuting-product", "commuting A, B: L^(AoB) = L^A o L^B", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let n = rng.random_range(2..=4);
            let r22 = rng.random_range(2..=3);
            let r23 = rng.random_range(2..=3);
            let (a, b) = random::commuting_pair::<f64>(rng, n, r22, r23);
            let lhs = Instrument::luders(&a.seq_prod(&b)?);
            let rhs = Instrument::luders(&a).product(&Instrument::luders(&b))?;
            worst = worst.max(lhs.max_choi_distance(&rhs)?);
        }
        Ok(worst)
    });
    r.run("luders-noncommuting-gap", "non-commuting A, B: L^(AoB) != L^A o L^B (min Choi distance)", Rule::Above(1e-6), |rng, _| {
        let mut least = f64::INFINITY;
        for _ in 0..50 {
            let n = rng.random_range(2..=3);
            let a = random::observable::<f64>(rng, n, 2);
            let b = random::observable::<f64>(rng, n, 2);
            let lhs = Instrument::luders(&a.seq_prod(&b)?);
            let rhs = Instrument::luders(&a).product(&Instrument::luders(&b))?;
            least = least.min(lhs.max_choi_distance(&rhs)?);
        }
        Ok(least)
    });
    r.run("luders-product-hat", "(L^A o L^B)^ = AoB", Rule::AtMost(1e-10), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.random_range(2..=3);
            let r24 = rng.random_range(2..=3);
            let a = random::observable::<f64>(rng, n, r24);
            let r25 = rng.random_range(2..=3);
            let b = random::observable::<f64>(rng, n, r25);
            let hat = Instrument::luders(&a).product(&Instrument::luders(&b))?.measured_observable();
            worst = worst.max(obs_distance(&hat, &a.seq_prod(&b)?)?);
        }
        Ok(worst)
    });
    r.run(
        "atomic-luders-identities",
        "atomic A, B: L^(AoB)_(x,y)(rho) = lambda A_x and (L^A o L^B)_(x,y)(rho) = lambda B_y",
        Rule::AtMost(1e-9),
        |rng, _| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let n = rng.random_range(2..=4);
                let (a, b, rho, lambda) = atomic_setup(rng, n);
                let left = Instrument::luders(&a.seq_prod(&b)?);
                let right = Instrument::luders(&a).product(&Instrument::luders(&b))?;
                for (x, ax) in a.iter() {
                    for (y, by) in b.iter() {
                        let xy = OutcomeLabel::pair(x, y);
                        let lam = lambda[&xy];
                        let l_out = left.operation(&xy)?.apply(rho.matrix())?;
                        let r_out = right.operation(&xy)?.apply(rho.matrix())?;
                        worst = worst.max(frobenius_distance(&l_out, &scale(ax.matrix(), lam))?);
                        worst = worst.max(frobenius_distance(&r_out, &scale(by.matrix(), lam))?);
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run("atomic-luders-weights", "sum of lambda_(x,y)(rho) = 1", Rule::AtMost(1e-10), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let n = rng.random_range(2..=4);
            let (_, _, _, lambda) = atomic_setup(rng, n);
            worst = worst.max((lambda.values().sum::<f64>() - 1.0).abs());
        }
        Ok(worst)
    });
    r.run(
        "trivial-product-gap",
        "trivial I, J: max ||(I o J)^_(x,y) - I^_x o J^_y|| is positive while both sides are observables",
        Rule::Above(1e-6),
        |rng, tol| {
            let mut least = f64::INFINITY;
            for _ in 0..30 {
                let n = rng.random_range(2..=3);
                let i = random::trivial_instrument::<f64>(rng, n, 2);
                let j = random::trivial_instrument::<f64>(rng, n, 2);
                let lhs = i.product(&j)?.measured_observable();
                let rhs = i.measured_observable().seq_prod(&j.measured_observable())?;
                Observable::new(lhs.iter().map(|(x, e)| (x.clone(), e.clone())), tol)?;
                Observable::new(rhs.iter().map(|(x, e)| (x.clone(), e.clone())), tol)?;
                least = least.min(obs_distance(&lhs, &rhs)?);
            }
            Ok(least)
        },
    );
    r.run("reduced-instrument-hat", "(I^1)^ = (I^)^1", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let d = dims(2, rng.random_range(2..=3));
            let r26 = rng.random_range(2..=3);
            let i = random::instrument::<f64>(rng, d.total(), r26, 2);
            for side in [Factor::First, Factor::Second] {
                let lhs = i.reduce(d, side, tol)?.measured_observable();
                let rhs = i.measured_observable().reduce(d, side)?;
                worst = worst.max(obs_distance(&lhs, &rhs)?);
            }
        }
        Ok(worst)
    });
    r.run("reduced-tensor-instrument", "(I1 x I2)^1_(x,y) = mu^(I2)(y) I1_x", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let d = dims(2, rng.random_range(2..=3));
            let i1 = random::instrument::<f64>(rng, d.n1(), 2, 2);
            let r27 = rng.random_range(2..=3);
            let i2 = random::instrument::<f64>(rng, d.n2(), r27, 1);
            let joint = i1.tensor(&i2);
            let (r1, r2) = (joint.reduce(d, Factor::First, tol)?, joint.reduce(d, Factor::Second, tol)?);
            let (mu1, mu2) = (i1.random_measure(), i2.random_measure());
            for (x, s) in i1.iter() {
                for (y, t) in i2.iter() {
                    let xy = OutcomeLabel::pair(x, y);
                    worst = worst.max(r1.operation(&xy)?.choi_distance(&s.scaled(mu2[y]))?);
                    worst = worst.max(r2.operation(&xy)?.choi_distance(&t.scaled(mu1[x]))?);
                }
            }
        }
        Ok(worst)
    });
    r.run("tensor-instrument-hat", "(I1 x I2)^ = I1^ x I2^", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let r28 = rng.random_range(2..=3);
            let i1 = random::instrument::<f64>(rng, 2, r28, 2);
            let r29 = rng.random_range(2..=3);
            let r30 = rng.random_range(2..=3);
            let i2 = random::instrument::<f64>(rng, r29, r30, 1);
            let lhs = i1.tensor(&i2).measured_observable();
            worst = worst.max(obs_distance(&lhs, &i1.measured_observable().tensor(&i2.measured_observable()))?);
        }
        Ok(worst)
    });
    r.run("tensor-kraus", "Kraus I1 x I2 has operators S_x x T_y", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let r31 = rng.random_range(2..=3);
            let i1 = random::kraus_instrument::<f64>(rng, 2, r31);
            let r32 = rng.random_range(2..=3);
            let i2 = random::kraus_instrument::<f64>(rng, r32, 2);
            let joint = i1.tensor(&i2);
            for (x, s) in i1.iter() {
                for (y, t) in i2.iter() {
                    let expected = op_from_kraus(vec![tensor(&s.kraus()[0], &t.kraus()[0])]);
                    worst = worst.max(joint.operation(&OutcomeLabel::pair(x, y))?.choi_distance(&expected)?);
                }
            }
        }
        Ok(worst)
    });
    r.run(
        "reduced-tensor-kraus",
        "(I1 x I2)^1 is Kraus with operators [(1/n2) tr(T_y T_y*)]^(1/2) S_x, and the mirror for side 2",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let d = dims(2, rng.random_range(2..=3));
                let i1 = random::kraus_instrument::<f64>(rng, d.n1(), 2);
                let r33 = rng.random_range(2..=3);
                let i2 = random::kraus_instrument::<f64>(rng, d.n2(), r33);
                let joint = i1.tensor(&i2);
                let (r1, r2) = (joint.reduce(d, Factor::First, tol)?, joint.reduce(d, Factor::Second, tol)?);
                for (x, s) in i1.iter() {
                    for (y, t) in i2.iter() {
                        let (s, t) = (&s.kraus()[0], &t.kraus()[0]);
                        let xy = OutcomeLabel::pair(x, y);
                        let c1 = (trace_re(&(t * t.adjoint())) / d.n2() as f64).sqrt();
                        let c2 = (trace_re(&(s * s.adjoint())) / d.n1() as f64).sqrt();
                        worst = worst.max(r1.operation(&xy)?.choi_distance(&op_from_kraus(vec![scale(s, c1)]))?);
                        worst = worst.max(r2.operation(&xy)?.choi_distance(&op_from_kraus(vec![scale(t, c2)]))?);
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run("luders-tensor", "L^A_x x L^B_y = L^(A x B)_(x,y)", Rule::AtMost(1e-9), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let r34 = rng.random_range(2..=3);
            let a = random::observable::<f64>(rng, 2, r34);
            let r35 = rng.random_range(2..=3);
            let b = random::observable::<f64>(rng, r35, 2);
            let lhs = Instrument::luders(&a).tensor(&Instrument::luders(&b));
            worst = worst.max(lhs.max_choi_distance(&Instrument::luders(&a.tensor(&b)))?);
        }
        Ok(worst)
    });
    r.run(
        "reduced-luders-tensor",
        "(L^A x L^B)^1 = L^C with C = (1/n2) tr(B_y) A_x; (L^A x L^B)^2 = L^D with D = (1/n1) tr(A_x) B_y",
        Rule::AtMost(1e-9),
        |rng, tol| reduced_luders_residual(rng, tol, false),
    );
    r.run(
        "reduced-luders-tensor-literal",
        "(L^A x L^B)^2 = L^D with D = (1/n2) tr(A_x) B_y as literally stated; differs when n1 != n2",
        Rule::Flag,
        |rng, tol| reduced_luders_residual(rng, tol, true),
    );
    r.run(
        "factorized-kraus-reduction",
        "R_x = S_x x T_x gives I^1 Kraus with [(1/n2) tr(T_x T_x*)]^(1/2) S_x and I^2 with [(1/n1) tr(S_x S_x*)]^(1/2) T_x",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let d = dims(2, rng.random_range(2..=3));
                let k = rng.random_range(2..=3);
                let base = random::kraus_instrument::<f64>(rng, d.n1(), k);
                let pairs: Vec<(M, M)> = base
                    .iter()
                    .map(|(_, op)| (op.kraus()[0].clone(), random::unitary::<f64>(rng, d.n2())))
                    .collect();
                let i = Instrument::from_kraus(
                    pairs.iter().enumerate().map(|(x, (s, t))| (l(x), vec![tensor(s, t)])),
                    tol,
                )?;
                let (r1, r2) = (i.reduce(d, Factor::First, tol)?, i.reduce(d, Factor::Second, tol)?);
                for (x, (s, t)) in pairs.iter().enumerate() {
                    let c1 = (trace_re(&(t * t.adjoint())) / d.n2() as f64).sqrt();
                    let c2 = (trace_re(&(s * s.adjoint())) / d.n1() as f64).sqrt();
                    worst = worst.max(r1.operation(&l(x))?.choi_distance(&op_from_kraus(vec![scale(s, c1)]))?);
                    worst = worst.max(r2.operation(&l(x))?.choi_distance(&op_from_kraus(vec![scale(t, c2)]))?);
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "trivial-tensor",
        "trivial I1 x I2 is trivial with observable A x B and state alpha x beta",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let r36 = rng.random_range(2..=3);
                let i1 = random::trivial_instrument::<f64>(rng, 2, r36);
                let r37 = rng.random_range(2..=3);
                let i2 = random::trivial_instrument::<f64>(rng, r37, 2);
                worst = worst.max(trivial_composites(&i1, &i2, tol)?.tensor);
            }
            Ok(worst)
        },
    );
    r.run(
        "reduced-trivial-tensor",
        "(I1 x I2)^1 is trivial with observable mu^B(y) A_x and state alpha; mirror for side 2",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let r38 = rng.random_range(2..=3);
                let i1 = random::trivial_instrument::<f64>(rng, 2, r38);
                let r39 = rng.random_range(2..=3);
                let i2 = random::trivial_instrument::<f64>(rng, r39, 2);
                let rep = trivial_composites(&i1, &i2, tol)?;
                worst = worst.max(rep.reduced_first).max(rep.reduced_second);
            }
            Ok(worst)
        },
    );
    r.run(
        "reduced-trivial",
        "trivial I with A, alpha reduces to trivial I^1 with A^1, tr2(alpha) and I^2 with A^2, tr1(alpha)",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let d = dims(2, rng.random_range(2..=3));
                let r40 = rng.random_range(2..=3);
                let i = random::trivial_instrument::<f64>(rng, d.total(), r40);
                worst = worst.max(reduced_trivial_residual(&i, d, tol)?);
            }
            Ok(worst)
        },
    );
    r.run(
        "reduced-trivial-tensor-summed",
        "J = I^1 x I^2 is trivial with A^1 x A^2 and tr2(alpha) x tr1(alpha); sum_y J^1_(x,y) = I^1_x and sum_x J^2_(x,y) = I^2_y",
        Rule::AtMost(1e-9),
        |rng, tol| reduced_trivial_tensor(rng, tol).map(|(summed, _)| summed),
    );
    r.run(
        "reduced-trivial-tensor-pointwise",
        "J^1_(x,y) = I^1_x pointwise as literally stated; true value is mu^(A^2)(y) I^1_x",
        Rule::Flag,
        |rng, tol| reduced_trivial_tensor(rng, tol).map(|(_, pointwise)| pointwise),
    );
}

/// Atomic `A`, `B`, a state `ρ` and `λ_{xy}(ρ) = |⟨φ_x,ψ_y⟩|²⟨φ_x,ρφ_x⟩`.
fn atomic_setup(
    rng: &mut SuiteRng,
    n: usize,
) -> (Observable<f64>, Observable<f64>, DensityState<f64>, IndexMap<OutcomeLabel, f64>) {
    let u = random::unitary::<f64>(rng, n);
    let v = random::unitary::<f64>(rng, n);
    let basis = |w: &M| -> Observable<f64> {
        let outcomes = (0..n)
            .map(|i| {
                let c = w.column(i).into_owned();
                (l(i), Effect::from_matrix_unchecked(linalg::ket_bra(&c, &c)))
            })
            .collect();
        Observable::from_parts_unchecked(n, outcomes)
    };
    let (a, b) = (basis(&u), basis(&v));
    let rho = random::state::<f64>(rng, n);
    let mut lambda = IndexMap::new();
    for x in 0..n {
        let phi = u.column(x).into_owned();
        let weight = (phi.adjoint() * rho.matrix() * &phi)[(0, 0)].re;
        for y in 0..n {
            let psi = v.column(y).into_owned();
            let overlap = phi.dotc(&psi).norm_sqr();
            lambda.insert(OutcomeLabel::pair(&l(x), &l(y)), overlap * weight);
        }
    }
    (a, b, rho, lambda)
}

fn reduced_luders_residual(rng: &mut SuiteRng, tol: Tolerance<f64>, literal: bool) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = dims(3, 2);
        let a = random::observable::<f64>(rng, d.n1(), 2);
        let b = random::observable::<f64>(rng, d.n2(), 2);
        let joint = Instrument::luders(&a).tensor(&Instrument::luders(&b));
        let (r1, r2) = (joint.reduce(d, Factor::First, tol)?, joint.reduce(d, Factor::Second, tol)?);
        for (x, ax) in a.iter() {
            for (y, by) in b.iter() {
                let xy = OutcomeLabel::pair(x, y);
                let d_coeff = ax.trace() / if literal { d.n2() } else { d.n1() } as f64;
                let dm = scale(by.matrix(), d_coeff);
                worst = worst.max(r2.operation(&xy)?.choi_distance(&op_from_kraus(vec![linalg::spectral_map(&dm, |v| v.max(0.0).sqrt())]))?);
                if !literal {
                    let cm = scale(ax.matrix(), by.trace() / d.n2() as f64);
                    worst = worst
                        .max(r1.operation(&xy)?.choi_distance(&op_from_kraus(vec![linalg::spectral_map(&cm, |v| v.max(0.0).sqrt())]))?);
                }
            }
        }
    }
    Ok(worst)
}

/// `(summed residual, pointwise residual)` for `J = I¹ ⊗ I²` built from a
/// trivial `I` on `H₁⊗H₂`.
fn reduced_trivial_tensor(rng: &mut SuiteRng, tol: Tolerance<f64>) -> Result<(f64, f64)> {
    let mut summed = 0.0f64;
    let mut pointwise = 0.0f64;
    for _ in 0..50 {
        let d = dims(2, 2);
        let r41 = rng.random_range(2..=3);
        let i = random::trivial_instrument::<f64>(rng, d.total(), r41);
        let (a, alpha, _) = i.trivial_fit();
        let (i1, i2) = (i.reduce(d, Factor::First, tol)?, i.reduce(d, Factor::Second, tol)?);
        let j = i1.tensor(&i2);
        let expected = Instrument::trivial(
            &a.reduce(d, Factor::First)?.tensor(&a.reduce(d, Factor::Second)?),
            &alpha.marginal(d, Factor::First)?.tensor(&alpha.marginal(d, Factor::Second)?),
            tol,
        )?;
        summed = summed.max(j.max_choi_distance(&expected)?);
        let (j1, j2) = (j.reduce(d, Factor::First, tol)?, j.reduce(d, Factor::Second, tol)?);
        for (x, op1) in i1.iter() {
            let mut total = linalg::zeros::<f64>(d.n1() * d.n1(), d.n1() * d.n1());
            for y in i2.labels() {
                let part = j1.operation(&OutcomeLabel::pair(x, y))?;
                total += part.choi();
                pointwise = pointwise.max(part.choi_distance(op1)?);
            }
            summed = summed.max(frobenius_distance(&total, op1.choi())?);
        }
        for (y, op2) in i2.iter() {
            let mut total = linalg::zeros::<f64>(d.n2() * d.n2(), d.n2() * d.n2());
            for x in i1.labels() {
                let part = j2.operation(&OutcomeLabel::pair(x, y))?;
                total += part.choi();
                pointwise = pointwise.max(part.choi_distance(op2)?);
            }
            summed = summed.max(frobenius_distance(&total, op2.choi())?);
        }
    }
    Ok((summed, pointwise))
}

fn model_checks(r: &mut Runner) {
    r.run(
        "model-instrument-consistency",
        "tr[M^_X(rho)] lies in [0,1] and sum_x M^_x is trace preserving",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..30 {
                let n = rng.random_range(2..=3);
                let r42 = rng.random_range(2..=3);
                let m = random::measurement_model::<f64>(rng, n, 2, r42);
                let inst = m.instrument(tol)?;
                let labels: Vec<_> = inst.labels().cloned().collect();
                for _ in 0..10 {
                    let rho = random::state::<f64>(rng, n);
                    let p = trace_re(&inst.event(&random_event(rng, &labels))?.apply(rho.matrix())?);
                    worst = worst.max((-p).max(p - 1.0).max(0.0));
                    let total = trace_re(&inst.total_channel().op().apply(rho.matrix())?);
                    worst = worst.max((total - 1.0).abs());
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "partial-trace-interchange",
        "tr2[tr3(A(1 x 1 x B))] = tr3[(tr2 A)(1 x B)]",
        Rule::AtMost(1e-10),
        |rng, _| {
            let mut worst = 0.0f64;
            for dims3 in [[2usize, 2, 2], [2, 3, 2]] {
                let [n1, n2, n3] = dims3;
                for _ in 0..100 {
                    let a = random::ginibre::<f64>(rng, n1 * n2 * n3, n1 * n2 * n3);
                    let b = random::ginibre::<f64>(rng, n3, n3);
                    let lhs = partial_trace_over(
                        &partial_trace_over(&(&a * tensor(&identity(n1 * n2), &b)), &dims3, 2)?,
                        &[n1, n2],
                        1,
                    )?;
                    let rhs = partial_trace_over(&(partial_trace_over(&a, &dims3, 1)? * tensor(&identity(n1), &b)), &[n1, n3], 1)?;
                    worst = worst.max(frobenius_distance(&lhs, &rhs)?);
                }
            }
            Ok(worst)
        },
    );
    r.run("reduced-model-instrument", "reduced model instrument M^_1 equals the reduction M^^1", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for (n1, n2) in [(2, 2), (2, 3)] {
            let d = dims(n1, n2);
            for _ in 0..10 {
                let m = random::measurement_model::<f64>(rng, d.total(), 2, 2);
                let inst = m.instrument(tol)?;
                for side in [Factor::First, Factor::Second] {
                    worst = worst.max(m.reduced_instrument(d, side, tol)?.max_choi_distance(&inst.reduce(d, side, tol)?)?);
                }
            }
        }
        Ok(worst)
    });
    r.run(
        "composite-model-factorization",
        "M^_(x,y)(rho1 x rho2) = M^_(1,x)(rho1) x M^_(2,y)(rho2)",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let (m1, m2, joint) = composite_setup(rng, tol)?;
                let (i1, i2) = (m1.instrument(tol)?, m2.instrument(tol)?);
                for _ in 0..5 {
                    let rho1 = random::state::<f64>(rng, 2);
                    let rho2 = random::state::<f64>(rng, 2);
                    let rho = tensor(rho1.matrix(), rho2.matrix());
                    for (x, s) in i1.iter() {
                        for (y, t) in i2.iter() {
                            let lhs = joint.operation(&OutcomeLabel::pair(x, y))?.apply(&rho)?;
                            let rhs = tensor(&s.apply(rho1.matrix())?, &t.apply(rho2.matrix())?);
                            worst = worst.max(frobenius_distance(&lhs, &rhs)?);
                        }
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "composite-model-reduction",
        "M^^1_(x,y) = (1/n2) tr[M^_(2,y)(1)] M^_(1,x); mirror for side 2",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            let d = dims(2, 2);
            for _ in 0..10 {
                let (m1, m2, joint) = composite_setup(rng, tol)?;
                let (i1, i2) = (m1.instrument(tol)?, m2.instrument(tol)?);
                let (r1, r2) = (joint.reduce(d, Factor::First, tol)?, joint.reduce(d, Factor::Second, tol)?);
                for (x, s) in i1.iter() {
                    for (y, t) in i2.iter() {
                        let xy = OutcomeLabel::pair(x, y);
                        let c1 = trace_re(&t.apply(&identity(2))?) / 2.0;
                        let c2 = trace_re(&s.apply(&identity(2))?) / 2.0;
                        worst = worst.max(r1.operation(&xy)?.choi_distance(&s.scaled(c1))?);
                        worst = worst.max(r2.operation(&xy)?.choi_distance(&t.scaled(c2))?);
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run("swap-conjugation", "U(1 x 1 x F1 x F2)U* = 1 x F1 x 1 x F2", Rule::AtMost(1e-12), |rng, _| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let (n1, n2, k1, k2) = (rng.random_range(2..=3), 2, 2, rng.random_range(2..=3));
            let u = SwapOperator::<f64>::new(n1, n2, k1, k2)?;
            let f1 = random::effect::<f64>(rng, k1).into_matrix();
            let f2 = random::effect::<f64>(rng, k2).into_matrix();
            let x = tensor(&identity(n1 * n2), &tensor(&f1, &f2));
            let lhs = u.matrix() * x * u.matrix().adjoint();
            let rhs = tensor(&tensor(&identity(n1), &f1), &tensor(&identity(n2), &f2));
            worst = worst.max(frobenius_distance(&lhs, &rhs)?);
        }
        Ok(worst)
    });
    r.run("model-hat-chain", "model observable = measured observable of the model instrument", Rule::AtMost(0.0), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let r43 = rng.random_range(2..=3);
            let r44 = rng.random_range(2..=3);
            let m = random::measurement_model::<f64>(rng, r43, 2, r44);
            worst = worst.max(obs_distance(&m.observable(tol)?, &m.instrument(tol)?.measured_observable())?);
        }
        Ok(worst)
    });
}

fn composite_setup(
    rng: &mut SuiteRng,
    tol: Tolerance<f64>,
) -> Result<(MeasurementModel<f64>, MeasurementModel<f64>, Instrument<f64>)> {
    let m1 = random::measurement_model::<f64>(rng, 2, 2, 2);
    let m2 = random::measurement_model::<f64>(rng, 2, 2, 2);
    let joint = m1.composite(&m2).instrument(tol)?;
    Ok((m1, m2, joint))
}

/// Brute-force search over every map `Ω_parent → Ω_child`.
fn brute_force_part(child: &Observable<f64>, parent: &Observable<f64>, tol: Tolerance<f64>) -> Result<bool> {
    let (m, k) = (child.len(), parent.len());
    if m > k {
        return Ok(false);
    }
    let child_effects: Vec<&M> = child.effects().map(Effect::matrix).collect();
    let parent_effects: Vec<&M> = parent.effects().map(Effect::matrix).collect();
    let bound = tol.scaled(child.dim());
    let mut digits = vec![0usize; k];
    for code in 0..m.pow(k as u32) {
        let mut c = code;
        for d in digits.iter_mut() {
            *d = c % m;
            c /= m;
        }
        let mut sums = vec![linalg::zeros::<f64>(child.dim(), child.dim()); m];
        let mut hit = vec![false; m];
        for (j, &x) in digits.iter().enumerate() {
            sums[x] += parent_effects[j];
            hit[x] = true;
        }
        if !hit.iter().all(|&h| h) {
            continue;
        }
        let mut ok = true;
        for (s, c) in sums.iter().zip(&child_effects) {
            if frobenius_distance(s, c)? > bound {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

fn part_checks(r: &mut Runner) {
    r.run("part-certificates-replay", "every certificate for child = f(parent) replays", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let r45 = rng.random_range(2..=3);
            let r46 = rng.random_range(2..=6);
            let parent = random::observable::<f64>(rng, r45, r46);
            let labels: Vec<_> = parent.labels().cloned().collect();
            let r47 = rng.random_range(1..=labels.len());
            let f = random::surjection(rng, &labels, r47);
            let child = parent.coarse_grain(&f)?;
            match find_part_map(&child, &parent, tol)? {
                Some(cert) => worst = worst.max(cert.replay(tol)?),
                None => return Ok(f64::INFINITY),
            }
        }
        Ok(worst)
    });
    r.run(
        "part-search-oracle",
        "find_part_map agrees with exhaustive enumeration of maps (disagreement count)",
        Rule::AtMost(0.0),
        |rng, tol| {
            let mut disagreements = 0usize;
            for case in 0..100 {
                let r48 = rng.random_range(2..=6);
                let parent = random::observable::<f64>(rng, 2, r48);
                let labels: Vec<_> = parent.labels().cloned().collect();
                let m = rng.random_range(1..=labels.len().min(3));
                let positive = parent.coarse_grain(&random::surjection(rng, &labels, m))?;
                let child = match case % 3 {
                    0 => positive,
                    1 => random::observable::<f64>(rng, 2, m),
                    _ => {
                        let noise = random::observable::<f64>(rng, 2, m);
                        let outcomes = positive
                            .iter()
                            .zip(noise.effects())
                            .map(|((x, e), n)| (x.clone(), Effect::from_matrix_unchecked(scale(e.matrix(), 0.95) + scale(n.matrix(), 0.05))));
                        Observable::from_parts_unchecked(2, outcomes.collect())
                    }
                };
                let found = find_part_map(&child, &parent, tol)?.is_some();
                if found != brute_force_part(&child, &parent, tol)? {
                    disagreements += 1;
                }
            }
            Ok(disagreements as f64)
        },
    );
    r.run("instrument-part-hat", "I = f(J) implies I^ = f(J^)", Rule::AtMost(1e-10), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..30 {
            let r49 = rng.random_range(2..=4);
            let j = random::instrument::<f64>(rng, 2, r49, 1);
            let labels: Vec<_> = j.labels().cloned().collect();
            let r50 = rng.random_range(1..=labels.len());
            let i = j.coarse_grain(&random::surjection(rng, &labels, r50))?;
            let Some(cert) = find_part_map_instr(&i, &j, tol)? else {
                return Ok(f64::INFINITY);
            };
            worst = worst.max(obs_distance(&i.measured_observable(), &j.measured_observable().coarse_grain(cert.map())?)?);
        }
        Ok(worst)
    });
    r.run("part-transitivity", "A = g(B) and B = f(C) compose to A = (g o f)(C)", Rule::AtMost(1e-9), |rng, tol| {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let r51 = rng.random_range(3..=6);
            let c = random::observable::<f64>(rng, 2, r51);
            let cl: Vec<_> = c.labels().cloned().collect();
            let r52 = rng.random_range(2..=cl.len());
            let b = c.coarse_grain(&random::surjection(rng, &cl, r52))?;
            let bl: Vec<_> = b.labels().cloned().collect();
            let r53 = rng.random_range(1..=bl.len());
            let a = b.coarse_grain(&random::surjection(rng, &bl, r53))?;
            let (Some(outer), Some(inner)) = (find_part_map(&a, &b, tol)?, find_part_map(&b, &c, tol)?) else {
                return Ok(f64::INFINITY);
            };
            worst = worst.max(outer.compose(&inner, tol)?.replay(tol)?);
        }
        Ok(worst)
    });
    r.run(
        "joint-from-common-parent",
        "members f_i(C) are the marginals of h(C) with h = (f_1, f_2) and are found as its parts",
        Rule::AtMost(1e-9),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let r54 = rng.random_range(3..=5);
                let c = random::observable::<f64>(rng, 2, r54);
                let cl: Vec<_> = c.labels().cloned().collect();
                let (r55, r56) = (rng.random_range(1..=3), rng.random_range(1..=3));
                let maps = [random::surjection(rng, &cl, r55), random::surjection(rng, &cl, r56)];
                let members = [c.coarse_grain(&maps[0])?, c.coarse_grain(&maps[1])?];
                let joint = joint_from_common(&c, &maps)?;
                if !marginal_check(&joint, &members, tol)? {
                    return Ok(f64::INFINITY);
                }
                for (i, member) in members.iter().enumerate() {
                    let proj = Surjection::from_fn(joint.labels(), |t| t.components().expect("tuple")[i].clone());
                    worst = worst.max(obs_distance(&joint.coarse_grain(&proj)?, member)?);
                    match find_part_map(member, &joint, tol)? {
                        Some(cert) => worst = worst.max(cert.replay(tol)?),
                        None => return Ok(f64::INFINITY),
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "sequential-product-parts-found",
        "A, (B|A) and Aoh(B) are found as parts of AoB and their certificates replay",
        Rule::AtMost(1e-10),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let a = random::observable::<f64>(rng, 2, 2);
                let b = random::observable::<f64>(rng, 2, 3);
                let ab = a.seq_prod(&b)?;
                let bl: Vec<_> = b.labels().cloned().collect();
                let h = random::surjection(rng, &bl, 2);
                for child in [a.clone(), b.conditioned_by(&a)?, a.seq_prod(&b.coarse_grain(&h)?)?] {
                    match find_part_map(&child, &ab, tol)? {
                        Some(cert) => worst = worst.max(cert.replay(tol)?),
                        None => return Ok(f64::INFINITY),
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "binary-sequential-listed-parts",
        "the nine listed coarse-grainings f1..f9 of AoB for binary qubit A, B are distinct parts",
        Rule::AtMost(0.0),
        |rng, tol| {
            let mut missing = 0usize;
            for _ in 0..20 {
                let ab = generic_binary_pair(rng)?;
                let classes = enumerate_parts(&ab, tol, DEFAULT_MAX_OUTCOMES)?;
                for f in listed_maps(&ab) {
                    let part: Entity<f64> = ab.coarse_grain(&f)?.into();
                    let mut found = false;
                    for (c, _) in &classes {
                        if equivalent(&part, &c.clone().into(), tol)? {
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        missing += 1;
                    }
                }
            }
            Ok(missing as f64)
        },
    );
    r.run(
        "binary-sequential-class-count",
        "AoB for generic binary qubit A, B has nine parts up to equivalence (reported: max |classes - 9|)",
        Rule::Flag,
        |rng, tol| {
            let mut worst = 0usize;
            for _ in 0..20 {
                let ab = generic_binary_pair(rng)?;
                worst = worst.max(enumerate_parts(&ab, tol, DEFAULT_MAX_OUTCOMES)?.len().abs_diff(9));
            }
            Ok(worst as f64)
        },
    );
    r.run(
        "joint-distribution-marginal",
        "summing the joint distribution of A and (B|A) over all of (B|A) recovers the distribution of A",
        Rule::AtMost(1e-10),
        |rng, tol| {
            let mut worst = 0.0f64;
            for _ in 0..30 {
                let a = random::observable::<f64>(rng, 2, 2);
                let b = random::observable::<f64>(rng, 2, 3);
                let parent = Entity::Observable(a.seq_prod(&b)?);
                let members = [Entity::Observable(a.clone()), Entity::Observable(b.conditioned_by(&a)?)];
                let Some(w) = crate::parts::coexist(&members, &parent, tol)? else {
                    return Ok(f64::INFINITY);
                };
                let w: CoexistenceWitness<f64> = w;
                let rho = random::state::<f64>(rng, 2);
                let all_b: Vec<_> = b.labels().cloned().collect();
                for x in a.labels() {
                    let joint = w.joint_distribution(&rho, &[vec![x.clone()], all_b.clone()], tol)?;
                    worst = worst.max((joint - a.event_probability(&rho, std::slice::from_ref(x), tol)?).abs());
                }
            }
            Ok(worst)
        },
    );
}

fn generic_binary_pair(rng: &mut SuiteRng) -> Result<Observable<f64>> {
    let a = random::binary_observable::<f64>(rng, 2);
    let b = random::binary_observable::<f64>(rng, 2);
    a.seq_prod(&b)
}

/// The nine maps listed for binary `A∘B`, on `(0,0),(0,1),(1,0),(1,1)`.
fn listed_maps(ab: &Observable<f64>) -> Vec<Surjection> {
    const TABLE: [[usize; 4]; 9] = [
        [1, 2, 3, 4],
        [1, 2, 2, 2],
        [2, 2, 1, 2],
        [2, 1, 2, 2],
        [2, 2, 2, 1],
        [1, 2, 1, 2],
        [1, 1, 2, 2],
        [1, 2, 2, 1],
        [1, 1, 1, 1],
    ];
    let order = [(0, 0), (0, 1), (1, 0), (1, 1)];
    TABLE
        .iter()
        .map(|row| {
            Surjection::from_fn(ab.labels(), |t| {
                let c = t.components().expect("pair");
                let key = (c[0].to_string().parse::<usize>().unwrap_or(0), c[1].to_string().parse::<usize>().unwrap_or(0));
                let idx = order.iter().position(|&p| p == key).expect("binary label");
                l(row[idx])
            })
        })
        .collect()
}
