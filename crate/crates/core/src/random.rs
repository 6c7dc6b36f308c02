//! Seeded random instances for property tests and the theorem suite.

use nalgebra::ComplexField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::effects::{DensityState, Effect, StateKind};
use crate::instruments::{Channel, Instrument, QuantumOperation};
use crate::labels::OutcomeLabel;
use crate::linalg::{self, cplx, scale, CMatrix, CVector};
use crate::models::MeasurementModel;
use crate::observables::{Observable, StochasticMatrix};
use crate::scalar::Real;
use crate::surjection::Surjection;

pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<T: Real>(rng: &mut impl Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Complex Ginibre matrix with standard normal real and imaginary parts.
pub fn ginibre<T: Real>(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| cplx(gaussian(rng), gaussian(rng)))
}

pub fn unit_vector<T: Real>(rng: &mut impl Rng, n: usize) -> CVector<T> {
    let v: CVector<T> = CVector::from_fn(n, |_, _| cplx(gaussian(rng), gaussian(rng)));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed unitary via QR with phase correction.
pub fn unitary<T: Real>(rng: &mut impl Rng, n: usize) -> CMatrix<T> {
    let qr = ginibre::<T>(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.modulus();
        if norm > T::zero() {
            let phase = d / linalg::creal(norm);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Full-rank state `GG†/tr(GG†)`.
pub fn state<T: Real>(rng: &mut impl Rng, n: usize) -> DensityState<T> {
    let g = ginibre::<T>(rng, n, n);
    let m = &g * g.adjoint();
    let tr = linalg::trace_re(&m);
    DensityState::from_matrix_unchecked(scale(&m, T::one() / tr), StateKind::Full)
}

pub fn pure_state<T: Real>(rng: &mut impl Rng, n: usize) -> DensityState<T> {
    let v = unit_vector::<T>(rng, n);
    DensityState::from_matrix_unchecked(linalg::ket_bra(&v, &v), StateKind::Full)
}

/// Effect `U diag(λ) U†` with independent uniform `λ_i ∈ [0, 1]`.
pub fn effect<T: Real>(rng: &mut impl Rng, n: usize) -> Effect<T> {
    let u = unitary::<T>(rng, n);
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            linalg::creal(T::lit(rng.random::<f64>()))
        } else {
            linalg::creal(T::zero())
        }
    });
    Effect::from_matrix_unchecked(&u * d * u.adjoint())
}

/// Random atom `P_φ`.
pub fn atom<T: Real>(rng: &mut impl Rng, n: usize) -> Effect<T> {
    let v = unit_vector::<T>(rng, n);
    Effect::from_matrix_unchecked(linalg::ket_bra(&v, &v))
}

fn labels(k: usize) -> Vec<OutcomeLabel> {
    (0..k).map(OutcomeLabel::from).collect()
}

/// `k`-outcome observable `S^{-1/2} G_x S^{-1/2}` from positive `G_x`.
pub fn observable<T: Real>(rng: &mut impl Rng, n: usize, k: usize) -> Observable<T> {
    let gs: Vec<CMatrix<T>> = (0..k)
        .map(|_| {
            let g = ginibre::<T>(rng, n, n);
            &g * g.adjoint()
        })
        .collect();
    let mut total = linalg::zeros(n, n);
    for g in &gs {
        total += g;
    }
    let inv_root = linalg::spectral_map(&total, |v| T::one() / v.sqrt());
    let outcomes = labels(k)
        .into_iter()
        .zip(gs)
        .map(|(x, g)| (x, Effect::from_matrix_unchecked(&inv_root * g * &inv_root)))
        .collect();
    Observable::from_parts_unchecked(n, outcomes)
}

/// Binary observable `{a, 1−a}` with a random effect `a`.
pub fn binary_observable<T: Real>(rng: &mut impl Rng, n: usize) -> Observable<T> {
    let a = effect::<T>(rng, n);
    let outcomes = [(OutcomeLabel::from(0usize), a.clone()), (OutcomeLabel::from(1usize), a.complement())]
        .into_iter()
        .collect();
    Observable::from_parts_unchecked(n, outcomes)
}

/// Atomic observable `{P_{φ_x}}` for a random orthonormal basis.
pub fn atomic_observable<T: Real>(rng: &mut impl Rng, n: usize) -> Observable<T> {
    let u = unitary::<T>(rng, n);
    let outcomes = labels(n)
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let v = u.column(i).into_owned();
            (x, Effect::from_matrix_unchecked(linalg::ket_bra(&v, &v)))
        })
        .collect();
    Observable::from_parts_unchecked(n, outcomes)
}

/// Two observables diagonal in one random basis.
pub fn commuting_pair<T: Real>(rng: &mut impl Rng, n: usize, k1: usize, k2: usize) -> (Observable<T>, Observable<T>) {
    let u = unitary::<T>(rng, n);
    let mut diagonal = |k: usize| -> Observable<T> {
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let outcomes = labels(k)
            .into_iter()
            .enumerate()
            .map(|(x, label)| {
                let d = CMatrix::from_fn(n, n, |i, j| {
                    linalg::creal(if i == j { T::lit(weights[i][x]) } else { T::zero() })
                });
                (label, Effect::from_matrix_unchecked(&u * d * u.adjoint()))
            })
            .collect();
        Observable::from_parts_unchecked(n, outcomes)
    };
    let a = diagonal(k1);
    let b = diagonal(k2);
    (a, b)
}

/// Kraus operators `G_i S^{-1/2}` with `S = Σ G_i†G_i`, so `Σ K_i†K_i = 1`.
fn isometric_family<T: Real>(rng: &mut impl Rng, n_in: usize, n_out: usize, count: usize) -> Vec<CMatrix<T>> {
    let gs: Vec<CMatrix<T>> = (0..count).map(|_| ginibre(rng, n_out, n_in)).collect();
    let mut s = linalg::zeros(n_in, n_in);
    for g in &gs {
        s += g.adjoint() * g;
    }
    let inv_root = linalg::spectral_map(&s, |v| T::one() / v.sqrt());
    gs.into_iter().map(|g| g * &inv_root).collect()
}

/// Random channel with `kraus_count` Kraus operators.
pub fn channel<T: Real>(rng: &mut impl Rng, n_in: usize, n_out: usize, kraus_count: usize) -> Channel<T> {
    Channel::from_op_unchecked(QuantumOperation::from_kraus_unchecked(
        n_in,
        n_out,
        isometric_family(rng, n_in, n_out, kraus_count),
    ))
}

/// Random instrument with `k` outcomes and `per_outcome` Kraus operators each.
pub fn instrument<T: Real>(rng: &mut impl Rng, n: usize, k: usize, per_outcome: usize) -> Instrument<T> {
    let mut family = isometric_family::<T>(rng, n, n, k * per_outcome).into_iter();
    let ops = labels(k)
        .into_iter()
        .map(|x| {
            let kraus: Vec<_> = family.by_ref().take(per_outcome).collect();
            (x, QuantumOperation::from_kraus_unchecked(n, n, kraus))
        })
        .collect();
    Instrument::from_parts_unchecked(n, ops)
}

/// Kraus instrument: one operator per outcome.
pub fn kraus_instrument<T: Real>(rng: &mut impl Rng, n: usize, k: usize) -> Instrument<T> {
    instrument(rng, n, k, 1)
}

/// Trivial instrument with a random observable and state.
pub fn trivial_instrument<T: Real>(rng: &mut impl Rng, n: usize, k: usize) -> Instrument<T> {
    let a = observable::<T>(rng, n, k);
    let delta = state::<T>(rng, n);
    Instrument::trivial(&a, &delta, crate::linalg::Tolerance::default()).expect("valid inputs")
}

/// Random surjection from `domain` onto `"0".."k-1"`.
pub fn surjection(rng: &mut impl Rng, domain: &[OutcomeLabel], k: usize) -> Surjection {
    assert!(k >= 1 && k <= domain.len(), "codomain size must be in 1..=|domain|");
    let mut images: Vec<usize> = (0..domain.len()).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    for i in (1..images.len()).rev() {
        let j = rng.random_range(0..=i);
        images.swap(i, j);
    }
    let pairs = domain.iter().cloned().zip(images.into_iter().map(OutcomeLabel::from));
    Surjection::new(pairs, labels(k)).expect("every image label is hit")
}

/// Random row-stochastic matrix with row labels `rows` and columns `"0".."k-1"`.
pub fn stochastic<T: Real>(rng: &mut impl Rng, rows: &[OutcomeLabel], k: usize) -> StochasticMatrix<T> {
    let entries = nalgebra::DMatrix::from_fn(rows.len(), k, |_, _| rng.random::<f64>() + 1e-3);
    let entries = nalgebra::DMatrix::from_fn(rows.len(), k, |i, j| {
        T::lit(entries[(i, j)] / entries.row(i).sum())
    });
    StochasticMatrix::new(rows.iter().cloned(), labels(k), entries, crate::linalg::Tolerance::default())
        .expect("rows normalized")
}

/// Measurement model with a random probe state, interaction channel and
/// `k`-outcome probe observable.
pub fn measurement_model<T: Real>(rng: &mut impl Rng, n: usize, probe: usize, k: usize) -> MeasurementModel<T> {
    let eta = state::<T>(rng, probe);
    let nu = channel::<T>(rng, n * probe, n * probe, 2);
    let f = observable::<T>(rng, probe, k);
    MeasurementModel::new(n, eta, nu, f).expect("consistent dimensions")
}
