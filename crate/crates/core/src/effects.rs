//! Effects, density states and their reductions to subsystems.
//!
//! An [`Effect`] is a Hermitian operator with spectrum in `[0, 1]`; the
//! sequential product `a∘b = a^{1/2} b a^{1/2}` models "measure `a`, then
//! `b`". On a composite `H₁ ⊗ H₂` the reduced effects are the normalized
//! partial traces `a¹ = tr₂(a)/n₂` and `a² = tr₁(a)/n₁`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, approx_eq, eigh, hermitize, partial_trace, scale, sqrt_clamped, tensor,
    trace_re, CMatrix, CVector, DimPair, Factor, Tolerance,
};
use crate::scalar::Real;

/// Validated effect `0 ≤ a ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect<T: Real> {
    matrix: CMatrix<T>,
}

impl<T: Real> Effect<T> {
    /// Validates `m` as an effect, reporting the violated bound on failure.
    pub fn new(m: CMatrix<T>, tol: Tolerance<T>) -> Result<Self> {
        let h = hermitize(&m, tol)?;
        let values = linalg::eigvalsh(&h);
        if let Some(&min) = values.first() {
            if min < -tol.eps() {
                return Err(Error::EffectBelowZero {
                    min_eigenvalue: min.as_f64(),
                });
            }
        }
        if let Some(&max) = values.last() {
            if max > T::one() + tol.eps() {
                return Err(Error::EffectAboveOne {
                    max_eigenvalue: max.as_f64(),
                });
            }
        }
        Ok(Self { matrix: h })
    }

    /// Wraps a matrix known to be an effect up to rounding; only symmetrizes.
    pub(crate) fn from_matrix_unchecked(m: CMatrix<T>) -> Self {
        Self {
            matrix: linalg::symmetrize(&m),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            matrix: linalg::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: linalg::identity(n),
        }
    }

    /// Atom `P_φ = |φ⟩⟨φ|` for a unit vector `φ`.
    pub fn atom(phi: &CVector<T>, tol: Tolerance<T>) -> Result<Self> {
        let norm = phi.norm();
        if (norm - T::one()).abs() > tol.eps() {
            return Err(Error::NotNormalized {
                norm: norm.as_f64(),
            });
        }
        Ok(Self::from_matrix_unchecked(linalg::ket_bra(phi, phi)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn trace(&self) -> T {
        trace_re(&self.matrix)
    }

    /// `a' = 1 − a`.
    pub fn complement(&self) -> Self {
        Self {
            matrix: linalg::identity::<T>(self.dim()) - &self.matrix,
        }
    }

    /// `λ·a` for `λ ∈ [0, 1]`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        if lambda < T::zero() || lambda > T::one() {
            return Err(Error::ProbabilityOutOfRange(lambda.as_f64()));
        }
        Ok(Self {
            matrix: scale(&self.matrix, lambda),
        })
    }

    /// Principal square root `a^{1/2}`.
    pub fn sqrt(&self) -> CMatrix<T> {
        sqrt_clamped(&self.matrix)
    }

    /// Sequential product `a∘b = a^{1/2} b a^{1/2}`.
    pub fn seq_prod(&self, b: &Effect<T>) -> Result<Effect<T>> {
        ensure_same_dim(self.dim(), b.dim(), "sequential product")?;
        let root = self.sqrt();
        Ok(Self::from_matrix_unchecked(&root * &b.matrix * &root))
    }

    /// `a ⊗ b` on the composite.
    pub fn tensor(&self, other: &Effect<T>) -> Effect<T> {
        Self {
            matrix: tensor(&self.matrix, &other.matrix),
        }
    }

    pub fn approx_eq(&self, other: &Effect<T>, tol: Tolerance<T>) -> Result<bool> {
        approx_eq(&self.matrix, &other.matrix, tol)
    }

    /// Reduced effect on `side`: `a¹ = tr₂(a)/n₂` or `a² = tr₁(a)/n₁`.
    pub fn reduce(&self, dims: DimPair, side: Factor) -> Result<Effect<T>> {
        ensure_same_dim(dims.total(), self.dim(), "reduced effect")?;
        let traced = side.other();
        let reduced = partial_trace(&self.matrix, dims, traced)?;
        let norm = T::one() / T::lit(dims.of(traced) as f64);
        Ok(Self::from_matrix_unchecked(scale(&reduced, norm)))
    }

    /// Numerical rank: eigenvalues above `tol`.
    pub fn rank(&self, tol: Tolerance<T>) -> usize {
        linalg::eigvalsh(&self.matrix)
            .into_iter()
            .filter(|&v| v > tol.eps())
            .count()
    }

    /// `a = λ·P_φ` with `λ ∈ [0, 1]`; the zero effect counts (`λ = 0`).
    pub fn is_indecomposable(&self, tol: Tolerance<T>) -> bool {
        self.rank(tol) <= 1
    }

    /// Tests whether the effect is an atom and recovers its unit vector.
    pub fn atom_check(&self, tol: Tolerance<T>) -> AtomCheck<T> {
        let (values, vectors) = eigh(&self.matrix);
        let n = values.len();
        let top = values[n - 1];
        let rest_small = values[..n - 1].iter().all(|v| v.abs() <= tol.eps());
        if rest_small && (top - T::one()).abs() <= tol.eps() {
            AtomCheck {
                is_atom: true,
                unit_vector: Some(vectors.column(n - 1).into_owned()),
            }
        } else {
            AtomCheck {
                is_atom: false,
                unit_vector: None,
            }
        }
    }

    /// Factorization test: returns `(b, c)` with `b ⊗ c ≈ a` when `a` is a
    /// product effect.
    ///
    /// Uses the identity `a = (n₁n₂ / tr a)·a¹ ⊗ a²` that characterizes
    /// product effects. The factors are gauged so `b` has top eigenvalue 1.
    pub fn factorization_test(
        &self,
        dims: DimPair,
        tol: Tolerance<T>,
    ) -> Result<Option<(Effect<T>, Effect<T>)>> {
        ensure_same_dim(dims.total(), self.dim(), "factorization test")?;
        let tr = self.trace();
        if tr <= tol.eps() && approx_eq(&self.matrix, &linalg::zeros(self.dim(), self.dim()), tol)? {
            return Ok(Some((Effect::zero(dims.n1()), Effect::zero(dims.n2()))));
        }
        let a1 = self.reduce(dims, Factor::First)?;
        let a2 = self.reduce(dims, Factor::Second)?;
        let weight = T::lit((dims.n1() * dims.n2()) as f64) / tr;
        let candidate = scale(&tensor(a1.matrix(), a2.matrix()), weight);
        if !approx_eq(&candidate, &self.matrix, tol)? {
            return Ok(None);
        }
        let top = linalg::max_eigenvalue(a1.matrix());
        let b = Effect::from_matrix_unchecked(scale(a1.matrix(), T::one() / top));
        let c = Effect::from_matrix_unchecked(scale(a2.matrix(), weight * top));
        Ok(Some((b, c)))
    }

    /// Nonzero spectra of `a¹` and `a²` for an atom `a`, both descending.
    ///
    /// For an atom with Schmidt coefficients `λ_i` these are `λ_i²/n₂` and
    /// `λ_i²/n₁`, so the lists pair up index by index with ratio `n₁/n₂`.
    pub fn atom_reduction_spectrum(&self, dims: DimPair, tol: Tolerance<T>) -> Result<(Vec<T>, Vec<T>)> {
        if !self.atom_check(tol).is_atom {
            return Err(Error::NotAtom);
        }
        let spectrum = |side| -> Result<Vec<T>> {
            let mut values: Vec<T> = linalg::eigvalsh(self.reduce(dims, side)?.matrix())
                .into_iter()
                .filter(|&v| v > tol.eps())
                .collect();
            values.reverse();
            Ok(values)
        };
        Ok((spectrum(Factor::First)?, spectrum(Factor::Second)?))
    }
}

/// Result of [`Effect::atom_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCheck<T: Real> {
    pub is_atom: bool,
    pub unit_vector: Option<CVector<T>>,
}

/// Whether a density operator is required to have unit trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Partial,
    Full,
}

/// Density operator: PSD with trace `≤ 1` (partial) or `= 1` (full).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T: Real> {
    matrix: CMatrix<T>,
    kind: StateKind,
}

impl<T: Real> DensityState<T> {
    pub fn new(m: CMatrix<T>, kind: StateKind, tol: Tolerance<T>) -> Result<Self> {
        let h = hermitize(&m, tol)?;
        let min = linalg::min_eigenvalue(&h);
        if min < -tol.eps() {
            return Err(Error::NotPsd {
                min_eigenvalue: min.as_f64(),
            });
        }
        let tr = trace_re(&h);
        let ok = match kind {
            StateKind::Full => (tr - T::one()).abs() <= tol.eps(),
            StateKind::Partial => tr <= T::one() + tol.eps(),
        };
        if !ok {
            return Err(Error::BadTrace { trace: tr.as_f64() });
        }
        Ok(Self { matrix: h, kind })
    }

    pub fn full(m: CMatrix<T>, tol: Tolerance<T>) -> Result<Self> {
        Self::new(m, StateKind::Full, tol)
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix<T>, kind: StateKind) -> Self {
        Self {
            matrix: linalg::symmetrize(&m),
            kind,
        }
    }

    /// Pure state `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &CVector<T>, tol: Tolerance<T>) -> Result<Self> {
        let atom = Effect::atom(psi, tol)?;
        Ok(Self {
            matrix: atom.into_matrix(),
            kind: StateKind::Full,
        })
    }

    /// `1/n`.
    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            matrix: scale(&linalg::identity(n), T::one() / T::lit(n as f64)),
            kind: StateKind::Full,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn trace(&self) -> T {
        trace_re(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityState<T>) -> DensityState<T> {
        let kind = if self.kind == StateKind::Full && other.kind == StateKind::Full {
            StateKind::Full
        } else {
            StateKind::Partial
        };
        Self {
            matrix: tensor(&self.matrix, &other.matrix),
            kind,
        }
    }

    /// Local state `tr_other(ρ)` on `side` (not renormalized).
    pub fn marginal(&self, dims: DimPair, side: Factor) -> Result<DensityState<T>> {
        ensure_same_dim(dims.total(), self.dim(), "state marginal")?;
        Ok(Self {
            matrix: partial_trace(&self.matrix, dims, side.other())?,
            kind: self.kind,
        })
    }
}

/// Clips a probability within `tol` of `[0, 1]`; errors beyond it.
pub(crate) fn clip_probability<T: Real>(p: T, tol: Tolerance<T>) -> Result<T> {
    if p < -tol.eps() || p > T::one() + tol.eps() {
        return Err(Error::ProbabilityOutOfRange(p.as_f64()));
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// `P_ρ(a) = tr(ρa)` for a full state `ρ`.
pub fn occurrence_prob<T: Real>(rho: &DensityState<T>, a: &Effect<T>, tol: Tolerance<T>) -> Result<T> {
    if rho.kind() != StateKind::Full {
        return Err(Error::PartialStateNotAllowed);
    }
    ensure_same_dim(rho.dim(), a.dim(), "occurrence probability")?;
    clip_probability(trace_re(&(rho.matrix() * a.matrix())), tol)
}

pub(crate) fn ensure_same_dim(expected: usize, found: usize, context: &'static str) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
