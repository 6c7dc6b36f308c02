//! Quantum operations, channels and instruments.
//!
//! Every operation is held in two forms: a Kraus list `{S_i}` with
//! `Φ(ρ) = Σ S_i ρ S_i†`, and the Choi matrix
//! `C(Φ) = Σ_{ij} E_ij ⊗ Φ(E_ij)`. Equality of operations is Choi equality.

use indexmap::IndexMap;

use crate::effects::{ensure_same_dim, DensityState, Effect, StateKind};
use crate::error::{Error, Result};
use crate::labels::OutcomeLabel;
use crate::linalg::{
    self, eigh, frobenius_distance, hermitize, matrix_unit, partial_trace, scale, tensor, trace_re,
    CMatrix, DimPair, Factor, Tolerance,
};
use crate::observables::{sum_residual, Distribution, Observable};
use crate::scalar::Real;
use crate::surjection::Surjection;

/// Completely positive, trace non-increasing map `B(H_in) → B(H_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperation<T: Real> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix<T>>,
    choi: CMatrix<T>,
}

impl<T: Real> QuantumOperation<T> {
    /// Builds an operation from Kraus operators of shape `dim_out × dim_in`.
    pub fn new(kraus: Vec<CMatrix<T>>, tol: Tolerance<T>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let (dim_out, dim_in) = first.shape();
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for k in &kraus {
            linalg::ensure_finite(k)?;
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator shape",
                    expected: dim_out * dim_in,
                    found: k.nrows() * k.ncols(),
                });
            }
        }
        let op = Self::from_kraus_unchecked(dim_in, dim_out, kraus);
        let max = linalg::max_eigenvalue(&op.effect_matrix());
        if max > T::one() + tol.eps() {
            return Err(Error::TraceIncreasing {
                max_eigenvalue: max.as_f64(),
            });
        }
        Ok(op)
    }

    pub(crate) fn from_kraus_unchecked(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix<T>>) -> Self {
        let choi = choi_from_kraus(dim_in, dim_out, &kraus);
        Self {
            dim_in,
            dim_out,
            kraus,
            choi,
        }
    }

    /// Recovers an operation from its Choi matrix; Kraus operators are
    /// `√λ` times the reshaped eigenvectors with eigenvalue above `tol`.
    pub fn from_choi(choi: CMatrix<T>, dim_in: usize, dim_out: usize, tol: Tolerance<T>) -> Result<Self> {
        let size = dim_in * dim_out;
        if size == 0 {
            return Err(Error::InvalidDimension(0));
        }
        ensure_same_dim(size, linalg::ensure_square(&choi)?, "Choi matrix")?;
        let h = hermitize(&choi, tol)?;
        let (values, vectors) = eigh(&h);
        if values[0] < -tol.eps() {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue: values[0].as_f64(),
            });
        }
        let kraus = kraus_from_eigen(&values, &vectors, dim_in, dim_out, tol);
        let op = Self::from_kraus_unchecked(dim_in, dim_out, kraus);
        let max = linalg::max_eigenvalue(&op.effect_matrix());
        if max > T::one() + tol.eps() {
            return Err(Error::TraceIncreasing {
                max_eigenvalue: max.as_f64(),
            });
        }
        Ok(op)
    }

    /// Choi matrix without validation, for maps built from trusted parts.
    pub(crate) fn from_choi_unchecked(choi: CMatrix<T>, dim_in: usize, dim_out: usize, tol: Tolerance<T>) -> Self {
        let (values, vectors) = eigh(&linalg::symmetrize(&choi));
        let kraus = kraus_from_eigen(&values, &vectors, dim_in, dim_out, tol);
        Self::from_kraus_unchecked(dim_in, dim_out, kraus)
    }

    /// The zero map.
    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self::from_kraus_unchecked(dim_in, dim_out, vec![linalg::zeros(dim_out, dim_in)])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_kraus_unchecked(n, n, vec![linalg::identity(n)])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    pub fn choi(&self) -> &CMatrix<T> {
        &self.choi
    }

    /// `Φ(M) = Σ S_i M S_i†` for any square input.
    pub fn apply(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        ensure_same_dim(self.dim_in, linalg::ensure_square(m)?, "operation input")?;
        let mut out = linalg::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        Ok(out)
    }

    /// Image of a state; always a partial state.
    pub fn apply_state(&self, rho: &DensityState<T>) -> Result<DensityState<T>> {
        Ok(DensityState::from_matrix_unchecked(self.apply(rho.matrix())?, StateKind::Partial))
    }

    fn effect_matrix(&self) -> CMatrix<T> {
        let mut sum = linalg::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        linalg::symmetrize(&sum)
    }

    /// `Σ S_i†S_i`, the effect with `tr[Φ(ρ)] = tr(ρ·Σ S_i†S_i)`.
    pub fn effect_operator(&self) -> Effect<T> {
        Effect::from_matrix_unchecked(self.effect_matrix())
    }

    /// `next ∘ self`: apply `self`, then `next`. Kraus operators `T_j S_i`.
    pub fn then(&self, next: &QuantumOperation<T>) -> Result<QuantumOperation<T>> {
        ensure_same_dim(self.dim_out, next.dim_in, "operation composition")?;
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for s in &self.kraus {
            for t in &next.kraus {
                kraus.push(t * s);
            }
        }
        Ok(Self::from_kraus_unchecked(self.dim_in, next.dim_out, kraus))
    }

    /// `Φ₁ ⊗ Φ₂` with Kraus operators `S ⊗ T`.
    pub fn tensor(&self, other: &QuantumOperation<T>) -> QuantumOperation<T> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for s in &self.kraus {
            for t in &other.kraus {
                kraus.push(tensor(s, t));
            }
        }
        Self::from_kraus_unchecked(self.dim_in * other.dim_in, self.dim_out * other.dim_out, kraus)
    }

    /// Pointwise sum; Kraus lists are concatenated.
    pub fn sum<'a>(dim_in: usize, dim_out: usize, ops: impl IntoIterator<Item = &'a QuantumOperation<T>>) -> Result<Self>
    where
        T: 'a,
    {
        let mut kraus = Vec::new();
        let mut choi = linalg::zeros(dim_in * dim_out, dim_in * dim_out);
        for op in ops {
            ensure_same_dim(dim_in, op.dim_in, "operation sum input")?;
            ensure_same_dim(dim_out, op.dim_out, "operation sum output")?;
            kraus.extend(op.kraus.iter().cloned());
            choi += &op.choi;
        }
        if kraus.is_empty() {
            return Ok(Self::zero(dim_in, dim_out));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi,
        })
    }

    /// `λ·Φ` for `λ ≥ 0`, with Kraus operators scaled by `√λ`.
    pub fn scaled(&self, lambda: T) -> QuantumOperation<T> {
        let root = lambda.max(T::zero()).sqrt();
        Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| scale(k, root)).collect(),
            choi: scale(&self.choi, lambda),
        }
    }

    /// Frobenius distance between Choi matrices.
    pub fn choi_distance(&self, other: &QuantumOperation<T>) -> Result<T> {
        ensure_same_dim(self.dim_in, other.dim_in, "operation input")?;
        ensure_same_dim(self.dim_out, other.dim_out, "operation output")?;
        frobenius_distance(&self.choi, &other.choi)
    }

    /// Choi distance within `tol · dim_in · dim_out`.
    pub fn approx_eq(&self, other: &QuantumOperation<T>, tol: Tolerance<T>) -> Result<bool> {
        let bound = tol.eps() * T::lit((self.dim_in * self.dim_out) as f64);
        Ok(self.choi_distance(other)? <= bound)
    }

    /// Reduced map on `side`:
    /// `Φ¹(ρ₁) = tr₂[Φ(ρ₁ ⊗ 1₂)]/n₂`, `Φ²(ρ₂) = tr₁[Φ(1₁ ⊗ ρ₂)]/n₁`.
    pub fn reduce(&self, dims: DimPair, side: Factor, tol: Tolerance<T>) -> Result<QuantumOperation<T>> {
        ensure_same_dim(dims.total(), self.dim_in, "reduced operation input")?;
        ensure_same_dim(dims.total(), self.dim_out, "reduced operation output")?;
        let n = dims.of(side);
        let other = dims.of(side.other());
        let norm = T::one() / T::lit(other as f64);
        let fill = linalg::identity::<T>(other);
        let mut choi = linalg::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let unit = matrix_unit::<T>(n, i, j);
                let input = match side {
                    Factor::First => tensor(&unit, &fill),
                    Factor::Second => tensor(&fill, &unit),
                };
                let block = scale(&partial_trace(&self.apply(&input)?, dims, side.other())?, norm);
                choi.view_mut((i * n, j * n), (n, n)).copy_from(&block);
            }
        }
        Ok(Self::from_choi_unchecked(choi, n, n, tol))
    }
}

fn choi_from_kraus<T: Real>(dim_in: usize, dim_out: usize, kraus: &[CMatrix<T>]) -> CMatrix<T> {
    let size = dim_in * dim_out;
    let mut choi = linalg::zeros(size, size);
    for k in kraus {
        let v = linalg::CVector::from_fn(size, |r, _| k[(r % dim_out, r / dim_out)]);
        choi += &v * v.adjoint();
    }
    choi
}

fn kraus_from_eigen<T: Real>(
    values: &[T],
    vectors: &CMatrix<T>,
    dim_in: usize,
    dim_out: usize,
    tol: Tolerance<T>,
) -> Vec<CMatrix<T>> {
    let mut kraus = Vec::new();
    for (idx, &lambda) in values.iter().enumerate().rev() {
        if lambda <= tol.eps() {
            break;
        }
        let root = lambda.sqrt();
        let col = vectors.column(idx);
        kraus.push(CMatrix::from_fn(dim_out, dim_in, |a, i| {
            col[i * dim_out + a] * linalg::creal(root)
        }));
    }
    if kraus.is_empty() {
        kraus.push(linalg::zeros(dim_out, dim_in));
    }
    kraus
}

/// Trace-preserving operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T: Real> {
    op: QuantumOperation<T>,
}

impl<T: Real> Channel<T> {
    pub fn new(op: QuantumOperation<T>, tol: Tolerance<T>) -> Result<Self> {
        let residual = frobenius_distance(&op.effect_matrix(), &linalg::identity(op.dim_in))?;
        if residual > tol.scaled(op.dim_in) {
            return Err(Error::NotTracePreserving {
                residual: residual.as_f64(),
            });
        }
        Ok(Self { op })
    }

    pub fn from_kraus(kraus: Vec<CMatrix<T>>, tol: Tolerance<T>) -> Result<Self> {
        Self::new(QuantumOperation::new(kraus, tol)?, tol)
    }

    pub(crate) fn from_op_unchecked(op: QuantumOperation<T>) -> Self {
        Self { op }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            op: QuantumOperation::identity(n),
        }
    }

    pub fn op(&self) -> &QuantumOperation<T> {
        &self.op
    }

    pub fn into_op(self) -> QuantumOperation<T> {
        self.op
    }

    pub fn dim_in(&self) -> usize {
        self.op.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.op.dim_out
    }

    /// Image of a state, keeping its kind.
    pub fn apply_state(&self, rho: &DensityState<T>) -> Result<DensityState<T>> {
        Ok(DensityState::from_matrix_unchecked(self.op.apply(rho.matrix())?, rho.kind()))
    }

    pub fn tensor(&self, other: &Channel<T>) -> Channel<T> {
        Self {
            op: self.op.tensor(&other.op),
        }
    }
}

/// Finite instrument on `H` of dimension `n`: operations indexed by outcome
/// labels whose sum is a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument<T: Real> {
    dim: usize,
    ops: IndexMap<OutcomeLabel, QuantumOperation<T>>,
}

impl<T: Real> Instrument<T> {
    pub fn new(
        ops: impl IntoIterator<Item = (OutcomeLabel, QuantumOperation<T>)>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let mut map = IndexMap::new();
        for (label, op) in ops {
            if map.contains_key(&label) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
            map.insert(label, op);
        }
        let dim = match map.values().next() {
            Some(op) => op.dim_in,
            None => return Err(Error::NoOutcomes),
        };
        for op in map.values() {
            ensure_same_dim(dim, op.dim_in, "instrument operation input")?;
            ensure_same_dim(dim, op.dim_out, "instrument operation output")?;
        }
        let effects: Vec<_> = map.values().map(QuantumOperation::effect_matrix).collect();
        let residual = sum_residual(effects.iter(), dim);
        if residual > tol.scaled(dim) {
            return Err(Error::NotTracePreserving {
                residual: residual.as_f64(),
            });
        }
        Ok(Self { dim, ops: map })
    }

    /// Validates each outcome's Kraus list, then the total.
    pub fn from_kraus(
        outcomes: impl IntoIterator<Item = (OutcomeLabel, Vec<CMatrix<T>>)>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let ops = outcomes
            .into_iter()
            .map(|(label, kraus)| match QuantumOperation::new(kraus, tol) {
                Ok(op) => Ok((label, op)),
                Err(source) => Err(Error::InvalidOutcome {
                    label: label.to_string(),
                    source: Box::new(source),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops, tol)
    }

    pub(crate) fn from_parts_unchecked(dim: usize, ops: IndexMap<OutcomeLabel, QuantumOperation<T>>) -> Self {
        Self { dim, ops }
    }

    /// Single-outcome instrument `{ν}` labeled `"1"`.
    pub fn from_channel(channel: Channel<T>) -> Self {
        let dim = channel.dim_in();
        let mut ops = IndexMap::new();
        ops.insert(OutcomeLabel::from("1"), channel.into_op());
        Self { dim, ops }
    }

    /// The identity channel as a single-outcome instrument.
    pub fn identity(n: usize) -> Self {
        Self::from_channel(Channel::identity(n))
    }

    /// Lüders instrument `L^A_x(ρ) = A_x^{1/2} ρ A_x^{1/2}`.
    pub fn luders(a: &Observable<T>) -> Self {
        let ops = a
            .iter()
            .map(|(x, ax)| (x.clone(), QuantumOperation::from_kraus_unchecked(a.dim(), a.dim(), vec![ax.sqrt()])))
            .collect();
        Self { dim: a.dim(), ops }
    }

    /// Trivial instrument `𝓘_x(ρ) = tr(ρA_x)·δ`, with Choi matrix `A_xᵀ ⊗ δ`.
    pub fn trivial(a: &Observable<T>, delta: &DensityState<T>, tol: Tolerance<T>) -> Result<Self> {
        if delta.kind() != StateKind::Full {
            return Err(Error::PartialStateNotAllowed);
        }
        ensure_same_dim(a.dim(), delta.dim(), "trivial instrument state")?;
        let ops = a
            .iter()
            .map(|(x, ax)| {
                let choi = tensor(&ax.matrix().transpose(), delta.matrix());
                (x.clone(), QuantumOperation::from_choi_unchecked(choi, a.dim(), a.dim(), tol))
            })
            .collect();
        Ok(Self { dim: a.dim(), ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.ops.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutcomeLabel, &QuantumOperation<T>)> {
        self.ops.iter()
    }

    pub fn operation(&self, label: &OutcomeLabel) -> Result<&QuantumOperation<T>> {
        self.ops
            .get(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `𝓘_X = Σ_{x∈X} 𝓘_x`.
    pub fn event(&self, event: &[OutcomeLabel]) -> Result<QuantumOperation<T>> {
        let ops = event
            .iter()
            .map(|x| self.operation(x))
            .collect::<Result<Vec<_>>>()?;
        QuantumOperation::sum(self.dim, self.dim, ops)
    }

    /// The observable `Î` measured by the instrument, `Î_x = Σ_i S_{x,i}†S_{x,i}`.
    pub fn measured_observable(&self) -> Observable<T> {
        let outcomes = self
            .ops
            .iter()
            .map(|(x, op)| (x.clone(), op.effect_operator()))
            .collect();
        Observable::from_parts_unchecked(self.dim, outcomes)
    }

    /// `C_𝓘 = Σ_x 𝓘_x`.
    pub fn total_channel(&self) -> Channel<T> {
        let op = QuantumOperation::sum(self.dim, self.dim, self.ops.values()).expect("operations share dims");
        Channel::from_op_unchecked(op)
    }

    /// `(𝓘∘𝓙)_{(x,y)}(ρ) = 𝓙_y[𝓘_x(ρ)]`.
    pub fn product(&self, j: &Instrument<T>) -> Result<Instrument<T>> {
        ensure_same_dim(self.dim, j.dim, "product instrument")?;
        let mut ops = IndexMap::new();
        for (x, ix) in &self.ops {
            for (y, jy) in &j.ops {
                ops.insert(OutcomeLabel::pair(x, y), ix.then(jy)?);
            }
        }
        Ok(Self::from_parts_unchecked(self.dim, ops))
    }

    /// `(𝓙|𝓘)_y = 𝓙_y ∘ C_𝓘` with `self = 𝓙`.
    pub fn conditioned_by(&self, i: &Instrument<T>) -> Result<Instrument<T>> {
        ensure_same_dim(self.dim, i.dim, "conditioned instrument")?;
        let total = i.total_channel();
        let ops = self
            .ops
            .iter()
            .map(|(y, jy)| Ok((y.clone(), total.op().then(jy)?)))
            .collect::<Result<_>>()?;
        Ok(Self::from_parts_unchecked(self.dim, ops))
    }

    /// `(𝓘₁⊗𝓘₂)_{(x,y)} = 𝓘_{1,x} ⊗ 𝓘_{2,y}`.
    pub fn tensor(&self, other: &Instrument<T>) -> Instrument<T> {
        let mut ops = IndexMap::new();
        for (x, ix) in &self.ops {
            for (y, iy) in &other.ops {
                ops.insert(OutcomeLabel::pair(x, y), ix.tensor(iy));
            }
        }
        Self::from_parts_unchecked(self.dim * other.dim, ops)
    }

    /// Outcome-wise reduced operations, materialized through their Choi
    /// matrices.
    pub fn reduce(&self, dims: DimPair, side: Factor, tol: Tolerance<T>) -> Result<Instrument<T>> {
        ensure_same_dim(dims.total(), self.dim, "reduced instrument")?;
        let ops = self
            .ops
            .iter()
            .map(|(x, op)| Ok((x.clone(), op.reduce(dims, side, tol)?)))
            .collect::<Result<_>>()?;
        Ok(Self::from_parts_unchecked(dims.of(side), ops))
    }

    /// `μ^𝓘(x) = tr[𝓘_x(1)]/n`.
    pub fn random_measure(&self) -> Distribution<T> {
        let n = T::lit(self.dim as f64);
        let one = linalg::identity::<T>(self.dim);
        self.ops
            .iter()
            .map(|(x, op)| {
                let image = op.apply(&one).expect("square input of matching dim");
                (x.clone(), trace_re(&image) / n)
            })
            .collect()
    }

    /// `f(𝓘)_x = 𝓘_{f⁻¹(x)}`.
    pub fn coarse_grain(&self, f: &Surjection) -> Result<Instrument<T>> {
        f.check_domain(self.labels())?;
        let ops = f
            .codomain()
            .map(|x| {
                let fiber: Vec<_> = f.fiber(x).map(|y| &self.ops[y]).collect();
                Ok((x.clone(), QuantumOperation::sum(self.dim, self.dim, fiber)?))
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_parts_unchecked(self.dim, ops))
    }

    /// Largest Choi distance over a shared outcome set.
    pub fn max_choi_distance(&self, other: &Instrument<T>) -> Result<T> {
        ensure_same_dim(self.dim, other.dim, "instrument comparison")?;
        if self.len() != other.len() {
            return Err(Error::OutcomeSpaceMismatch(format!(
                "{} outcomes vs {}",
                self.len(),
                other.len()
            )));
        }
        let mut worst = T::zero();
        for (x, op) in &self.ops {
            let theirs = other
                .ops
                .get(x)
                .ok_or_else(|| Error::OutcomeSpaceMismatch(format!("missing outcome {x}")))?;
            worst = worst.max(op.choi_distance(theirs)?);
        }
        Ok(worst)
    }

    /// Outcome-wise Choi equality within `tol · n²`.
    pub fn approx_eq(&self, other: &Instrument<T>, tol: Tolerance<T>) -> Result<bool> {
        if self.dim != other.dim || self.len() != other.len() || self.labels().any(|x| !other.ops.contains_key(x)) {
            return Ok(false);
        }
        Ok(self.max_choi_distance(other)? <= choi_bound(self.dim, tol))
    }

    /// Candidate trivial decomposition: `Î`, `δ = C_𝓘(1/n)` and the largest
    /// Choi distance from `𝓘_x` to `Î_xᵀ ⊗ δ`.
    pub fn trivial_fit(&self) -> (Observable<T>, DensityState<T>, T) {
        let mixed = DensityState::maximally_mixed(self.dim);
        let image = self
            .total_channel()
            .op()
            .apply(mixed.matrix())
            .expect("square input of matching dim");
        let delta = DensityState::from_matrix_unchecked(image, StateKind::Full);
        let hat = self.measured_observable();
        let mut worst = T::zero();
        for ((_, op), e) in self.ops.iter().zip(hat.effects()) {
            let expected = tensor(&e.matrix().transpose(), delta.matrix());
            worst = worst.max(frobenius_distance(op.choi(), &expected).expect("same shape"));
        }
        (hat, delta, worst)
    }

    /// Recognizes a trivial instrument, returning its observable and state.
    pub fn as_trivial(&self, tol: Tolerance<T>) -> Option<(Observable<T>, DensityState<T>)> {
        let (hat, delta, residual) = self.trivial_fit();
        (residual <= choi_bound(self.dim, tol)).then_some((hat, delta))
    }
}

/// Choi-equality bound `tol · n²` for operations on dimension `n`.
pub fn choi_bound<T: Real>(n: usize, tol: Tolerance<T>) -> T {
    tol.eps() * T::lit((n * n) as f64)
}

/// Residuals for the structure of composites of trivial instruments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialCompositeReport<T> {
    /// `𝓘₁⊗𝓘₂` against the trivial instrument with `A⊗B` and `α⊗β`.
    pub tensor: T,
    /// `(𝓘₁⊗𝓘₂)¹` against the trivial instrument with `μ^B(y)A_x` and `α`.
    pub reduced_first: T,
    /// `(𝓘₁⊗𝓘₂)²` against the trivial instrument with `μ^A(x)B_y` and `β`.
    pub reduced_second: T,
}

impl<T: Real> TrivialCompositeReport<T> {
    pub fn max(&self) -> T {
        self.tensor.max(self.reduced_first).max(self.reduced_second)
    }
}

fn require_trivial<T: Real>(i: &Instrument<T>, tol: Tolerance<T>) -> Result<(Observable<T>, DensityState<T>)> {
    let (hat, delta, residual) = i.trivial_fit();
    if residual > choi_bound(i.dim, tol) {
        return Err(Error::NotTrivial {
            residual: residual.as_f64(),
        });
    }
    Ok((hat, delta))
}

/// Checks the tensor and reduced structure of two trivial instruments.
pub fn trivial_composites<T: Real>(
    i1: &Instrument<T>,
    i2: &Instrument<T>,
    tol: Tolerance<T>,
) -> Result<TrivialCompositeReport<T>> {
    let (a, alpha) = require_trivial(i1, tol)?;
    let (b, beta) = require_trivial(i2, tol)?;
    let dims = DimPair::new(i1.dim, i2.dim)?;
    let joint = i1.tensor(i2);
    let tensor_residual = joint.max_choi_distance(&Instrument::trivial(&a.tensor(&b), &alpha.tensor(&beta), tol)?)?;

    let mu_a = a.random_measure();
    let mu_b = b.random_measure();
    let weighted = |first: bool| -> Observable<T> {
        let mut outcomes = IndexMap::new();
        for (x, ax) in a.iter() {
            for (y, by) in b.iter() {
                let e = if first {
                    scale(ax.matrix(), mu_b[y])
                } else {
                    scale(by.matrix(), mu_a[x])
                };
                outcomes.insert(OutcomeLabel::pair(x, y), Effect::from_matrix_unchecked(e));
            }
        }
        Observable::from_parts_unchecked(if first { a.dim() } else { b.dim() }, outcomes)
    };
    let reduced_first = joint
        .reduce(dims, Factor::First, tol)?
        .max_choi_distance(&Instrument::trivial(&weighted(true), &alpha, tol)?)?;
    let reduced_second = joint
        .reduce(dims, Factor::Second, tol)?
        .max_choi_distance(&Instrument::trivial(&weighted(false), &beta, tol)?)?;
    Ok(TrivialCompositeReport {
        tensor: tensor_residual,
        reduced_first,
        reduced_second,
    })
}

/// Residual of the claim that the reductions of a trivial instrument with
/// observable `A` and state `α` are trivial with `A¹, tr₂(α)` and
/// `A², tr₁(α)`.
pub fn reduced_trivial_residual<T: Real>(i: &Instrument<T>, dims: DimPair, tol: Tolerance<T>) -> Result<T> {
    let (a, alpha) = require_trivial(i, tol)?;
    let mut worst = T::zero();
    for side in [Factor::First, Factor::Second] {
        let expected = Instrument::trivial(&a.reduce(dims, side)?, &alpha.marginal(dims, side)?, tol)?;
        worst = worst.max(i.reduce(dims, side, tol)?.max_choi_distance(&expected)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, cplx, creal, identity};

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    fn l(s: &str) -> OutcomeLabel {
        OutcomeLabel::from(s)
    }

    fn diag(values: &[f64]) -> CMatrix<f64> {
        CMatrix::from_fn(values.len(), values.len(), |i, j| creal(if i == j { values[i] } else { 0.0 }))
    }

    fn binary(a0: CMatrix<f64>) -> Observable<f64> {
        let a1 = identity::<f64>(a0.nrows()) - &a0;
        Observable::from_matrices([(l("0"), a0), (l("1"), a1)], tol()).unwrap()
    }

    fn amplitude_damping(gamma: f64) -> Vec<CMatrix<f64>> {
        let k0 = diag(&[1.0, (1.0 - gamma).sqrt()]);
        let mut k1 = linalg::zeros(2, 2);
        k1[(0, 1)] = creal(gamma.sqrt());
        vec![k0, k1]
    }

    #[test]
    fn identity_choi_is_unnormalized_bell_projector() {
        let op = QuantumOperation::<f64>::identity(2);
        let mut expected = linalg::zeros(4, 4);
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(r, c)] = creal(1.0);
        }
        assert!(linalg::approx_eq(op.choi(), &expected, tol()).unwrap());
    }

    #[test]
    fn transpose_map_is_rejected() {
        // Choi of ρ ↦ ρᵀ is the swap operator.
        let mut swap = linalg::zeros::<f64>(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = creal(1.0);
            }
        }
        assert!(matches!(
            QuantumOperation::from_choi(swap, 2, 2, tol()),
            Err(Error::NotCompletelyPositive { .. })
        ));
    }

    #[test]
    fn kraus_choi_roundtrip() {
        let op = QuantumOperation::new(amplitude_damping(0.3), tol()).unwrap();
        let back = QuantumOperation::from_choi(op.choi().clone(), 2, 2, tol()).unwrap();
        assert!(op.choi_distance(&back).unwrap() <= 1e-9);
        for i in 0..2 {
            for j in 0..2 {
                let e = matrix_unit(2, i, j);
                assert!(linalg::approx_eq(&op.apply(&e).unwrap(), &back.apply(&e).unwrap(), tol()).unwrap());
            }
        }
    }

    #[test]
    fn non_square_kraus() {
        // Isometry C² → C³.
        let mut v = linalg::zeros::<f64>(3, 2);
        v[(0, 0)] = creal(1.0);
        v[(2, 1)] = creal(1.0);
        let op = QuantumOperation::new(vec![v], tol()).unwrap();
        let back = QuantumOperation::from_choi(op.choi().clone(), 2, 3, tol()).unwrap();
        assert!(op.choi_distance(&back).unwrap() < 1e-12);
        let rho = diag(&[0.25, 0.75]);
        let out = op.apply(&rho).unwrap();
        assert!((out[(2, 2)].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn trace_increasing_rejected() {
        assert!(matches!(
            QuantumOperation::new(vec![scale(&identity::<f64>(2), 1.2)], tol()),
            Err(Error::TraceIncreasing { .. })
        ));
        assert!(matches!(QuantumOperation::<f64>::new(vec![], tol()), Err(Error::EmptyKraus)));
    }

    #[test]
    fn instrument_validation() {
        let ad = QuantumOperation::new(amplitude_damping(0.3), tol()).unwrap();
        assert!(Instrument::new([(l("1"), ad.clone())], tol()).is_ok());
        assert!(matches!(
            Instrument::new([(l("a"), ad.clone()), (l("b"), ad)], tol()),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn luders_measures_its_observable() {
        let a = binary(CMatrix::from_element(2, 2, creal(0.25)));
        let lu = Instrument::luders(&a);
        assert!(lu.measured_observable().approx_eq(&a, tol()).unwrap());
        let id = Instrument::luders(&Observable::trivial(3));
        assert!(id.approx_eq(&Instrument::identity(3), tol()).unwrap());
        let basis = Instrument::luders(&Observable::<f64>::computational_basis(2));
        let rho = CMatrix::from_fn(2, 2, |i, j| if i == j { creal(0.5) } else { cplx(0.1, 0.2) });
        let op = basis.operation(&l("0")).unwrap();
        let once = op.apply(&rho).unwrap();
        assert!(linalg::approx_eq(&op.apply(&once).unwrap(), &once, tol()).unwrap());
    }

    #[test]
    fn trivial_instrument() {
        let a = binary(diag(&[0.3, 0.8]));
        let delta = DensityState::pure(&basis_vector(2, 1), tol()).unwrap();
        let t = Instrument::trivial(&a, &delta, tol()).unwrap();
        assert!(t.measured_observable().approx_eq(&a, tol()).unwrap());
        let rho = diag(&[0.6, 0.4]);
        let out = t.operation(&l("0")).unwrap().apply(&rho).unwrap();
        // tr(ρA_0) = 0.18 + 0.32
        assert!(linalg::approx_eq(&out, &scale(delta.matrix(), 0.5), tol()).unwrap());
        let (obs, state) = t.as_trivial(tol()).unwrap();
        assert!(obs.approx_eq(&a, tol()).unwrap());
        assert!(linalg::approx_eq(state.matrix(), delta.matrix(), tol()).unwrap());
        assert!(Instrument::luders(&a).as_trivial(tol()).is_none());
    }

    #[test]
    fn products_and_conditioning() {
        let a = binary(diag(&[0.3, 0.8]));
        let b = binary(CMatrix::from_element(2, 2, creal(0.5)));
        let la = Instrument::luders(&a);
        let lb = Instrument::luders(&b);
        let prod = la.product(&lb).unwrap();
        assert!(prod
            .measured_observable()
            .approx_eq(&a.seq_prod(&b).unwrap(), tol())
            .unwrap());
        let with_id = la.product(&Instrument::identity(2)).unwrap();
        let drop = Surjection::from_fn(with_id.labels(), |x| x.components().unwrap()[0].clone());
        assert!(with_id.coarse_grain(&drop).unwrap().approx_eq(&la, tol()).unwrap());
        let g = Surjection::from_fn(prod.labels(), |x| x.components().unwrap()[1].clone());
        assert!(prod
            .coarse_grain(&g)
            .unwrap()
            .approx_eq(&lb.conditioned_by(&la).unwrap(), tol())
            .unwrap());
        assert!(lb.conditioned_by(&Instrument::identity(2)).unwrap().approx_eq(&lb, tol()).unwrap());
    }

    #[test]
    fn reduction_of_tensor() {
        let a = binary(diag(&[0.3, 0.8]));
        let b = binary(diag(&[0.1, 0.5, 0.9]));
        let j = Instrument::luders(&a).tensor(&Instrument::luders(&b));
        let dims = DimPair::new(2, 3).unwrap();
        let red = j.reduce(dims, Factor::First, tol()).unwrap();
        let la = Instrument::luders(&a);
        let mu = Instrument::luders(&b).random_measure();
        for (label, op) in red.iter() {
            let c = label.components().unwrap();
            let expected = la.operation(&c[0]).unwrap().scaled(mu[&c[1]]);
            assert!(op.approx_eq(&expected, tol()).unwrap());
        }
        assert!(red
            .measured_observable()
            .approx_eq(&j.measured_observable().reduce(dims, Factor::First).unwrap(), tol())
            .unwrap());
    }

    #[test]
    fn trivial_composite_structure() {
        let a = binary(diag(&[0.3, 0.8]));
        let b = binary(diag(&[0.1, 0.5, 0.9]));
        let alpha = DensityState::pure(&basis_vector(2, 1), tol()).unwrap();
        let beta = DensityState::maximally_mixed(3);
        let i1 = Instrument::trivial(&a, &alpha, tol()).unwrap();
        let i2 = Instrument::trivial(&b, &beta, tol()).unwrap();
        let report = trivial_composites(&i1, &i2, tol()).unwrap();
        assert!(report.max() < 1e-9, "{report:?}");
        let dims = DimPair::new(2, 3).unwrap();
        assert!(reduced_trivial_residual(&i1.tensor(&i2), dims, tol()).unwrap() < 1e-9);
        assert!(matches!(
            trivial_composites(&Instrument::luders(&a), &i2, tol()),
            Err(Error::NotTrivial { .. })
        ));
    }
}
