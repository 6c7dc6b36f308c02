//! Observables (POVMs) with labeled outcomes.

use indexmap::{IndexMap, IndexSet};
use nalgebra::DMatrix;

use crate::effects::{clip_probability, ensure_same_dim, DensityState, Effect, StateKind};
use crate::error::{Error, Result};
use crate::labels::OutcomeLabel;
use crate::linalg::{self, frobenius_norm, scale, trace_re, CMatrix, DimPair, Factor, Tolerance};
use crate::scalar::Real;
use crate::surjection::Surjection;

/// Probability vector indexed by outcome labels.
pub type Distribution<T> = IndexMap<OutcomeLabel, T>;

/// Finite POVM: effects indexed by outcome labels, summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable<T: Real> {
    dim: usize,
    outcomes: IndexMap<OutcomeLabel, Effect<T>>,
}

impl<T: Real> Observable<T> {
    /// Validates that the effects share a dimension and sum to `1`.
    pub fn new(
        outcomes: impl IntoIterator<Item = (OutcomeLabel, Effect<T>)>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let mut map = IndexMap::new();
        for (label, effect) in outcomes {
            if map.contains_key(&label) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
            map.insert(label, effect);
        }
        let dim = match map.values().next() {
            Some(e) => e.dim(),
            None => return Err(Error::NoOutcomes),
        };
        for e in map.values() {
            ensure_same_dim(dim, e.dim(), "observable outcome")?;
        }
        let residual = sum_residual(map.values().map(Effect::matrix), dim);
        if residual > tol.scaled(dim) {
            return Err(Error::NotObservable {
                residual: residual.as_f64(),
            });
        }
        Ok(Self { dim, outcomes: map })
    }

    /// Validates raw matrices as effects first, naming the offending outcome.
    pub fn from_matrices(
        outcomes: impl IntoIterator<Item = (OutcomeLabel, CMatrix<T>)>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let effects = outcomes
            .into_iter()
            .map(|(label, m)| match Effect::new(m, tol) {
                Ok(e) => Ok((label, e)),
                Err(source) => Err(Error::InvalidOutcome {
                    label: label.to_string(),
                    source: Box::new(source),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects, tol)
    }

    pub(crate) fn from_parts_unchecked(dim: usize, outcomes: IndexMap<OutcomeLabel, Effect<T>>) -> Self {
        Self { dim, outcomes }
    }

    /// `{1}` with the single outcome labeled `"1"`.
    pub fn trivial(n: usize) -> Self {
        let mut outcomes = IndexMap::new();
        outcomes.insert(OutcomeLabel::from("1"), Effect::identity(n));
        Self { dim: n, outcomes }
    }

    /// Computational-basis projectors labeled `"0".."n-1"`.
    pub fn computational_basis(n: usize) -> Self {
        let outcomes = (0..n)
            .map(|i| {
                let e = linalg::basis_vector::<T>(n, i);
                (OutcomeLabel::from(i), Effect::from_matrix_unchecked(linalg::ket_bra(&e, &e)))
            })
            .collect();
        Self { dim: n, outcomes }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.outcomes.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutcomeLabel, &Effect<T>)> {
        self.outcomes.iter()
    }

    pub fn effects(&self) -> impl Iterator<Item = &Effect<T>> {
        self.outcomes.values()
    }

    pub fn effect(&self, label: &OutcomeLabel) -> Result<&Effect<T>> {
        self.outcomes
            .get(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `A_X = Σ_{x∈X} A_x`.
    pub fn event_effect(&self, event: &[OutcomeLabel]) -> Result<Effect<T>> {
        let mut sum = linalg::zeros(self.dim, self.dim);
        let mut seen = IndexSet::new();
        for x in event {
            if seen.insert(x) {
                sum += self.effect(x)?.matrix();
            }
        }
        Ok(Effect::from_matrix_unchecked(sum))
    }

    /// `(A∘B)_{(x,y)} = A_x∘B_y` on `Ω_A × Ω_B`.
    pub fn seq_prod(&self, b: &Observable<T>) -> Result<Observable<T>> {
        ensure_same_dim(self.dim, b.dim, "sequential product of observables")?;
        let mut outcomes = IndexMap::new();
        for (x, ax) in &self.outcomes {
            let root = ax.sqrt();
            for (y, by) in &b.outcomes {
                let m = &root * by.matrix() * &root;
                outcomes.insert(OutcomeLabel::pair(x, y), Effect::from_matrix_unchecked(m));
            }
        }
        Ok(Self::from_parts_unchecked(self.dim, outcomes))
    }

    /// `(B|A)_y = Σ_x A_x∘B_y` with `self = B`.
    pub fn conditioned_by(&self, a: &Observable<T>) -> Result<Observable<T>> {
        ensure_same_dim(self.dim, a.dim, "conditioned observable")?;
        let roots: Vec<_> = a.effects().map(Effect::sqrt).collect();
        let outcomes = self
            .outcomes
            .iter()
            .map(|(y, by)| {
                let mut sum = linalg::zeros(self.dim, self.dim);
                for root in &roots {
                    sum += root * by.matrix() * root;
                }
                (y.clone(), Effect::from_matrix_unchecked(sum))
            })
            .collect();
        Ok(Self::from_parts_unchecked(self.dim, outcomes))
    }

    /// `Φ_ρ^A(x) = tr(ρA_x)` for every outcome.
    pub fn distribution(&self, rho: &DensityState<T>, tol: Tolerance<T>) -> Result<Distribution<T>> {
        require_full(rho)?;
        ensure_same_dim(self.dim, rho.dim(), "distribution")?;
        self.outcomes
            .iter()
            .map(|(x, ax)| {
                let p = trace_re(&(rho.matrix() * ax.matrix()));
                Ok((x.clone(), clip_probability(p, tol)?))
            })
            .collect()
    }

    /// `Φ_ρ^A(X) = tr(ρA_X)`.
    pub fn event_probability(
        &self,
        rho: &DensityState<T>,
        event: &[OutcomeLabel],
        tol: Tolerance<T>,
    ) -> Result<T> {
        require_full(rho)?;
        ensure_same_dim(self.dim, rho.dim(), "event probability")?;
        let e = self.event_effect(event)?;
        clip_probability(trace_re(&(rho.matrix() * e.matrix())), tol)
    }

    /// Probability of `A_X` then `B_Y`: `tr[ρ(A∘B)_{X×Y}]`.
    pub fn then_probability(
        &self,
        rho: &DensityState<T>,
        event_a: &[OutcomeLabel],
        b: &Observable<T>,
        event_b: &[OutcomeLabel],
        tol: Tolerance<T>,
    ) -> Result<T> {
        let product = self.seq_prod(b)?;
        let mut event = Vec::with_capacity(event_a.len() * event_b.len());
        for x in event_a {
            self.effect(x)?;
            for y in event_b {
                b.effect(y)?;
                event.push(OutcomeLabel::pair(x, y));
            }
        }
        product.event_probability(rho, &event, tol)
    }

    /// `(ν•A)_y = Σ_x ν_{xy} A_x`.
    pub fn post_process(&self, nu: &StochasticMatrix<T>) -> Result<Observable<T>> {
        if nu.rows.len() != self.len() || self.labels().any(|x| !nu.rows.contains(x)) {
            return Err(Error::OutcomeSpaceMismatch(
                "stochastic matrix rows must be the observable's outcome space".into(),
            ));
        }
        let outcomes = nu
            .cols
            .iter()
            .enumerate()
            .map(|(j, y)| {
                let mut sum = linalg::zeros(self.dim, self.dim);
                for (x, ax) in &self.outcomes {
                    let i = nu.rows.get_index_of(x).expect("row present");
                    sum += scale(ax.matrix(), nu.entries[(i, j)]);
                }
                (y.clone(), Effect::from_matrix_unchecked(sum))
            })
            .collect();
        Ok(Self::from_parts_unchecked(self.dim, outcomes))
    }

    /// `μ^A(x) = tr(A_x)/n`.
    pub fn random_measure(&self) -> Distribution<T> {
        let n = T::lit(self.dim as f64);
        self.outcomes
            .iter()
            .map(|(x, ax)| (x.clone(), ax.trace() / n))
            .collect()
    }

    /// Composite observable `B_{(x,y)} = A_{1,x} ⊗ A_{2,y}`.
    pub fn tensor(&self, other: &Observable<T>) -> Observable<T> {
        let mut outcomes = IndexMap::new();
        for (x, ax) in &self.outcomes {
            for (y, by) in &other.outcomes {
                outcomes.insert(OutcomeLabel::pair(x, y), ax.tensor(by));
            }
        }
        Self::from_parts_unchecked(self.dim * other.dim, outcomes)
    }

    /// Outcome-wise reduced effects on `side`.
    pub fn reduce(&self, dims: DimPair, side: Factor) -> Result<Observable<T>> {
        ensure_same_dim(dims.total(), self.dim, "reduced observable")?;
        let outcomes = self
            .outcomes
            .iter()
            .map(|(x, ax)| Ok((x.clone(), ax.reduce(dims, side)?)))
            .collect::<Result<_>>()?;
        Ok(Self::from_parts_unchecked(dims.of(side), outcomes))
    }

    /// `f(B)` with `f(B)_x = B_{f⁻¹(x)}`, outcomes in codomain order.
    pub fn coarse_grain(&self, f: &Surjection) -> Result<Observable<T>> {
        f.check_domain(self.labels())?;
        let outcomes = f
            .codomain()
            .map(|x| {
                let mut sum = linalg::zeros(self.dim, self.dim);
                for y in f.fiber(x) {
                    sum += self.outcomes[y].matrix();
                }
                (x.clone(), Effect::from_matrix_unchecked(sum))
            })
            .collect();
        Ok(Self::from_parts_unchecked(self.dim, outcomes))
    }

    /// Same outcome set (any order) with approximately equal effects.
    pub fn approx_eq(&self, other: &Observable<T>, tol: Tolerance<T>) -> Result<bool> {
        if self.dim != other.dim || self.len() != other.len() {
            return Ok(false);
        }
        for (x, ax) in &self.outcomes {
            match other.outcomes.get(x) {
                Some(bx) if ax.approx_eq(bx, tol)? => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Largest pairwise commutator norm `‖[A_x, B_y]‖_F`.
    pub fn max_commutator(&self, other: &Observable<T>) -> Result<T> {
        ensure_same_dim(self.dim, other.dim, "commutator")?;
        let mut worst = T::zero();
        for ax in self.effects() {
            for by in other.effects() {
                worst = worst.max(linalg::commutator_norm(ax.matrix(), by.matrix()));
            }
        }
        Ok(worst)
    }
}

fn require_full<T: Real>(rho: &DensityState<T>) -> Result<()> {
    if rho.kind() != StateKind::Full {
        return Err(Error::PartialStateNotAllowed);
    }
    Ok(())
}

/// `‖Σ M_x − 1‖_F`.
pub(crate) fn sum_residual<'a, T: Real>(mats: impl Iterator<Item = &'a CMatrix<T>>, dim: usize) -> T {
    let mut sum = -linalg::identity::<T>(dim);
    for m in mats {
        sum += m;
    }
    frobenius_norm(&sum)
}

/// Push-forward of a distribution under `f`, in codomain order.
pub fn push_forward<T: Real>(dist: &Distribution<T>, f: &Surjection) -> Result<Distribution<T>> {
    f.check_domain(dist.keys())?;
    Ok(f
        .codomain()
        .map(|x| {
            let p = f.fiber(x).fold(T::zero(), |acc, y| acc + dist[y]);
            (x.clone(), p)
        })
        .collect())
}

/// Transition probabilities `ν_{xy}` from row labels to column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<T: Real> {
    rows: IndexSet<OutcomeLabel>,
    cols: IndexSet<OutcomeLabel>,
    entries: DMatrix<T>,
}

impl<T: Real> StochasticMatrix<T> {
    pub fn new(
        rows: impl IntoIterator<Item = OutcomeLabel>,
        cols: impl IntoIterator<Item = OutcomeLabel>,
        entries: DMatrix<T>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let rows = unique_labels(rows)?;
        let cols = unique_labels(cols)?;
        if entries.nrows() != rows.len() {
            return Err(Error::DimensionMismatch {
                context: "stochastic matrix rows",
                expected: rows.len(),
                found: entries.nrows(),
            });
        }
        if entries.ncols() != cols.len() {
            return Err(Error::DimensionMismatch {
                context: "stochastic matrix columns",
                expected: cols.len(),
                found: entries.ncols(),
            });
        }
        for (i, row) in entries.row_iter().enumerate() {
            let mut sum = T::zero();
            for &v in row.iter() {
                if v < -tol.eps() {
                    return Err(Error::NegativeProbability(v.as_f64()));
                }
                sum += v;
            }
            if (sum - T::one()).abs() > tol.eps() {
                return Err(Error::NotStochastic {
                    row: rows[i].to_string(),
                    sum: sum.as_f64(),
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Deterministic post-processing `ν_{xy} = [f(x) = y]`.
    pub fn from_surjection(f: &Surjection) -> Self {
        let rows: IndexSet<_> = f.domain().cloned().collect();
        let cols: IndexSet<_> = f.codomain().cloned().collect();
        let entries = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            if f.apply(&rows[i]) == Some(&cols[j]) {
                T::one()
            } else {
                T::zero()
            }
        });
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.rows.iter()
    }

    pub fn cols(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.cols.iter()
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    /// `α((x,r),(y,s)) = ν_{xy} μ_{rs}`.
    pub fn tensor(&self, other: &StochasticMatrix<T>) -> StochasticMatrix<T> {
        let pairs = |a: &IndexSet<OutcomeLabel>, b: &IndexSet<OutcomeLabel>| -> IndexSet<OutcomeLabel> {
            a.iter()
                .flat_map(|x| b.iter().map(move |r| OutcomeLabel::pair(x, r)))
                .collect()
        };
        let entries = self.entries.kronecker(&other.entries);
        Self {
            rows: pairs(&self.rows, &other.rows),
            cols: pairs(&self.cols, &other.cols),
            entries,
        }
    }
}

fn unique_labels(labels: impl IntoIterator<Item = OutcomeLabel>) -> Result<IndexSet<OutcomeLabel>> {
    let mut set = IndexSet::new();
    for l in labels {
        if !set.insert(l.clone()) {
            return Err(Error::DuplicateLabel(l.to_string()));
        }
    }
    Ok(set)
}
