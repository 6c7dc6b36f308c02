//! Measurement models `(H, K, η, ν, F)`: a base system of dimension `n`, a
//! probe of dimension `k` prepared in `η`, an interaction channel `ν` on
//! `H ⊗ K` and a probe observable `F`.

use indexmap::IndexMap;

use crate::effects::{ensure_same_dim, DensityState, StateKind};
use crate::error::{Error, Result};
use crate::instruments::{Channel, Instrument, QuantumOperation};
use crate::linalg::{self, matrix_unit, partial_trace_over, scale, tensor, CMatrix, DimPair, Factor, Tolerance};
use crate::observables::Observable;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel<T: Real> {
    base_dim: usize,
    probe_dim: usize,
    eta: DensityState<T>,
    nu: Channel<T>,
    probe_observable: Observable<T>,
}

impl<T: Real> MeasurementModel<T> {
    pub fn new(
        base_dim: usize,
        eta: DensityState<T>,
        nu: Channel<T>,
        probe_observable: Observable<T>,
    ) -> Result<Self> {
        if base_dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if eta.kind() != StateKind::Full {
            return Err(Error::PartialStateNotAllowed);
        }
        let probe_dim = eta.dim();
        ensure_same_dim(probe_dim, probe_observable.dim(), "probe observable")?;
        ensure_same_dim(base_dim * probe_dim, nu.dim_in(), "interaction channel input")?;
        ensure_same_dim(base_dim * probe_dim, nu.dim_out(), "interaction channel output")?;
        Ok(Self {
            base_dim,
            probe_dim,
            eta,
            nu,
            probe_observable,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn probe_state(&self) -> &DensityState<T> {
        &self.eta
    }

    pub fn interaction(&self) -> &Channel<T> {
        &self.nu
    }

    pub fn probe_observable(&self) -> &Observable<T> {
        &self.probe_observable
    }

    /// `M̂_x(ρ) = tr_K[ν(ρ⊗η)(1⊗F_x)]`, assembled from Choi blocks.
    pub fn instrument(&self, tol: Tolerance<T>) -> Result<Instrument<T>> {
        let n = self.base_dim;
        let dims = [n, self.probe_dim];
        let mut images = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let input = tensor(&matrix_unit::<T>(n, i, j), self.eta.matrix());
                images.push(self.nu.op().apply(&input)?);
            }
        }
        self.assemble(&images, |image, fx| {
            let embedded = tensor(&linalg::identity::<T>(n), fx);
            partial_trace_over(&(image * embedded), &dims, 1)
        }, tol)
    }

    /// The model observable `M^∧∧`, measured by the model instrument.
    pub fn observable(&self, tol: Tolerance<T>) -> Result<Observable<T>> {
        Ok(self.instrument(tol)?.measured_observable())
    }

    /// Reduced model instrument on `side` of a composite base, computed as
    /// `(1/n₂) tr_K{tr₂[ν(ρ₁⊗1₂⊗η)](1₁⊗F_x)}` (and its mirror for side 2).
    pub fn reduced_instrument(&self, dims: DimPair, side: Factor, tol: Tolerance<T>) -> Result<Instrument<T>> {
        ensure_same_dim(dims.total(), self.base_dim, "reduced model base")?;
        let n = dims.of(side);
        let other = dims.of(side.other());
        let norm = T::one() / T::lit(other as f64);
        let fill = linalg::identity::<T>(other);
        let three = [dims.n1(), dims.n2(), self.probe_dim];
        let traced = match side {
            Factor::First => 1,
            Factor::Second => 0,
        };
        let mut images = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let unit = matrix_unit::<T>(n, i, j);
                let base = match side {
                    Factor::First => tensor(&unit, &fill),
                    Factor::Second => tensor(&fill, &unit),
                };
                let image = self.nu.op().apply(&tensor(&base, self.eta.matrix()))?;
                images.push(scale(&partial_trace_over(&image, &three, traced)?, norm));
            }
        }
        let local = [n, self.probe_dim];
        self.assemble(&images, |image, fx| {
            let embedded = tensor(&linalg::identity::<T>(n), fx);
            partial_trace_over(&(image * embedded), &local, 1)
        }, tol)
    }

    fn assemble(
        &self,
        images: &[CMatrix<T>],
        block: impl Fn(&CMatrix<T>, &CMatrix<T>) -> Result<CMatrix<T>>,
        tol: Tolerance<T>,
    ) -> Result<Instrument<T>> {
        let n = (images.len() as f64).sqrt().round() as usize;
        let mut ops = IndexMap::new();
        for (x, fx) in self.probe_observable.iter() {
            let mut choi = linalg::zeros(n * n, n * n);
            for i in 0..n {
                for j in 0..n {
                    let b = block(&images[i * n + j], fx.matrix())?;
                    choi.view_mut((i * n, j * n), (n, n)).copy_from(&b);
                }
            }
            let op = QuantumOperation::from_choi(choi, n, n, tol).map_err(|source| Error::InvalidOutcome {
                label: x.to_string(),
                source: Box::new(source),
            })?;
            ops.insert(x.clone(), op);
        }
        Instrument::new(ops, tol)
    }

    /// `M₁ ⊗ M₂ = (H₁⊗H₂, K₁⊗K₂, η₁⊗η₂, ν₁⊗ν₂, F₁⊗F₂)` with the interaction
    /// conjugated by the swap `H₁H₂K₁K₂ → H₁K₁H₂K₂`.
    pub fn composite(&self, other: &MeasurementModel<T>) -> MeasurementModel<T> {
        let swap = SwapOperator::new(self.base_dim, other.base_dim, self.probe_dim, other.probe_dim)
            .expect("validated dimensions");
        let u = swap.matrix();
        let ud = u.adjoint();
        let mut kraus = Vec::with_capacity(self.nu.op().kraus().len() * other.nu.op().kraus().len());
        for s in self.nu.op().kraus() {
            for t in other.nu.op().kraus() {
                kraus.push(&ud * tensor(s, t) * u);
            }
        }
        let dim = self.base_dim * other.base_dim * self.probe_dim * other.probe_dim;
        let nu = Channel::from_op_unchecked(QuantumOperation::from_kraus_unchecked(dim, dim, kraus));
        MeasurementModel {
            base_dim: self.base_dim * other.base_dim,
            probe_dim: self.probe_dim * other.probe_dim,
            eta: self.eta.tensor(&other.eta),
            nu,
            probe_observable: self.probe_observable.tensor(&other.probe_observable),
        }
    }

    /// Same base, probe, probe state and interaction.
    pub fn shares_apparatus(&self, other: &MeasurementModel<T>, tol: Tolerance<T>) -> Result<bool> {
        if self.base_dim != other.base_dim || self.probe_dim != other.probe_dim {
            return Ok(false);
        }
        if !linalg::approx_eq(self.eta.matrix(), other.eta.matrix(), tol)? {
            return Ok(false);
        }
        self.nu.op().approx_eq(other.nu.op(), tol)
    }

    /// Same apparatus with a different probe observable.
    pub fn with_probe_observable(&self, f: Observable<T>) -> Result<MeasurementModel<T>> {
        Self::new(self.base_dim, self.eta.clone(), self.nu.clone(), f)
    }
}

/// Permutation `U: H₁⊗H₂⊗K₁⊗K₂ → H₁⊗K₁⊗H₂⊗K₂`,
/// `U(φ₁⊗φ₂⊗ψ₁⊗ψ₂) = φ₁⊗ψ₁⊗φ₂⊗ψ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOperator<T: Real> {
    dims: [usize; 4],
    matrix: CMatrix<T>,
}

impl<T: Real> SwapOperator<T> {
    pub fn new(n1: usize, n2: usize, k1: usize, k2: usize) -> Result<Self> {
        if let Some(&d) = [n1, n2, k1, k2].iter().find(|&&d| d == 0) {
            return Err(Error::InvalidDimension(d));
        }
        let total = n1 * n2 * k1 * k2;
        let mut matrix = linalg::zeros(total, total);
        for src in 0..total {
            matrix[(swap_index([n1, n2, k1, k2], src), src)] = linalg::creal(T::one());
        }
        Ok(Self {
            dims: [n1, n2, k1, k2],
            matrix,
        })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    /// Image index of basis vector `src` of `H₁⊗H₂⊗K₁⊗K₂`.
    pub fn apply_index(&self, src: usize) -> usize {
        swap_index(self.dims, src)
    }
}

fn swap_index([_, n2, k1, k2]: [usize; 4], src: usize) -> usize {
    let d = src % k2;
    let c = (src / k2) % k1;
    let b = (src / (k2 * k1)) % n2;
    let a = src / (k2 * k1 * n2);
    ((a * k1 + c) * n2 + b) * k2 + d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::OutcomeLabel;
    use crate::linalg::{basis_vector, cplx, creal, identity};

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    fn cnot() -> CMatrix<f64> {
        let mut m = linalg::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(r, c)] = creal(1.0);
        }
        m
    }

    fn p0() -> DensityState<f64> {
        DensityState::pure(&basis_vector(2, 0), tol()).unwrap()
    }

    fn cnot_model() -> MeasurementModel<f64> {
        let nu = Channel::from_kraus(vec![cnot()], tol()).unwrap();
        MeasurementModel::new(2, p0(), nu, Observable::computational_basis(2)).unwrap()
    }

    #[test]
    fn cnot_model_is_luders_of_basis() {
        let m = cnot_model();
        let basis = Observable::computational_basis(2);
        assert!(m.instrument(tol()).unwrap().approx_eq(&Instrument::luders(&basis), tol()).unwrap());
        assert!(m.observable(tol()).unwrap().approx_eq(&basis, tol()).unwrap());
    }

    #[test]
    fn identity_interaction_scales_input() {
        let eta = DensityState::full(
            CMatrix::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => creal(0.7),
                (1, 1) => creal(0.3),
                (0, 1) => cplx(0.2, 0.1),
                _ => cplx(0.2, -0.1),
            }),
            tol(),
        )
        .unwrap();
        let m = MeasurementModel::new(3, eta, Channel::identity(6), Observable::computational_basis(2)).unwrap();
        let inst = m.instrument(tol()).unwrap();
        for (x, w) in [("0", 0.7), ("1", 0.3)] {
            let expected = QuantumOperation::identity(3).scaled(w);
            assert!(inst.operation(&OutcomeLabel::from(x)).unwrap().approx_eq(&expected, tol()).unwrap());
        }
    }

    #[test]
    fn trivial_probe_observable_gives_total_channel() {
        let m = cnot_model().with_probe_observable(Observable::trivial(2)).unwrap();
        let inst = m.instrument(tol()).unwrap();
        assert_eq!(inst.len(), 1);
        assert!(inst
            .approx_eq(&Instrument::luders(&Observable::computational_basis(2)).coarse_grain(
                &crate::surjection::Surjection::from_fn(
                    Observable::<f64>::computational_basis(2).labels(),
                    |_| OutcomeLabel::from("1")
                )
            ).unwrap(), tol())
            .unwrap());
    }

    #[test]
    fn swap_index_formula() {
        let unit = SwapOperator::<f64>::new(1, 1, 1, 1).unwrap();
        assert_eq!(unit.matrix().shape(), (1, 1));
        let s = SwapOperator::<f64>::new(2, 3, 2, 2).unwrap();
        let u = s.matrix();
        assert!(linalg::approx_eq(&(u.adjoint() * u), &identity(24), tol()).unwrap());
        // φ₁=e1, φ₂=e2, ψ₁=e0, ψ₂=e1
        let v = linalg::tensor_vec(
            &linalg::tensor_vec(&basis_vector::<f64>(2, 1), &basis_vector(3, 2)),
            &linalg::tensor_vec(&basis_vector(2, 0), &basis_vector(2, 1)),
        );
        let w = linalg::tensor_vec(
            &linalg::tensor_vec(&basis_vector::<f64>(2, 1), &basis_vector(2, 0)),
            &linalg::tensor_vec(&basis_vector(3, 2), &basis_vector(2, 1)),
        );
        assert!((u * v - w).norm() < 1e-15);
    }

    #[test]
    fn composite_factorizes_on_products() {
        let m1 = cnot_model();
        let m2 = cnot_model().with_probe_observable(Observable::trivial(2)).unwrap();
        let m = m1.composite(&m2);
        assert_eq!((m.base_dim(), m.probe_dim()), (4, 4));
        let inst = m.instrument(tol()).unwrap();
        let i1 = m1.instrument(tol()).unwrap();
        let i2 = m2.instrument(tol()).unwrap();
        let rho1 = CMatrix::from_fn(2, 2, |i, j| if i == j { creal(0.5) } else { cplx(0.3, 0.2) });
        let rho2 = CMatrix::from_fn(2, 2, |i, j| if i == j { creal(0.5) } else { cplx(-0.1, 0.4) });
        for (label, op) in inst.iter() {
            let c = label.components().unwrap();
            let lhs = op.apply(&tensor(&rho1, &rho2)).unwrap();
            let rhs = tensor(
                &i1.operation(&c[0]).unwrap().apply(&rho1).unwrap(),
                &i2.operation(&c[1]).unwrap().apply(&rho2).unwrap(),
            );
            assert!(linalg::approx_eq(&lhs, &rhs, tol()).unwrap());
        }
        let single = cnot_model().with_probe_observable(Observable::trivial(2)).unwrap();
        assert_eq!(single.composite(&single).probe_observable().len(), 1);
    }

    #[test]
    fn reduced_local_interaction() {
        // ν = CNOT on (H₁, K) with H₂ idle; H₁⊗H₂⊗K ordering.
        let mut u = linalg::zeros::<f64>(8, 8);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    u[((a * 2 + b) * 2 + (c ^ a), (a * 2 + b) * 2 + c)] = creal(1.0);
                }
            }
        }
        let nu = Channel::from_kraus(vec![u], tol()).unwrap();
        let m = MeasurementModel::new(4, p0(), nu, Observable::computational_basis(2)).unwrap();
        let dims = DimPair::new(2, 2).unwrap();
        let direct = m.reduced_instrument(dims, Factor::First, tol()).unwrap();
        let via = m.instrument(tol()).unwrap().reduce(dims, Factor::First, tol()).unwrap();
        assert!(direct.approx_eq(&via, tol()).unwrap());
        assert!(direct
            .approx_eq(&Instrument::luders(&Observable::computational_basis(2)), tol())
            .unwrap());
        let second = m.reduced_instrument(dims, Factor::Second, tol()).unwrap();
        assert!(second
            .approx_eq(&m.instrument(tol()).unwrap().reduce(dims, Factor::Second, tol()).unwrap(), tol())
            .unwrap());
    }
}
