//! Dense complex-matrix substrate.
//!
//! Everything here is a pure function over `nalgebra` dense matrices with
//! complex entries. Hermitian inputs are symmetrized as `(M + M†)/2` before
//! eigendecomposition, and equality is Frobenius distance scaled by `√dim`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Absolute numerical tolerance, `1e-9` unless set otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    eps: T,
}

impl<T: Real> Tolerance<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !eps.is_finite() || eps < T::zero() {
            return Err(Error::InvalidTolerance(eps.as_f64()));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    /// Tolerance on a Frobenius norm of an `n`-dimensional operator.
    pub fn scaled(&self, n: usize) -> T {
        self.eps * T::lit(n as f64).sqrt()
    }
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { eps: T::lit(1e-9) }
    }
}

/// Dimensions of a bipartite composite `H₁ ⊗ H₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimPair {
    n1: usize,
    n2: usize,
}

impl DimPair {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 {
            return Err(Error::InvalidDimension(n1));
        }
        if n2 == 0 {
            return Err(Error::InvalidDimension(n2));
        }
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn total(&self) -> usize {
        self.n1 * self.n2
    }

    /// Dimension of the given factor.
    pub fn of(&self, factor: Factor) -> usize {
        match factor {
            Factor::First => self.n1,
            Factor::Second => self.n2,
        }
    }

    /// Dimension of the factor that is *not* `factor`.
    pub fn other(&self, factor: Factor) -> usize {
        match factor {
            Factor::First => self.n2,
            Factor::Second => self.n1,
        }
    }
}

/// Selects one factor of a bipartite composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    First,
    Second,
}

impl Factor {
    pub fn other(self) -> Self {
        match self {
            Factor::First => Factor::Second,
            Factor::Second => Factor::First,
        }
    }
}

pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n, n)
}

pub fn zeros<T: Real>(rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::zeros(rows, cols)
}

/// Matrix unit `E_ij = |i⟩⟨j|` of size `n`.
pub fn matrix_unit<T: Real>(n: usize, i: usize, j: usize) -> CMatrix<T> {
    let mut m = zeros(n, n);
    m[(i, j)] = creal(T::one());
    m
}

/// Standard basis vector `|i⟩` of length `n`.
pub fn basis_vector<T: Real>(n: usize, i: usize) -> CVector<T> {
    let mut v = CVector::zeros(n);
    v[i] = creal(T::one());
    v
}

/// Outer product `|u⟩⟨v|`.
pub fn ket_bra<T: Real>(u: &CVector<T>, v: &CVector<T>) -> CMatrix<T> {
    u * v.adjoint()
}

pub fn scale<T: Real>(m: &CMatrix<T>, s: T) -> CMatrix<T> {
    m.map(|z| z * s)
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> Complex<T> {
    m.trace()
}

/// Real part of the trace.
pub fn trace_re<T: Real>(m: &CMatrix<T>) -> T {
    m.trace().re
}

pub fn frobenius_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.norm()
}

pub fn ensure_square<T: Real>(m: &CMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_finite<T: Real>(m: &CMatrix<T>) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `‖M − M†‖_F`.
pub fn hermitian_residual<T: Real>(m: &CMatrix<T>) -> T {
    (m - m.adjoint()).norm()
}

/// Exact symmetrization `(M + M†)/2`.
pub fn symmetrize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()).map(|z| z * T::lit(0.5))
}

/// Symmetrizes `m` when its Hermiticity residual is within `tol·√n`, errors otherwise.
pub fn hermitize<T: Real>(m: &CMatrix<T>, tol: Tolerance<T>) -> Result<CMatrix<T>> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    let residual = hermitian_residual(m);
    if residual > tol.scaled(n) {
        return Err(Error::NotHermitian {
            residual: residual.as_f64(),
        });
    }
    Ok(symmetrize(m))
}

/// Eigendecomposition of the Hermitian part of `m`.
///
/// Eigenvalues are returned in ascending order with eigenvectors as the
/// matching columns.
pub fn eigh<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn eigvalsh<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    let mut values: Vec<T> = symmetrize(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    values
}

pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    eigvalsh(m).first().copied().unwrap_or_else(T::zero)
}

pub fn max_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    eigvalsh(m).last().copied().unwrap_or_else(T::zero)
}

/// Loewner-order membership `0 ≤ M` within tolerance.
///
/// Returns `false` for matrices that are not Hermitian within tolerance.
pub fn is_psd<T: Real>(m: &CMatrix<T>, tol: Tolerance<T>) -> Result<bool> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(true);
    }
    if hermitian_residual(m) > tol.scaled(n) {
        return Ok(false);
    }
    Ok(min_eigenvalue(m) >= -tol.eps())
}

/// Applies `f` to the spectrum of the Hermitian part of `m`.
pub fn spectral_map<T: Real>(m: &CMatrix<T>, f: impl Fn(T) -> T) -> CMatrix<T> {
    let (values, vectors) = eigh(m);
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= w;
        }
    }
    scaled * vectors.adjoint()
}

/// Square root of the Hermitian part of `m` with negative eigenvalues clamped to 0.
///
/// Eigenvalues below the rounding floor `n·ε·max|λ|` are also zeroed: the
/// square root would otherwise turn `1e-17` noise into `3e-9` structure.
pub(crate) fn sqrt_clamped<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let (values, vectors) = eigh(m);
    let scale = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let floor = T::default_epsilon() * T::lit(4.0 * m.nrows().max(1) as f64) * scale;
    let mut weighted = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let w = if lambda > floor { lambda.sqrt() } else { T::zero() };
        for r in 0..weighted.nrows() {
            weighted[(r, k)] *= w;
        }
    }
    weighted * vectors.adjoint()
}

/// Principal (PSD) square root.
///
/// Eigenvalues in `[−tol, 0)` are treated as zero; anything more negative is
/// rejected.
pub fn principal_sqrt<T: Real>(m: &CMatrix<T>, tol: Tolerance<T>) -> Result<CMatrix<T>> {
    let h = hermitize(m, tol)?;
    let (values, _) = eigh(&h);
    if let Some(&min) = values.first() {
        if min < -tol.eps() {
            return Err(Error::NotPsd {
                min_eigenvalue: min.as_f64(),
            });
        }
    }
    Ok(sqrt_clamped(&h))
}

/// Kronecker product `A ⊗ B`.
pub fn tensor<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Kronecker product of vectors.
pub fn tensor_vec<T: Real>(a: &CVector<T>, b: &CVector<T>) -> CVector<T> {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// Partial trace over factor `traced` of an operator on `⊗_k C^{dims[k]}`.
pub fn partial_trace_over<T: Real>(
    m: &CMatrix<T>,
    dims: &[usize],
    traced: usize,
) -> Result<CMatrix<T>> {
    let n = ensure_square(m)?;
    if let Some(&d) = dims.iter().find(|&&d| d == 0) {
        return Err(Error::InvalidDimension(d));
    }
    let total: usize = dims.iter().product();
    if total != n {
        return Err(Error::DimensionMismatch {
            context: "partial trace",
            expected: total,
            found: n,
        });
    }
    if traced >= dims.len() {
        return Err(Error::DimensionMismatch {
            context: "partial trace factor index",
            expected: dims.len(),
            found: traced,
        });
    }
    let left: usize = dims[..traced].iter().product();
    let mid = dims[traced];
    let right: usize = dims[traced + 1..].iter().product();
    let out_n = left * right;
    let mut out = zeros(out_n, out_n);
    for l1 in 0..left {
        for r1 in 0..right {
            let row = l1 * right + r1;
            for l2 in 0..left {
                for r2 in 0..right {
                    let col = l2 * right + r2;
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for s in 0..mid {
                        acc += m[((l1 * mid + s) * right + r1, (l2 * mid + s) * right + r2)];
                    }
                    out[(row, col)] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace of an operator on `H₁ ⊗ H₂`.
///
/// `Factor::Second` traces out `H₂` and returns an `n₁ × n₁` matrix;
/// `Factor::First` traces out `H₁`.
pub fn partial_trace<T: Real>(m: &CMatrix<T>, dims: DimPair, traced: Factor) -> Result<CMatrix<T>> {
    let index = match traced {
        Factor::First => 0,
        Factor::Second => 1,
    };
    partial_trace_over(m, &[dims.n1, dims.n2], index)
}

/// Embeds a local operator as `a ⊗ 1` (first factor) or `1 ⊗ a` (second).
pub fn embed<T: Real>(a: &CMatrix<T>, dims: DimPair, factor: Factor) -> CMatrix<T> {
    match factor {
        Factor::First => tensor(a, &identity(dims.n2)),
        Factor::Second => tensor(&identity(dims.n1), a),
    }
}

/// Schmidt decomposition `ψ = Σ λ_i ψ_i ⊗ φ_i`.
#[derive(Debug, Clone)]
pub struct Schmidt<T: Real> {
    pub coefficients: Vec<T>,
    pub left: Vec<CVector<T>>,
    pub right: Vec<CVector<T>>,
}

impl<T: Real> Schmidt<T> {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> CVector<T> {
        let n = self.left.first().map_or(0, |v| v.len()) * self.right.first().map_or(0, |v| v.len());
        let mut out = CVector::zeros(n);
        for ((&lambda, u), v) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            out += tensor_vec(u, v).map(|z| z * lambda);
        }
        out
    }
}

/// Schmidt decomposition via SVD of the `n₁ × n₂` reshaping of `psi`.
///
/// Coefficients at or below `tol` are dropped; the rest are sorted in
/// descending order (stable, so ties keep their SVD order).
pub fn schmidt<T: Real>(psi: &CVector<T>, dims: DimPair, tol: Tolerance<T>) -> Result<Schmidt<T>> {
    if psi.len() != dims.total() {
        return Err(Error::DimensionMismatch {
            context: "Schmidt decomposition",
            expected: dims.total(),
            found: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - T::one()).abs() > tol.eps() {
        return Err(Error::NotNormalized {
            norm: norm.as_f64(),
        });
    }
    let (n1, n2) = (dims.n1, dims.n2);
    let reshaped = CMatrix::from_fn(n1, n2, |i, j| psi[i * n2 + j]);
    let svd = reshaped
        .try_svd(true, true, T::default_epsilon(), 0)
        .ok_or(Error::NoConvergence)?;
    let u = svd.u.ok_or(Error::NoConvergence)?;
    let v_t = svd.v_t.ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol.eps())
        .collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let coefficients = order.iter().map(|&k| svd.singular_values[k]).collect();
    let left = order.iter().map(|&k| u.column(k).into_owned()).collect();
    let right = order
        .iter()
        .map(|&k| v_t.row(k).transpose().into_owned())
        .collect();
    Ok(Schmidt {
        coefficients,
        left,
        right,
    })
}

fn ensure_same_shape<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context: "matrix comparison",
            expected: a.nrows() * a.ncols(),
            found: b.nrows() * b.ncols(),
        });
    }
    Ok(())
}

pub fn frobenius_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<T> {
    ensure_same_shape(a, b)?;
    Ok((a - b).norm())
}

/// `‖A − B‖_F ≤ tol·√dim`.
pub fn approx_eq<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, tol: Tolerance<T>) -> Result<bool> {
    let d = frobenius_distance(a, b)?;
    Ok(d <= tol.scaled(a.nrows().max(a.ncols())))
}

/// `‖AB − BA‖_F`.
pub fn commutator_norm<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    (a * b - b * a).norm()
}
