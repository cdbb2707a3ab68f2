//! Dense operator algebra on tensor products of finite-dimensional factors.
//!
//! Conventions used throughout the crate:
//!
//! * Basis indices are row-major over the factor list: the first factor is the
//!   slowest-varying digit. Protocol spaces list qubits 1, 2, 3 first and then
//!   the resonators.
//! * For a two-level factor, `|1>` is the excited state and
//!   `sigma(Z)|1> = +|1>`. The ladder operator `sigma(Plus)` maps `|0>` to `|1>`.
//!   `sigma(Y)` is fixed by the Pauli algebra `XY = iZ` under that convention,
//!   so in the `(|0>, |1>)` basis it is `[[0, i], [-i, 0]]`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for unit norm of state vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for orthonormality of projector inputs.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Ordered tensor-product structure of a Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CompositeSpace {
    dims: Vec<usize>,
    total_dim: usize,
}

impl CompositeSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("empty dimension list".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!(
                "factor dimension {d} < 2 in {dims:?}"
            )));
        }
        let total_dim = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidSpace(format!("dimension overflow for {dims:?}")))?;
        Ok(Self {
            dims: dims.to_vec(),
            total_dim,
        })
    }

    /// A space of `n` qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(&vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn num_factors(&self) -> usize {
        self.dims.len()
    }

    /// Basis index of the product state with the given per-factor levels.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} levels given for a {}-factor space",
                levels.len(),
                self.dims.len()
            )));
        }
        let mut index = 0;
        for (&level, &dim) in levels.iter().zip(&self.dims) {
            if level >= dim {
                return Err(Error::InvalidState(format!(
                    "level {level} out of range for factor of dimension {dim}"
                )));
            }
            index = index * dim + level;
        }
        Ok(index)
    }

    /// Per-factor levels of a basis index; inverse of [`index_of`](Self::index_of).
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.total_dim);
        let mut levels = vec![0; self.dims.len()];
        for (slot, &dim) in levels.iter_mut().zip(&self.dims).rev() {
            *slot = index % dim;
            index /= dim;
        }
        levels
    }

    /// The space formed by the first `n` factors.
    pub fn leading(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dims.len() {
            return Err(Error::InvalidSpace(format!(
                "cannot take {n} leading factors of {:?}",
                self.dims
            )));
        }
        Self::new(&self.dims[..n])
    }

    /// True if `other` is a prefix of this space.
    pub fn has_prefix(&self, other: &CompositeSpace) -> bool {
        self.dims.starts_with(&other.dims)
    }

    fn stride_around(&self, site: usize) -> (usize, usize, usize) {
        let left: usize = self.dims[..site].iter().product();
        let right: usize = self.dims[site + 1..].iter().product();
        (left, self.dims[site], right)
    }
}

impl TryFrom<Vec<usize>> for CompositeSpace {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(&dims)
    }
}

impl From<CompositeSpace> for Vec<usize> {
    fn from(space: CompositeSpace) -> Self {
        space.dims
    }
}

/// Shorthand for [`CompositeSpace::new`].
pub fn make_space(dims: &[usize]) -> Result<CompositeSpace> {
    CompositeSpace::new(dims)
}

fn check_same(a: &CompositeSpace, b: &CompositeSpace, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::SpaceMismatch(format!(
            "{what}: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// A linear operator on a [`CompositeSpace`], stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    data: Array2<C64>,
}

impl Operator {
    pub fn new(space: CompositeSpace, data: Array2<C64>) -> Result<Self> {
        let n = space.total_dim();
        if data.dim() != (n, n) {
            return Err(Error::InvalidDimension(format!(
                "matrix of shape {:?} for space of dimension {n}",
                data.dim()
            )));
        }
        Ok(Self { space, data })
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            data: Array2::zeros((n, n)),
        }
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        Self {
            space: space.clone(),
            data: Array2::eye(space.total_dim()),
        }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        check_same(&self.space, &other.space, "add")?;
        Ok(Self {
            space: self.space.clone(),
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        check_same(&self.space, &other.space, "sub")?;
        Ok(Self {
            space: self.space.clone(),
            data: &self.data - &other.data,
        })
    }

    pub fn scale(&self, factor: impl Into<C64>) -> Operator {
        let factor = factor.into();
        Self {
            space: self.space.clone(),
            data: self.data.mapv(|x| x * factor),
        }
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        check_same(&self.space, &other.space, "mul")?;
        Ok(Self {
            space: self.space.clone(),
            data: self.data.dot(&other.data),
        })
    }

    pub fn adjoint(&self) -> Operator {
        Self {
            space: self.space.clone(),
            data: linalg::adjoint(&self.data),
        }
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        check_same(&self.space, &other.space, "commutator")?;
        let ab = self.data.dot(&other.data);
        let ba = other.data.dot(&self.data);
        Ok(Self {
            space: self.space.clone(),
            data: ab - ba,
        })
    }

    /// `self + adjoint(self)`, i.e. the operator plus its Hermitian conjugate.
    pub fn plus_hc(&self) -> Operator {
        Self {
            space: self.space.clone(),
            data: &self.data + &linalg::adjoint(&self.data),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    /// Largest entry magnitude, `max |A_ij|`.
    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.data)
    }

    /// `max |A - A^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.data)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn apply(&self, state: &StateVector) -> Result<Array1<C64>> {
        check_same(&self.space, &state.space, "apply")?;
        Ok(self.data.dot(&state.amplitudes))
    }

    /// `<bra| self |ket>`.
    pub fn matrix_element(&self, bra: &StateVector, ket: &StateVector) -> Result<C64> {
        let image = self.apply(ket)?;
        check_same(&self.space, &bra.space, "matrix_element")?;
        Ok(bra
            .amplitudes
            .iter()
            .zip(image.iter())
            .map(|(b, k)| b.conj() * k)
            .sum())
    }
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: CompositeSpace,
    amplitudes: Array1<C64>,
}

impl StateVector {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(space: CompositeSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for space of dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = linalg::norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { space, amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(space: CompositeSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for space of dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = linalg::norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            space,
            amplitudes: amplitudes.mapv(|a| a / norm),
        })
    }

    /// The product basis state with the given per-factor levels.
    pub fn basis(space: &CompositeSpace, levels: &[usize]) -> Result<Self> {
        let index = space.index_of(levels)?;
        let mut amplitudes = Array1::zeros(space.total_dim());
        amplitudes[index] = ONE;
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    /// Normalized superposition `sum_k c_k |levels_k>`.
    pub fn superposition(space: &CompositeSpace, terms: &[(C64, &[usize])]) -> Result<Self> {
        let mut amplitudes = Array1::zeros(space.total_dim());
        for (coefficient, levels) in terms {
            amplitudes[space.index_of(levels)?] += *coefficient;
        }
        Self::normalized(space.clone(), amplitudes)
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_same(&self.space, &other.space, "inner")?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `self (x) other`, with `self` as the leading factors.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut dims = self.space.dims().to_vec();
        dims.extend_from_slice(other.space.dims());
        let space = CompositeSpace::new(&dims)?;
        let m = other.amplitudes.len();
        let amplitudes = Array1::from_shape_fn(space.total_dim(), |i| {
            self.amplitudes[i / m] * other.amplitudes[i % m]
        });
        Ok(Self { space, amplitudes })
    }
}

/// Per-state validation report used by [`DensityMatrix::check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Whether `rho + POSITIVITY_TOL * I` admits a Cholesky factorization,
    /// i.e. whether the smallest eigenvalue is at least `-POSITIVITY_TOL`.
    pub positive: bool,
}

impl InvariantReport {
    /// First violated invariant, if any.
    pub fn violation(&self) -> Option<(&'static str, String)> {
        if self.trace_error.is_nan() || self.trace_error > TRACE_TOL {
            return Some(("trace", format!("|tr(rho) - 1| = {:e}", self.trace_error)));
        }
        if self.hermiticity_error.is_nan() || self.hermiticity_error > HERMITIAN_TOL {
            return Some((
                "hermiticity",
                format!("max|rho - rho^dag| = {:e}", self.hermiticity_error),
            ));
        }
        if !self.positive {
            return Some((
                "positivity",
                format!("smallest eigenvalue below -{POSITIVITY_TOL:e}"),
            ));
        }
        None
    }
}

/// A mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: CompositeSpace,
    data: Array2<C64>,
}

impl DensityMatrix {
    /// Validates all density-matrix invariants.
    pub fn new(space: CompositeSpace, data: Array2<C64>) -> Result<Self> {
        let rho = Self::new_unchecked(space, data)?;
        if let Some((invariant, detail)) = rho.check().violation() {
            return Err(Error::InvalidState(format!("{invariant}: {detail}")));
        }
        Ok(rho)
    }

    /// Shape-checked only; callers are responsible for the physical invariants.
    pub fn new_unchecked(space: CompositeSpace, data: Array2<C64>) -> Result<Self> {
        let n = space.total_dim();
        if data.dim() != (n, n) {
            return Err(Error::InvalidDimension(format!(
                "matrix of shape {:?} for space of dimension {n}",
                data.dim()
            )));
        }
        Ok(Self { space, data })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let a = &state.amplitudes;
        let n = a.len();
        let data = Array2::from_shape_fn((n, n), |(i, j)| a[i] * a[j].conj());
        Self {
            space: state.space.clone(),
            data,
        }
    }

    /// `sum_k w_k |psi_k><psi_k|` for non-negative weights summing to one.
    pub fn mixture(terms: &[(f64, StateVector)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let space = first.1.space.clone();
        let n = space.total_dim();
        let mut data = Array2::zeros((n, n));
        for (weight, state) in terms {
            check_same(&space, &state.space, "mixture")?;
            if *weight < 0.0 {
                return Err(Error::InvalidState(format!("negative weight {weight}")));
            }
            data.scaled_add(C64::from(*weight), &Self::from_pure(state).data);
        }
        Self::new(space, data)
    }

    pub fn maximally_mixed(space: &CompositeSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            data: Array2::eye(n).mapv(|x: C64| x / n as f64),
        }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    /// `tr(op * rho)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        check_same(&self.space, &op.space, "expectation")?;
        let n = self.space.total_dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += op.data[[i, k]] * self.data[[k, i]];
            }
        }
        Ok(acc)
    }

    pub fn check(&self) -> InvariantReport {
        let trace_error = (self.trace() - ONE).norm();
        let hermiticity_error = linalg::hermiticity_error(&self.data);
        let positive = linalg::is_psd_with_shift(&self.data, POSITIVITY_TOL);
        InvariantReport {
            trace_error,
            hermiticity_error,
            positive,
        }
    }

    /// Reduced state on the first `keep` factors.
    pub fn partial_trace_leading(&self, keep: usize) -> Result<DensityMatrix> {
        let space = self.space.leading(keep)?;
        let kept = space.total_dim();
        let traced = self.space.total_dim() / kept;
        let data = Array2::from_shape_fn((kept, kept), |(a, b)| {
            (0..traced)
                .map(|r| self.data[[a * traced + r, b * traced + r]])
                .sum()
        });
        Ok(Self { space, data })
    }

    /// Reduces to the leading factors matching `target`, or returns a clone when
    /// the spaces already agree.
    pub fn reduce_to(&self, target: &CompositeSpace) -> Result<DensityMatrix> {
        if &self.space == target {
            return Ok(self.clone());
        }
        if !self.space.has_prefix(target) {
            return Err(Error::SpaceMismatch(format!(
                "{:?} is not a leading factor set of {:?}",
                target.dims(),
                self.space.dims()
            )));
        }
        self.partial_trace_leading(target.num_factors())
    }

    /// Reorders tensor factors: factor `i` moves to position `perm[i]`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<DensityMatrix> {
        let n = self.space.num_factors();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of {n} factors"
            )));
        }
        let old = self.space.dims();
        let mut dims = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            dims[p] = old[i];
        }
        let space = CompositeSpace::new(&dims)?;
        let map: Vec<usize> = (0..self.space.total_dim())
            .map(|i| {
                let levels = self.space.levels_of(i);
                let mut moved = vec![0; n];
                for (f, &p) in perm.iter().enumerate() {
                    moved[p] = levels[f];
                }
                space.index_of(&moved)
            })
            .collect::<Result<_>>()?;
        let mut data = Array2::zeros(self.data.dim());
        for (i, &a) in map.iter().enumerate() {
            for (j, &b) in map.iter().enumerate() {
                data[[a, b]] = self.data[[i, j]];
            }
        }
        Ok(Self { space, data })
    }
}

/// Single-qubit operator selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Pauli or ladder matrix on a two-level factor.
pub fn sigma(axis: Axis) -> Operator {
    let space = CompositeSpace::new(&[2]).expect("qubit space");
    let m = |a: C64, b: C64, c: C64, d: C64| ndarray::arr2(&[[a, b], [c, d]]);
    let data = match axis {
        Axis::X => m(ZERO, ONE, ONE, ZERO),
        Axis::Y => m(ZERO, I, -I, ZERO),
        Axis::Z => m(-ONE, ZERO, ZERO, ONE),
        Axis::Plus => m(ZERO, ZERO, ONE, ZERO),
        Axis::Minus => m(ZERO, ONE, ZERO, ZERO),
    };
    Operator { space, data }
}

/// Truncated bosonic lowering operator.
pub fn annihilate(n_levels: usize) -> Result<Operator> {
    if n_levels < 2 {
        return Err(Error::InvalidDimension(format!(
            "n_levels = {n_levels}, need at least 2"
        )));
    }
    let space = CompositeSpace::new(&[n_levels])?;
    let mut data = Array2::zeros((n_levels, n_levels));
    for n in 1..n_levels {
        data[[n - 1, n]] = C64::from((n as f64).sqrt());
    }
    Ok(Operator { space, data })
}

/// Lifts a single-factor operator to `site` of `space`, identity elsewhere.
pub fn embed(local: &Operator, site: usize, space: &CompositeSpace) -> Result<Operator> {
    if site >= space.num_factors() {
        return Err(Error::SpaceMismatch(format!(
            "site {site} out of range for {} factors",
            space.num_factors()
        )));
    }
    let d = space.dims()[site];
    if local.data.dim() != (d, d) {
        return Err(Error::SpaceMismatch(format!(
            "local operator of shape {:?} embedded at factor of dimension {d}",
            local.data.dim()
        )));
    }
    let (left, mid, right) = space.stride_around(site);
    let n = space.total_dim();
    let mut data = Array2::zeros((n, n));
    for ((a, b), &value) in local.data.indexed_iter() {
        if value == ZERO {
            continue;
        }
        for l in 0..left {
            for r in 0..right {
                data[[(l * mid + a) * right + r, (l * mid + b) * right + r]] = value;
            }
        }
    }
    Ok(Operator {
        space: space.clone(),
        data,
    })
}

/// Orthogonal projector onto the span of orthonormal states.
pub fn projector(states: &[StateVector]) -> Result<Operator> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("projector of an empty state list".into()))?;
    let space = first.space.clone();
    for (i, s) in states.iter().enumerate() {
        for t in &states[i..] {
            let overlap = s.inner(t)?;
            let expected = if std::ptr::eq(s, t) { ONE } else { ZERO };
            if (overlap - expected).norm() > ORTHONORMAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "projector inputs are not orthonormal (overlap {overlap})"
                )));
            }
        }
    }
    let n = space.total_dim();
    let mut data = Array2::zeros((n, n));
    for s in states {
        data += &DensityMatrix::from_pure(s).data;
    }
    Ok(Operator { space, data })
}

/// Kronecker product of dense matrices.
pub(crate) fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

/// `A (x) B` on the concatenated space.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let mut dims = a.space.dims().to_vec();
    dims.extend_from_slice(b.space.dims());
    Operator::new(CompositeSpace::new(&dims)?, kron(&a.data, &b.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &Operator, b: &Operator) -> f64 {
        linalg::max_abs(&(&a.data - &b.data))
    }

    #[test]
    fn space_sizes() {
        assert_eq!(make_space(&[2, 2, 2, 2]).unwrap().total_dim(), 16);
        assert_eq!(make_space(&[2, 2, 2, 2, 2, 2]).unwrap().total_dim(), 64);
        assert_eq!(make_space(&[2, 2, 2, 3]).unwrap().total_dim(), 24);
    }

    #[test]
    fn space_rejects_bad_dims() {
        assert!(matches!(make_space(&[]), Err(Error::InvalidSpace(_))));
        assert!(matches!(make_space(&[2, 1]), Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn first_factor_is_slowest() {
        let s = make_space(&[2, 3]).unwrap();
        assert_eq!(s.index_of(&[1, 0]).unwrap(), 3);
        assert_eq!(s.index_of(&[0, 2]).unwrap(), 2);
        assert_eq!(s.levels_of(5), vec![1, 2]);
    }

    #[test]
    fn pauli_products() {
        let x = sigma(Axis::X);
        let y = sigma(Axis::Y);
        let z = sigma(Axis::Z);
        let id = Operator::identity(x.space());
        assert_eq!(close(&x.mul(&x).unwrap(), &id), 0.0);
        assert_eq!(close(&x.mul(&y).unwrap(), &z.scale(I)), 0.0);
    }

    #[test]
    fn raising_operator_convention() {
        let q = CompositeSpace::qubits(1).unwrap();
        let zero = StateVector::basis(&q, &[0]).unwrap();
        let one = StateVector::basis(&q, &[1]).unwrap();
        let up = sigma(Axis::Plus);
        assert_eq!(up.apply(&zero).unwrap(), one.amplitudes().clone());
        assert!(up.apply(&one).unwrap().iter().all(|a| *a == ZERO));
        // excited state carries sigma_z = +1
        assert_eq!(sigma(Axis::Z).matrix_element(&one, &one).unwrap(), ONE);
    }

    #[test]
    fn ladder_operator() {
        let a = annihilate(2).unwrap();
        let s = a.space().clone();
        let zero = StateVector::basis(&s, &[0]).unwrap();
        let one = StateVector::basis(&s, &[1]).unwrap();
        assert_eq!(a.apply(&one).unwrap(), zero.amplitudes().clone());
        assert!(a.apply(&zero).unwrap().iter().all(|x| *x == ZERO));

        let a3 = annihilate(3).unwrap();
        let n = a3.adjoint().mul(&a3).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(n.data()[[k, k]].re, k as f64, epsilon = 1e-15);
        }
        let comm = a3.commutator(&a3.adjoint()).unwrap();
        // [a, a^dag] = I except for the truncation entry -(n-1)
        let mut expected = Array2::<C64>::eye(3);
        expected[[2, 2]] = C64::from(-2.0);
        assert!(linalg::max_abs(&(comm.data() - &expected)) < 1e-14);
    }

    #[test]
    fn annihilate_rejects_single_level() {
        assert!(matches!(annihilate(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn embed_convention_and_identity() {
        let s = make_space(&[2, 2]).unwrap();
        let z0 = embed(&sigma(Axis::Z), 0, &s).unwrap();
        let ket = StateVector::basis(&s, &[1, 0]).unwrap();
        assert_eq!(z0.apply(&ket).unwrap(), ket.amplitudes().clone());

        let id = Operator::identity(&make_space(&[2]).unwrap());
        assert_eq!(close(&embed(&id, 1, &s).unwrap(), &Operator::identity(&s)), 0.0);
    }

    #[test]
    fn embed_rejects_mismatch() {
        let s = make_space(&[2, 3]).unwrap();
        assert!(embed(&sigma(Axis::X), 1, &s).is_err());
        assert!(embed(&sigma(Axis::X), 2, &s).is_err());
    }

    #[test]
    fn projector_algebra() {
        let q = CompositeSpace::qubits(3).unwrap();
        let p = projector(&[
            StateVector::basis(&q, &[0, 0, 0]).unwrap(),
            StateVector::basis(&q, &[1, 1, 1]).unwrap(),
        ])
        .unwrap();
        assert_abs_diff_eq!(p.trace().re, 2.0);
        assert!(close(&p.mul(&p).unwrap(), &p) < 1e-12);
        assert!(p.is_hermitian(1e-12));
    }

    #[test]
    fn projector_rejects_non_orthonormal() {
        let q = CompositeSpace::qubits(1).unwrap();
        let a = StateVector::basis(&q, &[0]).unwrap();
        let b = StateVector::superposition(&q, &[(ONE, &[0]), (ONE, &[1])]).unwrap();
        assert!(projector(&[a, b]).is_err());
    }

    #[test]
    fn arithmetic_identities() {
        let s = make_space(&[2, 3]).unwrap();
        let a = embed(&annihilate(3).unwrap(), 1, &s).unwrap();
        let b = embed(&sigma(Axis::Plus), 0, &s).unwrap().scale(C64::new(0.3, -1.2));
        let lhs = a.add(&b).unwrap().adjoint();
        let rhs = a.adjoint().add(&b.adjoint()).unwrap();
        assert_eq!(close(&lhs, &rhs), 0.0);
        assert_eq!(a.commutator(&a).unwrap().max_abs(), 0.0);
        assert_eq!(a.scale(0.0).max_abs(), 0.0);
        assert_eq!(close(&a.adjoint().adjoint(), &a), 0.0);
    }

    #[test]
    fn arithmetic_rejects_mismatch() {
        let a = Operator::identity(&make_space(&[2]).unwrap());
        let b = Operator::identity(&make_space(&[3]).unwrap());
        assert!(matches!(a.add(&b), Err(Error::SpaceMismatch(_))));
        assert!(a.mul(&b).is_err());
        assert!(a.commutator(&b).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let q = CompositeSpace::qubits(1).unwrap();
        let bad_trace = Array2::<C64>::eye(2);
        assert!(DensityMatrix::new(q.clone(), bad_trace).is_err());
        let mut negative = Array2::<C64>::zeros((2, 2));
        negative[[0, 0]] = C64::from(1.1);
        negative[[1, 1]] = C64::from(-0.1);
        assert!(DensityMatrix::new(q.clone(), negative).is_err());
        let mut nonherm = Array2::<C64>::eye(2).mapv(|x| x * 0.5);
        nonherm[[0, 1]] = C64::from(0.1);
        assert!(DensityMatrix::new(q, nonherm).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let s = make_space(&[2, 3]).unwrap();
        let q = make_space(&[2]).unwrap();
        let psi = StateVector::superposition(&q, &[(ONE, &[0]), (I, &[1])]).unwrap();
        let photon = StateVector::basis(&make_space(&[3]).unwrap(), &[2]).unwrap();
        let rho = DensityMatrix::from_pure(&psi.tensor(&photon).unwrap());
        assert_eq!(rho.space(), &s);
        let reduced = rho.partial_trace_leading(1).unwrap();
        let expected = DensityMatrix::from_pure(&psi);
        assert!(linalg::max_abs(&(reduced.data() - expected.data())) < 1e-15);
    }
}
