//! Time-independent Lindblad master equations
//! `drho/dt = -i[H, rho] + sum_k r_k D[c_k](rho)` and their integration.
//!
//! Density matrices are vectorized row-major, `vec(rho)[i*d + j] = rho[i][j]`,
//! so `vec(A X B) = (A (x) B^T) vec(X)`.

use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CompositeSpace, DensityMatrix, Operator, C64, HERMITIAN_TOL, ZERO};
use crate::linalg;
use crate::par::{map_collect, ExecPolicy};

/// Largest Hilbert-space dimension accepted by [`step_propagator`].
pub const DENSE_GUARD: usize = 80;
/// Largest Liouvillian block that [`BlockPropagator`] exponentiates densely.
pub const BLOCK_GUARD: usize = 2048;

/// A collapse operator with its rate, contributing `rate * D[operator]`.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub operator: Operator,
    pub rate: f64,
    pub label: String,
}

impl Collapse {
    pub fn new(operator: Operator, rate: f64, label: impl Into<String>) -> Self {
        Self {
            operator,
            rate,
            label: label.into(),
        }
    }
}

/// Hamiltonian plus weighted collapse operators on a common space.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    space: CompositeSpace,
    hamiltonian: Operator,
    collapses: Vec<Collapse>,
    description: String,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: Operator,
        collapses: Vec<Collapse>,
        description: impl Into<String>,
    ) -> Result<Self> {
        let space = hamiltonian.space().clone();
        let herm = hamiltonian.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidModel(format!(
                "Hamiltonian is not Hermitian (max|H - H^dag| = {herm:e})"
            )));
        }
        for c in &collapses {
            if c.operator.space() != &space {
                return Err(Error::SpaceMismatch(format!(
                    "collapse '{}' on {:?}, model on {:?}",
                    c.label,
                    c.operator.space().dims(),
                    space.dims()
                )));
            }
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "collapse '{}' has invalid rate {}",
                    c.label, c.rate
                )));
            }
        }
        Ok(Self {
            space,
            hamiltonian,
            collapses,
            description: description.into(),
        })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn collapses(&self) -> &[Collapse] {
        &self.collapses
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Largest collapse rate, or 0 without dissipation.
    pub fn max_rate(&self) -> f64 {
        self.collapses.iter().fold(0.0, |m, c| m.max(c.rate))
    }

    /// Right-hand side evaluated directly on the matrix, without the
    /// superoperator.
    pub fn rhs(&self, rho: &Array2<C64>) -> Array2<C64> {
        let h = self.hamiltonian.data();
        let mut out = (h.dot(rho) - rho.dot(h)).mapv(|x| x * C64::new(0.0, -1.0));
        for c in &self.collapses {
            if c.rate == 0.0 {
                continue;
            }
            out.scaled_add(C64::from(c.rate), &dissipator_raw(c.operator.data(), rho));
        }
        out
    }
}

fn dissipator_raw(o: &Array2<C64>, rho: &Array2<C64>) -> Array2<C64> {
    let od = linalg::adjoint(o);
    let k = od.dot(o);
    let jump = o.dot(rho).dot(&od);
    let anti = k.dot(rho) + rho.dot(&k);
    jump - anti.mapv(|x| x * 0.5)
}

/// `D[o](rho) = o rho o^dag - (o^dag o rho + rho o^dag o) / 2`.
pub fn dissipator(o: &Operator, rho: &DensityMatrix) -> Result<Array2<C64>> {
    if o.space() != rho.space() {
        return Err(Error::SpaceMismatch(format!(
            "dissipator operator on {:?}, state on {:?}",
            o.space().dims(),
            rho.space().dims()
        )));
    }
    Ok(dissipator_raw(o.data(), rho.data()))
}

/// Sparse (CSR) superoperator acting on row-major vectorized matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    hilbert_dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Superoperator {
    fn from_triplets(hilbert_dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        let n = hilbert_dim * hilbert_dim;
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        // drop exact cancellations so the block structure is not polluted
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            hilbert_dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    /// Dimension of the underlying Hilbert space `d`; the superoperator is `d^2 x d^2`.
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn dim(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    /// `unvec(L vec(rho))`.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let d = self.hilbert_dim;
        let x: Vec<C64> = rho.iter().copied().collect();
        let mut y = vec![ZERO; x.len()];
        self.matvec(&x, &mut y);
        Array2::from_shape_vec((d, d), y).expect("square")
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let idx: Vec<usize> = (0..self.dim()).collect();
        self.dense_block(&idx)
    }

    /// Dense restriction to the sorted index set `idx`.
    pub fn dense_block(&self, idx: &[usize]) -> Array2<C64> {
        let mut position = HashMap::with_capacity(idx.len());
        for (p, &i) in idx.iter().enumerate() {
            position.insert(i, p);
        }
        let mut out = Array2::zeros((idx.len(), idx.len()));
        for (p, &row) in idx.iter().enumerate() {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                if let Some(&q) = position.get(&self.cols[k]) {
                    out[[p, q]] = self.vals[k];
                }
            }
        }
        out
    }

    /// Connected components of the (undirected) sparsity graph. `L` is block
    /// diagonal over these. Each component is sorted; components are ordered
    /// by their smallest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for row in 0..n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let (a, b) = (find(&mut parent, row), find(&mut parent, self.cols[k]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            let s = *slot.entry(root).or_insert_with(|| {
                comps.push(Vec::new());
                comps.len() - 1
            });
            comps[s].push(i);
        }
        comps
    }
}

fn nonzeros(a: &Array2<C64>) -> Vec<(usize, usize, C64)> {
    a.indexed_iter()
        .filter(|(_, v)| **v != ZERO)
        .map(|((i, j), v)| (i, j, *v))
        .collect()
}

fn identity_nz(d: usize) -> Vec<(usize, usize, C64)> {
    (0..d).map(|i| (i, i, C64::new(1.0, 0.0))).collect()
}

fn push_kron(
    out: &mut Vec<(usize, usize, C64)>,
    a: &[(usize, usize, C64)],
    b: &[(usize, usize, C64)],
    d: usize,
    coef: C64,
) {
    for &(ia, ja, va) in a {
        for &(ib, jb, vb) in b {
            out.push((ia * d + ib, ja * d + jb, coef * va * vb));
        }
    }
}

/// Sparse Liouvillian of `model` in the row-major vectorization.
pub fn liouvillian(model: &LindbladModel) -> Superoperator {
    let d = model.space().total_dim();
    let id = identity_nz(d);
    let mut triplets = Vec::new();
    let h = nonzeros(model.hamiltonian().data());
    let ht: Vec<_> = h.iter().map(|&(i, j, v)| (j, i, v)).collect();
    push_kron(&mut triplets, &h, &id, d, C64::new(0.0, -1.0));
    push_kron(&mut triplets, &id, &ht, d, C64::new(0.0, 1.0));
    for c in model.collapses() {
        if c.rate == 0.0 {
            continue;
        }
        let o = c.operator.data();
        let k = linalg::adjoint(o).dot(o);
        let o_nz = nonzeros(o);
        let o_conj: Vec<_> = o_nz.iter().map(|&(i, j, v)| (i, j, v.conj())).collect();
        let k_nz = nonzeros(&k);
        let k_t: Vec<_> = k_nz.iter().map(|&(i, j, v)| (j, i, v)).collect();
        let r = C64::from(c.rate);
        push_kron(&mut triplets, &o_nz, &o_conj, d, r);
        push_kron(&mut triplets, &k_nz, &id, d, -0.5 * r);
        push_kron(&mut triplets, &id, &k_t, d, -0.5 * r);
    }
    Superoperator::from_triplets(d, triplets)
}

/// Dense `exp(L dt)`. Refused above [`DENSE_GUARD`] Hilbert-space dimension.
pub fn step_propagator(l: &Superoperator, dt: f64) -> Result<Array2<C64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("step dt = {dt} must be positive")));
    }
    if l.hilbert_dim() > DENSE_GUARD {
        return Err(Error::DenseGuard {
            total_dim: l.hilbert_dim(),
            guard: DENSE_GUARD,
        });
    }
    linalg::expm(&l.to_dense().mapv(|x| x * dt))
}

/// `exp(L dt)` restricted to the Liouvillian blocks reachable from a given
/// support, each block exponentiated densely.
#[derive(Clone, Debug)]
pub struct BlockPropagator {
    dim: usize,
    dt: f64,
    blocks: Vec<(Vec<usize>, Array2<C64>)>,
}

impl BlockPropagator {
    /// Blocks of `l` that intersect `support` (indices into the vectorized state).
    pub fn new(l: &Superoperator, dt: f64, support: &[usize], exec: ExecPolicy) -> Result<Self> {
        let mut wanted = vec![false; l.dim()];
        for &i in support {
            wanted[i] = true;
        }
        let blocks: Vec<Vec<usize>> = l
            .components()
            .into_iter()
            .filter(|c| c.iter().any(|&i| wanted[i]))
            .collect();
        Self::from_blocks(l, dt, blocks, exec)
    }

    /// All blocks of `l`.
    pub fn full(l: &Superoperator, dt: f64, exec: ExecPolicy) -> Result<Self> {
        Self::from_blocks(l, dt, l.components(), exec)
    }

    fn from_blocks(
        l: &Superoperator,
        dt: f64,
        blocks: Vec<Vec<usize>>,
        exec: ExecPolicy,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("step dt = {dt} must be positive")));
        }
        if let Some(big) = blocks.iter().map(Vec::len).find(|&n| n > BLOCK_GUARD) {
            return Err(Error::DenseGuard {
                total_dim: big,
                guard: BLOCK_GUARD,
            });
        }
        let exps = map_collect(exec, &blocks, |idx| {
            linalg::expm(&l.dense_block(idx).mapv(|x| x * dt))
        });
        let blocks = blocks
            .into_iter()
            .zip(exps)
            .map(|(idx, e)| e.map(|e| (idx, e)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: l.dim(),
            dt,
            blocks,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|(idx, _)| idx.len()).collect()
    }

    /// One step. Entries outside the propagated blocks are set to zero.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = vec![ZERO; self.dim];
        for (idx, p) in &self.blocks {
            let xb: Vec<C64> = idx.iter().map(|&i| x[i]).collect();
            for (row, &i) in p.rows().into_iter().zip(idx) {
                y[i] = row.iter().zip(&xb).map(|(a, b)| a * b).sum();
            }
        }
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Repeated application of a precomputed `exp(L dt)`.
    #[serde(rename = "expm-step")]
    ExpmStep,
    /// Classical fixed-step fourth-order Runge-Kutta.
    #[serde(rename = "rk4")]
    Rk4,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::ExpmStep => "expm-step",
            Method::Rk4 => "rk4",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expm-step" | "expm" => Ok(Method::ExpmStep),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub method: Method,
    /// RK4 internal step. Defaults to `min(0.02/max|H|, 0.05/max rate)`.
    pub internal_dt: Option<f64>,
    pub exec: ExecPolicy,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            method: Method::ExpmStep,
            internal_dt: None,
            exec: ExecPolicy::default(),
        }
    }
}

impl IntegrateOptions {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// Output times of an integration. Integration always starts at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGrid {
    /// `steps + 1` equally spaced points on `[0, horizon]`.
    Uniform { horizon: f64, steps: usize },
    Explicit(Vec<f64>),
}

impl TimeGrid {
    pub fn uniform(horizon: f64, steps: usize) -> Self {
        TimeGrid::Uniform { horizon, steps }
    }

    /// A uniform grid with extra output times merged in. Marks outside
    /// `[0, horizon]` or within `1e-9` of an existing point are ignored.
    pub fn uniform_with_marks(horizon: f64, steps: usize, marks: &[f64]) -> Result<Self> {
        let mut times = TimeGrid::uniform(horizon, steps).times()?;
        for &m in marks {
            if m > 0.0 && m < horizon && times.iter().all(|t| (t - m).abs() > 1e-9) {
                times.push(m);
            }
        }
        if times.len() == steps + 1 {
            return Ok(TimeGrid::uniform(horizon, steps));
        }
        times.sort_by(f64::total_cmp);
        Ok(TimeGrid::Explicit(times))
    }

    /// Output times paired with the gap from the previous output (first gap from 0).
    fn schedule(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            TimeGrid::Uniform { horizon, steps } => {
                if !(*horizon > 0.0) || !horizon.is_finite() || *steps == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "uniform grid needs horizon > 0 and steps > 0 (got {horizon}, {steps})"
                    )));
                }
                let h = horizon / *steps as f64;
                Ok((0..=*steps)
                    .map(|k| (k as f64 * h, if k == 0 { 0.0 } else { h }))
                    .collect())
            }
            TimeGrid::Explicit(times) => {
                if times.is_empty() {
                    return Err(Error::InvalidArgument("empty time grid".into()));
                }
                let mut prev = 0.0;
                let mut out = Vec::with_capacity(times.len());
                for (k, &t) in times.iter().enumerate() {
                    let ok = t.is_finite() && if k == 0 { t >= 0.0 } else { t > prev };
                    if !ok {
                        return Err(Error::InvalidArgument(format!(
                            "time grid must be finite, non-negative and strictly increasing (at index {k})"
                        )));
                    }
                    out.push((t, t - prev));
                    prev = t;
                }
                Ok(out)
            }
        }
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        Ok(self.schedule()?.into_iter().map(|(t, _)| t).collect())
    }
}

/// Integration settings and invariant summary attached to a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub description: String,
    pub requested_method: Method,
    /// Differs from the request when the expm path fell back to RK4.
    pub method: Method,
    pub internal_dt: Option<f64>,
    pub block_sizes: Vec<usize>,
    pub outputs: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub positivity_ok: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub metadata: TrajectoryMetadata,
}

/// Integrates and stores every output state.
pub fn integrate(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    options: &IntegrateOptions,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let metadata = integrate_observed(model, rho0, grid, options, |t, rho| {
        times.push(t);
        states.push(rho.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        states,
        metadata,
    })
}

enum Stepper {
    Expm {
        cache: Vec<BlockPropagator>,
        l: Superoperator,
        support: Vec<usize>,
        exec: ExecPolicy,
    },
    Rk4 {
        l: Superoperator,
        dt: f64,
        h_max: f64,
    },
}

impl Stepper {
    fn advance(&mut self, x: Vec<C64>, gap: f64) -> Result<Vec<C64>> {
        if gap == 0.0 {
            return Ok(x);
        }
        match self {
            Stepper::Expm {
                cache,
                l,
                support,
                exec,
            } => {
                // gaps of a grid built by differencing agree only to rounding
                let same = |p: &BlockPropagator| (p.dt() - gap).abs() <= 1e-12 * gap;
                if !cache.iter().any(same) {
                    cache.push(BlockPropagator::new(l, gap, support, *exec)?);
                }
                let p = cache.iter().find(|p| same(p)).unwrap();
                Ok(p.apply(&x))
            }
            Stepper::Rk4 { l, dt, h_max } => {
                let n = (gap / *dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                let h = gap / n as f64;
                if h * *h_max > 0.1 {
                    return Err(Error::InvalidArgument(format!(
                        "rk4 step {h:e} violates the stability guard dt*max|H| <= 0.1 (max|H| = {h_max:e})"
                    )));
                }
                Ok(rk4(l, x, h, n))
            }
        }
    }
}

fn rk4(l: &Superoperator, mut x: Vec<C64>, h: f64, steps: usize) -> Vec<C64> {
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    let half = C64::from(h / 2.0);
    let full = C64::from(h);
    let sixth = C64::from(h / 6.0);
    for _ in 0..steps {
        l.matvec(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + half * k1[i];
        }
        l.matvec(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + half * k2[i];
        }
        l.matvec(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + full * k3[i];
        }
        l.matvec(&tmp, &mut k4);
        for i in 0..n {
            x[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Default RK4 internal step for a model.
pub fn default_internal_dt(model: &LindbladModel) -> Option<f64> {
    let h = model.hamiltonian().max_abs();
    let r = model.max_rate();
    let candidates = [(h, 0.02), (r, 0.05)];
    candidates
        .iter()
        .filter(|(scale, _)| *scale > 0.0)
        .map(|(scale, c)| c / scale)
        .reduce(f64::min)
}

/// Integrates `model` from `rho0`, handing each output state to `observe`.
/// Trace, Hermiticity and positivity are checked at every output time.
pub fn integrate_observed<F>(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    options: &IntegrateOptions,
    mut observe: F,
) -> Result<TrajectoryMetadata>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    if rho0.space() != model.space() {
        return Err(Error::SpaceMismatch(format!(
            "initial state on {:?}, model on {:?}",
            rho0.space().dims(),
            model.space().dims()
        )));
    }
    if let Some((invariant, detail)) = rho0.check().violation() {
        return Err(Error::InvalidState(format!("initial state {invariant}: {detail}")));
    }
    let schedule = grid.schedule()?;
    let l = liouvillian(model);
    let x: Vec<C64> = rho0.data().iter().copied().collect();
    let support: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != ZERO)
        .map(|(i, _)| i)
        .collect();

    let mut method = options.method;
    let mut block_sizes = Vec::new();
    if method == Method::ExpmStep {
        let sizes: Vec<usize> = {
            let mut wanted = vec![false; l.dim()];
            for &i in &support {
                wanted[i] = true;
            }
            l.components()
                .into_iter()
                .filter(|c| c.iter().any(|&i| wanted[i]))
                .map(|c| c.len())
                .collect()
        };
        if sizes.iter().any(|&n| n > BLOCK_GUARD) {
            method = Method::Rk4;
        } else {
            block_sizes = sizes;
        }
    }
    let internal_dt = match method {
        Method::ExpmStep => None,
        Method::Rk4 => {
            let dt = match options.internal_dt {
                Some(dt) if dt > 0.0 && dt.is_finite() => dt,
                Some(dt) => {
                    return Err(Error::InvalidArgument(format!(
                        "internal_dt = {dt} must be positive"
                    )))
                }
                None => default_internal_dt(model).unwrap_or(f64::INFINITY),
            };
            Some(dt)
        }
    };
    let mut stepper = match method {
        Method::ExpmStep => Stepper::Expm {
            cache: Vec::new(),
            l,
            support,
            exec: options.exec,
        },
        Method::Rk4 => Stepper::Rk4 {
            l,
            dt: internal_dt.unwrap(),
            h_max: model.hamiltonian().max_abs(),
        },
    };

    let d = model.space().total_dim();
    let mut x = x;
    let mut meta = TrajectoryMetadata {
        description: model.description().to_string(),
        requested_method: options.method,
        method,
        internal_dt: internal_dt.filter(|dt| dt.is_finite()),
        block_sizes,
        outputs: 0,
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        positivity_ok: true,
    };
    for (t, gap) in schedule {
        x = stepper.advance(x, gap)?;
        let rho = DensityMatrix::new_unchecked(
            model.space().clone(),
            Array2::from_shape_vec((d, d), x.clone()).expect("square"),
        )?;
        let report = rho.check();
        meta.max_trace_error = meta.max_trace_error.max(report.trace_error);
        meta.max_hermiticity_error = meta.max_hermiticity_error.max(report.hermiticity_error);
        if let Some((invariant, detail)) = report.violation() {
            return Err(Error::IntegrationFailure {
                invariant,
                time: t,
                detail,
            });
        }
        observe(t, &rho)?;
        meta.outputs += 1;
    }
    Ok(meta)
}
