//! Small dense complex linear algebra kernels: matrix exponential, LU solve,
//! Cholesky-based positivity test.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}

pub(crate) fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.norm()))
}

pub(crate) fn hermiticity_error(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub(crate) fn norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn one_norm(a: &ArrayView2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// True if `A + shift*I` has a Cholesky factorization, using only the
/// Hermitian part of `A`. Equivalent to `lambda_min(A) > -shift`.
pub(crate) fn is_psd_with_shift(a: &Array2<C64>, shift: f64) -> bool {
    let n = a.nrows();
    let mut l = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]].re + shift;
        for k in 0..j {
            diag -= l[[j, k]].norm_sqr();
        }
        if !(diag > 0.0) {
            return false;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = s / ljj;
        }
    }
    true
}

/// LU factorization with partial pivoting, stored in place.
struct Lu {
    lu: Array2<C64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Array2<C64>) -> Result<Self> {
        let n = a.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[[i, k]].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > 0.0) || !pmax.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "singular matrix in LU at column {k}"
                )));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    a.swap([p, j], [k, j]);
                }
            }
            let pivot = a[[k, k]];
            let (top, mut bottom) = a.view_mut().split_at(Axis(0), k + 1);
            let pivot_row = top.row(k);
            for mut row in bottom.axis_iter_mut(Axis(0)) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                row.slice_mut(s![k + 1..])
                    .scaled_add(-factor, &pivot_row.slice(s![k + 1..]));
            }
        }
        Ok(Self { lu: a, perm })
    }

    /// Solves `A X = B` for a matrix right-hand side.
    fn solve(&self, b: &Array2<C64>) -> Array2<C64> {
        let n = self.lu.nrows();
        let mut x = b.select(Axis(0), &self.perm);
        // forward substitution with unit lower triangle, row-oriented
        for i in 0..n {
            let (done, mut rest) = x.view_mut().split_at(Axis(0), i);
            let mut row = rest.row_mut(0);
            for k in 0..i {
                let f = self.lu[[i, k]];
                if f != C64::new(0.0, 0.0) {
                    row.scaled_add(-f, &done.row(k));
                }
            }
        }
        for i in (0..n).rev() {
            let (mut head, tail) = x.view_mut().split_at(Axis(0), i + 1);
            let mut row = head.row_mut(i);
            for k in i + 1..n {
                let f = self.lu[[i, k]];
                if f != C64::new(0.0, 0.0) {
                    row.scaled_add(-f, &tail.row(k - i - 1));
                }
            }
            let d = self.lu[[i, i]];
            row.mapv_inplace(|v| v / d);
        }
        x
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::InvalidDimension(format!(
            "solve with A {:?} and B {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(Lu::factor(a.clone())?.solve(b))
}

// Backward-error thresholds for the degree-m diagonal Pade approximants in
// double precision (Higham 2005).
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => &B13,
    }
}

fn axpy_identity(mut a: Array2<C64>, c: f64) -> Array2<C64> {
    for i in 0..a.nrows() {
        a[[i, i]] += c;
    }
    a
}

fn lin(terms: &[(f64, &Array2<C64>)], n: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((n, n));
    for (c, m) in terms {
        out.scaled_add(C64::new(*c, 0.0), *m);
    }
    out
}

fn pade_low(a: &Array2<C64>, m: usize) -> (Array2<C64>, Array2<C64>) {
    let n = a.nrows();
    let b = coefficients(m);
    let a2 = a.dot(a);
    // powers A^2, A^4, ... up to A^(m-1)
    let mut powers = vec![a2.clone()];
    while powers.len() < (m - 1) / 2 {
        let next = powers.last().unwrap().dot(&a2);
        powers.push(next);
    }
    let mut u = Array2::<C64>::zeros((n, n));
    let mut v = Array2::<C64>::zeros((n, n));
    for (k, p) in powers.iter().enumerate() {
        let even = 2 * (k + 1);
        u.scaled_add(C64::new(b[even + 1], 0.0), p);
        v.scaled_add(C64::new(b[even], 0.0), p);
    }
    let u = a.dot(&axpy_identity(u, b[1]));
    let v = axpy_identity(v, b[0]);
    (u, v)
}

fn pade_13(a: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let n = a.nrows();
    let b = &B13;
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let inner_u = lin(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let outer_u = lin(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], n);
    let u = a.dot(&axpy_identity(a6.dot(&inner_u) + outer_u, b[1]));
    let inner_v = lin(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let outer_v = lin(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], n);
    let v = axpy_identity(a6.dot(&inner_v) + outer_v, b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with diagonal Pade
/// approximants, choosing the degree from the 1-norm so that the backward
/// error stays at unit-roundoff level.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidDimension(format!(
            "expm of non-square matrix {:?}",
            a.dim()
        )));
    }
    let norm = one_norm(&a.view());
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("expm of non-finite matrix".into()));
    }
    if norm == 0.0 {
        return Ok(Array2::eye(n));
    }
    for (m, theta) in THETA {
        if norm <= theta {
            let (u, v) = pade_low(a, m);
            return Lu::factor(&v - &u).map(|lu| lu.solve(&(&v + &u)));
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.mapv(|x| x * 2f64.powi(-s));
    let (u, v) = pade_13(&scaled);
    let mut r = Lu::factor(&v - &u)?.solve(&(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}
