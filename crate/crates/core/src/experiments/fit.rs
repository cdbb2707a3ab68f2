//! Exponential rate fits by Levenberg-Marquardt least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples inside the fit window.
pub const MIN_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitForm {
    /// `y = 1 - A exp(-rate t)`.
    Rise,
    /// `y = A exp(-rate t)`.
    Decay,
}

impl FitForm {
    pub fn formula(self) -> &'static str {
        match self {
            FitForm::Rise => "1 - A exp(-rate t)",
            FitForm::Decay => "A exp(-rate t)",
        }
    }

    fn eval(self, a: f64, rate: f64, t: f64) -> f64 {
        let e = a * (-rate * t).exp();
        match self {
            FitForm::Rise => 1.0 - e,
            FitForm::Decay => e,
        }
    }

    /// Partial derivatives with respect to `(A, rate)`.
    fn grad(self, a: f64, rate: f64, t: f64) -> (f64, f64) {
        let e = (-rate * t).exp();
        let sign = match self {
            FitForm::Rise => -1.0,
            FitForm::Decay => 1.0,
        };
        (sign * e, -sign * a * t * e)
    }

    /// The quantity that is linear in `t` after a logarithm.
    fn linearized(self, y: f64) -> f64 {
        match self {
            FitForm::Rise => (1.0 - y).max(1e-300).ln(),
            FitForm::Decay => y.max(1e-300).ln(),
        }
    }
}

/// Samples with `lo <= y <= hi` enter the fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { lo: 0.1, hi: 0.9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rate: f64,
    /// `A` of the fitted form, referred to `t = 0`.
    pub amplitude: f64,
    pub rms: f64,
    pub form: FitForm,
    pub window: FitWindow,
    pub points: usize,
    pub t_first: f64,
    pub t_last: f64,
    pub iterations: usize,
}

/// Least-squares fit of `form` to the samples of `(t, y)` inside `window`.
/// The rate is constrained to be non-negative.
pub fn fit_rate(t: &[f64], y: &[f64], form: FitForm, window: FitWindow) -> Result<FitResult> {
    if t.len() != y.len() {
        return Err(Error::Fit(format!("{} times but {} values", t.len(), y.len())));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite() || **v < -1e-9 || **v > 1.05) {
        return Err(Error::Fit(format!("value {v} outside [0, 1.05]")));
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(_, v)| **v >= window.lo && **v <= window.hi)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if ts.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "{} samples in window [{}, {}], need {MIN_POINTS}",
            ts.len(),
            window.lo,
            window.hi
        )));
    }
    // work in shifted time for conditioning; A is referred back to t = 0 at the end
    let t0 = ts[0];
    let shifted: Vec<f64> = ts.iter().map(|x| x - t0).collect();

    let (mut a, mut rate) = log_linear_guess(&shifted, &ys, form);
    let cost = |a: f64, rate: f64| -> f64 {
        shifted
            .iter()
            .zip(&ys)
            .map(|(t, y)| (form.eval(a, rate, *t) - y).powi(2))
            .sum()
    };
    let mut current = cost(a, rate);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = current == 0.0;
    while !converged && iterations < 500 {
        iterations += 1;
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (t, y) in shifted.iter().zip(&ys) {
            let r = form.eval(a, rate, *t) - y;
            let (ga, gr) = form.grad(a, rate, *t);
            jtj[0][0] += ga * ga;
            jtj[0][1] += ga * gr;
            jtj[1][1] += gr * gr;
            jtr[0] += ga * r;
            jtr[1] += gr * r;
        }
        jtj[1][0] = jtj[0][1];
        let m00 = jtj[0][0] * (1.0 + lambda);
        let m11 = jtj[1][1] * (1.0 + lambda);
        let det = m00 * m11 - jtj[0][1] * jtj[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let da = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dr = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
        let (na, nr) = (a + da, (rate + dr).max(0.0));
        let trial = cost(na, nr);
        if trial.is_finite() && trial <= current {
            let small = (na - a).abs() <= 1e-12 * a.abs().max(1e-12)
                && (nr - rate).abs() <= 1e-12 * rate.abs().max(1e-12);
            a = na;
            rate = nr;
            converged = small || current - trial <= 1e-15 * current;
            current = trial;
            lambda = (lambda / 10.0).max(1e-12);
        } else {
            lambda *= 10.0;
            // no descent direction left at machine precision
            converged = lambda > 1e12;
        }
    }
    if !converged || !a.is_finite() || !rate.is_finite() {
        return Err(Error::Fit(format!(
            "no convergence after {iterations} iterations (A = {a}, rate = {rate}, cost = {current:e})"
        )));
    }
    Ok(FitResult {
        rate,
        amplitude: a * (rate * t0).exp(),
        rms: (current / ts.len() as f64).sqrt(),
        form,
        window,
        points: ts.len(),
        t_first: t0,
        t_last: *ts.last().unwrap(),
        iterations,
    })
}

fn log_linear_guess(t: &[f64], y: &[f64], form: FitForm) -> (f64, f64) {
    let z: Vec<f64> = y.iter().map(|v| form.linearized(*v)).collect();
    let n = t.len() as f64;
    let (mt, mz) = (t.iter().sum::<f64>() / n, z.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(&z) {
        sxy += (a - mt) * (b - mz);
        sxx += (a - mt) * (a - mt);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rate = (-slope).max(0.0);
    let amp = (mz + rate * mt).exp();
    (amp, rate)
}

/// Fidelity of `|psi_0>` after independent bit flips at rate `gamma_x` on each
/// of the three qubits, with no correction: `(1 - p)^3`, `p = (1 - e^{-gamma_x t})/2`.
pub fn analytic_uncorrected(t: f64, gamma_x: f64) -> f64 {
    let p = 0.5 * (1.0 - (-gamma_x * t).exp());
    (1.0 - p).powi(3)
}
