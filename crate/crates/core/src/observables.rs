//! Fidelities, subspace populations, photon numbers and logical expectation
//! values extracted from density matrices.
//!
//! Every observable that concerns the qubits first traces out the resonators,
//! which sit after the three qubit factors.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{embed, sigma, Axis, DensityMatrix, Operator, StateVector, C64};
use crate::models::{error_subspace_basis, qubit_space, QUBITS};

/// Coherences below this magnitude carry no usable phase.
pub const PHASE_FLOOR: f64 = 1e-12;

/// `<psi| rho |psi>`, tracing `rho` down to the space of `psi` first when
/// `psi` lives on leading factors only.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    let reduced = rho.reduce_to(psi.space())?;
    let a = psi.amplitudes();
    let d = reduced.data();
    let mut acc = C64::new(0.0, 0.0);
    for (i, ai) in a.iter().enumerate() {
        if ai.norm() == 0.0 {
            continue;
        }
        for (j, aj) in a.iter().enumerate() {
            acc += ai.conj() * d[[i, j]] * aj;
        }
    }
    Ok(acc.re)
}

/// Reduced state of the qubit register.
pub fn qubit_marginal(rho: &DensityMatrix) -> Result<DensityMatrix> {
    rho.reduce_to(&qubit_space())
}

/// How the phase of the target `(|000> - i e^{i phi}|111>)/sqrt(2)` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseChoice {
    Fixed(f64),
    /// Per-state maximum over `phi`; an upper bound on the achievable fidelity.
    Maximize,
}

/// The `<000| rho_q |111>` coherence together with the code-space weight
/// `(rho_000 + rho_111)/2`.
fn code_coherence(rho: &DensityMatrix) -> Result<(f64, C64)> {
    let q = qubit_marginal(rho)?;
    let d = q.data();
    let last = q.space().total_dim() - 1;
    Ok((0.5 * (d[[0, 0]].re + d[[last, last]].re), d[[0, last]]))
}

/// Phase that maximizes the fidelity for a coherence `c = <000|rho|111>`.
pub fn optimal_phase(coherence: C64) -> f64 {
    if coherence.norm() < PHASE_FLOOR {
        return 0.0;
    }
    wrap_phase(FRAC_PI_2 - coherence.arg())
}

fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut p = phi.rem_euclid(two_pi);
    if p > std::f64::consts::PI {
        p -= two_pi;
    }
    p
}

/// Fidelity to `(|000> - i e^{i phi}|111>)/sqrt(2)` and the `phi` used.
pub fn compensated_fidelity(rho: &DensityMatrix, choice: PhaseChoice) -> Result<(f64, f64)> {
    let (base, c) = code_coherence(rho)?;
    let phi = match choice {
        PhaseChoice::Fixed(phi) => phi,
        PhaseChoice::Maximize => optimal_phase(c),
    };
    let value = base + (C64::new(0.0, -1.0) * C64::from_polar(1.0, phi) * c).re;
    Ok((value, phi))
}

/// Phase that maximizes the fidelity of `rho` (the reference-run phase).
pub fn reference_phase(rho: &DensityMatrix) -> Result<f64> {
    Ok(optimal_phase(code_coherence(rho)?.1))
}

/// Populations of the code space and the three error subspaces.
pub fn subspace_populations(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let q = qubit_marginal(rho)?;
    let space = q.space().clone();
    let mut out = [0.0; 4];
    for (m, slot) in out.iter_mut().enumerate() {
        for state in error_subspace_basis(&space, m)? {
            let i = state
                .amplitudes()
                .iter()
                .position(|a| a.norm() > 0.0)
                .expect("basis state");
            *slot += q.data()[[i, i]].re;
        }
    }
    Ok(out)
}

/// `<a_j^dag a_j>` for every factor after the qubit register.
pub fn photon_numbers(rho: &DensityMatrix) -> Vec<f64> {
    level_weighted(rho, |level| level as f64)
}

/// Population of Fock `level` in each resonator.
pub fn fock_populations(rho: &DensityMatrix, level: usize) -> Vec<f64> {
    level_weighted(rho, |l| if l == level { 1.0 } else { 0.0 })
}

fn level_weighted(rho: &DensityMatrix, weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let space = rho.space();
    let modes = space.num_factors().saturating_sub(QUBITS);
    let mut out = vec![0.0; modes];
    for i in 0..space.total_dim() {
        let p = rho.data()[[i, i]].re;
        if p == 0.0 {
            continue;
        }
        let levels = space.levels_of(i);
        for (j, slot) in out.iter_mut().enumerate() {
            *slot += weight(levels[QUBITS + j]) * p;
        }
    }
    out
}

/// The logical operator whose -1 eigenstate is `|psi_0>`.
///
/// In the crate's convention (`sigma_z|1> = +|1>`, `XY = iZ`) this is
/// `+sigma_y^1 sigma_y^2 sigma_y^3`; written with the computational-basis
/// `sigma_y = [[0, -i], [i, 0]]` it is `-sigma_y^1 sigma_y^2 sigma_y^3`.
pub fn logical_y() -> Operator {
    let q = qubit_space();
    (0..QUBITS)
        .map(|j| embed(&sigma(Axis::Y), j, &q).expect("qubit register"))
        .reduce(|a, b| a.mul(&b).expect("same space"))
        .expect("three qubits")
}

/// `tr(rho_q Y_L)` with `Y_L` from [`logical_y`].
pub fn logical_expectation(rho: &DensityMatrix) -> Result<f64> {
    Ok(qubit_marginal(rho)?.expectation(&logical_y())?.re)
}

/// One row of recorded observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub t: f64,
    pub fidelity_raw: f64,
    pub fidelity_compensated: f64,
    pub phase: f64,
    pub populations: [f64; 4],
    pub photon_numbers: Vec<f64>,
    pub purity: f64,
}

impl ObservableSet {
    /// Raw fidelity is taken against `|psi_0>`; the compensated value uses `choice`.
    pub fn measure(t: f64, rho: &DensityMatrix, choice: PhaseChoice) -> Result<Self> {
        let (base, c) = code_coherence(rho)?;
        let raw = base + (C64::new(0.0, -1.0) * c).re;
        let (fidelity_compensated, phase) = compensated_fidelity(rho, choice)?;
        Ok(Self {
            t,
            fidelity_raw: raw,
            fidelity_compensated,
            phase,
            populations: subspace_populations(rho)?,
            photon_numbers: photon_numbers(rho),
            purity: rho.purity(),
        })
    }
}

/// Checks the population sum rule of an observable row.
pub fn check_populations(row: &ObservableSet) -> Result<()> {
    let sum: f64 = row.populations.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "subspace populations sum to {sum} at t = {}",
            row.t
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{corrupted_psi0, logical_pair, psi0, register_state};
    use crate::hilbert::make_space;

    #[test]
    fn fidelity_cases() {
        let q = qubit_space();
        let p = psi0(&q).unwrap();
        let rho = DensityMatrix::from_pure(&p);
        assert!((fidelity(&rho, &p).unwrap() - 1.0).abs() < 1e-15);
        let perp = logical_pair(&q, [0, 0, 0], [1, 1, 1], std::f64::consts::PI).unwrap();
        assert!(fidelity(&DensityMatrix::from_pure(&perp), &p).unwrap().abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(&q);
        assert!((fidelity(&mixed, &p).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn fidelity_traces_out_resonators() {
        let s = make_space(&[2, 2, 2, 2]).unwrap();
        let rho = DensityMatrix::from_pure(&psi0(&s).unwrap());
        let target = psi0(&qubit_space()).unwrap();
        assert!((fidelity(&rho, &target).unwrap() - 1.0).abs() < 1e-15);
        let wrong = StateVector::basis(&make_space(&[3]).unwrap(), &[0]).unwrap();
        assert!(matches!(fidelity(&rho, &wrong), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn compensated_cases() {
        let q = qubit_space();
        let rho = DensityMatrix::from_pure(&logical_pair(&q, [0, 0, 0], [1, 1, 1], 0.3).unwrap());
        let (f, phi) = compensated_fidelity(&rho, PhaseChoice::Maximize).unwrap();
        assert!((f - 1.0).abs() < 1e-14 && (phi - 0.3).abs() < 1e-12);
        let (f, _) = compensated_fidelity(&rho, PhaseChoice::Fixed(0.3)).unwrap();
        assert!((f - 1.0).abs() < 1e-14);

        let dephased = DensityMatrix::mixture(&[
            (0.5, register_state(&q, [0, 0, 0]).unwrap()),
            (0.5, register_state(&q, [1, 1, 1]).unwrap()),
        ])
        .unwrap();
        for phi in [0.0, 1.0, -2.0] {
            let (f, _) = compensated_fidelity(&dephased, PhaseChoice::Fixed(phi)).unwrap();
            assert!((f - 0.5).abs() < 1e-15);
        }
        assert_eq!(compensated_fidelity(&dephased, PhaseChoice::Maximize).unwrap().1, 0.0);
    }

    #[test]
    fn populations_and_logical_y() {
        let q = qubit_space();
        let zero = DensityMatrix::from_pure(&register_state(&q, [0, 0, 0]).unwrap());
        assert_eq!(subspace_populations(&zero).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        let e1 = DensityMatrix::from_pure(&corrupted_psi0(&q, 0).unwrap());
        let p = subspace_populations(&e1).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-15);

        let psi = DensityMatrix::from_pure(&psi0(&q).unwrap());
        assert!((logical_expectation(&psi).unwrap() + 1.0).abs() < 1e-15);
        assert!(logical_expectation(&zero).unwrap().abs() < 1e-15);
        let perp = logical_pair(&q, [0, 0, 0], [1, 1, 1], std::f64::consts::PI).unwrap();
        let perp = DensityMatrix::from_pure(&perp);
        assert!((logical_expectation(&perp).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn photon_number_cases() {
        let s = make_space(&[2, 2, 2, 2, 2, 2]).unwrap();
        let vac = DensityMatrix::from_pure(&StateVector::basis(&s, &[0; 6]).unwrap());
        assert_eq!(photon_numbers(&vac), vec![0.0; 3]);
        let one = DensityMatrix::from_pure(&StateVector::basis(&s, &[0, 0, 0, 1, 0, 0]).unwrap());
        assert_eq!(photon_numbers(&one), vec![1.0, 0.0, 0.0]);
        assert_eq!(fock_populations(&one, 1), vec![1.0, 0.0, 0.0]);
        assert!(photon_numbers(&DensityMatrix::maximally_mixed(&qubit_space())).is_empty());
    }
}
