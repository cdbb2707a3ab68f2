//! Protocol parameters, closed-form rate formulas, and builders for every
//! master equation of the correction scheme.
//!
//! Indices are zero-based: qubit `j` and resonator `j` for `j in 0..3`.
//! Rates are in units of the bit-flip rate unless stated otherwise.
//! `chi_ab[j][k]` is the dispersive shift of resonator `j` due to qubit `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilate, embed, make_space, sigma, Axis, CompositeSpace, DensityMatrix, Operator,
    StateVector, C64, ONE,
};
use crate::lindblad::{Collapse, LindbladModel};

pub const QUBITS: usize = 3;

/// Optional bare mode frequencies, only needed for pump-tone evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BareFrequencies {
    pub omega_a: [f64; 3],
    pub omega_b: [f64; 3],
}

/// Every physical constant of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub chi_ab: [[f64; 3]; 3],
    pub chi_aa: [[f64; 3]; 3],
    #[serde(default)]
    pub chi_bb: [[f64; 3]; 3],
    pub kappa: [f64; 3],
    pub gamma_x: [f64; 3],
    pub omega_p: [f64; 3],
    #[serde(default)]
    pub g12: f64,
    #[serde(default)]
    pub g23: f64,
    pub n_levels: usize,
    #[serde(default)]
    pub bare_freqs: Option<BareFrequencies>,
}

impl SystemParams {
    /// All-zero parameters with the given truncation.
    pub fn zeros(n_levels: usize) -> Self {
        Self {
            chi_ab: [[0.0; 3]; 3],
            chi_aa: [[0.0; 3]; 3],
            chi_bb: [[0.0; 3]; 3],
            kappa: [0.0; 3],
            gamma_x: [0.0; 3],
            omega_p: [0.0; 3],
            g12: 0.0,
            g23: 0.0,
            n_levels,
            bare_freqs: None,
        }
    }

    /// Range checks required before building a model.
    pub fn check(&self) -> Result<()> {
        let named = [
            ("kappa", &self.kappa),
            ("gamma_x", &self.gamma_x),
            ("omega_p", &self.omega_p),
        ];
        for (name, values) in named {
            if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} entry {v} must be finite and >= 0")));
            }
        }
        let all_finite = self
            .chi_ab
            .iter()
            .chain(&self.chi_aa)
            .chain(&self.chi_bb)
            .flatten()
            .chain([&self.g12, &self.g23])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidModel("non-finite coupling".into()));
        }
        for j in 0..3 {
            if self.chi_bb[j][j] != 0.0 {
                return Err(Error::InvalidModel("chi_bb must have a zero diagonal".into()));
            }
            for k in 0..3 {
                if self.chi_bb[j][k] != self.chi_bb[k][j] {
                    return Err(Error::InvalidModel("chi_bb must be symmetric".into()));
                }
            }
        }
        if self.n_levels < 2 {
            return Err(Error::InvalidModel(format!(
                "n_levels = {} must be at least 2",
                self.n_levels
            )));
        }
        Ok(())
    }

    /// Relabels qubits (and their resonators): label `j` becomes `perm[j]`.
    pub fn permuted(&self, perm: [usize; 3]) -> Result<Self> {
        check_perm(perm)?;
        let mut out = self.clone();
        for j in 0..3 {
            out.kappa[perm[j]] = self.kappa[j];
            out.gamma_x[perm[j]] = self.gamma_x[j];
            out.omega_p[perm[j]] = self.omega_p[j];
            for k in 0..3 {
                out.chi_ab[perm[j]][perm[k]] = self.chi_ab[j][k];
                out.chi_aa[perm[j]][perm[k]] = self.chi_aa[j][k];
                out.chi_bb[perm[j]][perm[k]] = self.chi_bb[j][k];
            }
        }
        if let Some(b) = &self.bare_freqs {
            let mut nb = b.clone();
            for j in 0..3 {
                nb.omega_a[perm[j]] = b.omega_a[j];
                nb.omega_b[perm[j]] = b.omega_b[j];
            }
            out.bare_freqs = Some(nb);
        }
        Ok(out)
    }

    pub fn correction_rates(&self) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for j in 0..3 {
            out[j] = correction_rate(self.omega_p[j], self.kappa[j])?;
        }
        Ok(out)
    }
}

fn check_perm(perm: [usize; 3]) -> Result<()> {
    let mut seen = [false; 3];
    for &p in &perm {
        if p >= 3 || seen[p] {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..3")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Compact knobs from which the standard parameter sets are generated.
///
/// The dispersive row of every resonator is `chi_row`, defaulting to
/// `(-r, r/2, r/2) * omega_p` with `r = chi_ratio`; `asymmetry` is added to
/// `chi_ab[0][1]` to break the zero-sum condition of resonator 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolKnobs {
    pub kappa: f64,
    pub gamma_x: f64,
    pub omega_p: f64,
    pub chi_ratio: f64,
    pub chi_row: Option<[f64; 3]>,
    pub kerr_ratio: f64,
    pub asymmetry: f64,
    pub n_levels: usize,
    pub g12: Option<f64>,
    pub g23: Option<f64>,
}

impl Default for ProtocolKnobs {
    fn default() -> Self {
        Self {
            kappa: 500.0,
            gamma_x: 1.0,
            omega_p: 300.0,
            chi_ratio: 100.0,
            chi_row: None,
            kerr_ratio: 0.01,
            asymmetry: 0.0,
            n_levels: 2,
            g12: None,
            g23: None,
        }
    }
}

impl ProtocolKnobs {
    pub fn chi_row(&self) -> [f64; 3] {
        self.chi_row.unwrap_or_else(|| {
            let c = self.chi_ratio * self.omega_p;
            [-c, c / 2.0, c / 2.0]
        })
    }

    pub fn to_params(&self) -> SystemParams {
        let row = self.chi_row();
        let mut chi_ab = [row; 3];
        chi_ab[0][1] += self.asymmetry;
        let chi_aa = chi_ab.map(|r| r.map(|x| x * self.kerr_ratio));
        let gamma_c = if self.kappa > 0.0 {
            self.omega_p * self.omega_p / self.kappa
        } else {
            0.0
        };
        let g12 = self.g12.unwrap_or(gamma_c / 2.0);
        let g23 = self.g23.unwrap_or(-g12 / std::f64::consts::SQRT_2);
        SystemParams {
            chi_ab,
            chi_aa,
            chi_bb: [[0.0; 3]; 3],
            kappa: [self.kappa; 3],
            gamma_x: [self.gamma_x; 3],
            omega_p: [self.omega_p; 3],
            g12,
            g23,
            n_levels: self.n_levels,
            bare_freqs: None,
        }
    }
}

/// Threshold used for every "much larger than" comparison.
pub const SEPARATION: f64 = 10.0;
/// Largest accepted `|sum_k chi_ab[j][k]| / kappa[j]`.
pub const DEGENERACY_LIMIT: f64 = 0.1;

/// Regime checks derived from [`SystemParams`]. Never rejects.
///
/// Only resonators with a non-zero dispersive row are considered. Ratios are
/// `+inf` when the denominator vanishes and 0 when nothing is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub active_resonators: Vec<usize>,
    /// `min |chi_ab| / max(kappa, gamma_x)`.
    pub strong_dispersive_ratio: f64,
    pub strong_dispersive_ok: bool,
    pub symmetry_residuals: [f64; 3],
    /// `|sum_k chi_ab[j][k]| / kappa[j]` per resonator.
    pub degeneracy_ratios: [f64; 3],
    pub degeneracy_ok: bool,
    /// `min kappa / max gamma_x`.
    pub gamma_kappa_ratio: f64,
    pub gamma_kappa_ok: bool,
    /// `min |chi_ab| / max kappa`.
    pub kappa_chi_ratio: f64,
    pub kappa_chi_ok: bool,
    /// Some pump rate reaches its resonator linewidth.
    pub saturation: bool,
    pub warnings: Vec<String>,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.strong_dispersive_ok && self.degeneracy_ok && self.gamma_kappa_ok && self.kappa_chi_ok
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn validate_params(p: &SystemParams) -> ValidityReport {
    let active: Vec<usize> = (0..3)
        .filter(|&j| p.chi_ab[j].iter().any(|&x| x != 0.0))
        .collect();
    let symmetry_residuals = p.chi_ab.map(|row| row.iter().sum::<f64>());
    let min_chi = active
        .iter()
        .flat_map(|&j| p.chi_ab[j].iter().map(|x| x.abs()))
        .fold(f64::INFINITY, f64::min);
    let max_kappa = active.iter().map(|&j| p.kappa[j]).fold(0.0, f64::max);
    let min_kappa = active.iter().map(|&j| p.kappa[j]).fold(f64::INFINITY, f64::min);
    let max_gamma = p.gamma_x.iter().copied().fold(0.0, f64::max);

    let mut degeneracy_ratios = [0.0; 3];
    for j in 0..3 {
        degeneracy_ratios[j] = ratio(symmetry_residuals[j].abs(), p.kappa[j]);
    }
    let nothing = active.is_empty();
    let strong_dispersive_ratio = if nothing { 0.0 } else { ratio(min_chi, max_kappa.max(max_gamma)) };
    let kappa_chi_ratio = if nothing { 0.0 } else { ratio(min_chi, max_kappa) };
    let gamma_kappa_ratio = if nothing { 0.0 } else { ratio(min_kappa, max_gamma) };
    let degeneracy_ok = !nothing
        && active.iter().all(|&j| {
            p.kappa[j] > 0.0 && degeneracy_ratios[j] <= DEGENERACY_LIMIT
        });
    let saturation = (0..3).any(|j| p.omega_p[j] > 0.0 && p.omega_p[j] >= p.kappa[j]);

    let mut report = ValidityReport {
        active_resonators: active,
        strong_dispersive_ratio,
        strong_dispersive_ok: strong_dispersive_ratio >= SEPARATION,
        symmetry_residuals,
        degeneracy_ratios,
        degeneracy_ok,
        gamma_kappa_ratio,
        gamma_kappa_ok: gamma_kappa_ratio >= SEPARATION,
        kappa_chi_ratio,
        kappa_chi_ok: kappa_chi_ratio >= SEPARATION,
        saturation,
        warnings: Vec::new(),
    };
    if nothing {
        report.warnings.push("no resonator has a dispersive coupling".into());
    }
    if !report.strong_dispersive_ok {
        report.warnings.push(format!(
            "strong dispersive condition fails: min|chi|/max(kappa, gamma) = {:.3}",
            report.strong_dispersive_ratio
        ));
    }
    if !report.degeneracy_ok {
        report.warnings.push(format!(
            "symmetry residuals {:?} not small against kappa",
            report.symmetry_residuals
        ));
    }
    if !report.gamma_kappa_ok {
        report.warnings.push(format!(
            "hierarchy gamma_x << kappa fails: ratio {:.3}",
            report.gamma_kappa_ratio
        ));
    }
    if !report.kappa_chi_ok {
        report.warnings.push(format!(
            "hierarchy kappa << chi fails: ratio {:.3}",
            report.kappa_chi_ratio
        ));
    }
    if report.saturation {
        report.warnings.push(
            "saturation regime: omega_p >= kappa, correction rate no longer grows as omega_p^2/kappa"
                .into(),
        );
    }
    report
}

/// `Gamma_c = omega_p^2 / kappa`.
pub fn correction_rate(omega_p: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "correction rate needs kappa > 0 (got {kappa})"
        )));
    }
    Ok(omega_p * omega_p / kappa)
}

/// Both pump tones for qubit `j`, shifted by the qubit-qubit cross-Kerr terms.
pub fn pump_frequencies(p: &SystemParams, j: usize) -> Result<(f64, f64)> {
    if j >= QUBITS {
        return Err(Error::InvalidArgument(format!("qubit index {j} out of range")));
    }
    let bare = p.bare_freqs.as_ref().ok_or_else(|| {
        Error::InvalidArgument("pump frequencies need bare_freqs".into())
    })?;
    let shift: f64 = (0..3).filter(|&k| k != j).map(|k| p.chi_bb[j][k]).sum();
    let (wa, wb) = (bare.omega_a[j], bare.omega_b[j]);
    Ok(((wa + wb) / 2.0 - shift, ((wa - wb) / 2.0 - shift).abs()))
}

/// `Omega_p = sqrt(chi_aa chi_ab) |drive / detuning|^2`.
pub fn rabi_amplitude(chi_aa: f64, chi_ab: f64, drive_amp: f64, detuning: f64) -> Result<f64> {
    if detuning == 0.0 {
        return Err(Error::InvalidArgument("pump detuning must be non-zero".into()));
    }
    let product = chi_aa * chi_ab;
    if product < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "chi_aa * chi_ab = {product} is negative; pass magnitudes"
        )));
    }
    Ok(product.sqrt() * (drive_amp / detuning).powi(2))
}

/// Residual decoherence rates left by an imperfect implementation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRates {
    /// Two errors within one correction time: `sum_j gamma_j^2 / Gamma_c^j`.
    pub gamma_2nd: f64,
    /// Imperfect manifold selectivity: `sum_j kappa_j Omega_j^2 / (chi_jj^2 + kappa_j^2)`.
    pub gamma_select: f64,
    /// Broken zero-sum condition: `sum_j gamma_j |sum_k chi_jk| / Gamma_c^j`.
    /// Only an order-of-magnitude estimate.
    pub gamma_sym: f64,
    pub gamma_sym_order_of_magnitude: bool,
}

pub fn residual_rates(p: &SystemParams) -> Result<ResidualRates> {
    let gc = p.correction_rates()?;
    if let Some(j) = (0..3).find(|&j| gc[j] <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "correction rate of qubit {j} is zero"
        )));
    }
    let mut out = ResidualRates {
        gamma_2nd: 0.0,
        gamma_select: 0.0,
        gamma_sym: 0.0,
        gamma_sym_order_of_magnitude: true,
    };
    for j in 0..3 {
        let (k, g, w, chi) = (p.kappa[j], p.gamma_x[j], p.omega_p[j], p.chi_ab[j][j]);
        out.gamma_2nd += g * g / gc[j];
        out.gamma_select += k * w * w / (chi * chi + k * k);
        out.gamma_sym += g * p.chi_ab[j].iter().sum::<f64>().abs() / gc[j];
    }
    Ok(out)
}

/// The three-qubit register space.
pub fn qubit_space() -> CompositeSpace {
    make_space(&[2, 2, 2]).expect("qubit register")
}

fn qubit_space_check(space: &CompositeSpace) -> Result<()> {
    if !space.has_prefix(&qubit_space()) {
        return Err(Error::SpaceMismatch(format!(
            "{:?} does not start with three qubits",
            space.dims()
        )));
    }
    Ok(())
}

/// Computational basis state on the register, padded with vacuum on any
/// trailing resonators.
pub fn register_state(space: &CompositeSpace, bits: [usize; 3]) -> Result<StateVector> {
    qubit_space_check(space)?;
    let mut levels = bits.to_vec();
    levels.resize(space.num_factors(), 0);
    StateVector::basis(space, &levels)
}

/// `(|a> - i e^{i phi} |b>) / sqrt(2)` for register bit strings `a`, `b`,
/// with resonators in vacuum.
pub fn logical_pair(
    space: &CompositeSpace,
    a: [usize; 3],
    b: [usize; 3],
    phi: f64,
) -> Result<StateVector> {
    let ka = register_state(space, a)?;
    let kb = register_state(space, b)?;
    let coef = C64::new(0.0, -1.0) * C64::from_polar(1.0, phi);
    let amps = ka.amplitudes() + &kb.amplitudes().mapv(|x| x * coef);
    StateVector::normalized(space.clone(), amps)
}

/// `|psi_0> = (|000> - i|111>) / sqrt(2)` (resonators in vacuum).
pub fn psi0(space: &CompositeSpace) -> Result<StateVector> {
    logical_pair(space, [0, 0, 0], [1, 1, 1], 0.0)
}

/// `sigma_x^j |psi_0>`, the corrupted image of `|psi_0>` in error subspace `j+1`.
pub fn corrupted_psi0(space: &CompositeSpace, j: usize) -> Result<StateVector> {
    if j >= QUBITS {
        return Err(Error::InvalidArgument(format!("qubit index {j} out of range")));
    }
    let mut a = [0, 0, 0];
    a[j] = 1;
    let b = a.map(|x| 1 - x);
    logical_pair(space, a, b, 0.0)
}

/// Basis states spanning error subspace `E_m` (`m = 0` is the code space).
pub fn error_subspace_basis(space: &CompositeSpace, m: usize) -> Result<[StateVector; 2]> {
    if m > QUBITS {
        return Err(Error::InvalidArgument(format!("error subspace {m} out of range")));
    }
    let mut a = [0, 0, 0];
    if m > 0 {
        a[m - 1] = 1;
    }
    let b = a.map(|x| 1 - x);
    Ok([register_state(space, a)?, register_state(space, b)?])
}

/// `c_j = |000><flip_j(000)| + |111><flip_j(111)|` on a space whose first
/// three factors are the qubits (identity on any remaining factors).
pub fn correction_operator(j: usize, space: &CompositeSpace) -> Result<Operator> {
    if j >= QUBITS {
        return Err(Error::InvalidArgument(format!("qubit index {j} out of range")));
    }
    qubit_space_check(space)?;
    let q = qubit_space();
    let mut local = Operator::zeros(&q).into_data();
    for code in [[0usize, 0, 0], [1, 1, 1]] {
        let mut err = code;
        err[j] = 1 - err[j];
        local[[q.index_of(&code)?, q.index_of(&err)?]] = ONE;
    }
    lift_register(Operator::new(q, local)?, space)
}

/// Extends an operator on the three-qubit register by identity on trailing factors.
fn lift_register(op: Operator, space: &CompositeSpace) -> Result<Operator> {
    if space.num_factors() == QUBITS {
        return Ok(op);
    }
    let rest = make_space(&space.dims()[QUBITS..])?;
    crate::hilbert::tensor(&op, &Operator::identity(&rest))
}

/// Kraus operators `sqrt(1-p) I` and `sqrt(p/3) sigma_x^j`.
pub fn bitflip_kraus(p: f64) -> Result<Vec<Operator>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("flip probability {p} outside [0, 1]")));
    }
    let q = qubit_space();
    let mut ops = vec![Operator::identity(&q).scale((1.0 - p).sqrt())];
    for j in 0..QUBITS {
        ops.push(embed(&sigma(Axis::X), j, &q)?.scale((p / 3.0).sqrt()));
    }
    Ok(ops)
}

/// `rho -> sum_k M_k rho M_k^dag`.
pub fn apply_channel(kraus: &[Operator], rho: &DensityMatrix) -> Result<DensityMatrix> {
    let space = rho.space().clone();
    let n = space.total_dim();
    let mut out = ndarray::Array2::<C64>::zeros((n, n));
    for m in kraus {
        if m.space() != &space {
            return Err(Error::SpaceMismatch("Kraus operator and state spaces differ".into()));
        }
        out += &m.data().dot(rho.data()).dot(&m.adjoint().into_data());
    }
    DensityMatrix::new(space, out)
}

fn sz(j: usize, s: &CompositeSpace) -> Result<Operator> {
    embed(&sigma(Axis::Z), j, s)
}

fn flip_collapses(p: &SystemParams, s: &CompositeSpace) -> Result<Vec<Collapse>> {
    (0..QUBITS)
        .map(|j| {
            Ok(Collapse::new(
                embed(&sigma(Axis::X), j, s)?,
                p.gamma_x[j] / 2.0,
                format!("flip_{}", j + 1),
            ))
        })
        .collect()
}

/// `-n (sum_k chi_k/2 sigma_z^k)` for one resonator number operator.
fn dispersive(n: &Operator, row: &[f64; 3], s: &CompositeSpace) -> Result<Operator> {
    let mut shift = Operator::zeros(s);
    for (k, chi) in row.iter().enumerate() {
        shift = shift.add(&sz(k, s)?.scale(chi / 2.0))?;
    }
    Ok(n.mul(&shift)?.scale(-1.0))
}

/// `(Omega/2)(sigma_+^j a + sigma_-^j a + h.c.)`.
fn pump(j: usize, a: &Operator, omega: f64, s: &CompositeSpace) -> Result<Operator> {
    let up = embed(&sigma(Axis::Plus), j, s)?;
    let down = embed(&sigma(Axis::Minus), j, s)?;
    let t = up.mul(a)?.add(&down.mul(a)?)?;
    Ok(t.plus_hc().scale(omega / 2.0))
}

fn single_qubit_hamiltonian(p: &SystemParams, s: &CompositeSpace, a: &Operator) -> Result<Operator> {
    let n = a.adjoint().mul(a)?;
    dispersive(&n, &p.chi_ab[0], s)?.add(&pump(0, a, p.omega_p[0], s)?)
}

/// Qubit 0 corrected through one resonator, with flips on qubit 0 only.
/// Space: three qubits plus one resonator truncated at `n_levels`.
pub fn build_single_qubit_full(p: &SystemParams) -> Result<LindbladModel> {
    p.check()?;
    let s = make_space(&[2, 2, 2, p.n_levels])?;
    let a = embed(&annihilate(p.n_levels)?, 3, &s)?;
    let h = single_qubit_hamiltonian(p, &s, &a)?;
    let collapses = vec![
        Collapse::new(a, p.kappa[0], "kappa_1"),
        Collapse::new(embed(&sigma(Axis::X), 0, &s)?, p.gamma_x[0] / 2.0, "flip_1"),
    ];
    LindbladModel::new(h, collapses, "single-qubit correction, full resonator model")
}

/// Adiabatically eliminated version of [`build_single_qubit_full`].
pub fn build_single_qubit_reduced(p: &SystemParams) -> Result<LindbladModel> {
    p.check()?;
    let q = qubit_space();
    let gc = correction_rate(p.omega_p[0], p.kappa[0])?;
    let collapses = vec![
        Collapse::new(correction_operator(0, &q)?, gc, "correction_1"),
        Collapse::new(embed(&sigma(Axis::X), 0, &q)?, p.gamma_x[0] / 2.0, "flip_1"),
    ];
    LindbladModel::new(Operator::zeros(&q), collapses, "single-qubit correction, reduced")
}

/// Reduced three-qubit correction: `sum_j Gamma_c^j D[c_j] + gamma_j/2 D[sigma_x^j]`.
pub fn build_three_qubit_reduced(p: &SystemParams) -> Result<LindbladModel> {
    p.check()?;
    let q = qubit_space();
    let mut collapses = Vec::with_capacity(6);
    for j in 0..QUBITS {
        collapses.push(Collapse::new(
            correction_operator(j, &q)?,
            correction_rate(p.omega_p[j], p.kappa[j])?,
            format!("correction_{}", j + 1),
        ));
    }
    collapses.extend(flip_collapses(p, &q)?);
    LindbladModel::new(Operator::zeros(&q), collapses, "three-qubit correction, reduced")
}

/// Full protocol: three qubits, three resonators (truncated at `n_levels`),
/// dispersive, pump, self- and cross-Kerr terms.
pub fn build_three_resonator_full(p: &SystemParams) -> Result<LindbladModel> {
    p.check()?;
    let nl = p.n_levels;
    let s = make_space(&[2, 2, 2, nl, nl, nl])?;
    let mut a = Vec::with_capacity(3);
    for j in 0..3 {
        a.push(embed(&annihilate(nl)?, QUBITS + j, &s)?);
    }
    let n: Vec<Operator> = a
        .iter()
        .map(|x| x.adjoint().mul(x))
        .collect::<Result<_>>()?;
    let mut h = Operator::zeros(&s);
    for j in 0..3 {
        h = h.add(&dispersive(&n[j], &p.chi_ab[j], &s)?)?;
        h = h.add(&pump(j, &a[j], p.omega_p[j], &s)?)?;
        let ad = a[j].adjoint();
        let self_kerr = ad.mul(&ad)?.mul(&a[j])?.mul(&a[j])?;
        h = h.sub(&self_kerr.scale(p.chi_aa[j][j]))?;
        for k in (0..3).filter(|&k| k != j) {
            h = h.sub(&n[j].mul(&n[k])?.scale(p.chi_aa[j][k]))?;
        }
    }
    let mut collapses = flip_collapses(p, &s)?;
    for (j, aj) in a.into_iter().enumerate() {
        collapses.push(Collapse::new(aj, p.kappa[j], format!("kappa_{}", j + 1)));
    }
    LindbladModel::new(h, collapses, "three-resonator protocol")
}

/// Single-resonator scheme: the single-qubit correction Hamiltonian plus the
/// exchange terms `g12 (s+^1 s-^2 + h.c.) + g23 (s+^2 s-^3 + h.c.)`, with
/// flips on every qubit.
pub fn build_single_resonator(p: &SystemParams) -> Result<LindbladModel> {
    p.check()?;
    let s = make_space(&[2, 2, 2, p.n_levels])?;
    let a = embed(&annihilate(p.n_levels)?, 3, &s)?;
    let h = single_qubit_hamiltonian(p, &s, &a)?.add(&exchange_hamiltonian(p, &s)?)?;
    let mut collapses = flip_collapses(p, &s)?;
    collapses.push(Collapse::new(a, p.kappa[0], "kappa_1"));
    LindbladModel::new(h, collapses, "single-resonator protocol")
}

/// The qubit-qubit exchange part of the single-resonator Hamiltonian.
pub fn exchange_hamiltonian(p: &SystemParams, s: &CompositeSpace) -> Result<Operator> {
    qubit_space_check(s)?;
    let hop = |from: usize, to: usize| -> Result<Operator> {
        let t = embed(&sigma(Axis::Plus), from, s)?.mul(&embed(&sigma(Axis::Minus), to, s)?)?;
        Ok(t.plus_hc())
    };
    hop(0, 1)?.scale(p.g12).add(&hop(1, 2)?.scale(p.g23))
}

/// Three qubits with bit flips and no correction.
pub fn build_bitflip_only(p: &SystemParams) -> Result<LindbladModel> {
    p.check()?;
    let q = qubit_space();
    LindbladModel::new(Operator::zeros(&q), flip_collapses(p, &q)?, "uncorrected bit flips")
}
