//! Scenario runners: each named scenario builds its models, integrates the
//! requested curves, fits rates and collects summary metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use toml::Value;

use super::config::{Compensation, InitialState, ModelKind, ScenarioConfig, ScenarioId};
use super::fit::{analytic_uncorrected, fit_rate, FitForm, FitResult};
use crate::error::{Error, Result};
use crate::hilbert::{CompositeSpace, DensityMatrix};
use crate::lindblad::{
    integrate_observed, IntegrateOptions, LindbladModel, TimeGrid, TrajectoryMetadata,
};
use crate::models::{
    build_bitflip_only, build_single_qubit_full, build_single_qubit_reduced,
    build_single_resonator, build_three_qubit_reduced, build_three_resonator_full,
    corrupted_psi0, psi0, residual_rates, validate_params, SystemParams, ValidityReport, QUBITS,
};
use crate::observables::{
    check_populations, fock_populations, reference_phase, ObservableSet, PhaseChoice,
};
use crate::par::map_collect;

/// How the compensation phase of a curve was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSource {
    /// From a matched run with the flip rates set to zero.
    Reference,
    /// The flip rates are already zero, so the run is its own reference.
    SelfReference,
    /// Per-time optimum; an upper bound.
    Maximize,
}

/// One integrated fidelity curve.
#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub label: String,
    #[serde(skip)]
    pub rows: Vec<ObservableSet>,
    pub phase_source: PhaseSource,
    pub integrator: TrajectoryMetadata,
    /// Largest population of the highest kept Fock level, per resonator.
    pub max_top_level_population: Vec<f64>,
}

impl Curve {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn compensated(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.fidelity_compensated).collect()
    }

    /// Compensated fidelity at an output time, if `t` is on the grid.
    pub fn compensated_at(&self, t: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.t - t).abs() <= 1e-9 * t.max(1.0))
            .map(|r| r.fidelity_compensated)
    }
}

/// One row of a parameter sweep. Failures are kept in `error` so a bad
/// point never aborts the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub key: String,
    pub value: f64,
    pub gamma_c_predicted: Option<f64>,
    pub fit: Option<FitResult>,
    pub fidelity_at_mark: Option<f64>,
    pub fidelity_final: Option<f64>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub curve: Option<Curve>,
    #[serde(skip)]
    pub recovery: Option<Curve>,
}

impl SweepRow {
    pub fn fitted_rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.rate)
    }
}

/// Everything a scenario produces; written to disk by [`super::output`].
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub config: ScenarioConfig,
    pub params: SystemParams,
    pub validity: ValidityReport,
    pub warnings: Vec<String>,
    /// The first curve is the primary one.
    pub curves: Vec<Curve>,
    pub rates: Option<Vec<SweepRow>>,
    pub fits: BTreeMap<String, FitResult>,
    pub metrics: BTreeMap<String, f64>,
    pub wall_time_s: f64,
}

impl ScenarioOutput {
    pub fn scenario(&self) -> ScenarioId {
        self.config.scenario
    }

    pub fn curve(&self, label: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.label == label)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

pub fn build_model(kind: ModelKind, params: &SystemParams) -> Result<LindbladModel> {
    match kind {
        ModelKind::SingleQubitFull => build_single_qubit_full(params),
        ModelKind::SingleQubitReduced => build_single_qubit_reduced(params),
        ModelKind::ThreeQubitReduced => build_three_qubit_reduced(params),
        ModelKind::ThreeResonator => build_three_resonator_full(params),
        ModelKind::SingleResonator => build_single_resonator(params),
        ModelKind::BitflipOnly => build_bitflip_only(params),
    }
}

/// Initial density matrix on `space`; resonators start in vacuum.
pub fn initial_state(init: InitialState, space: &CompositeSpace) -> Result<DensityMatrix> {
    let pure = |j: usize| corrupted_psi0(space, j).map(|s| DensityMatrix::from_pure(&s));
    match init {
        InitialState::Logical => Ok(DensityMatrix::from_pure(&psi0(space)?)),
        InitialState::Corrupted1 => pure(0),
        InitialState::Corrupted2 => pure(1),
        InitialState::Corrupted3 => pure(2),
        InitialState::CorruptedMixture => {
            let states = (0..QUBITS)
                .map(|j| Ok((1.0 / 3.0, corrupted_psi0(space, j)?)))
                .collect::<Result<Vec<_>>>()?;
            DensityMatrix::mixture(&states)
        }
    }
}

fn without_flips(p: &SystemParams) -> SystemParams {
    SystemParams {
        gamma_x: [0.0; 3],
        ..p.clone()
    }
}

/// Output time `1/(gamma_1 + gamma_2 + gamma_3)`, when any flip rate is set.
pub fn mark_time(p: &SystemParams) -> Option<f64> {
    let total: f64 = p.gamma_x.iter().sum();
    (total > 0.0).then(|| 1.0 / total)
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    opts: IntegrateOptions,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        Self {
            cfg,
            opts: IntegrateOptions {
                method: cfg.method,
                internal_dt: cfg.internal_dt,
                exec: cfg.exec,
            },
        }
    }

    fn main_grid(&self, p: &SystemParams) -> Result<TimeGrid> {
        let marks: Vec<f64> = mark_time(p).into_iter().collect();
        TimeGrid::uniform_with_marks(self.cfg.horizon, self.cfg.steps, &marks)
    }

    fn recovery_grid(&self, p: &SystemParams) -> Result<TimeGrid> {
        let horizon = match self.cfg.recovery_horizon {
            Some(h) => h,
            None => {
                let gc = p.correction_rates()?;
                let slowest = gc.iter().copied().fold(f64::INFINITY, f64::min);
                let kappa = p.kappa.iter().copied().fold(f64::INFINITY, f64::min);
                if !(slowest > 0.0) {
                    return Err(Error::InvalidArgument(
                        "recovery run needs a nonzero correction rate".into(),
                    ));
                }
                (20.0 / slowest).max(20.0 / kappa)
            }
        };
        Ok(TimeGrid::uniform(horizon, self.cfg.recovery_steps))
    }

    /// Integrates one curve. Under reference compensation a second run with
    /// the flip rates zeroed supplies the phase at every output time.
    fn curve(
        &self,
        label: &str,
        kind: ModelKind,
        p: &SystemParams,
        init: InitialState,
        grid: &TimeGrid,
    ) -> Result<Curve> {
        let model = build_model(kind, p)?;
        let rho0 = initial_state(init, model.space())?;
        let flips = p.gamma_x.iter().any(|g| *g != 0.0);
        let (source, phases) = match self.cfg.compensation {
            Compensation::Maximize => (PhaseSource::Maximize, None),
            Compensation::Reference if !flips => (PhaseSource::SelfReference, None),
            Compensation::Reference => {
                let reference = build_model(kind, &without_flips(p))?;
                let mut phases = Vec::new();
                integrate_observed(&reference, &rho0, grid, &self.opts, |_, rho| {
                    phases.push(reference_phase(rho)?);
                    Ok(())
                })?;
                (PhaseSource::Reference, Some(phases))
            }
        };

        let modes = model.space().num_factors() - QUBITS;
        let top: Vec<usize> = (0..modes)
            .map(|j| model.space().dims()[QUBITS + j] - 1)
            .collect();
        let mut max_top = vec![0.0_f64; modes];
        let mut rows = Vec::new();
        let integrator = integrate_observed(&model, &rho0, grid, &self.opts, |t, rho| {
            let choice = match &phases {
                Some(ph) => PhaseChoice::Fixed(ph[rows.len()]),
                None => PhaseChoice::Maximize,
            };
            let row = ObservableSet::measure(t, rho, choice)?;
            check_populations(&row)?;
            for (j, slot) in max_top.iter_mut().enumerate() {
                *slot = slot.max(fock_populations(rho, top[j])[j]);
            }
            rows.push(row);
            Ok(())
        })?;
        Ok(Curve {
            label: label.to_string(),
            rows,
            phase_source: source,
            integrator,
            max_top_level_population: max_top,
        })
    }

    /// Correction-rate measurement: flips off, start in `init`, fit the
    /// rise of the compensated fidelity.
    fn recovery(
        &self,
        label: &str,
        kind: ModelKind,
        p: &SystemParams,
        init: InitialState,
    ) -> Result<(Curve, FitResult)> {
        let quiet = without_flips(p);
        let grid = self.recovery_grid(&quiet)?;
        let curve = self.curve(label, kind, &quiet, init, &grid)?;
        let (t, f) = (curve.times(), curve.compensated());
        // poorly selective pumps dephase the recovered state; only the rise
        // up to the maximum carries the correction rate
        let peak = f
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > f[best] { i } else { best });
        let fit = fit_rate(&t[..=peak], &f[..=peak], FitForm::Rise, self.cfg.fit_window)?;
        Ok((curve, fit))
    }

    /// Decay of the logical coherence `C = 2F - 1` of a curve.
    fn coherence_fit(&self, curve: &Curve) -> Result<FitResult> {
        let c: Vec<f64> = curve
            .compensated()
            .iter()
            .map(|f| (2.0 * f - 1.0).clamp(0.0, 1.0))
            .collect();
        fit_rate(&curve.times(), &c, FitForm::Decay, self.cfg.fit_window)
    }
}

fn gate(cfg: &ScenarioConfig, report: &ValidityReport) -> Result<()> {
    if report.all_ok() || cfg.allow_invalid_params {
        return Ok(());
    }
    Err(Error::Config(format!(
        "parameters fail the regime checks ({}); set allow_invalid_params = true to run anyway",
        report.warnings.join("; ")
    )))
}

/// Runs a scenario and returns its curves, fits and metrics. Files are
/// written separately by [`super::output::write_output`].
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    run_with(cfg, |cfg, params, out| match cfg.scenario {
        ScenarioId::Fig3 => fig3(cfg, params, out),
        ScenarioId::Fig4Sweep => sweep_scenario(cfg, true, out),
        ScenarioId::Saturation => sweep_scenario(cfg, false, out),
        ScenarioId::Fig6Compare => fig6(cfg, params, out),
        ScenarioId::SelectRate => select_rate(cfg, params, out),
        ScenarioId::SymRate => sym_rate(cfg, params, out),
        ScenarioId::Custom => custom(cfg, params, out),
    })
}

/// Sweeps `cfg.sweep_key` over `cfg.sweep_values` for any scenario's
/// model and initial state, with a main curve and a recovery fit per point.
pub fn run_sweep_output(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    run_with(cfg, |cfg, _, out| sweep_scenario(cfg, true, out))
}

fn run_with<F>(cfg: &ScenarioConfig, body: F) -> Result<ScenarioOutput>
where
    F: FnOnce(&ScenarioConfig, &SystemParams, &mut ScenarioOutput) -> Result<()>,
{
    cfg.validate()?;
    let params = cfg.system_params();
    let validity = validate_params(&params);
    gate(cfg, &validity)?;
    let start = Instant::now();
    let mut out = ScenarioOutput {
        config: cfg.clone(),
        params: params.clone(),
        warnings: validity.warnings.clone(),
        validity,
        curves: Vec::new(),
        rates: None,
        fits: BTreeMap::new(),
        metrics: BTreeMap::new(),
        wall_time_s: 0.0,
    };
    body(cfg, &params, &mut out).map_err(|e| e.in_scenario(cfg.scenario.name()))?;
    if cfg.compensation == Compensation::Maximize {
        out.warnings.push(
            "compensation = maximize: compensated fidelity is a per-time upper bound".into(),
        );
    }
    out.wall_time_s = start.elapsed().as_secs_f64();
    Ok(out)
}

fn fig3(cfg: &ScenarioConfig, p: &SystemParams, out: &mut ScenarioOutput) -> Result<()> {
    let run = Runner::new(cfg);
    let grid = TimeGrid::uniform(cfg.horizon, cfg.steps);
    let full = run.curve("full", ModelKind::SingleQubitFull, p, cfg.initial_state, &grid)?;
    let reduced = run.curve("reduced", ModelKind::SingleQubitReduced, p, cfg.initial_state, &grid)?;
    let dev = full
        .rows
        .iter()
        .zip(&reduced.rows)
        .map(|(a, b)| (a.fidelity_compensated - b.fidelity_compensated).abs())
        .fold(0.0, f64::max);
    let form = cfg.fit_form.unwrap_or(FitForm::Rise);
    let predicted = p.correction_rates()?[0];
    out.metrics.insert("gamma_c_predicted".into(), predicted);
    out.metrics.insert("max_abs_deviation_full_reduced".into(), dev);
    for c in [&full, &reduced] {
        let fit = fit_rate(&c.times(), &c.compensated(), form, cfg.fit_window)?;
        out.metrics.insert(format!("gamma_c_fitted_{}", c.label), fit.rate);
        out.fits.insert(c.label.clone(), fit);
    }
    out.curves = vec![full, reduced];
    Ok(())
}

fn last_segment(key: &str) -> &str {
    key.rsplit('.').next().unwrap_or(key)
}

/// Label used for per-point files: `<key>_<value>`.
pub fn point_label(key: &str, value: f64) -> String {
    format!("{}_{}", last_segment(key), value)
}

fn sweep_point(cfg: &ScenarioConfig, value: f64, with_main: bool) -> SweepRow {
    let mut row = SweepRow {
        key: cfg.sweep_key.clone(),
        value,
        gamma_c_predicted: None,
        fit: None,
        fidelity_at_mark: None,
        fidelity_final: None,
        warnings: Vec::new(),
        error: None,
        curve: None,
        recovery: None,
    };
    let result = (|| -> Result<()> {
        let point = cfg.with_override(&cfg.sweep_key, Value::Float(value))?;
        let p = point.system_params();
        row.warnings = validate_params(&p).warnings;
        row.gamma_c_predicted = p.correction_rates()?.first().copied();
        let run = Runner::new(&point);
        let label = point_label(&cfg.sweep_key, value);
        if with_main {
            let curve = run.curve(&label, point.model, &p, point.initial_state, &run.main_grid(&p)?)?;
            row.fidelity_at_mark = mark_time(&p).and_then(|t| curve.compensated_at(t));
            row.fidelity_final = curve.rows.last().map(|r| r.fidelity_compensated);
            row.curve = Some(curve);
        }
        let (rec, fit) = run.recovery(
            &format!("recovery.{label}"),
            point.model,
            &p,
            InitialState::Corrupted1,
        )?;
        row.fit = Some(fit);
        row.recovery = Some(rec);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every value of `cfg.sweep_values` (in parallel under the configured
/// policy) and returns the rows in grid order. With `with_main`, each point
/// also integrates the main curve from the configured initial state.
pub fn run_sweep(cfg: &ScenarioConfig, with_main: bool) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if cfg.sweep_values.is_empty() {
        return Err(Error::Config("sweep_values must not be empty".into()));
    }
    Ok(map_collect(cfg.exec, &cfg.sweep_values, |v| {
        sweep_point(cfg, *v, with_main)
    }))
}

fn rate_at(rows: &[SweepRow], value: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.value == value)
        .and_then(SweepRow::fitted_rate)
}

/// Saturation summary of a sweep: whether the fitted rates are nondecreasing
/// in the swept value, and the `(400 -> 500) / (100 -> 200)` increment ratio.
pub fn saturation_metrics(rows: &[SweepRow]) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    let mut ordered: Vec<(f64, Option<f64>)> =
        rows.iter().map(|r| (r.value, r.fitted_rate())).collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    if ordered.iter().all(|(_, r)| r.is_some()) {
        let monotone = ordered
            .windows(2)
            .all(|w| w[1].1.unwrap() >= w[0].1.unwrap());
        m.insert("monotone_nondecreasing".into(), if monotone { 1.0 } else { 0.0 });
    }
    let inc = |a: f64, b: f64| Some(rate_at(rows, b)? - rate_at(rows, a)?);
    if let (Some(high), Some(low)) = (inc(400.0, 500.0), inc(100.0, 200.0)) {
        m.insert("increment_400_500".into(), high);
        m.insert("increment_100_200".into(), low);
        m.insert("increment_ratio".into(), high / low);
    }
    m
}

fn sweep_scenario(cfg: &ScenarioConfig, with_main: bool, out: &mut ScenarioOutput) -> Result<()> {
    let rows = run_sweep(cfg, with_main)?;
    out.warnings.push(format!(
        "sweep values {:?} for '{}' are a stand-in grid, not read off a published figure",
        cfg.sweep_values, cfg.sweep_key
    ));
    for row in &rows {
        let label = point_label(&row.key, row.value);
        if let Some(e) = &row.error {
            out.warnings.push(format!("{label}: {e}"));
        }
        for w in &row.warnings {
            out.warnings.push(format!("{label}: {w}"));
        }
        if let Some(fit) = &row.fit {
            out.fits.insert(format!("recovery.{label}"), fit.clone());
        }
        if let Some(f) = row.fidelity_at_mark {
            out.metrics.insert(format!("{label}.fidelity_at_mark"), f);
        }
    }
    out.metrics.extend(saturation_metrics(&rows));
    out.curves = rows
        .iter()
        .flat_map(|r| [r.curve.clone(), r.recovery.clone()])
        .flatten()
        .collect();
    // the primary curve of a sweep is its first point's main curve
    if with_main {
        out.curves.sort_by_key(|c| c.label.starts_with("recovery."));
    }
    out.rates = Some(rows);
    Ok(())
}

fn fig6(cfg: &ScenarioConfig, p: &SystemParams, out: &mut ScenarioOutput) -> Result<()> {
    let run = Runner::new(cfg);
    let grid = run.main_grid(p)?;
    let single_p = SystemParams {
        n_levels: cfg.n_levels_single,
        ..p.clone()
    };
    let init = cfg.initial_state;
    let single = run.curve("single_resonator", ModelKind::SingleResonator, &single_p, init, &grid)?;
    let three = run.curve("three_resonator", ModelKind::ThreeResonator, p, init, &grid)?;
    let bare = run.curve("uncorrected", ModelKind::BitflipOnly, p, init, &grid)?;

    let (rec_single, fit_single) = run.recovery(
        "recovery.single_resonator",
        ModelKind::SingleResonator,
        &single_p,
        InitialState::CorruptedMixture,
    )?;
    let (rec_three, fit_three) = run.recovery(
        "recovery.three_resonator",
        ModelKind::ThreeResonator,
        p,
        InitialState::CorruptedMixture,
    )?;
    let m = &mut out.metrics;
    m.insert("gamma_c_fitted_single".into(), fit_single.rate);
    m.insert("gamma_c_fitted_three".into(), fit_three.rate);
    m.insert("rate_ratio_single_over_three".into(), fit_single.rate / fit_three.rate);
    let top = single
        .max_top_level_population
        .iter()
        .chain(&rec_single.max_top_level_population)
        .copied()
        .fold(0.0, f64::max);
    m.insert("max_top_level_population_single".into(), top);

    if init == InitialState::Logical {
        let g = p.gamma_x[0];
        if p.gamma_x.iter().all(|x| *x == g) {
            let gap = bare
                .rows
                .iter()
                .map(|r| (r.fidelity_raw - analytic_uncorrected(r.t, g)).abs())
                .fold(0.0, f64::max);
            m.insert("max_abs_uncorrected_vs_analytic".into(), gap);
        }
        if let Some(t) = mark_time(p) {
            if let (Some(a), Some(b), Some(c)) = (
                three.compensated_at(t),
                single.compensated_at(t),
                bare.compensated_at(t),
            ) {
                m.insert("three_resonator_at_mark".into(), a);
                m.insert("single_resonator_at_mark".into(), b);
                m.insert("uncorrected_at_mark".into(), c);
                m.insert("three_minus_uncorrected_at_mark".into(), a - c);
            }
        }
    }
    out.fits.insert(rec_single.label.clone(), fit_single);
    out.fits.insert(rec_three.label.clone(), fit_three);
    out.curves = vec![single, three, bare, rec_single, rec_three];
    Ok(())
}

fn select_rate(cfg: &ScenarioConfig, p: &SystemParams, out: &mut ScenarioOutput) -> Result<()> {
    let run = Runner::new(cfg);
    let curve = run.curve("main", cfg.model, p, cfg.initial_state, &run.main_grid(p)?)?;
    let fit = run.coherence_fit(&curve)?;
    let predicted = residual_rates(p)?.gamma_select;
    out.metrics.insert("gamma_select_predicted".into(), predicted);
    out.metrics.insert("decay_rate_fitted".into(), fit.rate);
    out.metrics.insert("fitted_over_predicted".into(), fit.rate / predicted);
    out.fits.insert("coherence".into(), fit);
    out.curves = vec![curve];
    Ok(())
}

/// `p` with every dispersive row shifted on its second entry to sum to zero.
pub fn symmetrized(p: &SystemParams) -> SystemParams {
    let mut q = p.clone();
    for row in q.chi_ab.iter_mut() {
        let residual: f64 = row.iter().sum();
        row[1] -= residual;
    }
    q
}

fn sym_rate(cfg: &ScenarioConfig, p: &SystemParams, out: &mut ScenarioOutput) -> Result<()> {
    let run = Runner::new(cfg);
    let base = if cfg.params.is_none() {
        let mut knobs = cfg.protocol.clone();
        knobs.asymmetry = 0.0;
        knobs.to_params()
    } else {
        symmetrized(p)
    };
    let grid = run.main_grid(p)?;
    let broken = run.curve("asymmetric", cfg.model, p, cfg.initial_state, &grid)?;
    let clean = run.curve("symmetric", cfg.model, &base, cfg.initial_state, &grid)?;
    let fit_broken = run.coherence_fit(&broken)?;
    let fit_clean = run.coherence_fit(&clean)?;
    let predicted = residual_rates(p)?.gamma_sym - residual_rates(&base)?.gamma_sym;
    let added = fit_broken.rate - fit_clean.rate;
    let m = &mut out.metrics;
    m.insert("gamma_sym_predicted".into(), predicted);
    m.insert("decay_rate_asymmetric".into(), fit_broken.rate);
    m.insert("decay_rate_symmetric".into(), fit_clean.rate);
    m.insert("added_decay_rate".into(), added);
    m.insert("added_over_predicted".into(), added / predicted);
    out.fits.insert("coherence.asymmetric".into(), fit_broken);
    out.fits.insert("coherence.symmetric".into(), fit_clean);
    out.curves = vec![broken, clean];
    Ok(())
}

fn custom(cfg: &ScenarioConfig, p: &SystemParams, out: &mut ScenarioOutput) -> Result<()> {
    let run = Runner::new(cfg);
    let curve = run.curve("main", cfg.model, p, cfg.initial_state, &run.main_grid(p)?)?;
    if let Some(form) = cfg.fit_form {
        let fit = match form {
            FitForm::Rise => fit_rate(&curve.times(), &curve.compensated(), form, cfg.fit_window)?,
            FitForm::Decay => run.coherence_fit(&curve)?,
        };
        out.metrics.insert("fitted_rate".into(), fit.rate);
        out.fits.insert("main".into(), fit);
    }
    if let Some(t) = mark_time(p) {
        if let Some(f) = curve.compensated_at(t) {
            out.metrics.insert("fidelity_at_mark".into(), f);
        }
    }
    out.curves = vec![curve];
    Ok(())
}
