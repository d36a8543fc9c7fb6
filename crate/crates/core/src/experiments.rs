//! Preset scenario runners and generic parameter sweeps.
//!
//! Every runner is deterministic: independent jobs run on the rayon pool
//! and are collected in input order.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{evolve, IntegratorConfig, InvariantReport, Trajectory};
use crate::models::{
    build_four_level, build_three_level, cooperativity, levels, sample_diffusion, DiffusionSpec,
    PhysicalParams,
};
use crate::operator::SpaceLayout;
use crate::stats::{analytic_counts, calibrate_nin, ps_curve, readout, CountsCurve, ReadoutCurve};

/// Cavity truncation used unless a scenario asks otherwise.
pub const DEFAULT_N_FOCK: usize = 4;

/// Δz/2π values (GHz) of the Zeeman-splitting preset.
pub const DEFAULT_DELTA_Z: [f64; 9] = [0.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ThreeLevel,
    FourLevel,
    /// Weak-excitation formulas N₁ = ηTn_in, N₀ = N₁/(1+C)²; no ODE.
    Analytic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ThreeLevel => "three_level",
            ModelKind::FourLevel => "four_level",
            ModelKind::Analytic => "analytic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "three_level" => Some(ModelKind::ThreeLevel),
            "four_level" => Some(ModelKind::FourLevel),
            "analytic" => Some(ModelKind::Analytic),
            _ => None,
        }
    }

    fn n_levels(self) -> usize {
        match self {
            ModelKind::FourLevel => 4,
            _ => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "delta_z")]
    DeltaZ,
    #[serde(rename = "gamma_d")]
    GammaD,
    #[serde(rename = "gamma_I")]
    GammaI,
    #[serde(rename = "cooperativity")]
    Cooperativity,
    #[serde(rename = "eta_T_nin")]
    EtaTNin,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 6] = [
        SweepParameter::Eta,
        SweepParameter::DeltaZ,
        SweepParameter::GammaD,
        SweepParameter::GammaI,
        SweepParameter::Cooperativity,
        SweepParameter::EtaTNin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eta => "eta",
            SweepParameter::DeltaZ => "delta_z",
            SweepParameter::GammaD => "gamma_d",
            SweepParameter::GammaI => "gamma_I",
            SweepParameter::Cooperativity => "cooperativity",
            SweepParameter::EtaTNin => "eta_T_nin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: ModelKind,
    pub params: PhysicalParams,
    pub n_fock: usize,
    pub diffusion: Option<DiffusionSpec>,
    pub grid: IntegratorConfig,
    pub sweep: Option<Sweep>,
}

impl Scenario {
    /// Default parameters on the default output grid.
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            params: PhysicalParams::reference(),
            n_fock: DEFAULT_N_FOCK,
            diffusion: None,
            grid: IntegratorConfig::with_grid(default_grid()),
            sweep: None,
        }
    }
}

/// 0, then 100 geometric points from 0.1 to 10 ns, then 499 linear points
/// up to 400 ns: 600 samples in total.
pub fn default_grid() -> Vec<f64> {
    build_grid(0.1, 10.0, 400.0, 100, 499)
}

/// `t = 0`, `n_geometric` log-spaced points on [t_min, t_split] and
/// `n_linear` evenly spaced points on (t_split, t_max].
pub fn build_grid(
    t_min: f64,
    t_split: f64,
    t_max: f64,
    n_geometric: usize,
    n_linear: usize,
) -> Vec<f64> {
    let mut grid = Vec::with_capacity(1 + n_geometric + n_linear);
    grid.push(0.0);
    let ratio = (t_split / t_min).ln();
    for k in 0..n_geometric {
        let t = if n_geometric == 1 {
            t_split
        } else {
            t_min * (ratio * k as f64 / (n_geometric - 1) as f64).exp()
        };
        grid.push(t);
    }
    if let Some(last) = grid.last_mut() {
        if n_geometric > 0 {
            *last = t_split;
        }
    }
    let start = if n_geometric > 0 { t_split } else { 0.0 };
    for k in 1..=n_linear {
        grid.push(start + (t_max - start) * k as f64 / n_linear as f64);
    }
    grid
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub ps_opt: f64,
    pub t_opt: f64,
    pub m_opt: u64,
    pub n0: f64,
    pub n1: f64,
}

impl SweepRow {
    fn from_curve(value: f64, curve: &ReadoutCurve) -> Self {
        let i = curve.opt_index;
        Self {
            value,
            ps_opt: curve.ps_opt,
            t_opt: curve.t_opt,
            m_opt: curve.m_opt,
            n0: curve.n0[i],
            n1: curve.n1[i],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    /// Three-level asymptote of a Δz sweep.
    pub reference: Option<SweepRow>,
    /// Worst invariant deviations over every trajectory behind the rows.
    pub invariants: Option<InvariantReport>,
}

/// Both initial-state runs of one model, or the analytic counts.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub counts: CountsCurve,
    /// Trajectories from |g₀⟩ and |g₁⟩; `None` for the analytic model.
    pub trajectories: Option<Box<[Trajectory; 2]>>,
}

impl ModelRun {
    pub fn invariants(&self) -> Option<InvariantReport> {
        self.trajectories
            .as_ref()
            .map(|t| merge_invariants(Some(t[0].invariants), Some(t[1].invariants)).unwrap())
    }
}

pub fn merge_invariants(
    a: Option<InvariantReport>,
    b: Option<InvariantReport>,
) -> Option<InvariantReport> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(InvariantReport {
            max_trace_error: a.max_trace_error.max(b.max_trace_error),
            max_hermiticity_error: a.max_hermiticity_error.max(b.max_hermiticity_error),
            min_eigenvalue: a.min_eigenvalue.min(b.min_eigenvalue),
        }),
    }
}

/// Integrates the model from |g₀⟩ and |g₁⟩ (in parallel) and collects the
/// accumulated transmitted counts.
pub fn simulate(
    model: ModelKind,
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<ModelRun> {
    cfg.validate()?;
    let times = cfg.output_grid.clone();
    if model == ModelKind::Analytic {
        params.validate()?;
        let c = cooperativity(params)?;
        let n_in = calibrate_nin(params);
        let mut acc0 = Vec::with_capacity(times.len());
        let mut acc1 = Vec::with_capacity(times.len());
        for &t in &times {
            let pair = analytic_counts(t * n_in, c)?;
            acc0.push(pair.n0);
            acc1.push(pair.n1);
        }
        return Ok(ModelRun {
            counts: CountsCurve::new(times, acc0, acc1)?,
            trajectories: None,
        });
    }
    let layout = SpaceLayout::new(model.n_levels(), n_fock)?;
    let sys = match model {
        ModelKind::ThreeLevel => build_three_level(params, &layout)?,
        _ => build_four_level(params, &layout)?,
    };
    let run = |level| -> Result<Trajectory> { evolve(&sys, &sys.initial_state(level)?, cfg) };
    let (t0, t1) = rayon::join(|| run(levels::G0), || run(levels::G1));
    let (t0, t1) = (t0?, t1?);
    let counts = CountsCurve::new(times, t0.accumulated.clone(), t1.accumulated.clone())?;
    Ok(ModelRun {
        counts,
        trajectories: Some(Box::new([t0, t1])),
    })
}

/// Readout curve of one model at the scenario's efficiency.
#[derive(Clone, Debug)]
pub struct CurveRun {
    pub run: ModelRun,
    pub curve: ReadoutCurve,
}

pub fn run_curve(
    model: ModelKind,
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<CurveRun> {
    let run = simulate(model, params, n_fock, cfg)?;
    let curve = ps_curve(&run.counts, params.eta)?;
    Ok(CurveRun { run, curve })
}

/// Analytic P_s against the bare expected count ηTn_in for several C.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Table {
    pub c_values: Vec<f64>,
    pub eta_t_nin: Vec<f64>,
    /// `ps[i][j]` for `c_values[i]` at `eta_t_nin[j]`.
    pub ps: Vec<Vec<f64>>,
    pub thresholds: Vec<Vec<u64>>,
}

/// `n_points` evenly spaced counts on (0, max], plus the origin.
pub fn run_fig2(c_values: &[f64], eta_t_nin_max: f64, n_points: usize) -> Result<Fig2Table> {
    if c_values.is_empty() || n_points == 0 {
        return Err(Error::InvalidParameter(
            "fig2 needs at least one cooperativity and one point".into(),
        ));
    }
    if !(eta_t_nin_max > 0.0 && eta_t_nin_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "maximum count {eta_t_nin_max} must be positive"
        )));
    }
    let xs: Vec<f64> = (0..=n_points)
        .map(|k| eta_t_nin_max * k as f64 / n_points as f64)
        .collect();
    let mut ps = Vec::with_capacity(c_values.len());
    let mut thresholds = Vec::with_capacity(c_values.len());
    for &c in c_values {
        let mut row = Vec::with_capacity(xs.len());
        let mut ms = Vec::with_capacity(xs.len());
        for &x in &xs {
            let (p, m) = readout(analytic_counts(x, c)?);
            row.push(p);
            ms.push(m);
        }
        ps.push(row);
        thresholds.push(ms);
    }
    Ok(Fig2Table {
        c_values: c_values.to_vec(),
        eta_t_nin: xs,
        ps,
        thresholds,
    })
}

pub fn run_fig3b(
    model: ModelKind,
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<CurveRun> {
    run_curve(model, params, n_fock, cfg)
}

/// Four-level optimum per Δz, plus the three-level reference row.
pub fn run_fig3c(
    delta_z_values: &[f64],
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    let mut result = sweep_models(
        SweepParameter::DeltaZ,
        delta_z_values,
        ModelKind::FourLevel,
        params,
        n_fock,
        cfg,
    )?;
    let reference = run_curve(ModelKind::ThreeLevel, params, n_fock, cfg)?;
    result.reference = Some(SweepRow::from_curve(f64::INFINITY, &reference.curve));
    result.invariants = merge_invariants(result.invariants, reference.run.invariants());
    Ok(result)
}

/// η sweep. The trajectories do not depend on η, so they are integrated
/// once and only the statistics are re-evaluated.
pub fn run_fig4(
    eta_values: &[f64],
    model: ModelKind,
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    let run = simulate(model, params, n_fock, cfg)?;
    let rows = sorted(eta_values)
        .into_iter()
        .map(|eta| Ok(SweepRow::from_curve(eta, &ps_curve(&run.counts, eta)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: SweepParameter::Eta,
        rows,
        reference: None,
        invariants: run.invariants(),
    })
}

pub fn run_fig5_dephasing(
    gamma_d_values: &[f64],
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    sweep_models(
        SweepParameter::GammaD,
        gamma_d_values,
        ModelKind::FourLevel,
        params,
        n_fock,
        cfg,
    )
}

/// Diffusion-averaged readout curve for one γ_I: the P_s(T, Δω) curves are
/// averaged over the quadrature nodes first, then maximised over T.
#[derive(Clone, Debug)]
pub struct DiffusionRun {
    pub curve: ReadoutCurve,
    pub node_curves: Vec<ReadoutCurve>,
    pub node_offsets: Vec<f64>,
    pub invariants: Option<InvariantReport>,
    /// Whether the ±Δω mirror symmetry held and half the nodes were reused.
    pub mirrored: bool,
}

/// Largest pointwise difference below which two mirrored node curves are
/// treated as identical.
const MIRROR_TOLERANCE: f64 = 1e-10;

pub fn run_diffusion_average(
    model: ModelKind,
    params: &PhysicalParams,
    spec: &DiffusionSpec,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<DiffusionRun> {
    let nodes = sample_diffusion(spec)?;
    let at = |offset: f64| -> Result<CurveRun> {
        let mut p = params.clone();
        p.delta_omega = params.delta_omega + offset;
        run_curve(model, &p, n_fock, cfg)
    };
    let n = nodes.len();
    let mut runs: Vec<Option<CurveRun>> = (0..n).map(|_| None).collect();
    let mut mirrored = false;
    if n > 1 {
        // check the mirror symmetry on the outermost pair before relying on it
        let (lo, hi) = rayon::join(|| at(nodes[0].delta_omega), || at(nodes[n - 1].delta_omega));
        let (lo, hi) = (lo?, hi?);
        mirrored = lo
            .curve
            .ps
            .iter()
            .zip(&hi.curve.ps)
            .all(|(a, b)| (a - b).abs() <= MIRROR_TOLERANCE);
        runs[0] = Some(lo);
        runs[n - 1] = Some(hi);
    }
    let pending: Vec<usize> = (0..n)
        .filter(|&k| runs[k].is_none() && (!mirrored || k <= n / 2))
        .collect();
    let computed = pending
        .par_iter()
        .map(|&k| at(nodes[k].delta_omega))
        .collect::<Vec<_>>();
    for (k, r) in pending.into_iter().zip(computed) {
        runs[k] = Some(r?);
    }
    let mut invariants = None;
    let mut node_curves = Vec::with_capacity(n);
    for k in 0..n {
        let source = if runs[k].is_some() { k } else { n - 1 - k };
        let r = runs[source].as_ref().expect("node computed");
        if source == k {
            invariants = merge_invariants(invariants, r.run.invariants());
        }
        node_curves.push(r.curve.clone());
    }
    let weights: Vec<f64> = nodes.iter().map(|nd| nd.weight).collect();
    let centre = n / 2;
    let curve = ReadoutCurve::average(&node_curves, &weights, centre)?;
    Ok(DiffusionRun {
        curve,
        node_curves,
        node_offsets: nodes.iter().map(|nd| nd.delta_omega).collect(),
        invariants,
        mirrored,
    })
}

pub fn run_fig5_diffusion(
    gamma_i_values: &[f64],
    params: &PhysicalParams,
    spec: &DiffusionSpec,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    let values = sorted(gamma_i_values);
    let runs = values
        .par_iter()
        .map(|&gi| {
            let s = DiffusionSpec {
                gamma_i: gi,
                ..spec.clone()
            };
            run_diffusion_average(ModelKind::FourLevel, params, &s, n_fock, cfg)
        })
        .collect::<Vec<_>>();
    let mut rows = Vec::with_capacity(values.len());
    let mut invariants = None;
    for (&v, r) in values.iter().zip(runs) {
        let r = r?;
        rows.push(SweepRow::from_curve(v, &r.curve));
        invariants = merge_invariants(invariants, r.invariants);
    }
    Ok(SweepResult {
        parameter: SweepParameter::GammaI,
        rows,
        reference: None,
        invariants,
    })
}

/// Generic sweep of the scenario's model over one whitelisted parameter.
pub fn run_sweep(scenario: &Scenario) -> Result<SweepResult> {
    let sweep = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("scenario has no sweep".into()))?;
    let (model, p, nf, cfg) = (
        scenario.model,
        &scenario.params,
        scenario.n_fock,
        &scenario.grid,
    );
    match sweep.parameter {
        SweepParameter::Eta => run_fig4(&sweep.values, model, p, nf, cfg),
        SweepParameter::GammaI => {
            let spec = scenario.diffusion.clone().unwrap_or_default();
            let values = sorted(&sweep.values);
            let mut rows = Vec::with_capacity(values.len());
            let mut invariants = None;
            for v in values {
                let s = DiffusionSpec {
                    gamma_i: v,
                    ..spec.clone()
                };
                let r = run_diffusion_average(model, p, &s, nf, cfg)?;
                rows.push(SweepRow::from_curve(v, &r.curve));
                invariants = merge_invariants(invariants, r.invariants);
            }
            Ok(SweepResult {
                parameter: SweepParameter::GammaI,
                rows,
                reference: None,
                invariants,
            })
        }
        SweepParameter::EtaTNin => {
            if model != ModelKind::Analytic {
                return Err(Error::InvalidConfig(
                    "eta_T_nin sweeps need the analytic model".into(),
                ));
            }
            p.validate()?;
            let c = cooperativity(p)?;
            let rate = p.eta * calibrate_nin(p);
            let rows = sorted(&sweep.values)
                .into_iter()
                .map(|x| {
                    let pair = analytic_counts(x, c)?;
                    let (ps_opt, m_opt) = readout(pair);
                    Ok(SweepRow {
                        value: x,
                        ps_opt,
                        t_opt: x / rate,
                        m_opt,
                        n0: pair.n0,
                        n1: pair.n1,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepResult {
                parameter: SweepParameter::EtaTNin,
                rows,
                reference: None,
                invariants: None,
            })
        }
        other => sweep_models(other, &sweep.values, model, p, nf, cfg),
    }
}

/// Sets one swept parameter. Cooperativity is changed through g at fixed
/// κ and γ₀.
pub fn apply_parameter(
    params: &PhysicalParams,
    parameter: SweepParameter,
    value: f64,
) -> Result<PhysicalParams> {
    let mut p = params.clone();
    match parameter {
        SweepParameter::Eta => p.eta = value,
        SweepParameter::DeltaZ => p.delta_z = value,
        SweepParameter::GammaD => p.gamma_d = value,
        SweepParameter::Cooperativity => {
            if !(value >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cooperativity {value} is negative"
                )));
            }
            p.g = (value * p.kappa * p.gamma_channel(0)? / 2.0).sqrt();
        }
        SweepParameter::GammaI | SweepParameter::EtaTNin => {
            return Err(Error::InvalidConfig(format!(
                "{} is not a model parameter",
                parameter.name()
            )))
        }
    }
    p.validate()?;
    Ok(p)
}

fn sweep_models(
    parameter: SweepParameter,
    values: &[f64],
    model: ModelKind,
    params: &PhysicalParams,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    let values = sorted(values);
    let runs = values
        .par_iter()
        .map(|&v| {
            let p = apply_parameter(params, parameter, v)?;
            run_curve(model, &p, n_fock, cfg)
        })
        .collect::<Vec<_>>();
    let mut rows = Vec::with_capacity(values.len());
    let mut invariants = None;
    for (&v, r) in values.iter().zip(runs) {
        let r = r?;
        rows.push(SweepRow::from_curve(v, &r.curve));
        invariants = merge_invariants(invariants, r.run.invariants());
    }
    Ok(SweepResult {
        parameter,
        rows,
        reference: None,
        invariants,
    })
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    /// Shortest representation that parses back to the same `f64`; used
    /// for photon counts so P_s can be recomputed offline to 1e-12.
    Exact(f64),
    I(u64),
    S(String),
}

/// Column names plus rows, written as CSV with '#' comment lines on top.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Formats with 12 significant digits, `%.12g` style.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::F(x) => format_sig(*x),
                    Cell::Exact(x) => format!("{x:?}"),
                    Cell::I(i) => i.to_string(),
                    Cell::S(s) => s.clone(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.to_csv().as_bytes()).map_err(io)?;
        Ok(())
    }
}

/// Per-time readout columns of one run: the counts, threshold and P_s at
/// every T, plus the incoherent κ⟨a†a⟩ diagnostic when available.
pub fn curve_table(run: &CurveRun) -> Table {
    let mut table = Table::new(&[
        "t_ns",
        "acc0",
        "acc1",
        "n0",
        "n1",
        "threshold",
        "ps",
        "flux0",
        "flux1",
        "incoherent_flux0",
        "incoherent_flux1",
    ]);
    let c = &run.curve;
    for i in 0..c.times.len() {
        let (f0, f1, i0, i1) = match &run.run.trajectories {
            Some(t) => (
                t[0].flux[i],
                t[1].flux[i],
                t[0].incoherent_flux[i],
                t[1].incoherent_flux[i],
            ),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        table.push(vec![
            Cell::F(c.times[i]),
            Cell::Exact(run.run.counts.acc0[i]),
            Cell::Exact(run.run.counts.acc1[i]),
            Cell::Exact(c.n0[i]),
            Cell::Exact(c.n1[i]),
            Cell::I(c.thresholds[i]),
            Cell::F(c.ps[i]),
            Cell::F(f0),
            Cell::F(f1),
            Cell::F(i0),
            Cell::F(i1),
        ]);
    }
    table
        .comments
        .push(format!("ps_opt = {}", format_sig(c.ps_opt)));
    table.comments.push(format!(
        "t_opt_ns = {}, m_opt = {}",
        format_sig(c.t_opt),
        c.m_opt
    ));
    table
}

/// A diffusion-averaged curve; thresholds and counts come from the Δω = 0
/// node.
pub fn averaged_curve_table(curve: &ReadoutCurve) -> Table {
    let mut table = Table::new(&["t_ns", "n0", "n1", "threshold", "ps"]);
    for i in 0..curve.times.len() {
        table.push(vec![
            Cell::F(curve.times[i]),
            Cell::Exact(curve.n0[i]),
            Cell::Exact(curve.n1[i]),
            Cell::I(curve.thresholds[i]),
            Cell::F(curve.ps[i]),
        ]);
    }
    table
}

pub fn sweep_table(result: &SweepResult) -> Table {
    let mut table = Table::new(&[
        "row",
        result.parameter.name(),
        "ps_opt",
        "t_opt_ns",
        "m_opt",
        "n0",
        "n1",
    ]);
    let push = |t: &mut Table, label: &str, r: &SweepRow| {
        t.push(vec![
            Cell::S(label.into()),
            Cell::F(r.value),
            Cell::F(r.ps_opt),
            Cell::F(r.t_opt),
            Cell::I(r.m_opt),
            Cell::Exact(r.n0),
            Cell::Exact(r.n1),
        ])
    };
    for r in &result.rows {
        push(&mut table, "sweep", r);
    }
    if let Some(r) = &result.reference {
        push(&mut table, "three_level_reference", r);
    }
    if let Some(inv) = &result.invariants {
        table.comments.push(format!(
            "invariants: max_trace_error = {:e}, max_hermiticity_error = {:e}, min_eigenvalue = {:e}",
            inv.max_trace_error, inv.max_hermiticity_error, inv.min_eigenvalue
        ));
    }
    table
}

pub fn fig2_table(fig: &Fig2Table) -> Table {
    let mut table = Table::new(&["cooperativity", "eta_T_nin", "n0", "n1", "threshold", "ps"]);
    for (i, &c) in fig.c_values.iter().enumerate() {
        for (j, &x) in fig.eta_t_nin.iter().enumerate() {
            let n0 = x / ((1.0 + c) * (1.0 + c));
            table.push(vec![
                Cell::F(c),
                Cell::F(x),
                Cell::Exact(n0),
                Cell::Exact(x),
                Cell::I(fig.thresholds[i][j]),
                Cell::F(fig.ps[i][j]),
            ]);
        }
    }
    table
}
