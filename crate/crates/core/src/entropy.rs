//! Einstein-Hilbert, F and W± functionals at constant φ, and monotonicity
//! reports along the coupled flows.
//!
//! On a homogeneous manifold with `θ_b = B ω¹` the total measure is
//! `∫ θ_b ∧ dθ_b = B² vol0`, and every gradient term of φ vanishes.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::flow::{invariants_at, rhs, FlowKind, FlowState};
use crate::lie_algebra::NormalizedContactData;
use crate::solver::{flow_map, integrate, IntegratorOptions, TerminalEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntropyKind {
    EinsteinHilbert,
    F,
    WPlus,
    WMinus,
}

impl EntropyKind {
    /// Functional that is monotone along the given coupled flow.
    pub fn for_flow(kind: FlowKind) -> Option<Self> {
        match kind {
            FlowKind::CoupledF => Some(EntropyKind::F),
            FlowKind::CoupledWPlus => Some(EntropyKind::WPlus),
            FlowKind::CoupledWMinus => Some(EntropyKind::WMinus),
            FlowKind::Unnormalized => Some(EntropyKind::EinsteinHilbert),
            FlowKind::Normalized => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EntropyKind::EinsteinHilbert => "E_H",
            EntropyKind::F => "F",
            EntropyKind::WPlus => "W+",
            EntropyKind::WMinus => "W-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig {
    pub kind: EntropyKind,
    pub vol0: f64,
}

impl EntropyConfig {
    pub fn new(kind: EntropyKind) -> Self {
        Self { kind, vol0: 1.0 }
    }

    fn check(&self) -> Result<()> {
        if self.vol0 > 0.0 && self.vol0.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: "vol0", value: self.vol0 })
        }
    }
}

fn need(kind: EntropyKind, field: &'static str, v: Option<f64>) -> Result<f64> {
    v.ok_or(Error::MissingField { kind: kind.name(), field })
}

fn measure(s: &FlowState, vol0: f64) -> f64 {
    s.b_sq * s.b_sq * vol0
}

/// Value of the functional at state `s` with Webster curvature `w`.
pub fn functional_value(cfg: &EntropyConfig, s: &FlowState, w: f64) -> Result<f64> {
    cfg.check()?;
    let mu = measure(s, cfg.vol0);
    match cfg.kind {
        EntropyKind::EinsteinHilbert => Ok(w * mu),
        EntropyKind::F => {
            let phi = need(cfg.kind, "phi", s.phi)?;
            Ok(w * (-phi).exp() * mu)
        }
        EntropyKind::WPlus | EntropyKind::WMinus => {
            let phi = need(cfg.kind, "phi", s.phi)?;
            let tau = need(cfg.kind, "tau", s.tau)?;
            let sign = if cfg.kind == EntropyKind::WPlus { 1.0 } else { -1.0 };
            let weight = (4.0 * PI * tau).powi(-2) * (-phi).exp() * mu;
            Ok((tau * w + sign * (phi / 2.0 - 1.0)) * weight)
        }
    }
}

/// Normalization integral: `e^{-φ} B² vol0` for F, `(4πτ)^{-2} e^{-φ} B² vol0` for
/// W±, and the plain total measure for `E_H`.
pub fn constraint_value(kind: EntropyKind, s: &FlowState, cfg: &EntropyConfig) -> Result<f64> {
    cfg.check()?;
    let mu = measure(s, cfg.vol0);
    match kind {
        EntropyKind::EinsteinHilbert => Ok(mu),
        EntropyKind::F => Ok((-need(kind, "phi", s.phi)?).exp() * mu),
        EntropyKind::WPlus | EntropyKind::WMinus => {
            let phi = need(kind, "phi", s.phi)?;
            let tau = need(kind, "tau", s.tau)?;
            Ok((4.0 * PI * tau).powi(-2) * (-phi).exp() * mu)
        }
    }
}

/// φ that makes the constraint integral equal to 1 at `s`.
pub fn solve_phi(kind: EntropyKind, s: &FlowState, cfg: &EntropyConfig) -> Result<f64> {
    cfg.check()?;
    let mu = measure(s, cfg.vol0);
    match kind {
        EntropyKind::EinsteinHilbert => Ok(0.0),
        EntropyKind::F => Ok(mu.ln()),
        EntropyKind::WPlus | EntropyKind::WMinus => {
            let tau = need(kind, "tau", s.tau)?;
            Ok(mu.ln() - 2.0 * (4.0 * PI * tau).ln())
        }
    }
}

/// Which measure in the derivative formula the numerics agree with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// Integrated against `dμ`.
    Unweighted,
    /// Integrated against `e^{-φ} dμ`.
    Weighted,
    /// Both candidates agree with the numerics (they coincide on this run).
    Both,
    Neither,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Unweighted => "unweighted",
            Weighting::Weighted => "weighted",
            Weighting::Both => "both",
            Weighting::Neither => "neither",
        })
    }
}

/// Relative agreement required between the finite-difference derivative and a
/// candidate right-hand side.
pub const MATCH_TOL: f64 = 1e-4;
/// Slack on the sign of the derivative.
pub const MONOTONE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub kind: FlowKind,
    pub functional: EntropyKind,
    pub times: Vec<f64>,
    pub states: Vec<FlowState>,
    pub functional_values: Vec<f64>,
    /// Central differences along the flow; `None` at the two end samples.
    pub finite_diff_derivative: Vec<Option<f64>>,
    pub theorem_rhs_unweighted: Vec<f64>,
    pub theorem_rhs_weighted: Vec<f64>,
    pub constraint_values: Vec<f64>,
    /// Largest positive derivative over interior samples (0 when monotone).
    pub max_violation: f64,
    pub residual_unweighted: f64,
    pub residual_weighted: f64,
    pub matched_weighting: Weighting,
    /// Relative drift of the constraint integral.
    pub constraint_drift: f64,
    /// Interior samples where the derivative is below `1e-8` in magnitude
    /// although the structure is not a critical point.
    pub strictness_violations: usize,
    pub terminal_event: TerminalEvent,
}

impl MonotonicityReport {
    pub fn monotone(&self) -> bool {
        self.max_violation <= MONOTONE_SLACK
    }
}

fn theorem_rhs(functional: EntropyKind, s: &FlowState, w: f64, a_sq: f64, vol0: f64) -> (f64, f64) {
    let mu = measure(s, vol0);
    match functional {
        EntropyKind::EinsteinHilbert => {
            let v = -2.0 * (w * w + a_sq) * mu;
            (v, v)
        }
        EntropyKind::F => {
            let core = -2.0 * (w * w + a_sq);
            let weight = (-s.phi.unwrap_or(0.0)).exp();
            (core * mu, core * weight * mu)
        }
        EntropyKind::WPlus | EntropyKind::WMinus => {
            let tau = s.tau.unwrap_or(1.0);
            let shift = if functional == EntropyKind::WPlus { -1.0 / tau } else { 1.0 / tau };
            let core = -2.0 * tau * ((w + shift).powi(2) + a_sq) * (4.0 * PI * tau).powi(-2);
            let weight = (-s.phi.unwrap_or(0.0)).exp();
            (core * mu, core * weight * mu)
        }
    }
}

/// Integrates a coupled flow from `s0` with φ₀ solved from the constraint, and
/// compares the functional's derivative with both candidate formulas.
pub fn run_with_report(
    kind: FlowKind,
    nd: &NormalizedContactData,
    s0: &FlowState,
    t_end: f64,
    cfg: &EntropyConfig,
) -> Result<MonotonicityReport> {
    run_with_options(kind, nd, s0, t_end, cfg, &IntegratorOptions::default())
}

pub fn run_with_options(
    kind: FlowKind,
    nd: &NormalizedContactData,
    s0: &FlowState,
    t_end: f64,
    cfg: &EntropyConfig,
    opts: &IntegratorOptions,
) -> Result<MonotonicityReport> {
    cfg.check()?;
    let functional = EntropyKind::for_flow(kind)
        .filter(|f| *f == cfg.kind)
        .ok_or_else(|| Error::InvalidOptions(format!("functional {} does not belong to flow {kind}", cfg.kind.name())))?;
    let mut start = *s0;
    if kind.needs_tau() && start.tau.is_none() {
        return Err(Error::MissingField { kind: kind.name(), field: "tau" });
    }
    if kind.needs_phi() {
        start.phi = Some(solve_phi(functional, &start, cfg)?);
    }
    let c0 = constraint_value(functional, &start, cfg)?;
    if kind.needs_phi() && !((c0 - 1.0).abs() <= 1e-12) {
        return Err(Error::ConstraintViolated { value: c0 });
    }

    let traj = integrate(kind, nd, &start, t_end, opts)?;
    let n = traj.times.len();
    let mut report = MonotonicityReport {
        kind,
        functional,
        times: traj.times.clone(),
        states: traj.states.clone(),
        functional_values: Vec::with_capacity(n),
        finite_diff_derivative: Vec::with_capacity(n),
        theorem_rhs_unweighted: Vec::with_capacity(n),
        theorem_rhs_weighted: Vec::with_capacity(n),
        constraint_values: Vec::with_capacity(n),
        max_violation: 0.0,
        residual_unweighted: 0.0,
        residual_weighted: 0.0,
        matched_weighting: Weighting::Neither,
        constraint_drift: 0.0,
        strictness_violations: 0,
        terminal_event: traj.terminal_event,
    };
    let value_at = |s: &FlowState| -> Result<f64> { functional_value(cfg, s, invariants_at(nd, s)?.webster) };

    for (idx, s) in traj.states.iter().enumerate() {
        let inv = invariants_at(nd, s)?;
        let w = inv.webster;
        let a_sq = inv.torsion.norm_sqr();
        report.functional_values.push(functional_value(cfg, s, w)?);
        let (unw, wtd) = theorem_rhs(functional, s, w, a_sq, cfg.vol0);
        report.theorem_rhs_unweighted.push(unw);
        report.theorem_rhs_weighted.push(wtd);
        let cv = constraint_value(functional, s, cfg)?;
        report.constraint_drift = report.constraint_drift.max((cv - c0).abs() / c0.abs());
        report.constraint_values.push(cv);

        if idx == 0 || idx + 1 == n {
            report.finite_diff_derivative.push(None);
            continue;
        }
        let rate = rhs(kind, nd, s)?;
        let speed = rate.pack().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        // stay well inside the domain near an exit
        let room = [(s.c, rate.c), (s.b_sq, rate.b_sq), (s.tau.unwrap_or(1.0), rate.tau.unwrap_or(0.0))]
            .iter()
            .filter(|(_, r)| *r < 0.0)
            .fold(f64::INFINITY, |m, (x, r)| m.min(-x / r));
        let h = (1e-4 / speed).min(0.01 * room);
        let fd = (value_at(&flow_map(kind, nd, s, h)?)? - value_at(&flow_map(kind, nd, s, -h)?)?) / (2.0 * h);
        report.finite_diff_derivative.push(Some(fd));
        report.max_violation = report.max_violation.max(fd);
        let rel = |r: f64| (fd - r).abs() / r.abs().max(fd.abs()).max(1e-300);
        if fd != 0.0 || unw != 0.0 {
            report.residual_unweighted = report.residual_unweighted.max(rel(unw));
        }
        if fd != 0.0 || wtd != 0.0 {
            report.residual_weighted = report.residual_weighted.max(rel(wtd));
        }
        let critical = match functional {
            EntropyKind::WPlus => inv.torsion.norm() < 1e-8 && (w - 1.0 / s.tau.unwrap_or(1.0)).abs() < 1e-8,
            EntropyKind::WMinus => inv.torsion.norm() < 1e-8 && (w + 1.0 / s.tau.unwrap_or(1.0)).abs() < 1e-8,
            _ => inv.torsion.norm() < 1e-8 && w.abs() < 1e-8,
        };
        if fd.abs() < 1e-8 && !critical {
            report.strictness_violations += 1;
        }
    }
    report.matched_weighting = match (report.residual_unweighted < MATCH_TOL, report.residual_weighted < MATCH_TOL) {
        (true, true) => Weighting::Both,
        (true, false) => Weighting::Unweighted,
        (false, true) => Weighting::Weighted,
        (false, false) => Weighting::Neither,
    };
    Ok(report)
}
