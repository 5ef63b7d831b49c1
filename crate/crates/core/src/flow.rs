//! Torsion flow and its coupled variants, reduced to ODEs on `(a, c, B, φ, τ)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::closed_form::pdq_closed_form;
use crate::error::{Error, Result};
use crate::lie_algebra::{NormalizedContactData, SIGN_TOL};
use crate::pseudohermitian::{complex_frame, invariants_closed_form, CRParameters, PseudohermitianInvariants};
use crate::solver::{flow_map, integrate, IntegratorOptions};

/// Norm constant in `‖A‖² = κ_A |A_{11}|²`, fixed by [`calibrate_kappa_a`].
pub const KAPPA_A: f64 = 1.0;

/// Lower bound on the W⁻ scale parameter.
pub const TAU_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub a: f64,
    pub c: f64,
    /// `B = b²`
    pub b_sq: f64,
    pub phi: Option<f64>,
    pub tau: Option<f64>,
}

/// Field of a [`FlowState`], used in error and event reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateField {
    A,
    C,
    B,
    Phi,
    Tau,
}

impl StateField {
    pub const ALL: [StateField; 5] = [StateField::A, StateField::C, StateField::B, StateField::Phi, StateField::Tau];

    pub fn name(&self) -> &'static str {
        match self {
            StateField::A => "a",
            StateField::C => "c",
            StateField::B => "B",
            StateField::Phi => "phi",
            StateField::Tau => "tau",
        }
    }
}

impl fmt::Display for StateField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FlowState {
    pub fn new(a: f64, c: f64, b_sq: f64) -> Self {
        Self {
            a,
            c,
            b_sq,
            phi: None,
            tau: None,
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn params(&self) -> Result<CRParameters> {
        CRParameters::new(self.a, self.b_sq.sqrt(), self.c)
    }

    pub fn check(&self) -> Result<()> {
        for (field, value) in [(StateField::C, self.c), (StateField::B, self.b_sq)] {
            if !(value > 0.0) {
                return Err(Error::DomainViolation { field: field.name(), value });
            }
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return Err(Error::DomainViolation { field: "tau", value: tau });
            }
        }
        Ok(())
    }

    /// `[a, c, B, φ, τ]`, absent fields as 0.
    pub fn pack(&self) -> [f64; 5] {
        [self.a, self.c, self.b_sq, self.phi.unwrap_or(0.0), self.tau.unwrap_or(0.0)]
    }

    /// Inverse of [`pack`](Self::pack); `template` decides which optional fields exist.
    pub fn unpack(v: &[f64; 5], template: &FlowState) -> Self {
        Self {
            a: v[0],
            c: v[1],
            b_sq: v[2],
            phi: template.phi.map(|_| v[3]),
            tau: template.tau.map(|_| v[4]),
        }
    }

    pub fn get(&self, field: StateField) -> Option<f64> {
        match field {
            StateField::A => Some(self.a),
            StateField::C => Some(self.c),
            StateField::B => Some(self.b_sq),
            StateField::Phi => self.phi,
            StateField::Tau => self.tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowKind {
    Unnormalized,
    Normalized,
    CoupledF,
    CoupledWPlus,
    CoupledWMinus,
}

impl FlowKind {
    pub const ALL: [FlowKind; 5] = [
        FlowKind::Unnormalized,
        FlowKind::Normalized,
        FlowKind::CoupledF,
        FlowKind::CoupledWPlus,
        FlowKind::CoupledWMinus,
    ];

    pub fn needs_phi(&self) -> bool {
        matches!(self, FlowKind::CoupledF | FlowKind::CoupledWPlus | FlowKind::CoupledWMinus)
    }

    pub fn needs_tau(&self) -> bool {
        matches!(self, FlowKind::CoupledWPlus | FlowKind::CoupledWMinus)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Unnormalized => "unnormalized",
            FlowKind::Normalized => "normalized",
            FlowKind::CoupledF => "f",
            FlowKind::CoupledWPlus => "wplus",
            FlowKind::CoupledWMinus => "wminus",
        }
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unnormalized" => Ok(FlowKind::Unnormalized),
            "normalized" => Ok(FlowKind::Normalized),
            "f" | "coupledf" => Ok(FlowKind::CoupledF),
            "wplus" | "w+" | "coupledwplus" => Ok(FlowKind::CoupledWPlus),
            "wminus" | "w-" | "coupledwminus" => Ok(FlowKind::CoupledWMinus),
            _ => Err(Error::InvalidOptions(format!("unknown flow kind `{s}`"))),
        }
    }
}

/// Time derivative of a [`FlowState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRate {
    pub a: f64,
    pub c: f64,
    pub b_sq: f64,
    pub phi: Option<f64>,
    pub tau: Option<f64>,
}

impl FlowRate {
    pub fn pack(&self) -> [f64; 5] {
        [self.a, self.c, self.b_sq, self.phi.unwrap_or(0.0), self.tau.unwrap_or(0.0)]
    }
}

/// Invariants of the structure carried by `s`, with `b = √B`.
pub fn invariants_at(nd: &NormalizedContactData, s: &FlowState) -> Result<PseudohermitianInvariants> {
    invariants_closed_form(nd, &s.params()?)
}

/// `(ȧ, ċ)` induced by `∂_t J = 2E` for a torsion-like coefficient `E_{11}`.
pub fn j_rate(a: f64, c: f64, e: Complex64) -> (f64, f64) {
    let a2p1 = a * a + 1.0;
    let da = 2.0 * (e.re + a * e.im);
    let dc = -2.0 * (e.re * (-2.0 * a * c / a2p1) + e.im * (1.0 - a * a) * c / a2p1);
    (da, dc)
}

/// The explicit normalized ODE on `(a, c)`.
pub fn normalized_rate(nd: &NormalizedContactData, a: f64, c: f64) -> (f64, f64) {
    let (m, k) = (nd.c2_13(), nd.c3_12());
    let da = m * a * c - k * (a * a + 1.0) * a / c;
    let dc = m * c * c + k * (1.0 - a * a);
    (da, dc)
}

pub fn rhs(kind: FlowKind, nd: &NormalizedContactData, s: &FlowState) -> Result<FlowRate> {
    if kind.needs_phi() && s.phi.is_none() {
        return Err(Error::MissingField { kind: kind.name(), field: "phi" });
    }
    if kind.needs_tau() && s.tau.is_none() {
        return Err(Error::MissingField { kind: kind.name(), field: "tau" });
    }
    s.check()?;
    let zero_phi = s.phi.map(|_| 0.0);
    let zero_tau = s.tau.map(|_| 0.0);
    if kind == FlowKind::Normalized {
        let (da, dc) = normalized_rate(nd, s.a, s.c);
        return Ok(FlowRate {
            a: da,
            c: dc,
            b_sq: 0.0,
            phi: zero_phi,
            tau: zero_tau,
        });
    }
    let inv = invariants_at(nd, s)?;
    let (a11, w) = (inv.a11(), inv.webster);
    let rate = match kind {
        FlowKind::Unnormalized => {
            let (da, dc) = j_rate(s.a, s.c, a11);
            FlowRate {
                a: da,
                c: dc,
                b_sq: -2.0 * w * s.b_sq,
                phi: zero_phi,
                tau: zero_tau,
            }
        }
        FlowKind::CoupledF => {
            let weight = s.phi.unwrap_or(0.0).exp();
            let eta = weight * w;
            let (da, dc) = j_rate(s.a, s.c, a11 * weight);
            FlowRate {
                a: da,
                c: dc,
                b_sq: 2.0 * eta * s.b_sq,
                phi: Some(4.0 * eta),
                tau: zero_tau,
            }
        }
        FlowKind::CoupledWPlus | FlowKind::CoupledWMinus => {
            let tau = s.tau.unwrap_or(1.0);
            let (shift, dtau) = if kind == FlowKind::CoupledWPlus { (-1.0 / tau, 2.0) } else { (1.0 / tau, -2.0) };
            let (da, dc) = j_rate(s.a, s.c, a11);
            FlowRate {
                a: da,
                c: dc,
                b_sq: 2.0 * w * s.b_sq,
                phi: Some(4.0 * (w + shift)),
                tau: Some(dtau),
            }
        }
        FlowKind::Normalized => unreachable!(),
    };
    Ok(rate)
}

/// Torsion-free structures `(a, c)` for the given constants.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointSet {
    Empty,
    Isolated(Vec<(f64, f64)>),
    All,
}

impl FixedPointSet {
    pub fn is_empty(&self) -> bool {
        matches!(self, FixedPointSet::Empty)
    }
}

pub fn fixed_points(nd: &NormalizedContactData) -> FixedPointSet {
    let (m, k) = (nd.c2_13(), nd.c3_12());
    if m.abs() <= SIGN_TOL && k.abs() <= SIGN_TOL {
        return FixedPointSet::All;
    }
    if m.abs() > SIGN_TOL {
        let ratio = -k / m;
        if ratio > SIGN_TOL {
            return FixedPointSet::Isolated(vec![(0.0, ratio.sqrt())]);
        }
    }
    FixedPointSet::Empty
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicsClass {
    Attracting,
    Repelling,
    Unclassified,
}

impl fmt::Display for DynamicsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DynamicsClass::Attracting => "Attracting",
            DynamicsClass::Repelling => "Repelling",
            DynamicsClass::Unclassified => "Unclassified",
        })
    }
}

pub fn classify_dynamics(nd: &NormalizedContactData) -> DynamicsClass {
    let (m, k) = (nd.c2_13(), nd.c3_12());
    if k > SIGN_TOL && m < -SIGN_TOL {
        DynamicsClass::Attracting
    } else if k < -SIGN_TOL && m > SIGN_TOL {
        DynamicsClass::Repelling
    } else {
        DynamicsClass::Unclassified
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub a: f64,
    pub c: f64,
    pub da: f64,
    pub dc: f64,
}

fn nodes(lo: f64, hi: f64, n: usize, open_at_zero: bool) -> Vec<f64> {
    if open_at_zero {
        return (0..n).map(|j| hi * (j + 1) as f64 / n as f64).collect();
    }
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

/// Normalized vector field on an `N × M` grid. A lower `c` bound of exactly 0 is
/// read as the half-open range `(0, hi]`.
pub fn phase_field(
    nd: &NormalizedContactData,
    a_range: (f64, f64),
    c_range: (f64, f64),
    grid: (usize, usize),
) -> Result<Vec<PhaseSample>> {
    let (n, m) = grid;
    if n == 0 || m == 0 {
        return Err(Error::InvalidOptions(format!("empty grid {n}x{m}")));
    }
    if !(a_range.0 <= a_range.1) || !a_range.0.is_finite() || !a_range.1.is_finite() {
        return Err(Error::InvalidOptions(format!("bad a-range {}:{}", a_range.0, a_range.1)));
    }
    if !(c_range.0 >= 0.0) {
        return Err(Error::DomainViolation { field: "c", value: c_range.0 });
    }
    if !(c_range.1 > 0.0) || c_range.1 < c_range.0 || !c_range.1.is_finite() {
        return Err(Error::DomainViolation { field: "c", value: c_range.1 });
    }
    let a_nodes = nodes(a_range.0, a_range.1, n, false);
    let c_nodes = nodes(c_range.0, c_range.1, m, c_range.0 == 0.0);
    let mut out = Vec::with_capacity(n * m);
    for &a in &a_nodes {
        for &c in &c_nodes {
            let (da, dc) = normalized_rate(nd, a, c);
            out.push(PhaseSample { a, c, da, dc });
        }
    }
    Ok(out)
}

/// `E_H = W B² vol0`.
pub fn einstein_hilbert(nd: &NormalizedContactData, s: &FlowState, vol0: f64) -> Result<f64> {
    Ok(invariants_at(nd, s)?.webster * s.b_sq * s.b_sq * vol0)
}

/// `dE_H/dt` along the unnormalized flow, `-2(W² + κ|A_{11}|²) B² vol0`.
pub fn einstein_hilbert_rate(nd: &NormalizedContactData, s: &FlowState, vol0: f64, kappa: f64) -> Result<f64> {
    let inv = invariants_at(nd, s)?;
    Ok(-2.0 * (inv.webster.powi(2) + kappa * inv.torsion.norm_sqr()) * s.b_sq * s.b_sq * vol0)
}

/// Residuals of the `E_H` derivative identity for `κ_A = 1` and `κ_A = 2` on the
/// torus family, whose trajectory `c = e^t, B = e^{-t}` is known exactly.
pub fn kappa_residuals() -> Result<(f64, f64)> {
    let nd = NormalizedContactData::new(0.0, 0.0, 1.0, 0.0)?;
    let h = 1e-4;
    let state = |t: f64| -> Result<FlowState> {
        let (c, b_sq) = pdq_closed_form(0.0, 1.0, 1.0, t)?;
        Ok(FlowState::new(0.0, c, b_sq))
    };
    let (mut r1, mut r2) = (0.0_f64, 0.0_f64);
    for i in 1..=10 {
        let t = 0.1 * i as f64;
        let fd = (einstein_hilbert(&nd, &state(t + h)?, 1.0)? - einstein_hilbert(&nd, &state(t - h)?, 1.0)?) / (2.0 * h);
        let s = state(t)?;
        let scale = fd.abs().max(1e-300);
        r1 = r1.max((fd - einstein_hilbert_rate(&nd, &s, 1.0, 1.0)?).abs() / scale);
        r2 = r2.max((fd - einstein_hilbert_rate(&nd, &s, 1.0, 2.0)?).abs() / scale);
    }
    Ok((r1, r2))
}

/// Selects `κ_A ∈ {1, 2}` from [`kappa_residuals`] at relative tolerance `tol`.
pub fn calibrate_kappa_a(tol: f64) -> Result<f64> {
    let (r1, r2) = kappa_residuals()?;
    match (r1 < tol, r2 < tol) {
        (true, false) => Ok(1.0),
        (false, true) => Ok(2.0),
        _ => Err(Error::CalibrationAmbiguous {
            residual_k1: r1,
            residual_k2: r2,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationReport {
    pub times: Vec<f64>,
    /// `max |Ẇ_fd - 2(W² - κ|A_{11}|²)| / (1 + |rhs|)`
    pub w_residual: f64,
    /// same for `Ȧ_{11} = 2W A_{11} - i A_{11,0}` with `A_{11,0} = 2i c_θ A_{11}`
    pub a_residual: f64,
    /// W residuals for κ_A = 1 and 2
    pub w_residual_by_kappa: [f64; 2],
    pub kappa_a: f64,
}

/// Tolerance used to decide whether a κ_A candidate matches.
pub const VARIATION_TOL: f64 = 1e-6;

/// Finite-difference check of the curvature and torsion evolution along the
/// unnormalized flow from `s0`, sampled at interior times of `[0, t_end]`.
/// Only meaningful for unimodular constants: otherwise the double divergence of
/// `A` that the reduction drops does not vanish.
pub fn variation_identity_check(
    nd: &NormalizedContactData,
    s0: &FlowState,
    h: f64,
    t_end: f64,
) -> Result<VariationReport> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::InvalidParameter { name: "h", value: h });
    }
    if !(t_end > 2.0 * h) {
        return Err(Error::InvalidParameter { name: "t_end", value: t_end });
    }
    let kind = FlowKind::Unnormalized;
    let samples = 20;
    let opts = IntegratorOptions {
        samples,
        ..IntegratorOptions::default()
    };
    let traj = integrate(kind, nd, s0, t_end, &opts)?;
    let mut times = Vec::new();
    let mut wr = [0.0_f64; 2];
    let mut ar = 0.0_f64;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t <= h || *t >= t_end - h {
            continue;
        }
        let fwd = flow_map(kind, nd, s, h)?;
        let bwd = flow_map(kind, nd, s, -h)?;
        let (ip, im, i0) = (invariants_at(nd, &fwd)?, invariants_at(nd, &bwd)?, invariants_at(nd, s)?);
        let w_fd = (ip.webster - im.webster) / (2.0 * h);
        // The evolution law holds in the frame transported by `Ż_1 = W Z_1 - i A Z_1̄`,
        // which has no phase rotation; remove the rotation of the formula frame.
        let frame = |st: &FlowState| -> Result<_> { complex_frame(nd, &st.params()?) };
        let (zp, zm) = (frame(&fwd)?.z1_invariant(), frame(&bwd)?.z1_invariant());
        let theta1 = frame(s)?.theta1_invariant();
        let alpha: Complex64 = (0..3).map(|i| theta1[i] * (zp[i] - zm[i])).sum::<Complex64>() / (2.0 * h);
        let a_fd = (ip.a11() - im.a11()) / (2.0 * h) - Complex64::new(0.0, 2.0 * alpha.im) * i0.a11();
        for (slot, kappa) in [1.0, 2.0].iter().enumerate() {
            let rhs = 2.0 * (i0.webster.powi(2) - kappa * i0.a11().norm_sqr());
            wr[slot] = wr[slot].max((w_fd - rhs).abs() / (1.0 + rhs.abs()));
        }
        let a110 = Complex64::new(0.0, 2.0) * i0.c_theta * i0.a11();
        let a_rhs = 2.0 * i0.webster * i0.a11() - Complex64::new(0.0, 1.0) * a110;
        ar = ar.max((a_fd - a_rhs).norm() / (1.0 + a_rhs.norm()));
        times.push(*t);
    }
    let kappa_a = match (wr[0] < VARIATION_TOL, wr[1] < VARIATION_TOL) {
        (true, true) => KAPPA_A,
        (true, false) => 1.0,
        (false, true) => 2.0,
        (false, false) => {
            return Err(Error::CalibrationAmbiguous {
                residual_k1: wr[0],
                residual_k2: wr[1],
            })
        }
    };
    Ok(VariationReport {
        times,
        w_residual: wr[if kappa_a == 1.0 { 0 } else { 1 }],
        a_residual: ar,
        w_residual_by_kappa: wr,
        kappa_a,
    })
}
