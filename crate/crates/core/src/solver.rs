//! Time integration of the flows with blow-up, domain-exit and convergence events.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{fixed_points, invariants_at, rhs, FixedPointSet, FlowKind, FlowState, StateField, TAU_MIN};
use crate::lie_algebra::NormalizedContactData;

type Y = [f64; 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step Runge-Kutta, step `dt`.
    Rk4,
    /// Adaptive Dormand-Prince 5(4).
    Rk45,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Step for RK4; initial step guess for RK45 when positive.
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub blowup_threshold: f64,
    pub dt_min: f64,
    pub convergence_radius: f64,
    pub convergence_rhs_tol: f64,
    /// Number of equispaced output times on `[0, t_end]`.
    pub samples: usize,
    /// Upper bound on RK45 steps; defaults to the output spacing.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Stop at the first convergence instead of integrating to `t_end`.
    pub stop_on_convergence: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            dt: 0.0,
            rtol: 1e-10,
            atol: 1e-12,
            blowup_threshold: 1e9,
            dt_min: 1e-12,
            convergence_radius: 1e-8,
            convergence_rhs_tol: 1e-10,
            samples: 200,
            max_step: None,
            max_steps: 20_000_000,
            stop_on_convergence: false,
        }
    }
}

impl IntegratorOptions {
    pub fn rk4(dt: f64) -> Self {
        Self {
            method: Method::Rk4,
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOptions(msg));
        if self.method == Method::Rk4 && !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("RK4 needs a positive dt, got {}", self.dt));
        }
        if !(self.dt >= 0.0) {
            return bad(format!("dt must be non-negative, got {}", self.dt));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return bad(format!("tolerances must be positive (rtol {}, atol {})", self.rtol, self.atol));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!("blowup threshold must be positive, got {}", self.blowup_threshold));
        }
        if !(self.dt_min > 0.0) {
            return bad(format!("dt_min must be positive, got {}", self.dt_min));
        }
        if !(self.convergence_radius > 0.0) || !(self.convergence_rhs_tol > 0.0) {
            return bad("convergence tolerances must be positive".to_string());
        }
        if self.samples < 2 {
            return bad(format!("need at least 2 samples, got {}", self.samples));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad(format!("max_step must be positive, got {h}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalEvent {
    Completed,
    Converged { point: (f64, f64), time: f64 },
    BlowUp { time: f64, field: StateField },
    DomainExit { field: StateField, time: f64 },
}

impl TerminalEvent {
    /// One-line description, e.g. `domain_exit field=B t=0.5`.
    pub fn describe(&self) -> String {
        match self {
            TerminalEvent::Completed => "completed".to_string(),
            TerminalEvent::Converged { point, time } => {
                format!("converged point=({:.12},{:.12}) t={time:.12}", point.0, point.1)
            }
            TerminalEvent::BlowUp { time, field } => format!("blow_up field={field} t={time:.12}"),
            TerminalEvent::DomainExit { field, time } => format!("domain_exit field={field} t={time:.12}"),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, TerminalEvent::BlowUp { .. } | TerminalEvent::DomainExit { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSample {
    /// `A^1_{1̄}`
    pub torsion: Complex64,
    pub webster: f64,
    /// `W B²` with unit base volume.
    pub einstein_hilbert: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub times: Vec<f64>,
    pub states: Vec<FlowState>,
    pub invariant_samples: Vec<InvariantSample>,
    pub terminal_event: TerminalEvent,
    /// Time of the last accepted step.
    pub t_final: f64,
    pub final_state: FlowState,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// ODE in internal coordinates. For the coupled flows `B` and `τ` are carried as
/// logarithms, which makes the normalization integral a linear invariant that
/// Runge-Kutta steps preserve to rounding.
struct System<'a> {
    kind: FlowKind,
    nd: &'a NormalizedContactData,
    template: FlowState,
    active: [bool; 5],
    log: [bool; 5],
}

impl<'a> System<'a> {
    fn new(kind: FlowKind, nd: &'a NormalizedContactData, template: &FlowState) -> Self {
        let active = [true, true, true, template.phi.is_some(), template.tau.is_some()];
        let coupled = kind.needs_phi();
        Self {
            kind,
            nd,
            template: *template,
            active,
            log: [false, false, coupled, false, coupled && active[4]],
        }
    }

    fn phys(&self, y: &Y) -> Y {
        let mut out = *y;
        for i in 0..5 {
            if self.log[i] {
                out[i] = y[i].exp();
            }
        }
        out
    }

    fn internal(&self, p: &Y) -> Y {
        let mut out = *p;
        for i in 0..5 {
            if self.log[i] {
                out[i] = p[i].ln();
            }
        }
        out
    }

    fn eval(&self, y: &Y) -> Option<Y> {
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let p = self.phys(y);
        let s = FlowState::unpack(&p, &self.template);
        if self.tau_floor() && s.tau.is_some_and(|t| t <= TAU_MIN) {
            return None;
        }
        let mut r = rhs(self.kind, self.nd, &s).ok()?.pack();
        for i in 0..5 {
            if self.log[i] {
                r[i] /= p[i];
            }
        }
        if r.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(r)
    }

    fn tau_floor(&self) -> bool {
        self.kind == FlowKind::CoupledWMinus
    }

    fn in_domain(&self, y: &Y) -> bool {
        let p = self.phys(y);
        p[1] > 0.0 && p[2] > 0.0 && (!self.active[4] || p[4] > if self.tau_floor() { TAU_MIN } else { 0.0 })
    }

    /// Linear estimate of the time until a positivity constraint is violated.
    fn time_to_boundary(&self, y: &Y, f: &Y) -> (f64, StateField) {
        let p = self.phys(y);
        let mut rate = *f;
        for i in 0..5 {
            if self.log[i] {
                rate[i] *= p[i];
            }
        }
        let mut best = (f64::INFINITY, StateField::B);
        let mut consider = |v: f64, lower: f64, rate: f64, field: StateField| {
            if rate < 0.0 {
                let est = (v - lower) / -rate;
                if est < best.0 {
                    best = (est, field);
                }
            }
        };
        consider(p[1], 0.0, rate[1], StateField::C);
        consider(p[2], 0.0, rate[2], StateField::B);
        if self.active[4] {
            consider(p[4], if self.tau_floor() { TAU_MIN } else { 0.0 }, rate[4], StateField::Tau);
        }
        best
    }

    fn state(&self, y: &Y) -> FlowState {
        FlowState::unpack(&self.phys(y), &self.template)
    }
}

fn axpy(y: &Y, h: f64, terms: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..5 {
            out[i] += h * coef * k[i];
        }
    }
    out
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step. Returns `(y_new, f(y_new), error estimate)`.
fn dopri_step(sys: &System, y: &Y, k1: &Y, h: f64) -> Option<(Y, Y, Y)> {
    let k2 = sys.eval(&axpy(y, h, &[(A21, k1)]))?;
    let k3 = sys.eval(&axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = sys.eval(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = sys.eval(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = sys.eval(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    if !sys.in_domain(&y_new) {
        return None;
    }
    let k7 = sys.eval(&y_new)?;
    let mut err = [0.0; 5];
    for i in 0..5 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Some((y_new, k7, err))
}

fn rk4_step(sys: &System, y: &Y, k1: &Y, h: f64) -> Option<Y> {
    let k2 = sys.eval(&axpy(y, h, &[(0.5, k1)]))?;
    let k3 = sys.eval(&axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = sys.eval(&axpy(y, h, &[(1.0, &k3)]))?;
    let y_new = axpy(y, h, &[(1.0 / 6.0, k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    if sys.in_domain(&y_new) {
        Some(y_new)
    } else {
        None
    }
}

fn hermite(t0: f64, y0: &Y, f0: &Y, t1: f64, y1: &Y, f1: &Y, t: f64) -> Y {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = y0[i] + h01 * (y1[i] - y0[i]) + h10 * h * f0[i] + h11 * h * f1[i];
    }
    out
}

struct Recorder<'a> {
    sys: &'a System<'a>,
    sample_times: Vec<f64>,
    next: usize,
    times: Vec<f64>,
    states: Vec<FlowState>,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, y: &Y) {
        self.times.push(t);
        self.states.push(self.sys.state(y));
    }

    /// Emits all sample times in `(t0, t1]`.
    fn step(&mut self, t0: f64, y0: &Y, f0: &Y, t1: f64, y1: &Y, f1: &Y) {
        while self.next < self.sample_times.len() && self.sample_times[self.next] <= t1 {
            let ts = self.sample_times[self.next];
            let y = if ts == t1 {
                *y1
            } else {
                let yi = hermite(t0, y0, f0, t1, y1, f1, ts);
                if self.sys.in_domain(&yi) {
                    yi
                } else {
                    let w = (ts - t0) / (t1 - t0);
                    let mut lin = [0.0; 5];
                    for i in 0..5 {
                        lin[i] = (1.0 - w) * y0[i] + w * y1[i];
                    }
                    lin
                }
            };
            self.push(ts, &y);
            self.next += 1;
        }
    }

    fn finish(&mut self, t: f64, y: &Y) {
        if self.times.last().is_none_or(|&last| t > last) {
            self.push(t, y);
        }
    }
}

fn weighted_norm(sys: &System, err: &Y, y0: &Y, y1: &Y, opts: &IntegratorOptions) -> f64 {
    let mut acc = 0.0;
    let mut n = 0;
    for i in 0..5 {
        if sys.active[i] {
            let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
            acc += (err[i] / sc).powi(2);
            n += 1;
        }
    }
    (acc / n as f64).sqrt()
}

/// Integrates `kind` from `s0` over `[0, t_end]`.
pub fn integrate(
    kind: FlowKind,
    nd: &NormalizedContactData,
    s0: &FlowState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidOptions(format!("t_end must be positive, got {t_end}")));
    }
    rhs(kind, nd, s0)?;
    if kind == FlowKind::CoupledWMinus && s0.tau.is_some_and(|t| t <= TAU_MIN) {
        return Err(Error::DomainViolation { field: "tau", value: s0.tau.unwrap_or(0.0) });
    }
    let sys = System::new(kind, nd, s0);
    let target = match (kind, fixed_points(nd)) {
        (FlowKind::Normalized, FixedPointSet::Isolated(pts)) => pts.first().copied(),
        _ => None,
    };

    let n = opts.samples;
    let sample_times: Vec<f64> = (0..n).map(|j| t_end * j as f64 / (n - 1) as f64).collect();
    let mut rec = Recorder {
        sys: &sys,
        sample_times,
        next: 1,
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
    };

    let mut t = 0.0;
    let mut y = sys.internal(&s0.pack());
    let mut f = sys.eval(&y).ok_or_else(|| Error::IntegratorFailure("initial rhs not finite".into()))?;
    rec.push(0.0, &y);

    let max_step = opts.max_step.unwrap_or(t_end / (n - 1) as f64);
    let mut h = match opts.method {
        Method::Rk4 => opts.dt,
        Method::Rk45 if opts.dt > 0.0 => opts.dt,
        Method::Rk45 => {
            let d0 = sys.active.iter().zip(&y).filter(|p| *p.0).map(|p| p.1.abs()).fold(0.0, f64::max);
            let d1 = sys.active.iter().zip(&f).filter(|p| *p.0).map(|p| p.1.abs()).fold(0.0, f64::max);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    };
    if opts.method == Method::Rk45 {
        h = h.min(max_step);
    }
    h = h.min(t_end);

    let mut event = TerminalEvent::Completed;
    let mut converged: Option<f64> = None;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let end_slack = 1e-14 * t_end.max(1.0);

    'outer: while t < t_end - end_slack {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::IntegratorFailure(format!("step limit {} reached at t={t}", opts.max_steps)));
        }
        let (est, boundary_field) = sys.time_to_boundary(&y, &f);
        if est < opts.dt_min {
            event = TerminalEvent::DomainExit {
                field: boundary_field,
                time: t + est,
            };
            break;
        }
        let remaining = t_end - t;
        let mut step = h.min(remaining);
        if opts.method == Method::Rk45 {
            step = step.min(max_step);
        }
        if remaining - step <= end_slack {
            step = remaining;
        }

        let attempt = match opts.method {
            Method::Rk45 => dopri_step(&sys, &y, &f, step).map(|(y1, f1, err)| {
                let e = weighted_norm(&sys, &err, &y, &y1, opts);
                (y1, f1, e)
            }),
            Method::Rk4 => rk4_step(&sys, &y, &f, step).and_then(|y1| sys.eval(&y1).map(|f1| (y1, f1, 0.0))),
        };

        let Some((y1, f1, err)) = attempt else {
            rejected += 1;
            if opts.method == Method::Rk4 {
                event = singular_event(&sys, t, &y, &f, est, boundary_field);
                break;
            }
            h = if est.is_finite() { (0.5 * step).min(0.5 * est) } else { 0.25 * step };
            if h < opts.dt_min {
                event = singular_event(&sys, t, &y, &f, est, boundary_field);
                break;
            }
            continue;
        };

        if opts.method == Method::Rk45 && err > 1.0 {
            rejected += 1;
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h = step * factor;
            if h < opts.dt_min {
                event = singular_event(&sys, t, &y, &f, est, boundary_field);
                break;
            }
            continue;
        }

        accepted += 1;
        let t1 = if step == remaining { t_end } else { t + step };
        rec.step(t, &y, &f, t1, &y1, &f1);
        t = t1;
        y = y1;
        f = f1;

        let p = sys.phys(&y);
        for (i, field) in StateField::ALL.iter().enumerate() {
            if sys.active[i] && p[i].abs() > opts.blowup_threshold {
                event = TerminalEvent::BlowUp { time: t, field: *field };
                break 'outer;
            }
        }
        if let (Some(p), None) = (target, converged) {
            let dist = (y[0] - p.0).hypot(y[1] - p.1);
            let speed = f[0].abs().max(f[1].abs());
            if dist < opts.convergence_radius && speed < opts.convergence_rhs_tol {
                converged = Some(t);
                if opts.stop_on_convergence {
                    break;
                }
            }
        }
        if opts.method == Method::Rk45 {
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
        }
    }

    if let (TerminalEvent::Completed, Some(time), Some(point)) = (event, converged, target) {
        event = TerminalEvent::Converged { point, time };
    }
    rec.finish(t, &y);
    let Recorder { times, states, .. } = rec;
    let invariant_samples = states
        .iter()
        .map(|s| {
            let inv = invariants_at(nd, s)?;
            Ok(InvariantSample {
                torsion: inv.torsion,
                webster: inv.webster,
                einstein_hilbert: inv.webster * s.b_sq * s.b_sq,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        kind,
        times,
        states,
        invariant_samples,
        terminal_event: event,
        t_final: t,
        final_state: sys.state(&y),
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn singular_event(sys: &System, t: f64, y: &Y, f: &Y, est: f64, field: StateField) -> TerminalEvent {
    if est <= 1e-6 {
        return TerminalEvent::DomainExit { field, time: t + est };
    }
    let mut worst = (0.0, StateField::A);
    for (i, fld) in StateField::ALL.iter().enumerate() {
        if sys.active[i] && f[i].abs() > worst.0 {
            worst = (f[i].abs(), *fld);
        }
    }
    let _ = y;
    TerminalEvent::BlowUp { time: t, field: worst.1 }
}

/// Short flow map `s ↦ s(h)` by RK4 with substeps small against the local rate;
/// `h` may be negative.
pub fn flow_map(kind: FlowKind, nd: &NormalizedContactData, s: &FlowState, h: f64) -> Result<FlowState> {
    let sys = System::new(kind, nd, s);
    let mut y = sys.internal(&s.pack());
    let f0 = rhs(kind, nd, s)?.pack();
    let speed = f0.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let n = ((h.abs() * speed / 1e-4).ceil() as usize).max(1);
    let dt = h / n as f64;
    for _ in 0..n {
        let f = sys
            .eval(&y)
            .ok_or(Error::DomainViolation { field: "state", value: f64::NAN })?;
        y = rk4_step(&sys, &y, &f, dt).ok_or(Error::DomainViolation { field: "state", value: f64::NAN })?;
    }
    Ok(sys.state(&y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{normalized_a0_blowup_time, pdq_closed_form};
    use crate::presets::preset;

    fn pdq(k: f64) -> NormalizedContactData {
        NormalizedContactData::new(-k, 0.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn heisenberg_is_constant() {
        let h = NormalizedContactData::heisenberg();
        let s0 = FlowState::new(0.3, 1.7, 0.6);
        let traj = integrate(FlowKind::Unnormalized, &h, &s0, 5.0, &IntegratorOptions::default()).unwrap();
        assert_eq!(traj.terminal_event, TerminalEvent::Completed);
        assert!(traj.states.iter().all(|s| *s == s0));
        assert_eq!(traj.times.len(), 200);
        assert_eq!(*traj.times.last().unwrap(), 5.0);
    }

    #[test]
    fn su2_converges() {
        let traj = integrate(FlowKind::Normalized, &pdq(1.0), &FlowState::new(0.0, 2.0, 1.0), 50.0, &IntegratorOptions::default())
            .unwrap();
        match traj.terminal_event {
            TerminalEvent::Converged { point, time } => {
                assert_eq!(point, (0.0, 1.0));
                assert!(time < 50.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_pdq_exits_through_b() {
        let traj =
            integrate(FlowKind::Unnormalized, &pdq(1.0), &FlowState::new(0.0, 1.0, 1.0), 2.0, &IntegratorOptions::default()).unwrap();
        match traj.terminal_event {
            TerminalEvent::DomainExit { field, time } => {
                assert_eq!(field, StateField::B);
                assert!((time - 0.5).abs() < 1e-10, "{time}");
            }
            other => panic!("{other:?}"),
        }
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.b_sq - (1.0 - 2.0 * t)).abs() < 1e-10);
            assert!((s.c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn times_strictly_increase() {
        let traj =
            integrate(FlowKind::Normalized, &pdq(-1.0), &FlowState::new(0.0, 1.0, 1.0), 3.0, &IntegratorOptions::default()).unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.states.iter().all(|s| s.check().is_ok()));
    }

    #[test]
    fn riccati_blowup_time() {
        let traj =
            integrate(FlowKind::Normalized, &pdq(-1.0), &FlowState::new(0.0, 1.0, 1.0), 3.0, &IntegratorOptions::default()).unwrap();
        let t_star = normalized_a0_blowup_time(-1.0, 1.0).unwrap();
        match traj.terminal_event {
            TerminalEvent::BlowUp { time, field } => {
                assert_eq!(field, StateField::C);
                assert!((time - t_star).abs() < 1e-4, "{time} vs {t_star}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let exact = pdq_closed_form(0.0, 1.0, 1.0, 1.0).unwrap();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt| {
                let traj = integrate(FlowKind::Unnormalized, &pdq(0.0), &FlowState::new(0.0, 1.0, 1.0), 1.0, &IntegratorOptions::rk4(dt))
                    .unwrap();
                let s = traj.final_state;
                (s.c - exact.0).abs().max((s.b_sq - exact.1).abs())
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 4.0).abs() < 0.3, "{errs:?}");
        }
    }

    #[test]
    fn rossi_flows_to_standard() {
        let (nd, s0) = preset("rossi", Some(0.5)).unwrap();
        let traj = integrate(FlowKind::Normalized, &nd, &s0, 50.0, &IntegratorOptions::default()).unwrap();
        let s = traj.states.last().unwrap();
        assert!(s.a.abs() < 1e-6 && (s.c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_options() {
        let h = NormalizedContactData::heisenberg();
        let s = FlowState::new(0.0, 1.0, 1.0);
        assert!(matches!(integrate(FlowKind::Unnormalized, &h, &s, 1.0, &IntegratorOptions::rk4(0.0)), Err(Error::InvalidOptions(_))));
        let opts = IntegratorOptions {
            rtol: -1.0,
            ..IntegratorOptions::default()
        };
        assert!(integrate(FlowKind::Unnormalized, &h, &s, 1.0, &opts).is_err());
        assert!(integrate(FlowKind::Unnormalized, &h, &s, 0.0, &IntegratorOptions::default()).is_err());
        assert!(matches!(
            integrate(FlowKind::CoupledF, &h, &s, 1.0, &IntegratorOptions::default()),
            Err(Error::MissingField { .. })
        ));
    }

    #[test]
    fn flow_map_roundtrip() {
        let nd = pdq(0.5);
        let s = FlowState::new(0.2, 1.1, 0.9);
        let fwd = flow_map(FlowKind::Unnormalized, &nd, &s, 1e-3).unwrap();
        let back = flow_map(FlowKind::Unnormalized, &nd, &fwd, -1e-3).unwrap();
        assert!((back.a - s.a).abs() < 1e-14 && (back.c - s.c).abs() < 1e-14 && (back.b_sq - s.b_sq).abs() < 1e-14);
    }
}
