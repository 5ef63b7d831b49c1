//! End-to-end checks, one line per criterion. Runs without the libtest harness so
//! the report is always printed; exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use crflow::closed_form::{pdq_closed_form, pdq_exit_time, prequant_closed_form};
use crflow::entropy::{functional_value, run_with_report, EntropyConfig, EntropyKind, MONOTONE_SLACK};
use crflow::flow::{
    calibrate_kappa_a, classify_dynamics, einstein_hilbert, einstein_hilbert_rate, fixed_points, invariants_at,
    phase_field, variation_identity_check, DynamicsClass, FixedPointSet, VARIATION_TOL,
};
use crflow::lie_algebra::{classify_geometry, Geometry};
use crflow::presets::preset;
use crflow::pseudohermitian::{
    invariants_closed_form, invariants_from_structure_equations, lie_derivative_reeb_j, mat2_mul, rescale_b,
    j_endomorphism, torsion_tensor_matrix,
};
use crflow::solver::flow_map;
use crflow::{integrate, CRParameters, FlowKind, FlowState, IntegratorOptions, NormalizedContactData, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn nd(m: f64, k: f64) -> NormalizedContactData {
    NormalizedContactData::new(m, 0.0, k, 0.0).unwrap()
}

fn random_normalized(rng: &mut ChaCha8Rng) -> NormalizedContactData {
    let mut v = [0.0; 4];
    for x in &mut v {
        *x = rng.random_range(-2.0..2.0);
    }
    let [mut m, mut p, mut k, mut q] = v;
    if rng.random_bool(0.5) {
        q = 0.0;
    } else {
        m = 0.0;
    }
    if rng.random_bool(0.5) {
        p = 0.0;
    } else {
        k = 0.0;
    }
    NormalizedContactData::new(m, p, k, q).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> CRParameters {
    CRParameters::new(rng.random_range(-3.0..3.0), rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)).unwrap()
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1e-300)
}

fn c1_oracle_equivalence() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = random_normalized(&mut rng);
        let p = random_params(&mut rng);
        let x = invariants_closed_form(&n, &p)?;
        let y = invariants_from_structure_equations(&n, &p)?;
        let pairs = [
            (x.c_theta, y.c_theta),
            (x.webster, y.webster),
            (x.c_z.re, y.c_z.re),
            (x.c_z.im, y.c_z.im),
            (x.torsion.re, y.torsion.re),
            (x.torsion.im, y.torsion.im),
        ];
        for (u, v) in pairs {
            worst = worst.max((u - v).abs() / (1.0 + u.abs()));
        }
    }
    outcome(worst < 1e-12, format!("1000 inputs, max scaled deviation {worst:.2e}"))
}

fn c2_pdq_closed_form() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for &k in &[-1.0, 0.0, 1.0] {
        for &c0 in &[0.5, 1.0, 2.0] {
            let t_end = pdq_exit_time(k, c0, 1.0).map_or(1.0, |t| (0.9 * t).min(1.0));
            let traj = integrate(FlowKind::Unnormalized, &nd(-k, 1.0), &FlowState::new(0.0, c0, 1.0), t_end, &IntegratorOptions::default())?;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let (c, b) = pdq_closed_form(k, c0, 1.0, *t)?;
                worst = worst.max(rel(s.c, c)).max(rel(s.b_sq, b));
            }
        }
    }
    let traj = integrate(FlowKind::Unnormalized, &nd(-1.0, 1.0), &FlowState::new(0.0, 1.0, 1.0), 0.45, &IntegratorOptions::default())?;
    let mut degenerate = 0.0_f64;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        degenerate = degenerate.max((s.b_sq - (1.0 - 2.0 * t)).abs()).max((s.c - 1.0).abs());
    }
    outcome(
        worst < 1e-8 && degenerate < 1e-10,
        format!("max rel error {worst:.2e}, K=1 c0=1 abs error {degenerate:.2e}"),
    )
}

fn c3_prequant_closed_form() -> Result<Outcome> {
    let (mut free, mut generic) = (0.0_f64, 0.0_f64);
    for &k in &[-1.0, 1.0] {
        let n = nd(-k, 1.0 / k);
        let t_end = if k > 0.0 { 0.45 } else { 1.0 };
        let traj = integrate(FlowKind::Unnormalized, &n, &FlowState::new(0.0, 1.0 / k.abs(), 1.0), t_end, &IntegratorOptions::default())?;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            free = free.max((s.b_sq - (1.0 - 2.0 * k.signum() * t)).abs()).max((s.c - 1.0).abs());
        }
        for &c0 in &[0.5, 2.0] {
            let traj = integrate(FlowKind::Unnormalized, &n, &FlowState::new(0.0, c0, 1.0), 1.0, &IntegratorOptions::default())?;
            let horizon = if traj.terminal_event.is_singular() { 0.9 * traj.t_final } else { 1.0 };
            for (t, s) in traj.times.iter().zip(&traj.states).filter(|(t, _)| **t <= horizon) {
                let (c, b) = prequant_closed_form(k, c0, 1.0, *t)?;
                generic = generic.max(rel(s.c, c)).max(rel(s.b_sq, b));
            }
        }
    }
    outcome(
        free < 1e-10 && generic < 1e-8,
        format!("torsion-free abs error {free:.2e}, generic rel error {generic:.2e}"),
    )
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

fn c4_convergence() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let mut runs = 0;
    for n in [nd(-1.0, 1.0), nd(-0.5, 2.0), nd(-1.7, 0.3)] {
        let target = (-n.c3_12() / n.c2_13()).sqrt();
        for &a in &grid(-2.0, 2.0, 5) {
            for &c in &grid(0.25, 4.0, 5) {
                let traj = integrate(FlowKind::Normalized, &n, &FlowState::new(a, c, 1.0), 50.0, &IntegratorOptions::default())?;
                let f = traj.final_state;
                let d = if traj.terminal_event.is_singular() {
                    f64::INFINITY
                } else {
                    f.a.hypot(f.c - target)
                };
                worst = worst.max(d);
                runs += 1;
            }
        }
    }
    outcome(worst < 1e-6, format!("{runs} starts, max distance at t=50 {worst:.2e}"))
}

fn c5_repelling() -> Result<Outcome> {
    let (n, _) = preset("sl2_hyperbolic", None)?;
    let dynamics = classify_dynamics(&n);
    let mut escaped = 0;
    for &a in &[-2.0, -1.0, 0.0, 0.7, 1.9] {
        for &c in &[0.25, 0.6, 1.3, 2.2, 4.0] {
            let traj = integrate(FlowKind::Normalized, &n, &FlowState::new(a, c, 1.0), 50.0, &IntegratorOptions::default())?;
            if traj.terminal_event.is_singular() {
                escaped += 1;
            }
        }
    }
    let traj = integrate(FlowKind::Normalized, &n, &FlowState::new(0.0, 1.0, 1.0), 10.0, &IntegratorOptions::default())?;
    let drift = traj.states.iter().map(|s| s.a.hypot(s.c - 1.0)).fold(0.0, f64::max);
    let field = phase_field(&n, (-2.0, 2.0), (0.0, 4.0), (41, 40))?;
    let violations = field.iter().filter(|p| p.a != 0.0 && !(p.a * p.da > 0.0)).count();
    outcome(
        dynamics == DynamicsClass::Repelling && escaped == 25 && drift < 1e-9 && traj.t_final == 10.0 && violations == 0,
        format!("{escaped}/25 singular, fixed-point drift {drift:.2e}, sign-law violations {violations}/{}", field.len()),
    )
}

fn c6_rossi() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for &t in &[0.1, 0.5, 0.9] {
        let (n, s0) = preset("rossi", Some(t))?;
        let traj = integrate(FlowKind::Normalized, &n, &s0, 50.0, &IntegratorOptions::default())?;
        let f = traj.final_state;
        worst = worst.max(f.a.hypot(f.c - 1.0));
    }
    outcome(worst < 1e-6, format!("max distance from (0,1) at t=50 {worst:.2e}"))
}

fn c7_heisenberg() -> Result<Outcome> {
    let h = NormalizedContactData::heisenberg();
    let mut worst = 0.0_f64;
    for s0 in [FlowState::new(0.0, 1.0, 1.0), FlowState::new(0.8, 2.5, 0.3)] {
        let s0 = s0.with_phi(0.4).with_tau(25.0);
        for kind in FlowKind::ALL {
            let traj = integrate(kind, &h, &s0, 10.0, &IntegratorOptions::default())?;
            if traj.terminal_event.is_singular() {
                worst = f64::INFINITY;
            }
            for s in &traj.states {
                worst = worst.max((s.a - s0.a).abs()).max((s.c - s0.c).abs()).max((s.b_sq - s0.b_sq).abs());
            }
        }
    }
    outcome(worst < 1e-12, format!("five kinds, max deviation of (a,c,B) {worst:.2e}"))
}

fn c8_gradient_flow() -> Result<Outcome> {
    let kappa = calibrate_kappa_a(1e-4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-4;
    let (mut increase, mut residual) = (0.0_f64, 0.0_f64);
    let mut stable = true;
    let mut checked = 0;
    for _ in 0..50 {
        let n = nd(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let s0 = FlowState::new(rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let traj = integrate(FlowKind::Unnormalized, &n, &s0, 1.0, &IntegratorOptions::default())?;
        for w in traj.invariant_samples.windows(2) {
            increase = increase.max(w[1].einstein_hilbert - w[0].einstein_hilbert);
        }
        let horizon = 0.9 * traj.t_final;
        let mut by_kappa = [0.0_f64; 2];
        for (t, s) in traj.times.iter().zip(&traj.states) {
            if *t < h || *t > horizon {
                continue;
            }
            let fd = (einstein_hilbert(&n, &flow_map(FlowKind::Unnormalized, &n, s, h)?, 1.0)?
                - einstein_hilbert(&n, &flow_map(FlowKind::Unnormalized, &n, s, -h)?, 1.0)?)
                / (2.0 * h);
            for (slot, k) in [1.0, 2.0].into_iter().enumerate() {
                let rhs = einstein_hilbert_rate(&n, s, 1.0, k)?;
                by_kappa[slot] = by_kappa[slot].max((fd - rhs).abs() / (rhs.abs() + 1e-10));
            }
            checked += 1;
        }
        let own = if by_kappa[0] < 1e-4 && by_kappa[1] >= 1e-4 { Some(1.0) } else if by_kappa[1] < 1e-4 && by_kappa[0] >= 1e-4 { Some(2.0) } else { None };
        stable &= own == Some(kappa) || (by_kappa[0] < 1e-4 && by_kappa[1] < 1e-4);
        residual = residual.max(by_kappa[if kappa == 1.0 { 0 } else { 1 }]);
    }
    outcome(
        increase <= 1e-8 && residual < 1e-4 && stable,
        format!("kappa_A={kappa}, max step increase {increase:.2e}, max rel residual {residual:.2e} over {checked} samples, stable={stable}"),
    )
}

fn c9_entropy() -> Result<Outcome> {
    let mut pass = true;
    let mut notes = Vec::new();
    for kind in [FlowKind::CoupledF, FlowKind::CoupledWPlus, FlowKind::CoupledWMinus] {
        let functional = EntropyKind::for_flow(kind).unwrap();
        let mut weightings = Vec::new();
        let (mut violation, mut drift) = (0.0_f64, 0.0_f64);
        for name in ["su2", "sl2_hyperbolic"] {
            let (n, base) = preset(name, None)?;
            for s0 in [base, FlowState::new(0.3, 1.5, 1.0), FlowState::new(-0.6, 0.7, 2.0)] {
                let s0 = s0.with_tau(5.0);
                let r = run_with_report(kind, &n, &s0, 1.0, &EntropyConfig::new(functional))?;
                violation = violation.max(r.max_violation);
                drift = drift.max(r.constraint_drift);
                weightings.push(r.matched_weighting);
            }
        }
        let same = weightings.windows(2).all(|w| w[0] == w[1]);
        pass &= violation <= MONOTONE_SLACK && drift < 1e-9 && same;
        notes.push(format!(
            "{} max_violation {violation:.1e} drift {drift:.1e} weighting {}{}",
            functional.name(),
            weightings[0],
            if same { "" } else { " (inconsistent)" }
        ));
    }
    outcome(pass, notes.join("; "))
}

fn c10_w_rescaling() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let n = random_normalized(&mut rng);
        let s = FlowState::new(rng.random_range(-3.0..3.0), rng.random_range(0.1..10.0), rng.random_range(0.1..10.0))
            .with_phi(rng.random_range(-2.0..2.0))
            .with_tau(rng.random_range(0.1..10.0));
        for &lambda in &[0.5, 2.0, 10.0] {
            let scaled = FlowState { b_sq: lambda * s.b_sq, tau: s.tau.map(|t| lambda * t), ..s };
            for kind in [EntropyKind::WPlus, EntropyKind::WMinus] {
                let cfg = EntropyConfig::new(kind);
                let base = functional_value(&cfg, &s, invariants_at(&n, &s)?.webster)?;
                let v = functional_value(&cfg, &scaled, invariants_at(&n, &scaled)?.webster)?;
                worst = worst.max((v - base).abs() / (1.0 + base.abs()));
            }
        }
    }
    outcome(worst < 1e-12, format!("lambda in {{0.5,2,10}}, max deviation {worst:.2e}"))
}

fn c11_scaling_law() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = random_normalized(&mut rng);
        let p = random_params(&mut rng);
        let lambda = rng.random_range(0.2..5.0);
        let x = invariants_closed_form(&n, &p)?;
        let y = invariants_closed_form(&n, &rescale_b(&p, lambda)?)?;
        let l2 = lambda * lambda;
        worst = worst
            .max((y.torsion * l2 - x.torsion).norm() / (1.0 + x.torsion.norm()))
            .max((y.webster * l2 - x.webster).abs() / (1.0 + x.webster.abs()));
    }
    outcome(worst < 1e-14, format!("100 inputs, max deviation {worst:.2e}"))
}

fn c12_reeb_lie_derivative() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = random_normalized(&mut rng);
        let (a, c) = (rng.random_range(-3.0..3.0), rng.random_range(0.1..10.0));
        let inv = invariants_closed_form(&n, &CRParameters::new(a, 1.0, c)?)?;
        let lhs = lie_derivative_reeb_j(&n, a, c)?;
        let ja = mat2_mul(&j_endomorphism(a, c)?, &torsion_tensor_matrix(a, c, inv.a11()));
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((lhs[i][j] - 2.0 * ja[i][j]).abs() / (1.0 + lhs[i][j].abs()));
            }
        }
    }
    outcome(worst < 1e-12, format!("100 inputs, max entry deviation {worst:.2e}"))
}

fn c13_variation() -> Result<Outcome> {
    let (mut w, mut a) = (0.0_f64, 0.0_f64);
    let mut kappas = Vec::new();
    for &k in &[0.0, 1.0] {
        for s0 in [FlowState::new(0.0, 1.0, 1.0), FlowState::new(0.0, 0.6, 1.4), FlowState::new(0.4, 0.8, 1.2)] {
            let r = variation_identity_check(&nd(-k, 1.0), &s0, 1e-4, 0.4)?;
            w = w.max(r.w_residual);
            a = a.max(r.a_residual);
            kappas.push(r.kappa_a);
        }
    }
    outcome(
        w < VARIATION_TOL && a < VARIATION_TOL,
        format!("W residual {w:.2e}, A residual {a:.2e}, kappa_A {kappas:?}"),
    )
}

fn c14_classification() -> Result<Outcome> {
    let rows = [
        (-1.0, 1.0, Geometry::Su2, true),
        (1.0, -1.0, Geometry::Sl2rHyperbolic, true),
        (1.0, 1.0, Geometry::Sl2rMixed, false),
        (0.0, 1.0, Geometry::E2, false),
        (0.0, -1.0, Geometry::E11, false),
        (0.0, 0.0, Geometry::Heisenberg, true),
    ];
    let mut bad = Vec::new();
    for (m, k, geometry, torsion_free) in rows {
        for scale in [1.0, 0.3, 1.7] {
            let n = nd(m * scale, k / scale);
            let class = classify_geometry(&n);
            let fp = fixed_points(&n);
            let agrees = class.admits_torsion_free == !fp.is_empty();
            let heis_all = geometry != Geometry::Heisenberg || fp == FixedPointSet::All;
            if class.geometry != geometry || class.admits_torsion_free != torsion_free || !agrees || !heis_all {
                bad.push(format!("{geometry}"));
            }
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "6 rows x 3 scalings reproduced".to_string() } else { format!("mismatched rows {bad:?}") })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 14] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("pdq closed form", c2_pdq_closed_form),
        ("prequant closed form", c3_prequant_closed_form),
        ("attracting convergence", c4_convergence),
        ("repelling case", c5_repelling),
        ("rossi convergence", c6_rossi),
        ("heisenberg steady soliton", c7_heisenberg),
        ("gradient flow", c8_gradient_flow),
        ("entropy monotonicity", c9_entropy),
        ("W rescaling invariance", c10_w_rescaling),
        ("b scaling law", c11_scaling_law),
        ("L_T J = 2JA", c12_reeb_lie_derivative),
        ("variation identities", c13_variation),
        ("classification table", c14_classification),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:2}: {} {name}: {detail} ({:.2}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
