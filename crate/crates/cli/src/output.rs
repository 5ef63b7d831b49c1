//! CSV rendering. Values use 17 significant digits so files parse back exactly.

use std::fmt::Write as _;

use crflow::entropy::MonotonicityReport;
use crflow::flow::PhaseSample;
use crflow::Trajectory;

pub const TRAJECTORY_HEADER: &str = "t,a,c,B,phi,tau,torsion_re,torsion_im,W,E_H";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for ((t, s), inv) in traj.times.iter().zip(&traj.states).zip(&traj.invariant_samples) {
        let cells = [
            num(*t),
            num(s.a),
            num(s.c),
            num(s.b_sq),
            opt(s.phi),
            opt(s.tau),
            num(inv.torsion.re),
            num(inv.torsion.im),
            num(inv.webster),
            num(inv.einstein_hilbert),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let _ = writeln!(out, "# event: {}", traj.terminal_event.describe());
    out
}

pub fn portrait_csv(samples: &[PhaseSample]) -> String {
    let mut out = String::from("a,c,da,dc\n");
    for p in samples {
        let _ = writeln!(out, "{},{},{},{}", num(p.a), num(p.c), num(p.da), num(p.dc));
    }
    out
}

pub fn entropy_csv(r: &MonotonicityReport) -> String {
    let mut out = String::from("t,functional,derivative,rhs_unweighted,rhs_weighted,constraint\n");
    for i in 0..r.times.len() {
        let cells = [
            num(r.times[i]),
            num(r.functional_values[i]),
            opt(r.finite_diff_derivative[i]),
            num(r.theorem_rhs_unweighted[i]),
            num(r.theorem_rhs_weighted[i]),
            num(r.constraint_values[i]),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Summary lines for an entropy run, without comment markers.
pub fn entropy_summary(r: &MonotonicityReport) -> Vec<String> {
    let monotone = if r.monotone() {
        "monotone: yes, max_violation < 1e-8".to_string()
    } else {
        format!("monotone: no, max_violation = {:.3e}", r.max_violation)
    };
    vec![
        format!("functional: {} along {}", r.functional.name(), r.kind),
        monotone,
        format!("matched_weighting: {}", r.matched_weighting),
        format!(
            "residuals: unweighted {:.3e}, weighted {:.3e}",
            r.residual_unweighted, r.residual_weighted
        ),
        if r.kind.needs_phi() {
            format!("constraint_drift: {:.3e}", r.constraint_drift)
        } else {
            "constraint_drift: n/a".to_string()
        },
        format!("event: {}", r.terminal_event.describe()),
    ]
}
