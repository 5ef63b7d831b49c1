//! Structure constants of left-invariant coframes on 3-dimensional Lie groups.
//!
//! The coframe `ω¹, ω², ω³` satisfies `dω^i = Σ_{j<k} c^i_{jk} ω^j ∧ ω^k`, and the
//! dual frame `X_1, X_2, X_3` has brackets `[X_j, X_k] = -Σ_i c^i_{jk} X_i`.
//! Indices are 0-based in code: `get(0, 1, 2)` is `c^1_{23}`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Absolute Jacobi residual allowed on unit-scale constants.
pub const JACOBI_TOL: f64 = 1e-12;
/// Threshold on `|θ ∧ dθ|` below which a form is treated as degenerate.
pub const CONTACT_TOL: f64 = 1e-12;
/// Values with magnitude at or below this are treated as zero when reading signs.
pub const SIGN_TOL: f64 = 1e-12;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn slot(j: usize, k: usize) -> Option<(usize, f64)> {
    match (j, k) {
        (0, 1) => Some((0, 1.0)),
        (1, 0) => Some((0, -1.0)),
        (0, 2) => Some((1, 1.0)),
        (2, 0) => Some((1, -1.0)),
        (1, 2) => Some((2, 1.0)),
        (2, 1) => Some((2, -1.0)),
        _ => None,
    }
}

/// Structure constants `c^i_{jk}`, stored as the upper triangle `j < k` only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConstants {
    upper: [[f64; 3]; 3],
}

impl StructureConstants {
    /// Builds constants from the packed upper triangle. `upper[i]` holds
    /// `(c^i_{12}, c^i_{13}, c^i_{23})` (1-based names).
    pub fn from_upper(upper: [[f64; 3]; 3]) -> Result<Self> {
        if upper.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "structure constant",
                value: f64::NAN,
            });
        }
        let sc = Self { upper };
        let residual = sc.scaled_jacobi_residual();
        if residual > JACOBI_TOL {
            return Err(Error::JacobiViolation { residual });
        }
        Ok(sc)
    }

    /// Same as [`from_upper`](Self::from_upper) without the Jacobi check.
    /// Only used to build deliberately invalid inputs.
    pub fn from_upper_unchecked(upper: [[f64; 3]; 3]) -> Self {
        Self { upper }
    }

    pub fn upper(&self) -> [[f64; 3]; 3] {
        self.upper
    }

    /// `c^i_{jk}` with 0-based indices; antisymmetric in `j, k`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        match slot(j, k) {
            Some((s, sign)) => sign * self.upper[i][s],
            None => 0.0,
        }
    }

    pub fn to_array(&self) -> [[[f64; 3]; 3]; 3] {
        let mut out = [[[0.0; 3]; 3]; 3];
        for (i, plane) in out.iter_mut().enumerate() {
            for (j, row) in plane.iter_mut().enumerate() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = self.get(i, j, k);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Antisymmetric matrix `F` of `dω^i`, so that `dω^i(X, Y) = Xᵀ F Y`.
    pub fn differential(&self, i: usize) -> Mat3 {
        let mut f = [[0.0; 3]; 3];
        for (j, row) in f.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j, k);
            }
        }
        f
    }

    /// Matrix of `d(Σ_i θ_i ω^i)`.
    pub fn d_form(&self, theta: &Vec3) -> Mat3 {
        let mut f = [[0.0; 3]; 3];
        for (i, &t) in theta.iter().enumerate() {
            let di = self.differential(i);
            for j in 0..3 {
                for k in 0..3 {
                    f[j][k] += t * di[j][k];
                }
            }
        }
        f
    }

    /// `d(form)(x, y)` for a complex left-invariant 1-form and complex vectors.
    pub fn d_pairing(&self, form: &[Complex64; 3], x: &[Complex64; 3], y: &[Complex64; 3]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &w) in form.iter().enumerate() {
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..3 {
                for k in 0..3 {
                    let c = self.get(i, j, k);
                    if c != 0.0 {
                        acc += w * c * x[j] * y[k];
                    }
                }
            }
        }
        acc
    }

    /// Lie bracket of left-invariant fields given in the `X_i` basis.
    pub fn bracket(&self, x: &Vec3, y: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += self.get(i, j, k) * x[j] * y[k];
                }
            }
            *o = -s;
        }
        out
    }

    /// Coefficients of `d(dω^i)` on `ω¹∧ω²∧ω³`, for `i = 1, 2, 3`.
    pub fn d_squared(&self) -> Vec3 {
        // d(ω^j ∧ ω^k) = dω^j ∧ ω^k - ω^j ∧ dω^k
        let wedge_with_basis = |f: &Mat3, l: usize| -> f64 {
            // (F ∧ ω^l) on ω¹∧ω²∧ω³
            match l {
                0 => f[1][2],
                1 => -f[0][2],
                _ => f[0][1],
            }
        };
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (slot_idx, &(j, k)) in PAIRS.iter().enumerate() {
                let c = self.upper[i][slot_idx];
                if c == 0.0 {
                    continue;
                }
                let dj = self.differential(j);
                let dk = self.differential(k);
                s += c * (wedge_with_basis(&dj, k) - wedge_with_basis(&dk, j));
            }
            *o = s;
        }
        out
    }

    pub fn jacobi_residual(&self) -> f64 {
        self.d_squared().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Jacobi residual after rescaling the constants to unit max-abs scale.
    pub fn scaled_jacobi_residual(&self) -> f64 {
        let s = self.max_abs();
        if s == 0.0 {
            0.0
        } else {
            self.jacobi_residual() / (s * s)
        }
    }

    /// `(Σ_j c^j_{ij})_i`; minus the traces of `ad_{X_i}`.
    pub fn trace_vector(&self) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.get(j, i, j)).sum();
        }
        out
    }
}

/// Checks a full `c[i][j][k]` array and packs it.
pub fn validate(raw: &[[[f64; 3]; 3]; 3]) -> Result<StructureConstants> {
    let mut upper = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if raw[i][j][j] != 0.0 {
                return Err(Error::AntisymmetryViolation {
                    i,
                    j,
                    k: j,
                    deviation: raw[i][j][j].abs(),
                });
            }
            for k in (j + 1)..3 {
                let deviation = (raw[i][j][k] + raw[i][k][j]).abs();
                let scale = 1.0 + raw[i][j][k].abs();
                if deviation > JACOBI_TOL * scale {
                    return Err(Error::AntisymmetryViolation { i, j, k, deviation });
                }
            }
        }
        for (s, &(j, k)) in PAIRS.iter().enumerate() {
            upper[i][s] = raw[i][j][k];
        }
    }
    StructureConstants::from_upper(upper)
}

/// `(θ ∧ dθ)(X_1, X_2, X_3)` for `θ = Σ θ_i ω^i`.
pub fn contact_volume(sc: &StructureConstants, theta: &Vec3) -> f64 {
    let f = sc.d_form(theta);
    let axis = [f[1][2], f[2][0], f[0][1]];
    dot(theta, &axis)
}

/// Reeb field of `θ = Σ θ_i ω^i`, in the `X_i` basis.
pub fn reeb_vector(sc: &StructureConstants, theta: &Vec3) -> Result<Vec3> {
    let f = sc.d_form(theta);
    // The kernel of an antisymmetric 3x3 matrix is spanned by its axial vector.
    let axis = [f[1][2], f[2][0], f[0][1]];
    let volume = dot(theta, &axis);
    if !(volume.abs() >= CONTACT_TOL) {
        return Err(Error::NotContact { volume });
    }
    Ok([axis[0] / volume, axis[1] / volume, axis[2] / volume])
}

pub fn is_unimodular(sc: &StructureConstants) -> bool {
    let tol = JACOBI_TOL * sc.max_abs().max(1.0);
    sc.trace_vector().iter().all(|t| t.abs() <= tol)
}

/// Structure constants in the normal form `c^1_{23} = 1`,
/// `c^1_{12} = c^1_{13} = c^2_{12} = c^3_{13} = 0`.
///
/// In this form `θ = ω¹` is a contact form with Reeb field `X_1`, and
/// `(ω², ω³)` is a symplectic coframe of `ker θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedContactData {
    sc: StructureConstants,
}

impl NormalizedContactData {
    /// Builds normalized data from the four free constants.
    pub fn new(c2_13: f64, c2_23: f64, c3_12: f64, c3_23: f64) -> Result<Self> {
        let upper = [[0.0, 0.0, 1.0], [0.0, c2_13, c2_23], [c3_12, 0.0, c3_23]];
        Ok(Self {
            sc: StructureConstants::from_upper(upper)?,
        })
    }

    /// Accepts constants that are already exactly in normal form.
    pub fn from_structure_constants(sc: StructureConstants) -> Result<Self> {
        let u = sc.upper();
        let residual = [u[0][0], u[0][1], u[1][0], u[2][1], u[0][2] - 1.0]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if residual != 0.0 {
            return Err(Error::NormalizationFailed { residual });
        }
        Ok(Self { sc })
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.sc
    }

    pub fn c2_13(&self) -> f64 {
        self.sc.get(1, 0, 2)
    }

    pub fn c2_23(&self) -> f64 {
        self.sc.get(1, 1, 2)
    }

    pub fn c3_12(&self) -> f64 {
        self.sc.get(2, 0, 1)
    }

    pub fn c3_23(&self) -> f64 {
        self.sc.get(2, 1, 2)
    }

    pub fn heisenberg() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0).expect("Heisenberg constants are valid")
    }
}

/// Normalizes the coframe of a homogeneous contact manifold with contact form
/// `θ = Σ θ_i ω^i`.
///
/// Returns the normalized constants together with the change of basis whose
/// columns are the new frame `(e_1, e_2, e_3)` written in the old `X_i`: `e_1` is
/// the Reeb field of `θ`, and `e_2, e_3 = J e_2` diagonalize `h = ½ L_T J` for the
/// standard complex structure on a symplectic basis of `ker θ`.
pub fn normalize_frame(sc: &StructureConstants, theta: &Vec3) -> Result<(NormalizedContactData, Mat3)> {
    let reeb = reeb_vector(sc, theta)?;
    let dtheta = sc.d_form(theta);
    let pairing = |x: &Vec3, y: &Vec3| -> f64 { quad(x, &dtheta, y) };
    let project = |i: usize| -> Vec3 {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        let t = theta[i];
        [v[0] - t * reeb[0], v[1] - t * reeb[1], v[2] - t * reeb[2]]
    };

    // Symplectic basis (u, v) of ker θ from the best-conditioned pair of projections.
    let mut best: Option<(Vec3, Vec3, f64)> = None;
    for &(i, j) in &[(1usize, 2usize), (2, 0), (0, 1)] {
        let (pi, pj) = (project(i), project(j));
        let s = pairing(&pi, &pj);
        if best.as_ref().is_none_or(|b| s.abs() > b.2.abs()) {
            best = Some((pi, pj, s));
        }
    }
    let (u, v_raw, s) = best.expect("three candidate pairs");
    if s.abs() < CONTACT_TOL {
        return Err(Error::NotContact { volume: s });
    }
    let v = scale(&v_raw, 1.0 / s);

    // ad_T restricted to ker θ, in the basis (u, v): w = α u + β v with
    // α = dθ(w, v), β = dθ(u, w).
    let coords = |w: &Vec3| -> [f64; 2] { [pairing(w, &v), pairing(&u, w)] };
    let tu = coords(&sc.bracket(&reeb, &u));
    let tv = coords(&sc.bracket(&reeb, &v));
    let ad = [[tu[0], tv[0]], [tu[1], tv[1]]];
    let j0 = [[0.0, -1.0], [1.0, 0.0]];
    let lie = sub2(&mul2(&ad, &j0), &mul2(&j0, &ad));
    let (p, q) = (0.5 * lie[0][0], 0.5 * lie[0][1]);
    let radius = p.hypot(q);

    let x = if radius <= 1e-14 * sc.max_abs().max(1.0) {
        [1.0, 0.0]
    } else {
        let lambda = -radius;
        let c1 = [q, lambda - p];
        let c2 = [lambda + p, q];
        let pick = if c1[0].hypot(c1[1]) >= c2[0].hypot(c2[1]) { c1 } else { c2 };
        let n = pick[0].hypot(pick[1]);
        let mut e = [pick[0] / n, pick[1] / n];
        if e[0] < 0.0 || (e[0] == 0.0 && e[1] < 0.0) {
            e = [-e[0], -e[1]];
        }
        e
    };
    let e2 = add(&scale(&u, x[0]), &scale(&v, x[1]));
    let e3 = add(&scale(&v, x[0]), &scale(&u, -x[1]));
    let frame = [reeb, e2, e3];
    let change = [
        [frame[0][0], frame[1][0], frame[2][0]],
        [frame[0][1], frame[1][1], frame[2][1]],
        [frame[0][2], frame[1][2], frame[2][2]],
    ];
    let new_sc = change_basis(sc, &change).map_err(|_| Error::NormalizationFailed { residual: f64::INFINITY })?;
    let upper = new_sc.upper();
    let scale_ref = sc.max_abs().max(1.0) * (1.0 + norm(&reeb)).powi(2);
    let residual = [upper[0][0], upper[0][1], upper[1][0], upper[2][1], upper[0][2] - 1.0]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if residual > 1e-9 * scale_ref {
        return Err(Error::NormalizationFailed { residual });
    }
    let data = NormalizedContactData::new(upper[1][1], upper[1][2], upper[2][0], upper[2][2])?;
    Ok((data, change))
}

/// Structure constants of the frame `e_j = Σ_i P_{ij} X_i` (columns of `p`).
/// A form with coefficients `θ` in the old coframe has coefficients `θ P` in the new one.
pub fn change_basis(sc: &StructureConstants, p: &Mat3) -> Result<StructureConstants> {
    let coframe = invert3(p).ok_or(Error::InvalidParameter {
        name: "change of basis",
        value: 0.0,
    })?;
    let frame = [
        [p[0][0], p[1][0], p[2][0]],
        [p[0][1], p[1][1], p[2][1]],
        [p[0][2], p[1][2], p[2][2]],
    ];
    let mut upper = [[0.0; 3]; 3];
    for (s_idx, &(j, k)) in PAIRS.iter().enumerate() {
        let br = sc.bracket(&frame[j], &frame[k]);
        for (i, row) in upper.iter_mut().enumerate() {
            row[s_idx] = -dot(&coframe[i], &br);
        }
    }
    StructureConstants::from_upper(upper)
}

/// Coefficients of a 1-form after [`change_basis`] with `p`.
pub fn transform_form(theta: &Vec3, p: &Mat3) -> Vec3 {
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|i| theta[i] * p[i][j]).sum();
    }
    out
}

/// Unimodular contact geometries, read off from the signs of
/// `(c^2_{31}, c^3_{12}) = (-c^2_{13}, c^3_{12})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Su2,
    Sl2rHyperbolic,
    Sl2rMixed,
    E2,
    E11,
    Heisenberg,
    NotUnimodular,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Geometry::Su2 => "SU2",
            Geometry::Sl2rHyperbolic => "SL2R_hyperbolic",
            Geometry::Sl2rMixed => "SL2R_mixed",
            Geometry::E2 => "E(2)",
            Geometry::E11 => "E(1,1)",
            Geometry::Heisenberg => "Heisenberg",
            Geometry::NotUnimodular => "NotUnimodular",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryClass {
    pub geometry: Geometry,
    pub admits_torsion_free: bool,
}

fn sign(x: f64) -> i8 {
    if x > SIGN_TOL {
        1
    } else if x < -SIGN_TOL {
        -1
    } else {
        0
    }
}

/// Table row for an unordered sign pair. The eigen-split that fixes `e_2` is
/// only determined up to `(e_2, e_3) ↦ (e_3, -e_2)`, which transposes the pair.
fn table_row(s31: i8, s12: i8) -> (Geometry, bool) {
    let (lo, hi) = if s31 <= s12 { (s31, s12) } else { (s12, s31) };
    match (lo, hi) {
        (1, 1) => (Geometry::Su2, true),
        (-1, -1) => (Geometry::Sl2rHyperbolic, true),
        (-1, 1) => (Geometry::Sl2rMixed, false),
        (0, 1) => (Geometry::E2, false),
        (-1, 0) => (Geometry::E11, false),
        _ => (Geometry::Heisenberg, true),
    }
}

pub fn classify_geometry(nd: &NormalizedContactData) -> GeometryClass {
    let (geometry, admits_torsion_free) = table_row(sign(-nd.c2_13()), sign(nd.c3_12()));
    let unimodular = nd.c2_23().abs() <= SIGN_TOL && nd.c3_23().abs() <= SIGN_TOL;
    GeometryClass {
        geometry: if unimodular { geometry } else { Geometry::NotUnimodular },
        admits_torsion_free,
    }
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn quad(x: &Vec3, f: &Mat3, y: &Vec3) -> f64 {
    let mut s = 0.0;
    for j in 0..3 {
        for k in 0..3 {
            s += x[j] * f[j][k] * y[k];
        }
    }
    s
}

pub(crate) fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn sub2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

/// Inverse of a 3x3 matrix; rows of the result are the dual coframe when the
/// columns of `m` are frame vectors.
pub fn invert3(m: &Mat3) -> Option<Mat3> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inv[i][j] = adj[i][j] / det;
        }
    }
    Some(inv)
}


#[cfg(test)]
pub(crate) mod properties {
    use super::*;
    use proptest::prelude::*;

    /// Normalized constants in [-2, 2] satisfying `m q = 0` and `k p = 0`.
    pub(crate) fn normalized() -> impl Strategy<Value = NormalizedContactData> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, any::<bool>(), any::<bool>()).prop_map(
            |(m, p, k, q, drop_q, drop_p)| {
                let (m, q) = if drop_q { (m, 0.0) } else { (0.0, q) };
                let (k, p) = if drop_p { (k, 0.0) } else { (0.0, p) };
                NormalizedContactData::new(m, p, k, q).unwrap()
            },
        )
    }

    fn basis() -> impl Strategy<Value = Mat3> {
        prop::array::uniform3(prop::array::uniform3(-1.0..1.0f64))
            .prop_map(|m| {
                let mut p = m;
                for (i, row) in p.iter_mut().enumerate() {
                    row[i] += 2.0;
                }
                p
            })
    }

    fn bracket_jacobi(sc: &StructureConstants) -> f64 {
        let e = |i: usize| {
            let mut v = [0.0; 3];
            v[i] = 1.0;
            v
        };
        let mut worst = 0.0_f64;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let t1 = sc.bracket(&e(a), &sc.bracket(&e(b), &e(c)));
                    let t2 = sc.bracket(&e(b), &sc.bracket(&e(c), &e(a)));
                    let t3 = sc.bracket(&e(c), &sc.bracket(&e(a), &e(b)));
                    for i in 0..3 {
                        worst = worst.max((t1[i] + t2[i] + t3[i]).abs());
                    }
                }
            }
        }
        worst
    }

    proptest! {
        #[test]
        fn validated_constants_satisfy_jacobi(nd in normalized(), p in basis()) {
            let sc = change_basis(nd.structure_constants(), &p).unwrap();
            let scale = sc.max_abs().max(1.0);
            prop_assert!(bracket_jacobi(&sc) < 1e-12 * scale * scale);
            let revalidated = validate(&sc.to_array()).unwrap();
            prop_assert_eq!(revalidated, sc);
        }

        #[test]
        fn reeb_solves_defining_equations(nd in normalized(), p in basis()) {
            let sc = change_basis(nd.structure_constants(), &p).unwrap();
            let theta = transform_form(&[1.0, 0.0, 0.0], &p);
            let t = reeb_vector(&sc, &theta).unwrap();
            prop_assert!((dot(&theta, &t) - 1.0).abs() < 1e-12);
            let f = sc.d_form(&theta);
            for j in 0..3 {
                let contraction: f64 = (0..3).map(|i| t[i] * f[i][j]).sum();
                prop_assert!(contraction.abs() < 1e-12 * sc.max_abs().max(1.0));
            }
            // uniqueness: the old Reeb field X_1, expressed in the new frame
            let inv = invert3(&p).unwrap();
            let expected = [inv[0][0], inv[1][0], inv[2][0]];
            for i in 0..3 {
                prop_assert!((t[i] - expected[i]).abs() < 1e-10 * (1.0 + expected[i].abs()));
            }
        }

        #[test]
        fn normalize_is_idempotent(nd in normalized(), p in basis()) {
            let sc = change_basis(nd.structure_constants(), &p).unwrap();
            let theta = transform_form(&[1.0, 0.0, 0.0], &p);
            let (once, _) = normalize_frame(&sc, &theta).unwrap();
            let (twice, change) = normalize_frame(once.structure_constants(), &[1.0, 0.0, 0.0]).unwrap();
            prop_assert_eq!(once, twice);
            for i in 0..3 {
                for j in 0..3 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((change[i][j] - e).abs() < 1e-12);
                }
            }
            // the geometry (and the unordered sign pair) survives a change of frame
            prop_assert_eq!(classify_geometry(&once).geometry, classify_geometry(&nd).geometry);
        }

        #[test]
        fn unimodularity_is_frame_independent(nd in normalized(), p in basis()) {
            let sc = change_basis(nd.structure_constants(), &p).unwrap();
            let expected = nd.c2_23() == 0.0 && nd.c3_23() == 0.0;
            prop_assert_eq!(is_unimodular(&sc), expected);
            prop_assert_eq!(is_unimodular(nd.structure_constants()), expected);
        }
    }
}
