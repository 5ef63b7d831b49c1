//! Homogeneous pseudohermitian structures `(θ_b, J_{a,c})` on normalized
//! contact data, and their Tanaka-Webster invariants.
//!
//! Frame conventions: `θ_b = b²ω¹`, `α_b = bω²`, `β_b = bω³`, with dual frame
//! `T_b = X_1/b²`, `U_b = X_2/b`, `V_b = X_3/b`. The complex structure acts on
//! `ker θ = span(U_b, V_b)` by the matrix of [`j_endomorphism`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lie_algebra::{reeb_vector, NormalizedContactData};

pub type Mat2 = [[f64; 2]; 2];
type CVec3 = [Complex64; 3];

const I: Complex64 = Complex64::new(0.0, 1.0);

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Parameters `(a, b, c)` of a homogeneous pseudohermitian structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CRParameters {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CRParameters {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self { a, b, c };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::InvalidParameter { name: "a", value: self.a });
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter { name: "b", value: self.b });
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter { name: "c", value: self.c });
        }
        Ok(())
    }
}

/// Connection coefficients, torsion and Webster curvature.
///
/// The connection form is `ω_1^1 = i c_θ θ_b + i c_Z θ¹ + i c̄_Z θ^{1̄}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudohermitianInvariants {
    pub c_theta: f64,
    pub c_z: Complex64,
    /// `A^1_{1̄}`
    pub torsion: Complex64,
    pub webster: f64,
}

impl PseudohermitianInvariants {
    /// `A_{11}`, the lowered component used by the flow equations.
    pub fn a11(&self) -> Complex64 {
        self.torsion.conj()
    }
}

/// Matrix of `J` on `(U, V)`; the columns are `J U` and `J V`.
pub fn j_endomorphism(a: f64, c: f64) -> Result<Mat2> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter { name: "a", value: a });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter { name: "c", value: c });
    }
    Ok([[a, -(1.0 + a * a) / c], [c, -a]])
}

/// Coefficients of the unitary frame `Z_1` and coframe `θ¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrame {
    /// `Z_1` on `(U_b, V_b)`
    pub z1: [Complex64; 2],
    /// `θ¹` on `(α_b, β_b)`
    pub theta1: [Complex64; 2],
    pub b: f64,
}

impl ComplexFrame {
    pub fn z1bar(&self) -> [Complex64; 2] {
        [self.z1[0].conj(), self.z1[1].conj()]
    }

    pub fn theta1bar(&self) -> [Complex64; 2] {
        [self.theta1[0].conj(), self.theta1[1].conj()]
    }

    /// `Z_1` in the invariant frame `X_i`.
    pub fn z1_invariant(&self) -> CVec3 {
        [Complex64::new(0.0, 0.0), self.z1[0] / self.b, self.z1[1] / self.b]
    }

    /// `θ¹` in the invariant coframe `ω^i`.
    pub fn theta1_invariant(&self) -> CVec3 {
        [Complex64::new(0.0, 0.0), self.theta1[0] * self.b, self.theta1[1] * self.b]
    }
}

fn conj3(v: &CVec3) -> CVec3 {
    [v[0].conj(), v[1].conj(), v[2].conj()]
}

fn pair(form: &CVec3, v: &CVec3) -> Complex64 {
    form[0] * v[0] + form[1] * v[1] + form[2] * v[2]
}

pub fn complex_frame(_nd: &NormalizedContactData, p: &CRParameters) -> Result<ComplexFrame> {
    p.check()?;
    let (a, c) = (p.a, p.c);
    let s = (2.0 * c * (a * a + 1.0)).sqrt();
    let a_minus_i = Complex64::new(a, -1.0);
    Ok(ComplexFrame {
        z1: [real((a * a + 1.0) / s), a_minus_i * (c / s)],
        theta1: [-I * s / (a_minus_i * 2.0), I * (s / (2.0 * c))],
        b: p.b,
    })
}

pub fn invariants_closed_form(nd: &NormalizedContactData, p: &CRParameters) -> Result<PseudohermitianInvariants> {
    p.check()?;
    let (a, b, c) = (p.a, p.b, p.c);
    let (m, q2, k, q3) = (nd.c2_13(), nd.c2_23(), nd.c3_12(), nd.c3_23());
    let b2 = b * b;
    let a2p1 = a * a + 1.0;
    let ratio = Complex64::new(a, 1.0) / Complex64::new(a, -1.0);
    let torsion = (I * (a2p1 / (2.0 * c) * k) - I * ratio * (c / 2.0 * m)) / b2;
    let c_theta = -(a2p1 / (2.0 * c) * k - c / 2.0 * m) / b2;
    let s = (2.0 * c * a2p1).sqrt();
    // i c̄_Z
    let i_cz_bar = (Complex64::new(a, 1.0) * (c * q2) - real(a2p1 * q3)) / (s * b);
    let c_z = (i_cz_bar / I).conj();
    let webster =
        (a2p1 / (2.0 * c) * k - c / 2.0 * m - c * q2 * q2 + 2.0 * a * q2 * q3 - a2p1 / c * q3 * q3) / b2;
    Ok(PseudohermitianInvariants {
        c_theta,
        c_z,
        torsion,
        webster,
    })
}

/// Raw pairings behind [`invariants_from_structure_equations`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureEquationReport {
    pub invariants: PseudohermitianInvariants,
    /// Imaginary part discarded when reading `c_θ`.
    pub c_theta_imag: f64,
    /// Imaginary part of `dω_1^1(Z_1, Z_{1̄})`.
    pub webster_imag: f64,
    /// `W` recomputed as `-c_θ - 2|c_Z|²`.
    pub webster_from_coefficients: f64,
    /// Max residual of `dθ¹ = θ¹∧ω_1^1 + θ_b∧τ¹` over the frame pairs.
    pub first_structure_residual: f64,
}

/// Evaluates the structure equations on the frame `(T_b, Z_1, Z_{1̄})` using
/// only the brackets of the structure constants.
pub fn structure_equation_report(nd: &NormalizedContactData, p: &CRParameters) -> Result<StructureEquationReport> {
    let frame = complex_frame(nd, p)?;
    let sc = nd.structure_constants();
    let b2 = p.b * p.b;
    let theta_b = [real(b2), real(0.0), real(0.0)];
    let t = reeb_vector(sc, &[b2, 0.0, 0.0])?;
    let t = [real(t[0]), real(t[1]), real(t[2])];
    let z = frame.z1_invariant();
    let zb = conj3(&z);
    let th = frame.theta1_invariant();
    let thb = conj3(&th);

    let d_theta1 = |x: &CVec3, y: &CVec3| sc.d_pairing(&th, x, y);
    let i_cz_bar = d_theta1(&z, &zb);
    let c_z = (i_cz_bar / I).conj();
    let c_theta_c = I * d_theta1(&t, &z);
    let torsion = d_theta1(&t, &zb);
    let c_theta = c_theta_c.re;

    // ω_1^1 in the invariant coframe
    let mut omega = [real(0.0); 3];
    for i in 0..3 {
        omega[i] = I * c_theta * theta_b[i] + I * c_z * th[i] + I * c_z.conj() * thb[i];
    }
    let w = sc.d_pairing(&omega, &z, &zb);

    let frame_vectors = [t, z, zb];
    let mut residual = 0.0_f64;
    for x in &frame_vectors {
        for y in &frame_vectors {
            let lhs = d_theta1(x, y);
            let wedge = |f: &CVec3, g: &CVec3| pair(f, x) * pair(g, y) - pair(f, y) * pair(g, x);
            let tau1: CVec3 = [torsion * thb[0], torsion * thb[1], torsion * thb[2]];
            let rhs = wedge(&th, &omega) + wedge(&theta_b, &tau1);
            residual = residual.max((lhs - rhs).norm());
        }
    }

    Ok(StructureEquationReport {
        invariants: PseudohermitianInvariants {
            c_theta,
            c_z,
            torsion,
            webster: w.re,
        },
        c_theta_imag: c_theta_c.im,
        webster_imag: w.im,
        webster_from_coefficients: -c_theta - 2.0 * c_z.norm_sqr(),
        first_structure_residual: residual,
    })
}

pub fn invariants_from_structure_equations(
    nd: &NormalizedContactData,
    p: &CRParameters,
) -> Result<PseudohermitianInvariants> {
    Ok(structure_equation_report(nd, p)?.invariants)
}

pub fn rescale_b(p: &CRParameters, lambda: f64) -> Result<CRParameters> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter { name: "lambda", value: lambda });
    }
    CRParameters::new(p.a, p.b * lambda, p.c)
}

/// `(L_T J)(X) = [T, JX] - J[T, X]` on `ker θ` at `b = 1`, as a matrix on `(U, V)`.
pub fn lie_derivative_reeb_j(nd: &NormalizedContactData, a: f64, c: f64) -> Result<Mat2> {
    let j = j_endomorphism(a, c)?;
    let sc = nd.structure_constants();
    let t = reeb_vector(sc, &[1.0, 0.0, 0.0])?;
    let lift = |w: [f64; 2]| [0.0, w[0], w[1]];
    let apply_j = |w: [f64; 2]| [j[0][0] * w[0] + j[0][1] * w[1], j[1][0] * w[0] + j[1][1] * w[1]];
    let mut out = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut e = [0.0; 2];
        e[col] = 1.0;
        let first = sc.bracket(&t, &lift(apply_j(e)));
        let inner = sc.bracket(&t, &lift(e));
        let second = apply_j([inner[1], inner[2]]);
        out[0][col] = first[1] - second[0];
        out[1][col] = first[2] - second[1];
    }
    Ok(out)
}

/// Real matrix of the torsion tensor `A = A_{11} θ¹⊗Z_{1̄} + conj` on `(U_b, V_b)`.
pub fn torsion_tensor_matrix(a: f64, c: f64, a11: Complex64) -> Mat2 {
    let (re, im) = (a11.re, a11.im);
    let a2p1 = a * a + 1.0;
    let diag = re + a * im;
    let lower = -(re * (-2.0 * a * c / a2p1) + im * (1.0 - a * a) * c / a2p1);
    [[diag, -im * a2p1 / c], [lower, -diag]]
}

pub fn mat2_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    crate::lie_algebra::mul2(x, y)
}
