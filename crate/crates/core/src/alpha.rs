//! Alpha-theory quantities at a point of the sphere and Newton's method on
//! `S^n`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::arith::{Arithmetic, HostArithmetic};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::poly::{sup_norm, PolynomialSystem};
use crate::sphere::{self, euclidean_norm, exp_map, SpherePoint};

/// Universal constants of the certification tests, computed (not
/// transcribed) at first use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    /// `Σ_{k≥0} 2^{-2^k+1}`.
    pub sigma: f64,
    pub alpha_star: f64,
    pub nu_star: f64,
    pub alpha_bullet: f64,
    pub nu_bullet: f64,
    pub alpha_0: f64,
    pub s_0: f64,
}

/// `ψ(u) = 1 − 4u + 2u²`.
pub fn psi(u: f64) -> f64 {
    1.0 - 4.0 * u + 2.0 * u * u
}

/// `Ψ(u) = (3 − √7)(1 − u)ψ(u) − 4u`.
pub fn big_psi(u: f64) -> f64 {
    (3.0 - 7f64.sqrt()) * (1.0 - u) * psi(u) - 4.0 * u
}

/// The variant with `6u`, whose root gives the finite-precision constant.
pub fn big_psi_bullet(u: f64) -> f64 {
    (3.0 - 7f64.sqrt()) * (1.0 - u) * psi(u) - 6.0 * u
}

/// Root of a sign-changing `g` on `[lo, hi]` to absolute width `tol`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut g_lo = g(lo);
    assert!(
        g_lo * g(hi) <= 0.0,
        "bisection bracket does not change sign"
    );
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid > 0.0) == (g_lo > 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn compute_constants() -> TheoryConstants {
    let mut sigma = 0.0f64;
    for k in 0.. {
        let term = (1.0 - (2.0f64).powi(k)).exp2();
        if term == 0.0 || sigma + term == sigma {
            break;
        }
        sigma += term;
    }
    // Ψ, its bullet variant and ψ² − 2u are decreasing on [0, 1 − √2/2)
    let upper = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let tol = 1e-15;
    let nu_star = bisect(big_psi, 0.0, upper, tol);
    let nu_bullet = bisect(big_psi_bullet, 0.0, upper, tol);
    let alpha_0 = bisect(|u| psi(u).powi(2) - 2.0 * u, 0.0, 0.2, tol);
    let sa = sigma * alpha_0;
    let s_0 = 1.0 / (sigma + (1.0 - sa).powi(2) / psi(sa) * (1.0 + sigma / (1.0 - sa)));
    TheoryConstants {
        sigma,
        alpha_star: nu_star / sigma,
        nu_star,
        alpha_bullet: nu_bullet / sigma,
        nu_bullet,
        alpha_0,
        s_0,
    }
}

pub fn theory_constants() -> &'static TheoryConstants {
    static CONSTANTS: OnceLock<TheoryConstants> = OnceLock::new();
    CONSTANTS.get_or_init(compute_constants)
}

/// Certification record for one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    /// Degree-scaled tangent Jacobian in the Householder basis.
    pub m: Matrix,
    pub sigma_min: f64,
    pub mu_norm: f64,
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub alpha_bar: f64,
    /// `‖f(x)‖_∞`.
    pub f_sup: f64,
    /// Radius of the zero-free cap given by the exclusion bound.
    pub exclusion_radius: f64,
}

/// `M = diag(1/√d_i) · Df(x) · H` with `H` the Householder tangent basis.
pub fn compute_m(f: &PolynomialSystem, x: &[f64]) -> Matrix {
    compute_m_with(&HostArithmetic, f, x)
}

pub fn compute_m_with<A: Arithmetic>(ar: &A, f: &PolynomialSystem, x: &[f64]) -> Matrix {
    let jac = f.jacobian_with(ar, x);
    let h = sphere::tangent_basis_with(ar, x);
    scaled_tangent_jacobian(ar, f, &jac, &h)
}

pub(crate) fn scaled_tangent_jacobian<A: Arithmetic>(
    ar: &A,
    f: &PolynomialSystem,
    jac: &Matrix,
    h: &Matrix,
) -> Matrix {
    let n = f.n();
    let mut scaled = jac.clone();
    for (i, &d) in f.degrees().iter().enumerate() {
        let s = ar.div(1.0, ar.sqrt(d as f64));
        for k in 0..=n {
            scaled[(i, k)] = ar.mul(scaled[(i, k)], s);
        }
    }
    scaled.matmul_with(ar, h)
}

pub fn sigma_min(m: &Matrix) -> f64 {
    linalg::sigma_min(m)
}

/// Derived quantities from `σ_min(M)` and `‖f(x)‖_∞`.
pub(crate) struct Measures {
    pub mu_norm: f64,
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub alpha_bar: f64,
}

pub(crate) fn measures(
    n: usize,
    max_degree: u32,
    norm: f64,
    sigma_min: f64,
    f_sup: f64,
) -> Measures {
    let mu_norm = if sigma_min > 0.0 {
        norm * (n as f64).sqrt() / sigma_min
    } else {
        f64::INFINITY
    };
    let beta_bar = if f_sup == 0.0 {
        0.0
    } else {
        mu_norm * f_sup / norm
    };
    let gamma_bar = (max_degree as f64).powf(1.5) / 2.0 * mu_norm;
    let alpha_bar = if beta_bar == 0.0 {
        0.0
    } else {
        beta_bar * gamma_bar
    };
    Measures {
        mu_norm,
        beta_bar,
        gamma_bar,
        alpha_bar,
    }
}

/// All certification quantities at `x` in host arithmetic.
pub fn point_data(f: &PolynomialSystem, x: &[f64]) -> PointData {
    let m = compute_m(f, x);
    let sigma_min = sigma_min(&m);
    let f_sup = sup_norm(&f.evaluate(x));
    let norm = f.norm();
    let Measures {
        mu_norm,
        beta_bar,
        gamma_bar,
        alpha_bar,
    } = measures(f.n(), f.max_degree(), norm, sigma_min, f_sup);
    let exclusion_radius = (f_sup / (norm * (f.max_degree() as f64).sqrt())).min(2f64.sqrt());
    PointData {
        m,
        sigma_min,
        mu_norm,
        beta_bar,
        gamma_bar,
        alpha_bar,
        f_sup,
        exclusion_radius,
    }
}

/// Result of one Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub point: SpherePoint,
    /// `d(x, N_f(x))`, the length of the tangent step.
    pub beta: f64,
}

/// `N_f(x) = exp_x(−Df(x)|_{T_x}^{-1} f(x))`.
///
/// The linear system `Df(x) H w = f(x)` is solved by column-pivoted QR; the
/// tangent step is `−H w`.
pub fn newton_step(f: &PolynomialSystem, x: &SpherePoint) -> Result<NewtonStep> {
    let jac = f.jacobian(x);
    let h = sphere::tangent_basis(x);
    // diag(√d_i) · M = Df(x) · H
    let a = jac.matmul(&h);
    if linalg::sigma_min(&a) <= 4.0 * f64::EPSILON * jac.frobenius_norm() {
        return Err(Error::SingularJacobian);
    }
    let rhs = f.evaluate(x);
    let w = linalg::solve_col_piv_qr(&a, &rhs).ok_or(Error::SingularJacobian)?;
    if w.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularJacobian);
    }
    let step: Vec<f64> = h.mul_vec(&w).iter().map(|c| -c).collect();
    let beta = euclidean_norm(&w);
    let point = exp_map(x, &step)?;
    Ok(NewtonStep { point, beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefineStatus {
    /// The last recorded step length was at most the tolerance.
    Converged,
    StepLimit,
    SingularJacobian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub point: SpherePoint,
    /// Step lengths `β_k = d(x_k, x_{k+1})` in order.
    pub trace: Vec<f64>,
    /// Steps whose length exceeded the tolerance.
    pub steps: usize,
    pub status: RefineStatus,
    /// Whether `β_k ≤ (1/2)^{2^k − 1} β_0 · 1.1` for every recorded `k`.
    pub envelope_satisfied: bool,
}

/// Slack on the quadratic-convergence envelope.
pub const ENVELOPE_SLACK: f64 = 1.1;

/// `(1/2)^{2^k − 1}`.
pub fn envelope_factor(k: usize) -> f64 {
    if k >= 11 {
        return 0.0;
    }
    (-((1u64 << k) as f64 - 1.0)).exp2()
}

pub fn satisfies_envelope(trace: &[f64]) -> bool {
    let Some(&beta0) = trace.first() else {
        return true;
    };
    trace
        .iter()
        .enumerate()
        .all(|(k, &b)| b <= envelope_factor(k) * beta0 * ENVELOPE_SLACK)
}

/// Iterate Newton from `x` until a step is at most `beta_tol` or
/// `max_steps` steps have been computed.
pub fn newton_refine(
    f: &PolynomialSystem,
    x: &SpherePoint,
    max_steps: usize,
    beta_tol: f64,
) -> Refinement {
    let mut point = x.clone();
    let mut trace = Vec::new();
    let mut steps = 0;
    let mut status = RefineStatus::StepLimit;
    while trace.len() < max_steps {
        match newton_step(f, &point) {
            Ok(step) => {
                trace.push(step.beta);
                point = step.point;
                if step.beta <= beta_tol {
                    status = RefineStatus::Converged;
                    break;
                }
                steps += 1;
            }
            Err(_) => {
                status = RefineStatus::SingularJacobian;
                break;
            }
        }
    }
    let envelope_satisfied = satisfies_envelope(&trace);
    Refinement {
        point,
        trace,
        steps,
        status,
        envelope_satisfied,
    }
}
