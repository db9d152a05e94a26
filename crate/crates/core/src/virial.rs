//! Virial and localized-virial quantities, their dynamic identities along
//! trajectories, and the weighted-momentum bound for even threshold data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::functionals::report;
use crate::grid::{quadrature_nodes, GridFunction};
use crate::params::Params;

/// Cutoff profile φ: x² on |x| < 1, 0 on |x| > 2, and on 1 ≤ |x| ≤ 2 the
/// unique degree-9 polynomial matching x² at 1 and 0 at 2 through fourth
/// derivatives, so φ″ and φ⁗ are available analytically and continuous.
///
/// Coefficients (x⁰..x⁹) are exact integers.
const BLEND: [f64; 10] = [
    3360.0, -22960.0, 68672.0, -117880.0, 127890.0, -90895.0, 42315.0, -12446.0, 2100.0, -155.0,
];

fn blend_deriv(t: f64, order: usize) -> f64 {
    // d^order/dt^order of Σ a_k t^k, Horner evaluation.
    let mut acc = 0.0;
    for k in (order..10).rev() {
        let mut c = BLEND[k];
        for j in 0..order {
            c *= (k - j) as f64;
        }
        acc = acc * t + c;
    }
    acc
}

/// φ(x): even, C⁴ across the blend joints.
pub fn phi(x: f64) -> f64 {
    let t = x.abs();
    if t < 1.0 {
        t * t
    } else if t < 2.0 {
        blend_deriv(t, 0)
    } else {
        0.0
    }
}

/// φ′(x) (odd).
pub fn phi_prime(x: f64) -> f64 {
    let t = x.abs();
    let d = if t < 1.0 {
        2.0 * t
    } else if t < 2.0 {
        blend_deriv(t, 1)
    } else {
        0.0
    };
    d * x.signum()
}

/// φ″(x) (even).
pub fn phi_second(x: f64) -> f64 {
    let t = x.abs();
    if t < 1.0 {
        2.0
    } else if t < 2.0 {
        blend_deriv(t, 2)
    } else {
        0.0
    }
}

/// φ⁗(x) (even).
pub fn phi_fourth(x: f64) -> f64 {
    let t = x.abs();
    if t < 1.0 {
        0.0
    } else if t < 2.0 {
        blend_deriv(t, 4)
    } else {
        0.0
    }
}

/// One virial sample: the variance-type quantities, their analytic first
/// time derivatives, and the second-derivative sources K_γ, A_R, F_R.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VirialSample {
    pub t: f64,
    /// J = ∫ x²|u|²
    pub j: f64,
    /// J_R = ∫ R²φ(x/R)|u|²
    pub j_r: f64,
    /// dJ/dt = 4 Im ∫ x u′ ū
    pub dj_dt: f64,
    /// dJ_R/dt = 2R Im ∫ φ′(x/R) u′ ū
    pub djr_dt: f64,
    /// K_γ(u)
    pub k_gamma: f64,
    /// Localized correction A_R(u)
    pub a_r: f64,
    /// F_R = 8K_γ + A_R (exact by construction)
    pub f_r: f64,
}

impl VirialSample {
    pub fn csv_header() -> &'static str {
        "J [x^2 L2^2],J_R,dJ_dt,dJR_dt,K_gamma,A_R,F_R"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.j, self.j_r, self.dj_dt, self.djr_dt, self.k_gamma, self.a_r, self.f_r
        )
    }
}

/// Virial quantities of one state at cutoff radius R (`t` left at 0).
///
/// With `linear_only` the focusing term is dropped from both K_γ and A_R so
/// the identity matches the linear flow.
pub fn virial_quantities(u: &GridFunction, r: f64, params: &Params) -> VirialSample {
    virial_quantities_inner(u, r, params, false)
}

pub fn virial_quantities_linear(u: &GridFunction, r: f64, params: &Params) -> VirialSample {
    virial_quantities_inner(u, r, params, true)
}

fn virial_quantities_inner(
    u: &GridFunction,
    r: f64,
    params: &Params,
    linear_only: bool,
) -> VirialSample {
    assert!(r > 0.0, "cutoff radius must be positive");
    let p = params.p;
    let du = u.derivative();
    let spec = &u.spec;

    let j = quadrature_nodes(spec, |i, x| x * x * u.values[i].norm_sqr());
    let j_r = quadrature_nodes(spec, |i, x| r * r * phi(x / r) * u.values[i].norm_sqr());
    let dj_dt =
        4.0 * quadrature_nodes(spec, |i, x| x * (du.values[i] * u.values[i].conj()).im);
    let djr_dt = 2.0
        * r
        * quadrature_nodes(spec, |i, x| {
            phi_prime(x / r) * (du.values[i] * u.values[i].conj()).im
        });

    // A_R = −4∫_{|x|>R} (2 − φ″(x/R)) {|u′|² − ((p−1)/(2(p+1)))|u|^{p+1}}
    //       − (1/R²)∫_{R<|x|<2R} φ⁗(x/R)|u|².
    let focus_coeff = if linear_only { 0.0 } else { (p - 1.0) / (2.0 * (p + 1.0)) };
    let a_main = quadrature_nodes(spec, |i, x| {
        if x.abs() > r {
            let w = 2.0 - phi_second(x / r);
            let m2 = u.values[i].norm_sqr();
            let focus = if linear_only { 0.0 } else { focus_coeff * m2.powf(0.5 * (p + 1.0)) };
            w * (du.values[i].norm_sqr() - focus)
        } else {
            0.0
        }
    });
    let a_fourth = blend_fourth_integral(u, r);
    let a_r = -4.0 * a_main - a_fourth / (r * r);

    // K_γ (focusing term dropped in linear mode).
    let rep = report(u, params);
    let k_gamma = if linear_only {
        rep.virial_k + (p - 1.0) / (2.0 * (p + 1.0)) * rep.lp1_norm_p1
    } else {
        rep.virial_k
    };

    VirialSample { t: 0.0, j, j_r, dj_dt, djr_dt, k_gamma, a_r, f_r: 8.0 * k_gamma + a_r }
}

/// ∫_{R<|x|<2R} φ⁗(x/R)|u|² dx with the wild blend polynomial handled
/// exactly: per grid cell the quartic-derivative polynomial is integrated in
/// closed form against a centered cubic interpolant of |u|² (5-point
/// Gauss–Legendre, exact for the degree-8 product), so the quadrature error
/// is governed by the smooth field, not by φ⁗'s large coefficients.
fn blend_fourth_integral(u: &GridFunction, r: f64) -> f64 {
    let spec = &u.spec;
    let h = spec.h();
    let n = spec.len();
    let m2 = |i: usize| u.values[i.clamp(0, n - 1)].norm_sqr();
    // 5-point Gauss–Legendre on [-1, 1].
    const GL_X: [f64; 5] = [
        -0.906179845938664,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.906179845938664,
    ];
    const GL_W: [f64; 5] = [
        0.23692688505618908,
        0.47862867049936647,
        0.5688888888888889,
        0.47862867049936647,
        0.23692688505618908,
    ];
    let mut total = 0.0;
    for side in [-1.0f64, 1.0] {
        // Cells overlapping (R, 2R) on this side.
        let lo = r;
        let hi = 2.0 * r;
        let i_start = (lo / h).floor() as i64;
        let i_end = (hi / h).ceil() as i64;
        for cell in i_start..=i_end {
            let a = (cell as f64 * h).max(lo);
            let b = ((cell + 1) as f64 * h).min(hi);
            if b <= a {
                continue;
            }
            // Cubic interpolation stencil around this cell (indices in the
            // storage layout, mirrored for the negative side).
            let base = spec.center() as i64 + side as i64 * cell;
            let (j0, j1, j2, j3) = if side > 0.0 {
                (base - 1, base, base + 1, base + 2)
            } else {
                (base + 1, base, base - 1, base - 2)
            };
            let f = [
                m2(j0.clamp(0, n as i64 - 1) as usize),
                m2(j1.clamp(0, n as i64 - 1) as usize),
                m2(j2.clamp(0, n as i64 - 1) as usize),
                m2(j3.clamp(0, n as i64 - 1) as usize),
            ];
            // Cubic through nodes at s = -1, 0, 1, 2 where s = (|x| - cell·h)/h.
            let interp = |s: f64| -> f64 {
                let l0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
                let l1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
                let l2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
                let l3 = (s + 1.0) * s * (s - 1.0) / 6.0;
                f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
            };
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = 0.0;
            for k in 0..5 {
                let t = mid + half * GL_X[k];
                let s = (t - cell as f64 * h) / h;
                acc += GL_W[k] * phi_fourth(t / r) * interp(s);
            }
            total += acc * half;
        }
    }
    total
}

/// Residuals of the localized virial identities along a recorded trajectory:
/// centered finite differences of J_R against dJ_R/dt (first order) and of
/// dJ_R/dt against F_R (second order), normalized by max|F_R|.
#[derive(Debug, Clone, Copy)]
pub struct VirialResiduals {
    pub max_first_order: f64,
    pub max_second_order: f64,
    /// Normalization used: max over samples of |F_R|.
    pub f_r_scale: f64,
}

pub fn virial_identity_residual(traj: &Trajectory, _r: f64) -> Result<VirialResiduals> {
    let v = &traj.virial;
    if v.len() < 3 {
        return Err(Error::InsufficientSamples { need: 3, have: v.len() });
    }
    let f_r_scale = v.iter().map(|s| s.f_r.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut max1 = 0.0f64;
    let mut max2 = 0.0f64;
    for k in 1..v.len() - 1 {
        let dt_plus = v[k + 1].t - v[k].t;
        let dt_minus = v[k].t - v[k - 1].t;
        if dt_plus <= 0.0 || dt_minus <= 0.0 {
            continue;
        }
        // Non-uniform centered difference.
        let d_jr = (v[k + 1].j_r - v[k - 1].j_r) / (dt_plus + dt_minus);
        let d_djr = (v[k + 1].djr_dt - v[k - 1].djr_dt) / (dt_plus + dt_minus);
        max1 = max1.max((d_jr - v[k].djr_dt).abs());
        max2 = max2.max((d_djr - v[k].f_r).abs());
    }
    Ok(VirialResiduals {
        max_first_order: max1 / f_r_scale,
        max_second_order: max2 / f_r_scale,
        f_r_scale,
    })
}

/// Weighted-momentum check: lhs = |Im ∫ φ′ u′ ū|, rhs_scale = μ_γ(u)²·∫|φ′|²|u|²,
/// ratio = lhs/rhs_scale. For even data on the mass-energy threshold the
/// ratio is bounded by an absolute constant.
#[derive(Debug, Clone, Copy)]
pub struct WeightedMomentum {
    pub lhs: f64,
    pub rhs_scale: f64,
    pub ratio: f64,
    pub mu_gamma: f64,
}

pub fn weighted_momentum_check<F: Fn(f64) -> f64>(
    u: &GridFunction,
    phi_prime_fn: F,
    params: &Params,
    me_tolerance: f64,
) -> Result<WeightedMomentum> {
    if !u.check_even(1e-6) {
        return Err(Error::Precondition("weighted momentum check requires even data".into()));
    }
    let n = crate::groundstate::norms_q(params);
    let rep = report(u, params);
    let e_q = 0.5 * n.kinetic - n.lp1 / (params.p + 1.0);
    let me_m = (rep.mass - 2.0 * n.mass).abs() / (2.0 * n.mass);
    let me_e = (rep.energy_gamma - 2.0 * e_q).abs() / (2.0 * e_q).abs();
    if me_m > me_tolerance || me_e > me_tolerance {
        return Err(Error::Precondition(format!(
            "mass-energy condition violated: rel mass dev {me_m}, rel energy dev {me_e}"
        )));
    }
    let du = u.derivative();
    let lhs = quadrature_nodes(&u.spec, |i, x| {
        phi_prime_fn(x) * (du.values[i] * u.values[i].conj()).im
    })
    .abs();
    let weight = quadrature_nodes(&u.spec, |i, x| {
        let w = phi_prime_fn(x);
        w * w * u.values[i].norm_sqr()
    });
    let rhs_scale = rep.mu_gamma * rep.mu_gamma * weight;
    Ok(WeightedMomentum {
        lhs,
        rhs_scale,
        ratio: if rhs_scale > 0.0 { lhs / rhs_scale } else { f64::INFINITY },
        mu_gamma: rep.mu_gamma,
    })
}
