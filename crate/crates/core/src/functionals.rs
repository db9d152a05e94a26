//! Scalar functionals of a state (mass, energy, action, virial, Nehari, μ_γ),
//! the generalized scaling-derivative family K^{α,β}, sharp
//! Gagliardo–Nirenberg constants, threshold quantities, the frequency
//! resolver, the norm/virial sign condition, and the scaling reduction map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dirichlet_gamma_form, quadrature, GridFunction, GridSpec};
use crate::groundstate::{norms_q, norms_q_omega_gamma, QNorms};
use crate::params::Params;

/// Sign with a resolution band: values within the band count as Zero, which
/// on threshold data signals insufficient resolution rather than a genuine
/// zero (the zero case does not occur there).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: f64, scale: f64) -> Sign {
        if value.abs() < 1e-8 * scale.abs().max(f64::MIN_POSITIVE) {
            Sign::Zero
        } else if value > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Sign::Negative => "-",
            Sign::Zero => "0",
            Sign::Positive => "+",
        }
    }
}

/// All scalar functionals of one state.
///
/// `action` and `nehari_i` are taken at the frequency recorded in `omega`
/// (`params.omega`, defaulting to 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FunctionalReport {
    /// M = ‖f‖²_{L²}
    pub mass: f64,
    /// E_γ = ½‖f′‖² − (γ/2)|f(0)|² − (1/(p+1))‖f‖^{p+1}_{p+1}
    pub energy_gamma: f64,
    /// S_{ω,γ} = E_γ + (ω/2)M
    pub action: f64,
    /// K_γ = ‖f′‖² − (γ/2)|f(0)|² − ((p−1)/(2(p+1)))‖f‖^{p+1}_{p+1}
    pub virial_k: f64,
    /// I_{ω,γ} = ‖f′‖² − γ|f(0)|² + ω‖f‖² − ‖f‖^{p+1}_{p+1}
    pub nehari_i: f64,
    /// μ_γ = 2‖Q′‖² − ‖f‖²_{Ḣ¹_γ}
    pub mu_gamma: f64,
    /// ‖f‖²_{H¹_{ω,γ}} = ‖f′‖² + |γ||f(0)|² + ω‖f‖²
    pub h1_omega_gamma_sq: f64,
    /// ‖f‖²_{Ḣ¹_γ} = ‖f′‖² + |γ||f(0)|²
    pub hdot1_gamma_sq: f64,
    /// ‖f‖^{p+1}_{L^{p+1}}
    pub lp1_norm_p1: f64,
    /// Frequency used for `action` and `nehari_i`.
    pub omega: f64,
}

impl FunctionalReport {
    /// One CSV row; see [`FunctionalReport::csv_header`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.mass,
            self.energy_gamma,
            self.action,
            self.virial_k,
            self.nehari_i,
            self.mu_gamma,
            self.h1_omega_gamma_sq,
            self.hdot1_gamma_sq,
            self.lp1_norm_p1,
            self.omega
        )
    }

    pub fn csv_header() -> &'static str {
        "mass M [L2^2],energy E_gamma,action S_omega_gamma,virial K_gamma,\
         nehari I_omega_gamma,mu_gamma,h1_omega_gamma_sq,hdot1_gamma_sq,\
         lp1_norm^(p+1),omega [1/time]"
    }
}

/// All functionals of one state by grid quadrature and the discrete delta
/// form. The μ_γ reference 2‖Q′‖² is the continuum value from [`norms_q`].
pub fn report(f: &GridFunction, params: &Params) -> FunctionalReport {
    report_with_reference(f, params, &norms_q(params))
}

/// [`report`] with a precomputed `norms_q` reference (hot paths).
pub fn report_with_reference(
    f: &GridFunction,
    params: &Params,
    q_norms: &QNorms,
) -> FunctionalReport {
    let p = params.p;
    let omega = params.omega_or_one();
    let mass = quadrature(f, 2.0);
    let lp1 = quadrature(f, p + 1.0);
    let hdot_gamma = dirichlet_gamma_form(f, f, params.gamma).expect("same spec").re;
    let abs_g0_sq = f.at_zero().norm_sqr();
    // ‖f′‖² alone: remove the point term |γ||f(0)|².
    let grad_sq = hdot_gamma - params.abs_gamma() * abs_g0_sq;

    let energy_gamma = 0.5 * grad_sq - 0.5 * params.gamma * abs_g0_sq - lp1 / (p + 1.0);
    let virial_k =
        grad_sq - 0.5 * params.gamma * abs_g0_sq - (p - 1.0) / (2.0 * (p + 1.0)) * lp1;
    let nehari_i = grad_sq - params.gamma * abs_g0_sq + omega * mass - lp1;
    let mu_gamma = 2.0 * q_norms.kinetic - hdot_gamma;

    FunctionalReport {
        mass,
        energy_gamma,
        action: energy_gamma + 0.5 * omega * mass,
        virial_k,
        nehari_i,
        mu_gamma,
        h1_omega_gamma_sq: hdot_gamma + omega * mass,
        hdot1_gamma_sq: hdot_gamma,
        lp1_norm_p1: lp1,
        omega,
    }
}

/// Generalized functional K^{α,β}_{ω,γ}(f) = ∂_λ S_{ω,γ}(e^{αλ}f(e^{βλ}·))|_{λ=0}:
///
/// ((2α+β)/2)‖f′‖² − αγ|f(0)|² + ω((2α−β)/2)‖f‖² − (((p+1)α−β)/(p+1))‖f‖^{p+1}.
pub fn k_alpha_beta(f: &GridFunction, alpha: f64, beta: f64, params: &Params) -> f64 {
    let p = params.p;
    let omega = params.omega_or_one();
    let mass = quadrature(f, 2.0);
    let lp1 = quadrature(f, p + 1.0);
    let hdot_gamma = dirichlet_gamma_form(f, f, params.gamma).expect("same spec").re;
    let abs_g0_sq = f.at_zero().norm_sqr();
    let grad_sq = hdot_gamma - params.abs_gamma() * abs_g0_sq;

    0.5 * (2.0 * alpha + beta) * grad_sq - alpha * params.gamma * abs_g0_sq
        + 0.5 * omega * (2.0 * alpha - beta) * mass
        - ((p + 1.0) * alpha - beta) / (p + 1.0) * lp1
}

/// Sharp Gagliardo–Nirenberg constants at the frequency in `params`
/// (default 1): `c_omega0_inv` is C_{ω,0}⁻¹ = ‖Q_{ω,0}‖^{p−1}_{p+1}, and
/// `delta_best_inv` = 2^{(p−1)/(p+1)}·C_{ω,0}⁻¹ is the reciprocal of the
/// optimal (unattained) even/delta constant 2^{−(p−1)/(p+1)}C_{ω,0}.
#[derive(Debug, Clone, Copy)]
pub struct GnConstants {
    pub c_omega0_inv: f64,
    pub delta_best_inv: f64,
}

pub fn gn_constants(params: &Params) -> GnConstants {
    let p = params.p;
    let omega = params.omega_or_one();
    let n = norms_q(params);
    // ‖Q_ω‖^{p+1}_{p+1} = ω^{(p+1)/(p−1) − 1/2}‖Q‖^{p+1}_{p+1}.
    let lp1_omega = omega.powf((p + 1.0) / (p - 1.0) - 0.5) * n.lp1;
    let c_omega0_inv = lp1_omega.powf((p - 1.0) / (p + 1.0));
    GnConstants {
        c_omega0_inv,
        delta_best_inv: 2f64.powf((p - 1.0) / (p + 1.0)) * c_omega0_inv,
    }
}

/// Threshold quantities at frequency ω: n_{ω,0} = ω^{1−s_c}S_{1,0}(Q), and
/// r_{ω,γ} = 2n_{ω,0} in the low-frequency regime ω ≤ γ²/4; for ω > γ²/4
/// the infimum is attained and equals S_{ω,γ}(Q_{ω,γ}).
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub n_omega0: f64,
    pub r_omega_gamma: f64,
    /// true iff ω > γ²/4 and r_omega_gamma = S_{ω,γ}(Q_{ω,γ}) is attained.
    pub attained: bool,
}

pub fn thresholds(params: &Params) -> Result<Thresholds> {
    let omega =
        params.omega.ok_or_else(|| Error::Domain("thresholds requires omega".into()))?;
    let p = params.p;
    let n = norms_q(params);
    let s10 = 0.5 * n.kinetic - n.lp1 / (p + 1.0) + 0.5 * n.mass;
    let n_omega0 = omega.powf(1.0 - params.s_c()) * s10;
    if omega > params.gamma * params.gamma / 4.0 {
        let g = norms_q_omega_gamma(params)?;
        let e_gamma =
            0.5 * g.kinetic - 0.5 * params.gamma * g.at_zero * g.at_zero - g.lp1 / (p + 1.0);
        Ok(Thresholds { n_omega0, r_omega_gamma: e_gamma + 0.5 * omega * g.mass, attained: true })
    } else {
        Ok(Thresholds { n_omega0, r_omega_gamma: 2.0 * n_omega0, attained: false })
    }
}

/// Unique ω ∈ (0, γ²/4] with M(f) = 2M(Q_{ω,0}) = 2ω^{−s_c}M(Q), i.e.
/// ω = (2M(Q)/M(f))^{1/s_c}. Fails with `MassTooSmall` when
/// M(f) < 2M(Q_{γ²/4,0}) (the high-frequency regime).
pub fn resolve_omega(f: &GridFunction, params: &Params) -> Result<f64> {
    let mass = quadrature(f, 2.0);
    resolve_omega_from_mass(mass, params)
}

pub fn resolve_omega_from_mass(mass: f64, params: &Params) -> Result<f64> {
    let n = norms_q(params);
    let s_c = params.s_c();
    let quarter = params.gamma * params.gamma / 4.0;
    let cutoff = 2.0 * quarter.powf(-s_c) * n.mass;
    if mass < cutoff {
        return Err(Error::MassTooSmall { mass, cutoff });
    }
    Ok((2.0 * n.mass / mass).powf(1.0 / s_c))
}

/// Output of the sign condition: the virial sign, the norm-product sign
/// √2‖Q‖^{1−s_c}_{L²}‖Q‖^{s_c}_{Ḣ¹} − ‖f‖^{1−s_c}_{L²}‖f‖^{s_c}_{Ḣ¹_γ},
/// and their agreement. The two are equivalent for data below/at the
/// threshold with low-frequency mass.
#[derive(Debug, Clone, Copy)]
pub struct SignCondition {
    pub k_sign: Sign,
    pub norm_sign: Sign,
    pub agree: bool,
}

impl SignCondition {
    /// False when either sign fell inside the zero band — on threshold data
    /// that means insufficient resolution, not a true zero.
    pub fn is_resolved(&self) -> bool {
        self.k_sign != Sign::Zero && self.norm_sign != Sign::Zero
    }
}

pub fn sign_condition(f: &GridFunction, params: &Params) -> Result<SignCondition> {
    let n = norms_q(params);
    let s_c = params.s_c();
    let rep = report_with_reference(f, params, &n);

    // Preconditions: E_γ(f)M(f)^{(1−s_c)/s_c} ≤ 2^{1/s_c}E(Q)M(Q)^{(1−s_c)/s_c}
    // and M(f) ≥ 2M(Q_{γ²/4,0}).
    let e_q = 0.5 * n.kinetic - n.lp1 / (params.p + 1.0);
    let me_f = rep.energy_gamma * rep.mass.powf((1.0 - s_c) / s_c);
    let me_threshold = 2f64.powf(1.0 / s_c) * e_q * n.mass.powf((1.0 - s_c) / s_c);
    if me_f > me_threshold * (1.0 + 1e-6) {
        return Err(Error::Precondition(format!(
            "mass-energy product {me_f} above threshold {me_threshold}"
        )));
    }
    let quarter = params.gamma * params.gamma / 4.0;
    let cutoff = 2.0 * quarter.powf(-s_c) * n.mass;
    if rep.mass < cutoff * (1.0 - 1e-6) {
        return Err(Error::Precondition(format!(
            "mass {} below low-frequency cutoff {cutoff}",
            rep.mass
        )));
    }

    let norm_ref = 2f64.sqrt() * n.mass.powf(0.5 * (1.0 - s_c)) * n.kinetic.powf(0.5 * s_c);
    let norm_val =
        norm_ref - rep.mass.powf(0.5 * (1.0 - s_c)) * rep.hdot1_gamma_sq.powf(0.5 * s_c);
    let k_scale = rep.hdot1_gamma_sq.max(1e-300);
    let k_sign = Sign::of(rep.virial_k, k_scale);
    let norm_sign = Sign::of(norm_val, norm_ref);
    Ok(SignCondition { k_sign, norm_sign, agree: k_sign == norm_sign })
}

/// Scaling reduction f ↦ ω^{−1/(p−1)} f(ω^{−1/2}·) on a rescaled grid,
/// mapping mass-energy data at frequency ω to frequency 1 with coupling
/// γ̃ = ω^{−1/2}γ. E_γ and K_γ both scale by ω^{−(p+3)/(2(p−1))}, so
/// K-signs are preserved.
pub fn rescale(f: &GridFunction, omega: f64, params: &Params) -> Result<(GridFunction, Params)> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("rescale requires omega > 0, got {omega}")));
    }
    let amp = omega.powf(-1.0 / (params.p - 1.0));
    let sw = omega.sqrt();
    let spec = GridSpec::new(f.spec.half_width * sw, f.spec.n_half)?;
    let values = f.values.iter().map(|&v| amp * v).collect();
    let scaled = GridFunction { spec, values, even_hint: f.even_hint };
    let params_scaled = Params {
        gamma: params.gamma / sw,
        p: params.p,
        omega: params.omega.map(|w| w / omega),
    };
    Ok((scaled, params_scaled))
}
