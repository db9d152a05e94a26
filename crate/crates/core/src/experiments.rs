//! Threshold data construction, the scattering/blow-up dichotomy classifier,
//! and the mass–energy plane sweep.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig, Termination, Trajectory};
use crate::functionals::{report_with_reference, sign_condition, Sign};
use crate::grid::{quadrature, sample, GridFunction, GridSpec};
use crate::groundstate::{eval_q, norms_q, QNorms};
use crate::params::Params;

/// Shape family for threshold data; all profiles are even by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// a·Q(λ(|x|−y0)) — two bumps at ±y0.
    TwoBump,
    /// a·Q(λx) — one centered bump.
    DilatedBump,
    /// a·Q(λ(|x|−y0))·e^{ibx²} — two bumps with quadratic phase.
    PhaseModulated,
}

/// Family description: the profile kind and its shape parameters. The
/// amplitude a and dilation λ are determined by the Newton projection onto
/// the mass-energy condition.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdFamily {
    pub kind: ProfileKind,
    /// Bump separation (TwoBump, PhaseModulated).
    pub y0: f64,
    /// Quadratic-phase coefficient (PhaseModulated).
    pub b: f64,
}

impl ThresholdFamily {
    pub fn two_bump(y0: f64) -> Self {
        ThresholdFamily { kind: ProfileKind::TwoBump, y0, b: 0.0 }
    }

    pub fn dilated_bump() -> Self {
        ThresholdFamily { kind: ProfileKind::DilatedBump, y0: 0.0, b: 0.0 }
    }

    pub fn phase_modulated(y0: f64, b: f64) -> Self {
        ThresholdFamily { kind: ProfileKind::PhaseModulated, y0, b }
    }

    fn profile(&self, a: f64, lambda: f64, spec: GridSpec, params: &Params) -> GridFunction {
        let kind = self.kind;
        let y0 = self.y0;
        let b = self.b;
        let params = *params;
        sample(
            move |x| {
                let base = match kind {
                    ProfileKind::DilatedBump => eval_q(lambda * x, &params),
                    ProfileKind::TwoBump | ProfileKind::PhaseModulated => {
                        eval_q(lambda * (x.abs() - y0), &params)
                    }
                };
                let phase = if kind == ProfileKind::PhaseModulated { b * x * x } else { 0.0 };
                Complex64::from_polar(a * base, phase)
            },
            spec,
        )
        .expect("profile is finite")
    }
}

/// One (a, λ) solution branch of the mass-energy system with its virial sign.
#[derive(Debug, Clone, Copy)]
pub struct Branch {
    pub amplitude: f64,
    pub lambda: f64,
    pub virial_k: f64,
}

/// All branches of M = 2M(Q), E_γ = 2E(Q) within the family at its fixed
/// shape parameters: the amplitude is eliminated through the exact mass
/// relation M(a·profile) = a²·M(profile), and the remaining scalar equation
/// E(λ) = 2E(Q) is root-scanned in λ and polished by secant iteration.
pub fn me_branches(
    fam: &ThresholdFamily,
    spec: GridSpec,
    params: &Params,
) -> Result<Vec<Branch>> {
    let n = norms_q(params);
    let e_target = 2.0 * (0.5 * n.kinetic - n.lp1 / (params.p + 1.0));
    let m_target = 2.0 * n.mass;

    let amp_for = |lambda: f64| -> f64 {
        let unit = fam.profile(1.0, lambda, spec, params);
        (m_target / quadrature(&unit, 2.0)).sqrt()
    };
    let energy_gap = |lambda: f64| -> f64 {
        let a = amp_for(lambda);
        let f = fam.profile(a, lambda, spec, params);
        report_with_reference(&f, params, &n).energy_gamma - e_target
    };

    // Log-spaced λ scan; bracketed sign changes are polished by secant.
    let lam_min: f64 = 0.01;
    let lam_max: f64 = 5.0;
    let steps = 120;
    let mut lams = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        lams.push(lam_min * (lam_max / lam_min).powf(t));
    }
    let gaps: Vec<f64> = lams.iter().map(|&l| energy_gap(l)).collect();

    let mut branches = Vec::new();
    for k in 0..steps {
        if gaps[k] == 0.0 {
            branches.push(lams[k]);
            continue;
        }
        if gaps[k] * gaps[k + 1] < 0.0 {
            let mut x0 = lams[k];
            let mut x1 = lams[k + 1];
            let mut f0 = gaps[k];
            let mut f1 = gaps[k + 1];
            for _ in 0..80 {
                if (f1 - f0).abs() < 1e-300 {
                    break;
                }
                let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                let x2 = x2.clamp(lams[k].min(lams[k + 1]), lams[k].max(lams[k + 1]));
                let f2 = energy_gap(x2);
                x0 = x1;
                f0 = f1;
                x1 = x2;
                f1 = f2;
                if f1.abs() < 1e-12 * e_target.abs() {
                    break;
                }
            }
            branches.push(x1);
        }
    }

    Ok(branches
        .into_iter()
        .map(|lambda| {
            let a = amp_for(lambda);
            let f = fam.profile(a, lambda, spec, params);
            Branch {
                amplitude: a,
                lambda,
                virial_k: report_with_reference(&f, params, &n).virial_k,
            }
        })
        .collect())
}

/// Construct even threshold data with the requested virial sign: solve the
/// mass-energy system over the family, then pick the branch whose K_γ sign
/// matches, falling over to nearby shape parameters when no branch does.
pub fn build_threshold_data(
    fam: &ThresholdFamily,
    k_sign_target: Sign,
    spec: GridSpec,
    params: &Params,
) -> Result<GridFunction> {
    if params.gamma > -2.0 {
        return Err(Error::Precondition(format!(
            "threshold construction expects the normalized regime gamma <= -2, got {}",
            params.gamma
        )));
    }
    let attempts: Vec<ThresholdFamily> = match fam.kind {
        ProfileKind::DilatedBump => vec![*fam],
        _ => vec![
            *fam,
            ThresholdFamily { y0: 0.75 * fam.y0, ..*fam },
            ThresholdFamily { y0: 1.5 * fam.y0, ..*fam },
            ThresholdFamily { b: fam.b + 0.05, ..*fam },
            ThresholdFamily { b: fam.b - 0.05, ..*fam },
        ],
    };
    for attempt in &attempts {
        let branches = me_branches(attempt, spec, params)?;
        let chosen = match k_sign_target {
            Sign::Positive => branches.iter().filter(|b| b.virial_k > 0.0).min_by(|a, b| {
                a.lambda.total_cmp(&b.lambda)
            }),
            Sign::Negative => branches.iter().filter(|b| b.virial_k < 0.0).max_by(|a, b| {
                a.lambda.total_cmp(&b.lambda)
            }),
            Sign::Zero => None,
        };
        if let Some(branch) = chosen {
            return Ok(attempt.profile(branch.amplitude, branch.lambda, spec, params));
        }
    }
    Err(Error::NoBranch(format!(
        "family {:?} has no branch with K sign {:?}",
        fam.kind, k_sign_target
    )))
}

/// Classification label of one datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Scatter,
    BlowUp,
    Undetermined,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Scatter => "Scatter",
            Label::BlowUp => "BlowUp",
            Label::Undetermined => "Undetermined",
        }
    }
}

/// Evidence gathered by the two-resolution classifier.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Evidence {
    pub k_sign: Sign,
    /// Final mass fraction inside |x| ≤ 10 (coarse run).
    pub final_local_mass_fraction: f64,
    /// max ‖u′‖/‖u₀′‖ over the coarse run.
    pub gradient_growth_factor: f64,
    /// Fine and coarse runs agreed.
    pub refinement_agree: bool,
    /// Detected blow-up times (coarse, fine) when applicable.
    pub t_star: Option<(f64, f64)>,
    /// End time of the coarse run.
    pub t_final: f64,
}

/// Classifier output; `Undetermined` is a value, not an error.
#[derive(Debug, Clone)]
pub struct ClassificationResult {
    pub label: Label,
    pub evidence: Evidence,
    pub coarse: Trajectory,
    pub fine: Trajectory,
}

/// Per-run outcome distilled from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RunOutcome {
    /// Completed with final local mass fraction.
    Completed(f64),
    Blowup(f64),
    Contaminated,
}

fn run_outcome(traj: &Trajectory) -> RunOutcome {
    match traj.termination {
        Termination::Completed => {
            RunOutcome::Completed(traj.probes.last().map(|p| p.local_mass_fraction).unwrap_or(1.0))
        }
        Termination::BlowupDetected(t) => RunOutcome::Blowup(t),
        Termination::BoundaryContamination(_) => RunOutcome::Contaminated,
    }
}

/// Two-resolution dichotomy classification: evolve at (h, dt) and (h/2, dt/2)
/// (the fine initial state is the cubic refinement of `u0`), then
///
/// * Scatter iff both runs complete with local mass in |x| ≤ 10 below 10% of
///   M(u₀) by t_end and K_γ(u(t)) > 0 at every record;
/// * BlowUp iff both runs trip the blow-up detector with t* within 5%;
/// * anything else (including boundary contamination) is Undetermined.
pub fn classify(
    u0: &GridFunction,
    params: &Params,
    cfg: &EvolutionConfig,
) -> Result<ClassificationResult> {
    let u0_fine = u0.refine();
    classify_pair(u0, &u0_fine, params, cfg)
}

/// [`classify`] with an explicitly constructed fine-grid initial state
/// (used when the datum can be rebuilt exactly at the finer resolution).
pub fn classify_pair(
    u0: &GridFunction,
    u0_fine: &GridFunction,
    params: &Params,
    cfg: &EvolutionConfig,
) -> Result<ClassificationResult> {
    let n = norms_q(params);
    let k0 = report_with_reference(u0, params, &n).virial_k;
    let k_sign = Sign::of(k0, report_with_reference(u0, params, &n).hdot1_gamma_sq);

    let coarse = evolve(u0, cfg, params)?;
    let fine_cfg = EvolutionConfig { dt0: 0.5 * cfg.dt0, ..cfg.clone() };
    let fine = evolve(u0_fine, &fine_cfg, params)?;

    let oc = run_outcome(&coarse);
    let of = run_outcome(&fine);

    let grad0 = coarse.probes.first().map(|p| p.grad_norm_sq).unwrap_or(1.0);
    let gradient_growth_factor = coarse
        .probes
        .iter()
        .map(|p| (p.grad_norm_sq / grad0).sqrt())
        .fold(0.0, f64::max);
    let final_local =
        coarse.probes.last().map(|p| p.local_mass_fraction).unwrap_or(1.0);
    let t_final = *coarse.times.last().unwrap_or(&0.0);

    let k_positive_throughout =
        |t: &Trajectory| t.reports.iter().all(|r| r.virial_k > 0.0);

    let (label, refinement_agree, t_star) = match (oc, of) {
        (RunOutcome::Completed(lc), RunOutcome::Completed(lf)) => {
            let scatter_c = lc < 0.10 && k_positive_throughout(&coarse);
            let scatter_f = lf < 0.10 && k_positive_throughout(&fine);
            if scatter_c && scatter_f {
                (Label::Scatter, true, None)
            } else {
                (Label::Undetermined, scatter_c == scatter_f, None)
            }
        }
        (RunOutcome::Blowup(tc), RunOutcome::Blowup(tf)) => {
            let agree = (tc - tf).abs() <= 0.05 * tc.abs().max(tf.abs());
            (
                if agree { Label::BlowUp } else { Label::Undetermined },
                agree,
                Some((tc, tf)),
            )
        }
        (RunOutcome::Blowup(tc), _) => (Label::Undetermined, false, Some((tc, f64::NAN))),
        (_, RunOutcome::Blowup(tf)) => (Label::Undetermined, false, Some((f64::NAN, tf))),
        _ => (Label::Undetermined, false, None),
    };

    Ok(ClassificationResult {
        label,
        evidence: Evidence {
            k_sign,
            final_local_mass_fraction: final_local,
            gradient_growth_factor,
            refinement_agree,
            t_star,
            t_final,
        },
        coarse,
        fine,
    })
}

/// One row of the mass–energy atlas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mass: f64,
    pub energy: f64,
    pub omega: Option<f64>,
    pub k_sign: Sign,
    pub label: Label,
    pub t_star_or_tend: f64,
    pub local_mass_fraction: f64,
    pub gradient_factor: f64,
    pub refinement_agree: bool,
}

impl SweepPoint {
    pub fn csv_header() -> &'static str {
        "mass M [L2^2],energy E_gamma,omega [1/time],k_sign,label,\
         t_star_or_tend [time],local_mass_fraction,gradient_factor,refinement_agree"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.mass,
            self.energy,
            self.omega.map(|w| w.to_string()).unwrap_or_else(|| "NA".into()),
            self.k_sign.symbol(),
            self.label.as_str(),
            self.t_star_or_tend,
            self.local_mass_fraction,
            self.gradient_factor,
            self.refinement_agree
        )
    }
}

/// Construct dilated-bump data with prescribed (M, E_γ): amplitude from the
/// exact mass relation, dilation from a scan + secant on the energy. Returns
/// the branch list (λ ascending).
pub fn build_mass_energy_data(
    mass: f64,
    energy: f64,
    spec: GridSpec,
    params: &Params,
) -> Result<Vec<GridFunction>> {
    let fam = ThresholdFamily::dilated_bump();
    let n = norms_q(params);
    let amp_for = |lambda: f64| -> f64 {
        let unit = fam.profile(1.0, lambda, spec, params);
        (mass / quadrature(&unit, 2.0)).sqrt()
    };
    let gap = |lambda: f64| -> f64 {
        let f = fam.profile(amp_for(lambda), lambda, spec, params);
        report_with_reference(&f, params, &n).energy_gamma - energy
    };
    let lam_min: f64 = 0.01;
    let lam_max: f64 = 5.0;
    let steps = 120;
    let mut roots = Vec::new();
    let mut prev_l = lam_min;
    let mut prev_g = gap(lam_min);
    for k in 1..=steps {
        let l = lam_min * (lam_max / lam_min).powf(k as f64 / steps as f64);
        let g = gap(l);
        if prev_g * g < 0.0 {
            let mut x0 = prev_l;
            let mut x1 = l;
            let mut f0 = prev_g;
            let mut f1 = g;
            for _ in 0..80 {
                if (f1 - f0).abs() < 1e-300 {
                    break;
                }
                let x2 = (x1 - f1 * (x1 - x0) / (f1 - f0)).clamp(prev_l, l);
                let f2 = gap(x2);
                x0 = x1;
                f0 = f1;
                x1 = x2;
                f1 = f2;
                if f1.abs() < 1e-12 * energy.abs().max(1e-6) {
                    break;
                }
            }
            roots.push(x1);
        }
        prev_l = l;
        prev_g = g;
    }
    if roots.is_empty() {
        return Err(Error::NoBranch(format!(
            "no dilated-bump branch reaches (M, E) = ({mass}, {energy})"
        )));
    }
    Ok(roots.into_iter().map(|l| fam.profile(amp_for(l), l, spec, params)).collect())
}

/// Sweep the (M, E_γ) plane: for each grid point construct even data with
/// that mass and energy, classify it, and emit one atlas row. Points are
/// processed by a work queue over `jobs` threads; output order is by
/// (mass index, energy index) regardless of completion order. Per-point
/// failures become `Undetermined` rows.
pub fn sweep_plane(
    mass_grid: &[f64],
    energy_grid: &[f64],
    spec: GridSpec,
    params: &Params,
    cfg: &EvolutionConfig,
    jobs: usize,
) -> Vec<SweepPoint> {
    let points: Vec<(f64, f64)> = mass_grid
        .iter()
        .flat_map(|&m| energy_grid.iter().map(move |&e| (m, e)))
        .collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<SweepPoint>>> =
        points.iter().map(|_| std::sync::Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= points.len() {
                    break;
                }
                let (mass, energy) = points[idx];
                let row = sweep_one(mass, energy, spec, params, cfg);
                *results[idx].lock().unwrap() = Some(row);
            });
        }
    });

    results.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect()
}

fn sweep_one(
    mass: f64,
    energy: f64,
    spec: GridSpec,
    params: &Params,
    cfg: &EvolutionConfig,
) -> SweepPoint {
    let omega = crate::functionals::resolve_omega_from_mass(mass, params).ok();
    match build_mass_energy_data(mass, energy, spec, params) {
        Ok(branches) => {
            let u0 = &branches[0];
            match classify(u0, params, cfg) {
                Ok(res) => SweepPoint {
                    mass,
                    energy,
                    omega,
                    k_sign: res.evidence.k_sign,
                    label: res.label,
                    t_star_or_tend: res
                        .evidence
                        .t_star
                        .map(|(tc, _)| tc)
                        .unwrap_or(res.evidence.t_final),
                    local_mass_fraction: res.evidence.final_local_mass_fraction,
                    gradient_factor: res.evidence.gradient_growth_factor,
                    refinement_agree: res.evidence.refinement_agree,
                },
                Err(_) => undetermined_row(mass, energy, omega),
            }
        }
        Err(_) => undetermined_row(mass, energy, omega),
    }
}

fn undetermined_row(mass: f64, energy: f64, omega: Option<f64>) -> SweepPoint {
    SweepPoint {
        mass,
        energy,
        omega,
        k_sign: Sign::Zero,
        label: Label::Undetermined,
        t_star_or_tend: 0.0,
        local_mass_fraction: f64::NAN,
        gradient_factor: f64::NAN,
        refinement_agree: false,
    }
}

/// Random even H¹ field: a few symmetrized Gaussian bumps with complex
/// amplitudes (smooth, decaying). Used by the randomized probes.
pub fn random_even_field(rng: &mut ChaCha8Rng, spec: GridSpec) -> GridFunction {
    random_field(rng, spec, true)
}

/// Random (not necessarily even) H¹ field.
pub fn random_field(rng: &mut ChaCha8Rng, spec: GridSpec, even: bool) -> GridFunction {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..5.0),
                rng.gen_range(0.5..2.0),
            )
        })
        .collect();
    sample(
        |x| {
            let mut v = Complex64::new(0.0, 0.0);
            for &(re, im, center, width) in &bumps {
                let amp = Complex64::new(re, im);
                v += amp * (-((x - center) / width).powi(2)).exp();
                if even {
                    v += amp * (-((x + center) / width).powi(2)).exp();
                }
            }
            v
        },
        spec,
    )
    .expect("finite field")
}

/// Random threshold datum: a random family (kind, y0, b) projected onto the
/// mass-energy condition with a random K-sign target.
pub fn random_threshold_data(
    rng: &mut ChaCha8Rng,
    spec: GridSpec,
    params: &Params,
) -> Result<(GridFunction, Sign)> {
    let kind = match rng.gen_range(0..3) {
        0 => ProfileKind::TwoBump,
        1 => ProfileKind::DilatedBump,
        _ => ProfileKind::PhaseModulated,
    };
    let fam = ThresholdFamily {
        kind,
        y0: rng.gen_range(2.0..6.0),
        b: if kind == ProfileKind::PhaseModulated { rng.gen_range(-0.1..0.1) } else { 0.0 },
    };
    let target = if rng.gen_bool(0.5) { Sign::Positive } else { Sign::Negative };
    let data = build_threshold_data(&fam, target, spec, params)?;
    Ok((data, target))
}

/// Distilled mass-energy residuals of a constructed datum.
pub fn me_residuals(f: &GridFunction, params: &Params, q_norms: &QNorms) -> (f64, f64) {
    let rep = report_with_reference(f, params, q_norms);
    let e_q = 0.5 * q_norms.kinetic - q_norms.lp1 / (params.p + 1.0);
    (
        (rep.mass - 2.0 * q_norms.mass).abs() / (2.0 * q_norms.mass),
        (rep.energy_gamma - 2.0 * e_q).abs() / (2.0 * e_q).abs(),
    )
}

/// Sanity wrapper running `sign_condition` on a constructed datum.
pub fn check_sign_condition(f: &GridFunction, params: &Params) -> Result<bool> {
    Ok(sign_condition(f, params)?.agree)
}
