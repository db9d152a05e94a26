//! Time integration: Strang splitting with an exact nonlinear phase rotation
//! and a Crank–Nicolson (Cayley) linear substep, conservation monitoring,
//! adaptive stepping near blow-up, and trajectory recording.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::{report_with_reference, FunctionalReport};
use crate::grid::{quadrature_nodes, CnWorkspace, DeltaOperator, GridFunction};
use crate::groundstate::{norms_q, QNorms};
use crate::modulation::ModulationState;
use crate::params::Params;
use crate::virial::{virial_quantities, VirialSample};

/// Evolution configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Initial (and, without `adapt`, fixed) time step.
    pub dt0: f64,
    /// Final time; its sign selects the time direction.
    pub t_end: f64,
    /// Recording interval in |t|.
    pub record_every: f64,
    /// Blow-up detector: ‖u′‖ > factor·‖u₀′‖.
    pub blowup_gradient_factor: f64,
    /// Blow-up detector: ‖u‖_∞ > cap (absolute).
    pub blowup_sup_cap: f64,
    /// Shrink dt by the local nonlinear frequency (‖u‖_∞/‖u₀‖_∞)^{p−1}.
    pub adapt: bool,
    /// Integrate only the linear flow u_t = −iAu.
    pub linear_only: bool,
    /// Keep every k-th recorded state in the trajectory (0 = none).
    pub state_stride: usize,
    /// Record localized virial samples at this cutoff radius.
    pub virial_r: Option<f64>,
    /// Stop early once the local mass fraction in |x| ≤ 10 stays below
    /// `threshold` for `hold` time units (dispersal detector).
    pub stop_when_dispersed: Option<DispersalStop>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DispersalStop {
    pub threshold: f64,
    pub hold: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt0: 1e-3,
            t_end: 10.0,
            record_every: 0.1,
            blowup_gradient_factor: 100.0,
            blowup_sup_cap: f64::INFINITY,
            adapt: false,
            linear_only: false,
            state_stride: 0,
            virial_r: None,
            stop_when_dispersed: None,
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached t_end (possibly via the dispersal early stop).
    Completed,
    /// A blow-up detector fired at the given time.
    BlowupDetected(f64),
    /// Mass in the outer 10% of the grid exceeded 1e−8·M(u₀).
    BoundaryContamination(f64),
}

/// Cheap per-record probes that do not require storing the state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecordProbe {
    pub sup_norm: f64,
    pub grad_norm_sq: f64,
    /// Mass fraction inside |x| ≤ 10.
    pub local_mass_fraction: f64,
    /// Mass fraction in the outer 10% of the grid.
    pub outer_mass_fraction: f64,
}

/// Time series of states, functional reports, and diagnostics from one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Subsampled states: (record index, state).
    pub states: Vec<(usize, GridFunction)>,
    pub reports: Vec<FunctionalReport>,
    pub probes: Vec<RecordProbe>,
    pub virial: Vec<VirialSample>,
    pub modulations: Option<Vec<ModulationState>>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&GridFunction> {
        self.states.last().map(|(_, s)| s)
    }
}

/// One Strang step: half nonlinear phase, Crank–Nicolson linear solve, half
/// nonlinear phase. The linear substep is a Cayley transform (exactly
/// L²-conserving); the nonlinear substeps rotate the phase pointwise and
/// conserve |u|.
pub fn step(u: &GridFunction, dt: f64, params: &Params) -> Result<GridFunction> {
    let mut out = u.clone();
    let op = DeltaOperator::new(u.spec, params.gamma);
    let mut ws = CnWorkspace::default();
    step_in_place(&mut out.values, &op, dt, params, false, &mut ws)?;
    out.even_hint = out.check_even(1e-9);
    Ok(out)
}

fn step_in_place(
    u: &mut [Complex64],
    op: &DeltaOperator,
    dt: f64,
    params: &Params,
    linear_only: bool,
    ws: &mut CnWorkspace,
) -> Result<()> {
    if !linear_only {
        nonlinear_phase(u, 0.5 * dt, params);
    }
    op.crank_nicolson(u, 0.5 * dt, ws)?;
    if !linear_only {
        nonlinear_phase(u, 0.5 * dt, params);
    }
    Ok(())
}

/// u ← u·exp(i·dt·|u|^{p−1}); |u| is invariant, no nonlinear solve needed.
fn nonlinear_phase(u: &mut [Complex64], dt: f64, params: &Params) {
    let p = params.p;
    if (p - 7.0).abs() < 1e-14 {
        // |u|⁶ without powf on the hot path.
        for v in u.iter_mut() {
            let m2 = v.norm_sqr();
            let theta = dt * m2 * m2 * m2;
            *v *= Complex64::from_polar(1.0, theta);
        }
    } else {
        let e = 0.5 * (p - 1.0);
        for v in u.iter_mut() {
            let theta = dt * v.norm_sqr().powf(e);
            *v *= Complex64::from_polar(1.0, theta);
        }
    }
}

/// Integrate to `cfg.t_end` or until a detector fires, recording functional
/// reports (and optional states/virial samples) every `cfg.record_every`.
pub fn evolve(u0: &GridFunction, cfg: &EvolutionConfig, params: &Params) -> Result<Trajectory> {
    let q_norms = norms_q(params);
    let direction = if cfg.t_end >= 0.0 { 1.0 } else { -1.0 };
    let t_end_abs = cfg.t_end.abs();
    let op = DeltaOperator::new(u0.spec, params.gamma);
    let mut ws = CnWorkspace::default();

    let mut u = u0.clone();
    u.values[0] = Complex64::new(0.0, 0.0);
    let n = u.values.len();
    u.values[n - 1] = Complex64::new(0.0, 0.0);

    let sup0 = u.sup_norm().max(f64::MIN_POSITIVE);
    let grad0_sq = grad_norm_sq(&u);
    let mass0 = crate::grid::quadrature(&u, 2.0).max(f64::MIN_POSITIVE);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        reports: Vec::new(),
        probes: Vec::new(),
        virial: Vec::new(),
        modulations: None,
        termination: Termination::Completed,
    };

    let mut t = 0.0f64;
    let mut next_record = 0.0f64;
    let mut record_count = 0usize;
    let mut dispersed_since: Option<f64> = None;

    loop {
        // Record at (or past) the schedule.
        if t + 1e-12 >= next_record {
            record(&mut traj, &u, t * direction, cfg, params, &q_norms, &mut record_count);
            next_record += cfg.record_every;
            let probe = traj.probes.last().unwrap();

            // Detectors evaluated on the recorded probes.
            if probe.grad_norm_sq > cfg.blowup_gradient_factor.powi(2) * grad0_sq
                || probe.sup_norm > cfg.blowup_sup_cap
            {
                traj.termination = Termination::BlowupDetected(t * direction);
                break;
            }
            if probe.outer_mass_fraction > 1e-8 {
                traj.termination = Termination::BoundaryContamination(t * direction);
                break;
            }
            if let Some(stop) = cfg.stop_when_dispersed {
                if probe.local_mass_fraction < stop.threshold {
                    let since = *dispersed_since.get_or_insert(t);
                    if t - since >= stop.hold {
                        traj.termination = Termination::Completed;
                        break;
                    }
                } else {
                    dispersed_since = None;
                }
            }
        }
        if t >= t_end_abs - 1e-12 {
            traj.termination = Termination::Completed;
            break;
        }

        // Step size: adaptive shrink by the local nonlinear frequency, and
        // never step past the next record or the end time.
        let mut dt = cfg.dt0;
        if cfg.adapt {
            let ratio = u.sup_norm() / sup0;
            dt = cfg.dt0 / ratio.powf(params.p - 1.0).max(1.0);
        }
        dt = dt.min(next_record - t).min(t_end_abs - t);
        if dt <= 0.0 {
            dt = cfg.dt0.min(1e-12);
        }

        step_in_place(&mut u.values, &op, direction * dt, params, cfg.linear_only, &mut ws)?;
        t += dt;

        // Blow-up sup check every step while adapting (cheap, O(n)).
        if cfg.adapt && u.sup_norm() > cfg.blowup_sup_cap {
            record(&mut traj, &u, t * direction, cfg, params, &q_norms, &mut record_count);
            traj.termination = Termination::BlowupDetected(t * direction);
            break;
        }
    }
    let _ = mass0;
    Ok(traj)
}

fn grad_norm_sq(u: &GridFunction) -> f64 {
    let h = u.spec.h();
    let terms: Vec<f64> = (0..u.values.len() - 1)
        .map(|i| (u.values[i + 1] - u.values[i]).norm_sqr() / h)
        .collect();
    crate::grid::pairwise_sum(&terms)
}

fn record(
    traj: &mut Trajectory,
    u: &GridFunction,
    t: f64,
    cfg: &EvolutionConfig,
    params: &Params,
    q_norms: &QNorms,
    record_count: &mut usize,
) {
    let rep = report_with_reference(u, params, q_norms);
    let local = quadrature_nodes(&u.spec, |i, x| {
        if x.abs() <= 10.0 {
            u.values[i].norm_sqr()
        } else {
            0.0
        }
    });
    let outer_start = 0.9 * u.spec.half_width;
    let outer = quadrature_nodes(&u.spec, |i, x| {
        if x.abs() >= outer_start {
            u.values[i].norm_sqr()
        } else {
            0.0
        }
    });
    let mass = rep.mass.max(f64::MIN_POSITIVE);
    traj.times.push(t);
    traj.probes.push(RecordProbe {
        sup_norm: u.sup_norm(),
        grad_norm_sq: grad_norm_sq(u),
        local_mass_fraction: local / mass,
        outer_mass_fraction: outer / mass,
    });
    if let Some(r) = cfg.virial_r {
        let mut vs = virial_quantities(u, r, params);
        vs.t = t;
        traj.virial.push(vs);
    }
    if cfg.state_stride > 0 && *record_count % cfg.state_stride == 0 {
        traj.states.push((traj.reports.len(), u.clone()));
    }
    traj.reports.push(rep);
    *record_count += 1;
}

/// Relative drifts of mass and energy against their initial values over all
/// recorded reports.
#[derive(Debug, Clone, Copy)]
pub struct ConservationAudit {
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
}

pub fn conservation_audit(traj: &Trajectory) -> ConservationAudit {
    let mut max_mass = 0.0f64;
    let mut max_energy = 0.0f64;
    if let Some(first) = traj.reports.first() {
        let m0 = first.mass;
        let e0 = first.energy_gamma;
        let e_scale = e0.abs().max(1e-300);
        for rep in &traj.reports {
            max_mass = max_mass.max(((rep.mass - m0) / m0).abs());
            max_energy = max_energy.max(((rep.energy_gamma - e0) / e_scale).abs());
        }
    }
    ConservationAudit { max_mass_drift: max_mass, max_energy_drift: max_energy }
}
