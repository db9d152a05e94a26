use delta_nls::evolution::{evolve, EvolutionConfig};
use delta_nls::grid::{sample_real, GridSpec};
use delta_nls::groundstate::eval_q_omega_gamma;
use delta_nls::Params;

fn main() {
    // Soliton run.
    let params = Params::with_omega(-4.0, 7.0, 5.0).unwrap();
    let spec = GridSpec::new(15.0, 3000).unwrap();
    let q = sample_real(|x| eval_q_omega_gamma(x, &params).unwrap(), spec).unwrap();
    let cfg = EvolutionConfig { dt0: 1e-3, t_end: 1.0, record_every: 0.1, ..Default::default() };
    let traj = evolve(&q, &cfg, &params).unwrap();
    println!("soliton: {:?}", traj.termination);
    for (t, p) in traj.times.iter().zip(traj.probes.iter()) {
        println!("  t={t:.2} outer={:.3e} local={:.4} sup={:.4}", p.outer_mass_fraction, p.local_mass_fraction, p.sup_norm);
    }
    // Linear Gaussian run.
    let params2 = Params::new(-4.0, 7.0).unwrap();
    let spec2 = GridSpec::new(100.0, 10_000).unwrap();
    let g = sample_real(|x| (-x * x).exp(), spec2).unwrap();
    let cfg2 = EvolutionConfig { dt0: 1e-3, t_end: 4.0, record_every: 0.5, linear_only: true, ..Default::default() };
    let traj2 = evolve(&g, &cfg2, &params2).unwrap();
    println!("linear: {:?}", traj2.termination);
    for (t, p) in traj2.times.iter().zip(traj2.probes.iter()) {
        println!("  t={t:.2} outer={:.3e}", p.outer_mass_fraction);
    }
}
