use delta_nls::evolution::{step, EvolutionConfig, evolve};
use delta_nls::grid::{sample_real, GridSpec};
use delta_nls::Params;

fn main() {
    let params = Params::new(-4.0, 7.0).unwrap();
    let spec = GridSpec::new(100.0, 10_000).unwrap();
    let g = sample_real(|x| (-x * x).exp(), spec).unwrap();
    let cfg = EvolutionConfig { dt0: 1e-3, t_end: 2.0, record_every: 2.0, linear_only: true,
        state_stride: 1, ..Default::default() };
    let traj = evolve(&g, &cfg, &params).unwrap();
    let u = traj.final_state().unwrap();
    for &x in &[0.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 90.0, 95.0, 100.0] {
        let i = ((x + 100.0) / spec.h()).round() as usize;
        println!("x={x:5.1}  |u| = {:.3e}", u.values[i.min(spec.len()-1)].norm());
    }
    let _ = step(&g, 1e-3, &params);
}
