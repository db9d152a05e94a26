fn main() {
    let params = delta_nls::Params::new(-2.0, 7.0).unwrap();
    for &y in &[1.0, 2.0, 3.0, 4.0, 5.0] {
        let v = delta_nls::groundstate::script_q_first_integral(y, &params);
        let d = delta_nls::groundstate::script_q(y, &params);
        println!("y={y}: oracle={v:+.6e}  scaled={:+.6e}  direct={d:+.6e}", v.abs()*((8.0*y) as f64).exp());
    }
}
