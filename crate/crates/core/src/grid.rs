//! Uniform symmetric spatial grid, discrete calculus and quadrature, and the
//! discrete delta-potential quadratic form behind all norms and the evolver.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric uniform grid on [−L, L] with a node exactly at x = 0.
///
/// Nodes are x_j = j·h for j ∈ [−n_half, n_half]; storage index i = j + n_half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half width L.
    pub half_width: f64,
    /// Points per side; total point count is 2·n_half + 1.
    pub n_half: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, n_half: usize) -> Result<Self> {
        if !(half_width > 0.0) || n_half == 0 {
            return Err(Error::Domain(format!(
                "grid requires L > 0 and n_half > 0, got L = {half_width}, n_half = {n_half}"
            )));
        }
        Ok(GridSpec { half_width, n_half })
    }

    /// Grid spacing h = L/n_half.
    pub fn h(&self) -> f64 {
        self.half_width / self.n_half as f64
    }

    pub fn len(&self) -> usize {
        2 * self.n_half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinate for storage index i ∈ [0, len).
    pub fn x(&self, i: usize) -> f64 {
        (i as i64 - self.n_half as i64) as f64 * self.h()
    }

    /// Storage index of x = 0.
    pub fn center(&self) -> usize {
        self.n_half
    }

    /// Grid with spacing h/2 on the same interval.
    pub fn refined(&self) -> GridSpec {
        GridSpec { half_width: self.half_width, n_half: 2 * self.n_half }
    }
}

/// Complex-valued samples on a [`GridSpec`]; the discrete state u(t,·).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
    pub even_hint: bool,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> Self {
        GridFunction { spec, values: vec![Complex64::new(0.0, 0.0); spec.len()], even_hint: true }
    }

    pub fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::SpecMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        let even_hint = is_even(&values, 1e-12);
        Ok(GridFunction { spec, values, even_hint })
    }

    /// Value at the origin.
    pub fn at_zero(&self) -> Complex64 {
        self.values[self.spec.center()]
    }

    /// Re-check the evenness hint: values[j] = values[−j] within `rel_tol`
    /// relative to the sup norm.
    pub fn check_even(&self, rel_tol: f64) -> bool {
        is_even(&self.values, rel_tol)
    }

    /// Sup norm ‖f‖_∞.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Fourth-order centered first derivative (lower order at the four
    /// boundary-adjacent nodes). Used by the bilinear forms and the virial
    /// integrands; the quadratic-form norms use [`dirichlet_gamma_form`].
    pub fn derivative(&self) -> GridFunction {
        let h = self.spec.h();
        let n = self.values.len();
        let v = &self.values;
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for i in 2..n - 2 {
            d[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
        }
        if n >= 3 {
            d[0] = (v[1] - v[0]) / h;
            d[1] = (v[2] - v[0]) / (2.0 * h);
            d[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * h);
            d[n - 1] = (v[n - 1] - v[n - 2]) / h;
        }
        GridFunction { spec: self.spec, values: d, even_hint: false }
    }

    /// Cubic interpolation onto the once-refined grid (same interval, h/2).
    pub fn refine(&self) -> GridFunction {
        let fine = self.spec.refined();
        let n = self.values.len();
        let v = &self.values;
        let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
        for i in 0..n {
            out[2 * i] = v[i];
        }
        for i in 0..n - 1 {
            // Midpoint between coarse nodes i and i+1.
            let a = if i == 0 { v[0] } else { v[i - 1] };
            let b = v[i];
            let c = v[i + 1];
            let d = if i + 2 < n { v[i + 2] } else { v[n - 1] };
            out[2 * i + 1] = (-a + 9.0 * b + 9.0 * c - d) / 16.0;
        }
        GridFunction { spec: fine, values: out, even_hint: self.even_hint }
    }

    /// Map values pointwise.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> GridFunction {
        let values = self.values.iter().map(|&v| f(v)).collect();
        GridFunction { spec: self.spec, values, even_hint: false }
    }
}

fn is_even(values: &[Complex64], rel_tol: f64) -> bool {
    let n = values.len();
    let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if sup == 0.0 {
        return true;
    }
    for i in 0..n / 2 {
        if (values[i] - values[n - 1 - i]).norm() > rel_tol * sup {
            return false;
        }
    }
    true
}

/// Sample a pointwise-evaluable function on the grid.
///
/// Fails with [`Error::NonFinite`] if any sample is NaN or infinite; the
/// evenness hint is set by a symmetry test on the samples.
pub fn sample<F: Fn(f64) -> Complex64>(f: F, spec: GridSpec) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.len() {
        let x = spec.x(i);
        let v = f(x);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite { x });
        }
        values.push(v);
    }
    let even_hint = is_even(&values, 1e-12);
    Ok(GridFunction { spec, values, even_hint })
}

/// Sample a real-valued function.
pub fn sample_real<F: Fn(f64) -> f64>(f: F, spec: GridSpec) -> Result<GridFunction> {
    sample(|x| Complex64::new(f(x), 0.0), spec)
}

/// Deterministic pairwise summation (left-to-right tree order).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

fn pairwise_sum_complex(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&v[..mid]) + pairwise_sum_complex(&v[mid..])
        }
    }
}

/// Trapezoid rule for ∫|f|^q dx over [−L, L], deterministic summation order.
pub fn quadrature(f: &GridFunction, weight_power: f64) -> f64 {
    let h = f.spec.h();
    let q = weight_power;
    let mut terms: Vec<f64> = f
        .values
        .iter()
        .map(|v| {
            let m = v.norm_sqr();
            if q == 2.0 {
                m
            } else if q == 1.0 {
                m.sqrt()
            } else {
                m.powf(q / 2.0)
            }
        })
        .collect();
    let n = terms.len();
    terms[0] *= 0.5;
    terms[n - 1] *= 0.5;
    h * pairwise_sum(&terms)
}

/// Trapezoid rule for ∫ g(f(x), x) dx with a complex integrand.
pub fn quadrature_complex<F: Fn(Complex64, f64) -> Complex64>(
    f: &GridFunction,
    integrand: F,
) -> Complex64 {
    let h = f.spec.h();
    let mut terms: Vec<Complex64> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| integrand(v, f.spec.x(i)))
        .collect();
    let n = terms.len();
    terms[0] *= 0.5;
    terms[n - 1] *= 0.5;
    pairwise_sum_complex(&terms) * h
}

/// Trapezoid rule over the grid for an arbitrary per-node real integrand.
pub fn quadrature_nodes<F: Fn(usize, f64) -> f64>(spec: &GridSpec, integrand: F) -> f64 {
    let h = spec.h();
    let mut terms: Vec<f64> = (0..spec.len()).map(|i| integrand(i, spec.x(i))).collect();
    let n = terms.len();
    terms[0] *= 0.5;
    terms[n - 1] *= 0.5;
    h * pairwise_sum(&terms)
}

/// Discrete delta quadratic form
/// q(f, g) = Σ_j (f_{j+1}−f_j)(conj(g_{j+1})−conj(g_j))/h − γ f(0) conj(g(0)).
///
/// With f = g and γ < 0 this is the discrete ‖f‖²_{Ḣ¹_γ} = ‖f′‖² + |γ||f(0)|².
pub fn dirichlet_gamma_form(f: &GridFunction, g: &GridFunction, gamma: f64) -> Result<Complex64> {
    if f.spec != g.spec {
        return Err(Error::SpecMismatch("dirichlet_gamma_form".into()));
    }
    let h = f.spec.h();
    let n = f.values.len();
    let terms: Vec<Complex64> = (0..n - 1)
        .map(|i| (f.values[i + 1] - f.values[i]) * (g.values[i + 1] - g.values[i]).conj() / h)
        .collect();
    let grad = pairwise_sum_complex(&terms);
    Ok(grad - gamma * f.at_zero() * g.at_zero().conj())
}

/// Symmetric tridiagonal discretization of −∂²_x − γδ with zero (Dirichlet)
/// boundary values: second differences plus a single −γ/h bump on the center
/// diagonal entry. Positive semidefinite for γ ≤ 0.
#[derive(Debug, Clone)]
pub struct DeltaOperator {
    pub spec: GridSpec,
    pub gamma: f64,
}

impl DeltaOperator {
    pub fn new(spec: GridSpec, gamma: f64) -> Self {
        DeltaOperator { spec, gamma }
    }

    /// Diagonal entry at storage index i.
    fn diag(&self, i: usize) -> f64 {
        let h = self.spec.h();
        let mut d = 2.0 / (h * h);
        if i == self.spec.center() {
            d -= self.gamma / h;
        }
        d
    }

    /// Apply A to f (boundary rows produce 0; they are Dirichlet-pinned).
    pub fn apply(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = f.len();
        let h = self.spec.h();
        let inv_h2 = 1.0 / (h * h);
        out[0] = Complex64::new(0.0, 0.0);
        out[n - 1] = Complex64::new(0.0, 0.0);
        for i in 1..n - 1 {
            out[i] = self.diag(i) * f[i] - inv_h2 * (f[i + 1] + f[i - 1]);
        }
    }

    /// Apply to a [`GridFunction`].
    pub fn apply_fn(&self, f: &GridFunction) -> GridFunction {
        let mut out = vec![Complex64::new(0.0, 0.0); f.values.len()];
        self.apply(&f.values, &mut out);
        GridFunction { spec: f.spec, values: out, even_hint: f.even_hint }
    }

    /// ⟨Af, f⟩·h — the energy pairing of the discrete operator.
    pub fn energy_pairing(&self, f: &GridFunction) -> f64 {
        let mut out = vec![Complex64::new(0.0, 0.0); f.values.len()];
        self.apply(&f.values, &mut out);
        let terms: Vec<f64> =
            out.iter().zip(f.values.iter()).map(|(a, v)| (a * v.conj()).re).collect();
        self.spec.h() * pairwise_sum(&terms)
    }

    /// One Crank–Nicolson solve: (I + i·β·A) u⁺ = (I − i·β·A) u on interior
    /// nodes, boundary values pinned to zero. β = dt/2 gives the unitary
    /// Cayley step of the linear flow u_t = −iAu.
    pub fn crank_nicolson(
        &self,
        u: &mut [Complex64],
        beta: f64,
        ws: &mut CnWorkspace,
    ) -> Result<()> {
        let n = u.len();
        if n < 3 {
            return Err(Error::SolverFailure("grid too small".into()));
        }
        u[0] = Complex64::new(0.0, 0.0);
        u[n - 1] = Complex64::new(0.0, 0.0);
        let h = self.spec.h();
        let off = Complex64::new(0.0, -beta / (h * h));

        ws.rhs.resize(n, Complex64::new(0.0, 0.0));
        ws.scratch.resize(n, Complex64::new(0.0, 0.0));

        // rhs = (I − iβA)u.
        let inv_h2 = 1.0 / (h * h);
        for i in 1..n - 1 {
            let au = self.diag(i) * u[i] - inv_h2 * (u[i + 1] + u[i - 1]);
            ws.rhs[i] = u[i] - Complex64::new(0.0, beta) * au;
        }

        // Thomas algorithm on the interior block [1, n−2].
        let cprime = &mut ws.scratch;
        let mut prev_c = Complex64::new(0.0, 0.0);
        for i in 1..n - 1 {
            let diag = Complex64::new(1.0, beta * self.diag(i));
            let denom = diag - off * prev_c;
            if denom.norm() < 1e-300 {
                return Err(Error::SolverFailure("degenerate pivot".into()));
            }
            let c = off / denom;
            let rhs_i =
                if i == 1 { ws.rhs[i] } else { ws.rhs[i] - off * ws.rhs[i - 1] };
            ws.rhs[i] = rhs_i / denom;
            cprime[i] = c;
            prev_c = c;
        }
        // Back substitution.
        u[n - 2] = ws.rhs[n - 2];
        for i in (1..n - 2).rev() {
            u[i] = ws.rhs[i] - cprime[i] * u[i + 1];
        }
        u[0] = Complex64::new(0.0, 0.0);
        u[n - 1] = Complex64::new(0.0, 0.0);
        Ok(())
    }

    /// Smallest eigenvalue of the interior (Dirichlet) block by Sturm-count
    /// bisection on the symmetric tridiagonal matrix.
    pub fn smallest_eigenvalue(&self) -> f64 {
        let h = self.spec.h();
        let off = -1.0 / (h * h);
        let n = self.spec.len() - 2;
        let count_below = |x: f64| -> usize {
            let mut count = 0;
            let mut d = self.diag(1) - x;
            if d < 0.0 {
                count += 1;
            }
            for k in 1..n {
                if d.abs() < 1e-300 {
                    d = 1e-300;
                }
                d = self.diag(k + 1) - x - off * off / d;
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let mut lo = -1.0;
        let mut hi = 4.0 / (h * h) + self.gamma.abs() / h + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) == 0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Scratch buffers for the Crank–Nicolson solve, reused across steps.
#[derive(Debug, Default, Clone)]
pub struct CnWorkspace {
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

// ---------------------------------------------------------------------------
// Serialization: CSV (x, re, im) and a compact binary dump.
// ---------------------------------------------------------------------------

/// Write CSV columns (x, re, im) with a header row.
pub fn write_csv<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    writeln!(w, "x [length],re u,im u")?;
    for (i, v) in f.values.iter().enumerate() {
        writeln!(w, "{},{},{}", f.spec.x(i), v.re, v.im)?;
    }
    Ok(())
}

/// Binary dump: header n_half (u64 LE), h (f64 LE), then interleaved
/// re/im f64 LE for j = −n_half..n_half.
pub fn write_binary<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    w.write_all(&(f.spec.n_half as u64).to_le_bytes())?;
    w.write_all(&f.spec.h().to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Read back a binary dump written by [`write_binary`].
pub fn read_binary<R: Read>(mut r: R) -> Result<GridFunction> {
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let n_half = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let h = f64::from_le_bytes(buf8);
    if n_half == 0 || !(h > 0.0) {
        return Err(Error::Format(format!("bad binary header: n_half={n_half}, h={h}")));
    }
    let spec = GridSpec::new(h * n_half as f64, n_half)?;
    let mut values = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        r.read_exact(&mut buf8)?;
        let re = f64::from_le_bytes(buf8);
        r.read_exact(&mut buf8)?;
        let im = f64::from_le_bytes(buf8);
        values.push(Complex64::new(re, im));
    }
    GridFunction::from_values(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{eval_q, eval_q_omega_gamma, norms_q};
    use crate::params::Params;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p7(gamma: f64) -> Params {
        Params::new(gamma, 7.0).unwrap()
    }

    #[test]
    fn node_layout() {
        let spec = GridSpec::new(10.0, 100).unwrap();
        assert_eq!(spec.len(), 201);
        assert_eq!(spec.x(spec.center()), 0.0);
        assert_eq!(spec.x(0), -10.0);
        assert_eq!(spec.x(200), 10.0);
        assert_relative_eq!(spec.h(), 0.1);
    }

    #[test]
    fn sample_even_hint() {
        let params = p7(-4.0);
        let spec = GridSpec::new(30.0, 3000).unwrap();
        let q = sample_real(|x| eval_q(x, &params), spec).unwrap();
        assert!(q.even_hint);
        let odd = sample_real(|x| x, spec).unwrap();
        assert!(!odd.even_hint);
    }

    #[test]
    fn sample_rejects_non_finite() {
        let spec = GridSpec::new(1.0, 10).unwrap();
        let r = sample_real(|x| 1.0 / x, spec);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn quadrature_constant_exact() {
        let spec = GridSpec::new(1.0, 64).unwrap();
        let one = sample_real(|_| 1.0, spec).unwrap();
        assert_eq!(quadrature(&one, 1.0), 2.0);
    }

    #[test]
    fn quadrature_gaussian_oracle() {
        // ∫ e^{−2x²} dx = √(π/2); trapezoid is spectrally accurate here.
        let spec = GridSpec::new(30.0, 3000).unwrap();
        let g = sample_real(|x| (-x * x).exp(), spec).unwrap();
        let v = quadrature(&g, 2.0);
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn quadrature_mass_of_q_converges() {
        let params = p7(-4.0);
        let n = norms_q(&params);
        let spec = GridSpec::new(30.0, 3000).unwrap();
        let q = sample_real(|x| eval_q(x, &params), spec).unwrap();
        let rel = (quadrature(&q, 2.0) - n.mass).abs() / n.mass;
        assert!(rel < 1e-8, "rel = {rel}");
    }

    #[test]
    fn quadrature_second_order() {
        // Halving h reduces the error of a smooth-integrand test by ≥ 3.5×.
        // An |x|-kinked weight breaks spectral accuracy, leaving clean O(h²).
        let f_of = |n: usize| {
            let spec = GridSpec::new(8.0, n).unwrap();
            let g = sample_real(|x| (1.0 + x.abs()).sqrt() * (-x * x).exp(), spec).unwrap();
            quadrature(&g, 2.0)
        };
        let exact = f_of(1 << 15);
        let e1 = (f_of(200) - exact).abs();
        let e2 = (f_of(400) - exact).abs();
        assert!(e1 / e2 >= 3.5, "ratio = {}", e1 / e2);
    }

    #[test]
    fn dirichlet_form_on_q() {
        // form(Q, Q) = ‖Q′‖² + 4·Q(0)² at γ = −4, h = 1e−3.
        let params = p7(-4.0);
        let n = norms_q(&params);
        let spec = GridSpec::new(25.0, 25_000).unwrap();
        let q = sample_real(|x| eval_q(x, &params), spec).unwrap();
        let form = dirichlet_gamma_form(&q, &q, -4.0).unwrap();
        let expected = n.kinetic + 4.0 * eval_q(0.0, &params).powi(2);
        assert!((form.re - expected).abs() < 1e-6, "err = {}", (form.re - expected).abs());
        assert!(form.im.abs() < 1e-14);
    }

    #[test]
    fn dirichlet_form_gamma_zero_reduces_to_gradient() {
        let params = p7(-4.0);
        let spec = GridSpec::new(20.0, 2000).unwrap();
        let q = sample_real(|x| eval_q(x, &params), spec).unwrap();
        let with = dirichlet_gamma_form(&q, &q, 0.0).unwrap();
        let h = spec.h();
        let grad: f64 =
            (0..spec.len() - 1).map(|i| (q.values[i + 1] - q.values[i]).norm_sqr() / h).sum();
        assert_relative_eq!(with.re, grad, max_relative = 1e-12);
    }

    #[test]
    fn operator_positive_semidefinite() {
        let spec = GridSpec::new(10.0, 500).unwrap();
        let op = DeltaOperator::new(spec, -4.0);
        let lam = op.smallest_eigenvalue();
        assert!(lam >= -1e-12, "smallest eigenvalue {lam}");
        // Free Laplacian lowest Dirichlet mode ~ (π/2L)².
        let free = DeltaOperator::new(spec, 0.0);
        let lam0 = free.smallest_eigenvalue();
        let expect = (std::f64::consts::PI / (2.0 * spec.half_width)).powi(2);
        assert_relative_eq!(lam0, expect, max_relative = 1e-2);
    }

    #[test]
    fn operator_matches_form_for_compact_support() {
        // dirichlet_gamma_form(f,f) = h·⟨Af,f⟩ exactly for f vanishing at ±L.
        let spec = GridSpec::new(10.0, 200).unwrap();
        let op = DeltaOperator::new(spec, -3.0);
        let f =
            sample(|x| Complex64::new((-x * x).exp(), 0.3 * (-x * x * 0.5).exp()), spec).unwrap();
        let form = dirichlet_gamma_form(&f, &f, -3.0).unwrap().re;
        let pairing = op.energy_pairing(&f);
        assert_relative_eq!(form, pairing, max_relative = 1e-12);
    }

    #[test]
    fn operator_eleq_residual_near_center() {
        // For the sampled delta ground state, A f = f^p − ωf holds near j = 0
        // within O(h) (the center row carries the one-sided h³ Taylor term).
        let params = Params::with_omega(-4.0, 7.0, 5.0).unwrap();
        let spec = GridSpec::new(15.0, 15_000).unwrap();
        let f = sample_real(|x| eval_q_omega_gamma(x, &params).unwrap(), spec).unwrap();
        let op = DeltaOperator::new(spec, -4.0);
        let af = op.apply_fn(&f);
        let c = spec.center();
        for j in [c, c + 1, c - 1, c + 10, c - 10] {
            let r =
                (af.values[j] + 5.0 * f.values[j] - f.values[j].norm().powi(6) * f.values[j])
                    .norm();
            assert!(r < 50.0 * spec.h(), "residual {r} at index {j}");
        }
        // Away from the center the truncation is O(h²).
        for j in [c + 100, c - 100, c + 1000] {
            let r =
                (af.values[j] + 5.0 * f.values[j] - f.values[j].norm().powi(6) * f.values[j])
                    .norm();
            assert!(r < 1e-3, "bulk residual {r} at index {j}");
        }
    }

    #[test]
    fn operator_gamma_zero_center_unmodified() {
        let spec = GridSpec::new(5.0, 50).unwrap();
        let free = DeltaOperator::new(spec, 0.0);
        let bumped = DeltaOperator::new(spec, -2.0);
        assert_eq!(free.diag(spec.center()), 2.0 / (spec.h() * spec.h()));
        assert!(bumped.diag(spec.center()) > free.diag(spec.center()));
    }

    #[test]
    fn operator_preserves_evenness() {
        let spec = GridSpec::new(6.0, 120).unwrap();
        let op = DeltaOperator::new(spec, -2.5);
        let f =
            sample(|x| Complex64::new((-x * x).exp(), x * x * (-x.abs()).exp()), spec).unwrap();
        assert!(f.even_hint);
        let af = op.apply_fn(&f);
        for i in 0..spec.len() {
            assert_eq!(af.values[i], af.values[spec.len() - 1 - i]);
        }
    }

    #[test]
    fn crank_nicolson_conserves_l2_exactly() {
        let spec = GridSpec::new(20.0, 1000).unwrap();
        let op = DeltaOperator::new(spec, -4.0);
        let mut f = sample(|x| Complex64::new((-x * x).exp(), 0.0), spec).unwrap();
        let before = quadrature(&f, 2.0);
        let mut ws = CnWorkspace::default();
        for _ in 0..100 {
            op.crank_nicolson(&mut f.values, 5e-4, &mut ws).unwrap();
        }
        let after = quadrature(&f, 2.0);
        assert!(((after - before) / before).abs() < 1e-13);
    }

    #[test]
    fn crank_nicolson_matches_dense_reference() {
        // One step against a dense Gaussian-elimination solve of the same
        // tridiagonal system (independent solver path).
        let spec = GridSpec::new(4.0, 24).unwrap();
        let op = DeltaOperator::new(spec, -2.0);
        let mut f =
            sample(|x| Complex64::new((-x * x).exp(), 0.2 * x.cos() * (-x * x).exp()), spec)
                .unwrap();
        let n = spec.len();
        // The solver pins the boundary values; the dense reference assumes
        // the same state.
        f.values[0] = Complex64::new(0.0, 0.0);
        f.values[n - 1] = Complex64::new(0.0, 0.0);
        let beta = 0.05;

        // Dense reference.
        let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        let h = spec.h();
        for i in 1..n - 1 {
            a[i][i] = Complex64::new(1.0, beta * (2.0 / (h * h)));
            if i == spec.center() {
                a[i][i] += Complex64::new(0.0, beta * 2.0 / h);
            }
            a[i][i - 1] = Complex64::new(0.0, -beta / (h * h));
            a[i][i + 1] = Complex64::new(0.0, -beta / (h * h));
        }
        a[0][0] = Complex64::new(1.0, 0.0);
        a[n - 1][n - 1] = Complex64::new(1.0, 0.0);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        let inv_h2 = 1.0 / (h * h);
        for i in 1..n - 1 {
            let mut au = (2.0 * inv_h2) * f.values[i] - inv_h2 * (f.values[i + 1] + f.values[i - 1]);
            if i == spec.center() {
                au += (2.0 / h) * f.values[i];
            }
            rhs[i] = f.values[i] - Complex64::new(0.0, beta) * au;
        }
        // Gaussian elimination with partial pivoting.
        let mut m = a.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm())).unwrap();
            m.swap(col, piv);
            b.swap(col, piv);
            let d = m[col][col];
            for row in col + 1..n {
                let factor = m[row][col] / d;
                for k in col..n {
                    let sub = factor * m[col][k];
                    m[row][k] -= sub;
                }
                let sub = factor * b[col];
                b[row] -= sub;
            }
        }
        let mut xref = vec![Complex64::new(0.0, 0.0); n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in row + 1..n {
                acc -= m[row][k] * xref[k];
            }
            xref[row] = acc / m[row][row];
        }

        let mut u = f.values.clone();
        let mut ws = CnWorkspace::default();
        op.crank_nicolson(&mut u, beta, &mut ws).unwrap();
        for i in 1..n - 1 {
            assert!((u[i] - xref[i]).norm() < 1e-12, "node {i}: {} vs {}", u[i], xref[i]);
        }
    }

    #[test]
    fn binary_roundtrip_exact() {
        let spec = GridSpec::new(3.0, 37).unwrap();
        let f = sample(|x| Complex64::new(x.sin(), (2.0 * x).cos()), spec).unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        let g = read_binary(buf.as_slice()).unwrap();
        assert_eq!(f.spec, g.spec);
        assert_eq!(f.values, g.values);
    }

    #[test]
    fn csv_layout() {
        let spec = GridSpec::new(1.0, 1).unwrap();
        let f = sample(|x| Complex64::new(x, -x), spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("x [length]"));
    }

    #[test]
    fn refine_is_high_order() {
        let spec = GridSpec::new(5.0, 100).unwrap();
        let f =
            sample(|x| Complex64::new((-x * x).exp(), x.sin() * (-x * x).exp()), spec).unwrap();
        let fine = f.refine();
        let exact =
            sample(|x| Complex64::new((-x * x).exp(), x.sin() * (-x * x).exp()), spec.refined())
                .unwrap();
        let mut err: f64 = 0.0;
        for i in 0..fine.values.len() {
            err = err.max((fine.values[i] - exact.values[i]).norm());
        }
        assert!(err < 1e-5, "interpolation error {err}");
    }

    proptest! {
        #[test]
        fn dirichlet_form_nonneg_random(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let spec = GridSpec::new(4.0, 64).unwrap();
            let vals: Vec<Complex64> = (0..spec.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = GridFunction::from_values(spec, vals).unwrap();
            let v = dirichlet_gamma_form(&f, &f, -3.0).unwrap();
            prop_assert!(v.re >= 0.0);
            prop_assert!(v.im.abs() < 1e-12 * v.re.max(1.0));
        }

        #[test]
        fn pairwise_sum_matches_naive(v in proptest::collection::vec(-1e3f64..1e3, 0..200)) {
            let naive: f64 = v.iter().sum();
            let pair = pairwise_sum(&v);
            prop_assert!((naive - pair).abs() <= 1e-9 * (1.0 + naive.abs()));
        }
    }
}
