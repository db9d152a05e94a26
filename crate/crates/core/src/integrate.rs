//! Adaptive quadrature for the closed-form ground-state integrals.
//!
//! Grid-based trapezoid quadrature of sampled states lives in [`crate::grid`];
//! this module integrates smooth analytic integrands to near machine
//! precision (adaptive Simpson with Richardson correction).

/// Adaptive Simpson rule on [a, b] with absolute tolerance `tol`.
///
/// Deterministic recursion order; intended for smooth integrands. The
/// tolerance is a target for the absolute error; recursion also stops when
/// the local correction falls below machine precision of the running value.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // 1/15 Richardson factor for Simpson halving.
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= f64::EPSILON * whole.abs() {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// ∫_a^∞ f for an integrand bounded by `tail_bound(t) ≥ |∫_t^∞ f|`.
///
/// The tolerance `rel_tol` is relative to the magnitude of the integral,
/// estimated from the analytic `tail_bound` at `a`. Truncates where the tail
/// bound drops below tolerance, integrates the finite part adaptively, and
/// adds the analytic tail estimate `tail_value(t)` for the discarded piece.
pub fn half_line<F, T, V>(f: &F, a: f64, rel_tol: f64, tail_bound: T, tail_value: V) -> f64
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    let scale = tail_bound(a).abs().max(f64::MIN_POSITIVE);
    let tol = (rel_tol * scale).max(1e-300);
    let mut cut = a + 1.0;
    while tail_bound(cut) > tol && cut - a < 400.0 {
        cut += 1.0;
    }
    let mut total = 0.0;
    // Panel the range so the adaptive rule sees comparable scales per panel.
    let mut left = a;
    while left < cut {
        let right = (left + 8.0).min(cut);
        total += adaptive_simpson(f, left, right, tol);
        left = right;
    }
    total + tail_value(cut)
}
