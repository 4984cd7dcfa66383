//! Adaptive Simpson quadrature for complex-valued integrands, with a
//! square-root substitution for integrable endpoint singularities of the
//! `1/√(l − a)` kind (the local-oscillator functions diverge that way at
//! the start of the interaction).

use num_complex::Complex64;

const MAX_DEPTH: u32 = 48;

fn simpson(fa: Complex64, fm: Complex64, fb: Complex64, h: f64) -> Complex64 {
    (fa + fm * Complex64::new(4.0, 0.0) + fb) * Complex64::new(h / 6.0, 0.0)
}

fn adapt<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.norm() <= 15.0 * tol {
        return left + right + delta / Complex64::new(15.0, 0.0);
    }
    adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
        + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
}

/// ∫_a^b f(l) dl for smooth f.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adapt(&f, a, b, fa, fm, fb, whole, tol, 0)
}

/// ∫_a^b f(l) dl where f may blow up like `1/√(l − a)` at the lower end.
/// Substituting `l = a + u²` turns the integrand into `2u·f(a + u²)`,
/// which is bounded.
pub fn integrate_sqrt_lower<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let g = |u: f64| {
        if u == 0.0 {
            // 2u·f(a+u²) → 0 for any integrable √ singularity
            Complex64::new(0.0, 0.0)
        } else {
            f(a + u * u) * Complex64::new(2.0 * u, 0.0)
        }
    };
    integrate(g, 0.0, (b - a).sqrt(), tol)
}
