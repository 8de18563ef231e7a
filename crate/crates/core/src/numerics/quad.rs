const MAX_DEPTH: u32 = 48;

fn simpson<F: Fn(f64) -> f64>(
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
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// `∫ₐ^∞ f`, via the substitution `v = a + t/(1−t)` on `t ∈ [0, 1)`.
///
/// `f` must decay fast enough that the transformed integrand vanishes at `t = 1`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = a + t / s;
        let y = f(v) / (s * s);
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_to_infinity(|x| (-x).exp(), 1.0, 1e-11);
        assert!((v - (-1.0f64).exp()).abs() < 1e-9);
        let w = integrate_to_infinity(|x| 1.0 / ((1.0 + x) * (1.0 + x) * (1.0 + x)), 0.0, 1e-11);
        assert!((w - 0.5).abs() < 1e-9);
    }

    #[test]
    fn kink_is_resolved() {
        let v = integrate(|v| (5.0 * v - 3.5f64).max(0.0), 0.6, 1.0, 1e-12);
        assert!((v - 0.225).abs() < 1e-10);
    }
}
