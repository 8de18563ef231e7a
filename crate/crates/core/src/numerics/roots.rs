use super::Tolerances;
use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 300;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Solves `f(x) = target` for monotone `f` on `[lo, hi]` by bisection.
///
/// The returned point is the midpoint of a bracket of width at most
/// `tol.root_abs` that still contains the sign change of `f - target`.
/// Works for discontinuous monotone `f` as well, in which case it converges
/// to the jump.
pub fn find_root_monotone<F>(f: F, lo: f64, hi: f64, target: f64, tol: &Tolerances) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let mut g_lo = f(lo) - target;
    let g_hi = f(hi) - target;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol.root_abs {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = f(mid) - target;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + 0.5 * (hi - lo))
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol.opt_rel * (hi - lo)`. The
/// endpoints are compared against the interior result, so monotone functions
/// return the right boundary value exactly.
pub fn maximize_unimodal<F>(f: F, lo: f64, hi: f64, tol: &Tolerances) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let width = hi - lo;
    if width == 0.0 {
        return (lo, f(lo));
    }
    let stop = (tol.opt_rel * width).max(f64::EPSILON * hi.abs().max(1.0));
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > stop {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn inverse_of_exponential() {
        let x = find_root_monotone(|x| (-x).exp(), 0.0, 2.0, 0.5, &tol()).unwrap();
        assert!((x - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn endpoint_root_is_returned_exactly() {
        let x = find_root_monotone(|x| x, 0.0, 1.0, 0.0, &tol()).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn unbracketed_root_is_an_error() {
        let err = find_root_monotone(|x| x, 1.0, 2.0, 0.0, &tol()).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn decreasing_branch_of_x_exp_minus_x() {
        // Oracle: dense scan at step 1e-6 for the crossing, frozen here.
        let target = 0.8 * (-1.0f64).exp();
        let x = find_root_monotone(|x| x * (-x).exp(), 1.0, 10.0, target, &tol()).unwrap();
        let mut scan = 1.0f64;
        while scan * (-scan).exp() > target {
            scan += 1e-6;
        }
        assert!((x - scan).abs() < 2e-6, "{x} vs {scan}");
        assert!((x - 1.824_388_3).abs() < 1e-6);
    }

    #[test]
    fn jump_is_located() {
        let x = find_root_monotone(|x| if x < 0.3 { 0.0 } else { 1.0 }, 0.0, 1.0, 0.5, &tol()).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn golden_section_examples() {
        let (x, _) = maximize_unimodal(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, &tol());
        assert!((x - 0.3).abs() < 1e-6);
        let (x, fx) = maximize_unimodal(|x| x * (-x).exp(), 0.0, 5.0, &tol());
        assert!((x - 1.0).abs() < 5e-6);
        assert!((fx - (-1.0f64).exp()).abs() < 1e-11);
        let (x, fx) = maximize_unimodal(|x| x * (1.0 - x), 0.0, 1.0, &tol());
        assert!((x - 0.5).abs() < 1e-6);
        assert!((fx - 0.25).abs() < 1e-12);
    }

    #[test]
    fn golden_section_monotone_hits_boundary() {
        let (x, fx) = maximize_unimodal(|x| x, 0.0, 2.0, &tol());
        assert_eq!((x, fx), (2.0, 2.0));
    }

    #[test]
    fn bisection_is_deterministic() {
        let a = find_root_monotone(|x| x.powi(3), -1.0, 2.0, 0.5, &tol()).unwrap();
        let b = find_root_monotone(|x| x.powi(3), -1.0, 2.0, 0.5, &tol()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
