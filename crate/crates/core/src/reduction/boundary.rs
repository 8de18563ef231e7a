use crate::distributions::{CheckDist, GeneralRegular, HatDist, Valuation};
use crate::error::{domain, Error, Result};

/// The minimal α-regular distribution agreeing with `F` at its monopoly
/// price `v₀`: `F̌_{λ,v₀}` with `λ = ψ(v₀)/v₀`.
///
/// It is dominated by `F` and has the same optimal revenue.
pub fn lemma6_shrink(f: &GeneralRegular) -> Result<CheckDist> {
    let v0 = f.opt_price().price;
    CheckDist::new(f.alpha(), f.psi(v0) / v0, v0)
}

/// The maximal α-regular distribution tangent to `F` at `v0 ≥ p*(F)`.
///
/// The tangent uses the right slope of `ψ` at `v0`. When the tangent
/// `F̂_{λ,b}` has `λb < 1` (and α > 0), its mass below its own monopoly
/// price `v₁` is removed and the rest renormalized, giving
/// `F̂_{λ†, v₁}` with `λ†·v₁ = 1`.
pub fn lemma7_expand(f: &GeneralRegular, v0: f64) -> Result<HatDist> {
    let p_star = f.opt_price().price;
    if !(v0 >= p_star - 1e-12) {
        return domain(format!("tangent point {v0} lies below the monopoly price {p_star}"));
    }
    if f.cap().is_some_and(|c| v0 >= c) {
        return Err(Error::TangentUndefined(v0));
    }
    let lambda = f.right_slope(v0);
    if lambda <= 0.0 {
        return Err(Error::TangentUndefined(v0));
    }
    let alpha = f.alpha();
    let b = (v0 - f.psi(v0) / lambda).max(0.0);
    let al = alpha.value();
    if lambda * b >= 1.0 || al == 0.0 {
        return HatDist::new(alpha, lambda, b);
    }
    let k = if alpha.is_mhr() { 0.0 } else { 1.0 - al };
    let v1 = (1.0 - k * lambda * b) / (al * lambda);
    let q1 = alpha.survival(lambda * (v1 - b));
    HatDist::new(alpha, lambda * q1.powf(k), v1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Alpha;

    fn al(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn check_member_is_fixed_point() {
        let c = CheckDist::new(Alpha::MHR, 0.7, 1.2).unwrap();
        let g = GeneralRegular::from_check(&c).unwrap();
        let s = lemma6_shrink(&g).unwrap();
        assert!((s.lambda - c.lambda).abs() < 1e-9 && (s.a - c.a).abs() < 1e-9);
    }

    #[test]
    fn shrink_dominance_and_opt() {
        let g = GeneralRegular::from_slopes(Alpha::MHR, vec![0.0, 1.0], vec![1.0, 3.0], None).unwrap();
        let s = lemma6_shrink(&g).unwrap();
        assert!(s.is_member());
        assert!((s.opt_price().revenue - g.opt_price().revenue).abs() < 1e-8);
        let top = 2.0 * s.a;
        for i in 0..=1000 {
            let v = top * i as f64 / 1000.0;
            assert!(s.survival(v) <= g.survival(v) + 1e-12, "v={v}");
        }
    }

    #[test]
    fn steep_psi_puts_a_at_monopoly_price() {
        let g = GeneralRegular::from_slopes(al(0.5), vec![0.0, 0.4], vec![0.0, 200.0], None).unwrap();
        let s = lemma6_shrink(&g).unwrap();
        assert!((s.a - g.opt_price().price).abs() < 1e-12);
        assert!((s.a - 0.4).abs() < 0.01);
    }

    #[test]
    fn hat_member_is_fixed_point() {
        let h = HatDist::new(Alpha::MHR, 2.0, 1.0).unwrap();
        let g = GeneralRegular::from_hat(&h).unwrap();
        let e = lemma7_expand(&g, 1.5).unwrap();
        assert!((e.lambda - 2.0).abs() < 1e-12 && (e.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renormalized_tangent_has_unit_product() {
        for alpha in [0.4, 1.0] {
            let g = GeneralRegular::from_slopes(al(alpha), vec![0.0, 0.5], vec![0.6, 1.2], None).unwrap();
            let v0 = g.opt_price().price;
            let e = lemma7_expand(&g, v0).unwrap();
            assert!((e.lambda * e.b - 1.0).abs() < 1e-9, "alpha={alpha}: {}", e.lambda * e.b);
        }
    }

    #[test]
    fn expansion_dominates() {
        let g = GeneralRegular::from_slopes(Alpha::MHR, vec![0.0, 1.0, 2.0], vec![0.5, 1.0, 4.0], None).unwrap();
        let v0 = g.opt_price().price + 0.3;
        let e = lemma7_expand(&g, v0).unwrap();
        for i in 0..=1000 {
            let v = 6.0 * i as f64 / 1000.0;
            assert!(e.survival(v) >= g.survival(v) - 1e-12, "v={v}");
        }
    }

    #[test]
    fn tangent_undefined_beyond_cap() {
        let g = GeneralRegular::from_slopes(Alpha::MHR, vec![0.0], vec![0.2], Some(2.0)).unwrap();
        assert_eq!(lemma7_expand(&g, 2.0).unwrap_err(), Error::TangentUndefined(2.0));
        assert!(lemma7_expand(&g, 0.5).is_err());
    }
}
