use crate::error::{Error, Result};

use super::dd::Dd;
use super::gamma::ln_gamma_pos;

/// Largest argument accepted by [`bessel_j`].
///
/// The ascending series alternates with terms as large as roughly
/// `exp(x)/(2πx)`; double-double accumulation keeps the absolute error below
/// 1e-12 up to this bound.
pub const BESSEL_MAX_ARG: f64 = 40.0;

const MAX_TERMS: usize = 1_000;

/// Bessel function of the first kind `J_ν(x)` for real order `ν >= 0` and
/// `0 <= x <= BESSEL_MAX_ARG`, by the ascending power series
/// `Σ (-1)^m (x/2)^(2m+ν) / (m! Γ(m+ν+1))`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_j order must be >= 0, got {nu}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "bessel_j argument must be >= 0, got {x}"
        )));
    }
    if x > BESSEL_MAX_ARG {
        return Err(Error::Range(format!(
            "bessel_j argument {x} exceeds supported maximum {BESSEL_MAX_ARG}"
        )));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }

    let half = 0.5 * x;
    let prefactor = half.powf(nu) * (-ln_gamma_pos(nu + 1.0)).exp();
    let neg_y = -Dd::product_of(half, half);
    let y = half * half;

    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for m in 1..MAX_TERMS {
        let mf = m as f64;
        let denom = Dd::sum_of(mf, nu) * Dd::new(mf);
        term = term * neg_y / denom;
        sum = sum + term;
        let decreasing = mf * (mf + nu) > y;
        if decreasing
            && (term.hi.abs() <= 1e-17 * sum.hi.abs() || term.hi.abs() * prefactor < 1e-30)
        {
            return Ok(prefactor * sum.to_f64());
        }
    }
    Err(Error::Convergence {
        what: "Bessel J series".into(),
        estimate: prefactor * sum.to_f64(),
        error_bound: prefactor * term.hi.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn j_half(x: f64) -> f64 {
        (2.0 / (PI * x)).sqrt() * x.sin()
    }

    fn j_three_halves(x: f64) -> f64 {
        (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos())
    }

    #[test]
    fn examples() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1.5, 0.0).unwrap(), 0.0);
        let v = bessel_j(0.5, PI / 2.0).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn half_order_closed_forms_over_range() {
        for i in 1..=400 {
            let x = 0.1 * i as f64;
            let a = bessel_j(0.5, x).unwrap();
            let b = bessel_j(1.5, x).unwrap();
            assert!((a - j_half(x)).abs() < 1e-12, "J_1/2({x})");
            assert!((b - j_three_halves(x)).abs() < 1e-12, "J_3/2({x})");
        }
    }

    #[test]
    fn reference_values() {
        // 25-digit reference values
        let cases = [
            (0.8660254037844386, 35.0, 0.01686044516734067333792627),
            (2.3, 40.0, -0.05645223214751262327868485),
            (0.0, 39.5, 0.0672680985097538596732556),
            (4.97, 10.0, -0.2379989093508078916985498),
            (1.118033988749895, 7.3, 0.03374320795603592153727675),
            (3.0, 0.001, 2.083333203125003385312535e-11),
        ];
        for (nu, x, want) in cases {
            let got = bessel_j(nu, x).unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "J_{nu}({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn three_term_recurrence() {
        for &nu in &[1.0, 1.3, 2.2, 4.5] {
            for i in 1..=39 {
                let x = i as f64 + 0.37;
                let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
                let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(bessel_j(1.0, 40.5), Err(Error::Range(_))));
        assert!(matches!(bessel_j(-0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn deterministic() {
        let a = bessel_j(1.234, 17.5).unwrap();
        let b = bessel_j(1.234, 17.5).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
