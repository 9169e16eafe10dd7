//! Scalar probability kernels: the standard normal CDF and its inverse, and
//! the logistic function.

use statrs::function::erf::erfc;

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of [`std_normal_cdf`] for `p` in (0, 1).
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Halley step against the exact CDF.
pub fn std_normal_inv_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Logistic function `1 / (1 + e^-eta)`, evaluated without overflow.
pub fn inv_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Log-odds of `p`.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Marsaglia's series `Phi(x) = 1/2 + phi(x) * sum x^(2k+1) / (1*3*...*(2k+1))`.
    /// All terms share a sign, so there is no cancellation for |x| <= 8.
    fn phi_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut k = 1.0;
        loop {
            term *= x2 / (2.0 * k + 1.0);
            let next = sum + term;
            if next == sum {
                break;
            }
            sum = next;
            k += 1.0;
        }
        0.5 + sum * (-x2 / 2.0 - 0.5 * (2.0 * std::f64::consts::PI).ln()).exp()
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(2.0) - 0.977_250).abs() < 1e-6);
        assert!((std_normal_cdf(-2.0) - (1.0 - std_normal_cdf(2.0))).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_series_oracle() {
        for i in 0..=1000 {
            let x = -8.0 + 16.0 * i as f64 / 1000.0;
            let err = (std_normal_cdf(x) - phi_series(x)).abs();
            assert!(err <= 1e-7, "x={x} err={err}");
        }
    }

    #[test]
    fn inverse_round_trips() {
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let x = std_normal_inv_cdf(p);
            assert!((std_normal_cdf(x) - p).abs() < 1e-14, "p={p}");
        }
        for p in [1e-300, 1e-12, 1e-6, 1.0 - 1e-12] {
            let x = std_normal_inv_cdf(p);
            assert!(x.is_finite());
            assert!(((std_normal_cdf(x) - p) / p.min(1.0 - p)).abs() < 1e-8, "p={p}");
        }
    }

    #[test]
    fn logistic_edges() {
        assert_eq!(inv_logit(0.0), 0.5);
        assert!(inv_logit(800.0) == 1.0 && inv_logit(-800.0) >= 0.0);
        assert!((logit(inv_logit(1.7)) - 1.7).abs() < 1e-12);
    }
}
