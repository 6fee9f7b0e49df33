//! Modified Bessel function of the second kind `K_ν(x)` for real `ν ≥ 0`,
//! `x > 0`.
//!
//! `ν` is split as `μ + N` with `|μ| ≤ 1/2`. `K_μ` and `K_{μ+1}` come from
//! Temme's series for `x ≤ 2` and Steed's continued fraction (CF2) for
//! `x > 2`; forward recurrence in the order then reaches `K_ν`. Values are
//! carried as `(mantissa, log-scale)` pairs so large orders at small
//! arguments do not overflow.

use std::f64::consts::PI;

// Chebyshev expansions on [−1, 1] of
//   g1(μ) = (1/Γ(1−μ) − 1/Γ(1+μ)) / (2μ),  g2(μ) = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2
// in the variable 4|μ| − 1.
const G1_CHEB: [f64; 14] = [
    -1.145_164_083_662_683_1,
    0.006_360_853_113_470_842,
    0.001_862_451_930_072_068_5,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_21e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];
const G2_CHEB: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769_4e-18,
    -7.522_524_321_825_39e-20,
];

fn chebyshev(c: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let (mut d, mut dd) = (0.0, 0.0);
    for &cj in c[1..].iter().rev() {
        let t = d;
        d = y2 * d - dd + cj;
        dd = t;
    }
    y * d - dd + 0.5 * c[0]
}

/// `(1/Γ(1+μ), 1/Γ(1−μ), g1, g2)` for `|μ| ≤ 1/2`.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let y = 4.0 * mu.abs() - 1.0;
    let g1 = chebyshev(&G1_CHEB, y);
    let g2 = chebyshev(&G2_CHEB, y);
    (g2 - mu * g1, g2 + mu * g1, g1, g2)
}

/// `e^x K_μ(x)` and `e^x K_{μ+1}(x)` for `|μ| ≤ 1/2`, `0 < x ≤ 2`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON { 1.0 } else { pi_mu / pi_mu.sin() };
    let sinhrat = if sigma.abs() < f64::EPSILON { 1.0 } else { sigma.sinh() / sigma };
    let (inv_gp, inv_gm, g1, g2) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu / inv_gp;
    let mut qk = 0.5 * half_x_mu / inv_gm;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    for k in 1..10_000 {
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        let hk = -kf * fk + pk;
        let d0 = ck * fk;
        sum0 += d0;
        sum1 += ck * hk;
        if d0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            break;
        }
    }
    let ex = x.exp();
    (sum0 * ex, sum1 * 2.0 / x * ex)
}

/// `e^x K_μ(x)` and `e^x K_{μ+1}(x)` for `|μ| ≤ 1/2`, `x > 2`.
fn steed_cf2(mu: f64, x: f64) -> (f64, f64) {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;
    for i in 2..10_000 {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi = (bi * di - 1.0) * delhi;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    hi *= -a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - hi) / x;
    (k_mu, k_mu1)
}

/// `ln K_ν(x)` for `ν ≥ 0` and `x > 0`.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "K_nu needs a positive argument");
    let nu = nu.abs();
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k0, mut k1) = if x <= 2.0 { temme_series(mu, x) } else { steed_cf2(mu, x) };
    // values above are scaled by e^x
    let mut ln_scale = -x;
    for k in 0..(n as usize) {
        let k2 = 2.0 * (mu + k as f64 + 1.0) / x * k1 + k0;
        k0 = k1;
        k1 = k2;
        if k1.abs() > 1e250 {
            k0 *= 1e-250;
            k1 *= 1e-250;
            ln_scale += 250.0 * std::f64::consts::LN_10;
        }
    }
    k0.ln() + ln_scale
}

/// `K_ν(x)`; may overflow to infinity for large `ν` at tiny `x`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    ln_bessel_k(nu, x).exp()
}

/// `e^x K_ν(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    (ln_bessel_k(nu, x) + x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn temme_gamma_limits() {
        let (gp, gm, g1, g2) = temme_gamma(0.0);
        assert!((gp - 1.0).abs() < 1e-15 && (gm - 1.0).abs() < 1e-15);
        assert!((g1 + EULER_GAMMA).abs() < 1e-14, "{g1}");
        assert!((g2 - 1.0).abs() < 1e-14);
        // 1/Γ(1.5) = 2/√π
        let (gp, gm, _, _) = temme_gamma(0.5);
        assert!(rel(gp, 2.0 / PI.sqrt()) < 1e-14);
        assert!(rel(gm, 1.0 / PI.sqrt()) < 1e-14);
    }

    #[test]
    fn half_integer_closed_forms() {
        for &x in &[1e-3, 0.1, 0.5, 1.0, 1.999, 2.0, 2.001, 5.0, 20.0, 100.0] {
            let k12 = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!(rel(bessel_k(0.5, x), k12) < 1e-13, "x={x}");
            assert!(rel(bessel_k(1.5, x), k12 * (1.0 + 1.0 / x)) < 1e-13, "x={x}");
            assert!(
                rel(bessel_k(2.5, x), k12 * (1.0 + 3.0 / x + 3.0 / (x * x))) < 1e-12,
                "x={x}"
            );
        }
    }

    #[test]
    fn integer_orders_reference_values() {
        // Abramowitz & Stegun table 9.8 values.
        assert!(rel(bessel_k(0.0, 1.0), 0.421_024_438_240_708_3) < 1e-13);
        assert!(rel(bessel_k(1.0, 1.0), 0.601_907_230_197_234_6) < 1e-13);
        assert!(rel(bessel_k(0.0, 3.0), 0.034_739_504_386_279_27) < 1e-12);
        assert!(rel(bessel_k(2.0, 0.5), 7.550_183_551_240_87) < 1e-12);
    }

    #[test]
    fn integral_representation_oracle() {
        // K_ν(x) = ∫_0^∞ exp(−x cosh t) cosh(νt) dt
        for &(nu, x) in &[(0.3, 0.7), (1.7, 2.5), (4.0, 1.0), (7.3, 9.0), (0.0, 0.2)] {
            let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
            let v = crate::quadrature::integrate(f, 0.0, 40.0, 1e-15).unwrap();
            assert!(rel(bessel_k(nu, x), v) < 1e-10, "nu={nu} x={x}");
        }
    }

    #[test]
    fn large_order_small_argument_stays_finite() {
        // small-argument limit K_ν(x) ~ Γ(ν)/2 (2/x)^ν
        let l = ln_bessel_k(60.0, 1e-3);
        let lead = statrs::function::gamma::ln_gamma(60.0) - 2f64.ln() + 60.0 * 2000f64.ln();
        assert!(l.is_finite() && rel(l, lead) < 1e-6, "{l} {lead}");
    }
}
