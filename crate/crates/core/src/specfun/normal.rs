#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density. The square is split so `d^2 / 2` carries no
/// rounding error into the exponential (which would cost `d^2 eps` relative).
pub fn norm_pdf(d: f64) -> f64 {
    if d.abs() < 1.0 {
        return INV_SQRT_2PI * (-0.5 * d * d).exp();
    }
    // `hi` keeps 26 significant bits, so `hi * hi` is exact.
    let hi = f64::from_bits(d.to_bits() & 0xffff_ffff_f800_0000);
    let lo = d - hi;
    INV_SQRT_2PI * (-0.5 * hi * hi).exp() * (-lo * (hi + 0.5 * lo)).exp()
}

/// Standard normal distribution function, via `erfc` so both tails keep
/// relative accuracy.
pub fn norm_cdf(d: f64) -> f64 {
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI};
    // Rounding of 1/sqrt(2) in the f64 constant.
    const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_456_5e-17;
    let w = -d * FRAC_1_SQRT_2;
    let value = libm::erfc(w);
    if w < 3.0 || value == 0.0 {
        return 0.5 * value;
    }
    // In the tail a relative argument error e costs 2 w^2 e; correct to
    // first order with the exact residual of the product.
    let dw = (-d).mul_add(FRAC_1_SQRT_2, -w) - d * FRAC_1_SQRT_2_LO;
    0.5 * (value - FRAC_2_SQRT_PI * (-w * w).exp() * dw)
}

/// Inverse of [`norm_cdf`] (Wichura's AS 241, ~1e-16 relative).
pub fn norm_inv(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2_509.080_928_730_122_7 * r + 33_430.575_583_588_13) * r
                + 67_265.770_927_008_7)
                * r
                + 45_921.953_931_549_87)
                * r
                + 13_731.693_765_509_46)
                * r
                + 1_971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5_226.495_278_852_545 * r + 28_729.085_735_721_943) * r
                + 39_307.895_800_092_71)
                * r
                + 21_213.794_301_586_597)
                * r
                + 5_394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    #[test]
    fn symmetric_point_and_limits() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_cdf(40.0), 1.0);
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn quantile_196_against_density_quadrature() {
        let area = quad::integrate(norm_pdf, 0.0, 1.96, 1e-15, quad::DEFAULT_BUDGET)
            .unwrap()
            .value;
        let oracle = 0.5 + area;
        assert!((oracle - 0.975_002_104_9).abs() < 1e-9);
        assert!((norm_cdf(1.96) - oracle).abs() < 1e-15);
    }

    #[test]
    fn lower_tail_keeps_relative_accuracy() {
        // Phi(-10) = 7.619853024160527e-24
        let v = norm_cdf(-10.0);
        assert!((v - 7.619_853_024_160_527e-24).abs() < 1e-13 * v);
    }

    #[test]
    fn density_in_the_tail() {
        // n(30) = exp(-450) / sqrt(2 pi), and n(37.5) from mpmath.
        assert!((norm_pdf(30.0) / 1.473_646_134_878_547_5e-196 - 1.0).abs() < 1e-15);
        assert!((norm_pdf(-37.5) / 1.728_233_732_284_105_2e-306 - 1.0).abs() < 2e-15);
    }

    #[test]
    fn inverse_round_trips() {
        for &p in &[1e-300, 1e-12, 0.01, 0.2, 0.5, 0.7, 0.975, 1.0 - 1e-10] {
            let d = norm_inv(p);
            // Relative error in p grows like d^2 times the error in d.
            let tol = 1e-15 * (1.0 + d * d) * p.min(1.0 - p);
            assert!((norm_cdf(d) - p).abs() <= tol, "p={p}: {}", norm_cdf(d));
        }
        assert_eq!(norm_inv(0.5), 0.0);
    }
}
