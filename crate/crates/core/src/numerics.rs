//! Special functions and tail probabilities.
//!
//! Everything here is pure and self-contained: log-gamma via a Lanczos
//! approximation, digamma/trigamma via upward recurrence plus asymptotic
//! series, incomplete gamma and beta functions via series and continued
//! fractions, and the normal quantile via a rational initial guess polished
//! by Halley steps.
//!
//! The checked functions (`ln_gamma`, `digamma`, ...) validate their
//! arguments. The crate-internal `lgamma`, `psi` and `psi1` skip validation
//! for use in inner optimization loops where positivity is an invariant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rule for the iterative fitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Threshold on the max-norm of the per-observation log-likelihood gradient.
    pub abs_tol: f64,
    /// Threshold on the max-norm of relative parameter change between iterations.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-8,
            rel_tol: 1e-10,
            max_iter: 1000,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1 {
            return Err(Error::InvalidParameter(format!(
                "tolerance needs abs_tol > 0, rel_tol > 0, max_iter >= 1 (got {abs_tol}, {rel_tol}, {max_iter})"
            )));
        }
        Ok(Tolerance {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Lanczos coefficients for g = 671/128, 14 terms.
const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { function, value: x })
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    Ok(lgamma(x))
}

/// Digamma Ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(psi(x))
}

/// Trigamma Ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    Ok(psi1(x))
}

pub(crate) fn lgamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum away from its pole.
        return lgamma(x + 1.0) - x.ln();
    }
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut y = x;
    let mut ser = 0.999_999_999_999_997_092;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

pub(crate) fn psi(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0
                        - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    acc + x.ln() - 0.5 / x - series
}

pub(crate) fn psi1(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 6.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let r = inv * inv;
    // 1/x + 1/(2x²) + Σ B_2k / x^(2k+1)
    let series = inv
        * r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0
                    - r * (1.0 / 30.0
                        - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    acc + inv + 0.5 * r + series
}

/// Solves Ψ(x) = y by Newton's method from the standard asymptotic guess.
pub(crate) fn inverse_digamma(y: f64) -> f64 {
    let mut x = if y >= -2.22 {
        y.exp() + 0.5
    } else {
        -1.0 / (y + EULER_GAMMA)
    };
    for _ in 0..5 {
        x -= (psi(x) - y) / psi1(x);
    }
    x
}

const INCOMPLETE_EPS: f64 = 1e-16;
const INCOMPLETE_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Regularized lower and upper incomplete gamma (P, Q).
fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefactor = a * x.ln() - x - lgamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..INCOMPLETE_MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * INCOMPLETE_EPS {
                break;
            }
        }
        let p = sum * log_prefactor.exp();
        (p, 1.0 - p)
    } else {
        // Modified Lentz evaluation of the continued fraction for Q.
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..INCOMPLETE_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < INCOMPLETE_EPS {
                break;
            }
        }
        let q = log_prefactor.exp() * h;
        (1.0 - q, q)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..INCOMPLETE_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < INCOMPLETE_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let log_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * x.ln() + b * (-x).ln_1p();
    if x < (a + 1.0) / (a + b + 2.0) {
        log_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - log_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn check_chi_square(x: f64, df: usize) -> Result<()> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::Domain {
            function: "chi_square",
            value: x,
        });
    }
    if df < 1 {
        return Err(Error::Domain {
            function: "chi_square",
            value: df as f64,
        });
    }
    Ok(())
}

/// Upper tail P(χ²_df > x).
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    check_chi_square(x, df)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(incomplete_gamma(0.5 * df as f64, 0.5 * x).1)
}

/// Lower tail P(χ²_df ≤ x).
pub fn chi_square_cdf(x: f64, df: usize) -> Result<f64> {
    check_chi_square(x, df)?;
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(incomplete_gamma(0.5 * df as f64, 0.5 * x).0)
}

/// Upper tail P(F_{df1,df2} > x).
pub fn f_sf(x: f64, df1: usize, df2: usize) -> Result<f64> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::Domain {
            function: "f_sf",
            value: x,
        });
    }
    if df1 < 1 || df2 < 1 {
        return Err(Error::Domain {
            function: "f_sf",
            value: df1.min(df2) as f64,
        });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    Ok(incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x)))
}

/// Standard normal upper tail Q(z) = 1 − Φ(z), accurate in relative terms for large z.
fn normal_upper_tail(z: f64) -> f64 {
    let t = z / std::f64::consts::SQRT_2;
    if t >= 0.0 {
        0.5 * incomplete_gamma(0.5, t * t).1
    } else {
        1.0 - 0.5 * incomplete_gamma(0.5, t * t).1
    }
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    normal_upper_tail(-z)
}

// Acklam's rational approximation, used only as the starting point.
fn normal_quantile_guess(p: f64) -> f64 {
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
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// z with Φ(z) = p.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            function: "normal_quantile",
            value: p,
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the upper tail for p > 1/2; 1 − p is exact there.
    let (target, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let mut z = -normal_quantile_guess(target);
    for _ in 0..3 {
        let e = normal_upper_tail(z) - target;
        let u = -e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * z * z).exp();
        z -= u / (1.0 + 0.5 * z * u);
    }
    Ok(sign * z)
}
