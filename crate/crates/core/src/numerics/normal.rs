//! Standard normal density, distribution and quantile functions.
//!
//! These are the unchecked kernels. Inputs are assumed finite; the checked
//! wrappers in the parent module validate arguments first.
//!
//! The lower tail below `-TAIL_SWITCH` is evaluated in log space through a
//! continued fraction for the Mills ratio, so `log_cdf` stays accurate far
//! past the point where `cdf` underflows (around -38.5).

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use super::logspace::log_diff_exp;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// |x| beyond which the log-space tail path is used.
pub const TAIL_SWITCH: f64 = 8.0;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn cdf(x: f64) -> f64 {
    if x < -TAIL_SWITCH {
        log_cdf(x).exp()
    } else {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Φ(x)`.
#[inline]
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

pub fn log_cdf(x: f64) -> f64 {
    if x < -TAIL_SWITCH {
        log_pdf(x) + mills_ratio(-x).ln()
    } else if x <= 0.0 {
        (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln()
    } else if x == f64::INFINITY {
        0.0
    } else {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    }
}

#[inline]
pub fn log_sf(x: f64) -> f64 {
    log_cdf(-x)
}

/// Mills ratio `Φ(-t) / φ(t)` for large positive `t`, by backward evaluation
/// of `1 / (t + 1/(t + 2/(t + 3/(t + ...))))`.
fn mills_ratio(t: f64) -> f64 {
    1.0 / (t + mills_tail(t))
}

/// `1/(t + 2/(t + 3/(t + ...)))`, the continued-fraction tail shared by the
/// Mills ratio and the hazard excess.
fn mills_tail(t: f64) -> f64 {
    let terms = cf_terms(t);
    let mut f = t;
    for k in (2..=terms).rev() {
        f = t + k as f64 / f;
    }
    1.0 / f
}

fn cf_terms(t: f64) -> usize {
    // Truncation error decays roughly like exp(-2 sqrt(n) t); 8 is the
    // smallest argument this path sees.
    if t >= 30.0 {
        16
    } else if t >= 15.0 {
        40
    } else {
        120
    }
}

/// Hazard excess `h(t) = φ(t)/Φ(-t) - t`, strictly positive for every `t`.
///
/// Appears in the rectified Fisher information, where writing the endpoint
/// terms through `h` avoids the cancellation between `φ²/Φ` and `t φ`.
pub fn hazard_excess(t: f64) -> f64 {
    if t > TAIL_SWITCH {
        mills_tail(t)
    } else {
        (log_pdf(t) - log_cdf(-t)).exp() - t
    }
}

/// `ln(Φ(hi) - Φ(lo))` for `lo < hi`. Intervals centered right of zero are
/// reflected so both terms come from the lower tail; this keeps precision and
/// makes the result exactly symmetric under `(lo, hi) -> (-hi, -lo)`.
pub fn log_interval_mass(lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if lo >= hi {
        return f64::NEG_INFINITY;
    }
    if lo + hi > 0.0 {
        log_diff_exp(log_cdf(-lo), log_cdf(-hi))
    } else {
        log_diff_exp(log_cdf(hi), log_cdf(lo))
    }
}

/// `Φ(hi) - Φ(lo)` without cancellation in either tail.
pub fn interval_mass(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    if lo + hi > 0.0 {
        interval_mass(-hi, -lo)
    } else if hi < -TAIL_SWITCH {
        log_interval_mass(lo, hi).exp()
    } else {
        cdf(hi) - cdf(lo)
    }
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Rational initial guess for `Φ⁻¹` on the lower half, given `ln p`.
fn quantile_guess(log_p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if log_p < -700.0 {
        // Beyond the rational fit: invert ln Φ(x) ≈ -x²/2 - ln(-x) - ln √(2π).
        let s = -2.0 * log_p;
        return -(s - s.ln() - 2.0 * LN_SQRT_2PI).sqrt();
    }
    let p = log_p.exp();
    if p < P_LOW {
        let q = (-2.0 * log_p).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

/// Solves `ln Φ(x) = log_p` for `log_p <= 0`.
///
/// Newton on the concave function `ln Φ` converges monotonically once an
/// iterate lands left of the root, so no bracketing is needed.
pub fn inverse_log_cdf(log_p: f64) -> f64 {
    if log_p >= 0.0 {
        return f64::INFINITY;
    }
    if log_p == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if log_p > -LN_2 {
        // Upper half: solve on the complement, which is exact to compute here.
        let log_q = (-log_p.exp_m1()).ln();
        return -inverse_log_cdf(log_q);
    }
    let mut x = quantile_guess(log_p);
    for _ in 0..60 {
        let f = log_cdf(x) - log_p;
        let slope = (log_pdf(x) - log_cdf(x)).exp();
        let step = f / slope;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

pub fn inverse_cdf(p: f64) -> f64 {
    if p > 0.5 {
        // 1 - p is exact for p in (0.5, 1).
        -inverse_log_cdf((1.0 - p).ln())
    } else {
        inverse_log_cdf(p.ln())
    }
}
