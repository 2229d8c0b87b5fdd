//! Float math shim: std intrinsics when available, `libm` otherwise.

#[cfg(feature = "std")]
mod imp {
    #[inline(always)]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline(always)]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    #[inline(always)]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    #[inline(always)]
    pub fn ceil(x: f64) -> f64 {
        x.ceil()
    }
    #[inline(always)]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline(always)]
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline(always)]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline(always)]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline(always)]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline(always)]
    pub fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
    #[inline(always)]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline(always)]
    pub fn powf(x: f64, y: f64) -> f64 {
        libm::pow(x, y)
    }
}

pub use imp::{abs, ceil, cos, exp, floor, ln, powf, sqrt};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal log-density.
#[inline]
pub fn norm_logpdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Standard normal CDF via `erf` (std has no erf, so always `libm`).
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// log Φ(z), stable far into the left tail (Mills-ratio asymptotics).
pub fn norm_logcdf(z: f64) -> f64 {
    if z > -8.0 {
        ln(norm_cdf(z))
    } else {
        let x = -z;
        let x2 = x * x;
        // Φ(-x) = φ(x)/x · (1 − 1/x² + 3/x⁴ − 15/x⁶ + ...)
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - LN_SQRT_2PI - ln(x) + ln(series)
    }
}

/// min(1, e^x) without computing the exponential when it would saturate.
#[inline]
pub fn cap_exp(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else if x < -745.0 {
        0.0
    } else {
        exp(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_symmetry_and_reference() {
        assert!(abs(norm_cdf(0.0) - 0.5) < 1e-15);
        for z in [0.3, 1.0, 2.5, 6.0] {
            assert!(abs(norm_cdf(z) + norm_cdf(-z) - 1.0) < 1e-14);
        }
        assert!(abs(norm_cdf(1.96) - 0.975_002_104_851_78) < 1e-12);
    }

    #[test]
    fn cap_exp_matches_exp_below_zero() {
        assert_eq!(cap_exp(0.3), 1.0);
        assert!(abs(cap_exp(-1.0) - exp(-1.0)) < 1e-16);
        assert_eq!(cap_exp(-800.0), 0.0);
    }
}
