//! Radial power-law kernels `gamma(s) = c |s|^(-alpha)` on `|s| < delta`.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Power-law kernel normalized so that `int_{-delta}^{delta} s^2 gamma(s) ds = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    pub delta: f64,
    pub c_gamma: f64,
}

const SERIES_REL_TOL: f64 = 1e-15;
const SERIES_MAX_TERMS: usize = 60;

impl KernelSpec {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 3.0) {
            return domain(format!("kernel exponent must satisfy 0 < alpha < 3, got {alpha}"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return domain(format!("horizon must be positive, got {delta}"));
        }
        let c_gamma = (3.0 - alpha) / (2.0 * delta.powf(3.0 - alpha));
        Ok(KernelSpec { alpha, delta, c_gamma })
    }

    /// Exponent of the weight `s^2 gamma(s) = c_gamma s^(2 - alpha)`.
    pub fn weight_exponent(&self) -> f64 {
        2.0 - self.alpha
    }

    pub fn gamma(&self, s: f64) -> f64 {
        if s == 0.0 || s.abs() > self.delta {
            return 0.0;
        }
        self.c_gamma * s.abs().powf(-self.alpha)
    }

    /// `int_{-delta}^{delta} s^p gamma(s) ds` for even `p >= 2`.
    pub fn moment(&self, p: u32) -> Result<f64> {
        if p < 2 || !p.is_multiple_of(2) {
            return domain(format!("moment order must be even and >= 2, got {p}"));
        }
        let pf = p as f64;
        Ok((3.0 - self.alpha) * self.delta.powf(pf - 2.0) / (pf + 1.0 - self.alpha))
    }

    /// `c = 2 int_{-delta}^{delta} gamma(s) (cos(2 pi s) - 1) ds`, so that
    /// `L_delta sin(2 pi x) = -c sin(2 pi x)`.
    ///
    /// Summed from the Taylor series of the cosine; the prefactor
    /// `4 c_gamma delta^(1 - alpha) = 2 (3 - alpha) / delta^2` is applied last.
    pub fn forcing_coefficient(&self) -> f64 {
        let z2 = (2.0 * PI * self.delta).powi(2);
        let mut base = 1.0;
        let mut sum = 0.0;
        for n in 1..=SERIES_MAX_TERMS {
            let nf = n as f64;
            base *= -z2 / ((2.0 * nf) * (2.0 * nf - 1.0));
            let term = base / (2.0 * nf + 1.0 - self.alpha);
            sum += term;
            if term.abs() < SERIES_REL_TOL * sum.abs() {
                break;
            }
        }
        2.0 * (3.0 - self.alpha) / (self.delta * self.delta) * sum
    }
}

pub fn make_kernel(alpha: f64, delta: f64) -> Result<KernelSpec> {
    KernelSpec::new(alpha, delta)
}

pub fn kernel_moment(kernel: &KernelSpec, p: u32) -> Result<f64> {
    kernel.moment(p)
}

pub fn forcing_coefficient(kernel: &KernelSpec) -> f64 {
    kernel.forcing_coefficient()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_constant() {
        let k = make_kernel(0.5, 0.2).unwrap();
        assert!((k.c_gamma - 2.5 / (2.0 * 0.2f64.powf(2.5))).abs() < 1e-12);
        assert!((k.c_gamma - 69.8771).abs() < 1e-4);
        let k = make_kernel(2.0, 0.37).unwrap();
        assert!((k.c_gamma - 1.0 / 0.74).abs() < 1e-15);
        assert!((k.moment(2).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(make_kernel(3.0, 0.1).is_err());
        assert!(make_kernel(0.0, 0.1).is_err());
        assert!(make_kernel(0.5, 0.0).is_err());
        assert!(make_kernel(0.5, -1.0).is_err());
        assert!(make_kernel(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn moments() {
        let k = make_kernel(0.5, 0.2).unwrap();
        assert!((k.moment(2).unwrap() - 1.0).abs() < 1e-15);
        assert!((k.moment(4).unwrap() - 2.5 / 4.5 * 0.04).abs() < 1e-15);
        assert!((k.moment(4).unwrap() - 0.0222222).abs() < 1e-7);
        assert!(k.moment(3).is_err());
        assert!(k.moment(0).is_err());
    }

    #[test]
    fn forcing_coefficient_small_horizon_limit() {
        let four_pi2 = 4.0 * PI * PI;
        for alpha in [0.25, 0.5, 1.5, 2.5] {
            let c = make_kernel(alpha, 1e-6).unwrap().forcing_coefficient();
            assert!((c + four_pi2).abs() < 1e-8, "alpha={alpha}: {c}");
            // next term: (2 pi)^4 / 12 * moment(4)
            for delta in [1e-3, 1e-2] {
                let k = make_kernel(alpha, delta).unwrap();
                let gap = k.forcing_coefficient() + four_pi2;
                let predicted = (2.0 * PI).powi(4) / 12.0 * k.moment(4).unwrap();
                assert!((gap - predicted).abs() < 1e-2 * predicted, "{gap} vs {predicted}");
            }
        }
    }
}
