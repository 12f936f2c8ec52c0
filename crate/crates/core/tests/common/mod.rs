#![allow(dead_code)]

/// Tanh-sinh quadrature of `f` on `(0, b)`; tolerates integrable endpoint singularities.
pub fn tanh_sinh(b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let step = 1.0 / 64.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut total = 0.0;
    for i in -320..=320 {
        let t = i as f64 * step;
        let u = half_pi * t.sinh();
        // x = b (1 + tanh u) / 2 written without cancellation near 0
        let x = b / (1.0 + (-2.0 * u).exp());
        let w = b * half_pi * t.cosh() / (2.0 * u.cosh().powi(2));
        if x > 0.0 && x < b && w > 0.0 && w.is_finite() {
            total += w * f(x);
        }
    }
    total * step
}

pub fn field_diff_norm(a: &nldg::FieldCoeffs, b: &nldg::FieldCoeffs) -> f64 {
    let d: Vec<f64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
    a.space().mass().inner(&d, &d).sqrt()
}
