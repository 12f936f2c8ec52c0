//! Legendre polynomial evaluation on the reference interval [-1, 1].

/// Values `P_0(x) ..= P_{deg}(x)` written into `out` (length `deg + 1`).
pub fn values(deg: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if deg == 0 {
        return;
    }
    out[1] = x;
    for l in 1..deg {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
}

/// Legendre values as a fresh vector.
pub fn values_vec(deg: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; deg + 1];
    values(deg, x, &mut out);
    out
}

/// Scaled Taylor coefficients `P_l^{(n)}(x) / n!` for `l, n <= deg`, row-major in `l`.
///
/// Obtained by differentiating the three-term recurrence, which keeps every
/// entry free of the cancellation a monomial expansion would suffer.
pub fn taylor_table(deg: usize, x: f64) -> Vec<f64> {
    let w = deg + 1;
    // d[l][n] = P_l^{(n)}(x)
    let mut d = vec![0.0; w * w];
    d[0] = 1.0;
    if deg >= 1 {
        d[w] = x;
        d[w + 1] = 1.0;
    }
    for l in 1..deg {
        let lf = l as f64;
        for n in 0..=(l + 1).min(deg) {
            let cur = if n <= l { d[l * w + n] } else { 0.0 };
            let cur_lower = if n >= 1 { d[l * w + n - 1] } else { 0.0 };
            let prev = if n < l { d[(l - 1) * w + n] } else { 0.0 };
            d[(l + 1) * w + n] =
                ((2.0 * lf + 1.0) * (x * cur + n as f64 * cur_lower) - lf * prev) / (lf + 1.0);
        }
    }
    let mut fact = 1.0;
    for n in 0..w {
        if n > 0 {
            fact *= n as f64;
        }
        for l in 0..w {
            d[l * w + n] /= fact;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        let x = 0.37;
        let p = values_vec(3, x);
        assert!((p[2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-15);
    }

    #[test]
    fn taylor_table_reproduces_shift() {
        // P_l(x + t) = sum_n table[l][n] t^n exactly for polynomials.
        let deg = 6;
        let (x, t) = (-0.41, 0.73);
        let tab = taylor_table(deg, x);
        let shifted = values_vec(deg, x + t);
        for l in 0..=deg {
            let mut acc = 0.0;
            for n in (0..=deg).rev() {
                acc = acc * t + tab[l * (deg + 1) + n];
            }
            assert!((acc - shifted[l]).abs() < 1e-13, "l={l}: {acc} vs {}", shifted[l]);
        }
    }
}
