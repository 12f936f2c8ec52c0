//! Quick consistency checks of the shift operators and stiffness assembly,
//! cheap enough to run from the command line.

use crate::assembly::{shift_matrix_h, shift_matrix_k, stiffness_matrix, SQuadConfig, SchemeVariant};
use crate::error::Result;
use crate::kernel::KernelSpec;
use crate::quadrature::gauss_legendre;
use crate::space::{DgSpace, FieldCoeffs};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

/// `int_a^b (v(x + s) - v(x))^2 dx` by Gauss rules on the two pieces of
/// each cell separated by the point whose shift meets an interface.
///
/// Pieces are parametrized in cell-local coordinates so the short piece of
/// width `r = s - p h` keeps full relative accuracy for tiny shifts.
pub fn shifted_difference_energy(v: &FieldCoeffs, s: f64) -> Result<f64> {
    let space = v.space();
    let (n, h) = (space.cells(), space.h());
    let p = (s / h).floor();
    let r = (s - p * h).max(0.0);
    let p = p as usize;
    let rule = gauss_legendre(space.degree() + 2, -1.0, 1.0)?;
    let mut total = 0.0;
    for j in 0..n {
        // x + s stays in cell j + p while tau = r + h (xi + 1) / 2 < h
        if h - r > 0.0 {
            let half = 0.5 * (h - r);
            total += half
                * rule.integrate(|t| {
                    let tau = r + half * (t + 1.0);
                    let xi = 2.0 * (tau - r) / h - 1.0;
                    let d = v.eval_local((j + p) % n, 2.0 * tau / h - 1.0) - v.eval_local(j, xi);
                    d * d
                });
        }
        if r > 0.0 {
            let half = 0.5 * r;
            total += half
                * rule.integrate(|t| {
                    let sigma = half * (t + 1.0);
                    let xi = 1.0 - 2.0 * (r - sigma) / h;
                    let d = v.eval_local((j + p + 1) % n, 2.0 * sigma / h - 1.0) - v.eval_local(j, xi);
                    d * d
                });
        }
    }
    Ok(total)
}

/// Deterministic pseudo-random coefficients in `[-1, 1)`.
fn sample_coeffs(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}

/// `K_s = -H_s^T` and `v^T H_s v = -(1 / 2s) int (v(x + s) - v(x))^2` over a grid of spaces and shifts.
pub fn shift_identities() -> Result<[Check; 2]> {
    let mut adjoint = Check {
        name: "K_s + H_s^T = 0".into(),
        cases: 0,
        worst: 0.0,
        tolerance: 1e-12,
    };
    let mut quadratic = Check {
        name: "v^T H_s v = -|v(. + s) - v|^2 / 2s".into(),
        cases: 0,
        worst: 0.0,
        tolerance: 1e-11,
    };
    let fractions = [1e-7, 0.013, 0.25, 0.5, 0.61, 0.999];
    for (i, &n) in [2, 3, 7, 12, 16].iter().enumerate() {
        for k in 0..=3 {
            let space = DgSpace::new(0.0, 1.0, n, k)?;
            for (j, &frac) in fractions.iter().enumerate() {
                let s = frac * (space.length() - 1e-9);
                let h = shift_matrix_h(&space, s)?;
                let mut sum = shift_matrix_k(&space, s)?;
                sum.add_scaled(&h.transpose(), 1.0);
                adjoint.worst = adjoint.worst.max(sum.max_abs());
                adjoint.cases += 1;

                let coeffs = sample_coeffs(space.dofs(), (i * 100 + k * 10 + j) as u64);
                let lhs: f64 = coeffs.iter().zip(h.apply_vec(&coeffs)).map(|(a, b)| a * b).sum();
                let v = space.field(coeffs)?;
                let rhs = -shifted_difference_energy(&v, s)? / (2.0 * s);
                quadratic.worst = quadratic.worst.max((lhs - rhs).abs());
                quadratic.cases += 1;
            }
        }
    }
    Ok([adjoint, quadratic])
}

/// Piecewise-constant stiffness with `delta <= h` against `(1/h) circ(-1, 2, -1)`.
pub fn k0_closed_form() -> Result<Check> {
    let mut check = Check {
        name: "k=0 stiffness = (1/h) circ(-1, 2, -1)".into(),
        cases: 0,
        worst: 0.0,
        tolerance: 1e-12,
    };
    for &alpha in &[0.25, 0.5, 1.5, 2.5] {
        for &mult in &[0.5, 1.0] {
            for variant in [SchemeVariant::Forward, SchemeVariant::Backward] {
                let n = 10;
                let space = DgSpace::new(0.0, 1.0, n, 0)?;
                let h = space.h();
                let kernel = KernelSpec::new(alpha, mult * h)?;
                let s = stiffness_matrix(&space, &kernel, &SQuadConfig::default(), variant)?;
                for r in 0..n {
                    for c in 0..n {
                        let expect = match (r + n - c) % n {
                            0 => 2.0 / h,
                            1 => -1.0 / h,
                            d if d == n - 1 => -1.0 / h,
                            _ => 0.0,
                        };
                        check.worst = check.worst.max((s.get(r, c) - expect).abs());
                    }
                }
                check.cases += 1;
            }
        }
    }
    Ok(check)
}

pub fn run_all() -> Result<Vec<Check>> {
    let mut out = shift_identities()?.to_vec();
    out.push(k0_closed_form()?);
    Ok(out)
}
