//! Brute-force dense reference for the nonlocal stiffness operator.
//!
//! Shares nothing with the block-circulant assembly beyond the basis
//! definition: shift matrices are built entry by entry from point
//! evaluations of the basis at wrapped coordinates, and the `s` integral is
//! refined globally until it settles.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::kernel::KernelSpec;
use crate::legendre;
use crate::quadrature::{gauss_jacobi_weighted, legendre_reference};
use crate::space::DgSpace;

const MAX_DOFS: usize = 64;
const MAX_LEVELS: usize = 17;
const PANEL_NODES: usize = 10;

/// Dense `H_s` from its definition, splitting each cell where `x + s` crosses an interface.
pub fn dense_shift_h(space: &DgSpace, s: f64) -> DMatrix<f64> {
    let n = space.dofs();
    let nb = space.modes();
    let k = space.degree();
    let h = space.h();
    let rule = legendre_reference(2 * k + 4);
    let mut out = DMatrix::zeros(n, n);
    for j in 0..space.cells() {
        let lo = space.a() + j as f64 * h;
        let hi = lo + h;
        let mut cuts = vec![lo, hi];
        let mut q = ((lo + s - space.a()) / h).floor() as i64;
        loop {
            let b = space.a() + q as f64 * h - s;
            if b >= hi {
                break;
            }
            if b > lo {
                cuts.push(b);
            }
            q += 1;
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        for piece in cuts.windows(2) {
            let (pl, ph) = (piece[0], piece[1]);
            if ph - pl <= 0.0 {
                continue;
            }
            // evaluate the shifted point from the piece midpoint to pick a side robustly
            let (cell_shift, _) = space.locate(0.5 * (pl + ph) + s);
            let shifted_lo = space.a() + cell_shift as f64 * h;
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let x = 0.5 * (pl + ph) + 0.5 * (ph - pl) * t;
                let wq = 0.5 * (ph - pl) * w / s;
                let xi = 2.0 * (x - lo) / h - 1.0;
                let y = x + s - space.length() * (((x + s - shifted_lo) / space.length()).floor());
                let eta = 2.0 * (y - shifted_lo) / h - 1.0;
                let pw = legendre::values_vec(k, xi);
                let pv = legendre::values_vec(k, eta);
                for m in 0..nb {
                    for l in 0..nb {
                        out[(j * nb + m, cell_shift * nb + l)] += wq * pv[l] * pw[m];
                        out[(j * nb + m, j * nb + l)] -= wq * pw[l] * pw[m];
                    }
                }
            }
        }
    }
    out
}

fn dense_gram(space: &DgSpace, s: f64) -> DMatrix<f64> {
    let hs = dense_shift_h(space, s);
    let inv_mass = DMatrix::from_fn(space.dofs(), space.dofs(), |r, c| {
        if r == c {
            1.0 / space.mass().entry(r)
        } else {
            0.0
        }
    });
    hs.transpose() * inv_mass * hs
}

/// Forward-variant stiffness by adaptive refinement in `s`, for tiny spaces.
///
/// `(0, eps)` with `eps = min(h, delta)/64` uses a 16-node power-weight rule;
/// `(eps, delta)` uses composite Gauss-Legendre on `2^level` uniform panels,
/// doubled until two successive results differ by less than
/// `rel_tol * max|S|`.
pub fn dense_stiffness_oracle(space: &DgSpace, kernel: &KernelSpec, rel_tol: f64) -> Result<DMatrix<f64>> {
    let n = space.dofs();
    if n > MAX_DOFS {
        return domain(format!("dense oracle limited to {MAX_DOFS} dofs, got {n}"));
    }
    let beta = kernel.weight_exponent();
    let eps = space.h().min(kernel.delta) / 64.0;

    let mut near = DMatrix::zeros(n, n);
    for (s, w) in gauss_jacobi_weighted(16, beta, eps)?.iter() {
        near += dense_gram(space, s) * w;
    }

    let rule = legendre_reference(PANEL_NODES);
    let far = |panels: usize| {
        let width = (kernel.delta - eps) / panels as f64;
        let mut acc = DMatrix::zeros(n, n);
        for p in 0..panels {
            let mid = eps + (p as f64 + 0.5) * width;
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let s = mid + 0.5 * width * t;
                acc += dense_gram(space, s) * (0.5 * width * w * s.powf(beta));
            }
        }
        acc
    };

    let assemble = |far: &DMatrix<f64>| (&near + far) * (2.0 * kernel.c_gamma);
    let mut previous = assemble(&far(1));
    let mut achieved = f64::INFINITY;
    for level in 1..=MAX_LEVELS {
        let current = assemble(&far(1 << level));
        let scale = current.amax().max(f64::MIN_POSITIVE);
        achieved = (&current - &previous).amax() / scale;
        if achieved < rel_tol {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::NotConverged {
        achieved,
        requested: rel_tol,
    })
}
