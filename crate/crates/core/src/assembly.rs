//! Shift operators, the nonlocal stiffness operator and its local LDG limit.
//!
//! For a shift `s > 0` the forward operator `H_s` has entries
//! `H(phi_col, phi_row; s) = (1/s) int_{I_row} (phi_col(x + s) - phi_col(x)) phi_row(x) dx`.
//! Eliminating the auxiliary field `q_h(.; s) = M^{-1} H_s u_h` from the
//! two-field scheme leaves `M u'' + S u = F` with
//! `S = 2 int_0^delta s^2 gamma(s) H_s^T M^{-1} H_s ds`.

use crate::error::{domain, Result};
use crate::kernel::KernelSpec;
use crate::legendre;
use crate::operator::OperatorMatrix;
use crate::par::Execution;
use crate::quadrature::{gauss_jacobi_weighted, legendre_reference, Reference};
use crate::space::DgSpace;

/// Which difference quotient carries the auxiliary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeVariant {
    /// `q(x; s) = (u(x + s) - u(x)) / s`.
    #[default]
    Forward,
    /// `q(x; s) = (u(x) - u(x - s)) / s`.
    Backward,
}

impl std::str::FromStr for SchemeVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Ok(SchemeVariant::Forward),
            "backward" => Ok(SchemeVariant::Backward),
            other => Err(format!("unknown scheme variant '{other}' (expected forward|backward)")),
        }
    }
}

impl std::fmt::Display for SchemeVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeVariant::Forward => "forward",
            SchemeVariant::Backward => "backward",
        })
    }
}

/// Quadrature in the interaction distance `s`.
///
/// `(0, delta)` is cut into panels at multiples of `h`; the first panel
/// absorbs the weight `s^(2 - alpha)` into a Gauss-Jacobi rule, later panels
/// apply Gauss-Legendre to the full weighted integrand.
///
/// On each panel the shift Gram is a polynomial of degree up to `4k + 2` in
/// `s`, so every panel gets `2k + 1` nodes on top of `nodes_per_panel`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SQuadConfig {
    /// Nodes per panel beyond the `2k + 1` taken up by the polynomial degree.
    pub nodes_per_panel: usize,
    /// Exact node count on the first (singular) panel, overriding the default.
    pub first_panel_nodes: Option<usize>,
    pub execution: Execution,
}

impl Default for SQuadConfig {
    fn default() -> Self {
        SQuadConfig {
            nodes_per_panel: 8,
            first_panel_nodes: None,
            execution: Execution::default(),
        }
    }
}

impl SQuadConfig {
    pub fn with_nodes(nodes_per_panel: usize) -> Self {
        SQuadConfig {
            nodes_per_panel,
            ..Default::default()
        }
    }
}

/// Splits `s = p h + r` with `0 <= r < h`; returns `(p, rho = 2 r / h)`.
fn split_shift(s: f64, h: f64) -> (isize, f64) {
    let mut p = (s / h).floor();
    let mut r = s - p * h;
    if r < 0.0 {
        p -= 1.0;
        r += h;
    } else if r >= h {
        p += 1.0;
        r -= h;
    }
    (p as isize, 2.0 * r / h)
}

/// `scale * int_lo^{lo + width} f(xi) dxi` by the reference rule, per `(m, l)` entry.
///
/// The width is passed separately so short pieces near an interface keep
/// full relative accuracy.
fn accumulate(
    rule: &Reference,
    degree: usize,
    lo: f64,
    width: f64,
    scale: f64,
    out: &mut [f64],
    mut entry: impl FnMut(f64, &[f64], &mut [f64]),
) {
    let nb = degree + 1;
    let half = 0.5 * width;
    let mut pm = vec![0.0; nb];
    let mut row = vec![0.0; nb];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let xi = lo + half * (1.0 + t);
        legendre::values(degree, xi, &mut pm);
        entry(xi, &pm, &mut row);
        let c = scale * half * w;
        for m in 0..nb {
            for l in 0..nb {
                out[m * nb + l] += c * pm[m] * row[l];
            }
        }
    }
}

fn check_shift(space: &DgSpace, s: f64) -> Result<()> {
    if !(s > 0.0 && s < space.length()) {
        return domain(format!("shift must satisfy 0 < s < {}, got {s}", space.length()));
    }
    Ok(())
}

/// Forward shift operator `H_s` (rows: test basis, columns: trial basis).
pub fn shift_matrix_h(space: &DgSpace, s: f64) -> Result<OperatorMatrix> {
    check_shift(space, s)?;
    let k = space.degree();
    let nb = k + 1;
    let h = space.h();
    let rule = legendre_reference(nb);
    let (p, rho) = split_shift(s, h);
    let mut out = OperatorMatrix::zeros(space.cells(), nb, 0, p + 1);

    if p == 0 {
        // (P_l(xi + rho) - P_l(xi)) / rho expanded in Taylor terms; no cancellation for small s.
        let mut blk = vec![0.0; nb * nb];
        accumulate(&rule, k, -1.0, 2.0 - rho, 1.0, &mut blk, |xi, _, row| {
            let tab = legendre::taylor_table(k, xi);
            for l in 0..nb {
                let mut acc = 0.0;
                for n in (1..=l).rev() {
                    acc = acc * rho + tab[l * nb + n];
                }
                row[l] = acc;
            }
        });
        if rho > 0.0 {
            accumulate(&rule, k, 1.0 - rho, rho, -1.0 / rho, &mut blk, |_, pm, row| {
                row.copy_from_slice(pm)
            });
        }
        out.block_mut(0).copy_from_slice(&blk);
    } else {
        let blk = out.block_mut(0);
        for m in 0..nb {
            blk[m * nb + m] = -h / ((2 * m + 1) as f64 * s);
        }
        let scale = h / (2.0 * s);
        let mut blk = vec![0.0; nb * nb];
        accumulate(&rule, k, -1.0, 2.0 - rho, scale, &mut blk, |xi, _, row| {
            legendre::values(k, xi + rho, row)
        });
        out.block_mut(p).copy_from_slice(&blk);
    }
    if rho > 0.0 {
        let scale = h / (2.0 * s);
        let mut blk = vec![0.0; nb * nb];
        accumulate(&rule, k, 1.0 - rho, rho, scale, &mut blk, |xi, _, row| {
            legendre::values(k, xi + rho - 2.0, row)
        });
        out.block_mut(p + 1).copy_from_slice(&blk);
    }
    Ok(out)
}

/// Backward shift operator `K_s`, assembled directly from its definition.
/// Satisfies `K_s = -H_s^T`; the stiffness assembly relies on that identity.
pub fn shift_matrix_k(space: &DgSpace, s: f64) -> Result<OperatorMatrix> {
    check_shift(space, s)?;
    let k = space.degree();
    let nb = k + 1;
    let h = space.h();
    let rule = legendre_reference(nb);
    let (p, rho) = split_shift(s, h);
    let mut out = OperatorMatrix::zeros(space.cells(), nb, -p - 1, 0);

    if p == 0 {
        let mut blk = vec![0.0; nb * nb];
        // (P_l(xi) - P_l(xi - rho)) / rho = sum_n (-1)^(n+1) rho^(n-1) P_l^(n)(xi) / n!
        accumulate(&rule, k, -1.0 + rho, 2.0 - rho, 1.0, &mut blk, |xi, _, row| {
            let tab = legendre::taylor_table(k, xi);
            for l in 0..nb {
                let mut acc = 0.0;
                for n in (1..=l).rev() {
                    acc = acc * (-rho) + tab[l * nb + n];
                }
                row[l] = acc;
            }
        });
        if rho > 0.0 {
            accumulate(&rule, k, -1.0, rho, 1.0 / rho, &mut blk, |_, pm, row| {
                row.copy_from_slice(pm)
            });
        }
        out.block_mut(0).copy_from_slice(&blk);
    } else {
        let blk = out.block_mut(0);
        for m in 0..nb {
            blk[m * nb + m] = h / ((2 * m + 1) as f64 * s);
        }
        let scale = -h / (2.0 * s);
        let mut blk = vec![0.0; nb * nb];
        accumulate(&rule, k, -1.0 + rho, 2.0 - rho, scale, &mut blk, |xi, _, row| {
            legendre::values(k, xi - rho, row)
        });
        out.block_mut(-p).copy_from_slice(&blk);
    }
    if rho > 0.0 {
        let scale = -h / (2.0 * s);
        let mut blk = vec![0.0; nb * nb];
        accumulate(&rule, k, -1.0, rho, scale, &mut blk, |xi, _, row| {
            legendre::values(k, xi - rho + 2.0, row)
        });
        out.block_mut(-p - 1).copy_from_slice(&blk);
    }
    Ok(out)
}

/// `q`-elimination integrand `H^T M^{-1} H` (forward) or `K^T M^{-1} K` (backward).
pub fn shift_gram(space: &DgSpace, s: f64, variant: SchemeVariant) -> Result<OperatorMatrix> {
    let inv_mass: Vec<f64> = space.mass().mode_entries().iter().map(|v| 1.0 / v).collect();
    let hs = shift_matrix_h(space, s)?;
    Ok(match variant {
        SchemeVariant::Forward => OperatorMatrix::weighted_gram(&hs, &inv_mass, &hs),
        SchemeVariant::Backward => {
            let ks = hs.transpose();
            // K = -H^T; the sign cancels in K^T M^{-1} K.
            OperatorMatrix::weighted_gram(&ks, &inv_mass, &ks)
        }
    })
}

/// Number of cells spanned by the horizon, `ceil(delta / h)` with roundoff slack.
pub fn horizon_cells(delta: f64, h: f64) -> usize {
    let ratio = delta / h;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-10 * ratio.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Nodes and weights `(s_i, w_i)` with `sum w_i g(s_i) ~ int_0^delta s^2 gamma(s) g(s) ds`.
pub fn s_quadrature(space: &DgSpace, kernel: &KernelSpec, squad: &SQuadConfig) -> Result<Vec<(f64, f64)>> {
    if squad.nodes_per_panel == 0 {
        return domain("s-quadrature needs at least one node per panel");
    }
    let h = space.h();
    let delta = kernel.delta;
    let beta = kernel.weight_exponent();
    let panels = horizon_cells(delta, h);
    let n = squad.nodes_per_panel + 2 * space.degree() + 1;
    let mut nodes = Vec::new();
    for i in 0..panels {
        let lo = i as f64 * h;
        let hi = if i + 1 == panels { delta } else { (i + 1) as f64 * h };
        if i == 0 {
            let rule = gauss_jacobi_weighted(squad.first_panel_nodes.unwrap_or(n), beta, hi)?;
            nodes.extend(rule.iter().map(|(s, w)| (s, kernel.c_gamma * w)));
        } else if hi > lo {
            let rule = legendre_reference(n);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let s = mid + half * t;
                nodes.push((s, kernel.c_gamma * half * w * s.powf(beta)));
            }
        }
    }
    Ok(nodes)
}

/// Nonlocal stiffness `S = 2 int_0^delta s^2 gamma(s) G(s) ds` with `G` from [`shift_gram`].
pub fn stiffness_matrix(
    space: &DgSpace,
    kernel: &KernelSpec,
    squad: &SQuadConfig,
    variant: SchemeVariant,
) -> Result<OperatorMatrix> {
    let band = horizon_cells(kernel.delta, space.h());
    if band + 1 > space.cells() - 1 {
        return domain(format!(
            "horizon {} spans {band} cells of width {}; the periodic band needs N >= {} cells, got {}",
            kernel.delta,
            space.h(),
            band + 2,
            space.cells()
        ));
    }
    let nodes = s_quadrature(space, kernel, squad)?;
    let contributions = squad.execution.map(&nodes, |&(s, _)| shift_gram(space, s, variant));

    let nb = space.modes();
    let mut total = OperatorMatrix::zeros(space.cells(), nb, 0, 0);
    for (contrib, &(_, w)) in contributions.into_iter().zip(&nodes) {
        total.add_scaled(&contrib?, 2.0 * w);
    }
    // exact symmetry for the Cholesky factorization and the energy identity
    let mut sym = total.transpose();
    sym.add_scaled(&total, 1.0);
    sym.scale(0.5);
    Ok(sym)
}

/// Alternating-flux LDG operator `D` with `q = M^{-1} D u`, the `s -> 0` limit of `H_s`
/// (forward variant) or `K_s` (backward variant).
pub fn ldg_gradient(space: &DgSpace, variant: SchemeVariant) -> OperatorMatrix {
    let k = space.degree();
    let nb = k + 1;
    let rule = legendre_reference(nb);
    // volume term: -int P_l P_m' dxi
    let mut volume = vec![0.0; nb * nb];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = legendre::values_vec(k, t);
        let tab = legendre::taylor_table(k, t);
        for m in 0..nb {
            let dpm = if m >= 1 { tab[m * nb + 1] } else { 0.0 };
            for l in 0..nb {
                volume[m * nb + l] -= w * p[l] * dpm;
            }
        }
    }
    let sgn = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut out = OperatorMatrix::zeros(space.cells(), nb, -1, 1);
    match variant {
        // u-hat = u^+ at both interfaces of the cell
        SchemeVariant::Forward => {
            let b0 = out.block_mut(0);
            for m in 0..nb {
                for l in 0..nb {
                    b0[m * nb + l] = volume[m * nb + l] - sgn(l) * sgn(m);
                }
            }
            let b1 = out.block_mut(1);
            for m in 0..nb {
                for l in 0..nb {
                    b1[m * nb + l] = sgn(l);
                }
            }
        }
        // u-hat = u^- at both interfaces of the cell
        SchemeVariant::Backward => {
            let b0 = out.block_mut(0);
            for m in 0..nb {
                for l in 0..nb {
                    b0[m * nb + l] = volume[m * nb + l] + 1.0;
                }
            }
            let bm = out.block_mut(-1);
            for m in 0..nb {
                for l in 0..nb {
                    bm[m * nb + l] = -sgn(m);
                }
            }
        }
    }
    out
}

/// Stiffness of the alternating-flux LDG scheme for `-u_xx`: `D^T M^{-1} D`.
pub fn ldg_stiffness(space: &DgSpace, variant: SchemeVariant) -> OperatorMatrix {
    let d = ldg_gradient(space, variant);
    let inv_mass: Vec<f64> = space.mass().mode_entries().iter().map(|v| 1.0 / v).collect();
    let s = OperatorMatrix::weighted_gram(&d, &inv_mass, &d);
    let mut sym = s.transpose();
    sym.add_scaled(&s, 1.0);
    sym.scale(0.5);
    sym
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_kernel;
    use crate::space::make_space;

    #[test]
    fn split_shift_handles_exact_multiples() {
        let (p, rho) = split_shift(0.2, 0.1);
        assert_eq!(p, 2);
        assert!(rho.abs() < 1e-12 || (rho - 2.0).abs() > 1.0);
        let (p, rho) = split_shift(0.05, 0.1);
        assert_eq!(p, 0);
        assert!((rho - 1.0).abs() < 1e-14);
    }

    #[test]
    fn k0_shift_pattern() {
        let space = make_space(0.0, 1.0, 6, 0).unwrap();
        for s in [1e-6, 0.03, 0.1, 0.16] {
            let hs = shift_matrix_h(&space, s).unwrap();
            assert!((hs.get(2, 2) + 1.0).abs() < 1e-12, "s={s}");
            assert!((hs.get(2, 3) - 1.0).abs() < 1e-12);
            assert!(hs.get(2, 1).abs() < 1e-15);
            let ks = shift_matrix_k(&space, s).unwrap();
            assert!((ks.get(2, 2) - 1.0).abs() < 1e-12);
            assert!((ks.get(2, 1) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shifts_annihilate_constants() {
        let space = make_space(0.0, 1.0, 5, 3).unwrap();
        let ones = space.project(|_| 1.0).coeffs;
        for s in [0.013, 0.2, 0.37, 0.95] {
            for m in [shift_matrix_h(&space, s).unwrap(), shift_matrix_k(&space, s).unwrap()] {
                let y = m.apply_vec(&ones);
                assert!(y.iter().all(|v| v.abs() < 1e-12), "s={s}: {y:?}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range_shift() {
        let space = make_space(0.0, 1.0, 5, 1).unwrap();
        assert!(shift_matrix_h(&space, 0.0).is_err());
        assert!(shift_matrix_h(&space, 1.0).is_err());
        assert!(shift_matrix_k(&space, -0.1).is_err());
    }

    #[test]
    fn k0_stiffness_is_three_point_laplacian() {
        let space = make_space(0.0, 1.0, 8, 0).unwrap();
        let h = space.h();
        for alpha in [0.25, 0.5, 1.5, 2.5] {
            for delta in [h, 0.5 * h, 1e-4 * h] {
                let kernel = make_kernel(alpha, delta).unwrap();
                let squad = SQuadConfig { first_panel_nodes: Some(1), ..SQuadConfig::default() };
                let s = stiffness_matrix(&space, &kernel, &squad, SchemeVariant::Forward).unwrap();
                assert!((s.get(3, 3) - 2.0 / h).abs() < 1e-12 / h);
                assert!((s.get(3, 4) + 1.0 / h).abs() < 1e-12 / h);
                assert!((s.get(3, 2) + 1.0 / h).abs() < 1e-12 / h);
                assert!(s.get(3, 5).abs() < 1e-12 / h);
            }
        }
    }

    #[test]
    fn band_overflow_names_required_cells() {
        let space = make_space(0.0, 1.0, 4, 1).unwrap();
        let kernel = make_kernel(0.5, 0.6).unwrap();
        let err = stiffness_matrix(&space, &kernel, &SQuadConfig::default(), SchemeVariant::Forward)
            .unwrap_err()
            .to_string();
        assert!(err.contains("N >= 5"), "{err}");
    }

    #[test]
    fn ldg_k0_matches_closed_form() {
        let space = make_space(0.0, 1.0, 10, 0).unwrap();
        for v in [SchemeVariant::Forward, SchemeVariant::Backward] {
            let s = ldg_stiffness(&space, v);
            assert!((s.get(4, 4) - 20.0).abs() < 1e-12);
            assert!((s.get(4, 5) + 10.0).abs() < 1e-12);
            assert!((s.get(4, 3) + 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_and_sequential_assembly_agree_bitwise() {
        let space = make_space(0.0, 1.0, 12, 2).unwrap();
        let kernel = make_kernel(1.5, 0.2).unwrap();
        let seq = SQuadConfig { execution: Execution::Sequential, ..SQuadConfig::default() };
        let par = SQuadConfig { execution: Execution::Parallel, ..SQuadConfig::default() };
        let a = stiffness_matrix(&space, &kernel, &seq, SchemeVariant::Forward).unwrap();
        let b = stiffness_matrix(&space, &kernel, &par, SchemeVariant::Forward).unwrap();
        assert_eq!(a, b);
    }
}
