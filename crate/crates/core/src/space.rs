//! Uniform periodic mesh with a modal Legendre basis per cell.
//!
//! Cell `j` is `[a + j h, a + (j + 1) h)`; on it the basis is
//! `phi_{j,m}(x) = P_m(2 (x - x_j) / h)` with `x_j` the midpoint, so the
//! mass operator is diagonal with entries `h / (2m + 1)`.
//! Degrees of freedom are stored cell-major, mode-minor.

use std::sync::Arc;

use crate::error::{domain, Result};
use crate::legendre;
use crate::quadrature::{legendre_reference, lobatto_reference, Reference};

/// Basis values tabulated at the nodes of a reference rule.
#[derive(Debug)]
struct Tabulated {
    rule: Reference,
    /// `values[i * (k + 1) + m] = P_m(node_i)`
    values: Vec<f64>,
}

impl Tabulated {
    fn new(rule: Reference, degree: usize) -> Self {
        let mut values = Vec::with_capacity(rule.nodes.len() * (degree + 1));
        for &t in &rule.nodes {
            values.extend(legendre::values_vec(degree, t));
        }
        Tabulated { rule, values }
    }
}

#[derive(Debug)]
struct Tables {
    projection: Tabulated,
    lobatto: Tabulated,
}

/// Discontinuous piecewise-polynomial space on a uniform periodic mesh.
#[derive(Debug, Clone)]
pub struct DgSpace {
    a: f64,
    b: f64,
    cells: usize,
    degree: usize,
    h: f64,
    tables: Arc<Tables>,
}

impl PartialEq for DgSpace {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.cells == other.cells && self.degree == other.degree
    }
}

impl DgSpace {
    pub fn new(a: f64, b: f64, cells: usize, degree: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return domain(format!("domain endpoints must satisfy a < b, got ({a}, {b})"));
        }
        if cells < 2 {
            return domain(format!("periodic mesh needs at least 2 cells, got {cells}"));
        }
        let h = (b - a) / cells as f64;
        let projection = Tabulated::new(legendre_reference((degree + 3).max(8)), degree);
        let lobatto = Tabulated::new(lobatto_reference(degree + 3), degree);
        Ok(DgSpace {
            a,
            b,
            cells,
            degree,
            h,
            tables: Arc::new(Tables { projection, lobatto }),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Modes per cell, `k + 1`.
    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dofs(&self) -> usize {
        self.cells * self.modes()
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        self.a + (cell as f64 + 0.5) * self.h
    }

    pub fn mass(&self) -> MassOperator {
        MassOperator {
            cells: self.cells,
            diag: (0..=self.degree).map(|m| self.h / (2 * m + 1) as f64).collect(),
        }
    }

    /// Map `x` periodically into `[a, b)` and locate its cell and reference coordinate.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let len = self.length();
        let mut y = (x - self.a).rem_euclid(len);
        if y >= len {
            y = 0.0;
        }
        let j = ((y / self.h).floor() as usize).min(self.cells - 1);
        let xi = 2.0 * (y - (j as f64 + 0.5) * self.h) / self.h;
        (j, xi)
    }

    pub fn zeros(&self) -> FieldCoeffs {
        FieldCoeffs {
            space: self.clone(),
            coeffs: vec![0.0; self.dofs()],
        }
    }

    pub fn field(&self, coeffs: Vec<f64>) -> Result<FieldCoeffs> {
        if coeffs.len() != self.dofs() {
            return domain(format!("expected {} coefficients, got {}", self.dofs(), coeffs.len()));
        }
        Ok(FieldCoeffs { space: self.clone(), coeffs })
    }

    /// Cell-wise L2 projection, integrals by `max(k + 3, 8)`-point Gauss rules.
    pub fn project(&self, f: impl Fn(f64) -> f64) -> FieldCoeffs {
        let mut coeffs = vec![0.0; self.dofs()];
        self.project_into(&f, &mut coeffs);
        FieldCoeffs { space: self.clone(), coeffs }
    }

    pub(crate) fn project_into(&self, f: &impl Fn(f64) -> f64, out: &mut [f64]) {
        let nm = self.modes();
        let tab = &self.tables.projection;
        for (j, block) in out.chunks_exact_mut(nm).enumerate() {
            block.fill(0.0);
            let xc = self.midpoint(j);
            for (i, (&t, &w)) in tab.rule.nodes.iter().zip(&tab.rule.weights).enumerate() {
                let fv = w * f(xc + 0.5 * self.h * t);
                let phi = &tab.values[i * nm..(i + 1) * nm];
                for (c, p) in block.iter_mut().zip(phi) {
                    *c += fv * p;
                }
            }
            for (m, c) in block.iter_mut().enumerate() {
                *c *= (2 * m + 1) as f64 / 2.0;
            }
        }
    }

    /// Visits `(weight, f_exact(x) - f_h(x))` at the `k + 3` Gauss-Lobatto
    /// nodes of each cell, endpoints evaluated from the owning cell.
    fn for_each_lobatto_residual(&self, f_h: &FieldCoeffs, f_exact: impl Fn(f64) -> f64, mut visit: impl FnMut(f64, f64)) {
        let nm = self.modes();
        let tab = &self.tables.lobatto;
        for (j, block) in f_h.coeffs.chunks_exact(nm).enumerate() {
            let xc = self.midpoint(j);
            for (i, (&t, &w)) in tab.rule.nodes.iter().zip(&tab.rule.weights).enumerate() {
                let phi = &tab.values[i * nm..(i + 1) * nm];
                let uh: f64 = block.iter().zip(phi).map(|(c, p)| c * p).sum();
                visit(0.5 * self.h * w, f_exact(xc + 0.5 * self.h * t) - uh);
            }
        }
    }
}

pub fn make_space(a: f64, b: f64, cells: usize, degree: usize) -> Result<DgSpace> {
    DgSpace::new(a, b, cells, degree)
}

/// Diagonal mass operator of the modal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MassOperator {
    cells: usize,
    /// Per-mode entry `h / (2m + 1)`, identical on every cell.
    diag: Vec<f64>,
}

impl MassOperator {
    pub fn mode_entries(&self) -> &[f64] {
        &self.diag
    }

    pub fn entry(&self, dof: usize) -> f64 {
        self.diag[dof % self.diag.len()]
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nm = self.diag.len();
        for (i, (yi, xi)) in y.iter_mut().zip(x).enumerate() {
            *yi = self.diag[i % nm] * xi;
        }
    }

    pub fn apply_inverse(&self, x: &[f64], y: &mut [f64]) {
        let nm = self.diag.len();
        for (i, (yi, xi)) in y.iter_mut().zip(x).enumerate() {
            *yi = xi / self.diag[i % nm];
        }
    }

    /// `x^T M y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let nm = self.diag.len();
        x.iter().zip(y).enumerate().map(|(i, (a, b))| self.diag[i % nm] * a * b).sum()
    }

    pub fn dofs(&self) -> usize {
        self.cells * self.diag.len()
    }
}

/// Modal coefficients of a field in a [`DgSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoeffs {
    space: DgSpace,
    pub coeffs: Vec<f64>,
}

impl FieldCoeffs {
    pub fn space(&self) -> &DgSpace {
        &self.space
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let nm = self.space.modes();
        &self.coeffs[j * nm..(j + 1) * nm]
    }

    /// Value in cell `j` at reference coordinate `xi` (no wrapping).
    pub fn eval_local(&self, j: usize, xi: f64) -> f64 {
        let p = legendre::values_vec(self.space.degree, xi);
        self.cell(j).iter().zip(&p).map(|(c, v)| c * v).sum()
    }

    /// Value at `x` after periodic wrapping; interfaces belong to the cell on their right.
    pub fn eval(&self, x: f64) -> f64 {
        let (j, xi) = self.space.locate(x);
        self.eval_local(j, xi)
    }

    pub fn l2_norm(&self) -> f64 {
        self.space.mass().inner(&self.coeffs, &self.coeffs).sqrt()
    }
}

pub fn eval_field(f: &FieldCoeffs, x: f64) -> f64 {
    f.eval(x)
}

pub fn l2_project(space: &DgSpace, f: impl Fn(f64) -> f64) -> FieldCoeffs {
    space.project(f)
}

/// Discrete L2 error with the `k + 3`-point Gauss-Lobatto rule on every cell.
pub fn l2_error(f_h: &FieldCoeffs, f_exact: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    f_h.space.for_each_lobatto_residual(f_h, f_exact, |w, r| acc += w * r * r);
    acc.sqrt()
}

/// Maximum pointwise error over the same Gauss-Lobatto nodes as [`l2_error`].
pub fn linf_error(f_h: &FieldCoeffs, f_exact: impl Fn(f64) -> f64) -> f64 {
    let mut worst = 0.0f64;
    f_h.space.for_each_lobatto_residual(f_h, f_exact, |_, r| worst = worst.max(r.abs()));
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use std::f64::consts::PI;

    fn sin2pi(x: f64) -> f64 {
        (2.0 * PI * x).sin()
    }

    #[test]
    fn space_construction() {
        let s = make_space(0.0, 1.0, 10, 2).unwrap();
        assert!((s.h() - 0.1).abs() < 1e-15);
        assert_eq!(s.dofs(), 30);
        let s = make_space(0.0, 1.0, 80, 6).unwrap();
        assert!((s.h() - 0.0125).abs() < 1e-15);
        assert_eq!(s.dofs(), 560);
        assert!(make_space(0.0, 1.0, 1, 2).is_err());
        assert!(make_space(1.0, 1.0, 4, 2).is_err());
    }

    #[test]
    fn evaluation_conventions() {
        let s = make_space(0.0, 1.0, 7, 3).unwrap();
        let c = s.project(|_| 2.5);
        for x in [-3.2, 0.0, 0.123, 0.5, 1.0, 7.7] {
            assert!((c.eval(x) - 2.5).abs() < 1e-14);
        }
        let lin = s.project(|x| x);
        assert!((lin.eval(0.3) - 0.3).abs() < 1e-14);
        // x = b wraps to a
        assert!((lin.eval(1.0) - lin.eval(0.0)).abs() < 1e-15);
        assert!(lin.eval(1.0).abs() < 1e-14);
        // interface point belongs to the right cell
        let k0 = make_space(0.0, 1.0, 2, 0).unwrap().project(|x| x);
        assert!((k0.eval(0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn projection_of_linear_k0() {
        let s = make_space(0.0, 1.0, 2, 0).unwrap();
        let p = s.project(|x| x);
        assert!((p.coeffs[0] - 0.25).abs() < 1e-15);
        assert!((p.coeffs[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn projection_reproduces_polynomials() {
        for k in 0..=6 {
            let s = make_space(-1.0, 2.0, 5, k).unwrap();
            let f = |x: f64| (0..=k).map(|p| (p as f64 + 1.0) * x.powi(p as i32)).sum::<f64>();
            let p = s.project(f);
            let scale = f(2.0);
            assert!(linf_error(&p, f) < 1e-13 * scale, "k={k}");
            assert!(l2_error(&p, f) < 1e-13 * scale, "k={k}");
        }
    }

    #[test]
    fn error_norm_basics() {
        let s = make_space(0.0, 1.0, 9, 1).unwrap();
        assert!(l2_error(&s.project(|_| 3.0), |_| 3.0) < 1e-14);
        assert!((l2_error(&s.zeros(), |_| 1.0) - 1.0).abs() < 1e-14);
        let z = linf_error(&s.zeros(), sin2pi);
        assert!(z <= 1.0 && z > 0.9);
    }

    #[test]
    fn l2_error_matches_dense_quadrature() {
        let s = make_space(0.0, 1.0, 10, 0).unwrap();
        let p = s.project(sin2pi);
        let mut acc = 0.0;
        for j in 0..10 {
            let lo = j as f64 * 0.1;
            let rule = gauss_legendre(64, lo, lo + 0.1).unwrap();
            acc += rule.integrate(|x| (sin2pi(x) - p.eval_local(j, 2.0 * (x - lo) / 0.1 - 1.0)).powi(2));
        }
        let dense = acc.sqrt();
        let got = l2_error(&p, sin2pi);
        assert!((got - dense).abs() < 0.01 * dense, "{got} vs {dense}");
    }

    #[test]
    fn linf_error_matches_dense_sampling() {
        let s = make_space(0.0, 1.0, 40, 2).unwrap();
        let p = s.project(sin2pi);
        let dense = (0..1000)
            .map(|i| {
                let x = i as f64 / 1000.0 + 1e-4;
                (sin2pi(x) - p.eval(x)).abs()
            })
            .fold(0.0, f64::max);
        let got = linf_error(&p, sin2pi);
        assert!((got - dense).abs() < 0.05 * dense, "{got} vs {dense}");
    }

    #[test]
    fn projection_converges_at_order_k_plus_one() {
        for k in 0..=2 {
            let errs: Vec<f64> = [10, 20, 40]
                .iter()
                .map(|&n| l2_error(&make_space(0.0, 1.0, n, k).unwrap().project(sin2pi), sin2pi))
                .collect();
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!((order - (k as f64 + 1.0)).abs() < 0.1, "k={k} order={order}");
            }
        }
    }

    #[test]
    fn modal_mass_is_diagonal() {
        let s = make_space(0.0, 1.0, 3, 4).unwrap();
        let rule = gauss_legendre(10, -1.0, 1.0).unwrap();
        let h = s.h();
        for m in 0..=4 {
            for n in 0..=4 {
                let v = 0.5 * h
                    * rule.integrate(|t| {
                        let p = legendre::values_vec(4, t);
                        p[m] * p[n]
                    });
                if m == n {
                    assert!((v - s.mass().mode_entries()[m]).abs() < 1e-15);
                } else {
                    assert!(v.abs() < 1e-14);
                }
            }
        }
    }
}
