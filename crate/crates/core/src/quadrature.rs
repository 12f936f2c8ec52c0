//! One-dimensional quadrature rules.
//!
//! All Gauss-type rules are generated from the three-term recurrence of the
//! Jacobi family: nodes come from the Golub-Welsch eigenvalue problem, are
//! polished by Newton iteration on the orthonormal polynomial, and weights are
//! taken from the Christoffel function at the polished nodes.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Result};
use crate::legendre;

/// Weight function a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// Plain integral of `g`.
    Unit,
    /// Integral of `(s - lo)^beta * g(s)`.
    Power(f64),
}

/// A quadrature rule: `sum_i weights[i] * g(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
    pub weight_kind: WeightKind,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Affine image of a rule given on `[-1, 1]` with unit weight.
    fn mapped(reference: &Reference, lo: f64, hi: f64) -> Self {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        QuadRule {
            nodes: reference.nodes.iter().map(|t| mid + half * t).collect(),
            weights: reference.weights.iter().map(|w| half * w).collect(),
            interval: (lo, hi),
            weight_kind: WeightKind::Unit,
        }
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub(crate) struct Reference {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Recurrence coefficients of the orthonormal Jacobi polynomials for
/// `(1 - t)^a (1 + t)^b`: diagonal `diag[m]` and off-diagonal `off[m]`
/// linking degree `m - 1` and `m` (`off[0]` unused).
fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut diag = Vec::with_capacity(n + 1);
    let mut off = vec![0.0; n + 1];
    #[allow(clippy::needless_range_loop)]
    for m in 0..=n {
        let mf = m as f64;
        let s = 2.0 * mf + a + b;
        diag.push(if m == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        });
        if m >= 1 {
            let num = 4.0 * mf * (mf + a) * (mf + b) * (mf + a + b);
            let den = s * s * (s + 1.0) * (s - 1.0);
            off[m] = (num / den).sqrt();
        }
    }
    (diag, off)
}

/// Orthonormal values `p_0..p_n` and derivative of `p_n` at `t`.
fn orthonormal_eval(t: f64, n: usize, diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, f64) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0 / mu0.sqrt();
    for m in 0..n {
        let prev = if m > 0 { p[m - 1] } else { 0.0 };
        let dprev = if m > 0 { dp[m - 1] } else { 0.0 };
        let back = if m > 0 { off[m] } else { 0.0 };
        p[m + 1] = ((t - diag[m]) * p[m] - back * prev) / off[m + 1];
        dp[m + 1] = (p[m] + (t - diag[m]) * dp[m] - back * dprev) / off[m + 1];
    }
    let d = dp[n];
    (p, d)
}

/// Gauss-Jacobi rule on `[-1, 1]` for weight `(1 - t)^a (1 + t)^b` with total mass `mu0`.
pub(crate) fn gauss_jacobi_reference(n: usize, a: f64, b: f64, mu0: f64) -> Reference {
    let (diag, off) = jacobi_recurrence(n, a, b);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = diag[i];
        if i + 1 < n {
            jac[(i, i + 1)] = off[i + 1];
            jac[(i + 1, i)] = off[i + 1];
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.total_cmp(y));

    let mut weights = Vec::with_capacity(n);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, d) = orthonormal_eval(*t, n, &diag, &off, mu0);
            let step = p[n] / d;
            *t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (p, _) = orthonormal_eval(*t, n, &diag, &off, mu0);
        let christoffel: f64 = p[..n].iter().map(|v| v * v).sum();
        weights.push(1.0 / christoffel);
    }
    Reference { nodes, weights }
}

pub(crate) fn legendre_reference(n: usize) -> Reference {
    gauss_jacobi_reference(n, 0.0, 0.0, 2.0)
}

/// `n`-point Gauss-Legendre rule on `(lo, hi)`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<QuadRule> {
    if n == 0 {
        return domain("gauss_legendre needs at least one node");
    }
    if !(lo < hi) {
        return domain(format!("gauss_legendre interval ({lo}, {hi}) is empty"));
    }
    Ok(QuadRule::mapped(&legendre_reference(n), lo, hi))
}

/// `n`-point rule on `(0, hi)` with `sum w_i g(s_i) = int_0^hi s^beta g(s) ds`,
/// exact for `g` of degree `2n - 1`.
pub fn gauss_jacobi_weighted(n: usize, beta: f64, hi: f64) -> Result<QuadRule> {
    if n == 0 {
        return domain("gauss_jacobi_weighted needs at least one node");
    }
    if !(beta > -1.0) {
        return domain(format!("weight s^{beta} is not integrable at 0 (need beta > -1)"));
    }
    if !(hi > 0.0) {
        return domain(format!("upper limit must be positive, got {hi}"));
    }
    let mu0 = 2f64.powf(beta + 1.0) / (beta + 1.0);
    let reference = gauss_jacobi_reference(n, 0.0, beta, mu0);
    // s = hi (1 + t) / 2, so s^beta ds = (hi/2)^(beta+1) (1 + t)^beta dt.
    let scale = (0.5 * hi).powf(beta + 1.0);
    Ok(QuadRule {
        nodes: reference.nodes.iter().map(|t| 0.5 * hi * (1.0 + t)).collect(),
        weights: reference.weights.iter().map(|w| scale * w).collect(),
        interval: (0.0, hi),
        weight_kind: WeightKind::Power(beta),
    })
}

pub(crate) fn lobatto_reference(n: usize) -> Reference {
    let interior = if n > 2 {
        gauss_jacobi_reference(n - 2, 1.0, 1.0, 4.0 / 3.0).nodes
    } else {
        Vec::new()
    };
    let mut nodes = Vec::with_capacity(n);
    nodes.push(-1.0);
    nodes.extend(interior);
    nodes.push(1.0);
    let nf = n as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = legendre::values_vec(n - 1, x)[n - 1];
            2.0 / (nf * (nf - 1.0) * p * p)
        })
        .collect();
    Reference { nodes, weights }
}

/// `n`-point Gauss-Lobatto rule on `[lo, hi]`; both endpoints are nodes and
/// the rule is exact for degree `2n - 3`.
pub fn gauss_lobatto(n: usize, lo: f64, hi: f64) -> Result<QuadRule> {
    if n < 2 {
        return domain(format!("gauss_lobatto needs at least 2 nodes, got {n}"));
    }
    if !(lo < hi) {
        return domain(format!("gauss_lobatto interval ({lo}, {hi}) is empty"));
    }
    let mut rule = QuadRule::mapped(&lobatto_reference(n), lo, hi);
    // keep endpoints bit-exact
    rule.nodes[0] = lo;
    rule.nodes[n - 1] = hi;
    Ok(rule)
}
