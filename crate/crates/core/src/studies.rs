//! Experiment drivers: manufactured-solution convergence tables, energy
//! traces, and the vanishing-horizon study. Each writes a CSV table.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{stiffness_matrix, SQuadConfig, SchemeVariant};
use crate::error::{Error, Result};
use crate::integrator::{steps_for, CnState, EnergySample, Forcing};
use crate::kernel::KernelSpec;
use crate::par::Execution;
use crate::space::{l2_error, linf_error, DgSpace, FieldCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Converge,
    Energy,
    Limit,
    Solve,
}

/// Horizon selection. Multiples of `h` are resolved per mesh, so refinement
/// sweeps shrink the horizon with the cells.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSpec {
    Fixed(Vec<f64>),
    MultipleOfH(Vec<f64>),
}

impl DeltaSpec {
    fn len(&self) -> usize {
        match self {
            DeltaSpec::Fixed(v) | DeltaSpec::MultipleOfH(v) => v.len(),
        }
    }

    pub fn resolve(&self, index: usize, h: f64) -> f64 {
        match self {
            DeltaSpec::Fixed(v) => v[index],
            DeltaSpec::MultipleOfH(v) => v[index] * h,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub alphas: Vec<f64>,
    pub delta: DeltaSpec,
    pub degrees: Vec<usize>,
    pub cells: Vec<usize>,
    pub dt: f64,
    pub t_final: f64,
    pub variant: SchemeVariant,
    pub squad_nodes: usize,
    pub energy_stride: usize,
    pub out: Option<PathBuf>,
    pub execution: Execution,
}

impl StudyConfig {
    /// Manufactured-solution convergence setup on `(0, 1)`: `dt = 2e-5`, `T = 1`.
    pub fn converge() -> Self {
        StudyConfig {
            kind: StudyKind::Converge,
            alphas: vec![0.25, 0.5, 1.5, 2.5],
            delta: DeltaSpec::Fixed(vec![0.2]),
            degrees: vec![0, 1, 2],
            cells: vec![10, 20, 40],
            dt: 2e-5,
            t_final: 1.0,
            variant: SchemeVariant::Forward,
            squad_nodes: 8,
            energy_stride: 10,
            out: None,
            execution: Execution::default(),
        }
    }

    /// Unforced energy run: `N = 80`, `delta = 2h`, `k = 5`, `dt = 0.1`, `T = 100`.
    pub fn energy() -> Self {
        StudyConfig {
            kind: StudyKind::Energy,
            alphas: vec![2.0 / 3.0],
            delta: DeltaSpec::MultipleOfH(vec![2.0]),
            degrees: vec![5],
            cells: vec![80],
            dt: 0.1,
            t_final: 100.0,
            energy_stride: 1,
            ..Self::converge()
        }
    }

    /// Vanishing-horizon run: `k = 2`, `h = 0.025`, `dt = 0.01`, `T = 100`,
    /// `delta = 2^-1 .. 2^-4 x 1e-2`.
    pub fn limit() -> Self {
        StudyConfig {
            kind: StudyKind::Limit,
            alphas: vec![0.5, 1.5],
            delta: DeltaSpec::Fixed(vec![5e-3, 2.5e-3, 1.25e-3, 6.25e-4]),
            degrees: vec![2],
            cells: vec![40],
            dt: 0.01,
            t_final: 100.0,
            ..Self::converge()
        }
    }

    pub fn solve() -> Self {
        StudyConfig {
            kind: StudyKind::Solve,
            alphas: vec![0.5],
            delta: DeltaSpec::Fixed(vec![0.2]),
            degrees: vec![2],
            cells: vec![40],
            dt: 1e-3,
            t_final: 1.0,
            ..Self::converge()
        }
    }

    pub fn defaults_for(kind: StudyKind) -> Self {
        match kind {
            StudyKind::Converge => Self::converge(),
            StudyKind::Energy => Self::energy(),
            StudyKind::Limit => Self::limit(),
            StudyKind::Solve => Self::solve(),
        }
    }

    fn squad(&self) -> SQuadConfig {
        SQuadConfig {
            nodes_per_panel: self.squad_nodes,
            first_panel_nodes: None,
            execution: self.execution,
        }
    }

    /// Checks every parameter against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.alphas.is_empty() || self.degrees.is_empty() || self.cells.is_empty() || self.delta.len() == 0 {
            return bad("alpha, delta, k and cell lists must be non-empty".into());
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 3.0) {
                return bad(format!("alpha = {a} violates 0 < alpha < 3"));
            }
        }
        let deltas = match &self.delta {
            DeltaSpec::Fixed(v) | DeltaSpec::MultipleOfH(v) => v,
        };
        for &d in deltas {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("horizon value {d} must be positive"));
            }
        }
        for &n in &self.cells {
            if n < 2 {
                return bad(format!("cell count {n} must be at least 2"));
            }
        }
        if self.squad_nodes == 0 {
            return bad("s-quadrature needs at least one node per panel".into());
        }
        steps_for(self.t_final, self.dt)?;
        if self.kind == StudyKind::Energy && self.energy_stride == 0 {
            return bad("energy stride must be at least 1".into());
        }
        for &n in &self.cells {
            let h = 1.0 / n as f64;
            for i in 0..self.delta.len() {
                let delta = self.delta.resolve(i, h);
                let band = crate::assembly::horizon_cells(delta, h);
                if band + 2 > n {
                    return bad(format!(
                        "horizon {delta} needs at least {} cells, got {n}",
                        band + 2
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `f_delta(x, t) = -cos(2 pi t) sin(2 pi x) (4 pi^2 + c)` for which
/// `u = cos(2 pi t) sin(2 pi x)` solves `u_tt + L_delta u = f_delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedForcing {
    /// `4 pi^2 + c(delta, alpha)`.
    pub amplitude: f64,
}

impl ManufacturedForcing {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        -(2.0 * PI * t).cos() * (2.0 * PI * x).sin() * self.amplitude
    }

    pub fn to_forcing(&self, space: &DgSpace) -> Forcing {
        let amp = self.amplitude;
        Forcing::separable(space, |x| (2.0 * PI * x).sin(), move |t| -amp * (2.0 * PI * t).cos())
    }
}

pub fn manufactured_forcing(kernel: &KernelSpec) -> ManufacturedForcing {
    ManufacturedForcing {
        amplitude: 4.0 * PI * PI + kernel.forcing_coefficient(),
    }
}

pub fn exact_solution(x: f64, t: f64) -> f64 {
    (2.0 * PI * t).cos() * (2.0 * PI * x).sin()
}

/// `order_i = ln(e_i / e_{i+1}) / ln(m_i / m_{i+1})` for decreasing mesh
/// parameters `m`; `None` where an error is not positive.
pub fn observed_orders(errors: &[f64], meshes: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != meshes.len() || errors.len() < 2 {
        return Err(Error::Config("need matching error and mesh lists of length >= 2".into()));
    }
    if meshes.windows(2).any(|w| !(w[0] > w[1] && w[1] > 0.0)) {
        return Err(Error::Config("mesh parameters must be positive and strictly decreasing".into()));
    }
    Ok(errors
        .windows(2)
        .zip(meshes.windows(2))
        .map(|(e, m)| {
            if e[0] > 0.0 && e[1] > 0.0 {
                Some((e[0] / e[1]).ln() / (m[0] / m[1]).ln())
            } else {
                None
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub alpha: f64,
    pub delta: f64,
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub e_u: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn find(&self, alpha: f64, k: usize, n: usize) -> impl Iterator<Item = &ErrorRow> {
        self.rows
            .iter()
            .filter(move |r| (r.alpha - alpha).abs() < 1e-12 && r.k == k && r.n == n)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(File::create(path)?, &self.rows)
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Ok(ErrorTable { rows: read_rows(path)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub alpha: f64,
    pub k: usize,
    pub h: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub delta: f64,
    pub linf_err: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
}

impl LimitTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(File::create(path)?, &self.rows)
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Ok(LimitTable { rows: read_rows(path)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub rel_drift: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub rows: Vec<EnergyRow>,
}

impl EnergyTrace {
    pub fn from_samples(samples: &[EnergySample], dt: f64) -> Self {
        let reference = samples.first().map_or(0.0, |s| s.energy);
        let rows = samples
            .iter()
            .map(|s| EnergyRow {
                step: s.n,
                time: s.n as f64 * dt,
                energy: s.energy,
                rel_drift: if reference > 0.0 {
                    (s.energy - reference).abs() / reference
                } else {
                    (s.energy - reference).abs()
                },
            })
            .collect();
        EnergyTrace { rows }
    }

    pub fn max_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_drift).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(File::create(path)?, &self.rows)
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Ok(EnergyTrace { rows: read_rows(path)? })
    }
}

fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// One `(alpha, delta spec, k, N)` combination, in configuration order.
#[derive(Debug, Clone, Copy)]
struct Case {
    alpha: f64,
    delta_index: usize,
    k: usize,
    n: usize,
}

fn cases(cfg: &StudyConfig) -> Vec<Case> {
    let mut out = Vec::new();
    for &alpha in &cfg.alphas {
        for delta_index in 0..cfg.delta.len() {
            for &k in &cfg.degrees {
                for &n in &cfg.cells {
                    out.push(Case { alpha, delta_index, k, n });
                }
            }
        }
    }
    out
}

/// Assembled operators for one case on `(0, 1)`.
struct Prepared {
    space: DgSpace,
    kernel: KernelSpec,
    stiffness: Arc<crate::operator::OperatorMatrix>,
}

fn prepare(cfg: &StudyConfig, case: &Case) -> Result<Prepared> {
    let space = DgSpace::new(0.0, 1.0, case.n, case.k)?;
    let delta = cfg.delta.resolve(case.delta_index, space.h());
    let kernel = KernelSpec::new(case.alpha, delta)?;
    let stiffness = Arc::new(stiffness_matrix(&space, &kernel, &cfg.squad(), cfg.variant)?);
    Ok(Prepared { space, kernel, stiffness })
}

fn sin2pi(x: f64) -> f64 {
    (2.0 * PI * x).sin()
}

/// Final manufactured-problem field for one case.
pub fn manufactured_run(
    space: &DgSpace,
    kernel: &KernelSpec,
    squad: &SQuadConfig,
    variant: SchemeVariant,
    dt: f64,
    t_final: f64,
) -> Result<FieldCoeffs> {
    let stiffness = Arc::new(stiffness_matrix(space, kernel, squad, variant)?);
    let forcing = manufactured_forcing(kernel).to_forcing(space);
    let mut state = CnState::new(space, stiffness, sin2pi, |_| 0.0, forcing, dt)?;
    Ok(state.solve_to(t_final, 0)?.0)
}

/// Manufactured-solution error table; orders between consecutive cell counts.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    let all = cases(cfg);
    let results = cfg.execution.map(&all, |case| -> Result<ErrorRow> {
        let prep = prepare(cfg, case)?;
        let forcing = manufactured_forcing(&prep.kernel).to_forcing(&prep.space);
        let mut state = CnState::new(&prep.space, prep.stiffness, sin2pi, |_| 0.0, forcing, cfg.dt)?;
        let (u, _) = state.solve_to(cfg.t_final, 0)?;
        let t = cfg.t_final;
        Ok(ErrorRow {
            alpha: case.alpha,
            delta: prep.kernel.delta,
            k: case.k,
            n: case.n,
            h: prep.space.h(),
            dt: cfg.dt,
            t,
            e_u: l2_error(&u, |x| exact_solution(x, t)),
            order: None,
        })
    });

    let mut table = ErrorTable::default();
    let mut failure = None;
    for r in results {
        match r {
            Ok(row) => table.rows.push(row),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    if failure.is_none() {
        fill_orders(&mut table.rows, cfg.cells.len(), |r| r.e_u, |r| r.h, |r, o| r.order = o);
    }
    if let Some(path) = &cfg.out {
        table.write_csv(path)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

/// Rows come in groups of `group` consecutive refinements; the first row of
/// each group has no order.
fn fill_orders<R>(
    rows: &mut [R],
    group: usize,
    err: impl Fn(&R) -> f64,
    mesh: impl Fn(&R) -> f64,
    set: impl Fn(&mut R, Option<f64>),
) {
    if group < 2 {
        return;
    }
    for chunk in rows.chunks_mut(group) {
        let e: Vec<f64> = chunk.iter().map(&err).collect();
        let m: Vec<f64> = chunk.iter().map(&mesh).collect();
        if let Ok(orders) = observed_orders(&e, &m) {
            for (row, o) in chunk[1..].iter_mut().zip(orders) {
                set(row, o);
            }
        }
    }
}

/// Unforced run from `u(x, 0) = sin(2 pi x)`, `u_t(x, 0) = 0`, sampling the discrete energy.
pub fn run_energy(cfg: &StudyConfig) -> Result<EnergyTrace> {
    cfg.validate()?;
    let all = cases(cfg);
    if all.len() != 1 {
        return Err(Error::Config(format!(
            "energy study takes a single (alpha, delta, k, N) case, got {}",
            all.len()
        )));
    }
    let prep = prepare(cfg, &all[0])?;
    let mut state = CnState::new(&prep.space, prep.stiffness, sin2pi, |_| 0.0, Forcing::None, cfg.dt)?;
    let (_, samples) = state.solve_to(cfg.t_final, cfg.energy_stride)?;
    let trace = EnergyTrace::from_samples(&samples, cfg.dt);
    if let Some(path) = &cfg.out {
        trace.write_csv(path)?;
    }
    Ok(trace)
}

/// Distance between the unforced nonlocal solution and the local solution
/// `cos(2 pi t) sin(2 pi x)` at `T`, for each horizon in the ladder.
pub fn run_delta_limit(cfg: &StudyConfig) -> Result<LimitTable> {
    cfg.validate()?;
    let mut all = Vec::new();
    for &alpha in &cfg.alphas {
        for &k in &cfg.degrees {
            for &n in &cfg.cells {
                for delta_index in 0..cfg.delta.len() {
                    all.push(Case { alpha, delta_index, k, n });
                }
            }
        }
    }
    let results = cfg.execution.map(&all, |case| -> Result<LimitRow> {
        let prep = prepare(cfg, case)?;
        let mut state = CnState::new(&prep.space, prep.stiffness, sin2pi, |_| 0.0, Forcing::None, cfg.dt)?;
        let (u, _) = state.solve_to(cfg.t_final, 0)?;
        let t = cfg.t_final;
        Ok(LimitRow {
            alpha: case.alpha,
            k: case.k,
            h: prep.space.h(),
            dt: cfg.dt,
            t,
            delta: prep.kernel.delta,
            linf_err: linf_error(&u, |x| exact_solution(x, t)),
            order: None,
        })
    });
    let mut table = LimitTable {
        rows: results.into_iter().collect::<Result<_>>()?,
    };
    fill_orders(&mut table.rows, cfg.delta.len(), |r| r.linf_err, |r| r.delta, |r, o| r.order = o);
    if let Some(path) = &cfg.out {
        table.write_csv(path)?;
    }
    Ok(table)
}

/// Single unforced run; writes `x,u_h,u_loc` at the error-norm nodes of every cell.
pub fn run_solve(cfg: &StudyConfig) -> Result<FieldCoeffs> {
    cfg.validate()?;
    let all = cases(cfg);
    if all.len() != 1 {
        return Err(Error::Config(format!(
            "solve takes a single (alpha, delta, k, N) case, got {}",
            all.len()
        )));
    }
    let prep = prepare(cfg, &all[0])?;
    let mut state = CnState::new(&prep.space, prep.stiffness, sin2pi, |_| 0.0, Forcing::None, cfg.dt)?;
    let (u, _) = state.solve_to(cfg.t_final, 0)?;
    if let Some(path) = &cfg.out {
        write_solution_csv(&u, cfg.t_final, File::create(path)?)?;
    }
    Ok(u)
}

/// `x,u_h,u_loc` rows at the `k + 3` Gauss-Lobatto nodes of every cell.
pub fn write_solution_csv<W: Write>(u: &FieldCoeffs, t: f64, out: W) -> Result<()> {
    let space = u.space();
    let mut f = std::io::BufWriter::new(out);
    writeln!(f, "x,u_h,u_loc")?;
    let rule = crate::quadrature::gauss_lobatto(space.degree() + 3, -1.0, 1.0)?;
    let h = space.h();
    for j in 0..space.cells() {
        for &xi in &rule.nodes {
            let x = space.midpoint(j) + 0.5 * h * xi;
            writeln!(f, "{},{},{}", x, u.eval_local(j, xi), exact_solution(x, t))?;
        }
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_examples() {
        let o = observed_orders(&[4.0, 1.0], &[0.2, 0.1]).unwrap();
        assert!((o[0].unwrap() - 2.0).abs() < 1e-15);
        let o = observed_orders(&[1.2721e-1, 6.3996e-2], &[0.1, 0.05]).unwrap();
        assert!((o[0].unwrap() - 0.9911).abs() < 1e-4);
        let o = observed_orders(&[1e-3, 1e-3], &[0.1, 0.05]).unwrap();
        assert_eq!(o[0], Some(0.0));
        let o = observed_orders(&[0.0, 1e-3], &[0.1, 0.05]).unwrap();
        assert_eq!(o[0], None);
        assert!(observed_orders(&[1.0], &[0.1]).is_err());
        assert!(observed_orders(&[1.0, 0.5], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn manufactured_forcing_vanishes_on_zeros_of_sine() {
        let f = manufactured_forcing(&KernelSpec::new(0.5, 0.2).unwrap());
        for t in [0.0, 0.3, 0.77] {
            assert!(f.eval(0.0, t).abs() < 1e-12);
            assert!(f.eval(0.5, t).abs() < 1e-12);
        }
        let tiny = manufactured_forcing(&KernelSpec::new(1.5, 1e-7).unwrap());
        assert!(tiny.amplitude.abs() < 1e-9);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = StudyConfig::converge();
        cfg.alphas = vec![3.5];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::converge();
        cfg.dt = 0.3;
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::converge();
        cfg.cells = vec![1];
        assert!(cfg.validate().is_err());
        assert!(StudyConfig::converge().validate().is_ok());
        assert!(StudyConfig::energy().validate().is_ok());
        assert!(StudyConfig::limit().validate().is_ok());
    }

    #[test]
    fn single_mesh_table_has_no_orders() {
        let cfg = StudyConfig {
            alphas: vec![0.5],
            degrees: vec![1],
            cells: vec![10],
            dt: 1e-3,
            t_final: 0.01,
            ..StudyConfig::converge()
        };
        let t = run_convergence(&cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].order, None);
    }

    #[test]
    fn single_rung_ladder_has_no_orders() {
        let cfg = StudyConfig {
            alphas: vec![0.5],
            delta: DeltaSpec::Fixed(vec![5e-3]),
            t_final: 0.1,
            ..StudyConfig::limit()
        };
        let t = run_delta_limit(&cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].order, None);
    }

    #[test]
    fn zero_initial_data_has_zero_energy() {
        let space = DgSpace::new(0.0, 1.0, 10, 2).unwrap();
        let kernel = KernelSpec::new(2.0 / 3.0, 0.2).unwrap();
        let s = Arc::new(stiffness_matrix(&space, &kernel, &SQuadConfig::default(), SchemeVariant::Forward).unwrap());
        let mut st = CnState::new(&space, s, |_| 0.0, |_| 0.0, Forcing::None, 0.1).unwrap();
        let (_, samples) = st.solve_to(5.0, 1).unwrap();
        assert!(samples.iter().all(|s| s.energy == 0.0));
        let trace = EnergyTrace::from_samples(&samples, 0.1);
        assert_eq!(trace.max_drift(), 0.0);
    }
}
