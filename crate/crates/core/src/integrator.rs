//! Three-level Crank-Nicolson time stepping for `M u'' + S u = F`.
//!
//! Each step solves
//! `(M/dt^2 + S/2) u^{n+1} = (2/dt^2) M u^n - (M/dt^2 + S/2) u^{n-1} + F^n`
//! with `F^n` the mean of the load at `t_{n+1}` and `t_{n-1}`. The scheme
//! conserves `E^n = |(u^n - u^{n-1})/dt|^2 + (u^n S u^n + u^{n-1} S u^{n-1}) / 2`
//! exactly when `F = 0`.

use std::sync::Arc;

use crate::cholesky::ProfileCholesky;
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::space::{DgSpace, FieldCoeffs, MassOperator};

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Source term `f(x, t)` of the wave equation.
#[derive(Clone, Default)]
pub enum Forcing {
    #[default]
    None,
    /// `f(x, t) = g(t) * phi(x)`; the projection of `phi` is computed once.
    Separable { profile: Vec<f64>, time: TimeFn },
    /// Arbitrary `f(x, t)`, projected at every evaluation time.
    General(SpaceTimeFn),
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Forcing::None => f.write_str("Forcing::None"),
            Forcing::Separable { .. } => f.write_str("Forcing::Separable"),
            Forcing::General(_) => f.write_str("Forcing::General"),
        }
    }
}

impl Forcing {
    pub fn separable(
        space: &DgSpace,
        profile: impl Fn(f64) -> f64,
        time: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Forcing::Separable {
            profile: space.project(profile).coeffs,
            time: Arc::new(time),
        }
    }

    pub fn general(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::General(Arc::new(f))
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Forcing::None)
    }

    /// Adds `c * F(t)` to `out`, where `F(t)` holds the moments
    /// `int f(., t) phi_{j,m}` (i.e. the mass operator applied to the projection).
    fn add_load(&self, space: &DgSpace, mass: &MassOperator, t: f64, c: f64, out: &mut [f64]) {
        match self {
            Forcing::None => {}
            Forcing::Separable { profile, time } => {
                let g = c * time(t);
                for (i, (o, p)) in out.iter_mut().zip(profile).enumerate() {
                    *o += g * mass.entry(i) * p;
                }
            }
            Forcing::General(f) => {
                let mut proj = vec![0.0; space.dofs()];
                space.project_into(&|x| f(x, t), &mut proj);
                for (i, (o, p)) in out.iter_mut().zip(&proj).enumerate() {
                    *o += c * mass.entry(i) * p;
                }
            }
        }
    }
}

/// Discrete energy at step `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub n: usize,
    pub energy: f64,
}

/// Two consecutive time levels plus the factorized implicit system.
#[derive(Debug, Clone)]
pub struct CnState {
    space: DgSpace,
    mass: MassOperator,
    stiffness: Arc<OperatorMatrix>,
    system: Arc<ProfileCholesky>,
    forcing: Forcing,
    dt: f64,
    n: usize,
    u_prev: Vec<f64>,
    u_curr: Vec<f64>,
}

impl CnState {
    /// Sets `u^0 = P u0` and the second-order Taylor start
    /// `u^1 = u^0 + dt P u1 + dt^2/2 M^{-1} (F^0 - S u^0)`.
    pub fn new(
        space: &DgSpace,
        stiffness: Arc<OperatorMatrix>,
        u0: impl Fn(f64) -> f64,
        u1: impl Fn(f64) -> f64,
        forcing: Forcing,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if stiffness.dim() != space.dofs() || stiffness.block_size() != space.modes() {
            return Err(Error::Config("stiffness operator does not match the space".into()));
        }
        let mass = space.mass();
        let mut system = (*stiffness).clone();
        system.scale(0.5);
        system.add_block_diagonal(mass.mode_entries(), 1.0 / (dt * dt));
        let system = Arc::new(ProfileCholesky::factor(&system)?);

        let u_prev = space.project(u0).coeffs;
        let v0 = space.project(u1).coeffs;
        let mut rhs = stiffness.apply_vec(&u_prev);
        rhs.iter_mut().for_each(|v| *v = -*v);
        forcing.add_load(space, &mass, 0.0, 1.0, &mut rhs);
        let mut accel = vec![0.0; rhs.len()];
        mass.apply_inverse(&rhs, &mut accel);
        let u_curr = u_prev
            .iter()
            .zip(&v0)
            .zip(&accel)
            .map(|((u, v), a)| u + dt * v + 0.5 * dt * dt * a)
            .collect();

        Ok(CnState {
            space: space.clone(),
            mass,
            stiffness,
            system,
            forcing,
            dt,
            n: 1,
            u_prev,
            u_curr,
        })
    }

    /// Builds a state from two explicit time levels `u^{n-1}`, `u^n`.
    pub fn from_levels(
        space: &DgSpace,
        stiffness: Arc<OperatorMatrix>,
        u_prev: FieldCoeffs,
        u_curr: FieldCoeffs,
        forcing: Forcing,
        dt: f64,
        n: usize,
    ) -> Result<Self> {
        let mut state = CnState::new(space, stiffness, |_| 0.0, |_| 0.0, forcing, dt)?;
        state.u_prev = u_prev.coeffs;
        state.u_curr = u_curr.coeffs;
        state.n = n;
        Ok(state)
    }

    pub fn space(&self) -> &DgSpace {
        &self.space
    }

    pub fn stiffness(&self) -> &OperatorMatrix {
        &self.stiffness
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn u_prev(&self) -> FieldCoeffs {
        self.space.field(self.u_prev.clone()).expect("length fixed at construction")
    }

    pub fn u_curr(&self) -> FieldCoeffs {
        self.space.field(self.u_curr.clone()).expect("length fixed at construction")
    }

    /// Exchanges the two stored levels, reversing the direction of time.
    pub fn swap_levels(&mut self) {
        std::mem::swap(&mut self.u_prev, &mut self.u_curr);
    }

    /// Advances one step.
    ///
    /// Solved in increment form `A (u^{n+1} - 2u^n + u^{n-1}) = F^n - S u^n`,
    /// which is algebraically identical to the two-level right-hand side but
    /// avoids the `1/dt^2` cancellation.
    pub fn step(&mut self) {
        let mut rhs = self.stiffness.apply_vec(&self.u_curr);
        rhs.iter_mut().for_each(|v| *v = -*v);
        if !self.forcing.is_none() {
            let t_next = (self.n + 1) as f64 * self.dt;
            let t_last = (self.n - 1) as f64 * self.dt;
            self.forcing.add_load(&self.space, &self.mass, t_next, 0.5, &mut rhs);
            self.forcing.add_load(&self.space, &self.mass, t_last, 0.5, &mut rhs);
        }
        self.system.solve_in_place(&mut rhs);
        for ((prev, curr), d) in self.u_prev.iter_mut().zip(self.u_curr.iter_mut()).zip(&rhs) {
            let next = 2.0 * *curr - *prev + d;
            *prev = *curr;
            *curr = next;
        }
        self.n += 1;
    }

    pub fn energy(&self) -> EnergySample {
        let diff: Vec<f64> = self
            .u_curr
            .iter()
            .zip(&self.u_prev)
            .map(|(a, b)| (a - b) / self.dt)
            .collect();
        let kinetic = self.mass.inner(&diff, &diff);
        let potential =
            0.5 * (self.stiffness.quad_form(&self.u_curr) + self.stiffness.quad_form(&self.u_prev));
        EnergySample {
            n: self.n,
            energy: kinetic + potential,
        }
    }

    /// Number of steps `T / dt`, rejecting horizons that are not a whole number of steps.
    pub fn steps_for(&self, t_final: f64) -> Result<usize> {
        steps_for(t_final, self.dt)
    }

    /// Steps until `t = T`, sampling the energy at step 1, every `energy_every`
    /// steps, and at the final step (`energy_every = 0` disables sampling).
    pub fn solve_to(&mut self, t_final: f64, energy_every: usize) -> Result<(FieldCoeffs, Vec<EnergySample>)> {
        let total = self.steps_for(t_final)?;
        if total < self.n {
            return Err(Error::Config(format!(
                "final time {t_final} lies before the current step {}",
                self.n
            )));
        }
        let mut trace = Vec::new();
        let sample = |state: &CnState, trace: &mut Vec<EnergySample>| {
            if energy_every > 0 && trace.last().is_none_or(|s: &EnergySample| s.n != state.n) {
                trace.push(state.energy());
            }
        };
        if energy_every > 0 {
            sample(self, &mut trace);
        }
        while self.n < total {
            self.step();
            if energy_every > 0 && (self.n.is_multiple_of(energy_every) || self.n == total) {
                sample(self, &mut trace);
            }
        }
        Ok((self.u_curr(), trace))
    }
}

pub fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    let ratio = t_final / dt;
    let steps = ratio.round();
    if !(steps >= 1.0) || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::Config(format!(
            "final time {t_final} is not a positive whole number of steps of size {dt}"
        )));
    }
    Ok(steps as usize)
}
