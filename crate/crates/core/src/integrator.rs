//! Exponential (integrating-factor) Adams–Bashforth 3 time stepping for the
//! vorticity equation `ω_t − νΔω = R(ω, t)`.
//!
//! Per mode, with `E = exp(−ν|k|²δt)`:
//!
//! ```text
//! ω̂ⁿ⁺¹ = E·ω̂ⁿ + δt·(23/12·E·R̂ⁿ − 16/12·E²·R̂ⁿ⁻¹ + 5/12·E³·R̂ⁿ⁻²)
//! ```
//!
//! The viscous term is integrated exactly; `R` collects advection, forcing and
//! the nudging feedback. The first two steps bootstrap the history, by default
//! with an integrating-factor RK4 step (see [`Startup`]).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, SpectralOps};

/// Steps between finiteness checks of the state.
pub const NAN_CHECK_INTERVAL: u64 = 100;

/// Explicit part of the right-hand side, evaluated at a state and time.
pub trait Tendency {
    fn eval(&mut self, omega: &SpectralField, t: f64) -> Result<SpectralField>;
}

impl<F> Tendency for F
where
    F: FnMut(&SpectralField, f64) -> Result<SpectralField>,
{
    fn eval(&mut self, omega: &SpectralField, t: f64) -> Result<SpectralField> {
        self(omega, t)
    }
}

/// `−u·∇ω + g − μ·J` in spectral space. `nudge` is `(μ, J)` where `J` is the
/// already-filtered feedback field; the viscous term is not included.
pub fn rhs_explicit(
    ops: &SpectralOps,
    omega: &SpectralField,
    forcing: &SpectralField,
    nudge: Option<(f64, &SpectralField)>,
) -> Result<SpectralField> {
    if forcing.mean().norm() > 0.0 {
        return Err(Error::NonzeroMean(forcing.mean().norm()));
    }
    let psi = ops.poisson_unchecked(omega);
    let mut r = ops.advect(omega, &psi)?;
    r.scale(-1.0);
    r.axpy(1.0, forcing);
    if let Some((mu, j)) = nudge {
        r.axpy(-mu, j);
    }
    Ok(r)
}

/// How the first two steps (before a full AB3 history exists) are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Startup {
    /// Integrating-factor RK4 for the first two steps. Fourth-order accurate,
    /// so the global AB3 order is preserved.
    #[default]
    ExponentialRk4,
    /// Forward Euler, then AB2, both with the integrating factor. Cheaper but
    /// leaves an `O(δt²)` startup error in the global solution.
    EulerAb2,
}

/// Solver state for one vorticity field.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub omega: SpectralField,
    pub time: f64,
    /// Previous explicit right-hand sides, most recent first (at most two).
    pub history: Vec<SpectralField>,
    pub dt: f64,
    pub nu: f64,
}

impl StepperState {
    pub fn new(omega: SpectralField, time: f64, dt: f64, nu: f64) -> Self {
        StepperState { omega, time, history: Vec::new(), dt, nu }
    }
}

/// Advances a [`StepperState`] with cached integrating factors.
#[derive(Debug, Clone)]
pub struct Stepper {
    state: StepperState,
    start_time: f64,
    steps: u64,
    startup: Startup,
    e1: Vec<f64>,
    e2: Vec<f64>,
    e3: Vec<f64>,
    e_half: Vec<f64>,
}

impl Stepper {
    pub fn new(ops: &SpectralOps, state: StepperState, startup: Startup) -> Result<Self> {
        if !(state.dt > 0.0) || !state.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {} must be > 0", state.dt)));
        }
        if !(state.nu >= 0.0) || !state.nu.is_finite() {
            return Err(Error::InvalidParameter(format!("viscosity {} must be >= 0", state.nu)));
        }
        if state.omega.size() != ops.size() {
            return Err(Error::SizeMismatch { expected: ops.size(), got: state.omega.size() });
        }
        if state.history.len() > 2 || state.history.iter().any(|h| h.size() != ops.size()) {
            return Err(Error::InvalidParameter(
                "stepper history must hold at most two fields of the grid size".into(),
            ));
        }
        let factor = |scale: f64| -> Vec<f64> {
            ops.k_squared().iter().map(|k2| (-state.nu * k2 * state.dt * scale).exp()).collect()
        };
        Ok(Stepper {
            start_time: state.time,
            steps: 0,
            startup,
            e1: factor(1.0),
            e2: factor(2.0),
            e3: factor(3.0),
            e_half: factor(0.5),
            state,
        })
    }

    pub fn state(&self) -> &StepperState {
        &self.state
    }

    pub fn into_state(self) -> StepperState {
        self.state
    }

    pub fn omega(&self) -> &SpectralField {
        &self.state.omega
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn dt(&self) -> f64 {
        self.state.dt
    }

    /// Steps taken by this stepper (not counting any before construction).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Advance by one time step.
    pub fn step(&mut self, rhs: &mut impl Tendency) -> Result<()> {
        let t = self.state.time;
        let r_now = rhs.eval(&self.state.omega, t)?;
        match (self.state.history.len(), self.startup) {
            (2, _) => self.ab3(&r_now),
            (0, Startup::EulerAb2) => self.euler(&r_now),
            (1, Startup::EulerAb2) => self.ab2(&r_now),
            (_, Startup::ExponentialRk4) => self.rk4(&r_now, rhs)?,
            _ => unreachable!("history length is bounded by two"),
        }
        self.state.history.insert(0, r_now);
        self.state.history.truncate(2);
        self.steps += 1;
        self.state.time = self.start_time + self.steps as f64 * self.state.dt;
        if self.steps.is_multiple_of(NAN_CHECK_INTERVAL) && !self.state.omega.is_finite() {
            return Err(Error::NonFinite { time: self.state.time });
        }
        Ok(())
    }

    fn ab3(&mut self, r0: &SpectralField) {
        let dt = self.state.dt;
        let (c0, c1, c2) = (23.0 / 12.0 * dt, -16.0 / 12.0 * dt, 5.0 / 12.0 * dt);
        let r1 = self.state.history[0].coeffs();
        let r2 = self.state.history[1].coeffs();
        let w = self.state.omega.coeffs_mut();
        for i in 0..w.len() {
            let (e1, e2, e3) = (self.e1[i], self.e2[i], self.e3[i]);
            w[i] = w[i] * e1 + r0.coeffs()[i] * (c0 * e1) + r1[i] * (c1 * e2) + r2[i] * (c2 * e3);
        }
    }

    fn ab2(&mut self, r0: &SpectralField) {
        let dt = self.state.dt;
        let r1 = self.state.history[0].coeffs();
        let w = self.state.omega.coeffs_mut();
        for i in 0..w.len() {
            let (e1, e2) = (self.e1[i], self.e2[i]);
            w[i] = w[i] * e1 + r0.coeffs()[i] * (1.5 * dt * e1) - r1[i] * (0.5 * dt * e2);
        }
    }

    fn euler(&mut self, r0: &SpectralField) {
        let dt = self.state.dt;
        let w = self.state.omega.coeffs_mut();
        for ((wi, r), e1) in w.iter_mut().zip(r0.coeffs()).zip(&self.e1) {
            *wi = (*wi + r * dt) * e1;
        }
    }

    fn rk4(&mut self, r0: &SpectralField, rhs: &mut impl Tendency) -> Result<()> {
        let dt = self.state.dt;
        let t = self.state.time;
        let w0 = self.state.omega.coeffs().to_vec();
        let n = self.state.omega.size();
        let len = w0.len();
        let build = |f: &dyn Fn(usize) -> Complex64| -> Result<SpectralField> {
            SpectralField::from_coeffs(n, (0..len).map(f).collect())
        };
        let a = r0.coeffs();
        let wa = build(&|i| self.e_half[i] * (w0[i] + a[i] * (0.5 * dt)))?;
        let rb = rhs.eval(&wa, t + 0.5 * dt)?;
        let b = rb.coeffs();
        let wb = build(&|i| self.e_half[i] * w0[i] + b[i] * (0.5 * dt))?;
        let rc = rhs.eval(&wb, t + 0.5 * dt)?;
        let c = rc.coeffs();
        let wc = build(&|i| self.e1[i] * w0[i] + c[i] * (self.e_half[i] * dt))?;
        let rd = rhs.eval(&wc, t + dt)?;
        let d = rd.coeffs();
        let w = self.state.omega.coeffs_mut();
        for i in 0..len {
            let (e1, eh) = (self.e1[i], self.e_half[i]);
            w[i] = e1 * w0[i] + (a[i] * e1 + (b[i] + c[i]) * (2.0 * eh) + d[i]) * (dt / 6.0);
        }
        Ok(())
    }
}
