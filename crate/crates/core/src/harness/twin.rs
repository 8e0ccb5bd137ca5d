//! Reference spin-up and the coupled reference/nudged run.

use crate::error::{Error, Result};
use crate::harness::checkpoint::Checkpoint;
use crate::harness::config::SimConfig;
use crate::harness::forcing::build_forcing;
use crate::integrator::{rhs_explicit, Startup, Stepper, StepperState, NAN_CHECK_INTERVAL};
use crate::movement::{MovementState, Observation};
use crate::nudging::{NudgeKind, NudgeSpec};
use crate::spectral::{l2_norm, local_energy, GridField, SpectralField, SpectralOps};
use crate::theory::{classify, DiagnosticsSample, Scenario};
use crate::window::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordPhase {
    /// Local nudging on a window.
    Nudging,
    /// Window chosen but observations not yet available.
    Delayed,
    /// Spectral warm-up of a hybrid scheme.
    Spectral,
    /// Nudging over the whole domain.
    FullDomain,
}

impl RecordPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordPhase::Nudging => "nudging",
            RecordPhase::Delayed => "delayed",
            RecordPhase::Spectral => "spectral",
            RecordPhase::FullDomain => "full_domain",
        }
    }
}

/// One output row of a twin run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    /// `‖ω̃ − ω‖/‖ω‖`, or `‖ω̃ − ω‖` when the reference vanishes.
    pub rel_l2_error: f64,
    pub window: Option<Window>,
    pub phase: RecordPhase,
    /// Share of the error energy inside `window`.
    pub local_ratio: Option<f64>,
    /// Dirichlet quotient of the velocity error; `None` once synchronized.
    pub dirichlet_q: Option<f64>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub struct TwinOutcome {
    pub reference: Checkpoint,
    pub nudged: Checkpoint,
    /// First step time with relative error below the configured tolerance.
    pub time_to_tolerance: Option<f64>,
    pub final_error: f64,
    /// `(t, index)` each time the observed lattice window changes.
    pub window_trace: Vec<(f64, usize)>,
    pub records: usize,
}

/// A spin-up that produced non-finite values. `last_good` is the most
/// recent state that passed the finiteness check.
#[derive(Debug)]
pub struct SpinupFailure {
    pub error: Error,
    pub last_good: Checkpoint,
}

/// Operators and forcing shared by every run of one configuration.
#[derive(Debug)]
pub struct Simulation {
    cfg: SimConfig,
    ops: SpectralOps,
    forcing: SpectralField,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let ops = SpectralOps::new(cfg.grid)?;
        let forcing = build_forcing(&ops, &cfg.forcing, cfg.nu)?;
        Ok(Simulation { cfg: cfg.clone(), ops, forcing })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn ops(&self) -> &SpectralOps {
        &self.ops
    }

    pub fn forcing(&self) -> &SpectralField {
        &self.forcing
    }

    /// Evolves the reference from rest for `run.spinup_time`. The stepper
    /// history is kept only when the spin-up step equals the run step.
    pub fn spinup(&self) -> std::result::Result<Checkpoint, Box<SpinupFailure>> {
        let dt = self.cfg.spinup_dt();
        let steps = (self.cfg.run.spinup_time / dt).round() as u64;
        let start = StepperState::new(SpectralField::zeros(self.cfg.grid), 0.0, dt, self.cfg.nu);
        let mut last_good = Checkpoint::from_state(&start);
        let fail = |error, last_good| Box::new(SpinupFailure { error, last_good });
        let mut stepper = match Stepper::new(&self.ops, start, Startup::default()) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, last_good)),
        };
        let (ops, forcing) = (&self.ops, &self.forcing);
        let mut rhs = |w: &SpectralField, _: f64| rhs_explicit(ops, w, forcing, None);
        for n in 0..steps {
            if let Err(e) = stepper.step(&mut rhs) {
                return Err(fail(e, last_good));
            }
            if (n + 1) % NAN_CHECK_INTERVAL == 0 {
                last_good = Checkpoint::from_state(stepper.state());
            }
        }
        let mut ck = Checkpoint::from_state(stepper.state());
        if dt != self.cfg.dt {
            ck.history.clear();
        }
        Ok(ck)
    }

    /// Twin run with the nudged solution starting from rest.
    pub fn run_twin(
        &self,
        reference: &Checkpoint,
        sink: &mut dyn FnMut(&ErrorRecord) -> Result<()>,
    ) -> Result<TwinOutcome> {
        self.run_twin_from(reference, SpectralField::zeros(self.cfg.grid), sink)
    }

    pub fn run_twin_from(
        &self,
        reference: &Checkpoint,
        nudged0: SpectralField,
        sink: &mut dyn FnMut(&ErrorRecord) -> Result<()>,
    ) -> Result<TwinOutcome> {
        let cfg = &self.cfg;
        let n = cfg.grid;
        if reference.size() != n {
            return Err(Error::SizeMismatch { expected: n, got: reference.size() });
        }
        if nudged0.size() != n {
            return Err(Error::SizeMismatch { expected: n, got: nudged0.size() });
        }
        if reference.nu != cfg.nu {
            return Err(Error::Config(format!(
                "checkpoint viscosity {} differs from configured {}",
                reference.nu, cfg.nu
            )));
        }
        let ops = &self.ops;
        let forcing = &self.forcing;
        let nudge = cfg.nudge_spec();
        let t0 = reference.time;
        let mut refr = Stepper::new(ops, reference.clone().into_state(cfg.dt, true), Startup::default())?;
        let mut twin = Stepper::new(ops, StepperState::new(nudged0, t0, cfg.dt, cfg.nu), Startup::default())?;
        let mut movement = MovementState::new(cfg.scheme_spec())?;
        let steps = (cfg.run.t_end / cfg.dt).round() as u64;
        let stride = cfg.run.output_stride as u64;
        let mut outcome = TwinOutcome {
            reference: reference.clone(),
            nudged: reference.clone(),
            time_to_tolerance: None,
            final_error: f64::NAN,
            window_trace: Vec::new(),
            records: 0,
        };
        for step in 0..=steps {
            let t = refr.time();
            let diff = twin.omega().difference(refr.omega());
            let err = relative_error(&diff, refr.omega());
            let done = cfg.run.stop_at_tolerance && err < cfg.run.tolerance;
            let emit = step % stride == 0 || step == steps || done;
            let need_coarse = movement.needs_coarse(t - t0);
            let grid = (emit || need_coarse).then(|| ops.to_grid_unchecked(&diff));
            let coarse = match (&grid, need_coarse) {
                (Some(g), true) => Some(g.subsample(cfg.decision_stride())?),
                _ => None,
            };
            let obs = movement.advance(t - t0, coarse.as_ref(), n)?;
            if outcome.time_to_tolerance.is_none() && err < cfg.run.tolerance {
                outcome.time_to_tolerance = Some(t - t0);
            }
            if let Some(idx) = movement.current().and_then(|w| w.index) {
                if outcome.window_trace.last().map(|(_, i)| *i) != Some(idx) {
                    outcome.window_trace.push((t - t0, idx));
                }
            }
            if let Some(g) = &grid {
                if emit {
                    let rec = self.record(t - t0, err, &diff, g, &obs, &movement)?;
                    sink(&rec)?;
                    outcome.records += 1;
                }
            }
            outcome.final_error = err;
            if step == steps || done {
                break;
            }
            let before = refr.omega().clone();
            refr.step(&mut |w: &SpectralField, _: f64| rhs_explicit(ops, w, forcing, None))?;
            let after = refr.omega();
            let dt = cfg.dt;
            let mut tendency = |v: &SpectralField, s: f64| -> Result<SpectralField> {
                let feedback = match nudging_target(&nudge, &obs) {
                    Some((spec, window)) if spec.mu > 0.0 => {
                        let theta = (s - t) / dt;
                        let mut d = v.difference(&before);
                        if theta != 0.0 {
                            d.axpy(-theta, &after.difference(&before));
                        }
                        Some((spec.mu, spec.feedback(ops, &d, window.as_ref())?))
                    }
                    _ => None,
                };
                rhs_explicit(ops, v, forcing, feedback.as_ref().map(|(m, j)| (*m, j)))
            };
            twin.step(&mut tendency)?;
        }
        outcome.reference = Checkpoint::from_state(refr.state());
        outcome.nudged = Checkpoint::from_state(twin.state());
        Ok(outcome)
    }

    fn record(
        &self,
        t: f64,
        err: f64,
        diff: &SpectralField,
        grid: &GridField,
        obs: &Observation,
        movement: &MovementState,
    ) -> Result<ErrorRecord> {
        let phase = match obs {
            Observation::Window(_) => RecordPhase::Nudging,
            Observation::Idle => RecordPhase::Delayed,
            Observation::Spectral { .. } => RecordPhase::Spectral,
            Observation::FullDomain => RecordPhase::FullDomain,
        };
        let window = match obs {
            Observation::Window(w) => Some(*w),
            Observation::Idle => movement.current().copied(),
            _ => None,
        };
        let total = grid.quadrature_l2sq();
        let local_ratio = match &window {
            Some(w) if total > 0.0 => Some(local_energy(grid, w, 1)? / total),
            _ => None,
        };
        let sample = DiagnosticsSample::from_vorticity_difference(t, diff, Vec::new());
        Ok(ErrorRecord {
            t,
            rel_l2_error: err,
            window,
            phase,
            local_ratio,
            dirichlet_q: sample.dirichlet_quotient(),
            scenario: classify(&sample, self.cfg.assimilation.mu, self.cfg.nu),
        })
    }
}

/// Which interpolant and window the nudging term uses for an observation.
fn nudging_target(spec: &NudgeSpec, obs: &Observation) -> Option<(NudgeSpec, Option<Window>)> {
    match obs {
        Observation::Idle => None,
        Observation::Window(w) => Some((*spec, Some(*w))),
        Observation::FullDomain => Some((*spec, None)),
        Observation::Spectral { modes } => {
            Some((NudgeSpec { mu: spec.mu, kind: NudgeKind::SpectralProjection { modes: *modes } }, None))
        }
    }
}

fn relative_error(diff: &SpectralField, reference: &SpectralField) -> f64 {
    let d = l2_norm(diff);
    let r = l2_norm(reference);
    if r > 0.0 {
        d / r
    } else {
        d
    }
}
