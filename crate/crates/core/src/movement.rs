//! Window trajectories: which part of the domain is observed at each step.
//!
//! Periodic schemes move the window's lower-left corner along a fixed path
//! through the `N × N` anchor lattice. The dominant scheme picks, every
//! period `T`, the window whose coarse-grid error energy is largest; the
//! random scheme picks uniformly. Both may idle for a fraction of each period
//! (equipment in transit). The hybrid scheme nudges spectrally up to a switch
//! time and then hands over to another scheme.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{local_energy, CoarseGrid};
use crate::window::{wrap, Window};

const TWO_PI: f64 = 2.0 * PI;

/// Tolerance used when comparing simulation times with decision times.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodicKind {
    /// Serpentine raster, jumping back to the start at the end of each cycle.
    Discontinuous,
    /// Closed loop through all anchors.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// Whole domain observed at all times (no movement).
    FullDomain,
    Periodic {
        kind: PeriodicKind,
        frequency: f64,
    },
    Dominant {
        period: f64,
        delay_frac: f64,
    },
    Random {
        period: f64,
        delay_frac: f64,
        seed: u64,
    },
    Hybrid {
        switch_time: f64,
        modes: usize,
        then: Box<SchemeKind>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    /// Windows per direction.
    pub partition: usize,
}

impl SchemeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.partition < 2 || !self.partition.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("partition {} must be a power of two >= 2", self.partition)));
        }
        validate_kind(&self.kind, false)
    }

    pub fn window_side(&self) -> f64 {
        TWO_PI / self.partition as f64
    }
}

fn validate_kind(kind: &SchemeKind, nested: bool) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidParameter(m));
    match kind {
        SchemeKind::FullDomain => Ok(()),
        SchemeKind::Periodic { frequency, .. } if !(*frequency > 0.0) => {
            bad(format!("frequency {frequency} must be > 0"))
        }
        SchemeKind::Periodic { .. } => Ok(()),
        SchemeKind::Dominant { period, delay_frac } | SchemeKind::Random { period, delay_frac, .. } => {
            if !(*period > 0.0) {
                bad(format!("period {period} must be > 0"))
            } else if !(0.0..1.0).contains(delay_frac) {
                bad(format!("delay fraction {delay_frac} must lie in [0, 1)"))
            } else {
                Ok(())
            }
        }
        SchemeKind::Hybrid { .. } if nested => bad("a hybrid scheme cannot nest another hybrid".into()),
        SchemeKind::Hybrid { switch_time, then, .. } => {
            if !(*switch_time >= 0.0) {
                return bad(format!("switch time {switch_time} must be >= 0"));
            }
            validate_kind(then, true)
        }
    }
}

/// Cycle parameter: `(N²−1)(Ft − ⌊Ft⌋)` for the discontinuous path and
/// `N²(Ft − ⌊Ft⌋)` for the continuous loop (15 and 16 for `N = 4`).
pub fn tau_of_t(t: f64, frequency: f64, kind: PeriodicKind, partition: usize) -> f64 {
    let cycles = cycle_position(t, frequency);
    let span = path_length(kind, partition) as f64;
    span * (cycles - cycles.floor())
}

/// `F·t`, snapped to the nearest integer when within round-off of it so that
/// cycle boundaries are not missed by a step.
fn cycle_position(t: f64, frequency: f64) -> f64 {
    let x = frequency * t;
    let r = x.round();
    if (x - r).abs() <= TIME_EPS * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn path_length(kind: PeriodicKind, partition: usize) -> usize {
    let n2 = partition * partition;
    match kind {
        PeriodicKind::Discontinuous => n2 - 1,
        PeriodicKind::Continuous => n2,
    }
}

/// Waypoints in lattice units. Discontinuous: row-major serpentine, rows
/// bottom to top with alternating direction. Continuous: the bottom row left
/// to right, a serpentine over columns `1..N` of the remaining rows, then down
/// column 0 back to the start (the start is repeated at the end).
pub fn waypoints(kind: PeriodicKind, partition: usize) -> Vec<(usize, usize)> {
    let n = partition;
    let mut pts = Vec::with_capacity(n * n + 1);
    match kind {
        PeriodicKind::Discontinuous => {
            for y in 0..n {
                if y % 2 == 0 {
                    pts.extend((0..n).map(|x| (x, y)));
                } else {
                    pts.extend((0..n).rev().map(|x| (x, y)));
                }
            }
        }
        PeriodicKind::Continuous => {
            pts.extend((0..n).map(|x| (x, 0)));
            for y in 1..n {
                if y % 2 == 1 {
                    pts.extend((1..n).rev().map(|x| (x, y)));
                } else {
                    pts.extend((1..n).map(|x| (x, y)));
                }
            }
            pts.extend((0..n).rev().map(|y| (0, y)));
        }
    }
    pts
}

/// Lower-left corner at cycle parameter `tau`, linear between waypoints.
pub fn periodic_corner(tau: f64, kind: PeriodicKind, partition: usize) -> Result<(f64, f64)> {
    let span = path_length(kind, partition);
    if !(0.0..=span as f64).contains(&tau) {
        return Err(Error::InvalidParameter(format!("cycle parameter {tau} outside [0, {span}]")));
    }
    let pts = waypoints(kind, partition);
    let seg = (tau.floor() as usize).min(span.saturating_sub(1));
    let frac = tau - seg as f64;
    let (a, b) = (pts[seg], pts[(seg + 1).min(pts.len() - 1)]);
    let side = TWO_PI / partition as f64;
    let lerp = |p: usize, q: usize| (p as f64 + frac * (q as f64 - p as f64)) * side;
    Ok((wrap(lerp(a.0, b.0)), wrap(lerp(a.1, b.1))))
}

/// Window of side `2π/partition` anchored at the grid node nearest `corner`.
/// The index is that of the lattice window whose anchor is nearest.
pub fn snap_to_window(corner: (f64, f64), partition: usize, grid: usize) -> Window {
    let h = TWO_PI / grid as f64;
    let node = |v: f64| ((wrap(v) / h).round() as usize) % grid;
    let (i, j) = (node(corner.0), node(corner.1));
    let per_cell = grid as f64 / partition as f64;
    let cell = |k: usize| ((k as f64 / per_cell).round() as usize) % partition;
    let side = TWO_PI / partition as f64;
    Window { anchor: (i as f64 * h, j as f64 * h), side, index: Some(cell(j) * partition + cell(i) + 1) }
}

/// Lattice window with the largest coarse-grid trapezoid energy; ties go to
/// the lowest index.
pub fn choose_dominant(coarse: &CoarseGrid, partition: usize) -> Result<Window> {
    let energies = coarse_window_energies(coarse, partition)?;
    let mut best = 0;
    for (i, e) in energies.iter().enumerate() {
        if *e > energies[best] {
            best = i;
        }
    }
    Window::lattice(partition, best + 1)
}

/// Trapezoid energies of every lattice window, on the coarse nodes only.
pub fn coarse_window_energies(coarse: &CoarseGrid, partition: usize) -> Result<Vec<f64>> {
    let g = coarse.field();
    if !g.size().is_multiple_of(partition) {
        return Err(Error::InvalidParameter(format!(
            "partition {partition} does not divide the {}-node coarse grid",
            g.size()
        )));
    }
    Window::partition(partition).iter().map(|w| local_energy(g, w, 1)).collect()
}

/// What the nudging term should use during the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Local nudging over a window.
    Window(Window),
    /// The configured interpolant over the whole domain.
    FullDomain,
    /// Spectral projection onto the lowest modes (hybrid warm-up).
    Spectral { modes: usize },
    /// No observations (in transit between windows).
    Idle,
}

impl Observation {
    pub fn window(&self) -> Option<&Window> {
        match self {
            Observation::Window(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Nudging,
    Delayed,
}

/// Mutable movement state owned by one twin run.
#[derive(Debug, Clone)]
pub struct MovementState {
    spec: SchemeSpec,
    current: Option<Window>,
    phase: Phase,
    decision_time: f64,
    next_decision_time: f64,
    rng: ChaCha8Rng,
    last_t: f64,
}

impl MovementState {
    pub fn new(spec: SchemeSpec) -> Result<Self> {
        spec.validate()?;
        let seed = match inner_kind(&spec.kind) {
            SchemeKind::Random { seed, .. } => *seed,
            _ => 0,
        };
        let start = match &spec.kind {
            SchemeKind::Hybrid { switch_time, .. } => *switch_time,
            _ => 0.0,
        };
        Ok(MovementState {
            spec,
            current: None,
            phase: Phase::Nudging,
            decision_time: start,
            next_decision_time: start,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_t: f64::NEG_INFINITY,
        })
    }

    pub fn spec(&self) -> &SchemeSpec {
        &self.spec
    }

    pub fn current(&self) -> Option<&Window> {
        self.current.as_ref()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn next_decision_time(&self) -> f64 {
        self.next_decision_time
    }

    /// Whether `advance(t, ..)` will take a dominant decision and therefore
    /// needs coarse observations.
    pub fn needs_coarse(&self, t: f64) -> bool {
        let active = match &self.spec.kind {
            SchemeKind::Hybrid { switch_time, then, .. } => {
                if t + TIME_EPS < *switch_time {
                    return false;
                }
                then.as_ref()
            }
            k => k,
        };
        matches!(active, SchemeKind::Dominant { .. }) && t + TIME_EPS >= self.next_decision_time
    }

    /// Update for time `t` (non-decreasing across calls) and report what to
    /// observe. `coarse` is only read at dominant decision times.
    pub fn advance(&mut self, t: f64, coarse: Option<&CoarseGrid>, grid: usize) -> Result<Observation> {
        if t + TIME_EPS < self.last_t {
            return Err(Error::InvalidParameter(format!("movement time went backwards: {t} < {}", self.last_t)));
        }
        self.last_t = t;
        let partition = self.spec.partition;
        let kind = match &self.spec.kind {
            SchemeKind::Hybrid { switch_time, modes, then } => {
                if t + TIME_EPS < *switch_time {
                    self.phase = Phase::Nudging;
                    return Ok(Observation::Spectral { modes: *modes });
                }
                then.as_ref().clone()
            }
            k => k.clone(),
        };
        match kind {
            SchemeKind::FullDomain => {
                self.phase = Phase::Nudging;
                Ok(Observation::FullDomain)
            }
            SchemeKind::Periodic { kind, frequency } => {
                let tau = tau_of_t(t, frequency, kind, partition);
                let corner = periodic_corner(tau, kind, partition)?;
                let w = snap_to_window(corner, partition, grid);
                self.current = Some(w);
                self.phase = Phase::Nudging;
                Ok(Observation::Window(w))
            }
            SchemeKind::Dominant { period, delay_frac } => {
                if t + TIME_EPS >= self.next_decision_time {
                    let coarse = coarse.ok_or(Error::MissingCoarseData(t))?;
                    let w = choose_dominant(coarse, partition)?;
                    self.decide(w, t, period);
                }
                Ok(self.observe(t, period, delay_frac))
            }
            SchemeKind::Random { period, delay_frac, .. } => {
                if t + TIME_EPS >= self.next_decision_time {
                    let index = self.rng.gen_range(1..=partition * partition);
                    let w = Window::lattice(partition, index)?;
                    self.decide(w, t, period);
                }
                Ok(self.observe(t, period, delay_frac))
            }
            SchemeKind::Hybrid { .. } => unreachable!("nested hybrid rejected by validation"),
        }
    }

    /// Records a decision taken at `t`, dated to the start of the period
    /// containing `t`.
    fn decide(&mut self, w: Window, t: f64, period: f64) {
        self.current = Some(w);
        let origin = match &self.spec.kind {
            SchemeKind::Hybrid { switch_time, .. } => *switch_time,
            _ => 0.0,
        };
        let k = ((t - origin) / period + TIME_EPS).floor().max(0.0);
        self.decision_time = origin + k * period;
        self.next_decision_time = origin + (k + 1.0) * period;
    }

    fn observe(&mut self, t: f64, period: f64, delay_frac: f64) -> Observation {
        let resume = self.decision_time + delay_frac * period;
        if delay_frac > 0.0 && t + TIME_EPS < resume {
            self.phase = Phase::Delayed;
            Observation::Idle
        } else {
            self.phase = Phase::Nudging;
            Observation::Window(self.current.expect("window chosen at first decision"))
        }
    }
}

fn inner_kind(kind: &SchemeKind) -> &SchemeKind {
    match kind {
        SchemeKind::Hybrid { then, .. } => then,
        k => k,
    }
}

/// Fewest distinct lattice windows visited in any complete cycle of a
/// periodic scheme sampled every `dt` over `cycles` cycles.
pub fn min_distinct_windows_per_cycle(
    kind: PeriodicKind,
    frequency: f64,
    dt: f64,
    partition: usize,
    grid: usize,
    cycles: usize,
) -> usize {
    let mut per_cycle: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cycles];
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * dt;
        let c = cycle_position(t, frequency).floor() as usize;
        if c >= cycles {
            break;
        }
        let tau = tau_of_t(t, frequency, kind, partition);
        let corner = periodic_corner(tau, kind, partition).expect("tau within the cycle");
        let w = snap_to_window(corner, partition, grid);
        per_cycle[c].insert(w.index.expect("snapped windows carry an index"));
        step += 1;
    }
    per_cycle.iter().map(BTreeSet::len).min().unwrap_or(0)
}

/// Observations per step for local nudging with periodic re-decisions:
/// `(fine nodes per window) + (coarse nodes) / (steps per period)`.
/// Evaluated as one rational division so the result is correctly rounded.
pub fn observation_budget(fine_per_step: usize, coarse_per_decision: usize, steps_per_period: usize) -> f64 {
    let numer = fine_per_step * steps_per_period + coarse_per_decision;
    numer as f64 / steps_per_period as f64
}
