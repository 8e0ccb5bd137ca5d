//! Closed-form parameter bounds and diagnostics for mobile nudging.
//!
//! Everything here is a pure function of the physical constants. The
//! Ladyzhenskaya and interpolant constants `C_L`, `C_I` are inputs; the code
//! does not attempt to estimate their optimal values.

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Physical and structural constants, excluding the tunable `μ`, `h`, `τ_C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub nu: f64,
    /// First eigenvalue of `−Δ`; 1 on `[0, 2π]²`.
    pub lambda1: f64,
    /// Grashof number with the factor 2, `2‖f‖/(ν²λ1)`.
    pub grashof: f64,
    pub c_l: f64,
    pub c_i: f64,
    /// Windows per direction.
    pub partition: usize,
    pub c0: f64,
    pub c_star: f64,
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let positive =
            [("nu", self.nu), ("lambda1", self.lambda1), ("C_L", self.c_l), ("C_I", self.c_i), ("c_star", self.c_star)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.grashof >= 0.0 && self.grashof.is_finite()) {
            return Err(Error::InvalidParameter(format!("Grashof number {} must be >= 0", self.grashof)));
        }
        if self.partition < 2 {
            return Err(Error::InvalidParameter(format!("partition {} must be >= 2", self.partition)));
        }
        if !(self.c0 > 1.0) {
            return Err(Error::InvalidParameter(format!("c0 = {} must exceed 1", self.c0)));
        }
        Ok(())
    }

    fn n2(&self) -> f64 {
        (self.partition * self.partition) as f64
    }

    fn cl4(&self) -> f64 {
        self.c_l.powi(4)
    }

    /// `(8C_I² + 2C_L⁴ + 2C_I) e^{C_L⁴(G²+1)}`.
    fn growth_factor(&self) -> f64 {
        let ci = self.c_i;
        (8.0 * ci * ci + 2.0 * self.cl4() + 2.0 * ci) * (self.cl4() * (self.grashof.powi(2) + 1.0)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub constants: Constants,
    pub mu: f64,
    pub h: f64,
    pub tau_c: f64,
}

/// Extra inputs to the cycling-time constant `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclingInputs {
    /// Window margin; `ℓ/4` by default.
    pub r: f64,
    /// Bound on `sup ‖w‖²`; `ν²G²` by default.
    pub m: f64,
    pub c_psi: f64,
}

impl CyclingInputs {
    pub fn defaults(c: &Constants) -> Self {
        let side = 2.0 * std::f64::consts::PI / c.partition as f64;
        CyclingInputs { r: side / 4.0, m: (c.nu * c.grashof).powi(2), c_psi: 1.0 }
    }
}

/// Returns `(G, G_trad)` = `(2‖f‖/(ν²λ1), ‖f‖/(ν²λ1))`.
pub fn grashof(f_l2: f64, nu: f64, lambda1: f64) -> (f64, f64) {
    let trad = f_l2 / (nu * nu * lambda1);
    (2.0 * trad, trad)
}

pub fn gamma(partition: usize, c0: f64) -> Result<f64> {
    if !(c0 > 1.0) {
        return Err(Error::InvalidParameter(format!("c0 = {c0} must exceed 1")));
    }
    if partition < 2 {
        return Err(Error::InvalidParameter(format!("partition {partition} must be >= 2")));
    }
    let n2 = (partition * partition) as f64;
    Ok(0.5 * ((1.0 - 1.0 / (c0 * n2)) / (1.0 - 1.0 / n2) - 1.0))
}

/// Time over which the Dirichlet quotient stays controlled after a
/// scenario-1 time.
pub fn tau_q(c: &Constants, mu: f64) -> f64 {
    1.0 / (2.0 * mu) / c.growth_factor()
}

/// `μK`, the growth rate of the localized energy.
pub fn mu_k(c: &Constants, mu: f64, inputs: &CyclingInputs) -> f64 {
    let ci2 = c.c_i * c.c_i;
    let e = (c.cl4() * (c.grashof.powi(2) + 2.0)).exp();
    let bracket = inputs.c_psi * c.nu / (2.0 * inputs.r * inputs.r)
        + mu * c.c_i
        + 4.0 * c.c_l * c.c_l * inputs.m.sqrt() * (mu / c.nu) * ci2 * e
        + 16.0 * c.grashof * mu * ci2 * e;
    bracket * c.cl4().exp()
}

fn c6_rhs(c: &Constants, mu: f64, inputs: &CyclingInputs, gamma: f64) -> f64 {
    gamma / mu_k(c, mu, inputs) * (1.0 - 1.0 / c.n2())
}

fn c7_rhs(c: &Constants, mu: f64, gamma: f64) -> f64 {
    let ratio = (1.0 + gamma) * (1.0 - 1.0 / c.n2()) / (1.0 - 1.0 / (c.c0 * c.n2()));
    (1.0 - ratio) / (mu * c.growth_factor())
}

fn h_max_at(c: &Constants, mu: f64) -> f64 {
    let a = c.nu * c.lambda1.sqrt() / (4.0 * c.c_i * mu);
    let b = (c.nu / (2.0 * c.c_i * c.c_i * mu)).sqrt();
    a.min(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremBounds {
    /// `max{νλ1G², c0N²(4λ1C_L⁴νG² + c*)}` as displayed in the theorem.
    pub mu_min_stated: f64,
    /// `h` bound evaluated at `mu_min_stated`.
    pub h_max_stated: f64,
    /// Smallest `μ` that also meets the decay condition C9, which needs
    /// `c0N⁴` in place of `c0N²`.
    pub mu_min: f64,
    pub h_max: f64,
    /// Minimum of the C5, C6 and C7 right-hand sides at `mu_min`.
    pub tau_c_max: f64,
    pub gamma: f64,
}

impl TheoremBounds {
    pub fn params(&self, c: Constants) -> TheoryParams {
        TheoryParams { constants: c, mu: self.mu_min, h: self.h_max, tau_c: self.tau_c_max }
    }
}

pub fn theorem_bounds(c: &Constants, inputs: &CyclingInputs) -> Result<TheoremBounds> {
    c.validate()?;
    let g2 = c.grashof.powi(2);
    let drift = 4.0 * c.lambda1 * c.cl4() * c.nu * g2;
    let floor = c.nu * c.lambda1 * g2;
    let mu_min_stated = floor.max(c.c0 * c.n2() * (drift + c.c_star));
    let mu_c9 = c.c0 * c.n2() * c.n2() * (drift + c.c_star);
    let mu_min = mu_min_stated.max(mu_c9);
    let gamma = gamma(c.partition, c.c0)?;
    let tau_c_max = tau_q(c, mu_min).min(c6_rhs(c, mu_min, inputs, gamma)).min(c7_rhs(c, mu_min, gamma));
    Ok(TheoremBounds {
        mu_min_stated,
        h_max_stated: h_max_at(c, mu_min_stated),
        mu_min,
        h_max: h_max_at(c, mu_min),
        tau_c_max,
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack on condition checks, so parameters sitting exactly on a
/// bound are not rejected by round-off.
const CONDITION_SLACK: f64 = 1e-12;

impl Condition {
    fn le(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self::le_scaled(name, lhs, rhs, lhs.abs().max(rhs.abs()))
    }

    /// `scale` is the magnitude of the terms that were combined into `lhs`.
    fn le_scaled(name: &'static str, lhs: f64, rhs: f64, scale: f64) -> Self {
        Condition { name, lhs, rhs, holds: lhs <= rhs + CONDITION_SLACK * scale }
    }
}

/// C1 through C9, in order. C3 is read as `τ_C ≤ 1/μ`.
pub fn check_conditions(p: &TheoryParams, inputs: &CyclingInputs) -> Result<Vec<Condition>> {
    let c = &p.constants;
    c.validate()?;
    let (mu, h, tau) = (p.mu, p.h, p.tau_c);
    for (name, v) in [("mu", mu), ("h", h), ("tau_C", tau)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
        }
    }
    let g2 = c.grashof.powi(2);
    let gamma = gamma(c.partition, c.c0)?;
    let drift = 4.0 * c.cl4() * c.nu * c.lambda1 * g2;
    Ok(vec![
        Condition::le("C1", c.c_i * mu * h / c.lambda1.sqrt(), c.nu / 4.0),
        Condition::le("C2", c.c_i * c.c_i * mu * h * h, c.nu / 2.0),
        Condition::le("C3", tau, 1.0 / mu),
        Condition::le("C4", c.nu * c.lambda1 * g2, mu),
        Condition::le("C5", tau, tau_q(c, mu)),
        Condition::le("C6", tau, c6_rhs(c, mu, inputs, gamma)),
        Condition::le("C7", tau, c7_rhs(c, mu, gamma)),
        Condition::le("C8", drift, mu / (c.c0 * c.n2())),
        Condition::le_scaled(
            "C9",
            drift - mu / (c.c0 * c.n2() * c.n2()),
            -c.c_star,
            drift + mu / (c.c0 * c.n2() * c.n2()) + c.c_star,
        ),
    ])
}

/// Upper bound on `‖u − v‖²` at time `t`.
pub fn decay_envelope(t: f64, c: &Constants) -> f64 {
    c.cl4().exp() * (c.nu * c.grashof).powi(2) * (-c.c_star * t / 2.0).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSample {
    pub t: f64,
    /// `‖w‖²`
    pub w_l2sq: f64,
    /// `‖∇w‖²`
    pub w_h1sq: f64,
    pub per_window_energy: Vec<f64>,
}

impl DiagnosticsSample {
    /// Built from the vorticity difference: the velocity `w` has
    /// `|ŵ(k)| = |ω̂(k)|/|k|`, so `‖∇w‖² = ‖ω‖²`.
    pub fn from_vorticity_difference(t: f64, diff: &SpectralField, per_window_energy: Vec<f64>) -> Self {
        let (l2, h1) = velocity_norms(diff);
        DiagnosticsSample { t, w_l2sq: l2, w_h1sq: h1, per_window_energy }
    }

    pub fn dirichlet_quotient(&self) -> Option<f64> {
        (self.w_l2sq > 0.0).then(|| self.w_h1sq / self.w_l2sq)
    }
}

/// `(‖w‖², ‖∇w‖²)` of the velocity whose vorticity is `omega`.
pub fn velocity_norms(omega: &SpectralField) -> (f64, f64) {
    let area = 4.0 * std::f64::consts::PI.powi(2);
    let (mut l2, mut h1) = (0.0, 0.0);
    for (kx, ky, c) in omega.modes() {
        let k2 = (kx * kx + ky * ky) as f64;
        if k2 == 0.0 {
            continue;
        }
        let a = c.norm_sqr();
        h1 += a;
        l2 += a / k2;
    }
    (area * l2, area * h1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `Q ≤ μ/ν`
    One,
    Two,
    /// `w = 0`, no quotient.
    Synchronized,
}

impl Scenario {
    pub fn code(&self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
            Scenario::Synchronized => 0,
        }
    }
}

pub fn classify(sample: &DiagnosticsSample, mu: f64, nu: f64) -> Scenario {
    match sample.dirichlet_quotient() {
        None => Scenario::Synchronized,
        Some(q) if q <= mu / nu => Scenario::One,
        Some(_) => Scenario::Two,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dominance {
    pub dominant: bool,
    pub active: bool,
}

/// Per-window dominance (share ≥ `1/N²`) and activity (share ≥ `1/(c0N²)`).
pub fn dominance_report(energies: &[f64], c0: f64) -> Result<Vec<Dominance>> {
    if !(c0 > 1.0) {
        return Err(Error::InvalidParameter(format!("c0 = {c0} must exceed 1")));
    }
    if energies.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter("window energies must be finite and >= 0".into()));
    }
    let total: f64 = energies.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidParameter("all window energies are zero".into()));
    }
    let n2 = energies.len() as f64;
    // compare e·N² against the total so equal shares hit equality exactly
    Ok(energies.iter().map(|e| Dominance { dominant: e * n2 >= total, active: e * c0 * n2 >= total }).collect())
}

/// One step of the energy growth audit: whether
/// `‖w(t)‖² ≤ ‖w(t0)‖² e^{C_L⁴νλ1G²(t−t0)}` holds.
pub fn energy_growth_ok(w0_l2sq: f64, w_l2sq: f64, dt: f64, c: &Constants) -> bool {
    w_l2sq <= w0_l2sq * (c.cl4() * c.nu * c.lambda1 * c.grashof.powi(2) * dt).exp()
}

/// Indices `i` (of consecutive samples `(t, ‖w‖²)`) where the growth bound fails.
pub fn energy_growth_audit(trace: &[(f64, f64)], c: &Constants) -> Vec<usize> {
    trace
        .windows(2)
        .enumerate()
        .filter(|(_, w)| !energy_growth_ok(w[0].1, w[1].1, w[1].0 - w[0].0, c))
        .map(|(i, _)| i + 1)
        .collect()
}
