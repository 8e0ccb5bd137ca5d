//! Measurements taken through the solver's own operators.

use std::f64::consts::PI;

use mobile_nudging::integrator::{Startup, Stepper, StepperState};
use mobile_nudging::nudging::apply_volume_elements;
use mobile_nudging::spectral::{l2_norm, Axis};
use mobile_nudging::testing::random_band_limited;
use mobile_nudging::{Result, SpectralField, SpectralOps, Window};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `max ‖I_h φ‖/‖φ‖` and `max ‖φ − I_h φ‖/(h‖∇φ‖)` on a window, over
/// random band-limited fields with their window mean removed.
pub fn interpolant_constants(n: usize, h: f64, fields: usize, seed: u64) -> (f64, f64) {
    let ops = SpectralOps::new(n).unwrap();
    let w = Window::lattice(4, 6).unwrap();
    let wn = w.nodes(n, 1).unwrap();
    let dx = 2.0 * PI / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bound, mut poincare) = (0.0f64, 0.0f64);
    let idx: Vec<usize> = (0..wn.side).flat_map(|b| (0..wn.side).map(move |a| wn.node(a, b))).collect();
    for _ in 0..fields {
        let f = random_band_limited(&ops, &mut rng, 8);
        let mut g = ops.to_grid(&f).unwrap();
        let gx = ops.to_grid(&ops.derivative(&f, Axis::X)).unwrap();
        let gy = ops.to_grid(&ops.derivative(&f, Axis::Y)).unwrap();
        let mean = idx.iter().map(|&i| g.values()[i]).sum::<f64>() / idx.len() as f64;
        for &i in &idx {
            g.values_mut()[i] -= mean;
        }
        let ih = apply_volume_elements(&g, h, &w).unwrap();
        let norm = |v: &dyn Fn(usize) -> f64| (idx.iter().map(|&i| v(i).powi(2)).sum::<f64>() * dx * dx).sqrt();
        let phi = norm(&|i| g.values()[i]);
        let iphi = norm(&|i| ih.values()[i]);
        let resid = norm(&|i| g.values()[i] - ih.values()[i]);
        let grad = norm(&|i| gx.values()[i].hypot(gy.values()[i]));
        bound = bound.max(iphi / phi);
        poincare = poincare.max(resid / (h * grad));
    }
    (bound, poincare)
}

const NU: f64 = 0.05;

fn modes(n: usize) -> (SpectralField, SpectralField) {
    let mut a = SpectralField::zeros(n);
    a.set_pair(1, 2, Complex64::new(0.6, 0.2));
    let mut b = SpectralField::zeros(n);
    b.set_pair(3, -1, Complex64::new(-0.3, 0.5));
    b.set_pair(0, 2, Complex64::new(0.4, 0.0));
    (a, b)
}

/// `ω*(t) = sin(1 + t)·A + cos(2t)·B` and its time derivative.
fn exact(a: &SpectralField, b: &SpectralField, t: f64) -> (SpectralField, SpectralField) {
    let mut w = a.scaled((1.0 + t).sin());
    w.axpy((2.0 * t).cos(), b);
    let mut dw = a.scaled((1.0 + t).cos());
    dw.axpy(-2.0 * (2.0 * t).sin(), b);
    (w, dw)
}

/// Error at `t = 1` for the forced Navier-Stokes problem whose solution is `ω*`.
pub fn manufactured_error(dt: f64, startup: Startup) -> f64 {
    let n = 32;
    let ops = SpectralOps::new(n).unwrap();
    let (a, b) = modes(n);
    let (w0, _) = exact(&a, &b, 0.0);
    let mut stepper = Stepper::new(&ops, StepperState::new(w0, 0.0, dt, NU), startup).unwrap();
    let mut rhs = |w: &SpectralField, t: f64| -> Result<SpectralField> {
        let (ws, dws) = exact(&a, &b, t);
        // g = ω*_t − νΔω* + u*·∇ω*, R = g − u·∇ω
        let mut g = dws;
        g.axpy(-NU, &ops.laplacian(&ws));
        g.axpy(1.0, &ops.advect(&ws, &ops.poisson_solve(&ws)?)?);
        g.axpy(-1.0, &ops.advect(w, &ops.poisson_solve(w)?)?);
        Ok(g)
    };
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        stepper.step(&mut rhs).unwrap();
    }
    let (we, _) = exact(&a, &b, steps as f64 * dt);
    l2_norm(&stepper.omega().difference(&we))
}

/// Observed order from `dt = 0.02, 0.01, 0.005`.
pub fn measured_order(startup: Startup) -> f64 {
    let e1 = manufactured_error(0.02, startup);
    let e2 = manufactured_error(0.01, startup);
    let e3 = manufactured_error(0.005, startup);
    0.5 * ((e1 / e2).log2() + (e2 / e3).log2())
}

/// `max_i |ω(t) − e^{−ν|k|²t} ω(0)|` relative, for one mode stepped `steps`
/// times with no forcing or advection.
pub fn unforced_decay_error(kx: i64, ky: i64, c: Complex64, nu: f64, dt: f64, steps: usize, startup: Startup) -> f64 {
    let n = 32;
    let ops = SpectralOps::new(n).unwrap();
    let mut w = SpectralField::zeros(n);
    w.set_pair(kx, ky, c);
    let mut s = Stepper::new(&ops, StepperState::new(w.clone(), 0.0, dt, nu), startup).unwrap();
    let mut zero = |f: &SpectralField, _t: f64| -> Result<SpectralField> { Ok(SpectralField::zeros(f.size())) };
    for _ in 0..steps {
        s.step(&mut zero).unwrap();
    }
    let k2 = (kx * kx + ky * ky) as f64;
    let expect = w.scaled((-nu * k2 * steps as f64 * dt).exp());
    l2_norm(&s.omega().difference(&expect)) / l2_norm(&w)
}
