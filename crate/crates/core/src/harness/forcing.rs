//! Time-independent forcing on a wavenumber annulus.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::config::ForcingConfig;
use crate::spectral::{SpectralField, SpectralOps};

/// Curl of the body force: unit-magnitude, random-phase coefficients on
/// `lo ≤ |k| < hi`, rescaled so the velocity forcing has
/// `‖f‖ = grashof_trad · ν² · λ1` (with `λ1 = 1`).
pub fn build_forcing(ops: &SpectralOps, cfg: &ForcingConfig, nu: f64) -> Result<SpectralField> {
    let n = ops.size();
    let (lo, hi) = (cfg.annulus_lo, cfg.annulus_hi);
    let kmax = largest_below(hi);
    if kmax > ops.dealias_cutoff() {
        return Err(Error::InvalidParameter(format!(
            "forcing annulus reaches |k| = {kmax}, beyond the dealiasing cutoff {} of a {n}² grid",
            ops.dealias_cutoff()
        )));
    }
    let mut g = SpectralField::zeros(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut any = false;
    for ky in 0..=kmax {
        for kx in -kmax..=kmax {
            if ky == 0 && kx <= 0 {
                continue;
            }
            let k = ((kx * kx + ky * ky) as f64).sqrt();
            if k < lo || k >= hi {
                continue;
            }
            let phase = rng.gen_range(0.0..2.0 * PI);
            g.set_pair(kx, ky, Complex64::from_polar(1.0, phase));
            any = true;
        }
    }
    if !any {
        return Err(Error::InvalidParameter(format!("forcing annulus [{lo}, {hi}) contains no modes")));
    }
    let target = cfg.grashof_trad * nu * nu;
    let current = force_norm(&g);
    g.scale(target / current);
    Ok(g)
}

/// `‖f‖` of the velocity forcing whose curl is `g`: `|f̂(k)| = |ĝ(k)|/|k|`.
pub fn force_norm(g: &SpectralField) -> f64 {
    let s: f64 = g
        .modes()
        .filter(|(kx, ky, _)| *kx != 0 || *ky != 0)
        .map(|(kx, ky, c)| c.norm_sqr() / (kx * kx + ky * ky) as f64)
        .sum();
    2.0 * PI * s.sqrt()
}

fn largest_below(hi: f64) -> i64 {
    let k = hi.ceil() as i64 - 1;
    k.max(0)
}
