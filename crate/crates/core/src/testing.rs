//! Random field generators shared by unit, property and acceptance tests.

use num_complex::Complex64;
use rand::Rng;

use crate::spectral::{SpectralField, SpectralOps};

/// Random real, mean-zero field with modes `|k_x|, |k_y| ≤ kmax` and
/// coefficients uniform in the unit square, scaled by `1/(1+|k|)`.
pub fn random_band_limited(ops: &SpectralOps, rng: &mut impl Rng, kmax: i64) -> SpectralField {
    let n = ops.size();
    let kmax = kmax.min(ops.dealias_cutoff());
    let mut f = SpectralField::zeros(n);
    for ky in 0..=kmax {
        for kx in -kmax..=kmax {
            if ky == 0 && kx <= 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + ((kx * kx + ky * ky) as f64).sqrt());
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
            f.set_pair(kx, ky, c);
        }
    }
    f
}
