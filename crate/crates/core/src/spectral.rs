//! Fourier representation of real periodic fields on `[0, 2π]²` and the
//! operators the vorticity solver is built from.
//!
//! Coefficients are stored for every wavevector of the `n × n` grid, row-major
//! with `k_y` outer and `k_x` inner, where storage index `idx` maps to the
//! wavenumber `idx` for `idx ≤ n/2` and `idx − n` otherwise. The forward
//! transform divides by `n²`, so a stored coefficient is the analytic Fourier
//! coefficient and `‖f‖² = 4π² Σ |f̂(k)|²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::window::Window;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Columns transformed together in the `y` pass.
const COLUMN_BLOCK: usize = 8;

/// Signed wavenumber for storage index `idx` on an `n`-point axis.
#[inline]
pub fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

#[inline]
fn storage_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Complex Fourier coefficients of a real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n: usize) -> Self {
        SpectralField { n, coeffs: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, got: coeffs.len() });
        }
        Ok(SpectralField { n, coeffs })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    fn flat(&self, kx: i64, ky: i64) -> usize {
        storage_index(ky, self.n) * self.n + storage_index(kx, self.n)
    }

    pub fn get(&self, kx: i64, ky: i64) -> Complex64 {
        self.coeffs[self.flat(kx, ky)]
    }

    pub fn set(&mut self, kx: i64, ky: i64, value: Complex64) {
        let i = self.flat(kx, ky);
        self.coeffs[i] = value;
    }

    /// Set `k` to `value` and `−k` to its conjugate, keeping the field real.
    pub fn set_pair(&mut self, kx: i64, ky: i64, value: Complex64) {
        self.set(kx, ky, value);
        self.set(-kx, -ky, value.conj());
    }

    /// Largest `|f̂(−k) − conj f̂(k)|` over all stored modes.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for jy in 0..n {
            let my = (n - jy) % n;
            for ix in 0..n {
                let mx = (n - ix) % n;
                let a = self.coeffs[jy * n + ix];
                let b = self.coeffs[my * n + mx];
                worst = worst.max((b - a.conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// The `(0, 0)` coefficient, i.e. the spatial mean.
    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert_eq!(self.n, other.n, "grid size mismatch in axpy");
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += *o * a;
        }
    }

    /// `self − other`.
    pub fn difference(&self, other: &SpectralField) -> SpectralField {
        assert_eq!(self.n, other.n, "grid size mismatch in difference");
        SpectralField { n: self.n, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    /// Iterate `(kx, ky, coefficient)` over all stored modes.
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let n = self.n;
        self.coeffs.iter().enumerate().map(move |(flat, c)| (wavenumber(flat % n, n), wavenumber(flat / n, n), *c))
    }
}

/// Real nodal values at `x_ij = (2πi/n, 2πj/n)`, stored row-major with `j`
/// (the `y` index) outer.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(n: usize) -> Self {
        GridField { n, values: vec![0.0; n * n] }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, got: values.len() });
        }
        Ok(GridField { n, values })
    }

    /// Sample `f(x, y)` at the grid nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = 2.0 * PI / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        GridField { n, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.n + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `∫ f²` by the periodic rectangle rule.
    pub fn quadrature_l2sq(&self) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        h * h * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Keep every `stride`-th node in each direction.
    pub fn subsample(&self, stride: usize) -> Result<CoarseGrid> {
        if stride == 0 || !self.n.is_multiple_of(stride) {
            return Err(Error::InvalidParameter(format!("stride {stride} does not divide grid size {}", self.n)));
        }
        let m = self.n / stride;
        let mut values = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                values.push(self.get(i * stride, j * stride));
            }
        }
        Ok(CoarseGrid { field: GridField { n: m, values }, stride })
    }
}

/// A subsampled view of a fine grid. Holds only the coarse nodes, so anything
/// computed from it cannot depend on the fine values in between.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    field: GridField,
    stride: usize,
}

impl CoarseGrid {
    pub fn field(&self) -> &GridField {
        &self.field
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn fine_size(&self) -> usize {
        self.field.n * self.stride
    }
}

/// `‖f‖_{L²}` by Parseval.
pub fn l2_norm(f: &SpectralField) -> f64 {
    (FOUR_PI_SQ * f.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

/// `‖∇f‖_{L²}` by Parseval.
pub fn h1_seminorm(f: &SpectralField) -> f64 {
    let n = f.n;
    let mut s = 0.0;
    for (flat, c) in f.coeffs.iter().enumerate() {
        let kx = wavenumber(flat % n, n) as f64;
        let ky = wavenumber(flat / n, n) as f64;
        s += (kx * kx + ky * ky) * c.norm_sqr();
    }
    (FOUR_PI_SQ * s).sqrt()
}

/// `∫_w g²` by the composite trapezoidal rule over the nodes of `w` on the
/// grid subsampled by `stride`. Edge nodes carry weight ½ per axis; the far
/// edge wraps periodically.
pub fn local_energy(g: &GridField, w: &Window, stride: usize) -> Result<f64> {
    let wn = w.nodes(g.n, stride)?;
    let h = 2.0 * PI / wn.n as f64;
    let edge = |a: usize| if a == 0 || a == wn.side { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for b in 0..=wn.side {
        let j = (wn.j0 + b) % wn.n * stride;
        let wb = edge(b);
        for a in 0..=wn.side {
            let i = (wn.i0 + a) % wn.n * stride;
            let v = g.get(i, j);
            sum += wb * edge(a) * v * v;
        }
    }
    Ok(sum * h * h)
}

/// Trapezoid energies of all windows of the `partition × partition` lattice.
pub fn window_energies(g: &GridField, partition: usize, stride: usize) -> Result<Vec<f64>> {
    Window::partition(partition).iter().map(|w| local_energy(g, w, stride)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Transform context for one grid size: FFT plans plus wavenumber tables.
pub struct SpectralOps {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Wavenumber per axis index, Nyquist zeroed (used for derivatives).
    kd: Vec<f64>,
    /// `|k|²` per flat index, with the true Nyquist wavenumber.
    k2: Vec<f64>,
    /// Dealias cutoff: modes with `|k_x|` or `|k_y|` above it are removed.
    cutoff: i64,
    /// Flat index of `−k` for each flat index `k`.
    mirror: Vec<usize>,
    /// Dealiasing mask per flat index.
    keep: Vec<bool>,
    all_cols: Vec<usize>,
    /// Columns inside the dealiasing band.
    band_cols: Vec<usize>,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps").field("n", &self.n).finish()
    }
}

impl SpectralOps {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let kd = (0..n).map(|i| if i == n / 2 { 0.0 } else { wavenumber(i, n) as f64 }).collect();
        let mut k2 = Vec::with_capacity(n * n);
        for jy in 0..n {
            let ky = wavenumber(jy, n) as f64;
            for ix in 0..n {
                let kx = wavenumber(ix, n) as f64;
                k2.push(kx * kx + ky * ky);
            }
        }
        let cutoff = (n / 3) as i64;
        let in_band = |i: usize| i != n / 2 && wavenumber(i, n).abs() <= cutoff;
        let mut mirror = Vec::with_capacity(n * n);
        let mut keep = Vec::with_capacity(n * n);
        for jy in 0..n {
            for ix in 0..n {
                mirror.push(((n - jy) % n) * n + (n - ix) % n);
                keep.push(in_band(ix) && in_band(jy));
            }
        }
        Ok(SpectralOps {
            n,
            forward,
            inverse,
            kd,
            k2,
            cutoff,
            mirror,
            keep,
            all_cols: (0..n).collect(),
            band_cols: (0..n).filter(|&i| in_band(i)).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Largest retained `|k_x|`, `|k_y|` under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        self.cutoff
    }

    /// `|k|²` per flat storage index.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: n });
        }
        Ok(())
    }

    /// FFT along `y` of the listed columns, in place. Columns are gathered
    /// in blocks so that the reads stay within cache lines.
    fn column_pass(&self, buf: &mut [Complex64], cols: &[usize], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut tmp = vec![Complex64::new(0.0, 0.0); COLUMN_BLOCK * n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for block in cols.chunks(COLUMN_BLOCK) {
            let m = block.len();
            for j in 0..n {
                let row = &buf[j * n..(j + 1) * n];
                for (b, &c) in block.iter().enumerate() {
                    tmp[b * n + j] = row[c];
                }
            }
            plan.process_with_scratch(&mut tmp[..m * n], &mut scratch);
            for j in 0..n {
                let row = &mut buf[j * n..(j + 1) * n];
                for (b, &c) in block.iter().enumerate() {
                    row[c] = tmp[b * n + j];
                }
            }
        }
    }

    fn row_pass(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
    }

    /// Unnormalized inverse transform. Columns that are entirely zero are
    /// skipped (their transform is zero).
    fn inverse_in_place(&self, buf: &mut [Complex64]) {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut live = vec![false; n];
        for row in buf.chunks_exact(n) {
            for (l, v) in live.iter_mut().zip(row) {
                *l |= *v != zero;
            }
        }
        let cols: Vec<usize> = (0..n).filter(|&c| live[c]).collect();
        self.column_pass(buf, &cols, &self.inverse);
        self.row_pass(buf, &self.inverse);
    }

    /// Normalized forward transform. Only the columns in `cols` are
    /// completed; the others are left holding partial (row-pass) values and
    /// must be discarded by the caller.
    fn forward_in_place(&self, buf: &mut [Complex64], cols: &[usize]) {
        self.row_pass(buf, &self.forward);
        self.column_pass(buf, cols, &self.forward);
        let norm = 1.0 / (self.n * self.n) as f64;
        for c in buf.iter_mut() {
            *c *= norm;
        }
    }

    /// Nodal values of `f`. Rejects input that is not Hermitian (to a
    /// relative tolerance of 1e-10), since it does not describe a real field.
    pub fn to_grid(&self, f: &SpectralField) -> Result<GridField> {
        self.check(f.n)?;
        let defect = f.hermitian_defect();
        if defect > 1e-10 * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NonHermitian(defect));
        }
        Ok(self.to_grid_unchecked(f))
    }

    pub(crate) fn to_grid_unchecked(&self, f: &SpectralField) -> GridField {
        let mut out = f.coeffs.clone();
        self.inverse_in_place(&mut out);
        GridField { n: self.n, values: out.into_iter().map(|c| c.re).collect() }
    }

    /// Nodal values of two real fields with one complex transform.
    pub(crate) fn to_grid_pair(&self, a: &[Complex64], b: &[Complex64]) -> (GridField, GridField) {
        let i = Complex64::new(0.0, 1.0);
        let mut out: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.inverse_in_place(&mut out);
        let n = self.n;
        let (mut ra, mut rb) = (Vec::with_capacity(n * n), Vec::with_capacity(n * n));
        for c in out {
            ra.push(c.re);
            rb.push(c.im);
        }
        (GridField { n, values: ra }, GridField { n, values: rb })
    }

    /// Fourier coefficients of `g`. The transform is exact: no mode is
    /// dropped, so `to_grid(to_spectral(g)) == g` to round-off.
    pub fn to_spectral(&self, g: &GridField) -> Result<SpectralField> {
        self.check(g.n)?;
        Ok(self.to_spectral_unchecked(g))
    }

    pub(crate) fn to_spectral_unchecked(&self, g: &GridField) -> SpectralField {
        let mut coeffs: Vec<Complex64> = g.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward_in_place(&mut coeffs, &self.all_cols);
        self.symmetrize(&mut coeffs);
        SpectralField { n: self.n, coeffs }
    }

    /// Project onto exactly Hermitian coefficients (removes round-off asymmetry).
    fn symmetrize(&self, c: &mut [Complex64]) {
        for (a, &b) in self.mirror.iter().enumerate() {
            if a < b {
                let avg = (c[a] + c[b].conj()) * 0.5;
                c[a] = avg;
                c[b] = avg.conj();
            } else if a == b {
                c[a].im = 0.0;
            }
        }
    }

    /// Zero every mode outside the 2/3-rule mask (this includes Nyquist).
    pub fn dealias(&self, f: &mut SpectralField) {
        self.apply_mask(&mut f.coeffs);
    }

    fn apply_mask(&self, c: &mut [Complex64]) {
        for (v, keep) in c.iter_mut().zip(&self.keep) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn is_dealiased(&self, f: &SpectralField) -> bool {
        let mut g = f.clone();
        self.dealias(&mut g);
        g == *f
    }

    /// Streamfunction `ψ` with `−Δψ = ω`.
    pub fn poisson_solve(&self, omega: &SpectralField) -> Result<SpectralField> {
        self.check(omega.n)?;
        let m = omega.mean().norm();
        if m > 1e-12 * omega.max_abs().max(1.0) {
            return Err(Error::NonzeroMean(m));
        }
        Ok(self.poisson_unchecked(omega))
    }

    pub(crate) fn poisson_unchecked(&self, omega: &SpectralField) -> SpectralField {
        let mut psi = omega.clone();
        for (c, k2) in psi.coeffs.iter_mut().zip(&self.k2) {
            *c = if *k2 > 0.0 { *c / *k2 } else { Complex64::new(0.0, 0.0) };
        }
        psi
    }

    /// Spectral Laplacian `Δf`.
    pub fn laplacian(&self, f: &SpectralField) -> SpectralField {
        let mut out = f.clone();
        for (c, k2) in out.coeffs.iter_mut().zip(&self.k2) {
            *c *= -*k2;
        }
        out
    }

    /// Spectral derivative along one axis (Nyquist derivative is zero).
    pub fn derivative(&self, f: &SpectralField, axis: Axis) -> SpectralField {
        let n = self.n;
        let mut out = f.clone();
        for jy in 0..n {
            for ix in 0..n {
                let k = match axis {
                    Axis::X => self.kd[ix],
                    Axis::Y => self.kd[jy],
                };
                let c = &mut out.coeffs[jy * n + ix];
                *c = Complex64::new(-k * c.im, k * c.re);
            }
        }
        out
    }

    /// Nodal velocity `u = ∇⊥ψ = (−∂_y ψ, ∂_x ψ)`.
    pub fn velocity(&self, psi: &SpectralField) -> Result<(GridField, GridField)> {
        self.check(psi.n)?;
        let u_hat = self.derivative(psi, Axis::Y).scaled(-1.0);
        let v_hat = self.derivative(psi, Axis::X);
        Ok(self.to_grid_pair(&u_hat.coeffs, &v_hat.coeffs))
    }

    /// Dealiased advection term `u·∇ω` with `u = ∇⊥ψ`, in spectral space.
    pub fn advect(&self, omega: &SpectralField, psi: &SpectralField) -> Result<SpectralField> {
        self.check(omega.n)?;
        self.check(psi.n)?;
        Ok(self.advect_unchecked(omega, psi))
    }

    pub(crate) fn advect_unchecked(&self, omega: &SpectralField, psi: &SpectralField) -> SpectralField {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        // velocity packed as u + iv, vorticity gradient as ω_x + iω_y
        let mut vel = vec![zero; n * n];
        let mut grad = vec![zero; n * n];
        for jy in 0..n {
            let ky = self.kd[jy];
            for ix in 0..n {
                let kx = self.kd[ix];
                let f = jy * n + ix;
                let p = psi.coeffs[f];
                let w = omega.coeffs[f];
                // u = −i k_y ψ, v = i k_x ψ, then pack u + i v
                let u = Complex64::new(ky * p.im, -ky * p.re);
                let v = Complex64::new(-kx * p.im, kx * p.re);
                vel[f] = Complex64::new(u.re - v.im, u.im + v.re);
                let wx = Complex64::new(-kx * w.im, kx * w.re);
                let wy = Complex64::new(-ky * w.im, ky * w.re);
                grad[f] = Complex64::new(wx.re - wy.im, wx.im + wy.re);
            }
        }
        self.inverse_in_place(&mut vel);
        self.inverse_in_place(&mut grad);
        for (p, g) in vel.iter_mut().zip(&grad) {
            *p = Complex64::new(p.re * g.re + p.im * g.im, 0.0);
        }
        self.forward_in_place(&mut vel, &self.band_cols);
        self.apply_mask(&mut vel);
        self.symmetrize(&mut vel);
        vel[0] = zero;
        SpectralField { n, coeffs: vel }
    }
}
