//! Interpolant (feedback) operators applied to the difference `ω̃ − ω`.
//!
//! * [`apply_local_filtered`]: transform to nodes, keep the window, rebuild it
//!   from every `2^p`-th node with the recursive midpoint average `K_p`, and
//!   transform back.
//! * [`apply_spectral_projection`]: keep the lowest Fourier modes.
//! * [`apply_volume_elements`]: windowed cell averages over `h`-squares with a
//!   mean correction; used for checking interpolant inequalities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{wavenumber, GridField, SpectralField, SpectralOps};
use crate::window::{Window, WindowNodes};

/// Which interpolant the nudging term uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NudgeKind {
    /// Sharp window, every `2^p`-th node, recursive midpoint filling.
    LocalFiltered { p: u32 },
    /// Projection onto modes with `|k_x|, |k_y| < modes/2`.
    SpectralProjection { modes: usize },
    /// Cell averages over squares of side `h`.
    VolumeElements { h: f64 },
}

/// Relaxation strength plus interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NudgeSpec {
    pub mu: f64,
    pub kind: NudgeKind,
}

impl NudgeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu = {} must be >= 0", self.mu)));
        }
        match self.kind {
            NudgeKind::LocalFiltered { p } if !(1..=4).contains(&p) => {
                Err(Error::InvalidParameter(format!("K_p depth p = {p} must be in 1..=4")))
            }
            NudgeKind::SpectralProjection { modes } if modes < 2 => {
                Err(Error::InvalidParameter(format!("spectral projection needs at least 2 modes, got {modes}")))
            }
            NudgeKind::VolumeElements { h } if !(h > 0.0) => {
                Err(Error::InvalidParameter(format!("cell size h = {h} must be > 0")))
            }
            _ => Ok(()),
        }
    }

    /// Feedback field `J(diff)` (not yet multiplied by `μ`). `window` is
    /// required by the local kinds; `None` means the whole domain.
    pub fn feedback(&self, ops: &SpectralOps, diff: &SpectralField, window: Option<&Window>) -> Result<SpectralField> {
        let full = Window::full_domain();
        let w = window.unwrap_or(&full);
        match self.kind {
            NudgeKind::LocalFiltered { p } => apply_local_filtered(ops, diff, p, w),
            NudgeKind::SpectralProjection { modes } => apply_spectral_projection(ops, diff, modes),
            NudgeKind::VolumeElements { h } => {
                let g = ops.to_grid_unchecked(diff);
                let local = apply_volume_elements(&g, h, w)?;
                Ok(finish(ops, &local))
            }
        }
    }
}

/// Rectangular block of nodal values, `values[b * width + a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBlock {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl NodeBlock {
    pub fn new(width: usize, height: usize) -> Self {
        NodeBlock { width, height, values: vec![0.0; width * height] }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[b * self.width + a]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.values[b * self.width + a] = v;
    }
}

/// Recursive midpoint average `K_p`.
///
/// Only the nodes at multiples of `2^p` are read. Each coarse cell with
/// corners `a` (lower left), `b` (lower right), `c` (upper right), `d`
/// (upper left) gets edge midpoints `(a+b)/2`, `(b+c)/2`, `(c+d)/2`, `(a+d)/2`
/// and centre `(a+b+c+d)/4`; the four sub-cells are refined the same way
/// until all nodes are filled. Block sides must be `m·2^p + 1`.
pub fn kp_average(block: &NodeBlock, p: u32) -> Result<NodeBlock> {
    let q = 1usize << p;
    for (what, len) in [("width", block.width), ("height", block.height)] {
        if len < q + 1 || (len - 1) % q != 0 {
            return Err(Error::Misaligned(format!("block {what} {len} is not a multiple of 2^{p} plus one")));
        }
    }
    let mut out = NodeBlock::new(block.width, block.height);
    for b in (0..block.height).step_by(q) {
        for a in (0..block.width).step_by(q) {
            out.set(a, b, block.get(a, b));
        }
    }
    let mut step = q;
    while step > 1 {
        let half = step / 2;
        for j in (0..block.height - 1).step_by(step) {
            for i in (0..block.width - 1).step_by(step) {
                let a = out.get(i, j);
                let b = out.get(i + step, j);
                let c = out.get(i + step, j + step);
                let d = out.get(i, j + step);
                out.set(i + half, j, (a + b) / 2.0);
                out.set(i + step, j + half, (b + c) / 2.0);
                out.set(i + half, j + step, (c + d) / 2.0);
                out.set(i, j + half, (a + d) / 2.0);
                out.set(i + half, j + half, (a + b + c + d) / 4.0);
            }
        }
        step = half;
    }
    Ok(out)
}

fn local_nodes(n: usize, w: &Window, p: u32) -> Result<WindowNodes> {
    let wn = w.nodes(n, 1)?;
    let q = 1usize << p;
    if wn.side % q != 0 {
        return Err(Error::Misaligned(format!("window spans {} nodes, not divisible by 2^{p}", wn.side)));
    }
    Ok(wn)
}

/// `K_p ∘ χ_w` on nodal values: zero outside the window, recursive midpoint
/// reconstruction from every `2^p`-th node (counted from the anchor) inside.
///
/// The last row and column of anchors sit `2^p` nodes before the far window
/// edge; the strip beyond them is filled by repeating the final anchors, so
/// only in-window observations are used. A full-domain window closes
/// periodically instead.
pub fn localize_and_filter(g: &GridField, w: &Window, p: u32) -> Result<GridField> {
    let n = g.size();
    let wn = local_nodes(n, w, p)?;
    let q = 1usize << p;
    let s = wn.side;
    let periodic = s == n;
    let mut block = NodeBlock::new(s + 1, s + 1);
    let clamp = |o: usize| {
        if o >= s {
            if periodic {
                0
            } else {
                s - q
            }
        } else {
            o
        }
    };
    for b in (0..=s).step_by(q) {
        for a in (0..=s).step_by(q) {
            let idx = wn.node(clamp(a), clamp(b));
            block.set(a, b, g.values()[idx]);
        }
    }
    let filled = kp_average(&block, p)?;
    let mut out = GridField::zeros(n);
    for b in 0..s {
        for a in 0..s {
            out.values_mut()[wn.node(a, b)] = filled.get(a, b);
        }
    }
    Ok(out)
}

/// Back to spectral space with the solver invariants restored (dealiased,
/// mean zero).
fn finish(ops: &SpectralOps, g: &GridField) -> SpectralField {
    let mut out = ops.to_spectral_unchecked(g);
    ops.dealias(&mut out);
    out.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    out
}

/// `FFT ∘ K_p ∘ χ_w ∘ FFT⁻¹` applied to `diff`.
pub fn apply_local_filtered(ops: &SpectralOps, diff: &SpectralField, p: u32, w: &Window) -> Result<SpectralField> {
    if diff.size() != ops.size() {
        return Err(Error::SizeMismatch { expected: ops.size(), got: diff.size() });
    }
    let g = ops.to_grid_unchecked(diff);
    let local = localize_and_filter(&g, w, p)?;
    Ok(finish(ops, &local))
}

/// Keep modes with `|k_x| < modes/2` and `|k_y| < modes/2`; the mean is
/// dropped.
pub fn apply_spectral_projection(ops: &SpectralOps, diff: &SpectralField, modes: usize) -> Result<SpectralField> {
    let kmax = (modes as i64 + 1) / 2 - 1;
    if kmax > ops.dealias_cutoff() {
        return Err(Error::InvalidParameter(format!(
            "{modes} modes per direction exceed the dealias limit {}",
            ops.dealias_cutoff()
        )));
    }
    let n = diff.size();
    let mut out = diff.clone();
    for (flat, c) in out.coeffs_mut().iter_mut().enumerate() {
        let kx = wavenumber(flat % n, n).abs();
        let ky = wavenumber(flat / n, n).abs();
        if kx > kmax || ky > kmax {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    Ok(out)
}

/// Volume-element interpolant on the window `w`:
///
/// ```text
/// I_h f = χ_w · Σ_j (χ_{S_j} − h²/|w|) · avg_{S_j} f
/// ```
///
/// The correction coefficient `h²/|w|` makes the output exactly mean zero.
/// Cell averages use the nodes of each cell (rectangle rule).
pub fn apply_volume_elements(diff: &GridField, h: f64, w: &Window) -> Result<GridField> {
    let n = diff.size();
    let wn = w.nodes(n, 1)?;
    let cell = Window::new((0.0, 0.0), h)
        .nodes(n, 1)
        .map_err(|_| Error::Misaligned(format!("cell size {h} is not a whole number of grid spacings")))?;
    let c = cell.side;
    if wn.side % c != 0 {
        return Err(Error::Misaligned(format!("cells of {c} nodes do not tile a window of {} nodes", wn.side)));
    }
    let cells = wn.side / c;
    let mut averages = vec![0.0; cells * cells];
    for cb in 0..cells {
        for ca in 0..cells {
            let mut s = 0.0;
            for b in 0..c {
                for a in 0..c {
                    s += diff.values()[wn.node(ca * c + a, cb * c + b)];
                }
            }
            averages[cb * cells + ca] = s / (c * c) as f64;
        }
    }
    let mean = averages.iter().sum::<f64>() / averages.len() as f64;
    let mut out = GridField::zeros(n);
    for cb in 0..cells {
        for ca in 0..cells {
            let v = averages[cb * cells + ca] - mean;
            for b in 0..c {
                for a in 0..c {
                    out.values_mut()[wn.node(ca * c + a, cb * c + b)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Nodes observed per step by the local filter: `(side / 2^p)²`.
pub fn observed_nodes(window_side_nodes: usize, p: u32) -> usize {
    let per_axis = window_side_nodes >> p;
    per_axis * per_axis
}
