//! Observation windows on the periodic domain `[0, 2π)²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Relative slack, in units of one grid spacing, when deciding whether a
/// physical coordinate sits on a grid node.
const NODE_SLACK: f64 = 1e-6;

/// A square observation subdomain: lower-left anchor, side length, and
/// (for windows of the `N × N` partition) its 1-based index.
///
/// Indices run row-major from the bottom-left: `index = iy·N + ix + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub anchor: (f64, f64),
    pub side: f64,
    pub index: Option<usize>,
}

/// A window resolved onto the nodes of an `n × n` grid. The window covers
/// the half-open node range `[i0, i0 + side)` per axis, wrapping periodically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowNodes {
    pub i0: usize,
    pub j0: usize,
    pub side: usize,
    pub n: usize,
}

impl Window {
    pub fn new(anchor: (f64, f64), side: f64) -> Self {
        Window { anchor: (wrap(anchor.0), wrap(anchor.1)), side, index: None }
    }

    /// Window `index` (1-based) of the `partition × partition` lattice.
    pub fn lattice(partition: usize, index: usize) -> Result<Self> {
        if partition == 0 || index == 0 || index > partition * partition {
            return Err(Error::InvalidParameter(format!(
                "window index {index} outside 1..={} ",
                partition * partition
            )));
        }
        let side = TWO_PI / partition as f64;
        let ix = (index - 1) % partition;
        let iy = (index - 1) / partition;
        Ok(Window { anchor: (ix as f64 * side, iy as f64 * side), side, index: Some(index) })
    }

    /// All windows of the partition, in index order.
    pub fn partition(partition: usize) -> Vec<Window> {
        (1..=partition * partition).map(|i| Window::lattice(partition, i).expect("index in range")).collect()
    }

    /// The whole domain as a single window.
    pub fn full_domain() -> Self {
        Window { anchor: (0.0, 0.0), side: TWO_PI, index: None }
    }

    /// Window grown by `margin` on every side (same centre).
    pub fn enlarged(&self, margin: f64) -> Self {
        Window {
            anchor: (wrap(self.anchor.0 - margin), wrap(self.anchor.1 - margin)),
            side: self.side + 2.0 * margin,
            index: self.index,
        }
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Resolve onto an `n × n` grid subsampled by `stride`. Errors when the
    /// anchor or side are not on the strided node lattice.
    pub fn nodes(&self, n: usize, stride: usize) -> Result<WindowNodes> {
        if stride == 0 || !n.is_multiple_of(stride) {
            return Err(Error::Misaligned(format!("stride {stride} does not divide grid size {n}")));
        }
        let m = n / stride;
        let h = TWO_PI / m as f64;
        let snap = |v: f64, what: &str| -> Result<usize> {
            let r = v / h;
            let k = r.round();
            if (r - k).abs() > NODE_SLACK {
                return Err(Error::Misaligned(format!("{what} {v} is not a multiple of the node spacing {h}")));
            }
            Ok(k as usize)
        };
        let side = snap(self.side, "side")?;
        if side == 0 || side > m {
            return Err(Error::Misaligned(format!("side {} spans {side} nodes on a {m}-node grid", self.side)));
        }
        let i0 = snap(self.anchor.0, "anchor x")? % m;
        let j0 = snap(self.anchor.1, "anchor y")? % m;
        Ok(WindowNodes { i0, j0, side, n: m })
    }
}

impl WindowNodes {
    /// Grid index of the node at window offset `(a, b)` (wrapping).
    #[inline]
    pub fn node(&self, a: usize, b: usize) -> usize {
        let i = (self.i0 + a) % self.n;
        let j = (self.j0 + b) % self.n;
        j * self.n + i
    }

    /// Whether grid node `(i, j)` lies in the half-open window.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        let di = (i + self.n - self.i0) % self.n;
        let dj = (j + self.n - self.j0) % self.n;
        di < self.side && dj < self.side
    }
}

/// Map a coordinate into `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}
