//! Reference implementations used by the integration and acceptance tests.
//! Outside `probes`, nothing here calls into the solver's transforms or filters.
#![allow(dead_code)]

pub mod probes;

use std::f64::consts::PI;

use mobile_nudging::{GridField, SpectralField};
use num_complex::Complex64;

// ---------------------------------------------------------------------------
// Fourier series summed term by term

/// Spectral multiplier applied before summation.
#[derive(Clone, Copy)]
pub enum Multiplier {
    Identity,
    Dx,
    Dy,
    InvNegLaplacian,
}

fn multiplier(m: Multiplier, kx: i64, ky: i64) -> Complex64 {
    let (kx, ky) = (kx as f64, ky as f64);
    match m {
        Multiplier::Identity => Complex64::new(1.0, 0.0),
        Multiplier::Dx => Complex64::new(0.0, kx),
        Multiplier::Dy => Complex64::new(0.0, ky),
        Multiplier::InvNegLaplacian => {
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / k2, 0.0)
            }
        }
    }
}

/// Sums `Σ m(k) ĉ_k e^{i k·x}` at every node of the `n × n` grid. Only the
/// nonzero coefficients are visited.
pub fn series_on_grid(f: &SpectralField, m: Multiplier) -> Vec<f64> {
    let n = f.size();
    // e^{2πi r/n} for r in 0..n
    let roots: Vec<Complex64> = (0..n).map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64)).collect();
    let terms: Vec<(i64, i64, Complex64)> = f
        .modes()
        .filter(|(_, _, c)| *c != Complex64::new(0.0, 0.0))
        .map(|(kx, ky, c)| (kx, ky, c * multiplier(m, kx, ky)))
        .collect();
    let mut out = vec![0.0; n * n];
    let ni = n as i64;
    for j in 0..n {
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for &(kx, ky, c) in &terms {
                let r = (kx * i as i64 + ky * j as i64).rem_euclid(ni) as usize;
                s += c * roots[r];
            }
            out[j * n + i] = s.re;
        }
    }
    out
}

/// `max |a − b| / max |b|` (or the absolute difference if `b` vanishes).
pub fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

// ---------------------------------------------------------------------------
// Recursive midpoint filling

/// Fills a `(side+1)²` node block from the values at multiples of `2^p` by
/// recursive quartering. `obs(a, b)` supplies the observed values.
pub fn midpoint_fill(side: usize, p: u32, obs: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let w = side + 1;
    let q = 1usize << p;
    let mut v = vec![f64::NAN; w * w];
    for b in (0..=side).step_by(q) {
        for a in (0..=side).step_by(q) {
            v[b * w + a] = obs(a, b);
        }
    }
    for y0 in (0..side).step_by(q) {
        for x0 in (0..side).step_by(q) {
            quarter(&mut v, w, x0, y0, q);
        }
    }
    v
}

fn quarter(v: &mut [f64], w: usize, x0: usize, y0: usize, size: usize) {
    if size < 2 {
        return;
    }
    let m = size / 2;
    let at = |x: usize, y: usize| y * w + x;
    let a = v[at(x0, y0)];
    let b = v[at(x0 + size, y0)];
    let c = v[at(x0 + size, y0 + size)];
    let d = v[at(x0, y0 + size)];
    v[at(x0 + m, y0)] = 0.5 * (a + b);
    v[at(x0 + size, y0 + m)] = 0.5 * (b + c);
    v[at(x0 + m, y0 + size)] = 0.5 * (c + d);
    v[at(x0, y0 + m)] = 0.5 * (d + a);
    v[at(x0 + m, y0 + m)] = 0.25 * (a + b + c + d);
    quarter(v, w, x0, y0, m);
    quarter(v, w, x0 + m, y0, m);
    quarter(v, w, x0, y0 + m, m);
    quarter(v, w, x0 + m, y0 + m, m);
}

/// Window of `side` nodes anchored at node `(i0, j0)`: zero outside, filled
/// from every `2^p`-th in-window node inside. Anchors past the far edge
/// repeat the last in-window anchor; a window covering the grid wraps.
pub fn local_filter_oracle(g: &GridField, i0: usize, j0: usize, side: usize, p: u32) -> Vec<f64> {
    let n = g.size();
    let q = 1usize << p;
    let pick = |o: usize| {
        if o < side {
            o
        } else if side == n {
            0
        } else {
            side - q
        }
    };
    let node = |a: usize, b: usize| ((j0 + b) % n) * n + (i0 + a) % n;
    let filled = midpoint_fill(side, p, |a, b| g.values()[node(pick(a), pick(b))]);
    let mut out = vec![0.0; n * n];
    for b in 0..side {
        for a in 0..side {
            out[node(a, b)] = filled[b * (side + 1) + a];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Double-double arithmetic

/// Unevaluated sum `hi + lo` with about 106 bits of precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::norm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        Dd::norm(q1, q2).add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::new(0.0);
        }
        let y = Dd::new(self.hi.sqrt());
        y.add(self.sub(y.mul(y)).div(y.mul(Dd::new(2.0))))
    }

    pub fn powi(self, k: u32) -> Dd {
        (0..k).fold(Dd::new(1.0), |acc, _| acc.mul(self))
    }

    pub fn exp(self) -> Dd {
        let k = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.mul(Dd::new(k)));
        // e^r = (e^{r/1024})^1024
        let s = Dd { hi: r.hi / 1024.0, lo: r.lo / 1024.0 };
        let mut term = Dd::new(1.0);
        let mut sum = Dd::new(1.0);
        for i in 1..=16 {
            term = term.mul(s).div(Dd::new(i as f64));
            sum = sum.add(term);
        }
        for _ in 0..10 {
            sum = sum.mul(sum);
        }
        let scale = 2f64.powi(k as i32);
        Dd { hi: sum.hi * scale, lo: sum.lo * scale }
    }

    pub fn max(self, o: Dd) -> Dd {
        if self.sub(o).hi >= 0.0 {
            self
        } else {
            o
        }
    }

    pub fn min(self, o: Dd) -> Dd {
        if self.sub(o).hi <= 0.0 {
            self
        } else {
            o
        }
    }
}

/// `|a − b| / |b|` with `b` in double-double.
pub fn rel_err(a: f64, b: Dd) -> f64 {
    Dd::new(a).sub(b).to_f64().abs() / b.to_f64().abs()
}

// ---------------------------------------------------------------------------
// Closed forms in double-double

/// Theory inputs as plain numbers: `(ν, λ1, G, C_L, C_I, N, c0, c*)`.
#[derive(Debug, Clone, Copy)]
pub struct DdConstants {
    pub nu: f64,
    pub lambda1: f64,
    pub grashof: f64,
    pub c_l: f64,
    pub c_i: f64,
    pub partition: usize,
    pub c0: f64,
    pub c_star: f64,
}

impl DdConstants {
    fn d(x: f64) -> Dd {
        Dd::new(x)
    }

    fn n2(&self) -> Dd {
        Dd::new((self.partition * self.partition) as f64)
    }

    fn cl4(&self) -> Dd {
        Dd::new(self.c_l).powi(4)
    }

    pub fn gamma(&self) -> Dd {
        let one = Dd::new(1.0);
        let num = one.sub(one.div(Self::d(self.c0).mul(self.n2())));
        let den = one.sub(one.div(self.n2()));
        Dd::new(0.5).mul(num.div(den).sub(one))
    }

    pub fn tau_q(&self, mu: f64) -> Dd {
        let ci = Self::d(self.c_i);
        let g2 = Self::d(self.grashof).powi(2);
        let pre = Dd::new(8.0).mul(ci).mul(ci).add(Dd::new(2.0).mul(self.cl4())).add(Dd::new(2.0).mul(ci));
        let growth = pre.mul(self.cl4().mul(g2.add(Dd::new(1.0))).exp());
        Dd::new(1.0).div(Dd::new(2.0).mul(Self::d(mu))).div(growth)
    }

    fn bracket(&self) -> Dd {
        let g2 = Self::d(self.grashof).powi(2);
        Dd::new(4.0).mul(Self::d(self.lambda1)).mul(self.cl4()).mul(Self::d(self.nu)).mul(g2).add(Self::d(self.c_star))
    }

    pub fn mu_min_stated(&self) -> Dd {
        let g2 = Self::d(self.grashof).powi(2);
        let floor = Self::d(self.nu).mul(Self::d(self.lambda1)).mul(g2);
        floor.max(Self::d(self.c0).mul(self.n2()).mul(self.bracket()))
    }

    /// Smallest `μ` meeting both the stated minimum and the decay condition.
    pub fn mu_min(&self) -> Dd {
        let c9 = Self::d(self.c0).mul(self.n2()).mul(self.n2()).mul(self.bracket());
        self.mu_min_stated().max(c9)
    }

    pub fn h_max(&self, mu: Dd) -> Dd {
        let nu = Self::d(self.nu);
        let ci = Self::d(self.c_i);
        let a = nu.mul(Self::d(self.lambda1).sqrt()).div(Dd::new(4.0).mul(ci).mul(mu));
        let b = nu.div(Dd::new(2.0).mul(ci).mul(ci).mul(mu)).sqrt();
        a.min(b)
    }

    pub fn envelope(&self, t: f64) -> Dd {
        let ng = Self::d(self.nu).mul(Self::d(self.grashof));
        let decay = Dd::new(-0.5).mul(Self::d(self.c_star)).mul(Self::d(t)).exp();
        self.cl4().exp().mul(ng).mul(ng).mul(decay)
    }
}
