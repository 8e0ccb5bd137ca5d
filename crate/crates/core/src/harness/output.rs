//! CSV and key=value writers.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::harness::config::SimConfig;
use crate::harness::twin::ErrorRecord;
use crate::movement::SchemeKind;
use crate::nudging::NudgeKind;
use crate::spectral::GridField;
use crate::theory::{self, CyclingInputs, TheoryParams};

pub const CSV_HEADER: &str = "t,rel_l2_error,window_index,anchor_x,anchor_y,phase,local_ratio,dirichlet_q,scenario";

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn format_record(r: &ErrorRecord) -> String {
    let (index, ax, ay) = match &r.window {
        Some(w) => (w.index.map(|i| i.to_string()).unwrap_or_default(), fmt_f64(w.anchor.0), fmt_f64(w.anchor.1)),
        None => Default::default(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_f64(r.t),
        fmt_f64(r.rel_l2_error),
        index,
        ax,
        ay,
        r.phase.as_str(),
        fmt_opt(r.local_ratio),
        fmt_opt(r.dirichlet_q),
        r.scenario.code()
    )
}

/// Streams [`ErrorRecord`]s as CSV rows under [`CSV_HEADER`].
pub struct RecordWriter<W: Write> {
    out: W,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(RecordWriter { out })
    }

    pub fn write(&mut self, r: &ErrorRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", format_record(r))
    }

    pub fn into_inner(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Nodal dump `x,y,omega`, x varying fastest.
pub fn write_grid_csv(g: &GridField, mut out: impl Write) -> std::io::Result<()> {
    let n = g.size();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    writeln!(out, "x,y,omega")?;
    for j in 0..n {
        for i in 0..n {
            writeln!(out, "{},{},{}", fmt_f64(i as f64 * h), fmt_f64(j as f64 * h), fmt_f64(g.get(i, j)))?;
        }
    }
    out.flush()
}

/// Observation spacing implied by the nudging kind.
pub fn observation_spacing(cfg: &SimConfig) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    match cfg.nudge_spec().kind {
        NudgeKind::LocalFiltered { p } => two_pi / cfg.grid as f64 * (1u64 << p) as f64,
        NudgeKind::SpectralProjection { modes } => two_pi / modes as f64,
        NudgeKind::VolumeElements { h } => h,
    }
}

/// Time to visit every window once under the configured scheme, where
/// that is defined.
pub fn cycling_time(cfg: &SimConfig) -> Option<f64> {
    let n2 = (cfg.assimilation.partition as f64).powi(2);
    let kind = match cfg.scheme_spec().kind {
        SchemeKind::Hybrid { then, .. } => *then,
        k => k,
    };
    match kind {
        SchemeKind::Periodic { frequency, .. } => Some(1.0 / frequency),
        SchemeKind::Dominant { period, .. } | SchemeKind::Random { period, .. } => Some(n2 * period),
        _ => None,
    }
}

/// Theory report for a configuration, one `key=value` per line.
pub fn bounds_report(cfg: &SimConfig) -> Result<String> {
    let c = cfg.theory_constants();
    let mut inputs = CyclingInputs::defaults(&c);
    inputs.c_psi = cfg.theory.c_psi;
    let b = theory::theorem_bounds(&c, &inputs)?;
    let gamma = theory::gamma(c.partition, c.c0)?;
    let mu = cfg.assimilation.mu;
    let h = observation_spacing(cfg);
    let tau_c = cycling_time(cfg).unwrap_or(b.tau_c_max);
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        writeln!(s, "{k}={v}").expect("write to string");
    };
    kv("grashof_trad", fmt_f64(cfg.forcing.grashof_trad));
    kv("grashof", fmt_f64(c.grashof));
    kv("gamma", fmt_f64(gamma));
    kv("mu_min_stated", fmt_f64(b.mu_min_stated));
    kv("h_max_stated", fmt_f64(b.h_max_stated));
    kv("mu_min", fmt_f64(b.mu_min));
    kv("h_max", fmt_f64(b.h_max));
    kv("tau_c_max", fmt_f64(b.tau_c_max));
    kv("decay_envelope_t0", fmt_f64(theory::decay_envelope(0.0, &c)));
    kv("mu", fmt_f64(mu));
    kv("h", fmt_f64(h));
    kv("tau_c", fmt_f64(tau_c));
    if mu > 0.0 {
        kv("tau_q", fmt_f64(theory::tau_q(&c, mu)));
        let report = theory::check_conditions(&TheoryParams { constants: c, mu, h, tau_c }, &inputs)?;
        for cond in report {
            let key = cond.name.to_lowercase();
            kv(&format!("{key}.lhs"), fmt_f64(cond.lhs));
            kv(&format!("{key}.rhs"), fmt_f64(cond.rhs));
            kv(&format!("{key}.holds"), cond.holds.to_string());
        }
    }
    Ok(s)
}
