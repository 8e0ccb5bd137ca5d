//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset.
//!
//! Desk-scale spin-ups are cached under the cargo target tmp dir, keyed by
//! everything in the config that affects the reference flow.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::probes::{interpolant_constants, measured_order, unforced_decay_error};
use common::{local_filter_oracle, midpoint_fill, rel_err, rel_max_diff, series_on_grid, DdConstants, Multiplier};
use mobile_nudging::harness::config::override_key;
use mobile_nudging::harness::sweep::windows_per_cycle;
use mobile_nudging::harness::{Checkpoint, ErrorRecord, SimConfig, Simulation};
use mobile_nudging::integrator::Startup;
use mobile_nudging::movement::observation_budget;
use mobile_nudging::nudging::{kp_average, localize_and_filter, observed_nodes, NodeBlock};
use mobile_nudging::spectral::{h1_seminorm, l2_norm, Axis};
use mobile_nudging::testing::random_band_limited;
use mobile_nudging::theory::{
    check_conditions, decay_envelope, gamma, tau_q, theorem_bounds, Constants, CyclingInputs,
};
use mobile_nudging::{GridField, SpectralField, SpectralOps, Window};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// ---------------------------------------------------------------------------
// 1. spectral operators

fn c1_spectral() -> Outcome {
    let start = Instant::now();
    let n = 64;
    let ops = SpectralOps::new(n).unwrap();
    let mut single = 0.0f64;
    for &(kx, ky) in &[(1i64, 0i64), (0, 5), (3, -7), (11, 11), (-21, 6), (21, -21)] {
        let mut w = SpectralField::zeros(n);
        w.set_pair(kx, ky, Complex64::new(0.5, 0.0));
        let k2 = (kx * kx + ky * ky) as f64;
        let arg = |x: f64, y: f64| kx as f64 * x + ky as f64 * y;
        let psi = ops.poisson_solve(&w).unwrap();
        let back = ops.laplacian(&psi).scaled(-1.0);
        single = single.max(back.difference(&w).max_abs() / w.max_abs());
        let psi_g = GridField::from_fn(n, |x, y| arg(x, y).cos() / k2);
        single = single.max(rel_max_diff(ops.to_grid(&psi).unwrap().values(), psi_g.values()));
        let dx = GridField::from_fn(n, |x, y| -(kx as f64) * arg(x, y).sin());
        let dy = GridField::from_fn(n, |x, y| -(ky as f64) * arg(x, y).sin());
        single = single.max(rel_max_diff(ops.to_grid(&ops.derivative(&w, Axis::X)).unwrap().values(), dx.values()));
        single = single.max(rel_max_diff(ops.to_grid(&ops.derivative(&w, Axis::Y)).unwrap().values(), dy.values()));
        let (u, v) = ops.velocity(&psi).unwrap();
        let eu = GridField::from_fn(n, |x, y| ky as f64 * arg(x, y).sin() / k2);
        let ev = GridField::from_fn(n, |x, y| -(kx as f64) * arg(x, y).sin() / k2);
        single = single.max(rel_max_diff(u.values(), eu.values()));
        single = single.max(rel_max_diff(v.values(), ev.values()));
        let mut div = ops.derivative(&ops.to_spectral(&u).unwrap(), Axis::X);
        div.axpy(1.0, &ops.derivative(&ops.to_spectral(&v).unwrap(), Axis::Y));
        single = single.max(div.max_abs() / w.max_abs());
    }

    let mut random = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let w = random_band_limited(&ops, &mut rng, 21);
        let psi = ops.poisson_solve(&w).unwrap();
        let back = ops.laplacian(&psi).scaled(-1.0);
        random = random.max(back.difference(&w).max_abs() / w.max_abs());
        random = random
            .max(rel_max_diff(ops.to_grid(&psi).unwrap().values(), &series_on_grid(&w, Multiplier::InvNegLaplacian)));
        for (axis, m) in [(Axis::X, Multiplier::Dx), (Axis::Y, Multiplier::Dy)] {
            let d = ops.to_grid(&ops.derivative(&w, axis)).unwrap();
            random = random.max(rel_max_diff(d.values(), &series_on_grid(&w, m)));
        }
        let (u, v) = ops.velocity(&psi).unwrap();
        let mut div = ops.derivative(&ops.to_spectral(&u).unwrap(), Axis::X);
        div.axpy(1.0, &ops.derivative(&ops.to_spectral(&v).unwrap(), Axis::Y));
        random = random.max(div.max_abs() / w.max_abs());
    }
    let took = start.elapsed();
    check(
        single <= 1e-12 && random <= 1e-10 && took < Duration::from_secs(5),
        format!("single modes {single:.1e}, random fields {random:.1e}, {}", secs(took)),
    )
}

// ---------------------------------------------------------------------------
// 2. enstrophy flux

fn c2_flux() -> Outcome {
    let ops = SpectralOps::new(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let w = random_band_limited(&ops, &mut rng, 21);
        let psi = ops.poisson_solve(&w).unwrap();
        let a = ops.advect(&w, &psi).unwrap();
        let flux: f64 = a.coeffs().iter().zip(w.coeffs()).map(|(x, y)| (x * y.conj()).re).sum::<f64>() * 4.0 * PI * PI;
        worst = worst.max(flux.abs() / (l2_norm(&w).powi(2) * h1_seminorm(&psi)));
    }
    check(worst <= 1e-10, format!("max ratio {worst:.1e} over 50 fields"))
}

// ---------------------------------------------------------------------------
// 3. integrator

fn c3_integrator() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut decay = 0.0f64;
    for _ in 0..50 {
        let (kx, ky) = loop {
            let k = (rng.gen_range(-10i64..=10), rng.gen_range(-10i64..=10));
            if k != (0, 0) {
                break k;
            }
        };
        let c = Complex64::new(rng.gen_range(0.1..1.0), rng.gen_range(-1.0..1.0));
        let nu = rng.gen_range(1e-4..0.1);
        let dt = rng.gen_range(1e-4..0.05);
        decay = decay.max(unforced_decay_error(kx, ky, c, nu, dt, 40, Startup::ExponentialRk4));
    }
    let order = measured_order(Startup::ExponentialRk4);
    let took = start.elapsed();
    check(
        decay <= 1e-12 && (order - 3.0).abs() <= 0.2 && took < Duration::from_secs(30),
        format!("decay {decay:.1e}, order {order:.3}, {}", secs(took)),
    )
}

// ---------------------------------------------------------------------------
// 4. K_p averaging

fn dyadic(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-(1i64 << 20)..=(1i64 << 20)) as f64 / 1024.0
}

fn golden_cell() -> bool {
    let (a, b, c, d) = (1.0, 3.0, 7.0, 5.0);
    let mut block = NodeBlock::new(3, 3);
    block.set(0, 0, a);
    block.set(2, 0, b);
    block.set(2, 2, c);
    block.set(0, 2, d);
    let out = kp_average(&block, 1).unwrap();
    let expect = [[a, (a + b) / 2.0, b], [(a + d) / 2.0, (a + b + c + d) / 4.0, (b + c) / 2.0], [d, (c + d) / 2.0, c]];
    (0..3).all(|y| (0..3).all(|x| out.get(x, y) == expect[y][x]))
}

fn c4_kp() -> Outcome {
    let n = 64;
    let dx = 2.0 * PI / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for p in 1..=4u32 {
        let q = 1usize << p;
        for k in 0..100 {
            // windowed filter against the brute-force oracle
            let side = if k == 0 { n } else { q * rng.gen_range(1..=n / q) };
            let (i0, j0) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let g = GridField::from_values(n, (0..n * n).map(|_| dyadic(&mut rng)).collect()).unwrap();
            let w = Window::new((i0 as f64 * dx, j0 as f64 * dx), side as f64 * dx);
            let got = localize_and_filter(&g, &w, p).unwrap();
            let expect = local_filter_oracle(&g, i0, j0, side, p);
            if got.values().iter().zip(&expect).any(|(a, b)| a.to_bits() != b.to_bits()) {
                mismatches += 1;
            }
            // bare block average against recursive quartering
            let mut block = NodeBlock::new(q + 1, q + 1);
            for v in &mut block.values {
                *v = dyadic(&mut rng);
            }
            let got = kp_average(&block, p).unwrap();
            let cell = midpoint_fill(q, p, |a, b| block.get(a, b));
            if (0..=q).any(|b| (0..=q).any(|a| got.get(a, b).to_bits() != cell[b * (q + 1) + a].to_bits())) {
                mismatches += 1;
            }
        }
    }
    let golden = golden_cell();
    check(
        mismatches == 0 && golden,
        format!(
            "{mismatches} mismatches in 400 windows and 400 blocks, golden cell {}",
            if golden { "ok" } else { "wrong" }
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. interpolant constants

fn c5_interpolant() -> Outcome {
    let hs = [PI / 16.0, PI / 32.0, PI / 64.0];
    let (b, p): (Vec<f64>, Vec<f64>) = hs.iter().map(|&h| interpolant_constants(256, h, 100, 5)).unzip();
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / median(v.to_vec());
    let finite = b.iter().chain(&p).all(|x| x.is_finite() && *x > 0.0);
    let (sb, sp) = (spread(&b), spread(&p));
    check(
        finite && sb < 2.0 && sp < 2.0,
        format!("boundedness {b:.3?} (max/median {sb:.3}), poincare {p:.3?} (max/median {sp:.3})"),
    )
}

// ---------------------------------------------------------------------------
// desk-scale runs

fn desk(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::desk();
    cfg.forcing.seed = seed;
    cfg.run.spinup_dt = Some(5e-3);
    cfg
}

fn cache_path(cfg: &SimConfig) -> PathBuf {
    let mut key = cfg.clone();
    key.assimilation = SimConfig::desk().assimilation;
    key.run.t_end = 0.0;
    key.run.output_stride = 1;
    let mut h = DefaultHasher::new();
    key.to_toml_string().hash(&mut h);
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("spinup-{:016x}.ckpt", h.finish()))
}

fn spun_up(cfg: &SimConfig) -> Checkpoint {
    let path = cache_path(cfg);
    if let Ok(ck) = Checkpoint::load(&path) {
        return ck;
    }
    let start = Instant::now();
    let ck = Simulation::new(cfg).unwrap().spinup().map_err(|f| f.error).unwrap();
    println!("  spin-up seed {} took {}", cfg.forcing.seed, secs(start.elapsed()));
    ck.save(&path).unwrap();
    ck
}

struct Run {
    records: Vec<ErrorRecord>,
    time_to_tolerance: Option<f64>,
    elapsed: Duration,
}

fn twin(cfg: &SimConfig, ck: &Checkpoint) -> Run {
    let start = Instant::now();
    let mut records = Vec::new();
    let out = Simulation::new(cfg)
        .unwrap()
        .run_twin(ck, &mut |r| {
            records.push(r.clone());
            Ok(())
        })
        .unwrap();
    Run { records, time_to_tolerance: out.time_to_tolerance, elapsed: start.elapsed() }
}

fn c6_spectral_sync() -> Outcome {
    let cfg = desk(1);
    let ck = spun_up(&cfg);
    let run = twin(&cfg, &ck);
    let last = run.records.last().unwrap();
    // below 1e-13 the error is round-off and free to wander
    let rises: Vec<(f64, f64, f64)> = run
        .records
        .windows(2)
        .filter(|p| p[0].t >= 2.0 - 1e-9)
        .filter(|p| p[1].rel_l2_error > p[0].rel_l2_error && p[1].rel_l2_error >= 1e-13)
        .map(|p| (p[1].t, p[0].rel_l2_error, p[1].rel_l2_error))
        .collect();
    check(
        (last.t - 20.0).abs() < 1e-9
            && last.rel_l2_error < 1e-8
            && rises.is_empty()
            && run.elapsed < Duration::from_secs(300),
        format!(
            "error {:.2e} at t = {:.1}, {} increases after t = 2{}, twin run {}",
            last.rel_l2_error,
            last.t,
            rises.len(),
            rises.first().map_or(String::new(), |r| format!(" (first {r:.3?})")),
            secs(run.elapsed)
        ),
    )
}

const SCHEMES: [(&str, &str); 5] = [
    ("dominant", r#"{ kind = "dominant", period = 0.02 }"#),
    ("random", r#"{ kind = "random", period = 0.02 }"#),
    ("continuous", r#"{ kind = "periodic", path = "continuous", frequency = 1.0 }"#),
    ("dominant/0.25", r#"{ kind = "dominant", period = 0.02, delay_frac = 0.25 }"#),
    ("dominant/0.5", r#"{ kind = "dominant", period = 0.02, delay_frac = 0.5 }"#),
];

/// Time to 1e-6 for each scheme and seed, `None` when not reached by t = 40.
struct SchemeTable {
    times: Vec<Vec<Option<f64>>>,
    slowest: Duration,
}

impl SchemeTable {
    fn median(&self, scheme: usize) -> f64 {
        median(self.times[scheme].iter().map(|t| t.unwrap_or(f64::INFINITY)).collect())
    }

    fn describe(&self, scheme: usize) -> String {
        let ts: Vec<String> =
            self.times[scheme].iter().map(|t| t.map_or("never".to_string(), |t| format!("{t:.2}"))).collect();
        format!("{} [{}]", SCHEMES[scheme].0, ts.join(", "))
    }
}

fn scheme_table() -> SchemeTable {
    let mut times = vec![Vec::new(); SCHEMES.len()];
    let mut slowest = Duration::ZERO;
    for seed in 1..=3u64 {
        let base = desk(seed);
        let ck = spun_up(&base);
        for (i, (_, scheme)) in SCHEMES.iter().enumerate() {
            let mut cfg = override_key(&base, "assimilation.nudge", r#"{ kind = "local", p = 1 }"#).unwrap();
            cfg = override_key(&cfg, "assimilation.scheme", scheme).unwrap();
            if scheme.contains("random") {
                cfg = override_key(&cfg, "assimilation.scheme.seed", &seed.to_string()).unwrap();
            }
            cfg.run.t_end = 40.0;
            cfg.run.output_stride = 1000;
            cfg.run.stop_at_tolerance = true;
            let run = twin(&cfg, &ck);
            slowest = slowest.max(run.elapsed);
            times[i].push(run.time_to_tolerance);
        }
    }
    SchemeTable { times, slowest }
}

fn c7_ordering(t: &SchemeTable) -> Outcome {
    let (dom, rnd, cont) = (t.median(0), t.median(1), t.median(2));
    check(
        dom.is_finite() && dom <= rnd && dom <= cont && t.slowest < Duration::from_secs(600),
        format!(
            "medians dominant {dom:.2}, random {rnd:.2}, continuous {cont:.2}; {}; {}; {}; slowest run {}",
            t.describe(0),
            t.describe(1),
            t.describe(2),
            secs(t.slowest)
        ),
    )
}

fn c10_delay(t: &SchemeTable) -> Outcome {
    let idx = [0, 3, 4];
    let all_reach = idx.iter().all(|&i| t.times[i].iter().all(Option::is_some));
    let med: Vec<f64> = idx.iter().map(|&i| t.median(i)).collect();
    let monotone = med.windows(2).all(|m| m[0] <= m[1]);
    let runs: Vec<String> = idx.iter().map(|&i| t.describe(i)).collect();
    check(all_reach && monotone, format!("medians {med:.2?}; {}", runs.join("; ")))
}

// ---------------------------------------------------------------------------
// 8. resonance

fn c8_resonance() -> Outcome {
    let start = Instant::now();
    let base = override_key(
        &SimConfig::desk(),
        "assimilation.scheme",
        r#"{ kind = "periodic", path = "discontinuous", frequency = 40.0 }"#,
    )
    .unwrap();
    let coarse = windows_per_cycle(&base).unwrap();
    let mut fine_cfg = base.clone();
    fine_cfg.dt = base.dt / 10.0;
    let fine = windows_per_cycle(&fine_cfg).unwrap();
    let took = start.elapsed();
    check(
        coarse < 16 && fine == 16 && took < Duration::from_secs(60),
        format!("{coarse} windows per cycle at dt = 1e-3, {fine} at dt = 1e-4, {}", secs(took)),
    )
}

// ---------------------------------------------------------------------------
// 9. theory calculator

fn c9_theory() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut violated = Vec::new();
    for _ in 0..500 {
        let c = Constants {
            nu: rng.gen_range(1e-4..0.1),
            lambda1: 1.0,
            grashof: rng.gen_range(0.01..3.0),
            c_l: rng.gen_range(0.5..1.5),
            c_i: rng.gen_range(0.5..2.0),
            partition: [2usize, 4, 8][rng.gen_range(0..3)],
            c0: rng.gen_range(1.5..10.0),
            c_star: rng.gen_range(0.01..1.0),
        };
        let o = DdConstants {
            nu: c.nu,
            lambda1: c.lambda1,
            grashof: c.grashof,
            c_l: c.c_l,
            c_i: c.c_i,
            partition: c.partition,
            c0: c.c0,
            c_star: c.c_star,
        };
        let mu = rng.gen_range(1.0..1e4);
        let t = rng.gen_range(0.0..100.0);
        let inputs = CyclingInputs::defaults(&c);
        let b = theorem_bounds(&c, &inputs).unwrap();
        for e in [
            rel_err(gamma(c.partition, c.c0).unwrap(), o.gamma()),
            rel_err(tau_q(&c, mu), o.tau_q(mu)),
            rel_err(b.mu_min_stated, o.mu_min_stated()),
            rel_err(b.mu_min, o.mu_min()),
            rel_err(b.h_max_stated, o.h_max(o.mu_min_stated())),
            rel_err(b.h_max, o.h_max(o.mu_min())),
            rel_err(decay_envelope(t, &c), o.envelope(t)),
        ] {
            worst = worst.max(e);
        }
        for cond in check_conditions(&b.params(c), &inputs).unwrap() {
            if ["C1", "C2", "C4", "C8", "C9"].contains(&cond.name) && !cond.holds {
                violated.push(cond.name);
            }
        }
    }
    let budget = observation_budget(observed_nodes(128, 1), 32 * 32, 20);
    check(
        worst <= 1e-12 && violated.is_empty() && budget == 4147.2,
        format!("max relative error {worst:.1e}, violated {violated:?}, budget {budget}"),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let on = |k: usize| wanted.is_empty() || wanted.contains(&k);

    let mut table: Option<SchemeTable> = None;
    let mut failed = 0;
    for k in 1..=10 {
        if !on(k) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(|| match k {
            1 => c1_spectral(),
            2 => c2_flux(),
            3 => c3_integrator(),
            4 => c4_kp(),
            5 => c5_interpolant(),
            6 => c6_spectral_sync(),
            7 => c7_ordering(table.get_or_insert_with(scheme_table)),
            8 => c8_resonance(),
            9 => c9_theory(),
            10 => c10_delay(table.get_or_insert_with(scheme_table)),
            _ => unreachable!(),
        }))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(d) => println!("criterion {k:>2}: PASS  {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {k:>2}: FAIL  {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
