mod common;

use common::probes::{manufactured_error, measured_order, unforced_decay_error};
use mobile_nudging::integrator::Startup;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn default_startup_is_third_order() {
    let p = measured_order(Startup::ExponentialRk4);
    assert!((p - 3.0).abs() < 0.2, "order {p}");
}

#[test]
fn euler_ab2_startup_is_second_order() {
    let p = measured_order(Startup::EulerAb2);
    assert!((p - 2.0).abs() < 0.3, "order {p}");
}

#[test]
fn manufactured_solution_converges() {
    assert!(manufactured_error(0.005, Startup::ExponentialRk4) < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unforced_decay_is_exact(
        kx in -10i64..=10, ky in -10i64..=10,
        re in -1.0f64..1.0, im in -1.0f64..1.0,
        nu in 1e-4f64..0.1, dt in 1e-4f64..0.05,
        euler in any::<bool>(),
    ) {
        prop_assume!((kx, ky) != (0, 0));
        let startup = if euler { Startup::EulerAb2 } else { Startup::ExponentialRk4 };
        let c = Complex64::new(re, if (kx, ky) == (-kx, -ky) { 0.0 } else { im });
        prop_assume!(c.norm() > 1e-6);
        prop_assert!(unforced_decay_error(kx, ky, c, nu, dt, 20, startup) <= 1e-12);
    }
}
