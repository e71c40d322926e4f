use std::f64::consts::PI;

use proptest::prelude::*;

use weylflow::flow::{
    shift_level, spectral_flow_crossings, spectral_flow_exp_winding, winding_number, ComplexLoop,
    OperatorPath, PathSample,
};
use weylflow::numerics::{HermitianMatrix, C64};
use weylflow::Error;

fn diag_sample(param: f64, vals: &[f64], window: (f64, f64)) -> PathSample {
    let n = vals.len();
    let m = HermitianMatrix::from_fn(n, |i, j| {
        if i == j {
            C64::new(vals[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .unwrap();
    PathSample {
        param,
        matrix: m,
        window,
    }
}

// A branch falling through the window k times per loop, re-entering from
// the top; spectator far outside the window.
fn sawtooth_loop(k: i64, phase: f64, n: usize) -> OperatorPath {
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let s = (k as f64 * t + phase).rem_euclid(1.0);
            let v = 1.2 - 2.4 * s;
            let v = if v.abs() < 1.0 { v } else { 3.0 };
            diag_sample(t, &[v, -4.0], (-1.0, 1.0))
        })
        .collect();
    OperatorPath::closed(samples, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn winding_is_stable_under_radial_and_phase_wobble(
        k in -4i64..=4,
        r in prop::collection::vec(-0.4f64..0.4, 3),
        p in prop::collection::vec(-0.3f64..0.3, 3),
    ) {
        let l = ComplexLoop::from_fn(256, |t| {
            let rad = 1.0 + r[0] * t.cos() + r[1] * (2.0 * t).sin() + r[2] * (3.0 * t).cos();
            let ph = k as f64 * t + p[0] * t.sin() + p[1] * (2.0 * t).cos() + p[2] * (3.0 * t).sin();
            C64::from_polar(rad, ph)
        });
        prop_assert_eq!(winding_number(&l).unwrap(), k);
    }

    #[test]
    fn sawtooth_flow_is_minus_the_number_of_falls(
        k in -3i64..=3,
        phase in 0.05f64..0.95,
    ) {
        let path = sawtooth_loop(k, phase, 48 * k.unsigned_abs().max(1) as usize);
        let a = spectral_flow_crossings(&path).unwrap().flow;
        let b = spectral_flow_exp_winding(&path).unwrap().flow;
        prop_assert_eq!(a, -k);
        prop_assert_eq!(b, -k);
    }

    #[test]
    fn open_path_flow_counts_net_sign_change(
        amp in 0.2f64..0.9,
        omega in 0.5f64..12.0,
        phi in -PI..PI,
    ) {
        let n = 400;
        let v = |t: f64| amp * (omega * t + phi).sin();
        prop_assume!((0..=n).all(|i| v(i as f64 / n as f64).abs() > 1e-9));
        let samples = (0..=n).map(|i| {
            let t = i as f64 / n as f64;
            diag_sample(t, &[v(t), 5.0], (-1.0, 1.0))
        }).collect();
        let path = OperatorPath::open(samples).unwrap();
        let expected = i64::from(v(1.0) > 0.0) - i64::from(v(0.0) > 0.0);
        prop_assert_eq!(spectral_flow_crossings(&path).unwrap().flow, expected);
    }

    #[test]
    fn level_shift_inside_every_window_keeps_flow(k in 1i64..=2, mu in -0.9f64..0.9) {
        let path = sawtooth_loop(k, 0.3, 96);
        let shifted = shift_level(&path, mu).unwrap();
        prop_assert_eq!(spectral_flow_crossings(&shifted).unwrap().flow, -k);
        prop_assert_eq!(spectral_flow_exp_winding(&shifted).unwrap().flow, -k);
    }
}

#[test]
fn level_outside_a_window_is_not_fredholm() {
    let path = sawtooth_loop(1, 0.3, 32);
    assert!(matches!(
        shift_level(&path, 1.0),
        Err(Error::NonFredholm { .. })
    ));
    assert!(matches!(
        shift_level(&path, -1.5),
        Err(Error::NonFredholm { .. })
    ));
}
