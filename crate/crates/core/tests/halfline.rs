use std::f64::consts::PI;

use weylflow::halfline::{
    bound_state, discretize, essential_spectrum, resolvent_kernel, DiracParams, GaugeTwist,
    HalfLineGrid,
};
use weylflow::numerics::{eigh_window, C64};

// Rotated operator at phi = 0 is [[m, -d/dz], [d/dz, -m]], Dirichlet on the
// second component. The kernel is kept as printed; only its first column is
// a solution of the equation with the right jump, so that is what these
// tests check.
fn residual(m: f64, lambda: C64, zp: f64, z: f64) -> [C64; 2] {
    let d = 1e-5;
    let k = |x: f64| {
        let k = resolvent_kernel(m, x, zp, lambda).unwrap();
        [k[0][0], k[1][0]]
    };
    let (kp, km, k0) = (k(z + d), k(z - d), k(z));
    let dk = |r: usize| (kp[r] - km[r]) / (2.0 * d);
    [(m - lambda) * k0[0] - dk(1), dk(0) - (m + lambda) * k0[1]]
}

#[test]
fn resolvent_kernel_first_column_solves_the_equation_off_the_diagonal() {
    let m = 1.3;
    for lambda in [C64::new(0.2, 0.0), C64::new(0.5, 0.7), C64::new(-2.0, 0.4)] {
        for (z, zp) in [(0.4, 1.1), (2.0, 0.3), (0.05, 0.9)] {
            let r = residual(m, lambda, zp, z);
            assert!(
                r[0].norm() + r[1].norm() < 1e-6,
                "lambda {lambda}, z {z}, z' {zp}: {r:?}"
            );
        }
    }
}

#[test]
fn resolvent_kernel_first_column_has_unit_jump_and_decays() {
    let m = 0.8;
    let lambda = C64::new(0.3, 0.2);
    let zp = 0.7;
    let (above, below) = (
        resolvent_kernel(m, zp + 1e-9, zp, lambda).unwrap(),
        resolvent_kernel(m, zp - 1e-9, zp, lambda).unwrap(),
    );
    // (H - lambda) K = delta: the lower entry jumps by -1, the upper is continuous.
    assert!((above[1][0] - below[1][0] - C64::new(-1.0, 0.0)).norm() < 1e-6);
    assert!((above[0][0] - below[0][0]).norm() < 1e-6);
    let far = resolvent_kernel(m, 60.0, zp, lambda).unwrap();
    assert!(far[0][0].norm() + far[1][0].norm() < 1e-10);
}

#[test]
fn kernel_rejects_essential_spectrum() {
    assert!(resolvent_kernel(1.0, 0.1, 0.2, C64::new(1.5, 0.0)).is_err());
    assert!(resolvent_kernel(1.0, -0.1, 0.2, C64::new(0.5, 0.0)).is_err());
}

#[test]
fn discrete_spectrum_in_the_gap_matches_the_closed_form() {
    let grid = HalfLineGrid::new(3000, 0.01).unwrap();
    for (m, theta, gamma) in [
        (1.0, 0.7, 0.0),
        (2.0, 2.4, 0.3),
        (0.7, -1.0, 0.5),
        (1.0, -0.5, 0.0),
    ] {
        let p = DiracParams::new(m, theta, gamma).unwrap();
        let h = discretize(&p, &grid, None, None).unwrap();
        let sys = eigh_window(&h, -0.95 * m, 0.95 * m).unwrap();
        // Only near-edge states count; a far-end mode may also appear.
        let near: Vec<f64> = sys
            .values
            .iter()
            .zip(&sys.vectors)
            .filter(|(_, v)| v[..200].iter().map(|z| z.norm_sqr()).sum::<f64>() > 0.5)
            .map(|(e, _)| *e)
            .collect();
        match bound_state(&p).unwrap() {
            Some(b) if b.energy.abs() < 0.95 * m => {
                assert_eq!(near.len(), 1, "{p:?}");
                assert!(
                    (near[0] - b.energy).abs() < 1e-2 * m,
                    "{p:?}: {} vs {}",
                    near[0],
                    b.energy
                );
            }
            Some(_) => {}
            None => assert!(near.is_empty(), "{p:?}: {near:?}"),
        }
    }
}

#[test]
fn essential_spectrum_ignores_both_angles() {
    for theta in [0.0, 1.0, PI] {
        for gamma in [-2.0, 0.0, 0.4] {
            let e = essential_spectrum(&DiracParams::new(1.7, theta, gamma).unwrap());
            assert_eq!((e.lower_edge, e.upper_edge), (-1.7, 1.7));
        }
    }
    assert!(essential_spectrum(&DiracParams::new(0.0, 0.0, 0.0).unwrap()).is_gapless());
}

#[test]
fn constant_twist_leaves_the_spectrum_unchanged() {
    let grid = HalfLineGrid::new(400, 0.02).unwrap();
    let p = DiracParams::new(1.0, 0.9, 0.2).unwrap();
    let a = discretize(&p, &grid, None, None).unwrap();
    let b = discretize(&p, &grid, Some(&GaugeTwist::Constant(2.3)), None).unwrap();
    let (ea, eb) = (
        eigh_window(&a, -3.0, 3.0).unwrap(),
        eigh_window(&b, -3.0, 3.0).unwrap(),
    );
    assert_eq!(ea.len(), eb.len());
    for (x, y) in ea.values.iter().zip(&eb.values) {
        assert!((x - y).abs() < 1e-9);
    }
}
