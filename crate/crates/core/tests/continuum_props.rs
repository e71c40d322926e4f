use proptest::prelude::*;

use weylflow::continuum::{
    bisector_winding, half_plane_chern_half, local_index, predicted_flow, QuadraticWeylField, Root,
};
use weylflow::loops::{LoopShape, LoopSpec};
use weylflow::numerics::C64;

fn field(a: [f64; 2], b: [f64; 2]) -> QuadraticWeylField {
    QuadraticWeylField::new(C64::new(a[0], a[1]), C64::new(b[0], b[1])).unwrap()
}

fn roots() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    (
        prop::array::uniform2(-2.0f64..2.0),
        0.3f64..3.0,
        -3.2f64..3.2,
    )
        .prop_map(|(a, d, ang)| (a, [a[0] + d * ang.cos(), a[1] + d * ang.sin()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn local_indices_are_opposite_and_sum_to_zero((a, b) in roots()) {
        let f = field(a, b);
        let (p, m) = (local_index(&f, Root::Plus).unwrap(), local_index(&f, Root::Minus).unwrap());
        prop_assert_eq!((p, m), (1, -1));
    }

    #[test]
    fn bisector_winding_is_one_between_the_roots_only((a, b) in roots(), t in -1.9f64..1.9) {
        let f = field(a, b);
        let half = 0.5 * f.separation();
        let offset = t * half;
        prop_assume!((offset.abs() - half).abs() > 0.05 * half);
        let w = bisector_winding(&f, offset, 60.0 * (1.0 + f.separation()), 8000).unwrap();
        prop_assert_eq!(w, if offset.abs() < half { 1 } else { 0 });
    }

    #[test]
    fn predicted_flow_counts_enclosed_roots((a, b) in roots(), c in prop::array::uniform2(-3.0f64..3.0), r in 0.2f64..3.0) {
        let f = field(a, b);
        let dist = |p: [f64; 2]| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        prop_assume!((dist(a) - r).abs() > 0.05 && (dist(b) - r).abs() > 0.05);
        let spec = LoopSpec::new("c", LoopShape::Circle { center: c, radius: r }, 64);
        let expected = -(i64::from(dist(a) < r) - i64::from(dist(b) < r));
        prop_assert_eq!(predicted_flow(&f, &spec).unwrap(), expected);
    }

    #[test]
    fn half_plane_flux_is_scale_invariant(a in 0.2f64..3.0, s in 0.3f64..4.0, radius in 2.0f64..20.0) {
        let x = half_plane_chern_half(a, radius * a, 48).unwrap();
        let y = half_plane_chern_half(a * s, radius * a * s, 48).unwrap();
        prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
    }
}

#[test]
fn half_plane_flux_approaches_a_half() {
    // Disk of radius R in units of a carries (1 - 1/sqrt(1 + R^2)) / 2.
    for radius in [1.0, 5.0, 30.0] {
        let flux = half_plane_chern_half(1.0, radius, 240).unwrap();
        let disk = 0.5 * (1.0 - 1.0 / (1.0f64 + radius * radius).sqrt());
        assert!(
            (flux.abs() - disk).abs() < 2e-3,
            "radius {radius}: {flux} vs {disk}"
        );
    }
}
