use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weylflow::flow::{shift_level, spectral_flow_crossings, spectral_flow_exp_winding};
use weylflow::halfline::{basic_loop_family, GridRule};
use weylflow::profiles::ParameterLoop;

const GRID: GridRule = GridRule::Fixed {
    n_sites: 600,
    spacing: 0.05,
};

#[test]
fn basic_loop_flows_once_downward_for_any_boundary_angle() {
    for gamma in [-2.5, -0.7, 0.0, 1.1, 3.0] {
        let path = basic_loop_family(1.0, gamma, GRID, 0.9)
            .closed_path(0.0, std::f64::consts::TAU, 48, 512)
            .unwrap();
        assert_eq!(
            spectral_flow_crossings(&path).unwrap().flow,
            -1,
            "gamma {gamma}"
        );
        assert_eq!(
            spectral_flow_exp_winding(&path).unwrap().flow,
            -1,
            "gamma {gamma}"
        );
    }
}

#[test]
fn basic_loop_flow_is_the_same_at_every_level_in_the_gap() {
    let path = basic_loop_family(1.0, 0.4, GRID, 0.95)
        .closed_path(0.0, std::f64::consts::TAU, 48, 512)
        .unwrap();
    for mu in [-0.8, -0.3, 0.5] {
        let shifted = shift_level(&path, mu).unwrap();
        assert_eq!(
            spectral_flow_crossings(&shifted).unwrap().flow,
            -1,
            "mu {mu}"
        );
    }
}

#[test]
fn random_parameter_loops_flow_by_minus_the_relative_winding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = GridRule::MassScaled {
        n_sites: 600,
        mass_spacing: 0.05,
        max_spacing: 0.1,
    };
    for (wt, wg) in [(1, 0), (0, 1), (2, -1), (1, 1)] {
        let l = ParameterLoop::random(&mut rng, 0.5, wt, wg, 2);
        let n = l.samples_for(0.2, 64);
        let path = l
            .family(grid, 0.9)
            .unwrap()
            .closed_path(0.0, 1.0, n, 1024)
            .unwrap();
        let wind = l.relative_winding().unwrap();
        assert_eq!(wind, wt - wg);
        assert_eq!(spectral_flow_crossings(&path).unwrap().flow, -wind, "{l:?}");
        assert_eq!(
            spectral_flow_exp_winding(&path).unwrap().flow,
            -wind,
            "{l:?}"
        );
    }
}
