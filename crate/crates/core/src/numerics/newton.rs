use crate::error::{Error, Result};

/// Newton iteration for a root of `f: R^2 -> R^2` with a central-difference
/// Jacobian. Succeeds once `|f| <= 1e-10`.
pub fn newton_refine_2d<F>(f: F, seed: [f64; 2], max_iter: usize) -> Result<[f64; 2]>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let mut x = seed;
    for _ in 0..=max_iter {
        let fx = f(x);
        if !fx[0].is_finite() || !fx[1].is_finite() {
            return Err(Error::NoConvergence(format!(
                "non-finite residual at {x:?}"
            )));
        }
        if fx[0].hypot(fx[1]) <= 1e-10 {
            return Ok(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let h = 1e-6 * x[c].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (f(xp), f(xm));
            for r in 0..2 {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let size = jac.iter().flatten().map(|v| v * v).sum::<f64>();
        if det.abs() <= 1e-14 * size.max(1e-300) {
            return Err(Error::SingularJacobian { x: x[0], y: x[1] });
        }
        let dx = (jac[1][1] * fx[0] - jac[0][1] * fx[1]) / det;
        let dy = (jac[0][0] * fx[1] - jac[1][0] * fx[0]) / det;
        x = [x[0] - dx, x[1] - dy];
    }
    Err(Error::NoConvergence(format!(
        "Newton did not reach 1e-10 in {max_iter} steps from {seed:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_circle_line_intersection() {
        let root = newton_refine_2d(|[x, y]| [x * x + y * y - 1.0, x - y], [1.0, 0.2], 50).unwrap();
        let r = 0.5f64.sqrt();
        assert!((root[0] - r).abs() < 1e-9 && (root[1] - r).abs() < 1e-9);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let err = newton_refine_2d(|[x, y]| [x + y + 1.0, 2.0 * x + 2.0 * y], [0.0, 0.0], 10);
        assert!(matches!(err, Err(Error::SingularJacobian { .. })));
    }
}
