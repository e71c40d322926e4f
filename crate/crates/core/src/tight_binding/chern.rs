use std::f64::consts::PI;

use serde::Serialize;

use super::field::BlochField;
use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernResult {
    pub chern: i64,
    /// Unrounded total flux over `2 pi`.
    pub raw: f64,
    pub loop_samples: usize,
    pub kz_samples: usize,
}

/// Lower-band eigenvector of `a + b.sigma`, from whichever of two gauges is
/// better conditioned. Link variables do not see the gauge choice.
pub fn lower_eigenvector(b: [f64; 3]) -> Result<[C64; 2]> {
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if nb < 1e-6 {
        return Err(Error::Gapless(format!(
            "|b| = {nb:.3e} on the sampling grid"
        )));
    }
    let u = [C64::new(b[2] - nb, 0.0), C64::new(b[0], b[1])];
    let v = [C64::new(b[0], -b[1]), C64::new(-b[2] - nb, 0.0)];
    let n2 = |w: &[C64; 2]| w[0].norm_sqr() + w[1].norm_sqr();
    let w = if n2(&u) >= n2(&v) { u } else { v };
    let n = n2(&w).sqrt();
    Ok([w[0] / n, w[1] / n])
}

fn link(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    let z = a[0].conj() * b[0] + a[1].conj() * b[1];
    z / z.norm()
}

/// Flux of the lower band through the surface `(t, kz) -> (l(t), kz)` by
/// the plaquette link method. `points(n)` samples the closed loop at `n`
/// parameters. Plaquettes are oriented with `kz` as the first and the loop
/// parameter as the second coordinate; with anticlockwise loops this makes
/// the flow of the half-space family equal to minus the result.
pub fn cylinder_flux(
    f: &BlochField,
    points: &dyn Fn(usize) -> Vec<[f64; 2]>,
    loop_samples: usize,
    kz_samples: usize,
) -> Result<(f64, f64)> {
    let pts = points(loop_samples);
    let nt = pts.len();
    let mut u = Vec::with_capacity(nt * kz_samples);
    for p in &pts {
        for l in 0..kz_samples {
            let kz = -PI + 2.0 * PI * l as f64 / kz_samples as f64;
            u.push(lower_eigenvector(f.b([p[0], p[1], kz]))?);
        }
    }
    let at = |i: usize, l: usize| &u[(i % nt) * kz_samples + l % kz_samples];
    let mut total = 0.0;
    let mut worst = 0.0f64;
    for i in 0..nt {
        for l in 0..kz_samples {
            let z = link(at(i, l), at(i, l + 1))
                * link(at(i, l + 1), at(i + 1, l + 1))
                * link(at(i + 1, l + 1), at(i + 1, l))
                * link(at(i + 1, l), at(i, l));
            let flux = z.arg();
            worst = worst.max(flux.abs());
            total += flux;
        }
    }
    Ok((total / (2.0 * PI), worst))
}

/// First Chern number of the lower band over `loop x T(kz)`. Densities are
/// doubled (up to three times) while any plaquette flux comes within 0.1 of
/// the branch cut at `pi`.
pub fn chern_on_cylinder(
    f: &BlochField,
    points: &dyn Fn(usize) -> Vec<[f64; 2]>,
    loop_samples: usize,
    kz_samples: usize,
) -> Result<ChernResult> {
    let (mut nt, mut nz) = (loop_samples, kz_samples);
    for _ in 0..4 {
        let (raw, worst) = cylinder_flux(f, points, nt, nz)?;
        if worst < PI - 0.1 {
            let chern = raw.round();
            if (raw - chern).abs() > 1e-6 {
                return Err(Error::ChernAmbiguous(format!(
                    "total flux {raw} is not an integer"
                )));
            }
            return Ok(ChernResult {
                chern: chern as i64,
                raw,
                loop_samples: nt,
                kz_samples: nz,
            });
        }
        nt *= 2;
        nz *= 2;
    }
    Err(Error::ChernAmbiguous(format!(
        "plaquette flux still near pi at {nt} x {nz} samples"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::mat2;

    #[test]
    fn lower_eigenvector_is_an_eigenvector() {
        for b in [
            [0.3, -0.2, 0.9],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [1.0, 0.5, 0.0],
        ] {
            let u = lower_eigenvector(b).unwrap();
            let h = mat2::from_bloch(0.0, b);
            let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            for r in 0..2 {
                let hu = h[r][0] * u[0] + h[r][1] * u[1];
                assert!((hu + u[r] * nb).norm() < 1e-14);
            }
        }
    }
}
