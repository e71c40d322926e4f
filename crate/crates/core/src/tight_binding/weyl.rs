use std::f64::consts::PI;

use serde::Serialize;

use super::field::BlochField;
use crate::error::{Error, Result};
use crate::numerics::{mat2, newton_refine_2d, wrap_angle};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylPoint {
    /// Wrapped into `(-pi, pi]^3`.
    pub k: [f64; 3],
    /// `sign det(db/dk)`; zero at degenerate points.
    pub chirality: i32,
    /// Degree of `b/|b|` on a small sphere around `k`.
    pub degree: i32,
    pub det: f64,
}

impl WeylPoint {
    pub fn projection(&self) -> [f64; 2] {
        [self.k[0], self.k[1]]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylScan {
    pub points: Vec<WeylPoint>,
    /// Zeros of `b` with a singular Jacobian.
    pub degenerate: Vec<WeylPoint>,
}

impl WeylScan {
    pub fn chirality_sum(&self) -> i32 {
        self.points.iter().map(|p| p.chirality).sum::<i32>()
            + self.degenerate.iter().map(|p| p.degree).sum::<i32>()
    }

    /// Projections of the positive and negative chirality points of a
    /// two-point field.
    pub fn projections(&self) -> Result<([f64; 2], [f64; 2])> {
        verify_generic_projection(self)?;
        let plus = self.points.iter().find(|p| p.chirality > 0).unwrap();
        let minus = self.points.iter().find(|p| p.chirality < 0).unwrap();
        Ok((plus.projection(), minus.projection()))
    }
}

/// Largest allowed gradient of `b`: `sum_n |n| |H_n|`.
fn lipschitz(f: &BlochField) -> f64 {
    f.hoppings()
        .map(|(n, h)| {
            let len = ((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) as f64).sqrt();
            len * mat2::norm(h)
        })
        .sum()
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn det3(j: &[[f64; 3]; 3]) -> f64 {
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

fn solve3(j: &[[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(j);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for c in 0..3 {
        let mut m = *j;
        for row in 0..3 {
            m[row][c] = r[row];
        }
        x[c] = det3(&m) / d;
    }
    Some(x)
}

/// Newton on the two components of `b` and the two coordinates with the
/// best-conditioned 2x2 Jacobian minor, the third coordinate held fixed.
fn plane_refine(f: &BlochField, seed: [f64; 3]) -> [f64; 3] {
    let jac = f.jacobian(seed);
    let mut best = (0.0, [0, 1], [0, 1]);
    for rows in [[0, 1], [0, 2], [1, 2]] {
        for cols in [[0, 1], [0, 2], [1, 2]] {
            let d = (jac[rows[0]][cols[0]] * jac[rows[1]][cols[1]]
                - jac[rows[0]][cols[1]] * jac[rows[1]][cols[0]])
                .abs();
            if d > best.0 {
                best = (d, rows, cols);
            }
        }
    }
    let (_, rows, cols) = best;
    let embed = |x: [f64; 2]| {
        let mut k = seed;
        k[cols[0]] = x[0];
        k[cols[1]] = x[1];
        k
    };
    let g = |x: [f64; 2]| {
        let b = f.b(embed(x));
        [b[rows[0]], b[rows[1]]]
    };
    match newton_refine_2d(g, [seed[cols[0]], seed[cols[1]]], 30) {
        Ok(x) => embed(x),
        Err(_) => seed,
    }
}

/// Damped Newton on `b(k) = 0`. Returns the final point and residual.
fn newton3(f: &BlochField, seed: [f64; 3], tol: f64) -> ([f64; 3], f64) {
    let mut k = seed;
    let mut r = norm3(f.b(k));
    for _ in 0..60 {
        if r <= tol {
            break;
        }
        let b = f.b(k);
        let Some(step) = solve3(&f.jacobian(k), [-b[0], -b[1], -b[2]]) else {
            break;
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [
                k[0] + alpha * step[0],
                k[1] + alpha * step[1],
                k[2] + alpha * step[2],
            ];
            let rt = norm3(f.b(trial));
            if rt < r {
                k = trial;
                r = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (k, r)
}

fn torus_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([
        wrap_angle(a[0] - b[0]),
        wrap_angle(a[1] - b[1]),
        wrap_angle(a[2] - b[2]),
    ])
}

/// Degree of `b/|b|` over a sphere of radius `r` around `k`, from the summed
/// signed solid angles of a triangulated sphere.
pub fn sphere_degree(f: &BlochField, k: [f64; 3], r: f64, n_theta: usize) -> Result<i32> {
    let n_phi = 2 * n_theta;
    let unit = |t: usize, p: usize| -> Result<[f64; 3]> {
        let th = PI * t as f64 / n_theta as f64;
        let ph = 2.0 * PI * p as f64 / n_phi as f64;
        let q = [
            k[0] + r * th.sin() * ph.cos(),
            k[1] + r * th.sin() * ph.sin(),
            k[2] + r * th.cos(),
        ];
        let b = f.b(q);
        let n = norm3(b);
        if n < 1e-12 {
            return Err(Error::IllDefinedWinding(format!(
                "b vanishes on the sphere around {k:?}"
            )));
        }
        Ok([b[0] / n, b[1] / n, b[2] / n])
    };
    let mut grid = Vec::with_capacity((n_theta + 1) * n_phi);
    for t in 0..=n_theta {
        for p in 0..n_phi {
            grid.push(unit(t, p)?);
        }
    }
    let at = |t: usize, p: usize| grid[t * n_phi + p % n_phi];
    let mut total = 0.0;
    for t in 0..n_theta {
        for p in 0..n_phi {
            // Outward-oriented triangles of the (theta, phi) quad.
            let (a, b, c, d) = (at(t, p), at(t + 1, p), at(t + 1, p + 1), at(t, p + 1));
            total += solid_angle(a, b, c) + solid_angle(a, c, d);
        }
    }
    let deg = total / (4.0 * PI);
    if (deg - deg.round()).abs() > 0.05 {
        return Err(Error::IllDefinedWinding(format!(
            "sphere degree {deg} is not close to an integer"
        )));
    }
    Ok(deg.round() as i32)
}

/// Signed solid angle subtended by a spherical triangle of unit vectors.
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let cross = [
        b[1] * c[2] - b[2] * c[1],
        b[2] * c[0] - b[0] * c[2],
        b[0] * c[1] - b[1] * c[0],
    ];
    let num = a[0] * cross[0] + a[1] * cross[1] + a[2] * cross[2];
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

/// Locate all zeros of the Bloch vector: grid scan at `density^3` points,
/// then from every grid point that could be within one cell of a zero a
/// Newton step on a transversal plane followed by damped 3D Newton. Each
/// chirality is checked against the degree on a small sphere.
pub fn find_weyl_points(f: &BlochField, density: usize) -> Result<WeylScan> {
    if density < 4 {
        return Err(Error::InvalidInput(
            "Weyl scan density must be at least 4".into(),
        ));
    }
    let dk = 2.0 * PI / density as f64;
    let lip = lipschitz(f);
    let threshold = 1.01 * lip * dk * 3f64.sqrt() / 2.0;
    let mut candidates = Vec::new();
    for i in 0..density {
        for j in 0..density {
            for l in 0..density {
                // Offset keeps symmetric zeros off the grid nodes.
                let k = [
                    -PI + (i as f64 + 0.5) * dk,
                    -PI + (j as f64 + 0.5) * dk,
                    -PI + (l as f64 + 0.5) * dk,
                ];
                let r = norm3(f.b(k));
                if r <= threshold {
                    candidates.push((r, k));
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(2000);

    let tol = 1e-14 * lip.max(1.0);
    let mut zeros: Vec<[f64; 3]> = Vec::new();
    for (_, seed) in candidates {
        if zeros.iter().any(|z| torus_distance(*z, seed) < 0.5 * dk) {
            continue;
        }
        let start = plane_refine(f, seed);
        let start = if norm3(f.b(start)) < norm3(f.b(seed)) {
            start
        } else {
            seed
        };
        let (k, r) = newton3(f, start, tol);
        // Singular points converge only linearly.
        if r > 1e-8 {
            continue;
        }
        let k = [wrap_angle(k[0]), wrap_angle(k[1]), wrap_angle(k[2])];
        if zeros.iter().all(|z| torus_distance(*z, k) > 1e-5) {
            zeros.push(k);
        }
    }

    let mut points = Vec::new();
    let mut degenerate = Vec::new();
    for (i, &k) in zeros.iter().enumerate() {
        let nearest = zeros
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, z)| torus_distance(*z, k))
            .fold(f64::INFINITY, f64::min);
        let radius = (0.25 * nearest).min(0.2);
        let det = det3(&f.jacobian(k));
        let degree = sphere_degree(f, k, radius, 24)?;
        // A zero whose local degree disagrees with its Jacobian sign is
        // degenerate even if Newton stopped short of the exact point.
        let chirality = det.signum() as i32;
        let singular = det.abs() <= 1e-6 || degree != chirality;
        let point = WeylPoint {
            k,
            chirality: if singular { 0 } else { chirality },
            degree,
            det,
        };
        if singular {
            degenerate.push(point);
        } else {
            points.push(point);
        }
    }
    points.sort_by(|a, b| {
        b.chirality
            .cmp(&a.chirality)
            .then(a.k[0].total_cmp(&b.k[0]))
    });
    Ok(WeylScan { points, degenerate })
}

/// A field is usable for the surface construction if it has exactly two
/// nondegenerate Weyl points of opposite chirality with distinct surface
/// projections.
pub fn verify_generic_projection(scan: &WeylScan) -> Result<()> {
    if !scan.degenerate.is_empty() {
        return Err(Error::ModelRejected(format!(
            "{} degenerate Weyl point(s)",
            scan.degenerate.len()
        )));
    }
    if scan.points.len() != 2 || scan.chirality_sum() != 0 {
        return Err(Error::ModelRejected(format!(
            "expected one Weyl pair, found {} point(s) with total chirality {}",
            scan.points.len(),
            scan.chirality_sum()
        )));
    }
    let (a, b) = (scan.points[0].projection(), scan.points[1].projection());
    let sep = wrap_angle(a[0] - b[0]).hypot(wrap_angle(a[1] - b[1]));
    if sep < 1e-6 {
        return Err(Error::ModelRejected(format!(
            "Weyl points share the surface projection {a:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tight_binding::field::{
        reference_field, reference_field_with_mass, shifted_reference_field,
    };

    #[test]
    fn reference_points_and_chirality() {
        let scan = find_weyl_points(&reference_field(), 16).unwrap();
        assert_eq!(scan.points.len(), 2);
        assert!(scan.degenerate.is_empty());
        assert_eq!(scan.chirality_sum(), 0);
        assert!(scan.points[0].chirality == 1 && scan.points[0].k[2] > 0.0);
        for p in &scan.points {
            assert!(p.k[0].abs() < 1e-10 && p.k[1].abs() < 1e-10);
            assert!((p.k[2].abs() - PI / 2.0).abs() < 1e-10);
        }
        // Shared projection: not usable for the surface construction.
        assert!(verify_generic_projection(&scan).is_err());
    }

    #[test]
    fn shifted_field_projections() {
        let f = shifted_reference_field().unwrap();
        let (wp, wm) = find_weyl_points(&f, 16).unwrap().projections().unwrap();
        assert!((wp[0] + PI / 2.0).abs() < 1e-10 && wp[1].abs() < 1e-10);
        assert!((wm[0] - PI / 2.0).abs() < 1e-10 && wm[1].abs() < 1e-10);
    }

    #[test]
    fn double_point_is_degenerate_and_gapped_field_is_empty() {
        let scan = find_weyl_points(&reference_field_with_mass(3.0), 16).unwrap();
        assert!(scan.points.is_empty());
        assert_eq!(scan.degenerate.len(), 1);
        assert_eq!(scan.degenerate[0].degree, 0);
        assert!(verify_generic_projection(&scan).is_err());

        let scan = find_weyl_points(&reference_field_with_mass(5.0), 16).unwrap();
        assert!(scan.points.is_empty() && scan.degenerate.is_empty());
    }
}
