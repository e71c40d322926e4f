//! Closed loops in a two-dimensional parameter space, optionally periodic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopShape {
    /// Anticlockwise circle.
    Circle { center: [f64; 2], radius: f64 },
    /// Anticlockwise ellipse with semi-axes along the coordinate axes.
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
    /// Straight line from `start` to `start + displacement`; closed only on a
    /// torus whose periods divide the displacement.
    Cycle {
        start: [f64; 2],
        displacement: [f64; 2],
    },
    /// Closed polygon, parameterized by arc length.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub id: String,
    #[serde(flatten)]
    pub shape: LoopShape,
    /// Number of path samples.
    pub samples: usize,
    /// Minimum distance to the points the loop has to avoid.
    #[serde(default = "default_clearance")]
    pub clearance: f64,
}

fn default_clearance() -> f64 {
    0.1
}

impl LoopSpec {
    pub fn new(id: impl Into<String>, shape: LoopShape, samples: usize) -> Self {
        Self {
            id: id.into(),
            shape,
            samples,
            clearance: default_clearance(),
        }
    }

    pub fn with_clearance(mut self, c: f64) -> Self {
        self.clearance = c;
        self
    }

    /// Point at `t` in `[0, 1)`.
    pub fn point(&self, t: f64) -> [f64; 2] {
        match &self.shape {
            LoopShape::Circle { center, radius } => {
                let a = 2.0 * PI * t;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
            LoopShape::Ellipse { center, semi_axes } => {
                let a = 2.0 * PI * t;
                [
                    center[0] + semi_axes[0] * a.cos(),
                    center[1] + semi_axes[1] * a.sin(),
                ]
            }
            LoopShape::Cycle {
                start,
                displacement,
            } => [
                start[0] + t * displacement[0],
                start[1] + t * displacement[1],
            ],
            LoopShape::Polygon { vertices } => {
                let n = vertices.len();
                let lens: Vec<f64> = (0..n)
                    .map(|i| dist(vertices[i], vertices[(i + 1) % n]))
                    .collect();
                let total: f64 = lens.iter().sum();
                let mut s = t.rem_euclid(1.0) * total;
                for i in 0..n {
                    if s <= lens[i] || i == n - 1 {
                        let u = if lens[i] > 0.0 {
                            (s / lens[i]).min(1.0)
                        } else {
                            0.0
                        };
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        return [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])];
                    }
                    s -= lens[i];
                }
                unreachable!()
            }
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.samples)
            .map(|i| self.point(i as f64 / self.samples as f64))
            .collect()
    }

    /// Windings around the two cycles of the torus with the given periods.
    pub fn homology_tag(&self, period: [f64; 2]) -> [i32; 2] {
        match &self.shape {
            LoopShape::Cycle { displacement, .. } => [
                (displacement[0] / period[0]).round() as i32,
                (displacement[1] / period[1]).round() as i32,
            ],
            _ => [0, 0],
        }
    }

    pub fn validate(&self, period: Option<[f64; 2]>) -> Result<()> {
        if self.samples < 8 {
            return invalid(format!("loop {} needs at least 8 samples", self.id));
        }
        match &self.shape {
            LoopShape::Circle { radius, .. } if !(*radius > 0.0) => {
                invalid(format!("loop {}: radius must be positive", self.id))
            }
            LoopShape::Ellipse { semi_axes, .. } if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) => {
                invalid(format!("loop {}: semi-axes must be positive", self.id))
            }
            LoopShape::Polygon { vertices } if vertices.len() < 3 => {
                invalid(format!("loop {}: polygon needs 3 vertices", self.id))
            }
            LoopShape::Cycle { displacement, .. } => {
                let Some(p) = period else {
                    return invalid(format!(
                        "loop {}: a cycle is only closed on a torus",
                        self.id
                    ));
                };
                for c in 0..2 {
                    let w = displacement[c] / p[c];
                    if (w - w.round()).abs() > 1e-9 {
                        return invalid(format!(
                            "loop {}: displacement is not a lattice vector",
                            self.id
                        ));
                    }
                }
                if displacement[0] == 0.0 && displacement[1] == 0.0 {
                    return invalid(format!("loop {}: zero displacement", self.id));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Smallest distance between the loop and `avoid`, measured on the
    /// torus when `period` is given.
    pub fn distance_to(&self, avoid: &[[f64; 2]], period: Option<[f64; 2]>) -> f64 {
        let n = 16 * self.samples;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let p = self.point(i as f64 / n as f64);
            for q in avoid {
                best = best.min(periodic_distance(p, *q, period));
            }
        }
        best
    }

    pub fn check_clearance(&self, avoid: &[[f64; 2]], period: Option<[f64; 2]>) -> Result<()> {
        let d = self.distance_to(avoid, period);
        if d < self.clearance {
            return Err(Error::InvalidInput(format!(
                "loop {} passes within {d:.3e} of an excluded point (clearance {})",
                self.id, self.clearance
            )));
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn periodic_distance(a: [f64; 2], b: [f64; 2], period: Option<[f64; 2]>) -> f64 {
    let mut d = [a[0] - b[0], a[1] - b[1]];
    if let Some(p) = period {
        for c in 0..2 {
            d[c] -= p[c] * (d[c] / p[c]).round();
        }
    }
    d[0].hypot(d[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_anticlockwise() {
        let l = LoopSpec::new(
            "c",
            LoopShape::Circle {
                center: [1.0, 2.0],
                radius: 0.5,
            },
            16,
        );
        let p = l.point(0.25);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn cycle_homology_and_clearance() {
        let tau = 2.0 * PI;
        let l = LoopSpec::new(
            "v",
            LoopShape::Cycle {
                start: [PI, 0.0],
                displacement: [0.0, tau],
            },
            64,
        );
        l.validate(Some([tau, tau])).unwrap();
        assert_eq!(l.homology_tag([tau, tau]), [0, 1]);
        assert!(l.validate(None).is_err());
        // The point (-pi, 0) is the same torus point as (pi, 0).
        assert!(l.check_clearance(&[[-PI, 0.0]], Some([tau, tau])).is_err());
        assert!(l.check_clearance(&[[0.0, 0.0]], Some([tau, tau])).is_ok());
    }

    #[test]
    fn polygon_by_arc_length() {
        let l = LoopSpec::new(
            "sq",
            LoopShape::Polygon {
                vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            },
            8,
        );
        let p = l.point(0.375);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let l = LoopSpec::new(
            "e",
            LoopShape::Ellipse {
                center: [0.0, 0.0],
                semi_axes: [2.2, 0.8],
            },
            128,
        );
        let text = toml::to_string(&l).unwrap();
        assert_eq!(toml::from_str::<LoopSpec>(&text).unwrap(), l);
    }
}
