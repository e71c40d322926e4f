//! Zero-energy contours of edge-state sheets sampled on a momentum grid,
//! and their signed intersection numbers with loops.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::edge::Side;
use crate::error::{Error, Result};

/// Values of an energy sheet on a regular grid. Points without a usable
/// state are `None`.
#[derive(Clone, Debug)]
pub struct SheetGrid {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub periodic: bool,
    /// Row-major, `i` fastest.
    pub energy: Vec<Option<f64>>,
    /// Largest energy difference along a cell edge that still counts as a
    /// continuous sheet, per grid point.
    pub max_jump: Vec<f64>,
}

impl SheetGrid {
    pub fn period(&self) -> Option<[f64; 2]> {
        self.periodic.then(|| {
            [
                self.spacing[0] * self.nx as f64,
                self.spacing[1] * self.ny as f64,
            ]
        })
    }

    fn at(&self, i: usize, j: usize) -> (Option<f64>, f64) {
        let idx = (i % self.nx) + self.nx * (j % self.ny);
        (self.energy[idx], self.max_jump[idx])
    }

    fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
        ]
    }
}

/// For closed lines the last point repeats the first, up to a period when
/// the line winds around the torus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArcPoint {
    pub k: [f64; 2],
    pub energy: f64,
    pub edge_weight: f64,
    pub side: Side,
}

#[derive(Clone, Debug, Serialize)]
pub struct FermiArc {
    /// Contour vertices re-evaluated at their own momenta.
    pub points: Vec<ArcPoint>,
    pub polylines: Vec<Polyline>,
    pub tolerance: f64,
    pub period: Option<[f64; 2]>,
    pub cell: [f64; 2],
}

impl FermiArc {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    /// End points of the open polylines, start first.
    pub fn endpoints(&self) -> Vec<[f64; 2]> {
        self.polylines
            .iter()
            .filter(|p| !p.closed)
            .flat_map(|p| [p.points[0], *p.points.last().unwrap()])
            .collect()
    }

    /// Largest `|energy|` among the re-evaluated points.
    pub fn max_energy(&self) -> f64 {
        self.points.iter().fold(0.0, |a, p| a.max(p.energy.abs()))
    }
}

/// Grid edge, by lower corner: `(0, i, j)` joins `(i,j)-(i+1,j)` and
/// `(1, i, j)` joins `(i,j)-(i,j+1)`.
type EdgeId = (u8, usize, usize);

struct Segment {
    from: EdgeId,
    to: EdgeId,
    a: [f64; 2],
    b: [f64; 2],
}

/// Marching-squares contour of `E = 0`. Each segment is oriented along
/// `z x grad E` (negative energies on the left), so chained polylines run
/// consistently.
pub fn zero_contour(sheet: &SheetGrid) -> Vec<Polyline> {
    let (cx, cy) = if sheet.periodic {
        (sheet.nx, sheet.ny)
    } else {
        (sheet.nx - 1, sheet.ny - 1)
    };
    let mut segments = Vec::new();
    for j in 0..cy {
        for i in 0..cx {
            cell_segments(sheet, i, j, &mut segments);
        }
    }
    chain(segments, sheet)
}

fn cell_segments(sheet: &SheetGrid, i: usize, j: usize, out: &mut Vec<Segment>) {
    let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
    let mut e = [0.0; 4];
    let mut jump = [0.0; 4];
    for (c, &(a, b)) in corners.iter().enumerate() {
        let (v, m) = sheet.at(a, b);
        let Some(v) = v else { return };
        e[c] = if v.abs() < 1e-12 { 0.0 } else { v };
        jump[c] = m;
    }
    for c in 0..4 {
        let d = (c + 1) % 4;
        if (e[c] - e[d]).abs() > jump[c].min(jump[d]) {
            return;
        }
    }
    let above = e.map(|v| v >= 0.0);
    // Counter-clockwise edges c -> c+1 with their ids and crossing points.
    let ids: [EdgeId; 4] = [
        (0, i % sheet.nx, j % sheet.ny),
        (1, (i + 1) % sheet.nx, j % sheet.ny),
        (0, i % sheet.nx, (j + 1) % sheet.ny),
        (1, i % sheet.nx, j % sheet.ny),
    ];
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    for c in 0..4 {
        let d = (c + 1) % 4;
        if above[c] == above[d] {
            continue;
        }
        let t = e[c] / (e[c] - e[d]);
        let (pa, pb) = (
            sheet.coord(corners[c].0, corners[c].1),
            sheet.coord(corners[d].0, corners[d].1),
        );
        let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        if above[d] {
            starts.push((c, ids[c], p));
        } else {
            ends.push((c, ids[c], p));
        }
    }
    match starts.len() {
        0 => {}
        1 => out.push(Segment {
            from: starts[0].1,
            to: ends[0].1,
            a: starts[0].2,
            b: ends[0].2,
        }),
        _ => {
            // Saddle: the sign of the centre average decides which corners
            // are joined through the middle of the cell.
            let center_negative = e.iter().sum::<f64>() < 0.0;
            for s in &starts {
                let pick = if center_negative {
                    (s.0 + 1) % 4
                } else {
                    (s.0 + 3) % 4
                };
                let t = ends
                    .iter()
                    .find(|x| x.0 == pick)
                    .expect("saddle edges alternate");
                out.push(Segment {
                    from: s.1,
                    to: t.1,
                    a: s.2,
                    b: t.2,
                });
            }
        }
    }
}

fn chain(segments: Vec<Segment>, sheet: &SheetGrid) -> Vec<Polyline> {
    let period = sheet.period();
    let by_start: HashMap<EdgeId, usize> = segments
        .iter()
        .enumerate()
        .map(|(n, s)| (s.from, n))
        .collect();
    let ends: HashSet<EdgeId> = segments.iter().map(|s| s.to).collect();
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let align = |prev: [f64; 2], p: [f64; 2]| -> [f64; 2] {
        match period {
            Some(per) => {
                let mut q = p;
                for c in 0..2 {
                    q[c] += per[c] * ((prev[c] - p[c]) / per[c]).round();
                }
                q
            }
            None => p,
        }
    };
    let walk = |first: usize, used: &mut Vec<bool>| {
        let mut pts = vec![segments[first].a, segments[first].b];
        used[first] = true;
        let mut cur = first;
        let mut closed = false;
        while let Some(&next) = by_start.get(&segments[cur].to) {
            if next == first {
                closed = true;
                break;
            }
            if used[next] {
                break;
            }
            used[next] = true;
            let shift = {
                let p = align(*pts.last().unwrap(), segments[next].a);
                [p[0] - segments[next].a[0], p[1] - segments[next].a[1]]
            };
            let b = segments[next].b;
            pts.push([b[0] + shift[0], b[1] + shift[1]]);
            cur = next;
        }
        Polyline {
            points: pts,
            closed,
        }
    };
    // Open chains start at segments whose entry edge nobody leaves through.
    let mut heads: Vec<usize> = (0..segments.len())
        .filter(|&n| !ends.contains(&segments[n].from))
        .collect();
    heads.sort_by_key(|&n| segments[n].from);
    for h in heads {
        if !used[h] {
            lines.push(walk(h, &mut used));
        }
    }
    for n in 0..segments.len() {
        if !used[n] {
            lines.push(walk(n, &mut used));
        }
    }
    lines
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Signed count of transversal crossings of a closed loop with the arc. On
/// a torus, consecutive loop points must be closer than half a period.
/// A crossing counts `+1` when `loop tangent x arc tangent > 0`. Crossings
/// within 5 degrees of tangency are rejected.
pub fn arc_loop_intersection(arc: &FermiArc, loop_points: &[[f64; 2]]) -> Result<i64> {
    let n = loop_points.len();
    if n < 3 {
        return Err(Error::InvalidInput("loop needs at least 3 points".into()));
    }
    // Subdivide loop segments so the nearest periodic image is unambiguous.
    let max_len = arc.period.map_or(f64::INFINITY, |p| 0.25 * p[0].min(p[1]));
    let mut segs = Vec::new();
    for i in 0..n {
        let p = loop_points[i];
        let mut q = loop_points[(i + 1) % n];
        // Consecutive points are joined through their nearest images, so a
        // loop winding around the torus closes up.
        if let Some(per) = arc.period {
            for c in 0..2 {
                q[c] += per[c] * ((p[c] - q[c]) / per[c]).round();
            }
        }
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        let pieces = if len.is_finite() && len > max_len {
            (len / max_len).ceil() as usize
        } else {
            1
        };
        for s in 0..pieces {
            let (t0, t1) = (s as f64 / pieces as f64, (s + 1) as f64 / pieces as f64);
            segs.push((
                [p[0] + t0 * (q[0] - p[0]), p[1] + t0 * (q[1] - p[1])],
                [p[0] + t1 * (q[0] - p[0]), p[1] + t1 * (q[1] - p[1])],
            ));
        }
    }
    let sin_min = 5f64.to_radians().sin();
    let mut total = 0i64;
    for line in &arc.polylines {
        for w in line.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let da = [b[0] - a[0], b[1] - a[1]];
            for &(p0, q0) in &segs {
                let mut shift = [0.0, 0.0];
                if let Some(per) = arc.period {
                    for c in 0..2 {
                        shift[c] = per[c] * ((a[c] - p0[c]) / per[c]).round();
                    }
                }
                let p = [p0[0] + shift[0], p0[1] + shift[1]];
                let q = [q0[0] + shift[0], q0[1] + shift[1]];
                if p[0].max(q[0]) < a[0].min(b[0])
                    || p[0].min(q[0]) > a[0].max(b[0])
                    || p[1].max(q[1]) < a[1].min(b[1])
                    || p[1].min(q[1]) > a[1].max(b[1])
                {
                    continue;
                }
                let dl = [q[0] - p[0], q[1] - p[1]];
                let den = cross(dl, da);
                let w = [a[0] - p[0], a[1] - p[1]];
                let scale = (dl[0].hypot(dl[1])) * (da[0].hypot(da[1]));
                if den.abs() <= 1e-14 * scale {
                    // Parallel: only a problem when collinear and overlapping.
                    if cross(w, dl).abs() <= 1e-12 * scale {
                        return Err(Error::GrazingIntersection(format!(
                            "loop runs along the arc near {a:?}"
                        )));
                    }
                    continue;
                }
                let t = cross(w, da) / den;
                let s = cross(w, dl) / den;
                if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
                    continue;
                }
                if den.abs() < sin_min * scale {
                    return Err(Error::GrazingIntersection(format!(
                        "crossing at {:?} is within 5 degrees of tangency",
                        [p[0] + t * dl[0], p[1] + t * dl[1]]
                    )));
                }
                // Half-open on both segments so shared vertices count once.
                if t < 1.0 && s < 1.0 {
                    total += den.signum() as i64;
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sheet(nx: usize, ny: usize, periodic: bool, f: impl Fn(f64, f64) -> f64) -> SheetGrid {
        let spacing = if periodic {
            [1.0 / nx as f64, 1.0 / ny as f64]
        } else {
            [1.0 / (nx - 1) as f64, 1.0 / (ny - 1) as f64]
        };
        let mut energy = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                energy.push(Some(f(i as f64 * spacing[0], j as f64 * spacing[1])));
            }
        }
        SheetGrid {
            origin: [0.0, 0.0],
            spacing,
            nx,
            ny,
            periodic,
            max_jump: vec![10.0; nx * ny],
            energy,
        }
    }

    fn arc_of(s: &SheetGrid) -> FermiArc {
        FermiArc {
            points: vec![],
            polylines: zero_contour(s),
            tolerance: 0.0,
            period: s.period(),
            cell: s.spacing,
        }
    }

    #[test]
    fn circle_contour_is_one_closed_anticlockwise_line() {
        let s = sheet(41, 41, false, |x, y| {
            (x - 0.5).powi(2) + (y - 0.5).powi(2) - 0.09
        });
        let lines = zero_contour(&s);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        // Negative inside: z x grad E runs anticlockwise.
        let p = &lines[0].points;
        let area: f64 = (0..p.len())
            .map(|i| cross(p[i], p[(i + 1) % p.len()]))
            .sum::<f64>()
            * 0.5;
        assert!((area - std::f64::consts::PI * 0.09).abs() < 2e-3, "{area}");
        for q in p {
            assert!(((q[0] - 0.5).hypot(q[1] - 0.5) - 0.3).abs() < 2e-3);
        }
    }

    #[test]
    fn wrapped_line_is_closed_and_unwrapped() {
        // E = sin(2 pi y): zero lines at y = 0 and y = 1/2, running along x.
        let s = sheet(32, 32, true, |_, y| {
            (2.0 * std::f64::consts::PI * (y + 0.013)).sin()
        });
        let lines = zero_contour(&s);
        assert_eq!(lines.len(), 2);
        for l in &lines {
            assert!(l.closed);
            let span = l
                .points
                .iter()
                .map(|p| p[0])
                .fold(f64::NEG_INFINITY, f64::max)
                - l.points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            assert!(span > 0.9);
        }
        // A vertical cycle crosses the two lines with opposite orientation.
        let cycle: Vec<[f64; 2]> = (0..50).map(|k| [0.31, k as f64 / 50.0]).collect();
        let arc = arc_of(&s);
        assert_eq!(arc_loop_intersection(&arc, &cycle).unwrap(), 0);
    }

    #[test]
    fn open_arc_orientation_and_sign() {
        // Arc along y = 0.5 for x in (0.2, 0.8), energy negative above it.
        let mut s = sheet(41, 41, false, |_, y| 0.5 - y + 0.0013);
        for j in 0..41 {
            for i in 0..41 {
                let x = i as f64 / 40.0;
                if !(0.2..=0.8).contains(&x) {
                    s.energy[i + 41 * j] = None;
                }
            }
        }
        let lines = zero_contour(&s);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        let (a, b) = (lines[0].points[0], *lines[0].points.last().unwrap());
        // grad E = -y, z x grad E = +x.
        assert!(a[0] < b[0]);
        let arc = arc_of(&s);
        // Anticlockwise circle around the right end crosses once, moving
        // down (-y) through an arc pointing +x: cross(-y, +x) > 0.
        let circle: Vec<[f64; 2]> = (0..64)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                [b[0] + 0.1 * t.cos(), b[1] + 0.1 * t.sin()]
            })
            .collect();
        assert_eq!(arc_loop_intersection(&arc, &circle).unwrap(), 1);
        let circle_a: Vec<[f64; 2]> = circle.iter().map(|p| [p[0] - b[0] + a[0], p[1]]).collect();
        assert_eq!(arc_loop_intersection(&arc, &circle_a).unwrap(), -1);
    }

    #[test]
    fn grazing_crossing_is_rejected() {
        let arc = FermiArc {
            points: vec![],
            polylines: vec![Polyline {
                points: vec![[0.0, 0.0], [1.0, 0.0]],
                closed: false,
            }],
            tolerance: 0.0,
            period: None,
            cell: [0.1, 0.1],
        };
        let tri = vec![[0.2, -0.01], [0.8, 0.01], [0.5, 1.0]];
        assert!(matches!(
            arc_loop_intersection(&arc, &tri),
            Err(Error::GrazingIntersection(_))
        ));
    }
}
