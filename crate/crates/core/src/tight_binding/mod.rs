//! Two-band lattice Weyl models, their half-space truncations, surface
//! spectra, Fermi arcs and cylinder Chern numbers.

pub mod chern;
pub mod field;
pub mod halfspace;
pub mod weyl;

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chern::{chern_on_cylinder, ChernResult};
pub use field::{reference_field, reference_field_with_mass, shifted_reference_field, BlochField};
pub use halfspace::{
    local_gap, surface_point, surface_spectrum, BoundaryPerturbation, EdgeState, HalfSpaceModel,
    SurfaceGrid, SurfaceOptions, SurfacePoint, SurfaceSpectrum,
};
pub use weyl::{find_weyl_points, verify_generic_projection, WeylPoint, WeylScan};

use crate::arc::{arc_loop_intersection, zero_contour, ArcPoint, FermiArc, SheetGrid};
use crate::error::{Error, Result};
use crate::flow::{
    spectral_flow_crossings, spectral_flow_exp_winding, FlowResult, OperatorPath, PathSample,
    StateFilter,
};
use crate::loops::{LoopShape, LoopSpec};

const TAU: f64 = 2.0 * PI;

/// Zero contour of the near-edge sheet of a surface scan. Contour vertices
/// are re-evaluated at their own momenta; the arc keeps those within
/// `arc_tolerance` of zero energy.
pub fn fermi_arc(
    model: &HalfSpaceModel,
    spectrum: &SurfaceSpectrum,
    opts: &SurfaceOptions,
) -> Result<FermiArc> {
    arc_from_spectrum(spectrum, opts, |k| surface_point(model, k, opts))
}

/// Arc extraction for any surface scan; `eval` recomputes a single point.
pub fn arc_from_spectrum<F>(
    spectrum: &SurfaceSpectrum,
    opts: &SurfaceOptions,
    eval: F,
) -> Result<FermiArc>
where
    F: Fn([f64; 2]) -> Result<SurfacePoint> + Sync,
{
    let g = spectrum.grid;
    let sheet = SheetGrid {
        origin: g.origin,
        spacing: g.spacing,
        nx: g.nx,
        ny: g.ny,
        periodic: g.periodic,
        energy: spectrum
            .points
            .iter()
            .map(|p| p.near_state(opts.min_edge_weight).map(|s| s.energy))
            .collect(),
        max_jump: spectrum
            .points
            .iter()
            .map(|p| p.window.map_or(0.0, |(lo, hi)| hi - lo))
            .collect(),
    };
    let polylines = zero_contour(&sheet);
    let vertices: Vec<[f64; 2]> = polylines
        .iter()
        .flat_map(|l| l.points.iter().copied())
        .collect();
    let points = vertices
        .par_iter()
        .map(|&k| {
            let p = eval(k)?;
            Ok(p.near_state(opts.min_edge_weight).and_then(|s| {
                (s.energy.abs() <= opts.arc_tolerance).then_some(ArcPoint {
                    k,
                    energy: s.energy,
                    edge_weight: s.edge_weight,
                    side: s.side,
                })
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(FermiArc {
        points,
        polylines,
        tolerance: opts.arc_tolerance,
        period: g.period(),
        cell: g.spacing,
    })
}

/// Closed operator path of half-space matrices along a loop, parameterized
/// by `t` in `[0, 1)`. The window is `window_fraction` times the smallest
/// local gap along the loop and is held fixed.
pub fn loop_path(
    model: &HalfSpaceModel,
    spec: &LoopSpec,
    opts: &SurfaceOptions,
    budget: usize,
) -> Result<OperatorPath> {
    let n_check = 16 * spec.samples;
    let gap = (0..n_check)
        .map(|i| {
            let k = spec.point(i as f64 / n_check as f64);
            local_gap(&model.field, k[0], k[1])
        })
        .fold(f64::INFINITY, f64::min);
    if gap < opts.min_gap {
        return Err(Error::Gapless(format!(
            "loop {} meets the gap closure (local gap {gap:.3e})",
            spec.id
        )));
    }
    let w = opts.window_fraction * gap;
    let model = Arc::new(model.clone());
    let spec_c = spec.clone();
    let sampler = Arc::new(move |t: f64| {
        let k = spec_c.point(t);
        Ok(PathSample {
            param: t,
            matrix: model.matrix(k[0], k[1])?,
            window: (-w, w),
        })
    });
    let samples = (0..spec.samples)
        .into_par_iter()
        .map(|i| sampler(i as f64 / spec.samples as f64))
        .collect::<Result<Vec<_>>>()?;
    let filter = StateFilter {
        edge_fraction: opts.edge_fraction,
        ..StateFilter::near_edge()
    };
    Ok(OperatorPath::closed(samples, 1.0)?
        .with_filter(filter)
        .with_sampler(sampler, budget))
}

/// Loops for a Weyl pair with projections `wp` (positive chirality) and
/// `wm` on a common line `ky = const`: two circles around each point,
/// vertical cycles through the midpoint and through the antipodal line, an
/// empty circle, a circle straddling the antipodal line and an ellipse
/// around both points. Centres are nudged off the grid lines.
pub fn default_battery(wp: [f64; 2], wm: [f64; 2]) -> Vec<LoopSpec> {
    let mid = [0.5 * (wp[0] + wm[0]), 0.5 * (wp[1] + wm[1])];
    let far = [mid[0] + PI, mid[1]];
    let sep = (wm[0] - wp[0]).abs();
    vec![
        LoopSpec::new(
            "w_plus_small",
            LoopShape::Circle {
                center: wp,
                radius: 0.35,
            },
            96,
        ),
        LoopSpec::new(
            "w_plus_medium",
            LoopShape::Circle {
                center: wp,
                radius: 0.7,
            },
            128,
        ),
        LoopSpec::new(
            "w_minus_small",
            LoopShape::Circle {
                center: wm,
                radius: 0.35,
            },
            96,
        ),
        LoopSpec::new(
            "w_minus_medium",
            LoopShape::Circle {
                center: wm,
                radius: 0.7,
            },
            128,
        ),
        LoopSpec::new(
            "cycle_far",
            LoopShape::Cycle {
                start: [far[0] + 0.0137, far[1] - 0.311],
                displacement: [0.0, TAU],
            },
            128,
        ),
        LoopSpec::new(
            "cycle_mid",
            LoopShape::Cycle {
                start: [mid[0] + 0.0137, mid[1] - 0.311],
                displacement: [0.0, TAU],
            },
            128,
        ),
        LoopSpec::new(
            "empty",
            LoopShape::Circle {
                center: [mid[0], mid[1] + PI],
                radius: 0.5,
            },
            64,
        ),
        LoopSpec::new(
            "arc_twice",
            LoopShape::Circle {
                center: [far[0] + 0.0137, far[1]],
                radius: 0.6,
            },
            96,
        ),
        LoopSpec::new(
            "both_points",
            LoopShape::Ellipse {
                center: [mid[0] + 0.0137, mid[1]],
                semi_axes: [0.5 * sep + 0.6, 0.8],
            },
            160,
        ),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryOptions {
    pub n_sites: usize,
    pub grid: usize,
    pub kz_samples: usize,
    pub chern_loop_samples: usize,
    pub budget: usize,
    pub surface: SurfaceOptions,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            n_sites: 128,
            grid: 96,
            kz_samples: 64,
            chern_loop_samples: 128,
            budget: 512,
            surface: SurfaceOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopRecord {
    pub loop_id: String,
    pub homology: [i32; 2],
    pub flow_crossings: Option<i64>,
    pub flow_exp: Option<i64>,
    pub chern: Option<i64>,
    pub intersection: Option<i64>,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub crossings: Option<FlowResult>,
    #[serde(skip)]
    pub exp: Option<FlowResult>,
}

impl LoopRecord {
    /// `crossings = exp = -chern = intersection`, all present.
    pub fn agrees(&self) -> bool {
        match (
            self.flow_crossings,
            self.flow_exp,
            self.chern,
            self.intersection,
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => a == b && b == -c && a == d,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryResult {
    pub weyl: WeylScan,
    pub w_plus: [f64; 2],
    pub w_minus: [f64; 2],
    #[serde(skip)]
    pub spectrum: SurfaceSpectrum,
    pub arc: FermiArc,
    pub loops: Vec<LoopRecord>,
}

/// Evaluate one loop four ways.
pub fn evaluate_loop(
    model: &HalfSpaceModel,
    arc: &FermiArc,
    spec: &LoopSpec,
    opts: &BatteryOptions,
) -> LoopRecord {
    let mut rec = LoopRecord {
        loop_id: spec.id.clone(),
        homology: spec.homology_tag([TAU, TAU]),
        flow_crossings: None,
        flow_exp: None,
        chern: None,
        intersection: None,
        errors: Vec::new(),
        crossings: None,
        exp: None,
    };
    match loop_path(model, spec, &opts.surface, opts.budget) {
        Ok(path) => {
            match spectral_flow_crossings(&path) {
                Ok(r) => {
                    rec.flow_crossings = Some(r.flow);
                    rec.crossings = Some(r);
                }
                Err(e) => rec.errors.push(format!("crossings: {e}")),
            }
            match spectral_flow_exp_winding(&path) {
                Ok(r) => {
                    rec.flow_exp = Some(r.flow);
                    rec.exp = Some(r);
                }
                Err(e) => rec.errors.push(format!("exp winding: {e}")),
            }
        }
        Err(e) => rec.errors.push(format!("path: {e}")),
    }
    let pts = |n: usize| {
        (0..n)
            .map(|i| spec.point(i as f64 / n as f64))
            .collect::<Vec<_>>()
    };
    match chern_on_cylinder(
        &model.field,
        &pts,
        opts.chern_loop_samples.max(spec.samples),
        opts.kz_samples,
    ) {
        Ok(c) => rec.chern = Some(c.chern),
        Err(e) => rec.errors.push(format!("chern: {e}")),
    }
    match arc_loop_intersection(arc, &pts(4 * spec.samples)) {
        Ok(n) => rec.intersection = Some(n),
        Err(e) => rec.errors.push(format!("intersection: {e}")),
    }
    rec
}

/// Surface scan, arc extraction and the four-way loop comparison for a field
/// with one Weyl pair of distinct projections.
pub fn run_battery(
    model: &HalfSpaceModel,
    loops: Option<Vec<LoopSpec>>,
    opts: &BatteryOptions,
) -> Result<BatteryResult> {
    let weyl = find_weyl_points(&model.field, 24)?;
    let (w_plus, w_minus) = weyl.projections()?;
    let loops = loops.unwrap_or_else(|| default_battery(w_plus, w_minus));
    let period = Some([TAU, TAU]);
    for l in &loops {
        l.validate(period)?;
        l.check_clearance(&[w_plus, w_minus], period)?;
    }
    // Anchor the grid so the positive-chirality projection sits at a cell
    // centre: no node lands on a gap closure and the arc can be followed
    // into the cell that contains its end point.
    let h = TAU / opts.grid as f64;
    let grid = SurfaceGrid::torus(opts.grid, [w_plus[0] / h - 0.5, w_plus[1] / h - 0.5]);
    let spectrum = surface_spectrum(model, grid, &opts.surface)?;
    let arc = fermi_arc(model, &spectrum, &opts.surface)?;
    let cell = grid.spacing[0].max(grid.spacing[1]);
    for l in &loops {
        let ends = arc.endpoints();
        if !ends.is_empty() && l.distance_to(&ends, period) < 2.0 * cell {
            return Err(Error::InvalidInput(format!(
                "loop {} passes within two grid cells of an arc endpoint",
                l.id
            )));
        }
    }
    let records = loops
        .par_iter()
        .map(|l| evaluate_loop(model, &arc, l, opts))
        .collect();
    Ok(BatteryResult {
        weyl,
        w_plus,
        w_minus,
        spectrum,
        arc,
        loops: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_battery_avoids_the_weyl_points() {
        let (wp, wm) = ([-PI / 2.0, 0.0], [PI / 2.0, 0.0]);
        for l in default_battery(wp, wm) {
            l.validate(Some([TAU, TAU])).unwrap();
            assert!(l.distance_to(&[wp, wm], Some([TAU, TAU])) > 0.3, "{}", l.id);
        }
    }
}
