//! Continuum Weyl pair: the quadratic classifying map
//! `g(w) = (w - w+) conj(w - w-)` with `w = px + i py`, pulled back to the
//! half-line Dirac family with a momentum-dependent boundary angle.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arc::{arc_loop_intersection, FermiArc};
use crate::edge::{edge_profile, Side};
use crate::error::{invalid, Error, Result};
use crate::flow::{
    spectral_flow_crossings, spectral_flow_exp_winding, winding_number, ComplexLoop, FlowResult,
    OperatorPath, PathSample, StateFilter,
};
use crate::halfline::{
    discretize, discretize_coupled_pair, DiracFamily, DiracParams, GaugeTwist, GridRule,
    HalfLineGrid, Potential, WindowRule,
};
use crate::loops::LoopSpec;
use crate::numerics::{eigh_window, HermitianMatrix, C64};
use crate::tight_binding::chern::lower_eigenvector;
use crate::tight_binding::{
    arc_from_spectrum, EdgeState, SurfaceGrid, SurfaceOptions, SurfacePoint, SurfaceSpectrum,
};

/// Momenta closer than this to a root are treated as gapless.
pub const GAPLESS_RADIUS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticWeylField {
    pub w_plus: C64,
    pub w_minus: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Root {
    Plus,
    Minus,
}

impl QuadraticWeylField {
    pub fn new(w_plus: C64, w_minus: C64) -> Result<Self> {
        if ![w_plus.re, w_plus.im, w_minus.re, w_minus.im]
            .iter()
            .all(|x| x.is_finite())
        {
            return invalid("roots must be finite");
        }
        if (w_plus - w_minus).norm() == 0.0 {
            return invalid("the two roots must differ");
        }
        Ok(Self { w_plus, w_minus })
    }

    pub fn g(&self, w: C64) -> C64 {
        (w - self.w_plus) * (w - self.w_minus).conj()
    }

    pub fn root(&self, r: Root) -> C64 {
        match r {
            Root::Plus => self.w_plus,
            Root::Minus => self.w_minus,
        }
    }

    pub fn separation(&self) -> f64 {
        (self.w_minus - self.w_plus).norm()
    }

    pub fn root_distance(&self, p: [f64; 2]) -> f64 {
        let w = C64::new(p[0], p[1]);
        (w - self.w_plus).norm().min((w - self.w_minus).norm())
    }

    /// Unit vector from `w+` towards `w-`.
    fn axis(&self) -> C64 {
        (self.w_minus - self.w_plus) / self.separation()
    }

    fn midpoint(&self) -> C64 {
        0.5 * (self.w_plus + self.w_minus)
    }
}

pub fn g_eval(f: &QuadraticWeylField, w: C64) -> C64 {
    f.g(w)
}

/// Winding of `g` on an anticlockwise circle of radius `|w+ - w-| / 10`
/// around the root.
pub fn local_index(f: &QuadraticWeylField, root: Root) -> Result<i64> {
    let c = f.root(root);
    let eps = 0.1 * f.separation();
    winding_number(&ComplexLoop::from_fn(256, |a| {
        f.g(c + C64::from_polar(eps, a))
    }))
}

/// Point `s` along the bisector translated by `offset` towards `w-`,
/// running anticlockwise relative to the axis.
fn bisector_point(f: &QuadraticWeylField, offset: f64, s: f64) -> C64 {
    let d = f.axis();
    f.midpoint() + d * offset + d * C64::new(0.0, 1.0) * s
}

/// Winding of `g` along the translated bisector `|s| <= half_length`,
/// closed through the asymptotic direction where `arg g -> 0`.
pub fn bisector_winding(
    f: &QuadraticWeylField,
    offset: f64,
    half_length: f64,
    n_samples: usize,
) -> Result<i64> {
    let half = 0.5 * f.separation();
    if (offset - half).abs() < 1e-6 || (offset + half).abs() < 1e-6 {
        return invalid(format!("line at offset {offset} passes through a root"));
    }
    if n_samples < 3 || !(half_length > 0.0) {
        return invalid("bisector winding needs a positive length and at least three samples");
    }
    let values: Vec<C64> = (0..n_samples)
        .map(|k| {
            let s = -half_length + 2.0 * half_length * k as f64 / (n_samples - 1) as f64;
            f.g(bisector_point(f, offset, s))
        })
        .collect();
    for z in [values[0], values[n_samples - 1]] {
        if z.arg().abs() >= 0.1 {
            return Err(Error::IllDefinedWinding(format!(
                "arg g = {:.3} at the line end; increase half_length",
                z.arg()
            )));
        }
    }
    winding_number(&ComplexLoop::new(values))
}

/// Boundary angle as a function of surface momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "registry", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaField {
    Constant {
        value: f64,
    },
    /// `value + slope . p`
    Affine {
        value: f64,
        slope: [f64; 2],
    },
    /// `value + amplitude exp(-|p - center|^2 / width^2)`
    RadialBump {
        value: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    /// Bilinear interpolation of samples on a grid, `i` fastest; constant
    /// extension outside.
    Sampled {
        origin: [f64; 2],
        spacing: [f64; 2],
        nx: usize,
        ny: usize,
        values: Vec<f64>,
    },
}

impl Default for GammaField {
    fn default() -> Self {
        GammaField::Constant { value: 0.0 }
    }
}

impl GammaField {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            GammaField::Constant { value } => {
                if !value.is_finite() {
                    return invalid("gamma must be finite");
                }
            }
            GammaField::Affine { value, slope } => {
                if !finite(&[*value, slope[0], slope[1]]) {
                    return invalid("affine gamma must be finite");
                }
            }
            GammaField::RadialBump {
                value,
                amplitude,
                center,
                width,
            } => {
                if !finite(&[*value, *amplitude, center[0], center[1]]) || !(*width > 0.0) {
                    return invalid("radial bump needs finite parameters and a positive width");
                }
            }
            GammaField::Sampled {
                spacing,
                nx,
                ny,
                values,
                origin,
            } => {
                if *nx < 2 || *ny < 2 || values.len() != nx * ny {
                    return invalid(format!("sampled gamma needs {nx} x {ny} >= 2 x 2 values"));
                }
                if !(spacing[0] > 0.0 && spacing[1] > 0.0) || !finite(origin) || !finite(values) {
                    return invalid("sampled gamma needs positive spacing and finite values");
                }
                for j in 0..*ny {
                    for i in 0..*nx {
                        let v = values[i + nx * j];
                        let right = (i + 1 < *nx).then(|| values[i + 1 + nx * j]);
                        let up = (j + 1 < *ny).then(|| values[i + nx * (j + 1)]);
                        for w in [right, up].into_iter().flatten() {
                            if (w - v).abs() >= 0.5 * PI {
                                return invalid(format!(
                                    "sampled gamma jumps by {:.3} at ({i}, {j}); adjacent samples must differ by less than pi/2",
                                    (w - v).abs()
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, p: [f64; 2]) -> f64 {
        match self {
            GammaField::Constant { value } => *value,
            GammaField::Affine { value, slope } => value + slope[0] * p[0] + slope[1] * p[1],
            GammaField::RadialBump {
                value,
                amplitude,
                center,
                width,
            } => {
                let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                value + amplitude * (-r2 / (width * width)).exp()
            }
            GammaField::Sampled {
                origin,
                spacing,
                nx,
                ny,
                values,
            } => {
                let x = ((p[0] - origin[0]) / spacing[0]).clamp(0.0, (nx - 1) as f64);
                let y = ((p[1] - origin[1]) / spacing[1]).clamp(0.0, (ny - 1) as f64);
                let i = (x.floor() as usize).min(nx - 2);
                let j = (y.floor() as usize).min(ny - 2);
                let (tx, ty) = (x - i as f64, y - j as f64);
                let v = |i: usize, j: usize| values[i + nx * j];
                (1.0 - tx) * (1.0 - ty) * v(i, j)
                    + tx * (1.0 - ty) * v(i + 1, j)
                    + (1.0 - tx) * ty * v(i, j + 1)
                    + tx * ty * v(i + 1, j + 1)
            }
        }
    }
}

/// Twisting function `A(px, py) = a px + b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistPlan {
    pub a: f64,
    pub b: f64,
}

impl TwistPlan {
    pub fn at(&self, p: [f64; 2]) -> f64 {
        self.a * p[0] + self.b
    }
}

/// Serialized form of a continuum model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub w_plus: [f64; 2],
    pub w_minus: [f64; 2],
    #[serde(default)]
    pub gamma: GammaField,
    #[serde(default)]
    pub twist: TwistPlan,
}

impl FieldSpec {
    pub fn field(&self) -> Result<QuadraticWeylField> {
        self.gamma.validate()?;
        QuadraticWeylField::new(
            C64::new(self.w_plus[0], self.w_plus[1]),
            C64::new(self.w_minus[0], self.w_minus[1]),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.field()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Half-line parameters at one surface momentum: `(m, theta)` is the polar
/// form of `g`, the boundary angle comes from `gamma`.
pub fn pullback_params(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    p: [f64; 2],
) -> Result<DiracParams> {
    let d = f.root_distance(p);
    if d < GAPLESS_RADIUS {
        return Err(Error::Gapless(format!(
            "({}, {}) lies within {d:.1e} of a root",
            p[0], p[1]
        )));
    }
    let g = f.g(C64::new(p[0], p[1]));
    DiracParams::new(g.norm(), g.arg(), gamma.at(p))
}

#[derive(Clone, Debug)]
pub struct PullbackPoint {
    pub p: [f64; 2],
    /// `None` at gapless points.
    pub params: Option<DiracParams>,
    pub matrix: Option<HermitianMatrix>,
}

pub fn pullback_family(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    points: &[[f64; 2]],
    rule: GridRule,
) -> Result<Vec<PullbackPoint>> {
    gamma.validate()?;
    points
        .par_iter()
        .map(|&p| match pullback_params(f, gamma, p) {
            Ok(params) => {
                let grid = rule.grid_for(params.m)?;
                let matrix = discretize(&params, &grid, None, None)?;
                Ok(PullbackPoint {
                    p,
                    params: Some(params),
                    matrix: Some(matrix),
                })
            }
            Err(Error::Gapless(_)) => Ok(PullbackPoint {
                p,
                params: None,
                matrix: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Closed operator path along a momentum loop, with window `(-f m, f m)` at
/// each sample.
pub fn pullback_loop(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    twist: Option<TwistPlan>,
    spec: &LoopSpec,
    rule: GridRule,
    window_fraction: f64,
    budget: usize,
) -> Result<OperatorPath> {
    gamma.validate()?;
    spec.validate(None)?;
    let roots = [[f.w_plus.re, f.w_plus.im], [f.w_minus.re, f.w_minus.im]];
    spec.check_clearance(&roots, None)?;
    let (fc, gc, sc) = (*f, gamma.clone(), spec.clone());
    let mut fam = DiracFamily::new(
        Arc::new(move |t| pullback_params(&fc, &gc, sc.point(t))),
        rule,
        WindowRule::MassFraction(window_fraction),
    );
    if let Some(plan) = twist {
        let sc = spec.clone();
        fam = fam.with_twist(Arc::new(move |t| {
            GaugeTwist::Constant(plan.at(sc.point(t)))
        }));
    }
    fam.closed_path(0.0, 1.0, spec.samples, budget)
}

/// `-winding(g o loop)`, the flow the factorization predicts.
pub fn predicted_flow(f: &QuadraticWeylField, spec: &LoopSpec) -> Result<i64> {
    let n = 16 * spec.samples;
    let values = (0..n).map(|i| {
        let p = spec.point(i as f64 / n as f64);
        f.g(C64::new(p[0], p[1]))
    });
    Ok(-winding_number(&ComplexLoop::new(values.collect()))?)
}

/// Knobs of continuum arc extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuumOptions {
    pub grid: GridRule,
    pub surface: SurfaceOptions,
}

impl Default for ContinuumOptions {
    fn default() -> Self {
        Self {
            grid: GridRule::MassScaled {
                n_sites: 200,
                mass_spacing: 0.1,
                max_spacing: 1e3,
            },
            surface: SurfaceOptions::default(),
        }
    }
}

/// In-window states at one surface momentum.
pub fn continuum_point(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    p: [f64; 2],
    potential: Option<&Potential>,
    opts: &ContinuumOptions,
) -> Result<SurfacePoint> {
    let params = match pullback_params(f, gamma, p) {
        Ok(x) => x,
        Err(Error::Gapless(_)) => {
            return Ok(SurfacePoint {
                k: p,
                window: None,
                states: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let w = opts.surface.window_fraction * params.m;
    if params.m < opts.surface.min_gap {
        return Ok(SurfacePoint {
            k: p,
            window: None,
            states: Vec::new(),
        });
    }
    let grid = opts.grid.grid_for(params.m)?;
    let h = discretize(&params, &grid, None, potential)?;
    let es = eigh_window(&h, -w, w)?;
    let states = es
        .values
        .iter()
        .zip(&es.vectors)
        .map(|(&energy, v)| {
            let prof = edge_profile(v, 2, opts.surface.edge_fraction);
            EdgeState {
                energy,
                edge_weight: prof.weight(),
                side: prof.side,
            }
        })
        .collect();
    Ok(SurfacePoint {
        k: p,
        window: Some((-w, w)),
        states,
    })
}

pub fn continuum_spectrum(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    grid: SurfaceGrid,
    potential: Option<&Potential>,
    opts: &ContinuumOptions,
) -> Result<SurfaceSpectrum> {
    gamma.validate()?;
    if grid.periodic || grid.nx < 2 || grid.ny < 2 {
        return invalid("continuum scans need a rectangular grid of at least 2 x 2 points");
    }
    let points = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            continuum_point(
                f,
                gamma,
                grid.point(idx % grid.nx, idx / grid.nx),
                potential,
                opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceSpectrum { grid, points })
}

/// Rectangle of half-width about `extent` around the midpoint of the two
/// roots, with both roots at cell centres: `w_plus` is placed at a centre and
/// the spacing along each axis divides the root offset.
pub fn anchored_grid(w_plus: [f64; 2], w_minus: [f64; 2], extent: f64, n: usize) -> SurfaceGrid {
    let h0 = 2.0 * extent / (n.max(2) - 1) as f64;
    let mut origin = [0.0; 2];
    let mut spacing = [0.0; 2];
    let mut count = [0usize; 2];
    for a in 0..2 {
        let d = (w_minus[a] - w_plus[a]).abs();
        let h = if d > 1e-12 {
            d / (d / h0).round().max(1.0)
        } else {
            h0
        };
        let lo = 0.5 * (w_plus[a] + w_minus[a]) - extent;
        origin[a] = w_plus[a] - h * (((w_plus[a] - lo) / h).ceil() - 0.5);
        count[a] = (2.0 * extent / h).ceil() as usize + 1;
        spacing[a] = h;
    }
    SurfaceGrid {
        origin,
        spacing,
        nx: count[0],
        ny: count[1],
        periodic: false,
    }
}

/// Zero-energy near-edge locus of the pulled-back family.
pub fn continuum_arc(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    grid: SurfaceGrid,
    potential: Option<&Potential>,
    opts: &ContinuumOptions,
) -> Result<(SurfaceSpectrum, FermiArc)> {
    let spectrum = continuum_spectrum(f, gamma, grid, potential, opts)?;
    let arc = arc_from_spectrum(&spectrum, &opts.surface, |p| {
        continuum_point(f, gamma, p, potential, opts)
    })?;
    Ok((spectrum, arc))
}

/// Signed crossings of the arc with translated bisectors. Each line runs
/// across the whole scan (`reach` on either side of the axis) and is
/// closed far on the `w-` side, outside the scanned region, so only the
/// line itself can meet the arc.
pub fn bisector_crossings(
    arc: &FermiArc,
    f: &QuadraticWeylField,
    offsets: &[f64],
    reach: f64,
) -> Result<Vec<i64>> {
    let far = 4.0 * reach;
    offsets
        .iter()
        .map(|&o| {
            let corners = [
                bisector_point(f, o, -reach),
                bisector_point(f, o, reach),
                bisector_point(f, o + far, reach),
                bisector_point(f, o + far, -reach),
            ];
            let n = 400;
            let mut pts = Vec::with_capacity(4 * n);
            for c in 0..4 {
                let (a, b) = (corners[c], corners[(c + 1) % 4]);
                for k in 0..n {
                    let z = a + (b - a) * (k as f64 / n as f64);
                    pts.push([z.re, z.im]);
                }
            }
            arc_loop_intersection(arc, &pts)
        })
        .collect()
}

/// Right-handed sector `(m, theta; gamma)` plus left-handed sector
/// `(m, -theta; -gamma - pi)`, whose zero modes share the ray
/// `theta = gamma + pi/2`, coupled by `delta` times the identity. The
/// coupling can close the bulk gap down to `m - delta`, so windows are a
/// fraction of that.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpuriousOptions {
    pub m: f64,
    pub gamma: f64,
    pub n_sites: usize,
    pub spacing: f64,
    pub samples: usize,
    pub window_fraction: f64,
    pub budget: usize,
}

impl Default for SpuriousOptions {
    fn default() -> Self {
        Self {
            m: 1.0,
            gamma: 0.0,
            n_sites: 400,
            spacing: 0.1,
            samples: 64,
            window_fraction: 0.75,
            budget: 256,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpuriousReport {
    pub delta: f64,
    /// Flows of the uncoupled right- and left-handed loops.
    pub sector_flows: [i64; 2],
    pub flow_crossings: i64,
    pub flow_exp: i64,
    /// Zero passages found by the crossings algorithm.
    pub zero_crossings: usize,
    /// Smallest near-edge `|E|` over the samples and the zero-mode ray.
    pub min_abs_energy: f64,
    /// Near-edge states with `|E| <= 1e-8` on the zero-mode ray.
    pub zero_modes_on_ray: usize,
    #[serde(skip)]
    pub crossings: Option<FlowResult>,
}

fn spurious_sample(
    o: &SpuriousOptions,
    delta: f64,
    grid: &HalfLineGrid,
    theta: f64,
) -> Result<PathSample> {
    let right = DiracParams::new(o.m, theta, o.gamma)?;
    let left = DiracParams::new(o.m, -theta, -o.gamma - PI)?;
    let matrix = discretize_coupled_pair(&right, &left, delta, grid)?;
    let w = o.window_fraction * (o.m - delta);
    Ok(PathSample {
        param: theta,
        matrix,
        window: (-w, w),
    })
}

fn near_energies(s: &PathSample, edge_fraction: f64) -> Result<Vec<f64>> {
    let sys = eigh_window(&s.matrix, s.window.0, s.window.1)?;
    Ok(sys
        .values
        .iter()
        .zip(&sys.vectors)
        .filter(|(_, v)| edge_profile(v, s.matrix.orbitals(), edge_fraction).side == Side::Near)
        .map(|(e, _)| *e)
        .collect())
}

pub fn spurious_pair_family(delta: f64, o: &SpuriousOptions) -> Result<SpuriousReport> {
    if !(o.m > 0.0) {
        return invalid("spurious pair needs m > 0");
    }
    if !(delta >= 0.0 && delta < o.m) {
        return invalid(format!("coupling must lie in [0, m), got {delta}"));
    }
    let grid = HalfLineGrid::new(o.n_sites, o.spacing)?;
    let sector = |sign: f64, gamma: f64| -> Result<i64> {
        let m = o.m;
        let fam = DiracFamily::new(
            Arc::new(move |xi| DiracParams::new(m, sign * xi, gamma)),
            GridRule::Fixed {
                n_sites: o.n_sites,
                spacing: o.spacing,
            },
            WindowRule::Fixed(-o.window_fraction * m, o.window_fraction * m),
        );
        Ok(spectral_flow_crossings(&fam.closed_path(0.0, 2.0 * PI, o.samples, o.budget)?)?.flow)
    };
    let sector_flows = [sector(1.0, o.gamma)?, sector(-1.0, -o.gamma - PI)?];

    // Samples sit half a step off the zero-mode ray; the ray is checked
    // separately.
    let ray = o.gamma + 0.5 * PI;
    let step = 2.0 * PI / o.samples as f64;
    let start = ray + 0.5 * step;
    let samples = (0..o.samples)
        .into_par_iter()
        .map(|i| spurious_sample(o, delta, &grid, start + step * i as f64))
        .collect::<Result<Vec<_>>>()?;
    let oc = *o;
    let sampler: crate::flow::Sampler = Arc::new(move |t| spurious_sample(&oc, delta, &grid, t));
    let path = OperatorPath::closed(samples, 2.0 * PI)?
        .with_filter(StateFilter::near_edge())
        .with_sampler(sampler.clone(), o.budget);
    let cr = spectral_flow_crossings(&path)?;
    let ex = spectral_flow_exp_winding(&path)?;
    let edge_fraction = StateFilter::near_edge().edge_fraction;
    let mut min_abs = cr
        .spectra
        .iter()
        .flat_map(|s| s.energies.iter())
        .map(|e| e.abs())
        .fold(f64::INFINITY, f64::min);
    let on_ray = near_energies(&sampler(ray)?, edge_fraction)?;
    for e in &on_ray {
        min_abs = min_abs.min(e.abs());
    }
    Ok(SpuriousReport {
        delta,
        sector_flows,
        flow_crossings: cr.flow,
        flow_exp: ex.flow,
        zero_crossings: cr.crossings.len(),
        min_abs_energy: min_abs,
        zero_modes_on_ray: on_ray.iter().filter(|e| e.abs() <= 1e-8).count(),
        crossings: Some(cr),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistFlow {
    pub loop_id: String,
    pub untwisted: i64,
    pub twisted: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistReport {
    pub plan: TwistPlan,
    pub points: usize,
    /// Largest in-window eigenvalue difference, infinite when the counts
    /// differ.
    pub max_deviation: f64,
    pub flows: Vec<TwistFlow>,
}

/// Compare twisted and untwisted operators pointwise and along loops.
pub fn twist_shift_check(
    f: &QuadraticWeylField,
    gamma: &GammaField,
    plan: TwistPlan,
    points: &[[f64; 2]],
    loops: &[LoopSpec],
    rule: GridRule,
    window_fraction: f64,
) -> Result<TwistReport> {
    gamma.validate()?;
    let devs = points
        .par_iter()
        .map(|&p| {
            let params = match pullback_params(f, gamma, p) {
                Ok(x) => x,
                Err(Error::Gapless(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let grid = rule.grid_for(params.m)?;
            let w = window_fraction * params.m;
            let plain = eigh_window(&discretize(&params, &grid, None, None)?, -w, w)?;
            let twist = GaugeTwist::Constant(plan.at(p));
            let twisted = eigh_window(&discretize(&params, &grid, Some(&twist), None)?, -w, w)?;
            if plain.values.len() != twisted.values.len() {
                return Ok(Some(f64::INFINITY));
            }
            Ok(Some(
                plain
                    .values
                    .iter()
                    .zip(&twisted.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let checked: Vec<f64> = devs.into_iter().flatten().collect();
    let flows = loops
        .iter()
        .map(|l| {
            let a = spectral_flow_crossings(&pullback_loop(
                f,
                gamma,
                None,
                l,
                rule,
                window_fraction,
                256,
            )?)?
            .flow;
            let b = spectral_flow_crossings(&pullback_loop(
                f,
                gamma,
                Some(plan),
                l,
                rule,
                window_fraction,
                256,
            )?)?
            .flow;
            Ok(TwistFlow {
                loop_id: l.id.clone(),
                untwisted: a,
                twisted: b,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TwistReport {
        plan,
        points: checked.len(),
        max_deviation: checked.into_iter().fold(0.0, f64::max),
        flows,
    })
}

/// Raw Berry flux of the lower band of `(a, py, pz) . sigma` through the
/// disc `py^2 + pz^2 <= radius^2`, over `2 pi`. Polar plaquettes, `density`
/// steps in each direction; the result is deliberately not rounded.
pub fn half_plane_chern_half(a: f64, radius: f64, density: usize) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return invalid(format!("half-plane flux needs a > 0, got {a}"));
    }
    if !(radius > 0.0) || density < 4 {
        return invalid("half-plane flux needs a positive radius and density >= 4");
    }
    let n = density;
    let at = |i: usize, j: usize| {
        let r = radius * i as f64 / n as f64;
        let t = 2.0 * PI * (j % n) as f64 / n as f64;
        lower_eigenvector([a, r * t.cos(), r * t.sin()])
    };
    let rows = (0..=n)
        .map(|i| (0..n).map(|j| at(i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let link = |u: &[C64; 2], v: &[C64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (u00, u10, u11, u01) = (
                &rows[i][j],
                &rows[i + 1][j],
                &rows[i + 1][(j + 1) % n],
                &rows[i][(j + 1) % n],
            );
            total += (link(u00, u10) * link(u10, u11) * link(u11, u01) * link(u01, u00)).arg();
        }
    }
    Ok(total / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> QuadraticWeylField {
        QuadraticWeylField::new(C64::new(-1.0, 0.0), C64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn g_vanishes_at_roots_and_points_left_between_them() {
        let f = QuadraticWeylField::new(C64::new(-0.3, 0.8), C64::new(1.1, -0.4)).unwrap();
        assert_eq!(g_eval(&f, f.w_plus), C64::new(0.0, 0.0));
        assert_eq!(g_eval(&f, f.w_minus), C64::new(0.0, 0.0));
        let mid = g_eval(&f, 0.5 * (f.w_plus + f.w_minus));
        let sep2 = (f.w_plus - f.w_minus).norm_sqr();
        assert!((mid - C64::new(-0.25 * sep2, 0.0)).norm() < 1e-14);
        for a in [0.0, 1.0, 2.5, -2.0] {
            assert!(g_eval(&f, C64::from_polar(1e7, a)).arg().abs() < 1e-6);
        }
    }

    #[test]
    fn local_indices() {
        let f = pair();
        assert_eq!(local_index(&f, Root::Plus).unwrap(), 1);
        assert_eq!(local_index(&f, Root::Minus).unwrap(), -1);
    }

    #[test]
    fn bisector_winds_between_the_roots_only() {
        let f = pair();
        assert_eq!(bisector_winding(&f, 0.0, 60.0, 6000).unwrap(), 1);
        assert_eq!(bisector_winding(&f, 0.0, 60.0, 12000).unwrap(), 1);
        assert_eq!(bisector_winding(&f, 1.5, 60.0, 6000).unwrap(), 0);
        assert!(bisector_winding(&f, 0.0, 2.0, 100).is_err());
        assert!(bisector_winding(&f, 1.0, 60.0, 6000).is_err());
    }

    #[test]
    fn sampled_gamma_interpolates_and_rejects_jumps() {
        let g = GammaField::Sampled {
            origin: [0.0, 0.0],
            spacing: [1.0, 1.0],
            nx: 2,
            ny: 2,
            values: vec![0.0, 1.0, 0.5, 1.5],
        };
        g.validate().unwrap();
        assert!((g.at([0.5, 0.5]) - 0.75).abs() < 1e-15);
        assert_eq!(g.at([-3.0, 9.0]), 0.5);
        let bad = GammaField::Sampled {
            origin: [0.0, 0.0],
            spacing: [1.0, 1.0],
            nx: 2,
            ny: 2,
            values: vec![0.0, 2.0, 0.0, 0.0],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn field_spec_round_trips() {
        let spec = FieldSpec {
            w_plus: [-1.0, 0.0],
            w_minus: [1.0, 0.0],
            gamma: GammaField::RadialBump {
                value: 0.1,
                amplitude: 0.4,
                center: [0.0, -0.5],
                width: 0.7,
            },
            twist: TwistPlan { a: 0.5, b: 0.2 },
        };
        assert_eq!(
            FieldSpec::from_json(&spec.to_json().unwrap()).unwrap(),
            spec
        );
        assert!(FieldSpec::from_json(r#"{"w_plus":[0,0],"w_minus":[0,0]}"#).is_err());
    }

    #[test]
    fn pullback_marks_roots_gapless() {
        let f = pair();
        let pts = pullback_family(
            &f,
            &GammaField::default(),
            &[[-1.0, 0.0005], [0.0, -1.0]],
            GridRule::Fixed {
                n_sites: 32,
                spacing: 0.1,
            },
        )
        .unwrap();
        assert!(pts[0].params.is_none() && pts[0].matrix.is_none());
        let p = pts[1].params.unwrap();
        // g(-i) = |w|^2 - 1 - 2 i y = 2 i
        assert!((p.m - 2.0).abs() < 1e-14 && (p.theta - 0.5 * PI).abs() < 1e-14);
    }
}
