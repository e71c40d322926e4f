//! Massive Dirac operators on the half-line with a one-parameter family of
//! self-adjoint boundary conditions, and their finite-difference
//! discretization.
//!
//! In the original basis the operator is
//! `[[-i d/dz, m e^{-i theta}], [m e^{i theta}, i d/dz]]` on `z >= 0` with
//! `psi(0)` proportional to `(1, e^{i gamma})`. It is unitarily equivalent to
//! the same operator with `(theta - gamma, 0)`, and a further spin rotation
//! brings it to
//!
//! ```text
//! [[ m cos(phi),          m sin(phi) - d/dz ],
//!  [ m sin(phi) + d/dz,  -m cos(phi)        ]],   phi = theta - gamma,
//! ```
//!
//! with a Dirichlet condition on the second component. The discretization
//! uses a backward difference for `d/dz` acting on the second component
//! (ghost value zero at `z = -h`) and its adjoint on the first. Interleaving
//! the components site by site gives a real symmetric tridiagonal matrix.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::edge::{edge_profile, EdgeProfile};
use crate::error::{invalid, Error, Result};
use crate::flow::{OperatorPath, PathSample, StateFilter};
use crate::numerics::mat2::{self, Mat2};
use crate::numerics::{eigh_window, wrap_angle, BlockTridiagonal, HermitianMatrix, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Mass, mass angle and boundary angle. Angles are reduced to `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    pub m: f64,
    pub theta: f64,
    pub gamma: f64,
}

impl DiracParams {
    pub fn new(m: f64, theta: f64, gamma: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.0 {
            return invalid(format!("mass must be finite and non-negative, got {m}"));
        }
        if !theta.is_finite() || !gamma.is_finite() {
            return invalid("angles must be finite");
        }
        Ok(Self {
            m,
            theta: wrap_angle(theta),
            gamma: wrap_angle(gamma),
        })
    }

    /// Mass angle relative to the boundary angle.
    pub fn phi(&self) -> f64 {
        wrap_angle(self.theta - self.gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub energy: f64,
    /// Exponential decay rate of the eigenfunction.
    pub decay: f64,
}

/// The unique eigenvalue in the gap, present iff `sin(theta - gamma) > 0`.
pub fn bound_state(p: &DiracParams) -> Result<Option<BoundState>> {
    if p.m == 0.0 {
        return Err(Error::Gapless(
            "massless operator has no bound states".into(),
        ));
    }
    let phi = p.phi();
    let s = phi.sin();
    if s > 0.0 {
        Ok(Some(BoundState {
            energy: p.m * phi.cos(),
            decay: p.m * s,
        }))
    } else {
        Ok(None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssentialSpectrum {
    /// Top of the lower band, `-m`.
    pub lower_edge: f64,
    /// Bottom of the upper band, `m`.
    pub upper_edge: f64,
}

impl EssentialSpectrum {
    pub fn is_gapless(&self) -> bool {
        self.upper_edge <= self.lower_edge
    }
}

/// `(-inf, -m] U [m, inf)`, independent of both angles.
pub fn essential_spectrum(p: &DiracParams) -> EssentialSpectrum {
    EssentialSpectrum {
        lower_edge: -p.m,
        upper_edge: p.m,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    pub n_sites: usize,
    pub spacing: f64,
}

impl HalfLineGrid {
    pub fn new(n_sites: usize, spacing: f64) -> Result<Self> {
        if n_sites < 16 {
            return invalid(format!("need at least 16 sites, got {n_sites}"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return invalid(format!("spacing must be positive, got {spacing}"));
        }
        Ok(Self { n_sites, spacing })
    }

    pub fn length(&self) -> f64 {
        self.n_sites as f64 * self.spacing
    }

    pub fn site(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }
}

/// How a grid is chosen for a given mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GridRule {
    Fixed {
        n_sites: usize,
        spacing: f64,
    },
    /// Spacing `mass_spacing / m`, capped at `max_spacing`. The operator
    /// scales as `m H(1, m h)`, so this keeps the localization in sites
    /// the same for every mass.
    MassScaled {
        n_sites: usize,
        mass_spacing: f64,
        max_spacing: f64,
    },
}

impl GridRule {
    pub fn grid_for(&self, m: f64) -> Result<HalfLineGrid> {
        match *self {
            GridRule::Fixed { n_sites, spacing } => HalfLineGrid::new(n_sites, spacing),
            GridRule::MassScaled {
                n_sites,
                mass_spacing,
                max_spacing,
            } => {
                let h = if m > 0.0 {
                    (mass_spacing / m).min(max_spacing)
                } else {
                    max_spacing
                };
                HalfLineGrid::new(n_sites, h)
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        match *self {
            GridRule::Fixed { n_sites, .. } | GridRule::MassScaled { n_sites, .. } => n_sites,
        }
    }
}

/// Gauge twist `A`, applied by conjugating with `exp(i int_0^z A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeTwist {
    Constant(f64),
    /// `A` sampled at the grid sites.
    Profile(Vec<f64>),
}

impl GaugeTwist {
    fn phases(&self, grid: &HalfLineGrid) -> Result<Vec<f64>> {
        match self {
            GaugeTwist::Constant(a) => {
                if !a.is_finite() {
                    return invalid("twist must be finite");
                }
                Ok((0..grid.n_sites).map(|j| a * grid.site(j)).collect())
            }
            GaugeTwist::Profile(v) => {
                if v.len() != grid.n_sites {
                    return invalid(format!(
                        "twist profile has {} samples for {} sites",
                        v.len(),
                        grid.n_sites
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return invalid("twist profile must be finite");
                }
                let mut out = vec![0.0; v.len()];
                for j in 1..v.len() {
                    out[j] = out[j - 1] + 0.5 * grid.spacing * (v[j - 1] + v[j]);
                }
                Ok(out)
            }
        }
    }
}

/// Relatively compact Hermitian potential, given in the original basis.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// `matrix * exp(-rate z)`
    Exponential { matrix: Mat2, rate: f64 },
    /// Samples at `z = i dz`, linearly interpolated, zero beyond the last.
    Sampled { dz: f64, values: Vec<Mat2> },
}

impl Potential {
    pub fn exponential(matrix: Mat2, rate: f64) -> Result<Self> {
        check_hermitian(&matrix)?;
        if !(rate > 0.0) || !rate.is_finite() {
            return invalid(format!("potential must decay: rate {rate}"));
        }
        Ok(Potential::Exponential { matrix, rate })
    }

    pub fn sampled(dz: f64, values: Vec<Mat2>) -> Result<Self> {
        if !(dz > 0.0) || values.len() < 2 {
            return invalid("sampled potential needs dz > 0 and at least two samples");
        }
        for v in &values {
            check_hermitian(v)?;
        }
        let peak = values.iter().map(mat2::norm).fold(0.0, f64::max);
        let tail = mat2::norm(values.last().expect("non-empty"));
        if tail > 1e-6 * peak.max(f64::MIN_POSITIVE) {
            return invalid("sampled potential does not decay to zero at its last sample");
        }
        Ok(Potential::Sampled { dz, values })
    }

    pub fn at(&self, z: f64) -> Mat2 {
        match self {
            Potential::Exponential { matrix, rate } => {
                mat2::scale(matrix, C64::new((-rate * z).exp(), 0.0))
            }
            Potential::Sampled { dz, values } => {
                let x = z / dz;
                let i = x.floor();
                if i < 0.0 || i as usize + 1 >= values.len() {
                    return mat2::ZERO2;
                }
                let (i, t) = (i as usize, x - i);
                mat2::add(
                    &mat2::scale(&values[i], C64::new(1.0 - t, 0.0)),
                    &mat2::scale(&values[i + 1], C64::new(t, 0.0)),
                )
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Potential::Exponential { matrix, .. } => mat2::norm(matrix),
            Potential::Sampled { values, .. } => values.iter().map(mat2::norm).fold(0.0, f64::max),
        }
    }
}

fn check_hermitian(m: &Mat2) -> Result<()> {
    if m.iter()
        .flatten()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return invalid("potential has non-finite entries");
    }
    let d = mat2::hermiticity_defect(m);
    if d > 1e-12 * mat2::norm(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian {
            row: 0,
            col: 1,
            deviation: d,
        });
    }
    Ok(())
}

/// Unitary taking the original basis to the rotated one in which the
/// boundary condition is Dirichlet on the second component.
pub fn rotation(gamma: f64) -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = C64::from_polar(s, -gamma);
    [
        [C64::new(s, 0.0), e],
        [C64::new(0.0, s), e * C64::new(0.0, -1.0)],
    ]
}

/// The operator in the original basis (for tests and diagnostics).
pub fn symbol(p: &DiracParams, k: f64) -> Mat2 {
    [
        [C64::new(k, 0.0), C64::from_polar(p.m, -p.theta)],
        [C64::from_polar(p.m, p.theta), C64::new(-k, 0.0)],
    ]
}

fn site_block(p: &DiracParams, h: f64) -> Mat2 {
    let phi = p.phi();
    let (c, s) = (p.m * phi.cos(), p.m * phi.sin());
    [
        [C64::new(c, 0.0), C64::new(s - 1.0 / h, 0.0)],
        [C64::new(s - 1.0 / h, 0.0), C64::new(-c, 0.0)],
    ]
}

fn grid_warnings(p: &DiracParams, grid: &HalfLineGrid) {
    let hms = grid.spacing * p.m * p.phi().sin().abs();
    if hms > 0.5 {
        log::warn!("grid too coarse: h m |sin phi| = {hms:.3} > 0.5");
    } else if grid.spacing * p.m > 0.1 {
        log::debug!(
            "h m = {:.3} exceeds the recommended 0.1",
            grid.spacing * p.m
        );
    }
}

/// Discretized operator in the rotated basis, interleaved
/// `(u1_0, u2_0, u1_1, u2_1, ...)`.
pub fn discretize(
    p: &DiracParams,
    grid: &HalfLineGrid,
    twist: Option<&GaugeTwist>,
    v: Option<&Potential>,
) -> Result<HermitianMatrix> {
    grid_warnings(p, grid);
    let n = grid.n_sites;
    let h = grid.spacing;
    let base = site_block(p, h);
    let w = rotation(p.gamma);
    let mut diag = Vec::with_capacity(4 * n);
    for j in 0..n {
        let mut blk = base;
        if let Some(v) = v {
            blk = mat2::add(&blk, &mat2::conjugate(&w, &v.at(grid.site(j))));
        }
        diag.extend([blk[0][0], blk[0][1], blk[1][0], blk[1][1]]);
    }
    let phases = match twist {
        Some(t) => Some(t.phases(grid)?),
        None => None,
    };
    let mut upper = Vec::with_capacity(4 * (n - 1));
    for j in 0..n - 1 {
        let f = match &phases {
            Some(ph) => C64::from_polar(1.0 / h, ph[j] - ph[j + 1]),
            None => C64::new(1.0 / h, 0.0),
        };
        upper.extend([ZERO, ZERO, f, ZERO]);
    }
    Ok(HermitianMatrix::from_blocks(BlockTridiagonal::new(
        2, diag, upper,
    )?))
}

/// Direct sum of two sectors coupled by `delta` times the identity between
/// corresponding rotated components. Four components per site, ordered
/// `(u1 right, u1 left, u2 right, u2 left)` to keep the scalar bandwidth at
/// two.
pub fn discretize_coupled_pair(
    right: &DiracParams,
    left: &DiracParams,
    delta: f64,
    grid: &HalfLineGrid,
) -> Result<HermitianMatrix> {
    grid_warnings(right, grid);
    grid_warnings(left, grid);
    let n = grid.n_sites;
    let h = grid.spacing;
    let (r, l) = (site_block(right, h), site_block(left, h));
    let d = C64::new(delta, 0.0);
    let mut diag = Vec::with_capacity(16 * n);
    for _ in 0..n {
        diag.extend([r[0][0], d, r[0][1], ZERO]);
        diag.extend([d, l[0][0], ZERO, l[0][1]]);
        diag.extend([r[1][0], ZERO, r[1][1], d]);
        diag.extend([ZERO, l[1][0], d, l[1][1]]);
    }
    let f = C64::new(1.0 / h, 0.0);
    let mut upper = Vec::with_capacity(16 * (n - 1));
    for _ in 0..n - 1 {
        upper.extend([ZERO, ZERO, ZERO, ZERO]);
        upper.extend([ZERO, ZERO, ZERO, ZERO]);
        upper.extend([f, ZERO, ZERO, ZERO]);
        upper.extend([ZERO, f, ZERO, ZERO]);
    }
    Ok(HermitianMatrix::from_blocks(BlockTridiagonal::new(
        4, diag, upper,
    )?))
}

/// In-window eigenpairs of a discretized operator with their edge profile.
pub fn window_states(h: &HermitianMatrix, lo: f64, hi: f64) -> Result<Vec<(f64, EdgeProfile)>> {
    let sys = eigh_window(h, lo, hi)?;
    Ok(sys
        .values
        .iter()
        .zip(&sys.vectors)
        .map(|(e, v)| (*e, edge_profile(v, h.orbitals(), 0.2)))
        .collect())
}

/// Resolvent kernel of the rotated operator with `phi = 0` at spectral
/// parameter `lambda` off the essential spectrum:
///
/// ```text
/// K(z, z') = 1/2 [[-(l+m)/(i mu),  sgn(z-z')    ],
///                 [-sgn(z-z'),    -(l-m)/(i mu) ]] e^{i mu |z-z'|}
///          - 1/2 [[ (l+m)/(i mu),  1            ],
///                 [ 1,             (l-m)/(i mu) ]] e^{i mu (z-z')}
/// ```
///
/// with `mu = sqrt(l^2 - m^2)`, `Im mu > 0`.
pub fn resolvent_kernel(m: f64, z: f64, zp: f64, lambda: C64) -> Result<Mat2> {
    if z < 0.0 || zp < 0.0 {
        return invalid("kernel arguments must lie on the half-line");
    }
    let mu = kernel_momentum(m, lambda)?;
    let imu = C64::new(0.0, 1.0) * mu;
    let sgn = if z > zp {
        1.0
    } else if z < zp {
        -1.0
    } else {
        0.0
    };
    let e1 = (imu * (z - zp).abs()).exp();
    let e2 = (imu * (z - zp)).exp();
    let half = 0.5;
    let free = [
        [
            -(lambda + m) / imu * half * e1,
            C64::new(half * sgn, 0.0) * e1,
        ],
        [
            C64::new(-half * sgn, 0.0) * e1,
            -(lambda - m) / imu * half * e1,
        ],
    ];
    let refl = [
        [(lambda + m) / imu * half * e2, C64::new(half, 0.0) * e2],
        [C64::new(half, 0.0) * e2, (lambda - m) / imu * half * e2],
    ];
    Ok([
        [free[0][0] - refl[0][0], free[0][1] - refl[0][1]],
        [free[1][0] - refl[1][0], free[1][1] - refl[1][1]],
    ])
}

/// `sqrt(lambda^2 - m^2)` on the branch with positive imaginary part.
pub fn kernel_momentum(m: f64, lambda: C64) -> Result<C64> {
    let mu = (lambda * lambda - m * m).sqrt();
    let mu = if mu.im < 0.0 { -mu } else { mu };
    if mu.im <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "lambda = {lambda} lies on the essential spectrum"
        )));
    }
    Ok(mu)
}

/// Rule for the spectral window of each sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// `(-f m, f m)` with the mass of the sample.
    MassFraction(f64),
    Fixed(f64, f64),
}

impl WindowRule {
    fn window(&self, m: f64) -> (f64, f64) {
        match *self {
            WindowRule::MassFraction(f) => (-f * m, f * m),
            WindowRule::Fixed(lo, hi) => (lo, hi),
        }
    }
}

pub type ParamsFn = Arc<dyn Fn(f64) -> Result<DiracParams> + Send + Sync>;
pub type TwistFn = Arc<dyn Fn(f64) -> GaugeTwist + Send + Sync>;

/// A one-parameter family of half-line operators ready to be sampled.
#[derive(Clone)]
pub struct DiracFamily {
    pub params: ParamsFn,
    pub twist: Option<TwistFn>,
    pub potential: Option<Potential>,
    pub grid: GridRule,
    pub window: WindowRule,
}

impl DiracFamily {
    pub fn new(params: ParamsFn, grid: GridRule, window: WindowRule) -> Self {
        Self {
            params,
            twist: None,
            potential: None,
            grid,
            window,
        }
    }

    pub fn with_twist(mut self, twist: TwistFn) -> Self {
        self.twist = Some(twist);
        self
    }

    pub fn with_potential(mut self, v: Potential) -> Self {
        self.potential = Some(v);
        self
    }

    pub fn sample(&self, xi: f64) -> Result<PathSample> {
        let p = (self.params)(xi)?;
        let grid = self.grid.grid_for(p.m)?;
        let twist = self.twist.as_ref().map(|t| t(xi));
        let matrix = discretize(&p, &grid, twist.as_ref(), self.potential.as_ref())?;
        Ok(PathSample {
            param: xi,
            matrix,
            window: self.window.window(p.m),
        })
    }

    fn sampler(&self) -> crate::flow::Sampler {
        let me = self.clone();
        Arc::new(move |xi| me.sample(xi))
    }

    /// Loop sampled at `n` points of `[start, start + period)`, tracking
    /// near-edge states only.
    pub fn closed_path(
        &self,
        start: f64,
        period: f64,
        n: usize,
        budget: usize,
    ) -> Result<OperatorPath> {
        use rayon::prelude::*;
        let samples = (0..n)
            .into_par_iter()
            .map(|i| self.sample(start + period * i as f64 / n as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorPath::closed(samples, period)?
            .with_filter(StateFilter::near_edge())
            .with_sampler(self.sampler(), budget))
    }

    /// Open path through the given increasing parameters.
    pub fn open_path(&self, params: &[f64], budget: usize) -> Result<OperatorPath> {
        use rayon::prelude::*;
        let samples = params
            .par_iter()
            .map(|&xi| self.sample(xi))
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorPath::open(samples)?
            .with_filter(StateFilter::near_edge())
            .with_sampler(self.sampler(), budget))
    }
}

/// The loop `theta = xi` at fixed mass and boundary angle.
pub fn basic_loop_family(m: f64, gamma: f64, grid: GridRule, window_fraction: f64) -> DiracFamily {
    DiracFamily::new(
        Arc::new(move |xi| DiracParams::new(m, xi, gamma)),
        grid,
        WindowRule::Fixed(-window_fraction * m, window_fraction * m),
    )
}

/// Half-plane family: `m = a sec(theta)` over `theta` in `(-pi/2, pi/2)`,
/// window `(-f m, f m)` per sample.
pub fn half_plane_family(
    a: f64,
    gamma: f64,
    thetas: &[f64],
    grid: GridRule,
    window_fraction: f64,
) -> Result<OperatorPath> {
    if !(a > 0.0) {
        return invalid("half-plane family needs a > 0");
    }
    if thetas.iter().any(|t| t.abs() >= 0.5 * PI) {
        return invalid("half-plane family angles must lie in (-pi/2, pi/2)");
    }
    let fam = DiracFamily::new(
        Arc::new(move |t: f64| DiracParams::new(a / t.cos(), t, gamma)),
        grid,
        WindowRule::MassFraction(window_fraction),
    );
    fam.open_path(thetas, 256)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_state_presence_follows_sign_of_sine() {
        let p = DiracParams::new(2.0, 1.0, 0.2).unwrap();
        let b = bound_state(&p).unwrap().unwrap();
        assert!((b.energy - 2.0 * 0.8f64.cos()).abs() < 1e-15);
        assert!((b.decay - 2.0 * 0.8f64.sin()).abs() < 1e-15);
        assert!(bound_state(&DiracParams::new(1.0, -0.5, 0.0).unwrap())
            .unwrap()
            .is_none());
        assert!(bound_state(&DiracParams::new(0.0, 1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn rotation_maps_boundary_spinor_and_symbol() {
        let gamma = 0.7;
        let w = rotation(gamma);
        // boundary spinor (1, e^{i gamma}) goes to a multiple of (1, 0)
        let v = [C64::new(1.0, 0.0), C64::from_polar(1.0, gamma)];
        let wv1 = w[1][0] * v[0] + w[1][1] * v[1];
        assert!(wv1.norm() < 1e-15);
        // mass term maps to m (cos phi sz + sin phi sx)
        let p = DiracParams::new(1.3, 2.0, gamma).unwrap();
        let rot = mat2::conjugate(&w, &symbol(&p, 0.0));
        let phi = p.phi();
        assert!((rot[0][0].re - 1.3 * phi.cos()).abs() < 1e-14);
        assert!((rot[0][1] - C64::new(1.3 * phi.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn discrete_bound_state_is_exact_geometric_mode() {
        let p = DiracParams::new(1.0, 2.0, 0.0).unwrap();
        let grid = HalfLineGrid::new(800, 0.05).unwrap();
        let h = discretize(&p, &grid, None, None).unwrap();
        let states = window_states(&h, -0.99, 0.99).unwrap();
        let near: Vec<_> = states
            .iter()
            .filter(|(_, e)| e.side == crate::edge::Side::Near)
            .collect();
        assert_eq!(near.len(), 1);
        assert!((near[0].0 - 2.0f64.cos()).abs() < 1e-12);
    }
}
