use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::BlochField;
use crate::edge::{edge_profile, Side};
use crate::error::{invalid, Error, Result};
use crate::numerics::{eigh_window, BlockTridiagonal, HermitianMatrix, C64};

/// Hermitian perturbation acting on the first `sites` sites of the chain.
#[derive(Clone, Debug)]
pub struct BoundaryPerturbation {
    sites: usize,
    matrix: HermitianMatrix,
}

impl BoundaryPerturbation {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        if !matrix.dim().is_multiple_of(2) {
            return invalid("boundary perturbation must act on whole two-orbital sites");
        }
        Ok(Self {
            sites: matrix.dim() / 2,
            matrix,
        })
    }

    /// Random Hermitian matrix on the first `sites` sites, scaled to operator
    /// norm `norm`.
    pub fn random<R: rand::Rng>(rng: &mut R, sites: usize, norm: f64) -> Result<Self> {
        if sites == 0 || !(norm >= 0.0) {
            return invalid("random perturbation needs at least one site and a non-negative norm");
        }
        let n = 2 * sites;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a[i * n + j] = z;
                a[j * n + i] = z.conj();
            }
        }
        let raw = Self::new(HermitianMatrix::from_dense(n, a.clone())?)?;
        let s = norm / raw.norm();
        Self::new(HermitianMatrix::from_dense(
            n,
            a.into_iter().map(|z| z * s).collect(),
        )?)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        crate::numerics::eigh(&self.matrix)
            .map(|e| e.values.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .unwrap_or(f64::INFINITY)
    }

    /// Largest site separation coupled by a nonzero entry.
    fn reach(&self) -> usize {
        let n = self.matrix.dim();
        let mut reach = 0;
        for i in 0..n {
            for j in i..n {
                if self.matrix.get(i, j).norm() > 0.0 {
                    reach = reach.max(j / 2 - i / 2);
                }
            }
        }
        reach
    }
}

/// Hard-wall truncation of a Bloch field to sites `0..n_sites` in `z`.
#[derive(Clone, Debug)]
pub struct HalfSpaceModel {
    pub field: BlochField,
    pub n_sites: usize,
    pub perturbation: Option<BoundaryPerturbation>,
}

impl HalfSpaceModel {
    pub fn new(field: BlochField, n_sites: usize) -> Result<Self> {
        let r = field.range_z().max(1);
        if n_sites < 4 * r {
            return invalid(format!(
                "half-space truncation needs at least {} sites, got {n_sites}",
                4 * r
            ));
        }
        Ok(Self {
            field,
            n_sites,
            perturbation: None,
        })
    }

    pub fn with_perturbation(mut self, p: BoundaryPerturbation) -> Result<Self> {
        if 4 * p.sites > self.n_sites {
            return invalid(format!(
                "boundary perturbation on {} sites exceeds a quarter of the {} site chain",
                p.sites, self.n_sites
            ));
        }
        self.perturbation = Some(p);
        Ok(self)
    }

    /// Sites per block of the block-tridiagonal layout.
    fn group(&self) -> usize {
        let reach = self.perturbation.as_ref().map_or(0, |p| p.reach());
        self.field.range_z().max(reach).max(1)
    }

    /// The `2N x 2N` matrix at surface momentum `(kx, ky)`: block `(j, j+d)`
    /// is the Fourier coefficient `T_d`. When the hopping range or the
    /// perturbation reach exceeds one site, sites are grouped into larger
    /// blocks and the chain is padded to a whole number of groups.
    pub fn matrix(&self, kx: f64, ky: f64) -> Result<HermitianMatrix> {
        let t = self.field.z_fourier(kx, ky);
        let r = self.field.range_z() as i64;
        let g = self.group();
        let n_blocks = self.n_sites.div_ceil(g);
        let b = 2 * g;
        let mut diag = vec![C64::new(0.0, 0.0); n_blocks * b * b];
        let mut upper = vec![C64::new(0.0, 0.0); n_blocks.saturating_sub(1) * b * b];
        let hop = |d: i64| (d.abs() <= r).then(|| &t[(d + r) as usize]);
        for blk in 0..n_blocks {
            for si in 0..g {
                for sj in 0..g {
                    if let Some(m) = hop(sj as i64 - si as i64) {
                        for a in 0..2 {
                            for c in 0..2 {
                                diag[blk * b * b + (2 * si + a) * b + 2 * sj + c] = m[a][c];
                            }
                        }
                    }
                    if blk + 1 < n_blocks {
                        if let Some(m) = hop((g + sj) as i64 - si as i64) {
                            for a in 0..2 {
                                for c in 0..2 {
                                    upper[blk * b * b + (2 * si + a) * b + 2 * sj + c] = m[a][c];
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(p) = &self.perturbation {
            let n = p.matrix.dim();
            for i in 0..n {
                for j in 0..n {
                    let v = p.matrix.get(i, j);
                    if v.norm() == 0.0 {
                        continue;
                    }
                    let (bi, bj) = (i / b, j / b);
                    let (ri, rj) = (i % b, j % b);
                    if bi == bj {
                        diag[bi * b * b + ri * b + rj] += v;
                    } else if bj == bi + 1 {
                        upper[bi * b * b + ri * b + rj] += v;
                    }
                }
            }
        }
        let blocks = BlockTridiagonal::new(b, diag, upper)?;
        HermitianMatrix::from_blocks(blocks).with_orbitals(2)
    }
}

/// `min_kz (|b| - |a|)` at fixed surface momentum: a sampled minimum over
/// 256 points polished by golden-section search. Negative or small values
/// mean the line `(kx, ky, .)` meets or nearly meets the bulk gap closure.
pub fn local_gap(f: &BlochField, kx: f64, ky: f64) -> f64 {
    let gap = |kz: f64| {
        let (a, b) = f.bloch([kx, ky, kz]);
        (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt() - a.abs()
    };
    let n = 256;
    let dk = 2.0 * PI / n as f64;
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for i in 0..n {
        let kz = -PI + i as f64 * dk;
        let v = gap(kz);
        if v < best {
            best = v;
            arg = kz;
        }
    }
    let (mut lo, mut hi) = (arg - dk, arg + dk);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if gap(x1) < gap(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.min(gap(0.5 * (lo + hi)))
}

/// Regular grid of surface momenta; `periodic` grids cover the torus and
/// wrap at the far edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub periodic: bool,
}

impl SurfaceGrid {
    /// `n x n` grid on `[0, 2 pi)^2`, shifted by `offset` cells.
    pub fn torus(n: usize, offset: [f64; 2]) -> Self {
        let h = 2.0 * PI / n as f64;
        Self {
            origin: [offset[0] * h, offset[1] * h],
            spacing: [h, h],
            nx: n,
            ny: n,
            periodic: true,
        }
    }

    pub fn rect(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Self {
        Self {
            origin: [x.0, y.0],
            spacing: [(x.1 - x.0) / (nx - 1) as f64, (y.1 - y.0) / (ny - 1) as f64],
            nx,
            ny,
            periodic: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
        ]
    }

    /// Row-major index, `i` fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn period(&self) -> Option<[f64; 2]> {
        self.periodic.then(|| {
            [
                self.spacing[0] * self.nx as f64,
                self.spacing[1] * self.ny as f64,
            ]
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeState {
    pub energy: f64,
    /// Weight on the side it is tagged with.
    pub edge_weight: f64,
    pub side: Side,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfacePoint {
    pub k: [f64; 2],
    /// `None` where the local gap is too small to hold a window.
    pub window: Option<(f64, f64)>,
    pub states: Vec<EdgeState>,
}

impl SurfacePoint {
    /// Lowest-`|E|` near-side state with enough edge weight.
    pub fn near_state(&self, min_weight: f64) -> Option<EdgeState> {
        self.states
            .iter()
            .filter(|s| s.side == Side::Near && s.edge_weight >= min_weight)
            .min_by(|a, b| a.energy.abs().total_cmp(&b.energy.abs()))
            .copied()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceSpectrum {
    pub grid: SurfaceGrid,
    pub points: Vec<SurfacePoint>,
}

/// Knobs shared by surface scans and arc extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceOptions {
    /// Window half-width as a fraction of the local gap.
    pub window_fraction: f64,
    /// Local gaps below this are treated as gapless.
    pub min_gap: f64,
    pub edge_fraction: f64,
    pub min_edge_weight: f64,
    /// Energy tolerance of arc points.
    pub arc_tolerance: f64,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.9,
            min_gap: 1e-3,
            edge_fraction: 0.2,
            min_edge_weight: 0.6,
            arc_tolerance: 0.02,
        }
    }
}

/// In-window eigenstates at one surface momentum.
pub fn surface_point(
    model: &HalfSpaceModel,
    k: [f64; 2],
    opts: &SurfaceOptions,
) -> Result<SurfacePoint> {
    let gap = local_gap(&model.field, k[0], k[1]);
    if gap < opts.min_gap {
        return Ok(SurfacePoint {
            k,
            window: None,
            states: Vec::new(),
        });
    }
    let w = opts.window_fraction * gap;
    let h = model.matrix(k[0], k[1])?;
    let es = eigh_window(&h, -w, w)?;
    let states = es
        .values
        .iter()
        .zip(&es.vectors)
        .map(|(&energy, v)| {
            let p = edge_profile(v, 2, opts.edge_fraction);
            let edge_weight = match p.side {
                Side::Near => p.near_weight,
                Side::Far => p.far_weight,
            };
            EdgeState {
                energy,
                edge_weight,
                side: p.side,
            }
        })
        .collect();
    Ok(SurfacePoint {
        k,
        window: Some((-w, w)),
        states,
    })
}

pub fn surface_spectrum(
    model: &HalfSpaceModel,
    grid: SurfaceGrid,
    opts: &SurfaceOptions,
) -> Result<SurfaceSpectrum> {
    if grid.nx < 2 || grid.ny < 2 {
        return Err(Error::InvalidInput(
            "surface grid needs at least 2x2 points".into(),
        ));
    }
    let points = (0..grid.len())
        .into_par_iter()
        .map(|idx| surface_point(model, grid.point(idx % grid.nx, idx / grid.nx), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceSpectrum { grid, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigh, mat2};
    use crate::tight_binding::field::{reference_field, shifted_reference_field};

    #[test]
    fn blocks_reconstruct_the_symbol() {
        let f = shifted_reference_field().unwrap();
        let (kx, ky) = (0.7, -1.3);
        let model = HalfSpaceModel::new(f.clone(), 16).unwrap();
        let h = model.matrix(kx, ky).unwrap();
        for kz in [0.0, 0.4, 2.9] {
            // Interior row of the Toeplitz matrix summed against plane waves.
            let j = 8;
            let mut sym = mat2::ZERO2;
            for l in 0..16 {
                let ph = C64::from_polar(1.0, (l as f64 - j as f64) * kz);
                for a in 0..2 {
                    for c in 0..2 {
                        sym[a][c] += h.get(2 * j + a, 2 * l + c) * ph;
                    }
                }
            }
            let exact = f.hamiltonian([kx, ky, kz]);
            for a in 0..2 {
                for c in 0..2 {
                    assert!((sym[a][c] - exact[a][c]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn no_edge_states_at_zone_corner() {
        let f = reference_field();
        assert!((local_gap(&f, PI, PI) - 3.0).abs() < 1e-12);
        let model = HalfSpaceModel::new(f, 64).unwrap();
        let p = surface_point(&model, [PI, PI], &SurfaceOptions::default()).unwrap();
        assert!(p.states.is_empty());
        let w = p.window.unwrap();
        assert!((w.1 - 2.7).abs() < 1e-12);
    }

    #[test]
    fn grouped_blocks_match_dense_assembly() {
        // A perturbation coupling sites 0 and 2 forces two-site blocks.
        let f = reference_field();
        let mut data = vec![C64::new(0.0, 0.0); 36];
        data[0] = C64::new(0.2, 0.0);
        data[4] = C64::new(0.1, 0.05);
        data[4 * 6] = C64::new(0.1, -0.05);
        let p = BoundaryPerturbation::new(HermitianMatrix::from_dense(6, data.clone()).unwrap())
            .unwrap();
        let plain = HalfSpaceModel::new(f.clone(), 24)
            .unwrap()
            .matrix(0.3, 0.2)
            .unwrap();
        let pert = HalfSpaceModel::new(f, 24)
            .unwrap()
            .with_perturbation(p)
            .unwrap()
            .matrix(0.3, 0.2)
            .unwrap();
        assert_eq!(pert.dim(), 48);
        for i in 0..48 {
            for j in 0..48 {
                let extra = if i < 6 && j < 6 {
                    data[i * 6 + j]
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((pert.get(i, j) - plain.get(i, j) - extra).norm() < 1e-15);
            }
        }
        let dense = HermitianMatrix::from_dense(48, pert.to_dense()).unwrap();
        let all = eigh(&dense).unwrap();
        for s in [-1.5, -0.2, 0.0, 0.7] {
            let below = all.values.iter().filter(|&&v| v < s).count();
            assert_eq!(pert.count_below(s).unwrap(), below);
        }
    }
}
