//! Hermitian matrices, eigensolvers and small root finders.

mod banded;
mod dense;
pub mod mat2;
mod newton;
mod tridiag;

pub use banded::{BandLu, BlockTridiagonal};
pub use newton::newton_refine_2d;
pub use num_complex::Complex64 as C64;
pub use tridiag::Tridiagonal;

use crate::error::{invalid, Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Dense { dim: usize, data: Vec<C64> },
    Blocks(BlockTridiagonal),
}

/// A validated finite-dimensional Hermitian matrix.
///
/// Dense storage is row-major. Operators coming from half-line
/// discretizations are stored block-tridiagonally, which lets the windowed
/// eigensolver run in linear time per eigenvalue.
///
/// `orbitals` is the number of components per lattice site; it only
/// matters for edge-localization diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    repr: Repr,
    orbitals: usize,
}

impl HermitianMatrix {
    /// Dense row-major matrix; Hermiticity is checked to 1e-12 relative.
    pub fn from_dense(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return invalid(format!(
                "expected {} entries, got {}",
                dim * dim,
                data.len()
            ));
        }
        if let Some(z) = data.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid(format!("non-finite matrix entry {z}"));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let mut worst = (0, 0, 0.0);
        for i in 0..dim {
            for j in i..dim {
                let dev = (data[i * dim + j] - data[j * dim + i].conj()).norm();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        if worst.2 > tol {
            return Err(Error::NotHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
            });
        }
        Ok(Self {
            repr: Repr::Dense { dim, data },
            orbitals: 1,
        })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self::from_dense(dim, data)
    }

    pub fn from_blocks(blocks: BlockTridiagonal) -> Self {
        let orbitals = blocks.block();
        Self {
            repr: Repr::Blocks(blocks),
            orbitals,
        }
    }

    /// Set the number of components per site (must divide the dimension).
    pub fn with_orbitals(mut self, orbitals: usize) -> Result<Self> {
        if orbitals == 0 || !self.dim().is_multiple_of(orbitals) {
            return invalid(format!(
                "{orbitals} orbitals per site does not divide dimension {}",
                self.dim()
            ));
        }
        self.orbitals = orbitals;
        Ok(self)
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn n_sites(&self) -> usize {
        self.dim() / self.orbitals
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Dense { dim, .. } => *dim,
            Repr::Blocks(b) => b.dim(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.repr {
            Repr::Dense { dim, data } => data[i * dim + j],
            Repr::Blocks(b) => b.get(i, j),
        }
    }

    pub fn blocks(&self) -> Option<&BlockTridiagonal> {
        match &self.repr {
            Repr::Blocks(b) => Some(b),
            Repr::Dense { .. } => None,
        }
    }

    pub fn to_dense(&self) -> Vec<C64> {
        match &self.repr {
            Repr::Dense { data, .. } => data.clone(),
            Repr::Blocks(b) => {
                let n = b.dim();
                let mut out = vec![ZERO; n * n];
                let w = b.block();
                for i in 0..n {
                    let lo = (i / w).saturating_sub(1) * w;
                    let hi = ((i / w + 2) * w).min(n);
                    for j in lo..hi {
                        out[i * n + j] = b.get(i, j);
                    }
                }
                out
            }
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        match &self.repr {
            Repr::Dense { dim, data } => (0..*dim)
                .map(|i| {
                    data[i * dim..(i + 1) * dim]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
            Repr::Blocks(b) => b.matvec(x),
        }
    }

    /// Upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        match &self.repr {
            Repr::Dense { dim, data } => (0..*dim)
                .map(|i| {
                    data[i * dim..(i + 1) * dim]
                        .iter()
                        .map(|z| z.norm())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
            Repr::Blocks(b) => b.norm_bound(),
        }
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        match &self.repr {
            Repr::Blocks(b) => Ok(b.count_below(sigma)),
            Repr::Dense { .. } => Ok(eigh(self)?.values.iter().filter(|&&v| v < sigma).count()),
        }
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors.
#[derive(Clone, Debug, Default)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest residual `|H v - lambda v|` over all pairs.
    pub fn max_residual(&self, h: &HermitianMatrix) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lam, v)| {
                let hv = h.matvec(v);
                hv.iter()
                    .zip(v)
                    .map(|(a, b)| (a - b * lam).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Full eigen-decomposition.
pub fn eigh(h: &HermitianMatrix) -> Result<EigenSystem> {
    let n = h.dim();
    let (values, vectors) = dense::dense_eigh(n, &h.to_dense())?;
    let mut sys = EigenSystem { values, vectors };
    localize_clusters(&mut sys, h);
    Ok(sys)
}

/// Eigenpairs with eigenvalue strictly inside `(lo, hi)`.
///
/// Within groups of numerically degenerate eigenvalues the basis is rotated
/// to diagonalize the site-position operator, so that states living on
/// opposite ends of a long chain come out separated.
pub fn eigh_window(h: &HermitianMatrix, lo: f64, hi: f64) -> Result<EigenSystem> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return invalid(format!("bad spectral window ({lo}, {hi})"));
    }
    match &h.repr {
        Repr::Dense { .. } => {
            let full = eigh(h)?;
            let mut out = EigenSystem::default();
            for (v, x) in full.values.into_iter().zip(full.vectors) {
                if v > lo && v < hi {
                    out.values.push(v);
                    out.vectors.push(x);
                }
            }
            Ok(out)
        }
        Repr::Blocks(b) => {
            let (values, vectors) = inverse_iteration(b, &b.window_values(lo, hi))?;
            let mut order: Vec<usize> = (0..values.len())
                .filter(|&i| values[i] > lo && values[i] < hi)
                .collect();
            order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
            let mut sys = EigenSystem {
                values: order.iter().map(|&i| values[i]).collect(),
                vectors: order.iter().map(|&i| vectors[i].clone()).collect(),
            };
            localize_clusters(&mut sys, h);
            Ok(sys)
        }
    }
}

fn cluster_tol(h_norm: f64) -> f64 {
    1e-10 * h_norm.max(1.0)
}

fn seed_vector(n: usize, k: usize) -> Vec<C64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..n).map(|_| C64::new(next(), next())).collect()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// Eigenvectors for bisection estimates. The block Sturm count is only
/// accurate to a small multiple of the backward error, so each estimate is
/// replaced by the Rayleigh quotient of its converged vector. Vectors are
/// orthogonalized against all earlier ones within `1e-3 |H|`, as in the
/// tridiagonal case.
fn inverse_iteration(b: &BlockTridiagonal, values: &[f64]) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = b.dim();
    let scale = b.norm_bound().max(1e-300);
    let group = 1e-3 * scale;
    let mut vecs: Vec<Vec<C64>> = Vec::with_capacity(values.len());
    let mut refined = Vec::with_capacity(values.len());
    let mut group_start = 0;
    for (k, &lam) in values.iter().enumerate() {
        while lam - values[group_start] > group {
            group_start += 1;
        }
        let mut x = seed_vector(n, k);
        normalize(&mut x);
        let lu = b.factor_shifted(C64::new(lam, 0.0));
        let mut done = None;
        for _ in 0..8 {
            x = lu.solve(&x);
            for prev in &vecs[group_start..k] {
                let proj: C64 = prev.iter().zip(&x).map(|(p, y)| p.conj() * y).sum();
                for (y, p) in x.iter_mut().zip(prev) {
                    *y -= p * proj;
                }
            }
            if normalize(&mut x) == 0.0 {
                return Err(Error::NoConvergence(
                    "inverse iteration produced a zero vector".into(),
                ));
            }
            let hx = b.matvec(&x);
            let rho: f64 = x.iter().zip(&hx).map(|(y, a)| (y.conj() * a).re).sum();
            let res = hx
                .iter()
                .zip(&x)
                .map(|(a, y)| (a - y * rho).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if res <= 1e-9 * scale.max(1.0) {
                done = Some(rho);
                break;
            }
        }
        let Some(rho) = done else {
            return Err(Error::NoConvergence(format!(
                "inverse iteration at eigenvalue {lam}"
            )));
        };
        refined.push(rho);
        vecs.push(x);
    }
    Ok((refined, vecs))
}

/// Rotate each degenerate cluster onto eigenvectors of the site-position
/// operator and replace the eigenvalues by Rayleigh quotients.
fn localize_clusters(sys: &mut EigenSystem, h: &HermitianMatrix) {
    let ctol = cluster_tol(h.norm_bound());
    let orb = h.orbitals();
    let mut start = 0;
    while start < sys.len() {
        let mut end = start + 1;
        while end < sys.len() && sys.values[end] - sys.values[end - 1] <= ctol {
            end += 1;
        }
        if end - start > 1 {
            let k = end - start;
            let vecs = &sys.vectors[start..end];
            let mut pos = vec![ZERO; k * k];
            for a in 0..k {
                for c in a..k {
                    let s: C64 = vecs[a]
                        .iter()
                        .zip(&vecs[c])
                        .enumerate()
                        .map(|(i, (x, y))| x.conj() * y * (i / orb) as f64)
                        .sum();
                    pos[a * k + c] = s;
                    pos[c * k + a] = s.conj();
                }
            }
            if let Ok((_, rot)) = dense::dense_eigh(k, &pos) {
                let dim = vecs[0].len();
                let rotated: Vec<Vec<C64>> = rot
                    .iter()
                    .map(|u| {
                        let mut v = vec![ZERO; dim];
                        for (coef, src) in u.iter().zip(vecs) {
                            for (d, s) in v.iter_mut().zip(src) {
                                *d += coef * s;
                            }
                        }
                        v
                    })
                    .collect();
                for (i, v) in rotated.into_iter().enumerate() {
                    let hv = h.matvec(&v);
                    let rq: f64 = v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum();
                    sys.values[start + i] = rq;
                    sys.vectors[start + i] = v;
                }
            }
            let mut idx: Vec<usize> = (start..end).collect();
            idx.sort_by(|&a, &b| sys.values[a].total_cmp(&sys.values[b]));
            let vals: Vec<f64> = idx.iter().map(|&i| sys.values[i]).collect();
            let vs: Vec<Vec<C64>> = idx.iter().map(|&i| sys.vectors[i].clone()).collect();
            sys.values[start..end].copy_from_slice(&vals);
            for (i, v) in vs.into_iter().enumerate() {
                sys.vectors[start + i] = v;
            }
        }
        start = end;
    }
}

/// Evenly spaced grid of `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian_and_reports_worst_pair() {
        let mut data = vec![ZERO; 9];
        data[1] = C64::new(1.0, 0.0);
        data[3] = C64::new(1.0, 0.0);
        data[5] = C64::new(0.0, 2.0);
        data[7] = C64::new(0.0, 2.0);
        match HermitianMatrix::from_dense(3, data) {
            Err(Error::NotHermitian { row, col, .. }) => assert_eq!((row, col), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn window_agrees_between_dense_and_banded() {
        let nb = 30;
        let mut diag = Vec::new();
        let mut upper = Vec::new();
        for j in 0..nb {
            let x = j as f64 * 0.37;
            diag.extend([
                C64::new(x.sin(), 0.0),
                C64::new(0.3, 0.2 * x.cos()),
                C64::new(0.3, -0.2 * x.cos()),
                C64::new(-x.cos(), 0.0),
            ]);
            if j + 1 < nb {
                upper.extend([
                    C64::new(0.1, 0.4),
                    ZERO,
                    C64::new(0.5, 0.0),
                    C64::new(0.0, -0.2),
                ]);
            }
        }
        let banded = HermitianMatrix::from_blocks(BlockTridiagonal::new(2, diag, upper).unwrap());
        let dense = HermitianMatrix::from_dense(banded.dim(), banded.to_dense()).unwrap();
        let a = eigh_window(&banded, -0.5, 0.8).unwrap();
        let b = eigh_window(&dense, -0.5, 0.8).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.max_residual(&banded) < 1e-10);
    }

    #[test]
    fn degenerate_end_states_are_separated() {
        // two decoupled chains glued end to end: identical end modes
        let n = 40;
        let mut diag = vec![ZERO; n];
        let mut upper = vec![C64::new(1.0, 0.0); n - 1];
        upper[n / 2 - 1] = ZERO;
        diag[0] = C64::new(5.0, 0.0);
        diag[n - 1] = C64::new(5.0, 0.0);
        let h = HermitianMatrix::from_blocks(BlockTridiagonal::new(1, diag, upper).unwrap());
        let sys = eigh_window(&h, 4.0, 6.0).unwrap();
        assert_eq!(sys.len(), 2);
        for v in &sys.vectors {
            let near: f64 = v[..n / 2].iter().map(|z| z.norm_sqr()).sum();
            assert!(
                !(1e-10..=1.0 - 1e-10).contains(&near),
                "mixed state, near weight {near}"
            );
        }
    }
}
