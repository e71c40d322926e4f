//! Block-tridiagonal Hermitian matrices. Eigenvalues in a window come from
//! Sturm bisection on an equivalent real tridiagonal matrix, obtained by
//! Givens band reduction when the scalar bandwidth exceeds one.

use num_complex::Complex64 as C64;

use super::tridiag::Tridiagonal;
use crate::error::{invalid, Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Hermitian matrix with `b x b` diagonal blocks `A_j` and upper blocks
/// `B_j = T[j, j+1]`. Blocks are stored row-major and contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTridiagonal {
    block: usize,
    n_blocks: usize,
    diag: Vec<C64>,
    upper: Vec<C64>,
}

impl BlockTridiagonal {
    /// `diag` holds `n_blocks` blocks, `upper` holds `n_blocks - 1`.
    pub fn new(block: usize, diag: Vec<C64>, upper: Vec<C64>) -> Result<Self> {
        if block == 0 {
            return invalid("block size must be positive");
        }
        let bb = block * block;
        if diag.is_empty() || !diag.len().is_multiple_of(bb) {
            return invalid(format!(
                "diagonal storage length {} is not a multiple of {bb}",
                diag.len()
            ));
        }
        let n_blocks = diag.len() / bb;
        if upper.len() != (n_blocks - 1) * bb {
            return invalid(format!(
                "upper storage length {} does not match {} blocks",
                upper.len(),
                n_blocks - 1
            ));
        }
        if let Some(z) = diag
            .iter()
            .chain(&upper)
            .find(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return invalid(format!("non-finite matrix entry {z}"));
        }
        let scale = diag
            .iter()
            .chain(&upper)
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        for j in 0..n_blocks {
            let d = &diag[j * bb..(j + 1) * bb];
            for r in 0..block {
                for c in r..block {
                    let dev = (d[r * block + c] - d[c * block + r].conj()).norm();
                    if dev > tol {
                        return Err(Error::NotHermitian {
                            row: j * block + r,
                            col: j * block + c,
                            deviation: dev,
                        });
                    }
                }
            }
        }
        Ok(Self {
            block,
            n_blocks,
            diag,
            upper,
        })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn dim(&self) -> usize {
        self.block * self.n_blocks
    }

    pub fn diag_block(&self, j: usize) -> &[C64] {
        let bb = self.block * self.block;
        &self.diag[j * bb..(j + 1) * bb]
    }

    pub fn upper_block(&self, j: usize) -> &[C64] {
        let bb = self.block * self.block;
        &self.upper[j * bb..(j + 1) * bb]
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let b = self.block;
        let (bi, bj) = (i / b, j / b);
        let (r, c) = (i % b, j % b);
        if bi == bj {
            self.diag_block(bi)[r * b + c]
        } else if bj == bi + 1 {
            self.upper_block(bi)[r * b + c]
        } else if bi == bj + 1 {
            self.upper_block(bj)[c * b + r].conj()
        } else {
            ZERO
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let b = self.block;
        let mut y = vec![ZERO; self.dim()];
        for j in 0..self.n_blocks {
            let d = self.diag_block(j);
            for r in 0..b {
                let mut s = ZERO;
                for c in 0..b {
                    s += d[r * b + c] * x[j * b + c];
                }
                y[j * b + r] += s;
            }
            if j + 1 < self.n_blocks {
                let u = self.upper_block(j);
                for r in 0..b {
                    for c in 0..b {
                        y[j * b + r] += u[r * b + c] * x[(j + 1) * b + c];
                        y[(j + 1) * b + c] += u[r * b + c].conj() * x[j * b + r];
                    }
                }
            }
        }
        y
    }

    /// Upper bound on the spectral radius (maximum absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        let b = self.block;
        let mut best: f64 = 0.0;
        for j in 0..self.n_blocks {
            for r in 0..b {
                let mut s: f64 = (0..b).map(|c| self.diag_block(j)[r * b + c].norm()).sum();
                if j + 1 < self.n_blocks {
                    s += (0..b)
                        .map(|c| self.upper_block(j)[r * b + c].norm())
                        .sum::<f64>();
                }
                if j > 0 {
                    s += (0..b)
                        .map(|c| self.upper_block(j - 1)[c * b + r].norm())
                        .sum::<f64>();
                }
                best = best.max(s);
            }
        }
        best
    }

    /// Largest distance from the diagonal of a nonzero scalar entry.
    pub fn bandwidth(&self) -> usize {
        let b = self.block;
        let mut kd = 0;
        for j in 0..self.n_blocks {
            for r in 0..b {
                for c in 0..b {
                    if c > r && self.diag_block(j)[r * b + c] != ZERO {
                        kd = kd.max(c - r);
                    }
                    if j + 1 < self.n_blocks && self.upper_block(j)[r * b + c] != ZERO {
                        kd = kd.max(b + c - r);
                    }
                }
            }
        }
        kd
    }

    /// Unitarily similar real symmetric tridiagonal matrix.
    pub fn tridiagonal(&self) -> Tridiagonal {
        Tridiagonal::from_band(self)
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        self.tridiagonal().count_below(sigma)
    }

    /// LU factorization of `T - sigma` with partial pivoting, for any
    /// complex shift.
    pub fn factor_shifted(&self, sigma: C64) -> BandLu {
        let n = self.dim();
        let kl = 2 * self.block - 1;
        let ku = kl;
        let w = 2 * kl + ku + 1;
        let mut a = vec![ZERO; n * w];
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                a[idx(i, j)] = self.get(i, j);
            }
            a[idx(i, i)] -= sigma;
        }
        let tiny = f64::EPSILON * self.norm_bound().max(sigma.norm()).max(1e-300);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[idx(k, k)].norm();
            for i in k + 1..=last {
                let v = a[idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    a.swap(idx(k, j), idx(p, j));
                }
            }
            if a[idx(k, k)].norm() < tiny {
                a[idx(k, k)] = C64::new(tiny, 0.0);
            }
            let pivot = a[idx(k, k)];
            for i in k + 1..=last {
                let l = a[idx(i, k)] / pivot;
                a[idx(i, k)] = l;
                if l != ZERO {
                    for j in k + 1..=jmax {
                        let u = a[idx(k, j)];
                        a[idx(i, j)] -= l * u;
                    }
                }
            }
        }
        BandLu {
            n,
            kl,
            ku,
            w,
            a,
            piv,
        }
    }

    /// Solve `(T - sigma) x = rhs`.
    pub fn shifted_solve(&self, sigma: C64, rhs: &[C64]) -> Vec<C64> {
        self.factor_shifted(sigma).solve(rhs)
    }

    /// Eigenvalues in the open interval `(lo, hi)`, ascending.
    pub fn window_values(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.tridiagonal().window_values(lo, hi)
    }
}

/// Banded LU factors with row interchanges.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    a: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.w);
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.a[idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + ku + kl).min(n - 1) {
                s -= self.a[idx(k, j)] * x[j];
            }
            x[k] = s / self.a[idx(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, hop: C64, onsite: f64) -> BlockTridiagonal {
        let diag = vec![C64::new(onsite, 0.0); n];
        let upper = vec![hop; n - 1];
        BlockTridiagonal::new(1, diag, upper).unwrap()
    }

    #[test]
    fn sturm_count_matches_chain_spectrum() {
        let n = 50;
        let t = chain(n, C64::new(0.0, -1.0), 0.3);
        let exact: Vec<f64> = (1..=n)
            .map(|k| 0.3 + 2.0 * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
            .collect();
        for sigma in [-2.5, -1.0, 0.0, 0.31, 1.7, 2.4] {
            let expect = exact.iter().filter(|&&e| e < sigma).count();
            assert_eq!(t.count_below(sigma), expect, "sigma = {sigma}");
        }
    }

    #[test]
    fn window_values_match_chain() {
        let n = 40;
        let t = chain(n, C64::new(0.6, 0.8), 0.0);
        let mut exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
            .filter(|e| e.abs() < 0.7)
            .collect();
        exact.sort_by(f64::total_cmp);
        let got = t.window_values(-0.7, 0.7);
        assert_eq!(got.len(), exact.len());
        for (g, e) in got.iter().zip(&exact) {
            assert!((g - e).abs() < 1e-13);
        }
    }

    #[test]
    fn shifted_solve_inverts() {
        let diag = [
            C64::new(1.0, 0.0),
            C64::new(0.2, 0.5),
            C64::new(0.2, -0.5),
            C64::new(-0.4, 0.0),
        ]
        .repeat(6);
        let upper = [
            C64::new(0.3, 0.1),
            C64::new(0.0, 0.0),
            C64::new(-0.7, 0.0),
            C64::new(0.1, 0.2),
        ]
        .repeat(5);
        let t = BlockTridiagonal::new(2, diag, upper).unwrap();
        let rhs: Vec<C64> = (0..12)
            .map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05))
            .collect();
        let x = t.shifted_solve(C64::new(0.17, 0.0), &rhs);
        let tx = t.matvec(&x);
        for i in 0..12 {
            assert!((tx[i] - x[i] * 0.17 - rhs[i]).norm() < 1e-12);
        }
    }
}
