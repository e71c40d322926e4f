//! Real symmetric tridiagonal matrices: Sturm counts, bisection and the
//! unitary reduction of a banded Hermitian matrix to this form.

use num_complex::Complex64 as C64;

use super::banded::BlockTridiagonal;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

/// Lower triangle of a Hermitian band, holding entries with
/// `0 <= i - j <= kd + 1` so that one bulge fits during chasing.
struct Band {
    n: usize,
    reach: usize,
    a: Vec<C64>,
}

impl Band {
    fn new(n: usize, kd: usize) -> Self {
        let reach = kd + 1;
        Self {
            n,
            reach,
            a: vec![ZERO; n * (reach + 1)],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.reach + 1) + (i - j)
    }

    /// Entry `(i, j)` with `i >= j`.
    #[inline]
    fn get(&self, i: usize, j: usize) -> C64 {
        if i - j > self.reach {
            ZERO
        } else {
            self.a[self.slot(i, j)]
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, z: C64) {
        if i - j <= self.reach {
            let k = self.slot(i, j);
            self.a[k] = z;
        }
    }

    /// `A <- G A G^H` with `G = [[c, s], [-conj(s), c]]` acting on rows and
    /// columns `p, p + 1`.
    fn rotate(&mut self, p: usize, c: f64, s: C64) {
        let q = p + 1;
        for col in p.saturating_sub(self.reach)..p {
            let (x, y) = (self.get(p, col), self.get(q, col));
            self.set(p, col, x * c + s * y);
            self.set(q, col, -s.conj() * x + y * c);
        }
        for row in q + 1..(p + self.reach + 1).min(self.n) {
            let (x, y) = (self.get(row, p), self.get(row, q));
            self.set(row, p, x * c + y * s.conj());
            self.set(row, q, -x * s + y * c);
        }
        let (app, aqq, aqp) = (self.get(p, p).re, self.get(q, q).re, self.get(q, p));
        let apq = aqp.conj();
        // B = G A on the 2 x 2 block, then B G^H.
        let b00 = app * c + s * aqp;
        let b01 = apq * c + s * aqq;
        let b10 = -s.conj() * app + aqp * c;
        let b11 = -s.conj() * apq + aqq * c;
        self.set(p, p, C64::new((b00 * c + b01 * s.conj()).re, 0.0));
        self.set(q, q, C64::new((-b10 * s + b11 * c).re, 0.0));
        self.set(q, p, b10 * c + b11 * s.conj());
    }

    /// Rotate rows `p, p + 1` so that `A[p + 1][col]` vanishes.
    fn annihilate(&mut self, p: usize, col: usize) -> bool {
        let (x, y) = (self.get(p, col), self.get(p + 1, col));
        if y == ZERO {
            return false;
        }
        let rho = x.norm().hypot(y.norm());
        let (c, s) = if x == ZERO {
            (0.0, C64::new(1.0, 0.0))
        } else {
            let ph = x / x.norm();
            (x.norm() / rho, ph * y.conj() / rho)
        };
        self.rotate(p, c, s);
        self.set(p + 1, col, ZERO);
        true
    }
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Reduce a block-tridiagonal matrix of scalar bandwidth `kd` by Givens
    /// rotations with bulge chasing.
    pub fn from_band(t: &BlockTridiagonal) -> Self {
        let n = t.dim();
        let kd = t.bandwidth();
        if kd <= 1 {
            return Self {
                diag: (0..n).map(|i| t.get(i, i).re).collect(),
                off: (0..n.saturating_sub(1))
                    .map(|i| t.get(i + 1, i).norm())
                    .collect(),
            };
        }
        let mut band = Band::new(n, kd);
        for i in 0..n {
            for j in i.saturating_sub(kd)..=i {
                band.set(i, j, t.get(i, j));
            }
        }
        for k in 0..n.saturating_sub(2) {
            for i in ((k + 2)..=(k + kd).min(n - 1)).rev() {
                if !band.annihilate(i - 1, k) {
                    continue;
                }
                // The rotation on rows (r - 1, r) leaves a bulge at (r + kd, r - 1).
                let mut r = i;
                while r + kd < n && band.annihilate(r + kd - 1, r - 1) {
                    r += kd;
                }
            }
        }
        Self {
            diag: (0..n).map(|i| band.get(i, i).re).collect(),
            off: (0..n.saturating_sub(1))
                .map(|i| band.get(i + 1, i).norm())
                .collect(),
        }
    }

    pub fn norm_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1] } else { 0.0 };
                let r = if i + 1 < n { self.off[i] } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    fn pivmin(&self) -> f64 {
        let e2 = self.off.iter().map(|e| e * e).fold(1.0, f64::max);
        f64::MIN_POSITIVE * e2
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let pivmin = self.pivmin();
        let mut neg = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            q = self.diag[i]
                - sigma
                - if i > 0 {
                    self.off[i - 1] * self.off[i - 1] / q
                } else {
                    0.0
                };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                neg += 1;
            }
        }
        neg
    }

    /// Eigenvalues in the open interval `(lo, hi)`, ascending, by bisection.
    pub fn window_values(&self, lo: f64, hi: f64) -> Vec<f64> {
        let scale = self
            .norm_bound()
            .max(lo.abs())
            .max(hi.abs())
            .max(f64::MIN_POSITIVE);
        let tol = 4.0 * f64::EPSILON * scale;
        let (c_lo, c_hi) = (self.count_below(lo), self.count_below(hi));
        let mut out = Vec::with_capacity(c_hi.saturating_sub(c_lo));
        // Intervals (a, b, count_below(a), count_below(b)).
        let mut stack = vec![(lo, hi, c_lo, c_hi)];
        while let Some((a, b, ca, cb)) = stack.pop() {
            if cb <= ca {
                continue;
            }
            if b - a <= tol {
                let m = 0.5 * (a + b);
                if m > lo && m < hi {
                    out.extend(std::iter::repeat_n(m, cb - ca));
                }
                continue;
            }
            let m = 0.5 * (a + b);
            let cm = self.count_below(m);
            stack.push((a, m, ca, cm));
            stack.push((m, b, cm, cb));
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dense::dense_eigh;

    fn random_band(n_blocks: usize, block: usize, seed: u64) -> BlockTridiagonal {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let bb = block * block;
        let mut diag = vec![ZERO; n_blocks * bb];
        for j in 0..n_blocks {
            for r in 0..block {
                diag[j * bb + r * block + r] = C64::new(next(), 0.0);
                for c in r + 1..block {
                    let z = C64::new(next(), next());
                    diag[j * bb + r * block + c] = z;
                    diag[j * bb + c * block + r] = z.conj();
                }
            }
        }
        let upper = (0..(n_blocks - 1) * bb)
            .map(|_| C64::new(next(), next()))
            .collect();
        BlockTridiagonal::new(block, diag, upper).unwrap()
    }

    #[test]
    fn band_reduction_preserves_the_spectrum() {
        for (nb, b, seed) in [(20, 3, 1), (15, 4, 2), (3, 2, 3), (1, 3, 4), (30, 2, 5)] {
            let t = random_band(nb, b, seed);
            let n = t.dim();
            let a: Vec<C64> = (0..n * n).map(|x| t.get(x / n, x % n)).collect();
            let exact = dense_eigh(n, &a).unwrap().0;
            let tri = t.tridiagonal();
            let got = tri.window_values(-100.0, 100.0);
            assert_eq!(got.len(), n);
            for (a, e) in got.iter().zip(&exact) {
                assert!((a - e).abs() < 1e-12, "{a} vs {e}");
            }
        }
    }
}
