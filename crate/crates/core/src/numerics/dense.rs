//! Dense Hermitian eigensolver: Householder reduction to real tridiagonal
//! form followed by implicit QL with accumulated rotations.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigenpairs of the row-major `n x n` Hermitian matrix `a`.
///
/// Eigenvalues come back ascending; `vecs[k]` is the normalized eigenvector
/// for `vals[k]`.
pub(crate) fn dense_eigh(n: usize, a: &[C64]) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut a = a.to_vec();
    let mut q = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        q[i * n + i] = C64::new(1.0, 0.0);
    }
    let mut t = vec![C64::new(0.0, 0.0); n];

    let mut v = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let alpha = (k + 1..n)
            .map(|i| a[i * n + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if alpha == 0.0 {
            t[k] = C64::new(0.0, 0.0);
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        v.clear();
        v.extend((k + 1..n).map(|i| a[i * n + k]));
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;

        p.clear();
        for r in 0..m {
            let row = &a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            let s: C64 = row.iter().zip(&v).map(|(x, y)| x * y).sum();
            p.push(s * tau);
        }
        let vhp: f64 = v.iter().zip(&p).map(|(x, y)| (x.conj() * y).re).sum();
        let beta = 0.5 * tau * vhp;
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi -= vi * beta;
        }
        for r in 0..m {
            let (vr, wr) = (v[r], p[r]);
            let row = &mut a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            for c in 0..m {
                row[c] -= vr * p[c].conj() + wr * v[c].conj();
            }
        }
        t[k] = -phase * alpha;
        for i in k + 1..n {
            a[i * n + k] = C64::new(0.0, 0.0);
            a[k * n + i] = C64::new(0.0, 0.0);
        }
        for r in 0..n {
            let row = &mut q[r * n + k + 1..r * n + n];
            let s: C64 = row.iter().zip(&v).map(|(x, y)| x * y).sum();
            let s = s * tau;
            for c in 0..m {
                row[c] -= s * v[c].conj();
            }
        }
    }
    if n >= 2 {
        t[n - 2] = a[(n - 1) * n + n - 2];
    }

    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut e = vec![0.0; n];
    let mut phase = C64::new(1.0, 0.0);
    for c in 0..n {
        if c > 0 {
            let tc = t[c - 1];
            let r = tc.norm();
            e[c - 1] = r;
            if r > 0.0 {
                phase *= tc / r;
            }
        }
        for r in 0..n {
            q[r * n + c] *= phase;
        }
    }

    tql(&mut d, &mut e, &mut q, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = order
        .iter()
        .map(|&c| (0..n).map(|r| q[r * n + c]).collect())
        .collect();
    Ok((vals, vecs))
}

/// Implicit QL on the real symmetric tridiagonal (d, e); `e[i]` couples
/// i and i+1. Rotations are applied to the columns of `z`.
fn tql(d: &mut [f64], e: &mut [f64], z: &mut [C64], n: usize) -> Result<()> {
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence(format!(
                    "QL iteration stalled at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[k * n + i + 1];
                    let zi = z[k * n + i];
                    z[k * n + i + 1] = zi * s + f * c;
                    z[k * n + i] = zi * c - f * s;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(n: usize, a: &[C64], val: f64, v: &[C64]) -> f64 {
        (0..n)
            .map(|i| {
                let s: C64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                (s - v[i] * val).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(0.0, -2.0),
            C64::new(-1.0, 0.0),
        ];
        let (vals, vecs) = dense_eigh(2, &a).unwrap();
        let r = 5f64.sqrt();
        assert!((vals[0] + r).abs() < 1e-14);
        assert!((vals[1] - r).abs() < 1e-14);
        for k in 0..2 {
            assert!(residual(2, &a, vals[k], &vecs[k]) < 1e-13);
        }
    }

    #[test]
    fn path_graph_spectrum() {
        let n = 30;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n - 1 {
            a[i * n + i + 1] = C64::new(0.0, 1.0);
            a[(i + 1) * n + i] = C64::new(0.0, -1.0);
        }
        let (vals, vecs) = dense_eigh(n, &a).unwrap();
        let mut expect: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for k in 0..n {
            assert!((vals[k] - expect[k]).abs() < 1e-12);
            assert!(residual(n, &a, vals[k], &vecs[k]) < 1e-12);
        }
    }
}
