use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::mat2::{self, Mat2, ZERO2};
use crate::numerics::C64;

/// Hermitian 2x2 Bloch Hamiltonian with finitely many hoppings:
/// `H(k) = sum_n H_n exp(i n.k)`, `H_{-n} = H_n^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochField {
    hoppings: BTreeMap<[i32; 3], Mat2>,
}

/// One hopping as stored in model files: the 2x2 complex matrix is
/// flattened row-major into `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoppingRecord {
    pub n: [i32; 3],
    pub h: [f64; 8],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub hoppings: Vec<HoppingRecord>,
}

impl BlochField {
    /// Duplicate lattice vectors are summed; Hermiticity of the hopping set
    /// is enforced to 1e-12.
    pub fn from_hoppings(list: impl IntoIterator<Item = ([i32; 3], Mat2)>) -> Result<Self> {
        let mut hoppings: BTreeMap<[i32; 3], Mat2> = BTreeMap::new();
        for (n, h) in list {
            if h.iter()
                .flatten()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return invalid(format!("non-finite hopping at {n:?}"));
            }
            let e = hoppings.entry(n).or_insert(ZERO2);
            *e = mat2::add(e, &h);
        }
        let scale = hoppings
            .values()
            .map(mat2::norm)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for (n, h) in &hoppings {
            let m = [-n[0], -n[1], -n[2]];
            let partner = hoppings.get(&m).copied().unwrap_or(ZERO2);
            let adj = mat2::adjoint(h);
            let dev = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (partner[i][j] - adj[i][j]).norm())
                .fold(0.0, f64::max);
            if dev > 1e-12 * scale {
                return Err(Error::ModelRejected(format!(
                    "hopping at {m:?} is not the adjoint of the hopping at {n:?} (deviation {dev:e})"
                )));
            }
        }
        hoppings.retain(|_, h| mat2::norm(h) > 0.0);
        if hoppings.is_empty() {
            return invalid("empty hopping list");
        }
        Ok(Self { hoppings })
    }

    /// Build from real Fourier terms: each `(n, c, p)` contributes
    /// `c e^{i n.k} sigma_p + conj(c) e^{-i n.k} sigma_p` (or `c sigma_p`
    /// with `c` real for `n = 0`).
    pub fn from_terms(terms: &[([i32; 3], C64, usize)]) -> Result<Self> {
        let mut list = Vec::new();
        for &(n, c, p) in terms {
            let s = mat2::sigma(p);
            if n == [0, 0, 0] {
                list.push((n, mat2::scale(&s, C64::new(c.re, 0.0))));
            } else {
                list.push((n, mat2::scale(&s, c)));
                list.push(([-n[0], -n[1], -n[2]], mat2::scale(&s, c.conj())));
            }
        }
        Self::from_hoppings(list)
    }

    /// This field plus extra Fourier terms, in the form taken by `from_terms`.
    pub fn with_terms(&self, terms: &[([i32; 3], C64, usize)]) -> Result<Self> {
        let extra = Self::from_terms(terms)?;
        Self::from_hoppings(
            self.hoppings
                .iter()
                .chain(&extra.hoppings)
                .map(|(n, h)| (*n, *h)),
        )
    }

    pub fn hoppings(&self) -> impl Iterator<Item = (&[i32; 3], &Mat2)> {
        self.hoppings.iter()
    }

    pub fn hamiltonian(&self, k: [f64; 3]) -> Mat2 {
        let mut h = ZERO2;
        for (n, t) in &self.hoppings {
            let ph = C64::from_polar(
                1.0,
                n[0] as f64 * k[0] + n[1] as f64 * k[1] + n[2] as f64 * k[2],
            );
            h = mat2::add(&h, &mat2::scale(t, ph));
        }
        h
    }

    /// Scalar part and Bloch vector: `H = a + b.sigma`.
    pub fn bloch(&self, k: [f64; 3]) -> (f64, [f64; 3]) {
        mat2::to_bloch(&self.hamiltonian(k))
    }

    pub fn b(&self, k: [f64; 3]) -> [f64; 3] {
        self.bloch(k).1
    }

    /// `J[i][j] = d b_i / d k_j`.
    pub fn jacobian(&self, k: [f64; 3]) -> [[f64; 3]; 3] {
        let mut jac = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut d = ZERO2;
            for (n, t) in &self.hoppings {
                if n[j] == 0 {
                    continue;
                }
                let ph = C64::from_polar(
                    1.0,
                    n[0] as f64 * k[0] + n[1] as f64 * k[1] + n[2] as f64 * k[2],
                );
                d = mat2::add(&d, &mat2::scale(t, ph * C64::new(0.0, n[j] as f64)));
            }
            let (_, b) = mat2::to_bloch(&d);
            for i in 0..3 {
                jac[i][j] = b[i];
            }
        }
        jac
    }

    /// Largest `|n_z|`.
    pub fn range_z(&self) -> usize {
        self.hoppings
            .keys()
            .map(|n| n[2].unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Partial Fourier transform in the surface directions:
    /// `T_d(kx, ky) = sum_{n_z = d} H_n e^{i (n_x kx + n_y ky)}`, returned
    /// for `d = -R..=R` at index `d + R`.
    pub fn z_fourier(&self, kx: f64, ky: f64) -> Vec<Mat2> {
        let r = self.range_z() as i32;
        let mut out = vec![ZERO2; (2 * r + 1) as usize];
        for (n, t) in &self.hoppings {
            let ph = C64::from_polar(1.0, n[0] as f64 * kx + n[1] as f64 * ky);
            let slot = &mut out[(n[2] + r) as usize];
            *slot = mat2::add(slot, &mat2::scale(t, ph));
        }
        out
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile {
            hoppings: self
                .hoppings
                .iter()
                .map(|(n, h)| {
                    let mut flat = [0.0; 8];
                    for (i, z) in h.iter().flatten().enumerate() {
                        flat[2 * i] = z.re;
                        flat[2 * i + 1] = z.im;
                    }
                    HoppingRecord { n: *n, h: flat }
                })
                .collect(),
        }
    }

    pub fn from_model_file(file: &ModelFile) -> Result<Self> {
        Self::from_hoppings(file.hoppings.iter().map(|r| {
            let z = |i: usize| C64::new(r.h[2 * i], r.h[2 * i + 1]);
            (r.n, [[z(0), z(1)], [z(2), z(3)]])
        }))
    }
}

fn sin_term(n: [i32; 3], p: usize) -> ([i32; 3], C64, usize) {
    (n, C64::new(0.0, -0.5), p)
}

fn cos_term(n: [i32; 3], coef: f64, p: usize) -> ([i32; 3], C64, usize) {
    (n, C64::new(0.5 * coef, 0.0), p)
}

/// `b = (sin kx, sin ky, mass - cos kx - cos ky - cos kz)`.
pub fn reference_field_with_mass(mass: f64) -> BlochField {
    BlochField::from_terms(&[
        sin_term([1, 0, 0], 1),
        sin_term([0, 1, 0], 2),
        ([0, 0, 0], C64::new(mass, 0.0), 3),
        cos_term([1, 0, 0], -1.0, 3),
        cos_term([0, 1, 0], -1.0, 3),
        cos_term([0, 0, 1], -1.0, 3),
    ])
    .expect("reference hoppings are Hermitian")
}

/// Weyl points at `(0, 0, +-pi/2)`, both projecting to the origin of the
/// surface Brillouin zone.
pub fn reference_field() -> BlochField {
    reference_field_with_mass(2.0)
}

/// `b = (sin ky, sin kz, 2 + cos kx - cos ky - cos kz)`: Weyl points at
/// `(+-pi/2, 0, 0)` with distinct surface projections. The generic
/// projection property is verified before the field is returned.
pub fn shifted_reference_field() -> Result<BlochField> {
    let f = BlochField::from_terms(&[
        sin_term([0, 1, 0], 1),
        sin_term([0, 0, 1], 2),
        ([0, 0, 0], C64::new(2.0, 0.0), 3),
        cos_term([1, 0, 0], 1.0, 3),
        cos_term([0, 1, 0], -1.0, 3),
        cos_term([0, 0, 1], -1.0, 3),
    ])?;
    let scan = super::weyl::find_weyl_points(&f, 24)?;
    super::weyl::verify_generic_projection(&scan)?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_bloch_vector() {
        let f = reference_field();
        let k = [0.3, -1.1, 2.0];
        let (a, b) = f.bloch(k);
        assert!(a.abs() < 1e-15);
        assert!((b[0] - 0.3f64.sin()).abs() < 1e-14);
        assert!((b[1] - (-1.1f64).sin()).abs() < 1e-14);
        assert!((b[2] - (2.0 - 0.3f64.cos() - 1.1f64.cos() - 2.0f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = shifted_reference_field().unwrap();
        let k = [0.4, 0.9, -0.3];
        let jac = f.jacobian(k);
        for j in 0..3 {
            let h = 1e-6;
            let (mut kp, mut km) = (k, k);
            kp[j] += h;
            km[j] -= h;
            let (bp, bm) = (f.b(kp), f.b(km));
            for i in 0..3 {
                assert!((jac[i][j] - (bp[i] - bm[i]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn non_hermitian_hopping_set_is_rejected() {
        let s = mat2::sigma(1);
        let err = BlochField::from_hoppings([
            ([1, 0, 0], s),
            ([-1, 0, 0], mat2::scale(&s, C64::new(2.0, 0.0))),
        ]);
        assert!(matches!(err, Err(Error::ModelRejected(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let f = reference_field();
        let json = serde_json::to_string(&f.to_model_file()).unwrap();
        let back = BlochField::from_model_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(f, back);
    }
}
