//! 2x2 complex matrix helpers.

use super::C64;

pub type Mat2 = [[C64; 2]; 2];

pub const ZERO2: Mat2 = [[C64 { re: 0.0, im: 0.0 }; 2]; 2];

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = ZERO2;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

/// `u a u^H`
pub fn conjugate(u: &Mat2, a: &Mat2) -> Mat2 {
    mul(&mul(u, a), &adjoint(u))
}

/// Largest deviation from Hermiticity.
pub fn hermiticity_defect(a: &Mat2) -> f64 {
    let d = adjoint(a);
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - d[i][j]).norm())
        .fold(0.0, f64::max)
}

/// Operator (spectral) norm.
pub fn norm(a: &Mat2) -> f64 {
    let g = mul(&adjoint(a), a);
    let tr = g[0][0].re + g[1][1].re;
    let det = (g[0][0] * g[1][1] - g[0][1] * g[1][0]).re;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr + disc).max(0.0).sqrt()
}

/// Pauli matrices.
pub fn sigma(k: usize) -> Mat2 {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        3 => [[o, z], [z, -o]],
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// `a I + b . sigma`
pub fn from_bloch(a: f64, b: [f64; 3]) -> Mat2 {
    [
        [C64::new(a + b[2], 0.0), C64::new(b[0], -b[1])],
        [C64::new(b[0], b[1]), C64::new(a - b[2], 0.0)],
    ]
}

/// Inverse of [`from_bloch`] for Hermitian input.
pub fn to_bloch(h: &Mat2) -> (f64, [f64; 3]) {
    let a = 0.5 * (h[0][0].re + h[1][1].re);
    let bz = 0.5 * (h[0][0].re - h[1][1].re);
    let off = 0.5 * (h[1][0] + h[0][1].conj());
    (a, [off.re, off.im, bz])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bloch_round_trip_and_norm() {
        let h = from_bloch(0.3, [0.1, -0.7, 0.4]);
        let (a, b) = to_bloch(&h);
        assert!((a - 0.3).abs() < 1e-15);
        assert!(
            (b[0] - 0.1).abs() < 1e-15 && (b[1] + 0.7).abs() < 1e-15 && (b[2] - 0.4).abs() < 1e-15
        );
        let bn = (0.01f64 + 0.49 + 0.16).sqrt();
        assert!((norm(&h) - (0.3 + bn)).abs() < 1e-14);
        assert!(hermiticity_defect(&h) < 1e-16);
    }
}
