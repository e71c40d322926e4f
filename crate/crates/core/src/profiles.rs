//! Loops of half-line parameters: trigonometric profiles for `(m, theta,
//! gamma)` over `xi` in `[0, 1)`, and the boundary-angle fan of the
//! half-plane family.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flow::{spectral_flow_crossings, winding_number, ComplexLoop, FlowResult};
use crate::halfline::{half_plane_family, DiracFamily, DiracParams, GridRule, WindowRule};
use crate::numerics::{linspace, C64};

const TAU: f64 = 2.0 * PI;

/// `offset + 2 pi winding xi + sum_k (cos_k cos 2 pi k xi + sin_k sin 2 pi k xi)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trig {
    pub offset: f64,
    pub winding: i64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Trig {
    pub fn constant(offset: f64) -> Self {
        Self {
            offset,
            ..Self::default()
        }
    }

    pub fn linear(offset: f64, winding: i64) -> Self {
        Self {
            offset,
            winding,
            ..Self::default()
        }
    }

    pub fn at(&self, xi: f64) -> f64 {
        let mut v = self.offset + TAU * self.winding as f64 * xi;
        for (k, c) in self.cos.iter().enumerate() {
            v += c * (TAU * (k + 1) as f64 * xi).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            v += s * (TAU * (k + 1) as f64 * xi).sin();
        }
        v
    }

    /// Bound on the oscillating part.
    pub fn amplitude(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    /// Bound on `|d/dxi|`.
    pub fn slope_bound(&self) -> f64 {
        let osc: f64 = self
            .cos
            .iter()
            .enumerate()
            .chain(self.sin.iter().enumerate())
            .map(|(k, c)| TAU * (k + 1) as f64 * c.abs())
            .sum();
        TAU * self.winding.unsigned_abs() as f64 + osc
    }

    /// Random offset and harmonics of size up to `scale / k`.
    pub fn random<R: Rng>(rng: &mut R, winding: i64, harmonics: usize, scale: f64) -> Self {
        let mut coeff = |k: usize| scale * rng.gen_range(-1.0..1.0) / (k + 1) as f64;
        let cos = (0..harmonics).map(&mut coeff).collect();
        let sin = (0..harmonics).map(&mut coeff).collect();
        Self {
            offset: rng.gen_range(-PI..PI),
            winding,
            cos,
            sin,
        }
    }
}

/// A closed loop of half-line parameters. The mass is `mass.at(xi)`, which
/// must stay positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterLoop {
    pub mass: Trig,
    pub theta: Trig,
    pub gamma: Trig,
}

impl ParameterLoop {
    /// `theta = xi` turned once at fixed mass and boundary angle.
    pub fn basic(m: f64, gamma: f64) -> Self {
        Self {
            mass: Trig::constant(m),
            theta: Trig::linear(0.0, 1),
            gamma: Trig::constant(gamma),
        }
    }

    /// Random loop with the given windings, mass at least `m_min`.
    pub fn random<R: Rng>(
        rng: &mut R,
        m_min: f64,
        theta_winding: i64,
        gamma_winding: i64,
        harmonics: usize,
    ) -> Self {
        let mut mass = Trig::random(rng, 0, harmonics, 0.3 * m_min);
        mass.offset = m_min * (1.1 + rng.gen_range(0.0..0.5)) + mass.amplitude();
        Self {
            mass,
            theta: Trig::random(rng, theta_winding, harmonics, 0.6),
            gamma: Trig::random(rng, gamma_winding, harmonics, 0.6),
        }
    }

    pub fn params(&self, xi: f64) -> Result<DiracParams> {
        DiracParams::new(self.mass.at(xi), self.theta.at(xi), self.gamma.at(xi))
    }

    pub fn min_mass(&self) -> f64 {
        self.mass.offset - self.mass.amplitude()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_mass() > 0.0) {
            return invalid(format!("mass profile can reach {} <= 0", self.min_mass()));
        }
        Ok(())
    }

    /// Winding of `exp(i (theta - gamma))`, counted from samples.
    pub fn relative_winding(&self) -> Result<i64> {
        let slope = self.theta.slope_bound() + self.gamma.slope_bound();
        let n = ((slope * 8.0).ceil() as usize).max(64);
        let values = (0..n)
            .map(|i| {
                let xi = i as f64 / n as f64;
                C64::from_polar(1.0, self.theta.at(xi) - self.gamma.at(xi))
            })
            .collect();
        winding_number(&ComplexLoop::new(values))
    }

    /// Sample count that keeps the phase step below `max_step` radians.
    pub fn samples_for(&self, max_step: f64, floor: usize) -> usize {
        let slope = self.theta.slope_bound() + self.gamma.slope_bound();
        ((slope / max_step).ceil() as usize).max(floor)
    }

    /// Family over `xi` in `[0, 1)` with window `(-f m_min, f m_min)`.
    pub fn family(&self, grid: GridRule, window_fraction: f64) -> Result<DiracFamily> {
        self.validate()?;
        let me = self.clone();
        let w = window_fraction * self.min_mass();
        Ok(DiracFamily::new(
            Arc::new(move |xi| me.params(xi)),
            grid,
            WindowRule::Fixed(-w, w),
        ))
    }
}

/// One boundary angle of the half-plane fan.
#[derive(Clone, Debug, Serialize)]
pub struct FanEntry {
    pub gamma: f64,
    pub flow: i64,
    /// A zero crossing was found along the family.
    pub crossing: bool,
    #[serde(skip)]
    pub result: FlowResult,
}

/// Half-plane family at each boundary angle, over `theta` in
/// `[-theta_max, theta_max]`.
pub fn gamma_fan(
    a: f64,
    gammas: &[f64],
    theta_max: f64,
    samples: usize,
    grid: GridRule,
    window_fraction: f64,
) -> Result<Vec<FanEntry>> {
    if !(theta_max > 0.0 && theta_max < 0.5 * PI) {
        return invalid("fan half-width must lie in (0, pi/2)");
    }
    let thetas = linspace(-theta_max, theta_max, samples);
    gammas
        .iter()
        .map(|&gamma| {
            let path = half_plane_family(a, gamma, &thetas, grid, window_fraction)?;
            let result = spectral_flow_crossings(&path)?;
            Ok(FanEntry {
                gamma,
                flow: result.flow,
                crossing: !result.crossings.is_empty(),
                result,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trig_profile_winds_and_closes() {
        let t = Trig {
            offset: 0.3,
            winding: -2,
            cos: vec![0.2],
            sin: vec![0.0, 0.1],
        };
        assert!((t.at(1.0) - t.at(0.0) + 2.0 * TAU).abs() < 1e-12);
        assert!((t.amplitude() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn random_loops_have_the_requested_winding_and_positive_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (wt, wg) in [(1, 0), (-2, 1), (0, 0), (2, 2), (0, -1)] {
            let l = ParameterLoop::random(&mut rng, 0.5, wt, wg, 2);
            assert_eq!(l.relative_winding().unwrap(), wt - wg);
            assert!(l.min_mass() >= 0.55);
            for i in 0..100 {
                assert!(l.mass.at(i as f64 / 100.0) >= l.min_mass() - 1e-12);
            }
        }
    }
}
