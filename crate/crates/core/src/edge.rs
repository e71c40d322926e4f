//! Edge-localization diagnostics for eigenvectors of truncated half-line
//! operators. Site 0 is the physical boundary ("near" edge); the last site
//! is the artificial truncation ("far" edge).

use serde::{Deserialize, Serialize};

use crate::numerics::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Near,
    Far,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Near => "near",
            Side::Far => "far",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeProfile {
    /// Weight on the first `edge_sites` sites.
    pub near_weight: f64,
    /// Weight on the last `edge_sites` sites.
    pub far_weight: f64,
    /// Expectation of the site index.
    pub mean_site: f64,
    pub side: Side,
}

impl EdgeProfile {
    pub fn weight(&self) -> f64 {
        match self.side {
            Side::Near => self.near_weight,
            Side::Far => self.far_weight,
        }
    }

    pub fn localized(&self, threshold: f64) -> bool {
        self.near_weight.max(self.far_weight) >= threshold
    }
}

/// Number of sites counted as "edge" for a chain of `n_sites`.
pub fn edge_sites(n_sites: usize, fraction: f64) -> usize {
    ((n_sites as f64 * fraction).ceil() as usize).clamp(1, n_sites)
}

pub fn site_weights(v: &[C64], orbitals: usize) -> Vec<f64> {
    v.chunks(orbitals)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

pub fn edge_profile(v: &[C64], orbitals: usize, edge_fraction: f64) -> EdgeProfile {
    let w = site_weights(v, orbitals);
    let n = w.len();
    let total: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let k = edge_sites(n, edge_fraction);
    let near_weight = w[..k].iter().sum::<f64>() / total;
    let far_weight = w[n - k..].iter().sum::<f64>() / total;
    let mean_site = w.iter().enumerate().map(|(j, x)| j as f64 * x).sum::<f64>() / total;
    let side = if mean_site < 0.5 * (n as f64 - 1.0) {
        Side::Near
    } else {
        Side::Far
    };
    EdgeProfile {
        near_weight,
        far_weight,
        mean_site,
        side,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_profile_is_near() {
        let v: Vec<C64> = (0..200)
            .map(|j| C64::new(if j % 2 == 0 { 0.8f64.powi(j / 2) } else { 0.0 }, 0.0))
            .collect();
        let p = edge_profile(&v, 2, 0.2);
        assert_eq!(p.side, Side::Near);
        assert!(p.near_weight > 0.99);
        assert!(p.far_weight < 1e-6);
    }
}
