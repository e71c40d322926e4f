//! Spectral flow of paths of Hermitian matrices through a spectral window,
//! computed two independent ways, and winding numbers of complex loops.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::{edge_profile, Side};
use crate::error::{invalid, Error, Result};
use crate::numerics::{eigh_window, wrap_angle, HermitianMatrix, C64};

/// One point of a parameterized family.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub param: f64,
    pub matrix: HermitianMatrix,
    /// Open interval that must stay inside the essential gap.
    pub window: (f64, f64),
}

pub type Sampler = Arc<dyn Fn(f64) -> Result<PathSample> + Send + Sync>;

/// Which in-window eigenstates take part in the count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateFilter {
    /// Restrict to states on one edge of the truncated chain.
    pub side: Option<Side>,
    /// Fraction of the chain counted as an edge region.
    pub edge_fraction: f64,
    /// In-window states with less edge weight than this are delocalized,
    /// which means the window reaches into the essential spectrum.
    pub localization_threshold: f64,
}

impl Default for StateFilter {
    fn default() -> Self {
        Self {
            side: None,
            edge_fraction: 0.2,
            localization_threshold: 0.5,
        }
    }
}

impl StateFilter {
    pub fn near_edge() -> Self {
        Self {
            side: Some(Side::Near),
            ..Self::default()
        }
    }
}

#[derive(Clone)]
pub struct OperatorPath {
    samples: Vec<PathSample>,
    closed: bool,
    period: f64,
    level: f64,
    filter: StateFilter,
    sampler: Option<Sampler>,
    budget: usize,
}

impl std::fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorPath")
            .field("samples", &self.samples.len())
            .field("closed", &self.closed)
            .field("period", &self.period)
            .field("level", &self.level)
            .field("filter", &self.filter)
            .field("refinable", &self.sampler.is_some())
            .finish()
    }
}

impl OperatorPath {
    /// Path over increasing parameters, not joined at the ends.
    pub fn open(samples: Vec<PathSample>) -> Result<Self> {
        Self::build(samples, false, 0.0)
    }

    /// Loop: the sample at `param + period` is identified with the first.
    /// The duplicate endpoint must not be included.
    pub fn closed(samples: Vec<PathSample>, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return invalid("closed path needs a positive period");
        }
        let path = Self::build(samples, true, period)?;
        let (first, last) = (
            path.samples[0].param,
            path.samples[path.samples.len() - 1].param,
        );
        if last >= first + period {
            return invalid("closed path samples must span less than one period");
        }
        Ok(path)
    }

    fn build(samples: Vec<PathSample>, closed: bool, period: f64) -> Result<Self> {
        if samples.len() < 2 {
            return invalid("a path needs at least two samples");
        }
        let dim = samples[0].matrix.dim();
        for w in samples.windows(2) {
            if !(w[1].param > w[0].param) {
                return invalid("path parameters must be strictly increasing");
            }
        }
        for s in &samples {
            if s.matrix.dim() != dim {
                return invalid("all path samples must have the same dimension");
            }
            if !(s.window.0 < s.window.1) {
                return invalid(format!("empty window at parameter {}", s.param));
            }
        }
        Ok(Self {
            samples,
            closed,
            period,
            level: 0.0,
            filter: StateFilter::default(),
            sampler: None,
            budget: 0,
        })
    }

    /// Enable adaptive refinement: `sampler` rebuilds a sample at any
    /// parameter, at most `budget` extra samples are taken.
    pub fn with_sampler(mut self, sampler: Sampler, budget: usize) -> Self {
        self.sampler = Some(sampler);
        self.budget = budget;
        self
    }

    pub fn with_filter(mut self, filter: StateFilter) -> Self {
        self.filter = filter;
        self
    }

    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn filter(&self) -> StateFilter {
        self.filter
    }
}

/// Move the counting level to `mu`. Every window must contain `mu`
/// strictly, otherwise the shifted family is not Fredholm there.
pub fn shift_level(path: &OperatorPath, mu: f64) -> Result<OperatorPath> {
    for s in &path.samples {
        if !(s.window.0 < mu && mu < s.window.1) {
            return Err(Error::NonFredholm {
                level: mu,
                param: s.param,
            });
        }
    }
    let mut p = path.clone();
    p.level = mu;
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Crossings,
    ExpWinding,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Crossings => "crossings",
            Algorithm::ExpWinding => "exp_winding",
        }
    }
}

/// Tracked in-window states at one parameter.
#[derive(Clone, Debug)]
pub struct SampleSpectrum {
    pub param: f64,
    pub window: (f64, f64),
    pub energies: Vec<f64>,
    pub edge_weights: Vec<f64>,
}

/// Point of a tracked eigenvalue branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub branch: usize,
    pub energy: f64,
}

/// Signed passage of a branch through the level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Parameters bracketing the passage.
    pub between: (f64, f64),
    pub direction: i32,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub algorithm: Algorithm,
    pub flow: i64,
    pub samples_used: usize,
    pub refinements: usize,
    pub spectra: Vec<SampleSpectrum>,
    pub crossings: Vec<Crossing>,
    pub branches: Vec<BranchPoint>,
}

/// Serialized summary of a flow computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub loop_id: String,
    pub algorithm: Algorithm,
    pub flow: i64,
    pub samples_used: usize,
    pub refinements: usize,
}

impl FlowResult {
    pub fn report(&self, loop_id: impl Into<String>) -> FlowReport {
        FlowReport {
            loop_id: loop_id.into(),
            algorithm: self.algorithm,
            flow: self.flow,
            samples_used: self.samples_used,
            refinements: self.refinements,
        }
    }
}

fn analyze(sample: &PathSample, filter: StateFilter) -> Result<SampleSpectrum> {
    let sys = eigh_window(&sample.matrix, sample.window.0, sample.window.1)?;
    let orb = sample.matrix.orbitals();
    let mut energies = Vec::new();
    let mut edge_weights = Vec::new();
    for (e, v) in sys.values.iter().zip(&sys.vectors) {
        let prof = edge_profile(v, orb, filter.edge_fraction);
        if !prof.localized(filter.localization_threshold) {
            return Err(Error::WindowViolated {
                param: sample.param,
                energy: *e,
            });
        }
        if filter.side.is_none_or(|s| s == prof.side) {
            energies.push(*e);
            edge_weights.push(prof.weight());
        }
    }
    Ok(SampleSpectrum {
        param: sample.param,
        window: sample.window,
        energies,
        edge_weights,
    })
}

/// Ordered sequence of spectra with on-demand midpoint refinement.
struct Walker<'a> {
    path: &'a OperatorPath,
    spectra: Vec<SampleSpectrum>,
    refinements: usize,
}

impl<'a> Walker<'a> {
    fn new(path: &'a OperatorPath) -> Result<Self> {
        let spectra = path
            .samples
            .par_iter()
            .map(|s| analyze(s, path.filter))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            path,
            spectra,
            refinements: 0,
        })
    }

    fn n_intervals(&self) -> usize {
        if self.path.closed {
            self.spectra.len()
        } else {
            self.spectra.len() - 1
        }
    }

    /// Endpoints of interval `i`; the right end of the closing interval is
    /// the first sample shifted by one period.
    fn interval(&self, i: usize) -> (&SampleSpectrum, &SampleSpectrum, f64, f64) {
        let a = &self.spectra[i];
        if i + 1 < self.spectra.len() {
            let b = &self.spectra[i + 1];
            (a, b, a.param, b.param)
        } else {
            let b = &self.spectra[0];
            (a, b, a.param, b.param + self.path.period)
        }
    }

    /// Insert the midpoint of interval `i`. Returns false if refinement is
    /// impossible.
    fn refine(&mut self, i: usize) -> Result<bool> {
        let Some(sampler) = &self.path.sampler else {
            return Ok(false);
        };
        if self.refinements >= self.path.budget {
            return Ok(false);
        }
        let (_, _, pa, pb) = self.interval(i);
        let mid = 0.5 * (pa + pb);
        if !(mid > pa && mid < pb) {
            return Ok(false);
        }
        let sample = sampler(mid)?;
        if sample.matrix.dim() != self.path.samples[0].matrix.dim() {
            return invalid("sampler changed the matrix dimension");
        }
        if self.path.level != 0.0
            && !(sample.window.0 < self.path.level && self.path.level < sample.window.1)
        {
            return Err(Error::NonFredholm {
                level: self.path.level,
                param: mid,
            });
        }
        let spec = analyze(&sample, self.path.filter)?;
        self.spectra.insert(i + 1, spec);
        self.refinements += 1;
        Ok(true)
    }
}

/// A pairing of the states at two consecutive samples; unmatched states
/// leave or enter through the window edges.
#[derive(Clone, Debug)]
struct Matching {
    exit_bottom: usize,
    enter_bottom: usize,
    matched: usize,
    cost: f64,
}

fn best_matching(a: &SampleSpectrum, b: &SampleSpectrum) -> Matching {
    let (p, q) = (a.energies.len(), b.energies.len());
    let mut best: Option<(Matching, usize)> = None;
    for x in 0..=p {
        for y in 0..=q {
            if x > 0 && y > 0 {
                continue;
            }
            let c = (p - x).min(q - y);
            let top_exit = p - x - c;
            let top_enter = q - y - c;
            if top_exit > 0 && top_enter > 0 {
                continue;
            }
            let mut cost: f64 = 0.0;
            for i in 0..x {
                cost = cost.max(a.energies[i] - b.window.0);
            }
            for j in 0..y {
                cost = cost.max(b.energies[j] - a.window.0);
            }
            for k in 0..c {
                cost = cost.max((a.energies[x + k] - b.energies[y + k]).abs());
            }
            for i in x + c..p {
                cost = cost.max(b.window.1 - a.energies[i]);
            }
            for j in y + c..q {
                cost = cost.max(a.window.1 - b.energies[j]);
            }
            let moves = x + y + top_exit + top_enter;
            let better = match &best {
                None => true,
                Some((m, mv)) => cost < m.cost - 1e-15 || (cost <= m.cost + 1e-15 && moves < *mv),
            };
            if better {
                best = Some((
                    Matching {
                        exit_bottom: x,
                        enter_bottom: y,
                        matched: c,
                        cost,
                    },
                    moves,
                ));
            }
        }
    }
    best.expect("matching over a non-empty search space").0
}

fn width(s: &SampleSpectrum) -> f64 {
    s.window.1 - s.window.0
}

fn passage(from: f64, to: f64, mu: f64) -> i32 {
    if from < mu && mu <= to {
        1
    } else if from >= mu && mu > to {
        -1
    } else {
        0
    }
}

/// Spectral flow by tracking eigenvalue branches and counting signed
/// passages through the level (half-open: a value at the level counts as
/// above it).
pub fn spectral_flow_crossings(path: &OperatorPath) -> Result<FlowResult> {
    let mu = path.level;
    let mut w = Walker::new(path)?;
    let mut crossings = Vec::new();
    let mut branches = Vec::new();
    let mut next_id = 0usize;
    let mut ids: Vec<usize> = (0..w.spectra[0].energies.len())
        .map(|_| {
            next_id += 1;
            next_id - 1
        })
        .collect();
    for (k, e) in w.spectra[0].energies.iter().enumerate() {
        branches.push(BranchPoint {
            param: w.spectra[0].param,
            branch: ids[k],
            energy: *e,
        });
    }

    let mut i = 0;
    while i < w.n_intervals() {
        let (a, b, pa, pb) = w.interval(i);
        let m = best_matching(a, b);
        if m.cost > 0.25 * width(a).min(width(b)) {
            if w.refine(i)? {
                continue;
            }
            return Err(Error::RefinementExhausted { param: pa });
        }
        let below_a = a.window.0.min(b.window.0) - 1.0;
        let below_b = below_a;
        let above = a.window.1.max(b.window.1) + 1.0;
        let mut record = |from: f64, to: f64| {
            let d = passage(from, to, mu);
            if d != 0 {
                crossings.push(Crossing {
                    between: (pa, pb),
                    direction: d,
                });
            }
        };
        for k in 0..m.exit_bottom {
            record(a.energies[k], below_b);
        }
        for k in 0..m.enter_bottom {
            record(below_a, b.energies[k]);
        }
        for k in 0..m.matched {
            record(
                a.energies[m.exit_bottom + k],
                b.energies[m.enter_bottom + k],
            );
        }
        for k in m.exit_bottom + m.matched..a.energies.len() {
            record(a.energies[k], above);
        }
        for k in m.enter_bottom + m.matched..b.energies.len() {
            record(above, b.energies[k]);
        }

        let mut new_ids = Vec::with_capacity(b.energies.len());
        for _ in 0..m.enter_bottom {
            new_ids.push(next_id);
            next_id += 1;
        }
        for k in 0..m.matched {
            new_ids.push(ids[m.exit_bottom + k]);
        }
        while new_ids.len() < b.energies.len() {
            new_ids.push(next_id);
            next_id += 1;
        }
        if i + 1 < w.spectra.len() {
            for (k, e) in b.energies.iter().enumerate() {
                branches.push(BranchPoint {
                    param: b.param,
                    branch: new_ids[k],
                    energy: *e,
                });
            }
        }
        ids = new_ids;
        i += 1;
    }

    let flow = crossings.iter().map(|c| c.direction as i64).sum();
    Ok(FlowResult {
        algorithm: Algorithm::Crossings,
        flow,
        samples_used: w.spectra.len(),
        refinements: w.refinements,
        spectra: w.spectra,
        crossings,
        branches,
    })
}

/// Total phase of the flattened unitary exp(i pi (f(H) + 1)) restricted to
/// the tracked states; `f` maps the window affinely onto [-1, 1] with the
/// level sent to 0.
fn flattened_phase(s: &SampleSpectrum, mu: f64) -> f64 {
    let (lo, hi) = s.window;
    s.energies
        .iter()
        .map(|&e| {
            let f = if e <= mu {
                -1.0 + (e - lo) / (mu - lo)
            } else {
                (e - mu) / (hi - mu)
            };
            PI * (f.clamp(-1.0, 1.0) + 1.0)
        })
        .sum()
}

/// Spectral flow as the winding number of the determinant of the flattened
/// unitary around a closed path. Does not use any branch matching.
pub fn spectral_flow_exp_winding(path: &OperatorPath) -> Result<FlowResult> {
    if !path.closed {
        return invalid("the exponential winding algorithm needs a closed path");
    }
    let mu = path.level;
    let mut w = Walker::new(path)?;
    let mut total = 0.0;
    let mut i = 0;
    while i < w.n_intervals() {
        let (a, b, pa, _) = w.interval(i);
        let d = wrap_angle(flattened_phase(b, mu) - flattened_phase(a, mu));
        if d.abs() > 0.5 * PI {
            if w.refine(i)? {
                continue;
            }
            return Err(Error::RefinementExhausted { param: pa });
        }
        total += d;
        i += 1;
    }
    let turns = total / (2.0 * PI);
    let flow = turns.round();
    if (turns - flow).abs() > 1e-6 {
        return Err(Error::IllDefinedWinding(format!(
            "determinant phase closes with residual {}",
            turns - flow
        )));
    }
    Ok(FlowResult {
        algorithm: Algorithm::ExpWinding,
        flow: flow as i64,
        samples_used: w.spectra.len(),
        refinements: w.refinements,
        spectra: w.spectra,
        crossings: Vec::new(),
        branches: Vec::new(),
    })
}

/// Closed loop of nonzero complex numbers, sampled without the duplicate
/// endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexLoop {
    pub values: Vec<C64>,
}

impl ComplexLoop {
    pub fn new(values: Vec<C64>) -> Self {
        Self { values }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> C64) -> Self {
        Self {
            values: (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect(),
        }
    }
}

/// Degree of `arg f` around the loop.
pub fn winding_number(l: &ComplexLoop) -> Result<i64> {
    let n = l.values.len();
    if n < 3 {
        return Err(Error::IllDefinedWinding(
            "need at least three samples".into(),
        ));
    }
    let scale = l.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some((i, _)) = l
        .values
        .iter()
        .enumerate()
        .find(|(_, z)| z.norm() <= 1e-12 * scale.max(1e-300))
    {
        return Err(Error::IllDefinedWinding(format!(
            "loop passes through zero at sample {i}"
        )));
    }
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (l.values[i], l.values[(i + 1) % n]);
        let d = (b / a).arg();
        if d.abs() > 0.5 * PI {
            return Err(Error::IllDefinedWinding(format!(
                "phase step {d:.3} between samples {i} and {} exceeds pi/2; sample more densely",
                (i + 1) % n
            )));
        }
        total += d;
    }
    let turns = total / (2.0 * PI);
    let w = turns.round();
    if (turns - w).abs() > 1e-6 {
        return Err(Error::IllDefinedWinding(format!(
            "phase closes with residual {}",
            turns - w
        )));
    }
    Ok(w as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::HermitianMatrix;

    fn diag_sample(param: f64, vals: &[f64], window: (f64, f64)) -> PathSample {
        let n = vals.len();
        let m = HermitianMatrix::from_fn(n, |i, j| {
            if i == j {
                C64::new(vals[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        PathSample {
            param,
            matrix: m,
            window,
        }
    }

    #[test]
    fn winding_of_powers() {
        for k in -3i64..=3 {
            let l = ComplexLoop::from_fn(64, |t| C64::from_polar(1.0, k as f64 * t));
            assert_eq!(winding_number(&l).unwrap(), k);
        }
    }

    #[test]
    fn winding_rejects_zero_and_undersampling() {
        let l = ComplexLoop::from_fn(16, |t| C64::new(t.cos(), 0.0));
        assert!(winding_number(&l).is_err());
        let l = ComplexLoop::from_fn(8, |t| C64::from_polar(1.0, 3.0 * t));
        assert!(winding_number(&l).is_err());
    }

    #[test]
    fn single_descending_branch_on_loop() {
        // eigenvalue cos(t) plus a far-away spectator; flow across 0 is 0
        // (down once, up once) for the full loop and -1 on half of it.
        let n = 40;
        let samples: Vec<PathSample> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                diag_sample(t, &[0.8 * t.cos(), 5.0], (-1.0, 1.0))
            })
            .collect();
        let path = OperatorPath::closed(samples.clone(), 2.0 * PI).unwrap();
        assert_eq!(spectral_flow_crossings(&path).unwrap().flow, 0);
        assert_eq!(spectral_flow_exp_winding(&path).unwrap().flow, 0);
        let half = OperatorPath::open(samples[..n / 2 + 1].to_vec()).unwrap();
        assert_eq!(spectral_flow_crossings(&half).unwrap().flow, -1);
    }

    #[test]
    fn branch_leaving_bottom_and_reentering_top() {
        // sawtooth: value decreases, leaves through the bottom and comes
        // back through the top: flow -1 on the loop
        let n = 64;
        let samples: Vec<PathSample> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let v = 1.2 - 2.4 * t;
                let vals: Vec<f64> = if v.abs() < 1.0 { vec![v] } else { vec![] };
                let vals = if vals.is_empty() { vec![3.0] } else { vals };
                diag_sample(t, &vals, (-1.0, 1.0))
            })
            .collect();
        let path = OperatorPath::closed(samples, 1.0).unwrap();
        assert_eq!(spectral_flow_crossings(&path).unwrap().flow, -1);
        assert_eq!(spectral_flow_exp_winding(&path).unwrap().flow, -1);
    }

    #[test]
    fn shift_level_rejects_level_outside_window() {
        let samples = vec![
            diag_sample(0.0, &[0.0], (-1.0, 1.0)),
            diag_sample(1.0, &[0.0], (-0.5, 0.5)),
        ];
        let path = OperatorPath::open(samples).unwrap();
        assert!(shift_level(&path, 0.4).is_ok());
        assert!(matches!(
            shift_level(&path, 0.6),
            Err(Error::NonFredholm { .. })
        ));
    }
}
