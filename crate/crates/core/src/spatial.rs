//! Vote shares, share-versus-position curves and position search.
//!
//! Shares are always D's share. Exact ties count half a vote for each party.
//! Every evaluation is a pure function of the electorate, the positions and
//! the noise seed; grid points reuse the same perception-noise substreams.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electorate::Electorate;
use crate::error::{Error, Result};
use crate::geometry::{classify, relative_utility_raw, IdealPoint, Metric, Preference, TieRule, Valence};
use crate::rng::{domain, Substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareEstimate {
    pub share: f64,
    pub mc_se: f64,
    pub n_voters: usize,
    pub draws: usize,
}

impl ShareEstimate {
    /// `half_votes` counts a D vote as 2 and a tie as 1.
    fn from_half_votes(half_votes: u64, n_voters: usize, draws: usize) -> Self {
        let trials = (n_voters * draws) as f64;
        let share = half_votes as f64 / (2.0 * trials);
        let mc_se = (share * (1.0 - share) / trials).max(0.0).sqrt();
        Self { share, mc_se, n_voters, draws }
    }
}

/// Perception noise on candidate positions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum NoiseConfig {
    #[default]
    None,
    /// Independent `N(0, sigma_j^2)` per voter, candidate, dimension and draw.
    /// `sigma` has one entry (shared) or one per dimension.
    Perception { sigma: Vec<f64>, draws: usize, seed: u64 },
}

/// Regular grid along one coordinate axis, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl PositionGrid {
    pub fn new(axis: usize, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("grid bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { axis, lo, hi, step })
    }

    /// `lo + k * step` for `k = 0..=round((hi - lo) / step)`, rounded to 12
    /// decimals so that decimal grids print cleanly.
    pub fn values(&self) -> Vec<f64> {
        grid_values(self.lo, self.hi, self.step)
    }
}

pub(crate) fn grid_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k_max = ((hi - lo) / step).round() as usize;
    (0..=k_max).map(|k| snap(lo + k as f64 * step)).collect()
}

fn snap(x: f64) -> f64 {
    let s = (x * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

fn check_positions(e: &Electorate, d_pos: &IdealPoint, r_pos: &IdealPoint, m: &Metric) -> Result<()> {
    for found in [d_pos.dim(), r_pos.dim(), m.dim()] {
        if found != e.dim() {
            return Err(Error::DimensionMismatch { expected: e.dim(), found });
        }
    }
    if e.is_empty() {
        return Err(Error::EmptyElectorate);
    }
    Ok(())
}

fn half_vote(u: f64) -> u64 {
    match classify(u, TieRule::Split) {
        Preference::D => 2,
        Preference::Split => 1,
        Preference::R => 0,
    }
}

/// D's share of an electorate under noise-free spatial voting.
pub fn vote_share(
    e: &Electorate,
    d_pos: &IdealPoint,
    r_pos: &IdealPoint,
    m: &Metric,
    v: Valence,
) -> Result<ShareEstimate> {
    check_positions(e, d_pos, r_pos, m)?;
    let (d, r) = (d_pos.coords(), r_pos.coords());
    let half_votes: u64 = e
        .coords()
        .par_chunks(e.dim())
        .map(|x| half_vote(relative_utility_raw(x, d, r, m, v)))
        .sum();
    Ok(ShareEstimate::from_half_votes(half_votes, e.len(), 1))
}

fn expand_sigma(sigma: &[f64], dim: usize) -> Result<Vec<f64>> {
    if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidInput(format!("perception sd {s} must be non-negative")));
    }
    match sigma.len() {
        1 => Ok(vec![sigma[0]; dim]),
        n if n == dim => Ok(sigma.to_vec()),
        n => Err(Error::DimensionMismatch { expected: dim, found: n }),
    }
}

/// D's share when each voter perceives both candidates with normal error.
#[allow(clippy::too_many_arguments)]
pub fn vote_share_noisy(
    e: &Electorate,
    d_pos: &IdealPoint,
    r_pos: &IdealPoint,
    m: &Metric,
    v: Valence,
    sigma: &[f64],
    draws: usize,
    seed: u64,
) -> Result<ShareEstimate> {
    check_positions(e, d_pos, r_pos, m)?;
    if draws == 0 {
        return Err(Error::InvalidInput("draws must be at least 1".into()));
    }
    let sigma = expand_sigma(sigma, e.dim())?;
    let dim = e.dim();
    let (d, r) = (d_pos.coords(), r_pos.coords());
    let root = Substream::root(seed, domain::PERCEPTION);
    let half_votes: u64 = e
        .coords()
        .par_chunks(dim)
        .enumerate()
        .map(|(i, x)| {
            let voter = root.derive(i as u64);
            let mut dp = vec![0.0; dim];
            let mut rp = vec![0.0; dim];
            let mut votes = 0u64;
            for k in 0..draws {
                let mut s = voter.derive(k as u64);
                for j in 0..dim {
                    dp[j] = d[j] + sigma[j] * s.next_normal();
                }
                for j in 0..dim {
                    rp[j] = r[j] + sigma[j] * s.next_normal();
                }
                votes += half_vote(relative_utility_raw(x, &dp, &rp, m, v));
            }
            votes
        })
        .sum();
    Ok(ShareEstimate::from_half_votes(half_votes, e.len(), draws))
}

/// D's share at one position under `noise`.
pub fn evaluate(
    e: &Electorate,
    d_pos: &IdealPoint,
    r_pos: &IdealPoint,
    m: &Metric,
    v: Valence,
    noise: &NoiseConfig,
) -> Result<ShareEstimate> {
    match noise {
        NoiseConfig::None => vote_share(e, d_pos, r_pos, m, v),
        NoiseConfig::Perception { sigma, draws, seed } => {
            vote_share_noisy(e, d_pos, r_pos, m, v, sigma, *draws, *seed)
        }
    }
}

/// One evaluated point of a curve or surface; `coords` holds the swept
/// coordinate values (one per swept axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub coords: Vec<f64>,
    pub estimate: ShareEstimate,
}

/// D's share as D's coordinate `grid.axis` sweeps the grid.
pub fn share_curve(
    e: &Electorate,
    r_pos: &IdealPoint,
    d_template: &IdealPoint,
    grid: &PositionGrid,
    m: &Metric,
    v: Valence,
    noise: &NoiseConfig,
) -> Result<Vec<CurvePoint>> {
    if grid.axis >= d_template.dim() {
        return Err(Error::InvalidInput(format!(
            "grid axis {} out of range for dimension {}",
            grid.axis,
            d_template.dim()
        )));
    }
    grid.values()
        .into_par_iter()
        .map(|x| {
            let d = d_template.with_coord(grid.axis, x);
            evaluate(e, &d, r_pos, m, v, noise).map(|estimate| CurvePoint { coords: vec![x], estimate })
        })
        .collect()
}

/// D's share over the product of two axis grids (first grid varies slowest).
#[allow(clippy::too_many_arguments)]
pub fn share_surface(
    e: &Electorate,
    r_pos: &IdealPoint,
    d_template: &IdealPoint,
    grid: &PositionGrid,
    grid2: &PositionGrid,
    m: &Metric,
    v: Valence,
    noise: &NoiseConfig,
) -> Result<Vec<CurvePoint>> {
    if grid.axis >= d_template.dim() || grid2.axis >= d_template.dim() || grid.axis == grid2.axis {
        return Err(Error::InvalidInput("surface axes must be distinct and in range".into()));
    }
    let cells: Vec<(f64, f64)> = grid
        .values()
        .into_iter()
        .flat_map(|x| grid2.values().into_iter().map(move |y| (x, y)))
        .collect();
    cells
        .into_par_iter()
        .map(|(x, y)| {
            let d = d_template.with_coord(grid.axis, x).with_coord(grid2.axis, y);
            evaluate(e, &d, r_pos, m, v, noise).map(|estimate| CurvePoint { coords: vec![x, y], estimate })
        })
        .collect()
}

/// Index of the highest share; the first (lowest-coordinate) point wins ties.
pub fn argmax(points: &[CurvePoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        match best {
            Some(b) if points[b].estimate.share >= p.estimate.share => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Writes `axis_value[,axis2_value],d_share,mc_se,n_voters,draws`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut out: W) -> Result<()> {
    let two_d = points.first().is_some_and(|p| p.coords.len() == 2);
    if two_d {
        writeln!(out, "axis_value,axis2_value,d_share,mc_se,n_voters,draws")?;
    } else {
        writeln!(out, "axis_value,d_share,mc_se,n_voters,draws")?;
    }
    for p in points {
        let coords: Vec<String> = p.coords.iter().map(|c| c.to_string()).collect();
        let e = &p.estimate;
        writeln!(out, "{},{},{},{},{}", coords.join(","), e.share, e.mc_se, e.n_voters, e.draws)?;
    }
    Ok(())
}

/// Coarse-to-fine grid search over one or two of D's coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub free_axes: Vec<usize>,
    /// Inclusive `(lo, hi)` per free axis.
    pub bounds: Vec<(f64, f64)>,
    pub coarse_step: f64,
    /// Each round shrinks the step tenfold around the incumbent best.
    pub refine_rounds: usize,
}

impl SearchSpec {
    pub fn new(free_axes: Vec<usize>, bounds: Vec<(f64, f64)>) -> Self {
        Self { free_axes, bounds, coarse_step: 0.1, refine_rounds: 2 }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.free_axes.is_empty() {
            return Err(Error::InvalidInput("at least one free axis is required".into()));
        }
        if self.free_axes.len() > 2 {
            return Err(Error::InvalidInput("at most two free axes are supported".into()));
        }
        if self.free_axes.len() == 2 && self.free_axes[0] == self.free_axes[1] {
            return Err(Error::InvalidInput("free axes must be distinct".into()));
        }
        if let Some(a) = self.free_axes.iter().find(|a| **a >= dim) {
            return Err(Error::InvalidInput(format!("free axis {a} out of range for dimension {dim}")));
        }
        if self.bounds.len() != self.free_axes.len() {
            return Err(Error::DimensionMismatch { expected: self.free_axes.len(), found: self.bounds.len() });
        }
        for &(lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("invalid bounds [{lo}, {hi}]")));
            }
        }
        if !(self.coarse_step.is_finite() && self.coarse_step > 0.0) {
            return Err(Error::InvalidInput("coarse step must be positive".into()));
        }
        Ok(())
    }
}

/// Maximizes D's share by grid search with tenfold refinement.
///
/// Ties are broken toward the lexicographically smallest free coordinates.
#[allow(clippy::too_many_arguments)]
pub fn optimize_position(
    e: &Electorate,
    r_pos: &IdealPoint,
    d_template: &IdealPoint,
    search: &SearchSpec,
    m: &Metric,
    v: Valence,
    noise: &NoiseConfig,
) -> Result<(IdealPoint, ShareEstimate)> {
    search.validate(d_template.dim())?;
    let place = |free: &[f64]| {
        let mut d = d_template.clone();
        for (axis, x) in search.free_axes.iter().zip(free) {
            d = d.with_coord(*axis, *x);
        }
        d
    };

    let axis_values = |round: usize, center: Option<&[f64]>| -> Vec<Vec<f64>> {
        let step = search.coarse_step / 10f64.powi(round as i32);
        search
            .bounds
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi))| match center {
                None => grid_values(lo, hi, step).into_iter().filter(|x| *x <= hi).collect(),
                Some(c) => (-10i32..=10)
                    .map(|j| snap(c[k] + j as f64 * step))
                    .filter(|x| *x >= lo && *x <= hi)
                    .collect(),
            })
            .collect()
    };

    let mut best: Option<(Vec<f64>, ShareEstimate)> = None;
    for round in 0..=search.refine_rounds {
        let axes = axis_values(round, best.as_ref().map(|b| b.0.as_slice()));
        let candidates: Vec<Vec<f64>> = match axes.as_slice() {
            [a] => a.iter().map(|x| vec![*x]).collect(),
            [a, b] => a.iter().flat_map(|x| b.iter().map(move |y| vec![*x, *y])).collect(),
            _ => unreachable!("validated above"),
        };
        let scored: Vec<(Vec<f64>, ShareEstimate)> = candidates
            .into_par_iter()
            .map(|c| evaluate(e, &place(&c), r_pos, m, v, noise).map(|s| (c, s)))
            .collect::<Result<_>>()?;
        for (c, s) in scored {
            let better = match &best {
                None => true,
                Some((bc, bs)) => {
                    s.share > bs.share || (s.share == bs.share && c.partial_cmp(bc) == Some(std::cmp::Ordering::Less))
                }
            };
            if better {
                best = Some((c, s));
            }
        }
    }
    let (coords, estimate) = best.ok_or_else(|| Error::InvalidInput("empty search grid".into()))?;
    Ok((place(&coords), estimate))
}
