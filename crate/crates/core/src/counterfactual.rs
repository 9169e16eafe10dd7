//! Intercept-shift election simulation.
//!
//! Every draw redraws each decided respondent's perceived candidate
//! positions from the stage-1 equations, recomputes the two relative
//! distances, and redraws the vote from the stage-2 model. The random
//! stream for a (respondent, draw) pair does not depend on the shift, so
//! sweeps use common random numbers throughout.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::inference::{ChoiceModel, ChoiceRule, PerceptionModel};
use crate::rng::{domain, Substream};
use crate::spatial::grid_values;
use crate::survey::{relative_sq_distance, Candidate, Dimension, LinearTruth, SurveyDataset};

pub const DEFAULT_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftSpec {
    pub candidate: Candidate,
    pub delta_econ: f64,
    pub delta_soc: f64,
}

impl ShiftSpec {
    pub fn new(candidate: Candidate, delta_econ: f64, delta_soc: f64) -> Result<Self> {
        if !(delta_econ.is_finite() && delta_soc.is_finite()) {
            return Err(Error::InvalidInput(format!("shift must be finite, got ({delta_econ}, {delta_soc})")));
        }
        Ok(Self { candidate, delta_econ, delta_soc })
    }

    pub fn zero(candidate: Candidate) -> Self {
        Self { candidate, delta_econ: 0.0, delta_soc: 0.0 }
    }

    pub fn delta(&self, d: Dimension) -> f64 {
        match d {
            Dimension::Econ => self.delta_econ,
            Dimension::Soc => self.delta_soc,
        }
    }
}

/// Adds the shift to the candidate's intercepts in all three party groups.
pub fn apply_shift(pm: &PerceptionModel, s: &ShiftSpec) -> PerceptionModel {
    let mut out = pm.clone();
    for d in Dimension::ALL {
        let delta = s.delta(d);
        if delta != 0.0 {
            out.add_shift(s.candidate, d, delta);
        }
    }
    out
}

impl PerceptionModel {
    /// A model with exactly known coefficients, e.g. a generator's truth.
    pub fn from_truth(truth: &[LinearTruth; 12]) -> Self {
        let fits = truth
            .iter()
            .map(|t| crate::inference::LinearFit {
                intercept: t.intercept,
                coef_econ_self: t.econ_self,
                coef_soc_self: t.soc_self,
                residual_sd: t.residual_sd,
                se: [0.0; 3],
                n: 0,
            })
            .collect();
        Self::new(fits).expect("twelve cells")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElectionResult {
    /// Bush's share among decided respondents, averaged over draws.
    pub bush_share: f64,
    /// Across-draw standard deviation over `sqrt(draws)`.
    pub mc_se: f64,
    pub draws: usize,
    pub voters: usize,
}

/// Per-draw Bush counts in half-votes.
fn draw_counts(pm: &PerceptionModel, cm: &ChoiceModel, ds: &SurveyDataset, draws: usize, seed: u64) -> Vec<u64> {
    let root = Substream::root(seed, domain::ELECTION);
    let voters: Vec<(usize, &crate::survey::Respondent)> =
        ds.respondents.iter().enumerate().filter(|(_, r)| r.stage2_eligible()).collect();
    (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut half_votes = 0u64;
            for &(i, r) in &voters {
                let mut s = root.derive(i as u64).derive(k as u64);
                let mut perceived = [[0.0; 2]; 2];
                for c in Candidate::ALL {
                    for d in Dimension::ALL {
                        let sd = pm.fit(c, d, r.party).residual_sd;
                        perceived[c as usize][d as usize] =
                            pm.mean(c, d, r.party, r.econ_self, r.soc_self) + sd * s.next_normal();
                    }
                }
                let u = s.next_open01();
                let dist_e = relative_sq_distance(r.econ_self, perceived[0][0], perceived[1][0]);
                let dist_s = relative_sq_distance(r.soc_self, perceived[0][1], perceived[1][1]);
                let p = cm.probability(r.party, dist_e, dist_s);
                half_votes += match cm.rule {
                    ChoiceRule::Logit => 2 * u64::from(u < p),
                    ChoiceRule::Threshold => (2.0 * p) as u64,
                };
            }
            half_votes
        })
        .collect()
}

/// Replicated elections over the stage-2-eligible respondents of `ds`.
pub fn simulate_election(
    pm: &PerceptionModel,
    cm: &ChoiceModel,
    ds: &SurveyDataset,
    draws: usize,
    seed: u64,
) -> Result<ElectionResult> {
    if draws == 0 {
        return Err(Error::InvalidInput("draws must be at least 1".into()));
    }
    if let Some((k, f)) = cm.fits.iter().enumerate().find(|(_, f)| !f.converged) {
        return Err(Error::NotConverged(format!(
            "vote-choice fit {} did not converge (score {:.3e}); refusing to simulate",
            crate::survey::Party::ALL[k],
            f.score_norm
        )));
    }
    let m = ds.respondents.iter().filter(|r| r.stage2_eligible()).count();
    if m == 0 {
        return Err(Error::EmptyElectorate);
    }
    let counts = draw_counts(pm, cm, ds, draws, seed);
    let denom = 2.0 * m as f64;
    let total: u64 = counts.iter().sum();
    let bush_share = total as f64 / (denom * draws as f64);
    let mc_se = if draws > 1 {
        let var = counts.iter().map(|&c| (c as f64 / denom - bush_share).powi(2)).sum::<f64>() / (draws - 1) as f64;
        (var / draws as f64).sqrt()
    } else {
        (bush_share * (1.0 - bush_share) / m as f64).sqrt()
    };
    Ok(ElectionResult { bush_share, mc_se, draws, voters: m })
}

/// `lo..=hi` in steps of `step`; must contain zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ShiftGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("shift grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput(format!("shift grid step must be positive, got {step}")));
        }
        let g = Self { lo, hi, step };
        if !g.values().contains(&0.0) {
            return Err(Error::InvalidInput(format!("shift grid {lo}:{hi}:{step} does not contain 0")));
        }
        Ok(g)
    }

    /// Degenerate grid holding only zero.
    pub fn zero() -> Self {
        Self { lo: 0.0, hi: 0.0, step: 1.0 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.lo == self.hi {
            return vec![self.lo];
        }
        grid_values(self.lo, self.hi, self.step)
    }
}

impl Default for ShiftGrid {
    fn default() -> Self {
        Self { lo: -3.0, hi: 3.0, step: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub shift: ShiftSpec,
    pub result: ElectionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub candidate: Candidate,
    /// Row-major over (econ, soc).
    pub points: Vec<SweepPoint>,
    pub econ_values: Vec<f64>,
    pub soc_values: Vec<f64>,
    pub baseline: ElectionResult,
}

/// Sweeps one dimension, holding the other at zero shift.
#[allow(clippy::too_many_arguments)]
pub fn sweep_1d(
    pm: &PerceptionModel,
    cm: &ChoiceModel,
    ds: &SurveyDataset,
    candidate: Candidate,
    dimension: Dimension,
    grid: &ShiftGrid,
    draws: usize,
    seed: u64,
) -> Result<SweepResult> {
    let (econ, soc) = match dimension {
        Dimension::Econ => (*grid, ShiftGrid::zero()),
        Dimension::Soc => (ShiftGrid::zero(), *grid),
    };
    sweep_2d(pm, cm, ds, candidate, &econ, &soc, draws, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_2d(
    pm: &PerceptionModel,
    cm: &ChoiceModel,
    ds: &SurveyDataset,
    candidate: Candidate,
    econ: &ShiftGrid,
    soc: &ShiftGrid,
    draws: usize,
    seed: u64,
) -> Result<SweepResult> {
    let econ_values = econ.values();
    let soc_values = soc.values();
    let baseline = simulate_election(pm, cm, ds, draws, seed)?;
    let mut points = Vec::with_capacity(econ_values.len() * soc_values.len());
    for &de in &econ_values {
        for &ds_ in &soc_values {
            let shift = ShiftSpec::new(candidate, de, ds_)?;
            let result = simulate_election(&apply_shift(pm, &shift), cm, ds, draws, seed)?;
            points.push(SweepPoint { shift, result });
        }
    }
    Ok(SweepResult { candidate, points, econ_values, soc_values, baseline })
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "delta_econ,delta_soc,bush_share,mc_se,draws,baseline")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},0",
                p.shift.delta_econ, p.shift.delta_soc, p.result.bush_share, p.result.mc_se, p.result.draws
            )?;
        }
        let b = &self.baseline;
        writeln!(out, "0,0,{},{},{},1", b.bush_share, b.mc_se, b.draws)?;
        Ok(())
    }

    /// Lowest Bush share; the first grid point wins ties.
    pub fn argmin(&self) -> &SweepPoint {
        self.points
            .iter()
            .reduce(|best, p| if p.result.bush_share < best.result.bush_share { p } else { best })
            .expect("non-empty sweep")
    }

    pub fn argmax(&self) -> &SweepPoint {
        self.points
            .iter()
            .reduce(|best, p| if p.result.bush_share > best.result.bush_share { p } else { best })
            .expect("non-empty sweep")
    }

    /// Best shift for the moving candidate: lowest Bush share when Kerry
    /// moves, highest when Bush does.
    pub fn best_for_candidate(&self) -> &SweepPoint {
        match self.candidate {
            Candidate::Kerry => self.argmin(),
            Candidate::Bush => self.argmax(),
        }
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let cell = |p: &SweepPoint| {
            json!({
                "delta_econ": p.shift.delta_econ,
                "delta_soc": p.shift.delta_soc,
                "bush_share": p.result.bush_share,
                "mc_se": p.result.mc_se,
                "change_vs_baseline": p.result.bush_share - self.baseline.bush_share,
            })
        };
        json!({
            "candidate": self.candidate.to_string(),
            "draws": self.baseline.draws,
            "voters": self.baseline.voters,
            "grid_points": self.points.len(),
            "baseline": { "bush_share": self.baseline.bush_share, "mc_se": self.baseline.mc_se },
            "argmin": cell(self.argmin()),
            "argmax": cell(self.argmax()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{fit_all, LogitFit};
    use crate::survey::{synth_survey, GeneratorConfig, Party, Respondent, Vote};

    fn truth_models(cfg: &GeneratorConfig) -> (PerceptionModel, ChoiceModel) {
        let cm = ChoiceModel {
            fits: cfg.stage2.map(|t| LogitFit::fixed(t.intercept, t.dist_e, t.dist_s)),
            rule: ChoiceRule::Logit,
            provenance: "generator truth".into(),
        };
        (PerceptionModel::from_truth(&cfg.stage1), cm)
    }

    fn dataset(sizes: [usize; 3], seed: u64) -> (GeneratorConfig, SurveyDataset) {
        let cfg = GeneratorConfig { group_sizes: sizes, ..Default::default() };
        let ds = synth_survey(&cfg, seed).unwrap();
        (cfg, ds)
    }

    #[test]
    fn shift_touches_only_target_intercepts() {
        let (cfg, _) = dataset([100, 100, 100], 1);
        let (pm, _) = truth_models(&cfg);
        let before = pm.clone();
        let out = apply_shift(&pm, &ShiftSpec::new(Candidate::Kerry, 1.0, 0.0).unwrap());
        assert_eq!(pm, before);
        for (c, d, p) in crate::survey::perception_cells() {
            let expected = pm.intercept(c, d, p) + if (c, d) == (Candidate::Kerry, Dimension::Econ) { 1.0 } else { 0.0 };
            assert_eq!(out.intercept(c, d, p), expected);
            assert_eq!(out.fit(c, d, p), pm.fit(c, d, p));
        }
        let out = apply_shift(&pm, &ShiftSpec::new(Candidate::Bush, 0.0, -2.0).unwrap());
        for p in Party::ALL {
            assert_eq!(out.intercept(Candidate::Bush, Dimension::Soc, p), pm.intercept(Candidate::Bush, Dimension::Soc, p) - 2.0);
        }
        assert_eq!(apply_shift(&pm, &ShiftSpec::zero(Candidate::Bush)), pm);
    }

    #[test]
    fn shift_composition_is_exact() {
        let (cfg, _) = dataset([100, 100, 100], 1);
        let (pm, _) = truth_models(&cfg);
        let (a, b) = (0.1, 0.2);
        let twice = apply_shift(&apply_shift(&pm, &ShiftSpec::new(Candidate::Kerry, a, 0.7).unwrap()),
            &ShiftSpec::new(Candidate::Kerry, b, -0.3).unwrap());
        let once = apply_shift(&pm, &ShiftSpec::new(Candidate::Kerry, a + b, 0.7 + -0.3).unwrap());
        assert_eq!(twice, once);
    }

    #[test]
    fn self_consistency_with_generator() {
        let (cfg, ds) = dataset([1500, 1000, 1500], 11);
        let (pm, cm) = truth_models(&cfg);
        let sim = simulate_election(&pm, &cm, &ds, 200, 3).unwrap();
        let decided: Vec<&Respondent> = ds.respondents.iter().filter(|r| r.stage2_eligible()).collect();
        let realized = decided.iter().filter(|r| r.vote == Vote::Bush).count() as f64 / decided.len() as f64;
        // the realized rate carries its own binomial noise
        let se = (sim.mc_se.powi(2) + realized * (1.0 - realized) / decided.len() as f64).sqrt();
        assert!((sim.bush_share - realized).abs() <= 4.0 * se, "{sim:?} vs {realized}");
    }

    #[test]
    fn noise_free_threshold_matches_spatial_count() {
        let (cfg, ds) = dataset([200, 200, 200], 2);
        let mut stage1 = cfg.stage1;
        for t in stage1.iter_mut() {
            t.residual_sd = 0.0;
        }
        let pm = PerceptionModel::from_truth(&stage1);
        let mut cm = truth_models(&cfg).1;
        cm.rule = ChoiceRule::Threshold;
        let sim = simulate_election(&pm, &cm, &ds, 3, 9).unwrap();
        let mut half = 0u64;
        let mut m = 0;
        for r in ds.respondents.iter().filter(|r| r.stage2_eligible()) {
            m += 1;
            let pos = |c, d| pm.mean(c, d, r.party, r.econ_self, r.soc_self);
            let de = (r.econ_self - pos(Candidate::Bush, Dimension::Econ)).powi(2)
                - (r.econ_self - pos(Candidate::Kerry, Dimension::Econ)).powi(2);
            let dsoc = (r.soc_self - pos(Candidate::Bush, Dimension::Soc)).powi(2)
                - (r.soc_self - pos(Candidate::Kerry, Dimension::Soc)).powi(2);
            let t = cfg.stage2[r.party.index()];
            let eta = t.intercept + t.dist_e * de + t.dist_s * dsoc;
            half += if eta > 0.0 { 2 } else if eta == 0.0 { 1 } else { 0 };
        }
        assert_eq!(sim.bush_share, half as f64 / (2.0 * m as f64));
        assert_eq!(sim.mc_se, 0.0);
    }

    #[test]
    fn rejects_unconverged_choice_model() {
        let (cfg, ds) = dataset([100, 100, 100], 1);
        let (pm, mut cm) = truth_models(&cfg);
        cm.fits[1].converged = false;
        assert!(matches!(simulate_election(&pm, &cm, &ds, 10, 1), Err(Error::NotConverged(_))));
        assert!(simulate_election(&pm, &truth_models(&cfg).1, &ds, 0, 1).is_err());
    }

    #[test]
    fn zero_cell_equals_baseline() {
        let (_, ds) = dataset([300, 300, 300], 4);
        let (pm, cm) = fit_all(&ds).unwrap();
        let sweep = sweep_2d(&pm, &cm, &ds, Candidate::Kerry, &ShiftGrid::new(-1.0, 1.0, 1.0).unwrap(),
            &ShiftGrid::new(-1.0, 1.0, 0.5).unwrap(), 10, 5).unwrap();
        assert_eq!(sweep.points.len(), 15);
        let zero = sweep.points.iter().find(|p| p.shift.delta_econ == 0.0 && p.shift.delta_soc == 0.0).unwrap();
        assert_eq!(zero.result, sweep.baseline);
        let summary = sweep.summary_json();
        assert!(summary["argmin"]["change_vs_baseline"].as_f64().unwrap() <= 0.0);
        let mut buf = Vec::new();
        sweep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.lines().last().unwrap().ends_with(",1"));
    }

    #[test]
    fn grid_must_contain_zero() {
        assert!(ShiftGrid::new(0.5, 3.0, 0.5).is_err());
        assert_eq!(ShiftGrid::default().values().len(), 25);
        assert_eq!(ShiftGrid::new(-3.0, 3.0, 0.5).unwrap().values().len(), 13);
    }

    #[test]
    fn bush_moving_far_right_loses_votes() {
        let (cfg, ds) = dataset([800, 600, 800], 6);
        let (pm, cm) = truth_models(&cfg);
        let sweep = sweep_1d(&pm, &cm, &ds, Candidate::Bush, Dimension::Econ, &ShiftGrid::new(0.0, 3.0, 0.5).unwrap(), 40, 2)
            .unwrap();
        let shares: Vec<f64> = sweep.points.iter().map(|p| p.result.bush_share).collect();
        assert!(shares.windows(2).all(|w| w[1] < w[0]), "{shares:?}");
    }
}
