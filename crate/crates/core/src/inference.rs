//! Stage-1 perceived-position regressions and stage-2 vote-choice logits.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electorate::cholesky_lower;
use crate::error::{CellFailure, Error, Result};
use crate::normal::inv_logit;
use crate::survey::{
    perception_cell, perception_cells, Candidate, Dimension, Party, SurveyDataset, Vote, EQ31_TRUTH,
};

/// One observation for a perceived-position regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsRow {
    pub econ_self: f64,
    pub soc_self: f64,
    pub outcome: f64,
}

/// `outcome ~ 1 + econ_self + soc_self`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub coef_econ_self: f64,
    pub coef_soc_self: f64,
    /// Residual sd with an `n - 3` denominator.
    pub residual_sd: f64,
    /// Standard errors of intercept, econ_self, soc_self.
    pub se: [f64; 3],
    pub n: usize,
}

impl LinearFit {
    pub fn coefficients(&self) -> [f64; 3] {
        [self.intercept, self.coef_econ_self, self.coef_soc_self]
    }

    pub fn predict(&self, econ_self: f64, soc_self: f64) -> f64 {
        self.intercept + self.coef_econ_self * econ_self + self.coef_soc_self * soc_self
    }
}

/// Least squares via centered normal equations with one refinement pass.
pub fn fit_ols(rows: &[OlsRow]) -> Result<LinearFit> {
    let n = rows.len();
    if n <= 3 {
        return Err(Error::InvalidInput(format!("OLS needs more than 3 rows, got {n}")));
    }
    let nf = n as f64;
    let mean = |f: fn(&OlsRow) -> f64| rows.iter().map(f).sum::<f64>() / nf;
    let (me, ms, my) = (mean(|r| r.econ_self), mean(|r| r.soc_self), mean(|r| r.outcome));

    let (mut see, mut sss, mut ses, mut raw_ee, mut raw_ss) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let (e, s) = (r.econ_self - me, r.soc_self - ms);
        see += e * e;
        sss += s * s;
        ses += e * s;
        raw_ee += r.econ_self * r.econ_self;
        raw_ss += r.soc_self * r.soc_self;
    }
    // Cholesky of the centered 2x2 Gram matrix; a vanishing pivot names the
    // column that is collinear with the ones before it.
    if !(see > 1e-12 * raw_ee) {
        return Err(Error::RankDeficient { column: "econ_self" });
    }
    let l00 = see.sqrt();
    let l10 = ses / l00;
    let pivot = sss - l10 * l10;
    if !(pivot > 1e-12 * raw_ss) {
        return Err(Error::RankDeficient { column: "soc_self" });
    }
    let l11 = pivot.sqrt();
    let solve = |g0: f64, g1: f64| {
        let z0 = g0 / l00;
        let z1 = (g1 - l10 * z0) / l11;
        let b1 = z1 / l11;
        let b0 = (z0 - l10 * b1) / l00;
        (b0, b1)
    };

    let cross = |be: f64, bs: f64, b0: f64| {
        let (mut ge, mut gs, mut g1) = (0.0, 0.0, 0.0);
        for r in rows {
            let res = r.outcome - (b0 + be * r.econ_self + bs * r.soc_self);
            ge += (r.econ_self - me) * res;
            gs += (r.soc_self - ms) * res;
            g1 += res;
        }
        (ge, gs, g1)
    };

    let (sey, ssy) = rows.iter().fold((0.0, 0.0), |(a, b), r| {
        let y = r.outcome - my;
        (a + (r.econ_self - me) * y, b + (r.soc_self - ms) * y)
    });
    let (mut be, mut bs) = solve(sey, ssy);
    let mut b0 = my - be * me - bs * ms;
    let (ge, gs, g1) = cross(be, bs, b0);
    let (de, ds) = solve(ge, gs);
    be += de;
    bs += ds;
    b0 += g1 / nf - de * me - ds * ms;

    let rss: f64 = rows
        .iter()
        .map(|r| {
            let res = r.outcome - (b0 + be * r.econ_self + bs * r.soc_self);
            res * res
        })
        .sum();
    let sigma2 = rss / (nf - 3.0);
    // Inverse of the centered Gram matrix.
    let det = see * sss - ses * ses;
    let (inv_ee, inv_ss, inv_es) = (sss / det, see / det, -ses / det);
    let var_int = sigma2 * (1.0 / nf + me * me * inv_ee + ms * ms * inv_ss + 2.0 * me * ms * inv_es);
    Ok(LinearFit {
        intercept: b0,
        coef_econ_self: be,
        coef_soc_self: bs,
        residual_sd: sigma2.sqrt(),
        se: [var_int.max(0.0).sqrt(), (sigma2 * inv_ee).sqrt(), (sigma2 * inv_ss).sqrt()],
        n,
    })
}

/// Largest `|sum_i x_ij * residual_i|` over the three design columns.
pub fn ols_orthogonality(fit: &LinearFit, rows: &[OlsRow]) -> f64 {
    let mut g = [0.0f64; 3];
    for r in rows {
        let res = r.outcome - fit.predict(r.econ_self, r.soc_self);
        g[0] += res;
        g[1] += r.econ_self * res;
        g[2] += r.soc_self * res;
    }
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One observation for the vote-choice logit; `bush` is the outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitRow {
    pub dist_e: f64,
    pub dist_s: f64,
    pub bush: bool,
}

/// `Pr(bush) = inv_logit(intercept + coef_dist_e * dist_e + coef_dist_s * dist_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub intercept: f64,
    pub coef_dist_e: f64,
    pub coef_dist_s: f64,
    /// Standard errors from the observed information; NaN when unknown.
    pub se: [f64; 3],
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the log-likelihood gradient at the returned coefficients.
    pub score_norm: f64,
}

impl LogitFit {
    /// A fit with known coefficients and no sampling information.
    pub fn fixed(intercept: f64, coef_dist_e: f64, coef_dist_s: f64) -> Self {
        Self {
            intercept,
            coef_dist_e,
            coef_dist_s,
            se: [f64::NAN; 3],
            n: 0,
            converged: true,
            iterations: 0,
            score_norm: 0.0,
        }
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.intercept, self.coef_dist_e, self.coef_dist_s]
    }

    pub fn linear_predictor(&self, dist_e: f64, dist_s: f64) -> f64 {
        self.intercept + self.coef_dist_e * dist_e + self.coef_dist_s * dist_s
    }
}

pub const DEFAULT_LOGIT_TOL: f64 = 1e-8;
pub const DEFAULT_LOGIT_MAX_ITER: usize = 50;
const SEPARATION_NORM: f64 = 1e4;

struct LogitState {
    loglik: f64,
    grad: [f64; 3],
    info: [[f64; 3]; 3],
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logit_state(rows: &[LogitRow], beta: &[f64; 3]) -> LogitState {
    let mut loglik = 0.0;
    let mut grad = [0.0; 3];
    let mut info = [[0.0; 3]; 3];
    for r in rows {
        let x = [1.0, r.dist_e, r.dist_s];
        let eta = beta[0] + beta[1] * r.dist_e + beta[2] * r.dist_s;
        let y = if r.bush { 1.0 } else { 0.0 };
        let p = inv_logit(eta);
        loglik += y * eta - softplus(eta);
        let w = p * (1.0 - p);
        for j in 0..3 {
            grad[j] += x[j] * (y - p);
            for k in 0..=j {
                info[j][k] += w * x[j] * x[k];
            }
        }
    }
    for j in 0..3 {
        for k in (j + 1)..3 {
            info[j][k] = info[k][j];
        }
    }
    LogitState { loglik, grad, info }
}

fn max_abs(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn chol_solve(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * z[k]).sum();
        z[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (z[i] - s) / l[(i, i)];
    }
    x
}

/// Maximum-likelihood logit by IRLS (Newton) with step-halving.
///
/// Separation is never returned as converged: coefficients whose norm
/// exceeds 1e4, a stalled line search, an iteration cap, or a solution that
/// classifies every row perfectly all yield `converged = false` with the
/// last iterate.
pub fn fit_logit_irls(rows: &[LogitRow], tol: f64, max_iter: usize) -> Result<LogitFit> {
    let n = rows.len();
    if n <= 3 {
        return Err(Error::InvalidInput(format!("logit needs more than 3 rows, got {n}")));
    }
    let bush = rows.iter().filter(|r| r.bush).count();
    if bush == 0 || bush == n {
        let only = if bush == 0 { "kerry" } else { "bush" };
        return Err(Error::DegenerateOutcome(format!("all {n} decided respondents vote {only}")));
    }

    let mut beta = [0.0f64; 3];
    let mut state = logit_state(rows, &beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        if max_abs(&state.grad) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let info = DMatrix::from_fn(3, 3, |i, j| state.info[i][j]);
        let Ok(l) = cholesky_lower(&info) else { break };
        let delta = chol_solve(&l, &state.grad);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let trial = [beta[0] + t * delta[0], beta[1] + t * delta[1], beta[2] + t * delta[2]];
            let next = logit_state(rows, &trial);
            if next.loglik >= state.loglik - 1e-12 * state.loglik.abs() {
                accepted = Some((trial, next));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, next)) = accepted else { break };
        beta = trial;
        state = next;
        if beta.iter().map(|b| b * b).sum::<f64>().sqrt() > SEPARATION_NORM {
            break;
        }
    }
    if !converged && iterations == max_iter && max_abs(&state.grad) <= tol {
        converged = true;
    }

    if converged {
        let perfectly_separated = rows.iter().all(|r| {
            let eta = beta[0] + beta[1] * r.dist_e + beta[2] * r.dist_s;
            if r.bush {
                eta > 0.0
            } else {
                eta < 0.0
            }
        });
        if perfectly_separated {
            converged = false;
        }
    }

    let info = DMatrix::from_fn(3, 3, |i, j| state.info[i][j]);
    let se = match cholesky_lower(&info) {
        Ok(l) => {
            let mut se = [0.0; 3];
            for (j, s) in se.iter_mut().enumerate() {
                let mut e = [0.0; 3];
                e[j] = 1.0;
                *s = chol_solve(&l, &e)[j].sqrt();
            }
            se
        }
        Err(_) => [f64::NAN; 3],
    };
    Ok(LogitFit {
        intercept: beta[0],
        coef_dist_e: beta[1],
        coef_dist_s: beta[2],
        se,
        n,
        converged,
        iterations,
        score_norm: max_abs(&state.grad),
    })
}

/// Gradient max-norm of the log-likelihood at `fit`'s coefficients.
pub fn logit_score_norm(fit: &LogitFit, rows: &[LogitRow]) -> f64 {
    max_abs(&logit_state(rows, &fit.coefficients()).grad)
}

pub fn predict_logit(fit: &LogitFit, dist_e: f64, dist_s: f64) -> f64 {
    inv_logit(fit.linear_predictor(dist_e, dist_s))
}

/// The twelve stage-1 fits plus any applied intercept shifts.
///
/// Shifts are held apart from the fitted intercepts so that successive
/// shifts compose exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionModel {
    fits: Vec<LinearFit>,
    /// `[candidate][dimension]` offsets added to every party's intercept.
    shifts: [[f64; 2]; 2],
}

impl PerceptionModel {
    /// `fits` indexed by [`perception_cell`].
    pub fn new(fits: Vec<LinearFit>) -> Result<Self> {
        if fits.len() != 12 {
            return Err(Error::InvalidInput(format!("perception model needs 12 fits, got {}", fits.len())));
        }
        Ok(Self { fits, shifts: [[0.0; 2]; 2] })
    }

    /// The fit as estimated, without shifts.
    pub fn fit(&self, c: Candidate, d: Dimension, p: Party) -> &LinearFit {
        &self.fits[perception_cell(c, d, p)]
    }

    pub fn shift(&self, c: Candidate, d: Dimension) -> f64 {
        self.shifts[c as usize][d as usize]
    }

    pub(crate) fn add_shift(&mut self, c: Candidate, d: Dimension, delta: f64) {
        self.shifts[c as usize][d as usize] += delta;
    }

    /// Fitted intercept plus the applied shift.
    pub fn intercept(&self, c: Candidate, d: Dimension, p: Party) -> f64 {
        self.fit(c, d, p).intercept + self.shift(c, d)
    }

    /// Mean perceived position for a respondent's self-placements.
    pub fn mean(&self, c: Candidate, d: Dimension, p: Party, econ_self: f64, soc_self: f64) -> f64 {
        let f = self.fit(c, d, p);
        self.intercept(c, d, p) + f.coef_econ_self * econ_self + f.coef_soc_self * soc_self
    }
}

/// How the stage-2 linear predictor becomes a vote probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ChoiceRule {
    #[default]
    Logit,
    /// Probability 1 when the linear predictor is positive, 0 when negative,
    /// 1/2 at zero: the limit of infinitely scaled coefficients.
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceModel {
    pub fits: [LogitFit; 3],
    pub rule: ChoiceRule,
    pub provenance: String,
}

pub const EQ31_PRESET: &str = "aoas2008-eq31";

impl ChoiceModel {
    pub fn fit(&self, p: Party) -> &LogitFit {
        &self.fits[p.index()]
    }

    pub fn probability(&self, p: Party, dist_e: f64, dist_s: f64) -> f64 {
        let fit = self.fit(p);
        match self.rule {
            ChoiceRule::Logit => predict_logit(fit, dist_e, dist_s),
            ChoiceRule::Threshold => {
                let eta = fit.linear_predictor(dist_e, dist_s);
                if eta > 0.0 {
                    1.0
                } else if eta < 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
        }
    }

    /// The published per-party vote-choice coefficients, printed to two
    /// decimals and without standard errors.
    pub fn eq31() -> Self {
        Self {
            fits: EQ31_TRUTH.map(|t| LogitFit::fixed(t.intercept, t.dist_e, t.dist_s)),
            rule: ChoiceRule::Logit,
            provenance: format!("{EQ31_PRESET}: published coefficients, no standard errors, not refit"),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            EQ31_PRESET | "eq31" => Ok(Self::eq31()),
            other => Err(Error::InvalidInput(format!("unknown choice-model preset `{other}`"))),
        }
    }

    pub fn all_converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

/// Stage-1 rows: party members who placed candidate `c` on dimension `d`.
pub fn ols_rows(ds: &SurveyDataset, c: Candidate, d: Dimension, p: Party) -> Vec<OlsRow> {
    ds.respondents
        .iter()
        .filter(|r| r.party == p)
        .filter_map(|r| {
            r.placement(c, d).map(|outcome| OlsRow { econ_self: r.econ_self, soc_self: r.soc_self, outcome })
        })
        .collect()
}

/// Stage-2 rows: decided respondents with complete placements.
pub fn logit_rows(ds: &SurveyDataset, p: Party) -> Vec<LogitRow> {
    ds.respondents
        .iter()
        .filter(|r| r.party == p && r.stage2_eligible())
        .map(|r| {
            let (dist_e, dist_s) = r.distances().expect("eligible rows are complete");
            LogitRow { dist_e, dist_s, bush: r.vote == Vote::Bush }
        })
        .collect()
}

enum Cell {
    Perception(Candidate, Dimension, Party),
    Choice(Party),
}

enum Fitted {
    Linear(LinearFit),
    Logit(LogitFit),
}

/// Fits all twelve stage-1 regressions and three stage-2 logits.
///
/// Fails as a whole if any cell fails; every failing cell is listed.
pub fn fit_all(ds: &SurveyDataset) -> Result<(PerceptionModel, ChoiceModel)> {
    let cells: Vec<Cell> = perception_cells()
        .map(|(c, d, p)| Cell::Perception(c, d, p))
        .chain(Party::ALL.into_iter().map(Cell::Choice))
        .collect();
    let counts = ds.party_counts();
    let results: Vec<(String, Result<Fitted>)> = cells
        .par_iter()
        .map(|cell| match *cell {
            Cell::Perception(c, d, p) => {
                let label = format!("perception {c} {d} {p}");
                if counts[p.index()] == 0 {
                    return (label, Err(Error::InvalidInput(format!("no respondents in party group {p}"))));
                }
                (label, fit_ols(&ols_rows(ds, c, d, p)).map(Fitted::Linear))
            }
            Cell::Choice(p) => {
                let label = format!("choice {p}");
                if counts[p.index()] == 0 {
                    return (label, Err(Error::InvalidInput(format!("no respondents in party group {p}"))));
                }
                let fit = fit_logit_irls(&logit_rows(ds, p), DEFAULT_LOGIT_TOL, DEFAULT_LOGIT_MAX_ITER)
                    .and_then(|f| {
                        if f.converged {
                            Ok(f)
                        } else {
                            Err(Error::NotConverged(format!(
                                "after {} iterations (score {:.3e}); possible separation",
                                f.iterations, f.score_norm
                            )))
                        }
                    });
                (label, fit.map(Fitted::Logit))
            }
        })
        .collect();

    let mut failures = Vec::new();
    let mut linear = Vec::with_capacity(12);
    let mut logits = Vec::with_capacity(3);
    for (label, r) in results {
        match r {
            Ok(Fitted::Linear(f)) => linear.push(f),
            Ok(Fitted::Logit(f)) => logits.push(f),
            Err(e) => failures.push(CellFailure { cell: label, error: Box::new(e) }),
        }
    }
    if !failures.is_empty() {
        return Err(Error::FitFailures(failures));
    }
    let fits: [LogitFit; 3] = logits.try_into().expect("three choice cells");
    Ok((
        PerceptionModel::new(linear)?,
        ChoiceModel { fits, rule: ChoiceRule::Logit, provenance: format!("fit to {}", ds.provenance) },
    ))
}

fn fmt3(v: [f64; 3]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Serializes both models, one line per fit.
pub fn write_models(pm: &PerceptionModel, cm: &ChoiceModel) -> String {
    let mut s = String::from("# spatialvote fitted models v1\n");
    for (c, d, p) in perception_cells() {
        let f = pm.fit(c, d, p);
        let _ = writeln!(
            s,
            "perception {c} {d} {p} coef={} se={} residual_sd={} n={} converged=1",
            fmt3(f.coefficients()),
            fmt3(f.se),
            f.residual_sd,
            f.n
        );
    }
    for c in Candidate::ALL {
        for d in Dimension::ALL {
            let _ = writeln!(s, "shift {c} {d} delta={}", pm.shift(c, d));
        }
    }
    for p in Party::ALL {
        let f = cm.fit(p);
        let _ = writeln!(
            s,
            "choice {p} coef={} se={} n={} converged={} iterations={} score={}",
            fmt3(f.coefficients()),
            fmt3(f.se),
            f.n,
            u8::from(f.converged),
            f.iterations,
            f.score_norm
        );
    }
    let rule = match cm.rule {
        ChoiceRule::Logit => "logit",
        ChoiceRule::Threshold => "threshold",
    };
    let _ = writeln!(s, "rule {rule}");
    let _ = writeln!(s, "provenance {}", cm.provenance.replace('\n', " "));
    s
}

fn parse_err(lineno: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("model line {lineno}: {msg}"))
}

/// Parses the output of [`write_models`].
pub fn read_models(text: &str) -> Result<(PerceptionModel, ChoiceModel)> {
    let mut linear: Vec<Option<LinearFit>> = vec![None; 12];
    let mut logits: [Option<LogitFit>; 3] = [None, None, None];
    let mut shifts = [[0.0; 2]; 2];
    let mut rule = ChoiceRule::Logit;
    let mut provenance = String::new();

    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kind = tokens.next().unwrap_or("");
        if kind == "provenance" {
            provenance = line["provenance".len()..].trim().to_string();
            continue;
        }
        let positional: Vec<&str> = tokens.clone().take_while(|t| !t.contains('=')).collect();
        let kv: std::collections::HashMap<&str, &str> =
            tokens.filter_map(|t| t.split_once('=')).collect();
        let get = |key: &str| kv.get(key).copied().ok_or_else(|| parse_err(lineno, format!("missing `{key}`")));
        let num = |key: &str| -> Result<f64> {
            let v = get(key)?;
            v.parse().map_err(|_| parse_err(lineno, format!("bad number `{v}` for `{key}`")))
        };
        let count = |key: &str| -> Result<usize> {
            let v = get(key)?;
            v.parse().map_err(|_| parse_err(lineno, format!("bad count `{v}` for `{key}`")))
        };
        let triple = |key: &str| -> Result<[f64; 3]> {
            let v = get(key)?;
            let parts: Vec<f64> = v
                .split(',')
                .map(|x| x.parse().map_err(|_| parse_err(lineno, format!("bad number `{x}`"))))
                .collect::<Result<_>>()?;
            parts.try_into().map_err(|_| parse_err(lineno, format!("`{key}` needs 3 values")))
        };
        match (kind, positional.as_slice()) {
            ("perception", [c, d, p]) => {
                let coef = triple("coef")?;
                linear[perception_cell(c.parse()?, d.parse()?, p.parse()?)] = Some(LinearFit {
                    intercept: coef[0],
                    coef_econ_self: coef[1],
                    coef_soc_self: coef[2],
                    residual_sd: num("residual_sd")?,
                    se: triple("se")?,
                    n: count("n")?,
                });
            }
            ("shift", [c, d]) => {
                shifts[c.parse::<Candidate>()? as usize][d.parse::<Dimension>()? as usize] = num("delta")?;
            }
            ("choice", [p]) => {
                let p: Party = p.parse()?;
                let coef = triple("coef")?;
                logits[p.index()] = Some(LogitFit {
                    intercept: coef[0],
                    coef_dist_e: coef[1],
                    coef_dist_s: coef[2],
                    se: triple("se")?,
                    n: count("n")?,
                    converged: get("converged")? == "1",
                    iterations: count("iterations")?,
                    score_norm: num("score")?,
                });
            }
            ("rule", ["logit"]) => rule = ChoiceRule::Logit,
            ("rule", ["threshold"]) => rule = ChoiceRule::Threshold,
            _ => return Err(parse_err(lineno, format!("unrecognized record `{line}`"))),
        }
    }

    let mut fits = Vec::with_capacity(12);
    for ((c, d, p), f) in perception_cells().zip(linear) {
        fits.push(f.ok_or_else(|| Error::Parse(format!("model file lacks perception {c} {d} {p}")))?);
    }
    let mut pm = PerceptionModel::new(fits)?;
    pm.shifts = shifts;
    let [d, i, r] = logits;
    let missing = |p: Party| Error::Parse(format!("model file lacks choice {p}"));
    let fits = [
        d.ok_or_else(|| missing(Party::Democrat))?,
        i.ok_or_else(|| missing(Party::Independent))?,
        r.ok_or_else(|| missing(Party::Republican))?,
    ];
    Ok((pm, ChoiceModel { fits, rule, provenance }))
}
