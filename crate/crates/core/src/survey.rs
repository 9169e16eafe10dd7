//! Survey respondents, issue scales, distance covariates, CSV ingestion and a
//! synthetic survey generator with known ground truth.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::inv_logit;
use crate::rng::{domain, Substream};

/// Exact header of the survey CSV schema.
pub const SURVEY_COLUMNS: [&str; 8] =
    ["party_id", "econ_self", "soc_self", "econ_bush", "econ_kerry", "soc_bush", "soc_kerry", "vote"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Independent,
    Republican,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::Democrat, Party::Independent, Party::Republican];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Party::Democrat => "D",
            Party::Independent => "I",
            Party::Republican => "R",
        }
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" => Ok(Party::Democrat),
            "I" => Ok(Party::Independent),
            "R" => Ok(Party::Republican),
            other => Err(Error::Parse(format!("unknown party_id `{other}`"))),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    Bush,
    Kerry,
    /// Undecided or other.
    None,
}

impl FromStr for Vote {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bush" => Ok(Vote::Bush),
            "kerry" => Ok(Vote::Kerry),
            "none" => Ok(Vote::None),
            other => Err(Error::Parse(format!("unknown vote `{other}`"))),
        }
    }
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vote::Bush => "bush",
            Vote::Kerry => "kerry",
            Vote::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Candidate {
    Bush,
    Kerry,
}

impl Candidate {
    pub const ALL: [Candidate; 2] = [Candidate::Bush, Candidate::Kerry];

    pub fn name(self) -> &'static str {
        match self {
            Candidate::Bush => "bush",
            Candidate::Kerry => "kerry",
        }
    }
}

impl FromStr for Candidate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bush" => Ok(Candidate::Bush),
            "kerry" => Ok(Candidate::Kerry),
            other => Err(Error::Parse(format!("unknown candidate `{other}`"))),
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Issue dimension of the two survey scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    Econ,
    Soc,
}

impl Dimension {
    pub const ALL: [Dimension; 2] = [Dimension::Econ, Dimension::Soc];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Econ => "econ",
            Dimension::Soc => "soc",
        }
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "econ" | "economic" => Ok(Dimension::Econ),
            "soc" | "social" => Ok(Dimension::Soc),
            other => Err(Error::Parse(format!("unknown dimension `{other}`"))),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat index of a (candidate, dimension, party) stage-1 cell, in `0..12`.
pub fn perception_cell(c: Candidate, d: Dimension, p: Party) -> usize {
    (c as usize * 2 + d as usize) * 3 + p as usize
}

/// All twelve stage-1 cells in index order.
pub fn perception_cells() -> impl Iterator<Item = (Candidate, Dimension, Party)> {
    Candidate::ALL
        .into_iter()
        .flat_map(|c| Dimension::ALL.into_iter().flat_map(move |d| Party::ALL.into_iter().map(move |p| (c, d, p))))
}

/// A summed attitude scale, symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueScale {
    pub name: String,
    pub n_items: usize,
    pub lo: i32,
    pub hi: i32,
}

impl IssueScale {
    pub fn economic() -> Self {
        Self { name: "economic".into(), n_items: 3, lo: -9, hi: 9 }
    }

    pub fn social() -> Self {
        Self { name: "social".into(), n_items: 3, lo: -8, hi: 8 }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo as f64 && x <= self.hi as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub party: Party,
    pub econ_self: f64,
    pub soc_self: f64,
    pub econ_bush: Option<f64>,
    pub econ_kerry: Option<f64>,
    pub soc_bush: Option<f64>,
    pub soc_kerry: Option<f64>,
    pub vote: Vote,
}

impl Respondent {
    pub fn self_placement(&self, d: Dimension) -> f64 {
        match d {
            Dimension::Econ => self.econ_self,
            Dimension::Soc => self.soc_self,
        }
    }

    pub fn placement(&self, c: Candidate, d: Dimension) -> Option<f64> {
        match (c, d) {
            (Candidate::Bush, Dimension::Econ) => self.econ_bush,
            (Candidate::Kerry, Dimension::Econ) => self.econ_kerry,
            (Candidate::Bush, Dimension::Soc) => self.soc_bush,
            (Candidate::Kerry, Dimension::Soc) => self.soc_kerry,
        }
    }

    /// `(dist_e, dist_s)`, or `None` when a candidate placement is missing.
    pub fn distances(&self) -> Option<(f64, f64)> {
        Some((
            relative_sq_distance(self.econ_self, self.econ_bush?, self.econ_kerry?),
            relative_sq_distance(self.soc_self, self.soc_bush?, self.soc_kerry?),
        ))
    }

    /// Usable for the vote-choice fit: decided and fully placed.
    pub fn stage2_eligible(&self) -> bool {
        self.vote != Vote::None && self.distances().is_some()
    }
}

/// Squared distance to Bush minus squared distance to Kerry.
pub fn relative_sq_distance(self_pos: f64, bush: f64, kerry: f64) -> f64 {
    (bush - self_pos) * (bush - self_pos) - (kerry - self_pos) * (kerry - self_pos)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDataset {
    pub respondents: Vec<Respondent>,
    pub scales: (IssueScale, IssueScale),
    pub provenance: String,
}

impl SurveyDataset {
    pub fn new(respondents: Vec<Respondent>, provenance: impl Into<String>) -> Self {
        Self { respondents, scales: (IssueScale::economic(), IssueScale::social()), provenance: provenance.into() }
    }

    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }

    pub fn party_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for r in &self.respondents {
            counts[r.party.index()] += 1;
        }
        counts
    }

    /// Writes the schema CSV; missing placements are empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# provenance={}", self.provenance.replace(['\n', '\r'], " "))?;
        writeln!(out, "{}", SURVEY_COLUMNS.join(","))?;
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        for r in &self.respondents {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.party,
                r.econ_self,
                r.soc_self,
                opt(r.econ_bush),
                opt(r.econ_kerry),
                opt(r.soc_bush),
                opt(r.soc_kerry),
                r.vote
            )?;
        }
        Ok(())
    }
}

/// A rejected row or flagged value, by 1-based data row number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowIssue {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestionReport {
    /// Rows dropped from the dataset.
    pub rejected: Vec<RowIssue>,
    /// Values treated as missing; the row was kept.
    pub flagged: Vec<RowIssue>,
}

impl IngestionReport {
    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty() && self.flagged.is_empty()
    }
}

/// Parses a survey CSV. Rows with bad or out-of-bounds self-placements, or
/// unparseable fields, are rejected and listed in the report.
///
/// A leading `# provenance=...` comment, as written by
/// [`SurveyDataset::write_csv`], overrides `provenance`.
pub fn load_survey<R: Read>(mut source: R, provenance: &str) -> Result<(SurveyDataset, IngestionReport)> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let provenance = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("provenance=").map(str::to_string))
        .unwrap_or_else(|| provenance.to_string());

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<String> =
        SURVEY_COLUMNS.iter().filter(|c| !index.contains_key(*c)).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let col = |name: &str| index[name];

    let scales = (IssueScale::economic(), IssueScale::social());
    let mut respondents = Vec::new();
    let mut report = IngestionReport::default();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.rejected.push(RowIssue { row, reason: e.to_string() });
                continue;
            }
        };
        let field = |name: &str| record.get(col(name)).unwrap_or("");
        let parsed = (|| -> std::result::Result<Respondent, String> {
            let party: Party = field("party_id").parse().map_err(|e: Error| e.to_string())?;
            let vote: Vote = field("vote").parse().map_err(|e: Error| e.to_string())?;
            let required = |name: &str, scale: &IssueScale| -> std::result::Result<f64, String> {
                let raw = field(name);
                let x: f64 = raw.parse().map_err(|_| format!("{name}: cannot parse `{raw}`"))?;
                if !x.is_finite() || !scale.contains(x) {
                    return Err(format!("{name}: {raw} outside [{}, {}]", scale.lo, scale.hi));
                }
                Ok(x)
            };
            let optional = |name: &str| -> std::result::Result<Option<f64>, String> {
                let raw = field(name);
                if raw.is_empty() {
                    return Ok(None);
                }
                match raw.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Some(x)),
                    _ => Err(format!("{name}: cannot parse `{raw}`")),
                }
            };
            Ok(Respondent {
                party,
                econ_self: required("econ_self", &scales.0)?,
                soc_self: required("soc_self", &scales.1)?,
                econ_bush: optional("econ_bush")?,
                econ_kerry: optional("econ_kerry")?,
                soc_bush: optional("soc_bush")?,
                soc_kerry: optional("soc_kerry")?,
                vote,
            })
        })();
        match parsed {
            Ok(r) => respondents.push(r),
            Err(reason) => report.rejected.push(RowIssue { row, reason }),
        }
    }
    Ok((SurveyDataset { respondents, scales, provenance }, report))
}

/// Item-level answers; each placement is the sum of three items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResponses {
    pub party: Party,
    pub vote: Vote,
    pub econ_self: [Option<f64>; 3],
    pub soc_self: [Option<f64>; 3],
    pub econ_bush: [Option<f64>; 3],
    pub econ_kerry: [Option<f64>; 3],
    pub soc_bush: [Option<f64>; 3],
    pub soc_kerry: [Option<f64>; 3],
}

/// Sums item responses into scale placements.
///
/// A missing item (or a sum outside the scale) drops that placement and is
/// flagged; respondents without both self-placements are dropped entirely.
pub fn build_scales(items: &[ItemResponses]) -> (Vec<Respondent>, IngestionReport) {
    let (econ, soc) = (IssueScale::economic(), IssueScale::social());
    let mut report = IngestionReport::default();
    let mut out = Vec::new();
    for (k, it) in items.iter().enumerate() {
        let row = k + 1;
        let mut sum = |name: &str, parts: &[Option<f64>; 3], scale: &IssueScale| -> Option<f64> {
            let Some(total) = parts.iter().try_fold(0.0, |acc, x| x.map(|v| acc + v)) else {
                report.flagged.push(RowIssue { row, reason: format!("{name}: missing item") });
                return None;
            };
            if !scale.contains(total) {
                report.flagged.push(RowIssue { row, reason: format!("{name}: sum {total} outside scale") });
                return None;
            }
            Some(total)
        };
        let econ_self = sum("econ_self", &it.econ_self, &econ);
        let soc_self = sum("soc_self", &it.soc_self, &soc);
        let r = (
            sum("econ_bush", &it.econ_bush, &econ),
            sum("econ_kerry", &it.econ_kerry, &econ),
            sum("soc_bush", &it.soc_bush, &soc),
            sum("soc_kerry", &it.soc_kerry, &soc),
        );
        match (econ_self, soc_self) {
            (Some(econ_self), Some(soc_self)) => out.push(Respondent {
                party: it.party,
                econ_self,
                soc_self,
                econ_bush: r.0,
                econ_kerry: r.1,
                soc_bush: r.2,
                soc_kerry: r.3,
                vote: it.vote,
            }),
            _ => report.rejected.push(RowIssue { row, reason: "missing self-placement".into() }),
        }
    }
    (out, report)
}

/// Ground truth for one perceived-position regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTruth {
    pub intercept: f64,
    pub econ_self: f64,
    pub soc_self: f64,
    pub residual_sd: f64,
}

impl LinearTruth {
    pub const fn new(intercept: f64, econ_self: f64, soc_self: f64, residual_sd: f64) -> Self {
        Self { intercept, econ_self, soc_self, residual_sd }
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.intercept, self.econ_self, self.soc_self]
    }
}

/// Ground truth for one vote-choice logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitTruth {
    pub intercept: f64,
    pub dist_e: f64,
    pub dist_s: f64,
}

impl LogitTruth {
    pub const fn new(intercept: f64, dist_e: f64, dist_s: f64) -> Self {
        Self { intercept, dist_e, dist_s }
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.intercept, self.dist_e, self.dist_s]
    }
}

/// Reference vote-choice coefficients (the `aoas2008-eq31` preset) for
/// Democrats, independents and Republicans.
pub const EQ31_TRUTH: [LogitTruth; 3] = [
    LogitTruth::new(-1.32, -0.05, -0.04),
    LogitTruth::new(0.38, -0.05, 0.02),
    LogitTruth::new(2.30, -0.03, -0.02),
];

/// Synthetic survey generator configuration.
///
/// Self-placements are a rounded, clamped bivariate normal per party;
/// perceived candidate placements follow the stage-1 linear truth with
/// normal residuals (not clamped); decided votes follow the stage-2 logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Respondents per party, in D, I, R order.
    pub group_sizes: [usize; 3],
    /// Mean `(econ, soc)` self-placement per party.
    pub self_mean: [[f64; 2]; 3],
    pub self_sd: [f64; 2],
    pub self_rho: f64,
    /// Indexed by [`perception_cell`].
    pub stage1: [LinearTruth; 12],
    pub stage2: [LogitTruth; 3],
    /// Probability that a respondent reports no vote intention.
    pub undecided_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        use Candidate::*;
        use Dimension::*;
        use Party::*;
        let mut stage1 = [LinearTruth::new(0.0, 0.0, 0.0, 1.0); 12];
        let table = [
            ((Bush, Econ, Democrat), LinearTruth::new(5.0, -0.35, -0.10, 3.0)),
            ((Bush, Econ, Independent), LinearTruth::new(4.0, 0.05, -0.05, 3.0)),
            ((Bush, Econ, Republican), LinearTruth::new(3.5, 0.40, 0.00, 2.5)),
            ((Kerry, Econ, Democrat), LinearTruth::new(-2.5, 0.40, 0.10, 3.0)),
            ((Kerry, Econ, Independent), LinearTruth::new(-1.5, 0.00, 0.05, 3.0)),
            ((Kerry, Econ, Republican), LinearTruth::new(-3.5, -0.30, 0.00, 3.0)),
            ((Bush, Soc, Democrat), LinearTruth::new(2.5, -0.25, 0.00, 3.0)),
            ((Bush, Soc, Independent), LinearTruth::new(2.5, 0.00, 0.10, 3.0)),
            ((Bush, Soc, Republican), LinearTruth::new(2.0, 0.00, 0.45, 2.5)),
            ((Kerry, Soc, Democrat), LinearTruth::new(-1.0, 0.00, 0.45, 3.0)),
            ((Kerry, Soc, Independent), LinearTruth::new(-1.0, 0.00, 0.10, 3.0)),
            ((Kerry, Soc, Republican), LinearTruth::new(-2.5, -0.30, 0.00, 3.0)),
        ];
        for ((c, d, p), t) in table {
            stage1[perception_cell(c, d, p)] = t;
        }
        Self {
            group_sizes: [1000, 700, 900],
            self_mean: [[-1.5, -1.5], [0.0, 0.0], [2.0, 2.0]],
            self_sd: [3.5, 3.5],
            self_rho: 0.5,
            stage1,
            stage2: EQ31_TRUTH,
            undecided_rate: 0.05,
        }
    }
}

fn parse_list(key: &str, value: &str, n: usize) -> Result<Vec<f64>> {
    let out: Vec<f64> = value
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{key}: bad number `{}`", v.trim()))))
        .collect::<Result<_>>()?;
    if out.len() != n {
        return Err(Error::Parse(format!("{key}: expected {n} comma-separated values, got {}", out.len())));
    }
    Ok(out)
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl GeneratorConfig {
    /// Flat `key = value` format; see [`GeneratorConfig::KEY_HELP`]. Keys not
    /// present keep their default values.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["groups"] => {
                let v = parse_list(key, value, 3)?;
                for (slot, x) in self.group_sizes.iter_mut().zip(v) {
                    if x < 0.0 || x.fract() != 0.0 {
                        return Err(Error::Parse(format!("groups: `{x}` is not a count")));
                    }
                    *slot = x as usize;
                }
            }
            ["self_rho"] => self.self_rho = parse_list(key, value, 1)?[0],
            ["self_sd"] => self.self_sd.copy_from_slice(&parse_list(key, value, 2)?),
            ["undecided_rate"] => self.undecided_rate = parse_list(key, value, 1)?[0],
            ["self_mean", p] => {
                let p: Party = p.parse()?;
                self.self_mean[p.index()].copy_from_slice(&parse_list(key, value, 2)?);
            }
            ["stage1", c, d, p] => {
                let v = parse_list(key, value, 4)?;
                self.stage1[perception_cell(c.parse()?, d.parse()?, p.parse()?)] =
                    LinearTruth::new(v[0], v[1], v[2], v[3]);
            }
            ["stage2", p] => {
                let p: Party = p.parse()?;
                let v = parse_list(key, value, 3)?;
                self.stage2[p.index()] = LogitTruth::new(v[0], v[1], v[2]);
            }
            _ => return Err(Error::Parse(format!("unknown generator key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical serialization accepted by [`GeneratorConfig::parse_kv`].
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let g = self.group_sizes.map(|x| x as f64);
        s += &format!("groups = {}\n", join(&g));
        s += &format!("self_rho = {}\n", self.self_rho);
        s += &format!("self_sd = {}\n", join(&self.self_sd));
        for p in Party::ALL {
            s += &format!("self_mean.{p} = {}\n", join(&self.self_mean[p.index()]));
        }
        for (c, d, p) in perception_cells() {
            let t = self.stage1[perception_cell(c, d, p)];
            s += &format!(
                "stage1.{c}.{d}.{p} = {}\n",
                join(&[t.intercept, t.econ_self, t.soc_self, t.residual_sd])
            );
        }
        for p in Party::ALL {
            s += &format!("stage2.{p} = {}\n", join(&self.stage2[p.index()].coefficients()));
        }
        s += &format!("undecided_rate = {}\n", self.undecided_rate);
        s
    }

    pub const KEY_HELP: &'static str = "\
Generator config: one `key = value` per line, `#` starts a comment.
  groups = nD,nI,nR                     respondents per party (each >= 30)
  self_rho = r                          econ/soc self-placement correlation
  self_sd = sd_econ,sd_soc              self-placement sds (> 0)
  self_mean.{D,I,R} = econ,soc          party mean self-placement
  stage1.{bush,kerry}.{econ,soc}.{D,I,R} = intercept,b_econ_self,b_soc_self,residual_sd
  stage2.{D,I,R} = intercept,b_dist_e,b_dist_s
  undecided_rate = p                    share reporting no vote, in [0, 1)
Unlisted keys keep their defaults (stage2 defaults to the reference
vote-choice coefficients).";

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.group_sizes.iter().find(|n| **n < 30) {
            return Err(Error::InvalidInput(format!("group size {n} is below the minimum of 30")));
        }
        if !(self.self_rho > -1.0 && self.self_rho < 1.0) {
            return Err(Error::InvalidInput(format!("self_rho {} must lie in (-1, 1)", self.self_rho)));
        }
        if self.self_sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput("self_sd entries must be positive".into()));
        }
        if self.stage1.iter().any(|t| !(t.residual_sd.is_finite() && t.residual_sd >= 0.0)) {
            return Err(Error::InvalidInput("stage-1 residual sds must be non-negative".into()));
        }
        let finite = self.self_mean.iter().flatten().all(|x| x.is_finite())
            && self.stage1.iter().all(|t| t.coefficients().iter().all(|x| x.is_finite()))
            && self.stage2.iter().all(|t| t.coefficients().iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidInput("generator coefficients must be finite".into()));
        }
        if !(self.undecided_rate >= 0.0 && self.undecided_rate < 1.0) {
            return Err(Error::InvalidInput(format!("undecided_rate {} must lie in [0, 1)", self.undecided_rate)));
        }
        Ok(())
    }
}

fn discretize(x: f64, scale: &IssueScale) -> f64 {
    x.round().clamp(scale.lo as f64, scale.hi as f64)
}

/// Generates a survey from `cfg`. Respondent `i` (parties in D, I, R order)
/// depends only on `(seed, i)`.
pub fn synth_survey(cfg: &GeneratorConfig, seed: u64) -> Result<SurveyDataset> {
    cfg.validate()?;
    let (econ, soc) = (IssueScale::economic(), IssueScale::social());
    let parties: Vec<Party> = Party::ALL
        .into_iter()
        .flat_map(|p| std::iter::repeat_n(p, cfg.group_sizes[p.index()]))
        .collect();
    let root = Substream::root(seed, domain::SURVEY);
    let rho_c = (1.0 - cfg.self_rho * cfg.self_rho).sqrt();
    let respondents = parties
        .par_iter()
        .enumerate()
        .map(|(i, &party)| {
            let mut s = root.derive(i as u64);
            let (z1, z2) = (s.next_normal(), s.next_normal());
            let mean = cfg.self_mean[party.index()];
            let econ_self = discretize(mean[0] + cfg.self_sd[0] * z1, &econ);
            let soc_self = discretize(mean[1] + cfg.self_sd[1] * (cfg.self_rho * z1 + rho_c * z2), &soc);
            let mut perceive = |c: Candidate, d: Dimension| {
                let t = cfg.stage1[perception_cell(c, d, party)];
                t.intercept + t.econ_self * econ_self + t.soc_self * soc_self + t.residual_sd * s.next_normal()
            };
            let econ_bush = perceive(Candidate::Bush, Dimension::Econ);
            let econ_kerry = perceive(Candidate::Kerry, Dimension::Econ);
            let soc_bush = perceive(Candidate::Bush, Dimension::Soc);
            let soc_kerry = perceive(Candidate::Kerry, Dimension::Soc);
            let (u_decided, u_vote) = (s.next_open01(), s.next_open01());
            let vote = if u_decided < cfg.undecided_rate {
                Vote::None
            } else {
                let t = cfg.stage2[party.index()];
                let dist_e = relative_sq_distance(econ_self, econ_bush, econ_kerry);
                let dist_s = relative_sq_distance(soc_self, soc_bush, soc_kerry);
                if u_vote < inv_logit(t.intercept + t.dist_e * dist_e + t.dist_s * dist_s) {
                    Vote::Bush
                } else {
                    Vote::Kerry
                }
            };
            Respondent {
                party,
                econ_self,
                soc_self,
                econ_bush: Some(econ_bush),
                econ_kerry: Some(econ_kerry),
                soc_bush: Some(soc_bush),
                soc_kerry: Some(soc_kerry),
                vote,
            }
        })
        .collect();
    Ok(SurveyDataset::new(respondents, format!("synth seed={seed} groups={:?}", cfg.group_sizes)))
}
