use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;
use spatialvote::counterfactual::{ShiftGrid, SweepPoint};
use spatialvote::inference::{read_models, write_models};
use spatialvote::presets::{spatial_preset, SpatialPreset};
use spatialvote::spatial::{argmax, evaluate, write_curve_csv};
use spatialvote::survey::IngestionReport;
use spatialvote::{
    apply_shift, fit_all, load_survey, optimize_position, sample_electorate, share_curve, share_surface,
    simulate_election, sweep_1d, sweep_2d, synth_survey, Candidate, ChoiceModel, CorrelationSpec, Dimension,
    Electorate, GeneratorConfig, IdealPoint, Metric, NoiseConfig, Party, PositionGrid, SearchSpec, ShiftSpec,
    SweepResult, Valence,
};

use crate::run::{Outputs, RunConfig};
use crate::{
    CounterfactualArgs, ElectorateArgs, ExportElectorateArgs, FitArgs, GridArg, OptimizeArgs, SpatialArgs, SynthArgs,
    TheoryCurveArgs,
};

const DEFAULT_VOTERS: usize = 10_000;

fn preset(name: Option<&str>) -> Result<Option<SpatialPreset>> {
    name.map(spatial_preset).transpose().map_err(Into::into)
}

fn resolve_spec(
    a: &ElectorateArgs,
    p: Option<&SpatialPreset>,
    dims_hint: Option<usize>,
    cfg: &mut RunConfig,
) -> Result<(CorrelationSpec, usize)> {
    let dim = a
        .dims
        .or(p.map(|p| p.correlation.dim))
        .or(dims_hint)
        .ok_or_else(|| anyhow!("--dims is required without --preset"))?;
    let rho = a.rho.or(p.map(|p| p.correlation.rho)).unwrap_or(0.0);
    let n = a.voters.or(p.map(|p| p.n_voters)).unwrap_or(DEFAULT_VOTERS);
    let spec = CorrelationSpec::new(dim, rho)?;
    cfg.set("dims", dim);
    cfg.set("rho", rho);
    cfg.set("voters", n);
    Ok((spec, n))
}

struct Spatial {
    electorate: Electorate,
    r: IdealPoint,
    d: IdealPoint,
    metric: Metric,
    valence: Valence,
    noise: NoiseConfig,
    preset: Option<SpatialPreset>,
}

fn resolve_spatial(a: &SpatialArgs, seed: u64, cfg: &mut RunConfig) -> Result<Spatial> {
    let p = preset(a.electorate.preset.as_deref())?;
    let r = match (&a.r_pos, &p) {
        (Some(c), _) => IdealPoint::new(c.0.clone())?,
        (None, Some(p)) => p.r_pos.clone(),
        (None, None) => bail!("--r-pos is required without --preset"),
    };
    let electorate = match &a.electorate_file {
        Some(path) => {
            let e = Electorate::read_csv(std::io::BufReader::new(
                fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ))?;
            if a.electorate.dims.is_some_and(|d| d != e.dim()) {
                bail!("--dims {} disagrees with the {}-dimensional electorate file", a.electorate.dims.unwrap(), e.dim());
            }
            cfg.set("electorate-file", path.display());
            e
        }
        None => {
            let (spec, n) = resolve_spec(&a.electorate, p.as_ref(), Some(r.dim()), cfg)?;
            sample_electorate(&spec, n, seed)?
        }
    };
    let dim = electorate.dim();
    let d = match (&a.d_pos, &p) {
        (Some(c), _) => IdealPoint::new(c.0.clone())?,
        (None, Some(p)) => p.d_template.clone(),
        (None, None) => IdealPoint::new(vec![0.0; dim])?,
    };
    if r.dim() != dim || d.dim() != dim {
        bail!("positions must have {dim} coordinates (r-pos has {}, d-pos has {})", r.dim(), d.dim());
    }
    let metric = match &a.weights {
        Some(w) => Metric::new(a.metric, w.0.clone())?,
        None => Metric::unweighted(a.metric, dim),
    };
    let valence = Valence::new(a.valence)?;
    let noise = match &a.sigma {
        Some(sigma) => {
            let draws = a.draws.unwrap_or(20);
            cfg.set("sigma", sigma);
            cfg.set("draws", draws);
            NoiseConfig::Perception { sigma: sigma.0.clone(), draws, seed }
        }
        None => NoiseConfig::None,
    };
    cfg.set("r-pos", crate::Coords(r.coords().to_vec()));
    cfg.set("d-pos", crate::Coords(d.coords().to_vec()));
    cfg.set("metric", a.metric);
    if let Some(w) = &a.weights {
        cfg.set("weights", w);
    }
    cfg.set("valence", a.valence);
    Ok(Spatial { electorate, r, d, metric, valence, noise, preset: p })
}

fn position_grid(axis: usize, g: GridArg) -> Result<PositionGrid> {
    Ok(PositionGrid::new(axis, g.lo, g.hi, g.step)?)
}

fn csv_bytes(header: &str, body: impl FnOnce(&mut Vec<u8>) -> spatialvote::Result<()>) -> Result<Vec<u8>> {
    let mut buf = header.as_bytes().to_vec();
    body(&mut buf)?;
    Ok(buf)
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn theory_curve(a: TheoryCurveArgs, seed: u64) -> Result<()> {
    let mut cfg = RunConfig::new("theory-curve");
    cfg.set("seed", seed);
    let s = resolve_spatial(&a.spatial, seed, &mut cfg)?;
    let axis = a.axis.or(s.preset.as_ref().map(|p| p.grid.axis)).unwrap_or(0);
    let grid = match (a.grid, &s.preset) {
        (Some(g), _) => position_grid(axis, g)?,
        (None, Some(p)) => PositionGrid { axis, ..p.grid },
        (None, None) => PositionGrid::new(axis, -2.0, 2.0, 0.1)?,
    };
    cfg.set("axis", axis);
    cfg.set("grid", GridArg { lo: grid.lo, hi: grid.hi, step: grid.step });
    let points = match a.grid2 {
        Some(g2) => {
            cfg.set("grid2", g2);
            cfg.set("axis2", a.axis2);
            let grid2 = position_grid(a.axis2, g2)?;
            share_surface(&s.electorate, &s.r, &s.d, &grid, &grid2, &s.metric, s.valence, &s.noise)?
        }
        None => share_curve(&s.electorate, &s.r, &s.d, &grid, &s.metric, s.valence, &s.noise)?,
    };

    let header = cfg.header(Some(seed));
    let csv = csv_bytes(&header, |buf| write_curve_csv(&points, buf))?;
    let best = &points[argmax(&points).expect("grids are non-empty")];
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.estimate.share), hi.max(p.estimate.share))
    });
    let mut comparisons = Vec::new();
    if let Some(p) = &s.preset {
        for d in &p.comparisons {
            let est = evaluate(&s.electorate, d, &s.r, &s.metric, s.valence, &s.noise)?;
            comparisons.push(json!({ "d_pos": d.coords(), "d_share": est.share, "mc_se": est.mc_se }));
        }
    }
    let summary = json!({
        "digest": cfg.digest(),
        "seed": seed,
        "argmax": { "coords": best.coords, "d_share": best.estimate.share, "mc_se": best.estimate.mc_se },
        "d_share_range": [lo, hi],
        "r_share_range": [1.0 - hi, 1.0 - lo],
        "comparisons": comparisons,
    });
    eprintln!(
        "argmax at {:?}: D share {:.4} (mc se {:.4}); R share over the grid {:.4}..{:.4}",
        best.coords,
        best.estimate.share,
        best.estimate.mc_se,
        1.0 - hi,
        1.0 - lo
    );

    let mut out = Outputs::default();
    out.add(a.out, csv);
    if let Some(path) = a.summary {
        out.add(Some(path), json_bytes(&summary));
    }
    out.commit()
}

pub fn optimize(a: OptimizeArgs, seed: u64) -> Result<()> {
    let mut cfg = RunConfig::new("optimize");
    cfg.set("seed", seed);
    let s = resolve_spatial(&a.spatial, seed, &mut cfg)?;
    let bounds = match &a.bounds {
        Some(b) => b.0.clone(),
        None => vec![(-3.0, 3.0); a.free_axes.len()],
    };
    let mut search = SearchSpec::new(a.free_axes.clone(), bounds.clone());
    search.coarse_step = a.coarse_step;
    search.refine_rounds = a.refine_rounds;
    cfg.set("free-axes", a.free_axes.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    cfg.set("bounds", crate::Bounds(bounds));
    cfg.set("coarse-step", a.coarse_step);
    cfg.set("refine-rounds", a.refine_rounds);
    let (best, est) = optimize_position(&s.electorate, &s.r, &s.d, &search, &s.metric, s.valence, &s.noise)?;

    let mut body = cfg.header(Some(seed));
    let cols: Vec<String> = (0..best.dim()).map(|j| format!("x{j}")).collect();
    body += &format!("{},d_share,mc_se,n_voters,draws\n", cols.join(","));
    let coords: Vec<String> = best.coords().iter().map(f64::to_string).collect();
    body += &format!("{},{},{},{},{}\n", coords.join(","), est.share, est.mc_se, est.n_voters, est.draws);
    eprintln!("best D position {:?}: share {:.4} (mc se {:.4})", best.coords(), est.share, est.mc_se);
    let mut out = Outputs::default();
    out.add(a.out, body.into_bytes());
    out.commit()
}

pub fn export_electorate(a: ExportElectorateArgs, seed: u64) -> Result<()> {
    let mut cfg = RunConfig::new("export-electorate");
    cfg.set("seed", seed);
    let p = preset(a.electorate.preset.as_deref())?;
    let (spec, n) = resolve_spec(&a.electorate, p.as_ref(), None, &mut cfg)?;
    let e = sample_electorate(&spec, n, seed)?;
    let bytes = csv_bytes(&cfg.header(Some(seed)), |buf| e.write_csv(buf))?;
    let mut out = Outputs::default();
    out.add(a.out, bytes);
    out.commit()
}

pub fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let mut gen = match &a.config {
        Some(path) => GeneratorConfig::parse_kv(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        None => GeneratorConfig::default(),
    };
    if let Some(groups) = &a.groups {
        gen.set("groups", groups)?;
    }
    for kv in &a.sets {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        gen.set(k.trim(), v.trim())?;
    }
    gen.validate()?;
    let mut cfg = RunConfig::new("synth");
    cfg.set("seed", seed);
    for line in gen.to_kv().lines() {
        if let Some((k, v)) = line.split_once('=') {
            cfg.push("set", format!("{}={}", k.trim(), v.trim()));
        }
    }
    let ds = synth_survey(&gen, seed)?;
    let bytes = csv_bytes(&cfg.header(Some(seed)), |buf| ds.write_csv(buf))?;
    let mut out = Outputs::default();
    out.add(a.out, bytes);
    out.commit()
}

fn read_survey(path: &Path) -> Result<spatialvote::SurveyDataset> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (ds, report) = load_survey(file, &path.display().to_string())?;
    report_ingestion(&report);
    if ds.is_empty() {
        bail!("{} holds no usable respondents", path.display());
    }
    Ok(ds)
}

fn report_ingestion(report: &IngestionReport) {
    for issue in report.rejected.iter().take(10) {
        eprintln!("rejected row {}: {}", issue.row, issue.reason);
    }
    if report.rejected.len() > 10 {
        eprintln!("... {} rows rejected in total", report.rejected.len());
    }
    if !report.flagged.is_empty() {
        eprintln!("{} rows flagged (kept)", report.flagged.len());
    }
}

fn fmt_coef(x: f64, se: f64) -> String {
    if se.is_nan() {
        format!("{x:>9.4}          ")
    } else {
        format!("{x:>9.4} ({se:>6.4})")
    }
}

fn coefficient_table(pm: &spatialvote::PerceptionModel, cm: &ChoiceModel) -> String {
    let mut t = String::from("perceived position ~ 1 + econ_self + soc_self\n");
    t += &format!(
        "{:<18}{:>20}{:>20}{:>20}{:>10}{:>7}\n",
        "cell", "intercept", "econ_self", "soc_self", "resid_sd", "n"
    );
    for c in Candidate::ALL {
        for d in Dimension::ALL {
            for p in Party::ALL {
                let f = pm.fit(c, d, p);
                t += &format!(
                    "{:<18}{:>20}{:>20}{:>20}{:>10.4}{:>7}\n",
                    format!("{c} {d} {p}"),
                    fmt_coef(f.intercept, f.se[0]),
                    fmt_coef(f.coef_econ_self, f.se[1]),
                    fmt_coef(f.coef_soc_self, f.se[2]),
                    f.residual_sd,
                    f.n
                );
            }
        }
    }
    t += "\nPr(bush) = inv_logit(intercept + dist_e + dist_s)\n";
    t += &format!("{:<18}{:>20}{:>20}{:>20}{:>10}{:>7}\n", "party", "intercept", "dist_e", "dist_s", "iter", "n");
    for p in Party::ALL {
        let f = cm.fit(p);
        t += &format!(
            "{:<18}{:>20}{:>20}{:>20}{:>10}{:>7}\n",
            p.to_string(),
            fmt_coef(f.intercept, f.se[0]),
            fmt_coef(f.coef_dist_e, f.se[1]),
            fmt_coef(f.coef_dist_s, f.se[2]),
            f.iterations,
            f.n
        );
    }
    t
}

pub fn fit(a: FitArgs) -> Result<()> {
    let mut cfg = RunConfig::new("fit");
    cfg.set("survey", a.survey.display());
    let ds = read_survey(&a.survey)?;
    let (pm, cm) = match fit_all(&ds) {
        Ok(models) => models,
        Err(spatialvote::Error::FitFailures(cells)) => {
            for c in &cells {
                eprintln!("fit failed: {}: {}", c.cell, c.error);
            }
            bail!("{} of 15 fits failed; no model written", cells.len());
        }
        Err(e) => return Err(e.into()),
    };
    let model = format!("{}{}", cfg.header(None), write_models(&pm, &cm));
    let table = coefficient_table(&pm, &cm);
    let mut out = Outputs::default();
    out.add(Some(a.out), model.into_bytes());
    if let Some(path) = a.table {
        out.add(Some(path), table.clone().into_bytes());
    }
    out.add(None, table.into_bytes());
    out.commit()
}

pub fn counterfactual(a: CounterfactualArgs, seed: u64) -> Result<()> {
    let mut cfg = RunConfig::new("counterfactual");
    cfg.set("seed", seed);
    cfg.set("model", a.model.display());
    cfg.set("survey", a.survey.display());
    cfg.set("candidate", a.candidate);
    cfg.set("draws", a.draws);
    let text = fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let (pm, mut cm) = read_models(&text)?;
    if let Some(name) = &a.choice_model {
        cm = ChoiceModel::preset(name)?;
        cfg.set("choice-model", name);
    }
    let ds = read_survey(&a.survey)?;

    let sweep = if let Some(shift) = &a.shift {
        let [de, dsoc] = shift.0[..] else { bail!("--shift expects delta_econ,delta_soc") };
        cfg.set("shift", shift);
        let spec = ShiftSpec::new(a.candidate, de, dsoc)?;
        let baseline = simulate_election(&pm, &cm, &ds, a.draws, seed)?;
        let result = simulate_election(&apply_shift(&pm, &spec), &cm, &ds, a.draws, seed)?;
        SweepResult {
            candidate: a.candidate,
            points: vec![SweepPoint { shift: spec, result }],
            econ_values: vec![de],
            soc_values: vec![dsoc],
            baseline,
        }
    } else if let (Some(ge), Some(gs)) = (a.econ_grid, a.soc_grid) {
        cfg.set("econ-grid", ge);
        cfg.set("soc-grid", gs);
        let econ = ShiftGrid::new(ge.lo, ge.hi, ge.step)?;
        let soc = ShiftGrid::new(gs.lo, gs.hi, gs.step)?;
        sweep_2d(&pm, &cm, &ds, a.candidate, &econ, &soc, a.draws, seed)?
    } else {
        let dim = a.dim.ok_or_else(|| anyhow!("give --dim with --grid, --econ-grid with --soc-grid, or --shift"))?;
        let g = a.grid.unwrap_or(GridArg { lo: -3.0, hi: 3.0, step: 0.25 });
        cfg.set("dim", dim);
        cfg.set("grid", g);
        sweep_1d(&pm, &cm, &ds, a.candidate, dim, &ShiftGrid::new(g.lo, g.hi, g.step)?, a.draws, seed)?
    };

    let csv = csv_bytes(&cfg.header(Some(seed)), |buf| sweep.write_csv(buf))?;
    let mut summary = sweep.summary_json();
    summary["digest"] = json!(cfg.digest());
    summary["seed"] = json!(seed);
    summary["choice_model"] = json!(cm.provenance);
    let summary_path = a.summary.clone().or_else(|| a.out.as_ref().map(|p| p.with_extension("json")));
    let mut out = Outputs::default();
    out.add(a.out, csv);
    match summary_path {
        Some(path) => out.add(Some(path), json_bytes(&summary)),
        None => eprint!("{}", String::from_utf8(json_bytes(&summary)).expect("json is utf-8")),
    }
    out.commit()
}
