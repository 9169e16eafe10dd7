use spatialvote::inference::{read_models, write_models, LinearFit, LogitFit};
use spatialvote::survey::{perception_cell, perception_cells, Respondent};
use spatialvote::*;

fn survey(sizes: [usize; 3], seed: u64) -> SurveyDataset {
    synth_survey(&GeneratorConfig { group_sizes: sizes, ..Default::default() }, seed).unwrap()
}

#[test]
fn files_round_trip_through_the_whole_pipeline() {
    let ds = survey([400, 300, 400], 21);
    let mut csv = Vec::new();
    ds.write_csv(&mut csv).unwrap();
    let (back, report) = load_survey(csv.as_slice(), "unused").unwrap();
    assert!(report.is_empty());
    assert_eq!(back.respondents, ds.respondents);
    assert_eq!(back.provenance, ds.provenance);

    let (pm, cm) = fit_all(&back).unwrap();
    let (pm2, cm2) = read_models(&write_models(&pm, &cm)).unwrap();
    let a = simulate_election(&pm, &cm, &ds, 25, 4).unwrap();
    let b = simulate_election(&pm2, &cm2, &back, 25, 4).unwrap();
    assert_eq!(a, b);
}

fn mirrored(pm: &PerceptionModel, cm: &ChoiceModel) -> (PerceptionModel, ChoiceModel) {
    // Bush'(e, s) = -Kerry(-e, -s) and vice versa
    let mut fits = Vec::with_capacity(12);
    for (c, d, p) in perception_cells() {
        let other = if c == Candidate::Bush { Candidate::Kerry } else { Candidate::Bush };
        let f = pm.fit(other, d, p);
        fits.push(LinearFit { intercept: -f.intercept, ..f.clone() });
    }
    let fits: Vec<LinearFit> = {
        let mut ordered = vec![None; 12];
        for ((c, d, p), f) in perception_cells().zip(fits) {
            ordered[perception_cell(c, d, p)] = Some(f);
        }
        ordered.into_iter().map(Option::unwrap).collect()
    };
    let choice = cm.fits.clone().map(|f| LogitFit { intercept: -f.intercept, ..f });
    (PerceptionModel::new(fits).unwrap(), ChoiceModel { fits: choice, ..cm.clone() })
}

#[test]
fn swapping_roles_mirrors_the_share() {
    let ds = survey([600, 400, 600], 2);
    let (pm, cm) = fit_all(&ds).unwrap();
    let mut flipped = ds.clone();
    for r in flipped.respondents.iter_mut() {
        let orig: Respondent = r.clone();
        r.econ_self = -orig.econ_self;
        r.soc_self = -orig.soc_self;
    }
    let (pm2, cm2) = mirrored(&pm, &cm);
    let a = simulate_election(&pm, &cm, &ds, 200, 1).unwrap();
    let b = simulate_election(&pm2, &cm2, &flipped, 200, 2).unwrap();
    let se = (a.mc_se.powi(2) + b.mc_se.powi(2)).sqrt();
    assert!((a.bush_share - (1.0 - b.bush_share)).abs() <= 4.0 * se, "{a:?} vs {b:?}");
}

#[test]
fn more_draws_converge_to_the_same_mean() {
    let ds = survey([40, 40, 40], 3);
    let (pm, cm) = fit_all(&ds).unwrap();
    let few = simulate_election(&pm, &cm, &ds, 100, 11).unwrap();
    let many = simulate_election(&pm, &cm, &ds, 10_000, 12).unwrap();
    let se = (few.mc_se.powi(2) + many.mc_se.powi(2)).sqrt();
    assert!((few.bush_share - many.bush_share).abs() <= 4.0 * se, "{few:?} vs {many:?}");
    assert!(many.mc_se < few.mc_se / 5.0);
}

#[test]
fn sweeps_share_random_numbers() {
    let ds = survey([300, 300, 300], 4);
    let (pm, cm) = fit_all(&ds).unwrap();
    let grid = spatialvote::ShiftGrid::new(-0.5, 0.5, 0.05).unwrap();
    let s = sweep_1d(&pm, &cm, &ds, Candidate::Kerry, Dimension::Econ, &grid, 30, 6).unwrap();
    // tiny intercept changes flip few votes when the randomness is shared
    let max_jump = s.points.windows(2).map(|w| (w[1].result.bush_share - w[0].result.bush_share).abs()).fold(0.0, f64::max);
    assert!(max_jump < 0.01, "adjacent points jump by {max_jump}");
    let fresh = simulate_election(&apply_shift(&pm, &s.points[1].shift), &cm, &ds, 30, 7).unwrap();
    assert_ne!(fresh.bush_share, s.points[1].result.bush_share);
}

#[test]
fn ingestion_flags_bad_rows_and_fits_the_rest() {
    let ds = survey([200, 200, 200], 5);
    let mut csv = Vec::new();
    ds.write_csv(&mut csv).unwrap();
    let mut text = String::from_utf8(csv).unwrap();
    text.push_str("D,42,0,1,1,1,1,bush\n");
    text.push_str("X,0,0,1,1,1,1,kerry\n");
    text.push_str("R,1,1,,2,3,-1,bush\n");
    let (back, report) = load_survey(text.as_bytes(), "edited").unwrap();
    assert_eq!(report.rejected.len(), 2);
    assert_eq!(back.len(), 601);
    let (_, cm) = fit_all(&back).unwrap();
    let eligible = back.respondents.iter().filter(|r| r.stage2_eligible()).count();
    assert_eq!(cm.fits.iter().map(|f| f.n).sum::<usize>(), eligible);
}
