//! Monte Carlo shares against the closed form for normal electorates.
//!
//! Under a weighted squared metric, D wins voter x iff
//! 2 x'W(D-R) > D'WD - R'WR - v, so for x ~ N(0, S) the share is
//! Phi((R'WR - D'WD + v) / (2 sqrt((D-R)'WSW(D-R)))).

use proptest::prelude::*;
use spatialvote::electorate::equicorrelation_matrix;
use spatialvote::*;

fn closed_form(spec: &CorrelationSpec, d: &[f64], r: &[f64], w: &[f64], v: f64) -> f64 {
    let s = equicorrelation_matrix(spec).unwrap();
    let dim = d.len();
    let quad = |p: &[f64]| (0..dim).map(|j| w[j] * p[j] * p[j]).sum::<f64>();
    let a: Vec<f64> = (0..dim).map(|j| w[j] * (d[j] - r[j])).collect();
    let mut var = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            var += a[i] * s[(i, j)] * a[j];
        }
    }
    std_normal_cdf((quad(r) - quad(d) + v) / (2.0 * var.sqrt()))
}

const N: usize = 40_000;

fn electorate(dim: usize, rho: f64) -> Electorate {
    sample_electorate(&CorrelationSpec::new(dim, rho).unwrap(), N, 77).unwrap()
}

#[test]
fn preset_configurations() {
    let tol = 4.0 * 0.5 / (N as f64).sqrt();
    for (rho, d, r) in [
        (0.5, vec![1.0, -2.0], vec![2.0, 1.0]),
        (0.5, vec![0.0, -2.0], vec![2.0, 1.0]),
        (0.5, vec![0.1, -1.0, -2.0], vec![2.0, 1.0, 1.0]),
        (0.5, vec![1.0, -1.0, -2.0], vec![2.0, 1.0, 1.0]),
        (0.0, vec![1.9999], vec![2.0]),
    ] {
        let spec = CorrelationSpec::new(d.len(), rho).unwrap();
        let e = electorate(d.len(), rho);
        let m = Metric::squared_euclidean(d.len());
        let s = vote_share(&e, &IdealPoint::new(d.clone()).unwrap(), &IdealPoint::new(r.clone()).unwrap(), &m, Valence::NONE)
            .unwrap();
        let exact = closed_form(&spec, &d, &r, &vec![1.0; d.len()], 0.0);
        assert!((s.share - exact).abs() <= tol, "{d:?} vs {r:?}: {} vs {exact}", s.share);
    }
}

fn config() -> impl Strategy<Value = (usize, f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1usize..=3, 0.0f64..0.8).prop_flat_map(|(dim, rho)| {
        (
            Just(dim),
            Just(rho),
            prop::collection::vec(-2.5f64..2.5, dim),
            prop::collection::vec(-2.5f64..2.5, dim),
            prop::collection::vec(0.3f64..3.0, dim),
            -1.0f64..1.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_shares_match_closed_form((dim, rho, d, r, w, v) in config()) {
        let sep: f64 = d.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        prop_assume!(sep > 0.2);
        let spec = CorrelationSpec::new(dim, rho).unwrap();
        let e = sample_electorate(&spec, N, 31).unwrap();
        let m = Metric::new(MetricKind::SquaredEuclidean, w.clone()).unwrap();
        let s = vote_share(&e, &IdealPoint::new(d.clone()).unwrap(), &IdealPoint::new(r.clone()).unwrap(), &m,
            Valence::new(v).unwrap()).unwrap();
        let exact = closed_form(&spec, &d, &r, &w, v);
        // 4.5 sigma keeps the family-wise false alarm rate negligible
        prop_assert!((s.share - exact).abs() <= 4.5 * (exact * (1.0 - exact) / N as f64).sqrt() + 1e-12,
            "share {} vs {exact}", s.share);
    }
}

#[test]
fn noise_pulls_the_one_dimensional_optimum_inward() {
    let e = electorate(1, 0.0);
    let m = Metric::squared_euclidean(1);
    let r = IdealPoint::new(vec![2.0]).unwrap();
    let search = SearchSpec::new(vec![0], vec![(-3.0, 2.0)]);
    let (clean, clean_share) =
        optimize_position(&e, &r, &IdealPoint::new(vec![0.0]).unwrap(), &search, &m, Valence::NONE, &NoiseConfig::None)
            .unwrap();
    assert!(clean.coords()[0] > 1.99 && clean.coords()[0] < 2.0);
    assert!((clean_share.share - std_normal_cdf(2.0)).abs() < 0.01);
    let noise = NoiseConfig::Perception { sigma: vec![0.5], draws: 10, seed: 3 };
    let (noisy, _) =
        optimize_position(&e, &r, &IdealPoint::new(vec![0.0]).unwrap(), &search, &m, Valence::NONE, &noise).unwrap();
    assert!(noisy.coords()[0] < 1.9, "noisy optimum {:?}", noisy.coords());
}
