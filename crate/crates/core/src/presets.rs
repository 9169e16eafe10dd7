//! Named configurations for the theoretical models.

use crate::electorate::CorrelationSpec;
use crate::error::{Error, Result};
use crate::geometry::IdealPoint;
use crate::inference::EQ31_PRESET;
use crate::spatial::PositionGrid;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2004;

pub const SPATIAL_PRESETS: [&str; 4] = ["fig1", "fig2", "fig3a", "fig3b"];

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialPreset {
    pub name: &'static str,
    pub correlation: CorrelationSpec,
    pub n_voters: usize,
    pub r_pos: IdealPoint,
    /// D's position; the grid axis coordinate is what gets swept.
    pub d_template: IdealPoint,
    pub grid: PositionGrid,
    /// Fixed D positions worth evaluating on their own.
    pub comparisons: Vec<IdealPoint>,
}

fn point(c: &[f64]) -> IdealPoint {
    IdealPoint::new(c.to_vec()).expect("preset coordinates are finite")
}

pub fn spatial_preset(name: &str) -> Result<SpatialPreset> {
    let two_d = |name| SpatialPreset {
        name,
        correlation: CorrelationSpec { dim: 2, rho: 0.5 },
        n_voters: 10_000,
        r_pos: point(&[2.0, 1.0]),
        d_template: point(&[1.0, -2.0]),
        grid: PositionGrid { axis: 0, lo: -2.0, hi: 2.0, step: 0.1 },
        comparisons: vec![point(&[1.0, -2.0]), point(&[0.0, -2.0])],
    };
    Ok(match name {
        // Median-voter picture: R at +2, D starting at +1.
        "fig1" => SpatialPreset {
            name: "fig1",
            correlation: CorrelationSpec { dim: 1, rho: 0.0 },
            n_voters: 10_000,
            r_pos: point(&[2.0]),
            d_template: point(&[1.0]),
            grid: PositionGrid { axis: 0, lo: -2.0, hi: 2.0, step: 0.05 },
            comparisons: vec![point(&[0.0]), point(&[1.0]), point(&[1.9999])],
        },
        "fig2" => two_d("fig2"),
        "fig3a" => SpatialPreset { comparisons: vec![point(&[1.0, -2.0])], ..two_d("fig3a") },
        "fig3b" => SpatialPreset {
            name: "fig3b",
            correlation: CorrelationSpec { dim: 3, rho: 0.5 },
            n_voters: 10_000,
            r_pos: point(&[2.0, 1.0, 1.0]),
            d_template: point(&[1.0, -1.0, -2.0]),
            grid: PositionGrid { axis: 0, lo: -2.0, hi: 2.0, step: 0.1 },
            comparisons: vec![point(&[1.0, -1.0, -2.0])],
        },
        EQ31_PRESET | "eq31" => {
            return Err(Error::InvalidInput(format!(
                "`{name}` is a vote-choice preset; pass it as --choice-model to `counterfactual`"
            )))
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset `{other}` (expected one of {})",
                SPATIAL_PRESETS.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_consistent() {
        for name in SPATIAL_PRESETS {
            let p = spatial_preset(name).unwrap();
            p.correlation.validate().unwrap();
            assert_eq!(p.r_pos.dim(), p.correlation.dim);
            assert_eq!(p.d_template.dim(), p.correlation.dim);
            assert!(p.grid.axis < p.correlation.dim);
            assert!(p.comparisons.iter().all(|c| c.dim() == p.correlation.dim));
        }
        assert!(spatial_preset("eq31").is_err());
        assert!(spatial_preset("fig9").is_err());
    }

    #[test]
    fn fig3_grids_have_41_points() {
        assert_eq!(spatial_preset("fig3a").unwrap().grid.values().len(), 41);
        assert_eq!(spatial_preset("fig3b").unwrap().grid.values().len(), 41);
    }
}
