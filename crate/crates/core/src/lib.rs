//! Multidimensional spatial voting with perception error and valence, and a
//! three-stage survey pipeline: perceived-position regressions, a
//! distance-based vote-choice logit, and intercept-shift election
//! simulation.

pub mod counterfactual;
pub mod electorate;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod normal;
pub mod presets;
pub mod rng;
pub mod spatial;
pub mod survey;

pub use electorate::{cholesky_lower, equicorrelation_matrix, sample_electorate, CorrelationSpec, Electorate};
pub use error::{Error, Result};
pub use geometry::{
    distance, preferred_party, relative_utility, IdealPoint, Metric, MetricKind, Preference, TieRule, Valence,
};
pub use normal::{inv_logit, std_normal_cdf};
pub use spatial::{
    optimize_position, share_curve, share_surface, vote_share, vote_share_noisy, CurvePoint, NoiseConfig,
    PositionGrid, SearchSpec, ShareEstimate,
};
pub use survey::{load_survey, synth_survey, Candidate, Dimension, GeneratorConfig, Party, SurveyDataset, Vote};
pub use inference::{fit_all, fit_logit_irls, fit_ols, predict_logit, ChoiceModel, ChoiceRule, PerceptionModel};
pub use counterfactual::{
    apply_shift, simulate_election, sweep_1d, sweep_2d, ElectionResult, ShiftGrid, ShiftSpec, SweepResult,
};
