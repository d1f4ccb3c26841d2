//! Symbolic representations of closed times-a-invariant subsets of the
//! circle, their a-adic local difference sets and dimensions, and the
//! verification experiments built on them.

pub mod adic;
pub mod circle;
pub mod error;
pub mod measures;
pub mod smooth;
pub mod symbolic;

pub use adic::{adic_frac, circle_dist, commensurability, rotation_orbit_gap, AdicFrac, CommensurabilityVerdict};
pub use circle::{
    aggregate_local_diff, difference_set, local_difference_set, local_difference_set_base,
    self_restricted_test, CircleSet, LocalDiffParams,
};
pub use error::{Error, Result};
pub use measures::{
    cesaro_pushforward_samples, direct_samples, entropy_at_scale, markov_from_system,
    dimension_gain_experiment, EmpiricalCloud, MarkovMeasure, MarkovWeights,
};
pub use smooth::{
    affine_embedding_search, check_map_dim_inequality, claim_full_circle, image_cover, parse_map,
    verify_transform_law, SmoothMap, Verdict,
};
pub use symbolic::{box_count_estimate, parse_system, Cover, DigitSystem, DimensionEstimate, PointSpec};
