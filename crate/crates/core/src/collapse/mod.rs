//! Dimension-reducing constructions: restriction to a hyperplane slice, the
//! smoothing projection with its error decomposition, the random subspace
//! sampler that feeds it, and the span collapse.

mod sampler;
mod slice;
mod smooth;
mod span;

pub use sampler::{
    avoidance_set, coset_report, random_avoiding_subspace, random_subspace, CosetReport,
    SampledSubspace, DEFAULT_SAMPLER_BUDGET,
};
pub use slice::{
    best_shift_x, coset_masses, predicted_slice_spectrum, slice_collapse, slice_function,
    transversal_direction, SliceCollapse,
};
pub use smooth::{
    error_decomposition, predicted_smooth_spectrum, smooth_project, smoothing_branch,
    ErrorDecomposition, RegimeFlags,
};
pub use span::{span_collapse, SpanCollapse, SpanCollapseReport};
