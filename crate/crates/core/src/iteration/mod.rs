//! The density-increment driver: initial reductions, the per-step dispatch
//! between the two update cases, the invariant ledger, and the pure
//! arithmetic of the (j, δ, n) recurrences.

mod driver;
mod ledger;
mod updates;

use serde::{Deserialize, Serialize};

use crate::collapse::DEFAULT_SAMPLER_BUDGET;
use crate::error::{Error, Result};
use crate::subspace::AffineEmbedding;
use crate::transform::DensityFunction;

pub use driver::{
    handoff, initial_reductions, initial_reductions_with, prop0_step, run_iteration, EarlyExitKind,
    HandoffPath, HandoffReport, IterationTrace, Reduction, ReductionReport, StepOutcome, StepReport,
    TerminalReason,
};
pub use ledger::{check_invariants, InvariantChecks, LedgerRow};
pub use updates::{
    case1_next_j, case1_residue, case1_update, case2_next_j, case2_residue, case2_update, halving_check,
    simulate, termination_budget, Case2Update, ForcedCase, HalvingReport, SimEnd, SimState,
    SimulationReport, STEP_B,
};

/// How the asymptotic hypotheses (θ > 2F^{−1/8}, j > j₀, n > n₀) are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// A failing clause stops the step.
    Strict,
    /// A failing clause is recorded as a regime flag and the step proceeds.
    Desk,
}

/// The threshold 2F^{±1/2} used by the benign index and inv1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenignThreshold {
    TwoSqrtF,
    TwoInvSqrtF,
}

impl BenignThreshold {
    pub fn value(&self, size: f64) -> f64 {
        match self {
            BenignThreshold::TwoSqrtF => 2.0 * size.sqrt(),
            BenignThreshold::TwoInvSqrtF => 2.0 / size.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub j0: usize,
    /// Lower bound J₀ on the starting rank; j′ ≤ J₀^{1/2}/6 sends the
    /// instance to the final pipeline.
    pub big_j0: usize,
    pub n0: u32,
    pub b: usize,
    pub step_budget: usize,
    pub sampler_budget: usize,
    pub mode: Mode,
    pub threshold: BenignThreshold,
    /// Seeds the subspace sampler in the final handoff.
    pub seed: u64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        let j0 = 256;
        IterationConfig {
            j0,
            big_j0: 36 * j0 * j0,
            n0: 8,
            b: STEP_B,
            step_budget: 100_000,
            sampler_budget: DEFAULT_SAMPLER_BUDGET,
            mode: Mode::Strict,
            threshold: BenignThreshold::TwoSqrtF,
            seed: 0,
        }
    }
}

impl IterationConfig {
    /// Knobs small enough for the loop to run on F_3^6-sized inputs, with
    /// asymptotic hypotheses recorded as flags.
    pub fn desk() -> Self {
        IterationConfig { j0: 2, big_j0: 36, n0: 1, mode: Mode::Desk, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b != STEP_B {
            return Err(Error::InvalidArgument(format!("B must be {STEP_B}, got {}", self.b)));
        }
        if self.j0 < 2 {
            return Err(Error::InvalidArgument(format!("j₀ = {} must exceed 1", self.j0)));
        }
        if self.step_budget == 0 || self.sampler_budget == 0 {
            return Err(Error::InvalidArgument("budgets must be positive".into()));
        }
        Ok(())
    }

    /// J₀^{1/2}/6.
    pub fn benign_floor(&self) -> f64 {
        (self.big_j0 as f64).sqrt() / 6.0
    }
}

/// (h_t, n_t, j_t, δ_t) with θ pinned to 𝔼 of the original function, and
/// the embedding of h_t's domain into the original space.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub h: DensityFunction,
    pub n: u32,
    pub j: usize,
    pub delta: f64,
    pub theta: f64,
    pub t: usize,
    pub embedding: AffineEmbedding,
}

impl IterationState {
    pub fn initial(f: &DensityFunction, j: usize, delta: f64) -> Self {
        IterationState {
            h: f.clone(),
            n: f.params().n(),
            j,
            delta,
            theta: crate::transform::expectation(f),
            t: 0,
            embedding: AffineEmbedding::identity(f.params()),
        }
    }
}
