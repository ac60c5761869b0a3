use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ledger::{check_invariants, mag_or_zero, LedgerRow};
use super::updates::{case1_next_j, case1_residue, case1_update, case2_next_j, case2_residue, case2_update, termination_budget};
use super::{IterationConfig, IterationState, Mode};
use crate::collapse::{
    best_shift_x, error_decomposition, random_avoiding_subspace, slice_collapse, smooth_project, span_collapse,
    SampledSubspace, SliceCollapse, SpanCollapseReport,
};
use crate::error::{Error, Result};
use crate::progressions::{find_nontrivial_3ap, lambda_brute, ProgressionWitness, SupportSet};
use crate::spectrum::{benign_index_with, below_theta_power, log_theta_power, spectral_order, SpectralOrder};
use crate::structure::{prop1_dichotomy_with, DichotomyOutcome};
use crate::subspace::{complement, AffineEmbedding};
use crate::transform::{dft, expectation, DensityFunction, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EarlyExitKind {
    /// θ ≥ min(1/p, 1/4).
    MeshulamRegime,
    /// |f̂(a_j)| ≤ θ²/32.
    Prop30Regime,
    /// δ > 2/3, or the benign index is at most J₀^{1/2}/6.
    Prop3Regime,
}

impl EarlyExitKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EarlyExitKind::MeshulamRegime => "MeshulamRegime",
            EarlyExitKind::Prop30Regime => "Prop30Regime",
            EarlyExitKind::Prop3Regime => "Prop3Regime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reduction {
    /// The instance to iterate on. `moved` is set when j was replaced by the
    /// benign index and δ halved; `this_here2` records whether
    /// θ^{j^{1/2+δ}}F > T and |f̂(a_{j−1})| ≥ T both hold.
    Reduced { j: usize, delta: f64, moved: bool, this_here2: bool },
    EarlyExit { exit: EarlyExitKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub reduction: Reduction,
    pub flags: Vec<String>,
    pub numerics: BTreeMap<String, f64>,
}

fn check_inputs(size: usize, j: usize, delta: f64) -> Result<()> {
    if j < 2 || j > size {
        return Err(Error::RankOutOfRange { rank: j, max: size });
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("δ = {delta} must be positive")));
    }
    Ok(())
}

pub fn initial_reductions(
    f: &DensityFunction,
    j: usize,
    delta: f64,
    config: &IterationConfig,
) -> Result<ReductionReport> {
    let order = spectral_order(&dft(f))?;
    initial_reductions_with(&order, expectation(f), j, delta, config)
}

/// The gates applied before the loop, on a spectral order and density θ.
pub fn initial_reductions_with(
    order: &SpectralOrder,
    theta: f64,
    j: usize,
    delta: f64,
    config: &IterationConfig,
) -> Result<ReductionReport> {
    config.validate()?;
    let params = order.params();
    let size = params.size() as f64;
    check_inputs(params.size(), j, delta)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("θ = {theta} must lie in (0, 1]")));
    }
    let mut flags = Vec::new();
    let mut numerics = BTreeMap::new();
    let exit = |exit, flags, numerics| Ok(ReductionReport { reduction: Reduction::EarlyExit { exit }, flags, numerics });
    numerics.insert("theta".to_string(), theta);

    let p = params.p() as f64;
    if theta >= (1.0 / p).min(0.25) {
        return exit(EarlyExitKind::MeshulamRegime, flags, numerics);
    }

    let mag_j = order.mag_at(j)?;
    numerics.insert("mag_j".into(), mag_j);
    if mag_j <= theta * theta / 32.0 {
        return exit(EarlyExitKind::Prop30Regime, flags, numerics);
    }
    if !below_theta_power(mag_j, theta, (j as f64).powf(0.5 + delta), size) {
        flags.push("decay hypothesis |f̂(a_j)| < θ^{j^{1/2+δ}}F fails".into());
    }
    if theta.ln() <= -2.0 * (j as f64).powf(-0.5) * size.ln() {
        flags.push("regime gap: θ ≤ F^{−2j^{−1/2}}".into());
    }
    if theta.ln() <= (2.0 * p).ln() - size.ln() / 8.0 {
        flags.push("regime gap: θ ≤ 2pF^{−1/8}".into());
    }
    let n = params.n() as f64;
    if (j as f64).ln() > (2.0 - delta) * n.ln() {
        flags.push("regime gap: j > n^{2−δ}".into());
    }
    if delta > 2.0 / 3.0 {
        flags.push("δ > 2/3".into());
        return exit(EarlyExitKind::Prop3Regime, flags, numerics);
    }

    let threshold = config.threshold.value(size);
    numerics.insert("threshold".into(), threshold);
    let (jr, dr, moved) = if order.mags()[j - 2] < threshold {
        let benign = benign_index_with(order, j, threshold).unwrap_or(1);
        numerics.insert("benign_index".into(), benign as f64);
        if benign as f64 <= config.benign_floor() {
            flags.push(format!("benign index {benign} ≤ J₀^{{1/2}}/6 = {}", config.benign_floor()));
            return exit(EarlyExitKind::Prop3Regime, flags, numerics);
        }
        (benign, delta / 2.0, true)
    } else {
        (j, delta, false)
    };
    let bound_log = log_theta_power(theta, (jr as f64).powf(0.5 + dr), size);
    numerics.insert("this_here2_log_bound".into(), bound_log);
    let this_here2 = bound_log > threshold.ln() && order.mags()[jr - 2] >= threshold;
    if !this_here2 {
        flags.push(format!("θ^{{j^{{1/2+δ}}}}F > T or |f̂(a_{{j−1}})| ≥ T fails at (j, δ) = ({jr}, {dr})"));
    }
    Ok(ReductionReport { reduction: Reduction::Reduced { j: jr, delta: dr, moved, this_here2 }, flags, numerics })
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    /// A progression of support(h), in h's coordinates.
    WitnessFound { witness: ProgressionWitness },
    /// |ĥ(b_{Bk})| ≥ γ³F; `claim_holds` is |ĥ(b_k)| < θ^{2k^{1/2+δ}}F.
    Case1 { k: usize, claim_holds: bool },
    /// The slice along t; `claim_holds` is the bound on the collapsed
    /// spectrum at rank j + 51 − ⌊(j/50)^{1/2}⌋.
    Case2 { collapse: SliceCollapse, t: usize, x: usize, claim_holds: bool },
    HypothesisFail { clause: String },
    TheoremViolation { reason: String },
}

impl StepOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            StepOutcome::WitnessFound { .. } => "WitnessFound",
            StepOutcome::Case1 { .. } => "Case1",
            StepOutcome::Case2 { .. } => "Case2",
            StepOutcome::HypothesisFail { .. } => "HypothesisFail",
            StepOutcome::TheoremViolation { .. } => "TheoremViolation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub outcome: StepOutcome,
    /// All asymptotic hypotheses held.
    pub in_regime: bool,
    pub flags: Vec<String>,
    /// Inequalities that failed inside their stated regime.
    pub violations: Vec<String>,
    pub numerics: BTreeMap<String, f64>,
}

pub fn prop0_step(state: &IterationState, config: &IterationConfig) -> Result<StepReport> {
    config.validate()?;
    let s = dft(&state.h);
    let order = spectral_order(&s)?;
    Ok(prop0_step_with(state, &s, &order, config))
}

fn prop0_step_with(state: &IterationState, s: &Spectrum, order: &SpectralOrder, config: &IterationConfig) -> StepReport {
    let params = state.h.params();
    let size = params.size() as f64;
    let theta = state.theta;
    let (j, delta) = (state.j, state.delta);
    let mut report = StepReport {
        outcome: StepOutcome::HypothesisFail { clause: String::new() },
        in_regime: false,
        flags: Vec::new(),
        violations: Vec::new(),
        numerics: BTreeMap::new(),
    };
    let fail = |mut report: StepReport, clause: &str| {
        report.outcome = StepOutcome::HypothesisFail { clause: clause.to_string() };
        report
    };

    if j < 2 || j > params.size() {
        return fail(report, "rank 2 ≤ j ≤ p^n");
    }
    let exponent = (j as f64).powf(0.5 + delta);
    if !below_theta_power(mag_or_zero(order, j), theta, exponent, size) {
        return fail(report, "decay |ĥ(b_j)| < θ^{j^{1/2+δ}} p^n");
    }
    let threshold = config.threshold.value(size);
    if order.mags()[j - 2] < threshold {
        return fail(report, "|ĥ(b_{j−1})| ≥ threshold");
    }

    let mut gaps = Vec::new();
    if theta.ln() <= 2f64.ln() - size.ln() / 8.0 {
        gaps.push("theta floor");
    }
    if j <= config.j0 {
        gaps.push("j > j0");
    }
    if state.n <= config.n0 {
        gaps.push("n > n0");
    }
    report.in_regime = gaps.is_empty();
    if let Some(first) = gaps.first() {
        match config.mode {
            Mode::Strict => return fail(report, first),
            Mode::Desk => report.flags.extend(gaps.iter().map(|g| format!("regime gap: {g}"))),
        }
    }

    let k = case1_next_j(j);
    if k > j - 1 {
        return fail(report, "k ≤ j − 1");
    }
    let mean = expectation(&state.h);
    report.numerics.insert("mean_h".into(), mean);
    if mean >= 0.25 {
        // Dense enough that the density argument no longer applies; search directly.
        return match find_nontrivial_3ap(&SupportSet::of(&state.h)) {
            Some(witness) => {
                report.outcome = StepOutcome::WitnessFound { witness };
                report
            }
            None => fail(report, "𝔼(h) ≥ 1/4 with progression-free support"),
        };
    }

    let gamma = mag_or_zero(order, k) / size;
    let tail = mag_or_zero(order, config.b * k);
    report.numerics.insert("k".into(), k as f64);
    report.numerics.insert("gamma".into(), gamma);
    report.numerics.insert("tail".into(), tail);
    let reverse = gamma == 0.0 || (tail > 0.0 && tail.ln() >= 3.0 * gamma.ln() + size.ln());

    if reverse {
        let claim_holds = below_theta_power(mag_or_zero(order, k), theta, 2.0 * (k as f64).powf(0.5 + delta), size);
        if !claim_holds {
            let msg = format!("|ĥ(b_{k})| < θ^{{2k^{{1/2+δ}}}}F fails");
            if report.in_regime {
                report.violations.push(msg);
            } else {
                report.flags.push(format!("regime gap: {msg}"));
            }
        }
        report.outcome = StepOutcome::Case1 { k, claim_holds };
        return report;
    }

    let outcome = match prop1_dichotomy_with(s, order, mean, k, config.b) {
        Err(e) => return fail(report, &format!("lemma hypotheses: {e}")),
        Ok(o) => o,
    };
    match outcome {
        DichotomyOutcome::HypothesisFail { reason, .. } => fail(report, &format!("lemma hypotheses: {reason}")),
        DichotomyOutcome::TheoremViolation { reason, .. } => {
            report.violations.push(reason.clone());
            report.outcome = StepOutcome::TheoremViolation { reason };
            report
        }
        DichotomyOutcome::LambdaLarge { lambda, .. } => {
            report.numerics.insert("lambda".into(), lambda);
            match find_nontrivial_3ap(&SupportSet::of(&state.h)) {
                Some(witness) => {
                    report.outcome = StepOutcome::WitnessFound { witness };
                    report
                }
                None if report.in_regime => {
                    let reason = format!("Λ = {lambda} > θγ²/4 yet support(h) is progression-free");
                    report.violations.push(reason.clone());
                    report.outcome = StepOutcome::TheoremViolation { reason };
                    report
                }
                None => fail(report, "Λ large from trivial progressions only"),
            }
        }
        DichotomyOutcome::OverlapFound { t, overlap, .. } => {
            report.numerics.insert("overlap".into(), overlap as f64);
            if params.n() < 2 {
                return fail(report, "n ≥ 2 for a slice");
            }
            let sliced = best_shift_x(&state.h, t).and_then(|x| slice_collapse(&state.h, t, x));
            let collapse = match sliced {
                Ok(c) => c,
                Err(e) => return fail(report, &format!("slice: {e}")),
            };
            let inner = match spectral_order(&dft(&collapse.h)) {
                Ok(o) => o,
                Err(e) => return fail(report, &format!("slice spectrum: {e}")),
            };
            let rank = case2_next_j(j);
            let g = collapse.h.params().size() as f64;
            let mag = mag_or_zero(&inner, rank);
            let bound_log = (params.p() as f64).ln() + log_theta_power(theta, exponent, g);
            let claim_holds = mag <= 0.0 || mag.ln() <= bound_log;
            report.numerics.insert("case2_mag".into(), mag);
            report.numerics.insert("case2_log_bound".into(), bound_log);
            if rank > inner.len() {
                report.flags.push(format!("rank {rank} exceeds p^(n−1) = {}", inner.len()));
            }
            if !claim_holds {
                let msg = format!("|ĥ′(b_{rank})| ≤ pθ^{{j^{{1/2+δ}}}}p^{{n−1}} fails");
                if report.in_regime {
                    report.violations.push(msg);
                } else {
                    report.flags.push(format!("regime gap: {msg}"));
                }
            }
            let x = collapse.x;
            report.outcome = StepOutcome::Case2 { collapse, t, x, claim_holds };
            report
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoffPath {
    /// Restrict to a complement of span(a_1, …, a_j).
    Span,
    /// Smooth along a sampled subspace avoiding the top-j structure.
    Smoothing,
}

impl HandoffPath {
    /// Span when j ≤ 3n/2.
    pub fn for_rank(j: usize, n: u32) -> Self {
        if 2 * j <= 3 * n as usize {
            HandoffPath::Span
        } else {
            HandoffPath::Smoothing
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub sampled: SampledSubspace,
    pub telescoping_residue: f64,
    pub in_regime_violations: Vec<usize>,
    pub lambda_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoffReport {
    pub path: HandoffPath,
    pub j: usize,
    pub n: u32,
    /// |ĥ(b_j)|.
    pub target_mag: f64,
    /// ln(θ^{j+2} p^n / 2).
    pub target_log_bound: f64,
    pub target_holds: bool,
    pub span: Option<SpanCollapseReport>,
    /// The span bound exceeds the trivial count Σ g³, forcing a progression.
    pub certified: bool,
    pub smoothing: Option<SmoothingSummary>,
    /// A progression of the original support.
    pub witness: Option<ProgressionWitness>,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

fn carry(embedding: &AffineEmbedding, w: ProgressionWitness) -> ProgressionWitness {
    ProgressionWitness { m: embedding.point_idx(w.m), d: embedding.linear_idx(w.d) }
}

/// The final pipeline on a state at which the loop stopped.
pub fn handoff(
    state: &IterationState,
    order: &SpectralOrder,
    source: &SupportSet,
    config: &IterationConfig,
    path: HandoffPath,
) -> HandoffReport {
    let params = state.h.params();
    let j = state.j.clamp(1, params.size());
    let target_mag = mag_or_zero(order, j);
    let target_log_bound = log_theta_power(state.theta, j as f64 + 2.0, params.size() as f64) - 2f64.ln();
    let mut report = HandoffReport {
        path,
        j,
        n: state.n,
        target_mag,
        target_log_bound,
        target_holds: target_mag <= 0.0 || target_mag.ln() < target_log_bound,
        span: None,
        certified: false,
        smoothing: None,
        witness: None,
        flags: Vec::new(),
        notes: Vec::new(),
    };
    if !report.target_holds {
        report.flags.push("regime gap: |ĥ(b_j)| < θ^{j+2}p^n/2 fails".into());
    }

    match path {
        HandoffPath::Span => match span_collapse(&state.h, order, j) {
            Ok(c) => {
                let trivial: f64 = c.g.values().iter().map(|v| v * v * v).sum();
                report.certified = c.bound > trivial + 1e-9 * params.size() as f64;
                if let Some(w) = find_nontrivial_3ap(&SupportSet::of(&c.g)) {
                    report.witness = Some(carry(&state.embedding, c.transport(&w)));
                } else if report.certified {
                    report.notes.push("span bound forces a progression in support(g), none found".into());
                }
                report.span = Some(c.report());
            }
            Err(e) => report.flags.push(format!("span collapse: {e}")),
        },
        HandoffPath::Smoothing => {
            let points: Vec<usize> = order.perm()[..j].to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            match random_avoiding_subspace(params, &points, &mut rng, config.sampler_budget) {
                Ok(sampled) => {
                    let v = sampled.subspace().clone();
                    let w = complement(&v);
                    let summary = smooth_project(&state.h, &v, &w).and_then(|g| {
                        let d = error_decomposition(&state.h, &g, &v, &w, j, order)?;
                        Ok(SmoothingSummary {
                            sampled: sampled.clone(),
                            telescoping_residue: d.telescoping_residue,
                            in_regime_violations: d.in_regime_violations(),
                            lambda_g: lambda_brute(&g),
                        })
                    });
                    match summary {
                        Ok(s) => {
                            if !s.in_regime_violations.is_empty() {
                                report.notes.push(format!("in-regime error bounds fail: {:?}", s.in_regime_violations));
                            }
                            report.smoothing = Some(s);
                        }
                        Err(e) => report.flags.push(format!("smoothing: {e}")),
                    }
                }
                Err(e) => report.flags.push(format!("sampler: {e}")),
            }
        }
    }
    if report.witness.is_none() {
        report.witness = find_nontrivial_3ap(&SupportSet::of(&state.h)).map(|w| carry(&state.embedding, w));
    }
    if let Some(w) = report.witness {
        if !w.verify(source) {
            report.notes.push(format!("handoff witness (m = {}, d = {}) is not a progression of S", w.m, w.d));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalReason {
    WitnessFound,
    #[serde(rename = "Terminated_jT_below_j0")]
    TerminatedJBelowJ0,
    #[serde(rename = "Terminated_deltaT_above_2/3")]
    TerminatedDeltaAbove2_3,
    HypothesisFail,
    BudgetExhausted,
    TheoremViolation,
}

impl TerminalReason {
    pub fn tag(&self) -> &'static str {
        match self {
            TerminalReason::WitnessFound => "WitnessFound",
            TerminalReason::TerminatedJBelowJ0 => "Terminated_jT_below_j0",
            TerminalReason::TerminatedDeltaAbove2_3 => "Terminated_deltaT_above_2/3",
            TerminalReason::HypothesisFail => "HypothesisFail",
            TerminalReason::BudgetExhausted => "BudgetExhausted",
            TerminalReason::TheoremViolation => "TheoremViolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub p: u32,
    pub n: u32,
    pub theta: f64,
    pub j: usize,
    pub delta: f64,
    pub log_base: String,
    pub config: IterationConfig,
    pub reduction: ReductionReport,
    pub step_budget: usize,
    pub rows: Vec<LedgerRow>,
    pub terminal: TerminalReason,
    pub detail: String,
    /// A progression of the original support, re-verified by membership.
    pub witness: Option<ProgressionWitness>,
    pub handoff: Option<HandoffReport>,
}

impl IterationTrace {
    /// Rows recording an inequality that failed inside its regime.
    pub fn violation_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.case == "TheoremViolation" || !r.notes.is_empty()).count()
    }

    pub fn has_violation(&self) -> bool {
        self.terminal == TerminalReason::TheoremViolation
            || self.violation_rows() > 0
            || self.handoff.as_ref().is_some_and(|h| !h.notes.is_empty())
    }

    /// One JSON object per ledger row.
    pub fn to_jsonl(&self) -> String {
        self.rows.iter().map(|r| serde_json::to_string(r).expect("row serializes") + "\n").collect()
    }
}

struct Run<'a> {
    source: SupportSet,
    n: u32,
    config: &'a IterationConfig,
    rows: Vec<LedgerRow>,
    witness: Option<ProgressionWitness>,
    handoff: Option<HandoffReport>,
}

impl Run<'_> {
    fn finish_with_handoff(&mut self, state: &IterationState, order: &SpectralOrder, path: HandoffPath) {
        let h = handoff(state, order, &self.source, self.config, path);
        self.witness = h.witness.filter(|w| w.verify(&self.source));
        self.handoff = Some(h);
    }
}

/// The next state after a Case 1 or Case 2 outcome, recording the update
/// residue and flags on `row`.
pub(crate) fn advance(
    state: &IterationState,
    outcome: StepOutcome,
    row: &mut LedgerRow,
) -> std::result::Result<IterationState, String> {
    match outcome {
        StepOutcome::Case1 { .. } => {
            let next_j = case1_next_j(state.j);
            if next_j < 2 {
                row.flags.push(format!("⌈j/50⌉ = {next_j}: δ left unchanged"));
                return Ok(IterationState { j: next_j, t: state.t + 1, ..state.clone() });
            }
            let (nj, nd) = case1_update(state.j, state.delta).map_err(|e| format!("case 1 update: {e}"))?;
            row.numerics.insert("update_residue".into(), case1_residue(nj, state.delta, nd));
            Ok(IterationState { j: nj, delta: nd, t: state.t + 1, ..state.clone() })
        }
        StepOutcome::Case2 { collapse, .. } => {
            let p = state.h.params().p();
            let update = case2_update(state.j, state.delta, state.n as u64, state.theta, p)
                .map_err(|e| format!("case 2 update: {e}"))?;
            row.numerics.insert(
                "update_residue".into(),
                case2_residue(state.j, state.delta, state.n as u64, state.theta, p, &update),
            );
            if !update.delta_increased {
                row.flags.push("case 2 update did not increase δ".into());
            }
            let embedding = collapse.compose(&state.embedding).map_err(|e| format!("embedding: {e}"))?;
            Ok(IterationState {
                h: collapse.h,
                n: update.n as u32,
                j: update.j,
                delta: update.delta,
                theta: state.theta,
                t: state.t + 1,
                embedding,
            })
        }
        other => Err(format!("{} does not advance the iteration", other.tag())),
    }
}

/// Reductions, then prop0_step with the matching update until the end
/// condition, a witness, a failed hypothesis, or the step budget.
pub fn run_iteration(f: &DensityFunction, j: usize, delta: f64, config: &IterationConfig) -> Result<IterationTrace> {
    config.validate()?;
    let params = f.params();
    check_inputs(params.size(), j, delta)?;
    let theta = expectation(f);
    if theta <= 0.0 {
        return Err(Error::InvalidArgument("𝔼(f) must be positive".into()));
    }
    let s = dft(f);
    let order = spectral_order(&s)?;
    let reduction = initial_reductions_with(&order, theta, j, delta, config)?;
    let mut run = Run {
        source: SupportSet::of(f),
        n: params.n(),
        config,
        rows: Vec::new(),
        witness: None,
        handoff: None,
    };
    let mut trace = IterationTrace {
        p: params.p(),
        n: params.n(),
        theta,
        j,
        delta,
        log_base: "natural".into(),
        config: config.clone(),
        reduction: reduction.clone(),
        step_budget: 0,
        rows: Vec::new(),
        terminal: TerminalReason::HypothesisFail,
        detail: String::new(),
        witness: None,
        handoff: None,
    };

    let (j1, delta1) = match reduction.reduction {
        Reduction::EarlyExit { exit } => {
            let state = IterationState::initial(f, j, delta);
            let mut row = check_invariants(&state, &order, None, &run.source, run.n, config);
            row.case = exit.tag().into();
            row.flags.extend(reduction.flags.iter().cloned());
            run.rows.push(row);
            match exit {
                EarlyExitKind::MeshulamRegime => run.witness = find_nontrivial_3ap(&run.source),
                EarlyExitKind::Prop30Regime => run.finish_with_handoff(&state, &order, HandoffPath::Smoothing),
                EarlyExitKind::Prop3Regime => {
                    run.finish_with_handoff(&state, &order, HandoffPath::for_rank(j, params.n()))
                }
            }
            trace.step_budget = 0;
            let (terminal, detail) = match run.witness {
                Some(_) => (TerminalReason::WitnessFound, format!("{} exit, progression located", exit.tag())),
                None => (TerminalReason::HypothesisFail, format!("{} exit, no progression at this size", exit.tag())),
            };
            trace.terminal = terminal;
            trace.detail = detail;
            trace.rows = run.rows;
            trace.witness = run.witness;
            trace.handoff = run.handoff;
            return Ok(trace);
        }
        Reduction::Reduced { j, delta, .. } => (j, delta),
    };

    let budget = config.step_budget.min(termination_budget(j1));
    trace.step_budget = budget;
    let mut state = IterationState::initial(f, j1, delta1);
    let mut spectrum = s;
    let mut order = order;
    let mut prev: Option<IterationState> = None;
    let (terminal, detail) = loop {
        let mut row = check_invariants(&state, &order, prev.as_ref(), &run.source, run.n, config);
        if state.t == 0 {
            row.flags.extend(reduction.flags.iter().cloned());
        }
        let end = if state.j < config.j0 {
            Some((TerminalReason::TerminatedJBelowJ0, format!("j = {} < j₀ = {}", state.j, config.j0)))
        } else if state.delta > 2.0 / 3.0 {
            Some((TerminalReason::TerminatedDeltaAbove2_3, format!("δ = {} > 2/3", state.delta)))
        } else {
            None
        };
        if let Some((reason, detail)) = end {
            row.case = reason.tag().into();
            run.rows.push(row);
            run.finish_with_handoff(&state, &order, HandoffPath::for_rank(state.j, state.n));
            break (reason, detail);
        }
        if state.t >= budget {
            row.case = TerminalReason::BudgetExhausted.tag().into();
            run.rows.push(row);
            break (TerminalReason::BudgetExhausted, format!("{budget} steps"));
        }

        let step = prop0_step_with(&state, &spectrum, &order, config);
        row.case = step.outcome.tag().into();
        row.flags.extend(step.flags);
        row.notes.extend(step.violations);
        row.numerics.extend(step.numerics.into_iter().map(|(k, v)| (format!("step_{k}"), v)));

        let next = match step.outcome {
            StepOutcome::WitnessFound { witness } => {
                let w = carry(&state.embedding, witness);
                if !w.verify(&run.source) {
                    row.notes.push(format!("step witness (m = {}, d = {}) is not a progression of S", w.m, w.d));
                }
                run.rows.push(row);
                run.witness = Some(w).filter(|w| w.verify(&run.source));
                break (TerminalReason::WitnessFound, format!("at step {}", state.t));
            }
            StepOutcome::HypothesisFail { clause } => {
                run.rows.push(row);
                break (TerminalReason::HypothesisFail, clause);
            }
            StepOutcome::TheoremViolation { reason } => {
                run.rows.push(row);
                break (TerminalReason::TheoremViolation, reason);
            }
            outcome => match advance(&state, outcome, &mut row) {
                Ok(next) => next,
                Err(detail) => {
                    run.rows.push(row);
                    break (TerminalReason::HypothesisFail, detail);
                }
            },
        };
        run.rows.push(row);
        spectrum = dft(&next.h);
        order = spectral_order(&spectrum)?;
        prev = Some(std::mem::replace(&mut state, next));
    };

    trace.terminal = terminal;
    trace.detail = detail;
    trace.rows = run.rows;
    trace.witness = run.witness;
    trace.handoff = run.handoff;
    Ok(trace)
}
