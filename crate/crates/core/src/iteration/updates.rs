use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// B in the iteration step.
pub const STEP_B: usize = 50;

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("δ = {delta} must be positive")))
    }
}

/// ⌈j/50⌉.
pub fn case1_next_j(j: usize) -> usize {
    j.div_ceil(STEP_B)
}

/// j + 51 − ⌊(j/50)^{1/2}⌋.
pub fn case2_next_j(j: usize) -> usize {
    j + STEP_B + 1 - (j / STEP_B).isqrt()
}

/// (⌈j/50⌉, δ + ln 2 / ln ⌈j/50⌉), the solution of 2j′^{1/2+δ} = j′^{1/2+δ′}.
pub fn case1_update(j: usize, delta: f64) -> Result<(usize, f64)> {
    check_delta(delta)?;
    let next = case1_next_j(j);
    if next < 2 {
        return Err(Error::InvalidArgument(format!("⌈{j}/50⌉ = {next} < 2 leaves δ undefined")));
    }
    Ok((next, delta + std::f64::consts::LN_2 / (next as f64).ln()))
}

/// |ln(2 j′^{1/2+δ}) − ln(j′^{1/2+δ′})|.
pub fn case1_residue(next_j: usize, delta: f64, next_delta: f64) -> f64 {
    let lj = (next_j as f64).ln();
    (std::f64::consts::LN_2 + (0.5 + delta) * lj - (0.5 + next_delta) * lj).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case2Update {
    pub j: usize,
    pub delta: f64,
    pub n: u64,
    /// j′^{1/2+δ′}.
    pub exponent: f64,
    pub delta_increased: bool,
}

/// Solve θ^{j′^{1/2+δ′}} p^{n−1} = θ^{j^{1/2+δ}} p^n for δ′:
/// j′^{1/2+δ′} = j^{1/2+δ} − ln p / ln(1/θ).
pub fn case2_update(j: usize, delta: f64, n: u64, theta: f64, p: u32) -> Result<Case2Update> {
    check_delta(delta)?;
    if j == 0 || n == 0 {
        return Err(Error::InvalidArgument("j and n must be positive".into()));
    }
    if !(theta > 0.0 && theta < 1.0 / p as f64) {
        return Err(Error::InvalidArgument(format!("θ = {theta} must lie in (0, 1/p) for p = {p}")));
    }
    let next = case2_next_j(j);
    let exponent = (j as f64).powf(0.5 + delta) - (p as f64).ln() / (1.0 / theta).ln();
    if exponent <= 0.0 {
        return Err(Error::Infeasible(format!("j′^(1/2+δ′) = {exponent} has no solution")));
    }
    let next_delta = exponent.ln() / (next as f64).ln() - 0.5;
    Ok(Case2Update { j: next, delta: next_delta, n: n - 1, exponent, delta_increased: next_delta > delta })
}

/// Relative gap between the two sides of ln(θ^{j′^{1/2+δ′}} p^{n′}) = ln(θ^{j^{1/2+δ}} p^n),
/// with j′^{1/2+δ′} recomputed from δ′.
pub fn case2_residue(j: usize, delta: f64, n: u64, theta: f64, p: u32, next: &Case2Update) -> f64 {
    let (lt, lp) = (theta.ln(), (p as f64).ln());
    let rhs = (j as f64).powf(0.5 + delta) * lt + n as f64 * lp;
    let lhs = (next.j as f64).powf(0.5 + next.delta) * lt + next.n as f64 * lp;
    (lhs - rhs).abs() / rhs.abs().max(1.0)
}

/// ⌈20 j^{1/2} ln j⌉, at least 1.
pub fn termination_budget(j: usize) -> usize {
    let j = j as f64;
    ((20.0 * j.sqrt() * j.ln()).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcedCase {
    Case1,
    Case2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub j: usize,
    pub delta: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimEnd {
    JBelowJ0,
    DeltaAbove2_3,
    UpdateFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub start: SimState,
    pub last: SimState,
    pub steps: usize,
    pub budget: usize,
    pub end: Option<SimEnd>,
    pub case1_steps: usize,
    pub case2_steps: usize,
    /// Case-2 steps with j′ ≤ j where δ did not increase.
    pub case2_delta_drops: usize,
}

impl SimulationReport {
    /// Reached j < j₀ or δ > 2/3 within the budget.
    pub fn terminated(&self) -> bool {
        matches!(self.end, Some(SimEnd::JBelowJ0) | Some(SimEnd::DeltaAbove2_3))
    }
}

fn the_end(s: &SimState, j0: usize) -> Option<SimEnd> {
    if s.j < j0 {
        Some(SimEnd::JBelowJ0)
    } else if s.delta > 2.0 / 3.0 {
        Some(SimEnd::DeltaAbove2_3)
    } else {
        None
    }
}

/// Run the (j, δ, n) recurrences alone, with the case at step t chosen by
/// `next_case(t, state)`, for at most `budget` steps.
pub fn simulate<F>(start: SimState, theta: f64, p: u32, j0: usize, budget: usize, mut next_case: F) -> SimulationReport
where
    F: FnMut(usize, &SimState) -> ForcedCase,
{
    let mut report = SimulationReport {
        start,
        last: start,
        steps: 0,
        budget,
        end: None,
        case1_steps: 0,
        case2_steps: 0,
        case2_delta_drops: 0,
    };
    let mut s = start;
    loop {
        if let Some(end) = the_end(&s, j0) {
            report.end = Some(end);
            break;
        }
        if report.steps >= budget {
            break;
        }
        let step = report.steps;
        report.steps += 1;
        match next_case(step, &s) {
            ForcedCase::Case1 => {
                report.case1_steps += 1;
                let next_j = case1_next_j(s.j);
                if next_j < 2 {
                    // δ is undefined here; j alone ends the run.
                    s.j = next_j;
                    continue;
                }
                match case1_update(s.j, s.delta) {
                    Ok((j, delta)) => s = SimState { j, delta, n: s.n },
                    Err(e) => {
                        report.end = Some(SimEnd::UpdateFailed(e.to_string()));
                        break;
                    }
                }
            }
            ForcedCase::Case2 => {
                report.case2_steps += 1;
                match case2_update(s.j, s.delta, s.n, theta, p) {
                    Ok(u) => {
                        if u.j <= s.j && !u.delta_increased {
                            report.case2_delta_drops += 1;
                        }
                        s = SimState { j: u.j, delta: u.delta, n: u.n };
                        if s.delta <= 0.0 {
                            report.end = Some(SimEnd::UpdateFailed(format!("δ = {} left (0, ∞)", s.delta)));
                            break;
                        }
                    }
                    Err(e) => {
                        report.end = Some(SimEnd::UpdateFailed(e.to_string()));
                        break;
                    }
                }
            }
        }
    }
    report.last = s;
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalvingReport {
    pub start: usize,
    pub steps: usize,
    pub last: usize,
    pub halved: bool,
}

/// Apply the Case-2 j-update ⌊10 j^{1/2}⌋ times and report whether j fell
/// below half its starting value. Starts must exceed max(j₀, 130050).
pub fn halving_check(j: usize, j0: usize) -> Result<HalvingReport> {
    let floor = j0.max(50 * 51 * 51);
    if j <= floor {
        return Err(Error::InvalidArgument(format!("start j = {j} must exceed {floor}")));
    }
    let steps = (10.0 * (j as f64).sqrt()).floor() as usize;
    let mut cur = j;
    for _ in 0..steps {
        cur = case2_next_j(cur);
    }
    Ok(HalvingReport { start: j, steps, last: cur, halved: 2 * cur < j })
}
