use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use spectra_core::collapse::{
    avoidance_set, best_shift_x, error_decomposition, random_avoiding_subspace, random_subspace, slice_collapse,
    smooth_project, smoothing_branch, span_collapse, ErrorDecomposition, SampledSubspace, SpanCollapseReport,
};
use spectra_core::explore::{generate, stress_conjecture, ConjectureReport, GeneratorKind, GeneratorSpec, StressParams};
use spectra_core::formats::{function_from_json, FunctionFile, OrderFile, SpectrumFile};
use spectra_core::iteration::{run_iteration, BenignThreshold, IterationConfig, TerminalReason};
use spectra_core::progressions::{lambda_brute, lambda_spectral};
use spectra_core::spectrum::{decay_holds, log_theta_power, spectral_order};
use spectra_core::structure::{prop1_dichotomy, DichotomyOutcome, DichotomyReport};
use spectra_core::subspace::{complement_with_kind, span_indices, ComplementKind};
use spectra_core::transform::{dft, expectation, DensityFunction};
use spectra_core::verify::{identity_checks, run_suite, CheckResult};
use spectra_core::FieldParams;

use crate::output::{joined, value_rows, Sink};
use crate::{
    CollapseArgs, CollapseMode, Failure, GeneratorArgs, GeneratorChoice, HuntArgs, IterateArgs, LambdaMode,
    SampleArgs, SpectrumArgs, Threshold, VerifyArgs,
};

pub type Exit = Result<u8, Failure>;

/// Global field flags, checked against any input file.
#[derive(Clone, Copy)]
pub struct Field {
    pub p: Option<u32>,
    pub n: Option<u32>,
}

impl Field {
    fn check(&self, params: FieldParams) -> Result<(), Failure> {
        for (flag, given, actual) in [("p", self.p, params.p()), ("n", self.n, params.n())] {
            if given.is_some_and(|g| g != actual) {
                return Err(Failure::Invalid(format!("--{flag} {} disagrees with the input ({actual})", given.unwrap())));
            }
        }
        Ok(())
    }

    fn require(&self) -> Result<FieldParams, Failure> {
        match (self.p, self.n) {
            (Some(p), Some(n)) => Ok(FieldParams::new(p, n)?),
            _ => Err(Failure::Invalid("--p and --n are required".into())),
        }
    }

    fn or_default(&self, p: u32, n: u32) -> Result<FieldParams, Failure> {
        Ok(FieldParams::new(self.p.unwrap_or(p), self.n.unwrap_or(n))?)
    }
}

fn load_function(path: &Path, field: Field) -> Result<DensityFunction, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let f = function_from_json(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    field.check(f.params())?;
    Ok(f)
}

#[derive(Serialize)]
struct CoeffRow {
    index: usize,
    re: f64,
    im: f64,
    mag: f64,
}

pub fn dft_cmd(input: &Path, field: Field, sink: &Sink) -> Exit {
    let s = dft(&load_function(input, field)?);
    let rows = s.coeffs().iter().enumerate().map(|(index, z)| CoeffRow { index, re: z.re, im: z.im, mag: z.norm() });
    sink.emit(&SpectrumFile::from(&s), rows)?;
    Ok(0)
}

#[derive(Serialize)]
struct LambdaReport {
    brute: Option<f64>,
    spectral: Option<f64>,
    rel_diff: Option<f64>,
}

pub fn lambda_cmd(input: &Path, mode: LambdaMode, field: Field, sink: &Sink) -> Exit {
    let f = load_function(input, field)?;
    let brute = matches!(mode, LambdaMode::Brute | LambdaMode::Both).then(|| lambda_brute(&f));
    let spectral = match mode {
        LambdaMode::Spectral | LambdaMode::Both => Some(lambda_spectral(&dft(&f))?),
        LambdaMode::Brute => None,
    };
    let rel_diff = match (brute, spectral) {
        (Some(0.0), Some(s)) => Some(s.abs()),
        (Some(b), Some(s)) => Some((s - b).abs() / b.abs()),
        _ => None,
    };
    let report = LambdaReport { brute, spectral, rel_diff };
    sink.emit(&report, [&report])?;
    Ok(0)
}

#[derive(Serialize)]
struct DecayRow {
    rank: usize,
    point: usize,
    mag: f64,
    log_mag: Option<f64>,
    log_bound: Option<f64>,
    holds: Option<bool>,
}

#[derive(Serialize)]
struct SpectrumReport {
    p: u32,
    n: u32,
    theta: f64,
    delta: Option<f64>,
    #[serde(flatten)]
    order: OrderFile,
    violations: Vec<String>,
    decay: Vec<DecayRow>,
}

pub fn spectrum_cmd(args: &SpectrumArgs, field: Field, sink: &Sink) -> Exit {
    let f = load_function(&args.input, field)?;
    let order = spectral_order(&dft(&f))?;
    let theta = args.theta.unwrap_or_else(|| expectation(&f));
    let size = f.params().size() as f64;
    let top = args.top.unwrap_or(order.len()).min(order.len());
    let mut decay = Vec::with_capacity(top);
    for rank in 1..=top {
        let mag = order.mag_at(rank)?;
        let (log_bound, holds) = match args.delta {
            Some(delta) if theta > 0.0 => (
                Some(log_theta_power(theta, (rank as f64).powf(0.5 + delta), size)),
                Some(decay_holds(&order, rank, theta, delta)?),
            ),
            _ => (None, None),
        };
        let log_mag = (mag > 0.0).then(|| mag.ln());
        decay.push(DecayRow { rank, point: order.point_at(rank)?, mag, log_mag, log_bound, holds });
    }
    let report = SpectrumReport {
        p: f.params().p(),
        n: f.params().n(),
        theta,
        delta: args.delta,
        order: OrderFile::from(&order),
        violations: order.violations(),
        decay,
    };
    match sink.format {
        crate::output::Format::Json => sink.json(&report)?,
        crate::output::Format::Csv => sink.csv(&report.decay)?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct SliceReport {
    mode: &'static str,
    t: usize,
    x: usize,
    theta_before: f64,
    theta_after: f64,
    function: FunctionFile,
}

#[derive(Serialize)]
struct SmoothReport {
    mode: &'static str,
    v_basis: Vec<usize>,
    w_basis: Vec<usize>,
    branch: ComplementKind,
    decomposition: ErrorDecomposition,
    function: FunctionFile,
}

#[derive(Serialize)]
struct SpanReport {
    mode: &'static str,
    j: usize,
    report: SpanCollapseReport,
    function: FunctionFile,
}

pub fn collapse_cmd(args: &CollapseArgs, field: Field, seed: u64, sink: &Sink) -> Exit {
    let f = load_function(&args.input, field)?;
    let params = f.params();
    match args.mode {
        CollapseMode::Slice => {
            let t = args.t.ok_or_else(|| Failure::Invalid("slice needs --t".into()))?;
            let x = match args.x {
                Some(x) => x,
                None => best_shift_x(&f, t)?,
            };
            let c = slice_collapse(&f, t, x)?;
            let report = SliceReport {
                mode: "slice",
                t,
                x,
                theta_before: expectation(&f),
                theta_after: c.expectation(),
                function: FunctionFile::from(&c.h),
            };
            sink.emit(&report, value_rows(c.h.values()))?;
        }
        CollapseMode::Smooth => {
            let v = match (&args.basis, args.dim) {
                (Some(basis), _) => span_indices(params, basis)?,
                (None, Some(dim)) => {
                    if dim > params.n() as usize {
                        return Err(Failure::Invalid(format!("--dim {dim} exceeds n = {}", params.n())));
                    }
                    random_subspace(params, dim, &mut ChaCha8Rng::seed_from_u64(seed))
                }
                (None, None) => return Err(Failure::Invalid("smooth needs --basis or --dim".into())),
            };
            let (w, _) = complement_with_kind(&v);
            let g = smooth_project(&f, &v, &w)?;
            let order = spectral_order(&dft(&f))?;
            let decomposition = error_decomposition(&f, &g, &v, &w, args.j.unwrap_or(1), &order)?;
            let report = SmoothReport {
                mode: "smooth",
                v_basis: v.basis_indices(),
                w_basis: w.basis_indices(),
                branch: smoothing_branch(&v, &w),
                decomposition,
                function: FunctionFile::from(&g),
            };
            sink.emit(&report, value_rows(g.values()))?;
        }
        CollapseMode::Span => {
            let j = args.j.ok_or_else(|| Failure::Invalid("span needs --j".into()))?;
            let order = spectral_order(&dft(&f))?;
            let c = span_collapse(&f, &order, j)?;
            let report = SpanReport { mode: "span", j, report: c.report(), function: FunctionFile::from(&c.g) };
            sink.emit(&report, value_rows(c.g.values()))?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct SampleReport {
    p: u32,
    n: u32,
    points: Vec<usize>,
    avoidance_size: usize,
    draws: usize,
    /// Accepted samples over draws.
    acceptance: f64,
    /// 1 − |B|(|V| − 1)/(F − 1).
    union_bound: f64,
    samples: Vec<SampledSubspace>,
}

#[derive(Serialize)]
struct SampleRow {
    sample: usize,
    retries: usize,
    dim: usize,
    outside_regime: bool,
    basis: String,
}

pub fn sample_cmd(args: &SampleArgs, field: Field, seed: u64, sink: &Sink) -> Exit {
    let (params, points) = match (&args.points, &args.input) {
        (Some(points), None) => (field.require()?, points.clone()),
        (None, Some(input)) => {
            let f = load_function(input, field)?;
            let j = args.j.ok_or_else(|| Failure::Invalid("--input needs --j".into()))?;
            let order = spectral_order(&dft(&f))?;
            if j == 0 || j > order.len() {
                return Err(Failure::Invalid(format!("--j {j} must lie in 1..={}", order.len())));
            }
            (f.params(), order.perm()[..j].to_vec())
        }
        _ => return Err(Failure::Invalid("give exactly one of --points and --input".into())),
    };
    let b = avoidance_set(params, &points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(args.samples);
    for _ in 0..args.samples {
        samples.push(random_avoiding_subspace(params, &points, &mut rng, args.budget)?);
    }
    let draws: usize = samples.iter().map(|s| s.retries + 1).sum();
    let vsize = (params.p() as f64).powi((3 * params.n() / 4) as i32);
    let report = SampleReport {
        p: params.p(),
        n: params.n(),
        points,
        avoidance_size: b.len(),
        draws,
        acceptance: if draws == 0 { 0.0 } else { samples.len() as f64 / draws as f64 },
        union_bound: 1.0 - b.len() as f64 * (vsize - 1.0) / (params.size() as f64 - 1.0),
        samples,
    };
    let rows = report.samples.iter().enumerate().map(|(sample, s)| SampleRow {
        sample,
        retries: s.retries,
        dim: s.dim,
        outside_regime: s.outside_regime,
        basis: joined(&s.basis),
    });
    sink.emit(&report, rows)?;
    Ok(0)
}

pub fn dichotomy_cmd(input: &Path, ell: usize, b: usize, field: Field, sink: &Sink) -> Exit {
    let f = load_function(input, field)?;
    let outcome = prop1_dichotomy(&f, ell, b)?;
    let report: DichotomyReport = outcome.report();
    sink.emit(&report, [&report])?;
    Ok(match outcome {
        DichotomyOutcome::LambdaLarge { .. } | DichotomyOutcome::OverlapFound { .. } => 0,
        DichotomyOutcome::HypothesisFail { .. } => 3,
        DichotomyOutcome::TheoremViolation { .. } => 4,
    })
}

#[derive(Serialize)]
struct TraceRow {
    t: usize,
    case: String,
    j: usize,
    delta: f64,
    n: u32,
    inv0: bool,
    inv1: bool,
    inv2: bool,
    inv3: bool,
    inv4: bool,
    inv41: bool,
    inv5: bool,
    inv6: Option<bool>,
    flags: String,
    notes: String,
}

pub fn iterate_cmd(args: &IterateArgs, field: Field, seed: u64, sink: &Sink) -> Exit {
    let f = load_function(&args.input, field)?;
    let mut config = if args.desk { IterationConfig::desk() } else { IterationConfig::default() };
    if let Some(j0) = args.j0 {
        config.j0 = j0;
    }
    if let Some(big_j0) = args.big_j0 {
        config.big_j0 = big_j0;
    }
    if let Some(budget) = args.budget {
        config.step_budget = budget;
    }
    config.threshold = match args.threshold {
        Threshold::TwoSqrtF => BenignThreshold::TwoSqrtF,
        Threshold::TwoInvSqrtF => BenignThreshold::TwoInvSqrtF,
    };
    config.seed = seed;
    let trace = run_iteration(&f, args.j, args.delta, &config)?;
    match sink.format {
        crate::output::Format::Json => sink.text(&trace.to_jsonl())?,
        crate::output::Format::Csv => sink.csv(trace.rows.iter().map(|r| TraceRow {
            t: r.t,
            case: r.case.clone(),
            j: r.j,
            delta: r.delta,
            n: r.n,
            inv0: r.inv.inv0,
            inv1: r.inv.inv1,
            inv2: r.inv.inv2,
            inv3: r.inv.inv3,
            inv4: r.inv.inv4,
            inv41: r.inv.inv41,
            inv5: r.inv.inv5,
            inv6: r.inv.inv6,
            flags: joined(&r.flags),
            notes: joined(&r.notes),
        }))?,
    }
    if let Some(path) = &args.report {
        Sink { format: crate::output::Format::Json, out: Some(path.clone()) }.json(&trace)?;
    }
    eprintln!("terminal: {} ({})", trace.terminal.tag(), trace.detail);
    Ok(if trace.has_violation() {
        4
    } else if matches!(trace.terminal, TerminalReason::HypothesisFail | TerminalReason::BudgetExhausted) {
        3
    } else {
        0
    })
}

fn generator_kind(args: &GeneratorArgs) -> Result<GeneratorKind, Failure> {
    Ok(match args.kind {
        GeneratorChoice::Bernoulli => GeneratorKind::Bernoulli {
            theta: args.theta.ok_or_else(|| Failure::Invalid("bernoulli needs --theta".into()))?,
        },
        GeneratorChoice::SubspaceUnion => GeneratorKind::SubspaceUnion {
            dims: args.dims.clone().ok_or_else(|| Failure::Invalid("subspace-union needs --dims".into()))?,
        },
        GeneratorChoice::CosetUnion => GeneratorKind::CosetUnion {
            dim: args.dim.ok_or_else(|| Failure::Invalid("coset-union needs --dim".into()))?,
            cosets: args.cosets.ok_or_else(|| Failure::Invalid("coset-union needs --cosets".into()))?,
        },
        GeneratorChoice::Planted3apFree => GeneratorKind::Planted3apFree { theta: args.theta, shuffle: args.shuffle },
    })
}

pub fn generate_cmd(args: &GeneratorArgs, field: Field, seed: u64, sink: &Sink) -> Exit {
    let params = field.require()?;
    let spec = GeneratorSpec { p: params.p(), n: params.n(), seed, kind: generator_kind(args)? };
    let f = generate(&spec)?;
    sink.emit(&FunctionFile::from(&f), value_rows(f.values()))?;
    Ok(0)
}

#[derive(Serialize)]
struct HuntRow<'a> {
    conjecture: &'a str,
    trial: usize,
    seed: u64,
    p: u32,
    n: u32,
    j: usize,
    c: f64,
    c2: f64,
    delta: f64,
    theta: f64,
    support_size: usize,
    mag: f64,
    decay_holds: bool,
    ap_free: bool,
    regime_ok: bool,
    verdict: &'a str,
}

pub fn hunt_cmd(args: &HuntArgs, field: Field, seed: u64, sink: &Sink) -> Exit {
    let params = field.require()?;
    let stress = StressParams {
        p: params.p(),
        n: params.n(),
        c: args.c,
        c2: args.c2,
        delta: args.delta,
        big_j0: args.big_j0,
        j_grid: args.j_grid.clone(),
        generator: generator_kind(&args.generator)?,
    };
    let reports: Vec<ConjectureReport> = stress_conjecture(args.conjecture.into(), &stress, args.trials, seed)?;
    let rows = reports.iter().map(|r| HuntRow {
        conjecture: match r.conjecture {
            spectra_core::explore::Conjecture::C1 => "C1",
            spectra_core::explore::Conjecture::C2 => "C2",
        },
        trial: r.trial,
        seed: r.seed,
        p: r.p,
        n: r.n,
        j: r.j,
        c: r.c,
        c2: r.c2,
        delta: r.delta,
        theta: r.theta,
        support_size: r.support_size,
        mag: r.mag,
        decay_holds: r.decay_holds,
        ap_free: r.ap_free,
        regime_ok: r.regime_ok,
        verdict: match r.verdict {
            spectra_core::explore::Verdict::Consistent => "consistent",
            spectra_core::explore::Verdict::CounterexampleCandidate => "counterexample_candidate",
        },
    });
    sink.emit(&reports, rows)?;
    Ok(0)
}

pub fn verify_cmd(args: &VerifyArgs, field: Field, seed: u64, sink: &Sink) -> Exit {
    let suite = args.suite.into();
    let mut results: Vec<CheckResult> = run_suite(suite);
    if matches!(suite, spectra_core::verify::Suite::Identities | spectra_core::verify::Suite::All) {
        let params = field.or_default(3, 4)?;
        results.extend(identity_checks(params.p(), params.n(), seed, args.trials)?);
    }
    for r in &results {
        eprintln!("{}", r.line());
    }
    sink.emit(&results, &results)?;
    Ok(if results.iter().all(|r| r.pass) { 0 } else { 4 })
}
