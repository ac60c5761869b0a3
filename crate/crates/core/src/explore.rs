//! Instance generators, exhaustive cap-set search, and the conjecture
//! stress harness.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::random_subspace;
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::progressions::{count_3aps, is_3ap_free, SupportSet};
use crate::spectrum::{below_theta_power, below_theta_power_precise, spectral_order, DecayExponent};
use crate::subspace::DirectSum;
use crate::transform::{dft, expectation, DensityFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Each point independently with probability θ.
    Bernoulli { theta: f64 },
    /// Union of random subspaces of the given dimensions.
    SubspaceUnion { dims: Vec<usize> },
    /// Union of `cosets` distinct cosets of one random subspace.
    CosetUnion { dim: usize, cosets: usize },
    /// Greedy insertion keeping the set progression-free, in index order or
    /// a seeded shuffle of it, stopped at ⌈θF⌉ points when θ is given.
    Planted3apFree {
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        shuffle: bool,
    },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub p: u32,
    pub n: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

/// A uniformly random density with values in [0, 1].
pub fn random_density<R: Rng + ?Sized>(params: FieldParams, rng: &mut R) -> DensityFunction {
    DensityFunction::new(params, (0..params.size()).map(|_| rng.random::<f64>()).collect()).expect("values in [0, 1]")
}

/// Whether adding x to S creates a progression with two points of S.
fn closes_progression(params: FieldParams, mask: &[bool], members: &[usize], x: usize) -> bool {
    let half = params.p().div_ceil(2);
    members.iter().any(|&a| {
        mask[params.sub_idx(params.scale_idx(2, a), x)]
            || mask[params.sub_idx(params.scale_idx(2, x), a)]
            || mask[params.scale_idx(half, params.add_idx(a, x))]
    })
}

/// Greedy progression-free set over `order`, stopping at `limit` points.
pub fn greedy_3ap_free(params: FieldParams, order: &[usize], limit: usize) -> Vec<usize> {
    let mut mask = vec![false; params.size()];
    let mut members = Vec::new();
    for &x in order {
        if members.len() >= limit {
            break;
        }
        if !mask[x] && !closes_progression(params, &mask, &members, x) {
            mask[x] = true;
            members.push(x);
        }
    }
    members.sort_unstable();
    members
}

pub fn generate(spec: &GeneratorSpec) -> Result<DensityFunction> {
    let params = FieldParams::new(spec.p, spec.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match &spec.kind {
        GeneratorKind::Bernoulli { theta } => {
            if !(0.0..=1.0).contains(theta) {
                return Err(Error::InvalidArgument(format!("θ = {theta} must lie in [0, 1]")));
            }
            let members: Vec<usize> = (0..params.size()).filter(|_| rng.random_bool(*theta)).collect();
            DensityFunction::indicator(params, &members)
        }
        GeneratorKind::SubspaceUnion { dims } => {
            let mut mask = vec![false; params.size()];
            for &d in dims {
                if d > params.n() as usize {
                    return Err(Error::InvalidArgument(format!("subspace dimension {d} exceeds n")));
                }
                for m in random_subspace(params, d, &mut rng).members() {
                    mask[m] = true;
                }
            }
            let members: Vec<usize> = (0..params.size()).filter(|&m| mask[m]).collect();
            DensityFunction::indicator(params, &members)
        }
        GeneratorKind::CosetUnion { dim, cosets } => {
            if *dim > params.n() as usize {
                return Err(Error::InvalidArgument(format!("subspace dimension {dim} exceeds n")));
            }
            let v = random_subspace(params, *dim, &mut rng);
            let available = params.size() / v.size();
            if *cosets > available {
                return Err(Error::Infeasible(format!("{cosets} cosets requested, only {available} exist")));
            }
            let split = DirectSum::new(&v, &crate::subspace::complement(&v))?;
            let mut reps: Vec<usize> = (0..params.size()).filter(|&m| split.split_idx(m).1 == 0).collect();
            reps.shuffle(&mut rng);
            let mut members: Vec<usize> = reps[..*cosets]
                .iter()
                .flat_map(|&r| v.members().into_iter().map(move |m| (r, m)))
                .map(|(r, m)| params.add_idx(r, m))
                .collect();
            members.sort_unstable();
            DensityFunction::indicator(params, &members)
        }
        GeneratorKind::Planted3apFree { theta, shuffle } => {
            let mut order: Vec<usize> = (0..params.size()).collect();
            if *shuffle {
                order.shuffle(&mut rng);
            }
            let limit = match theta {
                Some(t) if !(0.0..=1.0).contains(t) => {
                    return Err(Error::InvalidArgument(format!("θ = {t} must lie in [0, 1]")));
                }
                Some(t) => (t * params.size() as f64).ceil() as usize,
                None => params.size(),
            };
            let members = greedy_3ap_free(params, &order, limit);
            if theta.is_some() && members.len() < limit {
                return Err(Error::Infeasible(format!(
                    "greedy progression-free set stops at {} points, {limit} requested",
                    members.len()
                )));
            }
            DensityFunction::indicator(params, &members)
        }
        GeneratorKind::Explicit { values } => DensityFunction::new(params, values.clone()),
    }
}

/// The density the generator aims for and the standard deviation of the
/// empirical mean, for the random kinds.
pub fn target_density(spec: &GeneratorSpec) -> Option<(f64, f64)> {
    match spec.kind {
        GeneratorKind::Bernoulli { theta } => {
            let size = (spec.p as f64).powi(spec.n as i32);
            Some((theta, (theta * (1.0 - theta) / size).sqrt()))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapSearch {
    pub max_size: usize,
    /// Number of progression-free sets of maximum size.
    pub maximizers: usize,
    pub example: Vec<usize>,
    pub subsets_checked: u64,
}

/// Exhaustive search over all subsets; F ≤ 25.
pub fn max_3ap_free_exhaustive(params: FieldParams) -> Result<CapSearch> {
    let size = params.size();
    if size > 25 {
        return Err(Error::InvalidArgument(format!("exhaustive search needs F ≤ 25, got {size}")));
    }
    // Every nontrivial progression as a bitmask of its (distinct) terms.
    let mut lines: Vec<u32> = Vec::new();
    for m in 0..size {
        for d in 1..size {
            let b = params.add_idx(m, d);
            let c = params.add_idx(b, d);
            lines.push((1 << m) | (1 << b) | (1 << c));
        }
    }
    lines.sort_unstable();
    lines.dedup();
    let total = 1u64 << size;
    let mut best = CapSearch { max_size: 0, maximizers: 0, example: Vec::new(), subsets_checked: total };
    for mask in 0..total {
        let mask = mask as u32;
        let ones = mask.count_ones() as usize;
        if ones < best.max_size || lines.iter().any(|&line| line & !mask == 0) {
            continue;
        }
        if ones > best.max_size {
            best.max_size = ones;
            best.maximizers = 0;
            best.example = (0..size).filter(|&i| mask >> i & 1 == 1).collect();
        }
        best.maximizers += 1;
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conjecture {
    /// |f̂(a_j)| < θ^{j^δ} F with θ > F^{−c}.
    C1,
    /// |f̂(a_j)| < θ^{c₂ ln j} F with θ > F^{−c₁}.
    C2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressParams {
    pub p: u32,
    pub n: u32,
    /// c for C1, c₁ for C2.
    pub c: f64,
    pub c2: f64,
    pub delta: f64,
    /// Ranks must satisfy J₀ < j < F^{1/8}.
    pub big_j0: usize,
    pub j_grid: Vec<usize>,
    pub generator: GeneratorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    CounterexampleCandidate,
}

pub const SMALL_N_DISCLAIMER: &str =
    "finite-n instances cannot refute a statement about sufficiently large n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub conjecture: Conjecture,
    pub trial: usize,
    pub seed: u64,
    pub c: f64,
    pub c2: f64,
    pub delta: f64,
    pub p: u32,
    pub n: u32,
    pub j: usize,
    pub theta: f64,
    pub support_size: usize,
    pub mag: f64,
    pub decay_holds: bool,
    pub ap_free: bool,
    pub regime_ok: bool,
    pub verdict: Verdict,
    pub disclaimer: String,
}

/// Seed of trial i: the first word of the ChaCha8 stream i under the master seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

fn exponent(which: Conjecture, params: &StressParams) -> DecayExponent {
    match which {
        Conjecture::C1 => DecayExponent::PowerOfRank { power: params.delta },
        Conjecture::C2 => DecayExponent::LogOfRank { coeff: params.c2 },
    }
}

/// One report per rank of the grid for the indicator-like function f.
pub fn evaluate_conjecture(
    which: Conjecture,
    params: &StressParams,
    f: &DensityFunction,
    trial: usize,
    seed: u64,
) -> Result<Vec<ConjectureReport>> {
    let fp = f.params();
    let size = fp.size() as f64;
    let theta = expectation(f);
    let support = SupportSet::of(f);
    let order = spectral_order(&dft(f))?;
    let ap_free = is_3ap_free(&support);
    let e = exponent(which, params);
    let mut out = Vec::with_capacity(params.j_grid.len());
    for &j in &params.j_grid {
        if j == 0 || j > fp.size() {
            return Err(Error::RankOutOfRange { rank: j, max: fp.size() });
        }
        let mag = order.mag_at(j)?;
        let decay_holds = theta > 0.0 && below_theta_power(mag, theta, e.value(j), size);
        let regime_ok = theta > 0.0
            && theta.ln() > -params.c * size.ln()
            && j > params.big_j0
            && (j as f64).ln() < size.ln() / 8.0;
        let mut verdict = Verdict::Consistent;
        if decay_holds && ap_free && regime_ok {
            // Re-verify: only trivial progressions, and decay at 256 bits.
            let trivial_only = count_3aps(&support)? == support.len() as u64;
            if trivial_only && below_theta_power_precise(mag, theta, j, e, size) {
                verdict = Verdict::CounterexampleCandidate;
            }
        }
        out.push(ConjectureReport {
            conjecture: which,
            trial,
            seed,
            c: params.c,
            c2: params.c2,
            delta: params.delta,
            p: fp.p(),
            n: fp.n(),
            j,
            theta,
            support_size: support.len(),
            mag,
            decay_holds,
            ap_free,
            regime_ok,
            verdict,
            disclaimer: SMALL_N_DISCLAIMER.into(),
        });
    }
    Ok(out)
}

/// Rayon pool sized by SPECTRA_THREADS when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SPECTRA_THREADS") {
        let threads: usize =
            v.parse().map_err(|_| Error::InvalidArgument(format!("SPECTRA_THREADS = {v:?} is not a count")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Generate `trials` instances and evaluate the conjecture on each, in
/// trial order regardless of thread count.
pub fn stress_conjecture(
    which: Conjecture,
    params: &StressParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<ConjectureReport>> {
    if params.p < 3 {
        return Err(Error::InvalidArgument("p ≥ 3 required".into()));
    }
    let pool = thread_pool()?;
    let per_trial: Vec<Result<Vec<ConjectureReport>>> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                let s = trial_seed(seed, trial);
                let spec = GeneratorSpec { p: params.p, n: params.n, seed: s, kind: params.generator.clone() };
                let f = generate(&spec)?;
                evaluate_conjecture(which, params, &f, trial, s)
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}
