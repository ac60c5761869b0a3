use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::subspace::{span_indices, DirectSum, Subspace};
use crate::subspace::complement;

pub const DEFAULT_SAMPLER_BUDGET: usize = 10_000;

/// B = {a_{i₁} − a_{i₂}} ∪ {2a_{i₁} + a_{i₂}} over i₁ < i₂, sorted, without
/// repeats.
pub fn avoidance_set(params: FieldParams, points: &[usize]) -> Result<Vec<usize>> {
    for &a in points {
        params.check_index(a)?;
    }
    let mut out = Vec::with_capacity(points.len() * points.len());
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            out.push(params.sub_idx(a, b));
            out.push(params.axpy_idx(2, a, b));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// A uniformly random subspace of the given dimension: the span of `dim`
/// uniform vectors, redrawn until they are independent.
pub fn random_subspace<R: Rng + ?Sized>(params: FieldParams, dim: usize, rng: &mut R) -> Subspace {
    assert!(dim <= params.n() as usize, "dimension exceeds n");
    loop {
        let gens: Vec<usize> = (0..dim).map(|_| rng.random_range(0..params.size())).collect();
        let v = span_indices(params, &gens).expect("indices in range");
        if v.dim() == dim {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSubspace {
    #[serde(skip)]
    pub v: Option<Subspace>,
    pub basis: Vec<usize>,
    pub dim: usize,
    /// Draws rejected because they met B.
    pub retries: usize,
    pub avoidance_size: usize,
    /// j ≥ F^{1/8}: outside the range where success is guaranteed.
    pub outside_regime: bool,
}

impl SampledSubspace {
    pub fn subspace(&self) -> &Subspace {
        self.v.as_ref().expect("sampled subspace present")
    }
}

/// Rejection-sample V of dimension ⌊3n/4⌋ with B ∩ V = ∅.
pub fn random_avoiding_subspace<R: Rng + ?Sized>(
    params: FieldParams,
    points: &[usize],
    rng: &mut R,
    budget: usize,
) -> Result<SampledSubspace> {
    if params.n() < 4 {
        return Err(Error::InvalidArgument(format!("sampler needs n ≥ 4, got {}", params.n())));
    }
    let b = avoidance_set(params, points)?;
    if b.first() == Some(&0) {
        return Err(Error::Infeasible("0 ∈ B, so every subspace meets B".into()));
    }
    let dim = 3 * params.n() as usize / 4;
    let outside_regime = points.len() as f64 >= (params.size() as f64).powf(0.125);
    for retries in 0..budget {
        let v = random_subspace(params, dim, rng);
        if b.iter().all(|&x| !v.contains_idx(x)) {
            return Ok(SampledSubspace {
                basis: v.basis_indices(),
                dim,
                retries,
                avoidance_size: b.len(),
                outside_regime,
                v: Some(v),
            });
        }
    }
    Err(Error::BudgetExhausted { budget })
}

/// Coset coincidences among a_1 + V, …, a_j + V, −2a_1 + V, …, −2a_j + V.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetReport {
    /// The cosets a_i + V are pairwise distinct.
    pub translates_distinct: bool,
    /// All 2j cosets are pairwise distinct.
    pub all_distinct: bool,
    /// Pairs (i, k) of positions in the 2j-list whose cosets coincide.
    pub coincidences: Vec<(usize, usize)>,
}

pub fn coset_report(params: FieldParams, points: &[usize], v: &Subspace) -> Result<CosetReport> {
    params.check_same(&v.params())?;
    let split = DirectSum::new(v, &complement(v))?;
    let j = points.len();
    let reps: Vec<usize> = points
        .iter()
        .copied()
        .chain(points.iter().map(|&a| params.scale_idx(params.p() - 2, a)))
        .map(|x| split.split_idx(x).0)
        .collect();
    let mut coincidences = Vec::new();
    for i in 0..reps.len() {
        for k in i + 1..reps.len() {
            if reps[i] == reps[k] {
                coincidences.push((i, k));
            }
        }
    }
    let translates_distinct = !coincidences.iter().any(|&(i, k)| i < j && k < j);
    Ok(CosetReport { translates_distinct, all_distinct: coincidences.is_empty(), coincidences })
}
