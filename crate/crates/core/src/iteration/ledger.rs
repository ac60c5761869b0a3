use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{IterationConfig, IterationState};
use crate::progressions::{find_nontrivial_3ap, ProgressionWitness, SupportSet};
use crate::spectrum::{below_theta_power, log_theta_power, SpectralOrder};
use crate::transform::expectation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantChecks {
    pub inv0: bool,
    pub inv1: bool,
    pub inv2: bool,
    pub inv3: bool,
    pub inv4: bool,
    pub inv41: bool,
    pub inv5: bool,
    /// `None` on the first row, or when a rank below 2 leaves ln ln j undefined.
    pub inv6: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: usize,
    pub case: String,
    pub j: usize,
    pub delta: f64,
    pub n: u32,
    pub inv: InvariantChecks,
    pub numerics: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// A progression of support(h_t), carried into the original space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<ProgressionWitness>,
}

/// |ĥ(b_r)|, with ranks beyond the space read as 0.
pub(crate) fn mag_or_zero(order: &SpectralOrder, rank: usize) -> f64 {
    if rank == 0 {
        return f64::INFINITY;
    }
    order.mags().get(rank - 1).copied().unwrap_or(0.0)
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Evaluate inv0…inv6 on `state`, whose function has spectral order `order`.
/// `source` is the support of the original function.
pub fn check_invariants(
    state: &IterationState,
    order: &SpectralOrder,
    prev: Option<&IterationState>,
    source: &SupportSet,
    original_n: u32,
    config: &IterationConfig,
) -> LedgerRow {
    let mut numerics = BTreeMap::new();
    let mut flags = Vec::new();
    let mut notes = Vec::new();
    let size = state.h.params().size() as f64;
    let theta = state.theta;
    let exponent = (state.j as f64).powf(0.5 + state.delta);

    // inv0: |ĥ(b_j)| < θ^{j^{1/2+δ}} p^n.
    let mag_j = mag_or_zero(order, state.j);
    if state.j > order.len() {
        flags.push(format!("rank j = {} exceeds p^n = {}", state.j, order.len()));
    }
    let bound_log = log_theta_power(theta, exponent, size);
    let inv0 = below_theta_power(mag_j, theta, exponent, size);
    numerics.insert("inv0_mag".into(), mag_j);
    numerics.insert("inv0_log_mag".into(), ln_or_neg_inf(mag_j));
    numerics.insert("inv0_log_bound".into(), bound_log);

    // inv1: θ^{j^{1/2+δ}} p^n > T and |ĥ(b_{j−1})| ≥ T.
    let threshold = config.threshold.value(size);
    let mag_prev = if state.j >= 2 { mag_or_zero(order, state.j - 1) } else { 0.0 };
    let inv1 = bound_log > threshold.ln() && state.j >= 2 && mag_prev >= threshold;
    numerics.insert("inv1_threshold".into(), threshold);
    numerics.insert("inv1_mag_prev".into(), mag_prev);

    // inv2: 𝔼(h) ≥ θ.
    let mean = expectation(&state.h);
    let inv2 = mean >= theta * (1.0 - 1e-12);
    numerics.insert("theta".into(), theta);
    numerics.insert("inv2_mean".into(), mean);

    // inv3, constructively.
    let witness = find_nontrivial_3ap(&SupportSet::of(&state.h)).map(|w| ProgressionWitness {
        m: state.embedding.point_idx(w.m),
        d: state.embedding.linear_idx(w.d),
    });
    let inv3 = match witness {
        Some(w) => {
            let ok = w.verify(source);
            if !ok {
                notes.push(format!("transported witness (m = {}, d = {}) is not a progression of S", w.m, w.d));
            }
            ok
        }
        None => {
            flags.push("inv3 vacuous: support(h) is progression-free".into());
            true
        }
    };

    let inv4 = state.j > config.j0;
    let inv41 = state.delta <= 2.0 / 3.0;
    let inv5 = 100 * state.n as u64 > 99 * original_n as u64;

    let inv6 = prev.and_then(|p| {
        if p.j < 2 || state.j < 2 {
            return None;
        }
        let ratio = (0.5 + state.delta) / (0.5 + p.delta);
        let rhs = 1.0 + ((p.j as f64).ln().ln() - (state.j as f64).ln().ln()) / 10.0;
        numerics.insert("inv6_ratio".into(), ratio);
        numerics.insert("inv6_rhs".into(), rhs);
        Some(ratio >= rhs)
    });

    LedgerRow {
        t: state.t,
        case: String::new(),
        j: state.j,
        delta: state.delta,
        n: state.n,
        inv: InvariantChecks { inv0, inv1, inv2, inv3, inv4, inv41, inv5, inv6 },
        numerics,
        flags,
        notes,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldParams;
    use crate::iteration::case1_update;
    use crate::spectrum::spectral_order;
    use crate::transform::{dft, DensityFunction};

    fn setup() -> (DensityFunction, SupportSet) {
        let f = FieldParams::new(3, 4).unwrap();
        let members: Vec<usize> = (0..81).filter(|m| m % 7 == 0 || m % 11 == 3).collect();
        let g = DensityFunction::indicator(f, &members).unwrap();
        let s = SupportSet::of(&g);
        (g, s)
    }

    #[test]
    fn initial_state() {
        let (g, s) = setup();
        let state = IterationState::initial(&g, 12, 0.3);
        let order = spectral_order(&dft(&g)).unwrap();
        let row = check_invariants(&state, &order, None, &s, 4, &IterationConfig::default());
        assert!(row.inv.inv2);
        assert!(row.inv.inv5);
        assert!(row.inv.inv3);
        assert_eq!(row.inv.inv6, None);
        assert!(!row.inv.inv4);
        assert!(row.witness.unwrap().verify(&s));
    }

    #[test]
    fn inv6_matches_explicit_ratio() {
        let (g, s) = setup();
        let prev = IterationState { j: 2500, delta: 0.1, ..IterationState::initial(&g, 2500, 0.1) };
        let (j, delta) = case1_update(2500, 0.1).unwrap();
        let next = IterationState { j, delta, t: 1, ..prev.clone() };
        let order = spectral_order(&dft(&g)).unwrap();
        let row = check_invariants(&next, &order, Some(&prev), &s, 4, &IterationConfig::default());
        let explicit = (0.5 + delta) / 0.6 >= 1.0 + (2500f64.ln().ln() - 50f64.ln().ln()) / 10.0;
        assert_eq!(row.inv.inv6, Some(explicit));
        assert_eq!(row.inv.inv6, Some(true));
    }

    #[test]
    fn inv5_fails_below_99_percent() {
        let (g, s) = setup();
        let order = spectral_order(&dft(&g)).unwrap();
        let n = 200u32;
        let state = IterationState { n: (0.98 * n as f64).floor() as u32, ..IterationState::initial(&g, 3, 0.3) };
        let row = check_invariants(&state, &order, None, &s, n, &IterationConfig::default());
        assert!(!row.inv.inv5);
        let state = IterationState { n: 199, ..state };
        assert!(check_invariants(&state, &order, None, &s, n, &IterationConfig::default()).inv.inv5);
    }

    #[test]
    fn progression_free_support_is_vacuous() {
        let f = FieldParams::new(3, 2).unwrap();
        let g = DensityFunction::indicator(f, &[0, 1, 3, 4]).unwrap();
        let s = SupportSet::of(&g);
        let order = spectral_order(&dft(&g)).unwrap();
        let row = check_invariants(&IterationState::initial(&g, 3, 0.2), &order, None, &s, 2, &IterationConfig::default());
        assert!(row.inv.inv3);
        assert!(row.witness.is_none());
    }
}
