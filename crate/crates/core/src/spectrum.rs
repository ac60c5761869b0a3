//! Magnitude ordering a₁, a₂, … of a spectrum with conjugate pairs kept
//! adjacent, decay predicates on it, and large-spectrum sets.
//!
//! Ranks are 1-based throughout this module, matching the usual a₁ = 0
//! convention; `perm[rank - 1]` is the point of that rank.

use std::cmp::Ordering;

use astro_float::{BigFloat, Consts, RoundingMode};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::transform::Spectrum;

/// Relative grid used to snap magnitudes before sorting.
pub const MAGNITUDE_GRID: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralOrder {
    #[serde(skip_serializing, default = "placeholder_params")]
    params: FieldParams,
    perm: Vec<usize>,
    mags: Vec<f64>,
    #[serde(skip)]
    rank_of: Vec<usize>,
}

fn placeholder_params() -> FieldParams {
    FieldParams::new(3, 1).expect("valid")
}

impl SpectralOrder {
    /// Rebuild an order from stored parts, checking the permutation.
    pub fn from_parts(params: FieldParams, perm: Vec<usize>, mags: Vec<f64>) -> Result<Self> {
        let size = params.size();
        if perm.len() != size || mags.len() != size {
            return Err(Error::LengthMismatch { expected: size, found: perm.len().min(mags.len()) });
        }
        let mut rank_of = vec![usize::MAX; size];
        for (k, &a) in perm.iter().enumerate() {
            params.check_index(a)?;
            if rank_of[a] != usize::MAX {
                return Err(Error::Format(format!("index {a} repeated in permutation")));
            }
            rank_of[a] = k + 1;
        }
        Ok(SpectralOrder { params, perm, mags, rank_of })
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn mags(&self) -> &[f64] {
        &self.mags
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if rank >= 1 && rank <= self.perm.len() {
            Ok(())
        } else {
            Err(Error::RankOutOfRange { rank, max: self.perm.len() })
        }
    }

    /// a_rank as a canonical index.
    pub fn point_at(&self, rank: usize) -> Result<usize> {
        self.check_rank(rank)?;
        Ok(self.perm[rank - 1])
    }

    /// |f̂(a_rank)|.
    pub fn mag_at(&self, rank: usize) -> Result<f64> {
        self.check_rank(rank)?;
        Ok(self.mags[rank - 1])
    }

    /// The rank of a point, i.e. the k with a_k = index.
    pub fn rank_of(&self, index: usize) -> usize {
        self.rank_of[index]
    }

    /// Check the ordering contract: a₁ = 0, magnitudes non-increasing,
    /// conjugate pairs adjacent, and every index present once. Returns a
    /// description of each violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.perm.first() != Some(&0) {
            out.push("a_1 is not 0".to_string());
        }
        for k in 1..self.mags.len() {
            if self.mags[k] > self.mags[k - 1] {
                out.push(format!("magnitude increases at rank {}", k + 1));
            }
        }
        let mut k = 1;
        while k + 1 < self.perm.len() {
            if self.perm[k + 1] != self.params.neg_idx(self.perm[k]) {
                out.push(format!("ranks {} and {} are not a conjugate pair", k + 1, k + 2));
            }
            if self.mags[k] != self.mags[k + 1] {
                out.push(format!("pair at rank {} has split magnitudes", k + 1));
            }
            k += 2;
        }
        let mut seen = vec![false; self.perm.len()];
        for &a in &self.perm {
            if a >= seen.len() || std::mem::replace(&mut seen[a], true) {
                out.push(format!("index {a} missing or repeated"));
            }
        }
        out
    }
}

/// Order a spectrum of a real nonnegative function.
///
/// Each pair {a, −a} (a ≠ 0) gets one magnitude, computed once from the
/// smaller index and snapped to a grid of `MAGNITUDE_GRID · max(f̂(0), 1)`,
/// so floating noise can neither split a pair nor reorder exact ties.
/// Groups sort by (magnitude desc, smaller index asc); 0 comes first and
/// within a pair the smaller index comes first.
pub fn spectral_order(s: &Spectrum) -> Result<SpectralOrder> {
    let params = s.params();
    let size = params.size();
    let head = s.at(0);
    let scale = head.re.abs().max(1.0);
    let tol = 1e-9 * scale;
    if head.re < -tol || head.im.abs() > tol {
        return Err(Error::NotNonnegativeSource(format!("f̂(0) = {head} is not a nonnegative real")));
    }
    let grid = MAGNITUDE_GRID * scale;
    let snap = |x: f64| (x / grid).round();

    let mut groups: Vec<(f64, usize, usize)> = Vec::with_capacity(size / 2);
    for a in 1..size {
        let neg = params.neg_idx(a);
        if neg < a {
            continue;
        }
        let mag = s.at(a).norm();
        if mag > head.re + tol {
            return Err(Error::NotNonnegativeSource(format!(
                "|f̂({a})| = {mag} exceeds f̂(0) = {}",
                head.re
            )));
        }
        groups.push((snap(mag), a, neg));
    }
    groups.sort_by(|x, y| {
        y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal).then_with(|| x.1.cmp(&y.1))
    });

    let mut perm = Vec::with_capacity(size);
    let mut mags = Vec::with_capacity(size);
    perm.push(0);
    mags.push(snap(head.re.max(0.0)) * grid);
    for (q, a, neg) in groups {
        let mag = (q * grid).min(*mags.last().expect("nonempty"));
        perm.extend([a, neg]);
        mags.extend([mag, mag]);
    }
    SpectralOrder::from_parts(params, perm, mags)
}

/// The exponent E(j) in a decay condition |f̂(a_j)| < θ^{E(j)} F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DecayExponent {
    /// E(j) = j^power; power = 1/2 + δ for the main decay condition.
    PowerOfRank { power: f64 },
    /// E(j) = coeff · ln j.
    LogOfRank { coeff: f64 },
}

impl DecayExponent {
    pub fn main(delta: f64) -> Self {
        DecayExponent::PowerOfRank { power: 0.5 + delta }
    }

    pub fn value(&self, j: usize) -> f64 {
        match *self {
            DecayExponent::PowerOfRank { power } => (j as f64).powf(power),
            DecayExponent::LogOfRank { coeff } => coeff * (j as f64).ln(),
        }
    }
}

/// ln(θ^E · scale), with ln 0 = −∞.
pub fn log_theta_power(theta: f64, exponent: f64, scale: f64) -> f64 {
    exponent * theta.ln() + scale.ln()
}

/// Log-domain comparison `mag < θ^E · scale`; a zero magnitude always passes.
pub fn below_theta_power(mag: f64, theta: f64, exponent: f64, scale: f64) -> bool {
    if mag <= 0.0 {
        return true;
    }
    mag.ln() < log_theta_power(theta, exponent, scale)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("θ = {theta} must be positive")))
    }
}

/// |f̂(a_j)| < θ^{E(j)} F.
pub fn decay_holds_with(
    order: &SpectralOrder,
    j: usize,
    theta: f64,
    exponent: DecayExponent,
) -> Result<bool> {
    check_theta(theta)?;
    let mag = order.mag_at(j)?;
    Ok(below_theta_power(mag, theta, exponent.value(j), order.params().size() as f64))
}

/// The main decay condition |f̂(a_j)| < θ^{j^{1/2+δ}} F.
pub fn decay_holds(order: &SpectralOrder, j: usize, theta: f64, delta: f64) -> Result<bool> {
    decay_holds_with(order, j, theta, DecayExponent::main(delta))
}

/// Precision, in bits, of the independent decay check.
pub const PRECISE_BITS: usize = 256;

/// `mag < θ^{E(j)} · scale` evaluated in 256-bit arithmetic, with the f64
/// inputs taken as exact binary values.
pub fn below_theta_power_precise(
    mag: f64,
    theta: f64,
    j: usize,
    exponent: DecayExponent,
    scale: f64,
) -> bool {
    if mag <= 0.0 {
        return true;
    }
    let bits = PRECISE_BITS;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("constants cache");
    let jb = BigFloat::from_f64(j as f64, bits);
    let exp_big = match exponent {
        DecayExponent::PowerOfRank { power } => {
            jb.pow(&BigFloat::from_f64(power, bits), bits, rm, &mut cc)
        }
        DecayExponent::LogOfRank { coeff } => {
            BigFloat::from_f64(coeff, bits).mul(&jb.ln(bits, rm, &mut cc), bits, rm)
        }
    };
    let rhs = BigFloat::from_f64(theta, bits)
        .pow(&exp_big, bits, rm, &mut cc)
        .mul(&BigFloat::from_f64(scale, bits), bits, rm);
    matches!(BigFloat::from_f64(mag, bits).cmp(&rhs), Some(c) if c < 0)
}

/// The rank j′ < j with |f̂(a_{j′−1})| ≥ threshold > |f̂(a_{j′})|. Magnitudes
/// are non-increasing, so the crossing is unique. `None` means no index
/// below j falls under the threshold, or a₁ itself is already below it.
pub fn benign_index_with(order: &SpectralOrder, j: usize, threshold: f64) -> Option<usize> {
    let mags = order.mags();
    if mags.is_empty() || mags[0] < threshold {
        return None;
    }
    let limit = j.min(mags.len() + 1);
    (2..limit).find(|&r| mags[r - 2] >= threshold && mags[r - 1] < threshold)
}

/// The benign index at the 2√F threshold.
pub fn benign_index(order: &SpectralOrder, j: usize) -> Option<usize> {
    benign_index_with(order, j, 2.0 * (order.params().size() as f64).sqrt())
}

/// R = {a₁, …, a_ℓ} with O(1) membership.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeSpectrumSet {
    params: FieldParams,
    rank: usize,
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl LargeSpectrumSet {
    pub fn from_members(params: FieldParams, members: Vec<usize>) -> Result<Self> {
        let mut mask = vec![false; params.size()];
        for &m in &members {
            params.check_index(m)?;
            if std::mem::replace(&mut mask[m], true) {
                return Err(Error::InvalidArgument(format!("index {m} repeated")));
            }
        }
        Ok(LargeSpectrumSet { params, rank: members.len(), members, mask })
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in spectral order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        self.mask.get(index).copied().unwrap_or(false)
    }
}

pub fn large_spectrum(order: &SpectralOrder, rank: usize) -> Result<LargeSpectrumSet> {
    order.check_rank(rank)?;
    LargeSpectrumSet::from_members(order.params(), order.perm()[..rank].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{dft, DensityFunction};
    use num_complex::Complex64;

    fn params(p: u32, n: u32) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn order_of(p: u32, n: u32, members: &[usize]) -> SpectralOrder {
        let f = DensityFunction::indicator(params(p, n), members).unwrap();
        spectral_order(&dft(&f)).unwrap()
    }

    /// An order with prescribed magnitudes; the permutation is irrelevant
    /// for threshold searches.
    fn synthetic(p: u32, n: u32, mags: Vec<f64>) -> SpectralOrder {
        let f = params(p, n);
        SpectralOrder::from_parts(f, (0..f.size()).collect(), mags).unwrap()
    }

    #[test]
    fn constant_function_order() {
        let f = DensityFunction::constant(params(3, 2), 0.3).unwrap();
        let order = spectral_order(&dft(&f)).unwrap();
        assert_eq!(order.perm()[0], 0);
        assert!((order.mags()[0] - 2.7).abs() < 1e-9);
        assert!(order.mags()[1..].iter().all(|&m| m == 0.0));
        // Groups in canonical order: {1,2}, {3,6}, {4,8}, {5,7}.
        assert_eq!(order.perm(), &[0, 1, 2, 3, 6, 4, 8, 5, 7]);
        assert!(order.violations().is_empty());
    }

    #[test]
    fn two_point_set_in_f3() {
        let order = order_of(3, 1, &[0, 1]);
        assert_eq!(order.perm(), &[0, 1, 2]);
        assert!((order.mags()[0] - 2.0).abs() < 1e-9);
        assert!((order.mags()[1] - 1.0).abs() < 1e-9);
        assert_eq!(order.mags()[1], order.mags()[2]);
    }

    #[test]
    fn exhaustive_f3_2_orders_satisfy_contract() {
        for mask in 1u32..512 {
            let members: Vec<usize> = (0..9).filter(|&i| mask >> i & 1 == 1).collect();
            let order = order_of(3, 2, &members);
            assert!(order.violations().is_empty(), "mask {mask}: {:?}", order.violations());
        }
    }

    #[test]
    fn rejects_spectrum_of_signed_function() {
        let f = params(3, 1);
        let s = Spectrum::new(
            f,
            vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(spectral_order(&s), Err(Error::NotNonnegativeSource(_))));
    }

    #[test]
    fn order_stable_under_tiny_perturbation() {
        let f = params(3, 3);
        let func = DensityFunction::indicator(f, &[0, 1, 5, 13, 22]).unwrap();
        let s = dft(&func);
        let bumped: Vec<Complex64> =
            s.coeffs().iter().enumerate().map(|(k, &z)| z + 1e-13 * (k as f64 % 3.0 - 1.0)).collect();
        let order = spectral_order(&s).unwrap();
        let order2 = spectral_order(&Spectrum::new(f, bumped).unwrap()).unwrap();
        assert_eq!(order.perm(), order2.perm());
    }

    #[test]
    fn decay_examples() {
        let f = DensityFunction::constant(params(3, 2), 0.3).unwrap();
        let order = spectral_order(&dft(&f)).unwrap();
        assert!(decay_holds(&order, 2, 0.3, 0.2).unwrap());
        assert!(decay_holds(&order, 2, 0.3, 0.2).is_ok());
        assert!(decay_holds(&order, 2, 0.0, 0.2).is_err());
        assert!(decay_holds(&order, 10, 0.3, 0.2).is_err());

        // |f̂(a_2)| = θF exactly: θ^{E} F < θF whenever E > 1 and θ < 1.
        let theta = 0.25;
        let size = 81.0;
        let mut mags = vec![0.0; 81];
        mags[0] = size * theta;
        mags[1] = size * theta;
        mags[2] = size * theta;
        let order = synthetic(3, 4, mags);
        assert!(!decay_holds(&order, 2, theta, 0.3).unwrap());
    }

    #[test]
    fn decay_monotone_in_theta() {
        let order = order_of(3, 3, &[0, 1, 4, 9, 13]);
        for j in 1..=27 {
            let mut was_true = false;
            for k in 1..100 {
                let theta = k as f64 / 100.0;
                let now = decay_holds(&order, j, theta, 0.2).unwrap();
                assert!(!was_true || now, "increasing θ turned decay off at j={j}");
                was_true |= now;
            }
        }
    }

    #[test]
    fn benign_index_examples() {
        let mut mags = vec![5.0; 81];
        mags[..3].copy_from_slice(&[70.0, 20.0, 20.0]);
        let order = synthetic(3, 4, mags);
        assert_eq!(benign_index(&order, 6), Some(4));
        let order = synthetic(3, 4, vec![30.0; 81]);
        assert_eq!(benign_index(&order, 6), None);
        let order = synthetic(3, 4, vec![10.0; 81]);
        assert_eq!(benign_index(&order, 6), None);
    }

    #[test]
    fn large_spectrum_examples() {
        let order = order_of(3, 1, &[0, 1]);
        assert_eq!(large_spectrum(&order, 1).unwrap().members(), &[0]);
        let all = large_spectrum(&order, 3).unwrap();
        assert!((0..3).all(|a| all.contains(a)));
        assert!(large_spectrum(&order, 0).is_err());
        assert!(large_spectrum(&order, 4).is_err());
    }

    #[test]
    fn precise_matches_log_domain_on_clear_cases() {
        assert!(below_theta_power_precise(1.0, 0.5, 4, DecayExponent::main(0.5), 100.0));
        assert!(!below_theta_power_precise(30.0, 0.5, 4, DecayExponent::main(0.5), 100.0));
        // θ^{E} F is far below any f64 here.
        assert!(!below_theta_power_precise(1e-300, 0.01, 10_000, DecayExponent::main(0.5), 1e6));
    }
}
