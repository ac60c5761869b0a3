//! Phase shifting and the pigeonhole overlap detector behind the
//! large-spectrum dichotomy: either Λ(f) > θγ²/4 or the top Bℓ frequencies
//! overlap a nonzero translate of themselves in at least (ℓ/B)^{1/2} points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::progressions::lambda_spectral;
use crate::spectrum::{large_spectrum, spectral_order, LargeSpectrumSet, SpectralOrder};
use crate::transform::{dft, expectation, roots_of_unity, ComplexFunction, DensityFunction, Spectrum};

/// f_b(m) = f(m) e^{2πi b·m/p}; its transform is a ↦ f̂(a + b).
pub fn phase_shift(f: &DensityFunction, b: usize) -> Result<ComplexFunction> {
    let params = f.params();
    params.check_index(b)?;
    let roots = roots_of_unity(params.p());
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(m, &v)| roots[params.dot_idx(b, m) as usize] * v)
        .collect();
    ComplexFunction::new(params, values)
}

/// F⁻³ Σ_a f̂(a+b₁) f̂(a+b₂) f̂(−2a). Its modulus never exceeds Λ(f) for f ≥ 0.
pub fn shifted_triple_sum(s: &Spectrum, b1: usize, b2: usize) -> Result<Complex64> {
    let params = s.params();
    params.check_index(b1)?;
    params.check_index(b2)?;
    let minus_two = params.p() - 2;
    let sum: Complex64 = (0..params.size())
        .map(|a| {
            s.at(params.add_idx(a, b1))
                * s.at(params.add_idx(a, b2))
                * s.at(params.scale_idx(minus_two, a))
        })
        .sum();
    Ok(sum / (params.size() as f64).powi(3))
}

/// The points a ≠ 0 with −2a ∈ R, i.e. a = −x/2 for x ∈ R∖{0}, sorted.
pub fn halving_candidates(r: &LargeSpectrumSet) -> Vec<usize> {
    let params = r.params();
    let minus_half = params.p() - params.inv_mod(2);
    let mut out: Vec<usize> =
        r.members().iter().filter(|&&x| x != 0).map(|&x| params.scale_idx(minus_half, x)).collect();
    out.sort_unstable();
    out
}

fn check_covered(r1: &LargeSpectrumSet, r2: &LargeSpectrumSet, b: usize) -> Result<()> {
    r1.params().check_same(&r2.params())?;
    if !r1.contains(b) {
        return Err(Error::InvalidArgument(format!("b = {b} is not in R₁")));
    }
    if let Some(&m) = r1.members().iter().find(|&&m| !r2.contains(m)) {
        return Err(Error::InvalidArgument(format!("R₁ ⊄ R₂: {m} missing from R₂")));
    }
    Ok(())
}

/// The smallest a ≠ 0 with −2a, a + b₁, a + b₂ all in R₂; `None` when only
/// a = 0 works.
pub fn triple_cover_witness(
    r1: &LargeSpectrumSet,
    r2: &LargeSpectrumSet,
    b1: usize,
    b2: usize,
) -> Result<Option<usize>> {
    check_covered(r1, r2, b1)?;
    check_covered(r1, r2, b2)?;
    let params = r2.params();
    Ok(halving_candidates(r2)
        .into_iter()
        .find(|&a| r2.contains(params.add_idx(a, b1)) && r2.contains(params.add_idx(a, b2))))
}

/// |R ∩ (R + t)|.
pub fn overlap(r: &LargeSpectrumSet, t: usize) -> usize {
    let params = r.params();
    r.members().iter().filter(|&&x| r.contains(params.sub_idx(x, t))).count()
}

/// The t ≠ 0 maximizing |R₂ ∩ (R₂ + t)|, over `candidates` when given and
/// over all of F otherwise; ties go to the smallest index.
pub fn best_overlap_shift(r2: &LargeSpectrumSet, candidates: Option<&[usize]>) -> Result<(usize, usize)> {
    if r2.len() < 2 {
        return Err(Error::InvalidArgument("best_overlap_shift needs |R₂| ≥ 2".into()));
    }
    let params = r2.params();
    let mut pool: Vec<usize> = match candidates {
        Some(c) => {
            for &t in c {
                params.check_index(t)?;
            }
            c.iter().copied().filter(|&t| t != 0).collect()
        }
        None => (1..params.size()).collect(),
    };
    pool.sort_unstable();
    pool.dedup();
    let mut best: Option<(usize, usize)> = None;
    for t in pool {
        let o = overlap(r2, t);
        if best.is_none_or(|(_, bo)| o > bo) {
            best = Some((t, o));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no nonzero shift among the candidates".into()))
}

/// Right-hand side of the Claim's lower bound for a pair (b₁, b₂) with no
/// cover witness: F⁻³|f̂(b₁)f̂(b₂)f̂(0)| − 3F⁻³ sup_{a∉R₂}|f̂(a)| Σ_a|f̂(a)|².
pub fn claim_lower_bound(s: &Spectrum, r2: &LargeSpectrumSet, b1: usize, b2: usize) -> f64 {
    let params = s.params();
    let sup_outside = (0..params.size())
        .filter(|&a| !r2.contains(a))
        .map(|a| s.at(a).norm())
        .fold(0.0, f64::max);
    let energy: f64 = s.coeffs().iter().map(|z| z.norm_sqr()).sum();
    let cube = (params.size() as f64).powi(3);
    (s.at(b1) * s.at(b2) * s.at(0)).norm() / cube - 3.0 * sup_outside * energy / cube
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum DichotomyOutcome {
    LambdaLarge { gamma: f64, lambda: f64 },
    OverlapFound { gamma: f64, lambda: f64, t: usize, overlap: usize, required: f64 },
    HypothesisFail { gamma: f64, reason: String },
    TheoremViolation { gamma: f64, lambda: Option<f64>, reason: String },
}

/// Flat JSON form of a [`DichotomyOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub tag: String,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub t: Option<usize>,
    pub overlap: Option<usize>,
    pub reason: Option<String>,
}

impl DichotomyOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            DichotomyOutcome::LambdaLarge { .. } => "LambdaLarge",
            DichotomyOutcome::OverlapFound { .. } => "OverlapFound",
            DichotomyOutcome::HypothesisFail { .. } => "HypothesisFail",
            DichotomyOutcome::TheoremViolation { .. } => "TheoremViolation",
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, DichotomyOutcome::TheoremViolation { .. })
    }

    pub fn report(&self) -> DichotomyReport {
        let tag = self.tag().to_string();
        match self.clone() {
            DichotomyOutcome::LambdaLarge { gamma, lambda } => {
                DichotomyReport { tag, gamma, lambda: Some(lambda), t: None, overlap: None, reason: None }
            }
            DichotomyOutcome::OverlapFound { gamma, lambda, t, overlap, .. } => DichotomyReport {
                tag,
                gamma,
                lambda: Some(lambda),
                t: Some(t),
                overlap: Some(overlap),
                reason: None,
            },
            DichotomyOutcome::HypothesisFail { gamma, reason } => {
                DichotomyReport { tag, gamma, lambda: None, t: None, overlap: None, reason: Some(reason) }
            }
            DichotomyOutcome::TheoremViolation { gamma, lambda, reason } => {
                DichotomyReport { tag, gamma, lambda, t: None, overlap: None, reason: Some(reason) }
            }
        }
    }
}

fn check_dichotomy_params(params: FieldParams, theta: f64, ell: usize, b: usize) -> Result<()> {
    if b < 2 {
        return Err(Error::InvalidArgument(format!("B = {b} must exceed 1")));
    }
    if ell == 0 || ell.saturating_mul(b) > params.size() {
        return Err(Error::InvalidArgument(format!(
            "ℓ = {ell} must satisfy 1 ≤ ℓ ≤ F/B = {}/{b}",
            params.size()
        )));
    }
    if !(theta > 0.0 && theta < 0.25) {
        return Err(Error::InvalidArgument(format!("θ = {theta} must lie in (0, 1/4)")));
    }
    Ok(())
}

/// The dichotomy on f with ranks ℓ and Bℓ.
pub fn prop1_dichotomy(f: &DensityFunction, ell: usize, b: usize) -> Result<DichotomyOutcome> {
    let s = dft(f);
    let order = spectral_order(&s)?;
    prop1_dichotomy_with(&s, &order, expectation(f), ell, b)
}

/// As [`prop1_dichotomy`], reusing a spectrum and order already in hand.
pub fn prop1_dichotomy_with(
    s: &Spectrum,
    order: &SpectralOrder,
    theta: f64,
    ell: usize,
    b: usize,
) -> Result<DichotomyOutcome> {
    let params = s.params();
    check_dichotomy_params(params, theta, ell, b)?;
    let size = params.size() as f64;
    let gamma = order.mag_at(ell)? / size;
    let tail = order.mag_at(ell * b)?;

    // |f̂(a_{Bℓ})| < θγ²F, in logs.
    if gamma <= 0.0 {
        return Ok(DichotomyOutcome::HypothesisFail { gamma, reason: "γ = 0".into() });
    }
    let bound_log = theta.ln() + 2.0 * gamma.ln() + size.ln();
    if tail > 0.0 && tail.ln() >= bound_log {
        return Ok(DichotomyOutcome::HypothesisFail {
            gamma,
            reason: format!("|f̂(a_Bℓ)| = {tail} ≥ θγ²F = {}", bound_log.exp()),
        });
    }

    let lambda = lambda_spectral(s)?;
    let threshold = theta * gamma * gamma / 4.0;
    if lambda > threshold {
        return Ok(DichotomyOutcome::LambdaLarge { gamma, lambda });
    }

    let r1 = large_spectrum(order, ell)?;
    let r2 = large_spectrum(order, ell * b)?;
    let candidates = halving_candidates(&r2);
    // cover[i] = {b ∈ R₁ : a_i + b ∈ R₂} as positions in R₁.
    let cover: Vec<Vec<bool>> = candidates
        .iter()
        .map(|&a| r1.members().iter().map(|&x| r2.contains(params.add_idx(a, x))).collect())
        .collect();
    for i in 0..ell {
        for j in 0..ell {
            if !cover.iter().any(|c| c[i] && c[j]) {
                let (b1, b2) = (r1.members()[i], r1.members()[j]);
                return Ok(DichotomyOutcome::TheoremViolation {
                    gamma,
                    lambda: Some(lambda),
                    reason: format!(
                        "Λ = {lambda} ≤ θγ²/4 = {threshold} yet (b₁, b₂) = ({b1}, {b2}) has no cover witness"
                    ),
                });
            }
        }
    }

    // Pigeonhole: some candidate covers at least ℓ²/(Bℓ) pairs, hence at
    // least (ℓ/B)^{1/2} points of R₁.
    let (best, _) = cover
        .iter()
        .enumerate()
        .map(|(k, c)| (k, c.iter().filter(|&&x| x).count()))
        .fold(None, |acc: Option<(usize, usize)>, (k, n)| match acc {
            Some((_, bn)) if bn >= n => acc,
            _ => Some((k, n)),
        })
        .expect("every pair is covered, so candidates exist");
    let t = candidates[best];
    let ov = overlap(&r2, t);
    let required = (ell as f64 / b as f64).sqrt();
    if (ov as f64) < required {
        return Ok(DichotomyOutcome::TheoremViolation {
            gamma,
            lambda: Some(lambda),
            reason: format!("overlap {ov} at t = {t} is below (ℓ/B)^(1/2) = {required}"),
        });
    }
    Ok(DichotomyOutcome::OverlapFound { gamma, lambda, t, overlap: ov, required })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progressions::lambda_brute;
    use crate::subspace::{kernel_of_functional, span_indices};
    use crate::transform::dft_direct;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: u32, n: u32) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn set(f: FieldParams, members: &[usize]) -> LargeSpectrumSet {
        LargeSpectrumSet::from_members(f, members.to_vec()).unwrap()
    }

    #[test]
    fn phase_shift_examples() {
        let f = params(3, 1);
        let g = DensityFunction::indicator(f, &[1]).unwrap();
        let unshifted = phase_shift(&g, 0).unwrap();
        assert!(unshifted.values().iter().zip(g.values()).all(|(z, &v)| (z - v).norm() < 1e-15));
        let shifted = dft(&phase_shift(&g, 1).unwrap());
        let omega = roots_of_unity(3)[1];
        for a in 0..3u32 {
            assert!((shifted.at(a as usize) - omega.powu(a + 1)).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_shift_translates_spectrum() {
        let f = params(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let values = (0..f.size()).map(|_| rng.random::<f64>()).collect();
            let g = DensityFunction::new(f, values).unwrap();
            let b = rng.random_range(0..f.size());
            let shifted = phase_shift(&g, b).unwrap();
            assert!(shifted.values().iter().zip(g.values()).all(|(z, &v)| (z.norm() - v).abs() < 1e-12));
            let (s, s_shift) = (dft_direct(&g), dft(&shifted));
            for a in 0..f.size() {
                assert!((s_shift.at(a) - s.at(f.add_idx(a, b))).norm() <= 1e-9 * f.size() as f64);
            }
        }
    }

    #[test]
    fn shifted_triple_sum_at_origin_is_lambda() {
        let f = params(3, 3);
        let g = DensityFunction::indicator(f, &[0, 1, 5, 7, 19]).unwrap();
        let s = dft(&g);
        let z = shifted_triple_sum(&s, 0, 0).unwrap();
        assert!((z.re - lambda_spectral(&s).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn shifted_triple_sum_bounded_by_lambda() {
        let f = params(3, 1);
        let s = dft(&DensityFunction::indicator(f, &[0, 1]).unwrap());
        for b1 in 0..3 {
            for b2 in 0..3 {
                assert!(shifted_triple_sum(&s, b1, b2).unwrap().norm() <= 2.0 / 9.0 + 1e-10);
            }
        }
    }

    #[test]
    fn triple_cover_examples() {
        let f3 = params(3, 1);
        let f5 = params(5, 1);
        let zero = set(f3, &[0]);
        assert_eq!(triple_cover_witness(&zero, &zero, 0, 0).unwrap(), None);
        let r = set(f5, &[0, 1, 4]);
        let r1 = set(f5, &[0]);
        assert_eq!(triple_cover_witness(&r1, &r, 0, 0).unwrap(), None);
        let all = set(f3, &[0, 1, 2]);
        assert_eq!(triple_cover_witness(&zero, &all, 0, 0).unwrap(), Some(1));
        assert!(triple_cover_witness(&all, &zero, 0, 0).is_err());
        assert!(triple_cover_witness(&zero, &all, 1, 0).is_err());
    }

    #[test]
    fn triple_cover_matches_enumeration() {
        let f = params(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mut members: Vec<usize> = (1..f.size()).filter(|_| rng.random_bool(0.3)).collect();
            members.insert(0, 0);
            let r2 = set(f, &members);
            let r1 = set(f, &members[..members.len().min(3)]);
            for &b1 in r1.members() {
                for &b2 in r1.members() {
                    let oracle = (1..f.size()).find(|&a| {
                        r2.contains(f.scale_idx(3, a))
                            && r2.contains(f.add_idx(a, b1))
                            && r2.contains(f.add_idx(a, b2))
                    });
                    assert_eq!(triple_cover_witness(&r1, &r2, b1, b2).unwrap(), oracle);
                }
            }
        }
    }

    #[test]
    fn best_overlap_examples() {
        let f5 = params(5, 1);
        assert_eq!(best_overlap_shift(&set(f5, &[0, 1, 2]), None).unwrap(), (1, 2));
        let f = params(3, 2);
        let line = span_indices(f, &[4]).unwrap();
        let r = set(f, &line.members());
        for t in line.members().into_iter().filter(|&t| t != 0) {
            assert_eq!(overlap(&r, t), 3);
        }
        assert_eq!(best_overlap_shift(&set(f, &[0, 1]), None).unwrap(), (1, 1));
        assert!(best_overlap_shift(&set(f, &[0]), None).is_err());
        assert!(best_overlap_shift(&set(f, &[0, 1]), Some(&[0])).is_err());
    }

    #[test]
    fn dichotomy_constant_function() {
        let f = params(3, 2);
        let g = DensityFunction::constant(f, 0.2).unwrap();
        match prop1_dichotomy(&g, 1, 2).unwrap() {
            DichotomyOutcome::LambdaLarge { gamma, lambda } => {
                assert!((gamma - 0.2).abs() < 1e-12);
                assert!((lambda - 0.008).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dichotomy_rejects_bad_parameters() {
        let f = params(3, 2);
        let g = DensityFunction::constant(f, 0.2).unwrap();
        assert!(prop1_dichotomy(&g, 1, 1).is_err());
        assert!(prop1_dichotomy(&g, 5, 2).is_err());
        assert!(prop1_dichotomy(&g, 0, 2).is_err());
        let dense = DensityFunction::constant(f, 0.5).unwrap();
        assert!(prop1_dichotomy(&dense, 1, 2).is_err());
    }

    #[test]
    fn dichotomy_hypothesis_gate() {
        // A hyperplane indicator has |f̂| = θF on a whole line, so a₂ is as
        // large as a₁ and the hypothesis fails for ℓ = 1.
        let f = params(5, 2);
        let t = f.unit(0);
        let w = kernel_of_functional(&t).unwrap();
        let g = DensityFunction::indicator(f, &w.members()).unwrap();
        assert!(matches!(prop1_dichotomy(&g, 1, 2).unwrap(), DichotomyOutcome::HypothesisFail { .. }));
    }

    #[test]
    fn dichotomy_hyperplanes_never_violate() {
        let f = params(3, 3);
        for t in 1..f.size() {
            let w = kernel_of_functional(&f.point(t).unwrap()).unwrap();
            let g = DensityFunction::indicator(f, &w.members()).unwrap();
            // θ = 1/3 is outside the dichotomy's range; thin the set first.
            let members: Vec<usize> = w.members().into_iter().take(6).collect();
            let thin = DensityFunction::indicator(f, &members).unwrap();
            for ell in 1..=f.size() / 2 {
                assert!(!prop1_dichotomy(&thin, ell, 2).unwrap().is_violation());
            }
            assert!(prop1_dichotomy(&g, 1, 2).is_err());
        }
    }

    #[test]
    fn claim_bound_holds_when_no_witness() {
        let f = params(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let members: Vec<usize> = (0..f.size()).filter(|_| rng.random_bool(0.2)).collect();
            let g = DensityFunction::indicator(f, &members).unwrap();
            let s = dft(&g);
            let order = spectral_order(&s).unwrap();
            let lambda = lambda_brute(&g);
            for ell in 1..=4 {
                let r1 = large_spectrum(&order, ell).unwrap();
                let r2 = large_spectrum(&order, 2 * ell).unwrap();
                for &b1 in r1.members() {
                    for &b2 in r1.members() {
                        if triple_cover_witness(&r1, &r2, b1, b2).unwrap().is_none() {
                            assert!(lambda >= claim_lower_bound(&s, &r2, b1, b2) - 1e-8);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn report_shape() {
        let out = DichotomyOutcome::OverlapFound { gamma: 0.1, lambda: 0.01, t: 4, overlap: 2, required: 1.0 };
        let json = serde_json::to_value(out.report()).unwrap();
        assert_eq!(json["tag"], "OverlapFound");
        assert_eq!(json["t"], 4);
        assert_eq!(json["reason"], serde_json::Value::Null);
    }
}
