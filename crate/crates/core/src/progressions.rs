//! Three-term progressions: brute and spectral Λ, witness search, counting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldParams, FieldPoint};
use crate::transform::{DensityFunction, Spectrum};

/// The support {m : f(m) > 0}, as sorted canonical indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    params: FieldParams,
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl SupportSet {
    pub fn from_members(params: FieldParams, members: &[usize]) -> Result<Self> {
        let mut mask = vec![false; params.size()];
        for &m in members {
            params.check_index(m)?;
            mask[m] = true;
        }
        let members = (0..params.size()).filter(|&m| mask[m]).collect();
        Ok(SupportSet { params, members, mask })
    }

    pub fn of(f: &DensityFunction) -> Self {
        let mask: Vec<bool> = f.values().iter().map(|&v| v > 0.0).collect();
        let members = (0..mask.len()).filter(|&m| mask[m]).collect();
        SupportSet { params: f.params(), members, mask }
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        self.mask.get(index).copied().unwrap_or(false)
    }

    pub fn indicator(&self) -> DensityFunction {
        DensityFunction::indicator(self.params, &self.members).expect("members in range")
    }
}

/// m, m + d, m + 2d with d ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProgressionWitness {
    pub m: usize,
    pub d: usize,
}

impl ProgressionWitness {
    /// The three canonical indices m, m + d, m + 2d.
    pub fn terms(&self, params: FieldParams) -> [usize; 3] {
        let second = params.add_idx(self.m, self.d);
        [self.m, second, params.add_idx(second, self.d)]
    }

    pub fn points(&self, params: FieldParams) -> Result<[FieldPoint; 3]> {
        let [a, b, c] = self.terms(params);
        Ok([params.point(a)?, params.point(b)?, params.point(c)?])
    }

    /// d ≠ 0 and all three terms lie in `s`.
    pub fn verify(&self, s: &SupportSet) -> bool {
        self.d != 0
            && self.m < s.params().size()
            && self.d < s.params().size()
            && self.terms(s.params()).iter().all(|&x| s.contains(x))
    }
}

/// Λ(f) = F⁻² Σ_{m,d} f(m) f(m+d) f(m+2d), looping over m, m+d in the support.
pub fn lambda_brute(f: &DensityFunction) -> f64 {
    let params = f.params();
    let support = SupportSet::of(f);
    let values = f.values();
    let mut total = 0.0;
    for &m in support.members() {
        let fm = values[m];
        let mut row = 0.0;
        for &y in support.members() {
            // z = 2y − m, so (m, y, z) = (m, m+d, m+2d) with d = y − m.
            let z = params.sub_idx(params.add_idx(y, y), m);
            row += values[y] * values[z];
        }
        total += fm * row;
    }
    let size = params.size() as f64;
    total / (size * size)
}

/// Λ from the spectrum, with the size of its imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLambda {
    pub value: f64,
    pub imag_residue: f64,
    /// F⁻³ Σ |f̂(a)|² |f̂(−2a)|, the scale the residue is judged against.
    pub scale: f64,
}

/// Relative tolerance on the imaginary part of the spectral Λ sum.
pub const IMAG_TOLERANCE: f64 = 1e-9;

pub fn lambda_spectral_detail(s: &Spectrum) -> Result<SpectralLambda> {
    let params = s.params();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for a in 0..params.size() {
        let x = s.at(a);
        let y = s.at(params.scale_idx(params.p() - 2, a));
        sum += x * x * y;
        scale += x.norm_sqr() * y.norm();
    }
    let cube = (params.size() as f64).powi(3);
    let detail = SpectralLambda { value: sum.re / cube, imag_residue: sum.im / cube, scale: scale / cube };
    if detail.imag_residue.abs() > IMAG_TOLERANCE * detail.scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ImaginaryResidue { residue: detail.imag_residue, scale: detail.scale });
    }
    Ok(detail)
}

/// Λ(f) = F⁻³ Σ_a f̂(a)² f̂(−2a).
pub fn lambda_spectral(s: &Spectrum) -> Result<f64> {
    lambda_spectral_detail(s).map(|d| d.value)
}

/// The lexicographically smallest (m, d), d ≠ 0, with m, m+d, m+2d ∈ S.
pub fn find_nontrivial_3ap(s: &SupportSet) -> Option<ProgressionWitness> {
    let params = s.params();
    for &m in s.members() {
        let best = s
            .members()
            .iter()
            .filter(|&&y| y != m)
            .filter(|&&y| s.contains(params.sub_idx(params.add_idx(y, y), m)))
            .map(|&y| params.sub_idx(y, m))
            .min();
        if let Some(d) = best {
            return Some(ProgressionWitness { m, d });
        }
    }
    None
}

/// #{(m, d) : m, m+d, m+2d ∈ S}, trivial d = 0 included, as F²·Λ(1_S).
pub fn count_3aps(s: &SupportSet) -> Result<u64> {
    let size = s.params().size() as f64;
    let value = size * size * lambda_brute(&s.indicator());
    let rounded = value.round();
    if (value - rounded).abs() >= 1e-6 {
        return Err(Error::NotIntegral { value });
    }
    Ok(rounded as u64)
}

/// True when S has no progression with d ≠ 0.
pub fn is_3ap_free(s: &SupportSet) -> bool {
    find_nontrivial_3ap(s).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::span_indices;
    use crate::transform::dft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: u32, n: u32) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    /// Direct integer count over every (m, d).
    fn count_oracle(s: &SupportSet) -> u64 {
        let f = s.params();
        let mut count = 0;
        for m in 0..f.size() {
            for d in 0..f.size() {
                let w = ProgressionWitness { m, d };
                if w.terms(f).iter().all(|&x| s.contains(x)) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Lexicographic scan over every (m, d ≠ 0).
    fn witness_oracle(s: &SupportSet) -> Option<ProgressionWitness> {
        let f = s.params();
        (0..f.size())
            .flat_map(|m| (1..f.size()).map(move |d| ProgressionWitness { m, d }))
            .find(|w| w.terms(f).iter().all(|&x| s.contains(x)))
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn lambda_brute_examples() {
        let f = params(3, 2);
        assert!(rel_close(lambda_brute(&DensityFunction::constant(f, 1.0).unwrap()), 1.0, 1e-15));
        let line = span_indices(f, &[4]).unwrap();
        let ind = DensityFunction::indicator(f, &line.members()).unwrap();
        assert!(rel_close(lambda_brute(&ind), 1.0 / 9.0, 1e-15));
        let two = DensityFunction::indicator(params(3, 1), &[0, 1]).unwrap();
        assert!(rel_close(lambda_brute(&two), 2.0 / 9.0, 1e-15));
    }

    #[test]
    fn lambda_of_subspace_indicator() {
        let f = params(3, 3);
        for gens in [vec![], vec![1], vec![1, 3], vec![4, 10], vec![1, 3, 9]] {
            let w = span_indices(f, &gens).unwrap();
            let ind = DensityFunction::indicator(f, &w.members()).unwrap();
            let expected = (w.size() as f64 / f.size() as f64).powi(2);
            assert!(rel_close(lambda_brute(&ind), expected, 1e-14));
        }
    }

    #[test]
    fn lambda_spectral_examples() {
        let f = params(3, 2);
        let s = dft(&DensityFunction::constant(f, 0.3).unwrap());
        assert!(rel_close(lambda_spectral(&s).unwrap(), 0.027, 1e-12));
        for mask in 0u32..512 {
            let members: Vec<usize> = (0..9).filter(|&i| mask >> i & 1 == 1).collect();
            let ind = DensityFunction::indicator(f, &members).unwrap();
            let (b, sp) = (lambda_brute(&ind), lambda_spectral(&dft(&ind)).unwrap());
            assert!((b - sp).abs() <= 1e-9 * b.abs().max(1.0 / 81.0), "mask {mask}");
        }
        let big = params(5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let values = (0..big.size()).map(|_| rng.random::<f64>()).collect();
            let func = DensityFunction::new(big, values).unwrap();
            assert!(rel_close(lambda_brute(&func), lambda_spectral(&dft(&func)).unwrap(), 1e-8));
        }
    }

    #[test]
    fn lambda_spectral_rejects_corrupt_spectrum() {
        let f = params(3, 1);
        let s = Spectrum::new(
            f,
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(lambda_spectral(&s), Err(Error::ImaginaryResidue { .. })));
    }

    #[test]
    fn witness_examples() {
        let f3 = params(3, 1);
        let full = SupportSet::from_members(f3, &[0, 1, 2]).unwrap();
        assert_eq!(find_nontrivial_3ap(&full), Some(ProgressionWitness { m: 0, d: 1 }));
        let two = SupportSet::from_members(f3, &[0, 1]).unwrap();
        assert_eq!(find_nontrivial_3ap(&two), None);
        let f = params(3, 2);
        let diag = SupportSet::from_members(f, &[0, 4, 8]).unwrap();
        assert_eq!(find_nontrivial_3ap(&diag), Some(ProgressionWitness { m: 0, d: 4 }));
    }

    #[test]
    fn count_examples() {
        let f3 = params(3, 1);
        assert_eq!(count_3aps(&SupportSet::from_members(f3, &[2]).unwrap()).unwrap(), 1);
        assert_eq!(count_3aps(&SupportSet::from_members(f3, &[0, 1, 2]).unwrap()).unwrap(), 9);
        assert_eq!(count_3aps(&SupportSet::from_members(f3, &[0, 1]).unwrap()).unwrap(), 2);
    }

    #[test]
    fn exhaustive_f3_2_against_oracles() {
        let f = params(3, 2);
        for mask in 0u32..512 {
            let members: Vec<usize> = (0..9).filter(|&i| mask >> i & 1 == 1).collect();
            let s = SupportSet::from_members(f, &members).unwrap();
            let count = count_3aps(&s).unwrap();
            assert_eq!(count, count_oracle(&s));
            let witness = find_nontrivial_3ap(&s);
            assert_eq!(witness, witness_oracle(&s));
            // Trivial progressions give |S|; anything more needs a witness.
            assert_eq!(count == s.len() as u64, witness.is_none());
            if let Some(w) = witness {
                assert!(w.verify(&s));
            }
        }
    }

    #[test]
    fn random_f5_2_against_oracles() {
        let f = params(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let members: Vec<usize> = (0..f.size()).filter(|_| rng.random_bool(0.2)).collect();
            let s = SupportSet::from_members(f, &members).unwrap();
            assert_eq!(count_3aps(&s).unwrap(), count_oracle(&s));
            assert_eq!(find_nontrivial_3ap(&s), witness_oracle(&s));
        }
    }
}
