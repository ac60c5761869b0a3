//! The unnormalized character transform f̂(a) = Σ_m f(m) e^{2πi a·m/p}.
//!
//! [`dft`] factors the transform over the n coordinate axes: each pass runs
//! a length-p DFT along one axis, for O(F·n·p) work in total. [`dft_direct`]
//! is the O(F²) definition and serves as the reference path.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldParams;

/// f : F_p^n → [0, 1], indexed canonically.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFunction {
    params: FieldParams,
    values: Vec<f64>,
}

impl DensityFunction {
    pub fn new(params: FieldParams, values: Vec<f64>) -> Result<Self> {
        if values.len() != params.size() {
            return Err(Error::LengthMismatch { expected: params.size(), found: values.len() });
        }
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::ValueOutOfRange { index, value });
        }
        Ok(DensityFunction { params, values })
    }

    pub fn constant(params: FieldParams, theta: f64) -> Result<Self> {
        DensityFunction::new(params, vec![theta; params.size()])
    }

    /// The indicator of a set of canonical indices.
    pub fn indicator(params: FieldParams, members: &[usize]) -> Result<Self> {
        let mut values = vec![0.0; params.size()];
        for &m in members {
            params.check_index(m)?;
            values[m] = 1.0;
        }
        Ok(DensityFunction { params, values })
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A complex-valued function on F_p^n.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFunction {
    params: FieldParams,
    values: Vec<Complex64>,
}

impl ComplexFunction {
    pub fn new(params: FieldParams, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != params.size() {
            return Err(Error::LengthMismatch { expected: params.size(), found: values.len() });
        }
        Ok(ComplexFunction { params, values })
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// coeffs[a] = f̂(a).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    params: FieldParams,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(params: FieldParams, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != params.size() {
            return Err(Error::LengthMismatch { expected: params.size(), found: coeffs.len() });
        }
        Ok(Spectrum { params, coeffs })
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn at(&self, a: usize) -> Complex64 {
        self.coeffs[a]
    }
}

/// Anything that can be fed to the transform.
pub trait SampledFunction {
    fn params(&self) -> FieldParams;
    fn to_complex(&self) -> Vec<Complex64>;
}

impl SampledFunction for DensityFunction {
    fn params(&self) -> FieldParams {
        self.params
    }
    fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }
}

impl SampledFunction for ComplexFunction {
    fn params(&self) -> FieldParams {
        self.params
    }
    fn to_complex(&self) -> Vec<Complex64> {
        self.values.clone()
    }
}

/// e^{2πi r/p} for r in 0..p.
pub fn roots_of_unity(p: u32) -> Vec<Complex64> {
    (0..p)
        .map(|r| {
            let (s, c) = (TAU * r as f64 / p as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

fn transform_in_place(params: FieldParams, data: &mut [Complex64], inverse: bool) {
    let p = params.p() as usize;
    let mut roots = roots_of_unity(params.p());
    if inverse {
        roots.iter_mut().for_each(|z| *z = z.conj());
    }
    let size = params.size();
    let mut line = vec![Complex64::new(0.0, 0.0); p];
    let mut stride = 1;
    for _ in 0..params.n() {
        let block = stride * p;
        for start in (0..size).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (r, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + r * stride];
                }
                for a in 0..p {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (r, &x) in line.iter().enumerate() {
                        acc += x * roots[a * r % p];
                    }
                    data[base + a * stride] = acc;
                }
            }
        }
        stride = block;
    }
}

/// Fast tensor-factored forward transform.
pub fn dft<T: SampledFunction + ?Sized>(f: &T) -> Spectrum {
    let params = f.params();
    let mut data = f.to_complex();
    transform_in_place(params, &mut data, false);
    Spectrum { params, coeffs: data }
}

/// The defining O(F²) sum, grouped by the value of a·m.
pub fn dft_direct<T: SampledFunction + ?Sized>(f: &T) -> Spectrum {
    let params = f.params();
    let values = f.to_complex();
    let p = params.p() as usize;
    let roots = roots_of_unity(params.p());
    let coeffs = (0..params.size())
        .map(|a| {
            let mut by_phase = vec![Complex64::new(0.0, 0.0); p];
            for (m, &v) in values.iter().enumerate() {
                by_phase[params.dot_idx(a, m) as usize] += v;
            }
            by_phase.iter().zip(&roots).map(|(&s, &w)| s * w).sum()
        })
        .collect();
    Spectrum { params, coeffs }
}

/// values[m] = F⁻¹ Σ_a coeffs[a] e^{−2πi a·m/p}.
pub fn idft(s: &Spectrum) -> ComplexFunction {
    let mut data = s.coeffs.clone();
    transform_in_place(s.params, &mut data, true);
    let scale = 1.0 / s.params.size() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    ComplexFunction { params: s.params, values: data }
}

/// θ = 𝔼(f).
pub fn expectation(f: &DensityFunction) -> f64 {
    f.values.iter().sum::<f64>() / f.params.size() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: u32, n: u32) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rejects_bad_values() {
        let f = params(3, 1);
        assert!(matches!(
            DensityFunction::new(f, vec![0.0, 1.5, 0.0]),
            Err(Error::ValueOutOfRange { index: 1, .. })
        ));
        assert!(DensityFunction::new(f, vec![0.0; 4]).is_err());
    }

    #[test]
    fn small_examples() {
        let f = params(3, 1);
        let omega = roots_of_unity(3)[1];
        let s = dft(&DensityFunction::constant(f, 1.0).unwrap());
        assert!(close(s.at(0), Complex64::new(3.0, 0.0), 1e-12));
        assert!(close(s.at(1), Complex64::new(0.0, 0.0), 1e-12));
        assert!(close(s.at(2), Complex64::new(0.0, 0.0), 1e-12));

        let s = dft(&DensityFunction::indicator(f, &[0]).unwrap());
        assert!(s.coeffs().iter().all(|&z| close(z, Complex64::new(1.0, 0.0), 1e-12)));

        let s = dft(&DensityFunction::indicator(f, &[1]).unwrap());
        for a in 0..3 {
            assert!(close(s.at(a), omega.powu(a as u32), 1e-12));
        }
    }

    #[test]
    fn idft_examples() {
        let f = params(3, 2);
        let zero = idft(&Spectrum::new(f, vec![Complex64::new(0.0, 0.0); 9]).unwrap());
        assert!(zero.values().iter().all(|z| z.norm() == 0.0));
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 9];
        coeffs[0] = Complex64::new(9.0, 0.0);
        let one = idft(&Spectrum::new(f, coeffs).unwrap());
        assert!(one.values().iter().all(|&z| close(z, Complex64::new(1.0, 0.0), 1e-12)));
    }

    #[test]
    fn roundtrip_random_f3_6() {
        let f = params(3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let values: Vec<f64> = (0..f.size()).map(|_| rng.random::<f64>()).collect();
            let func = DensityFunction::new(f, values.clone()).unwrap();
            let back = idft(&dft(&func));
            let err = back
                .values()
                .iter()
                .zip(&values)
                .map(|(z, &v)| (z - v).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10 * f.size() as f64);
        }
    }

    #[test]
    fn expectation_examples() {
        let f = params(3, 1);
        assert_eq!(expectation(&DensityFunction::constant(f, 1.0).unwrap()), 1.0);
        let e = expectation(&DensityFunction::indicator(f, &[0, 1]).unwrap());
        assert!((e - 2.0 / 3.0).abs() < 1e-15);

        let big = params(5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let values: Vec<f64> = (0..big.size()).map(|_| rng.random::<f64>()).collect();
            let func = DensityFunction::new(big, values).unwrap();
            let via_spectrum = dft(&func).at(0).re / big.size() as f64;
            assert!((expectation(&func) - via_spectrum).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_matches_direct_on_all_f3_2_indicators() {
        let f = params(3, 2);
        for mask in 0u32..512 {
            let members: Vec<usize> = (0..9).filter(|&i| mask >> i & 1 == 1).collect();
            let func = DensityFunction::indicator(f, &members).unwrap();
            let (fast, slow) = (dft(&func), dft_direct(&func));
            for a in 0..9 {
                assert!(close(fast.at(a), slow.at(a), 1e-12));
            }
        }
    }
}
