use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::progressions::ProgressionWitness;
use crate::subspace::{coordinate_iso, kernel_of_functional, AffineEmbedding, CoordinateMap, Subspace};
use crate::transform::{expectation, roots_of_unity, DensityFunction, Spectrum};

/// h(c) = f(φ(c) − x) on F_p^{n−1}, where φ parametrizes V = t^⊥.
#[derive(Debug, Clone)]
pub struct SliceCollapse {
    pub h: DensityFunction,
    pub t: usize,
    pub x: usize,
    pub v: Subspace,
    pub phi: CoordinateMap,
}

impl SliceCollapse {
    /// Carry a progression of support(h) to one of support(f):
    /// m ↦ φ(m) − x, d ↦ φ(d).
    pub fn transport(&self, w: &ProgressionWitness) -> ProgressionWitness {
        let params = self.phi.target();
        ProgressionWitness {
            m: params.sub_idx(self.phi.apply_idx(w.m), self.x),
            d: self.phi.apply_idx(w.d),
        }
    }

    /// The embedding of h's domain into `outer`'s target, given the embedding
    /// of f's domain.
    pub fn compose(&self, outer: &AffineEmbedding) -> Result<AffineEmbedding> {
        outer.then_collapse(&self.phi, self.x)
    }

    pub fn expectation(&self) -> f64 {
        expectation(&self.h)
    }
}

fn nonzero(params: FieldParams, t: usize) -> Result<()> {
    params.check_index(t)?;
    if t == 0 {
        return Err(Error::ZeroVector);
    }
    Ok(())
}

pub fn slice_collapse(f: &DensityFunction, t: usize, x: usize) -> Result<SliceCollapse> {
    let params = f.params();
    nonzero(params, t)?;
    params.check_index(x)?;
    if params.n() < 2 {
        return Err(Error::InvalidArgument("slicing needs n ≥ 2".into()));
    }
    let v = kernel_of_functional(&params.point(t)?)?;
    let phi = coordinate_iso(&v);
    let target = params.reduced(params.n() - 1)?;
    let values = (0..target.size()).map(|c| f.value(params.sub_idx(phi.apply_idx(c), x))).collect();
    let h = DensityFunction::new(target, values)?;
    Ok(SliceCollapse { h, t, x, v, phi })
}

/// g(m) = f(m − x)·1_V(m) on the full space.
pub fn slice_function(f: &DensityFunction, t: usize, x: usize) -> Result<DensityFunction> {
    let params = f.params();
    nonzero(params, t)?;
    params.check_index(x)?;
    let values = (0..params.size())
        .map(|m| if params.dot_idx(t, m) == 0 { f.value(params.sub_idx(m, x)) } else { 0.0 })
        .collect();
    DensityFunction::new(params, values)
}

/// ĝ(a) = p⁻¹ Σ_u e^{2πi x·(a+ut)/p} f̂(a + ut), for every a.
pub fn predicted_slice_spectrum(s: &Spectrum, t: usize, x: usize) -> Result<Spectrum> {
    let params = s.params();
    nonzero(params, t)?;
    params.check_index(x)?;
    let roots = roots_of_unity(params.p());
    let inv_p = 1.0 / params.p() as f64;
    let coeffs = (0..params.size())
        .map(|a| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut point = a;
            for _ in 0..params.p() {
                acc += roots[params.dot_idx(x, point) as usize] * s.at(point);
                point = params.add_idx(point, t);
            }
            acc * inv_p
        })
        .collect();
    Spectrum::new(params, coeffs)
}

/// The smallest r with t·r = 1.
pub fn transversal_direction(params: FieldParams, t: usize) -> Result<usize> {
    nonzero(params, t)?;
    Ok((1..params.size()).find(|&r| params.dot_idx(t, r) == 1).expect("t ≠ 0 has a dual vector"))
}

/// masses[c] = Σ {f(m) : t·m = −c}, the mass of f on V − c·r.
pub fn coset_masses(f: &DensityFunction, t: usize) -> Result<Vec<f64>> {
    let params = f.params();
    nonzero(params, t)?;
    let p = params.p();
    let mut masses = vec![0.0; p as usize];
    for (m, &v) in f.values().iter().enumerate() {
        let c = (p - params.dot_idx(t, m)) % p;
        masses[c as usize] += v;
    }
    Ok(masses)
}

/// x = c·r with c maximizing the mass of f on V − x (ties to the smallest c),
/// so that 𝔼(h) ≥ 𝔼(f).
pub fn best_shift_x(f: &DensityFunction, t: usize) -> Result<usize> {
    let params = f.params();
    let r = transversal_direction(params, t)?;
    let masses = coset_masses(f, t)?;
    let slack = 1e-12 * masses.iter().sum::<f64>().max(1.0);
    let mut best = 0;
    for c in 1..masses.len() {
        if masses[c] > masses[best] + slack {
            best = c;
        }
    }
    Ok(params.scale_idx(best as u32, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progressions::{count_3aps, find_nontrivial_3ap, SupportSet};
    use crate::transform::{dft, dft_direct};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: u32, n: u32) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn random_sparse(f: FieldParams, rng: &mut ChaCha8Rng, density: f64) -> DensityFunction {
        let values = (0..f.size())
            .map(|_| if rng.random_bool(density) { rng.random_range(0.2..=1.0) } else { 0.0 })
            .collect();
        DensityFunction::new(f, values).unwrap()
    }

    #[test]
    fn slice_example() {
        let f = params(3, 2);
        // (1,0) = 1, (1,1) = 4.
        let g = DensityFunction::indicator(f, &[1, 4]).unwrap();
        let x = best_shift_x(&g, 1).unwrap();
        assert_eq!(x, 2);
        let c = slice_collapse(&g, 1, x).unwrap();
        assert_eq!(c.h.values(), &[1.0, 1.0, 0.0]);
        assert!((c.expectation() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(coset_masses(&g, 1).unwrap(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn slice_of_constant() {
        let f = params(5, 3);
        let g = DensityFunction::constant(f, 0.3).unwrap();
        assert_eq!(best_shift_x(&g, 1).unwrap(), 0);
        let c = slice_collapse(&g, 1, 11).unwrap();
        assert!(c.h.values().iter().all(|&v| v == 0.3));
        let s = predicted_slice_spectrum(&dft(&g), 1, 0).unwrap();
        assert!((s.at(0).re - 0.3 * 25.0).abs() < 1e-9);
        let v = kernel_of_functional(&f.point(1).unwrap()).unwrap();
        for a in v.members().into_iter().filter(|&a| a != 0) {
            assert!(s.at(a).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_zero_direction() {
        let g = DensityFunction::constant(params(3, 2), 0.5).unwrap();
        assert_eq!(slice_collapse(&g, 0, 0).unwrap_err(), Error::ZeroVector);
        assert_eq!(best_shift_x(&g, 0).unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn predicted_spectrum_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (p, n) in [(3, 2), (3, 4), (5, 3), (5, 2)] {
            let f = params(p, n);
            for _ in 0..20 {
                let g = random_sparse(f, &mut rng, 0.5);
                let t = rng.random_range(1..f.size());
                let x = rng.random_range(0..f.size());
                let predicted = predicted_slice_spectrum(&dft(&g), t, x).unwrap();
                let direct = dft_direct(&slice_function(&g, t, x).unwrap());
                for a in 0..f.size() {
                    assert!((predicted.at(a) - direct.at(a)).norm() <= 1e-9 * f.size() as f64);
                }
                // ĥ(ψ(a)) = ĝ(a) for every a.
                let c = slice_collapse(&g, t, x).unwrap();
                let h_hat = dft(&c.h);
                for a in 0..f.size() {
                    let psi = c.phi.dual_coords_idx(a);
                    assert!((h_hat.at(psi) - direct.at(a)).norm() <= 1e-9 * f.size() as f64);
                }
            }
        }
    }

    #[test]
    fn isotropic_direction() {
        // (1,2) in F_5^2 has (1,2)·(1,2) = 5 ≡ 0.
        let f = params(5, 2);
        let t = 11;
        assert_eq!(f.dot_idx(t, t), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_sparse(f, &mut rng, 0.6);
        let x = best_shift_x(&g, t).unwrap();
        assert!(slice_collapse(&g, t, x).unwrap().expectation() >= crate::transform::expectation(&g) - 1e-12);
        let predicted = predicted_slice_spectrum(&dft(&g), t, x).unwrap();
        let direct = dft_direct(&slice_function(&g, t, x).unwrap());
        for a in 0..f.size() {
            assert!((predicted.at(a) - direct.at(a)).norm() <= 1e-9 * 25.0);
        }
    }

    #[test]
    fn expectation_never_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let f = params(3, 3);
            let g = random_sparse(f, &mut rng, 0.4);
            let t = rng.random_range(1..f.size());
            let x = best_shift_x(&g, t).unwrap();
            let c = slice_collapse(&g, t, x).unwrap();
            assert!(c.expectation() >= crate::transform::expectation(&g) - 1e-12);
        }
    }

    #[test]
    fn witnesses_transport() {
        let f = params(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut transported = 0;
        for _ in 0..200 {
            let g = random_sparse(f, &mut rng, 0.3);
            let t = rng.random_range(1..f.size());
            let x = rng.random_range(0..f.size());
            let c = slice_collapse(&g, t, x).unwrap();
            let sh = SupportSet::of(&c.h);
            let sg = SupportSet::of(&slice_function(&g, t, x).unwrap());
            assert_eq!(count_3aps(&sh).unwrap(), count_3aps(&sg).unwrap());
            if let Some(w) = find_nontrivial_3ap(&sh) {
                assert!(c.transport(&w).verify(&SupportSet::of(&g)));
                let emb = c.compose(&AffineEmbedding::identity(f)).unwrap();
                let [a, b, _] = w.terms(c.h.params());
                assert_eq!(emb.point_idx(a), c.transport(&w).m);
                assert_eq!(f.sub_idx(emb.point_idx(b), emb.point_idx(a)), c.transport(&w).d);
                transported += 1;
            }
        }
        assert!(transported > 0);
    }
}
