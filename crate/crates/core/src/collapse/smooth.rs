use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectralOrder;
use crate::subspace::{ComplementKind, DirectSum, Subspace};
use crate::transform::{dft, expectation, DensityFunction, Spectrum};

/// g(m) = Σ_{b∈V} f(m−b)·1_W(m−b) = f(w(m)), where m = w(m) + v(m).
pub fn smooth_project(f: &DensityFunction, v: &Subspace, w: &Subspace) -> Result<DensityFunction> {
    f.params().check_same(&v.params())?;
    let split = DirectSum::new(v, w)?;
    let values = (0..f.params().size()).map(|m| f.value(split.split_idx(m).0)).collect();
    DensityFunction::new(f.params(), values)
}

/// Orthogonal when W = V^⊥, in which case ĝ has the sum-over-coset form.
pub fn smoothing_branch(v: &Subspace, w: &Subspace) -> ComplementKind {
    if *w == v.annihilator() {
        ComplementKind::Orthogonal
    } else {
        ComplementKind::Extension
    }
}

/// ĝ for g = smooth_project(f, V, W). For W = V^⊥ this is Σ_{v∈V} f̂(a+v) on
/// W and 0 elsewhere; otherwise |V|·(f·1_W)^ on the annihilator of V and 0
/// elsewhere.
pub fn predicted_smooth_spectrum(f: &DensityFunction, v: &Subspace, w: &Subspace) -> Result<Spectrum> {
    let params = f.params();
    DirectSum::new(v, w)?;
    let ann = v.annihilator();
    let zero = Complex64::new(0.0, 0.0);
    let coeffs = match smoothing_branch(v, w) {
        ComplementKind::Orthogonal => {
            let s = dft(f);
            let members = v.members();
            (0..params.size())
                .map(|a| {
                    if ann.contains_idx(a) {
                        members.iter().map(|&u| s.at(params.add_idx(a, u))).sum()
                    } else {
                        zero
                    }
                })
                .collect()
        }
        ComplementKind::Extension => {
            let mask = w.mask();
            let restricted: Vec<f64> =
                f.values().iter().zip(&mask).map(|(&x, &inside)| if inside { x } else { 0.0 }).collect();
            let s = dft(&DensityFunction::new(params, restricted)?);
            let scale = v.size() as f64;
            (0..params.size()).map(|a| if ann.contains_idx(a) { s.at(a) * scale } else { zero }).collect()
        }
    };
    Spectrum::new(params, coeffs)
}

/// Which hypotheses behind the per-term error bounds hold on an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// |f̂(a_{j+1})| < θ²/32, the bound read with f̂ in absolute units.
    pub tail_small_literal: bool,
    /// |f̂(a_{j+1})| < θ²F/32, the bound read in units of F. Reported only.
    pub tail_small_scaled: bool,
    /// Each coset a_i + V holds no other a_k, and each −2a_i + V holds no
    /// a_k other than −2a_i itself (i, k ≤ j).
    pub cosets_separated: bool,
    /// W = V^⊥.
    pub orthogonal: bool,
    /// 1/|W| ≤ θ. Reported only.
    pub w_small: bool,
}

impl RegimeFlags {
    /// The hypotheses needed by the bound on E₁.
    pub fn first_term(&self) -> bool {
        self.tail_small_literal
    }

    /// The hypotheses needed by the bounds on E₂…E₅ and E.
    pub fn later_terms(&self) -> bool {
        self.tail_small_literal && self.cosets_separated && self.orthogonal
    }
}

/// S₀…S₅, the errors between them, and the per-term bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub theta: f64,
    pub j: usize,
    pub partial_sums: [Complex64; 6],
    /// E_k = S_{k−1} − S_k for k = 1..5.
    pub errors: [Complex64; 5],
    /// E = S₀ − S₅.
    pub total: Complex64,
    /// |(E₁+⋯+E₅) − E|, relative to max(|S₀|, |S₅|, 1).
    pub telescoping_residue: f64,
    /// θ³F/32, θ³|V|F/32, θ³|V|F/16 (three times), then θ³|V|F/4 for E.
    pub bounds: [f64; 6],
    /// |E_k| < bound_k, and |E| < θ³|V|F/4 last.
    pub bounds_ok: [bool; 6],
    /// Whether the hypotheses of each bound hold.
    pub in_regime: [bool; 6],
    pub regime: RegimeFlags,
}

impl ErrorDecomposition {
    /// Indices of bounds that fail while their hypotheses hold.
    pub fn in_regime_violations(&self) -> Vec<usize> {
        (0..6).filter(|&k| self.in_regime[k] && !self.bounds_ok[k]).collect()
    }
}

/// Build the decomposition for g = smooth_project(f, V, W) and the top j
/// points of f's spectral order.
pub fn error_decomposition(
    f: &DensityFunction,
    g: &DensityFunction,
    v: &Subspace,
    w: &Subspace,
    j: usize,
    order: &SpectralOrder,
) -> Result<ErrorDecomposition> {
    let params = f.params();
    params.check_same(&g.params())?;
    params.check_same(&order.params())?;
    let expected = smooth_project(f, v, w)?;
    if expected.values().iter().zip(g.values()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::InvalidArgument("g is not the smoothing of f along (V, W)".into()));
    }
    if j == 0 || j > params.size() {
        return Err(Error::RankOutOfRange { rank: j, max: params.size() });
    }
    let split = DirectSum::new(v, w)?;
    let fs = dft(f);
    let gs = dft(g);
    let minus_two = params.p() - 2;
    let neg2 = |a: usize| params.scale_idx(minus_two, a);
    let inv_size = 1.0 / params.size() as f64;

    let top: Vec<usize> = order.perm()[..j].to_vec();
    let wa: Vec<usize> = top.iter().map(|&a| split.split_idx(a).0).collect();

    let s0: Complex64 = (0..params.size()).map(|a| fs.at(a) * fs.at(a) * fs.at(neg2(a))).sum();
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = s1;
    let mut s3 = s1;
    let mut s4 = s1;
    for (&a, &wi) in top.iter().zip(&wa) {
        let (fa, fm) = (fs.at(a), fs.at(neg2(a)));
        let gw = gs.at(wi);
        s1 += fa * fa * fm;
        s2 += gw * fa * fm;
        s3 += gw * gw * fm;
        s4 += gw * gw * gs.at(neg2(wi));
    }
    // ĝ vanishes off ann(V), which is W itself in the orthogonal branch.
    let s5: Complex64 =
        v.annihilator().members().into_iter().map(|x| gs.at(x) * gs.at(x) * gs.at(neg2(x))).sum();
    let partial_sums = [s0, s1, s2, s3, s4, s5].map(|z| z * inv_size);
    let errors: [Complex64; 5] = std::array::from_fn(|k| partial_sums[k] - partial_sums[k + 1]);
    let total = partial_sums[0] - partial_sums[5];
    let summed: Complex64 = errors.iter().sum();
    let scale = partial_sums[0].norm().max(partial_sums[5].norm()).max(1.0);
    let telescoping_residue = (summed - total).norm() / scale;

    let theta = expectation(f);
    let size = params.size() as f64;
    let vsize = v.size() as f64;
    let base = theta.powi(3) * size;
    let bounds = [base / 32.0, base * vsize / 32.0, base * vsize / 16.0, base * vsize / 16.0, base * vsize / 16.0, base * vsize / 4.0];
    let mut bounds_ok = [false; 6];
    for k in 0..5 {
        bounds_ok[k] = errors[k].norm() < bounds[k];
    }
    bounds_ok[5] = total.norm() < bounds[5];

    let tail = if j < params.size() { order.mag_at(j + 1)? } else { 0.0 };
    let coset_of = |a: usize| split.split_idx(a).0;
    let top_cosets: Vec<usize> = wa.clone();
    let mut distinct = top_cosets.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let a_separated = distinct.len() == top_cosets.len();
    let neg_separated = top.iter().all(|&a| {
        let target = neg2(a);
        let c = coset_of(target);
        top.iter().zip(&top_cosets).all(|(&b, &cb)| cb != c || b == target)
    });
    let regime = RegimeFlags {
        tail_small_literal: tail < theta * theta / 32.0,
        tail_small_scaled: tail < theta * theta * size / 32.0,
        cosets_separated: a_separated && neg_separated,
        orthogonal: smoothing_branch(v, w) == ComplementKind::Orthogonal,
        w_small: theta > 0.0 && 1.0 / w.size() as f64 <= theta,
    };
    let later = regime.later_terms();
    let in_regime = [regime.first_term(), later, later, later, later, later];

    Ok(ErrorDecomposition {
        theta,
        j,
        partial_sums,
        errors,
        total,
        telescoping_residue,
        bounds,
        bounds_ok,
        in_regime,
        regime,
    })
}
