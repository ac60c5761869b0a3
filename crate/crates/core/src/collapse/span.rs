use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::progressions::{lambda_brute, ProgressionWitness};
use crate::spectrum::SpectralOrder;
use crate::subspace::{complement, complement_with_kind, span_indices, ComplementKind, DirectSum, Subspace};
use crate::transform::{dft, roots_of_unity, DensityFunction, Spectrum};

/// g(m) = f(m − x)·1_W(m) with W a complement of V = span(a_1, …, a_j).
#[derive(Debug, Clone)]
pub struct SpanCollapse {
    pub g: DensityFunction,
    pub v: Subspace,
    pub w: Subspace,
    pub x: usize,
    pub complement_kind: ComplementKind,
    /// ĝ(0) = Σ_{w∈W} f(w − x).
    pub g_hat_zero: f64,
    /// sup |ĝ(b)| over the nonzero points of a transversal of ann(W).
    pub m_sup: f64,
    /// ĝ(0)(ĝ(0)²/|W| − M), a lower bound for `count`.
    pub bound: f64,
    /// Σ_{a,d∈W} g(a) g(a+d) g(a+2d).
    pub count: f64,
    /// j ≤ 3n/2.
    pub regime_ok: bool,
    /// W = {0}.
    pub degenerate: bool,
    /// span(a_1..a_j) equals the span of the even-ranked points a_2, a_4, ….
    pub pairing_span_matches: bool,
    /// Largest deviation of |V|⁻¹ Σ_{c∈ann W} e(x·(b+c)) f̂(b+c) from ĝ(b).
    pub formula_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanCollapseReport {
    pub v_basis: Vec<usize>,
    pub w_basis: Vec<usize>,
    pub x: usize,
    pub complement_kind: ComplementKind,
    pub g_hat_zero: f64,
    pub m_sup: f64,
    pub bound: f64,
    pub count: f64,
    pub regime_ok: bool,
    pub degenerate: bool,
    pub pairing_span_matches: bool,
    pub formula_deviation: f64,
}

impl SpanCollapse {
    pub fn report(&self) -> SpanCollapseReport {
        SpanCollapseReport {
            v_basis: self.v.basis_indices(),
            w_basis: self.w.basis_indices(),
            x: self.x,
            complement_kind: self.complement_kind,
            g_hat_zero: self.g_hat_zero,
            m_sup: self.m_sup,
            bound: self.bound,
            count: self.count,
            regime_ok: self.regime_ok,
            degenerate: self.degenerate,
            pairing_span_matches: self.pairing_span_matches,
            formula_deviation: self.formula_deviation,
        }
    }

    /// Carry a progression of support(g) ⊆ W back to support(f).
    pub fn transport(&self, w: &ProgressionWitness) -> ProgressionWitness {
        let params = self.g.params();
        ProgressionWitness { m: params.sub_idx(w.m, self.x), d: w.d }
    }
}

pub fn span_collapse(f: &DensityFunction, order: &SpectralOrder, j: usize) -> Result<SpanCollapse> {
    let params = f.params();
    params.check_same(&order.params())?;
    order.mag_at(j)?;
    let n = params.n() as usize;

    let generators: Vec<usize> =
        (1..=j).filter(|&r| order.mags()[r - 1] > 0.0).map(|r| order.perm()[r - 1]).collect();
    let v = span_indices(params, &generators)?;
    let even: Vec<usize> = (2..=j).step_by(2).map(|r| order.perm()[r - 1]).collect();
    let all: Vec<usize> = order.perm()[..j].to_vec();
    let pairing_span_matches = span_indices(params, &even)? == span_indices(params, &all)?;

    let (w, complement_kind) = complement_with_kind(&v);
    let split = DirectSum::new(&v, &w)?;

    // W − x is the set of m with v(m) = −x.
    let mut masses = vec![0.0; params.size()];
    for (m, &value) in f.values().iter().enumerate() {
        masses[split.split_idx(m).1] += value;
    }
    let slack = 1e-12 * masses.iter().sum::<f64>().max(1.0);
    let mut x = 0;
    for cand in v.members() {
        let cur = masses[params.neg_idx(cand)];
        if cur > masses[params.neg_idx(x)] + slack {
            x = cand;
        }
    }

    let w_mask = w.mask();
    let values: Vec<f64> = (0..params.size())
        .map(|m| if w_mask[m] { f.value(params.sub_idx(m, x)) } else { 0.0 })
        .collect();
    let g = DensityFunction::new(params, values)?;
    let gs = dft(&g);
    let g_hat_zero = gs.at(0).re;

    let ann = w.annihilator();
    let transversal = complement(&ann);
    let m_sup = transversal.members().into_iter().filter(|&b| b != 0).map(|b| gs.at(b).norm()).fold(0.0, f64::max);
    let wsize = w.size() as f64;
    let bound = g_hat_zero * (g_hat_zero * g_hat_zero / wsize - m_sup);
    let size = params.size() as f64;
    let count = size * size * lambda_brute(&g);

    let predicted = predicted_span_spectrum(&dft(f), &ann, x)?;
    let formula_deviation = (0..params.size()).map(|b| (predicted.at(b) - gs.at(b)).norm()).fold(0.0, f64::max);

    Ok(SpanCollapse {
        g,
        degenerate: w.dim() == 0,
        v,
        w,
        x,
        complement_kind,
        g_hat_zero,
        m_sup,
        bound,
        count,
        regime_ok: 2 * j <= 3 * n,
        pairing_span_matches,
        formula_deviation,
    })
}

/// ĝ(b) = |ann W|⁻¹ Σ_{c∈ann W} e^{2πi x·(b+c)/p} f̂(b+c).
fn predicted_span_spectrum(s: &Spectrum, ann: &Subspace, x: usize) -> Result<Spectrum> {
    let params = s.params();
    let roots = roots_of_unity(params.p());
    let members = ann.members();
    let inv = 1.0 / members.len() as f64;
    let coeffs = (0..params.size())
        .map(|b| {
            members
                .iter()
                .map(|&c| {
                    let point = params.add_idx(b, c);
                    roots[params.dot_idx(x, point) as usize] * s.at(point)
                })
                .sum::<Complex64>()
                * inv
        })
        .collect();
    Spectrum::new(params, coeffs)
}
