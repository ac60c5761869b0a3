//! Subspaces of F_p^n in reduced echelon form, complements, direct-sum
//! splitting and coordinate maps.

use crate::error::{Error, Result};
use crate::field::{inv_mod, FieldParams, FieldPoint};

/// Reduce `rows` (each of length n) to reduced row echelon form mod p.
/// A row's pivot is its lowest-indexed nonzero coordinate; pivots come out
/// in increasing order and are normalized to 1.
fn rref(mut rows: Vec<Vec<u32>>, p: u32, n: usize) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let Some(found) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, found);
        let inv = inv_mod(rows[rank][col], p);
        for x in rows[rank].iter_mut() {
            *x = (*x as u64 * inv as u64 % p as u64) as u32;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col] == 0 {
                continue;
            }
            let c = row[col] as u64;
            for (x, &y) in row.iter_mut().zip(&pivot_row) {
                *x = ((*x as u64 + (p as u64 - c) * y as u64) % p as u64) as u32;
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    (rows, pivots)
}

/// Solve Σ_k c_k columns[k] = target mod p. Returns `None` when the system
/// is inconsistent; when the columns are dependent, one solution is returned.
fn solve(columns: &[Vec<u32>], target: &[u32], p: u32) -> Option<Vec<u32>> {
    let n = target.len();
    let k = columns.len();
    // Augmented n x (k+1) matrix.
    let mut m: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            let mut row: Vec<u32> = columns.iter().map(|c| c[i]).collect();
            row.push(target[i]);
            row
        })
        .collect();
    let (m2, pivots) = rref(std::mem::take(&mut m), p, k + 1);
    if pivots.last() == Some(&k) {
        return None;
    }
    let mut coeffs = vec![0u32; k];
    for (row, &col) in m2.iter().zip(&pivots) {
        coeffs[col] = row[k];
    }
    Some(coeffs)
}

/// A linear subspace, stored as a reduced echelon basis so that equal
/// subspaces have identical representations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    params: FieldParams,
    basis: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

/// How a complement was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementKind {
    /// W = V^⊥, which is a direct-sum complement.
    Orthogonal,
    /// V meets V^⊥ nontrivially; W is spanned by unit vectors off V's pivots.
    Extension,
}

impl Subspace {
    pub fn zero(params: FieldParams) -> Self {
        Subspace { params, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(params: FieldParams) -> Self {
        let n = params.n() as usize;
        let basis = (0..n)
            .map(|k| (0..n).map(|i| u32::from(i == k)).collect())
            .collect();
        Subspace { params, basis, pivots: (0..n).collect() }
    }

    fn from_rows(params: FieldParams, rows: Vec<Vec<u32>>) -> Self {
        let (basis, pivots) = rref(rows, params.p(), params.n() as usize);
        Subspace { params, basis, pivots }
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// |V| = p^dim.
    pub fn size(&self) -> usize {
        (self.params.p() as usize).pow(self.dim() as u32)
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis(&self) -> Vec<FieldPoint> {
        self.basis
            .iter()
            .map(|row| FieldPoint::from_digits(self.params.p(), row.clone()).expect("valid row"))
            .collect()
    }

    pub fn basis_indices(&self) -> Vec<usize> {
        self.basis().iter().map(FieldPoint::index).collect()
    }

    fn reduce(&self, mut v: Vec<u32>) -> Vec<u32> {
        let p = self.params.p() as u64;
        for (row, &col) in self.basis.iter().zip(&self.pivots) {
            let c = v[col] as u64;
            if c == 0 {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(row) {
                *x = ((*x as u64 + (p - c) * y as u64) % p) as u32;
            }
        }
        v
    }

    pub fn contains(&self, point: &FieldPoint) -> Result<bool> {
        self.check_point(point)?;
        Ok(self.reduce(point.digits().to_vec()).iter().all(|&d| d == 0))
    }

    pub fn contains_idx(&self, index: usize) -> bool {
        let point = self.params.point(index).expect("index in range");
        self.reduce(point.digits().to_vec()).iter().all(|&d| d == 0)
    }

    fn check_point(&self, point: &FieldPoint) -> Result<()> {
        if point.p() != self.params.p() || point.dim() != self.params.n() as usize {
            return Err(Error::ParamsMismatch {
                p1: point.p(),
                n1: point.dim() as u32,
                p2: self.params.p(),
                n2: self.params.n(),
            });
        }
        Ok(())
    }

    /// Canonical indices of all members, ascending.
    pub fn members(&self) -> Vec<usize> {
        let map = coordinate_iso(self);
        let mut out: Vec<usize> = (0..self.size()).map(|c| map.apply_idx(c)).collect();
        out.sort_unstable();
        out
    }

    /// Membership mask of length F.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.size()];
        for m in self.members() {
            mask[m] = true;
        }
        mask
    }

    /// {a : a·v = 0 for all v in V}.
    pub fn annihilator(&self) -> Subspace {
        let n = self.params.n() as usize;
        let p = self.params.p();
        let rows = (0..n)
            .filter(|q| !self.pivots.contains(q))
            .map(|q| {
                let mut x = vec![0u32; n];
                x[q] = 1;
                for (row, &col) in self.basis.iter().zip(&self.pivots) {
                    x[col] = (p - row[q]) % p;
                }
                x
            })
            .collect();
        Subspace::from_rows(self.params, rows)
    }

    /// span(V ∪ W).
    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.params.check_same(&other.params)?;
        let rows = self.basis.iter().chain(&other.basis).cloned().collect();
        Ok(Subspace::from_rows(self.params, rows))
    }

    /// Whether V ∩ W = {0}.
    pub fn meets_trivially(&self, other: &Subspace) -> Result<bool> {
        Ok(self.sum(other)?.dim() == self.dim() + other.dim())
    }

    /// Whether V ∩ V^⊥ = {0}, i.e. the dot product is nondegenerate on V.
    pub fn is_nondegenerate(&self) -> bool {
        self.meets_trivially(&self.annihilator()).expect("same params")
    }
}

/// The smallest subspace containing `points`; the empty list spans {0}.
pub fn span(params: FieldParams, points: &[FieldPoint]) -> Result<Subspace> {
    let rows = points
        .iter()
        .map(|pt| {
            if pt.p() != params.p() || pt.dim() != params.n() as usize {
                Err(Error::ParamsMismatch {
                    p1: pt.p(),
                    n1: pt.dim() as u32,
                    p2: params.p(),
                    n2: params.n(),
                })
            } else {
                Ok(pt.digits().to_vec())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Subspace::from_rows(params, rows))
}

/// Span of points given by canonical index.
pub fn span_indices(params: FieldParams, indices: &[usize]) -> Result<Subspace> {
    let points = indices.iter().map(|&i| params.point(i)).collect::<Result<Vec<_>>>()?;
    span(params, &points)
}

/// V = {v : v·t = 0} for t ≠ 0.
pub fn kernel_of_functional(t: &FieldPoint) -> Result<Subspace> {
    if t.is_zero() {
        return Err(Error::ZeroVector);
    }
    let params = t.params()?;
    Ok(span(params, std::slice::from_ref(t))?.annihilator())
}

/// A direct-sum complement of V. V^⊥ is used whenever V ∩ V^⊥ = {0};
/// otherwise V's echelon basis is extended by the unit vectors at its
/// non-pivot coordinates.
pub fn complement(v: &Subspace) -> Subspace {
    complement_with_kind(v).0
}

pub fn complement_with_kind(v: &Subspace) -> (Subspace, ComplementKind) {
    let perp = v.annihilator();
    if v.meets_trivially(&perp).expect("same params") {
        return (perp, ComplementKind::Orthogonal);
    }
    let n = v.params.n() as usize;
    let rows = (0..n)
        .filter(|q| !v.pivots.contains(q))
        .map(|q| (0..n).map(|i| u32::from(i == q)).collect())
        .collect();
    (Subspace::from_rows(v.params, rows), ComplementKind::Extension)
}

/// A verified splitting F = V ⊕ W with a precomputed change of basis, so
/// each point splits in O(n²).
#[derive(Debug, Clone)]
pub struct DirectSum {
    v: Subspace,
    w: Subspace,
    // Row i of `inverse` gives coordinate i (W basis first, then V basis).
    inverse: Vec<Vec<u32>>,
}

impl DirectSum {
    pub fn new(v: &Subspace, w: &Subspace) -> Result<Self> {
        v.params.check_same(&w.params)?;
        let n = v.params.n() as usize;
        if v.dim() + w.dim() != n {
            return Err(Error::NotComplementary(format!(
                "dim V + dim W = {} + {} != {n}",
                v.dim(),
                w.dim()
            )));
        }
        if !v.meets_trivially(w)? {
            return Err(Error::NotComplementary("V ∩ W ≠ {0}".into()));
        }
        let p = v.params.p();
        let columns: Vec<Vec<u32>> = w.basis.iter().chain(&v.basis).cloned().collect();
        let inverse_cols: Vec<Vec<u32>> = (0..n)
            .map(|k| {
                let e: Vec<u32> = (0..n).map(|i| u32::from(i == k)).collect();
                solve(&columns, &e, p).expect("basis of F")
            })
            .collect();
        let inverse = (0..n).map(|i| inverse_cols.iter().map(|c| c[i]).collect()).collect();
        Ok(DirectSum { v: v.clone(), w: w.clone(), inverse })
    }

    pub fn v(&self) -> &Subspace {
        &self.v
    }

    pub fn w(&self) -> &Subspace {
        &self.w
    }

    /// (w(a), v(a)) as canonical indices.
    pub fn split_idx(&self, a: usize) -> (usize, usize) {
        let params = self.v.params;
        let p = params.p() as u64;
        let digits = params.point(a).expect("index in range");
        let digits = digits.digits();
        let coords: Vec<u64> = self
            .inverse
            .iter()
            .map(|row| row.iter().zip(digits).map(|(&x, &y)| x as u64 * y as u64).sum::<u64>() % p)
            .collect();
        let n = params.n() as usize;
        let combine = |basis: &[Vec<u32>], cs: &[u64]| -> usize {
            let mut out = vec![0u64; n];
            for (row, &c) in basis.iter().zip(cs) {
                for (o, &x) in out.iter_mut().zip(row) {
                    *o = (*o + c * x as u64) % p;
                }
            }
            out.iter().rev().fold(0usize, |acc, &d| acc * p as usize + d as usize)
        };
        let wd = self.w.dim();
        (combine(&self.w.basis, &coords[..wd]), combine(&self.v.basis, &coords[wd..]))
    }
}

/// a = w + v with w ∈ W, v ∈ V.
pub fn decompose(a: &FieldPoint, v: &Subspace, w: &Subspace) -> Result<(FieldPoint, FieldPoint)> {
    v.check_point(a)?;
    let sum = DirectSum::new(v, w)?;
    let (wi, vi) = sum.split_idx(a.index());
    Ok((v.params.point(wi)?, v.params.point(vi)?))
}

/// φ(c) = Σ_k c_k basis[k], the linear bijection F_p^{dim V} → V fixed by
/// the echelon basis.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    params: FieldParams,
    basis: Vec<usize>,
}

pub fn coordinate_iso(v: &Subspace) -> CoordinateMap {
    CoordinateMap { params: v.params, basis: v.basis_indices() }
}

impl CoordinateMap {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn target(&self) -> FieldParams {
        self.params
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn apply(&self, coords: &[u32]) -> Result<FieldPoint> {
        if coords.len() != self.basis.len() {
            return Err(Error::LengthMismatch { expected: self.basis.len(), found: coords.len() });
        }
        if let Some(&digit) = coords.iter().find(|&&c| c >= self.params.p()) {
            return Err(Error::DigitOutOfRange { digit, p: self.params.p() });
        }
        let out = coords
            .iter()
            .zip(&self.basis)
            .fold(0usize, |acc, (&c, &b)| self.params.axpy_idx(c, b, acc));
        self.params.point(out)
    }

    /// φ applied to the little-endian index of a coordinate vector.
    pub fn apply_idx(&self, mut c: usize) -> usize {
        let p = self.params.p() as usize;
        let mut acc = 0;
        for &b in &self.basis {
            acc = self.params.axpy_idx((c % p) as u32, b, acc);
            c /= p;
        }
        acc
    }

    /// ψ(a)_k = a·basis[k], the dual coordinates of a frequency.
    pub fn dual_coords_idx(&self, a: usize) -> usize {
        let p = self.params.p() as usize;
        self.basis
            .iter()
            .rev()
            .fold(0usize, |acc, &b| acc * p + self.params.dot_idx(a, b) as usize)
    }
}

/// An injective affine map F_p^k → F_p^n, x ↦ Σ x_i columns[i] + offset.
/// Composed collapses are tracked with one of these so that witnesses found
/// at any depth can be carried back to the original space.
#[derive(Debug, Clone)]
pub struct AffineEmbedding {
    source: FieldParams,
    target: FieldParams,
    columns: Vec<usize>,
    offset: usize,
}

impl AffineEmbedding {
    pub fn identity(params: FieldParams) -> Self {
        let columns = (0..params.n() as usize).map(|k| params.unit(k).index()).collect();
        AffineEmbedding { source: params, target: params, columns, offset: 0 }
    }

    pub fn source(&self) -> FieldParams {
        self.source
    }

    pub fn target(&self) -> FieldParams {
        self.target
    }

    pub fn linear_idx(&self, mut x: usize) -> usize {
        let p = self.source.p() as usize;
        let mut acc = 0;
        for &col in &self.columns {
            acc = self.target.axpy_idx((x % p) as u32, col, acc);
            x /= p;
        }
        acc
    }

    pub fn point_idx(&self, x: usize) -> usize {
        self.target.add_idx(self.linear_idx(x), self.offset)
    }

    /// Precompose with y ↦ φ(y) − shift, where φ is a coordinate map into
    /// this embedding's source.
    pub fn then_collapse(&self, map: &CoordinateMap, shift: usize) -> Result<Self> {
        self.source.check_same(&map.target())?;
        let dim = map.dim() as u32;
        let source = self.source.reduced(dim)?;
        let columns = map.basis().iter().map(|&b| self.linear_idx(b)).collect();
        let offset = self.point_idx(self.source.neg_idx(shift));
        Ok(AffineEmbedding { source, target: self.target, columns, offset })
    }
}
