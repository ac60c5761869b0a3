//! Points of F_p^n and their canonical little-endian index encoding.
//!
//! Most hot loops work on canonical indices directly through the
//! arithmetic helpers on [`FieldParams`]; [`FieldPoint`] is the owned digit
//! vector used at API boundaries.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field size the dense representations accept.
pub const MAX_FIELD_SIZE: usize = 1 << 28;

/// The additive group F_p^n, p an odd prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct FieldParams {
    p: u32,
    n: u32,
    size: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: u32,
    n: u32,
}

impl TryFrom<RawParams> for FieldParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        FieldParams::new(raw.p, raw.n)
    }
}

impl From<FieldParams> for RawParams {
    fn from(params: FieldParams) -> Self {
        RawParams { p: params.p, n: params.n }
    }
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldParams {
    pub fn new(p: u32, n: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not an odd prime")));
        }
        if n < 1 {
            return Err(Error::InvalidParams("dimension n must be at least 1".into()));
        }
        let size = (p as usize)
            .checked_pow(n)
            .filter(|&s| s <= MAX_FIELD_SIZE)
            .ok_or_else(|| {
                Error::InvalidParams(format!("p^n = {p}^{n} exceeds {MAX_FIELD_SIZE}"))
            })?;
        Ok(FieldParams { p, n, size })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// F = p^n.
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    /// The same prime one dimension lower.
    pub fn reduced(&self, dim: u32) -> Result<Self> {
        FieldParams::new(self.p, dim)
    }

    pub(crate) fn check_same(&self, other: &FieldParams) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ParamsMismatch { p1: self.p, n1: self.n, p2: other.p, n2: other.n })
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.size {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, size: self.size })
        }
    }

    /// Componentwise a + b on canonical indices.
    #[inline]
    pub fn add_idx(&self, mut a: usize, mut b: usize) -> usize {
        let p = self.p as usize;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    #[inline]
    pub fn sub_idx(&self, a: usize, b: usize) -> usize {
        self.add_idx(a, self.neg_idx(b))
    }

    #[inline]
    pub fn neg_idx(&self, mut a: usize) -> usize {
        let p = self.p as usize;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    /// c·a for a scalar c in F_p.
    #[inline]
    pub fn scale_idx(&self, c: u32, mut a: usize) -> usize {
        let p = self.p as usize;
        let c = c as usize % p;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((a % p) * c % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    /// c·a + b, the workhorse of line enumeration.
    #[inline]
    pub fn axpy_idx(&self, c: u32, a: usize, b: usize) -> usize {
        self.add_idx(self.scale_idx(c, a), b)
    }

    /// The dot product a·b mod p.
    #[inline]
    pub fn dot_idx(&self, mut a: usize, mut b: usize) -> u32 {
        let p = self.p as usize;
        let mut acc = 0usize;
        for _ in 0..self.n {
            acc += (a % p) * (b % p);
            a /= p;
            b /= p;
        }
        (acc % p) as u32
    }

    /// Multiplicative inverse of a nonzero residue.
    pub fn inv_mod(&self, c: u32) -> u32 {
        inv_mod(c, self.p)
    }

    pub fn point(&self, index: usize) -> Result<FieldPoint> {
        index_to_point(index, *self)
    }

    pub fn zero(&self) -> FieldPoint {
        FieldPoint { p: self.p, digits: vec![0; self.n as usize] }
    }

    /// The standard basis vector e_k.
    pub fn unit(&self, k: usize) -> FieldPoint {
        let mut pt = self.zero();
        pt.digits[k] = 1;
        pt
    }
}

pub(crate) fn inv_mod(c: u32, p: u32) -> u32 {
    let c = (c % p) as u64;
    debug_assert!(c != 0, "inverse of zero");
    // Fermat: c^(p-2).
    let (mut base, mut exp, mut acc) = (c, (p - 2) as u64, 1u64);
    let m = p as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc as u32
}

/// An element of F_p^n stored as its n residues, least significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldPoint {
    p: u32,
    digits: Vec<u32>,
}

impl FieldPoint {
    pub fn from_digits(p: u32, digits: Vec<u32>) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not an odd prime")));
        }
        if let Some(&digit) = digits.iter().find(|&&d| d >= p) {
            return Err(Error::DigitOutOfRange { digit, p });
        }
        Ok(FieldPoint { p, digits })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn params(&self) -> Result<FieldParams> {
        FieldParams::new(self.p, self.digits.len() as u32)
    }

    pub fn index(&self) -> usize {
        let p = self.p as usize;
        self.digits.iter().rev().fold(0usize, |acc, &d| acc * p + d as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    fn check_compatible(&self, other: &FieldPoint) -> Result<()> {
        if self.p == other.p && self.digits.len() == other.digits.len() {
            Ok(())
        } else {
            Err(Error::ParamsMismatch {
                p1: self.p,
                n1: self.digits.len() as u32,
                p2: other.p,
                n2: other.digits.len() as u32,
            })
        }
    }

    pub fn add(&self, other: &FieldPoint) -> Result<FieldPoint> {
        self.check_compatible(other)?;
        let digits = self
            .digits
            .iter()
            .zip(&other.digits)
            .map(|(a, b)| (a + b) % self.p)
            .collect();
        Ok(FieldPoint { p: self.p, digits })
    }

    pub fn sub(&self, other: &FieldPoint) -> Result<FieldPoint> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldPoint {
        let digits = self.digits.iter().map(|&a| (self.p - a) % self.p).collect();
        FieldPoint { p: self.p, digits }
    }

    pub fn scale(&self, c: u32) -> FieldPoint {
        let c = (c % self.p) as u64;
        let digits = self
            .digits
            .iter()
            .map(|&a| ((a as u64 * c) % self.p as u64) as u32)
            .collect();
        FieldPoint { p: self.p, digits }
    }
}

impl PartialOrd for FieldPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical-index order.
impl Ord for FieldPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.digits
            .len()
            .cmp(&other.digits.len())
            .then_with(|| self.digits.iter().rev().cmp(other.digits.iter().rev()))
    }
}

impl fmt::Display for FieldPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, d) in self.digits.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// Little-endian digit decomposition: i = Σ_k digits[k]·p^k.
pub fn index_to_point(index: usize, params: FieldParams) -> Result<FieldPoint> {
    params.check_index(index)?;
    let p = params.p as usize;
    let mut rest = index;
    let digits = (0..params.n)
        .map(|_| {
            let d = (rest % p) as u32;
            rest /= p;
            d
        })
        .collect();
    Ok(FieldPoint { p: params.p, digits })
}

pub fn point_to_index(point: &FieldPoint, params: FieldParams) -> Result<usize> {
    if point.p != params.p || point.digits.len() != params.n as usize {
        return Err(Error::ParamsMismatch {
            p1: point.p,
            n1: point.digits.len() as u32,
            p2: params.p,
            n2: params.n,
        });
    }
    Ok(point.index())
}

/// Σ_k a_k b_k mod p.
pub fn dot(a: &FieldPoint, b: &FieldPoint) -> Result<u32> {
    a.check_compatible(b)?;
    let p = a.p as u64;
    let acc = a
        .digits
        .iter()
        .zip(&b.digits)
        .fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % p);
    Ok(acc as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(p: u32, d: &[u32]) -> FieldPoint {
        FieldPoint::from_digits(p, d.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FieldParams::new(2, 3).is_err());
        assert!(FieldParams::new(9, 2).is_err());
        assert!(FieldParams::new(3, 0).is_err());
        assert!(FieldParams::new(3, 40).is_err());
        assert_eq!(FieldParams::new(5, 3).unwrap().size(), 125);
    }

    #[test]
    fn index_examples() {
        let params = FieldParams::new(3, 2).unwrap();
        assert_eq!(index_to_point(0, params).unwrap(), pt(3, &[0, 0]));
        assert_eq!(index_to_point(5, params).unwrap(), pt(3, &[2, 1]));
        assert!(matches!(
            index_to_point(9, params),
            Err(Error::IndexOutOfRange { index: 9, size: 9 })
        ));
    }

    #[test]
    fn index_roundtrip_f3_4() {
        let params = FieldParams::new(3, 4).unwrap();
        for i in 0..81 {
            let point = index_to_point(i, params).unwrap();
            assert_eq!(point_to_index(&point, params).unwrap(), i);
        }
    }

    #[test]
    fn dot_examples() {
        // 1·2 + 2·2 = 6 ≡ 0 (mod 3).
        assert_eq!(dot(&pt(3, &[1, 2]), &pt(3, &[2, 2])).unwrap(), 0);
        assert_eq!(dot(&pt(3, &[1, 2]), &pt(3, &[2, 1])).unwrap(), 1);
        assert_eq!(dot(&pt(5, &[1, 2]), &pt(5, &[1, 2])).unwrap(), 0);
        assert_eq!(dot(&pt(3, &[1, 2]), &pt(3, &[0, 0])).unwrap(), 0);
        assert!(dot(&pt(3, &[1, 2]), &pt(5, &[1, 2])).is_err());
        assert!(dot(&pt(3, &[1, 2]), &pt(3, &[1, 2, 0])).is_err());
    }

    #[test]
    fn dot_symmetric_bilinear_exhaustive() {
        let params = FieldParams::new(3, 2).unwrap();
        let f = params.size();
        for a in 0..f {
            for b in 0..f {
                assert_eq!(params.dot_idx(a, b), params.dot_idx(b, a));
                for c in 0..f {
                    let lhs = params.dot_idx(params.add_idx(a, b), c);
                    let rhs = (params.dot_idx(a, c) + params.dot_idx(b, c)) % 3;
                    assert_eq!(lhs, rhs);
                }
                for s in 0..3 {
                    assert_eq!(
                        params.dot_idx(params.scale_idx(s, a), b),
                        params.dot_idx(a, b) * s % 3
                    );
                }
            }
        }
    }

    #[test]
    fn index_arithmetic_matches_points() {
        let params = FieldParams::new(5, 3).unwrap();
        for a in (0..125).step_by(7) {
            for b in (0..125).step_by(11) {
                let pa = params.point(a).unwrap();
                let pb = params.point(b).unwrap();
                assert_eq!(params.add_idx(a, b), pa.add(&pb).unwrap().index());
                assert_eq!(params.sub_idx(a, b), pa.sub(&pb).unwrap().index());
                assert_eq!(params.neg_idx(a), pa.neg().index());
                assert_eq!(params.scale_idx(3, a), pa.scale(3).index());
                assert_eq!(params.dot_idx(a, b), dot(&pa, &pb).unwrap());
            }
        }
    }

    #[test]
    fn ordering_is_canonical_index() {
        let params = FieldParams::new(3, 3).unwrap();
        let mut points: Vec<_> = (0..27).rev().map(|i| params.point(i).unwrap()).collect();
        points.sort();
        let order: Vec<usize> = points.iter().map(FieldPoint::index).collect();
        assert_eq!(order, (0..27).collect::<Vec<_>>());
    }

    #[test]
    fn inverses() {
        for p in [3u32, 5, 7, 11, 13] {
            for c in 1..p {
                assert_eq!(c * inv_mod(c, p) % p, 1);
            }
        }
    }
}
