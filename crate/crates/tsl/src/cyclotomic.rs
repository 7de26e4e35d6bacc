//! Exact arithmetic in ℚ(ζ_p), p-adic valuations, truncated power series,
//! and Newton polygons.
//!
//! Elements are rational coordinate vectors over the basis 1, ζ, …, ζ^{p−2}
//! with the reduction ζ^{p−1} = −(1 + ζ + ⋯ + ζ^{p−2}).  All operations are
//! exact; nothing in this module rounds.
//!
//! The valuation [`ord_p`] is normalized so ord_p(p) = 1, hence
//! ord_p(1 − ζ) = 1/(p−1).  It is computed by stripping factors of (1 − ζ):
//! an integral element is divisible by (1 − ζ) exactly when its coefficient
//! sum vanishes mod p, because ζ ↦ 1 identifies ℤ[ζ]/(1 − ζ) with 𝔽_p.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{rat_from_str, rat_to_string};

/// An element of ℚ(ζ_p) as coordinates over 1, ζ, …, ζ^{p−2}.
/// For p = 2 the field is ℚ itself (ζ = −1) and the vector has length 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclotomicNumber {
    pub p: u64,
    pub coeffs: Vec<BigRational>,
}

#[derive(Serialize, Deserialize)]
struct CycWire {
    p: u64,
    coeffs: Vec<String>,
}

impl Serialize for CyclotomicNumber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CycWire {
            p: self.p,
            coeffs: self.coeffs.iter().map(rat_to_string).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CyclotomicNumber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = CycWire::deserialize(d)?;
        if wire.p < 2 || wire.coeffs.len() != basis_len(wire.p) {
            return Err(serde::de::Error::custom(format!(
                "cyclotomic vector over p={} needs {} coordinates, got {}",
                wire.p,
                basis_len(wire.p.max(2)),
                wire.coeffs.len()
            )));
        }
        let coeffs = wire
            .coeffs
            .iter()
            .map(|s| rat_from_str(s).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<_, _>>()?;
        Ok(CyclotomicNumber { p: wire.p, coeffs })
    }
}

fn basis_len(p: u64) -> usize {
    (p - 1) as usize
}

impl CyclotomicNumber {
    pub fn zero(p: u64) -> Self {
        CyclotomicNumber {
            p,
            coeffs: vec![BigRational::zero(); basis_len(p)],
        }
    }

    pub fn one(p: u64) -> Self {
        Self::from_rational(p, BigRational::one())
    }

    pub fn from_rational(p: u64, r: BigRational) -> Self {
        let mut x = Self::zero(p);
        x.coeffs[0] = r;
        x
    }

    pub fn from_int(p: u64, n: i64) -> Self {
        Self::from_rational(p, BigRational::from_integer(n.into()))
    }

    /// ζ^k, for any integer exponent (reduced mod p).
    pub fn zeta_pow(p: u64, k: i64) -> Self {
        let k = k.rem_euclid(p as i64) as usize;
        let mut x = Self::zero(p);
        if k < basis_len(p) {
            x.coeffs[k] = BigRational::one();
        } else {
            // k = p−1: ζ^{p−1} = −(1 + ζ + ⋯ + ζ^{p−2})
            for c in &mut x.coeffs {
                *c = -BigRational::one();
            }
        }
        x
    }

    /// Σ_t counts[t]·ζ^t for counts indexed by trace class 0..p.
    pub fn from_zeta_counts(p: u64, counts: &[i64]) -> Self {
        assert_eq!(counts.len(), p as usize);
        let last = counts[(p - 1) as usize];
        let mut x = Self::zero(p);
        for (i, c) in x.coeffs.iter_mut().enumerate() {
            *c = BigRational::from_integer(BigInt::from(counts[i] - last));
        }
        x
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The value as a rational number, if the element lies in ℚ.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        CyclotomicNumber {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        CyclotomicNumber {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        CyclotomicNumber {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        CyclotomicNumber {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| a * r).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let n = basis_len(self.p);
        // convolve into exponents 0..2n−1, then fold ζ^{k} for k ≥ p−1
        // back using ζ^p = 1 and the basis reduction for ζ^{p−1}
        let mut raw = vec![BigRational::zero(); 2 * n - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                raw[i + j] += a * b;
            }
        }
        let mut out = Self::zero(self.p);
        for (k, v) in raw.into_iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let k = k % self.p as usize;
            if k < n {
                out.coeffs[k] += v;
            } else {
                for c in &mut out.coeffs {
                    *c -= &v;
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one(self.p);
        for _ in 0..e {
            result = result.mul(self);
        }
        result
    }

    /// Galois conjugate σ_j : ζ ↦ ζ^j, for j coprime to p.
    pub fn conjugate(&self, j: u64) -> Self {
        debug_assert!(j % self.p != 0);
        let mut out = Self::zero(self.p);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let img = Self::zeta_pow(self.p, (i as u64 * j) as i64).scale(c);
            out = out.add(&img);
        }
        out
    }

    /// Field norm N_{ℚ(ζ)/ℚ}, the product over all conjugates.
    pub fn norm(&self) -> BigRational {
        let mut prod = Self::one(self.p);
        for j in 1..self.p {
            prod = prod.mul(&self.conjugate(j));
        }
        prod.as_rational().expect("norm is rational").clone()
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Parse("inverse of zero".into()));
        }
        let mut prod = Self::one(self.p);
        for j in 2..self.p {
            prod = prod.mul(&self.conjugate(j));
        }
        let n = self.mul(&prod).as_rational().expect("norm is rational").clone();
        Ok(prod.scale(&n.recip()))
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixed cyclotomic fields");
    }
}

/// p-adic valuation on ℚ(ζ_p), normalized so ord_p(p) = 1; values lie in
/// (1/(p−1))ℤ.  Errors on zero, whose valuation is not a number.
pub fn ord_p(x: &CyclotomicNumber) -> Result<BigRational> {
    if x.is_zero() {
        return Err(Error::OrdOfZero);
    }
    let p = x.p;
    // clear denominators: x = y / L with y integral
    let l = crate::rational::denominator_lcm(&x.coeffs);
    let mut y: Vec<BigInt> = x
        .coeffs
        .iter()
        .map(|c| {
            let scaled = c * BigRational::from_integer(l.clone());
            debug_assert!(scaled.is_integer());
            scaled.to_integer()
        })
        .collect();
    let mut val = -BigRational::from_integer(int_val_p(&l, p).into());
    // strip factors of (1 − ζ), each worth 1/(p−1)
    let one_minus_zeta = CyclotomicNumber::one(p).sub(&CyclotomicNumber::zeta_pow(p, 1));
    let inv = one_minus_zeta.inv().expect("1 − ζ is nonzero");
    let step = BigRational::new(BigInt::one(), (p - 1).into());
    let pb = BigInt::from(p);
    loop {
        let residue: BigInt = y.iter().sum();
        if !(residue % &pb).is_zero() {
            return Ok(val);
        }
        let cur = CyclotomicNumber {
            p,
            coeffs: y.iter().map(|c| BigRational::from_integer(c.clone())).collect(),
        };
        let quotient = cur.mul(&inv);
        y = quotient
            .coeffs
            .iter()
            .map(|c| {
                debug_assert!(c.is_integer(), "exact division by 1 − ζ");
                c.to_integer()
            })
            .collect();
        val += &step;
    }
}

/// v_p of a nonzero integer.
fn int_val_p(n: &BigInt, p: u64) -> u32 {
    let mut n = n.abs();
    let pb = BigInt::from(p);
    let mut v = 0;
    while (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    v
}

// ---------------------------------------------------------------------------
// truncated power series over ℚ(ζ_p)

/// exp of a series with zero constant term, truncated to the input length.
/// Coefficients index T^0, T^1, …; `a[0]` must vanish.
pub fn series_exp(a: &[CyclotomicNumber]) -> Result<Vec<CyclotomicNumber>> {
    let p = a.first().map_or(2, |c| c.p);
    if a.first().is_some_and(|c| !c.is_zero()) {
        return Err(Error::BadConstantTerm("exp needs constant term 0".into()));
    }
    let mut b = vec![CyclotomicNumber::one(p)];
    for k in 1..a.len() {
        // k·b_k = Σ_{j=1..k} j·a_j·b_{k−j}
        let mut acc = CyclotomicNumber::zero(p);
        for j in 1..=k {
            if a[j].is_zero() || b[k - j].is_zero() {
                continue;
            }
            let term = a[j].mul(&b[k - j]).scale(&BigRational::from_integer(j.into()));
            acc = acc.add(&term);
        }
        b.push(acc.scale(&BigRational::new(BigInt::one(), k.into())));
    }
    Ok(b)
}

/// log of a series with constant term 1, truncated to the input length.
pub fn series_log(b: &[CyclotomicNumber]) -> Result<Vec<CyclotomicNumber>> {
    let p = b.first().map_or(2, |c| c.p);
    if b.first().is_none_or(|c| *c != CyclotomicNumber::one(p)) {
        return Err(Error::BadConstantTerm("log needs constant term 1".into()));
    }
    let mut a = vec![CyclotomicNumber::zero(p)];
    for k in 1..b.len() {
        let mut acc = b[k].clone();
        for j in 1..k {
            if a[j].is_zero() || b[k - j].is_zero() {
                continue;
            }
            let term = a[j]
                .mul(&b[k - j])
                .scale(&BigRational::new(BigInt::from(j), BigInt::from(k)));
            acc = acc.sub(&term);
        }
        a.push(acc);
    }
    Ok(a)
}

/// Product of two series, truncated to `len` coefficients.
pub fn series_mul(a: &[CyclotomicNumber], b: &[CyclotomicNumber], len: usize) -> Vec<CyclotomicNumber> {
    let p = a.first().or(b.first()).map_or(2, |c| c.p);
    let mut out = vec![CyclotomicNumber::zero(p); len];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() || i >= len {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            if !y.is_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    out
}

/// Multiplicative inverse of a series with constant term 1, to `len` terms.
pub fn series_inv(b: &[CyclotomicNumber], len: usize) -> Result<Vec<CyclotomicNumber>> {
    let p = b.first().map_or(2, |c| c.p);
    if b.first().is_none_or(|c| *c != CyclotomicNumber::one(p)) {
        return Err(Error::BadConstantTerm("inverse needs constant term 1".into()));
    }
    let mut out = vec![CyclotomicNumber::zero(p); len];
    out[0] = CyclotomicNumber::one(p);
    for k in 1..len {
        let mut acc = CyclotomicNumber::zero(p);
        for j in 1..=k.min(b.len() - 1) {
            if !b[j].is_zero() && !out[k - j].is_zero() {
                acc = acc.add(&b[j].mul(&out[k - j]));
            }
        }
        out[k] = acc.neg();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Newton polygons

/// The lower convex hull of the points (i, v(c_i)) of a polynomial, with
/// zero coefficients skipped.  Vertices are stored left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub vertices: Vec<(usize, BigRational)>,
}

impl Serialize for NewtonPolygon {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<(usize, String)> = self
            .vertices
            .iter()
            .map(|(x, y)| (*x, rat_to_string(y)))
            .collect();
        wire.serialize(ser)
    }
}

impl NewtonPolygon {
    /// Builds the polygon from valuations `vals[i] = Some(v(c_i))`, with
    /// `None` marking zero coefficients.
    pub fn from_valuations(vals: &[Option<BigRational>]) -> Self {
        let pts: Vec<(usize, BigRational)> = vals
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.clone().map(|v| (i, v)))
            .collect();
        let mut hull: Vec<(usize, BigRational)> = Vec::new();
        for pt in pts {
            while hull.len() >= 2 {
                let a = &hull[hull.len() - 2];
                let b = &hull[hull.len() - 1];
                // keep b only if it lies strictly below chord a→pt
                let lhs = (&b.1 - &a.1) * BigRational::from_integer((pt.0 - a.0).into());
                let rhs = (&pt.1 - &a.1) * BigRational::from_integer((b.0 - a.0).into());
                if lhs < rhs {
                    break;
                }
                hull.pop();
            }
            hull.push(pt);
        }
        NewtonPolygon { vertices: hull }
    }

    /// Slopes with multiplicity, one entry per lattice step in x.
    pub fn slopes(&self) -> Vec<BigRational> {
        let mut out = Vec::new();
        for w in self.vertices.windows(2) {
            let run = w[1].0 - w[0].0;
            let slope = (&w[1].1 - &w[0].1) / BigRational::from_integer(run.into());
            for _ in 0..run {
                out.push(slope.clone());
            }
        }
        out
    }

    /// Height of the hull above x, for x within the hull's span.
    pub fn value_at(&self, x: &BigRational) -> BigRational {
        for w in self.vertices.windows(2) {
            let x0 = BigRational::from_integer(w[0].0.into());
            let x1 = BigRational::from_integer(w[1].0.into());
            if *x >= x0 && *x <= x1 {
                let t = (x - &x0) / (&x1 - &x0);
                return &w[0].1 + t * (&w[1].1 - &w[0].1);
            }
        }
        self.vertices
            .last()
            .map(|v| v.1.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn left(&self) -> Option<&(usize, BigRational)> {
        self.vertices.first()
    }

    pub fn right(&self) -> Option<&(usize, BigRational)> {
        self.vertices.last()
    }
}

/// Whether `upper` lies on or above `lower` over their common span, with
/// equal spans and equal left endpoints.  Both hulls are convex, so it
/// suffices to compare at the union of their vertex abscissas.
pub fn polygon_dominates(upper: &NewtonPolygon, lower: &NewtonPolygon) -> bool {
    match (upper.left(), lower.left(), upper.right(), lower.right()) {
        (Some(ul), Some(ll), Some(ur), Some(lr)) => {
            if ul.0 != ll.0 || ul.1 != ll.1 || ur.0 != lr.0 {
                return false;
            }
            upper
                .vertices
                .iter()
                .chain(&lower.vertices)
                .all(|(x, _)| {
                    let x = BigRational::from_integer((*x).into());
                    upper.value_at(&x) >= lower.value_at(&x)
                })
        }
        _ => false,
    }
}
