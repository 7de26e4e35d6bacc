//! Arithmetic in 𝔽_{p^m} with deterministic construction.
//!
//! Every field of a given size is built the same way: elements are
//! coefficient vectors over 𝔽_p in a root `t` of the lexicographically
//! smallest monic irreducible modulus of degree m (coefficients compared
//! low-to-high as integers 0..p−1).  Two fields with equal (p, m) are
//! therefore identical, and every result that depends on field modeling is
//! reproducible across runs and machines.
//!
//! Extensions are related by explicit [`Embedding`]s: the smaller field's
//! modulus is rooted in the larger field and the lexicographically smallest
//! root is chosen.  Towers compose embeddings step by step, so diagrams
//! built along a tower commute by construction.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on q = p^m for any field this crate will construct; individual
/// operations apply their own (smaller) enumeration ceilings.
pub const MAX_FIELD_SIZE: u64 = 1 << 40;

/// An element of 𝔽_{p^m}: coefficients of 1, t, …, t^{m−1}, each in 0..p.
/// The (p, m) tag makes elements self-describing, which is unambiguous
/// because the modulus is a deterministic function of (p, m).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    pub p: u64,
    pub m: u32,
    pub coeffs: Vec<u64>,
}

impl FieldElement {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// A finite field 𝔽_{p^m} with its modulus and cached derived data.
#[derive(Debug)]
pub struct FieldSpec {
    pub p: u64,
    pub m: u32,
    /// Monic modulus, coefficients low-to-high, length m+1.
    pub modulus: Vec<u64>,
    /// Traces of the basis monomials t^i, used to evaluate the absolute
    /// trace as an 𝔽_p-linear form.
    basis_traces: Vec<u64>,
    generator: OnceLock<FieldElement>,
}

/// Builds 𝔽_{p^m}.  The modulus is the lexicographically smallest monic
/// irreducible polynomial of degree m over 𝔽_p (coefficients compared
/// low-to-high), so the construction is a pure function of (p, m).
pub fn make_field(p: u64, m: u32) -> Result<FieldSpec> {
    build_field(p, m, None)
}

/// Builds 𝔽_{p^m} with a caller-supplied modulus (coefficients low-to-high,
/// monic of degree m).  Rejected unless the polynomial is irreducible.
pub fn make_field_with_modulus(p: u64, m: u32, modulus: Vec<u64>) -> Result<FieldSpec> {
    build_field(p, m, Some(modulus))
}

fn build_field(p: u64, m: u32, modulus: Option<Vec<u64>>) -> Result<FieldSpec> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if m == 0 {
        return Err(Error::BadDegree);
    }
    let q = checked_pow(p, m).ok_or(Error::SizeCeilingExceeded(u64::MAX, MAX_FIELD_SIZE))?;
    if q > MAX_FIELD_SIZE {
        return Err(Error::SizeCeilingExceeded(q, MAX_FIELD_SIZE));
    }
    let modulus = match modulus {
        Some(mut given) => {
            given.iter_mut().for_each(|c| *c %= p);
            let monic_deg_m = given.len() == m as usize + 1 && given[m as usize] == 1;
            if !monic_deg_m || !is_irreducible(&given, p) {
                return Err(Error::ReducibleModulus);
            }
            given
        }
        None => smallest_irreducible(p, m),
    };
    let mut field = FieldSpec {
        p,
        m,
        modulus,
        basis_traces: Vec::new(),
        generator: OnceLock::new(),
    };
    field.basis_traces = (0..m)
        .map(|i| {
            let mut acc = field.zero();
            let mut x = field.monomial(i);
            for _ in 0..m {
                acc = field.add(&acc, &x);
                x = field.pow(&x, p.into());
            }
            debug_assert!(acc.coeffs[1..].iter().all(|&c| c == 0));
            acc.coeffs[0]
        })
        .collect();
    Ok(field)
}

impl FieldSpec {
    pub fn q(&self) -> u64 {
        checked_pow(self.p, self.m).expect("checked at construction")
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            p: self.p,
            m: self.m,
            coeffs: vec![0; self.m as usize],
        }
    }

    pub fn one(&self) -> FieldElement {
        self.from_int(1)
    }

    /// The basis monomial t^i (i < m).
    pub fn monomial(&self, i: u32) -> FieldElement {
        let mut e = self.zero();
        e.coeffs[i as usize] = 1;
        e
    }

    /// Reduction of an integer into the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        let mut e = self.zero();
        e.coeffs[0] = n.rem_euclid(self.p as i64) as u64;
        e
    }

    pub fn element_from_coeffs(&self, coeffs: &[u64]) -> Result<FieldElement> {
        if coeffs.len() != self.m as usize {
            return Err(Error::Parse(format!(
                "element needs {} coefficients, got {}",
                self.m,
                coeffs.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|&&c| c >= self.p) {
            return Err(Error::Parse(format!("coefficient {c} not reduced mod {}", self.p)));
        }
        Ok(FieldElement {
            p: self.p,
            m: self.m,
            coeffs: coeffs.to_vec(),
        })
    }

    fn check(&self, e: &FieldElement) {
        debug_assert!(
            e.p == self.p && e.m == self.m,
            "element of F_{}^{} used in F_{}^{}",
            e.p,
            e.m,
            self.p,
            self.m
        );
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| (x + y) % self.p)
            .collect();
        FieldElement { p: self.p, m: self.m, coeffs }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| (x + self.p - y) % self.p)
            .collect();
        FieldElement { p: self.p, m: self.m, coeffs }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        self.sub(&self.zero(), a)
    }

    pub fn scale(&self, a: &FieldElement, c: u64) -> FieldElement {
        self.check(a);
        let c = c % self.p;
        let coeffs = a.coeffs.iter().map(|&x| x * c % self.p).collect();
        FieldElement { p: self.p, m: self.m, coeffs }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        let m = self.m as usize;
        let mut prod = vec![0u64; 2 * m - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        self.reduce(&mut prod);
        prod.truncate(m);
        FieldElement { p: self.p, m: self.m, coeffs: prod }
    }

    /// Reduces a coefficient vector by the monic modulus in place.
    fn reduce(&self, poly: &mut [u64]) {
        let m = self.m as usize;
        for i in (m..poly.len()).rev() {
            let c = poly[i];
            if c == 0 {
                continue;
            }
            poly[i] = 0;
            for j in 0..m {
                let sub = c * self.modulus[j] % self.p;
                poly[i - m + j] = (poly[i - m + j] + self.p - sub) % self.p;
            }
        }
    }

    pub fn pow(&self, a: &FieldElement, e: u64) -> FieldElement {
        if a.is_zero() {
            return if e == 0 { self.one() } else { self.zero() };
        }
        let e = e % (self.q() - 1);
        let mut result = self.one();
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    /// Raises to an integer power, interpreting negative exponents through
    /// the multiplicative group (the base must then be nonzero).
    pub fn pow_i(&self, a: &FieldElement, e: i64) -> Result<FieldElement> {
        if e >= 0 {
            return Ok(self.pow(a, e as u64));
        }
        if a.is_zero() {
            return Err(Error::Parse("negative power of zero".into()));
        }
        let order = self.q() - 1;
        Ok(self.pow(a, e.rem_euclid(order as i64) as u64))
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::Parse("inverse of zero".into()));
        }
        Ok(self.pow(a, self.q() - 2))
    }

    /// Absolute trace down to 𝔽_p, returned as an integer in 0..p.
    pub fn absolute_trace(&self, a: &FieldElement) -> u64 {
        self.check(a);
        a.coeffs
            .iter()
            .zip(&self.basis_traces)
            .map(|(&c, &t)| c * t % self.p)
            .sum::<u64>()
            % self.p
    }

    /// Absolute trace straight from a coefficient row, skipping element
    /// construction; the hot path of the character-sum tables.
    pub(crate) fn trace_of_row(&self, row: &[u64]) -> u64 {
        row.iter()
            .zip(&self.basis_traces)
            .map(|(&c, &t)| c * t % self.p)
            .sum::<u64>()
            % self.p
    }

    /// Index of an element in the canonical enumeration order
    /// (lexicographic on coefficient vectors, first coefficient major).
    pub fn index_of(&self, a: &FieldElement) -> u64 {
        a.coeffs.iter().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn element_from_index(&self, mut idx: u64) -> FieldElement {
        let m = self.m as usize;
        let mut coeffs = vec![0u64; m];
        for i in (0..m).rev() {
            coeffs[i] = idx % self.p;
            idx /= self.p;
        }
        debug_assert_eq!(idx, 0);
        FieldElement { p: self.p, m: self.m, coeffs }
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q()).map(|i| self.element_from_index(i))
    }

    /// Nonzero elements in canonical order.
    pub fn units(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.elements().filter(|e| !e.is_zero())
    }

    /// A fixed generator of the multiplicative group: the first element in
    /// canonical order of order q−1.
    pub fn multiplicative_generator(&self) -> &FieldElement {
        self.generator.get_or_init(|| {
            let order = self.q() - 1;
            let primes = prime_factors(order);
            self.elements()
                .find(|e| {
                    !e.is_zero()
                        && primes
                            .iter()
                            .all(|&l| self.pow(e, order / l) != self.one())
                })
                .expect("F_q* is cyclic")
        })
    }

    /// Frobenius x ↦ x^{p^k}.
    pub fn frobenius(&self, a: &FieldElement, k: u32) -> FieldElement {
        let mut x = a.clone();
        for _ in 0..k {
            x = self.pow(&x, self.p);
        }
        x
    }

    /// Evaluates a polynomial with 𝔽_p integer coefficients (low to high).
    pub fn eval_prime_poly(&self, coeffs: &[u64], x: &FieldElement) -> FieldElement {
        let mut acc = self.zero();
        for &c in coeffs.iter().rev() {
            acc = self.mul(&acc, x);
            acc = self.add(&acc, &self.from_int(c as i64));
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// torus streams

/// The points of (𝔽_q^×)^n in a fixed order, partitionable into disjoint
/// index ranges for parallel consumption.
pub struct TorusStream<'a> {
    pub field: &'a FieldSpec,
    pub n: usize,
    units: Vec<FieldElement>,
}

impl<'a> TorusStream<'a> {
    pub fn len(&self) -> u128 {
        (self.units.len() as u128).pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Decodes the point at a given index (mixed-radix over the unit list,
    /// last coordinate fastest).
    pub fn point(&self, mut idx: u128) -> Vec<FieldElement> {
        let base = self.units.len() as u128;
        let mut out = vec![self.field.zero(); self.n];
        for i in (0..self.n).rev() {
            out[i] = self.units[(idx % base) as usize].clone();
            idx /= base;
        }
        debug_assert_eq!(idx, 0);
        out
    }

    /// Iterates a half-open index range of the stream.
    pub fn range(&self, lo: u128, hi: u128) -> impl Iterator<Item = Vec<FieldElement>> + '_ {
        (lo..hi).map(move |i| self.point(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<FieldElement>> + '_ {
        self.range(0, self.len())
    }
}

/// Enumerates (𝔽_q^×)^n, refusing tori larger than `ceiling` points.
pub fn enumerate_torus(field: &FieldSpec, n: usize, ceiling: u64) -> Result<TorusStream<'_>> {
    let total = ((field.q() - 1) as u128).pow(n as u32);
    if total > ceiling as u128 {
        return Err(Error::EnumerationCeiling(
            total.min(u64::MAX as u128) as u64,
            ceiling,
        ));
    }
    Ok(TorusStream {
        field,
        n,
        units: field.units().collect(),
    })
}

// ---------------------------------------------------------------------------
// embeddings

/// A field homomorphism 𝔽_{p^{m_s}} → 𝔽_{p^{m_b}} determined by a root of
/// the small modulus; the lexicographically smallest root is always chosen,
/// and towers are composed step by step so they commute by construction.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub small_m: u32,
    pub big_m: u32,
    /// Images of the small-field basis monomials t^i.
    root_powers: Vec<FieldElement>,
}

impl Embedding {
    pub fn apply(&self, big: &FieldSpec, x: &FieldElement) -> FieldElement {
        debug_assert_eq!(x.m, self.small_m);
        let mut acc = big.zero();
        for (&c, rp) in x.coeffs.iter().zip(&self.root_powers) {
            if c != 0 {
                acc = big.add(&acc, &big.scale(rp, c));
            }
        }
        acc
    }

    /// Composes self : F_s → F_mid with `outer` : F_mid → F_big.
    pub fn compose(&self, mid: &FieldSpec, big: &FieldSpec, outer: &Embedding) -> Embedding {
        debug_assert_eq!(self.big_m, outer.small_m);
        Embedding {
            small_m: self.small_m,
            big_m: outer.big_m,
            root_powers: self
                .root_powers
                .iter()
                .map(|rp| {
                    debug_assert_eq!(rp.m, mid.m);
                    outer.apply(big, rp)
                })
                .collect(),
        }
    }
}

/// Computes the canonical embedding of `small` into `big`.
///
/// The image of t is the lexicographically smallest root of the small
/// modulus in the big field.  Roots live in the subfield of order
/// p^{small.m}, whose elements are exactly the powers g^{k·step} of a
/// multiplicative generator g with step = (q_b−1)/(q_s−1), so only that
/// subfield is scanned.
pub fn embed(small: &FieldSpec, big: &FieldSpec) -> Result<Embedding> {
    if small.p != big.p {
        return Err(Error::MixedFields(
            format!("F_{}^{}", small.p, small.m),
            format!("F_{}^{}", big.p, big.m),
        ));
    }
    if big.m % small.m != 0 {
        return Err(Error::NoEmbedding(small.m.into(), big.m.into()));
    }
    if small.m == big.m {
        return Ok(Embedding {
            small_m: small.m,
            big_m: big.m,
            root_powers: (0..small.m).map(|i| big.monomial(i)).collect(),
        });
    }
    let qs = small.q();
    let step = (big.q() - 1) / (qs - 1);
    let g = big.multiplicative_generator();
    let g_step = big.pow(g, step);
    let mut root: Option<FieldElement> = None;
    let mut x = big.one();
    let mut candidates = vec![big.zero(), x.clone()];
    for _ in 1..qs - 1 {
        x = big.mul(&x, &g_step);
        candidates.push(x.clone());
    }
    for cand in candidates {
        if big.eval_prime_poly(&small.modulus, &cand).is_zero()
            && root.as_ref().is_none_or(|r| cand.coeffs < r.coeffs)
        {
            root = Some(cand);
        }
    }
    let root = root.expect("small modulus splits in the big field");
    let mut root_powers = vec![big.one()];
    for _ in 1..small.m {
        root_powers.push(big.mul(root_powers.last().unwrap(), &root));
    }
    Ok(Embedding {
        small_m: small.m,
        big_m: big.m,
        root_powers,
    })
}

// ---------------------------------------------------------------------------
// generator power tables

/// Dense table of the powers of the multiplicative generator, stored as flat
/// coefficient rows: row e holds g^e for 0 ≤ e < q−1.  Exponent arithmetic
/// mod q−1 then turns monomial evaluation into table lookups.
#[derive(Debug)]
pub struct PowerTable {
    pub q: u64,
    m: usize,
    flat: Vec<u64>,
}

impl PowerTable {
    pub fn new(field: &FieldSpec, max_entries: u64) -> Result<Self> {
        let q = field.q();
        let units = q - 1;
        if units > max_entries {
            return Err(Error::EnumerationCeiling(units, max_entries));
        }
        let m = field.m as usize;
        let g = field.multiplicative_generator().clone();
        let mut flat = Vec::with_capacity(units as usize * m);
        let mut x = field.one();
        for _ in 0..units {
            flat.extend_from_slice(&x.coeffs);
            x = field.mul(&x, &g);
        }
        debug_assert_eq!(x, field.one());
        Ok(PowerTable { q, m, flat })
    }

    /// Coefficient row of g^e; the exponent must already be reduced mod q−1.
    pub fn row(&self, e: u64) -> &[u64] {
        let i = e as usize * self.m;
        &self.flat[i..i + self.m]
    }

    pub fn element(&self, field: &FieldSpec, e: u64) -> FieldElement {
        field
            .element_from_coeffs(self.row(e))
            .expect("power table rows are valid elements")
    }

    /// Discrete logs of the given elements, found in a single scan of the
    /// table.  Zero elements (and elements of other fields) come back None.
    pub fn dlogs(&self, elems: &[&FieldElement]) -> Vec<Option<u64>> {
        let mut out = vec![None; elems.len()];
        for e in 0..self.q - 1 {
            let row = self.row(e);
            for (slot, x) in out.iter_mut().zip(elems) {
                if slot.is_none() && x.coeffs == row {
                    *slot = Some(e);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// closed points

/// Which set of fibers a sweep ranges over: the torus 𝔾_m (λ̄ ≠ 0) or the
/// affine line 𝔸¹ (λ̄ = 0 included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Gm,
    A1,
}

/// A closed point of 𝔾_m/𝔽_q or 𝔸¹/𝔽_q: a Frobenius orbit with its
/// canonical (lexicographically smallest) representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedPoint {
    /// Degree over the base field 𝔽_q.
    pub degree: u32,
    /// Canonical representative, an element of 𝔽_{q^degree}.
    pub rep: FieldElement,
}

/// Enumerates all closed points of degree ≤ d_max, ordered by (degree,
/// representative index).  `base` is 𝔽_q with q = p^a.
pub fn closed_points(
    base: &FieldSpec,
    d_max: u32,
    domain: Domain,
    ceiling: u64,
) -> Result<Vec<ClosedPoint>> {
    let mut points = Vec::new();
    for d in 1..=d_max {
        let ext = make_field(base.p, base.m * d)?;
        let q_ext = ext.q();
        if q_ext > ceiling {
            return Err(Error::EnumerationCeiling(q_ext, ceiling));
        }
        let mut seen = vec![false; q_ext as usize];
        let mut count = 0u64;
        for idx in 0..q_ext {
            if seen[idx as usize] {
                continue;
            }
            let e = ext.element_from_index(idx);
            if e.is_zero() {
                seen[idx as usize] = true;
                if d == 1 && domain == Domain::A1 {
                    points.push(ClosedPoint { degree: 1, rep: e });
                }
                continue;
            }
            // Frobenius orbit over F_q: x, x^q, x^{q^2}, ...
            let mut orbit = vec![idx];
            let mut x = ext.frobenius(&e, base.m);
            while x != e {
                orbit.push(ext.index_of(&x));
                x = ext.frobenius(&x, base.m);
            }
            for &i in &orbit {
                seen[i as usize] = true;
            }
            if orbit.len() == d as usize {
                count += 1;
                points.push(ClosedPoint { degree: d, rep: e });
            }
        }
        debug_assert_eq!(count, moebius_point_count(base.q(), d), "orbit count");
    }
    Ok(points)
}

/// Number of degree-d closed points of 𝔾_m/𝔽_q:
/// (1/d) Σ_{e|d} μ(d/e)(q^e − 1).
pub fn moebius_point_count(q: u64, d: u32) -> u64 {
    let mut total: i128 = 0;
    for e in 1..=d {
        if d % e == 0 {
            let mu = moebius(d / e);
            if mu != 0 {
                total += mu as i128 * ((q as i128).pow(e) - 1);
            }
        }
    }
    debug_assert!(total >= 0 && total % d as i128 == 0);
    (total / d as i128) as u64
}

fn moebius(mut n: u32) -> i32 {
    let mut mu = 1;
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            n /= f;
            if n % f == 0 {
                return 0;
            }
            mu = -mu;
        }
        f += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

// ---------------------------------------------------------------------------
// primes and polynomials over F_p

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            return false;
        }
        f += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn checked_pow(p: u64, m: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..m {
        acc = acc.checked_mul(p)?;
    }
    Some(acc)
}

/// The lexicographically smallest monic irreducible of degree m over 𝔽_p,
/// comparing coefficient vectors low-to-high.
fn smallest_irreducible(p: u64, m: u32) -> Vec<u64> {
    if m == 1 {
        return vec![0, 1]; // X itself: F_p with t = 0
    }
    let m = m as usize;
    let mut coeffs = vec![0u64; m + 1];
    coeffs[m] = 1;
    loop {
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
        // increment the low-to-high coefficient vector in lexicographic
        // order: the last coefficient is least significant
        for i in (0..m).rev() {
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            assert!(i > 0, "no irreducible of degree {m} over F_{p}");
        }
    }
}

/// Irreducibility over 𝔽_p: f (monic, degree m) is irreducible iff
/// X^{p^m} ≡ X (mod f) and gcd(X^{p^{m/ℓ}} − X, f) = 1 for primes ℓ | m.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let m = (f.len() - 1) as u32;
    if f[0] == 0 {
        return m == 1; // divisible by X
    }
    let x = vec![0, 1];
    let mut frob = vec![x.clone()]; // X^{p^i} mod f
    for _ in 0..m {
        let prev = frob.last().unwrap();
        frob.push(poly_pow_mod(prev, p, f, p));
    }
    let mut xm = frob[m as usize].clone();
    poly_sub_x(&mut xm, p);
    if xm.iter().any(|&c| c != 0) {
        return false;
    }
    for l in prime_factors(m as u64) {
        let mut g = frob[(m as u64 / l) as usize].clone();
        poly_sub_x(&mut g, p);
        if poly_gcd_deg(&g, f, p) != 0 {
            return false;
        }
    }
    true
}

fn poly_sub_x(g: &mut Vec<u64>, p: u64) {
    if g.len() < 2 {
        g.resize(2, 0);
    }
    g[1] = (g[1] + p - 1) % p;
}

fn poly_mul_mod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let m = f.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for i in (m..prod.len()).rev() {
        let c = prod[i];
        if c == 0 {
            continue;
        }
        prod[i] = 0;
        for j in 0..m {
            let sub = c * f[j] % p;
            prod[i - m + j] = (prod[i - m + j] + p - sub) % p;
        }
    }
    prod.truncate(m);
    prod
}

fn poly_pow_mod(a: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut base = a.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul_mod(&result, &base, f, p);
        }
        base = poly_mul_mod(&base, &base, f, p);
        e >>= 1;
    }
    result
}

/// Degree of gcd(a, b) over 𝔽_p (−1 encoded as usize::MAX never occurs:
/// returns 0 for unit gcd).
fn poly_gcd_deg(a: &[u64], b: &[u64], p: u64) -> usize {
    let trim = |v: &mut Vec<u64>| {
        while v.len() > 1 && *v.last().unwrap() == 0 {
            v.pop();
        }
    };
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while b.iter().any(|&c| c != 0) {
        // a mod b
        let db = b.len() - 1;
        let inv = mod_inverse(b[db], p);
        while a.len() > db && a.iter().any(|&c| c != 0) {
            let da = a.len() - 1;
            if da < db {
                break;
            }
            let c = a[da] * inv % p;
            if c != 0 {
                for j in 0..=db {
                    let sub = c * b[j] % p;
                    a[da - db + j] = (a[da - db + j] + p - sub) % p;
                }
            }
            trim(&mut a);
            if a.len() == 1 && a[0] == 0 {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
        trim(&mut b);
    }
    a.len() - 1
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // Fermat: p prime, a != 0 mod p
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_moduli() {
        assert_eq!(make_field(3, 1).unwrap().modulus, vec![0, 1]);
        assert_eq!(make_field(3, 2).unwrap().modulus, vec![1, 0, 1]); // X^2+1
        assert_eq!(make_field(2, 2).unwrap().modulus, vec![1, 1, 1]); // X^2+X+1
        assert_eq!(make_field(2, 3).unwrap().modulus, vec![1, 0, 1, 1]); // X^3+X^2+1
        assert!(matches!(make_field(6, 1), Err(Error::NotPrime(6))));
        assert!(matches!(make_field(3, 0), Err(Error::BadDegree)));
    }

    #[test]
    fn custom_modulus() {
        // t^2+1 has no root mod 3, so it is accepted as an 𝔽₉ model.
        let f9 = make_field_with_modulus(3, 2, vec![1, 0, 1]).unwrap();
        assert_eq!(f9.modulus, vec![1, 0, 1]);
        // t^2+2 = (t+1)(t+2) mod 3.
        assert!(matches!(
            make_field_with_modulus(3, 2, vec![2, 0, 1]),
            Err(Error::ReducibleModulus)
        ));
        // wrong degree and non-monic inputs are rejected up front
        assert!(matches!(
            make_field_with_modulus(3, 2, vec![1, 0, 0, 1]),
            Err(Error::ReducibleModulus)
        ));
        assert!(matches!(
            make_field_with_modulus(3, 2, vec![1, 0, 2]),
            Err(Error::ReducibleModulus)
        ));
    }

    #[test]
    fn f9_arithmetic_and_trace() {
        let f9 = make_field(3, 2).unwrap();
        let t = f9.monomial(1);
        // t^2 = -1 under X^2 + 1
        assert_eq!(f9.mul(&t, &t), f9.from_int(-1));
        assert_eq!(f9.absolute_trace(&f9.one()), 2); // 1 + 1^3
        assert_eq!(f9.absolute_trace(&t), 0); // t + t^3 = t - t
        assert_eq!(f9.absolute_trace(&f9.zero()), 0);
        // inverse round trip over all units
        for u in f9.units() {
            assert_eq!(f9.mul(&u, &f9.inv(&u).unwrap()), f9.one());
        }
    }

    #[test]
    fn zero_powers() {
        let f = make_field(5, 1).unwrap();
        assert_eq!(f.pow(&f.zero(), 0), f.one());
        assert_eq!(f.pow(&f.zero(), 7), f.zero());
        assert!(f.pow_i(&f.zero(), -1).is_err());
        assert_eq!(f.pow_i(&f.from_int(2), -1).unwrap(), f.from_int(3));
    }

    #[test]
    fn generator_has_full_order() {
        for (p, m) in [(3, 1), (3, 2), (2, 4), (5, 2), (7, 1)] {
            let f = make_field(p, m).unwrap();
            let g = f.multiplicative_generator().clone();
            let order = f.q() - 1;
            let mut x = g.clone();
            for _ in 1..order {
                assert_ne!(x, f.one());
                x = f.mul(&x, &g);
            }
            assert_eq!(x, f.one());
        }
    }

    #[test]
    fn torus_stream_counts_and_partition() {
        let f = make_field(3, 1).unwrap();
        let stream = enumerate_torus(&f, 2, 1000).unwrap();
        assert_eq!(stream.len(), 4);
        let all: Vec<_> = stream.iter().collect();
        let split: Vec<_> = stream.range(0, 2).chain(stream.range(2, 4)).collect();
        assert_eq!(all, split);
        assert!(all.iter().all(|pt| pt.iter().all(|x| !x.is_zero())));
        assert!(matches!(
            enumerate_torus(&f, 20, 1000),
            Err(Error::EnumerationCeiling(..))
        ));
    }

    #[test]
    fn closed_point_counts_match_moebius() {
        let f3 = make_field(3, 1).unwrap();
        let pts = closed_points(&f3, 4, Domain::Gm, 1 << 20).unwrap();
        let count = |d: u32| pts.iter().filter(|pt| pt.degree == d).count() as u64;
        assert_eq!(count(1), 2);
        assert_eq!(count(2), 3);
        assert_eq!(count(3), 8);
        assert_eq!(count(4), 18);
        for d in 1..=4 {
            assert_eq!(count(d), moebius_point_count(3, d));
        }
        let affine = closed_points(&f3, 1, Domain::A1, 1 << 20).unwrap();
        assert_eq!(affine.len(), 3); // 0, 1, 2
        // representatives are canonical: lexicographically least in orbit
        let f9 = make_field(3, 2).unwrap();
        for pt in pts.iter().filter(|pt| pt.degree == 2) {
            let conj = f9.frobenius(&pt.rep, 1);
            assert!(pt.rep.coeffs < conj.coeffs);
        }
    }

    #[test]
    fn closed_points_over_extension_base() {
        // base F_4: degree-2 points live in F_16
        let f4 = make_field(2, 2).unwrap();
        let pts = closed_points(&f4, 2, Domain::Gm, 1 << 20).unwrap();
        assert_eq!(pts.iter().filter(|p| p.degree == 1).count(), 3);
        assert_eq!(
            pts.iter().filter(|p| p.degree == 2).count() as u64,
            moebius_point_count(4, 2)
        );
    }

    #[test]
    fn power_table_roundtrip() {
        let f9 = make_field(3, 2).unwrap();
        let table = PowerTable::new(&f9, 10).unwrap();
        let g = f9.multiplicative_generator().clone();
        for e in 0..8 {
            assert_eq!(table.element(&f9, e), f9.pow(&g, e));
        }
        let minus_one = f9.from_int(-1);
        let got = table.dlogs(&[&f9.one(), &minus_one, &g, &f9.zero()]);
        assert_eq!(got[0], Some(0));
        assert_eq!(got[1], Some(4)); // -1 = g^{(q-1)/2}
        assert_eq!(got[2], Some(1));
        assert_eq!(got[3], None);
        assert!(PowerTable::new(&f9, 7).is_err());
    }

    #[test]
    fn embeddings_are_homomorphisms_and_compose() {
        let f3 = make_field(3, 1).unwrap();
        let f9 = make_field(3, 2).unwrap();
        let f81 = make_field(3, 4).unwrap();
        let e12 = embed(&f3, &f9).unwrap();
        let e24 = embed(&f9, &f81).unwrap();
        let tower = e12.compose(&f9, &f81, &e24);
        for a in f3.elements() {
            for b in f3.elements() {
                let sum = tower.apply(&f81, &f3.add(&a, &b));
                let prod = tower.apply(&f81, &f3.mul(&a, &b));
                let ea = tower.apply(&f81, &a);
                let eb = tower.apply(&f81, &b);
                assert_eq!(sum, f81.add(&ea, &eb));
                assert_eq!(prod, f81.mul(&ea, &eb));
            }
        }
        // the embedded image satisfies the small modulus
        let im_t = e24.apply(&f81, &f9.monomial(1));
        assert!(f81.eval_prime_poly(&f9.modulus, &im_t).is_zero());
        // traces are compatible: Tr_{F81/F3} restricted to F9's image is
        // the composition of traces; absolute traces agree on F3's image
        for a in f3.elements() {
            assert_eq!(
                f81.absolute_trace(&tower.apply(&f81, &a)),
                (4 * f3.absolute_trace(&a)) % 3
            );
        }
        assert!(embed(&f9, &make_field(3, 3).unwrap()).is_err());
    }
}
