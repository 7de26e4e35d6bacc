//! Character sums, fiber L-polynomials, Newton-polygon checks, linear-algebra
//! operations on eigenvalue data, and truncated global L-functions.
//!
//! Everything is exact: sums are counted in ℤ and assembled in ℚ(ζ_p), series
//! algebra stays in ℚ(ζ_p), and polygons compare as rational point lists.

use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;

use crate::cache::{hex_digest, SumCache, SumKey};
use crate::cohomology::BasisB;
use crate::cyclotomic::{
    ord_p, polygon_dominates, series_exp, series_inv, series_mul, CyclotomicNumber, NewtonPolygon,
};
use crate::error::{Error, Result};
use crate::finite_field::{
    closed_points, embed, make_field, ClosedPoint, Domain, FieldElement, FieldSpec, PowerTable,
};
use crate::geometry::{fiber_polynomial, toric_rank, GeometryContext, LaurentPolynomial};
use crate::hypotheses::torus_size;
use crate::rational::{rat, rat_to_string};

/// Default bound on torus points enumerated per sum.
pub const DEFAULT_CEILING: u64 = 1_000_000;

// ---------------------------------------------------------------------------
// labels and digests

/// Canonical text form of a field: `p^m/c0,c1,...,cm`.
pub fn field_label(field: &FieldSpec) -> String {
    let mods: Vec<String> = field.modulus.iter().map(u64::to_string).collect();
    format!("{}^{}/{}", field.p, field.m, mods.join(","))
}

fn coeffs_label(coeffs: &[u64]) -> String {
    let parts: Vec<String> = coeffs.iter().map(u64::to_string).collect();
    parts.join(",")
}

/// Canonical label of the Frobenius orbit of `x` over the base field: the
/// lexicographically smallest conjugate, tagged with its field.  Conjugate
/// fiber parameters give equal sums, so they share cache entries.
pub fn orbit_label(base: &FieldSpec, field: &FieldSpec, x: &FieldElement) -> String {
    let mut best = x.coeffs.clone();
    let mut cur = x.clone();
    loop {
        cur = field.frobenius(&cur, base.m);
        if cur.coeffs == x.coeffs {
            break;
        }
        if cur.coeffs < best {
            best = cur.coeffs.clone();
        }
    }
    format!("{};{}", field_label(field), coeffs_label(&best))
}

/// Content digest of a family: base field, support with coefficients, μ, and
/// the deformation exponent.  An empty μ with exponent 0 names the underlying
/// undeformed polynomial, used by the λ̄ = 0 fiber scan.
pub fn family_digest(
    base: &FieldSpec,
    f: &LaurentPolynomial,
    mu: &[i64],
    lambda_exponent: i64,
) -> String {
    let mut text = format!(
        "base {}\nmu {:?}\nlambda_exponent {}\n",
        field_label(base),
        mu,
        lambda_exponent
    );
    for (v, c) in &f.terms {
        text.push_str(&format!("term {:?} {}\n", v, coeffs_label(&c.coeffs)));
    }
    hex_digest(text.as_bytes())
}

fn render_cyclotomic(x: &CyclotomicNumber) -> String {
    let parts: Vec<String> = x.coeffs.iter().map(rat_to_string).collect();
    format!("[{}]", parts.join(", "))
}

// ---------------------------------------------------------------------------
// the character-sum kernel

/// Exact toric sum Σ_{x ∈ (𝔽*)^n} ζ_p^{Tr g(x)} over the torus of `field`,
/// where Tr is the absolute trace.
///
/// Monomial evaluation runs on discrete logarithms: a power table of the
/// multiplicative generator g is traced once, every coefficient becomes a
/// dlog offset, and stepping the last torus coordinate adds a constant to
/// each term's exponent mod q−1.  A point then costs one trace-table lookup
/// per term.
pub fn toric_sum(field: &FieldSpec, g: &LaurentPolynomial, ceiling: u64) -> Result<CyclotomicNumber> {
    if g.p != field.p || g.m != field.m {
        return Err(Error::MixedFields(
            format!("F_{}^{}", g.p, g.m),
            format!("F_{}^{}", field.p, field.m),
        ));
    }
    let n = g.n;
    let q = field.q();
    let p = field.p;
    if n == 0 {
        let val = g
            .terms
            .values()
            .fold(field.zero(), |acc, c| field.add(&acc, c));
        return Ok(CyclotomicNumber::zeta_pow(p, field.absolute_trace(&val) as i64));
    }
    let points = torus_size(q, 1, n).ok_or(Error::SizeCeilingExceeded(u64::MAX, ceiling))?;
    if points > ceiling {
        return Err(Error::SizeCeilingExceeded(points, ceiling));
    }
    if g.terms.is_empty() {
        return Ok(CyclotomicNumber::from_rational(
            p,
            BigRational::from_integer(points.into()),
        ));
    }

    let qm1 = q - 1;
    let table = PowerTable::new(field, qm1)?;
    let traces: Vec<u64> = (0..qm1).map(|e| field.trace_of_row(table.row(e))).collect();
    let coeffs: Vec<&FieldElement> = g.terms.values().collect();
    let dlogs = table.dlogs(&coeffs);
    let terms: Vec<SumTerm> = g
        .terms
        .keys()
        .zip(dlogs)
        .map(|(v, d)| {
            let vred: Vec<u64> = v.iter().map(|&c| c.rem_euclid(qm1 as i64) as u64).collect();
            SumTerm {
                dlog: d.expect("nonzero coefficient has a discrete log"),
                step: vred[n - 1],
                vred,
            }
        })
        .collect();

    // Chunked scan; addition of count vectors is exact and commutative, so
    // the parallel reduction is deterministic.  Large p keeps chunks few so
    // the per-chunk count vectors stay small.
    let chunks = if p > 4096 {
        1
    } else {
        (rayon::current_num_threads() * 8).max(1)
    };
    let chunk_len = (points / chunks as u64).max(4096).max(qm1);
    let ranges: Vec<(u64, u64)> = (0..points)
        .step_by(chunk_len.min(points) as usize)
        .map(|lo| (lo, (lo + chunk_len).min(points)))
        .collect();
    let counts = ranges
        .par_iter()
        .map(|&(lo, hi)| scan_range(qm1, p, n, &terms, &traces, lo, hi))
        .reduce(
            || vec![0u64; p as usize],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let counts_i: Vec<i64> = counts.iter().map(|&c| c as i64).collect();
    Ok(CyclotomicNumber::from_zeta_counts(p, &counts_i))
}

struct SumTerm {
    dlog: u64,
    vred: Vec<u64>,
    step: u64,
}

fn term_exponent(t: &SumTerm, digits: &[u64], qm1: u64) -> u64 {
    let mut acc = t.dlog as u128;
    for (&v, &a) in t.vred.iter().zip(digits) {
        acc += v as u128 * a as u128;
    }
    (acc % qm1 as u128) as u64
}

fn scan_range(
    qm1: u64,
    p: u64,
    n: usize,
    terms: &[SumTerm],
    traces: &[u64],
    lo: u64,
    hi: u64,
) -> Vec<u64> {
    let mut counts = vec![0u64; p as usize];
    let mut digits = vec![0u64; n];
    let mut rest = lo;
    for i in (0..n).rev() {
        digits[i] = rest % qm1;
        rest /= qm1;
    }
    let mut exps: Vec<u64> = terms
        .iter()
        .map(|t| term_exponent(t, &digits, qm1))
        .collect();
    for idx in lo..hi {
        let s: u64 = exps.iter().map(|&e| traces[e as usize]).sum();
        counts[(s % p) as usize] += 1;
        if idx + 1 == hi {
            break;
        }
        let mut pos = n - 1;
        loop {
            digits[pos] += 1;
            if digits[pos] < qm1 {
                break;
            }
            digits[pos] = 0;
            if pos == 0 {
                break;
            }
            pos -= 1;
        }
        if pos == n - 1 {
            for (t, e) in terms.iter().zip(&mut exps) {
                *e += t.step;
                if *e >= qm1 {
                    *e -= qm1;
                }
            }
        } else {
            for (t, e) in terms.iter().zip(&mut exps) {
                *e = term_exponent(t, &digits, qm1);
            }
        }
    }
    counts
}

// ---------------------------------------------------------------------------
// fiber sums

fn checked_degree(m: u32, r: u32) -> Result<u32> {
    m.checked_mul(r)
        .ok_or(Error::SizeCeilingExceeded(u64::MAX, u64::MAX))
}

/// The field 𝔽_{q^deg} a closed point's representative lives in.
pub fn point_field(base: &FieldSpec, lambda: &ClosedPoint) -> Result<FieldSpec> {
    let lf = make_field(base.p, checked_degree(base.m, lambda.degree)?)?;
    if lambda.rep.p != lf.p || lambda.rep.m != lf.m {
        return Err(Error::MixedFields(
            format!("F_{}^{}", lambda.rep.p, lambda.rep.m),
            format!("F_{}^{}", lf.p, lf.m),
        ));
    }
    Ok(lf)
}

/// One S_r: the sum of `poly` (over `lf`) extended to 𝔽_{p^{lf.m·r}}, cached
/// under the family and orbit labels.
fn extension_sum(
    base: &FieldSpec,
    lf: &FieldSpec,
    poly: &LaurentPolynomial,
    family: &str,
    lambda_label: &str,
    r: u32,
    ceiling: u64,
    cache: &SumCache,
) -> Result<CyclotomicNumber> {
    let key = SumKey {
        family: family.to_string(),
        field: field_label(base),
        lambda: lambda_label.to_string(),
        r,
    };
    if let Some(v) = cache.get(&key, base.p) {
        return Ok(v);
    }
    let ext = make_field(base.p, checked_degree(lf.m, r)?)?;
    let emb = embed(lf, &ext)?;
    let g = poly.map_coefficients(&ext, |c| emb.apply(&ext, c));
    let s = toric_sum(&ext, &g, ceiling)?;
    cache.put(&key, &s)?;
    Ok(s)
}

/// Exact S_r for the fiber at λ̄: the sum of F̄(λ̄, x) over the torus of
/// 𝔽_{q^{r·deg λ̄}}.  The extension's character is the composite of the base
/// character with the relative trace, which by transitivity is the absolute
/// trace used by the kernel.
pub fn exp_sum(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    lambda: &ClosedPoint,
    r: u32,
    ceiling: u64,
    cache: &SumCache,
) -> Result<CyclotomicNumber> {
    if r == 0 {
        return Err(Error::PreconditionFailed("sum index r must be positive".into()));
    }
    let lf = point_field(base, lambda)?;
    let fiber = fiber_polynomial(ctx, base, f, &lf, &lambda.rep)?;
    let family = family_digest(base, f, &ctx.mu, ctx.case.lambda_exponent());
    let label = orbit_label(base, &lf, &lambda.rep);
    extension_sum(base, &lf, &fiber, &family, &label, r, ceiling, cache)
}

// ---------------------------------------------------------------------------
// fiber L-polynomials and Newton polygons

/// The L-data of one fiber: sums, the degree-N polynomial, and its Newton
/// polygon against the weight bound.
#[derive(Debug, Clone)]
pub struct FiberLReport {
    pub lambda: ClosedPoint,
    /// S_1 .. S_{2N}.
    pub sums: Vec<CyclotomicNumber>,
    /// Coefficients of the degree-N polynomial (1 − π₁T)⋯(1 − π_N T).
    pub lpoly: Vec<CyclotomicNumber>,
    /// Newton polygon of `lpoly` in ord_{q^{deg λ̄}}.
    pub polygon: NewtonPolygon,
    /// Lower-bound polygon with slope multiset {w(v) : v ∈ B}.
    pub bound: NewtonPolygon,
    pub dominates: bool,
}

/// Truncated exp of the sum series with the rank-n orientation: the series
/// exp((−1)^{n+1} Σ S_r T^r / r) must be a polynomial of degree ≤ `nn`, and
/// coefficients nn+1 .. len(sums) are checked to vanish.
fn l_polynomial_from_sums(
    p: u64,
    n_vars: usize,
    nn: usize,
    sums: &[CyclotomicNumber],
) -> Result<Vec<CyclotomicNumber>> {
    debug_assert!(sums.len() >= nn);
    let mut a = vec![CyclotomicNumber::zero(p); sums.len() + 1];
    for (r, s) in sums.iter().enumerate() {
        let mut c = s.scale(&BigRational::new(BigInt::one(), (r + 1).into()));
        if n_vars % 2 == 0 {
            c = c.neg();
        }
        a[r + 1] = c;
    }
    let e = series_exp(&a)?;
    for (j, c) in e.iter().enumerate().skip(nn + 1) {
        if !c.is_zero() {
            return Err(Error::PolynomialityFailure {
                index: j,
                value: render_cyclotomic(c),
            });
        }
    }
    for (j, c) in e.iter().enumerate().take(nn + 1) {
        if c.coeffs.iter().any(|x| !x.is_integer()) {
            return Err(Error::TheoremViolation(format!(
                "L coefficient at T^{j} is not integral: {}",
                render_cyclotomic(c)
            )));
        }
    }
    Ok(e[..=nn].to_vec())
}

fn polygon_of_poly(lpoly: &[CyclotomicNumber], unit: u64) -> Result<NewtonPolygon> {
    let scale = BigRational::from_integer(unit.into());
    let vals: Vec<Option<BigRational>> = lpoly
        .iter()
        .map(|c| {
            if c.is_zero() {
                Ok(None)
            } else {
                ord_p(c).map(|v| Some(v / &scale))
            }
        })
        .collect::<Result<_>>()?;
    Ok(NewtonPolygon::from_valuations(&vals))
}

/// The bound polygon: slopes are exactly the basis weights, sorted.  The
/// residue-field degree cancels under the ord_{q^{deg}} normalization, so no
/// degree parameter appears.
pub fn np_lower_bound(basis: &BasisB) -> NewtonPolygon {
    let mut ws = basis.weights();
    ws.sort();
    let mut vals = vec![BigRational::zero()];
    for w in ws {
        let next = vals.last().unwrap() + w;
        vals.push(next);
    }
    let vals: Vec<Option<BigRational>> = vals.into_iter().map(Some).collect();
    NewtonPolygon::from_valuations(&vals)
}

/// Assembles a fiber report from precomputed sums S_1..S_{2N}.  `unit` is
/// a·deg(λ̄) where q = p^a, so the polygon reads in ord_{q^{deg λ̄}}.
pub fn fiber_report_from_sums(
    n_vars: usize,
    nn: usize,
    unit: u64,
    lambda: ClosedPoint,
    sums: Vec<CyclotomicNumber>,
    basis: &BasisB,
) -> Result<FiberLReport> {
    if sums.len() != 2 * nn {
        return Err(Error::LengthMismatch(sums.len(), 2 * nn));
    }
    let p = sums
        .first()
        .map(|s| s.p)
        .ok_or_else(|| Error::PreconditionFailed("a fiber needs at least one sum".into()))?;
    let lpoly = l_polynomial_from_sums(p, n_vars, nn, &sums)?;
    if lpoly.last().is_some_and(CyclotomicNumber::is_zero) {
        return Err(Error::TheoremViolation(format!(
            "fiber L-polynomial has degree below {nn}: top coefficient vanishes"
        )));
    }
    let polygon = polygon_of_poly(&lpoly, unit)?;
    let bound = np_lower_bound(basis);
    let dominates = polygon_dominates(&polygon, &bound);
    Ok(FiberLReport {
        lambda,
        sums,
        lpoly,
        polygon,
        bound,
        dominates,
    })
}

/// Computes the full L-data of the fiber at λ̄: 2N sums, the polynomiality
/// check, the degree-N polynomial, and the polygon comparison.
pub fn fiber_l(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    basis: &BasisB,
    lambda: &ClosedPoint,
    ceiling: u64,
    cache: &SumCache,
) -> Result<FiberLReport> {
    let nn = ctx.rank as usize;
    let lf = point_field(base, lambda)?;
    let fiber = fiber_polynomial(ctx, base, f, &lf, &lambda.rep)?;
    let family = family_digest(base, f, &ctx.mu, ctx.case.lambda_exponent());
    let label = orbit_label(base, &lf, &lambda.rep);
    let sums: Vec<CyclotomicNumber> = (1..=2 * nn as u32)
        .into_par_iter()
        .map(|r| extension_sum(base, &lf, &fiber, &family, &label, r, ceiling, cache))
        .collect::<Result<_>>()?;
    fiber_report_from_sums(ctx.n, nn, lf.m as u64, lambda.clone(), sums, basis)
}

// ---------------------------------------------------------------------------
// linear-algebra operations

/// One tensor factor of an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpFactor {
    Sym(u32),
    Ext(u32),
}

/// A linear-algebra operation ℒ = Sym^{k₁} ⊗ ∧^{l₁} ⊗ ⋯ applied to the
/// Frobenius eigenvalue multiset of a fiber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpSpec {
    pub factors: Vec<OpFactor>,
}

impl OpFactor {
    fn power(self) -> u32 {
        match self {
            OpFactor::Sym(k) => k,
            OpFactor::Ext(l) => l,
        }
    }
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

impl OpSpec {
    pub fn sym(k: u32) -> Self {
        OpSpec {
            factors: vec![OpFactor::Sym(k)],
        }
    }

    pub fn ext(l: u32) -> Self {
        OpSpec {
            factors: vec![OpFactor::Ext(l)],
        }
    }

    /// Parses forms like `sym2`, `ext1`, `sym3*ext2`.
    pub fn parse(s: &str) -> Result<Self> {
        let lowered = s.trim().to_ascii_lowercase();
        let mut factors = Vec::new();
        for part in lowered.split('*') {
            let part = part.trim();
            let (make, digits): (fn(u32) -> OpFactor, &str) =
                if let Some(rest) = part.strip_prefix("sym") {
                    (OpFactor::Sym, rest)
                } else if let Some(rest) = part.strip_prefix("ext") {
                    (OpFactor::Ext, rest)
                } else {
                    return Err(Error::Parse(format!(
                        "bad operation factor {part:?}: expected symK or extL"
                    )));
                };
            let power: u32 = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad operation power {digits:?}")))?;
            factors.push(make(power));
        }
        if factors.is_empty() {
            return Err(Error::Parse("empty operation".into()));
        }
        Ok(OpSpec { factors })
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| match f {
                OpFactor::Sym(k) => format!("sym{k}"),
                OpFactor::Ext(l) => format!("ext{l}"),
            })
            .collect();
        parts.join("*")
    }

    /// |ℒ|: the tensor length, the sum of the factor powers.
    pub fn order(&self) -> u32 {
        self.factors.iter().map(|f| f.power()).sum()
    }

    /// ℒN: the dimension of the operation applied to an `nn`-dimensional
    /// space, ∏ C(nn+k−1, k)·C(nn, l).
    pub fn dimension(&self, nn: u64) -> Result<u64> {
        let mut dim: u64 = 1;
        for f in &self.factors {
            let d = match *f {
                OpFactor::Sym(0) => Some(1),
                OpFactor::Sym(k) if nn == 0 => {
                    debug_assert!(k > 0);
                    Some(0)
                }
                OpFactor::Sym(k) => binomial(nn + k as u64 - 1, k as u64),
                OpFactor::Ext(l) => binomial(nn, l as u64),
            };
            dim = d
                .and_then(|d| dim.checked_mul(d))
                .ok_or_else(|| {
                    Error::PreconditionFailed(format!(
                        "dimension of {} on a space of dimension {nn} overflows",
                        self.label()
                    ))
                })?;
        }
        Ok(dim)
    }
}

fn trim_poly(ppoly: &[CyclotomicNumber]) -> &[CyclotomicNumber] {
    let mut end = ppoly.len();
    while end > 1 && ppoly[end - 1].is_zero() {
        end -= 1;
    }
    &ppoly[..end]
}

/// Power sums p_r = Σ π_i^r for r = 1..=r_max of the roots of
/// P(T) = ∏(1 − π_i T), by Newton's identities on the coefficients.
fn power_sums(ppoly: &[CyclotomicNumber], r_max: usize) -> Vec<CyclotomicNumber> {
    let p = ppoly[0].p;
    let nn = ppoly.len() - 1;
    let mut ps: Vec<CyclotomicNumber> = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        let mut acc = CyclotomicNumber::zero(p);
        for i in 1..=(r - 1).min(nn) {
            if !ppoly[i].is_zero() {
                acc = acc.add(&ppoly[i].mul(&ps[r - i - 1]));
            }
        }
        let mut val = acc.neg();
        if r <= nn {
            val = val.sub(&ppoly[r].scale(&rat(r as i64)));
        }
        ps.push(val);
    }
    ps
}

/// Tr ℒ(A^s) for s = 1..=s_max, where A is any matrix with characteristic
/// data P(T) = det(1 − AT).  Symmetric-power traces come from the complete
/// homogeneous series exp(Σ_j p_{sj} t^j / j), exterior from the elementary
/// series exp(Σ_j (−1)^{j−1} p_{sj} t^j / j); a tensor product multiplies the
/// factor traces.
pub fn op_traces(
    ppoly: &[CyclotomicNumber],
    op: &OpSpec,
    s_max: usize,
) -> Result<Vec<CyclotomicNumber>> {
    let ppoly = trim_poly(ppoly);
    let p = ppoly
        .first()
        .map(|c| c.p)
        .ok_or_else(|| Error::BadConstantTerm("empty polynomial".into()))?;
    if ppoly[0] != CyclotomicNumber::one(p) {
        return Err(Error::BadConstantTerm(render_cyclotomic(&ppoly[0])));
    }
    let jmax = op.factors.iter().map(|f| f.power()).max().unwrap_or(0) as usize;
    let ps = power_sums(ppoly, s_max * jmax);
    let mut out = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        let mut tr = CyclotomicNumber::one(p);
        for factor in &op.factors {
            let j_top = factor.power() as usize;
            let mut a = vec![CyclotomicNumber::zero(p); j_top + 1];
            for j in 1..=j_top {
                let mut c = ps[s * j - 1].scale(&BigRational::new(BigInt::one(), j.into()));
                if matches!(factor, OpFactor::Ext(_)) && j % 2 == 0 {
                    c = c.neg();
                }
                a[j] = c;
            }
            let series = series_exp(&a)?;
            tr = tr.mul(&series[j_top]);
        }
        out.push(tr);
    }
    Ok(out)
}

/// det(1 − ℒ(A)T) for A with characteristic data P, exactly, as a polynomial
/// of degree ℒN (the dimension of the operation).
pub fn op_char_poly(ppoly: &[CyclotomicNumber], op: &OpSpec) -> Result<Vec<CyclotomicNumber>> {
    let trimmed = trim_poly(ppoly);
    let p = trimmed
        .first()
        .map(|c| c.p)
        .ok_or_else(|| Error::BadConstantTerm("empty polynomial".into()))?;
    let nn = trimmed.len() - 1;
    let dim = op.dimension(nn as u64)? as usize;
    let traces = op_traces(trimmed, op, dim)?;
    let mut a = vec![CyclotomicNumber::zero(p); dim + 1];
    for s in 1..=dim {
        a[s] = traces[s - 1]
            .scale(&BigRational::new(BigInt::one(), s.into()))
            .neg();
    }
    series_exp(&a)
}

// ---------------------------------------------------------------------------
// global L-functions

/// A truncation of a global L-function over 𝔾_m or 𝔸¹.
#[derive(Debug, Clone)]
pub struct GlobalLTruncation {
    pub op: OpSpec,
    pub domain: Domain,
    pub d_max: u32,
    /// Coefficients of T^0 .. T^{d_max}; T^0 is 1.
    pub coefficients: Vec<CyclotomicNumber>,
    /// For 𝔸¹: the detected degree of the λ̄ = 0 fiber, whose L-polynomial
    /// is scanned independently of the family rank.
    pub zero_fiber_degree: Option<u64>,
}

/// L-polynomial of the undeformed f̄ itself: degree bound from its own
/// polytope, verified by its own vanishing tail.  Returns the polynomial
/// with trailing zeros trimmed and the detected degree.
fn undeformed_l(
    base: &FieldSpec,
    f: &LaurentPolynomial,
    ceiling: u64,
    cache: &SumCache,
) -> Result<(Vec<CyclotomicNumber>, u64)> {
    let n0 = toric_rank(&f.support())? as usize;
    let family = family_digest(base, f, &[], 0);
    let sums: Vec<CyclotomicNumber> = (1..=2 * n0 as u32)
        .into_par_iter()
        .map(|r| extension_sum(base, base, f, &family, "zero-fiber", r, ceiling, cache))
        .collect::<Result<_>>()?;
    let lpoly = l_polynomial_from_sums(base.p, f.n, n0, &sums)?;
    let trimmed = trim_poly(&lpoly);
    Ok((trimmed.to_vec(), trimmed.len() as u64 - 1))
}

/// Truncated global L: the Euler product over closed points of degree ≤
/// d_max of det(1 − ℒ(Frob_λ̄)T^{deg λ̄})^{−1}, cross-checked against the
/// moment series exp(Σ_r M_r T^r / r) with
/// M_r = Σ_{λ ∈ 𝔽_{q^r}} Tr ℒ(Frob^{r/deg}).  The two assemblies must agree
/// coefficient by coefficient.
pub fn global_l_truncated(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    basis: &BasisB,
    op: &OpSpec,
    domain: Domain,
    d_max: u32,
    ceiling: u64,
    cache: &SumCache,
) -> Result<GlobalLTruncation> {
    let p = base.p;
    let len = d_max as usize + 1;
    let points = closed_points(base, d_max, domain, ceiling)?;
    let fibers: Vec<(u32, bool, Vec<CyclotomicNumber>, Option<u64>)> = points
        .par_iter()
        .map(|pt| {
            if pt.rep.is_zero() {
                let (l0, deg0) = undeformed_l(base, f, ceiling, cache)?;
                Ok((pt.degree, true, l0, Some(deg0)))
            } else {
                let report = fiber_l(ctx, base, f, basis, pt, ceiling, cache)?;
                Ok((pt.degree, false, report.lpoly, None))
            }
        })
        .collect::<Result<_>>()?;

    let mut euler = vec![CyclotomicNumber::zero(p); len];
    euler[0] = CyclotomicNumber::one(p);
    let mut moments = vec![CyclotomicNumber::zero(p); len];
    let mut zero_fiber_degree = None;
    for (degree, _, lpoly, deg0) in &fibers {
        let d = *degree as usize;
        if deg0.is_some() {
            zero_fiber_degree = *deg0;
        }
        let s_max = d_max as usize / d;
        let traces = op_traces(lpoly, op, s_max)?;
        for (s, tr) in traces.iter().enumerate() {
            let r = (s + 1) * d;
            moments[r] = moments[r].add(&tr.scale(&rat(d as i64)));
        }
        let q_op = op_char_poly(lpoly, op)?;
        let mut qd = vec![CyclotomicNumber::zero(p); len];
        qd[0] = CyclotomicNumber::one(p);
        for (j, c) in q_op.iter().enumerate().skip(1) {
            if j * d < len {
                qd[j * d] = c.clone();
            }
        }
        euler = series_mul(&euler, &series_inv(&qd, len)?, len);
    }

    let mut a = vec![CyclotomicNumber::zero(p); len];
    for (r, m) in moments.iter().enumerate().skip(1) {
        a[r] = m.scale(&BigRational::new(BigInt::one(), r.into()));
    }
    let from_moments = series_exp(&a)?;
    for r in 0..len {
        if from_moments[r] != euler[r] {
            return Err(Error::CrossCheckMismatch(r));
        }
    }
    Ok(GlobalLTruncation {
        op: op.clone(),
        domain,
        d_max,
        coefficients: euler,
        zero_fiber_degree,
    })
}

// ---------------------------------------------------------------------------
// degree bounds

/// The numeric degree bounds for a global L-function, reported verbatim; a
/// gap bound below 1 forces the zero and pole counts to coincide.
#[derive(Debug, Clone)]
pub struct DegreeBoundReport {
    pub op: OpSpec,
    /// ℒN on the rank-N fiber space.
    pub op_dimension: u64,
    /// |ℒ|.
    pub op_order: u32,
    /// D/|1 − l_σ(μ)|: upper bound for R − S over 𝔾_m.
    pub r_minus_s: BigRational,
    /// True when `r_minus_s` < 1, so R = S under the degree bound.
    pub forces_r_equals_s: bool,
    /// ℒN·(D/|1 − l_σ(μ)|)·5·2^{1+2n|ℒ|}: total-degree bound over 𝔾_m.
    pub total_degree_gm: BigRational,
    /// The affine variant with constant 6 in place of 5.
    pub total_degree_a1: BigRational,
    /// Reported lower bound for ord_q of the reciprocal zeros and poles of
    /// the affine L-function; not verifiable from truncations.
    pub ord_q_lower: BigRational,
}

pub fn degree_bound_report(ctx: &GeometryContext, op: &OpSpec) -> Result<DegreeBoundReport> {
    let dd = rat(ctx.m_denom as i64);
    let gap = (BigRational::one() - &ctx.lsigma_mu).abs();
    let r_minus_s = dd / gap;
    let op_dimension = op.dimension(ctx.rank)?;
    let op_order = op.order();
    let exponent = 1 + 2 * ctx.n * op_order as usize;
    let two_pow = BigRational::from_integer(BigInt::one() << exponent);
    let base_total =
        BigRational::from_integer(op_dimension.into()) * &r_minus_s * &two_pow;
    Ok(DegreeBoundReport {
        op: op.clone(),
        op_dimension,
        op_order,
        forces_r_equals_s: r_minus_s < BigRational::one(),
        total_degree_gm: &base_total * rat(5),
        total_degree_a1: &base_total * rat(6),
        ord_q_lower: r_minus_s.clone(),
        r_minus_s,
    })
}

// ---------------------------------------------------------------------------
// lower-order deformations

/// One term γ·t^a·λ^b·x^u of a multi-parameter family.
#[derive(Debug, Clone)]
pub struct MultiTerm {
    /// Coefficient over the base field.
    pub coeff: FieldElement,
    pub t_exp: Vec<i64>,
    pub lambda_exp: i64,
    pub x_exp: Vec<i64>,
}

/// Exact S_r of a lower-order deformed family at (t̄, λ̄): every term's t and
/// λ parts collapse into its coefficient, and the same kernel sums the
/// resulting Laurent polynomial in x over 𝔽_{q^{r·deg}}.  The coordinates of
/// t̄ must be units given in λ̄'s field, so deg(t̄, λ̄) = deg(λ̄).
pub fn multiparam_exp_sum(
    base: &FieldSpec,
    terms: &[MultiTerm],
    t_point: &[FieldElement],
    lambda: &ClosedPoint,
    r: u32,
    ceiling: u64,
) -> Result<CyclotomicNumber> {
    if r == 0 {
        return Err(Error::PreconditionFailed("sum index r must be positive".into()));
    }
    if lambda.rep.is_zero() {
        return Err(Error::PreconditionFailed(
            "the fiber parameter must be a unit".into(),
        ));
    }
    let lf = point_field(base, lambda)?;
    for t in t_point {
        if t.p != lf.p || t.m != lf.m {
            return Err(Error::MixedFields(
                format!("F_{}^{}", t.p, t.m),
                format!("F_{}^{}", lf.p, lf.m),
            ));
        }
    }
    let n = terms
        .first()
        .map(|t| t.x_exp.len())
        .ok_or_else(|| Error::PreconditionFailed("empty family".into()))?;
    let emb = embed(base, &lf)?;
    let mut collapsed = Vec::with_capacity(terms.len());
    for term in terms {
        if term.x_exp.len() != n {
            return Err(Error::LengthMismatch(term.x_exp.len(), n));
        }
        if term.t_exp.len() != t_point.len() {
            return Err(Error::LengthMismatch(term.t_exp.len(), t_point.len()));
        }
        let mut c = emb.apply(&lf, &term.coeff);
        for (t, &e) in t_point.iter().zip(&term.t_exp) {
            c = lf.mul(&c, &lf.pow_i(t, e)?);
        }
        c = lf.mul(&c, &lf.pow_i(&lambda.rep, term.lambda_exp)?);
        collapsed.push((term.x_exp.clone(), c));
    }
    let poly = LaurentPolynomial::new(n, &lf, collapsed)?;
    let ext = make_field(base.p, checked_degree(lf.m, r)?)?;
    let ext_emb = embed(&lf, &ext)?;
    let g = poly.map_coefficients(&ext, |c| ext_emb.apply(&ext, c));
    toric_sum(&ext, &g, ceiling)
}
