//! Lattice geometry of the family F̄(Λ, x) = f̄(x) + Λ^{±1}x^μ.
//!
//! Everything downstream keys off the polytope Δ∞(f̄, μ) = conv({0} ∪
//! Supp(f̄) ∪ {μ}) and the cone decomposition it induces: the facet forms
//! φ^(τ) of Cone(f̄), the set Γ₁ of faces visible from μ, the weight
//! functions w, m, W, the structure constants D, d, e, and the rank
//! N = n!·Vol(Δ∞(f̄, μ)).  All computations are exact over ℚ; hulls are
//! found by brute-force supporting-hyperplane search, which is fine at the
//! intended scale (n ≤ 4, a dozen support points).

use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_field::{embed, FieldElement, FieldSpec};
use crate::rational::{
    det_rat, dot_ii, dot_ri, nullspace_int, nullspace_rat, pivot_columns, primitive_scaled, rat,
    rat_to_string, solve_unique,
};

pub type LatticePoint = Vec<i64>;

/// Cap on bounding-box scans in lattice-point enumeration.
const MAX_BOX_POINTS: u64 = 1 << 24;

// ---------------------------------------------------------------------------
// Laurent polynomials

/// A Laurent polynomial over 𝔽_{p^m}: a finite map from exponent vectors
/// in ℤ^n to nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPolynomial {
    pub n: usize,
    pub p: u64,
    pub m: u32,
    pub terms: BTreeMap<LatticePoint, FieldElement>,
}

impl LaurentPolynomial {
    /// Builds the polynomial, dropping zero coefficients and merging
    /// repeated exponents additively.
    pub fn new(
        n: usize,
        field: &FieldSpec,
        terms: impl IntoIterator<Item = (LatticePoint, FieldElement)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<LatticePoint, FieldElement> = BTreeMap::new();
        for (v, c) in terms {
            if v.len() != n {
                return Err(Error::LengthMismatch(v.len(), n));
            }
            if c.p != field.p || c.m != field.m {
                return Err(Error::MixedFields(
                    format!("F_{}^{}", c.p, c.m),
                    format!("F_{}^{}", field.p, field.m),
                ));
            }
            let entry = match map.remove(&v) {
                Some(prev) => field.add(&prev, &c),
                None => c,
            };
            if entry.is_zero() {
                continue;
            }
            map.insert(v, entry);
        }
        Ok(LaurentPolynomial {
            n,
            p: field.p,
            m: field.m,
            terms: map,
        })
    }

    pub fn support(&self) -> Vec<LatticePoint> {
        self.terms.keys().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The toric partial x_l·∂/∂x_l: each coefficient is multiplied by its
    /// exponent in variable l (mod p); terms killed by the characteristic
    /// disappear.
    pub fn toric_partial(&self, field: &FieldSpec, l: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (v, c) in &self.terms {
            let scaled = field.scale(c, v[l].rem_euclid(self.p as i64) as u64);
            if !scaled.is_zero() {
                terms.insert(v.clone(), scaled);
            }
        }
        LaurentPolynomial {
            n: self.n,
            p: self.p,
            m: self.m,
            terms,
        }
    }

    /// Restriction to the terms whose exponents lie in `points`.
    pub fn restrict(&self, points: &BTreeSet<LatticePoint>) -> Self {
        LaurentPolynomial {
            n: self.n,
            p: self.p,
            m: self.m,
            terms: self
                .terms
                .iter()
                .filter(|(v, _)| points.contains(*v))
                .map(|(v, c)| (v.clone(), c.clone()))
                .collect(),
        }
    }

    /// Evaluates at a torus point (all coordinates nonzero, so negative
    /// exponents are fine).
    pub fn eval(&self, field: &FieldSpec, x: &[FieldElement]) -> Result<FieldElement> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch(x.len(), self.n));
        }
        let mut acc = field.zero();
        for (v, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &e) in x.iter().zip(v) {
                term = field.mul(&term, &field.pow_i(xi, e)?);
            }
            acc = field.add(&acc, &term);
        }
        Ok(acc)
    }

    /// Applies a coefficient map (an embedding into a larger field).
    pub fn map_coefficients(
        &self,
        target: &FieldSpec,
        mut f: impl FnMut(&FieldElement) -> FieldElement,
    ) -> Self {
        LaurentPolynomial {
            n: self.n,
            p: target.p,
            m: target.m,
            terms: self.terms.iter().map(|(v, c)| (v.clone(), f(c))).collect(),
        }
    }

    /// The polynomial plus one extra term (used to form fibers f̄ + λ̄x^μ).
    pub fn with_added_term(&self, field: &FieldSpec, v: LatticePoint, c: FieldElement) -> Result<Self> {
        let mut terms: Vec<(LatticePoint, FieldElement)> =
            self.terms.iter().map(|(v, c)| (v.clone(), c.clone())).collect();
        terms.push((v, c));
        Self::new(self.n, field, terms)
    }
}

// ---------------------------------------------------------------------------
// context

/// Deformation direction: Below deforms by Λx^μ with l_σ(μ) < 1 and μ
/// outside Cone(f̄); Above deforms by Λ^{−1}x^μ with l_σ(μ) > 1 and μ
/// interior to Cone(f̄).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Below,
    Above,
}

impl Case {
    /// Sign of the Λ-exponent of the deformation monomial.
    pub fn lambda_exponent(&self) -> i64 {
        match self {
            Case::Below => 1,
            Case::Above => -1,
        }
    }
}

/// A facet of Cone(f̄): its primitive integral form φ^(τ) (nonnegative on
/// the cone) and the support points of the codimension-2 face τ of
/// Δ∞(f̄) at infinity that spans it (empty when n = 1).
#[derive(Debug, Clone, Serialize)]
pub struct Facet {
    pub phi: Vec<i64>,
    pub tau_points: Vec<LatticePoint>,
}

/// A maximal subcone of Cone(f̄, μ) on which the weight is a single linear
/// form: either Cone(f̄) itself or Cone(τ, μ) for a visible face τ.
#[derive(Debug, Clone)]
struct Chamber {
    /// Facet index of τ, or None for the Cone(f̄) chamber.
    tau: Option<usize>,
    /// Primitive forms ≥ 0 exactly on the chamber.
    ineqs: Vec<Vec<i64>>,
}

/// A facet of the polytope Δ∞(f̄, μ): normal·x ≤ offset for all points,
/// with equality on `on` (indices into the point list used to build it).
#[derive(Debug, Clone)]
pub(crate) struct HullFacet {
    pub normal: Vec<BigRational>,
    pub offset: BigRational,
    pub on: Vec<usize>,
}

/// All polytope data of a family: facets, visibility, weights, and the
/// structure constants D, d, e, N.  Immutable after construction; all
/// evaluators are pure.
#[derive(Debug)]
pub struct GeometryContext {
    pub n: usize,
    pub support: Vec<LatticePoint>,
    pub mu: LatticePoint,
    pub lsigma: Vec<BigRational>,
    pub lsigma_mu: BigRational,
    pub case: Case,
    pub facets: Vec<Facet>,
    /// Indices into `facets` of the faces visible from μ (Γ₁).
    pub gamma1: Vec<usize>,
    /// D = lcm of |φ^(τ)(μ)| over Γ₁; the denominator step of m(v).
    pub m_denom: u64,
    /// d = least integer with all weights w(v) in (1/d)ℤ.
    pub w_denom: u64,
    /// e = least multiple of D with all total weights W(r, v) in (1/e)ℤ.
    pub total_denom: u64,
    /// N = n!·Vol(Δ∞(f̄, μ)); the rank of the reduction algebra.
    pub rank: u64,
    /// Vertices of Δ∞(f̄, μ).
    pub delta_vertices: Vec<LatticePoint>,
    chambers: Vec<Chamber>,
    hull_facets: Vec<HullFacet>,
}

impl GeometryContext {
    pub fn new(f: &LaurentPolynomial, mu: &[i64]) -> Result<Self> {
        Self::from_support(&f.support(), mu)
    }

    pub fn from_support(support: &[LatticePoint], mu: &[i64]) -> Result<Self> {
        let n = mu.len();
        if support.is_empty() {
            return Err(Error::Parse("empty support".into()));
        }
        if let Some(v) = support.iter().find(|v| v.len() != n) {
            return Err(Error::LengthMismatch(v.len(), n));
        }
        let rank = crate::rational::rank_int(support);
        if rank != n {
            return Err(Error::NotFullDimensional { rank, n });
        }
        let lsigma = lsigma_from_support(support)?;
        let facets = cone_facet_forms(support, n)?;
        let lsigma_mu = dot_ri(&lsigma, mu);
        let one = BigRational::one();

        let phi_mu: Vec<i64> = facets.iter().map(|f| dot_ii(&f.phi, mu)).collect();
        let (case, gamma1) = if lsigma_mu == one {
            return Err(Error::ExcludedCase);
        } else if lsigma_mu < one {
            let gamma1: Vec<usize> = (0..facets.len()).filter(|&i| phi_mu[i] < 0).collect();
            if gamma1.is_empty() {
                return Err(Error::MuInsideCone);
            }
            (Case::Below, gamma1)
        } else {
            if let Some(i) = (0..facets.len()).find(|&i| phi_mu[i] == 0) {
                return Err(Error::MuOnFacet(i));
            }
            if let Some(i) = (0..facets.len()).find(|&i| phi_mu[i] < 0) {
                return Err(Error::MuNotInterior(i));
            }
            (Case::Above, (0..facets.len()).collect())
        };

        let mut chambers = Vec::new();
        if case == Case::Below {
            chambers.push(Chamber {
                tau: None,
                ineqs: facets.iter().map(|f| f.phi.clone()).collect(),
            });
        }
        for &i in &gamma1 {
            let mut gens = facets[i].tau_points.clone();
            gens.push(mu.to_vec());
            let ineqs = cone_facet_forms(&gens, n)?
                .into_iter()
                .map(|f| f.phi)
                .collect();
            chambers.push(Chamber { tau: Some(i), ineqs });
        }

        let m_denom = gamma1
            .iter()
            .map(|&i| phi_mu[i].unsigned_abs())
            .fold(1u64, |acc, x| acc.lcm(&x));

        let mut hull_points: Vec<LatticePoint> = vec![vec![0; n]];
        hull_points.extend(support.iter().cloned());
        hull_points.push(mu.to_vec());
        hull_points.sort();
        hull_points.dedup();
        let pts_rat: Vec<Vec<BigRational>> = hull_points
            .iter()
            .map(|v| v.iter().map(|&x| rat(x)).collect())
            .collect();
        let hull_facets = polytope_facets(&pts_rat)?;
        let vertex_idx = polytope_vertices(&pts_rat, &hull_facets);
        let delta_vertices: Vec<LatticePoint> =
            vertex_idx.iter().map(|&i| hull_points[i].clone()).collect();
        let volume = volume_from_origin(&pts_rat, &hull_facets)?;
        if !volume.is_integer() || volume <= BigRational::zero() {
            return Err(Error::PreconditionFailed(format!(
                "normalized volume {} is not a positive integer",
                rat_to_string(&volume)
            )));
        }
        let rank_n: u64 = volume
            .to_integer()
            .try_into()
            .map_err(|_| Error::SizeCeilingExceeded(u64::MAX, MAX_BOX_POINTS))?;

        let mut ctx = GeometryContext {
            n,
            support: support.to_vec(),
            mu: mu.to_vec(),
            lsigma,
            lsigma_mu,
            case,
            facets,
            gamma1,
            m_denom,
            w_denom: 1,
            total_denom: 1,
            rank: rank_n,
            delta_vertices,
            chambers,
            hull_facets,
        };

        // d: least common denominator of w on the generating lattice points
        // of weight ≤ 1; e: the same for W over the monoid generators
        // (m(v), v) together with the pure-Λ step (1/D, 0).
        let gens = ctx.enumerate_weight_le(&BigRational::one())?;
        let mut d_acc = BigInt::one();
        let mut e_acc = BigInt::from(ctx.m_denom);
        let step = ctx.lambda_weight_step();
        for v in &gens {
            let w = ctx.weight(v)?;
            d_acc = d_acc.lcm(w.denom());
            let m_v = ctx.m_of(v)?;
            let total = ctx.raw_total_weight(&m_v, v);
            e_acc = e_acc.lcm(total.denom());
        }
        let lambda_gen = &step / BigRational::from_integer(ctx.m_denom.into());
        e_acc = e_acc.lcm(lambda_gen.denom());
        ctx.w_denom = (&d_acc).try_into().map_err(|_| {
            Error::PreconditionFailed("weight denominator overflows u64".into())
        })?;
        ctx.total_denom = (&e_acc).try_into().map_err(|_| {
            Error::PreconditionFailed("total weight denominator overflows u64".into())
        })?;
        Ok(ctx)
    }

    /// |1 − l_σ(μ)|: the weight contributed by one unit of Λ-degree.
    pub fn lambda_weight_step(&self) -> BigRational {
        (BigRational::one() - &self.lsigma_mu).abs()
    }

    /// Membership in Cone(f̄, μ) = Cone(f̄) ∪ ⋃_{τ∈Γ₁} Cone(τ, μ).
    /// In the Above case μ is interior, so the union is Cone(f̄) itself.
    pub fn in_cone(&self, v: &[i64]) -> bool {
        match self.case {
            Case::Above => self.facets.iter().all(|f| dot_ii(&f.phi, v) >= 0),
            Case::Below => self
                .chambers
                .iter()
                .any(|c| c.ineqs.iter().all(|phi| dot_ii(phi, v) >= 0)),
        }
    }

    fn chamber_weight(&self, chamber: &Chamber, v: &[i64]) -> BigRational {
        let base = dot_ri(&self.lsigma, v);
        match chamber.tau {
            None => base,
            Some(i) => {
                let phi = &self.facets[i].phi;
                let ratio = BigRational::new(dot_ii(phi, v).into(), dot_ii(phi, &self.mu).into());
                base + ratio * (BigRational::one() - &self.lsigma_mu)
            }
        }
    }

    /// The polyhedral weight w(v): the least b ≥ 0 with v ∈ b·Δ∞(f̄, μ),
    /// evaluated by the linear form of the chamber containing v.
    pub fn weight(&self, v: &[i64]) -> Result<BigRational> {
        let mut value: Option<BigRational> = None;
        for chamber in &self.chambers {
            if chamber.ineqs.iter().all(|phi| dot_ii(phi, v) >= 0) {
                let w = self.chamber_weight(chamber, v);
                if let Some(prev) = &value {
                    debug_assert_eq!(prev, &w, "chamber formulas disagree at {v:?}");
                }
                value = Some(w);
            }
        }
        value.ok_or_else(|| Error::OutsideCone(v.to_vec()))
    }

    /// m(v): the least Λ-degree r with (r, v) in the extended monoid.
    /// Nonnegative in the Below case (clamped at 0 on Cone(f̄)),
    /// nonpositive in the Above case.
    pub fn m_of(&self, v: &[i64]) -> Result<BigRational> {
        if !self.in_cone(v) {
            return Err(Error::OutsideCone(v.to_vec()));
        }
        let mut best = match self.case {
            Case::Below => Some(BigRational::zero()),
            Case::Above => None,
        };
        for &i in &self.gamma1 {
            let phi = &self.facets[i].phi;
            let ratio = BigRational::new(dot_ii(phi, v).into(), dot_ii(phi, &self.mu).into());
            let candidate = match self.case {
                Case::Below => ratio,
                Case::Above => -ratio,
            };
            if best.as_ref().is_none_or(|b| candidate > *b) {
                best = Some(candidate);
            }
        }
        Ok(best.unwrap_or_else(BigRational::zero))
    }

    fn raw_total_weight(&self, r: &BigRational, v: &[i64]) -> BigRational {
        dot_ri(&self.lsigma, v) + r * self.lambda_weight_step()
    }

    /// W(r, v) = l_σ(v) + r·|1 − l_σ(μ)| for (r, v) in the extended monoid.
    pub fn total_weight(&self, r: &BigRational, v: &[i64]) -> Result<BigRational> {
        if !self.in_extended_monoid(r, v) {
            return Err(Error::OutsideMonoid(rat_to_string(r), v.to_vec()));
        }
        Ok(self.raw_total_weight(r, v))
    }

    /// Membership in the extended monoid: r a multiple of 1/D, v in the
    /// cone, and r ≥ m(v).
    pub fn in_extended_monoid(&self, r: &BigRational, v: &[i64]) -> bool {
        let scaled = r * BigRational::from_integer(self.m_denom.into());
        if !scaled.is_integer() || !self.in_cone(v) {
            return false;
        }
        match self.m_of(v) {
            Ok(m) => *r >= m,
            Err(_) => false,
        }
    }

    /// Independent weight evaluation: max(0, max over facets at ∞ of the
    /// forms normalized to 1 on their facet).  Used to cross-check the
    /// chamber formulas.
    pub fn weight_oracle(&self, v: &[i64]) -> Option<BigRational> {
        if !self.in_cone(v) {
            return None;
        }
        let mut best = BigRational::zero();
        for facet in &self.hull_facets {
            if facet.offset.is_zero() {
                continue;
            }
            let val = dot_rr(&facet.normal, v) / &facet.offset;
            if val > best {
                best = val;
            }
        }
        Some(best)
    }

    /// All lattice points v of Cone(f̄, μ) with w(v) ≤ bound, in
    /// lexicographic order, by bounding-box scan of bound·Δ∞(f̄, μ).
    pub fn enumerate_weight_le(&self, bound: &BigRational) -> Result<Vec<LatticePoint>> {
        if bound < &BigRational::zero() {
            return Err(Error::PreconditionFailed("negative weight bound".into()));
        }
        let mut lo = vec![0i64; self.n];
        let mut hi = vec![0i64; self.n];
        for vert in &self.delta_vertices {
            for i in 0..self.n {
                let scaled = bound * rat(vert[i]);
                lo[i] = lo[i].min(scaled.floor().to_integer().try_into().unwrap_or(i64::MIN));
                hi[i] = hi[i].max(scaled.ceil().to_integer().try_into().unwrap_or(i64::MAX));
            }
        }
        let mut count: u64 = 1;
        for i in 0..self.n {
            count = count
                .checked_mul((hi[i] - lo[i] + 1) as u64)
                .filter(|&c| c <= MAX_BOX_POINTS)
                .ok_or(Error::SizeCeilingExceeded(u64::MAX, MAX_BOX_POINTS))?;
        }
        let mut out = Vec::new();
        let mut v = lo.clone();
        loop {
            if self.in_cone(&v) && self.weight(&v)? <= *bound {
                out.push(v.clone());
            }
            // odometer, last coordinate fastest, keeps output lex-sorted
            let mut i = self.n;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if v[i] < hi[i] {
                    v[i] += 1;
                    break;
                }
                v[i] = lo[i];
            }
        }
    }

    /// The distinct weights taken by lattice points with w ≤ bound,
    /// ascending.  These are the grades at which the reduction algebra has
    /// monomials.
    pub fn achieved_weights_le(&self, bound: &BigRational) -> Result<Vec<BigRational>> {
        let mut set = BTreeSet::new();
        for v in self.enumerate_weight_le(bound)? {
            set.insert(self.weight(&v)?);
        }
        Ok(set.into_iter().collect())
    }

    /// Faces at infinity of Δ∞(f̄, μ) (faces not containing 0), each given
    /// as the list of points of Supp(f̄) ∪ {μ} lying on it.  Used for
    /// fiber nondegeneracy.
    pub fn faces_at_infinity_extended(&self) -> Result<Vec<Vec<LatticePoint>>> {
        let mut points: Vec<LatticePoint> = self.support.clone();
        if !points.contains(&self.mu) {
            points.push(self.mu.clone());
        }
        let faces = faces_at_infinity(&points)?;
        Ok(faces
            .into_iter()
            .map(|idx| idx.into_iter().map(|i| points[i].clone()).collect())
            .collect())
    }
}

fn dot_rr(form: &[BigRational], v: &[i64]) -> BigRational {
    form.iter()
        .zip(v)
        .map(|(f, &x)| f * rat(x))
        .fold(BigRational::zero(), |acc, t| acc + t)
}

// ---------------------------------------------------------------------------
// standalone operations

/// The unique rational form with l_σ(v) = 1 on all of Supp(f̄); its
/// existence is the quasihomogeneity hypothesis.
pub fn compute_lsigma(f: &LaurentPolynomial) -> Result<Vec<BigRational>> {
    let support = f.support();
    let rank = crate::rational::rank_int(&support);
    if rank != f.n {
        return Err(Error::NotFullDimensional { rank, n: f.n });
    }
    lsigma_from_support(&support)
}

fn lsigma_from_support(support: &[LatticePoint]) -> Result<Vec<BigRational>> {
    let rows: Vec<Vec<BigRational>> = support
        .iter()
        .map(|v| v.iter().map(|&x| rat(x)).collect())
        .collect();
    let rhs = vec![BigRational::one(); rows.len()];
    solve_unique(&rows, &rhs).ok_or(Error::NotQuasihomogeneous)
}

/// The facets of Cone(f̄) with primitive integral forms, nonnegative on the
/// cone.  For n = 1 the cone is a half-line and its boundary {0} is the
/// cone over the empty face, with form ±x.
pub fn cone_facets(f: &LaurentPolynomial) -> Result<Vec<Facet>> {
    cone_facet_forms(&f.support(), f.n)
}

/// The fiber polynomial F̄(λ̄, x) = f̄(x) + λ̄^{±1}x^μ over λ̄'s field, with
/// f̄'s coefficients carried along the field embedding.  The sign of the
/// exponent comes from the case: Below deforms by Λx^μ, Above by Λ^{−1}x^μ.
pub fn fiber_polynomial(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    lambda_field: &FieldSpec,
    lambda: &FieldElement,
) -> Result<LaurentPolynomial> {
    if lambda.is_zero() {
        return Err(Error::PreconditionFailed(
            "the fiber parameter must be a unit; lambda = 0 drops the x^mu term".into(),
        ));
    }
    let emb = embed(base, lambda_field)?;
    let coeff = lambda_field.pow_i(lambda, ctx.case.lambda_exponent())?;
    f.map_coefficients(lambda_field, |c| emb.apply(lambda_field, c))
        .with_added_term(lambda_field, ctx.mu.clone(), coeff)
}

/// n!·Vol(Δ∞) for an undeformed support: the generic degree of the toric
/// L-polynomial of f̄ alone.  Needed where a family is specialized away from
/// its deformation, e.g. the λ̄ = 0 fiber over 𝔸¹.
pub fn toric_rank(support: &[LatticePoint]) -> Result<u64> {
    let n = support.first().map_or(0, Vec::len);
    let mut hull_points: Vec<LatticePoint> = vec![vec![0; n]];
    hull_points.extend(
        support
            .iter()
            .filter(|v| v.iter().any(|&c| c != 0))
            .cloned(),
    );
    hull_points.sort();
    hull_points.dedup();
    let pts_rat: Vec<Vec<BigRational>> = hull_points
        .iter()
        .map(|v| v.iter().map(|&x| rat(x)).collect())
        .collect();
    let hull_facets = polytope_facets(&pts_rat)?;
    let volume = volume_from_origin(&pts_rat, &hull_facets)?;
    if !volume.is_integer() || volume <= BigRational::zero() {
        return Err(Error::PreconditionFailed(format!(
            "normalized volume {} is not a positive integer",
            rat_to_string(&volume)
        )));
    }
    volume
        .to_integer()
        .try_into()
        .map_err(|_| Error::SizeCeilingExceeded(u64::MAX, MAX_BOX_POINTS))
}

fn cone_facet_forms(rays: &[LatticePoint], n: usize) -> Result<Vec<Facet>> {
    if n == 1 {
        let sign = rays[0][0].signum();
        if sign == 0 || rays.iter().any(|r| r[0].signum() != sign) {
            return Ok(Vec::new()); // cone is a line: no facets
        }
        return Ok(vec![Facet {
            phi: vec![sign],
            tau_points: Vec::new(),
        }]);
    }
    let mut forms = BTreeSet::new();
    for subset in combinations(rays.len(), n - 1) {
        let rows: Vec<LatticePoint> = subset.iter().map(|&i| rays[i].clone()).collect();
        let basis = nullspace_int(&rows, n);
        if basis.len() != 1 {
            continue;
        }
        let w = int_form(&basis[0])?;
        let vals: Vec<i64> = rays.iter().map(|r| dot_ii(&w, r)).collect();
        let oriented = if vals.iter().all(|&x| x >= 0) {
            w
        } else if vals.iter().all(|&x| x <= 0) {
            w.iter().map(|&x| -x).collect()
        } else {
            continue;
        };
        let on: Vec<LatticePoint> = rays
            .iter()
            .filter(|r| dot_ii(&oriented, r) == 0)
            .cloned()
            .collect();
        if crate::rational::rank_int(&on) == n - 1 {
            forms.insert((oriented, on));
        }
    }
    Ok(forms
        .into_iter()
        .map(|(phi, tau_points)| Facet { phi, tau_points })
        .collect())
}

fn int_form(v: &[BigInt]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| {
            x.try_into()
                .map_err(|_| Error::Parse("facet form entry overflows i64".into()))
        })
        .collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// hulls, faces, triangulation, volume

/// Facets of the convex hull of full-dimensional `pts`, by supporting-
/// hyperplane search over point subsets.
pub(crate) fn polytope_facets(pts: &[Vec<BigRational>]) -> Result<Vec<HullFacet>> {
    let n = pts.first().map_or(0, Vec::len);
    if affine_rank(pts) != n {
        return Err(Error::NotFullDimensional {
            rank: affine_rank(pts),
            n,
        });
    }
    let mut seen = BTreeSet::new();
    let mut facets = Vec::new();
    for subset in combinations(pts.len(), n) {
        // hyperplane a·x = b through the subset: (a, −b) spans the null
        // space of the rows (x | 1)
        let rows: Vec<Vec<BigRational>> = subset
            .iter()
            .map(|&i| {
                let mut r = pts[i].clone();
                r.push(BigRational::one());
                r
            })
            .collect();
        let basis = nullspace_rat(&rows, n + 1);
        if basis.len() != 1 {
            continue;
        }
        let mut normal: Vec<BigRational> = basis[0][..n].to_vec();
        let mut offset = -basis[0][n].clone();
        if normal.iter().all(|c| c.is_zero()) {
            continue;
        }
        let vals: Vec<BigRational> = pts.iter().map(|p| dot_rat(&normal, p)).collect();
        if vals.iter().all(|v| *v <= offset) {
            // keep orientation
        } else if vals.iter().all(|v| *v >= offset) {
            for c in &mut normal {
                *c = -c.clone();
            }
            offset = -offset;
        } else {
            continue;
        }
        let on: Vec<usize> = (0..pts.len())
            .filter(|&i| dot_rat(&normal, &pts[i]) == offset)
            .collect();
        let on_pts: Vec<Vec<BigRational>> = on.iter().map(|&i| pts[i].clone()).collect();
        if affine_rank(&on_pts) != n - 1 {
            continue;
        }
        let mut key: Vec<BigRational> = normal.clone();
        key.push(offset.clone());
        let key_int = primitive_scaled(&key);
        if seen.insert(key_int) {
            facets.push(HullFacet { normal, offset, on });
        }
    }
    Ok(facets)
}

fn dot_rat(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .fold(BigRational::zero(), |acc, t| acc + t)
}

/// Affine dimension of a point set (rank of differences from the first).
pub(crate) fn affine_rank(pts: &[Vec<BigRational>]) -> usize {
    if pts.len() <= 1 {
        return 0;
    }
    let base = &pts[0];
    let mut rows: Vec<Vec<BigRational>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    crate::rational::row_reduce(&mut rows)
}

/// Indices of the points that are vertices of the hull: those lying on
/// facets whose normals span the whole space.
pub(crate) fn polytope_vertices(pts: &[Vec<BigRational>], facets: &[HullFacet]) -> Vec<usize> {
    let n = pts.first().map_or(0, Vec::len);
    (0..pts.len())
        .filter(|&i| {
            let normals: Vec<Vec<BigRational>> = facets
                .iter()
                .filter(|f| f.on.contains(&i))
                .map(|f| f.normal.clone())
                .collect();
            let mut m = normals;
            crate::rational::row_reduce(&mut m) == n
        })
        .collect()
}

/// n!·Vol of the hull, by starring the facets off the origin: each facet is
/// triangulated recursively and each simplex S contributes |det S| for the
/// pyramid conv({0} ∪ S).  The origin must be one of `pts`.
pub(crate) fn volume_from_origin(
    pts: &[Vec<BigRational>],
    facets: &[HullFacet],
) -> Result<BigRational> {
    let vertices = polytope_vertices(pts, facets);
    let mut total = BigRational::zero();
    for facet in facets {
        if facet.offset.is_zero() {
            continue; // the hyperplane passes through 0: zero-volume pyramid
        }
        let face_vertex_idx: Vec<usize> = facet
            .on
            .iter()
            .copied()
            .filter(|i| vertices.contains(i))
            .collect();
        let face_pts: Vec<Vec<BigRational>> =
            face_vertex_idx.iter().map(|&i| pts[i].clone()).collect();
        for simplex in triangulate(&face_pts)? {
            let matrix: Vec<Vec<BigRational>> =
                simplex.iter().map(|&i| face_pts[i].clone()).collect();
            total += det_rat(&matrix).abs();
        }
    }
    Ok(total)
}

/// Pulling triangulation of a polytope given by its vertex list: star the
/// lexicographically smallest vertex over the triangulated facets that do
/// not contain it.  Returns simplices as index lists into `pts`.
pub(crate) fn triangulate(pts: &[Vec<BigRational>]) -> Result<Vec<Vec<usize>>> {
    let dim = affine_rank(pts);
    if dim == 0 {
        return Ok(vec![vec![0]]);
    }
    // work in full-rank coordinates: project to the pivot columns of the
    // difference matrix (an affine isomorphism on the hull)
    let base = &pts[0];
    let diffs: Vec<Vec<BigRational>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let cols = pivot_columns(&diffs);
    let proj: Vec<Vec<BigRational>> = pts
        .iter()
        .map(|p| cols.iter().map(|&c| p[c].clone()).collect())
        .collect();
    let v0 = (0..proj.len())
        .min_by(|&a, &b| proj[a].cmp(&proj[b]))
        .expect("nonempty point set");
    let facets = polytope_facets(&proj)?;
    let mut simplices = Vec::new();
    for facet in facets {
        if facet.on.contains(&v0) {
            continue;
        }
        let sub_pts: Vec<Vec<BigRational>> = facet.on.iter().map(|&i| proj[i].clone()).collect();
        for sub in triangulate(&sub_pts)? {
            let mut simplex = vec![v0];
            simplex.extend(sub.into_iter().map(|j| facet.on[j]));
            simplices.push(simplex);
        }
    }
    Ok(simplices)
}

/// Faces at infinity of conv({0} ∪ points): every nonempty face not
/// containing 0, as sorted index lists into `points`.  Faces are the
/// closure of the facet point-sets under intersection.
pub fn faces_at_infinity(points: &[LatticePoint]) -> Result<Vec<Vec<usize>>> {
    let n = points.first().map_or(0, Vec::len);
    let mut pts: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n]];
    for p in points {
        pts.push(p.iter().map(|&x| rat(x)).collect());
    }
    let facets = polytope_facets(&pts)?;
    let mut faces: BTreeSet<Vec<usize>> = facets.iter().map(|f| f.on.clone()).collect();
    loop {
        let mut fresh = Vec::new();
        for a in &faces {
            for b in &faces {
                let inter: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
                if !inter.is_empty() && !faces.contains(&inter) {
                    fresh.push(inter);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        faces.extend(fresh);
    }
    Ok(faces
        .into_iter()
        .filter(|f| !f.contains(&0)) // drop faces through the origin
        .map(|f| f.into_iter().map(|i| i - 1).collect())
        .collect())
}

// ---------------------------------------------------------------------------
// the relative polytope Υ for lower-order deformations

/// The relative polytope of a lower-order deformation P̄ of Ḡ(Λ, x) =
/// F̄(Λ^M, x): the convex hull of {0} and the scaled deformation exponents
/// γ/(1 − W_Ḡ(r; u)), together with its weight evaluators.
#[derive(Debug)]
pub struct Upsilon {
    pub s: usize,
    pub m_power: u32,
    pub vertices: Vec<Vec<BigRational>>,
    pub normalized_volume: BigRational,
    /// |1 − l_σ(μ)| / M: weight per unit of Λ-degree in the rescaled family.
    pub lambda_step: BigRational,
    facets: Vec<HullFacet>,
}

impl Upsilon {
    /// w_Υ(γ): least b ≥ 0 with γ ∈ b·Υ; None if γ is outside Cone(Υ).
    pub fn weight(&self, gamma: &[i64]) -> Option<BigRational> {
        if gamma.iter().all(|&g| g == 0) {
            return Some(BigRational::zero());
        }
        if self.facets.is_empty() {
            return None; // Υ = {0}
        }
        let mut best = BigRational::zero();
        for facet in &self.facets {
            let val = dot_rr(&facet.normal, gamma);
            if facet.offset.is_zero() {
                if val > BigRational::zero() {
                    return None;
                }
                continue;
            }
            let scaled = val / &facet.offset;
            if scaled > best {
                best = scaled;
            }
        }
        Some(best)
    }

    /// W_Υ(γ; r) = w_Υ(γ) + (r/M)·|1 − l_σ(μ)|.
    pub fn total_weight(&self, gamma: &[i64], r: &BigRational) -> Option<BigRational> {
        Some(self.weight(gamma)? + r * &self.lambda_step)
    }
}

/// Builds Υ from the support of the deformation P̄, given as triples
/// (γ, r, u) of t̄-exponent, Λ-exponent, and x-exponent.  Every support
/// point must satisfy W_Ḡ(r; u) < 1; that is what makes P̄ lower-order.
pub fn relative_polytope_upsilon(
    ctx: &GeometryContext,
    m_power: u32,
    support: &[(Vec<i64>, i64, LatticePoint)],
) -> Result<Upsilon> {
    if m_power == 0 {
        return Err(Error::PreconditionFailed("M must be positive".into()));
    }
    let s = support.first().map_or(0, |(g, _, _)| g.len());
    let step = ctx.lambda_weight_step() / BigRational::from_integer(m_power.into());
    let mut pts: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); s]];
    for (gamma, r, u) in support {
        if gamma.len() != s {
            return Err(Error::LengthMismatch(gamma.len(), s));
        }
        if !ctx.in_cone(u) {
            return Err(Error::OutsideCone(u.clone()));
        }
        let w_g = dot_ri(&ctx.lsigma, u) + rat(*r) * &step;
        if w_g >= BigRational::one() {
            return Err(Error::NotLowerOrder {
                term: format!("gamma={gamma:?}, r={r}, u={u:?}"),
                reason: format!("W_G = {} is not < 1", rat_to_string(&w_g)),
            });
        }
        let scale = (BigRational::one() - w_g).recip();
        pts.push(gamma.iter().map(|&g| rat(g) * &scale).collect());
    }
    pts.sort();
    pts.dedup();
    if support.is_empty() || s == 0 {
        return Ok(Upsilon {
            s,
            m_power,
            vertices: vec![vec![BigRational::zero(); s]],
            normalized_volume: BigRational::zero(),
            lambda_step: step,
            facets: Vec::new(),
        });
    }
    if affine_rank(&pts) != s {
        return Err(Error::NotFullDimensional {
            rank: affine_rank(&pts),
            n: s,
        });
    }
    let facets = polytope_facets(&pts)?;
    let vertex_idx = polytope_vertices(&pts, &facets);
    let vertices: Vec<Vec<BigRational>> = vertex_idx.iter().map(|&i| pts[i].clone()).collect();
    let normalized_volume = volume_from_origin(&pts, &facets)?;
    Ok(Upsilon {
        s,
        m_power,
        vertices,
        normalized_volume,
        lambda_step: step,
        facets,
    })
}
