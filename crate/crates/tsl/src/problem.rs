//! Problem files: the JSON input format of the command-line tool.
//!
//! A problem file pins down one family over one base field, together with
//! the optional deformation exponent, lower-order terms, an operation to
//! apply, and resource limits.  [`load_problem`] parses, validates, and
//! resolves defaults, so everything downstream works with exact field
//! elements and never re-reads the file.

use rayon::prelude::*;
use serde::Deserialize;

use crate::cache::{hex_digest, SumCache, SumKey};
use crate::cohomology::BasisB;
use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::finite_field::{embed, make_field, ClosedPoint, FieldElement, FieldSpec};
use crate::geometry::{
    relative_polytope_upsilon, GeometryContext, LaurentPolynomial, Upsilon,
};
use crate::lfunctions::{
    fiber_l, fiber_report_from_sums, field_label, multiparam_exp_sum, orbit_label,
    point_field, FiberLReport, MultiTerm, OpSpec, DEFAULT_CEILING,
};

/// Default truncation degree for global L-functions when neither the
/// problem file nor the command line gives one.
pub const DEFAULT_D_MAX: u32 = 2;

/// A coefficient in a problem file: either a plain integer, reduced mod p,
/// or the coordinate vector of an element of 𝔽_{p^m} over the power basis.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Int(i64),
    Coords(Vec<u64>),
}

/// One monomial of f̄.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: CoeffSpec,
    pub exp: Vec<i64>,
}

/// One lower-order deformation monomial t̄^γ Λ^r x^u with a coefficient.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerOrderSpec {
    pub coeff: CoeffSpec,
    pub t_exp: Vec<i64>,
    pub lambda_exp: i64,
    pub x_exp: Vec<i64>,
}

/// Resource limits; all optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// Largest torus a single character sum may enumerate.
    pub ceiling: Option<u64>,
    /// Nondegeneracy search depth (extension degrees tried).
    pub k_max: Option<u32>,
    /// Truncation degree of global L-functions.
    pub d_max: Option<u32>,
}

/// The raw problem file, straight from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub p: u64,
    #[serde(default = "default_m")]
    pub m: u32,
    pub f: Vec<TermSpec>,
    pub mu: Vec<i64>,
    /// M in Ḡ(Λ, x) = F̄(Λ^M, x).
    #[serde(default = "default_exponent")]
    pub deformation_exponent: u32,
    #[serde(default)]
    pub lower_order: Vec<LowerOrderSpec>,
    /// Values for the t̄ variables of `lower_order`, as base-field
    /// coefficients; required as soon as some t_exp is nonempty.
    #[serde(default)]
    pub t_point: Vec<CoeffSpec>,
    /// Operation to apply to fiber Frobenius, e.g. "sym2" or "sym1*ext2".
    #[serde(default)]
    pub op: Option<String>,
    #[serde(default)]
    pub limits: Limits,
}

fn default_m() -> u32 {
    1
}

fn default_exponent() -> u32 {
    1
}

/// A parsed and validated problem: field model built, coefficients
/// resolved, defaults filled in.
#[derive(Debug)]
pub struct Problem {
    pub base: FieldSpec,
    pub f: LaurentPolynomial,
    pub mu: Vec<i64>,
    pub deformation_exponent: u32,
    pub lower_order: Vec<MultiTerm>,
    /// Values of the t̄ variables over the base field.
    pub t_point: Vec<FieldElement>,
    pub op: Option<OpSpec>,
    pub ceiling: u64,
    pub k_max: Option<u32>,
    pub d_max: u32,
    /// SHA-256 of the input bytes, for run manifests.
    pub input_sha256: String,
}

/// Parses and resolves a problem file.
pub fn load_problem(text: &str) -> Result<Problem> {
    let file: ProblemFile = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("problem file: {e}")))?;
    file.resolve(text.as_bytes())
}

impl ProblemFile {
    /// Validates the file and builds the resolved [`Problem`].  `raw` is
    /// the original input, hashed into the run manifest.
    pub fn resolve(&self, raw: &[u8]) -> Result<Problem> {
        let base = make_field(self.p, self.m)?;
        let n = self.mu.len();
        if n == 0 {
            return Err(Error::Parse("mu must have at least one coordinate".into()));
        }
        if self.f.is_empty() {
            return Err(Error::Parse("f must have at least one term".into()));
        }
        let mut terms = Vec::with_capacity(self.f.len());
        for (i, t) in self.f.iter().enumerate() {
            if t.exp.len() != n {
                return Err(Error::Parse(format!(
                    "f[{i}]: exponent vector has length {}, expected {n}",
                    t.exp.len()
                )));
            }
            let c = resolve_coeff(&base, &t.coeff)
                .map_err(|e| Error::Parse(format!("f[{i}]: {e}")))?;
            terms.push((t.exp.clone(), c));
        }
        let f = LaurentPolynomial::new(n, &base, terms)?;
        if f.is_zero() {
            return Err(Error::Parse("f vanishes after reduction mod p".into()));
        }
        if self.deformation_exponent == 0 {
            return Err(Error::Parse("deformation_exponent must be positive".into()));
        }

        let s = self
            .lower_order
            .iter()
            .map(|t| t.t_exp.len())
            .max()
            .unwrap_or(0);
        let mut lower = Vec::with_capacity(self.lower_order.len());
        for (i, t) in self.lower_order.iter().enumerate() {
            if t.x_exp.len() != n {
                return Err(Error::Parse(format!(
                    "lower_order[{i}]: exponent vector has length {}, expected {n}",
                    t.x_exp.len()
                )));
            }
            if t.t_exp.len() != s {
                return Err(Error::Parse(format!(
                    "lower_order[{i}]: t_exp has length {}, expected {s}",
                    t.t_exp.len()
                )));
            }
            let c = resolve_coeff(&base, &t.coeff)
                .map_err(|e| Error::Parse(format!("lower_order[{i}]: {e}")))?;
            lower.push(MultiTerm {
                coeff: c,
                t_exp: t.t_exp.clone(),
                lambda_exp: t.lambda_exp,
                x_exp: t.x_exp.clone(),
            });
        }
        if self.t_point.len() != s {
            return Err(Error::Parse(format!(
                "t_point has {} values but lower_order uses {s} t variables",
                self.t_point.len()
            )));
        }
        let mut t_point = Vec::with_capacity(s);
        for (i, c) in self.t_point.iter().enumerate() {
            let v = resolve_coeff(&base, c)
                .map_err(|e| Error::Parse(format!("t_point[{i}]: {e}")))?;
            if v.is_zero() {
                return Err(Error::Parse(format!("t_point[{i}] must be a unit")));
            }
            t_point.push(v);
        }

        let op = match &self.op {
            Some(s) => Some(OpSpec::parse(s)?),
            None => None,
        };
        Ok(Problem {
            base,
            f,
            mu: self.mu.clone(),
            deformation_exponent: self.deformation_exponent,
            lower_order: lower,
            t_point,
            op,
            ceiling: self.limits.ceiling.unwrap_or(DEFAULT_CEILING),
            k_max: self.limits.k_max,
            d_max: self.limits.d_max.unwrap_or(DEFAULT_D_MAX),
            input_sha256: hex_digest(raw),
        })
    }
}

fn resolve_coeff(base: &FieldSpec, c: &CoeffSpec) -> Result<FieldElement> {
    match c {
        CoeffSpec::Int(n) => Ok(base.from_int(*n)),
        CoeffSpec::Coords(v) => base.element_from_coeffs(v),
    }
}

impl Problem {
    /// Geometry of the underlying family (Λ-degree rescaling by M does not
    /// change the polytope data).
    pub fn geometry(&self) -> Result<GeometryContext> {
        GeometryContext::new(&self.f, &self.mu)
    }

    /// True when the problem is the plain one-parameter family: M = 1 and
    /// no lower-order terms.
    pub fn is_pure(&self) -> bool {
        self.deformation_exponent == 1 && self.lower_order.is_empty()
    }

    /// The relative polytope of the lower-order part; also the validation
    /// that every deformation term really is lower-order.
    pub fn upsilon(&self, ctx: &GeometryContext) -> Result<Upsilon> {
        let support: Vec<(Vec<i64>, i64, Vec<i64>)> = self
            .lower_order
            .iter()
            .map(|t| (t.t_exp.clone(), t.lambda_exp, t.x_exp.clone()))
            .collect();
        relative_polytope_upsilon(ctx, self.deformation_exponent, &support)
    }

    /// All terms of the deformed family in multiparameter form: f̄, the
    /// monomial λ^{±M} x^μ, then the lower-order terms.
    pub fn multi_terms(&self, ctx: &GeometryContext) -> Vec<MultiTerm> {
        let s = self.t_point.len();
        let mut terms: Vec<MultiTerm> = self
            .f
            .terms
            .iter()
            .map(|(v, c)| MultiTerm {
                coeff: c.clone(),
                t_exp: vec![0; s],
                lambda_exp: 0,
                x_exp: v.clone(),
            })
            .collect();
        terms.push(MultiTerm {
            coeff: self.base.one(),
            t_exp: vec![0; s],
            lambda_exp: ctx.case.lambda_exponent() * i64::from(self.deformation_exponent),
            x_exp: self.mu.clone(),
        });
        terms.extend(self.lower_order.iter().cloned());
        terms
    }

    /// Canonical digest of the deformed family, the cache namespace for
    /// problems that go through the multiparameter kernel.
    fn deformed_digest(&self, ctx: &GeometryContext) -> String {
        let mut text = format!(
            "multi {} M {}\nmu",
            field_label(&self.base),
            self.deformation_exponent
        );
        for c in &self.mu {
            text.push_str(&format!(" {c}"));
        }
        text.push('\n');
        let mut lines: Vec<String> = self
            .multi_terms(ctx)
            .iter()
            .map(|t| format!("{:?} {} {:?} {:?}", t.t_exp, t.lambda_exp, t.x_exp, t.coeff.coeffs))
            .collect();
        lines.sort();
        for l in &lines {
            text.push_str(l);
            text.push('\n');
        }
        text.push_str("t ");
        for v in &self.t_point {
            text.push_str(&format!("{:?} ", v.coeffs));
        }
        hex_digest(text.as_bytes())
    }

    /// S_1 .. S_count of this problem's family at λ̄, through the cache.
    pub fn fiber_sums(
        &self,
        ctx: &GeometryContext,
        lambda: &ClosedPoint,
        count: u32,
        cache: &SumCache,
    ) -> Result<Vec<CyclotomicNumber>> {
        let lf = point_field(&self.base, lambda)?;
        let emb = embed(&self.base, &lf)?;
        let t_point: Vec<FieldElement> =
            self.t_point.iter().map(|t| emb.apply(&lf, t)).collect();
        let terms = self.multi_terms(ctx);
        let family = self.deformed_digest(ctx);
        let label = orbit_label(&self.base, &lf, &lambda.rep);
        (1..=count)
            .into_par_iter()
            .map(|r| {
                let key = SumKey {
                    family: family.clone(),
                    field: field_label(&self.base),
                    lambda: label.clone(),
                    r,
                };
                if let Some(v) = cache.get(&key, self.base.p) {
                    return Ok(v);
                }
                let s =
                    multiparam_exp_sum(&self.base, &terms, &t_point, lambda, r, self.ceiling)?;
                cache.put(&key, &s)?;
                Ok(s)
            })
            .collect()
    }

    /// Full fiber L-data at λ̄.  Pure problems go through the
    /// one-parameter path; deformed problems collapse (t̄, λ̄) into
    /// coefficients first.
    pub fn fiber_report(
        &self,
        ctx: &GeometryContext,
        basis: &BasisB,
        lambda: &ClosedPoint,
        cache: &SumCache,
    ) -> Result<FiberLReport> {
        if self.is_pure() {
            return fiber_l(ctx, &self.base, &self.f, basis, lambda, self.ceiling, cache);
        }
        self.upsilon(ctx)?;
        let nn = ctx.rank as usize;
        let sums = self.fiber_sums(ctx, lambda, 2 * nn as u32, cache)?;
        let unit = u64::from(self.base.m) * u64::from(lambda.degree);
        fiber_report_from_sums(ctx.n, nn, unit, lambda.clone(), sums, basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::compute_basis;

    const KL2: &str = r#"{
        "p": 3, "m": 1,
        "f": [{"coeff": 1, "exp": [1]}],
        "mu": [-1],
        "limits": {"d_max": 3}
    }"#;

    #[test]
    fn parses_kloosterman_problem() {
        let pr = load_problem(KL2).unwrap();
        assert_eq!(pr.base.p, 3);
        assert_eq!(pr.base.m, 1);
        assert_eq!(pr.mu, vec![-1]);
        assert!(pr.is_pure());
        assert_eq!(pr.ceiling, DEFAULT_CEILING);
        assert_eq!(pr.d_max, 3);
        assert_eq!(pr.input_sha256.len(), 64);
        let ctx = pr.geometry().unwrap();
        assert_eq!(ctx.rank, 2);
    }

    #[test]
    fn names_term_in_length_diagnostics() {
        let bad = r#"{"p": 3, "m": 1, "f": [{"coeff": 1, "exp": [1, 0]}], "mu": [-1]}"#;
        let err = load_problem(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f[0]"), "{msg}");
        assert!(msg.contains("length 2, expected 1"), "{msg}");
    }

    #[test]
    fn rejects_unknown_fields_and_bad_coeffs() {
        let unknown = r#"{"p": 3, "m": 1, "f": [], "mu": [-1], "bogus": 1}"#;
        assert!(matches!(load_problem(unknown), Err(Error::Parse(_))));
        let coords = r#"{"p": 3, "m": 2, "f": [{"coeff": [1, 0, 0], "exp": [1]}], "mu": [-1]}"#;
        let err = load_problem(coords).unwrap_err();
        assert!(err.to_string().contains("f[0]"));
    }

    #[test]
    fn field_element_coefficients_resolve() {
        let text = r#"{
            "p": 3, "m": 2,
            "f": [{"coeff": [0, 1], "exp": [1]}, {"coeff": 2, "exp": [2]}],
            "mu": [-1]
        }"#;
        let pr = load_problem(text).unwrap();
        let gen = pr.base.element_from_coeffs(&[0, 1]).unwrap();
        assert_eq!(pr.f.terms.get(&vec![1]), Some(&gen));
    }

    #[test]
    fn deformed_problem_multi_terms_and_upsilon() {
        let text = r#"{
            "p": 3, "m": 1,
            "f": [{"coeff": 1, "exp": [1]}],
            "mu": [-1],
            "deformation_exponent": 3,
            "lower_order": [{"coeff": 1, "t_exp": [1], "lambda_exp": 1, "x_exp": [0]}],
            "t_point": [1]
        }"#;
        let pr = load_problem(text).unwrap();
        assert!(!pr.is_pure());
        let ctx = pr.geometry().unwrap();
        let terms = pr.multi_terms(&ctx);
        assert_eq!(terms.len(), 3);
        assert_eq!(terms[1].lambda_exp, 3);
        assert_eq!(terms[1].x_exp, vec![-1]);
        let ups = pr.upsilon(&ctx).unwrap();
        assert_eq!(ups.s, 1);
    }

    #[test]
    fn missing_t_point_is_a_parse_error() {
        let text = r#"{
            "p": 3, "m": 1,
            "f": [{"coeff": 1, "exp": [1]}],
            "mu": [-1],
            "lower_order": [{"coeff": 1, "t_exp": [1], "lambda_exp": 1, "x_exp": [0]}]
        }"#;
        let err = load_problem(text).unwrap_err();
        assert!(err.to_string().contains("t_point"));
    }

    #[test]
    fn exponent_one_deformed_path_matches_pure_path() {
        let text = r#"{
            "p": 3, "m": 1,
            "f": [{"coeff": 1, "exp": [1]}],
            "mu": [-1],
            "lower_order": [{"coeff": 0, "t_exp": [], "lambda_exp": 0, "x_exp": [0]}]
        }"#;
        let pr = load_problem(text).unwrap();
        assert!(!pr.is_pure());
        let ctx = pr.geometry().unwrap();
        let basis = compute_basis(&ctx, &pr.base, &pr.f, &pr.base, &pr.base.one(), None).unwrap();
        let cache = SumCache::disabled();
        let lambda = ClosedPoint { degree: 1, rep: pr.base.one() };
        let deformed = pr.fiber_report(&ctx, &basis, &lambda, &cache).unwrap();
        let pure = fiber_l(&ctx, &pr.base, &pr.f, &basis, &lambda, pr.ceiling, &cache).unwrap();
        assert_eq!(deformed.sums, pure.sums);
        assert_eq!(deformed.lpoly, pure.lpoly);
        assert!(deformed.dominates);
    }
}
