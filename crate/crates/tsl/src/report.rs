//! Deterministic report structures: the JSON the command-line tool emits.
//!
//! Every report embeds a [`Manifest`] (input hash, library version, the
//! resolved command) and serializes with fixed field order, sorted maps,
//! and exact rational strings, so identical inputs produce byte-identical
//! output.  Volatile run statistics (wall time, cache hits) live in
//! [`RunStats`] and go to stderr, never into the report.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cohomology::BasisB;
use crate::cyclotomic::{CyclotomicNumber, NewtonPolygon};
use crate::finite_field::FieldSpec;
use crate::geometry::{Case, Facet, GeometryContext};
use crate::hypotheses::HypothesisReport;
use crate::lfunctions::{
    field_label, DegreeBoundReport, FiberLReport, GlobalLTruncation,
};
use crate::rational::rat_to_string;

/// Library version, embedded in every manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance of a report: what was computed, from what input, with which
/// settings after defaults were filled in.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    /// SHA-256 of the problem file bytes.
    pub input_sha256: String,
    pub version: String,
    /// The verb with its resolved arguments, e.g.
    /// `fiber --lambda all --max-degree 2`.
    pub command: String,
    /// Every setting that influenced the run, after defaults.
    pub resolved: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(input_sha256: &str, command: &str) -> Self {
        Manifest {
            input_sha256: input_sha256.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            resolved: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.resolved.insert(key.to_string(), value.to_string());
    }
}

/// Wall time and cache statistics of one run.  Deliberately separate from
/// the report so reruns stay bit-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub wall_ms: u128,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

/// Renders `{"manifest": …, "report": …}` as pretty JSON with a trailing
/// newline.
pub fn render<T: Serialize>(manifest: &Manifest, payload: &T) -> String {
    let value = serde_json::json!({ "manifest": manifest, "report": payload });
    let mut out = serde_json::to_string_pretty(&value).expect("reports serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// geometry

/// Full polytope report of a family.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryJson {
    pub field: String,
    pub n: usize,
    pub support: Vec<Vec<i64>>,
    pub mu: Vec<i64>,
    pub case: Case,
    pub lsigma: Vec<String>,
    pub lsigma_mu: String,
    pub facets: Vec<Facet>,
    /// Indices into `facets` of the faces visible from μ.
    pub gamma1: Vec<usize>,
    /// D: the common denominator of the m-function on the cone.
    pub d: u64,
    /// Least d with every weight in (1/d)ℤ.
    pub w_denom: u64,
    /// Least multiple of D with every total weight in (1/e)ℤ.
    pub total_denom: u64,
    /// N: the rank of the reduction algebra.
    pub rank: u64,
    pub delta_vertices: Vec<Vec<i64>>,
}

pub fn geometry_json(base: &FieldSpec, ctx: &GeometryContext) -> GeometryJson {
    GeometryJson {
        field: field_label(base),
        n: ctx.n,
        support: ctx.support.clone(),
        mu: ctx.mu.clone(),
        case: ctx.case,
        lsigma: ctx.lsigma.iter().map(rat_to_string).collect(),
        lsigma_mu: rat_to_string(&ctx.lsigma_mu),
        facets: ctx.facets.clone(),
        gamma1: ctx.gamma1.clone(),
        d: ctx.m_denom,
        w_denom: ctx.w_denom,
        total_denom: ctx.total_denom,
        rank: ctx.rank,
        delta_vertices: ctx.delta_vertices.clone(),
    }
}

// ---------------------------------------------------------------------------
// hypotheses

/// Hypothesis verdicts with the family head repeated for context.
#[derive(Debug, Clone, Serialize)]
pub struct CheckJson {
    pub field: String,
    pub mu: Vec<i64>,
    pub hypotheses: HypothesisReport,
    pub all_pass: bool,
}

pub fn check_json(base: &FieldSpec, mu: &[i64], report: &HypothesisReport) -> CheckJson {
    CheckJson {
        field: field_label(base),
        mu: mu.to_vec(),
        all_pass: report.all_pass(),
        hypotheses: report.clone(),
    }
}

// ---------------------------------------------------------------------------
// basis

#[derive(Debug, Clone, Serialize)]
pub struct BasisElementJson {
    pub v: Vec<i64>,
    pub weight: String,
    pub m: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradeJson {
    pub weight: String,
    pub piece_dim: usize,
    pub image_rank: usize,
    pub basis_count: usize,
}

/// The monomial basis with per-grade dimensions.
#[derive(Debug, Clone, Serialize)]
pub struct BasisJson {
    pub rank: u64,
    pub elements: Vec<BasisElementJson>,
    pub grades: Vec<GradeJson>,
}

pub fn basis_json(basis: &BasisB) -> BasisJson {
    BasisJson {
        rank: basis.rank,
        elements: basis
            .elements
            .iter()
            .map(|e| BasisElementJson {
                v: e.v.clone(),
                weight: rat_to_string(&e.w),
                m: rat_to_string(&e.m),
            })
            .collect(),
        grades: basis
            .grades
            .iter()
            .map(|g| GradeJson {
                weight: rat_to_string(&g.weight),
                piece_dim: g.piece_dim,
                image_rank: g.image_rank,
                basis_count: g.basis_count,
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// fibers

#[derive(Debug, Clone, Serialize)]
pub struct LambdaJson {
    /// Degree of the closed point over the base field.
    pub degree: u32,
    /// Coordinates of the canonical representative in 𝔽_{q^degree}.
    pub rep: Vec<u64>,
}

/// One fiber's L-data: sums, polynomial, and polygon comparison.
#[derive(Debug, Clone, Serialize)]
pub struct FiberJson {
    pub lambda: LambdaJson,
    pub sums: Vec<CyclotomicNumber>,
    pub lpoly: Vec<CyclotomicNumber>,
    pub polygon: NewtonPolygon,
    pub slopes: Vec<String>,
    pub bound: NewtonPolygon,
    pub dominates: bool,
}

pub fn fiber_json(report: &FiberLReport) -> FiberJson {
    FiberJson {
        lambda: LambdaJson {
            degree: report.lambda.degree,
            rep: report.lambda.rep.coeffs.clone(),
        },
        sums: report.sums.clone(),
        lpoly: report.lpoly.clone(),
        polygon: report.polygon.clone(),
        slopes: report.polygon.slopes().iter().map(rat_to_string).collect(),
        bound: report.bound.clone(),
        dominates: report.dominates,
    }
}

/// The fiber reports of one run, ordered by (degree, representative).
#[derive(Debug, Clone, Serialize)]
pub struct FiberSetJson {
    pub field: String,
    pub count: usize,
    pub all_dominate: bool,
    pub reports: Vec<FiberJson>,
}

pub fn fiber_set_json(base: &FieldSpec, reports: &[FiberLReport]) -> FiberSetJson {
    FiberSetJson {
        field: field_label(base),
        count: reports.len(),
        all_dominate: reports.iter().all(|r| r.dominates),
        reports: reports.iter().map(fiber_json).collect(),
    }
}

// ---------------------------------------------------------------------------
// global L-functions

#[derive(Debug, Clone, Serialize)]
pub struct DegreeBoundsJson {
    pub op_dimension: u64,
    pub op_order: u32,
    /// D/|1 − l_σ(μ)|: bound on R − S over the torus.
    pub r_minus_s: String,
    pub forces_r_equals_s: bool,
    pub total_degree_gm: String,
    pub total_degree_a1: String,
    pub ord_q_lower: String,
}

pub fn degree_bounds_json(report: &DegreeBoundReport) -> DegreeBoundsJson {
    DegreeBoundsJson {
        op_dimension: report.op_dimension,
        op_order: report.op_order,
        r_minus_s: rat_to_string(&report.r_minus_s),
        forces_r_equals_s: report.forces_r_equals_s,
        total_degree_gm: rat_to_string(&report.total_degree_gm),
        total_degree_a1: rat_to_string(&report.total_degree_a1),
        ord_q_lower: rat_to_string(&report.ord_q_lower),
    }
}

/// Truncated global L-function with the Euler/moment cross-check status
/// and the degree bounds of the underlying operation.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalJson {
    pub field: String,
    pub op: String,
    pub domain: String,
    pub d_max: u32,
    pub coefficients: Vec<CyclotomicNumber>,
    pub zero_fiber_degree: Option<u64>,
    /// The construction errors out on any disagreement, so a rendered
    /// report always carries this witness.
    pub cross_check: &'static str,
    pub degree_bounds: DegreeBoundsJson,
}

pub fn global_json(
    base: &FieldSpec,
    g: &GlobalLTruncation,
    bounds: &DegreeBoundReport,
) -> GlobalJson {
    GlobalJson {
        field: field_label(base),
        op: g.op.label(),
        domain: format!("{:?}", g.domain).to_lowercase(),
        d_max: g.d_max,
        coefficients: g.coefficients.clone(),
        zero_fiber_degree: g.zero_fiber_degree,
        cross_check: "euler-moment-exact",
        degree_bounds: degree_bounds_json(bounds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::compute_basis;
    use crate::finite_field::make_field;
    use crate::geometry::LaurentPolynomial;

    fn kl2() -> (FieldSpec, GeometryContext) {
        let base = make_field(3, 1).unwrap();
        let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
        let ctx = GeometryContext::new(&f, &[-1]).unwrap();
        (base, ctx)
    }

    #[test]
    fn geometry_report_renders_deterministically() {
        let (base, ctx) = kl2();
        let mut manifest = Manifest::new("0000", "analyze");
        manifest.set("ceiling", 1_000_000u64);
        let a = render(&manifest, &geometry_json(&base, &ctx));
        let b = render(&manifest, &geometry_json(&base, &ctx));
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["report"]["rank"], 2);
        assert_eq!(v["report"]["case"], "below");
        assert_eq!(v["report"]["d"], 1);
        assert_eq!(v["manifest"]["version"], VERSION);
        assert_eq!(v["manifest"]["resolved"]["ceiling"], "1000000");
    }

    #[test]
    fn basis_report_uses_exact_rational_strings() {
        let (base, ctx) = kl2();
        let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
        let basis = compute_basis(&ctx, &base, &f, &base, &base.one(), None).unwrap();
        let json = basis_json(&basis);
        assert_eq!(json.rank, 2);
        let weights: Vec<&str> = json.elements.iter().map(|e| e.weight.as_str()).collect();
        assert_eq!(weights, ["0", "1"]);
        let text = serde_json::to_string(&json).unwrap();
        assert!(!text.contains("0.0"), "{text}");
    }
}
