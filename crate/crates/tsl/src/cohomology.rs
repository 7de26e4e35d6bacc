//! The graded reduction algebra of a fiber: graded pieces sliced by the
//! weight w, the associated-graded action of the operators x_l ∂F̄/∂x_l,
//! the monomial basis B of the quotient, and the check that B does not
//! depend on the choice of fiber λ̄.
//!
//! The associated-graded product keeps a term x^{u+v} only when the weight
//! is additive, w(u+v) = w(u) + w(v); non-cofacial products drop.  Since
//! every surviving operator term has weight exactly 1, the image inside the
//! weight-i piece comes entirely from monomials of weight i − 1.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::One;

use crate::error::{Error, Result};
use crate::finite_field::{FieldElement, FieldSpec};
use crate::geometry::{fiber_polynomial, GeometryContext, LatticePoint, LaurentPolynomial};
use crate::rational::{rat, rat_to_string};

// ---------------------------------------------------------------------------
// graded pieces

/// All monomials of one exact weight, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedPiece {
    pub weight: BigRational,
    pub monomials: Vec<LatticePoint>,
}

/// The graded pieces of weight ≤ cutoff, ascending.  Monomial order within
/// a piece is lexicographic, so the global order is (weight, lex).
pub fn graded_pieces(ctx: &GeometryContext, cutoff: &BigRational) -> Result<Vec<GradedPiece>> {
    let mut groups: BTreeMap<BigRational, Vec<LatticePoint>> = BTreeMap::new();
    for v in ctx.enumerate_weight_le(cutoff)? {
        groups.entry(ctx.weight(&v)?).or_default().push(v);
    }
    Ok(groups
        .into_iter()
        .map(|(weight, monomials)| GradedPiece { weight, monomials })
        .collect())
}

// ---------------------------------------------------------------------------
// the graded operator

/// The weight-1 terms of the fiber polynomial, as (exponent, coefficient)
/// pairs.  Lower-weight terms of F̄ act by strictly increasing filtration
/// level minus weight, so they vanish in the associated graded ring.
fn graded_operator_terms(
    ctx: &GeometryContext,
    fiber: &LaurentPolynomial,
) -> Result<Vec<(LatticePoint, FieldElement)>> {
    let one = BigRational::one();
    let mut terms = Vec::new();
    for (v, c) in &fiber.terms {
        if ctx.weight(v)? == one {
            terms.push((v.clone(), c.clone()));
        }
    }
    Ok(terms)
}

/// Image of the weight-(i−1) monomials under the associated-graded operators
/// x_l ∂F̄/∂x_l, expressed in the coordinates of the weight-i piece.
#[derive(Debug, Clone)]
pub struct GradedImage {
    /// Monomials of weight exactly i, the coordinate order of the columns.
    pub piece: Vec<LatticePoint>,
    /// One column per (source monomial, operator index l), sources first.
    pub columns: Vec<Vec<FieldElement>>,
}

/// Columns of the graded operator action landing in weight i.  Each source
/// monomial u with w(u) = i − 1 contributes n columns, one per operator;
/// a product term x^{u+v} is kept only when w(u+v) = w(u) + w(v).
pub fn graded_jacobian_image(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    lambda_field: &FieldSpec,
    lambda: &FieldElement,
    weight_i: &BigRational,
) -> Result<GradedImage> {
    if weight_i < &BigRational::one() {
        return Err(Error::PreconditionFailed(format!(
            "graded images start at weight 1; got {}",
            rat_to_string(weight_i)
        )));
    }
    let fiber = fiber_polynomial(ctx, base, f, lambda_field, lambda)?;
    let op_terms = graded_operator_terms(ctx, &fiber)?;
    let pieces = graded_pieces(ctx, weight_i)?;
    let piece = pieces
        .iter()
        .find(|p| &p.weight == weight_i)
        .map(|p| p.monomials.clone())
        .unwrap_or_default();
    let prev_weight = weight_i - BigRational::one();
    let sources = pieces
        .iter()
        .find(|p| p.weight == prev_weight)
        .map(|p| p.monomials.clone())
        .unwrap_or_default();
    let columns = image_columns(ctx, lambda_field, &op_terms, &sources, &piece);
    Ok(GradedImage { piece, columns })
}

fn image_columns(
    ctx: &GeometryContext,
    field: &FieldSpec,
    op_terms: &[(LatticePoint, FieldElement)],
    sources: &[LatticePoint],
    piece: &[LatticePoint],
) -> Vec<Vec<FieldElement>> {
    let index: BTreeMap<&LatticePoint, usize> =
        piece.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut columns = Vec::with_capacity(sources.len() * ctx.n);
    for u in sources {
        for l in 0..ctx.n {
            let mut col = vec![field.zero(); piece.len()];
            for (v, c) in op_terms {
                let scale = v[l].rem_euclid(field.p as i64) as u64;
                if scale == 0 {
                    continue;
                }
                let target: LatticePoint = u.iter().zip(v).map(|(a, b)| a + b).collect();
                if let Some(&j) = index.get(&target) {
                    col[j] = field.add(&col[j], &field.scale(c, scale));
                }
            }
            columns.push(col);
        }
    }
    columns
}

// ---------------------------------------------------------------------------
// exact elimination

/// Row space in reduced echelon form over a finite field; supports rank
/// queries and independence-tested insertion.
struct Echelon<'a> {
    field: &'a FieldSpec,
    rows: Vec<(usize, Vec<FieldElement>)>,
}

impl<'a> Echelon<'a> {
    fn new(field: &'a FieldSpec) -> Self {
        Echelon {
            field,
            rows: Vec::new(),
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces v against the rows; if anything is left, normalizes and
    /// inserts it, keeping the span fully reduced.  Returns whether v was
    /// independent of the current span.
    fn insert(&mut self, mut v: Vec<FieldElement>) -> bool {
        for (pivot, row) in &self.rows {
            let c = v[*pivot].clone();
            if !c.is_zero() {
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi = self.field.sub(vi, &self.field.mul(&c, ri));
                }
            }
        }
        let Some(j) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = self.field.inv(&v[j]).expect("pivot entries are nonzero");
        for vi in v.iter_mut() {
            *vi = self.field.mul(vi, &inv);
        }
        for (_, row) in self.rows.iter_mut() {
            let c = row[j].clone();
            if !c.is_zero() {
                for (ri, vi) in row.iter_mut().zip(&v) {
                    *ri = self.field.sub(ri, &self.field.mul(&c, vi));
                }
            }
        }
        self.rows.push((j, v));
        self.rows.sort_by_key(|(p, _)| *p);
        true
    }
}

// ---------------------------------------------------------------------------
// the basis B

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisElement {
    pub v: LatticePoint,
    pub w: BigRational,
    pub m: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeDims {
    pub weight: BigRational,
    pub piece_dim: usize,
    pub image_rank: usize,
    pub basis_count: usize,
}

/// The monomial basis of the graded quotient, with per-grade dimension
/// bookkeeping.  |elements| equals the rank N = n!·Vol(Δ∞(f̄, μ)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisB {
    pub elements: Vec<BasisElement>,
    pub rank: u64,
    pub grades: Vec<GradeDims>,
}

impl BasisB {
    pub fn monomials(&self) -> Vec<LatticePoint> {
        self.elements.iter().map(|e| e.v.clone()).collect()
    }

    pub fn weights(&self) -> Vec<BigRational> {
        self.elements.iter().map(|e| e.w.clone()).collect()
    }
}

/// Computes B for one fiber by greedy echelon complement: per weight
/// ascending, monomials independent of the graded image enter B smallest
/// first in the (weight, lex) order.  With no explicit cutoff, weights up
/// to n are scanned, escalating to n+2 before giving up; a count that
/// overshoots N is a hard error at any cutoff.
pub fn compute_basis(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    lambda_field: &FieldSpec,
    lambda: &FieldElement,
    weight_cutoff: Option<BigRational>,
) -> Result<BasisB> {
    let fiber = fiber_polynomial(ctx, base, f, lambda_field, lambda)?;
    let op_terms = graded_operator_terms(ctx, &fiber)?;
    let cutoffs: Vec<BigRational> = match weight_cutoff {
        Some(c) => vec![c],
        None => (0..3).map(|extra| rat(ctx.n as i64 + extra)).collect(),
    };
    let last = cutoffs.len() - 1;
    for (i, cutoff) in cutoffs.iter().enumerate() {
        match basis_at_cutoff(ctx, lambda_field, &op_terms, cutoff) {
            Ok(basis) => return Ok(basis),
            Err(Error::RankMismatch { found, expected, .. })
                if found < expected && i < last => {}
            Err(e) => return Err(e),
        }
    }
    unreachable!("the final cutoff either returns or errors");
}

fn basis_at_cutoff(
    ctx: &GeometryContext,
    field: &FieldSpec,
    op_terms: &[(LatticePoint, FieldElement)],
    cutoff: &BigRational,
) -> Result<BasisB> {
    let pieces = graded_pieces(ctx, cutoff)?;
    let expected = ctx.rank as usize;
    let mut elements = Vec::new();
    let mut grades = Vec::new();
    let mismatch = |found: usize| Error::RankMismatch {
        found,
        expected,
        cutoff: rat_to_string(cutoff),
    };
    for (i, piece) in pieces.iter().enumerate() {
        let prev_weight = &piece.weight - BigRational::one();
        let sources: &[LatticePoint] = pieces[..i]
            .iter()
            .find(|p| p.weight == prev_weight)
            .map(|p| p.monomials.as_slice())
            .unwrap_or(&[]);
        let columns = image_columns(ctx, field, op_terms, sources, &piece.monomials);
        let mut span = Echelon::new(field);
        for col in columns {
            span.insert(col);
        }
        let image_rank = span.rank();
        let mut basis_count = 0;
        for (j, v) in piece.monomials.iter().enumerate() {
            let mut unit = vec![field.zero(); piece.monomials.len()];
            unit[j] = field.one();
            if span.insert(unit) {
                basis_count += 1;
                elements.push(BasisElement {
                    v: v.clone(),
                    w: piece.weight.clone(),
                    m: ctx.m_of(v)?,
                });
            }
        }
        debug_assert_eq!(image_rank + basis_count, piece.monomials.len());
        grades.push(GradeDims {
            weight: piece.weight.clone(),
            piece_dim: piece.monomials.len(),
            image_rank,
            basis_count,
        });
        if elements.len() > expected {
            return Err(mismatch(elements.len()));
        }
    }
    if elements.len() != expected {
        return Err(mismatch(elements.len()));
    }
    debug_assert_eq!(elements.first().map(|e| e.v.as_slice()), Some(&vec![0; ctx.n][..]));
    Ok(BasisB {
        elements,
        rank: ctx.rank,
        grades,
    })
}

// ---------------------------------------------------------------------------
// λ-independence

#[derive(Debug, Clone)]
pub struct LambdaIndependence {
    pub independent: bool,
    /// The common monomial set when independent (from the first fiber).
    pub monomials: Vec<LatticePoint>,
    pub per_lambda: Vec<(String, Vec<LatticePoint>)>,
}

/// Recomputes B at every supplied fiber and compares the monomial sets.
/// Fibers may live in different fields; the comparison is on exponent
/// vectors, which is what the independence theorem predicts.
pub fn verify_lambda_independence(
    ctx: &GeometryContext,
    base: &FieldSpec,
    f: &LaurentPolynomial,
    fibers: &[(&FieldSpec, FieldElement)],
    weight_cutoff: Option<BigRational>,
) -> Result<LambdaIndependence> {
    if fibers.is_empty() {
        return Err(Error::PreconditionFailed(
            "lambda-independence needs at least one fiber".into(),
        ));
    }
    let mut per_lambda = Vec::new();
    for (lambda_field, lambda) in fibers {
        let basis = compute_basis(ctx, base, f, lambda_field, lambda, weight_cutoff.clone())?;
        let label = format!("{:?} in F_{}^{}", lambda.coeffs, lambda.p, lambda.m);
        per_lambda.push((label, basis.monomials()));
    }
    let monomials = per_lambda[0].1.clone();
    let independent = per_lambda.iter().all(|(_, b)| *b == monomials);
    Ok(LambdaIndependence {
        independent,
        monomials,
        per_lambda,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::make_field;

    fn family(
        n: usize,
        p: u64,
        terms: &[&[i64]],
        mu: &[i64],
    ) -> (FieldSpec, LaurentPolynomial, GeometryContext) {
        let field = make_field(p, 1).unwrap();
        let f = LaurentPolynomial::new(
            n,
            &field,
            terms.iter().map(|v| (v.to_vec(), field.one())),
        )
        .unwrap();
        let ctx = GeometryContext::new(&f, mu).unwrap();
        (field, f, ctx)
    }

    fn basis_exponents(b: &BasisB) -> Vec<LatticePoint> {
        b.monomials()
    }

    #[test]
    fn graded_image_column_kloosterman2() {
        let (f3, f, ctx) = family(1, 3, &[&[1]], &[-1]);
        let image =
            graded_jacobian_image(&ctx, &f3, &f, &f3, &f3.one(), &BigRational::one()).unwrap();
        // weight-1 piece in lex order, then x·∂F/∂x = x − λx^{−1}
        assert_eq!(image.piece, vec![vec![-1], vec![1]]);
        assert_eq!(image.columns, vec![vec![f3.from_int(-1), f3.one()]]);
        // no monomials of weight 1/2 exist, so the image there is empty
        let empty = graded_jacobian_image(
            &ctx,
            &f3,
            &f,
            &f3,
            &f3.one(),
            &BigRational::new(3.into(), 2.into()),
        )
        .unwrap();
        assert!(empty.piece.is_empty());
        assert!(empty.columns.is_empty());
        assert!(graded_jacobian_image(&ctx, &f3, &f, &f3, &f3.one(), &rat(0)).is_err());
    }

    #[test]
    fn graded_image_kloosterman3_shape() {
        let (f3, f, ctx) = family(2, 3, &[&[1, 0], &[0, 1]], &[-1, -1]);
        let image =
            graded_jacobian_image(&ctx, &f3, &f, &f3, &f3.one(), &BigRational::one()).unwrap();
        assert_eq!(
            image.piece,
            vec![vec![-1, -1], vec![0, 1], vec![1, 0]]
        );
        assert_eq!(image.columns.len(), 2);
        let minus = f3.from_int(-1);
        assert_eq!(
            image.columns[0],
            vec![minus.clone(), f3.zero(), f3.one()]
        );
        assert_eq!(image.columns[1], vec![minus, f3.one(), f3.zero()]);
    }

    #[test]
    fn kloosterman2_basis() {
        let (f3, f, ctx) = family(1, 3, &[&[1]], &[-1]);
        let basis = compute_basis(&ctx, &f3, &f, &f3, &f3.one(), None).unwrap();
        assert_eq!(basis_exponents(&basis), vec![vec![0], vec![-1]]);
        assert_eq!(basis.weights(), vec![rat(0), rat(1)]);
        assert_eq!(basis.elements[1].m, rat(1));
        assert_eq!(basis.rank, 2);
    }

    #[test]
    fn kloosterman3_basis_weights_zero_one_two() {
        let (f3, f, ctx) = family(2, 3, &[&[1, 0], &[0, 1]], &[-1, -1]);
        let basis = compute_basis(&ctx, &f3, &f, &f3, &f3.one(), None).unwrap();
        assert_eq!(
            basis_exponents(&basis),
            vec![vec![0, 0], vec![-1, -1], vec![-2, -2]]
        );
        assert_eq!(basis.weights(), vec![rat(0), rat(1), rat(2)]);
        for g in &basis.grades {
            assert_eq!(g.piece_dim, g.image_rank + g.basis_count);
        }
    }

    #[test]
    fn basis_for_each_test_family() {
        // (n, p, support, mu, expected basis)
        let cases: &[(usize, u64, &[&[i64]], &[i64], &[&[i64]])] = &[
            (1, 3, &[&[1]], &[-1], &[&[0], &[-1]]),
            (2, 3, &[&[1, 0], &[0, 1]], &[-1, -1], &[&[0, 0], &[-1, -1], &[-2, -2]]),
            (2, 3, &[&[1, 0], &[0, 1]], &[-1, 1], &[&[0, 0], &[-1, 1]]),
            (1, 3, &[&[1]], &[2], &[&[0], &[1]]),
            (2, 3, &[&[2, 0], &[0, 1]], &[-1, 0], &[&[0, 0], &[1, 0], &[-1, 0]]),
        ];
        for (n, p, support, mu, want) in cases {
            let (field, f, ctx) = family(*n, *p, support, mu);
            let basis = compute_basis(&ctx, &field, &f, &field, &field.one(), None).unwrap();
            let want: Vec<LatticePoint> = want.iter().map(|v| v.to_vec()).collect();
            assert_eq!(basis_exponents(&basis), want, "family {support:?} mu {mu:?}");
            assert_eq!(basis.elements.len() as u64, ctx.rank);
        }
    }

    #[test]
    fn above_case_basis_has_fractional_weights() {
        let (f3, f, ctx) = family(1, 3, &[&[1]], &[2]);
        let basis = compute_basis(&ctx, &f3, &f, &f3, &f3.from_int(2), None).unwrap();
        assert_eq!(basis.weights(), vec![rat(0), BigRational::new(1.into(), 2.into())]);
        assert_eq!(basis.elements[1].m, BigRational::new((-1).into(), 2.into()));
    }

    #[test]
    fn explicit_cutoff_zero_reports_rank_mismatch() {
        let (f3, f, ctx) = family(1, 3, &[&[1]], &[-1]);
        let err = compute_basis(&ctx, &f3, &f, &f3, &f3.one(), Some(rat(0))).unwrap_err();
        match err {
            Error::RankMismatch { found, expected, cutoff } => {
                assert_eq!(found, 1);
                assert_eq!(expected, 2);
                assert_eq!(cutoff, "0");
            }
            other => panic!("expected rank mismatch, got {other:?}"),
        }
    }

    #[test]
    fn lambda_independence_across_fields() {
        let (f3, f, ctx) = family(1, 3, &[&[1]], &[-1]);
        let f9 = make_field(3, 2).unwrap();
        let fibers: Vec<(&FieldSpec, FieldElement)> = vec![
            (&f3, f3.one()),
            (&f3, f3.from_int(2)),
            (&f9, f9.monomial(1)),
        ];
        let report = verify_lambda_independence(&ctx, &f3, &f, &fibers, None).unwrap();
        assert!(report.independent);
        assert_eq!(report.monomials, vec![vec![0], vec![-1]]);
        assert_eq!(report.per_lambda.len(), 3);

        let single = verify_lambda_independence(&ctx, &f3, &f, &fibers[..1], None).unwrap();
        assert!(single.independent);
        assert!(verify_lambda_independence(&ctx, &f3, &f, &[], None).is_err());
    }
}
