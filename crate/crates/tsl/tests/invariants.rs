//! Cross-module invariants on randomized inputs: valuation arithmetic,
//! series inverses, Galois symmetry of character sums, and the
//! determinant factor of the top exterior power.

use num::{BigInt, BigRational, One, Zero};
use proptest::prelude::*;

use tsl::cache::SumCache;
use tsl::cohomology::compute_basis;
use tsl::cyclotomic::{ord_p, series_exp, series_log, CyclotomicNumber};
use tsl::finite_field::{make_field, ClosedPoint, FieldSpec};
use tsl::geometry::{GeometryContext, LaurentPolynomial};
use tsl::lfunctions::{exp_sum, fiber_l, op_char_poly, OpSpec};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn cyc(p: u64, coeffs: &[i64]) -> CyclotomicNumber {
    let mut x = CyclotomicNumber::from_int(p, 0);
    for (k, &c) in coeffs.iter().enumerate() {
        x = x.add(&CyclotomicNumber::zeta_pow(p, k as i64).scale(&rat(c, 1)));
    }
    x
}

proptest! {
    /// ord_p is a valuation: additive on products.
    #[test]
    fn ord_is_additive_on_products(
        p in prop::sample::select(vec![3u64, 5, 7]),
        a in prop::collection::vec(-9i64..=9, 6),
        b in prop::collection::vec(-9i64..=9, 6),
    ) {
        let x = cyc(p, &a[..(p - 1) as usize]);
        let y = cyc(p, &b[..(p - 1) as usize]);
        prop_assume!(!x.is_zero() && !y.is_zero());
        let sum = ord_p(&x).unwrap() + ord_p(&y).unwrap();
        prop_assert_eq!(ord_p(&x.mul(&y)).unwrap(), sum);
    }

    /// log inverts exp on truncated series.
    #[test]
    fn series_log_inverts_series_exp(
        p in prop::sample::select(vec![3u64, 5]),
        nums in prop::collection::vec(-9i64..=9, 5),
        dens in prop::collection::vec(1i64..=4, 5),
    ) {
        let mut a = vec![CyclotomicNumber::from_int(p, 0)];
        for (n, d) in nums.iter().zip(&dens) {
            a.push(CyclotomicNumber::from_rational(p, rat(*n, *d)));
        }
        let e = series_exp(&a).unwrap();
        let back = series_log(&e).unwrap();
        prop_assert_eq!(back, a);
    }

    /// Sym¹ of a Frobenius polynomial is the polynomial itself.
    #[test]
    fn sym1_preserves_polynomials(
        p in prop::sample::select(vec![3u64, 5]),
        coeffs in prop::collection::vec(-5i64..=5, 1..=3),
    ) {
        let mut poly = vec![CyclotomicNumber::from_int(p, 1)];
        poly.extend(coeffs.iter().map(|&c| CyclotomicNumber::from_int(p, c)));
        let sym1 = op_char_poly(&poly, &OpSpec::sym(1)).unwrap();
        let mut expected = poly.clone();
        while expected.last().is_some_and(CyclotomicNumber::is_zero) {
            expected.pop();
        }
        prop_assert_eq!(sym1, expected);
    }

    /// The Galois action ζ → ζ^c permutes the character sums: conjugating
    /// S_r equals summing the family with every term scaled by c at the
    /// fiber c·λ̄.
    #[test]
    fn galois_conjugation_permutes_sums(
        p in prop::sample::select(vec![3u64, 5]),
        c in 1i64..=4,
        r in 1u32..=2,
    ) {
        prop_assume!((c as u64) < p);
        let base = make_field(p, 1).unwrap();
        let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
        let ctx = GeometryContext::new(&f, &[-1]).unwrap();
        let lambda = ClosedPoint { degree: 1, rep: base.one() };
        let s = exp_sum(&ctx, &base, &f, &lambda, r, 1 << 20, &SumCache::disabled()).unwrap();

        let scaled = scale_family(&base, &f, c);
        let scaled_lambda = ClosedPoint { degree: 1, rep: base.from_int(c) };
        let s_scaled = exp_sum(&ctx, &base, &scaled, &scaled_lambda, r, 1 << 20,
            &SumCache::disabled()).unwrap();
        prop_assert_eq!(s.conjugate(c as u64), s_scaled);
    }
}

fn scale_family(base: &FieldSpec, f: &LaurentPolynomial, c: i64) -> LaurentPolynomial {
    let scale = base.from_int(c);
    let terms: Vec<_> = f
        .terms
        .iter()
        .map(|(v, coeff)| (v.clone(), base.mul(coeff, &scale)))
        .collect();
    LaurentPolynomial::new(f.n, base, terms).unwrap()
}

/// ∧^N of a degree-N fiber polynomial is 1 − (det)T, and the valuation of
/// the determinant is the total rise of the fiber's Newton polygon.
#[test]
fn top_exterior_power_is_the_determinant() {
    for p in [3u64, 5] {
        let base = make_field(p, 1).unwrap();
        let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
        let ctx = GeometryContext::new(&f, &[-1]).unwrap();
        let basis = compute_basis(&ctx, &base, &f, &base, &base.one(), None).unwrap();
        let nn = ctx.rank as u32;
        for lam in [1i64, 2] {
            let lambda = ClosedPoint { degree: 1, rep: base.from_int(lam) };
            let report =
                fiber_l(&ctx, &base, &f, &basis, &lambda, 1 << 20, &SumCache::disabled())
                    .unwrap();
            let ext = op_char_poly(&report.lpoly, &OpSpec::ext(nn)).unwrap();
            assert_eq!(ext.len(), 2);
            assert!(ext[0].as_rational().is_some_and(|r| r.is_one()));
            let det = ext[1].neg();
            let rise = report.polygon.right().unwrap().1.clone();
            assert!(!rise.is_zero());
            // The polygon lives in ord_{q^deg} units; here deg = m = 1.
            assert_eq!(ord_p(&det).unwrap(), rise);
        }
    }
}
