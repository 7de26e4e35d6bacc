//! Hand-enumerated character sums as independent fixtures.
//!
//! The tables below were written out on paper, point by point, and the
//! tests compare the library's sums against them.  Nothing here reuses the
//! library's torus enumeration or trace code.

use tsl::cohomology::compute_basis;
use tsl::cyclotomic::CyclotomicNumber;
use tsl::finite_field::{make_field, ClosedPoint};
use tsl::geometry::{GeometryContext, LaurentPolynomial};
use tsl::lfunctions::{exp_sum, fiber_l};
use tsl::cache::SumCache;

/// S₁ of x + 1/x over 𝔽₃: two points.
///
/// ```text
///   x = 1:  1 + 1/1 = 2          ζ²
///   x = 2:  2 + 1/2 = 2 + 2 = 1  ζ¹
/// ```
#[test]
fn two_point_hand_enumeration() {
    let hand = CyclotomicNumber::zeta_pow(3, 2).add(&CyclotomicNumber::zeta_pow(3, 1));
    assert_eq!(hand, CyclotomicNumber::from_int(3, -1));

    let base = make_field(3, 1).unwrap();
    let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
    let ctx = GeometryContext::new(&f, &[-1]).unwrap();
    let lambda = ClosedPoint { degree: 1, rep: base.one() };
    let s1 = exp_sum(&ctx, &base, &f, &lambda, 1, 1_000_000, &SumCache::disabled()).unwrap();
    assert_eq!(s1, hand);
}

/// S₂ of x + 1/x over 𝔽₉ = 𝔽₃(t), t² = −1: eight points.
///
/// With x = a + bt, the absolute trace is Tr(a + bt) = (a + bt) +
/// (a + bt)³ = 2a, since cubing fixes a, b and t³ = −t.
///
/// ```text
///   x        1/x      x + 1/x   Tr
///   1        1        2         1
///   2        2        1         2
///   t        2t       0         0
///   2t       t        0         0
///   1 + t    2 + t    2t        0
///   1 + 2t   2 + 2t   t         0
///   2 + t    1 + t    2t        0
///   2 + 2t   1 + 2t   t         0
/// ```
#[test]
fn eight_point_hand_enumeration() {
    let table: [((u64, u64), (u64, u64), i64); 8] = [
        ((1, 0), (1, 0), 1),
        ((2, 0), (2, 0), 2),
        ((0, 1), (0, 2), 0),
        ((0, 2), (0, 1), 0),
        ((1, 1), (2, 1), 0),
        ((1, 2), (2, 2), 0),
        ((2, 1), (1, 1), 0),
        ((2, 2), (1, 2), 0),
    ];
    let mut hand = CyclotomicNumber::from_int(3, 0);
    for (_, _, tr) in table {
        hand = hand.add(&CyclotomicNumber::zeta_pow(3, tr));
    }
    assert_eq!(hand, CyclotomicNumber::from_int(3, 5));

    // The table's arithmetic holds in 𝔽₉ itself: the inverse column
    // inverts, and the trace column is Tr(x + 1/x) = 2a for x + 1/x
    // written as a + bt.
    let f9 = make_field(3, 2).unwrap();
    assert_eq!(f9.modulus, vec![1, 0, 1], "fixture table assumes t^2 = -1");
    for ((a, b), (ia, ib), tr) in table {
        let x = f9.element_from_coeffs(&[a, b]).unwrap();
        let xinv = f9.element_from_coeffs(&[ia, ib]).unwrap();
        assert_eq!(f9.mul(&x, &xinv), f9.one());
        let s = f9.add(&x, &xinv);
        assert_eq!(f9.absolute_trace(&s), (2 * s.coeffs[0]) % 3);
        assert_eq!(f9.absolute_trace(&s) as i64, tr);
    }

    let base = make_field(3, 1).unwrap();
    let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
    let ctx = GeometryContext::new(&f, &[-1]).unwrap();
    let lambda = ClosedPoint { degree: 1, rep: base.one() };
    let s2 = exp_sum(&ctx, &base, &f, &lambda, 2, 1_000_000, &SumCache::disabled()).unwrap();
    assert_eq!(s2, hand);
}

/// The two hand sums pin the L-polynomial: from S₁ = −1 and S₂ = 5,
/// exp(S₁T + S₂T²/2) truncates to 1 − T + 3T², so both Newton slopes
/// {0, 1} are already visible in the fixtures.
#[test]
fn hand_sums_determine_the_l_polynomial() {
    let base = make_field(3, 1).unwrap();
    let f = LaurentPolynomial::new(1, &base, vec![(vec![1], base.one())]).unwrap();
    let ctx = GeometryContext::new(&f, &[-1]).unwrap();
    let basis = compute_basis(&ctx, &base, &f, &base, &base.one(), None).unwrap();
    let lambda = ClosedPoint { degree: 1, rep: base.one() };
    let report = fiber_l(&ctx, &base, &f, &basis, &lambda, 1_000_000, &SumCache::disabled())
        .unwrap();
    let expected: Vec<CyclotomicNumber> = [1, -1, 3]
        .iter()
        .map(|&c| CyclotomicNumber::from_int(3, c))
        .collect();
    assert_eq!(report.lpoly, expected);
    assert_eq!(report.sums[0], CyclotomicNumber::from_int(3, -1));
    assert_eq!(report.sums[1], CyclotomicNumber::from_int(3, 5));
    assert!(report.dominates);
    assert_eq!(report.polygon, report.bound);
}
