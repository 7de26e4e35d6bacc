//! Exact rational helpers: canonical `"num/den"` strings and small dense
//! linear algebra over ℚ.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

use crate::error::{Error, Result};

/// Formats a rational canonically: integers bare, everything else as
/// `"num/den"` with positive denominator and the fraction fully reduced
/// (`BigRational` maintains both invariants).
pub fn rat_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"num/den"` or a bare integer string into a rational.
pub fn rat_from_str(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator {num:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator {den:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Rational from an integer.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Dot product of a rational form with an integer vector.
pub fn dot_ri(form: &[BigRational], v: &[i64]) -> BigRational {
    form.iter()
        .zip(v)
        .map(|(f, &x)| f * rat(x))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Dot product of an integer form with an integer vector.
pub fn dot_ii(form: &[i64], v: &[i64]) -> i64 {
    form.iter().zip(v).map(|(&f, &x)| f * x).sum()
}

/// Least common multiple of the denominators of a set of rationals.
pub fn denominator_lcm<'a>(vals: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    vals.into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Row-reduces `rows` in place over ℚ and returns the rank.
/// Pivots are chosen left to right; rows may be any length but must agree.
pub fn row_reduce(rows: &mut Vec<Vec<BigRational>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].clone();
        for x in &mut rows[rank] {
            *x = &*x / &inv;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in 0..ncols {
                    let delta = &factor * &rows[rank][c];
                    rows[r][c] = &rows[r][c] - delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Rank of an integer matrix over ℚ.
pub fn rank_int(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| rat(x)).collect())
        .collect();
    row_reduce(&mut m)
}

/// Solves `A·x = b` exactly when the solution is unique.
/// Returns `None` if the system is inconsistent or underdetermined.
pub fn solve_unique(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.first()?.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    row_reduce(&mut m);
    let mut x = vec![BigRational::zero(); n];
    let mut seen = vec![false; n];
    for row in &m {
        let lead = (0..n).find(|&c| !row[c].is_zero());
        match lead {
            Some(c) => {
                if row[..n].iter().filter(|v| !v.is_zero()).count() != 1 {
                    return None; // free variable mixes in: underdetermined
                }
                x[c] = &row[n] / &row[c];
                seen[c] = true;
            }
            None => {
                if !row[n].is_zero() {
                    return None; // 0 = nonzero: inconsistent
                }
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Some(x)
    } else {
        None
    }
}

/// Basis of the null space { x : A·x = 0 } of an integer matrix, scaled to
/// primitive integer vectors (gcd 1, first nonzero entry positive).
pub fn nullspace_int(rows: &[Vec<i64>], ncols: usize) -> Vec<Vec<BigInt>> {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| rat(x)).collect())
        .collect();
    if m.is_empty() {
        m.push(vec![BigRational::zero(); ncols]);
    }
    row_reduce(&mut m);
    let mut lead_of_row = Vec::new();
    for row in &m {
        if let Some(c) = (0..ncols).find(|&c| !row[c].is_zero()) {
            lead_of_row.push((c, row.clone()));
        }
    }
    let pivots: Vec<usize> = lead_of_row.iter().map(|(c, _)| *c).collect();
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); ncols];
        v[free] = BigRational::one();
        for (c, row) in &lead_of_row {
            v[*c] = -&row[free] / &row[*c];
        }
        basis.push(primitive_integer(&v));
    }
    basis
}

/// Basis of the null space of a rational matrix.
pub fn nullspace_rat(rows: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    if m.is_empty() {
        m.push(vec![BigRational::zero(); ncols]);
    }
    row_reduce(&mut m);
    let mut lead_of_row = Vec::new();
    for row in &m {
        if let Some(c) = (0..ncols).find(|&c| !row[c].is_zero()) {
            lead_of_row.push((c, row.clone()));
        }
    }
    let pivots: Vec<usize> = lead_of_row.iter().map(|(c, _)| *c).collect();
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); ncols];
        v[free] = BigRational::one();
        for (c, row) in &lead_of_row {
            v[*c] = -&row[free] / &row[*c];
        }
        basis.push(v);
    }
    basis
}

/// Pivot column indices of a rational matrix, in row-echelon order.
pub fn pivot_columns(rows: &[Vec<BigRational>]) -> Vec<usize> {
    let mut m = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    row_reduce(&mut m);
    m.iter()
        .filter_map(|row| (0..ncols).find(|&c| !row[c].is_zero()))
        .collect()
}

/// Determinant of a square rational matrix by fraction-free elimination on
/// rationals (exact).
pub fn det_rat(matrix: &[Vec<BigRational>]) -> BigRational {
    let n = matrix.len();
    let mut m = matrix.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(r) => r,
            None => return BigRational::zero(),
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= &m[col][col];
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &m[col][col];
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Scales a rational vector by a positive factor to primitive integers,
/// preserving orientation (unlike [`primitive_integer`], no sign flip).
pub fn primitive_scaled(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = denominator_lcm(v.iter());
    let mut ints: Vec<BigInt> = v.iter().map(|r| r.numer() * (&lcm / r.denom())).collect();
    let gcd = ints
        .iter()
        .fold(BigInt::zero(), |acc, x| acc.gcd(&x.abs()));
    if !gcd.is_zero() && !gcd.is_one() {
        for x in &mut ints {
            *x = &*x / &gcd;
        }
    }
    ints
}

/// Scales a rational vector to a primitive integer vector with positive
/// first nonzero entry.
pub fn primitive_integer(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = denominator_lcm(v.iter());
    let mut ints: Vec<BigInt> = v.iter().map(|r| r.numer() * (&lcm / r.denom())).collect();
    let gcd = ints
        .iter()
        .fold(BigInt::zero(), |acc, x| acc.gcd(&x.abs()));
    if !gcd.is_zero() && !gcd.is_one() {
        for x in &mut ints {
            *x = &*x / &gcd;
        }
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in &mut ints {
                *x = -x.clone();
            }
        }
    }
    ints
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_strings_round_trip() {
        for s in ["3/2", "-7/4", "0", "5", "-12"] {
            let r = rat_from_str(s).unwrap();
            assert_eq!(rat_to_string(&r), s);
        }
        assert_eq!(rat_from_str("6/4").unwrap(), rat_from_str("3/2").unwrap());
        assert_eq!(rat_to_string(&rat_from_str("5/1").unwrap()), "5");
        assert!(rat_from_str("1/0").is_err());
        assert!(rat_from_str("a/b").is_err());
    }

    #[test]
    fn solve_detects_inconsistency_and_freedom() {
        // x + y = 1, x - y = 0 has the unique solution (1/2, 1/2)
        let a = vec![vec![rat(1), rat(1)], vec![rat(1), rat(-1)]];
        let sol = solve_unique(&a, &[rat(1), rat(0)]).unwrap();
        assert_eq!(sol, vec![rat_from_str("1/2").unwrap(); 2]);
        // inconsistent: x + y = 1 and x + y = 2
        let a = vec![vec![rat(1), rat(1)], vec![rat(1), rat(1)]];
        assert!(solve_unique(&a, &[rat(1), rat(2)]).is_none());
        // underdetermined: single equation in two unknowns
        let a = vec![vec![rat(1), rat(1)]];
        assert!(solve_unique(&a, &[rat(1)]).is_none());
    }

    #[test]
    fn nullspace_is_primitive() {
        // kernel of (2, 4) is spanned by (2, -1) up to sign
        let basis = nullspace_int(&[vec![2, 4]], 2);
        assert_eq!(basis.len(), 1);
        assert_eq!(basis[0], vec![BigInt::from(2), BigInt::from(-1)]);
    }
}
