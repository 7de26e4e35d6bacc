//! Exact arithmetic for families of toric exponential sums.
//!
//! Given a Laurent polynomial f̄ over a small finite field 𝔽_q together with
//! a deforming monomial x^μ, the one-parameter family
//!
//! ```text
//!   F̄(Λ, x) = f̄(x) + Λ^{±1} x^μ
//! ```
//!
//! carries a rich combinatorial structure: the Newton polytope Δ_∞(f̄, μ),
//! its piecewise-linear weight function, a graded monomial basis of fixed
//! rank N = n!·Vol(Δ_∞(f̄, μ)), and for every fiber λ̄ an L-polynomial of
//! degree N whose Newton polygon lies on or above the polygon spanned by the
//! basis weights.  This crate computes all of these objects exactly:
//!
//! * [`finite_field`] — 𝔽_{p^m} towers with deterministic moduli, absolute
//!   traces, torus streams, and closed points of 𝔾_m and 𝔸¹.
//! * [`cyclotomic`] — ℚ(ζ_p) arithmetic, (1−ζ_p)-adic valuations, truncated
//!   exp/log series, and Newton polygons.
//! * [`geometry`] — polytope and cone data: the hyperplane form l_σ, facet
//!   forms, visible faces, weight and monoid structure, lattice enumeration.
//! * [`hypotheses`] — the regularity checks a family must pass before any
//!   rank or polygon statement applies, plus per-fiber nondegeneracy.
//! * [`cohomology`] — the graded reduction algebra and its monomial basis B.
//! * [`lfunctions`] — exact fiber character sums, L-polynomials, polygon
//!   bounds, linear-algebra operations (Sym^k, ∧^l), and truncated global
//!   L-functions over 𝔾_m and 𝔸¹ with an independent moment cross-check.
//! * [`problem`], [`cache`], [`report`] — the JSON problem-file format, the
//!   on-disk sum cache, and deterministic report structures used by the CLI.
//!
//! All rational numbers are exact (`num::BigRational`), all field and
//! cyclotomic arithmetic is exact, and every report is deterministic:
//! identical inputs produce byte-identical JSON.

pub mod cache;
pub mod cohomology;
pub mod cyclotomic;
pub mod error;
pub mod finite_field;
pub mod geometry;
pub mod hypotheses;
pub mod lfunctions;
pub mod problem;
pub mod rational;
pub mod report;

pub use error::{Error, Result};
