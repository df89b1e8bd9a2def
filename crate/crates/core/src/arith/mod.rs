//! Exact and floating scalar arithmetic, polynomials, rational functions of `q`,
//! truncated series and 2x2 matrices.

pub mod field;
pub mod gauss;
pub mod gcd;
pub mod json;
pub mod linalg;
pub mod mat2;
pub mod poly;
pub mod ratfun;
pub mod series;

pub use field::{div_or, Field, Ring};
pub use gauss::GaussRat;
pub use json::{FromJson, ToJson};
pub use linalg::{solve_linear, solve_sylvester};
pub use mat2::Mat2;
pub use num_complex::Complex64;
pub use poly::Poly;
pub use ratfun::{PolyQ, RatFunQ, DEFAULT_DEGREE_CAP};
pub use series::SeriesT;

/// Reduces `num / den` to a canonical [`RatFunQ`].
pub fn ratfun_reduce(num: PolyQ, den: PolyQ) -> crate::Result<RatFunQ> {
    RatFunQ::reduce(num, den)
}

/// Evaluates a rational function at `q0`, failing at poles.
pub fn ratfun_eval(f: &RatFunQ, q0: &GaussRat) -> crate::Result<GaussRat> {
    f.eval(q0)
}

/// Shorthand for an exact rational constant.
pub fn gr(n: i64, d: i64) -> GaussRat {
    GaussRat::ratio(n, d)
}
