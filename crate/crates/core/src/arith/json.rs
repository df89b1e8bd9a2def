//! JSON encoding shared by every module.
//!
//! Real rationals are `"p/q"` strings, non-real Gaussian rationals are
//! `{"re": "p/q", "im": "p/q"}`, floating complex numbers are
//! `{"re": f64, "im": f64}`, polynomials are ascending coefficient arrays.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use serde_json::{json, Value};

use super::field::Field;
use super::gauss::GaussRat;
use super::mat2::Mat2;
use super::poly::Poly;
use super::ratfun::RatFunQ;
use crate::error::{Error, Result};

pub trait ToJson {
    fn to_json(&self) -> Value;
}

pub trait FromJson: Sized {
    fn from_json(v: &Value) -> Result<Self>;
}

fn rat_str(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}/1", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_err(what: &str, v: &Value) -> Error {
    Error::Parse(format!("expected {what}, got {v}"))
}

impl ToJson for GaussRat {
    fn to_json(&self) -> Value {
        if self.is_real() {
            Value::String(rat_str(&self.re))
        } else {
            json!({"re": rat_str(&self.re), "im": rat_str(&self.im)})
        }
    }
}

impl FromJson for GaussRat {
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => s.parse(),
            Value::Number(n) => n.to_string().parse(),
            Value::Object(o) => {
                let part = |k: &str| -> Result<BigRational> {
                    match o.get(k) {
                        None => Ok(BigRational::default()),
                        Some(x) => {
                            let g = GaussRat::from_json(x)?;
                            if !g.is_real() {
                                return Err(parse_err("real part", x));
                            }
                            Ok(g.re)
                        }
                    }
                };
                Ok(GaussRat::new(part("re")?, part("im")?))
            }
            _ => Err(parse_err("rational", v)),
        }
    }
}

impl ToJson for Complex64 {
    fn to_json(&self) -> Value {
        json!({"re": self.re, "im": self.im})
    }
}

impl FromJson for Complex64 {
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => Ok(Complex64::new(n.as_f64().ok_or_else(|| parse_err("number", v))?, 0.0)),
            Value::Object(o) => {
                let part = |k: &str| -> Result<f64> {
                    match o.get(k) {
                        None => Ok(0.0),
                        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| parse_err("number", v)),
                        Some(Value::String(s)) => Ok(s.parse::<GaussRat>()?.to_c64().re),
                        Some(x) => Err(parse_err("number", x)),
                    }
                };
                Ok(Complex64::new(part("re")?, part("im")?))
            }
            Value::String(s) => Ok(s.parse::<GaussRat>()?.to_c64()),
            _ => Err(parse_err("complex", v)),
        }
    }
}

impl<F: Field + ToJson> ToJson for Poly<F> {
    fn to_json(&self) -> Value {
        Value::Array(self.coeffs().iter().map(|c| c.to_json()).collect())
    }
}

impl<F: Field + FromJson> FromJson for Poly<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let arr = v.as_array().ok_or_else(|| parse_err("coefficient array", v))?;
        Ok(Poly::new(arr.iter().map(F::from_json).collect::<Result<_>>()?))
    }
}

impl ToJson for RatFunQ {
    fn to_json(&self) -> Value {
        json!({"num": self.num().to_json(), "den": self.den().to_json()})
    }
}

impl FromJson for RatFunQ {
    fn from_json(v: &Value) -> Result<Self> {
        if let (Some(n), Some(d)) = (v.get("num"), v.get("den")) {
            return RatFunQ::reduce(Poly::from_json(n)?, Poly::from_json(d)?);
        }
        Ok(RatFunQ::constant(GaussRat::from_json(v)?))
    }
}

impl<R: ToJson + super::field::Ring> ToJson for Mat2<R> {
    fn to_json(&self) -> Value {
        json!([[self.a.to_json(), self.b.to_json()], [self.c.to_json(), self.d.to_json()]])
    }
}

impl<R: FromJson + super::field::Ring> FromJson for Mat2<R> {
    fn from_json(v: &Value) -> Result<Self> {
        let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(|| parse_err("2x2 matrix", v))?;
        let row = |i: usize| -> Result<(R, R)> {
            let r = rows[i].as_array().filter(|r| r.len() == 2).ok_or_else(|| parse_err("matrix row", v))?;
            Ok((R::from_json(&r[0])?, R::from_json(&r[1])?))
        };
        let (a, b) = row(0)?;
        let (c, d) = row(1)?;
        Ok(Mat2::new(a, b, c, d))
    }
}

impl<T: ToJson> ToJson for Vec<T> {
    fn to_json(&self) -> Value {
        Value::Array(self.iter().map(|x| x.to_json()).collect())
    }
}

impl<T: FromJson> FromJson for Vec<T> {
    fn from_json(v: &Value) -> Result<Self> {
        v.as_array().ok_or_else(|| parse_err("array", v))?.iter().map(T::from_json).collect()
    }
}

/// Reads a required field of a JSON object.
pub fn field<T: FromJson>(v: &Value, key: &str) -> Result<T> {
    let x = v.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))?;
    T::from_json(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::field::Ring;

    #[test]
    fn scalar_shapes() {
        assert_eq!(GaussRat::ratio(3, 4).to_json(), json!("3/4"));
        assert_eq!(GaussRat::int(2).to_json(), json!("2/1"));
        assert_eq!(GaussRat::complex((1, 2), (-1, 3)).to_json(), json!({"re": "1/2", "im": "-1/3"}));
        assert_eq!(Complex64::new(1.5, -2.0).to_json(), json!({"re": 1.5, "im": -2.0}));
    }

    #[test]
    fn round_trips() {
        let z = GaussRat::complex((1, 2), (-1, 3));
        assert_eq!(GaussRat::from_json(&z.to_json()).unwrap(), z);
        let p = Poly::new(vec![GaussRat::int(1), z.clone(), GaussRat::ratio(2, 7)]);
        assert_eq!(Poly::from_json(&p.to_json()).unwrap(), p);
        let f = RatFunQ::reduce(p.clone(), Poly::new(vec![GaussRat::int(5), GaussRat::int(1)])).unwrap();
        assert_eq!(RatFunQ::from_json(&f.to_json()).unwrap(), f);
        let m = Mat2::new(z.clone(), GaussRat::one(), GaussRat::zero(), GaussRat::ratio(-3, 8));
        assert_eq!(Mat2::<GaussRat>::from_json(&m.to_json()).unwrap(), m);
    }
}
