//! Scalars used by the stencil machinery.
//!
//! Every operator in the toolkit is assembled by generic code over [`Scalar`].
//! Two implementations exist: plain `f64`, used for lattice work and for
//! triples with irrational components, and [`QSqrt2`], exact arithmetic in the
//! quadratic field Q(√2), used for the standard triple where all operator
//! constants are of the form p + q√2 with rational p, q.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
pub use num_traits::{One, Zero};
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::PlebError;

/// Field operations needed to build and compose operator stencils.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// The rational number `n / d`.
    fn ratio(n: i64, d: i64) -> Self;
    /// The square root of two.
    fn sqrt2() -> Self;
    /// Nearest `f64`.
    fn to_f64(&self) -> f64;
    /// Absolute size used for pivoting and zero tests. Exact types return
    /// exactly zero only for the zero element.
    fn magnitude(&self) -> f64;

    /// Integer constant.
    fn int(n: i64) -> Self {
        Self::ratio(n, 1)
    }
}

impl Scalar for f64 {
    fn ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn sqrt2() -> Self {
        std::f64::consts::SQRT_2
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

/// An element p + q√2 of Q(√2) with arbitrary-precision rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    /// Rational part.
    pub p: BigRational,
    /// Coefficient of √2.
    pub q: BigRational,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl QSqrt2 {
    pub fn new(p: BigRational, q: BigRational) -> Self {
        QSqrt2 { p, q }
    }

    /// The rational number `n / d` (with zero √2 part).
    pub fn rational(n: i64, d: i64) -> Self {
        QSqrt2 {
            p: rat(n, d),
            q: BigRational::zero(),
        }
    }

    /// `(pn/pd) + (qn/qd)·√2`.
    pub fn from_parts(pn: i64, pd: i64, qn: i64, qd: i64) -> Self {
        QSqrt2 {
            p: rat(pn, pd),
            q: rat(qn, qd),
        }
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    /// Galois conjugate p − q√2.
    pub fn conj(&self) -> Self {
        QSqrt2 {
            p: self.p.clone(),
            q: -self.q.clone(),
        }
    }

    /// Field norm p² − 2q², a rational number.
    pub fn norm(&self) -> BigRational {
        &self.p * &self.p - rat(2, 1) * &self.q * &self.q
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        Some(QSqrt2 {
            p: &self.p / &n,
            q: -(&self.q / &n),
        })
    }

    /// Parses literals such as `3`, `-1/4`, `sqrt2`, `1/sqrt2`, `2sqrt2`,
    /// `-3/2*sqrt2`, `1/4+1/2sqrt2` and `-sqrt2/2`.
    pub fn parse(s: &str) -> Result<Self, PlebError> {
        let bad = || PlebError::Parse(format!("not a rational+√2 literal: {s:?}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.replace('√', "sqrt");
        if t.is_empty() {
            return Err(bad());
        }
        // Split into signed terms at top-level + or − (not the leading sign).
        let mut terms = Vec::new();
        let mut start = 0;
        let bytes = t.as_bytes();
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-')
                && bytes[i - 1] != b'/'
                && bytes[i - 1] != b'*'
            {
                terms.push(&t[start..i]);
                start = i;
            }
        }
        terms.push(&t[start..]);
        let mut acc = QSqrt2::zero();
        for term in terms {
            acc += Self::parse_term(term).ok_or_else(bad)?;
        }
        Ok(acc)
    }

    fn parse_term(term: &str) -> Option<Self> {
        let (neg, body) = match term.as_bytes().first()? {
            b'-' => (true, &term[1..]),
            b'+' => (false, &term[1..]),
            _ => (false, term),
        };
        let value = if let Some(pos) = body.find("sqrt2") {
            let before = body[..pos].trim_end_matches('*');
            let after = &body[pos + 5..];
            let coeff = if before.is_empty() {
                rat(1, 1)
            } else if let Some(num) = before.strip_suffix('/') {
                // n/sqrt2 = (n/2)·√2
                let n = parse_rational(num)?;
                if !after.is_empty() {
                    return None;
                }
                return Some(sign(
                    neg,
                    QSqrt2 {
                        p: BigRational::zero(),
                        q: n / rat(2, 1),
                    },
                ));
            } else {
                parse_rational(before)?
            };
            let coeff = if after.is_empty() {
                coeff
            } else {
                let d = after.strip_prefix('/')?;
                coeff / parse_rational(d)?
            };
            QSqrt2 {
                p: BigRational::zero(),
                q: coeff,
            }
        } else {
            QSqrt2 {
                p: parse_rational(body)?,
                q: BigRational::zero(),
            }
        };
        Some(sign(neg, value))
    }

    /// Human-readable exact form, e.g. `1/4`, `-√2`, `1/2 + 3/4√2`.
    pub fn pretty(&self) -> String {
        fn r(x: &BigRational) -> String {
            if x.is_integer() {
                x.numer().to_string()
            } else {
                format!("{}/{}", x.numer(), x.denom())
            }
        }
        fn surd(x: &BigRational) -> String {
            if x.is_one() {
                "√2".to_string()
            } else if (-x).is_one() {
                "-√2".to_string()
            } else {
                format!("{}√2", r(x))
            }
        }
        match (self.p.is_zero(), self.q.is_zero()) {
            (_, true) => r(&self.p),
            (true, false) => surd(&self.q),
            (false, false) => {
                if self.q.is_negative() {
                    format!("{} - {}", r(&self.p), surd(&-self.q.clone()))
                } else {
                    format!("{} + {}", r(&self.p), surd(&self.q))
                }
            }
        }
    }
}

fn sign(neg: bool, x: QSqrt2) -> QSqrt2 {
    if neg {
        -x
    } else {
        x
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.parse().ok()?;
        let d: BigInt = d.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else {
        Some(BigRational::from_integer(s.parse().ok()?))
    }
}

impl fmt::Debug for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pretty())
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pretty())
    }
}

impl Zero for QSqrt2 {
    fn zero() -> Self {
        QSqrt2 {
            p: BigRational::zero(),
            q: BigRational::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }
}

impl One for QSqrt2 {
    fn one() -> Self {
        QSqrt2 {
            p: BigRational::one(),
            q: BigRational::zero(),
        }
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: QSqrt2) -> QSqrt2 {
        QSqrt2 {
            p: self.p + o.p,
            q: self.q + o.q,
        }
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: QSqrt2) -> QSqrt2 {
        QSqrt2 {
            p: self.p - o.p,
            q: self.q - o.q,
        }
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: QSqrt2) -> QSqrt2 {
        if self.is_zero() || o.is_zero() {
            return QSqrt2::zero();
        }
        let two = rat(2, 1);
        QSqrt2 {
            p: &self.p * &o.p + two * &self.q * &o.q,
            q: &self.p * &o.q + &self.q * &o.p,
        }
    }
}

impl Div for QSqrt2 {
    type Output = QSqrt2;
    fn div(self, o: QSqrt2) -> QSqrt2 {
        self * o.inv().expect("division by zero in Q(√2)")
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 {
            p: -self.p,
            q: -self.q,
        }
    }
}

impl AddAssign for QSqrt2 {
    fn add_assign(&mut self, o: QSqrt2) {
        self.p += o.p;
        self.q += o.q;
    }
}

impl SubAssign for QSqrt2 {
    fn sub_assign(&mut self, o: QSqrt2) {
        self.p -= o.p;
        self.q -= o.q;
    }
}

impl MulAssign for QSqrt2 {
    fn mul_assign(&mut self, o: QSqrt2) {
        *self = self.clone() * o;
    }
}

impl Scalar for QSqrt2 {
    fn ratio(n: i64, d: i64) -> Self {
        QSqrt2::rational(n, d)
    }
    fn sqrt2() -> Self {
        QSqrt2::from_parts(0, 1, 1, 1)
    }
    fn to_f64(&self) -> f64 {
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        p + q * std::f64::consts::SQRT_2
    }
    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            // Never report an exact nonzero as zero.
            self.to_f64().abs().max(f64::MIN_POSITIVE)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PartRepr {
    Int([i64; 2]),
    Big([String; 2]),
}

#[derive(Serialize, Deserialize)]
struct WireRepr {
    p: PartRepr,
    q: PartRepr,
}

fn part_out(x: &BigRational) -> PartRepr {
    match (x.numer().to_i64(), x.denom().to_i64()) {
        (Some(n), Some(d)) => PartRepr::Int([n, d]),
        _ => PartRepr::Big([x.numer().to_string(), x.denom().to_string()]),
    }
}

fn part_in(p: PartRepr) -> Result<BigRational, String> {
    let (n, d): (BigInt, BigInt) = match p {
        PartRepr::Int([n, d]) => (n.into(), d.into()),
        PartRepr::Big([n, d]) => (
            n.parse().map_err(|e| format!("{e}"))?,
            d.parse().map_err(|e| format!("{e}"))?,
        ),
    };
    if d.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(n, d))
}

/// Serialized as `{"p": [num, den], "q": [num, den]}`.
impl Serialize for QSqrt2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WireRepr {
            p: part_out(&self.p),
            q: part_out(&self.q),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QSqrt2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = WireRepr::deserialize(d)?;
        Ok(QSqrt2 {
            p: part_in(w.p).map_err(serde::de::Error::custom)?,
            q: part_in(w.q).map_err(serde::de::Error::custom)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_squares_to_two() {
        let r = QSqrt2::sqrt2();
        assert_eq!(r.clone() * r, QSqrt2::int(2));
    }

    #[test]
    fn inverse_of_surd() {
        let x = QSqrt2::from_parts(3, 1, -2, 5);
        let y = x.inv().unwrap();
        assert_eq!(x * y, QSqrt2::one());
        assert!(QSqrt2::zero().inv().is_none());
    }

    #[test]
    fn parse_literals() {
        assert_eq!(QSqrt2::parse("-1/4").unwrap(), QSqrt2::rational(-1, 4));
        assert_eq!(QSqrt2::parse("sqrt2").unwrap(), QSqrt2::sqrt2());
        assert_eq!(
            QSqrt2::parse("1/sqrt2").unwrap(),
            QSqrt2::from_parts(0, 1, 1, 2)
        );
        assert_eq!(
            QSqrt2::parse("-sqrt2/2").unwrap(),
            QSqrt2::from_parts(0, 1, -1, 2)
        );
        assert_eq!(
            QSqrt2::parse("1/4+1/2sqrt2").unwrap(),
            QSqrt2::from_parts(1, 4, 1, 2)
        );
        assert_eq!(
            QSqrt2::parse("2*sqrt2").unwrap(),
            QSqrt2::from_parts(0, 1, 2, 1)
        );
        assert_eq!(QSqrt2::parse("√2").unwrap(), QSqrt2::sqrt2());
        assert!(QSqrt2::parse("1/0").is_err());
        assert!(QSqrt2::parse("abc").is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = QSqrt2::from_parts(-1, 4, 1, 2);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"p":[-1,4],"q":[1,2]}"#);
        let y: QSqrt2 = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn pretty_forms() {
        assert_eq!(QSqrt2::rational(-1, 4).pretty(), "-1/4");
        assert_eq!(QSqrt2::from_parts(0, 1, -1, 1).pretty(), "-√2");
        assert_eq!(QSqrt2::from_parts(1, 2, -3, 4).pretty(), "1/2 - 3/4√2");
    }
}
