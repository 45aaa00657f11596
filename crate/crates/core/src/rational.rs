//! Exact rational 2x2 matrices for monodromy results.
//!
//! Monodromy, fractional monodromy and Chern data are reported as exact
//! rationals; floats only enter through the rounding gates that produce
//! them. Serialized form is the string "p/q" (or "p" for integers) to
//! avoid float ambiguity in reports.

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::Mul;

pub type Rat = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(num, den)
}

fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn rat_from_str(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Ratio::new(n, d))
        }
        None => {
            let n: i64 = s.parse().ok()?;
            Some(Ratio::from_integer(n))
        }
    }
}

/// 2x2 matrix with exact rational entries, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mat2 {
    pub entries: [[Rat; 2]; 2],
}

impl Mat2 {
    pub fn new(a: Rat, b: Rat, c: Rat, d: Rat) -> Self {
        Mat2 {
            entries: [[a, b], [c, d]],
        }
    }

    pub fn identity() -> Self {
        Mat2::new(Rat::one(), Rat::zero(), Rat::zero(), Rat::one())
    }

    /// [[1, m], [0, 1]] — the standard unipotent monodromy form.
    pub fn unipotent(m: Rat) -> Self {
        Mat2::new(Rat::one(), m, Rat::zero(), Rat::one())
    }

    pub fn det(&self) -> Rat {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        let e = &self.entries;
        Some(Mat2::new(
            e[1][1] / d,
            -e[0][1] / d,
            -e[1][0] / d,
            e[0][0] / d,
        ))
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity()
    }

    /// True when the matrix is [[1, *], [0, 1]].
    pub fn is_upper_unipotent(&self) -> bool {
        let e = &self.entries;
        e[0][0].is_one() && e[1][1].is_one() && e[1][0].is_zero()
    }

    /// The shear entry m of [[1, m], [0, 1]]; None for other shapes.
    pub fn shear(&self) -> Option<Rat> {
        if self.is_upper_unipotent() {
            Some(self.entries[0][1])
        } else {
            None
        }
    }

    pub fn abs_shear(&self) -> Option<Rat> {
        self.shear().map(|m| m.abs())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = [[Rat::zero(); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2 { entries: out }
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.entries;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            rat_to_string(&e[0][0]),
            rat_to_string(&e[0][1]),
            rat_to_string(&e[1][0]),
            rat_to_string(&e[1][1])
        )
    }
}

impl Serialize for Mat2 {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let e = &self.entries;
        let rows: Vec<Vec<String>> = vec![
            vec![rat_to_string(&e[0][0]), rat_to_string(&e[0][1])],
            vec![rat_to_string(&e[1][0]), rat_to_string(&e[1][1])],
        ];
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(de)?;
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
            return Err(de::Error::custom("expected 2x2 matrix"));
        }
        let parse = |s: &str| rat_from_str(s).ok_or_else(|| de::Error::custom("bad rational"));
        Ok(Mat2::new(
            parse(&rows[0][0])?,
            parse(&rows[0][1])?,
            parse(&rows[1][0])?,
            parse(&rows[1][1])?,
        ))
    }
}

/// Serialize a bare rational as its "p/q" string.
pub fn serialize_rat<S: Serializer>(r: &Rat, ser: S) -> std::result::Result<S::Ok, S::Error> {
    rat_to_string(r).serialize(ser)
}

pub fn deserialize_rat<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rat, D::Error> {
    let s = String::deserialize(de)?;
    rat_from_str(&s).ok_or_else(|| de::Error::custom("bad rational"))
}

pub fn rat_display(r: &Rat) -> String {
    rat_to_string(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse() {
        let m = Mat2::unipotent(rat(1, 2));
        assert_eq!(m.det(), Rat::one());
        let inv = m.inverse().unwrap();
        assert_eq!(m * inv, Mat2::identity());
        assert_eq!(inv, Mat2::unipotent(rat(-1, 2)));
    }

    #[test]
    fn gluing_product() {
        // [[1,2],[0,1]] * [[1,1],[0,1]]^{-1} = [[1,1],[0,1]]
        let c1 = Mat2::unipotent(rat(2, 1));
        let c2 = Mat2::unipotent(rat(1, 1));
        let prod = c1 * c2.inverse().unwrap();
        assert_eq!(prod, Mat2::unipotent(rat(1, 1)));
    }

    #[test]
    fn display_and_serde_roundtrip() {
        let m = Mat2::unipotent(rat(1, 2));
        assert_eq!(m.to_string(), "[[1, 1/2], [0, 1]]");
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"[["1","1/2"],["0","1"]]"#);
        let back: Mat2 = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
