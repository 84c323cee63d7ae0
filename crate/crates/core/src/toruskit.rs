//! Euler-characteristic arithmetic behind meridional tameness of torus knots.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde_json::{json, Value};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorusError {
    #[error("torus parameters ({p},{q}) need p > q >= 2 and gcd 1")]
    BadParameters { p: i64, q: i64 },
    #[error("candidate rank {r} must satisfy 0 <= r < q = {q}")]
    RankOutOfRange { r: i64, q: i64 },
    #[error("cover needs at least one sheet and n >= 1")]
    BadCover,
}

fn check(p: i64, q: i64) -> Result<(), TorusError> {
    if q >= 2 && p > q && p.gcd(&q) == 1 {
        Ok(())
    } else {
        Err(TorusError::BadParameters { p, q })
    }
}

/// `χ(S²(∞, p, q)) = -1 + 1/p + 1/q`.
pub fn orbifold_euler(p: i64, q: i64) -> Result<Rational, TorusError> {
    check(p, q)?;
    Ok(Rational::from_integer(-1) + Rational::new(1, p) + Rational::new(1, q))
}

/// `χ` of a `sheets`-fold cover of a wedge of `n` circles.
pub fn cover_euler(sheets: i64, n: i64) -> Result<i64, TorusError> {
    if sheets < 1 || n < 1 {
        return Err(TorusError::BadCover);
    }
    Ok(sheets * (1 - n))
}

/// The evaluated chain for a candidate generating set of `r` meridians.
///
/// A cover of index at least `pq` has `χ ≤ pq·χ(O) = -pq + p + q ≤ 3 - 2q
/// ≤ 1 - q`, while `r` meridians would give `χ = 1 - r > 1 - q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub p: i64,
    pub q: i64,
    pub r: i64,
    pub orbifold_euler: Rational,
    /// `1 - r`.
    pub cover_euler: i64,
    /// `1 - q`.
    pub threshold: i64,
    /// `pq · χ(O)`.
    pub index_bound: Rational,
    /// `3 - 2q`.
    pub intermediate: i64,
    pub holds: bool,
}

impl Certificate {
    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "orbifold_euler": self.orbifold_euler.to_string(),
            "cover_euler": self.cover_euler,
            "threshold": self.threshold,
            "index_bound": self.index_bound.to_string(),
            "intermediate": self.intermediate,
            "holds": self.holds,
        })
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("chi(O) = -1 + 1/p + 1/q", self.orbifold_euler.to_string()),
            ("chi(cover) = 1 - r", self.cover_euler.to_string()),
            ("1 - q", self.threshold.to_string()),
            ("pq * chi(O) = -pq + p + q", self.index_bound.to_string()),
            ("3 - 2q", self.intermediate.to_string()),
        ];
        writeln!(f, "torus knot T({},{}), r = {}", self.p, self.q, self.r)?;
        for (label, value) in rows {
            writeln!(f, "  {label:<28} {value:>8}")?;
        }
        writeln!(
            f,
            "  {} > {} but {} <= {} <= {}: {}",
            self.cover_euler,
            self.threshold,
            self.index_bound,
            self.intermediate,
            self.threshold,
            if self.holds { "contradiction, certificate holds" } else { "certificate FAILS" }
        )
    }
}

pub fn tameness_certificate(p: i64, q: i64, r: i64) -> Result<Certificate, TorusError> {
    check(p, q)?;
    if r < 0 || r >= q {
        return Err(TorusError::RankOutOfRange { r, q });
    }
    let chi = orbifold_euler(p, q)?;
    let index_bound = chi * Rational::from_integer(p * q);
    let cover = 1 - r;
    let threshold = 1 - q;
    let intermediate = 3 - 2 * q;
    let holds = cover > threshold
        && index_bound <= Rational::from_integer(intermediate)
        && intermediate <= threshold
        && index_bound == Rational::from_integer(-p * q + p + q);
    Ok(Certificate { p, q, r, orbifold_euler: chi, cover_euler: cover, threshold, index_bound, intermediate, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_values() {
        assert_eq!(orbifold_euler(3, 2).unwrap(), Rational::new(-1, 6));
        assert_eq!(orbifold_euler(5, 2).unwrap(), Rational::new(-3, 10));
        assert!(orbifold_euler(4, 2).is_err());
        assert_eq!(cover_euler(1, 4).unwrap(), -3);
        assert_eq!(cover_euler(2, 3).unwrap(), -4);
        assert_eq!(cover_euler(5, 1).unwrap(), 0);
    }

    #[test]
    fn certificates() {
        let c = tameness_certificate(3, 2, 1).unwrap();
        assert_eq!((c.cover_euler, c.threshold, c.index_bound), (0, -1, Rational::from_integer(-1)));
        assert!(c.holds);
        let c = tameness_certificate(5, 3, 2).unwrap();
        assert_eq!((c.cover_euler, c.threshold, c.index_bound), (-1, -2, Rational::from_integer(-7)));
        assert!(c.holds);
        assert!(tameness_certificate(5, 3, 3).is_err());
        assert!(c.to_string().contains("certificate holds"));
    }
}
