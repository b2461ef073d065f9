//! Measurement setting angles, stored in millidegrees modulo 180 so that
//! parallel / perpendicular relations are decided exactly.

use crate::probcore::numeric::Exact;
use serde::{Deserialize, Serialize};
use std::fmt;

const HALF_TURN: i64 = 180_000;

/// A polarization analyzer angle. Two angles are parallel when equal modulo
/// 180 degrees and perpendicular when they differ by 90 degrees. Resolution
/// is one millidegree.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(i64);

impl Angle {
    pub fn from_degrees(deg: f64) -> Self {
        let milli = (deg * 1000.0).round() as i64;
        Angle(milli.rem_euclid(HALF_TURN))
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn perpendicular(self) -> Self {
        Angle((self.0 + HALF_TURN / 2).rem_euclid(HALF_TURN))
    }

    pub fn is_parallel_to(self, other: Angle) -> bool {
        self == other
    }

    pub fn is_perpendicular_to(self, other: Angle) -> bool {
        self.perpendicular() == other
    }

    /// cos²(self − other) as a double.
    pub fn cos2_diff(self, other: Angle) -> f64 {
        let d = (self.0 - other.0) as f64 / 1000.0;
        let c = (d.to_radians()).cos();
        c * c
    }

    /// cos²(self − other) as an exact rational, available when the difference
    /// is a multiple of 30 or 45 degrees.
    pub fn exact_cos2_diff(self, other: Angle) -> Option<Exact> {
        let d = (self.0 - other.0).rem_euclid(HALF_TURN);
        let (n, den) = match d {
            0 => (1, 1),
            30_000 | 150_000 => (3, 4),
            45_000 | 135_000 => (1, 2),
            60_000 | 120_000 => (1, 4),
            90_000 => (0, 1),
            _ => return None,
        };
        Some(Exact::new(n.into(), den.into()))
    }
}

impl From<f64> for Angle {
    fn from(deg: f64) -> Self {
        Angle::from_degrees(deg)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.degrees()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 1000 == 0 {
            write!(f, "{}", self.0 / 1000)
        } else {
            write!(f, "{}", self.degrees())
        }
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}deg", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn normalization_mod_180() {
        assert_eq!(Angle::from_degrees(180.0), Angle::from_degrees(0.0));
        assert_eq!(Angle::from_degrees(210.0), Angle::from_degrees(30.0));
        assert_eq!(Angle::from_degrees(-30.0), Angle::from_degrees(150.0));
    }

    #[test]
    fn parallel_and_perpendicular() {
        let a = Angle::from_degrees(30.0);
        assert!(a.is_parallel_to(Angle::from_degrees(30.0)));
        assert!(a.is_perpendicular_to(Angle::from_degrees(120.0)));
        assert!(Angle::from_degrees(90.0).is_perpendicular_to(Angle::from_degrees(0.0)));
        assert!(!a.is_perpendicular_to(Angle::from_degrees(60.0)));
    }

    #[test]
    fn exact_cos2_table() {
        let deg = Angle::from_degrees;
        assert_eq!(deg(0.0).exact_cos2_diff(deg(60.0)), Some(Exact::new(1.into(), 4.into())));
        assert_eq!(deg(0.0).exact_cos2_diff(deg(90.0)), Some(Exact::zero()));
        assert_eq!(deg(30.0).exact_cos2_diff(deg(60.0)), Some(Exact::new(3.into(), 4.into())));
        assert_eq!(deg(0.0).exact_cos2_diff(deg(45.0)), Some(Exact::new(1.into(), 2.into())));
        assert_eq!(deg(0.0).exact_cos2_diff(deg(10.0)), None);
    }

    #[test]
    fn float_cos2_matches_exact() {
        let deg = Angle::from_degrees;
        for (a, b) in [(0.0, 60.0), (30.0, 60.0), (0.0, 90.0), (45.0, 0.0)] {
            let exact = deg(a).exact_cos2_diff(deg(b)).unwrap();
            let approx = deg(a).cos2_diff(deg(b));
            assert!((crate::probcore::Numeric::to_f64(&exact) - approx).abs() < 1e-12);
        }
    }
}
