//! Closed real intervals with outward-inflated floating point arithmetic.
//!
//! Every operation widens its result by a relative `1e-12` on each side. This
//! is not directed rounding, but it dominates the one-ulp error of correctly
//! rounded arithmetic and of the libm transcendental functions used here.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::ExprError;

/// Relative outward inflation applied after every interval operation.
pub const INFLATION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds `[lo, hi]`, swapping the endpoints if they arrive out of order.
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            Interval { lo, hi }
        } else {
            Interval { lo: hi, hi: lo }
        }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    fn outward(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo - INFLATION * lo.abs(),
            hi: hi + INFLATION * hi.abs(),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    /// True if `other` lies inside `self` up to an absolute slack.
    pub fn encloses(&self, other: &Interval, slack: f64) -> bool {
        self.lo - slack <= other.lo && other.hi <= self.hi + slack
    }

    /// Common part of two intervals, if any.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Separation between the two intervals, zero if they intersect.
    pub fn distance(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi).max(0.0)
    }

    /// Lower bound of `|v|` over the interval.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    /// Upper bound of `|v|` over the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.midpoint();
        (
            Interval { lo: self.lo, hi: m },
            Interval { lo: m, hi: self.hi },
        )
    }

    /// Splits into `2^depth` equal pieces.
    pub fn split(&self, depth: u32) -> Vec<Interval> {
        let pieces = 1usize << depth;
        let step = self.width() / pieces as f64;
        (0..pieces)
            .map(|k| {
                let lo = if k == 0 { self.lo } else { self.lo + step * k as f64 };
                let hi = if k + 1 == pieces {
                    self.hi
                } else {
                    self.lo + step * (k + 1) as f64
                };
                Interval { lo, hi }
            })
            .collect()
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, ExprError> {
        if rhs.contains_zero() {
            return Err(ExprError::Domain("division by an interval containing zero"));
        }
        let inv = Interval {
            lo: 1.0 / rhs.hi,
            hi: 1.0 / rhs.lo,
        };
        Ok(self * Interval::outward(inv.lo, inv.hi))
    }

    pub fn powi(self, n: i32) -> Result<Interval, ExprError> {
        if n == 0 {
            return Ok(Interval::point(1.0));
        }
        if n < 0 {
            let positive = self.powi(-n)?;
            return Interval::point(1.0).checked_div(positive);
        }
        let (a, b) = (self.lo.powi(n), self.hi.powi(n));
        if n % 2 == 1 {
            Ok(Interval::outward(a, b))
        } else if self.contains_zero() {
            Ok(Interval::outward(0.0, a.max(b)))
        } else {
            Ok(Interval::outward(a.min(b), a.max(b)))
        }
    }

    pub fn sin(self) -> Interval {
        if self.width() >= TAU {
            return Interval::outward(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if self.hits(FRAC_PI_2) {
            hi = 1.0;
        }
        if self.hits(-FRAC_PI_2) {
            lo = -1.0;
        }
        Interval::outward(lo, hi)
    }

    pub fn cos(self) -> Interval {
        if self.width() >= TAU {
            return Interval::outward(-1.0, 1.0);
        }
        let (a, b) = (self.lo.cos(), self.hi.cos());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if self.hits(0.0) {
            hi = 1.0;
        }
        if self.hits(PI) {
            lo = -1.0;
        }
        Interval::outward(lo, hi)
    }

    /// Whether `phase + 2πk` lies in the interval for some integer `k`.
    fn hits(&self, phase: f64) -> bool {
        let k = ((self.lo - phase) / TAU).ceil();
        phase + k * TAU <= self.hi
    }

    pub fn exp(self) -> Interval {
        Interval::outward(self.lo.exp(), self.hi.exp())
    }

    pub fn tanh(self) -> Interval {
        Interval::outward(self.lo.tanh(), self.hi.tanh())
    }

    pub fn sqrt(self) -> Result<Interval, ExprError> {
        if self.lo < 0.0 {
            return Err(ExprError::Domain("sqrt of an interval reaching below zero"));
        }
        Ok(Interval::outward(self.lo.sqrt(), self.hi.sqrt()))
    }

    pub fn ln(self) -> Result<Interval, ExprError> {
        if self.lo <= 0.0 {
            return Err(ExprError::Domain("log of an interval reaching zero or below"));
        }
        Ok(Interval::outward(self.lo.ln(), self.hi.ln()))
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        let products = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::outward(lo, hi)
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
