//! Arithmetic on the circle group ℝ/ℤ.
//!
//! Points are stored by their canonical representative in `[0, 1)`. Every
//! operation re-normalizes, and equality compares representatives exactly;
//! approximate comparison goes through [`Point::approx_eq`].

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Neg, Sub};

/// Reduces `x` to `[0, 1)`.
#[inline]
pub fn wrap<T: Real>(x: T) -> T {
    let r = x - x.floor();
    // x - floor(x) can round up to exactly 1 for tiny negative x
    if r >= T::one() || r < T::zero() {
        T::zero()
    } else {
        r
    }
}

/// Representative of `x` in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_signed<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let r = wrap(x + half) - half;
    if r < -half {
        -half
    } else {
        r
    }
}

/// A point `[x]` of the circle.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<T>(T);

impl<T: Real> Point<T> {
    pub fn new(x: T) -> Self {
        Point(wrap(x))
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(T::lit(x))
    }

    pub fn zero() -> Self {
        Point(T::zero())
    }

    /// Canonical representative in `[0, 1)`.
    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// Anticlockwise distance `d₊(self, other)`: the length of `[self, other]`.
    #[inline]
    pub fn dplus(self, other: Self) -> T {
        wrap(other.0 - self.0)
    }

    /// Circular distance `min(d₊(x,y), d₊(y,x))`.
    #[inline]
    pub fn dist(self, other: Self) -> T {
        let d = self.dplus(other);
        d.min(other.dplus(self))
    }

    /// Offset of `other` from `self`, as a real in `[-1/2, 1/2)`.
    #[inline]
    pub fn signed_offset(self, other: Self) -> T {
        wrap_signed(other.0 - self.0)
    }

    pub fn approx_eq(self, other: Self, tol: T) -> bool {
        self.dist(other) <= tol
    }

    /// The m-fold sum `m·x`.
    pub fn mfold(self, m: u32) -> Self {
        Point::new(T::lit(m as f64) * self.0)
    }

    /// The unique root `y` of `m·y = x` with representative in `[0, 1/m)`.
    ///
    /// When plain division does not round-trip through [`Point::mfold`],
    /// the neighbouring floats are tried so that the identity holds exactly
    /// whenever some float achieves it.
    pub fn mth_root(self, m: u32) -> Self {
        if m <= 1 {
            return self;
        }
        let mm = T::lit(m as f64);
        let y = self.0 / mm;
        let bound = T::one() / mm;
        for c in [y, y.next_up(), y.next_down()] {
            if c >= T::zero() && c < bound && wrap(c * mm) == self.0 {
                return Point(c);
            }
        }
        Point(y)
    }

    /// The index `ζ(x) = ⌊m·x⌋ ∈ {0..m-1}` of the `1/m`-sector holding `x`.
    pub fn sector(self, m: u32) -> u32 {
        if m <= 1 {
            return 0;
        }
        let s = (T::lit(m as f64) * self.0).floor().to_u32().unwrap_or(0);
        s.min(m - 1)
    }

    /// Point reached by moving `t` anticlockwise.
    pub fn shift(self, t: T) -> Self {
        Point::new(self.0 + t)
    }
}

impl<T: Real> Add for Point<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Point::new(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for Point<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Point::new(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for Point<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Point::new(-self.0)
    }
}

/// Closed oriented arc `[start, end]`, traversed anticlockwise, or the whole circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc<T> {
    pub start: Point<T>,
    pub end: Point<T>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub whole: bool,
}

impl<T: Real> Arc<T> {
    pub fn new(start: Point<T>, end: Point<T>) -> Self {
        Arc {
            start,
            end,
            whole: false,
        }
    }

    pub fn from_f64(start: f64, end: f64) -> Self {
        Self::new(Point::from_f64(start), Point::from_f64(end))
    }

    pub fn whole() -> Self {
        Arc {
            start: Point::zero(),
            end: Point::zero(),
            whole: true,
        }
    }

    /// Lebesgue measure; `[x,y]` has measure `d₊(x,y)`.
    pub fn lebesgue(&self) -> T {
        if self.whole {
            T::one()
        } else {
            self.start.dplus(self.end)
        }
    }

    pub fn contains(&self, x: Point<T>) -> bool {
        self.whole || self.start.dplus(x) <= self.lebesgue()
    }

    /// `]start, end[`
    pub fn contains_open(&self, x: Point<T>) -> bool {
        if self.whole {
            return true;
        }
        x != self.start && x != self.end && self.start.dplus(x) < self.lebesgue()
    }

    /// `[start, end[`
    pub fn contains_left_closed(&self, x: Point<T>) -> bool {
        if self.whole {
            return true;
        }
        self.start.dplus(x) < self.lebesgue()
    }

    /// `]start, end]`
    pub fn contains_right_closed(&self, x: Point<T>) -> bool {
        if self.whole {
            return true;
        }
        x != self.start && self.start.dplus(x) <= self.lebesgue()
    }

    /// Anticlockwise midpoint `start + d₊(start,end)/2`.
    pub fn midpoint(&self) -> Point<T> {
        self.start.shift(self.lebesgue() / T::lit(2.0))
    }

    /// `(∂₋A, ∂₊A)`; undefined for the whole circle.
    pub fn boundary_points(&self) -> Result<(Point<T>, Point<T>)> {
        if self.whole {
            return Err(Error::Precondition(
                "boundary of the whole circle is undefined".into(),
            ));
        }
        Ok((self.start, self.end))
    }

    /// Enlarges the arc by `delta` on both ends (capped at the whole circle).
    pub fn dilate(&self, delta: T) -> Self {
        if self.whole || self.lebesgue() + delta + delta >= T::one() {
            return Arc::whole();
        }
        Arc::new(self.start.shift(-delta), self.end.shift(delta))
    }

    /// Smallest arc containing both `self` and `other`, assuming the two lie
    /// within half a turn of each other (measured from `self`'s midpoint).
    pub fn hull_near(&self, other: &Self) -> Self {
        if self.whole || other.whole {
            return Arc::whole();
        }
        let mid = self.midpoint();
        let lo_a = mid.signed_offset(self.start);
        let hi_a = lo_a + self.lebesgue();
        let lo_b = mid.signed_offset(other.start);
        let hi_b = lo_b + other.lebesgue();
        let lo = lo_a.min(lo_b);
        let hi = hi_a.max(hi_b);
        if hi - lo >= T::one() {
            return Arc::whole();
        }
        Arc::new(mid.shift(lo), mid.shift(hi))
    }
}
