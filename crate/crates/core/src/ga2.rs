//! The Clifford algebra Cl(2,0) of the Euclidean plane.
//!
//! Multivectors are stored in the fixed basis `{1, e1, e2, e12}` where
//! `e12 = e1 e2 = J` is the unit pseudoscalar. Left multiplication by `J`
//! rotates vectors clockwise by a quarter turn.

use core::ops::{Add, Mul, Neg, Sub};

use crate::math;

/// A vector of the plane, `x e1 + y e2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vector2 {
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0 };
    pub const E1: Self = Self { x: 1.0, y: 0.0 };
    pub const E2: Self = Self { x: 0.0, y: 1.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean inner product.
    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Coefficient of `e12` in the outer product `self ∧ other`.
    #[inline]
    pub fn wedge(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vector2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vector2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vector2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<Vector2> for f64 {
    type Output = Vector2;
    #[inline]
    fn mul(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self * rhs.x, self * rhs.y)
    }
}

/// Left multiplication by the pseudoscalar: `(x, y) -> (y, -x)`.
///
/// `J e1 = -e2` and `J e2 = e1`; applying it twice negates the vector.
#[inline]
pub fn j_rotate(v: Vector2) -> Vector2 {
    Vector2::new(v.y, -v.x)
}

/// An element `s + v1 e1 + v2 e2 + b e12` of Cl(2,0).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Multivector2 {
    pub s: f64,
    pub v1: f64,
    pub v2: f64,
    pub b: f64,
}

impl Multivector2 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const E1: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const E2: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    /// The unit pseudoscalar `e1 e2`.
    pub const J: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(s: f64, v1: f64, v2: f64, b: f64) -> Self {
        Self { s, v1, v2, b }
    }

    #[inline]
    pub const fn scalar(s: f64) -> Self {
        Self::new(s, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub const fn vector(v: Vector2) -> Self {
        Self::new(0.0, v.x, v.y, 0.0)
    }

    #[inline]
    pub const fn bivector(b: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, b)
    }

    /// Grade-1 part as a plane vector.
    #[inline]
    pub fn to_vector(self) -> Vector2 {
        Vector2::new(self.v1, self.v2)
    }

    #[inline]
    pub fn components(self) -> [f64; 4] {
        [self.s, self.v1, self.v2, self.b]
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    /// The geometric product `self * rhs`.
    ///
    /// Basis table (row times column):
    ///
    /// ```text
    ///         1     e1    e2    e12
    ///   1     1     e1    e2    e12
    ///   e1    e1    1     e12   e2
    ///   e2    e2   -e12   1    -e1
    ///   e12   e12  -e2    e1   -1
    /// ```
    #[inline]
    pub fn product(self, rhs: Self) -> Self {
        let (a, b) = (self, rhs);
        Self {
            s: a.s * b.s + a.v1 * b.v1 + a.v2 * b.v2 - a.b * b.b,
            v1: a.s * b.v1 + a.v1 * b.s - a.v2 * b.b + a.b * b.v2,
            v2: a.s * b.v2 + a.v2 * b.s + a.v1 * b.b - a.b * b.v1,
            b: a.s * b.b + a.b * b.s + a.v1 * b.v2 - a.v2 * b.v1,
        }
    }

    /// Selects the grade-`k` part. Grades outside `0..=2` give zero.
    #[inline]
    pub fn grade(self, k: i32) -> Self {
        match k {
            0 => Self::scalar(self.s),
            1 => Self::new(0.0, self.v1, self.v2, 0.0),
            2 => Self::bivector(self.b),
            _ => Self::ZERO,
        }
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(self, other: Self) -> f64 {
        let (a, b) = (self.components(), other.components());
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| math::abs(x - y))
            .fold(0.0, f64::max)
    }
}

/// Geometric product of two multivectors.
#[inline]
pub fn mv_product(a: Multivector2, b: Multivector2) -> Multivector2 {
    a.product(b)
}

/// Grade projection `<a>_k`.
#[inline]
pub fn grade_project(a: Multivector2, k: i32) -> Multivector2 {
    a.grade(k)
}

impl Mul for Multivector2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.product(rhs)
    }
}

impl Mul<Multivector2> for f64 {
    type Output = Multivector2;
    #[inline]
    fn mul(self, rhs: Multivector2) -> Multivector2 {
        Multivector2::new(self * rhs.s, self * rhs.v1, self * rhs.v2, self * rhs.b)
    }
}

impl Add for Multivector2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.s + rhs.s, self.v1 + rhs.v1, self.v2 + rhs.v2, self.b + rhs.b)
    }
}

impl Sub for Multivector2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.s - rhs.s, self.v1 - rhs.v1, self.v2 - rhs.v2, self.b - rhs.b)
    }
}

impl Neg for Multivector2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.s, -self.v1, -self.v2, -self.b)
    }
}

impl From<Vector2> for Multivector2 {
    fn from(v: Vector2) -> Self {
        Self::vector(v)
    }
}
