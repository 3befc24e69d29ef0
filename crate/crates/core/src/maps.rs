//! Built-in analytic maps with closed-form values and derivatives.

use alloc::string::ToString;
use core::f64::consts::PI;

use crate::field::{Grid2, MapField, Mat2};
use crate::ga2::Vector2;
use crate::math;
use crate::{Error, Result};

/// Names accepted by [`AnalyticMap::from_name`].
pub const KNOWN_MAPS: &str = "identity, rotation(theta), scale(a,b), shear(k), sinusoidal(amplitude)";

/// Closed-form test maps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "lowercase"))]
pub enum AnalyticMap {
    Identity,
    /// Counterclockwise rotation by `theta`.
    Rotation { theta: f64 },
    /// `(a x, b y)`.
    Scale { a: f64, b: f64 },
    /// `(x + k y, y)`.
    Shear { k: f64 },
    /// `(x + amplitude · sin(πx) sin(πy), y)`; the identity on the unit square's boundary.
    Sinusoidal { amplitude: f64 },
    /// `A x + b`.
    Affine { a: Mat2, b: Vector2 },
}

impl AnalyticMap {
    /// Builds a registry map from its name and positional parameters.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument(alloc::format!(
                    "map `{name}` takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let map = match name {
            "identity" => {
                want(0)?;
                Self::Identity
            }
            "rotation" => {
                want(1)?;
                Self::Rotation { theta: params[0] }
            }
            "scale" => {
                want(2)?;
                Self::Scale { a: params[0], b: params[1] }
            }
            "shear" => {
                want(1)?;
                Self::Shear { k: params[0] }
            }
            "sinusoidal" => {
                want(1)?;
                Self::Sinusoidal { amplitude: params[0] }
            }
            _ => {
                return Err(Error::UnknownMap { name: name.to_string(), known: KNOWN_MAPS });
            }
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("map parameters must be finite".to_string()));
        }
        Ok(map)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Rotation { .. } => "rotation",
            Self::Scale { .. } => "scale",
            Self::Shear { .. } => "shear",
            Self::Sinusoidal { .. } => "sinusoidal",
            Self::Affine { .. } => "affine",
        }
    }

    pub fn value(&self, x: f64, y: f64) -> Vector2 {
        match *self {
            Self::Identity => Vector2::new(x, y),
            Self::Rotation { theta } => {
                let (s, c) = (math::sin(theta), math::cos(theta));
                Vector2::new(c * x - s * y, s * x + c * y)
            }
            Self::Scale { a, b } => Vector2::new(a * x, b * y),
            Self::Shear { k } => Vector2::new(x + k * y, y),
            Self::Sinusoidal { amplitude } => {
                Vector2::new(x + amplitude * math::sin(PI * x) * math::sin(PI * y), y)
            }
            Self::Affine { a, b } => a.apply(Vector2::new(x, y)) + b,
        }
    }

    /// `dφ` at a point; column `c` is `∂φ/∂x_c`.
    pub fn jacobian(&self, x: f64, y: f64) -> Mat2 {
        match *self {
            Self::Identity => Mat2::IDENTITY,
            Self::Rotation { theta } => {
                let (s, c) = (math::sin(theta), math::cos(theta));
                Mat2::new(c, -s, s, c)
            }
            Self::Scale { a, b } => Mat2::new(a, 0.0, 0.0, b),
            Self::Shear { k } => Mat2::new(1.0, k, 0.0, 1.0),
            Self::Sinusoidal { amplitude } => {
                let ap = amplitude * PI;
                Mat2::new(
                    1.0 + ap * math::cos(PI * x) * math::sin(PI * y),
                    ap * math::sin(PI * x) * math::cos(PI * y),
                    0.0,
                    1.0,
                )
            }
            Self::Affine { a, .. } => a,
        }
    }

    /// Second derivatives, `h[r][a][b] = ∂_a ∂_b φ^r`.
    pub fn hessian(&self, x: f64, y: f64) -> [[[f64; 2]; 2]; 2] {
        let mut h = [[[0.0; 2]; 2]; 2];
        if let Self::Sinusoidal { amplitude } = *self {
            let app = amplitude * PI * PI;
            let ss = math::sin(PI * x) * math::sin(PI * y);
            let cc = math::cos(PI * x) * math::cos(PI * y);
            h[0] = [[-app * ss, app * cc], [app * cc, -app * ss]];
        }
        h
    }

    /// Samples the map at every node of `grid`.
    pub fn sample(&self, grid: &Grid2) -> Result<MapField> {
        MapField::from_fn(*grid, |x, y| self.value(x, y))
    }

    pub fn jac(&self, x: f64, y: f64) -> f64 {
        self.jacobian(x, y).det()
    }

    pub fn curl(&self, x: f64, y: f64) -> f64 {
        let d = self.jacobian(x, y);
        d.m[1][0] - d.m[0][1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        assert_eq!(AnalyticMap::from_name("rotation", &[0.5]).unwrap(), AnalyticMap::Rotation { theta: 0.5 });
        assert!(matches!(AnalyticMap::from_name("twist", &[]), Err(Error::UnknownMap { .. })));
        assert!(matches!(AnalyticMap::from_name("scale", &[1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let maps = [
            AnalyticMap::Identity,
            AnalyticMap::Rotation { theta: 0.7 },
            AnalyticMap::Scale { a: 2.0, b: 3.0 },
            AnalyticMap::Shear { k: 0.4 },
            AnalyticMap::Sinusoidal { amplitude: 0.1 },
        ];
        let h = 1e-6;
        for map in maps {
            let (x, y) = (0.31, 0.62);
            let d = map.jacobian(x, y);
            let dx = (map.value(x + h, y) - map.value(x - h, y)).x / (2.0 * h);
            let dy = (map.value(x, y + h) - map.value(x, y - h)).x / (2.0 * h);
            assert!((d.m[0][0] - dx).abs() < 1e-8 && (d.m[0][1] - dy).abs() < 1e-8, "{map:?}");
            let hs = map.hessian(x, y);
            let dxy = (map.jacobian(x, y + h).m[0][0] - map.jacobian(x, y - h).m[0][0]) / (2.0 * h);
            assert!((hs[0][0][1] - dxy).abs() < 1e-7);
            let dxx = (map.jacobian(x + h, y).m[0][0] - map.jacobian(x - h, y).m[0][0]) / (2.0 * h);
            assert!((hs[0][0][0] - dxx).abs() < 1e-7);
        }
    }

    #[test]
    fn sinusoidal_is_identity_on_unit_square_boundary() {
        let m = AnalyticMap::Sinusoidal { amplitude: 0.1 };
        for t in [0.0, 0.25, 0.5, 1.0] {
            for p in [(t, 0.0), (t, 1.0), (0.0, t), (1.0, t)] {
                let v = m.value(p.0, p.1);
                assert!((v - Vector2::new(p.0, p.1)).norm() < 1e-15);
            }
        }
    }
}
