//! Points, covectors and flags of the projective plane.

use nalgebra::{Complex, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance for projective equality of unit representatives.
pub const PROJECTIVE_TOL: f64 = 1e-10;
/// Incidence tolerance `|x . y|` on unit representatives.
pub const INCIDENCE_TOL: f64 = 1e-12;
/// Pairings at or below this are treated as zero in transversality tests.
pub const TRANSVERSE_TOL: f64 = 1e-10;

const SIGN_PIVOT: f64 = 1e-12;

fn normalize(v: Vector3<f64>) -> Result<Vector3<f64>> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(invalid("non-finite projective coordinates"));
    }
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(invalid("zero vector has no projective class"));
    }
    // Unit vectors are kept as they are, so normalizing twice changes nothing.
    let mut u = if (n - 1.0).abs() <= 4.0 * f64::EPSILON { v } else { v / n };
    if let Some(first) = u.iter().copied().find(|c| c.abs() > SIGN_PIVOT) {
        if first < 0.0 {
            u = -u;
        }
    }
    Ok(u)
}

fn proj_eq(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
    a.cross(b).norm() <= tol
}

macro_rules! projective_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, Serialize, Deserialize)]
        #[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
        pub struct $name(Vector3<f64>);

        impl $name {
            pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
                Self::from_vector(Vector3::new(x, y, z))
            }

            pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
                normalize(v).map(Self)
            }

            /// Unit representative with the first nonzero coordinate positive.
            pub fn coords(&self) -> &Vector3<f64> {
                &self.0
            }

            pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
                proj_eq(&self.0, &other.0, tol)
            }

            /// Sine of the angle between the two lines through the origin.
            pub fn angle_to(&self, other: &Self) -> f64 {
                self.0.cross(&other.0).norm()
            }
        }

        impl PartialEq for $name {
            fn eq(&self, other: &Self) -> bool {
                self.approx_eq(other, PROJECTIVE_TOL)
            }
        }

        impl TryFrom<[f64; 3]> for $name {
            type Error = crate::Error;
            fn try_from(a: [f64; 3]) -> Result<Self> {
                Self::new(a[0], a[1], a[2])
            }
        }

        impl From<$name> for [f64; 3] {
            fn from(p: $name) -> [f64; 3] {
                [p.0[0], p.0[1], p.0[2]]
            }
        }
    };
}

projective_type!(
    /// A point of RP^2.
    ProjectivePoint
);
projective_type!(
    /// A line of RP^2, stored as a covector.
    ProjectiveCovector
);

impl ProjectivePoint {
    /// Value of the covector on this point, using unit representatives.
    pub fn pair(&self, y: &ProjectiveCovector) -> f64 {
        self.0.dot(&y.0)
    }
}

/// An incident point-line pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub line: ProjectivePoint,
    pub plane: ProjectiveCovector,
}

impl Flag {
    pub fn new(line: ProjectivePoint, plane: ProjectiveCovector) -> Result<Self> {
        let defect = line.pair(&plane).abs();
        if defect > INCIDENCE_TOL {
            return Err(invalid(format!("point not on line (pairing {defect:e})")));
        }
        Ok(Self { line, plane })
    }

    pub fn from_coords(x: [f64; 3], y: [f64; 3]) -> Result<Self> {
        Self::new(x.try_into()?, y.try_into()?)
    }

    /// Builds a flag from raw vectors, projecting `y` onto `x`'s annihilator.
    /// Used after numerical maps where incidence holds only to rounding.
    pub(crate) fn from_vectors_repaired(x: Vector3<f64>, y: Vector3<f64>) -> Result<Self> {
        let x = normalize(x)?;
        let y = normalize(y)?;
        let y = y - x * x.dot(&y);
        Ok(Self {
            line: ProjectivePoint(x),
            plane: ProjectiveCovector::from_vector(y)?,
        })
    }

    pub fn incidence_defect(&self) -> f64 {
        self.line.pair(&self.plane).abs()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.line.approx_eq(&other.line, tol) && self.plane.approx_eq(&other.plane, tol)
    }
}

/// Two flags are transverse when each point avoids the other line.
pub fn is_transverse(f1: &Flag, f2: &Flag) -> bool {
    f1.line.pair(&f2.plane).abs() > TRANSVERSE_TOL && f2.line.pair(&f1.plane).abs() > TRANSVERSE_TOL
}

/// Membership in the thickening of `f`: flags sharing its point or its line.
pub fn thickening_contains(f: &Flag, g: &Flag) -> bool {
    f.line.approx_eq(&g.line, PROJECTIVE_TOL) || f.plane.approx_eq(&g.plane, PROJECTIVE_TOL)
}

fn frame_scale() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

/// Real coordinates to the complex frame in which the reducible plane is `E13 + E31`.
pub fn frame_change_real_to_complex(x: [f64; 3]) -> [Complex<f64>; 3] {
    let s = frame_scale();
    [
        Complex::new(s * x[0], s * x[2]),
        Complex::new(x[1], 0.0),
        Complex::new(s * x[0], -s * x[2]),
    ]
}

/// Inverse of [`frame_change_real_to_complex`]; fails off the real slice.
pub fn frame_change_complex_to_real(z: [Complex<f64>; 3]) -> Result<[f64; 3]> {
    let s = frame_scale();
    let x1 = (z[0] + z[2]) * s;
    let x3 = (z[0] - z[2]) * Complex::new(0.0, -s);
    let x2 = z[1];
    let scale = z.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let imag = x1.im.abs().max(x2.im.abs()).max(x3.im.abs());
    if imag > 1e-12 * scale {
        return Err(invalid(format!("vector is not on the real slice (imaginary part {imag:e})")));
    }
    Ok([x1.re, x2.re, x3.re])
}
