//! The group SL(3,R) and its symmetric space of unit-determinant SPD matrices.

use nalgebra::{Cholesky, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flag::Flag;
use crate::linalg::{sym_eigenvalues, sym_exp, sym_fn};

const DET_TOL: f64 = 1e-10;
const SYM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;

/// An element of SL(3,R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElem(Matrix3<f64>);

impl GroupElem {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite matrix entries"));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(invalid(format!("determinant {det} is not 1")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to lie in SL(3,R) up to rounding, such as a product of elements.
    pub(crate) fn from_trusted(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// `exp(V)` for a symmetric traceless `V`.
    pub fn exp_sym(v: &TangentDir) -> Self {
        Self(sym_exp(&v.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Inverse via the adjugate, exact for determinant one.
    pub fn inverse(&self) -> Self {
        let m = &self.0;
        let adj = Matrix3::from_fn(|i, j| {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
        });
        Self(adj)
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }
}

impl std::ops::Mul for GroupElem {
    type Output = GroupElem;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

/// A point of the symmetric space: symmetric positive definite with determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdPoint(Matrix3<f64>);

impl SpdPoint {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite matrix entries"));
        }
        let scale = m.norm().max(1.0);
        if (m - m.transpose()).norm() > SYM_TOL * scale {
            return Err(invalid("matrix is not symmetric"));
        }
        if Cholesky::new(m).is_none() {
            return Err(invalid("matrix is not positive definite"));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(invalid(format!("determinant {det} is not 1")));
        }
        Ok(Self(m))
    }

    /// Symmetrizes and rescales to unit determinant. Caller guarantees positivity.
    pub(crate) fn renormalized(m: Matrix3<f64>) -> Self {
        let s = (m + m.transpose()) * 0.5;
        let det = s.determinant();
        Self(s / det.cbrt())
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// The SPD square root, itself an element of SL(3,R).
    pub fn sqrt(&self) -> GroupElem {
        GroupElem(sym_fn(&self.0, f64::sqrt))
    }

    pub fn inverse(&self) -> Self {
        Self(GroupElem(self.0).inverse().0)
    }
}

/// A symmetric traceless tangent direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentDir(Matrix3<f64>);

impl TangentDir {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let scale = m.norm().max(1.0);
        if (m - m.transpose()).norm() > SYM_TOL * scale {
            return Err(invalid("tangent direction is not symmetric"));
        }
        if m.trace().abs() > TRACE_TOL * scale {
            return Err(invalid("tangent direction is not traceless"));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0 * s)
    }
}

/// `X -> g X g^T`.
pub fn act_on_point(g: &GroupElem, x: &SpdPoint) -> SpdPoint {
    SpdPoint::renormalized(g.0 * x.0 * g.0.transpose())
}

/// Action on flags compatible with [`act_on_point`]: points go by `g^{-T}`, covectors by `g`.
///
/// This is the action under which [`busemann`] is invariant.
pub fn act_on_flag(g: &GroupElem, f: &Flag) -> Result<Flag> {
    let x = g.inverse().0.transpose() * f.line.coords();
    let y = g.0 * f.plane.coords();
    Flag::from_vectors_repaired(x, y)
}

/// `X^{1/2} exp(t V) X^{1/2}`.
pub fn geodesic(x: &SpdPoint, v: &TangentDir, t: f64) -> SpdPoint {
    let s = x.sqrt().0;
    SpdPoint::renormalized(s * sym_exp(&(v.0 * t)) * s)
}

/// Riemannian distance `sqrt(sum log^2 eig(X^{-1} Y))`.
pub fn distance(x: &SpdPoint, y: &SpdPoint) -> f64 {
    let s = sym_fn(&x.0, |l| 1.0 / l.sqrt());
    let w = s * y.0 * s;
    sym_eigenvalues(&w).iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt()
}

/// Busemann function of the flag `f` with basepoint `o`, evaluated at `x`.
pub fn busemann(f: &Flag, o: &SpdPoint, x: &SpdPoint) -> Result<f64> {
    let xv = f.line.coords();
    let yv = f.plane.coords();
    let xi = x.inverse();
    let oi = o.inverse();
    let num1 = xv.dot(&(x.0 * xv));
    let den1 = xv.dot(&(o.0 * xv));
    let num2 = yv.dot(&(xi.0 * yv));
    let den2 = yv.dot(&(oi.0 * yv));
    if [num1, den1, num2, den2].iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NumericalDomain(
            "non-positive quadratic form in Busemann function".into(),
        ));
    }
    Ok((num1 / den1).ln() + (num2 / den2).ln())
}
