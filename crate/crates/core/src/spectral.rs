//! Singular-value and eigenvalue gaps, and attracting flags of hyperbolic elements.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flag::Flag;
use crate::linalg::kernel_vector;
use crate::symspace::GroupElem;

/// Relative gap required between the top two eigenvalue moduli.
pub const HYPERBOLIC_GAP: f64 = 1e-9;

/// Logarithmic gaps between consecutive singular values and eigenvalue moduli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapVector {
    pub sg12: f64,
    pub sg23: f64,
    pub lg12: f64,
    pub lg23: f64,
}

fn log_spectral_norm(m: &Matrix3<f64>) -> f64 {
    let scale = m.amax();
    let n = m / scale;
    let top = SymmetricEigen::new(n.transpose() * n).eigenvalues.max();
    0.5 * top.ln() + scale.ln()
}

fn log_spectral_radius(m: &Matrix3<f64>) -> f64 {
    let scale = m.amax();
    let ev = (m / scale).complex_eigenvalues();
    let top = ev.iter().map(|c| c.norm()).fold(0.0, f64::max);
    top.ln() + scale.ln()
}

/// Gaps computed from `g` and a separately supplied inverse.
///
/// With `a = log|g|`, `b = log|g^{-1}|` and determinant one, `log s2 = b - a`,
/// so both singular gaps follow from two operator norms without resolving `s2` directly.
pub fn gap_vector_with_inverse(g: &Matrix3<f64>, g_inv: &Matrix3<f64>) -> GapVector {
    let a = log_spectral_norm(g);
    let b = log_spectral_norm(g_inv);
    let la = log_spectral_radius(g);
    let lb = log_spectral_radius(g_inv);
    GapVector {
        sg12: (2.0 * a - b).max(0.0),
        sg23: (2.0 * b - a).max(0.0),
        lg12: (2.0 * la - lb).max(0.0),
        lg23: (2.0 * lb - la).max(0.0),
    }
}

pub fn gap_vector(g: &GroupElem) -> GapVector {
    gap_vector_with_inverse(g.matrix(), g.inverse().matrix())
}

/// Eigenvector of the unique eigenvalue of maximal modulus, which must be real.
fn dominant_eigvec(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let scale = m.amax();
    let n = m / scale;
    let mut ev: Vec<_> = n.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let (top, next) = (ev[0], ev[1]);
    if top.norm() <= next.norm() * (1.0 + HYPERBOLIC_GAP) {
        return Err(Error::NonHyperbolic(format!(
            "top eigenvalue moduli {} and {} are not separated",
            top.norm(),
            next.norm()
        )));
    }
    let mu = top.re;
    let k = kernel_vector(&(n - Matrix3::identity() * mu));
    if k.norm() == 0.0 {
        return Err(Error::NumericalDomain("degenerate eigenvector".into()));
    }
    Ok(k)
}

/// The attracting fixed flag of `g` for the flag action `x -> g^{-T} x`, `y -> g y`.
///
/// The point is the top eigenvector of `g^{-T}` and the covector the top eigenvector
/// of `g`; both top eigenvalues must be simple in modulus.
pub fn attracting_flag(g: &GroupElem) -> Result<Flag> {
    let x = dominant_eigvec(&g.inverse().matrix().transpose())?;
    let y = dominant_eigvec(g.matrix())?;
    Flag::from_vectors_repaired(x, y)
}
