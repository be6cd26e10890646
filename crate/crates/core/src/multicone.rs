//! Multicones: preimages of half-planes under the projection onto a reducible plane.
//!
//! A multicone is described by a frame, a base point in the model plane and an axis
//! angle `psi`, the axis being the tangent direction `cos(psi) P + sin(psi) Q` at the
//! base. The adapted frame `G_U` carries the model multicone (base identity, axis `P`)
//! onto it; all classification happens in that frame, where the boundary geodesic is
//! the `Q`-geodesic through the identity.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{invalid, Error, Result};
use crate::flag::{is_transverse, Flag};
use crate::linalg::{exp_pq, rot13};
use crate::plane::{project, PlanePoint, Projection, ReduciblePlaneFrame};
use crate::symspace::{act_on_flag, GroupElem};

/// Default classification tolerance in plane coordinates.
pub const CLASSIFY_TOL: f64 = 1e-6;
/// Default chart resolution per side.
pub const DEFAULT_SAMPLES: usize = 64;
/// Half-width of the sampled `log(lambda)` range.
pub const LOG_LAMBDA_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multicone {
    frame: ReduciblePlaneFrame,
    base: PlanePoint,
    axis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestEstimate {
    pub lower: f64,
    pub fplus: Flag,
    pub fminus: Flag,
    pub samples: usize,
}

impl Multicone {
    pub fn new(frame: ReduciblePlaneFrame, base: PlanePoint, axis: f64) -> Result<Self> {
        if !axis.is_finite() {
            return Err(invalid("axis angle must be finite"));
        }
        Ok(Self { frame, base, axis })
    }

    /// Base at the identity of the model plane, axis `diag(1,0,-1)`.
    pub fn model() -> Self {
        Self { frame: ReduciblePlaneFrame::model(), base: PlanePoint::identity(), axis: 0.0 }
    }

    pub fn frame(&self) -> &ReduciblePlaneFrame {
        &self.frame
    }
    pub fn base(&self) -> &PlanePoint {
        &self.base
    }
    pub fn axis(&self) -> f64 {
        self.axis
    }

    /// `G_U = frame * base^{1/2} * R(psi/2)`.
    pub fn adapted_frame(&self) -> GroupElem {
        self.frame.g * self.base.sqrt_elem() * GroupElem::from_trusted(rot13(0.5 * self.axis))
    }

    /// Translate by `exp(s A / 2)` along the axis `A`.
    pub fn translated(&self, s: f64) -> Self {
        let gu = self.adapted_frame();
        let h = gu * GroupElem::from_trusted(exp_pq(s, 0.0, 0.5)) * gu.inverse();
        self.transported(&h)
    }

    /// The image `h . U`.
    pub fn transported(&self, h: &GroupElem) -> Self {
        Self { frame: self.frame.transported(h), ..*self }
    }

    /// The complementary half-plane preimage.
    pub fn reversed(&self) -> Self {
        Self { axis: self.axis + PI, ..*self }
    }
}

/// Forward and backward ends of the axis geodesic.
pub fn endpoint_flags(u: &Multicone) -> (Flag, Flag) {
    let g = u.adapted_frame();
    let fwd = Flag::from_coords([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
    let bwd = Flag::from_coords([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
    (act_on_flag(&g, &fwd).unwrap(), act_on_flag(&g, &bwd).unwrap())
}

/// Signed position of `p(f)` relative to the boundary geodesic, positive inside.
pub fn signed_position(u: &Multicone, f: &Flag) -> Result<f64> {
    let frame = ReduciblePlaneFrame::new(u.adapted_frame());
    Ok(match project(f, &frame)? {
        Projection::Interior(x) => x.signed_offset(),
        Projection::Boundary(a) => a.signed_offset(),
    })
}

pub fn contains_flag(u: &Multicone, f: &Flag, tol: f64) -> Result<Membership> {
    let s = signed_position(u, f)?;
    Ok(if s > tol {
        Membership::Inside
    } else if s < -tol {
        Membership::Outside
    } else {
        Membership::Boundary
    })
}

/// `([lam cos t : 1 : sin t / lam], [-cos t / lam : 1 : -lam sin t])`.
///
/// This parametrizes the part of the boundary projecting to the interior for the
/// half-plane bounded by the `diag(1,0,-1)` geodesic.
pub fn half_plane_chart(theta: f64, lam: f64) -> Result<Flag> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(invalid("chart parameter lambda must be positive"));
    }
    let (s, c) = theta.sin_cos();
    Flag::from_vectors_repaired(
        Vector3::new(lam * c, 1.0, s / lam),
        Vector3::new(-c / lam, 1.0, -lam * s),
    )
}

fn chart_to_model() -> GroupElem {
    GroupElem::from_trusted(rot13(FRAC_PI_4))
}

/// Boundary flag of `u` at chart parameters `(theta, lam)`.
pub fn boundary_chart(u: &Multicone, theta: f64, lam: f64) -> Result<Flag> {
    let f = half_plane_chart(theta, lam)?;
    act_on_flag(&(u.adapted_frame() * chart_to_model()), &f)
}

/// Points of the two thickenings at the ends of the boundary geodesic, `4 * per_circle` flags.
pub fn wedge_samples(u: &Multicone, per_circle: usize) -> Vec<Flag> {
    let g = u.adapted_frame() * chart_to_model();
    let mut out = Vec::with_capacity(4 * per_circle);
    for k in 0..per_circle {
        let (s, c) = (PI * k as f64 / per_circle as f64).sin_cos();
        let raw = [
            ([c, s, 0.0], [0.0, 0.0, 1.0]),
            ([1.0, 0.0, 0.0], [0.0, c, s]),
            ([0.0, s, c], [1.0, 0.0, 0.0]),
            ([0.0, 0.0, 1.0], [c, s, 0.0]),
        ];
        for (x, y) in raw {
            let f = Flag::from_coords(x, y).expect("wedge flag");
            out.push(act_on_flag(&g, &f).expect("wedge flag"));
        }
    }
    out
}

/// Chart grid of side `n` over `theta` in `[0, 2 pi)` and `log(lam)` in `[-6, 6]`,
/// followed by `4n` probes on each of the four wedge circles.
pub fn boundary_samples(u: &Multicone, n: usize) -> Vec<Flag> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * n + 16 * n);
    for i in 0..n {
        let theta = 2.0 * PI * i as f64 / n as f64;
        for j in 0..n {
            let ll = -LOG_LAMBDA_MAX + 2.0 * LOG_LAMBDA_MAX * j as f64 / (n - 1) as f64;
            out.push(boundary_chart(u, theta, ll.exp()).expect("chart flag"));
        }
    }
    out.extend(wedge_samples(u, 4 * n));
    out
}

fn all_inside(u: &Multicone, samples: &[Flag]) -> Result<bool> {
    samples
        .par_iter()
        .map(|f| contains_flag(u, f, CLASSIFY_TOL).map(|m| m == Membership::Inside))
        .try_reduce(|| true, |a, b| Ok(a && b))
}

/// Whether every sampled boundary flag of `u2` lies inside `u1`.
pub fn is_nested(u1: &Multicone, u2: &Multicone, n_samples: usize) -> Result<bool> {
    all_inside(u1, &boundary_samples(u2, n_samples))
}

/// `g_lambda = L^{-T} diag(e^lam, 1, e^-lam) L^T` in the basis `(l1, l2, l3)` adapted to
/// `fminus` (point `l1`), `fplus` (point `l3`) and the intersection of their lines (`l2`).
pub fn nest_element(fplus: &Flag, fminus: &Flag, lam: f64) -> Result<GroupElem> {
    if !is_transverse(fplus, fminus) {
        return Err(Error::Precondition("witness flags are not transverse".into()));
    }
    let l1 = *fminus.line.coords();
    let l3 = *fplus.line.coords();
    let l2 = fplus.plane.coords().cross(fminus.plane.coords());
    let l = Matrix3::from_columns(&[l1, l2, l3]);
    let lt = l.transpose();
    let lt_inv = lt
        .try_inverse()
        .ok_or_else(|| Error::NumericalDomain("degenerate adapted basis".into()))?;
    let d = Matrix3::from_diagonal(&Vector3::new(lam.exp(), 1.0, (-lam).exp()));
    Ok(GroupElem::from_trusted(lt_inv * d * lt))
}

/// Witness-based lower bound on the nestedness of `u2` inside `u1`.
pub fn nest_estimate(u1: &Multicone, u2: &Multicone, n_samples: usize) -> Result<NestEstimate> {
    let samples = boundary_samples(u2, n_samples);
    if !all_inside(u1, &samples)? {
        return Err(Error::Precondition("multicones are not nested".into()));
    }
    let fplus = endpoint_flags(u2).0;
    let fminus = endpoint_flags(u1).1;
    let holds = |lam: f64| -> Result<bool> {
        let g = nest_element(&fplus, &fminus, lam)?;
        all_inside(&u1.transported(&g), &samples)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while holds(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NumericalDomain("nestedness bound did not saturate".into()));
        }
    }
    while hi - lo > 1e-7 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(NestEstimate { lower: lo, fplus, fminus, samples: samples.len() })
}

fn thickening_probes(f: &Flag, per_circle: usize) -> Vec<Flag> {
    let x = *f.line.coords();
    let y = *f.plane.coords();
    // Orthonormal completions: `x, e` span the line `y`; `y, e'` span covectors vanishing at `x`.
    let e = y.cross(&x).normalize();
    let e2 = x.cross(&e).normalize();
    let mut out = Vec::with_capacity(2 * per_circle);
    for k in 0..per_circle {
        let (s, c) = (PI * k as f64 / per_circle as f64).sin_cos();
        out.push(Flag::from_vectors_repaired(x * c + e * s, y).unwrap());
        out.push(Flag::from_vectors_repaired(x, y * c + e2 * s).unwrap());
    }
    out
}

/// The flag whose thickening is the intersection of a nested sequence of multicones.
pub fn limit_flag(cones: &[Multicone], n_samples: usize) -> Result<Flag> {
    if cones.len() < 2 {
        return Err(Error::Precondition("need at least two multicones".into()));
    }
    // Nestedness is superadditive along a chain, so positive consecutive bounds make
    // the nestedness from the first cone grow without bound.
    for (k, w) in cones.windows(2).enumerate() {
        let est = nest_estimate(&w[0], &w[1], n_samples).map_err(|e| match e {
            Error::Precondition(_) => {
                Error::Precondition(format!("cone {} is not nested in cone {k}", k + 1))
            }
            other => other,
        })?;
        if est.lower <= 0.0 {
            return Err(Error::Precondition(format!("nestedness vanishes at cone {}", k + 1)));
        }
    }
    let f = endpoint_flags(cones.last().unwrap()).0;
    for u in cones {
        for p in thickening_probes(&f, 16) {
            if contains_flag(u, &p, CLASSIFY_TOL)? != Membership::Inside {
                return Err(Error::Precondition("limit thickening escapes a cone".into()));
            }
        }
    }
    Ok(f)
}
