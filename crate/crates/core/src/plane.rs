//! The model reducible plane, the nearest-point projection onto it, and its fibers.
//!
//! The plane consists of the unit-determinant matrices `[[a,0,c],[0,1,0],[c,0,b]]`.
//! In exponential coordinates a point is `exp(uP + vQ)` with `P = diag(1,0,-1)` and
//! `Q = E13 + E31`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flag::{thickening_contains, Flag, ProjectivePoint};
use crate::linalg::{embed13, exp_pq};
use crate::symspace::{act_on_flag, GroupElem, SpdPoint};

/// Gradient-norm tolerance of the projection solver.
pub const PROJECT_TOL: f64 = 1e-10;
pub const PROJECT_MAX_ITER: usize = 100;
/// A flag whose model-frame `x2` or `y2` is at most this is treated as a boundary flag.
pub const BOUNDARY_TOL: f64 = 1e-10;
const MAX_STEP: f64 = 2.0;
const STALL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    a: f64,
    b: f64,
    c: f64,
}

impl PlanePoint {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if ![a, b, c].iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite plane coordinates"));
        }
        if a <= 0.0 {
            return Err(invalid("plane point needs a > 0"));
        }
        let det = a * b - c * c;
        if (det - 1.0).abs() > 1e-10 * (a * b).max(1.0) {
            return Err(invalid(format!("ab - c^2 = {det}, expected 1")));
        }
        Ok(Self { a, b, c })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 1.0, c: 0.0 }
    }

    /// `exp(uP + vQ)`.
    pub fn from_exp(u: f64, v: f64) -> Self {
        let m = exp_pq(u, v, 1.0);
        Self { a: m[(0, 0)], b: m[(2, 2)], c: m[(0, 2)] }
    }

    fn from_block(m: &Matrix2<f64>) -> Self {
        let s = m.determinant().sqrt();
        let m = (m + m.transpose()) * (0.5 / s);
        Self { a: m[(0, 0)], b: m[(1, 1)], c: m[(0, 1)] }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn block(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.c, self.c, self.b)
    }

    pub fn to_spd(&self) -> SpdPoint {
        SpdPoint::renormalized(embed13(&self.block()))
    }

    /// `X^{1/2}` as a group element preserving the plane.
    pub fn sqrt_elem(&self) -> GroupElem {
        let s = (self.a + self.b + 2.0).sqrt();
        GroupElem::from_trusted(embed13(&((self.block() + Matrix2::identity()) / s)))
    }

    /// Exponential coordinates `(u, v)` with `X = exp(uP + vQ)`.
    pub fn log_coords(&self) -> (f64, f64) {
        let half_diff = 0.5 * (self.a - self.b);
        let sh = half_diff.hypot(self.c);
        if sh == 0.0 {
            return (0.0, 0.0);
        }
        let r = sh.asinh();
        (r / sh * half_diff, r / sh * self.c)
    }

    /// Signed position relative to the `Q`-geodesic through the identity, positive on the `+P` side.
    pub fn signed_offset(&self) -> f64 {
        (0.5 * (self.a - self.b)).asinh()
    }
}

/// A point of the visual boundary circle, stored with `phi` reduced modulo `pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    phi: f64,
}

impl BoundaryPoint {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(invalid("non-finite boundary angle"));
        }
        let mut p = phi.rem_euclid(std::f64::consts::PI);
        if p >= std::f64::consts::PI {
            p = 0.0;
        }
        Ok(Self { phi: p })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `([cos phi : 0 : sin phi], [-sin phi : 0 : cos phi])`.
    pub fn flag(&self) -> Flag {
        let (s, c) = self.phi.sin_cos();
        Flag::from_vectors_repaired(Vector3::new(c, 0.0, s), Vector3::new(-s, 0.0, c))
            .expect("unit boundary flag")
    }

    /// The same criterion as [`PlanePoint::signed_offset`] on the boundary circle.
    pub fn signed_offset(&self) -> f64 {
        -(2.0 * self.phi).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Projection {
    Interior(PlanePoint),
    Boundary(BoundaryPoint),
}

/// A group element carrying the model plane onto a general reducible plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReduciblePlaneFrame {
    pub g: GroupElem,
}

impl ReduciblePlaneFrame {
    pub fn model() -> Self {
        Self { g: GroupElem::identity() }
    }

    pub fn new(g: GroupElem) -> Self {
        Self { g }
    }

    /// The frame `h * g`, carrying the model plane onto `h` applied to this plane.
    pub fn transported(&self, h: &GroupElem) -> Self {
        Self { g: *h * self.g }
    }
}

/// Fiber over the identity: `([cos t : 1 : sin t], [-cos t : 1 : -sin t])`.
fn fiber_at_identity(theta: f64) -> Flag {
    let (s, c) = theta.sin_cos();
    Flag::from_vectors_repaired(Vector3::new(c, 1.0, s), Vector3::new(-c, 1.0, -s))
        .expect("fiber flag")
}

/// The flag at parameter `theta` in the conic fiber over `x`.
pub fn fiber_over_interior(x: &PlanePoint, theta: f64) -> Flag {
    act_on_flag(&x.sqrt_elem(), &fiber_at_identity(theta)).expect("fiber flag")
}

/// `x1^2 - x2^2 + x3^2` on the unit representative; negative inside the conic.
pub fn conic_eval(x: &ProjectivePoint) -> f64 {
    let v = x.coords();
    v[0] * v[0] - v[1] * v[1] + v[2] * v[2]
}

/// The dual conic on a unit covector; zero on tangent lines, positive on secants.
pub fn dual_conic_eval(y: &crate::flag::ProjectiveCovector) -> f64 {
    let v = y.coords();
    v[0] * v[0] - v[1] * v[1] + v[2] * v[2]
}

fn critical_pair(x: &Vector3<f64>, y: &Vector3<f64>) -> Vector2<f64> {
    let (nx, ny) = (x.norm_squared(), y.norm_squared());
    Vector2::new(
        (y[0] * y[0] - y[2] * y[2]) / ny - (x[0] * x[0] - x[2] * x[2]) / nx,
        2.0 * y[0] * y[2] / ny - 2.0 * x[0] * x[2] / nx,
    )
}

/// Norm of the first-order criticality equations of the Busemann function at `x`.
pub fn criticality_residual(f: &Flag, x: &PlanePoint) -> f64 {
    let s = x.sqrt_elem();
    let fc = act_on_flag(&s.inverse(), f).expect("transvected flag");
    critical_pair(fc.line.coords(), fc.plane.coords()).norm()
}

pub fn boundary_fiber_contains(a: &BoundaryPoint, f: &Flag) -> bool {
    thickening_contains(&a.flag(), f)
}

/// Projects `f` onto the plane described by `frame`, in that plane's model coordinates.
pub fn project(f: &Flag, frame: &ReduciblePlaneFrame) -> Result<Projection> {
    let f0 = act_on_flag(&frame.g.inverse(), f)?;
    project_model(&f0)
}

fn boundary_candidate(f0: &Flag) -> Option<BoundaryPoint> {
    let x = f0.line.coords();
    let y = f0.plane.coords();
    let mut cands = Vec::with_capacity(2);
    if x[1].abs() <= BOUNDARY_TOL {
        cands.push(x[2].atan2(x[0]));
    }
    if y[1].abs() <= BOUNDARY_TOL {
        cands.push((-y[0]).atan2(y[2]));
    }
    cands
        .into_iter()
        .filter_map(|phi| BoundaryPoint::new(phi).ok())
        .find(|a| boundary_fiber_contains(a, f0))
}

/// Busemann objective in the recentered frame, `log x^T e^V x + log y^T e^{-V} y`.
struct Recentered {
    x: Vector3<f64>,
    y: Vector3<f64>,
}

impl Recentered {
    fn terms(v: &Vector3<f64>) -> (f64, f64, Vector2<f64>) {
        let mid = v[1] * v[1];
        let s = v[0] * v[0] + v[2] * v[2];
        (mid, s, Vector2::new(v[0] * v[0] - v[2] * v[2], 2.0 * v[0] * v[2]))
    }

    fn value(&self, d: &Vector2<f64>) -> f64 {
        let r = d.norm();
        let (ch, shr) = if r == 0.0 { (1.0, 1.0) } else { (r.cosh(), r.sinh() / r) };
        let (mx, sx, gx) = Self::terms(&self.x);
        let (my, sy, gy) = Self::terms(&self.y);
        (mx + sx * ch + shr * gx.dot(d)).ln() + (my + sy * ch - shr * gy.dot(d)).ln()
    }

    fn gradient_hessian(&self) -> (Vector2<f64>, Matrix2<f64>) {
        let (_, sx, gx) = Self::terms(&self.x);
        let (_, sy, gy) = Self::terms(&self.y);
        let grad = gx - gy;
        let hess = Matrix2::identity() * (sx + sy) - gx * gx.transpose() - gy * gy.transpose();
        (grad, hess)
    }
}

fn project_model(f0: &Flag) -> Result<Projection> {
    if let Some(a) = boundary_candidate(f0) {
        return Ok(Projection::Boundary(a));
    }
    let mut s = Matrix3::<f64>::identity();
    let mut s_inv = Matrix3::<f64>::identity();
    let mut state = Recentered { x: *f0.line.coords(), y: *f0.plane.coords() };
    let mut gnorm = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..PROJECT_MAX_ITER {
        state.x.normalize_mut();
        state.y.normalize_mut();
        let (grad, mut hess) = state.gradient_hessian();
        gnorm = grad.norm();
        // Far from the model frame rounding puts a floor under the gradient; accept a
        // small gradient that has stopped improving.
        if gnorm < 0.5 * best {
            best = gnorm;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if gnorm <= PROJECT_TOL || (gnorm <= STALL_TOL && stalled >= 5) {
            let block = Matrix2::new(s[(0, 0)], s[(0, 2)], s[(2, 0)], s[(2, 2)]);
            return Ok(Projection::Interior(PlanePoint::from_block(&(block * block.transpose()))));
        }
        let eig = hess.symmetric_eigenvalues();
        let floor = 1e-12 * (1.0 + hess.trace().abs());
        let lmin = eig.min();
        if lmin < floor {
            hess += Matrix2::identity() * (floor - lmin + gnorm);
        }
        let mut step = -hess
            .cholesky()
            .map(|c| c.solve(&grad))
            .unwrap_or_else(|| grad * (1.0 / (1.0 + hess.trace().abs())));
        if step.norm() > MAX_STEP {
            step *= MAX_STEP / step.norm();
        }
        let slope = grad.dot(&step);
        let mut alpha = 1.0;
        // Below this predicted decrease the objective is lost in rounding; trust the Newton step.
        while -slope > 1e-12 && alpha > 1e-12 && state.value(&(step * alpha)) > 1e-4 * alpha * slope {
            alpha *= 0.5;
        }
        let d = step * alpha;
        let t = exp_pq(d[0], d[1], 0.5);
        let t_inv = exp_pq(d[0], d[1], -0.5);
        s *= t;
        s_inv = t_inv * s_inv;
        state.x = s.transpose() * f0.line.coords();
        state.y = s_inv * f0.plane.coords();
    }
    Err(Error::Solver {
        message: "projection onto reducible plane".into(),
        last_residual: gnorm,
        iterations: PROJECT_MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag::ProjectiveCovector;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn interior(p: Projection) -> PlanePoint {
        match p {
            Projection::Interior(x) => x,
            other => panic!("expected interior, got {other:?}"),
        }
    }

    #[test]
    fn fiber_examples() {
        let f = fiber_over_interior(&PlanePoint::identity(), 0.0);
        assert!(f.approx_eq(&Flag::from_coords([1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]).unwrap(), 1e-15));
        let f = fiber_over_interior(&PlanePoint::identity(), FRAC_PI_2);
        assert!(f.approx_eq(&Flag::from_coords([0.0, 1.0, 1.0], [0.0, 1.0, -1.0]).unwrap(), 1e-15));
    }

    #[test]
    fn conic_examples() {
        assert!(conic_eval(&ProjectivePoint::new(1.0, 1.0, 0.0).unwrap()).abs() < 1e-15);
        assert!((conic_eval(&ProjectivePoint::new(1.0, 0.0, 0.0).unwrap()) - 1.0).abs() < 1e-15);
        assert!((conic_eval(&ProjectivePoint::new(0.0, 1.0, 0.0).unwrap()) + 1.0).abs() < 1e-15);
        assert!(dual_conic_eval(&ProjectiveCovector::new(-1.0, 1.0, 0.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn criticality_example() {
        let f = Flag::from_coords([1.0, 0.0, -1.0], [1.0, 0.0, 1.0]).unwrap();
        assert!((criticality_residual(&f, &PlanePoint::identity()) - 2.0).abs() < 1e-14);
        for k in 0..16 {
            let f = fiber_over_interior(&PlanePoint::identity(), k as f64 * 0.4);
            assert!(criticality_residual(&f, &PlanePoint::identity()) < 1e-15);
        }
    }

    #[test]
    fn boundary_examples() {
        let a0 = BoundaryPoint::new(0.0).unwrap();
        let f = Flag::from_coords([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert!(boundary_fiber_contains(&a0, &f));
        assert!(boundary_fiber_contains(&a0, &a0.flag()));
        assert!(!boundary_fiber_contains(&a0, &BoundaryPoint::new(FRAC_PI_2).unwrap().flag()));
        match project(&f, &ReduciblePlaneFrame::model()).unwrap() {
            Projection::Boundary(a) => assert!(a.phi().abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_angle_period() {
        let a = BoundaryPoint::new(PI + 0.3).unwrap();
        assert!((a.phi() - 0.3).abs() < 1e-15);
        assert_eq!(a.flag(), BoundaryPoint::new(0.3).unwrap().flag());
    }

    #[test]
    fn projects_identity_fiber() {
        let f = Flag::from_coords([1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]).unwrap();
        let x = interior(project(&f, &ReduciblePlaneFrame::model()).unwrap());
        assert!((x.a() - 1.0).abs() < 1e-10 && (x.b() - 1.0).abs() < 1e-10 && x.c().abs() < 1e-10);
    }

    #[test]
    fn round_trip_far_points() {
        for &(u, v) in &[(0.5, -0.2), (3.0, 1.0), (-6.0, 4.0), (0.0, 9.0)] {
            let x = PlanePoint::from_exp(u, v);
            for k in 0..32 {
                let f = fiber_over_interior(&x, k as f64 * PI / 16.0);
                let y = interior(project(&f, &ReduciblePlaneFrame::model()).unwrap());
                let (uu, vv) = y.log_coords();
                assert!((uu - u).abs() < 1e-8 && (vv - v).abs() < 1e-8, "{u} {v} -> {uu} {vv}");
            }
        }
    }

    #[test]
    fn log_coords_inverse_of_exp() {
        let x = PlanePoint::from_exp(1.3, -0.4);
        let (u, v) = x.log_coords();
        assert!((u - 1.3).abs() < 1e-12 && (v + 0.4).abs() < 1e-12);
        assert!(PlanePoint::new(x.a(), x.b(), x.c()).is_ok());
    }

    #[test]
    fn rejects_bad_points() {
        assert!(PlanePoint::new(1.0, 2.0, 0.0).is_err());
        assert!(PlanePoint::new(-1.0, -1.0, 0.0).is_err());
    }
}
