//! The pointwise nestedness certificate for the cyclic slice.
//!
//! Everything here lives in complex coordinates where the model plane is spanned by the
//! Hermitian matrices `H0 = E13 + E31` and `H0perp`. A fiber flag is encoded by the
//! rank-one nilpotent `pi(z)` and the derivative of its pointing vector under a Hermitian
//! field `X` is `M = [X,pi]pi* + pi[X,pi]* - [X,pi]*pi - pi*[X,pi]`.

use nalgebra::{Complex, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Error, Result};
use crate::linalg::sym_exp;
use crate::multicone::{boundary_chart, signed_position, Multicone, CLASSIFY_TOL, LOG_LAMBDA_MAX};
use crate::symspace::{act_on_flag, GroupElem};

pub type C64 = Complex<f64>;
pub type CMat = Matrix3<C64>;

const HERMITIAN_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn antidiagonal() -> CMat {
    let o = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    CMat::new(z, z, o, z, o, z, o, z, z)
}

/// Deviation from the real structure `J conj(M) J = M`.
pub fn real_structure_defect(m: &CMat) -> f64 {
    let j = antidiagonal();
    (j * m.map(|v| v.conj()) * j - m).norm()
}

fn hermitian_defect(m: &CMat) -> f64 {
    (m.adjoint() - m).norm()
}

/// A Hermitian matrix compatible with the real structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianMat(CMat);

impl HermitianMat {
    pub fn new(m: CMat) -> Result<Self> {
        let scale = m.norm().max(1.0);
        if hermitian_defect(&m) > HERMITIAN_TOL * scale {
            return Err(invalid("matrix is not Hermitian"));
        }
        if real_structure_defect(&m) > HERMITIAN_TOL * scale {
            return Err(invalid("matrix is not compatible with the real structure"));
        }
        Ok(Self(m))
    }

    pub fn mat(&self) -> &CMat {
        &self.0
    }
}

/// A rank-one square-zero matrix with image the point and kernel the line of a flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NilpotentFlagMat(CMat);

impl NilpotentFlagMat {
    pub fn mat(&self) -> &CMat {
        &self.0
    }

    /// Image direction `(z, sqrt 2, conj z)`.
    pub fn image(&self) -> Vector3<C64> {
        let col = self.0.column(1).into_owned();
        col / col[1] * c(SQRT_2, 0.0)
    }

    /// Kernel covector `(-conj z, sqrt 2, -z)`.
    pub fn kernel(&self) -> Vector3<C64> {
        let row = self.0.row(1).transpose();
        row / row[1] * c(SQRT_2, 0.0)
    }
}

/// The model matrices at parameters `(beta, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMatrices {
    pub h: HermitianMat,
    pub h0: HermitianMat,
    pub h0_perp: HermitianMat,
    /// `exp(d H0perp)`.
    pub ed: HermitianMat,
    /// `Ed^{-1} H Ed` in closed form; compatible with the real structure but not Hermitian.
    pub h_prime: CMat,
}

fn check_beta(beta: C64) -> Result<()> {
    if !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(invalid("beta must be finite"));
    }
    if beta.norm() >= 1.0 {
        return Err(Error::OutOfRegime(format!("|beta| = {} is not below 1", beta.norm())));
    }
    Ok(())
}

fn check_z(z: C64) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("|z| = {} is not 1", z.norm())));
    }
    Ok(())
}

pub fn h_matrix(beta: C64) -> CMat {
    let (o, b, bc) = (c(0.0, 0.0), beta, beta.conj());
    let one = c(1.0, 0.0);
    CMat::new(o, b, one, bc, o, b, one, bc, o)
}

pub fn h0_matrix() -> CMat {
    h_matrix(c(0.0, 0.0))
}

pub fn h0_perp_matrix() -> CMat {
    let o = c(0.0, 0.0);
    CMat::new(o, o, c(0.0, -1.0), o, o, o, c(0.0, 1.0), o, o)
}

fn ed_matrix(d: f64) -> CMat {
    let (ch, sh) = (d.cosh(), d.sinh());
    let o = c(0.0, 0.0);
    CMat::new(c(ch, 0.0), o, c(0.0, -sh), o, c(1.0, 0.0), o, c(0.0, sh), o, c(ch, 0.0))
}

fn h_prime_matrix(beta: C64, d: f64) -> CMat {
    let (ch, sh) = (d.cosh(), d.sinh());
    let (b, bc) = (beta, beta.conj());
    let i = c(0.0, 1.0);
    let c2 = c(ch * ch + sh * sh, 0.0);
    let diag = c(0.0, 2.0 * ch * sh);
    CMat::new(
        diag,
        b * ch + i * bc * sh,
        c2,
        bc * ch + i * b * sh,
        c(0.0, 0.0),
        b * ch - i * bc * sh,
        c2,
        bc * ch - i * b * sh,
        -diag,
    )
}

pub fn model_matrices(beta: C64, d: f64) -> Result<ModelMatrices> {
    check_beta(beta)?;
    if !d.is_finite() {
        return Err(invalid("d must be finite"));
    }
    Ok(ModelMatrices {
        h: HermitianMat::new(h_matrix(beta))?,
        h0: HermitianMat::new(h0_matrix())?,
        h0_perp: HermitianMat::new(h0_perp_matrix())?,
        ed: HermitianMat::new(ed_matrix(d))?,
        h_prime: h_prime_matrix(beta, d),
    })
}

/// `pi(z) = (1/4) [[-1, sqrt2 z, -z^2], [-sqrt2 zb, 2, -sqrt2 z], [-zb^2, sqrt2 zb, -1]]`.
pub fn projector_pi(z: C64) -> Result<NilpotentFlagMat> {
    check_z(z)?;
    Ok(NilpotentFlagMat(pi_unchecked(z)))
}

fn pi_unchecked(z: C64) -> CMat {
    let zb = z.conj();
    let s = c(SQRT_2, 0.0);
    let m1 = c(-1.0, 0.0);
    CMat::new(m1, s * z, -z * z, -s * zb, c(2.0, 0.0), -s * z, -zb * zb, s * zb, m1) * c(0.25, 0.0)
}

/// `v_f = pi pi* - pi* pi`.
pub fn pointing_vector(pi: &NilpotentFlagMat) -> HermitianMat {
    let p = pi.0;
    HermitianMat(p * p.adjoint() - p.adjoint() * p)
}

fn commutator_field(x: &CMat, p: &CMat) -> CMat {
    let k = x * p - p * x;
    let (ka, pa) = (k.adjoint(), p.adjoint());
    k * pa + p * ka - ka * p - pa * k
}

/// The fields `M1` (for `H'`) and `M2` (for `H0perp`).
pub fn commutator_fields(beta: C64, d: f64, z: C64) -> Result<(HermitianMat, HermitianMat)> {
    check_beta(beta)?;
    check_z(z)?;
    let p = pi_unchecked(z);
    let m1 = commutator_field(&h_prime_matrix(beta, d), &p);
    let m2 = commutator_field(&h0_perp_matrix(), &p);
    Ok((HermitianMat::new(m1)?, HermitianMat::new(m2)?))
}

/// The coefficient `m13`.
pub fn alpha(m: &CMat) -> C64 {
    m[(0, 2)]
}

/// Closed forms of the two coefficients.
///
/// They agree with the complex conjugates of the `m13` entries computed from
/// [`commutator_fields`], i.e. with the `m31` entries.
pub fn alpha_closed_forms(beta: C64, d: f64, z: C64) -> (C64, C64) {
    let zb = z.conj();
    let zb4 = zb.powu(4);
    let (ch, sh) = (d.cosh(), d.sinh());
    let c2 = ch * ch + sh * sh;
    let a1 = (c(3.0, 0.0) - zb4) * (c2 / 4.0) - c(0.0, SQRT_2) * beta * zb * sh;
    let a2 = (c(3.0, 0.0) + zb4) * c(0.0, 0.25);
    (a1, a2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub margin: f64,
    pub eta_value: f64,
    /// Signed pairing `Im(alpha(M1) conj(alpha(M2)))`.
    pub pairing: f64,
    /// `eta_value - (1 - |beta|)/2`.
    pub eta_slack: f64,
}

/// Margin evaluation in double-double arithmetic.
///
/// At `beta = 0` the margin vanishes identically while both of its terms grow like
/// `cosh(2d)`; in plain `f64` the cancellation leaves errors of a few ulps of `e^{2|d|}`.
mod wide {
    use super::{Margin, C64};
    use nalgebra::Complex;
    use twofloat::{consts, TwoFloat};

    pub type W = TwoFloat;
    pub type WC = Complex<W>;
    pub type WMat = [[WC; 3]; 3];

    fn w(x: f64) -> W {
        W::from(x)
    }

    fn wc(z: C64) -> WC {
        Complex::new(w(z.re), w(z.im))
    }

    fn zero() -> WC {
        Complex::new(w(0.0), w(0.0))
    }

    /// `e^{i phase}`, renormalized so that `|z| = 1` to double-double precision.
    pub fn unit(phase: f64) -> WC {
        let (c, s) = (w(phase.cos()), w(phase.sin()));
        let n = (c * c + s * s).sqrt();
        Complex::new(c / n, s / n)
    }

    pub fn unit_from(z: C64) -> WC {
        let (c, s) = (w(z.re), w(z.im));
        let n = (c * c + s * s).sqrt();
        Complex::new(c / n, s / n)
    }

    pub fn pi(z: WC) -> WMat {
        let zb = z.conj();
        let r2 = consts::SQRT_2;
        let q = w(0.25);
        let v = [z, Complex::new(r2, w(0.0)), zb];
        let k = [-zb, Complex::new(r2, w(0.0)), -z];
        let mut m = [[zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = v[i] * k[j] * q;
            }
        }
        m
    }

    pub fn h0_perp() -> WMat {
        let mut m = [[zero(); 3]; 3];
        m[0][2] = Complex::new(w(0.0), w(-1.0));
        m[2][0] = Complex::new(w(0.0), w(1.0));
        m
    }

    /// The closed form of `Ed^{-1} H Ed` with `cosh d`, `sinh d` taken as exact inputs.
    pub fn h_prime(beta: C64, ch: f64, sh: f64) -> WMat {
        let (b, bc) = (wc(beta), wc(beta.conj()));
        let (chw, shw) = (w(ch), w(sh));
        let i = Complex::new(w(0.0), w(1.0));
        let c2 = Complex::new(chw * chw + shw * shw, w(0.0));
        let diag = Complex::new(w(0.0), w(2.0) * chw * shw);
        let re = |x: W| Complex::new(x, w(0.0));
        [
            [diag, b * re(chw) + i * bc * re(shw), c2],
            [bc * re(chw) + i * b * re(shw), zero(), b * re(chw) - i * bc * re(shw)],
            [c2, bc * re(chw) - i * b * re(shw), -diag],
        ]
    }

    /// Entry `(1,3)` of `[X,p]p* + p[X,p]* - [X,p]*p - p*[X,p]`.
    pub fn alpha(x: &WMat, p: &WMat) -> WC {
        let mut k = [[zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = zero();
                for l in 0..3 {
                    acc = acc + x[i][l] * p[l][j] - p[i][l] * x[l][j];
                }
                k[i][j] = acc;
            }
        }
        let mut acc = zero();
        for j in 0..3 {
            acc = acc + k[0][j] * p[2][j].conj() + p[0][j] * k[2][j].conj()
                - k[j][0].conj() * p[j][2]
                - p[j][0].conj() * k[j][2];
        }
        acc
    }

    pub fn margin(a1: WC, a2: WC, beta: C64, ch: f64, sh: f64) -> Margin {
        let p = (a1 * a2.conj()).im;
        let babs = (w(beta.re) * w(beta.re) + w(beta.im) * w(beta.im)).sqrt();
        let (chw, shw) = (w(ch), w(sh));
        let c2 = chw * chw + shw * shw;
        let pa = p.abs();
        Margin {
            margin: (pa - c2 * (w(1.0) - babs) * w(0.5)).hi(),
            eta_value: (pa / (chw * chw)).hi(),
            pairing: p.hi(),
            eta_slack: (pa / (chw * chw) - (w(1.0) - babs) * w(0.5)).hi(),
        }
    }

    pub fn to_c64(z: WC) -> C64 {
        Complex::new(z.re.hi(), z.im.hi())
    }
}

/// Computes `Im(alpha(M1) conj(alpha(M2)))` from the commutator fields and the margin
/// `|P| - (cosh^2 d + sinh^2 d)(1 - |beta|)/2`.
pub fn certificate_margin(beta: C64, d: f64, z: C64) -> Result<Margin> {
    check_beta(beta)?;
    check_z(z)?;
    let p = wide::pi(wide::unit_from(z));
    let (ch, sh) = (d.cosh(), d.sinh());
    let a1 = wide::alpha(&wide::h_prime(beta, ch, sh), &p);
    let a2 = wide::alpha(&wide::h0_perp(), &p);
    Ok(wide::margin(a1, a2, beta, ch, sh))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertGrid {
    pub beta_moduli: Vec<f64>,
    pub beta_phases: usize,
    pub z_phases: usize,
    pub d_max: f64,
    pub d_step: f64,
}

impl Default for CertGrid {
    fn default() -> Self {
        Self::with_beta_max(0.95, 0.1, 16, 64, 5.0, 0.05).expect("default grid")
    }
}

impl CertGrid {
    /// Moduli `0, step, 2 step, ...` below `beta_max`, then `beta_max` itself.
    pub fn with_beta_max(
        beta_max: f64,
        beta_step: f64,
        beta_phases: usize,
        z_phases: usize,
        d_max: f64,
        d_step: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&beta_max) {
            return Err(Error::OutOfRegime(format!("beta_max = {beta_max} must lie in [0, 1)")));
        }
        if !(beta_step > 0.0) {
            return Err(invalid("beta step must be positive"));
        }
        let mut moduli = Vec::new();
        let mut k = 0usize;
        loop {
            let b = k as f64 * beta_step;
            if b >= beta_max - 1e-12 {
                break;
            }
            moduli.push(b);
            k += 1;
        }
        moduli.push(beta_max);
        let g = Self { beta_moduli: moduli, beta_phases, z_phases, d_max, d_step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_moduli.is_empty() || self.beta_phases == 0 || self.z_phases == 0 {
            return Err(invalid("grid must be non-empty"));
        }
        if let Some(b) = self.beta_moduli.iter().find(|b| !(0.0..1.0).contains(*b)) {
            return Err(Error::OutOfRegime(format!("beta modulus {b} is outside [0, 1)")));
        }
        if !(self.d_max >= 0.0) || !(self.d_step > 0.0) || !self.d_max.is_finite() {
            return Err(invalid("need d_max >= 0 and d_step > 0"));
        }
        Ok(())
    }

    pub fn d_values(&self) -> Vec<f64> {
        let n = (2.0 * self.d_max / self.d_step).round() as usize;
        (0..=n).map(|k| -self.d_max + k as f64 * self.d_step).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.beta_moduli.len() * self.beta_phases * self.z_phases * self.d_values().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgMin {
    pub beta_re: f64,
    pub beta_im: f64,
    pub d: f64,
    pub z_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub min_margin: f64,
    pub max_margin: f64,
    pub min_eta: f64,
    /// Minimum of `eta_value - (1 - |beta|)/2`.
    pub min_eta_slack: f64,
    pub argmin: ArgMin,
    /// Largest deviation between the closed forms and the commutator coefficients.
    pub oracle_dev: f64,
    pub pairing_min: f64,
    pub pairing_max: f64,
    pub pairing_sign_constant: bool,
    /// Maximum of `eta_value cosh^2 d / (cosh^2 d + sinh^2 d)`.
    pub eta_bound_max: f64,
    /// Maximum of `eta_value - (1 + |beta|)`.
    pub eta_upper_excess: f64,
    pub cells: usize,
    pub grid: CertGrid,
}

#[derive(Clone, Copy)]
struct Acc {
    min_margin: f64,
    argmin: ArgMin,
    max_margin: f64,
    min_eta: f64,
    min_eta_slack: f64,
    oracle_dev: f64,
    pmin: f64,
    pmax: f64,
    eta_bound_max: f64,
    eta_upper_excess: f64,
    cells: usize,
}

impl Acc {
    fn empty() -> Self {
        Self {
            min_margin: f64::INFINITY,
            argmin: ArgMin { beta_re: f64::NAN, beta_im: f64::NAN, d: f64::NAN, z_phase: f64::NAN },
            max_margin: f64::NEG_INFINITY,
            min_eta: f64::INFINITY,
            min_eta_slack: f64::INFINITY,
            oracle_dev: 0.0,
            pmin: f64::INFINITY,
            pmax: f64::NEG_INFINITY,
            eta_bound_max: f64::NEG_INFINITY,
            eta_upper_excess: f64::NEG_INFINITY,
            cells: 0,
        }
    }

    /// Ordered merge: on ties the earlier argmin wins.
    fn merge(mut self, o: Self) -> Self {
        if o.min_margin < self.min_margin {
            self.min_margin = o.min_margin;
            self.argmin = o.argmin;
        }
        self.max_margin = self.max_margin.max(o.max_margin);
        self.min_eta = self.min_eta.min(o.min_eta);
        self.min_eta_slack = self.min_eta_slack.min(o.min_eta_slack);
        self.oracle_dev = self.oracle_dev.max(o.oracle_dev);
        self.pmin = self.pmin.min(o.pmin);
        self.pmax = self.pmax.max(o.pmax);
        self.eta_bound_max = self.eta_bound_max.max(o.eta_bound_max);
        self.eta_upper_excess = self.eta_upper_excess.max(o.eta_upper_excess);
        self.cells += o.cells;
        self
    }
}

/// Evaluates the certificate over the grid.
pub fn sweep(grid: &CertGrid) -> Result<CertReport> {
    grid.validate()?;
    let ds = grid.d_values();
    let zs: Vec<(f64, C64)> = (0..grid.z_phases)
        .map(|k| {
            let ph = 2.0 * PI * k as f64 / grid.z_phases as f64;
            (ph, c(ph.cos(), ph.sin()))
        })
        .collect();
    let per_z: Vec<(wide::WMat, wide::WC)> = zs
        .iter()
        .map(|&(ph, _)| {
            let p = wide::pi(wide::unit(ph));
            let a2 = wide::alpha(&wide::h0_perp(), &p);
            (p, a2)
        })
        .collect();
    let betas: Vec<C64> = grid
        .beta_moduli
        .iter()
        .flat_map(|&r| {
            (0..grid.beta_phases).map(move |k| {
                let ph = 2.0 * PI * k as f64 / grid.beta_phases as f64;
                c(r * ph.cos(), r * ph.sin())
            })
        })
        .collect();
    let shells: Vec<Acc> = betas
        .par_iter()
        .map(|&beta| {
            let mut acc = Acc::empty();
            let babs = beta.norm();
            for &d in &ds {
                let (ch, sh) = (d.cosh(), d.sinh());
                let hp = wide::h_prime(beta, ch, sh);
                let c2 = ch * ch + sh * sh;
                for (zi, &(zph, z)) in zs.iter().enumerate() {
                    let (p, a2) = &per_z[zi];
                    let a1 = wide::alpha(&hp, p);
                    let m = wide::margin(a1, *a2, beta, ch, sh);
                    let (c1, c2f) = alpha_closed_forms(beta, d, z);
                    let (a1, a2) = (wide::to_c64(a1), wide::to_c64(*a2));
                    let dev = ((c1 - a1.conj()).norm() / c2.max(1.0)).max((c2f - a2.conj()).norm());
                    let cell = Acc {
                        min_margin: m.margin,
                        argmin: ArgMin { beta_re: beta.re, beta_im: beta.im, d, z_phase: zph },
                        max_margin: m.margin,
                        min_eta: m.eta_value,
                        min_eta_slack: m.eta_slack,
                        oracle_dev: dev,
                        pmin: m.pairing,
                        pmax: m.pairing,
                        eta_bound_max: m.eta_value * ch * ch / c2,
                        eta_upper_excess: m.eta_value - (1.0 + babs),
                        cells: 1,
                    };
                    acc = acc.merge(cell);
                }
            }
            acc
        })
        .collect();
    let acc = shells.into_iter().fold(Acc::empty(), Acc::merge);
    Ok(CertReport {
        min_margin: acc.min_margin,
        max_margin: acc.max_margin,
        min_eta: acc.min_eta,
        min_eta_slack: acc.min_eta_slack,
        argmin: acc.argmin,
        oracle_dev: acc.oracle_dev,
        pairing_min: acc.pmin,
        pairing_max: acc.pmax,
        pairing_sign_constant: acc.pmin > 0.0 || acc.pmax < 0.0,
        eta_bound_max: acc.eta_bound_max,
        eta_upper_excess: acc.eta_upper_excess,
        cells: acc.cells,
        grid: grid.clone(),
    })
}

/// Unitary change of frame `z = C x` taking real coordinates to the complex ones.
pub fn frame_matrix() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let o = c(0.0, 0.0);
    CMat::new(c(s, 0.0), o, c(0.0, s), o, c(1.0, 0.0), o, c(s, 0.0), o, c(0.0, -s))
}

/// `C^{-1} M C`, required to be real.
pub fn to_real(m: &CMat) -> Result<Matrix3<f64>> {
    let cm = frame_matrix();
    let r = cm.adjoint() * m * cm;
    let imag = r.map(|v| v.im.abs()).max();
    if imag > 1e-12 * m.norm().max(1.0) {
        return Err(Error::NumericalDomain(format!("matrix is not real in this frame ({imag:e})")));
    }
    Ok(r.map(|v| v.re))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub beta_re: f64,
    pub beta_im: f64,
    pub t_step: f64,
    pub samples: usize,
    pub inside: usize,
    pub boundary: usize,
    pub outside: usize,
    pub min_displacement: f64,
    /// Chart parameters `(theta, lambda)` of the sample attaining `min_displacement`.
    pub worst_sample: (f64, f64),
}

/// Flows sampled boundary flags of the model multicone by the transvection generated by
/// `H(beta)` and classifies the images.
pub fn pushforward_check(beta: C64, t_step: f64, n_samples: usize) -> Result<PushforwardReport> {
    check_beta(beta)?;
    if !(t_step >= 0.0) || !t_step.is_finite() {
        return Err(invalid("t_step must be a finite nonnegative number"));
    }
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let h_real = to_real(&h_matrix(beta))?;
    let g = GroupElem::from_trusted(sym_exp(&(h_real * (0.5 * t_step))));
    let u = Multicone::model();
    let n_lambda = 16usize.min(n_samples);
    let n_theta = n_samples.div_ceil(n_lambda);
    let params: Vec<(f64, f64)> = (0..n_samples)
        .map(|k| {
            let (i, j) = (k / n_lambda, k % n_lambda);
            let theta = 2.0 * PI * (i as f64 + 0.5) / n_theta as f64;
            let ll = if n_lambda == 1 {
                0.0
            } else {
                -LOG_LAMBDA_MAX + 2.0 * LOG_LAMBDA_MAX * j as f64 / (n_lambda - 1) as f64
            };
            (theta, ll.exp())
        })
        .collect();
    let values: Vec<f64> = params
        .par_iter()
        .map(|&(theta, lam)| {
            let f = boundary_chart(&u, theta, lam)?;
            signed_position(&u, &act_on_flag(&g, &f)?)
        })
        .collect::<Result<_>>()?;
    let worst = (0..n_samples).min_by(|a, b| values[*a].total_cmp(&values[*b])).unwrap();
    let inside = values.iter().filter(|v| **v > CLASSIFY_TOL).count();
    let outside = values.iter().filter(|v| **v < -CLASSIFY_TOL).count();
    Ok(PushforwardReport {
        beta_re: beta.re,
        beta_im: beta.im,
        t_step,
        samples: n_samples,
        inside,
        boundary: n_samples - inside - outside,
        outside,
        min_displacement: values[worst],
        worst_sample: params[worst],
    })
}
