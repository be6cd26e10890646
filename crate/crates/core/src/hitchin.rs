//! The scalar reduction of Hitchin's equation for the cyclic slice.
//!
//! With `u = log h1` in a conformal chart the equation reads
//! `(1/4) Lap u = |t|^2 e^u - e^{-2u}`, solved here on a periodic torus or on a disk
//! with Dirichlet data, using the five-point Laplacian and damped Newton.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_NEWTON: usize = 50;
/// Default disk radius; keeps every grid node inside the unit disk.
pub const DEFAULT_DISK_RADIUS: f64 = 0.6;

/// Values on an `nx` by `ny` grid, row-major (`values[j * nx + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {nx}x{ny} grid",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite field value {v}")));
        }
        Ok(Self { nx, ny, values })
    }

    pub fn constant(nx: usize, ny: usize, v: f64) -> Self {
        Self { nx, ny, values: vec![v; nx * ny] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { nx: self.nx, ny: self.ny, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// CSV: a `nx,ny` header line, the two sizes, then one line per grid row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        wr.write_record(["nx", "ny"])?;
        wr.write_record([self.nx.to_string(), self.ny.to_string()])?;
        for row in self.values.chunks(self.nx) {
            wr.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(r);
        let mut records = rd.records();
        let dims = records.next().ok_or_else(|| invalid("missing grid sizes"))??;
        let parse_usize = |s: &str| s.trim().parse::<usize>().map_err(|e| invalid(e.to_string()));
        let nx = parse_usize(dims.get(0).unwrap_or(""))?;
        let ny = parse_usize(dims.get(1).unwrap_or(""))?;
        let mut values = Vec::with_capacity(nx * ny);
        for rec in records {
            let rec = rec?;
            if rec.len() != nx {
                return Err(Error::ShapeMismatch(format!("row of {} values, expected {nx}", rec.len())));
            }
            for s in rec.iter() {
                values.push(s.trim().parse::<f64>().map_err(|e| invalid(e.to_string()))?);
            }
        }
        Self::new(nx, ny, values)
    }
}

/// Dirichlet data on a disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryData {
    /// Not supplied.
    Missing,
    /// `log(1 - |z|^2)`, the `t = 0` solution on the unit disk.
    Fuchsian,
    /// Values on the full grid; only nodes outside the disk are read.
    Tabulated(ScalarField),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    Torus { p1: f64, p2: f64, n: usize },
    Disk { radius: f64, n: usize, boundary: BoundaryData },
}

impl DomainSpec {
    pub fn torus(p1: f64, p2: f64, n: usize) -> Result<Self> {
        let d = Self::Torus { p1, p2, n };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(radius: f64, n: usize, boundary: BoundaryData) -> Result<Self> {
        let d = Self::Disk { radius, n, boundary };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() < 16 {
            return Err(invalid("grid resolution must be at least 16"));
        }
        match self {
            Self::Torus { p1, p2, .. } => {
                if !(*p1 > 0.0 && *p2 > 0.0 && p1.is_finite() && p2.is_finite()) {
                    return Err(invalid("torus periods must be positive"));
                }
            }
            Self::Disk { radius, boundary, n } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("disk radius must be positive"));
                }
                match boundary {
                    BoundaryData::Fuchsian if radius * std::f64::consts::SQRT_2 >= 1.0 => {
                        return Err(invalid("Fuchsian boundary data needs radius below 1/sqrt(2)"));
                    }
                    BoundaryData::Tabulated(f) if f.nx != *n || f.ny != *n => {
                        return Err(Error::ShapeMismatch("boundary data grid differs from domain".into()));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Torus { n, .. } | Self::Disk { n, .. } => *n,
        }
    }

    /// Grid spacings `(hx, hy)`.
    pub fn spacing(&self) -> (f64, f64) {
        match self {
            Self::Torus { p1, p2, n } => (p1 / *n as f64, p2 / *n as f64),
            Self::Disk { radius, n, .. } => {
                let h = 2.0 * radius / (*n - 1) as f64;
                (h, h)
            }
        }
    }

    /// Coordinates of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let (hx, hy) = self.spacing();
        match self {
            Self::Torus { .. } => (i as f64 * hx, j as f64 * hy),
            Self::Disk { radius, .. } => (-radius + i as f64 * hx, -radius + j as f64 * hy),
        }
    }

    /// Whether the equation is imposed at the node.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        match self {
            Self::Torus { .. } => true,
            Self::Disk { radius, .. } => {
                let (x, y) = self.node(i, j);
                x * x + y * y < radius * radius
            }
        }
    }

    fn check_shape(&self, f: &ScalarField) -> Result<()> {
        let n = self.n();
        if f.nx != n || f.ny != n {
            return Err(Error::ShapeMismatch(format!(
                "field is {}x{}, domain grid is {n}x{n}",
                f.nx, f.ny
            )));
        }
        Ok(())
    }

    fn neighbors(&self, i: usize, j: usize) -> [(usize, usize); 4] {
        let n = self.n();
        match self {
            Self::Torus { .. } => [
                ((i + n - 1) % n, j),
                ((i + 1) % n, j),
                (i, (j + n - 1) % n),
                (i, (j + 1) % n),
            ],
            // Interior disk nodes never touch the square's edge.
            Self::Disk { .. } => [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)],
        }
    }

    /// Five-point Laplacian at an interior node.
    fn laplacian_at(&self, v: &[f64], i: usize, j: usize) -> f64 {
        let n = self.n();
        let (hx, hy) = self.spacing();
        let [w, e, s, no] = self.neighbors(i, j);
        let c = v[j * n + i];
        (v[w.1 * n + w.0] + v[e.1 * n + e.0] - 2.0 * c) / (hx * hx)
            + (v[s.1 * n + s.0] + v[no.1 * n + no.0] - 2.0 * c) / (hy * hy)
    }

    fn interior_indices(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .filter(|&(i, j)| self.is_interior(i, j))
            .collect()
    }

    /// The `t = 0` reference solution `log(1 - |z|^2)` on the grid.
    pub fn fuchsian_profile(&self) -> Result<ScalarField> {
        let n = self.n();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let (x, y) = self.node(i, j);
                let r2 = x * x + y * y;
                if r2 >= 1.0 {
                    return Err(Error::NumericalDomain("grid leaves the unit disk".into()));
                }
                values.push((1.0 - r2).ln());
            }
        }
        ScalarField::new(n, n, values)
    }

    fn dirichlet_values(&self) -> Result<Option<ScalarField>> {
        match self {
            Self::Torus { .. } => Ok(None),
            Self::Disk { boundary, .. } => match boundary {
                BoundaryData::Missing => {
                    Err(invalid("disk solves need Dirichlet boundary data"))
                }
                BoundaryData::Fuchsian => self.fuchsian_profile().map(Some),
                BoundaryData::Tabulated(f) => Ok(Some(f.clone())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiggsSource {
    Zero,
    Constant { c: f64 },
    Monomial { c: f64, k: u32 },
    Tabulated,
}

/// `|t|^2` on the grid together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiggsDatum {
    pub t_abs2: ScalarField,
    pub source: HiggsSource,
}

impl HiggsDatum {
    pub fn zero(dom: &DomainSpec) -> Self {
        let n = dom.n();
        Self { t_abs2: ScalarField::constant(n, n, 0.0), source: HiggsSource::Zero }
    }

    /// `|t|^2 = c^2`.
    pub fn constant(dom: &DomainSpec, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(invalid("constant must be finite"));
        }
        let n = dom.n();
        Ok(Self { t_abs2: ScalarField::constant(n, n, c * c), source: HiggsSource::Constant { c } })
    }

    /// `t = c z^k` on a disk.
    pub fn monomial(dom: &DomainSpec, c: f64, k: u32) -> Result<Self> {
        if !matches!(dom, DomainSpec::Disk { .. }) {
            return Err(invalid("monomial data is defined on the disk chart"));
        }
        let n = dom.n();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let (x, y) = dom.node(i, j);
                values.push(c * c * (x * x + y * y).powi(k as i32));
            }
        }
        Ok(Self { t_abs2: ScalarField::new(n, n, values)?, source: HiggsSource::Monomial { c, k } })
    }

    pub fn tabulated(t_abs2: ScalarField) -> Result<Self> {
        if t_abs2.values.iter().any(|v| *v < 0.0) {
            return Err(invalid("|t|^2 must be nonnegative"));
        }
        Ok(Self { t_abs2, source: HiggsSource::Tabulated })
    }
}

/// `r = (1/4) Lap u - |t|^2 e^u + e^{-2u}` at equation nodes, zero elsewhere.
pub fn residual(u: &ScalarField, datum: &HiggsDatum, dom: &DomainSpec) -> Result<ScalarField> {
    dom.check_shape(u)?;
    dom.check_shape(&datum.t_abs2)?;
    let n = dom.n();
    let mut r = vec![0.0; n * n];
    for (i, j) in dom.interior_indices() {
        let k = j * n + i;
        let uk = u.values[k];
        r[k] = 0.25 * dom.laplacian_at(&u.values, i, j) - datum.t_abs2.values[k] * uk.exp()
            + (-2.0 * uk).exp();
    }
    Ok(ScalarField { nx: n, ny: n, values: r })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `(-(1/4) Lap + diag(w)) x = b` on equation nodes by Jacobi-preconditioned CG.
fn pcg(dom: &DomainSpec, idx: &[(usize, usize)], w: &[f64], b: &[f64], tol: f64) -> Vec<f64> {
    let n = dom.n();
    let (hx, hy) = dom.spacing();
    let diag_lap = 0.25 * (2.0 / (hx * hx) + 2.0 / (hy * hy));
    let apply = |x: &[f64], out: &mut [f64]| {
        for &(i, j) in idx {
            let k = j * n + i;
            out[k] = -0.25 * dom.laplacian_at(x, i, j) + w[k] * x[k];
        }
    };
    let mut x = vec![0.0; n * n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n * n];
    for &(i, j) in idx {
        let k = j * n + i;
        z[k] = r[k] / (diag_lap + w[k]);
    }
    let mut p = z.clone();
    let mut rz: f64 = idx.iter().map(|&(i, j)| r[j * n + i] * z[j * n + i]).sum();
    let mut ap = vec![0.0; n * n];
    let bnorm = l2(b);
    for _ in 0..(20 * n).max(200) {
        if l2(&r) <= tol * bnorm.max(1e-300) {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = idx.iter().map(|&(i, j)| p[j * n + i] * ap[j * n + i]).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for &(i, j) in idx {
            let k = j * n + i;
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            z[k] = r[k] / (diag_lap + w[k]);
        }
        let rz_new: f64 = idx.iter().map(|&(i, j)| r[j * n + i] * z[j * n + i]).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for &(i, j) in idx {
            let k = j * n + i;
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub residual_norm: f64,
    pub iterations: usize,
    pub beta_sup: f64,
    pub curvature_max: f64,
    pub residual_history: Vec<f64>,
    /// Maximum defect of the ratio identity `(e^{2u}/2) Lap log beta = 3 (beta^2 - 1)`
    /// at nodes whose stencil avoids the small values of `|t|`; absent when `t = 0`.
    pub ratio_identity_defect: Option<f64>,
    pub curvature_normalization: String,
}

/// Damped Newton iteration from `u0`; on the disk, nodes off the equation take the Dirichlet data.
pub fn solve(
    dom: &DomainSpec,
    datum: &HiggsDatum,
    u0: &ScalarField,
    tol: f64,
) -> Result<(ScalarField, SolveReport)> {
    solve_with(dom, datum, u0, tol, MAX_NEWTON)
}

pub fn solve_with(
    dom: &DomainSpec,
    datum: &HiggsDatum,
    u0: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, SolveReport)> {
    dom.validate()?;
    dom.check_shape(u0)?;
    dom.check_shape(&datum.t_abs2)?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if matches!(dom, DomainSpec::Torus { .. }) && datum.t_abs2.values.iter().all(|v| *v == 0.0) {
        // Integrating over the torus would force the integral of e^{-2u} to vanish.
        return Err(Error::Precondition("no solution on a torus with t = 0".into()));
    }
    let n = dom.n();
    let idx = dom.interior_indices();
    let mut u = u0.clone();
    if let Some(bd) = dom.dirichlet_values()? {
        for j in 0..n {
            for i in 0..n {
                if !dom.is_interior(i, j) {
                    u.values[j * n + i] = bd.values[j * n + i];
                }
            }
        }
    }
    let t2 = &datum.t_abs2.values;
    let mut r = residual(&u, datum, dom)?;
    let mut history = Vec::new();
    for it in 0..=max_iter {
        let rn = sup_norm(&r.values);
        history.push(rn);
        if !rn.is_finite() {
            break;
        }
        if rn <= tol {
            let report = finish_report(&u, datum, dom, rn, it, history)?;
            return Ok((u, report));
        }
        if it == max_iter {
            break;
        }
        let mut w = vec![0.0; n * n];
        for &(i, j) in &idx {
            let k = j * n + i;
            w[k] = t2[k] * u.values[k].exp() + 2.0 * (-2.0 * u.values[k]).exp();
        }
        let step = pcg(dom, &idx, &w, &r.values, (1e-3 * rn).clamp(1e-14, 1e-2));
        let merit = l2(&r.values);
        let mut alpha = 1.0;
        loop {
            let mut trial = u.clone();
            for &(i, j) in &idx {
                let k = j * n + i;
                trial.values[k] += alpha * step[k];
            }
            let rt = residual(&trial, datum, dom)?;
            let m = l2(&rt.values);
            if m.is_finite() && (m <= (1.0 - 1e-4 * alpha) * merit || alpha < 1e-10) {
                u = trial;
                r = rt;
                break;
            }
            alpha *= 0.5;
        }
    }
    Err(Error::Solver {
        message: "Newton iteration for the scalar Hitchin equation".into(),
        last_residual: *history.last().unwrap_or(&f64::NAN),
        iterations: history.len().saturating_sub(1),
    })
}

fn finish_report(
    u: &ScalarField,
    datum: &HiggsDatum,
    dom: &DomainSpec,
    rn: f64,
    iterations: usize,
    residual_history: Vec<f64>,
) -> Result<SolveReport> {
    let beta = beta_field(u, datum)?;
    let mp = max_principle_check(&beta, dom)?;
    let k = curvature_field(u, dom)?;
    let ratio = if datum.t_abs2.values.iter().any(|v| *v > 0.0) {
        ratio_identity_defect(u, datum, dom, 0.25)?
    } else {
        None
    };
    Ok(SolveReport {
        residual_norm: rn,
        iterations,
        beta_sup: mp.sup,
        curvature_max: interior_max(&k, dom),
        residual_history,
        ratio_identity_defect: ratio,
        curvature_normalization: "K = e^{2u} Lap u; the t = 0 disk solution has K = -4".into(),
    })
}

/// `|t| e^{3u/2}`.
pub fn beta_field(u: &ScalarField, datum: &HiggsDatum) -> Result<ScalarField> {
    if u.nx != datum.t_abs2.nx || u.ny != datum.t_abs2.ny {
        return Err(Error::ShapeMismatch("field and datum grids differ".into()));
    }
    let values = u
        .values
        .iter()
        .zip(&datum.t_abs2.values)
        .map(|(u, t2)| t2.sqrt() * (1.5 * u).exp())
        .collect();
    Ok(ScalarField { nx: u.nx, ny: u.ny, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub sup: f64,
    pub argmax: (usize, usize),
    pub strictly_below_one: bool,
}

pub fn max_principle_check(beta: &ScalarField, dom: &DomainSpec) -> Result<MaxPrincipleReport> {
    dom.check_shape(beta)?;
    let n = dom.n();
    let mut sup = 0.0;
    let mut argmax = (0, 0);
    for (i, j) in dom.interior_indices() {
        let v = beta.values[j * n + i];
        if v > sup {
            sup = v;
            argmax = (i, j);
        }
    }
    Ok(MaxPrincipleReport { sup, argmax, strictly_below_one: sup < 1.0 })
}

/// `K = e^{2u} Lap u` at equation nodes, zero elsewhere.
pub fn curvature_field(u: &ScalarField, dom: &DomainSpec) -> Result<ScalarField> {
    dom.check_shape(u)?;
    let n = dom.n();
    let mut k = vec![0.0; n * n];
    for (i, j) in dom.interior_indices() {
        let idx = j * n + i;
        k[idx] = (2.0 * u.values[idx]).exp() * dom.laplacian_at(&u.values, i, j);
    }
    Ok(ScalarField { nx: n, ny: n, values: k })
}

/// Largest value over equation nodes.
pub fn interior_max(f: &ScalarField, dom: &DomainSpec) -> f64 {
    let n = dom.n();
    dom.interior_indices()
        .into_iter()
        .map(|(i, j)| f.values[j * n + i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest defect of `(e^{2u}/2) Lap log beta - 3 (beta^2 - 1)` over equation nodes whose
/// whole stencil has `|t|^2 >= min_rel * max |t|^2`.
pub fn ratio_identity_defect(
    u: &ScalarField,
    datum: &HiggsDatum,
    dom: &DomainSpec,
    min_rel: f64,
) -> Result<Option<f64>> {
    let beta = beta_field(u, datum)?;
    let n = dom.n();
    let tmax = datum.t_abs2.values.iter().copied().fold(0.0, f64::max);
    if tmax <= 0.0 {
        return Ok(None);
    }
    let floor = min_rel * tmax;
    let logb: Vec<f64> = beta.values.iter().map(|b| b.max(1e-300).ln()).collect();
    let mut worst: Option<f64> = None;
    for (i, j) in dom.interior_indices() {
        let k = j * n + i;
        let stencil_ok = std::iter::once((i, j))
            .chain(dom.neighbors(i, j))
            .all(|(a, b)| datum.t_abs2.values[b * n + a] >= floor);
        if !stencil_ok {
            continue;
        }
        let lhs = 0.5 * (2.0 * u.values[k]).exp() * dom.laplacian_at(&logb, i, j);
        let b = beta.values[k];
        let d = (lhs - 3.0 * (b * b - 1.0)).abs();
        worst = Some(worst.map_or(d, |w| w.max(d)));
    }
    Ok(worst)
}

/// Complex dimension of `H^0(K^{3/2})` and the real dimension of the slice, `(2g-2, 4g-4)`.
pub fn slice_dimensions(genus: u32) -> Result<(u32, u32)> {
    if genus < 2 {
        return Err(invalid("genus must be at least 2"));
    }
    Ok((2 * genus - 2, 4 * genus - 4))
}

/// Coefficients of a Higgs field in the slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub t: Vec<Complex<f64>>,
    pub delta: Vec<Complex<f64>>,
    pub q: Vec<Complex<f64>>,
}

/// Over the reals the parameters must agree; over the complex numbers `t` may also flip sign.
pub fn gauge_equivalent(p1: &GaugeParams, p2: &GaugeParams, over_complex: bool) -> Result<bool> {
    if p1.t.len() != p2.t.len() || p1.delta.len() != p2.delta.len() || p1.q.len() != p2.q.len() {
        return Err(Error::ShapeMismatch("coefficient vectors differ in length".into()));
    }
    if p1.delta != p2.delta || p1.q != p2.q {
        return Ok(false);
    }
    if p1.t == p2.t {
        return Ok(true);
    }
    Ok(over_complex && p1.t.iter().zip(&p2.t).all(|(a, b)| *a == -*b))
}
