//! Small dense helpers for 3x3 real matrices.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn(m: &Matrix3<f64>, f: impl Fn(f64) -> f64) -> Matrix3<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(f));
    let v = eig.eigenvectors;
    v * d * v.transpose()
}

pub fn sym_exp(m: &Matrix3<f64>) -> Matrix3<f64> {
    sym_fn(m, f64::exp)
}

pub fn sym_eigenvalues(m: &Matrix3<f64>) -> Vector3<f64> {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues
}

/// Embeds a 2x2 block acting on coordinates 1 and 3.
pub fn embed13(b: &Matrix2<f64>) -> Matrix3<f64> {
    Matrix3::new(b[(0, 0)], 0.0, b[(0, 1)], 0.0, 1.0, 0.0, b[(1, 0)], 0.0, b[(1, 1)])
}

/// Rotation by `alpha` in the (1,3) coordinate plane.
pub fn rot13(alpha: f64) -> Matrix3<f64> {
    let (s, c) = alpha.sin_cos();
    embed13(&Matrix2::new(c, -s, s, c))
}

/// The traceless diagonal direction `diag(1,0,-1)`.
pub fn p_dir() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0)
}

/// The off-diagonal direction `E13 + E31`.
pub fn q_dir() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// `exp(alpha (u P + v Q))` in closed form.
pub fn exp_pq(u: f64, v: f64, alpha: f64) -> Matrix3<f64> {
    let r = u.hypot(v);
    let (ch, shr) = if r == 0.0 {
        (1.0, alpha)
    } else {
        ((alpha * r).cosh(), (alpha * r).sinh() / r)
    };
    Matrix3::new(ch + shr * u, 0.0, shr * v, 0.0, 1.0, 0.0, shr * v, 0.0, ch - shr * u)
}

/// Kernel direction of a rank-2 matrix, from the largest cross product of its rows.
pub fn kernel_vector(m: &Matrix3<f64>) -> Vector3<f64> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let cands = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    cands
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap()
}

/// Frobenius norm relative to `max(1, scale)`.
pub fn rel_dev(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}
