//! Scalar Hitchin equation: the constant torus solution, the disk reference solution
//! with its convergence order, and a disk solve with a vanishing t.

use barbot_anosov::hitchin::{
    solve, BoundaryData, DomainSpec, HiggsDatum, ScalarField, DEFAULT_DISK_RADIUS, DEFAULT_TOL,
};

fn main() -> barbot_anosov::Result<()> {
    for c in [0.5f64, 1.0, 2.0] {
        let dom = DomainSpec::torus(1.0, 1.0, 32)?;
        let u0 = ScalarField::constant(32, 32, 0.0);
        let (u, rep) = solve(&dom, &HiggsDatum::constant(&dom, c)?, &u0, DEFAULT_TOL)?;
        let exact = -(2.0 / 3.0) * c.ln();
        let err = u.values.iter().fold(0.0f64, |m, v| m.max((v - exact).abs()));
        println!("torus c = {c}: {} Newton steps, error {err:.2e}", rep.iterations);
    }

    let mut prev: Option<f64> = None;
    for n in [32, 64, 128] {
        let dom = DomainSpec::disk(DEFAULT_DISK_RADIUS, n, BoundaryData::Fuchsian)?;
        let exact = dom.fuchsian_profile()?;
        let (u, rep) = solve(&dom, &HiggsDatum::zero(&dom), &ScalarField::constant(n, n, 0.0), DEFAULT_TOL)?;
        let err = u.values.iter().zip(&exact.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let order = prev.map(|p| (p / err).log2());
        println!("disk N = {n}: error {err:.3e}, order {order:?}, max curvature {:.4}", rep.curvature_max);
        prev = Some(err);
    }

    let dom = DomainSpec::disk(DEFAULT_DISK_RADIUS, 64, BoundaryData::Fuchsian)?;
    let datum = HiggsDatum::monomial(&dom, 1.0, 1)?;
    let (_, rep) = solve(&dom, &datum, &dom.fuchsian_profile()?, DEFAULT_TOL)?;
    println!(
        "disk t = z: beta sup {:.4}, max curvature {:.4}, ratio identity defect {:?}",
        rep.beta_sup, rep.curvature_max, rep.ratio_identity_defect
    );
    Ok(())
}
