//! Flags, the flag action, and Busemann functions along a geodesic.

use barbot_anosov::flag::{is_transverse, thickening_contains, Flag};
use barbot_anosov::symspace::{
    act_on_flag, act_on_point, busemann, geodesic, GroupElem, SpdPoint, TangentDir,
};
use nalgebra::{Matrix3, Vector3};

fn main() -> barbot_anosov::Result<()> {
    let f = Flag::from_coords([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])?;
    let g = Flag::from_coords([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])?;
    println!("transverse: {}", is_transverse(&f, &g));
    println!("g in thickening of f: {}", thickening_contains(&f, &g));

    // Along diag(e^{-2t}, 1, e^{2t}) the Busemann function of f decreases like -4t.
    let o = SpdPoint::identity();
    let v = TangentDir::new(Matrix3::from_diagonal(&Vector3::new(-2.0, 0.0, 2.0)))?;
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let x = geodesic(&o, &v, t);
        println!("t = {t:3}: busemann = {:+.6}", busemann(&f, &o, &x)?);
    }

    let h = GroupElem::new(Matrix3::new(1.0, 0.3, 0.0, 0.0, 1.0, -0.2, 0.0, 0.0, 1.0))?;
    let x = geodesic(&o, &v, 1.0);
    let moved = busemann(&act_on_flag(&h, &f)?, &act_on_point(&h, &o), &act_on_point(&h, &x))?;
    println!("equivariance defect: {:.3e}", (moved - busemann(&f, &o, &x)?).abs());
    Ok(())
}
