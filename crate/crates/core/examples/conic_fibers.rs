//! Conic fibers of the projection onto the model reducible plane, and the round trip
//! fiber -> project.

use barbot_anosov::plane::{
    conic_eval, criticality_residual, fiber_over_interior, project, PlanePoint, Projection,
    ReduciblePlaneFrame,
};
use std::f64::consts::PI;

fn main() -> barbot_anosov::Result<()> {
    let frame = ReduciblePlaneFrame::model();
    for (u, v) in [(0.0, 0.0), (0.7, -0.4), (2.5, 1.5)] {
        let x = PlanePoint::from_exp(u, v);
        let mut worst_crit: f64 = 0.0;
        let mut worst_trip: f64 = 0.0;
        for k in 0..32 {
            let f = fiber_over_interior(&x, 2.0 * PI * k as f64 / 32.0);
            worst_crit = worst_crit.max(criticality_residual(&f, &x));
            match project(&f, &frame)? {
                Projection::Interior(y) => {
                    let d = (y.a() - x.a()).abs().max((y.b() - x.b()).abs()).max((y.c() - x.c()).abs());
                    worst_trip = worst_trip.max(d);
                }
                Projection::Boundary(b) => println!("unexpected boundary projection {}", b.phi()),
            }
        }
        println!("point ({u}, {v}): criticality {worst_crit:.2e}, round trip {worst_trip:.2e}");
    }
    let f = fiber_over_interior(&PlanePoint::identity(), 0.3);
    println!("conic_eval on the identity fiber: {:.2e}", conic_eval(&f.line));
    Ok(())
}
