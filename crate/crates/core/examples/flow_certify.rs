//! Boundary flags of the model multicone pushed by the flow, and nesting of flowed cones.

use barbot_anosov::anosov::flow_nesting_certify;
use barbot_anosov::certificate::{pushforward_check, C64};

fn main() -> barbot_anosov::Result<()> {
    for b in [0.0, 0.5, 0.9] {
        let r = pushforward_check(C64::new(b, 0.0), 1e-3, 512)?;
        println!(
            "beta {b}: {}/{} inside, min displacement {:.3e}",
            r.inside, r.samples, r.min_displacement
        );
    }
    let rep = flow_nesting_certify(0.0, &[0.1, 0.5, 1.0, 2.0], 1000)?;
    for s in &rep.steps {
        println!("t = {}: nested {}, estimate {:?}", s.t, s.nested, s.estimate);
    }
    Ok(())
}
