//! Nested multicones along an axis: nestedness estimates and the limit flag.

use barbot_anosov::multicone::{endpoint_flags, limit_flag, nest_estimate, Multicone};

fn main() -> barbot_anosov::Result<()> {
    let u = Multicone::model();
    for s in [1.0, 2.0, 3.0] {
        let est = nest_estimate(&u, &u.translated(s), 24)?;
        println!("translate by {s}: nest >= {:.4} (s/2 = {})", est.lower, s / 2.0);
    }
    let a = nest_estimate(&u, &u.translated(1.0), 24)?.lower;
    let b = nest_estimate(&u.translated(1.0), &u.translated(3.0), 24)?.lower;
    let c = nest_estimate(&u, &u.translated(3.0), 24)?.lower;
    println!("superadditivity: {c:.4} >= {a:.4} + {b:.4}");

    let chain: Vec<Multicone> = (0..5).map(|k| u.translated(k as f64)).collect();
    let f = limit_flag(&chain, 16)?;
    let forward = endpoint_flags(&u).0;
    println!("limit flag {:?}", f.line.coords().as_slice());
    println!("matches forward endpoint: {}", f.approx_eq(&forward, 1e-10));
    Ok(())
}
