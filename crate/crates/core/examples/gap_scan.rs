//! Gap scans of the reducible and irreducible Fuchsian representations and a twisted one.

use barbot_anosov::anosov::{barbot_twist, gap_scan, octagon_fuchsian, Representation};

fn main() -> barbot_anosov::Result<()> {
    let reps = [
        Representation::reducible_fuchsian(),
        Representation::irreducible_fuchsian(),
        barbot_twist(&octagon_fuchsian(), [0.8, -0.3, 0.5, 0.1])?,
    ];
    for rep in &reps {
        let scan = gap_scan(rep, 5, 100_000, 0)?;
        println!("{} (relation residual {:.1e})", rep.family, rep.relation_residual());
        for s in &scan.per_length {
            println!(
                "  length {}: {:6} words, min sg12 {:.4}, min lg12 {:.4}",
                s.length, s.count, s.min_sg12, s.min_lg12
            );
        }
        println!("  fit: A = {:.4}, B = {:.4}", scan.slope_a.unwrap(), scan.offset_b.unwrap());
    }
    Ok(())
}
