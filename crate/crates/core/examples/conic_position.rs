//! Limit flags of the reducible Fuchsian representation against the model conic.

use barbot_anosov::anosov::{conic_position_check, limit_flag_sample, Representation, Word};

fn main() -> barbot_anosov::Result<()> {
    let rep = Representation::reducible_fuchsian();
    for w in ["a1", "b1 a2^-1", "a1 b2 a2 b1^-1"] {
        let word: Word = w.parse()?;
        let f = limit_flag_sample(&rep, &word)?;
        println!("{w:>16}: line {:?}", f.line.coords().as_slice());
    }
    let r = conic_position_check(&rep, 1000, 0)?;
    println!(
        "{} samples: {} lines outside, {} planes crossing, margins {:.3} / {:.3}",
        r.samples, r.lines_outside, r.planes_meet_interior, r.min_line_margin, r.min_plane_margin
    );
    Ok(())
}
