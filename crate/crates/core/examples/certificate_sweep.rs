//! Certificate margin sweep. Pass `full` for the default grid; otherwise a coarse grid.

use barbot_anosov::certificate::{certificate_margin, sweep, CertGrid, C64};

fn main() -> barbot_anosov::Result<()> {
    let grid = if std::env::args().any(|a| a == "full") {
        CertGrid::default()
    } else {
        CertGrid::with_beta_max(0.95, 0.25, 4, 16, 5.0, 0.5)?
    };
    let r = sweep(&grid)?;
    println!("cells            {}", r.cells);
    println!("min margin       {:.3e}", r.min_margin);
    println!("min eta slack    {:.3e}", r.min_eta_slack);
    println!("oracle deviation {:.3e}", r.oracle_dev);
    println!("argmin           {:?}", r.argmin);

    let m = certificate_margin(C64::new(0.0, 0.0), 1.3, C64::from_polar(1.0, 0.4))?;
    println!("at beta = 0: margin {:.3e}, eta {:.6}", m.margin, m.eta_value);
    Ok(())
}
