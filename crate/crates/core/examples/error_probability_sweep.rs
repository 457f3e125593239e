//! Detection error probability of the QND module: closed form against the
//! photon-number sum, over a grid of qubus angles.
//!
//!     cargo run --example error_probability_sweep

use qubus::analysis::{run_sweep, write_sweep_csv, Quantity, SweepSpec};

pub fn run() -> qubus::error::Result<()> {
    let thetas = vec![0.02, 0.03, 0.05, 0.07, 0.1];
    let mut rows = Vec::new();
    for q in [Quantity::PeFormula, Quantity::PeDirect] {
        let mut spec = SweepSpec::new(q);
        spec.base.eta = 0.9;
        spec.grid.theta = Some(thetas.clone());
        rows.push(run_sweep(&spec)?);
    }
    println!("{:>6} {:>9} {:>13} {:>13}", "theta", "|beta|^2", "formula", "direct");
    for (f, d) in rows[0].iter().zip(&rows[1]) {
        println!(
            "{:>6} {:>9.3} {:>13.4e} {:>13.4e}",
            f.point.theta,
            f.point.effective_beta_sq(),
            f.values[0],
            d.values[0]
        );
    }
    println!();
    write_sweep_csv(std::io::stdout().lock(), &rows[1])?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
