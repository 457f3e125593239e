//! Photon-number distribution of the measured qubus beam and the detector
//! responses of the first few peaks, written as two-column CSV files.
//!
//!     cargo run --example fig2_data -- out/

use qubus::analysis::{fig2_data, mass_between};

pub fn run(dir: Option<&std::path::Path>) -> qubus::error::Result<()> {
    let data = fig2_data(100.0, 0.05, 20.0, 4)?;
    for pk in &data.peaks {
        println!("peak k = {}: mean {:.4}", pk.k, pk.mean);
    }
    println!("adjacent overlaps {:?}", data.adjacent_overlaps);
    let d = &data.dominant;
    println!("photon numbers above 1e-4 of the peak: {}..={} ({} values)", d.lo, d.hi, d.count);
    println!("mass on 8..=35: {:.5}", mass_between(&data.qubus_pmf, 8, 35));
    if let Some(dir) = dir {
        for f in data.write_csv(dir)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from);
    run(dir.as_deref())
}
