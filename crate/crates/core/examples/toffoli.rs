//! Toffoli truth table in both coupling layouts.
//!
//!     cargo run --example toffoli

use qubus::gates::{CPath3Layout, GateParams};
use qubus::pipelines::toffoli;
use qubus::program::{parse_state_spec, register_state};

pub fn run() -> qubus::error::Result<()> {
    let p = GateParams::default();
    for layout in [CPath3Layout::SplitRail, CPath3Layout::WholeRail] {
        println!("{layout:?}");
        for k in 0..8 {
            let spec: String = (0..3).map(|b| if k >> (2 - b) & 1 == 1 { 'V' } else { 'H' }).collect();
            let (s, ids) = register_state(&parse_state_spec(&spec, 3)?)?;
            let run = toffoli(&s, &ids[..2], ids[2], layout, &p)?;
            let out = run.state.polarization_amplitudes(&ids)?;
            let j = (0..8).max_by(|&x, &y| out[x].norm().total_cmp(&out[y].norm())).unwrap();
            let label: String = (0..3).map(|b| if j >> (2 - b) & 1 == 1 { 'V' } else { 'H' }).collect();
            println!("  {spec} -> {label}  (couplings {})", run.report.resources.xpm_couplings);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
