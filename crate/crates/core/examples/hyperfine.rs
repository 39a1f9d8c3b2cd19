//! Hyperfine couplings between a defect spin and the protons of a 3x3 cluster.

use qtcad::constants::GAMMA_E;
use qtcad::dynamics::defect_hyperfine;
use qtcad::lattice::{build_lattice, LatticeKind, LatticeSpec};

fn main() -> qtcad::Result<()> {
    let sites = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 3, 3))?;
    for depth in [1.2, 2.0, 3.8, 5.6] {
        let rows = defect_hyperfine(&sites, depth, GAMMA_E)?;
        let centre = rows[4];
        let strongest = rows.iter().map(|r| r.magnitude()).fold(0.0, f64::max);
        println!(
            "d = {depth} nm: centre A_zz {:+.3} kHz (A_zx {:+.3}), strongest |A| {strongest:.3} kHz",
            centre.zz, centre.zx
        );
    }
    Ok(())
}
