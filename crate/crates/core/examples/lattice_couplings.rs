//! Surface lattices and their dipolar couplings for a field along the normal.

use qtcad::field::FieldSpec;
use qtcad::hamiltonian::{coupling_matrix, rwa_ratio};
use qtcad::lattice::{build_lattice, displacement_table, LatticeKind, LatticeSpec};

fn main() -> qtcad::Result<()> {
    let field = FieldSpec::along_z(1.0e4);
    for kind in [LatticeKind::SquareIdeal001, LatticeKind::DimerizedRecon001, LatticeKind::Triangular111] {
        let spec = LatticeSpec::new(kind, 4, 4);
        let sites = build_lattice(&spec)?;
        let table = displacement_table(&sites);
        let j = coupling_matrix(&sites, &table, &field);
        println!(
            "{kind:?}: {} sites, nearest pair {:.3} Å, max |J| {:.3} kHz, J/Zeeman {:.2e}",
            sites.len(),
            table.min_distance(),
            j.max_abs(),
            rwa_ratio(&sites, &field)
        );
    }
    Ok(())
}
