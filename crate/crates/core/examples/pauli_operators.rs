//! Building spin operators as Pauli sums and compiling them to sparse matrices.

use qtcad::field::FieldSpec;
use qtcad::hamiltonian::{defect_coupled_hamiltonian, drive_operator, magnetization_commutator, xxz_hamiltonian, XXZ_DELTA};
use qtcad::defect::HyperfineRow;
use qtcad::lattice::{build_lattice, LatticeKind, LatticeSpec};
use qtcad::pauli::{Axis, PauliString, PauliSum};

fn main() -> qtcad::Result<()> {
    let x0 = PauliString::single(Axis::X, 0);
    let y0 = PauliString::single(Axis::Y, 0);
    let (phase, z) = x0.mul(&y0);
    println!("X0 Y0 = {phase} * (weight {} string), commute: {}", z.weight(), x0.commutes(&y0));

    let mut h = PauliSum::new(2);
    h.add_pair(Axis::Z, 0, Axis::Z, 1, 1.0);
    h.add_single(Axis::X, 0, 0.5);
    let m = h.to_csr();
    println!("2-qubit H: {} terms, {} stored entries, ||H||_inf = {}", h.len(), m.nnz(), m.norm_inf());

    let sites = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 3, 3))?;
    let xxz = xxz_hamiltonian(&sites, &FieldSpec::along_z(1.0), XXZ_DELTA);
    let csr = xxz.to_csr();
    println!(
        "3x3 XXZ: {} terms, dim {}, nnz {}, conserves sz: {}, [H, Sz] = {:.1e}",
        xxz.len(),
        csr.nrows(),
        csr.nnz(),
        xxz.conserves_magnetization(),
        magnetization_commutator(&csr, sites.len())
    );
    let (sector, basis) = xxz.to_csr_sector(4)?;
    println!("  four-down block: dim {} ({} basis states)", sector.nrows(), basis.len());

    let hf = vec![HyperfineRow { zz: -10.0, zx: 3.0, zy: 0.0 }; sites.len()];
    let full = defect_coupled_hamiltonian(&xxz, 20.0, &hf)?;
    let drive = drive_operator(sites.len(), full.n);
    println!("with defect: {} qubits, {} terms; drive has {} terms", full.n, full.len(), drive.len());
    Ok(())
}
