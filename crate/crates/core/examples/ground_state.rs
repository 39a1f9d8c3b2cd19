//! XXZ ground state of a 4x4 square cluster and its structure factors.

use qtcad::field::FieldSpec;
use qtcad::hamiltonian::{xxz_hamiltonian, XXZ_DELTA};
use qtcad::lattice::{build_lattice, LatticeKind, LatticeSpec};
use qtcad::solver::{default_q_square, ground_state, structure_factors_from_probs, SolverOptions};

fn main() -> qtcad::Result<()> {
    let sites = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 4, 4))?;
    let q = default_q_square();
    for theta in [0.0, 0.6, 1.2] {
        let h = xxz_hamiltonian(&sites, &FieldSpec::new(1.0, theta, 0.3), XXZ_DELTA);
        let gs = ground_state(&h, &SolverOptions::default())?;
        let s = structure_factors_from_probs(&gs.probabilities(), &sites, &q);
        println!("theta = {theta:.1}: E0 = {:.4} kHz, residual {:.1e}, degeneracy {}", gs.energy, gs.residual, gs.manifold.len());
        for (qk, sk) in q.iter().zip(&s) {
            println!("  S({:+.3}, {:+.3}) = {:.4}", qk.0, qk.1, sk);
        }
    }
    Ok(())
}
