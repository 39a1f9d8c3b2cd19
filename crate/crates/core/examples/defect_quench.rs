//! Quench of a 3x3 cluster with a defect spin beneath its centre, for several depths.
//!
//! Every depth runs the same protocol, truncated at the coupling scale of the
//! shallowest defect. Takes a few minutes in release mode.

use qtcad::dynamics::{coupling_scale, defect_hyperfine, quench_protocol, quench_with_hyperfine, ProtocolParams, QuenchOptions};
use qtcad::constants::GAMMA_E;
use qtcad::field::FieldSpec;
use qtcad::lattice::{build_lattice, LatticeKind, LatticeSpec};
use qtcad::solver::default_q_square;

fn main() -> qtcad::Result<()> {
    let spec = LatticeSpec::new(LatticeKind::SquareIdeal001, 3, 3);
    let sites = build_lattice(&spec)?;
    let field = FieldSpec::along_z(1.0);
    let q = default_q_square();
    let depths = [1.2, 2.0, 3.8, 5.6];
    let omega_vv = 20.0;

    let cap = depths
        .iter()
        .map(|d| defect_hyperfine(&sites, *d, GAMMA_E).map(|hf| coupling_scale(&sites, &field, &hf)))
        .collect::<qtcad::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let p = ProtocolParams::paper().truncated(50.0 * cap);
    let opts = QuenchOptions::default();

    let base = quench_protocol(&spec, &field, &p, &q, &opts)?;
    println!("no defect: {:?}", base.final_sq.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
    for d in depths {
        let hf = defect_hyperfine(&sites, d, GAMMA_E)?;
        let r = quench_with_hyperfine(&spec, &field, &p, &q, omega_vv, &hf, &opts)?;
        let dev = r.final_sq.iter().zip(&base.final_sq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "d = {d} nm: max |dS| {dev:.4}, <sz> defect {:+.3}, S(0,0) {:.4}",
            r.defect_sz.unwrap(),
            r.final_sq[1]
        );
    }
    Ok(())
}
