//! Coarse structure-factor maps over field direction for the three lattices.
//!
//! Prints which wavevector dominates at each grid point.

use qtcad::lattice::{LatticeKind, LatticeSpec};
use qtcad::solver::{covariance_residual, default_q, phi_grid, sweep_sq_map, theta_grid, ModelOptions, SolverOptions};

fn main() -> qtcad::Result<()> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    for kind in [LatticeKind::SquareIdeal001, LatticeKind::DimerizedRecon001, LatticeKind::Triangular111] {
        let spec = LatticeSpec::new(kind, 4, 4);
        let q = default_q(kind);
        let map = sweep_sq_map(&spec, &q, &theta_grid(4), &phi_grid(4), &ModelOptions::default(), &SolverOptions::default(), workers)?;
        println!("{kind:?} (q index of the largest S)");
        for (it, th) in map.thetas.iter().enumerate() {
            let cells: Vec<String> = (0..map.phis.len())
                .map(|ip| match &map.at(it, ip).values {
                    Some(v) => {
                        let k = (0..v.len()).max_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap();
                        format!("{k}")
                    }
                    None => "x".into(),
                })
                .collect();
            println!("  theta {th:.2}: {}", cells.join(" "));
        }
        if let Some(r) = covariance_residual(&map) {
            println!("  rotation covariance residual {r:.2e}");
        }
    }
    Ok(())
}
