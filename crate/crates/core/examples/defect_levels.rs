//! Spin-1 defect levels: zero field, a Zeeman sweep along the axis, and the
//! mixing of the excited level at 300 G.

use qtcad::defect::{mixing_coefficients, zfs_eigen, zfs_spectrum_sweep, DefectParams};
use qtcad::field::FieldSpec;

fn main() -> qtcad::Result<()> {
    let p = DefectParams::new(1425.0, 151.0);
    p.validate()?;

    let (e0, _) = zfs_eigen(&p, &FieldSpec::along_z(0.0));
    println!("B = 0: {:.3} {:.3} {:.3} MHz", e0[0], e0[1], e0[2]);

    let b: Vec<f64> = (0..=10).map(|k| 50.0 * k as f64).collect();
    println!("{:>8} {:>12} {:>12} {:>12}", "B (G)", "E0", "E1", "E2");
    for row in zfs_spectrum_sweep(&p, &b, [0.0, 0.0, 1.0]) {
        println!("{:>8.1} {:>12.4} {:>12.4} {:>12.4}", row.b, row.energies[0], row.energies[1], row.energies[2]);
    }

    let m = mixing_coefficients(&p, &FieldSpec::along_z(300.0))?;
    println!("300 G: a = {:.6}, b = {:.6}", m.a, m.b);
    Ok(())
}
