//! Vacancy and di-vacancy profiles of an 800 nm film across source temperatures.

use qtcad::process::{run_growth, summarize, GridParams, GrowthParams, KineticParams};

fn main() -> qtcad::Result<()> {
    let kp = KineticParams::default();
    let grid = GridParams::default();
    println!("{:>8} {:>9} {:>11} {:>8} {:>11} {:>7} {:>7}", "T (C)", "nm/s", "VV peak", "depth", "VV bulk", "VC/VV", "VSi/VV");
    for t in [2080.2, 2105.2, 2130.2, 2155.2, 2180.2] {
        let gp = GrowthParams { t_source: t, ..Default::default() };
        let run = run_growth(&gp, &kp, &grid)?;
        let s = summarize(&gp, &run);
        println!(
            "{t:>8.1} {:>9.1} {:>11.3e} {:>8.3} {:>11.3e} {:>7.3} {:>7.3}",
            s.rate,
            s.peak_vv,
            s.peak_depth_fraction,
            s.bulk_vv,
            s.vc_ratio(),
            s.vsi_ratio()
        );
    }
    Ok(())
}
