//! Drives the command layer from an inline TOML config, as the `qtcad` binary does.

use qtcad::commands::{cmd_defect_spectrum, cmd_growth};
use qtcad::config::load_str;

const CONFIG: &str = r#"
seed = 1
workers = 2

[defect]
d = 1425.0
e = 151.0

[spectrum]
b_max = 300.0
points = 7

[growth]
t_sources = [2080.2, 2180.2]

[growth.params]
film_target = 200.0
"#;

fn main() -> qtcad::Result<()> {
    let cfg = load_str(CONFIG, "inline", &[])?;
    let out = std::env::temp_dir().join("qtcad-run-config");
    for outcome in [cmd_defect_spectrum(&cfg, &out.join("spectrum"))?, cmd_growth(&cfg, &out.join("growth"))?] {
        for p in &outcome.outputs {
            println!("{}", p.display());
        }
    }
    print!("{}", std::fs::read_to_string(out.join("growth/summary.csv"))?);
    Ok(())
}
