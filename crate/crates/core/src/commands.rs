//! The four analyses behind the command-line tool. Each writes CSV files and a
//! manifest into an output directory and reports per-item failures.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::config::{to_q, RunConfig};
use crate::defect::{mixing_coefficients, zfs_spectrum_sweep, HyperfineRow};
use crate::dynamics::{coupling_scale, defect_hyperfine, quench_protocol, quench_with_hyperfine, ProtocolParams, QuenchResult};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::lattice::build_lattice;
use crate::output::{fmt, write_csv, Manifest};
use crate::process::{run_growth, summarize, GrowthRun};
use crate::solver::{default_q, phi_grid, sweep_sq_map, theta_grid};

#[derive(Debug, Clone, Default)]
pub struct CommandOutcome {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Grid points or runs that failed.
    pub failures: usize,
}

fn missing(section: &str, command: &str) -> Error {
    Error::Config(format!("[{section}] is required by {command}"))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| Error::Config(e.to_string()))
}

fn finish(command: &str, cfg: &RunConfig, out: &Path, mut outcome: CommandOutcome, details: serde_json::Value) -> Result<CommandOutcome> {
    let mut m = Manifest::new(command, cfg);
    m.outputs = outcome.outputs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    m.warnings = outcome.warnings.clone();
    m.details = details;
    outcome.outputs.push(m.write(out)?);
    Ok(outcome)
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Defect levels and excited-state mixing over the configured field range.
pub fn cmd_defect_spectrum(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    let p = cfg.defect.unwrap_or_default();
    p.validate()?;
    let sc = cfg.spectrum.clone().unwrap_or_default();
    fs::create_dir_all(out)?;
    let b = sc.b_values();
    let rows: Vec<Vec<String>> = zfs_spectrum_sweep(&p, &b, sc.direction)
        .into_iter()
        .map(|r| {
            let mix = mixing_coefficients(&p, &FieldSpec::from_vector(r.b, sc.direction)).ok();
            let mut row = vec![fmt(r.b)];
            row.extend(r.energies.iter().map(|e| fmt(*e)));
            row.push(mix.map_or(String::new(), |m| fmt(m.a)));
            row.push(mix.map_or(String::new(), |m| fmt(m.b)));
            row
        })
        .collect();
    let path = out.join("spectrum.csv");
    write_csv(&path, &header(&["b_gauss", "e0_mhz", "e1_mhz", "e2_mhz", "mix_a", "mix_b"]), &rows)?;
    let outcome = CommandOutcome { outputs: vec![path], ..Default::default() };
    finish("defect-spectrum", cfg, out, outcome, json!({ "rows": rows.len() }))
}

/// Ground-state structure-factor map over the (θ, φ) grid.
pub fn cmd_sq_map(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    let spec = cfg.lattice.clone().ok_or_else(|| missing("lattice", "sq-map"))?;
    let mc = cfg.map.clone().unwrap_or_default();
    let q = mc.q.as_deref().map(to_q).unwrap_or_else(|| default_q(spec.kind));
    let map = sweep_sq_map(
        &spec,
        &q,
        &theta_grid(mc.theta_points),
        &phi_grid(mc.phi_points),
        &cfg.model(),
        &cfg.solver.options(cfg.seed),
        cfg.workers,
    )?;
    fs::create_dir_all(out)?;
    let mut head = header(&["theta", "phi", "energy_khz", "degeneracy"]);
    head.extend((0..q.len()).map(|k| format!("s_q{k}")));
    head.push("status".into());
    let mut outcome = CommandOutcome::default();
    let rows: Vec<Vec<String>> = map
        .points
        .iter()
        .map(|p| {
            let mut row = vec![fmt(p.theta), fmt(p.phi), fmt(p.energy), p.degeneracy.to_string()];
            match &p.values {
                Some(v) => {
                    row.extend(v.iter().map(|x| fmt(*x)));
                    row.push("ok".into());
                }
                None => {
                    row.extend(q.iter().map(|_| String::new()));
                    row.push("failed".into());
                    outcome.failures += 1;
                    outcome.warnings.push(format!(
                        "theta={} phi={}: {}",
                        fmt(p.theta),
                        fmt(p.phi),
                        p.error.as_deref().unwrap_or("unknown")
                    ));
                }
            }
            row
        })
        .collect();
    let path = out.join("sq_map.csv");
    write_csv(&path, &head, &rows)?;
    outcome.outputs.push(path);
    finish("sq-map", cfg, out, outcome, json!({ "q": q, "points": rows.len() }))
}

struct QuenchJob {
    theta: f64,
    phi: f64,
    result: Result<QuenchResult>,
}

/// Quench runs, with or without the defect, for each configured field direction.
pub fn cmd_quench(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    let spec = cfg.lattice.clone().ok_or_else(|| missing("lattice", "quench"))?;
    let qc = cfg.quench.clone().unwrap_or_default();
    let base = cfg.protocol.unwrap_or_else(ProtocolParams::paper);
    base.validate()?;
    let sites = build_lattice(&spec)?;
    let q = qc.q.as_deref().map(to_q).unwrap_or_else(|| default_q(spec.kind));
    let directions: Vec<[f64; 2]> = qc.directions.clone().unwrap_or_else(|| {
        let f = cfg.field.unwrap_or(FieldSpec::along_z(1.0));
        vec![[f.theta, f.phi]]
    });
    let hf: Option<Vec<HyperfineRow>> = match &qc.defect {
        Some(d) if d.zero_hyperfine => Some(vec![HyperfineRow::zero(); sites.len()]),
        Some(d) => Some(defect_hyperfine(&sites, d.depth_nm, cfg.defect.unwrap_or_default().gamma_e)?),
        None => None,
    };
    let opts = qc.options();
    let jobs: Vec<QuenchJob> = pool(cfg.workers)?.install(|| {
        directions
            .par_iter()
            .map(|d| {
                let field = FieldSpec::new(1.0, d[0], d[1]);
                let scale = qc.scale.unwrap_or_else(|| coupling_scale(&sites, &field, hf.as_deref().unwrap_or(&[])));
                let p = qc.scaling.apply(&base, scale);
                let result = match (&hf, &qc.defect) {
                    (Some(rows), Some(def)) => quench_with_hyperfine(&spec, &field, &p, &q, def.omega_vv, rows, &opts),
                    _ => quench_protocol(&spec, &field, &p, &q, &opts),
                };
                QuenchJob { theta: d[0], phi: d[1], result }
            })
            .collect()
    });

    fs::create_dir_all(out)?;
    let with_defect = qc.defect.is_some();
    let mut outcome = CommandOutcome::default();
    let mut final_rows = Vec::new();
    let mut protocols = Vec::new();
    for (k, job) in jobs.iter().enumerate() {
        let mut row = vec![fmt(job.theta), fmt(job.phi)];
        match &job.result {
            Ok(r) => {
                let mut head = header(&["t_ms"]);
                head.extend((0..q.len()).map(|i| format!("s_q{i}")));
                if with_defect {
                    head.push("defect_sz".into());
                }
                head.extend(header(&["norm", "energy_khz"]));
                let tr = &r.trajectory;
                let rows: Vec<Vec<String>> = (0..tr.times.len())
                    .map(|i| {
                        let mut row = vec![fmt(tr.times[i])];
                        row.extend(tr.observables[i].iter().map(|x| fmt(*x)));
                        row.push(fmt(tr.norms[i]));
                        row.push(fmt(tr.energies[i]));
                        row
                    })
                    .collect();
                let path = out.join(format!("trajectory_{k}.csv"));
                write_csv(&path, &head, &rows)?;
                outcome.outputs.push(path);
                row.extend(r.final_sq.iter().map(|x| fmt(*x)));
                if with_defect {
                    row.push(r.defect_sz.map_or(String::new(), fmt));
                }
                row.push(fmt(tr.max_norm_drift()));
                row.push("ok".into());
                protocols.push(json!({ "theta": job.theta, "phi": job.phi, "protocol": r.protocol,
                    "steps": tr.steps, "rejected": tr.rejected }));
            }
            Err(e) => {
                row.extend(q.iter().map(|_| String::new()));
                if with_defect {
                    row.push(String::new());
                }
                row.push(String::new());
                row.push("failed".into());
                outcome.failures += 1;
                outcome.warnings.push(format!("theta={} phi={}: {e}", fmt(job.theta), fmt(job.phi)));
            }
        }
        final_rows.push(row);
    }
    let mut head = header(&["theta", "phi"]);
    head.extend((0..q.len()).map(|i| format!("s_q{i}")));
    if with_defect {
        head.push("defect_sz".into());
    }
    head.extend(header(&["norm_drift", "status"]));
    let path = out.join("final_sq.csv");
    write_csv(&path, &head, &final_rows)?;
    outcome.outputs.push(path);
    finish("quench", cfg, out, outcome, json!({ "q": q, "runs": protocols }))
}

/// Growth runs across the configured source temperatures.
pub fn cmd_growth(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    let gc = cfg.growth.clone().ok_or_else(|| missing("growth", "growth"))?;
    let temps = if gc.t_sources.is_empty() { vec![gc.params.t_source] } else { gc.t_sources.clone() };
    let runs: Vec<(f64, Result<GrowthRun>)> = pool(cfg.workers)?.install(|| {
        temps
            .par_iter()
            .map(|t| {
                let gp = crate::process::GrowthParams { t_source: *t, ..gc.params.clone() };
                (*t, run_growth(&gp, &gc.kinetics, &gc.grid))
            })
            .collect()
    });

    fs::create_dir_all(out)?;
    let mut outcome = CommandOutcome::default();
    let mut summary = Vec::new();
    for (k, (t, run)) in runs.iter().enumerate() {
        match run {
            Ok(run) => {
                if run.extrapolated {
                    outcome.warnings.push(format!("t_source {t} lies outside the rate table; extrapolated"));
                }
                let gp = crate::process::GrowthParams { t_source: *t, ..gc.params.clone() };
                let s = summarize(&gp, run);
                let profile = |state: &crate::process::ProfileState, with_t: bool| -> Vec<Vec<String>> {
                    (0..state.z.len())
                        .map(|i| {
                            let mut row = if with_t { vec![fmt(state.t)] } else { Vec::new() };
                            row.extend([state.z[i], state.phi[i], state.c_vc[i], state.c_vsi[i], state.c_vv[i]].map(fmt));
                            row
                        })
                        .collect()
                };
                let cols = ["z_nm", "phi", "c_vc", "c_vsi", "c_vv"];
                let path = out.join(format!("profile_{k}.csv"));
                write_csv(&path, &header(&cols), &profile(&run.final_state, false))?;
                outcome.outputs.push(path);
                if run.snapshots.len() > 2 {
                    let mut head = header(&["t_s"]);
                    head.extend(header(&cols));
                    let rows: Vec<Vec<String>> = run.snapshots.iter().flat_map(|s| profile(s, true)).collect();
                    let path = out.join(format!("snapshots_{k}.csv"));
                    write_csv(&path, &head, &rows)?;
                    outcome.outputs.push(path);
                }
                summary.push(vec![
                    fmt(*t),
                    fmt(s.rate),
                    fmt(s.peak_vv),
                    fmt(s.z_peak),
                    fmt(s.peak_depth_fraction),
                    fmt(s.bulk_vv),
                    fmt(s.peak_vc),
                    fmt(s.peak_vsi),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                outcome.failures += 1;
                outcome.warnings.push(format!("t_source {t}: {e}"));
                let mut row = vec![fmt(*t)];
                row.extend((0..7).map(|_| String::new()));
                row.push("failed".into());
                summary.push(row);
            }
        }
    }
    let head = header(&["t_source_c", "rate_nm_s", "peak_vv", "z_peak_nm", "peak_depth_fraction", "bulk_vv", "peak_vc", "peak_vsi", "status"]);
    let path = out.join("summary.csv");
    write_csv(&path, &head, &summary)?;
    outcome.outputs.push(path);
    finish("growth", cfg, out, outcome, json!({ "runs": temps.len() }))
}
