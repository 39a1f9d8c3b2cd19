//! Run configuration: TOML file, environment overrides, `--set` overrides.
//!
//! Every section is optional; a command reports the sections it needs.
//! Validation messages carry the file line of the offending key when it came from the file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::defect::DefectParams;
use crate::dynamics::{EvolveOptions, ProtocolParams, ProtocolScaling, QuenchOptions};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::hamiltonian::XXZ_DELTA;
use crate::lanczos::LanczosOptions;
use crate::lattice::{LatticeSpec, Vec3};
use crate::process::{GridParams, GrowthParams, KineticParams};
use crate::solver::{ModelOptions, SolverOptions, Q};

/// Prefix of environment overrides; `QTCAD_LATTICE__N1=4` sets `lattice.n1`.
pub const ENV_PREFIX: &str = "QTCAD_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<DefectParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConfig>,
}

fn default_workers() -> usize {
    1
}

fn default_out() -> String {
    "out".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            out: default_out(),
            lattice: None,
            field: None,
            defect: None,
            spectrum: None,
            map: None,
            solver: SolverConfig::default(),
            protocol: None,
            quench: None,
            growth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// G
    pub b_min: f64,
    /// G
    pub b_max: f64,
    pub points: usize,
    pub direction: Vec3,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { b_min: 0.0, b_max: 500.0, points: 101, direction: [0.0, 0.0, 1.0] }
    }
}

impl SpectrumConfig {
    pub fn b_values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.b_min];
        }
        (0..self.points).map(|k| self.b_min + (self.b_max - self.b_min) * k as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub theta_points: usize,
    pub phi_points: usize,
    /// Wavevectors; the lattice default list when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<[f64; 2]>>,
    pub anisotropy: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { theta_points: 8, phi_points: 8, q: None, anisotropy: XXZ_DELTA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub krylov: usize,
    pub max_restarts: usize,
    pub degeneracy: f64,
    pub max_degenerate: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let l = LanczosOptions::default();
        let s = SolverOptions::default();
        Self { tol: l.tol, krylov: l.krylov, max_restarts: l.max_restarts, degeneracy: s.degeneracy, max_degenerate: s.max_degenerate }
    }
}

impl SolverConfig {
    pub fn options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            lanczos: LanczosOptions { krylov: self.krylov, max_restarts: self.max_restarts, tol: self.tol, seed },
            degeneracy: self.degeneracy,
            max_degenerate: self.max_degenerate,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchDefect {
    /// nm below the cluster centre
    pub depth_nm: f64,
    /// kHz
    #[serde(default)]
    pub omega_vv: f64,
    /// Keep the defect qubit but switch its coupling off.
    #[serde(default)]
    pub zero_hyperfine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuenchConfig {
    /// (θ, φ) field directions; `[field]` or the surface normal when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<[f64; 2]>>,
    pub evolve: EvolveOptions,
    pub anisotropy: f64,
    pub scaling: ProtocolScaling,
    /// Coupling scale for `scaling`, kHz; computed per direction when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<QuenchDefect>,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            directions: None,
            q: None,
            evolve: EvolveOptions::default(),
            anisotropy: XXZ_DELTA,
            scaling: ProtocolScaling::default(),
            scale: None,
            defect: None,
        }
    }
}

impl QuenchConfig {
    pub fn options(&self) -> QuenchOptions {
        QuenchOptions { evolve: self.evolve, anisotropy: self.anisotropy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    /// °C; `params.t_source` when empty.
    pub t_sources: Vec<f64>,
    pub params: GrowthParams,
    pub kinetics: KineticParams,
    pub grid: GridParams,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self { t_sources: Vec::new(), params: GrowthParams::default(), kinetics: KineticParams::default(), grid: GridParams::default() }
    }
}

pub fn to_q(list: &[[f64; 2]]) -> Vec<Q> {
    list.iter().map(|q| (q[0], q[1])).collect()
}

impl RunConfig {
    pub fn model(&self) -> ModelOptions {
        ModelOptions { anisotropy: self.map.as_ref().map_or(XXZ_DELTA, |m| m.anisotropy) }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Semantic checks; each failure is `(key path, message)`.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |path: &str, r: std::result::Result<(), String>| {
            if let Err(m) = r {
                out.push((path.to_string(), m));
            }
        };
        let err = |r: Result<()>| r.map_err(|e| e.to_string());
        push("workers", if self.workers >= 1 { Ok(()) } else { Err("workers must be >= 1".into()) });
        if let Some(l) = &self.lattice {
            let key = if l.n1 < 2 {
                "lattice.n1"
            } else if l.n2 < 2 {
                "lattice.n2"
            } else {
                "lattice"
            };
            push(key, err(l.validate()));
        }
        if let Some(f) = &self.field {
            push("field", f.validate());
        }
        if let Some(d) = &self.defect {
            push("defect", err(d.validate()));
        }
        if let Some(s) = &self.spectrum {
            let ok = s.points >= 1 && s.b_min >= 0.0 && s.b_max >= s.b_min && s.direction.iter().any(|x| *x != 0.0);
            push("spectrum", if ok { Ok(()) } else { Err("need points >= 1, 0 <= b_min <= b_max and a non-zero direction".into()) });
        }
        if let Some(m) = &self.map {
            let ok = m.theta_points >= 1 && m.phi_points >= 1;
            push("map", if ok { Ok(()) } else { Err("theta_points and phi_points must be >= 1".into()) });
            if m.q.as_ref().is_some_and(|q| q.is_empty()) {
                push("map.q", Err("q list is empty".into()));
            }
        }
        let s = &self.solver;
        let ok = s.tol > 0.0 && s.krylov >= 2 && s.max_restarts >= 1 && s.degeneracy >= 0.0 && s.max_degenerate >= 1;
        push("solver", if ok { Ok(()) } else { Err("need tol > 0, krylov >= 2, max_restarts >= 1, max_degenerate >= 1".into()) });
        if let Some(p) = &self.protocol {
            push("protocol", err(p.validate()));
        }
        if let Some(q) = &self.quench {
            let e = &q.evolve;
            let ok = e.tol > 0.0 && e.samples >= 2 && e.krylov >= 2;
            push("quench.evolve", if ok { Ok(()) } else { Err("need tol > 0, samples >= 2, krylov >= 2".into()) });
            if let Some(d) = &q.defect {
                push("quench.defect.depth_nm", if d.depth_nm > 0.0 { Ok(()) } else { Err("depth_nm must be positive".into()) });
            }
            if q.scale.is_some_and(|s| !(s > 0.0)) {
                push("quench.scale", Err("scale must be positive".into()));
            }
            match q.scaling {
                ProtocolScaling::Truncated { factor } if !(factor > 0.0) => push("quench.scaling.factor", Err("factor must be positive".into())),
                ProtocolScaling::Ratio { omega_factor, tau_factor } if !(omega_factor >= 0.0 && tau_factor > 0.0) => {
                    push("quench.scaling", Err("need omega_factor >= 0 and tau_factor > 0".into()))
                }
                _ => {}
            }
        }
        if let Some(g) = &self.growth {
            push("growth.params", err(g.params.validate()));
            push("growth.kinetics", err(g.kinetics.validate()));
            let gr = &g.grid;
            push("growth.grid.dz", if gr.dz > 0.0 { Ok(()) } else { Err(format!("dz = {} must be positive", gr.dz)) });
            let ok = gr.substrate >= 0.0 && gr.margin >= 0.0 && gr.max_dt > 0.0;
            push("growth.grid", if ok { Ok(()) } else { Err("need max_dt > 0, substrate and margin >= 0".into()) });
        }
        out
    }
}

/// 1-based line of `path` (dotted) in TOML source, or of its table header.
pub fn locate(src: &str, path: &str) -> Option<usize> {
    let mut table = String::new();
    let mut header_line = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            table = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if table == path {
                header_line = Some(i + 1);
            }
            continue;
        }
        let Some((key, _)) = line.split_once('=') else { continue };
        let key = key.trim();
        let full = if table.is_empty() { key.to_string() } else { format!("{table}.{key}") };
        if full == path {
            return Some(i + 1);
        }
    }
    header_line.or_else(|| path.rsplit_once('.').and_then(|(parent, _)| locate(src, parent)))
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty override key '{path}'")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Config(format!("override '{path}': '{p}' is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// `KEY=VALUE` pairs from the environment, keys mapped to dotted paths.
pub fn env_overrides() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::env::vars()
        .filter_map(|(k, val)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.to_lowercase().replace("__", "."), val)))
        .collect();
    v.sort();
    v
}

/// Parses `src`, applies `overrides` in order and validates.
pub fn load_str(src: &str, origin: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(src).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    if !overrides.is_empty() {
        let mut table: toml::Table = toml::from_str(src).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        for (k, v) in overrides {
            set_path(&mut table, k, parse_value(v))?;
        }
        cfg = RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(format!("override: {e}")))?;
    }
    let problems = cfg.problems();
    if let Some((path, msg)) = problems.first() {
        let by_override = overrides.iter().any(|(k, _)| k == path || k.starts_with(&format!("{path}.")) || path.starts_with(&format!("{k}.")));
        let at = match (by_override, locate(src, path)) {
            (true, _) => "override".to_string(),
            (false, Some(line)) => format!("{origin}:{line}"),
            (false, None) => origin.to_string(),
        };
        let more = if problems.len() > 1 { format!(" (+{} more)", problems.len() - 1) } else { String::new() };
        return Err(Error::Config(format!("{at}: {path}: {msg}{more}")));
    }
    Ok(cfg)
}

/// Reads `path` (or starts from defaults) and applies environment then command-line overrides.
pub fn load(path: Option<&Path>, sets: &[(String, String)]) -> Result<RunConfig> {
    let (src, origin) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            p.display().to_string(),
        ),
        None => (String::new(), "<defaults>".to_string()),
    };
    let mut overrides = env_overrides();
    overrides.extend(sets.iter().cloned());
    load_str(&src, &origin, &overrides)
}

/// Splits `a.b=value`.
pub fn parse_set(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 3
workers = 2

[lattice]
kind = "SquareIdeal001"
n1 = 4
n2 = 4

[map]
theta_points = 3
phi_points = 4

[growth]
t_sources = [2080.2, 2180.2]

[growth.grid]
dz = 4.0
"#;

    #[test]
    fn loads_and_round_trips() {
        let cfg = load_str(SAMPLE, "a.toml", &[]).unwrap();
        assert_eq!(cfg.lattice.as_ref().unwrap().n1, 4);
        assert_eq!(cfg.growth.as_ref().unwrap().grid.dz, 4.0);
        let text = cfg.to_toml();
        let again = load_str(&text, "b.toml", &[]).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let src = SAMPLE.replace("phi_points = 4", "phi_points = 4\nphi_pionts = 5");
        let e = load_str(&src, "a.toml", &[]).unwrap_err().to_string();
        assert!(e.contains("phi_pionts") && e.contains("line 13"), "{e}");
    }

    #[test]
    fn invalid_values_point_at_their_line() {
        let src = SAMPLE.replace("n1 = 4", "n1 = 1");
        let e = load_str(&src, "a.toml", &[]).unwrap_err().to_string();
        assert!(e.contains("a.toml:7: lattice.n1"), "{e}");
        let src = SAMPLE.replace("dz = 4.0", "dz = -1.0");
        let e = load_str(&src, "a.toml", &[]).unwrap_err().to_string();
        assert!(e.contains("a.toml:18: growth.grid.dz"), "{e}");
    }

    #[test]
    fn overrides_apply_in_order() {
        let sets = vec![("lattice.n2".to_string(), "2".to_string()), ("map.q".to_string(), "[[0.0, 0.0]]".to_string())];
        let cfg = load_str(SAMPLE, "a.toml", &sets).unwrap();
        assert_eq!(cfg.lattice.unwrap().n2, 2);
        assert_eq!(cfg.map.unwrap().q, Some(vec![[0.0, 0.0]]));
        let bad = vec![("lattice.n2".to_string(), "1".to_string())];
        let e = load_str(SAMPLE, "a.toml", &bad).unwrap_err().to_string();
        assert!(e.contains("override: lattice.n2"), "{e}");
        let unknown = vec![("lattice.bogus".to_string(), "1".to_string())];
        assert!(load_str(SAMPLE, "a.toml", &unknown).is_err());
    }

    #[test]
    fn parse_set_splits_once() {
        assert_eq!(parse_set("a.b = x=y").unwrap(), ("a.b".into(), "x=y".into()));
        assert!(parse_set("nothing").is_err());
    }

    #[test]
    fn spectrum_grid_has_endpoints() {
        let s = SpectrumConfig::default();
        let b = s.b_values();
        assert_eq!(b.len(), 101);
        assert_eq!((b[0], b[100]), (0.0, 500.0));
    }
}
