//! 1D growth model for vacancy and di-vacancy depth profiles.
//!
//! A prescribed tanh phase field marks the solid; the moving front deposits
//! V_C and V_Si, which diffuse inside the solid, recombine with interstitials
//! held at a fixed density, and pair into immobile V_C-V_Si complexes.
//!
//! Units: z in nm, t in s, concentrations in cm⁻³, diffusivities in cm²/s,
//! bimolecular rates in cm³/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, eV/K.
pub const K_B: f64 = 8.617_333_262e-5;
const CM2_TO_NM2: f64 = 1e14;

/// One calibration row from the growth simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRow {
    /// °C
    pub t_source: f64,
    /// nm/s
    pub rate: f64,
    /// cm⁻³
    pub g_vc: f64,
    /// cm⁻³
    pub g_vsi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    /// °C
    pub t_seed: f64,
    /// °C
    pub t_source: f64,
    pub rate_table: Vec<RateRow>,
    /// nm
    pub film_target: f64,
    /// nm
    pub front_width: f64,
}

impl Default for GrowthParams {
    /// Non-authoritative calibration. The low row is 50 nm in 0.7 s at 2080.2 °C;
    /// the high row and all generation densities are placeholders of the right order.
    fn default() -> Self {
        Self {
            t_seed: 2072.2,
            t_source: 2080.2,
            rate_table: vec![
                RateRow { t_source: 2080.2, rate: 50.0 / 0.7, g_vc: 1.0e17, g_vsi: 1.2e17 },
                RateRow { t_source: 2180.2, rate: 250.0, g_vc: 1.6e17, g_vsi: 1.9e17 },
            ],
            film_target: 800.0,
            front_width: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub rate: f64,
    pub g_vc: f64,
    pub g_vsi: f64,
    /// The query lies outside the table.
    pub extrapolated: bool,
}

impl GrowthParams {
    pub fn validate(&self) -> Result<()> {
        if self.rate_table.is_empty() {
            return Err(Error::Growth("empty rate table".into()));
        }
        for w in self.rate_table.windows(2) {
            if !(w[1].t_source > w[0].t_source) {
                return Err(Error::Growth("rate table must be strictly increasing in t_source".into()));
            }
        }
        for r in &self.rate_table {
            if !(r.rate > 0.0) {
                return Err(Error::Growth(format!("growth rate {} at {} °C must be positive", r.rate, r.t_source)));
            }
            if !(r.g_vc >= 0.0 && r.g_vsi >= 0.0) {
                return Err(Error::Growth(format!("negative generation density at {} °C", r.t_source)));
            }
        }
        if !(self.film_target > 0.0) || !(self.front_width > 0.0) {
            return Err(Error::Growth("film_target and front_width must be positive".into()));
        }
        Ok(())
    }

    /// Piecewise-linear lookup at `t_source`, extrapolating the end segments.
    pub fn interpolate(&self, t_source: f64) -> Result<Interpolated> {
        let rows = &self.rate_table;
        if rows.is_empty() {
            return Err(Error::Growth("empty rate table".into()));
        }
        if rows.len() == 1 {
            let r = rows[0];
            return Ok(Interpolated { rate: r.rate, g_vc: r.g_vc, g_vsi: r.g_vsi, extrapolated: t_source != r.t_source });
        }
        let k = rows.partition_point(|r| r.t_source < t_source).clamp(1, rows.len() - 1);
        let (a, b) = (rows[k - 1], rows[k]);
        let s = (t_source - a.t_source) / (b.t_source - a.t_source);
        let lerp = |x: f64, y: f64| x + s * (y - x);
        let interp = Interpolated {
            rate: lerp(a.rate, b.rate),
            g_vc: lerp(a.g_vc, b.g_vc).max(0.0),
            g_vsi: lerp(a.g_vsi, b.g_vsi).max(0.0),
            extrapolated: t_source < rows[0].t_source || t_source > rows[rows.len() - 1].t_source,
        };
        if !(interp.rate > 0.0) {
            return Err(Error::Growth(format!("extrapolated growth rate at {t_source} °C is not positive")));
        }
        Ok(interp)
    }
}

/// Growth rate at `t_source`, nm/s.
pub fn growth_rate(params: &GrowthParams, t_source: f64) -> Result<f64> {
    Ok(params.interpolate(t_source)?.rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arrhenius {
    /// cm²/s
    pub d0: f64,
    /// eV
    pub ea: f64,
}

impl Arrhenius {
    pub const ZERO: Arrhenius = Arrhenius { d0: 0.0, ea: 0.0 };

    /// cm²/s at `t_celsius`.
    pub fn at(&self, t_celsius: f64) -> f64 {
        if self.d0 == 0.0 {
            return 0.0;
        }
        self.d0 * (-self.ea / (K_B * (t_celsius + 273.15))).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticParams {
    pub d_vc: Arrhenius,
    pub d_vsi: Arrhenius,
    #[serde(default = "zero_arrhenius")]
    pub d_vv: Arrhenius,
    /// V_C + V_Si → V_C-V_Si, cm³/s
    pub k_f: f64,
    /// V_C + I_C, cm³/s
    pub k_rc: f64,
    /// V_Si + I_Si, cm³/s
    pub k_rsi: f64,
    /// V_C-V_Si + I_C → V_Si, cm³/s
    #[serde(default)]
    pub k_rvv: f64,
    /// cm⁻³
    pub c_ic: f64,
    /// cm⁻³
    pub c_isi: f64,
}

fn zero_arrhenius() -> Arrhenius {
    Arrhenius::ZERO
}

impl Default for KineticParams {
    /// Non-authoritative calibration; see the crate README.
    fn default() -> Self {
        Self {
            d_vc: Arrhenius { d0: 6.9e-5, ea: 3.4 },
            d_vsi: Arrhenius { d0: 2.3e-4, ea: 3.0 },
            d_vv: Arrhenius::ZERO,
            k_f: 6.0e-16,
            k_rc: 6.65e-16,
            k_rsi: 2.18e-15,
            k_rvv: 1.0e-15,
            c_ic: 1.0e15,
            c_isi: 1.0e15,
        }
    }
}

impl KineticParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            ("d_vc.d0", self.d_vc.d0),
            ("d_vc.ea", self.d_vc.ea),
            ("d_vsi.d0", self.d_vsi.d0),
            ("d_vsi.ea", self.d_vsi.ea),
            ("d_vv.d0", self.d_vv.d0),
            ("d_vv.ea", self.d_vv.ea),
            ("k_f", self.k_f),
            ("k_rc", self.k_rc),
            ("k_rsi", self.k_rsi),
            ("k_rvv", self.k_rvv),
            ("c_ic", self.c_ic),
            ("c_isi", self.c_isi),
        ];
        for (name, v) in vals {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Growth(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Diffusivities (V_C, V_Si, VV) in nm²/s at `t_celsius`.
    pub fn diffusivities_nm2(&self, t_celsius: f64) -> [f64; 3] {
        [self.d_vc, self.d_vsi, self.d_vv].map(|a| a.at(t_celsius) * CM2_TO_NM2)
    }

    /// Symmetric partner rates for V_C and V_Si (used by symmetry checks).
    pub fn symmetric(d: Arrhenius, k_f: f64, k_r: f64, c_i: f64) -> Self {
        Self { d_vc: d, d_vsi: d, d_vv: Arrhenius::ZERO, k_f, k_rc: k_r, k_rsi: k_r, k_rvv: 0.0, c_ic: c_i, c_isi: c_i }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Forward Euler; requires `dt <= 0.4 dz² / max D`.
    #[default]
    Explicit,
    /// Backward Euler for diffusion, explicit reactions.
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    /// nm
    #[serde(default = "default_dz")]
    pub dz: f64,
    /// Seed thickness below the initial surface, nm.
    #[serde(default = "default_substrate")]
    pub substrate: f64,
    /// Space above the final surface, nm.
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Snapshot spacing, s; 0 keeps only the initial and final profiles.
    #[serde(default)]
    pub snapshot_interval: f64,
    /// Upper bound on the time step, s.
    #[serde(default = "default_max_dt")]
    pub max_dt: f64,
}

fn default_dz() -> f64 {
    2.0
}
fn default_substrate() -> f64 {
    1000.0
}
fn default_margin() -> f64 {
    100.0
}
fn default_max_dt() -> f64 {
    0.01
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            dz: default_dz(),
            substrate: default_substrate(),
            margin: default_margin(),
            scheme: Scheme::Explicit,
            snapshot_interval: 0.0,
            max_dt: default_max_dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileState {
    /// Cell centres, nm.
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub c_vc: Vec<f64>,
    pub c_vsi: Vec<f64>,
    pub c_vv: Vec<f64>,
    /// s
    pub t: f64,
    /// nm
    pub z_f: f64,
}

impl ProfileState {
    /// Empty profile with the surface at `z = 0` and a vacancy-free seed below.
    pub fn initial(gp: &GrowthParams, grid: &GridParams) -> Result<Self> {
        if !(grid.dz > 0.0) || !(grid.substrate >= 0.0) || !(grid.margin >= 0.0) {
            return Err(Error::Growth("dz must be positive, substrate and margin non-negative".into()));
        }
        let lo = -grid.substrate;
        let hi = gp.film_target + grid.margin;
        let n = ((hi - lo) / grid.dz).round() as usize;
        if n < 3 {
            return Err(Error::Growth("grid has fewer than 3 cells".into()));
        }
        let z: Vec<f64> = (0..n).map(|k| lo + (k as f64 + 0.5) * grid.dz).collect();
        let phi = front(&z, 0.0, gp.front_width);
        Ok(Self { phi, c_vc: vec![0.0; n], c_vsi: vec![0.0; n], c_vv: vec![0.0; n], z, t: 0.0, z_f: 0.0 })
    }

    pub fn dz(&self) -> f64 {
        self.z[1] - self.z[0]
    }

    /// ∫ c dz for each species, nm·cm⁻³.
    pub fn inventories(&self) -> [f64; 3] {
        let dz = self.dz();
        [&self.c_vc, &self.c_vsi, &self.c_vv].map(|c| c.iter().sum::<f64>() * dz)
    }
}

fn front(z: &[f64], z_f: f64, w: f64) -> Vec<f64> {
    z.iter().map(|zi| 0.5 * (1.0 + ((z_f - zi) / w).tanh())).collect()
}

/// Finite-volume `∂/∂z (φ D ∂c/∂z)` with no-flux ends.
fn divergence(c: &[f64], phi: &[f64], d: f64, dz: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    if d == 0.0 {
        return;
    }
    for k in 0..c.len() - 1 {
        let pf = 0.5 * (phi[k] + phi[k + 1]);
        let flux = pf * d * (c[k + 1] - c[k]) / dz;
        out[k] += flux / dz;
        out[k + 1] -= flux / dz;
    }
}

/// Solves `(1 - dt ∂(φD∂))c_new = c` by the Thomas algorithm.
fn implicit_diffusion(c: &mut [f64], phi: &[f64], d: f64, dz: f64, dt: f64) {
    let n = c.len();
    if d == 0.0 {
        return;
    }
    let coef: Vec<f64> = (0..n - 1).map(|k| 0.5 * (phi[k] + phi[k + 1]) * d * dt / (dz * dz)).collect();
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    for k in 0..n - 1 {
        diag[k] += coef[k];
        diag[k + 1] += coef[k];
        upper[k] = -coef[k];
        lower[k + 1] = -coef[k];
    }
    for k in 1..n {
        let m = lower[k] / diag[k - 1];
        diag[k] -= m * upper[k - 1];
        c[k] -= m * c[k - 1];
    }
    c[n - 1] /= diag[n - 1];
    for k in (0..n - 1).rev() {
        c[k] = (c[k] - upper[k] * c[k + 1]) / diag[k];
    }
}

/// Largest explicit step allowed by diffusion, s.
pub fn stability_limit(kp: &KineticParams, t_seed: f64, dz: f64) -> f64 {
    let dmax = kp.diffusivities_nm2(t_seed).into_iter().fold(0.0, f64::max);
    if dmax > 0.0 {
        0.4 * dz * dz / dmax
    } else {
        f64::INFINITY
    }
}

/// Advances the profile by `dt` seconds.
pub fn step(state: &ProfileState, gp: &GrowthParams, kp: &KineticParams, scheme: Scheme, dt: f64) -> Result<ProfileState> {
    let dz = state.dz();
    if scheme == Scheme::Explicit {
        let lim = stability_limit(kp, gp.t_seed, dz);
        if dt > lim * (1.0 + 1e-12) {
            return Err(Error::Growth(format!("dt = {dt:.3e} s exceeds the explicit limit {lim:.3e} s")));
        }
    }
    let interp = gp.interpolate(gp.t_source)?;
    let [d_c, d_s, d_v] = kp.diffusivities_nm2(gp.t_seed);
    let z_f = state.z_f + interp.rate * dt;
    let phi = front(&state.z, z_f, gp.front_width);
    let n = state.z.len();

    let mut c_vc = state.c_vc.clone();
    let mut c_vsi = state.c_vsi.clone();
    let mut c_vv = state.c_vv.clone();
    // reactions and generation from the old state
    for k in 0..n {
        let (a, b, v) = (state.c_vc[k], state.c_vsi[k], state.c_vv[k]);
        let r_f = kp.k_f * a * b;
        let r_vv = kp.k_rvv * kp.c_ic * v;
        let dphi = phi[k] - state.phi[k];
        c_vc[k] += interp.g_vc * dphi - dt * (r_f + kp.k_rc * kp.c_ic * a);
        c_vsi[k] += interp.g_vsi * dphi - dt * (r_f + kp.k_rsi * kp.c_isi * b - r_vv);
        c_vv[k] += dt * (r_f - r_vv);
    }
    match scheme {
        Scheme::Explicit => {
            let mut div = vec![0.0; n];
            for (c, old, d) in [(&mut c_vc, &state.c_vc, d_c), (&mut c_vsi, &state.c_vsi, d_s), (&mut c_vv, &state.c_vv, d_v)] {
                divergence(old, &state.phi, d, dz, &mut div);
                for (ci, di) in c.iter_mut().zip(&div) {
                    *ci += dt * di;
                }
            }
        }
        Scheme::Implicit => {
            implicit_diffusion(&mut c_vc, &phi, d_c, dz, dt);
            implicit_diffusion(&mut c_vsi, &phi, d_s, dz, dt);
            implicit_diffusion(&mut c_vv, &phi, d_v, dz, dt);
        }
    }
    for (name, c) in [("V_C", &mut c_vc), ("V_Si", &mut c_vsi), ("V_C-V_Si", &mut c_vv)] {
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (k, ci) in c.iter_mut().enumerate() {
            if *ci < 0.0 {
                // roundoff on an empty cell is not a stability failure
                if *ci > -1e-12 * scale {
                    *ci = 0.0;
                } else {
                    return Err(Error::NegativeConcentration { species: name, z: state.z[k] });
                }
            }
        }
    }
    Ok(ProfileState { z: state.z.clone(), phi, c_vc, c_vsi, c_vv, t: state.t + dt, z_f })
}

#[derive(Debug, Clone)]
pub struct GrowthRun {
    pub snapshots: Vec<ProfileState>,
    pub final_state: ProfileState,
    pub rate: f64,
    pub dt: f64,
    pub steps: usize,
    pub extrapolated: bool,
}

/// Time step used by `run_growth`, s.
pub fn choose_dt(gp: &GrowthParams, kp: &KineticParams, grid: &GridParams) -> Result<f64> {
    let interp = gp.interpolate(gp.t_source)?;
    let mut dt = grid.max_dt.min(0.1 * grid.dz.min(gp.front_width) / interp.rate);
    if grid.scheme == Scheme::Explicit {
        dt = dt.min(stability_limit(kp, gp.t_seed, grid.dz));
    }
    let gmax = interp.g_vc.max(interp.g_vsi);
    let fast = kp.k_f * gmax + kp.k_rc * kp.c_ic + kp.k_rsi * kp.c_isi + kp.k_rvv * kp.c_ic;
    if fast > 0.0 {
        dt = dt.min(0.05 / fast);
    }
    Ok(dt)
}

/// Grows the film until the front reaches `film_target`; the last profile is frozen.
pub fn run_growth(gp: &GrowthParams, kp: &KineticParams, grid: &GridParams) -> Result<GrowthRun> {
    gp.validate()?;
    kp.validate()?;
    let interp = gp.interpolate(gp.t_source)?;
    let duration = gp.film_target / interp.rate;
    let dt_max = choose_dt(gp, kp, grid)?;
    let steps = (duration / dt_max).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;
    let mut state = ProfileState::initial(gp, grid)?;
    let mut snapshots = vec![state.clone()];
    let every = if grid.snapshot_interval > 0.0 { (grid.snapshot_interval / dt).round().max(1.0) as usize } else { usize::MAX };
    for k in 1..=steps {
        state = step(&state, gp, kp, grid.scheme, dt)?;
        if k % every == 0 && k != steps {
            snapshots.push(state.clone());
        }
    }
    snapshots.push(state.clone());
    Ok(GrowthRun { snapshots, final_state: state, rate: interp.rate, dt, steps, extrapolated: interp.extrapolated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub t_source: f64,
    /// nm/s
    pub rate: f64,
    pub peak_vv: f64,
    /// nm
    pub z_peak: f64,
    /// Distance of the VV peak below the surface as a fraction of the film.
    pub peak_depth_fraction: f64,
    /// Mean VV concentration over the lower 85% of the film.
    pub bulk_vv: f64,
    pub peak_vc: f64,
    pub peak_vsi: f64,
}

impl ProfileSummary {
    pub fn vc_ratio(&self) -> f64 {
        self.peak_vc / self.peak_vv
    }

    pub fn vsi_ratio(&self) -> f64 {
        self.peak_vsi / self.peak_vv
    }
}

/// Fraction of the film counted as near-surface.
pub const TOP_FRACTION: f64 = 0.15;

/// Peak and bulk figures of the final profile inside the grown film.
pub fn summarize(gp: &GrowthParams, run: &GrowthRun) -> ProfileSummary {
    let s = &run.final_state;
    let film = gp.film_target;
    let inside: Vec<usize> = (0..s.z.len()).filter(|k| s.z[*k] > 0.0 && s.z[*k] < film).collect();
    let peak_of = |c: &[f64]| inside.iter().map(|k| c[*k]).fold(0.0, f64::max);
    let kp = *inside.iter().max_by(|a, b| s.c_vv[**a].partial_cmp(&s.c_vv[**b]).unwrap()).unwrap();
    let bulk: Vec<f64> = inside.iter().filter(|k| s.z[**k] < (1.0 - TOP_FRACTION) * film).map(|k| s.c_vv[*k]).collect();
    ProfileSummary {
        t_source: gp.t_source,
        rate: run.rate,
        peak_vv: s.c_vv[kp],
        z_peak: s.z[kp],
        peak_depth_fraction: (film - s.z[kp]) / film,
        bulk_vv: bulk.iter().sum::<f64>() / bulk.len().max(1) as f64,
        peak_vc: peak_of(&s.c_vc),
        peak_vsi: peak_of(&s.c_vsi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn inert() -> KineticParams {
        KineticParams::symmetric(Arrhenius::ZERO, 0.0, 0.0, 0.0)
    }

    fn small_grid() -> GridParams {
        GridParams { substrate: 50.0, margin: 20.0, ..Default::default() }
    }

    #[test]
    fn rate_table_lookup() {
        let gp = GrowthParams::default();
        assert_abs_diff_eq!(growth_rate(&gp, 2080.2).unwrap(), 50.0 / 0.7, epsilon = 1e-12);
        let mid = growth_rate(&gp, 2130.2).unwrap();
        assert_abs_diff_eq!(mid, 0.5 * (50.0 / 0.7 + 250.0), epsilon = 1e-9);
        let one = GrowthParams { rate_table: vec![gp.rate_table[0]], ..gp.clone() };
        assert_abs_diff_eq!(growth_rate(&one, 2500.0).unwrap(), 50.0 / 0.7);
        assert!(gp.interpolate(2200.0).unwrap().extrapolated);
        let empty = GrowthParams { rate_table: vec![], ..gp };
        assert!(growth_rate(&empty, 2100.0).is_err());
    }

    #[test]
    fn table_must_be_monotone() {
        let mut gp = GrowthParams::default();
        gp.rate_table.swap(0, 1);
        assert!(gp.validate().is_err());
    }

    #[test]
    fn arrhenius_reference() {
        let a = Arrhenius { d0: 1.0, ea: 1.0 };
        // kT = 1 eV at 11604.5 K
        assert_abs_diff_eq!(a.at(1.0 / K_B - 273.15), (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn pure_generation_follows_the_front() {
        let gp = GrowthParams { film_target: 100.0, ..Default::default() };
        let grid = small_grid();
        let run = run_growth(&gp, &inert(), &grid).unwrap();
        let init = &run.snapshots[0];
        let s = &run.final_state;
        let g = gp.interpolate(gp.t_source).unwrap();
        for k in 0..s.z.len() {
            assert_abs_diff_eq!(s.c_vc[k], g.g_vc * (s.phi[k] - init.phi[k]), epsilon = 1e-9 * g.g_vc);
            assert_abs_diff_eq!(s.c_vsi[k], g.g_vsi * (s.phi[k] - init.phi[k]), epsilon = 1e-9 * g.g_vsi);
        }
        assert_abs_diff_eq!(s.z_f, 100.0, epsilon = 1e-9);
    }

    fn uniform_state(n: usize, dz: f64, c0: f64) -> ProfileState {
        ProfileState {
            z: (0..n).map(|k| (k as f64 + 0.5) * dz).collect(),
            phi: vec![1.0; n],
            c_vc: vec![c0; n],
            c_vsi: vec![c0; n],
            c_vv: vec![0.0; n],
            t: 0.0,
            z_f: 1e9,
        }
    }

    #[test]
    fn bimolecular_decay_matches_closed_form() {
        let gp = GrowthParams { rate_table: vec![RateRow { t_source: 2080.2, rate: 1.0, g_vc: 0.0, g_vsi: 0.0 }], ..Default::default() };
        let kp = KineticParams { k_f: 1e-16, ..inert() };
        let c0 = 1e17;
        let mut s = uniform_state(8, 1.0, c0);
        let t_end = 0.1;
        let steps = 40_000;
        for _ in 0..steps {
            s = step(&s, &gp, &kp, Scheme::Explicit, t_end / steps as f64).unwrap();
        }
        let want = c0 / (1.0 + kp.k_f * c0 * t_end);
        for k in 0..8 {
            assert!(((s.c_vc[k] - want) / want).abs() < 1e-4);
            assert!(((s.c_vv[k] - (c0 - want)) / (c0 - want)).abs() < 1e-4);
        }
    }

    fn bump(n: usize) -> ProfileState {
        let mut s = uniform_state(n, 2.0, 0.0);
        for k in 0..n {
            let x = (k as f64 - n as f64 / 3.0) / 4.0;
            s.c_vc[k] = 1e17 * (-x * x).exp();
            s.c_vsi[k] = 5e16 * (-(x - 3.0) * (x - 3.0)).exp();
            s.phi[k] = if k < 2 * n / 3 { 1.0 } else { 0.3 };
        }
        s
    }

    #[test]
    fn diffusion_conserves_mass() {
        let gp = GrowthParams { rate_table: vec![RateRow { t_source: 2080.2, rate: 1e-9, g_vc: 0.0, g_vsi: 0.0 }], ..Default::default() };
        let kp = KineticParams { d_vc: Arrhenius { d0: 1e-11, ea: 0.0 }, d_vsi: Arrhenius { d0: 3e-11, ea: 0.0 }, ..inert() };
        for scheme in [Scheme::Explicit, Scheme::Implicit] {
            let mut s = bump(60);
            let before = s.inventories();
            let dt = stability_limit(&kp, gp.t_seed, 2.0);
            for _ in 0..500 {
                s = step(&s, &gp, &kp, scheme, dt).unwrap();
            }
            let after = s.inventories();
            for i in 0..2 {
                assert!(((after[i] - before[i]) / before[i]).abs() < 1e-6);
            }
            // it did spread
            assert!(s.c_vc.iter().cloned().fold(0.0, f64::max) < 0.9e17);
        }
    }

    #[test]
    fn explicit_step_checks_stability() {
        let gp = GrowthParams::default();
        let kp = KineticParams::default();
        let s = ProfileState::initial(&gp, &small_grid()).unwrap();
        let lim = stability_limit(&kp, gp.t_seed, s.dz());
        assert!(step(&s, &gp, &kp, Scheme::Explicit, 2.0 * lim).is_err());
        assert!(step(&s, &gp, &kp, Scheme::Implicit, 2.0 * lim).is_ok());
    }

    #[test]
    fn stoichiometry_per_step() {
        let gp = GrowthParams { film_target: 200.0, ..Default::default() };
        let kp = KineticParams::default();
        let grid = GridParams { substrate: 100.0, margin: 20.0, ..Default::default() };
        let mut s = ProfileState::initial(&gp, &grid).unwrap();
        let dt = choose_dt(&gp, &kp, &grid).unwrap();
        let g = gp.interpolate(gp.t_source).unwrap();
        let dz = s.dz();
        for _ in 0..300 {
            let next = step(&s, &gp, &kp, Scheme::Explicit, dt).unwrap();
            let gen_c: f64 = next.phi.iter().zip(&s.phi).map(|(a, b)| g.g_vc * (a - b)).sum::<f64>() * dz;
            let gen_s: f64 = next.phi.iter().zip(&s.phi).map(|(a, b)| g.g_vsi * (a - b)).sum::<f64>() * dz;
            let loss_c = dt * dz * s.c_vc.iter().zip(&s.c_vv).map(|(a, v)| kp.k_rc * kp.c_ic * a + kp.k_rvv * kp.c_ic * v).sum::<f64>();
            let loss_s = dt * dz * s.c_vsi.iter().map(|b| kp.k_rsi * kp.c_isi * b).sum::<f64>();
            let [a0, b0, v0] = s.inventories();
            let [a1, b1, v1] = next.inventories();
            let scale = (a1 + v1).max(b1 + v1).max(1e10);
            assert!(((a1 + v1) - (a0 + v0) - (gen_c - loss_c)).abs() < 1e-6 * scale);
            assert!(((b1 + v1) - (b0 + v0) - (gen_s - loss_s)).abs() < 1e-6 * scale);
            s = next;
        }
    }

    #[test]
    fn symmetric_parameters_give_identical_species() {
        let row = RateRow { t_source: 2080.2, rate: 80.0, g_vc: 1.5e17, g_vsi: 1.5e17 };
        let gp = GrowthParams { rate_table: vec![row], film_target: 150.0, ..Default::default() };
        let kp = KineticParams::symmetric(Arrhenius { d0: 1e-4, ea: 3.2 }, 5e-16, 1e-15, 1e15);
        let run = run_growth(&gp, &kp, &small_grid()).unwrap();
        for snap in &run.snapshots {
            for (a, b) in snap.c_vc.iter().zip(&snap.c_vsi) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn front_position_is_monotone() {
        let gp = GrowthParams { film_target: 60.0, ..Default::default() };
        let grid = GridParams { snapshot_interval: 0.05, ..small_grid() };
        let run = run_growth(&gp, &KineticParams::default(), &grid).unwrap();
        assert!(run.snapshots.len() > 5);
        for w in run.snapshots.windows(2) {
            assert!(w[1].z_f >= w[0].z_f && w[1].t > w[0].t);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn profiles_stay_bounded_and_non_negative(
            kf in 0.0f64..2e-15, kr in 0.0f64..3e-15, d0 in 0.0f64..1e-3, krvv in 0.0f64..2e-15,
        ) {
            let gp = GrowthParams { film_target: 80.0, ..Default::default() };
            let kp = KineticParams { k_f: kf, k_rc: kr, k_rsi: 0.5 * kr, k_rvv: krvv,
                d_vc: Arrhenius { d0, ea: 3.4 }, ..KineticParams::default() };
            let run = run_growth(&gp, &kp, &small_grid()).unwrap();
            let s = &run.final_state;
            let g = gp.interpolate(gp.t_source).unwrap();
            for k in 0..s.z.len() {
                prop_assert!((0.0..=1.0).contains(&s.phi[k]));
                prop_assert!(s.c_vc[k] >= 0.0 && s.c_vsi[k] >= 0.0 && s.c_vv[k] >= 0.0);
                // nothing exceeds what the front deposited
                prop_assert!(s.c_vc[k] + s.c_vv[k] <= g.g_vc * (1.0 + 1e-9));
            }
        }
    }
}
