//! Ground states, structure factors and field-direction maps.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::hamiltonian::{xxz_hamiltonian, XXZ_DELTA};
use crate::lanczos::{extend_manifold, lowest, lowest_manifold, norm, LanczosOptions};
use crate::lattice::{build_lattice, LatticeKind, LatticeSpec, SiteSet};
use crate::pauli::PauliSum;

pub type Q = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub lanczos: LanczosOptions,
    /// Solve each total-σz block separately (only valid when the operator conserves it).
    pub sectors: bool,
    /// States within `degeneracy * ‖H‖` of the minimum count as ground states.
    pub degeneracy: f64,
    pub max_degenerate: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { lanczos: LanczosOptions::default(), sectors: true, degeneracy: 1e-6, max_degenerate: 12 }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    /// Lowest state on the full 2^N space.
    pub state: Vec<C64>,
    pub residual: f64,
    pub sector: Option<u32>,
    /// Orthonormal basis of the ground manifold (first entry is `state`).
    pub manifold: Vec<Vec<C64>>,
    pub norm: f64,
}

impl GroundStateResult {
    pub fn degenerate(&self) -> bool {
        self.manifold.len() > 1
    }

    /// Basis-probability average over the ground manifold.
    pub fn probabilities(&self) -> Vec<f64> {
        let w = 1.0 / self.manifold.len() as f64;
        let mut p = vec![0.0; self.state.len()];
        for v in &self.manifold {
            for (pi, a) in p.iter_mut().zip(v) {
                *pi += w * a.norm_sqr();
            }
        }
        p
    }
}

fn flip_symmetric(h: &PauliSum) -> bool {
    h.terms.keys().all(|p| p.z.count_ones() % 2 == 0)
}

/// Lowest state of `h`; sector mode solves each magnetization block.
pub fn ground_state(h: &PauliSum, opts: &SolverOptions) -> Result<GroundStateResult> {
    if !opts.sectors {
        let csr = h.to_csr();
        let hn = csr.norm_inf();
        let tol = opts.degeneracy * hn;
        let found = lowest_manifold(&csr, tol, opts.max_degenerate, &opts.lanczos)?;
        return Ok(GroundStateResult {
            energy: found[0].value,
            state: found[0].vector.clone(),
            residual: found[0].residual,
            sector: None,
            manifold: found.into_iter().map(|p| p.vector).collect(),
            norm: hn,
        });
    }

    let n = h.n as u32;
    let flip = flip_symmetric(h);
    let top = if flip { n / 2 } else { n };
    let mut blocks = Vec::new();
    for nd in 0..=top {
        let (csr, basis) = h.to_csr_sector(nd)?;
        blocks.push((nd, csr, basis));
    }
    let hn = blocks.iter().map(|b| b.1.norm_inf()).fold(0.0, f64::max);
    let tol = opts.degeneracy * hn;
    let dim = h.dim();
    let full_mask = (1u64 << n) - 1;
    // (energy, residual, sector, full vector)
    let mut cands: Vec<(f64, f64, u32, Vec<C64>)> = Vec::new();
    let firsts = blocks.iter().map(|b| lowest(&b.1, &[], &opts.lanczos)).collect::<Result<Vec<_>>>()?;
    let emin = firsts.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    for ((nd, csr, basis), first) in blocks.iter().zip(firsts) {
        // only sectors reaching the ground level can add degenerate partners
        let found = if first.value - emin <= tol {
            extend_manifold(csr, vec![first], emin, tol, opts.max_degenerate, &opts.lanczos)?
        } else {
            vec![first]
        };
        for p in found {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            for (k, b) in basis.iter().enumerate() {
                v[*b as usize] = p.vector[k];
            }
            if flip && 2 * nd != n {
                let mut w = vec![C64::new(0.0, 0.0); dim];
                for (k, b) in basis.iter().enumerate() {
                    w[(*b ^ full_mask) as usize] = p.vector[k];
                }
                cands.push((p.value, p.residual, n - nd, w));
            }
            cands.push((p.value, p.residual, *nd, v));
        }
    }
    // stable order: energy, then sector
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(&b.2)));
    let e0 = cands[0].0;
    let manifold: Vec<(f64, f64, u32, Vec<C64>)> =
        cands.into_iter().filter(|c| c.0 - e0 <= tol).take(opts.max_degenerate).collect();
    let (energy, residual, sector, state) = manifold[0].clone();
    Ok(GroundStateResult {
        energy,
        state,
        residual,
        sector: Some(sector),
        manifold: manifold.into_iter().map(|c| c.3).collect(),
        norm: hn,
    })
}

/// Two-point correlator `C_ij = Σ_b p_b z_i(b) z_j(b)` over the first `n` bits.
pub fn zz_correlator(probs: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    let mut z = vec![0.0; n];
    for (b, p) in probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = if (b >> i) & 1 == 1 { -1.0 } else { 1.0 };
        }
        for i in 0..n {
            let pi = p * z[i];
            for j in 0..n {
                c[i * n + j] += pi * z[j];
            }
        }
    }
    c
}

/// `(1/N²) Σ_ij e^{iq·(R_i − R_j)} C_ij` with phases from ideal-lattice indices.
pub fn structure_factor_from_correlator(c: &[f64], sites: &SiteSet, q: Q) -> f64 {
    let n = sites.len();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (mi, ni) = sites.ideal_indices[i];
            let (mj, nj) = sites.ideal_indices[j];
            let ph = q.0 * (mi - mj) as f64 + q.1 * (ni - nj) as f64;
            s += C64::from_polar(c[i * n + j], ph);
        }
    }
    let s = s / (n * n) as f64;
    assert!(s.im.abs() < 1e-10, "structure factor has imaginary part {}", s.im);
    s.re
}

/// Structure factors for each q from basis probabilities; bits above `sites.len()` are traced out.
pub fn structure_factors_from_probs(probs: &[f64], sites: &SiteSet, qs: &[Q]) -> Vec<f64> {
    let c = zz_correlator(probs, sites.len());
    qs.iter().map(|q| structure_factor_from_correlator(&c, sites, *q)).collect()
}

pub fn structure_factor(state: &[C64], sites: &SiteSet, q: Q) -> Result<f64> {
    let nrm = norm(state);
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(nrm));
    }
    let probs: Vec<f64> = state.iter().map(|a| a.norm_sqr()).collect();
    Ok(structure_factors_from_probs(&probs, sites, &[q])[0])
}

/// Default wavevectors for square and dimerized lattices.
pub fn default_q_square() -> Vec<Q> {
    vec![(0.0, PI), (0.0, 0.0), (PI, 0.0), (PI, PI), (PI / 2.0, -PI / 2.0)]
}

/// Default wavevectors for the triangular lattice.
pub fn default_q_triangular() -> Vec<Q> {
    let t = 2.0 * PI / 3.0;
    vec![(0.0, 0.0), (0.0, PI), (PI, 0.0), (PI, PI), (PI / 2.0, -PI / 2.0), (t, t), (t, -t)]
}

pub fn default_q(kind: LatticeKind) -> Vec<Q> {
    match kind {
        LatticeKind::Triangular111 => default_q_triangular(),
        _ => default_q_square(),
    }
}

/// θ from 0 to π/2 inclusive.
pub fn theta_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|k| k as f64 * (PI / 2.0) / (n - 1) as f64).collect()
}

/// φ uniformly on [0, 2π).
pub fn phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default = "default_anisotropy")]
    pub anisotropy: f64,
}

fn default_anisotropy() -> f64 {
    XXZ_DELTA
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { anisotropy: XXZ_DELTA }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub theta: f64,
    pub phi: f64,
    /// One value per q; `None` when the point failed.
    pub values: Option<Vec<f64>>,
    pub energy: f64,
    pub degeneracy: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureFactorMap {
    pub q: Vec<Q>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major over (theta, phi).
    pub points: Vec<MapPoint>,
}

impl StructureFactorMap {
    pub fn at(&self, it: usize, ip: usize) -> &MapPoint {
        &self.points[it * self.phis.len() + ip]
    }

    pub fn failures(&self) -> Vec<&MapPoint> {
        self.points.iter().filter(|p| p.values.is_none()).collect()
    }
}

/// Ground-state structure factors at one field direction.
pub fn sq_point(sites: &SiteSet, q: &[Q], theta: f64, phi: f64, model: &ModelOptions, opts: &SolverOptions) -> MapPoint {
    let h = xxz_hamiltonian(sites, &FieldSpec::new(1.0, theta, phi), model.anisotropy);
    match ground_state(&h, opts) {
        Ok(gs) => MapPoint {
            theta,
            phi,
            values: Some(structure_factors_from_probs(&gs.probabilities(), sites, q)),
            energy: gs.energy,
            degeneracy: gs.manifold.len(),
            error: None,
        },
        Err(e) => MapPoint { theta, phi, values: None, energy: f64::NAN, degeneracy: 0, error: Some(e.to_string()) },
    }
}

/// Structure-factor map over a (θ, φ) grid; point order is independent of `workers`.
pub fn sweep_sq_map(
    spec: &LatticeSpec,
    q: &[Q],
    thetas: &[f64],
    phis: &[f64],
    model: &ModelOptions,
    opts: &SolverOptions,
    workers: usize,
) -> Result<StructureFactorMap> {
    if thetas.is_empty() || phis.is_empty() || q.is_empty() {
        return Err(Error::Config("empty grid or q list".into()));
    }
    let sites = build_lattice(spec)?;
    let grid: Vec<(f64, f64)> = thetas.iter().flat_map(|t| phis.iter().map(move |p| (*t, *p))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let points = pool.install(|| grid.par_iter().map(|(t, p)| sq_point(&sites, q, *t, *p, model, opts)).collect());
    Ok(StructureFactorMap { q: q.to_vec(), thetas: thetas.to_vec(), phis: phis.to_vec(), points })
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if (2.0 * PI - y) < 1e-9 {
        0.0
    } else {
        y
    }
}

fn same_q(a: Q, b: Q) -> bool {
    let eq = |x: f64, y: f64| {
        let d = wrap(x - y);
        d < 1e-9 || 2.0 * PI - d < 1e-9
    };
    (eq(a.0, b.0) && eq(a.1, b.1)) || (eq(a.0, -b.0) && eq(a.1, -b.1))
}

/// Largest deviation from 90° rotation covariance, `S(φ + π/2, q) = S(φ, (q_y, −q_x))`.
///
/// Pairs whose rotated partner is absent from the grid or q list are skipped.
pub fn covariance_residual(map: &StructureFactorMap) -> Option<f64> {
    let np = map.phis.len();
    let mut worst: Option<f64> = None;
    for ip in 0..np {
        let target = wrap(map.phis[ip] + PI / 2.0);
        let Some(jp) = map.phis.iter().position(|p| (wrap(*p) - target).abs() < 1e-9) else { continue };
        for (iq, q) in map.q.iter().enumerate() {
            let rq = (q.1, -q.0);
            let Some(jq) = map.q.iter().position(|x| same_q(*x, rq)) else { continue };
            for it in 0..map.thetas.len() {
                let (a, b) = (map.at(it, jp), map.at(it, ip));
                if let (Some(va), Some(vb)) = (&a.values, &b.values) {
                    let d = (va[iq] - vb[jq]).abs();
                    worst = Some(worst.map_or(d, |w| w.max(d)));
                }
            }
        }
    }
    worst
}
