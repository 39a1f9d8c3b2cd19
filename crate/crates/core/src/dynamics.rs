//! RF quench protocol: time evolution from the polarized product state, with and
//! without a nearby defect spin.
//!
//! Hamiltonians are in kHz and times in ms, so states evolve as `exp(-i 2π H t)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::defect::{hyperfine_tensor, position_below_center, DefectParams, HyperfineRow};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::hamiltonian::{defect_coupled_hamiltonian, drive_operator, xxz_hamiltonian, XXZ_DELTA};
use crate::lanczos::{dotc, norm};
use crate::lattice::{build_lattice, LatticeSpec, SiteSet};
use crate::pauli::{Axis, PauliSum};
use crate::solver::{structure_factors_from_probs, Q};
use crate::sparse::CsrMatrix;

/// Drive amplitude of the published protocol, kHz.
pub const PAPER_OMEGA0: f64 = 2.0e5;
/// Ramp end and total duration of the published protocol, ms.
pub const PAPER_TAU1: f64 = 2.5;
pub const PAPER_TAU2: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    #[default]
    QuadraticDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// kHz
    pub omega0: f64,
    /// kHz
    #[serde(default)]
    pub detuning: f64,
    /// ms
    pub tau1: f64,
    /// ms
    pub tau2: f64,
    #[serde(default)]
    pub ramp: Ramp,
}

impl ProtocolParams {
    pub fn new(omega0: f64, tau1: f64, tau2: f64) -> Self {
        Self { omega0, detuning: 0.0, tau1, tau2, ramp: Ramp::QuadraticDown }
    }

    /// 200 MHz drive, τ2 = 2τ1 = 5 ms, no detuning.
    pub fn paper() -> Self {
        Self::new(PAPER_OMEGA0, PAPER_TAU1, PAPER_TAU2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 >= 0.0 && self.omega0.is_finite()) {
            return Err(Error::Protocol(format!("omega0 = {} must be >= 0", self.omega0)));
        }
        if !(self.tau1 > 0.0 && self.tau1 <= self.tau2 && self.tau2.is_finite()) {
            return Err(Error::Protocol(format!("need 0 < tau1 <= tau2, got tau1 = {}, tau2 = {}", self.tau1, self.tau2)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::Protocol("detuning must be finite".into()));
        }
        Ok(())
    }

    /// Drops the part of the ramp where the drive exceeds `cap`.
    ///
    /// The remaining curve is the same quadratic, started at amplitude `cap`; the
    /// free segment keeps its length.
    pub fn truncated(&self, cap: f64) -> Self {
        if !(cap > 0.0) || cap >= self.omega0 {
            return *self;
        }
        let tau1 = self.tau1 * (cap / self.omega0).sqrt();
        Self { omega0: cap, tau1, tau2: tau1 + (self.tau2 - self.tau1), ..*self }
    }

    /// Protocol with `omega0 = omega_factor * jmax` and `tau1 = tau_factor / jmax`, `tau2 = 2 tau1`.
    pub fn scaled(jmax: f64, omega_factor: f64, tau_factor: f64) -> Self {
        let tau1 = tau_factor / jmax;
        Self::new(omega_factor * jmax, tau1, 2.0 * tau1)
    }

    /// Number of drive periods in the run, a rough cost measure.
    pub fn cycles(&self) -> f64 {
        self.omega0 * self.tau1 / 3.0
    }
}

/// How a configured protocol is brought to a runnable size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolScaling {
    /// Run the parameters as given.
    Literal,
    /// Start the ramp where the drive equals `factor * max(|J|, |A|)`.
    Truncated { factor: f64 },
    /// Replace the protocol by `omega0 = omega_factor * max|J|`, `tau1 = tau_factor / max|J|`.
    Ratio { omega_factor: f64, tau_factor: f64 },
}

impl Default for ProtocolScaling {
    fn default() -> Self {
        ProtocolScaling::Truncated { factor: 50.0 }
    }
}

impl ProtocolScaling {
    /// `scale` is the largest coupling in the model, kHz.
    pub fn apply(&self, p: &ProtocolParams, scale: f64) -> ProtocolParams {
        match *self {
            ProtocolScaling::Literal => *p,
            ProtocolScaling::Truncated { factor } => p.truncated(factor * scale),
            ProtocolScaling::Ratio { omega_factor, tau_factor } => {
                let mut q = ProtocolParams::scaled(scale, omega_factor, tau_factor);
                q.detuning = p.detuning;
                q
            }
        }
    }
}

pub fn ramp_value(p: &ProtocolParams, t: f64) -> Result<f64> {
    if !(0.0..=p.tau2).contains(&t) {
        return Err(Error::TimeRange { t, tau2: p.tau2 });
    }
    Ok(ramp_unchecked(p, t))
}

fn ramp_unchecked(p: &ProtocolParams, t: f64) -> f64 {
    match p.ramp {
        Ramp::QuadraticDown if t < p.tau1 => p.omega0 * (1.0 - t / p.tau1).powi(2),
        Ramp::QuadraticDown => 0.0,
    }
}

/// `H(t) = base + Ω(t) drive`.
#[derive(Debug, Clone)]
pub struct DrivenHamiltonian {
    pub base: CsrMatrix,
    pub drive: CsrMatrix,
}

impl DrivenHamiltonian {
    pub fn new(base: &PauliSum, drive: &PauliSum) -> Result<Self> {
        if base.n != drive.n {
            return Err(Error::Dimension { expected: base.n, got: drive.n });
        }
        Ok(Self { base: base.to_csr(), drive: drive.to_csr() })
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    /// `y = (cb base + cd drive) x`
    pub fn apply(&self, cb: f64, cd: f64, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        self.base.matvec_add(cb, x, y);
        if cd != 0.0 {
            self.drive.matvec_add(cd, x, y);
        }
    }

    pub fn norm_bound(&self, cb: f64, cd: f64) -> f64 {
        cb.abs() * self.base.norm_inf() + cd.abs() * self.drive.norm_inf()
    }

    pub fn energy(&self, omega: f64, psi: &[C64]) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply(1.0, omega, psi, &mut y);
        dotc(psi, &y).re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveOptions {
    /// Local error target per accepted step (state 2-norm).
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Uniform samples over [0, tau2], endpoints included.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Largest Krylov space per exponential.
    #[serde(default = "default_krylov")]
    pub krylov: usize,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_samples() -> usize {
    200
}
fn default_krylov() -> usize {
    40
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: default_tol(), samples: default_samples(), krylov: default_krylov() }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Observer output at each sample.
    pub observables: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// `⟨H(t)⟩`, kHz.
    pub energies: Vec<f64>,
    pub final_state: Vec<C64>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// `exp(-i s A) v` by Lanczos, where `A` is Hermitian and applied by `op`.
///
/// Returns `None` when `mmax` vectors do not reach `tol`.
pub fn expm_krylov(
    op: &dyn Fn(&[C64], &mut [C64]),
    v: &[C64],
    s: f64,
    tol: f64,
    mmax: usize,
) -> Option<Vec<C64>> {
    let dim = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 || s == 0.0 {
        return Some(v.to_vec());
    }
    let zero = C64::new(0.0, 0.0);
    let mmax = mmax.clamp(2, dim.max(2));
    let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![zero; dim];
    loop {
        let j = basis.len() - 1;
        op(&basis[j], &mut w);
        let a = dotc(&basis[j], &w).re;
        alpha.push(a);
        // full reorthogonalization keeps the small problem faithful
        for _ in 0..2 {
            for b in &basis {
                let c = dotc(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let bnext = norm(&w);
        let m = alpha.len();
        let mut t = DMatrix::<C64>::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = C64::new(0.0, -s * alpha[k]);
            if k + 1 < m {
                t[(k, k + 1)] = C64::new(0.0, -s * beta[k]);
                t[(k + 1, k)] = C64::new(0.0, -s * beta[k]);
            }
        }
        let e = t.exp();
        let happy = bnext <= 1e-14 * (alpha.iter().fold(0.0f64, |x, a| x.max(a.abs())) + 1.0) || m == dim;
        let err = beta0 * bnext * s.abs() * e[(m - 1, 0)].norm();
        if happy || err <= tol {
            let mut out = vec![zero; dim];
            for (k, b) in basis.iter().enumerate() {
                let c = e[(k, 0)] * beta0;
                for (oi, bi) in out.iter_mut().zip(b) {
                    *oi += c * bi;
                }
            }
            return Some(out);
        }
        if m >= mmax {
            return None;
        }
        beta.push(bnext);
        basis.push(w.iter().map(|x| x / bnext).collect());
    }
}

/// `exp(-i 2π dt (cb base + cd drive)) psi`, splitting the interval until Krylov converges.
fn exp_const(h: &DrivenHamiltonian, cb: f64, cd: f64, dt: f64, psi: &[C64], tol: f64, mmax: usize) -> Result<Vec<C64>> {
    let op = |x: &[C64], y: &mut [C64]| h.apply(cb, cd, x, y);
    let scale = h.norm_bound(cb, cd) * 2.0 * PI * dt;
    let mut pieces = (scale / 8.0).ceil().max(1.0) as usize;
    loop {
        let sub = dt / pieces as f64;
        let mut cur = psi.to_vec();
        let mut ok = true;
        for _ in 0..pieces {
            match expm_krylov(&op, &cur, 2.0 * PI * sub, tol / pieces as f64, mmax) {
                Some(next) => cur = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(cur);
        }
        pieces *= 2;
        if pieces > 1 << 20 {
            return Err(Error::StepUnderflow { t: f64::NAN });
        }
    }
}

// fourth-order commutator-free Magnus coefficients
const C1: f64 = 0.5 - 0.288_675_134_594_812_9;
const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
const A1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const A2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;

fn cf4_step(h: &DrivenHamiltonian, p: &ProtocolParams, t: f64, dt: f64, psi: &[C64], ktol: f64, mmax: usize) -> Result<Vec<C64>> {
    let w1 = ramp_unchecked(p, t + C1 * dt);
    let w2 = ramp_unchecked(p, t + C2 * dt);
    let mid = exp_const(h, A1 + A2, A2 * w1 + A1 * w2, dt, psi, ktol, mmax)?;
    exp_const(h, A1 + A2, A1 * w1 + A2 * w2, dt, &mid, ktol, mmax)
}

fn diff_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates `i dψ/dt = 2π H(t) ψ` over `[0, tau2]`.
///
/// The ramp segment uses an adaptive fourth-order Magnus scheme with step
/// doubling; the free segment is a single constant-Hamiltonian exponential
/// between samples. `observe` is evaluated at every sample.
pub fn evolve(
    h: &DrivenHamiltonian,
    psi0: &[C64],
    p: &ProtocolParams,
    opts: &EvolveOptions,
    observe: &dyn Fn(&[C64]) -> Vec<f64>,
) -> Result<Trajectory> {
    p.validate()?;
    if psi0.len() != h.dim() {
        return Err(Error::Dimension { expected: h.dim(), got: psi0.len() });
    }
    let n0 = norm(psi0);
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(n0));
    }
    let ns = opts.samples.max(2);
    let times: Vec<f64> = (0..ns).map(|k| p.tau2 * k as f64 / (ns - 1) as f64).collect();
    let ktol = opts.tol * 1e-3;
    let mmax = opts.krylov;

    let mut traj = Trajectory {
        times: times.clone(),
        observables: Vec::with_capacity(ns),
        norms: Vec::with_capacity(ns),
        energies: Vec::with_capacity(ns),
        final_state: Vec::new(),
        steps: 0,
        rejected: 0,
    };
    let record = |traj: &mut Trajectory, t: f64, psi: &[C64]| {
        traj.observables.push(observe(psi));
        traj.norms.push(norm(psi));
        traj.energies.push(h.energy(ramp_unchecked(p, t), psi));
    };

    let mut psi = psi0.to_vec();
    record(&mut traj, 0.0, &psi);
    let mut t = 0.0;
    let mut dt = (0.05 / (h.norm_bound(1.0, p.omega0) + 1e-300)).min(p.tau1);
    for &target in &times[1..] {
        // ramp part of this interval
        let ramp_end = target.min(p.tau1);
        while t < ramp_end - 1e-15 * p.tau2 {
            let h_try = dt.min(ramp_end - t);
            if h_try <= 1e-14 * p.tau2.max(1e-300) {
                return Err(Error::StepUnderflow { t });
            }
            let big = cf4_step(h, p, t, h_try, &psi, ktol, mmax)?;
            let half = cf4_step(h, p, t, 0.5 * h_try, &psi, ktol, mmax)?;
            let small = cf4_step(h, p, t + 0.5 * h_try, 0.5 * h_try, &half, ktol, mmax)?;
            let err = diff_norm(&big, &small) / 15.0;
            let fac = if err > 0.0 { 0.9 * (opts.tol / err).powf(0.2) } else { 4.0 };
            if err <= opts.tol {
                psi = small;
                t += h_try;
                traj.steps += 1;
                // a step clipped by a sample boundary says nothing about the best size
                if h_try >= dt * 0.999 {
                    dt = h_try * fac.clamp(0.2, 4.0);
                }
            } else {
                traj.rejected += 1;
                dt = h_try * fac.clamp(0.1, 0.9);
            }
        }
        if target > t {
            // free segment: constant Hamiltonian
            psi = exp_const(h, 1.0, 0.0, target - t, &psi, ktol, mmax)
                .map_err(|_| Error::StepUnderflow { t })?;
            traj.steps += 1;
        }
        t = target;
        record(&mut traj, t, &psi);
    }
    traj.final_state = psi;
    Ok(traj)
}

/// `⊗ (|↓⟩ - |↑⟩)/√2` on `n` qubits (bit value 1 is spin down).
pub fn x_state(n: usize) -> Vec<C64> {
    let dim = 1usize << n;
    let amp = (dim as f64).sqrt().recip();
    (0..dim)
        .map(|b| {
            let ups = n as u32 - (b as u64).count_ones();
            C64::new(if ups % 2 == 0 { amp } else { -amp }, 0.0)
        })
        .collect()
}

/// Basis probabilities of the first `n` qubits, the rest traced out.
pub fn reduced_probabilities(psi: &[C64], n: usize) -> Vec<f64> {
    let mask = (1usize << n) - 1;
    let mut p = vec![0.0; 1 << n];
    for (b, a) in psi.iter().enumerate() {
        p[b & mask] += a.norm_sqr();
    }
    p
}

/// `⟨σz⟩` of qubit `k`.
pub fn qubit_sz(psi: &[C64], k: usize) -> f64 {
    psi.iter().enumerate().map(|(b, a)| if (b >> k) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() }).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchOptions {
    #[serde(default)]
    pub evolve: EvolveOptions,
    #[serde(default = "default_anisotropy")]
    pub anisotropy: f64,
}

fn default_anisotropy() -> f64 {
    XXZ_DELTA
}

impl Default for QuenchOptions {
    fn default() -> Self {
        Self { evolve: EvolveOptions::default(), anisotropy: XXZ_DELTA }
    }
}

#[derive(Debug, Clone)]
pub struct QuenchResult {
    pub q: Vec<Q>,
    /// Structure factors of the final (nuclear) state, one per q.
    pub final_sq: Vec<f64>,
    /// Per sample: S(q) for every q, then ⟨σz⟩ of the defect when present.
    pub trajectory: Trajectory,
    pub protocol: ProtocolParams,
    pub defect_sz: Option<f64>,
}

impl QuenchResult {
    pub fn defect_trace(&self) -> Option<Vec<f64>> {
        self.defect_sz?;
        Some(self.trajectory.observables.iter().map(|o| *o.last().unwrap()).collect())
    }
}

fn run_quench(
    sites: &SiteSet,
    nuclear: &PauliSum,
    full: &PauliSum,
    q: &[Q],
    p: &ProtocolParams,
    opts: &QuenchOptions,
) -> Result<QuenchResult> {
    let n = sites.len();
    let width = full.n;
    let mut base = full.clone();
    for i in 0..n {
        base.add_single(Axis::Z, i, p.detuning);
    }
    debug_assert_eq!(nuclear.n, n);
    let h = DrivenHamiltonian::new(&base, &drive_operator(n, width))?;
    let with_defect = width > n;
    let observe = |psi: &[C64]| {
        let mut out = structure_factors_from_probs(&reduced_probabilities(psi, n), sites, q);
        if with_defect {
            out.push(qubit_sz(psi, n));
        }
        out
    };
    let traj = evolve(&h, &x_state(width), p, &opts.evolve, &observe)?;
    let last = traj.observables.last().unwrap();
    Ok(QuenchResult {
        q: q.to_vec(),
        final_sq: last[..q.len()].to_vec(),
        defect_sz: with_defect.then(|| last[q.len()]),
        protocol: *p,
        trajectory: traj,
    })
}

/// RF quench of the proton lattice from `|X⟩`; S(q) of the final state.
pub fn quench_protocol(
    spec: &LatticeSpec,
    field: &FieldSpec,
    p: &ProtocolParams,
    q: &[Q],
    opts: &QuenchOptions,
) -> Result<QuenchResult> {
    let sites = build_lattice(spec)?;
    let h = xxz_hamiltonian(&sites, field, opts.anisotropy);
    run_quench(&sites, &h, &h, q, p, opts)
}

/// Hyperfine rows for a defect beneath the cluster centre at `depth_nm`.
pub fn defect_hyperfine(sites: &SiteSet, depth_nm: f64, gamma_e: f64) -> Result<Vec<HyperfineRow>> {
    if !(depth_nm > 0.0) {
        return Err(Error::Defect(format!("defect depth {depth_nm} nm must be positive")));
    }
    let p = DefectParams { position: position_below_center(sites, depth_nm), gamma_e, ..Default::default() };
    hyperfine_tensor(&p, sites)
}

/// Quench with the defect coupled through explicit hyperfine rows.
pub fn quench_with_hyperfine(
    spec: &LatticeSpec,
    field: &FieldSpec,
    p: &ProtocolParams,
    q: &[Q],
    omega_vv: f64,
    hf: &[HyperfineRow],
    opts: &QuenchOptions,
) -> Result<QuenchResult> {
    let sites = build_lattice(spec)?;
    let nuclear = xxz_hamiltonian(&sites, field, opts.anisotropy);
    let full = defect_coupled_hamiltonian(&nuclear, omega_vv, hf)?;
    run_quench(&sites, &nuclear, &full, q, p, opts)
}

/// Quench with a transversely oriented defect `depth_nm` below the cluster centre.
pub fn quench_with_defect(
    spec: &LatticeSpec,
    field: &FieldSpec,
    p: &ProtocolParams,
    q: &[Q],
    omega_vv: f64,
    depth_nm: f64,
    opts: &QuenchOptions,
) -> Result<QuenchResult> {
    let sites = build_lattice(spec)?;
    let hf = defect_hyperfine(&sites, depth_nm, crate::constants::GAMMA_E)?;
    quench_with_hyperfine(spec, field, p, q, omega_vv, &hf, opts)
}

/// Largest coupling scale of the quench model: `max(|J|, |A|)` in kHz.
pub fn coupling_scale(sites: &SiteSet, field: &FieldSpec, hf: &[HyperfineRow]) -> f64 {
    let table = crate::lattice::displacement_table(sites);
    let j = crate::hamiltonian::coupling_matrix(sites, &table, field).max_abs();
    hf.iter().flat_map(|r| [r.zz.abs(), r.zx.abs(), r.zy.abs()]).fold(j, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::magnetization_commutator;
    use crate::lattice::LatticeKind;
    use crate::solver::{default_q_square, ground_state, SolverOptions};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dense_expm(h: &CsrMatrix, s: f64, v: &[C64]) -> Vec<C64> {
        let a = h.to_dense() * C64::new(0.0, -s);
        let e = a.exp();
        let x = nalgebra::DVector::from_column_slice(v);
        (e * x).iter().copied().collect()
    }

    #[test]
    fn ramp_endpoints() {
        let p = ProtocolParams::new(200.0, 2.0, 5.0);
        assert_eq!(ramp_value(&p, 0.0).unwrap(), 200.0);
        assert_abs_diff_eq!(ramp_value(&p, 1.0).unwrap(), 50.0, epsilon = 1e-12);
        assert_eq!(ramp_value(&p, 2.0).unwrap(), 0.0);
        assert_eq!(ramp_value(&p, 4.0).unwrap(), 0.0);
        assert!(ramp_value(&p, 5.1).is_err());
        assert!(ramp_value(&p, -0.1).is_err());
    }

    #[test]
    fn truncation_keeps_the_tail_of_the_ramp() {
        let p = ProtocolParams::paper();
        let q = p.truncated(500.0);
        assert_abs_diff_eq!(q.omega0, 500.0);
        assert_abs_diff_eq!(q.tau2 - q.tau1, p.tau2 - p.tau1, epsilon = 1e-12);
        // same amplitude at the same time before the ramp end
        for s in [0.0, 0.01, 0.05, 0.1] {
            let a = ramp_value(&p, p.tau1 - s).unwrap();
            let b = ramp_value(&q, q.tau1 - s).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9 * p.omega0);
        }
        assert_eq!(p.truncated(1e9), p);
    }

    #[test]
    fn invalid_protocols_are_rejected() {
        assert!(ProtocolParams::new(1.0, 0.0, 1.0).validate().is_err());
        assert!(ProtocolParams::new(1.0, 2.0, 1.0).validate().is_err());
        assert!(ProtocolParams::new(-1.0, 1.0, 1.0).validate().is_err());
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2)).unwrap();
        let mut h = xxz_hamiltonian(&s, &FieldSpec::new(1.0, 0.4, 0.3), XXZ_DELTA);
        h.add_sum(&drive_operator(4, 4), 3.0);
        let csr = h.to_csr();
        let v = x_state(4);
        for t in [1e-3, 0.02, 0.1] {
            let want = dense_expm(&csr, 2.0 * PI * t, &v);
            let got = exp_const(&DrivenHamiltonian { base: csr.clone(), drive: csr.clone() }, 1.0, 0.0, t, &v, 1e-12, 30).unwrap();
            assert!(diff_norm(&want, &got) < 1e-10, "{}", diff_norm(&want, &got));
        }
    }

    #[test]
    fn constant_hamiltonian_matches_dense_expm() {
        let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2)).unwrap();
        let base = xxz_hamiltonian(&s, &FieldSpec::new(1.0, 0.7, 0.2), XXZ_DELTA);
        let h = DrivenHamiltonian::new(&base, &drive_operator(4, 4)).unwrap();
        // no drive: the whole run is a constant Hamiltonian
        let p = ProtocolParams::new(0.0, 0.3, 1.0);
        let psi0 = {
            let mut v = vec![C64::new(0.0, 0.0); 16];
            v[3] = C64::new(0.6, 0.0);
            v[12] = C64::new(0.0, 0.8);
            v
        };
        let traj = evolve(&h, &psi0, &p, &EvolveOptions { samples: 7, ..Default::default() }, &|_| vec![]).unwrap();
        let want = dense_expm(&h.base, 2.0 * PI * 1.0, &psi0);
        assert!(diff_norm(&want, &traj.final_state) < 1e-7);
    }

    #[test]
    fn single_qubit_pulse_area() {
        // H = Ω(t) σx: exact rotation by the area ∫Ω dt = Ω0 τ1 / 3
        let mut base = PauliSum::new(1);
        base.add_single(Axis::Z, 0, 0.0);
        let h = DrivenHamiltonian::new(&base, &drive_operator(1, 1)).unwrap();
        let p = ProtocolParams::new(1.3, 0.9, 1.2);
        let psi0 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let traj = evolve(&h, &psi0, &p, &EvolveOptions::default(), &|_| vec![]).unwrap();
        let area = p.omega0 * p.tau1 / 3.0;
        let phase = 2.0 * PI * area;
        let want = [C64::new(phase.cos(), 0.0), C64::new(0.0, -phase.sin())];
        assert!(diff_norm(&want, &traj.final_state) < 1e-7);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = DrivenHamiltonian::new(&PauliSum::new(3), &PauliSum::new(3)).unwrap();
        let psi0 = x_state(3);
        let traj = evolve(&h, &psi0, &ProtocolParams::new(5.0, 1.0, 2.0), &EvolveOptions::default(), &|_| vec![]).unwrap();
        assert!(diff_norm(&psi0, &traj.final_state) < 1e-14);
    }

    #[test]
    fn x_state_is_the_drive_ground_state() {
        let n = 3;
        let psi = x_state(n);
        assert_abs_diff_eq!(norm(&psi), 1.0, epsilon = 1e-14);
        let drive = drive_operator(n, n).to_csr();
        let e = dotc(&psi, &drive.apply(&psi)).re;
        assert_abs_diff_eq!(e, -(n as f64), epsilon = 1e-12);
    }

    #[test]
    fn x_state_has_flat_structure_factor() {
        let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2)).unwrap();
        let q = default_q_square();
        let sq = structure_factors_from_probs(&reduced_probabilities(&x_state(4), 4), &s, &q);
        for v in sq {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn undriven_quench_conserves_uniform_structure_factor() {
        // without drive only S(0,0) ∝ ⟨M²⟩ is conserved; the rest start at 1/N and move
        let spec = LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2);
        let q = default_q_square();
        let p = ProtocolParams::new(0.0, 0.05, 0.2);
        let r = quench_protocol(&spec, &FieldSpec::new(1.0, 0.6, 0.4), &p, &q, &QuenchOptions::default()).unwrap();
        for v in &r.trajectory.observables[0] {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-12);
        }
        let i0 = q.iter().position(|x| *x == (0.0, 0.0)).unwrap();
        for o in &r.trajectory.observables {
            assert_abs_diff_eq!(o[i0], 0.25, epsilon = 1e-8);
        }
    }

    #[test]
    fn unitarity_and_free_energy_conservation() {
        let spec = LatticeSpec::new(LatticeKind::DimerizedRecon001, 2, 2);
        let sites = build_lattice(&spec).unwrap();
        let field = FieldSpec::new(1.0, 0.3, 0.2);
        let jmax = coupling_scale(&sites, &field, &[]);
        let p = ProtocolParams::paper().truncated(50.0 * jmax);
        let opts = QuenchOptions::default();
        let r = quench_protocol(&spec, &field, &p, &default_q_square(), &opts).unwrap();
        let tr = &r.trajectory;
        assert!(tr.max_norm_drift() < 10.0 * opts.evolve.tol, "{}", tr.max_norm_drift());
        let hn = xxz_hamiltonian(&sites, &field, XXZ_DELTA).to_csr().norm_inf();
        let free: Vec<f64> = tr.times.iter().zip(&tr.energies).filter(|(t, _)| **t >= p.tau1).map(|(_, e)| *e).collect();
        let spread = free.iter().fold(0.0f64, |m, e| m.max((e - free[0]).abs()));
        assert!(spread < 1e-6 * hn, "{spread}");
    }

    #[test]
    fn zeroed_hyperfine_decouples() {
        let spec = LatticeSpec::new(LatticeKind::DimerizedRecon001, 2, 2);
        let field = FieldSpec::new(1.0, 0.2, 0.5);
        let q = default_q_square();
        let p = ProtocolParams::new(300.0, 0.1, 0.2);
        let opts = QuenchOptions { evolve: EvolveOptions { samples: 5, ..Default::default() }, ..Default::default() };
        let a = quench_protocol(&spec, &field, &p, &q, &opts).unwrap();
        let b = quench_with_hyperfine(&spec, &field, &p, &q, 0.0, &[HyperfineRow::zero(); 4], &opts).unwrap();
        for (x, y) in a.final_sq.iter().zip(&b.final_sq) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
        // the idle defect stays in its superposition
        assert_abs_diff_eq!(b.defect_sz.unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn slow_ramp_reaches_ground_state() {
        // well-separated ground state: θ = 0 on the dimerized 2×2 cell
        let spec = LatticeSpec::new(LatticeKind::DimerizedRecon001, 2, 2);
        let sites = build_lattice(&spec).unwrap();
        let field = FieldSpec::new(1.0, 0.0, 0.0);
        let h = xxz_hamiltonian(&sites, &field, XXZ_DELTA);
        let gs = ground_state(&h, &SolverOptions { sectors: false, ..Default::default() }).unwrap();
        assert!(!gs.degenerate());
        let jmax = coupling_scale(&sites, &field, &[]);
        let mut fids = Vec::new();
        for tau in [1.0, 4.0, 100.0] {
            let p = ProtocolParams::scaled(jmax, 50.0, tau);
            let r = quench_protocol(&spec, &field, &p, &default_q_square(), &QuenchOptions::default()).unwrap();
            let f = dotc(&gs.state, &r.trajectory.final_state).norm_sqr();
            fids.push(f);
        }
        assert!(fids[2] > 0.99, "{fids:?}");
        assert!(fids[0] <= fids[1] + 1e-9 && fids[1] <= fids[2] + 1e-9, "{fids:?}");
    }

    #[test]
    fn drive_breaks_magnetization_but_xxz_does_not() {
        let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2)).unwrap();
        let h = xxz_hamiltonian(&s, &FieldSpec::new(1.0, 0.5, 0.5), XXZ_DELTA);
        assert!(magnetization_commutator(&h.to_csr(), 4) < 1e-12);
        let mut d = h.clone();
        d.add_sum(&drive_operator(4, 4), 1.0);
        assert!(magnetization_commutator(&d.to_csr(), 4) > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn norm_is_conserved(theta in 0.0f64..1.5, phi in 0.0f64..6.2, om in 0.0f64..200.0) {
            let spec = LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2);
            let p = ProtocolParams::new(om, 0.05, 0.08);
            let opts = QuenchOptions { evolve: EvolveOptions { samples: 9, ..Default::default() }, ..Default::default() };
            let r = quench_protocol(&spec, &FieldSpec::new(1.0, theta, phi), &p, &[(0.0, 0.0)], &opts).unwrap();
            prop_assert!(r.trajectory.max_norm_drift() < 10.0 * opts.evolve.tol);
        }
    }
}
