//! Many-body spin Hamiltonians in kHz: full dipolar, effective XXZ, RF-driven and defect-coupled.

use crate::constants::{GAMMA_H, K_HH};
use crate::defect::HyperfineRow;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::lattice::{displacement_table, DisplacementTable, SiteSet};
use crate::pauli::{Axis, PauliString, PauliSum};
use crate::sparse::CsrMatrix;

/// Default largest cluster for the full dipolar model.
pub const FULL_MODEL_SITE_CAP: usize = 12;

/// Default XXZ anisotropy.
pub const XXZ_DELTA: f64 = 0.5;

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Dipolar prefactor for a pair with gyromagnetic ratios in kHz/G, kHz·Å³.
pub fn pair_prefactor(g1: f64, g2: f64) -> f64 {
    K_HH * (g1 / GAMMA_H) * (g2 / GAMMA_H)
}

/// Symmetric matrix of effective couplings `J_ij`, kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub n: usize,
    pub j: Vec<f64>,
}

impl CouplingMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.j[i * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.j.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `J_ij = K/r³ · (1 − 3 (r̂·B̂)²)`, averaged over tied periodic images.
pub fn coupling_matrix(sites: &SiteSet, table: &DisplacementTable, field: &FieldSpec) -> CouplingMatrix {
    let n = sites.len();
    let bhat = field.direction();
    let mut j = vec![0.0; n * n];
    for p in &table.pairs {
        let k = pair_prefactor(sites.gamma_n[p.i], sites.gamma_n[p.j]);
        let v = k / p.r.powi(3) * p.angular_factor(bhat);
        j[p.i * n + p.j] = v;
        j[p.j * n + p.i] = v;
    }
    CouplingMatrix { n, j }
}

/// Point-dipole Hamiltonian with Zeeman term, Pauli normalization.
pub fn dipolar_hamiltonian(sites: &SiteSet, field: &FieldSpec, cap: usize) -> Result<PauliSum> {
    let n = sites.len();
    if n > cap {
        return Err(Error::SiteCap { n, cap });
    }
    let table = displacement_table(sites);
    let mut h = PauliSum::new(n);
    let bv = field.vector();
    for i in 0..n {
        for (a, ax) in AXES.iter().enumerate() {
            h.add_single(*ax, i, sites.gamma_n[i] * bv[a]);
        }
    }
    for p in &table.pairs {
        let k = pair_prefactor(sites.gamma_n[p.i], sites.gamma_n[p.j]) / p.r.powi(3);
        let m = p.mean_outer();
        for a in 0..3 {
            for b in 0..3 {
                let delta = if a == b { 1.0 } else { 0.0 };
                h.add_pair(AXES[a], p.i, AXES[b], p.j, k * (delta - 3.0 * m[a][b]));
            }
        }
    }
    Ok(h)
}

/// Smallest ratio of Zeeman frequency to pair coupling; values well above 1 justify the secular model.
pub fn rwa_ratio(sites: &SiteSet, field: &FieldSpec) -> f64 {
    let table = displacement_table(sites);
    let mut best = f64::INFINITY;
    for p in &table.pairs {
        let k = pair_prefactor(sites.gamma_n[p.i], sites.gamma_n[p.j]) / p.r.powi(3);
        let z = sites.gamma_n[p.i].min(sites.gamma_n[p.j]) * field.b;
        best = best.min(z / k);
    }
    best
}

/// `Σ_{i<j} J_ij [σz σz − Δ (σx σx + σy σy)]`.
pub fn xxz_hamiltonian(sites: &SiteSet, field: &FieldSpec, delta: f64) -> PauliSum {
    let table = displacement_table(sites);
    xxz_from_couplings(&coupling_matrix(sites, &table, field), delta)
}

pub fn xxz_from_couplings(j: &CouplingMatrix, delta: f64) -> PauliSum {
    let mut h = PauliSum::new(j.n);
    for a in 0..j.n {
        for b in a + 1..j.n {
            let v = j.get(a, b);
            h.add_pair(Axis::Z, a, Axis::Z, b, v);
            h.add_pair(Axis::X, a, Axis::X, b, -delta * v);
            h.add_pair(Axis::Y, a, Axis::Y, b, -delta * v);
        }
    }
    h
}

/// Uniform transverse drive `Σ_i σx(i)` on the first `n` qubits of a register of `width`.
pub fn drive_operator(n: usize, width: usize) -> PauliSum {
    let mut h = PauliSum::new(width);
    for i in 0..n {
        h.add_single(Axis::X, i, 1.0);
    }
    h
}

/// Adds `Ω Σσx + Δ Σσz` to a nuclear Hamiltonian.
pub fn rf_hamiltonian(base: &PauliSum, omega_rf: f64, detuning: f64) -> PauliSum {
    let mut h = base.clone();
    for i in 0..base.n {
        h.add_single(Axis::X, i, omega_rf);
        h.add_single(Axis::Z, i, detuning);
    }
    h
}

/// Appends the defect as qubit `eff.n` with `(Ω_VV/2) σx + ½(1 + σz) Σ_i A(i)·σ(i)`.
pub fn defect_coupled_hamiltonian(eff: &PauliSum, omega_vv: f64, hf: &[HyperfineRow]) -> Result<PauliSum> {
    if hf.len() != eff.n {
        return Err(Error::Dimension { expected: eff.n, got: hf.len() });
    }
    let slot = eff.n;
    let mut h = eff.widen(eff.n + 1);
    h.add_single(Axis::X, slot, 0.5 * omega_vv);
    let vz = PauliString::single(Axis::Z, slot);
    for (i, a) in hf.iter().enumerate() {
        for (ax, c) in [(Axis::Z, a.zz), (Axis::X, a.zx), (Axis::Y, a.zy)] {
            let p = PauliString::single(ax, i);
            h.add(p, 0.5 * c);
            let (_, q) = vz.mul(&p);
            h.add(q, 0.5 * c);
        }
    }
    Ok(h)
}

/// Diagonal of `Σ_i σz(i)` over the first `n` qubits for every basis index in `basis`.
pub fn total_sz_diagonal(n: usize, basis: impl Iterator<Item = u64>) -> Vec<f64> {
    let mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    basis.map(|b| n as f64 - 2.0 * (b & mask).count_ones() as f64).collect()
}

/// Relative commutator `‖[H, Σσz]‖_F / ‖H‖_F`.
pub fn magnetization_commutator(h: &CsrMatrix, n: usize) -> f64 {
    let d = total_sz_diagonal(n, 0..h.nrows() as u64);
    h.commutator_with_diagonal(&d) / h.norm_frobenius().max(f64::MIN_POSITIVE)
}

/// Compiled single-site operators over a register, optionally with a defect slot.
#[derive(Debug, Clone)]
pub struct SpinOperatorTable {
    pub n: usize,
    pub with_defect: bool,
}

impl SpinOperatorTable {
    pub fn new(n: usize, with_defect: bool) -> Self {
        Self { n, with_defect }
    }

    pub fn width(&self) -> usize {
        self.n + self.with_defect as usize
    }

    pub fn string(&self, axis: Axis, site: usize) -> PauliString {
        assert!(site < self.width());
        PauliString::single(axis, site)
    }

    pub fn defect(&self, axis: Axis) -> PauliString {
        assert!(self.with_defect);
        PauliString::single(axis, self.n)
    }

    pub fn compiled(&self, axis: Axis, site: usize) -> CsrMatrix {
        let mut s = PauliSum::new(self.width());
        s.add(self.string(axis, site), 1.0);
        s.to_csr()
    }
}
