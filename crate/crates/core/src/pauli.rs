//! Pauli strings over a register of two-level systems and their real-weighted sums.
//!
//! Bit k of a basis index is 0 for spin up and 1 for spin down, so σz(k) = 1 − 2·bit.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// `i^{|x&z|} X^x Z^z`; Hermitian for every mask pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(axis: Axis, site: usize) -> Self {
        let m = 1u64 << site;
        match axis {
            Axis::X => Self { x: m, z: 0 },
            Axis::Y => Self { x: m, z: m },
            Axis::Z => Self { x: 0, z: m },
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Product `self · other` as (phase, string).
    pub fn mul(&self, other: &PauliString) -> (C64, PauliString) {
        // X^a Z^b X^c Z^d = (-1)^{|b&c|} X^{a^c} Z^{b^d}
        let sign = if (self.z & other.x).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let out = PauliString { x: self.x ^ other.x, z: self.z ^ other.z };
        let k = self.phase_exp() as i32 + other.phase_exp() as i32 - out.phase_exp() as i32;
        (ipow(k) * sign, out)
    }

    fn phase_exp(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Amplitude and target of `P|b>`.
    pub fn apply(&self, b: u64) -> (C64, u64) {
        let s = if (self.z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        (ipow(self.phase_exp() as i32) * s, b ^ self.x)
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }
}

pub fn ipow(k: i32) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Real linear combination of Pauli strings on `n` qubits; always Hermitian.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum {
    pub n: usize,
    pub terms: BTreeMap<PauliString, f64>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        assert!(n <= 30, "register of {n} qubits is too large");
        Self { n, terms: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn add(&mut self, p: PauliString, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(p).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&p);
        }
    }

    pub fn add_single(&mut self, axis: Axis, site: usize, c: f64) {
        self.add(PauliString::single(axis, site), c);
    }

    /// Adds `c · σ_a(i) σ_b(j)` for i ≠ j.
    pub fn add_pair(&mut self, a: Axis, i: usize, b: Axis, j: usize, c: f64) {
        assert_ne!(i, j);
        let (_, p) = PauliString::single(a, i).mul(&PauliString::single(b, j));
        self.add(p, c);
    }

    pub fn add_sum(&mut self, other: &PauliSum, scale: f64) {
        assert_eq!(self.n, other.n);
        for (p, c) in &other.terms {
            self.add(*p, scale * c);
        }
    }

    /// Embeds into a larger register; existing qubits keep their indices.
    pub fn widen(&self, n: usize) -> PauliSum {
        assert!(n >= self.n);
        PauliSum { n, terms: self.terms.clone() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every term preserves the number of down spins.
    pub fn conserves_magnetization(&self) -> bool {
        let csr = self.to_csr();
        (0..csr.nrows()).all(|r| csr.row(r).all(|(c, _)| (r as u64).count_ones() == (c as u64).count_ones()))
    }

    fn grouped(&self) -> Vec<(u64, Vec<(u64, C64)>)> {
        let mut groups: BTreeMap<u64, Vec<(u64, C64)>> = BTreeMap::new();
        for (p, c) in &self.terms {
            groups.entry(p.x).or_default().push((p.z, ipow(p.phase_exp() as i32) * *c));
        }
        groups.into_iter().collect()
    }

    /// Compiles to CSR on the full 2^n space.
    pub fn to_csr(&self) -> CsrMatrix {
        let dim = self.dim();
        let groups = self.grouped();
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut row: Vec<(u32, C64)> = Vec::with_capacity(groups.len());
        for r in 0..dim as u64 {
            row.clear();
            for (x, zs) in &groups {
                let b = r ^ x;
                let v = column_value(zs, b);
                if v != C64::new(0.0, 0.0) {
                    row.push((b as u32, v));
                }
            }
            row.sort_by_key(|e| e.0);
            for (c, v) in &row {
                indices.push(*c);
                values.push(*v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix::from_parts(dim, indptr, indices, values)
    }

    /// Compiles the block acting on basis states with exactly `n_down` down spins.
    ///
    /// Returns the block and its basis (ascending); fails if a term leaves the sector.
    pub fn to_csr_sector(&self, n_down: u32) -> Result<(CsrMatrix, Vec<u64>)> {
        let basis = sector_basis(self.n, n_down);
        let mut lookup = vec![u32::MAX; self.dim()];
        for (k, b) in basis.iter().enumerate() {
            lookup[*b as usize] = k as u32;
        }
        let groups = self.grouped();
        let mut indptr = Vec::with_capacity(basis.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut row: Vec<(u32, C64)> = Vec::with_capacity(groups.len());
        for &r in &basis {
            row.clear();
            for (x, zs) in &groups {
                let b = r ^ x;
                let v = column_value(zs, b);
                if v != C64::new(0.0, 0.0) {
                    let k = lookup[b as usize];
                    if k == u32::MAX {
                        return Err(Error::Config("operator does not conserve total sigma-z; disable sector mode".into()));
                    }
                    row.push((k, v));
                }
            }
            row.sort_by_key(|e| e.0);
            for (c, v) in &row {
                indices.push(*c);
                values.push(*v);
            }
            indptr.push(indices.len());
        }
        Ok((CsrMatrix::from_parts(basis.len(), indptr, indices, values), basis))
    }
}

#[inline]
fn column_value(zs: &[(u64, C64)], b: u64) -> C64 {
    let mut v = C64::new(0.0, 0.0);
    for (z, c) in zs {
        if (z & b).count_ones() % 2 == 1 {
            v -= c;
        } else {
            v += c;
        }
    }
    v
}

/// Basis states of `n` spins with `n_down` set bits, ascending.
pub fn sector_basis(n: usize, n_down: u32) -> Vec<u64> {
    (0..1u64 << n).filter(|b| b.count_ones() == n_down).collect()
}

/// Single-site Pauli operator table on `n` qubits, compiled lazily by callers.
pub fn sigma(axis: Axis, site: usize, n: usize) -> PauliSum {
    let mut s = PauliSum::new(n);
    s.add_single(axis, site, 1.0);
    s
}
