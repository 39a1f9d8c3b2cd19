//! Hydrogen surface lattices with periodic boundaries.

use serde::{Deserialize, Serialize};

use crate::constants::{A_SURFACE, GAMMA_H};
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeKind {
    SquareIdeal001,
    DimerizedRecon001,
    Triangular111,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub n1: usize,
    pub n2: usize,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub delta: f64,
}

fn default_a() -> f64 {
    A_SURFACE
}

/// Dimerization shift used when none is configured, Å. Placeholder value.
pub const DEFAULT_DIMER_DELTA: f64 = 0.4;

impl LatticeSpec {
    pub fn new(kind: LatticeKind, n1: usize, n2: usize) -> Self {
        let delta = match kind {
            LatticeKind::DimerizedRecon001 => DEFAULT_DIMER_DELTA,
            _ => 0.0,
        };
        Self { kind, n1, n2, a: A_SURFACE, delta }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::Lattice(format!("cluster {}x{} is smaller than 2x2", self.n1, self.n2)));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::Lattice(format!("lattice constant a = {} must be positive", self.a)));
        }
        match self.kind {
            LatticeKind::DimerizedRecon001 => {
                if self.n1 % 2 != 0 {
                    return Err(Error::Lattice(format!("dimerized lattice needs even n1, got {}", self.n1)));
                }
                if !(self.delta >= 0.0 && self.delta < self.a / 2.0) {
                    return Err(Error::Lattice(format!("delta = {} outside [0, a/2)", self.delta)));
                }
            }
            _ => {
                if self.delta != 0.0 {
                    return Err(Error::Lattice(format!("delta = {} is only allowed for DimerizedRecon001", self.delta)));
                }
            }
        }
        Ok(())
    }

    /// Primitive vectors of the ideal lattice.
    pub fn primitive_vectors(&self) -> [Vec3; 2] {
        match self.kind {
            LatticeKind::Triangular111 => [[self.a, 0.0, 0.0], [self.a / 2.0, self.a * 3f64.sqrt() / 2.0, 0.0]],
            _ => [[self.a, 0.0, 0.0], [0.0, self.a, 0.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    pub positions: Vec<Vec3>,
    /// Ideal-lattice cell coordinates (m, n) of every site.
    pub ideal_indices: Vec<(i64, i64)>,
    /// Gyromagnetic ratio per site, kHz/G.
    pub gamma_n: Vec<f64>,
    pub cell_vectors: [Vec3; 2],
    /// Generating spec; `None` for hand-built site sets.
    pub spec: Option<LatticeSpec>,
}

impl SiteSet {
    /// Protons at arbitrary positions in a periodic cell; ideal indices run along the first axis.
    pub fn from_positions(positions: Vec<Vec3>, cell_vectors: [Vec3; 2]) -> Self {
        let n = positions.len();
        Self {
            gamma_n: vec![GAMMA_H; n],
            ideal_indices: (0..n as i64).map(|k| (k, 0)).collect(),
            positions,
            cell_vectors,
            spec: None,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// In-plane centroid of the ideal cluster.
    pub fn centroid(&self) -> Vec3 {
        let n = self.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    }

    /// Index of site (m, n); m runs fastest.
    pub fn index(&self, m: usize, n: usize) -> usize {
        let n1 = self.spec.as_ref().map_or(self.len(), |s| s.n1);
        n * n1 + m
    }

    /// Minimum-image in-plane displacement from `from` to `to` and all tied images.
    pub fn min_image(&self, from: Vec3, to: Vec3) -> MinImage {
        min_image(&self.cell_vectors, sub(to, from))
    }
}

/// Builds the cluster. Sites are ordered with the first cell index fastest.
pub fn build_lattice(spec: &LatticeSpec) -> Result<SiteSet> {
    spec.validate()?;
    let [a1, a2] = spec.primitive_vectors();
    let mut positions = Vec::with_capacity(spec.n_sites());
    let mut ideal = Vec::with_capacity(spec.n_sites());
    for n in 0..spec.n2 {
        for m in 0..spec.n1 {
            let (mf, nf) = (m as f64, n as f64);
            let mut p = [mf * a1[0] + nf * a2[0], mf * a1[1] + nf * a2[1], 0.0];
            if spec.kind == LatticeKind::DimerizedRecon001 {
                // columns 0-1, 2-3, ... move towards each other
                p[0] += if m % 2 == 0 { spec.delta } else { -spec.delta };
            }
            positions.push(p);
            ideal.push((m as i64, n as i64));
        }
    }
    let cell_vectors = [scale(a1, spec.n1 as f64), scale(a2, spec.n2 as f64)];
    Ok(SiteSet {
        gamma_n: vec![GAMMA_H; positions.len()],
        positions,
        ideal_indices: ideal,
        cell_vectors,
        spec: Some(spec.clone()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinImage {
    pub r: f64,
    /// Canonical displacement vector.
    pub vector: Vec3,
    /// Every image displacement that ties for the minimum distance, canonical one first.
    pub ties: Vec<Vec3>,
}

const TIE_TOL: f64 = 1e-9;

/// Nearest periodic image of `d` in the in-plane cell spanned by `cell`.
pub fn min_image(cell: &[Vec3; 2], d: Vec3) -> MinImage {
    let [l1, l2] = cell;
    // fractional coordinates in the cell basis (2x2 solve)
    let det = l1[0] * l2[1] - l1[1] * l2[0];
    let f1 = (d[0] * l2[1] - d[1] * l2[0]) / det;
    let f2 = (l1[0] * d[1] - l1[1] * d[0]) / det;
    let (s1, s2) = (f1.round(), f2.round());
    let base = [d[0] - s1 * l1[0] - s2 * l2[0], d[1] - s1 * l1[1] - s2 * l2[1], d[2]];
    let mut cands: Vec<(f64, Vec3)> = Vec::with_capacity(9);
    for k1 in -1i32..=1 {
        for k2 in -1i32..=1 {
            let v = [
                base[0] + k1 as f64 * l1[0] + k2 as f64 * l2[0],
                base[1] + k1 as f64 * l1[1] + k2 as f64 * l2[1],
                base[2],
            ];
            cands.push((norm(v), v));
        }
    }
    let rmin = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * rmin.max(1.0);
    let mut ties: Vec<Vec3> = cands.iter().filter(|c| c.0 <= rmin + tol).map(|c| c.1).collect();
    // canonical order: lexicographic on rounded components, so the choice does not depend on rounding noise
    ties.sort_by(|a, b| {
        let key = |v: &Vec3| [(v[0] / tol).round(), (v[1] / tol).round(), (v[2] / tol).round()];
        key(b).partial_cmp(&key(a)).unwrap()
    });
    ties.dedup_by(|a, b| norm(sub(*a, *b)) <= tol);
    MinImage { r: rmin, vector: ties[0], ties }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDisplacement {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    /// Unit vector from site i to site j.
    pub rhat: Vec3,
    /// Unit vectors of every tied minimum image, `rhat` first.
    pub tied: Vec<Vec3>,
}

impl PairDisplacement {
    /// Mean of `1 - 3 (r̂·b̂)²` over the tied images.
    pub fn angular_factor(&self, bhat: Vec3) -> f64 {
        let s: f64 = self.tied.iter().map(|u| 1.0 - 3.0 * dot(*u, bhat).powi(2)).sum();
        s / self.tied.len() as f64
    }

    /// Mean of `r̂_α r̂_β` over the tied images.
    pub fn mean_outer(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        let w = 1.0 / self.tied.len() as f64;
        for u in &self.tied {
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += w * u[a] * u[b];
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementTable {
    pub n: usize,
    /// Pairs with i < j in lexicographic order.
    pub pairs: Vec<PairDisplacement>,
}

impl DisplacementTable {
    fn slot(&self, i: usize, j: usize) -> usize {
        // offset of row i in the packed upper triangle
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Distance and unit vector from i to j for any ordered pair i ≠ j.
    pub fn get(&self, i: usize, j: usize) -> (f64, Vec3) {
        assert!(i != j && i < self.n && j < self.n);
        if i < j {
            let p = &self.pairs[self.slot(i, j)];
            (p.r, p.rhat)
        } else {
            let p = &self.pairs[self.slot(j, i)];
            (p.r, scale(p.rhat, -1.0))
        }
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairDisplacement {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        &self.pairs[self.slot(a, b)]
    }

    pub fn min_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.r).fold(f64::INFINITY, f64::min)
    }
}

pub fn displacement_table(sites: &SiteSet) -> DisplacementTable {
    let n = sites.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mi = sites.min_image(sites.positions[i], sites.positions[j]);
            let tied: Vec<Vec3> = mi.ties.iter().map(|v| scale(*v, 1.0 / mi.r)).collect();
            pairs.push(PairDisplacement { i, j, r: mi.r, rhat: tied[0], tied });
        }
    }
    DisplacementTable { n, pairs }
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}
