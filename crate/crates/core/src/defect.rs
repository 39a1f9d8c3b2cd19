//! Spin-1 defect: zero-field splitting, Zeeman levels, excited-state mixing and
//! the point-dipole hyperfine coupling to the surface protons.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::{k_eh, D_ZFS, GAMMA_E};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::lattice::{dot, SiteSet, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectParams {
    /// Axial splitting, MHz.
    #[serde(default = "default_d")]
    pub d: f64,
    /// Transverse splitting, MHz.
    #[serde(default)]
    pub e: f64,
    /// MHz/G.
    #[serde(default = "default_gamma_e")]
    pub gamma_e: f64,
    /// Å, below the proton plane when z < 0.
    #[serde(default)]
    pub position: Vec3,
}

fn default_d() -> f64 {
    D_ZFS
}

fn default_gamma_e() -> f64 {
    GAMMA_E
}

impl Default for DefectParams {
    fn default() -> Self {
        Self { d: D_ZFS, e: 0.0, gamma_e: GAMMA_E, position: [0.0; 3] }
    }
}

impl DefectParams {
    pub fn new(d: f64, e: f64) -> Self {
        Self { d, e, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) {
            return Err(Error::Defect(format!("D = {} must be positive", self.d)));
        }
        if !(self.e >= 0.0) {
            return Err(Error::Defect(format!("E = {} must be non-negative", self.e)));
        }
        if !(self.gamma_e > 0.0) {
            return Err(Error::Defect(format!("gamma_e = {} must be positive", self.gamma_e)));
        }
        Ok(())
    }
}

/// Spin-1 matrices in the basis |+1>, |0>, |-1>.
pub fn spin1() -> [Matrix3<C64>; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    let z = C64::new(0.0, 0.0);
    let sx = Matrix3::new(z, r(s), z, r(s), z, r(s), z, r(s), z);
    let sy = Matrix3::new(z, i(-s), z, i(s), z, i(-s), z, i(s), z);
    let sz = Matrix3::new(r(1.0), z, z, z, z, z, z, z, r(-1.0));
    [sx, sy, sz]
}

/// `D Sz² + E (Sx² − Sy²) + γe B·S`, MHz.
pub fn zfs_hamiltonian(p: &DefectParams, field: &FieldSpec) -> Matrix3<C64> {
    let [sx, sy, sz] = spin1();
    let b = field.vector();
    let re = |x: f64| C64::new(x, 0.0);
    (sz * sz) * re(p.d)
        + (sx * sx - sy * sy) * re(p.e)
        + (sx * re(b[0]) + sy * re(b[1]) + sz * re(b[2])) * re(p.gamma_e)
}

/// Eigenvalues (ascending) and matching eigenvector columns.
pub fn zfs_eigen(p: &DefectParams, field: &FieldSpec) -> ([f64; 3], Matrix3<C64>) {
    let eig = SymmetricEigen::new(zfs_hamiltonian(p, field));
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = [eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]], eig.eigenvalues[idx[2]]];
    let vecs = Matrix3::from_columns(&[
        eig.eigenvectors.column(idx[0]).into_owned(),
        eig.eigenvectors.column(idx[1]).into_owned(),
        eig.eigenvectors.column(idx[2]).into_owned(),
    ]);
    (vals, vecs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub b: f64,
    pub energies: [f64; 3],
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Levels versus field magnitude along `direction`.
///
/// Columns are ordered ascending at the first field value and afterwards follow
/// the eigenvector with the largest overlap, so crossings keep their branch.
/// A degenerate row restarts the ordering.
pub fn zfs_spectrum_sweep(p: &DefectParams, b_values: &[f64], direction: Vec3) -> Vec<SpectrumRow> {
    let mut rows = Vec::with_capacity(b_values.len());
    let mut prev: Option<Matrix3<C64>> = None;
    for &b in b_values {
        let (vals, vecs) = zfs_eigen(p, &FieldSpec::from_vector(b, direction));
        let perm = match &prev {
            None => [0, 1, 2],
            Some(pv) => {
                let ov = pv.adjoint() * vecs;
                let score = |q: &[usize; 3]| (0..3).map(|k| ov[(k, q[k])].norm_sqr()).sum::<f64>();
                // keep ascending order unless another assignment is clearly better (ties come from degeneracy)
                let mut best = [0, 1, 2];
                for q in &PERMS[1..] {
                    if score(q) > score(&best) + 1e-6 {
                        best = *q;
                    }
                }
                best
            }
        };
        let energies = [vals[perm[0]], vals[perm[1]], vals[perm[2]]];
        // degenerate eigenvectors are an arbitrary basis, so they give nothing to follow
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let degenerate = (vals[1] - vals[0]).abs() < 1e-9 * scale || (vals[2] - vals[1]).abs() < 1e-9 * scale;
        if degenerate {
            prev = None;
            rows.push(SpectrumRow { b, energies });
            continue;
        }
        prev = Some(Matrix3::from_columns(&[
            vecs.column(perm[0]).into_owned(),
            vecs.column(perm[1]).into_owned(),
            vecs.column(perm[2]).into_owned(),
        ]));
        rows.push(SpectrumRow { b, energies });
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingCoefficients {
    pub a: f64,
    pub b: f64,
}

/// Components of the excited level connected to |+1>, written `a|+1> + b|-1>`.
///
/// Only the field component along the defect axis enters.
pub fn mixing_coefficients(p: &DefectParams, field: &FieldSpec) -> Result<MixingCoefficients> {
    let h = p.gamma_e * field.vector()[2];
    let e = p.e;
    if h == 0.0 && e == 0.0 {
        return Err(Error::MixingDegenerate);
    }
    let r = h.hypot(e);
    let t = e / (r + h.abs());
    let a = 1.0 / (1.0 + t * t).sqrt();
    let sign = if h < 0.0 { -1.0 } else { 1.0 };
    Ok(MixingCoefficients { a, b: sign * t * a })
}

/// Full electron-nuclear dipolar tensor for displacement `r` (Å), kHz.
pub fn dipolar_tensor(k: f64, r: Vec3) -> [[f64; 3]; 3] {
    let d = dot(r, r).sqrt();
    let u = [r[0] / d, r[1] / d, r[2] / d];
    let mut t = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let delta = if a == b { 1.0 } else { 0.0 };
            t[a][b] = k * (delta - 3.0 * u[a] * u[b]) / (d * d * d);
        }
    }
    t
}

/// z-row of the hyperfine tensor at one proton, kHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperfineRow {
    pub zz: f64,
    pub zx: f64,
    pub zy: f64,
}

impl HyperfineRow {
    pub fn zero() -> Self {
        Self { zz: 0.0, zx: 0.0, zy: 0.0 }
    }

    pub fn magnitude(&self) -> f64 {
        (self.zz * self.zz + self.zx * self.zx + self.zy * self.zy).sqrt()
    }
}

/// Full hyperfine tensors for every site; in-plane offsets use the nearest periodic image.
///
/// `gamma_e` in MHz/G, per-site nuclear ratios taken from `sites`.
pub fn hyperfine_tensors(p: &DefectParams, sites: &SiteSet) -> Result<Vec<[[f64; 3]; 3]>> {
    let mut out = Vec::with_capacity(sites.len());
    for (i, pos) in sites.positions.iter().enumerate() {
        let mi = sites.min_image(p.position, *pos);
        if mi.r <= 1e-12 {
            return Err(Error::CoincidentSite(i));
        }
        let k = k_eh(p.gamma_e, sites.gamma_n[i]);
        let mut acc = [[0.0; 3]; 3];
        for v in &mi.ties {
            let t = dipolar_tensor(k, *v);
            for a in 0..3 {
                for b in 0..3 {
                    acc[a][b] += t[a][b] / mi.ties.len() as f64;
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

pub fn hyperfine_tensor(p: &DefectParams, sites: &SiteSet) -> Result<Vec<HyperfineRow>> {
    Ok(hyperfine_tensors(p, sites)?
        .into_iter()
        .map(|t| HyperfineRow { zz: t[2][2], zx: t[2][0], zy: t[2][1] })
        .collect())
}

/// Defect position beneath the cluster centroid at depth `depth_nm`.
pub fn position_below_center(sites: &SiteSet, depth_nm: f64) -> Vec3 {
    let c = sites.centroid();
    [c[0], c[1], -10.0 * depth_nm]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeKind, LatticeSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dense_eigs(m: &Matrix3<C64>) -> [f64; 3] {
        // independent path: characteristic polynomial of the Hermitian matrix, solved trigonometrically
        let tr = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]).re;
        let q = tr / 3.0;
        let sh = m - Matrix3::identity() * C64::new(q, 0.0);
        let p2 = (sh * sh).trace().re / 6.0;
        let p = p2.sqrt();
        if p < 1e-14 {
            return [q; 3];
        }
        let bm = sh * C64::new(1.0 / p, 0.0);
        let r = (bm.determinant().re / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let mut v = [e1, 3.0 * q - e1 - e3, e3];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn zero_field_levels() {
        let p = DefectParams::new(1425.0, 0.0);
        let (v, _) = zfs_eigen(&p, &FieldSpec::along_z(0.0));
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[1], 1425.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[2], 1425.0, epsilon = 1e-10);

        let p = DefectParams::new(1425.0, 151.0);
        let (v, _) = zfs_eigen(&p, &FieldSpec::along_z(0.0));
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[1], 1274.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[2], 1576.0, epsilon = 1e-10);
    }

    #[test]
    fn axial_field_closed_form() {
        let p = DefectParams::new(1425.0, 151.0);
        let f = FieldSpec::along_z(300.0);
        let (v, _) = zfs_eigen(&p, &f);
        let h = GAMMA_E * 300.0;
        let r = h.hypot(151.0);
        let want = [0.0, 1425.0 - r, 1425.0 + r];
        let oracle = dense_eigs(&zfs_hamiltonian(&p, &f));
        for k in 0..3 {
            assert_abs_diff_eq!(v[k], want[k], epsilon = 1e-9);
            assert_abs_diff_eq!(v[k], oracle[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn quoted_mixing_at_300_gauss() {
        let m = mixing_coefficients(&DefectParams::new(1425.0, 151.0), &FieldSpec::along_z(300.0)).unwrap();
        assert_abs_diff_eq!(m.a, 0.996055, epsilon = 2e-4);
        assert_abs_diff_eq!(m.b, 0.088737, epsilon = 2e-3);
    }

    #[test]
    fn mixing_limits() {
        let p = DefectParams::new(1425.0, 0.0);
        let m = mixing_coefficients(&p, &FieldSpec::along_z(10.0)).unwrap();
        assert_eq!((m.a, m.b), (1.0, 0.0));
        assert!(matches!(mixing_coefficients(&p, &FieldSpec::along_z(0.0)), Err(Error::MixingDegenerate)));
        let m = mixing_coefficients(&DefectParams::new(1425.0, 151.0), &FieldSpec::along_z(1e9)).unwrap();
        assert!(m.b.abs() < 1e-6 && (m.a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixing_is_block_eigenvector() {
        let p = DefectParams::new(1425.0, 151.0);
        for b in [-400.0f64, -20.0, 0.0, 5.0, 300.0] {
            let f = FieldSpec::from_vector(b.abs(), [0.0, 0.0, if b < 0.0 { -1.0 } else { 1.0 }]);
            let m = mixing_coefficients(&p, &f).unwrap();
            let h = p.gamma_e * f.vector()[2];
            let lhs0 = (p.d + h) * m.a + p.e * m.b;
            let lhs1 = p.e * m.a + (p.d - h) * m.b;
            let lam = lhs0 / m.a;
            assert_abs_diff_eq!(lhs1, lam * m.b, epsilon = 1e-9);
        }
    }

    #[test]
    fn sweep_follows_closed_form_at_zero_e() {
        let p = DefectParams::new(1425.0, 0.0);
        let bs: Vec<f64> = (0..=100).map(|k| 5.0 * k as f64).collect();
        let rows = zfs_spectrum_sweep(&p, &bs, [0.0, 0.0, 1.0]);
        for r in &rows {
            let h = GAMMA_E * r.b;
            assert_abs_diff_eq!(r.energies[0], 0.0, epsilon = 1e-9);
            let mut up = [r.energies[1], r.energies[2]];
            up.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_abs_diff_eq!(up[0], 1425.0 - h, epsilon = 1e-9);
            assert_abs_diff_eq!(up[1], 1425.0 + h, epsilon = 1e-9);
        }
        for w in rows.windows(2) {
            assert!(w[1].energies[2] >= w[0].energies[2]);
        }
    }

    #[test]
    fn sweep_keeps_branches_through_crossing() {
        // along z with E = 0 the |0> and |-1> levels cross at B = D / gamma_e
        let p = DefectParams::new(1425.0, 0.0);
        let bs: Vec<f64> = (0..=80).map(|k| 10.0 * k as f64).collect();
        let rows = zfs_spectrum_sweep(&p, &bs, [0.0, 0.0, 1.0]);
        let last = rows.last().unwrap();
        assert_abs_diff_eq!(last.energies[0], 0.0, epsilon = 1e-9);
        assert!(last.energies.iter().any(|&e| (e - (1425.0 - GAMMA_E * 800.0)).abs() < 1e-9));
    }

    #[test]
    fn large_field_splitting() {
        let p = DefectParams::new(1425.0, 151.0);
        let b = 2.0e4;
        let rows = zfs_spectrum_sweep(&p, &[b], [0.0, 0.0, 1.0]);
        let h = GAMMA_E * b;
        // ascending: D − R, 0, D + R
        let split = rows[0].energies[2] - rows[0].energies[0];
        // perturbative estimate 2h + E²/h
        assert!((split - (2.0 * h + 151.0 * 151.0 / h)).abs() < 1e-3);
    }

    #[test]
    fn hyperfine_above_defect() {
        let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 3, 3)).unwrap();
        let mut p = DefectParams::default();
        p.position = position_below_center(&s, 1.2);
        let rows = hyperfine_tensor(&p, &s).unwrap();
        let centre = s.index(1, 1);
        let k = k_eh(GAMMA_E, s.gamma_n[centre]);
        assert_abs_diff_eq!(rows[centre].zx, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[centre].zy, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[centre].zz, -2.0 * k / 12f64.powi(3), epsilon = 1e-9);
        // tens of kHz at 1.2 nm
        assert!(rows[centre].zz.abs() > 10.0 && rows[centre].zz.abs() < 100.0);
        assert_abs_diff_eq!(rows[centre].zz, -91.506, epsilon = 5e-3);
    }

    #[test]
    fn hyperfine_rejects_coincidence() {
        let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 2, 2)).unwrap();
        let p = DefectParams::default();
        assert!(matches!(hyperfine_tensor(&p, &s), Err(Error::CoincidentSite(0))));
    }

    proptest! {
        #[test]
        fn hamiltonian_hermitian_with_trace_2d(d in 100.0f64..3000.0, e in 0.0f64..300.0, b in 0.0f64..2000.0,
                                               th in 0.0f64..3.14, ph in 0.0f64..6.28) {
            let p = DefectParams::new(d, e);
            let h = zfs_hamiltonian(&p, &FieldSpec::new(b, th, ph));
            prop_assert!((h - h.adjoint()).norm() < 1e-12 * h.norm());
            prop_assert!((h.trace() - C64::new(2.0 * d, 0.0)).norm() < 1e-9);
            let (v, _) = zfs_eigen(&p, &FieldSpec::new(b, th, ph));
            let o = dense_eigs(&h);
            for k in 0..3 { prop_assert!((v[k] - o[k]).abs() < 1e-7 * (1.0 + d + b)); }
        }

        #[test]
        fn mixing_normalized(e in 0.0f64..300.0, b in 1e-3f64..5000.0) {
            let m = mixing_coefficients(&DefectParams::new(1425.0, e), &FieldSpec::along_z(b)).unwrap();
            prop_assert!((m.a * m.a + m.b * m.b - 1.0).abs() < 1e-12);
            prop_assert!(m.a >= 0.0);
        }

        #[test]
        fn hyperfine_scaling_and_trace(x in -6.0f64..6.0, y in -6.0f64..6.0, depth in 0.5f64..6.0) {
            let s = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 4, 4)).unwrap();
            let mut p = DefectParams::default();
            p.position = [x, y, -10.0 * depth];
            let t1 = hyperfine_tensors(&p, &s).unwrap();
            for t in &t1 {
                prop_assert!((t[0][0] + t[1][1] + t[2][2]).abs() < 1e-9 * (1.0 + t[2][2].abs()));
            }
            // scale every length by two: cell and defect offset together
            let s2 = build_lattice(&LatticeSpec::new(LatticeKind::SquareIdeal001, 4, 4).with_a(2.0 * 3.08)).unwrap();
            p.position = [2.0 * x, 2.0 * y, -20.0 * depth];
            let t2 = hyperfine_tensors(&p, &s2).unwrap();
            for (a, b) in t1.iter().zip(&t2) {
                for r in 0..3 { for c in 0..3 {
                    prop_assert!((a[r][c] - 8.0 * b[r][c]).abs() < 1e-9 * (1.0 + a[r][c].abs()));
                }}
            }
        }
    }
}
