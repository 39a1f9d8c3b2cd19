//! Hermitian Lanczos with full reorthogonalization and explicit restarts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

impl LinearOp for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Krylov subspace size per restart cycle.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Residual target relative to max(1, |E|).
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov: 60, max_restarts: 200, tol: 1e-10, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    project_out2(v, basis, &[]);
}

fn project_out2(v: &mut [C64], a: &[Vec<C64>], b: &[Vec<C64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for u in a.iter().chain(b) {
            let c = dotc(u, v);
            axpy(-c, u, v);
        }
    }
}

/// Iterated Gram-Schmidt against `a` and `b`; `None` when nothing independent is left.
fn orthogonalize(v: &mut [C64], a: &[Vec<C64>], b: &[Vec<C64>]) -> Option<f64> {
    let start = norm(v);
    let mut prev = start;
    for _ in 0..6 {
        project_out2(v, a, b);
        let now = norm(v);
        if !(now > 1e-13 * start) {
            return None;
        }
        if now > 0.7 * prev {
            return Some(now);
        }
        prev = now;
    }
    Some(norm(v))
}

pub fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Polishes an eigenpair of a small Hermitian matrix by shifted inverse iteration.
fn refine_lowest(g: &DMatrix<C64>, theta: f64, mut s: DVector<C64>) -> (f64, DVector<C64>) {
    let m = g.nrows();
    let scale = g.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let shift = theta - 1e-9 * scale;
    let a = g - DMatrix::<C64>::identity(m, m) * C64::new(shift, 0.0);
    let Some(lu) = a.lu().try_inverse() else {
        return (theta, s);
    };
    for _ in 0..2 {
        let x = &lu * &s;
        let n = x.norm();
        if !(n.is_finite() && n > 0.0) {
            break;
        }
        s = x / C64::new(n, 0.0);
    }
    let rq = (s.adjoint() * g * &s)[(0, 0)].re;
    (rq, s)
}

/// Lowest eigenpair of `op` in the orthogonal complement of `deflate` (orthonormal vectors).
///
/// Krylov expansion with full reorthogonalization; each restart keeps the lowest third
/// of the Ritz vectors and continues from the residual of the lowest one.
pub fn lowest(op: &dyn LinearOp, deflate: &[Vec<C64>], opts: &LanczosOptions) -> Result<Eigenpair> {
    let dim = op.dim();
    let room = dim - deflate.len().min(dim);
    if room == 0 {
        return Err(Error::Dimension { expected: deflate.len() + 1, got: dim });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ deflate.len() as u64);
    let m_max = opts.krylov.max(2).min(room);
    let keep = (m_max / 3).max(1);
    let zero = C64::new(0.0, 0.0);

    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m_max);
    let mut av: Vec<Vec<C64>> = Vec::with_capacity(m_max);
    let mut g = DMatrix::<C64>::zeros(0, 0);
    let mut next = random_vector(dim, &mut rng);
    let mut best = Eigenpair { value: f64::NAN, vector: Vec::new(), residual: f64::INFINITY };

    for _ in 0..opts.max_restarts {
        let mut exhausted = false;
        while v.len() < m_max {
            let Some(nn) = orthogonalize(&mut next, deflate, &v) else {
                exhausted = true;
                break;
            };
            let q: Vec<C64> = next.iter().map(|x| x / nn).collect();
            let mut hq = vec![zero; dim];
            op.apply(&q, &mut hq);
            let k = v.len();
            let mut g2 = DMatrix::<C64>::zeros(k + 1, k + 1);
            g2.view_mut((0, 0), (k, k)).copy_from(&g);
            for (i, vi) in v.iter().enumerate() {
                let c = dotc(vi, &hq);
                g2[(i, k)] = c;
                g2[(k, i)] = c.conj();
            }
            g2[(k, k)] = C64::new(dotc(&q, &hq).re, 0.0);
            g = g2;
            next = hq.clone();
            v.push(q);
            av.push(hq);
        }

        let m = v.len();
        let eig = SymmetricEigen::new((&g + g.adjoint()) * C64::new(0.5, 0.0));
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
        let combine = |basis: &[Vec<C64>], col: usize| {
            let mut y = vec![zero; dim];
            for (j, b) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(j, col)], b, &mut y);
            }
            y
        };
        let gh = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let (theta, s0) = refine_lowest(&gh, eig.eigenvalues[order[0]], eig.eigenvectors.column(order[0]).into_owned());
        let mut y = vec![zero; dim];
        let mut hy = vec![zero; dim];
        for j in 0..m {
            axpy(s0[j], &v[j], &mut y);
            axpy(s0[j], &av[j], &mut hy);
        }
        let mut r: Vec<C64> = hy.iter().zip(&y).map(|(a, b)| a - b * theta).collect();
        project_out(&mut r, deflate);
        let res = norm(&r);
        if res < best.residual {
            let ny = norm(&y);
            best = Eigenpair { value: theta, vector: y.iter().map(|x| x / ny).collect(), residual: res };
        }
        if res <= opts.tol * theta.abs().max(1.0) || (m == room && !exhausted) {
            let mut out = best;
            let ny = norm(&out.vector);
            out.vector.iter_mut().for_each(|x| *x /= ny);
            return Ok(out);
        }

        let k = keep.min(m);
        let nv: Vec<Vec<C64>> = order[..k].iter().map(|c| combine(&v, *c)).collect();
        let nav: Vec<Vec<C64>> = order[..k].iter().map(|c| combine(&av, *c)).collect();
        v = nv;
        av = nav;
        g = DMatrix::from_fn(k, k, |i, j| if i == j { C64::new(eig.eigenvalues[order[i]], 0.0) } else { zero });
        // an invariant basis cannot improve on its own; bring in a fresh direction
        next = if exhausted { random_vector(dim, &mut rng) } else { r };
    }
    Err(Error::NoConvergence { residual: best.residual })
}

/// All eigenpairs within `gap_tol` of the lowest one (at most `max_states`), ascending.
pub fn lowest_manifold(
    op: &dyn LinearOp,
    gap_tol: f64,
    max_states: usize,
    opts: &LanczosOptions,
) -> Result<Vec<Eigenpair>> {
    let first = lowest(op, &[], opts)?;
    let e0 = first.value;
    extend_manifold(op, vec![first], e0, gap_tol, max_states, opts)
}

/// Adds eigenpairs to `found` by deflation while they stay within `gap_tol` of `e_ref`.
pub fn extend_manifold(
    op: &dyn LinearOp,
    mut found: Vec<Eigenpair>,
    e_ref: f64,
    gap_tol: f64,
    max_states: usize,
    opts: &LanczosOptions,
) -> Result<Vec<Eigenpair>> {
    while found.len() < max_states.min(op.dim()) {
        let defl: Vec<Vec<C64>> = found.iter().map(|p| p.vector.clone()).collect();
        let next = lowest(op, &defl, opts)?;
        if next.value - e_ref > gap_tol {
            break;
        }
        found.push(next);
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn matches_dense(n in 2usize..90, seed in 0u64..1000) {
            let a = random_hermitian(n, seed);
            let mut want: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
            want.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let csr = CsrMatrix::from_dense(&a);
            let opts = LanczosOptions { krylov: 20, ..Default::default() };
            let p = lowest(&csr, &[], &opts).unwrap();
            prop_assert!((p.value - want[0]).abs() < 1e-9);
            prop_assert!(p.residual < 1e-9);
            prop_assert!((norm(&p.vector) - 1.0).abs() < 1e-12);
            let q = lowest(&csr, &[p.vector.clone()], &opts).unwrap();
            prop_assert!((q.value - want[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn finds_degenerate_manifold() {
        // four entries at -1 (indices 3, 10, 17, 24), the rest spread above
        let n = 30;
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(if i % 7 == 3 { -1.0 } else { i as f64 * 0.1 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let csr = CsrMatrix::from_dense(&d);
        let ps = lowest_manifold(&csr, 1e-8, 10, &LanczosOptions::default()).unwrap();
        assert_eq!(ps.len(), 4);
        for p in &ps {
            assert!((p.value + 1.0).abs() < 1e-10);
        }
    }
}
