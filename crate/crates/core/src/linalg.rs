//! Dense and sparse linear algebra helpers: a conjugate-gradient solver with
//! optional null-space projection, and an equilibrated dense solve with
//! iterative refinement for the interpolation systems.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Matrix-free SPD operator for CG.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// Conjugate gradients for SPD (or SPD-on-a-subspace) systems.
///
/// `project` removes null-space components; it is applied to the right-hand
/// side, the initial residual and every search update, which keeps the
/// iteration inside the orthogonal complement of the kernel.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    rhs: &[f64],
    tol_rel: f64,
    max_iter: usize,
    project: Option<&dyn Fn(&mut [f64])>,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = op.dim();
    assert_eq!(rhs.len(), n);

    let mut b = rhs.to_vec();
    if let Some(p) = project {
        p(&mut b);
    }
    let bnorm = norm2(&b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }

    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rsold = dot(&r, &r);

    for it in 0..max_iter {
        op.apply(&p, &mut ap);
        if let Some(proj) = project {
            proj(&mut ap);
        }
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rsold.sqrt() / bnorm,
            });
        }
        let alpha = rsold / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rsnew = dot(&r, &r);
        if rsnew.sqrt() <= tol_rel * bnorm {
            if let Some(proj) = project {
                proj(&mut x);
            }
            return Ok((x, it + 1, rsnew.sqrt() / bnorm));
        }
        let beta = rsnew / rsold;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rsold = rsnew;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rsold.sqrt() / bnorm,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a dense solve, with enough diagnostics to drive retries.
pub struct DenseSolve {
    /// Solution columns, one Vec per right-hand side.
    pub solutions: Vec<Vec<f64>>,
    /// 2-norm condition estimate of the row-equilibrated matrix (SVD for
    /// small systems, +inf if the factorization failed).
    pub condition: f64,
    /// Max-norm residual of the original (unequilibrated) system per rhs.
    pub residuals: Vec<f64>,
}

/// Row-equilibrated LU solve with two rounds of iterative refinement.
///
/// `a` is row-major n×n. Systems up to `SVD_LIMIT` also get a condition
/// estimate from singular values; larger ones report the LU growth proxy.
pub fn solve_dense_refined(a: &[f64], n: usize, rhs_list: &[Vec<f64>]) -> DenseSolve {
    const SVD_LIMIT: usize = 400;

    // Row equilibration: scale each row to unit max norm.
    let mut scale = vec![1.0f64; n];
    for i in 0..n {
        let m = a[i * n..(i + 1) * n]
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > 0.0 && m.is_finite() {
            scale[i] = 1.0 / m;
        }
    }
    let mut eq = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            eq[(i, j)] = a[i * n + j] * scale[i];
        }
    }

    let condition = if n <= SVD_LIMIT {
        let sv = eq.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0f64, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        }
    } else {
        f64::NAN // not estimated; callers rely on the residual check
    };

    let lu = eq.clone().lu();
    let mut solutions = Vec::with_capacity(rhs_list.len());
    let mut residuals = Vec::with_capacity(rhs_list.len());
    for rhs in rhs_list {
        let b_eq = DVector::from_iterator(n, rhs.iter().zip(&scale).map(|(v, s)| v * s));
        let mut x = match lu.solve(&b_eq) {
            Some(x) => x,
            None => {
                solutions.push(vec![f64::NAN; n]);
                residuals.push(f64::INFINITY);
                continue;
            }
        };
        // Iterative refinement on the equilibrated system.
        for _ in 0..2 {
            let r = &b_eq - &eq * &x;
            if let Some(dx) = lu.solve(&r) {
                x += dx;
            }
        }
        let xs: Vec<f64> = x.iter().cloned().collect();
        residuals.push(residual_inf(a, n, &xs, rhs));
        solutions.push(xs);
    }

    DenseSolve {
        solutions,
        condition,
        residuals,
    }
}

fn residual_inf(a: &[f64], n: usize, x: &[f64], b: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[i * n + j] * x[j];
        }
        worst = worst.max((acc - b[i]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense1D;
    impl LinearOperator for Dense1D {
        fn dim(&self) -> usize {
            4
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            // 1D Laplacian, Dirichlet, h=1
            for i in 0..4 {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i < 3 { x[i + 1] } else { 0.0 };
                out[i] = 2.0 * x[i] - left - right;
            }
        }
    }

    #[test]
    fn cg_solves_small_laplacian() {
        let (x, _, res) = conjugate_gradient(&Dense1D, &[1.0; 4], 1e-14, 100, None).unwrap();
        // exact solution of -u'' = 1 on 4 interior nodes of a 6-node grid
        let exact = [2.0, 3.0, 3.0, 2.0];
        for i in 0..4 {
            assert!((x[i] - exact[i]).abs() < 1e-10, "{x:?}");
        }
        assert!(res <= 1e-14);
    }

    #[test]
    fn dense_refined_solves_hilbert_like() {
        let n = 6;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / ((i + j + 1) as f64);
            }
        }
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = a[i * n..(i + 1) * n].iter().sum();
        }
        let out = solve_dense_refined(&a, n, &[b]);
        for v in &out.solutions[0] {
            assert!((v - 1.0).abs() < 1e-6);
        }
        assert!(out.residuals[0] < 1e-12);
    }
}
