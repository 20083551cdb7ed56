//! Small numerical kernels shared by the compute modules.
//!
//! Every reduction goes through [`pairwise_sum`] so that results do not depend
//! on anything but the order of the input slice.

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 32;

/// Fixed-order pairwise (tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`.
pub fn pairwise_sum_by(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, f: &dyn Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, &f)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |i| a[i] * b[i])
}

pub fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |i| w[i] * a[i] * b[i])
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes the `weights`-weighted mean of `x`.
pub fn remove_weighted_mean(x: &mut [f64], weights: &[f64]) {
    let total = pairwise_sum(weights);
    let mean = weighted_dot(x, &vec![1.0; x.len()], weights) / total;
    for xi in x.iter_mut() {
        *xi -= mean;
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for a symmetric positive (semi-)definite operator.
///
/// When `null_weights` is given the operator is assumed to annihilate
/// constants; the right-hand side and every iterate are then projected onto
/// the complement (zero mean with respect to those weights in the primal
/// space, zero sum in the dual space).
pub fn conjugate_gradient(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    null_weights: Option<&[f64]>,
) -> Result<CgReport> {
    let n = rhs.len();
    let mut b = rhs.to_vec();
    if null_weights.is_some() {
        // constants span the kernel; the consistent part of b sums to zero
        let mean = pairwise_sum(&b) / n as f64;
        for bi in b.iter_mut() {
            *bi -= mean;
        }
    }
    let b_norm = norm(&b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    if let Some(w) = null_weights {
        remove_weighted_mean(x, w);
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rel = rr.sqrt() / b_norm;
        if rel <= rel_tol {
            if let Some(w) = null_weights {
                remove_weighted_mean(x, w);
            }
            return Ok(CgReport {
                iterations: it,
                relative_residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        if null_weights.is_some() {
            let mean = pairwise_sum(&r) / n as f64;
            for ri in r.iter_mut() {
                *ri -= mean;
            }
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    // recompute the true residual before giving up
    apply(x, &mut ax);
    let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = norm(&res) / b_norm;
    if rel <= rel_tol * 10.0 {
        if let Some(w) = null_weights {
            remove_weighted_mean(x, w);
        }
        return Ok(CgReport {
            iterations: max_iter,
            relative_residual: rel,
        });
    }
    Err(Error::NonConvergence {
        what: "conjugate gradient",
        iterations: max_iter,
        residual: rel,
    })
}

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator; `precondition` applies an SPD approximation of the inverse.
pub fn preconditioned_cg(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    precondition: &dyn Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgReport> {
    let n = rhs.len();
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / b_norm;
    for it in 0..max_iter {
        if rel <= rel_tol {
            return Ok(CgReport {
                iterations: it,
                relative_residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rel = norm(&r) / b_norm;
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if rel <= rel_tol {
        return Ok(CgReport {
            iterations: max_iter,
            relative_residual: rel,
        });
    }
    Err(Error::NonConvergence {
        what: "preconditioned conjugate gradient",
        iterations: max_iter,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
        assert_eq!(pairwise_sum_by(1000, |i| i as f64), 499500.0);
    }

    #[test]
    fn cg_solves_path_laplacian_with_kernel() {
        // ring graph Laplacian, singular on constants
        let n = 20;
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 2.0 * x[i] - x[(i + 1) % n] - x[(i + n - 1) % n];
            }
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut t = truth.clone();
        remove_weighted_mean(&mut t, &vec![1.0; n]);
        let mut rhs = vec![0.0; n];
        apply(&t, &mut rhs);
        let mut x = vec![0.0; n];
        let rep = conjugate_gradient(&mut apply, &rhs, &mut x, 1e-13, 500, Some(&vec![1.0; n])).unwrap();
        assert!(rep.relative_residual <= 1e-13);
        for i in 0..n {
            assert!((x[i] - t[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_preconditioned_cg_solves_weighted_ring() {
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + (i % 7) as f64).collect();
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = diag[i] * x[i] - x[(i + 1) % n] - x[(i + n - 1) % n];
            }
        };
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut x = vec![0.0; n];
        let jacobi = |r: &[f64]| r.iter().zip(&diag).map(|(a, d)| a / d).collect::<Vec<_>>();
        preconditioned_cg(&mut apply, &jacobi, &rhs, &mut x, 1e-12, 200).unwrap();
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        for i in 0..n {
            assert!((y[i] - rhs[i]).abs() < 1e-10);
        }
    }
}
