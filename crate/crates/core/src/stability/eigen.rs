//! Smallest eigenpairs of `H x = λ M x` for a symmetric operator `H` and a
//! diagonal positive mass `M`, restricted to an admissible subspace given by
//! an `M`-orthogonal projector.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::numeric::pairwise_sum_by;

pub(crate) type Op<'a> = &'a dyn Fn(&[f64]) -> Result<Vec<f64>>;

pub(crate) struct Problem<'a> {
    pub mass: &'a [f64],
    pub apply: Op<'a>,
    /// Covector to vector; an SPD approximation of `H⁻¹`.
    pub precondition: Op<'a>,
    pub project: Op<'a>,
}

#[derive(Clone, Debug)]
pub(crate) struct Eigenpairs {
    pub values: Vec<f64>,
    /// `M⁻¹`-norms of `H x − λ M x` for `M`-normalized `x`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub matvecs: usize,
    pub converged: bool,
    pub norm_estimate: f64,
}

pub(crate) fn mdot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum_by(a.len(), |i| mass[i] * a[i] * b[i])
}

fn dual_norm(mass: &[f64], r: &[f64]) -> f64 {
    pairwise_sum_by(r.len(), |i| r[i] * r[i] / mass[i]).sqrt()
}

/// Appends the `M`-orthonormalized candidates that survive two passes of
/// Gram–Schmidt against `basis` with relative norm above `drop`.
fn orthonormalize(mass: &[f64], basis: &[Vec<f64>], candidates: Vec<Vec<f64>>, drop: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut c in candidates {
        let n0 = mdot(mass, &c, &c).sqrt();
        if !(n0 > 0.0 && n0.is_finite()) {
            continue;
        }
        for _ in 0..2 {
            for q in basis.iter().chain(out.iter()) {
                let t = mdot(mass, q, &c);
                c.iter_mut().zip(q).for_each(|(ci, qi)| *ci -= t * qi);
            }
        }
        let n1 = mdot(mass, &c, &c).sqrt();
        if n1 <= drop * n0 {
            continue;
        }
        c.iter_mut().for_each(|ci| *ci /= n1);
        out.push(c);
    }
    out
}

fn combine(columns: &[Vec<f64>], coeffs: &DMatrix<f64>, col: usize, rows: std::ops::Range<usize>) -> Vec<f64> {
    let n = columns.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (r, v) in rows.zip(columns) {
        let c = coeffs[(r, col)];
        if c != 0.0 {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
        }
    }
    out
}

/// Ascending eigen-decomposition of a symmetric matrix.
fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = g.nrows();
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Power-iteration estimate of the largest eigenvalue magnitude of `M⁻¹H`.
pub(crate) fn norm_estimate(p: &Problem, seed: u64, steps: usize) -> Result<(f64, usize)> {
    let n = p.mass.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    v = (p.project)(&v)?;
    let mut est: f64 = 0.0;
    for _ in 0..steps {
        let nv = mdot(p.mass, &v, &v).sqrt();
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let hv = (p.apply)(&v)?;
        let w: Vec<f64> = hv.iter().zip(p.mass).map(|(h, m)| h / m).collect();
        v = (p.project)(&w)?;
        est = est.max(mdot(p.mass, &v, &v).sqrt());
    }
    Ok((est, steps))
}

pub(crate) fn random_block(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// Locally optimal block preconditioned conjugate gradients for the `k`
/// smallest pairs, iterating a block of `initial.len()` vectors.
pub(crate) fn lobpcg(
    p: &Problem,
    k: usize,
    initial: Vec<Vec<f64>>,
    tol: f64,
    max_iter: usize,
    norm_hint: f64,
) -> Result<Eigenpairs> {
    let block = initial.len();
    let projected = initial.iter().map(|v| (p.project)(v)).collect::<Result<Vec<_>>>()?;
    let mut x = orthonormalize(p.mass, &[], projected, 1e-10);
    let mut matvecs = 0;
    let mut hx = Vec::with_capacity(x.len());
    for v in &x {
        hx.push((p.apply)(v)?);
        matvecs += 1;
    }
    let mut prev: Vec<Vec<f64>>;
    let mut norm_est = norm_hint;
    let mut lambda = vec![0.0; x.len()];
    let mut residuals = vec![f64::INFINITY; x.len()];
    let mut extra: Vec<Vec<f64>> = Vec::new();
    let mut hextra: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..=max_iter {
        // Rayleigh–Ritz on span[X, W, P]
        let q = x.len() + extra.len();
        let basis: Vec<&Vec<f64>> = x.iter().chain(extra.iter()).collect();
        let images: Vec<&Vec<f64>> = hx.iter().chain(hextra.iter()).collect();
        let mut g = DMatrix::zeros(q, q);
        for i in 0..q {
            for j in i..q {
                let v = 0.5 * (crate::numeric::dot(basis[i], images[j]) + crate::numeric::dot(basis[j], images[i]));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let (values, coeffs) = sorted_eigen(g);
        norm_est = norm_est.max(values.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        let keep = block.min(q);
        let nx = x.len();
        let basis_owned: Vec<Vec<f64>> = x.iter().chain(extra.iter()).cloned().collect();
        let images_owned: Vec<Vec<f64>> = hx.iter().chain(hextra.iter()).cloned().collect();
        let mut new_x = Vec::with_capacity(keep);
        let mut new_hx = Vec::with_capacity(keep);
        let mut new_p = Vec::with_capacity(keep);
        for c in 0..keep {
            new_x.push(combine(&basis_owned, &coeffs, c, 0..q));
            new_hx.push(combine(&images_owned, &coeffs, c, 0..q));
            if q > nx {
                new_p.push(combine(&basis_owned[nx..], &coeffs, c, nx..q));
            }
        }
        x = new_x;
        hx = new_hx;
        prev = new_p;
        lambda = values[..keep].to_vec();

        // residuals of the compressed operator: project M⁻¹(Hx − λMx), map back
        let r: Vec<Vec<f64>> = (0..keep)
            .map(|j| {
                let s: Vec<f64> = hx[j]
                    .iter()
                    .zip(&x[j])
                    .zip(p.mass)
                    .map(|((h, xi), m)| h / m - lambda[j] * xi)
                    .collect();
                Ok((p.project)(&s)?.iter().zip(p.mass).map(|(si, m)| si * m).collect())
            })
            .collect::<Result<_>>()?;
        residuals = r.iter().map(|rj| dual_norm(p.mass, rj)).collect();
        iterations = it;
        let threshold = tol * norm_est.max(f64::MIN_POSITIVE);
        if residuals.iter().take(k).all(|&res| res <= threshold) {
            converged = true;
            break;
        }
        if it == max_iter {
            break;
        }
        let mut candidates = Vec::with_capacity(2 * keep);
        for (j, rj) in r.iter().enumerate() {
            if residuals[j] > threshold {
                let w = (p.precondition)(rj)?;
                candidates.push((p.project)(&w)?);
            }
        }
        candidates.extend(prev.iter().cloned());
        extra = orthonormalize(p.mass, &x, candidates, 1e-8);
        hextra = Vec::with_capacity(extra.len());
        for v in &extra {
            hextra.push((p.apply)(v)?);
            matvecs += 1;
        }
    }
    let kk = k.min(x.len());
    Ok(Eigenpairs {
        values: lambda[..kk].to_vec(),
        residuals: residuals[..kk].to_vec(),
        iterations,
        matvecs,
        converged,
        norm_estimate: norm_est,
    })
}

/// Dense solve of the same problem. `gauge` lists vectors spanning the
/// excluded subspace; they are shifted above the spectrum and their rank is
/// returned alongside the pairs.
pub(crate) fn dense_smallest(p: &Problem, k: usize, gauge: &[Vec<f64>]) -> Result<(Eigenpairs, usize)> {
    let n = p.mass.len();
    let sqrt_m: Vec<f64> = p.mass.iter().map(|m| m.sqrt()).collect();
    let mut a = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0 / sqrt_m[j];
        let col = (p.apply)(&unit)?;
        unit[j] = 0.0;
        for i in 0..n {
            a[(i, j)] = col[i] / sqrt_m[i];
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, rank) = if gauge.is_empty() {
        (a, 0)
    } else {
        let y = DMatrix::from_fn(n, gauge.len(), |i, j| sqrt_m[i] * gauge[j][i]);
        let gram = y.transpose() * &y;
        let (mu, u) = sorted_eigen(gram);
        let top = mu.last().copied().unwrap_or(0.0);
        let mut basis = Vec::new();
        for (c, &m) in mu.iter().enumerate() {
            if m > 1e-12 * top {
                basis.push((&y * u.column(c)) / m.sqrt());
            }
        }
        let rank = basis.len();
        let mut pi = DMatrix::zeros(n, n);
        for b in &basis {
            pi += b * b.transpose();
        }
        let proj = DMatrix::identity(n, n) - &pi;
        let shift = 10.0 * (norm + 1.0);
        (&proj * a * &proj + pi * shift, rank)
    };
    let (values, vectors) = sorted_eigen(a);
    let kk = k.min(n - rank);
    let mut residuals = Vec::with_capacity(kk);
    for c in 0..kk {
        let x: Vec<f64> = (0..n).map(|i| vectors[(i, c)] / sqrt_m[i]).collect();
        let hx = (p.apply)(&x)?;
        let r: Vec<f64> = hx.iter().zip(&x).zip(p.mass).map(|((h, xi), m)| h - values[c] * m * xi).collect();
        let r = (p.project)(&r.iter().zip(p.mass).map(|(ri, m)| ri / m).collect::<Vec<_>>())?;
        residuals.push(mdot(p.mass, &r, &r).sqrt());
    }
    Ok((
        Eigenpairs {
            values: values[..kk].to_vec(),
            residuals,
            iterations: 1,
            matvecs: n,
            converged: true,
            norm_estimate: values[n - rank - 1].abs().max(values[0].abs()),
        },
        rank,
    ))
}
