//! `M`-orthogonal projection onto the complement of the infinitesimal gauge
//! directions `G θ = (iθu, d0θ)`.

use num_complex::Complex64;

use crate::bundle::{divergence, weighted_laplacian, Configuration};
use crate::energy::Variation;
use crate::error::Result;
use crate::numeric::{conjugate_gradient, preconditioned_cg};
use crate::solver::precond::ShiftedLaplacianInverse;

/// Sections below this modulus everywhere count as identically zero.
pub const VANISHING_SECTION: f64 = 1e-10;

const PROJECTION_TOLERANCE: f64 = 1e-12;

pub(crate) struct GaugeProjector<'a> {
    config: &'a Configuration,
    mass: Vec<f64>,
    /// `star0·|u|²` per vertex.
    weights: Vec<f64>,
    degenerate: bool,
    fft: Option<ShiftedLaplacianInverse>,
    diagonal: Vec<f64>,
}

impl<'a> GaugeProjector<'a> {
    pub(crate) fn new(config: &'a Configuration, mass: Vec<f64>) -> Self {
        let mesh = config.mesh();
        let degenerate = config.u().iter().all(|z| z.norm() < VANISHING_SECTION);
        let weights: Vec<f64> = config
            .u()
            .iter()
            .zip(&mesh.dual_areas)
            .map(|(z, m)| if degenerate { 0.0 } else { m * z.norm_sqr() })
            .collect();
        let mut diagonal = weights.clone();
        for edge in &mesh.edges {
            diagonal[edge.head] += edge.weight();
            diagonal[edge.tail] += edge.weight();
        }
        let fft = if degenerate {
            None
        } else {
            let mean = weights.iter().sum::<f64>() / mesh.total_area;
            ShiftedLaplacianInverse::new(mesh, mean)
        };
        GaugeProjector {
            config,
            mass,
            weights,
            degenerate,
            fft,
            diagonal,
        }
    }

    /// Number of independent gauge directions.
    pub(crate) fn rank(&self) -> usize {
        let nv = self.config.mesh().num_vertices();
        if self.degenerate {
            nv - 1
        } else {
            nv
        }
    }

    pub(crate) fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub(crate) fn direction(&self, theta: &[f64]) -> Vec<f64> {
        Variation::gauge_direction(self.config, theta).to_flat()
    }

    /// `Gᵀ M x`.
    fn adjoint(&self, x: &[f64]) -> Vec<f64> {
        let mesh = self.config.mesh();
        let nv = mesh.num_vertices();
        // the edge mass is star1, so d0ᵀ star1 x_A is the divergence
        let mut out = divergence(mesh, &x[2 * nv..]);
        for (v, z) in self.config.u().iter().enumerate() {
            let xv = Complex64::new(x[2 * v], x[2 * v + 1]);
            let iu = Complex64::new(-z.im, z.re);
            out[v] += self.mass[2 * v] * (iu.conj() * xv).re;
        }
        out
    }

    fn normal(&self, theta: &[f64], out: &mut [f64]) {
        weighted_laplacian(self.config.mesh(), theta, out);
        for ((o, t), w) in out.iter_mut().zip(theta).zip(&self.weights) {
            *o += w * t;
        }
    }

    /// Removes the gauge component of `x`.
    pub(crate) fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mesh = self.config.mesh();
        let nv = mesh.num_vertices();
        let rhs = self.adjoint(x);
        let mut theta = vec![0.0; nv];
        let mut op = |t: &[f64], y: &mut [f64]| self.normal(t, y);
        let max_iter = 20 * nv + 200;
        if self.degenerate {
            conjugate_gradient(&mut op, &rhs, &mut theta, PROJECTION_TOLERANCE, max_iter, Some(&mesh.dual_areas))?;
        } else if let Some(fft) = &self.fft {
            preconditioned_cg(&mut op, &|r| fft.apply(r), &rhs, &mut theta, PROJECTION_TOLERANCE, max_iter)?;
        } else {
            let jacobi = |r: &[f64]| r.iter().zip(&self.diagonal).map(|(a, d)| a / d).collect();
            preconditioned_cg(&mut op, &jacobi, &rhs, &mut theta, PROJECTION_TOLERANCE, max_iter)?;
        }
        let g = self.direction(&theta);
        Ok(x.iter().zip(&g).map(|(a, b)| a - b).collect())
    }
}
