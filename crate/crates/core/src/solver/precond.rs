//! Sobolev-type search-direction preconditioners. On the lattice torus the
//! operator is diagonalized by the FFT; elsewhere it is inverted by conjugate
//! gradients.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bundle::{divergence, weighted_laplacian};
use crate::energy::{MassMetric, Variation};
use crate::error::Result;
use crate::mesh::{Geometry, Mesh};
use crate::numeric::conjugate_gradient;

const INNER_TOLERANCE: f64 = 1e-10;

pub(crate) enum Preconditioner {
    Iterative(Iterative),
    Spectral(Box<SpectralTorus>),
}

impl Preconditioner {
    pub(crate) fn new(mesh: &Arc<Mesh>, epsilon: f64) -> Self {
        match mesh.geometry {
            Geometry::Torus { nx, ny, lx, ly } => {
                Preconditioner::Spectral(Box::new(SpectralTorus::new(mesh, nx, ny, lx, ly, epsilon)))
            }
            Geometry::Sphere { .. } => Preconditioner::Iterative(Iterative {
                mesh: mesh.clone(),
                epsilon,
            }),
        }
    }

    pub(crate) fn apply(&self, g: &Variation) -> Result<Variation> {
        match self {
            Preconditioner::Iterative(s) => s.apply(g),
            Preconditioner::Spectral(s) => Ok(s.apply(g)),
        }
    }

    /// The section block alone.
    pub(crate) fn apply_section(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Preconditioner::Iterative(s) => s.apply_section(g),
            Preconditioner::Spectral(s) => Ok(s.apply_section(g)),
        }
    }
}

/// Solves `(2L + ε⁻²·star0) z = g` on each component of the section and
/// `(2ε²(d1ᵀ star2 d1 + star1 d0 star0⁻¹ d0ᵀ star1) + 2 star1) z = g` on the
/// connection, `L = d0ᵀ star1 d0`.
pub(crate) struct Iterative {
    mesh: Arc<Mesh>,
    epsilon: f64,
}

impl Iterative {
    fn vertex_operator(&self, x: &[f64], out: &mut [f64]) {
        weighted_laplacian(&self.mesh, x, out);
        let shift = 1.0 / (self.epsilon * self.epsilon);
        for ((o, xi), m) in out.iter_mut().zip(x).zip(&self.mesh.dual_areas) {
            *o = 2.0 * *o + shift * m * xi;
        }
    }

    fn edge_operator(&self, x: &[f64], out: &mut [f64]) {
        let mesh = &self.mesh;
        let eps2 = self.epsilon * self.epsilon;
        out.iter_mut().for_each(|o| *o = 0.0);
        for face in &mesh.faces {
            let curl: f64 = face.edges.iter().zip(&face.signs).map(|(&e, &s)| s as f64 * x[e]).sum();
            let c = 2.0 * eps2 * curl / face.area;
            for (&e, &s) in face.edges.iter().zip(&face.signs) {
                out[e] += s as f64 * c;
            }
        }
        let div = divergence(mesh, x);
        for (e, edge) in mesh.edges.iter().enumerate() {
            let w = edge.weight();
            let grad = div[edge.head] / mesh.dual_areas[edge.head] - div[edge.tail] / mesh.dual_areas[edge.tail];
            out[e] += 2.0 * eps2 * w * grad + 2.0 * w * x[e];
        }
    }

    fn max_iter(&self) -> usize {
        20 * (self.mesh.num_vertices() + self.mesh.num_edges()) + 100
    }

    fn apply_section(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let nv = self.mesh.num_vertices();
        let mut out = vec![Complex64::new(0.0, 0.0); nv];
        let mut op = |x: &[f64], y: &mut [f64]| self.vertex_operator(x, y);
        for part in 0..2 {
            let rhs: Vec<f64> = g.iter().map(|z| if part == 0 { z.re } else { z.im }).collect();
            let mut x = vec![0.0; nv];
            conjugate_gradient(&mut op, &rhs, &mut x, INNER_TOLERANCE, self.max_iter(), None)?;
            for (z, xi) in out.iter_mut().zip(x) {
                if part == 0 {
                    z.re = xi;
                } else {
                    z.im = xi;
                }
            }
        }
        Ok(out)
    }

    fn apply(&self, g: &Variation) -> Result<Variation> {
        let max_iter = self.max_iter();
        let mut out = Variation::zeros(&self.mesh);
        out.u = self.apply_section(&g.u)?;
        let mut op = |x: &[f64], y: &mut [f64]| self.edge_operator(x, y);
        conjugate_gradient(&mut op, &g.a, &mut out.a, INNER_TOLERANCE, max_iter, None)?;
        Ok(out)
    }
}

/// Two-dimensional FFT on the `nx × ny` vertex grid.
pub(crate) struct LatticeFft {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl LatticeFft {
    fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        let mut planner = FftPlanner::new();
        LatticeFft {
            nx,
            ny,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    /// Inverse symbol of `a + b(−Δ)`, normalized for a forward/inverse pair.
    fn inverse_symbol(&self, a: f64, b: f64) -> Vec<f64> {
        let norm = 1.0 / (self.nx * self.ny) as f64;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for l in 0..self.ny {
            for k in 0..self.nx {
                let sx = (PI * k as f64 / self.nx as f64).sin();
                let sy = (PI * l as f64 / self.ny as f64).sin();
                let lam = 4.0 * sx * sx / (self.hx * self.hx) + 4.0 * sy * sy / (self.hy * self.hy);
                out.push(norm / (a + b * lam));
            }
        }
        out
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                column[j] = data[j * self.nx + i];
            }
            col.process(&mut column);
            for j in 0..self.ny {
                data[j * self.nx + i] = column[j];
            }
        }
    }

    fn smooth(&self, data: &mut [Complex64], inverse_symbol: &[f64]) {
        self.transform(data, false);
        for (z, s) in data.iter_mut().zip(inverse_symbol) {
            *z *= s;
        }
        self.transform(data, true);
    }
}

/// Exact inverse of `L + shift·star0` on a lattice torus, `L = d0ᵀ star1 d0`.
pub(crate) struct ShiftedLaplacianInverse {
    fft: LatticeFft,
    inv: Vec<f64>,
}

impl ShiftedLaplacianInverse {
    pub(crate) fn new(mesh: &Mesh, shift: f64) -> Option<Self> {
        let Geometry::Torus { nx, ny, lx, ly } = mesh.geometry else {
            return None;
        };
        let fft = LatticeFft::new(nx, ny, lx, ly);
        let cell = fft.hx * fft.hy;
        let inv = fft.inverse_symbol(cell * shift, cell);
        Some(ShiftedLaplacianInverse { fft, inv })
    }

    pub(crate) fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.smooth(&mut data, &self.inv);
        data.iter().map(|z| z.re).collect()
    }
}

/// `(M·S)⁻¹` with `S = 2(−Δ) + ε⁻²` on the section and `S = 2ε²(−Δ) + 2`
/// on each edge family, `Δ` the periodic lattice Laplacian.
pub(crate) struct SpectralTorus {
    fft: LatticeFft,
    metric: MassMetric,
    /// Lattice orientation sign of each stored edge.
    orientation: Vec<f64>,
    inv_u: Vec<f64>,
    inv_a: Vec<f64>,
}

impl SpectralTorus {
    fn new(mesh: &Mesh, nx: usize, ny: usize, lx: f64, ly: f64, epsilon: f64) -> Self {
        let eps2 = epsilon * epsilon;
        let fft = LatticeFft::new(nx, ny, lx, ly);
        let orientation = mesh
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| if edge.tail == e / 2 { 1.0 } else { -1.0 })
            .collect();
        SpectralTorus {
            metric: MassMetric::new(mesh),
            orientation,
            inv_u: fft.inverse_symbol(1.0 / eps2, 2.0),
            inv_a: fft.inverse_symbol(2.0, 2.0 * eps2),
            fft,
        }
    }

    fn apply_section(&self, g: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = g.iter().zip(&self.metric.vertex).map(|(z, m)| z / m).collect();
        self.fft.smooth(&mut out, &self.inv_u);
        out
    }

    fn apply(&self, g: &Variation) -> Variation {
        let mut out = self.metric.raise(g);
        self.fft.smooth(&mut out.u, &self.inv_u);
        let n = self.fft.nx * self.fft.ny;
        // both edge families packed as real and imaginary parts of one grid
        let mut packed: Vec<Complex64> = (0..n)
            .map(|v| {
                Complex64::new(
                    out.a[2 * v] * self.orientation[2 * v],
                    out.a[2 * v + 1] * self.orientation[2 * v + 1],
                )
            })
            .collect();
        self.fft.smooth(&mut packed, &self.inv_a);
        for (v, z) in packed.iter().enumerate() {
            out.a[2 * v] = z.re * self.orientation[2 * v];
            out.a[2 * v + 1] = z.im * self.orientation[2 * v + 1];
        }
        out
    }
}
